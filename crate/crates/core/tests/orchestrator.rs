mod common;

use std::collections::BTreeSet;

use semcom_core::dataset::{generate_synthetic_clip, ClipStore, ScenarioSpec};
use semcom_core::llm_backend::{Backend, StubBackend};
use semcom_core::orchestrator::{Phase, StageBackends, Transmitter, TransmitterConfig};
use semcom_core::protocol::Body;
use semcom_core::toolbox::ToolKind;

use common::*;

fn transmitter(store: ClipStore, nbar: usize, backends: StageBackends) -> Transmitter {
    let config = TransmitterConfig {
        nbar,
        backends,
        ..TransmitterConfig::default()
    };
    Transmitter::new(store, config).unwrap()
}

#[test]
fn text_path_history() {
    let t = transmitter(fixture_store(), 3, StageBackends::default());
    let out = t.handle_request("s", "c02", "Is there a traffic jam in the video?");
    let st = out.state.unwrap();
    assert_eq!(
        st.history,
        [Phase::Planning, Phase::Reflecting, Phase::Executing, Phase::Done]
    );
    assert!(st.excluded.is_empty());
    let Body::FeedbackText { answer, plan_trace, .. } = out.reply.body else {
        panic!("text path expected");
    };
    assert_eq!(plan_trace, ["Video Sampler | Vehicle Density Estimation | Analysis"]);
    assert!(answer.starts_with("I can fulfill your request."), "{answer}");
    assert!(answer.contains("so there is a traffic jam"), "{answer}");
}

#[test]
fn unparsable_plans_advance_without_exclusion() {
    let backends = StageBackends {
        planning: Backend::stub(StubBackend::repeating("I would look at the video first.")),
        ..StageBackends::default()
    };
    let t = transmitter(fixture_store(), 3, backends);
    let out = t.handle_request("s", "c01", "Is there a traffic jam in the video?");
    let st = out.state.unwrap();
    assert_eq!(st.n, 4);
    assert!(st.attempted.is_empty());
    assert!(st.excluded.is_empty());
    assert!(matches!(out.reply.body, Body::FeedbackFrames { .. }));
}

#[test]
fn reflection_backend_failure_counts_as_no() {
    let backends = StageBackends {
        reflection: Backend::stub(StubBackend::failing("unavailable")),
        ..StageBackends::default()
    };
    let t = transmitter(fixture_store(), 2, backends);
    let out = t.handle_request("s", "c02", "Is there a traffic jam in the video?");
    let st = out.state.unwrap();
    assert_eq!(st.attempted_tools.len(), 2);
    assert_eq!(st.attempted_tools[0], ToolKind::VehicleDensityEstimation);
    assert_eq!(st.excluded.len(), 2);
}

#[test]
fn execution_failure_excludes_the_tool_and_moves_on() {
    // a single-frame clip: motion needs two frames, so the YES plan fails to run
    let clip = generate_synthetic_clip(
        3,
        &ScenarioSpec {
            vehicles: 2,
            ..ScenarioSpec::new("one", 1)
        },
    )
    .unwrap();
    let store = ClipStore::from_iter([clip]);
    let t = transmitter(store, 3, StageBackends::default());
    let out = t.handle_request("s", "one", "Are the vehicles moving?");
    let st = out.state.unwrap();
    assert_eq!(st.attempted_tools[0], ToolKind::VehicleMotionDetection);
    assert!(st.excluded.contains(&ToolKind::VehicleMotionDetection));
    assert!(st.history.contains(&Phase::Executing));
    assert_eq!(st.history.last(), Some(&Phase::Done));
}

#[test]
fn always_no_tries_every_tool_once() {
    let backends = StageBackends {
        reflection: Backend::stub(StubBackend::repeating("No.")),
        ..StageBackends::default()
    };
    let t = transmitter(fixture_store(), 8, backends);
    let out = t.handle_request("s", "c03", "How many motorcyclists wearing helmet in the whole video?");
    let st = out.state.unwrap();
    let distinct: BTreeSet<ToolKind> = st.attempted_tools.iter().copied().collect();
    assert_eq!(distinct.len(), 8);
    assert_eq!(distinct, ToolKind::ALL.into_iter().collect());
    let Body::FeedbackFrames {
        plan_trace, frame_ids, ..
    } = out.reply.body
    else {
        panic!("frames path expected");
    };
    assert_eq!(plan_trace.len(), 8);
    assert!(frame_ids.len() <= 5);
}

#[test]
fn frames_stay_within_cap_and_gap() {
    let t = transmitter(fixture_store(), 3, StageBackends::default());
    for clip in ["c01", "c02", "c03", "c04", "c05"] {
        let out = t.handle_request("s", clip, "What is the driver of the red car wearing?");
        let Body::FeedbackFrames { frame_ids, frames, .. } = out.reply.body else {
            panic!("{clip}: frames path expected");
        };
        assert!(!frame_ids.is_empty() && frame_ids.len() <= 5);
        assert!(frame_ids.windows(2).all(|w| w[1] - w[0] >= 30), "{clip}: {frame_ids:?}");
        let store = fixture_store();
        let c = store.get(clip).unwrap();
        for f in &frames {
            assert_eq!(f.payload.len() as u64, c.frames[f.frame_id as usize].size_bytes);
        }
    }
}
