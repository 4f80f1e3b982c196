//! Shared helpers for the integration tests: fixture loading, random inputs,
//! and brute-force oracles written against the raw annotations.
#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use semcom_core::dataset::{
    generate_synthetic_clip, load_request_corpus, AnnotatedClip, ClipStore, FrameSpan, RequestRecord, ScenarioSpec,
};
use semcom_core::protocol::{Body, FramePayload, Message};
use semcom_core::toolbox::vocab;

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn fixture_store() -> ClipStore {
    ClipStore::load_dir(fixtures_dir()).expect("bundled fixtures load")
}

pub fn fixture_corpus() -> Vec<RequestRecord> {
    load_request_corpus(fixtures_dir().join("corpus.jsonl")).expect("bundled corpus loads")
}

// ---------------------------------------------------------------------------
// Random inputs

fn random_text(rng: &mut ChaCha8Rng, max_len: usize) -> String {
    const ALPHABET: &[char] = &[
        'a', 'b', 'z', 'Q', '0', '9', ' ', '|', '"', '\\', '/', '\n', '\t', '{', '}', ':', ',', 'é', 'ß', '中', '🚗',
        '\u{7f}', '\u{1}',
    ];
    let len = rng.random_range(0..=max_len);
    (0..len)
        .map(|_| ALPHABET[rng.random_range(0..ALPHABET.len())])
        .collect()
}

fn non_blank(rng: &mut ChaCha8Rng, max_len: usize) -> String {
    let mut s = random_text(rng, max_len);
    s.push('x');
    s
}

pub fn random_message(rng: &mut ChaCha8Rng) -> Message {
    let session_id = non_blank(rng, 24);
    let body = match rng.random_range(0..4) {
        0 => Body::Request {
            clip_id: random_text(rng, 8),
            text: non_blank(rng, 120),
        },
        1 => Body::FeedbackText {
            answer: random_text(rng, 300),
            plan_trace: (0..rng.random_range(0..4)).map(|_| random_text(rng, 40)).collect(),
            tool_used: random_text(rng, 30),
        },
        2 => {
            let mut id = 0u32;
            let mut frame_ids = Vec::new();
            for _ in 0..rng.random_range(0..6) {
                id += rng.random_range(1..100);
                frame_ids.push(id);
            }
            let frames = frame_ids
                .iter()
                .map(|&frame_id| FramePayload {
                    frame_id,
                    payload: (0..rng.random_range(0..200)).map(|_| rng.random()).collect(),
                })
                .collect();
            Body::FeedbackFrames {
                frame_ids,
                frames,
                explanation: random_text(rng, 200),
                plan_trace: (0..rng.random_range(0..4)).map(|_| random_text(rng, 40)).collect(),
            }
        }
        _ => Body::ErrorReply {
            code: random_text(rng, 12),
            detail: random_text(rng, 80),
        },
    };
    Message { session_id, body }
}

fn random_span(rng: &mut ChaCha8Rng, frame_count: u32) -> FrameSpan {
    let a = rng.random_range(0..frame_count);
    let b = rng.random_range(a..frame_count);
    FrameSpan::new(a, b)
}

/// A random but valid scenario, generated from `seed`.
pub fn random_clip(seed: u64) -> AnnotatedClip {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let frame_count = rng.random_range(40..=300);
    let stopped_vehicle = rng.random_bool(0.5).then(|| random_span(&mut rng, frame_count));
    let motorcycles = (0..rng.random_range(0..3))
        .map(|_| random_span(&mut rng, frame_count))
        .collect();
    let pedestrians = (0..rng.random_range(0..3))
        .map(|_| random_span(&mut rng, frame_count))
        .collect();
    let signs = (0..rng.random_range(0..3))
        .map(|_| vocab::TRAFFIC_SIGNS[rng.random_range(0..vocab::TRAFFIC_SIGNS.len())].to_string())
        .collect();
    let spec = ScenarioSpec {
        fps: [25.0, 30.0][rng.random_range(0..2)],
        vehicles: rng.random_range(0..15),
        stopped_vehicle,
        congestion: if rng.random_bool(0.3) {
            rng.random_range(1..14)
        } else {
            0
        },
        motorcycles,
        pedestrians,
        signs,
        lane_count: rng.random_range(1..6),
        road_area_px: rng.random_range(150_000.0..900_000.0),
        ..ScenarioSpec::new(format!("r{seed:02}"), frame_count)
    };
    generate_synthetic_clip(seed, &spec).expect("random scenario is valid")
}

/// Sorted, distinct random frame ids of the clip.
pub fn random_frame_set(rng: &mut ChaCha8Rng, clip: &AnnotatedClip, min: usize, max: usize) -> Vec<u32> {
    let n = rng.random_range(min..=max).min(clip.frame_count as usize);
    let mut ids: Vec<u32> = (0..n).map(|_| rng.random_range(0..clip.frame_count)).collect();
    ids.sort_unstable();
    ids.dedup();
    ids
}

// ---------------------------------------------------------------------------
// Oracles. Each walks the raw annotations directly.

fn area_of(clip: &AnnotatedClip, frame: u32, track: u32) -> Option<f64> {
    clip.frames[frame as usize]
        .vehicles
        .iter()
        .find(|v| v.track_id == track)
        .map(|v| v.bbox.w * v.bbox.h)
}

fn state(a: Option<f64>, b: Option<f64>, threshold: f64) -> &'static str {
    match (a, b) {
        (Some(a), Some(b)) => {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            if hi / lo > threshold {
                "moving"
            } else {
                "not moving"
            }
        }
        _ => "moving",
    }
}

fn dedup_sorted(frames: &[u32]) -> Vec<u32> {
    let mut f = frames.to_vec();
    f.sort_unstable();
    f.dedup();
    f
}

/// `(track_id, state)` for every track seen in the frames, by track id.
pub fn oracle_track_motion(clip: &AnnotatedClip, frames: &[u32], threshold: f64) -> Vec<(u32, &'static str)> {
    let f = dedup_sorted(frames);
    let mut tracks: Vec<u32> = Vec::new();
    for &id in &f {
        for v in &clip.frames[id as usize].vehicles {
            if !tracks.contains(&v.track_id) {
                tracks.push(v.track_id);
            }
        }
    }
    tracks.sort_unstable();
    let (first, last) = (f[0], f[f.len() - 1]);
    tracks
        .into_iter()
        .map(|t| (t, state(area_of(clip, first, t), area_of(clip, last, t), threshold)))
        .collect()
}

/// Per selected frame: each vehicle's state against the next selected frame
/// (the previous one for the last frame).
pub fn oracle_frame_motion(
    clip: &AnnotatedClip,
    frames: &[u32],
    threshold: f64,
) -> Vec<(u32, Vec<(u32, &'static str)>)> {
    let f = dedup_sorted(frames);
    let mut out = Vec::new();
    for i in 0..f.len() {
        let other = if i + 1 < f.len() { f[i + 1] } else { f[i - 1] };
        let mut states: Vec<(u32, &'static str)> = clip.frames[f[i] as usize]
            .vehicles
            .iter()
            .map(|v| {
                (
                    v.track_id,
                    state(Some(v.bbox.w * v.bbox.h), area_of(clip, other, v.track_id), threshold),
                )
            })
            .collect();
        states.sort_unstable_by_key(|s| s.0);
        out.push((f[i], states));
    }
    out
}

pub fn oracle_flow(clip: &AnnotatedClip, frames: &[u32]) -> usize {
    let mut ids: Vec<u32> = dedup_sorted(frames)
        .iter()
        .flat_map(|&id| clip.frames[id as usize].vehicles.iter().map(|v| v.track_id))
        .collect();
    ids.sort_unstable();
    ids.dedup();
    ids.len()
}

pub fn oracle_density(clip: &AnnotatedClip, frame: u32) -> f64 {
    let mut covered = 0.0;
    for v in &clip.frames[frame as usize].vehicles {
        covered += v.bbox.w * v.bbox.h;
    }
    let share = if covered > clip.road_area_px {
        1.0
    } else {
        covered / clip.road_area_px
    };
    (share * 100.0).round() / 100.0
}

/// Sign names by descending confidence; ties keep annotation order.
pub fn oracle_signs(clip: &AnnotatedClip, frame: u32) -> Vec<String> {
    let signs = &clip.frames[frame as usize].signs;
    let mut idx: Vec<usize> = (0..signs.len()).collect();
    // insertion sort keeps ties stable without relying on the library sort
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && signs[idx[j]].confidence > signs[idx[j - 1]].confidence {
            idx.swap(j, j - 1);
            j -= 1;
        }
    }
    idx.into_iter().map(|i| signs[i].name.clone()).collect()
}
