//! The transmitter: plan, reflect, and either answer in text or fall back
//! to sending selected frames.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::Serialize;

use crate::dataset::{frame_payload, AnnotatedClip, ClipStore};
use crate::frame_selection::{frame_selection_pipeline, FrameSelection, SelectionLimits};
use crate::llm_backend::Backend;
use crate::planning::{analyze, generate_plan, sample_frames, PlanError, PlannerContext, DEFAULT_JAM_THRESHOLD};
use crate::protocol::{codes, Body, FramePayload, Message};
use crate::reflection::{reflect, Verdict};
use crate::rules::Rules;
use crate::toolbox::{execute, registry, Registry, ToolKind, ToolParams};

mod server;

pub use server::{serve, ServerOptions, DEFAULT_MAX_REQUEST_BYTES};

pub const DEFAULT_NBAR: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Phase {
    Planning,
    Reflecting,
    Executing,
    FrameSelection,
    Done,
}

impl Phase {
    fn may_enter(self, next: Phase) -> bool {
        use Phase::*;
        matches!(
            (self, next),
            (Planning, Reflecting | Planning | FrameSelection)
                | (Reflecting, Executing | Planning | FrameSelection)
                | (Executing, Done | Planning | FrameSelection)
                | (FrameSelection, Done)
        )
    }
}

/// Backend used by each stage. Stages can be mixed, e.g. a scripted
/// reflection stage on top of the rule-based planner.
#[derive(Debug, Clone, Default)]
pub struct StageBackends {
    pub planning: Backend,
    pub reflection: Backend,
    pub frame_selection: Backend,
    pub analysis: Backend,
}

impl StageBackends {
    pub fn uniform(backend: Backend) -> Self {
        Self {
            planning: backend.clone(),
            reflection: backend.clone(),
            frame_selection: backend.clone(),
            analysis: backend,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TransmitterConfig {
    /// Iteration bound on plan/reflect rounds.
    pub nbar: usize,
    pub limits: SelectionLimits,
    pub tool_params: ToolParams,
    pub jam_threshold: f64,
    pub backends: StageBackends,
}

impl Default for TransmitterConfig {
    fn default() -> Self {
        Self {
            nbar: DEFAULT_NBAR,
            limits: SelectionLimits::default(),
            tool_params: ToolParams::default(),
            jam_threshold: DEFAULT_JAM_THRESHOLD,
            backends: StageBackends::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid transmitter configuration: {0}")]
pub struct ConfigError(pub String);

/// Per-session state machine.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionState {
    pub session_id: String,
    pub request: String,
    pub clip_id: String,
    /// Current iteration, starting at 1.
    pub n: usize,
    pub nbar: usize,
    pub excluded: BTreeSet<ToolKind>,
    /// Raw plan strings in attempt order.
    pub attempted: Vec<String>,
    /// Tools of `attempted`, same order.
    pub attempted_tools: Vec<ToolKind>,
    pub phase: Phase,
    pub history: Vec<Phase>,
}

impl SessionState {
    fn new(session_id: &str, clip_id: &str, request: &str, nbar: usize) -> Self {
        Self {
            session_id: session_id.to_string(),
            request: request.to_string(),
            clip_id: clip_id.to_string(),
            n: 1,
            nbar,
            excluded: BTreeSet::new(),
            attempted: Vec::new(),
            attempted_tools: Vec::new(),
            phase: Phase::Planning,
            history: vec![Phase::Planning],
        }
    }

    fn enter(&mut self, next: Phase) {
        assert!(
            self.phase.may_enter(next),
            "illegal phase transition {:?} -> {:?}",
            self.phase,
            next
        );
        tracing::info!(session = %self.session_id, n = self.n, from = ?self.phase, to = ?next, "phase");
        self.phase = next;
        self.history.push(next);
    }
}

/// What a session produced, with its final state for auditing.
#[derive(Debug, Clone)]
pub struct SessionOutcome {
    pub reply: Message,
    pub state: Option<SessionState>,
    pub selection: Option<FrameSelection>,
}

/// Shared, read-only transmitter context.
#[derive(Debug)]
pub struct Transmitter {
    registry: Registry,
    rules: Rules,
    clips: ClipStore,
    config: TransmitterConfig,
}

impl Transmitter {
    pub fn new(clips: ClipStore, config: TransmitterConfig) -> Result<Self, ConfigError> {
        let registry = registry();
        let rules = Rules::bundled(&registry);
        Self::with_rules(clips, config, registry, rules)
    }

    pub fn with_rules(
        clips: ClipStore,
        config: TransmitterConfig,
        registry: Registry,
        rules: Rules,
    ) -> Result<Self, ConfigError> {
        if config.nbar == 0 || config.nbar > registry.len() {
            return Err(ConfigError(format!(
                "nbar must lie in 1..={}, got {}",
                registry.len(),
                config.nbar
            )));
        }
        if config.limits.max_frames == 0 {
            return Err(ConfigError("max_frames must be positive".into()));
        }
        if !(config.limits.min_gap_seconds >= 0.0) {
            return Err(ConfigError("min_gap_seconds must be non-negative".into()));
        }
        if !(config.tool_params.motion_threshold > 1.0) {
            return Err(ConfigError("motion threshold must exceed 1".into()));
        }
        Ok(Self {
            registry,
            rules,
            clips,
            config,
        })
    }

    pub fn config(&self) -> &TransmitterConfig {
        &self.config
    }

    pub fn clips(&self) -> &ClipStore {
        &self.clips
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    /// Answers one inbound message with exactly one reply.
    pub fn handle_message(&self, msg: &Message) -> Message {
        match &msg.body {
            Body::Request { clip_id, text } => self.handle_request(&msg.session_id, clip_id, text).reply,
            _ => Message::error(
                &msg.session_id,
                codes::UNEXPECTED_MESSAGE,
                format!("transmitter accepts only REQUEST, got {}", msg.type_tag()),
            ),
        }
    }

    pub fn handle_request(&self, session_id: &str, clip_id: &str, text: &str) -> SessionOutcome {
        let Some(clip) = self.clips.get(clip_id) else {
            return SessionOutcome {
                reply: Message::error(session_id, codes::NO_CLIP, format!("unknown clip '{clip_id}'")),
                state: None,
                selection: None,
            };
        };
        let mut st = SessionState::new(session_id, clip_id, text, self.config.nbar);
        if let Some(reply) = self.plan_loop(&mut st, &clip) {
            return SessionOutcome {
                reply,
                state: Some(st),
                selection: None,
            };
        }
        st.enter(Phase::FrameSelection);
        let b = &self.config.backends;
        let sel = frame_selection_pipeline(
            text,
            &clip,
            &self.registry,
            &self.rules,
            &b.frame_selection,
            &self.config.limits,
            &self.config.tool_params,
        );
        let frames = sel
            .frame_ids
            .iter()
            .map(|&id| FramePayload {
                frame_id: id,
                payload: frame_payload(&clip.clip_id, id, clip.frames[id as usize].size_bytes),
            })
            .collect();
        st.enter(Phase::Done);
        let reply = Message {
            session_id: session_id.to_string(),
            body: Body::FeedbackFrames {
                frame_ids: sel.frame_ids.clone(),
                frames,
                explanation: sel.explanation.clone(),
                plan_trace: st.attempted.clone(),
            },
        };
        SessionOutcome {
            reply,
            state: Some(st),
            selection: Some(sel),
        }
    }

    /// Runs plan/reflect rounds; returns the text reply if some plan succeeds.
    fn plan_loop(&self, st: &mut SessionState, clip: &AnnotatedClip) -> Option<Message> {
        let b = &self.config.backends;
        while st.n <= st.nbar {
            if st.phase != Phase::Planning {
                st.enter(Phase::Planning);
            }
            let ctx = PlannerContext {
                request: st.request.clone(),
                meta: clip.meta(),
                excluded: st.excluded.clone(),
            };
            let mut plan = match generate_plan(&ctx, &self.registry, &self.rules, &b.planning) {
                Ok(p) => p,
                Err(PlanError::Exhausted) => return None,
                Err(e) => {
                    tracing::warn!(session = %st.session_id, n = st.n, error = %e, "planning failed; next iteration");
                    st.n += 1;
                    continue;
                }
            };
            st.attempted.push(plan.raw.clone());
            st.attempted_tools.push(plan.tool);

            st.enter(Phase::Reflecting);
            let verdict = match reflect(&st.request, &plan, &self.registry, &self.rules, &b.reflection) {
                Ok(r) => r.verdict,
                Err(e) => {
                    tracing::warn!(session = %st.session_id, error = %e, "reflection failed; counting as NO");
                    Verdict::No
                }
            };
            if verdict == Verdict::Yes {
                st.enter(Phase::Executing);
                let frames = sample_frames(&st.request, clip.meta()).frames;
                match execute(plan.tool, clip, &frames, &self.config.tool_params) {
                    Ok(result) => {
                        plan.sampled_frames = Some(frames);
                        let answer = analyze(
                            &st.request,
                            &plan,
                            &result,
                            &self.rules,
                            &b.analysis,
                            self.config.jam_threshold,
                        );
                        st.enter(Phase::Done);
                        return Some(Message {
                            session_id: st.session_id.clone(),
                            body: Body::FeedbackText {
                                answer,
                                plan_trace: st.attempted.clone(),
                                tool_used: plan.tool.name().to_string(),
                            },
                        });
                    }
                    Err(e) => {
                        tracing::warn!(session = %st.session_id, tool = %plan.tool, error = %e, "execution failed; counting as NO");
                    }
                }
            }
            st.excluded.insert(plan.tool);
            st.n += 1;
        }
        None
    }
}

pub type SharedTransmitter = Arc<Transmitter>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transitions_follow_the_loop() {
        assert!(Phase::Planning.may_enter(Phase::Reflecting));
        assert!(Phase::Reflecting.may_enter(Phase::Planning));
        assert!(!Phase::Planning.may_enter(Phase::Executing));
        assert!(!Phase::Done.may_enter(Phase::Planning));
        assert!(!Phase::FrameSelection.may_enter(Phase::Executing));
    }

    #[test]
    fn nbar_bounds() {
        let bad = TransmitterConfig {
            nbar: 9,
            ..TransmitterConfig::default()
        };
        assert!(Transmitter::new(ClipStore::new(), bad).is_err());
        let zero = TransmitterConfig {
            nbar: 0,
            ..TransmitterConfig::default()
        };
        assert!(Transmitter::new(ClipStore::new(), zero).is_err());
    }

    #[test]
    fn unknown_clip_is_no_clip() {
        let t = Transmitter::new(ClipStore::new(), TransmitterConfig::default()).unwrap();
        let reply = t.handle_message(&Message::request("s", "zz", "hello"));
        assert!(matches!(reply.body, Body::ErrorReply { ref code, .. } if code == codes::NO_CLIP));
    }
}
