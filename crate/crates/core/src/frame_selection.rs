//! Fallback when no plan fits: pick the raw frames most relevant to the request.

use std::collections::BTreeSet;
use std::sync::LazyLock;

use regex::Regex;
use serde::Serialize;

use crate::dataset::AnnotatedClip;
use crate::llm_backend::Backend;
use crate::planning::sample_frames;
use crate::rules::{fill_template, Rules};
use crate::text;
use crate::toolbox::{execute, ExecutionResult, Findings, Registry, ToolKind, ToolParams};

pub const DEFAULT_MAX_FRAMES: usize = 5;
pub const DEFAULT_MIN_GAP_SECONDS: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KeyTermMatch {
    Match { key_term: String, tool: ToolKind },
    NoOption,
}

impl KeyTermMatch {
    pub fn tool(&self) -> Option<ToolKind> {
        match self {
            KeyTermMatch::Match { tool, .. } => Some(*tool),
            KeyTermMatch::NoOption => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelectionLimits {
    pub max_frames: usize,
    pub min_gap_seconds: f64,
}

impl Default for SelectionLimits {
    fn default() -> Self {
        Self {
            max_frames: DEFAULT_MAX_FRAMES,
            min_gap_seconds: DEFAULT_MIN_GAP_SECONDS,
        }
    }
}

impl SelectionLimits {
    pub fn min_gap_frames(&self, fps: f64) -> u32 {
        (fps * self.min_gap_seconds).round().max(0.0) as u32
    }
}

/// `(tool, label, label tokens)` in toolbox order, longest label first within a tool.
fn label_table(registry: &Registry) -> Vec<(ToolKind, String, Vec<String>)> {
    let mut out = Vec::new();
    for d in registry {
        let mut labels: Vec<(ToolKind, String, Vec<String>)> = d
            .labels
            .iter()
            .map(|l| (d.kind(), l.to_lowercase(), text::tokenize(l)))
            .filter(|(_, _, t)| !t.is_empty())
            .collect();
        labels.sort_by_key(|(_, _, t)| std::cmp::Reverse(t.len()));
        out.extend(labels);
    }
    out
}

/// First label found in reading order; at one position, lower tool index wins.
pub fn extract_key_term_deterministic(request: &str, registry: &Registry) -> KeyTermMatch {
    let tokens = text::tokenize(request);
    let table = label_table(registry);
    for pos in 0..tokens.len() {
        if let Some((tool, label, _)) = table.iter().find(|(_, _, t)| text::matches_at(&tokens, pos, t)) {
            return KeyTermMatch::Match {
                key_term: label.clone(),
                tool: *tool,
            };
        }
    }
    KeyTermMatch::NoOption
}

pub fn render_key_term_prompt(request: &str, registry: &Registry, rules: &Rules) -> String {
    let label_sets = registry
        .iter()
        .filter(|d| !d.labels.is_empty())
        .map(|d| format!("{}: {}", d.name, d.labels.join(", ")))
        .collect::<Vec<_>>()
        .join("\n");
    fill_template(
        &rules.prompts.key_term,
        &[("request", request), ("label_sets", &label_sets)],
    )
}

/// Maps a model reply onto a known label; anything else is `NoOption`.
pub fn parse_key_term(reply: &str, registry: &Registry) -> KeyTermMatch {
    let cleaned = reply
        .lines()
        .find(|l| !l.trim().is_empty())
        .unwrap_or("")
        .trim()
        .trim_matches(|c: char| matches!(c, '"' | '\'' | '`' | '.' | '“' | '”'));
    let tokens = text::tokenize(cleaned);
    if tokens == ["no", "option"] {
        return KeyTermMatch::NoOption;
    }
    let found = label_table(registry)
        .into_iter()
        .find(|(_, _, t)| t.len() == tokens.len() && text::matches_at(&tokens, 0, t));
    match found {
        Some((tool, key_term, _)) => KeyTermMatch::Match { key_term, tool },
        None => {
            tracing::warn!(reply = cleaned, "key term is not a known label; treating as no option");
            KeyTermMatch::NoOption
        }
    }
}

pub fn extract_key_term(request: &str, registry: &Registry, rules: &Rules, backend: &Backend) -> KeyTermMatch {
    if backend.is_deterministic() {
        return extract_key_term_deterministic(request, registry);
    }
    match backend.complete(&render_key_term_prompt(request, registry, rules)) {
        Ok(reply) => parse_key_term(&reply, registry),
        Err(e) => {
            tracing::warn!(error = %e, "key-term backend failed; treating as no option");
            KeyTermMatch::NoOption
        }
    }
}

/// Greedy temporal de-duplication over ascending ids, then a cap keeping the earliest.
pub fn dedup_and_cap(candidates: &[u32], min_gap: u32, max_frames: usize) -> Vec<u32> {
    let sorted: BTreeSet<u32> = candidates.iter().copied().collect();
    let mut kept: Vec<u32> = Vec::new();
    for id in sorted {
        if kept.len() == max_frames {
            break;
        }
        if kept.last().is_none_or(|&last| id - last >= min_gap) {
            kept.push(id);
        }
    }
    kept
}

pub fn select_relevant_frames(
    key: &KeyTermMatch,
    result: &ExecutionResult,
    min_gap: u32,
    max_frames: usize,
) -> Vec<u32> {
    match key {
        KeyTermMatch::Match { key_term, tool } if *tool == result.tool => {
            dedup_and_cap(&result.matched_frame_ids(key_term), min_gap, max_frames)
        }
        _ => Vec::new(),
    }
}

fn describe(f: &Findings) -> String {
    match f {
        Findings::Objects(v) | Findings::Signs(v) => v
            .iter()
            .map(|d| format!("({:.2}, '{}')", d.confidence, d.label))
            .collect::<Vec<_>>()
            .join(", "),
        Findings::Vehicles(v) => v
            .iter()
            .map(|x| format!("{} {}", x.color, x.vtype))
            .collect::<Vec<_>>()
            .join(", "),
        Findings::Plates(p) => p.iter().map(|c| c.concat()).collect::<Vec<_>>().join(", "),
        Findings::Motion(v) => v
            .iter()
            .map(|m| format!("vehicle {} {}", m.track_id, m.state.as_str()))
            .collect::<Vec<_>>()
            .join(", "),
        Findings::Lanes(n) => format!("{n} lanes"),
        Findings::Tracks(t) => format!("{} vehicles", t.len()),
        Findings::Density(d) => format!("density {d:.2}"),
    }
}

pub fn render_frame_selection_prompt(request: &str, result: &ExecutionResult, rules: &Rules) -> String {
    let results = result
        .per_frame
        .iter()
        .map(|(id, f)| format!("{id}: {}", describe(f)))
        .collect::<Vec<_>>()
        .join("\n");
    fill_template(
        &rules.prompts.frame_selection,
        &[
            ("request", request),
            ("tool", result.tool.name()),
            ("results", &results),
        ],
    )
}

static FRAME_ID: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\d+").unwrap());

/// Frame ids named in a model reply, restricted to frames the tool saw.
pub fn parse_frame_ids(reply: &str, result: &ExecutionResult) -> Vec<u32> {
    FRAME_ID
        .find_iter(reply)
        .filter_map(|m| m.as_str().parse::<u32>().ok())
        .filter(|id| result.per_frame.contains_key(id))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameSelection {
    pub frame_ids: Vec<u32>,
    pub explanation: String,
    pub key: KeyTermMatch,
    pub sampled: Vec<u32>,
    /// No tool evidence was usable, so a spread-out sample was sent.
    pub degraded: bool,
}

/// Evenly spaced pick of at most `max_frames` from the de-duplicated sample.
fn spread_sample(sampled: &[u32], min_gap: u32, max_frames: usize) -> Vec<u32> {
    let spaced = dedup_and_cap(sampled, min_gap, usize::MAX);
    let n = spaced.len();
    let k = max_frames.min(n);
    if k == 0 {
        return Vec::new();
    }
    (0..k).map(|i| spaced[i * n / k]).collect()
}

fn id_list(ids: &[u32]) -> String {
    ids.iter().map(u32::to_string).collect::<Vec<_>>().join(", ")
}

pub fn frame_selection_pipeline(
    request: &str,
    clip: &AnnotatedClip,
    registry: &Registry,
    rules: &Rules,
    backend: &Backend,
    limits: &SelectionLimits,
    params: &ToolParams,
) -> FrameSelection {
    let sampled = sample_frames(request, clip.meta()).frames;
    let min_gap = limits.min_gap_frames(clip.fps);
    let max_frames = limits.max_frames.max(1);
    let key = extract_key_term(request, registry, rules, backend);

    let mut evidence: Option<(ExecutionResult, Vec<u32>)> = None;
    if let KeyTermMatch::Match { tool, key_term } = &key {
        match execute(*tool, clip, &sampled, params) {
            Ok(result) => {
                let mut ids = select_relevant_frames(&key, &result, min_gap, max_frames);
                if !backend.is_deterministic() {
                    match backend.complete(&render_frame_selection_prompt(request, &result, rules)) {
                        Ok(reply) => {
                            let picked = dedup_and_cap(&parse_frame_ids(&reply, &result), min_gap, max_frames);
                            if !picked.is_empty() {
                                ids = picked;
                            }
                        }
                        Err(e) => tracing::warn!(error = %e, "frame-selection backend failed; using label matches"),
                    }
                }
                if ids.is_empty() {
                    tracing::info!(key_term, "no sampled frame matches the key term");
                }
                evidence = Some((result, ids));
            }
            Err(e) => tracing::warn!(error = %e, tool = %tool, "key-term tool failed"),
        }
    }

    match (&key, evidence) {
        (KeyTermMatch::Match { key_term, tool }, Some((_, ids))) if !ids.is_empty() => {
            let explanation = format!(
                "I cannot fulfill your request with the tools available, so I am sending the {} most relevant video frames instead ({}). They were chosen with {tool} for the key term \"{key_term}\".",
                ids.len(),
                id_list(&ids)
            );
            FrameSelection {
                frame_ids: ids,
                explanation,
                key,
                sampled,
                degraded: false,
            }
        }
        _ => {
            let ids = spread_sample(&sampled, min_gap, max_frames);
            let why = match &key {
                KeyTermMatch::Match { key_term, .. } => format!("no sampled frame shows \"{key_term}\""),
                KeyTermMatch::NoOption => "no tool label matches the request".to_string(),
            };
            let explanation = format!(
                "I cannot fulfill your request, and {why}. I am sending {} evenly spaced video frames ({}) as the most relevant video frames available.",
                ids.len(),
                id_list(&ids)
            );
            FrameSelection {
                frame_ids: ids,
                explanation,
                key,
                sampled,
                degraded: true,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toolbox::registry;

    #[test]
    fn key_terms() {
        let r = registry();
        assert_eq!(
            extract_key_term_deterministic("Did an accident happen in the video?", &r),
            KeyTermMatch::Match {
                key_term: "accident".into(),
                tool: ToolKind::VehicleMotionDetection
            }
        );
        assert_eq!(
            extract_key_term_deterministic("How many motorcyclists wearing helmet in the whole video?", &r),
            KeyTermMatch::Match {
                key_term: "motorcycle".into(),
                tool: ToolKind::ObjectDetection
            }
        );
        assert_eq!(
            extract_key_term_deterministic("What is the average rainfall?", &r),
            KeyTermMatch::NoOption
        );
        assert_eq!(
            extract_key_term_deterministic("is there a hot dog stand", &r),
            KeyTermMatch::Match {
                key_term: "hot dog".into(),
                tool: ToolKind::ObjectDetection
            }
        );
    }

    #[test]
    fn reply_parsing() {
        let r = registry();
        assert_eq!(parse_key_term("No option", &r), KeyTermMatch::NoOption);
        assert_eq!(
            parse_key_term("\"Collisions.\"", &r).tool(),
            Some(ToolKind::VehicleMotionDetection)
        );
        assert_eq!(
            parse_key_term("Traffic Sign", &r).tool(),
            Some(ToolKind::TrafficSignDetection)
        );
        assert_eq!(parse_key_term("a red car somewhere", &r), KeyTermMatch::NoOption);
    }

    #[test]
    fn dedup_oracle() {
        assert_eq!(dedup_and_cap(&[10, 11, 12, 300], 30, 5), vec![10, 300]);
        assert_eq!(dedup_and_cap(&[], 30, 5), Vec::<u32>::new());
        assert_eq!(dedup_and_cap(&[0, 30, 60, 90], 30, 2), vec![0, 30]);
        assert_eq!(dedup_and_cap(&[5, 5, 5], 0, 5), vec![5]);
    }

    #[test]
    fn spread_is_even_and_capped() {
        let sampled: Vec<u32> = (0..450).step_by(15).collect();
        assert_eq!(spread_sample(&sampled, 30, 5), vec![0, 90, 180, 270, 360]);
        assert_eq!(spread_sample(&[0], 30, 5), vec![0]);
    }
}
