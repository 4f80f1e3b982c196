//! Three-step task planning: Video Sampler, one tool, Analysis.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::LazyLock;

use regex::Regex;
use serde::Serialize;

use crate::dataset::ClipMeta;
use crate::llm_backend::{Backend, LlmError};
use crate::rules::{fill_template, Rules};
use crate::text;
use crate::toolbox::{vocab, ExecutionResult, Findings, MotionState, Registry, ToolKind};

pub const VIDEO_SAMPLER: &str = "Video Sampler";
pub const ANALYSIS: &str = "Analysis";
pub const DEFAULT_SAMPLES_PER_SECOND: f64 = 2.0;
pub const DEFAULT_JAM_THRESHOLD: f64 = 0.5;

const FORMAT_REMINDER: &str = "\n\nYour previous reply could not be parsed. Reply with exactly one line of the form \"Video Sampler | <tool name> | Analysis\", where <tool name> is one tool from the toolbox above.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TaskPlan {
    pub tool: ToolKind,
    /// Pipe-delimited plan string.
    pub raw: String,
    pub sampled_frames: Option<Vec<u32>>,
}

impl TaskPlan {
    pub fn new(tool: ToolKind) -> Self {
        Self {
            tool,
            raw: format!("{VIDEO_SAMPLER} | {} | {ANALYSIS}", tool.name()),
            sampled_frames: None,
        }
    }

    pub fn steps(&self) -> [&str; 3] {
        [VIDEO_SAMPLER, self.tool.name(), ANALYSIS]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerContext {
    pub request: String,
    pub meta: ClipMeta,
    pub excluded: BTreeSet<ToolKind>,
}

impl PlannerContext {
    pub fn new(request: impl Into<String>, meta: ClipMeta) -> Self {
        Self {
            request: request.into(),
            meta,
            excluded: BTreeSet::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlanError {
    #[error("every tool in the toolbox has already been tried")]
    Exhausted,
    #[error("a plan has exactly 3 steps, got {0}")]
    StepCount(usize),
    #[error("step {position} must be '{expected}', got '{found}'")]
    WrongStep {
        position: usize,
        expected: &'static str,
        found: String,
    },
    #[error("unknown tool '{0}'")]
    UnknownTool(String),
    #[error("plan names excluded tool {0}")]
    ExcludedTool(ToolKind),
    #[error("no parsable plan after re-asking; last reply: {reply:?} ({reason})")]
    Unparseable { reply: String, reason: String },
    #[error(transparent)]
    Backend(#[from] LlmError),
}

// ---------------------------------------------------------------------------
// Video Sampler

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Sampling {
    pub frames: Vec<u32>,
    /// Inclusive frame window implied by a temporal cue.
    pub window: Option<(u32, u32)>,
    /// A cue pointed outside the clip, so the full clip was sampled instead.
    pub window_fallback: bool,
}

static NUM: &str =
    r"(\d+(?:\.\d+)?|one|two|three|four|five|six|seven|eight|nine|ten|eleven|twelve|fifteen|twenty|thirty)";

static FIRST_LAST: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(&format!(r"\b(first|last|final)\s+{NUM}\s+sec(?:ond)?s?\b")).unwrap());
static FIRST_LAST_ONE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b(first|last|final)\s+sec(?:ond)?\b").unwrap());
static AT_SECOND: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(&format!(
        r"\bat\s+(?:the\s+)?(?:second\s+{NUM}|{NUM}(?:st|nd|rd|th)?\s+sec(?:ond)?s?)\b"
    ))
    .unwrap()
});
static BETWEEN: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(&format!(
        r"\b(?:between|from)\s+(?:second\s+)?{NUM}\s*(?:s|sec(?:ond)?s?)?\s+(?:and|to)\s+(?:second\s+)?{NUM}\s*(?:s|sec(?:ond)?s?)\b"
    ))
    .unwrap()
});

fn number(word: &str) -> Option<f64> {
    let n = match word {
        "one" => 1.0,
        "two" => 2.0,
        "three" => 3.0,
        "four" => 4.0,
        "five" => 5.0,
        "six" => 6.0,
        "seven" => 7.0,
        "eight" => 8.0,
        "nine" => 9.0,
        "ten" => 10.0,
        "eleven" => 11.0,
        "twelve" => 12.0,
        "fifteen" => 15.0,
        "twenty" => 20.0,
        "thirty" => 30.0,
        w => w.parse().ok()?,
    };
    Some(n)
}

/// Window in seconds `[start, end)` named by a temporal cue, if any.
fn temporal_window(request: &str, duration: f64) -> Option<(f64, f64)> {
    let lower = request.to_lowercase();
    if let Some(c) = FIRST_LAST.captures(&lower) {
        let k = number(&c[2])?;
        return Some(if &c[1] == "first" {
            (0.0, k)
        } else {
            (duration - k, duration)
        });
    }
    if let Some(c) = FIRST_LAST_ONE.captures(&lower) {
        return Some(if &c[1] == "first" {
            (0.0, 1.0)
        } else {
            (duration - 1.0, duration)
        });
    }
    if let Some(c) = BETWEEN.captures(&lower) {
        let a = number(&c[1])?;
        let b = number(&c[2])?;
        return Some((a.min(b), a.max(b)));
    }
    if let Some(c) = AT_SECOND.captures(&lower) {
        let s = number(c.get(1).or_else(|| c.get(2))?.as_str())?;
        return Some((s, s + 1.0));
    }
    None
}

pub fn sample_frames(request: &str, meta: ClipMeta) -> Sampling {
    sample_frames_at(request, meta, DEFAULT_SAMPLES_PER_SECOND)
}

/// Samples at `samples_per_second` inside the window named by the request,
/// or over the whole clip when there is none.
pub fn sample_frames_at(request: &str, meta: ClipMeta, samples_per_second: f64) -> Sampling {
    let fc = meta.frame_count.max(1);
    let duration = fc as f64 / meta.fps;
    let mut window = None;
    let mut window_fallback = false;
    let (start, end) = match temporal_window(request, duration) {
        Some((a, b)) if a >= 0.0 && b <= duration + 1e-9 && b > a => {
            let s = (a * meta.fps).floor() as u32;
            let e = (((b * meta.fps).ceil() as u32).saturating_sub(1)).min(fc - 1);
            window = Some((s, e.max(s)));
            (s, e.max(s))
        }
        Some(_) => {
            tracing::warn!(request, "temporal cue outside clip duration; sampling the whole clip");
            window_fallback = true;
            (0, fc - 1)
        }
        None => (0, fc - 1),
    };
    let stride = if samples_per_second > 0.0 {
        ((meta.fps / samples_per_second).floor() as u32).max(1)
    } else {
        1
    };
    Sampling {
        frames: (start..=end).step_by(stride as usize).collect(),
        window,
        window_fallback,
    }
}

// ---------------------------------------------------------------------------
// Tool selection

pub fn render_planning_prompt(ctx: &PlannerContext, registry: &Registry, rules: &Rules) -> Result<String, PlanError> {
    if registry.available(&ctx.excluded).next().is_none() {
        return Err(PlanError::Exhausted);
    }
    let fps = format!("{}", ctx.meta.fps);
    let frames = ctx.meta.frame_count.to_string();
    let toolbox = registry.render(&ctx.excluded);
    Ok(fill_template(
        &rules.prompts.planning,
        &[
            ("request", &ctx.request),
            ("fps", &fps),
            ("frame_count", &frames),
            ("toolbox", &toolbox),
        ],
    ))
}

/// Parses one pipe-delimited plan line. `∣` is accepted as a delimiter too.
pub fn parse_plan(text: &str, registry: &Registry) -> Result<TaskPlan, PlanError> {
    let line = text
        .trim()
        .trim_matches(|c: char| matches!(c, '"' | '\'' | '`' | '.' | '“' | '”'))
        .trim();
    let steps: Vec<&str> = line.split(['|', '∣']).map(str::trim).collect();
    if steps.len() != 3 {
        return Err(PlanError::StepCount(steps.len()));
    }
    if !steps[0].eq_ignore_ascii_case(VIDEO_SAMPLER) {
        return Err(PlanError::WrongStep {
            position: 1,
            expected: VIDEO_SAMPLER,
            found: steps[0].to_string(),
        });
    }
    if !steps[2].eq_ignore_ascii_case(ANALYSIS) {
        return Err(PlanError::WrongStep {
            position: 3,
            expected: ANALYSIS,
            found: steps[2].to_string(),
        });
    }
    let tool = ToolKind::from_name(steps[1])
        .filter(|t| registry.contains(*t))
        .ok_or_else(|| PlanError::UnknownTool(steps[1].to_string()))?;
    Ok(TaskPlan::new(tool))
}

/// Picks the plan line out of a chatty completion: the first line with a delimiter.
fn plan_line(reply: &str) -> &str {
    reply
        .lines()
        .find(|l| l.contains('|') || l.contains('∣'))
        .unwrap_or(reply)
}

/// Keyword score of every available tool, in toolbox order.
pub fn tool_scores(ctx: &PlannerContext, registry: &Registry, rules: &Rules) -> Vec<(ToolKind, usize)> {
    let tokens = text::tokenize(&ctx.request);
    registry
        .available(&ctx.excluded)
        .map(|d| (d.kind(), rules.keyword_score(d.kind(), &tokens)))
        .collect()
}

/// Highest keyword score wins; ties and all-zero go to the lowest tool index.
pub fn select_tool_deterministic(
    ctx: &PlannerContext,
    registry: &Registry,
    rules: &Rules,
) -> Result<ToolKind, PlanError> {
    let mut best: Option<(ToolKind, usize)> = None;
    for (tool, score) in tool_scores(ctx, registry, rules) {
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((tool, score));
        }
    }
    best.map(|(t, _)| t).ok_or(PlanError::Exhausted)
}

pub fn generate_plan(
    ctx: &PlannerContext,
    registry: &Registry,
    rules: &Rules,
    backend: &Backend,
) -> Result<TaskPlan, PlanError> {
    if backend.is_deterministic() {
        return select_tool_deterministic(ctx, registry, rules).map(TaskPlan::new);
    }
    let prompt = render_planning_prompt(ctx, registry, rules)?;
    let first = backend.complete(&prompt)?;
    let plan = match parse_plan(plan_line(&first), registry) {
        Ok(p) => p,
        Err(e) => {
            tracing::debug!(error = %e, "plan reply unparsable; re-asking");
            let second = backend.complete(&format!("{prompt}{FORMAT_REMINDER}"))?;
            parse_plan(plan_line(&second), registry).map_err(|e| PlanError::Unparseable {
                reply: second.clone(),
                reason: e.to_string(),
            })?
        }
    };
    if ctx.excluded.contains(&plan.tool) {
        return Err(PlanError::ExcludedTool(plan.tool));
    }
    Ok(plan)
}

// ---------------------------------------------------------------------------
// Analysis

fn fmt2(v: f64) -> String {
    format!("{v:.2}")
}

fn list(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

fn frames_phrase(n: usize) -> String {
    if n == 1 {
        "1 sampled frame".into()
    } else {
        format!("{n} sampled frames")
    }
}

fn analyze_density(result: &ExecutionResult, jam_threshold: f64) -> String {
    let d = result.densities();
    let n = d.len();
    let max = d.iter().map(|(_, v)| *v).fold(0.0, f64::max);
    let mean = if n == 0 {
        0.0
    } else {
        d.iter().map(|(_, v)| v).sum::<f64>() / n as f64
    };
    let zero = d.iter().filter(|(_, v)| *v == 0.0).count();
    let mut s = if zero * 2 > n {
        format!(
            "The vehicle density is 0.00 in {zero} of {} and peaks at {}.",
            frames_phrase(n),
            fmt2(max)
        )
    } else {
        format!(
            "The vehicle density averages {} over {} and peaks at {}.",
            fmt2(mean),
            frames_phrase(n),
            fmt2(max)
        )
    };
    if max >= jam_threshold {
        s.push_str(&format!(
            " Density reaches the congestion level of {}, so there is a traffic jam.",
            fmt2(jam_threshold)
        ));
    } else {
        s.push_str(&format!(
            " It stays below the congestion level of {}, so there is no traffic jam.",
            fmt2(jam_threshold)
        ));
    }
    s
}

fn analyze_objects(request: &str, result: &ExecutionResult) -> String {
    let n = result.per_frame.len();
    let mut frames_by_label: BTreeMap<String, Vec<u32>> = BTreeMap::new();
    for (&id, f) in &result.per_frame {
        if let Findings::Objects(dets) = f {
            let labels: BTreeSet<String> = dets.iter().map(|d| d.label.to_lowercase()).collect();
            for l in labels {
                frames_by_label.entry(l).or_default().push(id);
            }
        }
    }
    let tokens = text::tokenize(request);
    let asked: Vec<String> = vocab::OBJECT_LABELS
        .iter()
        .filter(|l| text::contains_phrase(&tokens, &text::tokenize(l)))
        .map(|l| l.to_lowercase())
        .collect();
    if !asked.is_empty() {
        let parts: Vec<String> = asked
            .iter()
            .map(|l| match frames_by_label.get(l) {
                Some(ids) => format!(
                    "{} {l} appears in {} of {} (first at frame {})",
                    article(l),
                    ids.len(),
                    frames_phrase(n),
                    ids[0]
                ),
                None => format!("no {l} is detected in the {}", frames_phrase(n)),
            })
            .collect();
        let mut s = list(&parts);
        s[..1].make_ascii_uppercase();
        return s + ".";
    }
    if frames_by_label.is_empty() {
        return format!("No objects are detected in the {}.", frames_phrase(n));
    }
    let parts: Vec<String> = frames_by_label
        .iter()
        .map(|(l, ids)| format!("{l} ({} frames)", ids.len()))
        .collect();
    format!("Detected objects over {}: {}.", frames_phrase(n), list(&parts))
}

fn article(word: &str) -> &'static str {
    if word.starts_with(['a', 'e', 'i', 'o', 'u', 'A', 'E', 'I', 'O', 'U']) {
        "an"
    } else {
        "a"
    }
}

fn analyze_vehicles(result: &ExecutionResult) -> String {
    let mut tracks: BTreeMap<u32, (String, String)> = BTreeMap::new();
    for f in result.per_frame.values() {
        if let Findings::Vehicles(v) = f {
            for x in v {
                tracks.entry(x.track_id).or_insert((x.color.clone(), x.vtype.clone()));
            }
        }
    }
    if tracks.is_empty() {
        return format!(
            "No vehicles are detected in the {}.",
            frames_phrase(result.per_frame.len())
        );
    }
    let parts: Vec<String> = tracks
        .values()
        .map(|(c, t)| format!("{} {c} {t}", article(c)))
        .collect();
    format!("{} distinct vehicles are detected: {}.", tracks.len(), list(&parts))
}

fn analyze_plates(result: &ExecutionResult) -> String {
    let mut plates = BTreeSet::new();
    for f in result.per_frame.values() {
        if let Findings::Plates(p) = f {
            plates.extend(p.iter().map(|chars| chars.concat()));
        }
    }
    if plates.is_empty() {
        return format!(
            "No legible license plates are detected in the {}.",
            frames_phrase(result.per_frame.len())
        );
    }
    let plates: Vec<String> = plates.into_iter().collect();
    format!("The license plates read in the video are {}.", list(&plates))
}

fn analyze_signs(result: &ExecutionResult) -> String {
    let mut names = BTreeSet::new();
    for f in result.per_frame.values() {
        if let Findings::Signs(s) = f {
            names.extend(s.iter().map(|d| d.label.clone()));
        }
    }
    if names.is_empty() {
        return format!(
            "No traffic signs are detected in the {}.",
            frames_phrase(result.per_frame.len())
        );
    }
    let names: Vec<String> = names.into_iter().collect();
    format!("The traffic signs detected are: {}.", list(&names))
}

fn analyze_motion(result: &ExecutionResult) -> String {
    let t = &result.track_motion;
    if t.is_empty() {
        return "No vehicles are detected in the selected frames.".into();
    }
    let still = t.iter().filter(|m| m.state == MotionState::NotMoving).count();
    let moving = t.len() - still;
    let verdict = if still == 0 {
        "all vehicles are moving"
    } else if moving == 0 {
        "no vehicle is moving"
    } else {
        "some vehicles are stationary"
    };
    let mut s = format!(
        "Comparing the first and last sampled frames, {moving} of {} vehicles are moving and {still} are not moving; {verdict}.",
        t.len()
    );
    let standing: Vec<u32> = result
        .per_frame
        .iter()
        .filter(|(_, f)| matches!(f, Findings::Motion(v) if v.iter().any(|m| m.state == MotionState::NotMoving)))
        .map(|(&id, _)| id)
        .collect();
    if let (Some(first), Some(last)) = (standing.first(), standing.last()) {
        s.push_str(&format!(
            " Between consecutive sampled frames, a vehicle stands still in {} (frames {first} to {last}).",
            frames_phrase(standing.len())
        ));
    }
    s
}

fn analyze_lanes(result: &ExecutionResult) -> String {
    let counts: BTreeSet<u32> = result
        .per_frame
        .values()
        .filter_map(|f| match f {
            Findings::Lanes(n) => Some(*n),
            _ => None,
        })
        .filter(|n| *n > 0)
        .collect();
    match counts.len() {
        0 => "No road lanes are detected in the sampled frames.".into(),
        1 => format!("The road has {} lanes.", counts.first().unwrap()),
        _ => {
            let c: Vec<String> = counts.iter().map(u32::to_string).collect();
            format!("The detected lane count varies between frames: {}.", list(&c))
        }
    }
}

fn analyze_flow(result: &ExecutionResult) -> String {
    let k = result.vehicle_total.unwrap_or(0);
    if k == 0 {
        return "No vehicles pass through the scene in the sampled frames.".into();
    }
    format!("A total of {k} different vehicles appear in the sampled frames.")
}

/// Templated answer from execution results, led by the fulfilment sentence
/// and followed by the raw tool output.
pub fn analyze_deterministic(request: &str, result: &ExecutionResult, jam_threshold: f64) -> String {
    let body = match result.tool {
        ToolKind::VehicleDensityEstimation => analyze_density(result, jam_threshold),
        ToolKind::ObjectDetection => analyze_objects(request, result),
        ToolKind::VehicleDetection => analyze_vehicles(result),
        ToolKind::LicensePlateDetection => analyze_plates(result),
        ToolKind::TrafficSignDetection => analyze_signs(result),
        ToolKind::VehicleMotionDetection => analyze_motion(result),
        ToolKind::LaneNumberDetection => analyze_lanes(result),
        ToolKind::TrafficFlowEstimation => analyze_flow(result),
    };
    format!(
        "I can fulfill your request. {body}\n{} output:\n{}",
        result.tool.name(),
        result.summary
    )
}

pub fn render_analysis_prompt(request: &str, plan: &TaskPlan, result: &ExecutionResult, rules: &Rules) -> String {
    fill_template(
        &rules.prompts.analysis,
        &[
            ("request", request),
            ("plan", &plan.raw),
            ("tool", plan.tool.name()),
            ("results", &result.summary),
        ],
    )
}

/// Answers from the execution results. A remote failure or empty reply falls
/// back to the templated answer.
pub fn analyze(
    request: &str,
    plan: &TaskPlan,
    result: &ExecutionResult,
    rules: &Rules,
    backend: &Backend,
    jam_threshold: f64,
) -> String {
    if !backend.is_deterministic() {
        match backend.complete(&render_analysis_prompt(request, plan, result, rules)) {
            Ok(answer) if !answer.trim().is_empty() => return answer.trim().to_string(),
            Ok(_) => tracing::warn!("empty analysis reply; using template"),
            Err(e) => tracing::warn!(error = %e, "analysis backend failed; using template"),
        }
    }
    analyze_deterministic(request, result, jam_threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toolbox::registry;

    fn meta(frames: u32) -> ClipMeta {
        ClipMeta {
            fps: 30.0,
            frame_count: frames,
        }
    }

    #[test]
    fn whole_video_stride() {
        let s = sample_frames("Is anything odd in the whole video?", meta(450));
        assert_eq!(s.frames, (0..450).step_by(15).collect::<Vec<_>>());
        assert_eq!(s.frames.len(), 30);
        assert_eq!(s.window, None);
    }

    #[test]
    fn temporal_windows() {
        let s = sample_frames("What happens in the first 5 seconds?", meta(450));
        assert_eq!(s.window, Some((0, 149)));
        assert!(s.frames.iter().all(|&f| f <= 149));
        let s = sample_frames("in the last two seconds", meta(450));
        assert_eq!(s.window, Some((390, 449)));
        assert_eq!(s.frames, vec![390, 405, 420, 435]);
        let s = sample_frames("what is at second 3?", meta(450));
        assert_eq!(s.window, Some((90, 119)));
        let s = sample_frames("between 2 and 4 seconds", meta(450));
        assert_eq!(s.window, Some((60, 119)));
    }

    #[test]
    fn window_outside_clip_falls_back() {
        let s = sample_frames("in the first 60 seconds", meta(450));
        assert!(s.window_fallback);
        assert_eq!(s.frames.len(), 30);
    }

    #[test]
    fn single_frame_clip() {
        assert_eq!(sample_frames("anything", meta(1)).frames, vec![0]);
    }

    #[test]
    fn parse_accepts_and_rejects() {
        let r = registry();
        let p = parse_plan("Video Sampler | Vehicle Density Estimation | Analysis", &r).unwrap();
        assert_eq!(p.tool, ToolKind::VehicleDensityEstimation);
        assert_eq!(parse_plan(&p.raw, &r).unwrap(), p);
        assert_eq!(parse_plan("Video Sampler | Analysis", &r), Err(PlanError::StepCount(2)));
        assert_eq!(
            parse_plan("Video Sampler | Teleportation | Analysis", &r),
            Err(PlanError::UnknownTool("Teleportation".into()))
        );
        assert!(parse_plan("\"Video Sampler ∣ Lane Number Detection ∣ Analysis\"", &r).is_ok());
        assert!(matches!(
            parse_plan("Analysis | Lane Number Detection | Video Sampler", &r),
            Err(PlanError::WrongStep { position: 1, .. })
        ));
    }

    #[test]
    fn deterministic_selection() {
        let r = registry();
        let rules = Rules::bundled(&r);
        let mut ctx = PlannerContext::new("Is there a traffic jam in the video?", meta(450));
        assert_eq!(
            select_tool_deterministic(&ctx, &r, &rules).unwrap(),
            ToolKind::VehicleDensityEstimation
        );
        ctx.excluded.insert(ToolKind::VehicleDensityEstimation);
        let next = select_tool_deterministic(&ctx, &r, &rules).unwrap();
        assert_ne!(next, ToolKind::VehicleDensityEstimation);
        assert_eq!(next, select_tool_deterministic(&ctx, &r, &rules).unwrap());
        let empty = PlannerContext::new("", meta(450));
        assert_eq!(
            select_tool_deterministic(&empty, &r, &rules).unwrap(),
            ToolKind::ObjectDetection
        );
        let mut all = PlannerContext::new("x", meta(1));
        all.excluded.extend(ToolKind::ALL);
        assert_eq!(select_tool_deterministic(&all, &r, &rules), Err(PlanError::Exhausted));
        assert_eq!(render_planning_prompt(&all, &r, &rules), Err(PlanError::Exhausted));
    }

    #[test]
    fn prompt_contents() {
        let r = registry();
        let rules = Rules::bundled(&r);
        let mut ctx = PlannerContext::new("Is there a traffic jam in the video?", meta(450));
        let p = render_planning_prompt(&ctx, &r, &rules).unwrap();
        assert!(p.contains("Video Sampler | Vehicle Density Estimation | Analysis"));
        assert!(p.contains("only use one tool from the toolbox"));
        assert!(p.contains("Is there a traffic jam in the video?"));
        for t in ToolKind::ALL {
            assert!(p.contains(&format!("Tool {}: {}", t.index(), t.name())));
        }
        ctx.excluded.insert(ToolKind::VehicleDensityEstimation);
        let p = render_planning_prompt(&ctx, &r, &rules).unwrap();
        assert!(!p.contains("Tool 8: Vehicle Density Estimation"));
    }
}
