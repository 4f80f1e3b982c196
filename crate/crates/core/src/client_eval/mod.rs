//! Receiver side: request submission, feedback rendering, and the corpus
//! evaluation harness.
//!
//! Report schema (`MetricsReport`, serialized as one pretty-printed JSON object):
//! counts and ratios at the top level, then `rows` with one entry per request
//! in corpus order. Transmitted bytes are answer-text bytes on the text path and
//! frame-payload plus explanation bytes on the frames path. Baselines count each
//! request's whole clip (`frame_count`, `compressed_size_bytes`), so a clip that
//! is requested twice counts twice.

use serde::Serialize;

use crate::dataset::{ClipStore, Label, RequestRecord};
use crate::orchestrator::Transmitter;
use crate::protocol::{Body, Message};
use crate::toolbox::ToolKind;

mod client;

pub use client::{
    frame_file_name, new_session_id, render_feedback, submit_request, Client, ClientError, Rendered,
    DEFAULT_CLIENT_TIMEOUT,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PathTaken {
    Text,
    Frames,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RequestRow {
    pub request_id: String,
    pub clip_id: String,
    pub label: Label,
    pub path: PathTaken,
    pub tool_used: Option<String>,
    pub plan_trace: Vec<String>,
    /// Tool of the first attempted plan.
    pub first_tool: Option<String>,
    pub expected_tool: Option<String>,
    pub frame_ids: Vec<u32>,
    pub frames_sent: u64,
    pub bytes_sent: u64,
    pub baseline_frames: u64,
    pub baseline_bytes: u64,
    /// Reflection outcome matches the label.
    pub accurate: bool,
    pub success: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub nbar: Option<usize>,
    pub total_y: usize,
    pub total_n: usize,
    pub correct_y: usize,
    pub correct_n: usize,
    pub accurate_ratio_y: f64,
    pub accurate_ratio_n: f64,
    pub accurate_ratio_yn: f64,
    pub success_rate: f64,
    /// Share of Y records with an expected tool whose first plan used it.
    pub planner_first_choice_accuracy: Option<f64>,
    pub baseline_frames: u64,
    pub baseline_bytes: u64,
    pub transmitted_frames: u64,
    pub transmitted_bytes: u64,
    pub frame_count_reduction_ratio: f64,
    pub data_size_reduction_ratio: f64,
    pub failures: Vec<String>,
    pub rows: Vec<RequestRow>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("request {request_id} names clip '{clip_id}', which is not loaded")]
    UnknownClip { request_id: String, clip_id: String },
    #[error("baseline is zero")]
    ZeroBaseline,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// `(Y, N, YN)` accurate ratios. An empty class scores 0.
pub fn accurate_ratios(correct_y: usize, total_y: usize, correct_n: usize, total_n: usize) -> (f64, f64, f64) {
    (
        ratio(correct_y, total_y),
        ratio(correct_n, total_n),
        ratio(correct_y + correct_n, total_y + total_n),
    )
}

/// `1 - transmitted / baseline`.
pub fn reduction_ratio(transmitted: u64, baseline: u64) -> Result<f64, EvalError> {
    if baseline == 0 {
        return Err(EvalError::ZeroBaseline);
    }
    Ok(1.0 - transmitted as f64 / baseline as f64)
}

pub fn evaluate_reflection_accuracy(rows: &[RequestRow]) -> (f64, f64, f64) {
    let count = |label: Label, correct: bool| {
        rows.iter()
            .filter(|r| r.label == label && (!correct || r.accurate))
            .count()
    };
    accurate_ratios(
        count(Label::Y, true),
        count(Label::Y, false),
        count(Label::N, true),
        count(Label::N, false),
    )
}

/// `(frame_ratio, size_ratio)` over the rows' own baselines.
pub fn evaluate_reduction(rows: &[RequestRow]) -> Result<(f64, f64), EvalError> {
    let bf: u64 = rows.iter().map(|r| r.baseline_frames).sum();
    let bb: u64 = rows.iter().map(|r| r.baseline_bytes).sum();
    let tf: u64 = rows.iter().map(|r| r.frames_sent).sum();
    let tb: u64 = rows.iter().map(|r| r.bytes_sent).sum();
    Ok((reduction_ratio(tf, bf)?, reduction_ratio(tb, bb)?))
}

/// Scores one reply against its record.
pub fn score_reply(record: &RequestRecord, reply: &Message, baseline_frames: u64, baseline_bytes: u64) -> RequestRow {
    let mut row = RequestRow {
        request_id: record.request_id.clone(),
        clip_id: record.clip_id.clone(),
        label: record.label,
        path: PathTaken::Error,
        tool_used: None,
        plan_trace: Vec::new(),
        first_tool: None,
        expected_tool: record.expected_tool().map(|t| t.name().to_string()),
        frame_ids: Vec::new(),
        frames_sent: 0,
        bytes_sent: 0,
        baseline_frames,
        baseline_bytes,
        accurate: false,
        success: false,
        error: None,
    };
    match &reply.body {
        Body::FeedbackText {
            answer,
            plan_trace,
            tool_used,
        } => {
            row.path = PathTaken::Text;
            row.tool_used = Some(tool_used.clone());
            row.plan_trace = plan_trace.clone();
            row.bytes_sent = answer.len() as u64;
        }
        Body::FeedbackFrames {
            frame_ids,
            frames,
            explanation,
            plan_trace,
        } => {
            row.path = PathTaken::Frames;
            row.plan_trace = plan_trace.clone();
            row.frame_ids = frame_ids.clone();
            row.frames_sent = frames.len() as u64;
            row.bytes_sent = frames.iter().map(|f| f.payload.len() as u64).sum::<u64>() + explanation.len() as u64;
        }
        Body::ErrorReply { code, detail } => row.error = Some(format!("{code}: {detail}")),
        Body::Request { .. } => row.error = Some("unexpected REQUEST reply".into()),
    }
    row.first_tool = row.plan_trace.first().and_then(|p| {
        let middle = p.split(['|', '∣']).nth(1)?;
        ToolKind::from_name(middle).map(|t| t.name().to_string())
    });
    row.accurate = match record.label {
        Label::Y => row.path == PathTaken::Text,
        Label::N => row.path == PathTaken::Frames,
    };
    row.success = match record.label {
        Label::Y => row.path == PathTaken::Text,
        Label::N => {
            row.path == PathTaken::Frames
                && !row.frame_ids.is_empty()
                && record
                    .relevant_span
                    .is_none_or(|[a, b]| row.frame_ids.iter().any(|id| (a..=b).contains(id)))
        }
    };
    row
}

/// Runs every record through `ask` and assembles the report. Failed requests
/// are listed and the run continues.
pub fn run_corpus_with<F>(
    records: &[RequestRecord],
    clips: &ClipStore,
    nbar: Option<usize>,
    mut ask: F,
) -> Result<MetricsReport, EvalError>
where
    F: FnMut(&RequestRecord) -> Result<Message, String>,
{
    if records.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    let mut rows = Vec::with_capacity(records.len());
    let mut failures = Vec::new();
    for rec in records {
        let clip = clips.get(&rec.clip_id).ok_or_else(|| EvalError::UnknownClip {
            request_id: rec.request_id.clone(),
            clip_id: rec.clip_id.clone(),
        })?;
        let reply = match ask(rec) {
            Ok(m) => m,
            Err(e) => Message::error(&rec.request_id, "CLIENT", e),
        };
        let row = score_reply(rec, &reply, clip.frame_count as u64, clip.compressed_size_bytes);
        if let Some(e) = &row.error {
            failures.push(format!("{}: {e}", rec.request_id));
        }
        rows.push(row);
    }
    assemble(rows, failures, nbar)
}

fn assemble(rows: Vec<RequestRow>, failures: Vec<String>, nbar: Option<usize>) -> Result<MetricsReport, EvalError> {
    let total_y = rows.iter().filter(|r| r.label == Label::Y).count();
    let total_n = rows.len() - total_y;
    let correct_y = rows.iter().filter(|r| r.label == Label::Y && r.accurate).count();
    let correct_n = rows.iter().filter(|r| r.label == Label::N && r.accurate).count();
    let (ry, rn, ryn) = accurate_ratios(correct_y, total_y, correct_n, total_n);
    let (fr, sr) = evaluate_reduction(&rows)?;
    let with_expected: Vec<&RequestRow> = rows
        .iter()
        .filter(|r| r.label == Label::Y && r.expected_tool.is_some())
        .collect();
    let planner = (!with_expected.is_empty()).then(|| {
        ratio(
            with_expected.iter().filter(|r| r.first_tool == r.expected_tool).count(),
            with_expected.len(),
        )
    });
    Ok(MetricsReport {
        nbar,
        total_y,
        total_n,
        correct_y,
        correct_n,
        accurate_ratio_y: ry,
        accurate_ratio_n: rn,
        accurate_ratio_yn: ryn,
        success_rate: ratio(rows.iter().filter(|r| r.success).count(), rows.len()),
        planner_first_choice_accuracy: planner,
        baseline_frames: rows.iter().map(|r| r.baseline_frames).sum(),
        baseline_bytes: rows.iter().map(|r| r.baseline_bytes).sum(),
        transmitted_frames: rows.iter().map(|r| r.frames_sent).sum(),
        transmitted_bytes: rows.iter().map(|r| r.bytes_sent).sum(),
        frame_count_reduction_ratio: fr,
        data_size_reduction_ratio: sr,
        failures,
        rows,
    })
}

/// In-process run against an embedded transmitter.
pub fn run_corpus(records: &[RequestRecord], transmitter: &Transmitter) -> Result<MetricsReport, EvalError> {
    run_corpus_with(records, transmitter.clips(), Some(transmitter.config().nbar), |rec| {
        Ok(transmitter.handle_message(&Message::request(&rec.request_id, &rec.clip_id, &rec.text)))
    })
}

/// Run against a transmitter listening at `endpoint`; `clips` supplies baselines.
pub fn run_corpus_remote(
    records: &[RequestRecord],
    clips: &ClipStore,
    endpoint: &str,
) -> Result<MetricsReport, EvalError> {
    let mut client: Option<Client> = None;
    run_corpus_with(records, clips, None, |rec| {
        if client.is_none() {
            client = Some(Client::connect(endpoint, DEFAULT_CLIENT_TIMEOUT).map_err(|e| e.to_string())?);
        }
        let c = client.as_mut().expect("connected above");
        let msg = Message::request(&rec.request_id, &rec.clip_id, &rec.text);
        c.send(&msg).map_err(|e| {
            client = None;
            e.to_string()
        })
    })
}

pub fn report_json(report: &MetricsReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serialization is infallible");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_arithmetic() {
        let (y, n, yn) = accurate_ratios(280, 300, 310, 400);
        assert!((y - 280.0 / 300.0).abs() < 1e-12);
        assert!((n - 0.775).abs() < 1e-12);
        assert!((yn - 590.0 / 700.0).abs() < 1e-12);
        assert_eq!(accurate_ratios(0, 0, 0, 0), (0.0, 0.0, 0.0));
    }

    #[test]
    fn reduction_arithmetic() {
        assert!((reduction_ratio(82, 450).unwrap() - (1.0 - 82.0 / 450.0)).abs() < 1e-12);
        assert_eq!(reduction_ratio(0, 450).unwrap(), 1.0);
        assert_eq!(reduction_ratio(1, 0), Err(EvalError::ZeroBaseline));
    }

    #[test]
    fn empty_corpus_errors() {
        let r = run_corpus_with(&[], &ClipStore::new(), None, |_| unreachable!());
        assert_eq!(r.unwrap_err(), EvalError::EmptyCorpus);
    }
}
