//! Annotated surveillance clips and the labeled request corpus.
//!
//! A clip carries per-frame ground-truth annotations in place of pixels.
//! The annotation-backed tools read these directly, so every tool output is
//! reproducible from the clip document alone.

mod synthetic;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::toolbox::{vocab, ToolKind};

pub use synthetic::{bundled_scenarios, generate_synthetic_clip, FrameSpan, ScenarioSpec, SpecError};

/// Axis-aligned box `(x, y, w, h)` in pixels; serialized as a 4-element array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }
}

impl From<[f64; 4]> for BBox {
    fn from([x, y, w, h]: [f64; 4]) -> Self {
        Self { x, y, w, h }
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        [b.x, b.y, b.w, b.h]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectAnnotation {
    pub label: String,
    pub confidence: f64,
    pub bbox: BBox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleAnnotation {
    pub track_id: u32,
    pub color: String,
    pub vtype: String,
    pub bbox: BBox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignAnnotation {
    pub confidence: f64,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameAnnotation {
    pub frame_id: u32,
    pub size_bytes: u64,
    pub objects: Vec<ObjectAnnotation>,
    pub vehicles: Vec<VehicleAnnotation>,
    pub plates: Vec<Vec<String>>,
    pub signs: Vec<SignAnnotation>,
    pub lane_count: u32,
}

impl FrameAnnotation {
    pub fn empty(frame_id: u32, size_bytes: u64) -> Self {
        Self {
            frame_id,
            size_bytes,
            objects: Vec::new(),
            vehicles: Vec::new(),
            plates: Vec::new(),
            signs: Vec::new(),
            lane_count: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedClip {
    pub clip_id: String,
    pub fps: f64,
    pub frame_count: u32,
    pub compressed_size_bytes: u64,
    pub road_area_px: f64,
    pub frames: Vec<FrameAnnotation>,
}

/// Clip-level facts the planner needs without touching annotations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClipMeta {
    pub fps: f64,
    pub frame_count: u32,
}

impl AnnotatedClip {
    pub fn meta(&self) -> ClipMeta {
        ClipMeta {
            fps: self.fps,
            frame_count: self.frame_count,
        }
    }

    pub fn frame(&self, frame_id: u32) -> Option<&FrameAnnotation> {
        self.frames.get(frame_id as usize)
    }

    pub fn total_frame_bytes(&self) -> u64 {
        self.frames.iter().map(|f| f.size_bytes).sum()
    }

    /// Checks every invariant and returns all violations found.
    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        let mut v = Vec::new();
        let clip_level = |message: String| Violation {
            frame: None,
            kind: ViolationKind::Invariant,
            message,
        };
        if self.clip_id.trim().is_empty() {
            v.push(clip_level("clip_id is empty".into()));
        }
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            v.push(clip_level(format!("fps must be positive, got {}", self.fps)));
        }
        if self.frame_count == 0 {
            v.push(clip_level("frame_count must be positive".into()));
        }
        if self.compressed_size_bytes == 0 {
            v.push(clip_level("compressed_size_bytes must be positive".into()));
        }
        if !(self.road_area_px > 0.0 && self.road_area_px.is_finite()) {
            v.push(clip_level(format!(
                "road_area_px must be positive, got {}",
                self.road_area_px
            )));
        }
        if self.frames.len() != self.frame_count as usize {
            v.push(clip_level(format!(
                "frame_count is {} but {} frames are annotated",
                self.frame_count,
                self.frames.len()
            )));
        }
        let total = self.total_frame_bytes();
        if total < self.compressed_size_bytes {
            v.push(clip_level(format!(
                "frame sizes sum to {total} bytes, below compressed size {}",
                self.compressed_size_bytes
            )));
        }

        let mut track_identity: HashMap<u32, (&str, &str)> = HashMap::new();
        for (i, frame) in self.frames.iter().enumerate() {
            let mut at = |kind: ViolationKind, message: String| {
                v.push(Violation {
                    frame: Some(i),
                    kind,
                    message,
                })
            };
            if frame.frame_id as usize != i {
                at(
                    ViolationKind::Invariant,
                    format!("frame_id is {}, expected {i}", frame.frame_id),
                );
            }
            if frame.size_bytes == 0 {
                at(ViolationKind::Invariant, "size_bytes must be positive".into());
            }
            for o in &frame.objects {
                if !vocab::is_object_label(&o.label) {
                    at(
                        ViolationKind::UnknownLabel,
                        format!("unknown object label '{}'", o.label),
                    );
                }
                check_confidence(o.confidence, &mut at);
                check_bbox(&o.bbox, &mut at);
            }
            let mut seen_tracks = HashSet::new();
            for veh in &frame.vehicles {
                if !vocab::is_vehicle_type(&veh.vtype) {
                    at(
                        ViolationKind::UnknownLabel,
                        format!("unknown vehicle type '{}'", veh.vtype),
                    );
                }
                if !vocab::is_vehicle_color(&veh.color) {
                    at(
                        ViolationKind::UnknownLabel,
                        format!("unknown vehicle color '{}'", veh.color),
                    );
                }
                if !seen_tracks.insert(veh.track_id) {
                    at(
                        ViolationKind::Invariant,
                        format!("track {} appears twice in one frame", veh.track_id),
                    );
                }
                match track_identity.get(&veh.track_id) {
                    Some(&(color, vtype)) if color != veh.color || vtype != veh.vtype => at(
                        ViolationKind::Invariant,
                        format!(
                            "track {} changes identity from {color} {vtype} to {} {}",
                            veh.track_id, veh.color, veh.vtype
                        ),
                    ),
                    Some(_) => {}
                    None => {
                        track_identity.insert(veh.track_id, (&veh.color, &veh.vtype));
                    }
                }
                check_bbox(&veh.bbox, &mut at);
            }
            for plate in &frame.plates {
                if plate.is_empty() || plate.iter().any(|c| c.chars().count() != 1) {
                    at(
                        ViolationKind::Invariant,
                        format!("plate {plate:?} must be a non-empty list of single characters"),
                    );
                }
            }
            for s in &frame.signs {
                if !vocab::is_traffic_sign(&s.name) {
                    at(
                        ViolationKind::UnknownLabel,
                        format!("unknown traffic sign '{}'", s.name),
                    );
                }
                check_confidence(s.confidence, &mut at);
            }
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(v)
        }
    }
}

fn check_confidence(c: f64, at: &mut impl FnMut(ViolationKind, String)) {
    if !(0.0..=1.0).contains(&c) {
        at(ViolationKind::Invariant, format!("confidence {c} outside [0, 1]"));
    }
}

fn check_bbox(b: &BBox, at: &mut impl FnMut(ViolationKind, String)) {
    if !(b.w > 0.0 && b.h > 0.0) {
        at(
            ViolationKind::Invariant,
            format!("bbox {:?} must have positive width and height", <[f64; 4]>::from(*b)),
        );
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    Invariant,
    UnknownLabel,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Index into `frames`, or `None` for clip-level problems.
    pub frame: Option<usize>,
    pub kind: ViolationKind,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.frame {
            Some(i) => write!(f, "frame {i}: {}", self.message),
            None => write!(f, "clip: {}", self.message),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ClipError {
    #[error("cannot read clip {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// Structural problem, e.g. a missing field. `location` is a JSON path such as `frames[3].size_bytes`.
    #[error("malformed clip document at {location}: {message}")]
    Malformed { location: String, message: String },
    #[error("clip '{clip_id}' has {} violation(s): {}", .violations.len(), join_violations(.violations))]
    Invalid {
        clip_id: String,
        violations: Vec<Violation>,
    },
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Parses and validates a clip document.
pub fn parse_clip(json: &str) -> Result<AnnotatedClip, ClipError> {
    let de = &mut serde_json::Deserializer::from_str(json);
    let clip: AnnotatedClip = serde_path_to_error::deserialize(de).map_err(|e| ClipError::Malformed {
        location: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    clip.validate().map_err(|violations| ClipError::Invalid {
        clip_id: clip.clip_id.clone(),
        violations,
    })?;
    Ok(clip)
}

pub fn load_clip(path: impl AsRef<Path>) -> Result<AnnotatedClip, ClipError> {
    let path = path.as_ref();
    let json = std::fs::read_to_string(path).map_err(|source| ClipError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_clip(&json)
}

/// Compact JSON encoding of a clip; stable for a given value.
pub fn write_clip(clip: &AnnotatedClip) -> String {
    serde_json::to_string(clip).expect("clip serialization is infallible")
}

/// Deterministic stand-in bytes for one extracted frame.
pub fn frame_payload(clip_id: &str, frame_id: u32, size_bytes: u64) -> Vec<u8> {
    let mut hasher = Sha256::new();
    hasher.update(clip_id.as_bytes());
    hasher.update([0u8]);
    hasher.update(frame_id.to_be_bytes());
    hasher.update(size_bytes.to_be_bytes());
    let seed: [u8; 32] = hasher.finalize().into();
    let mut rng = ChaCha8Rng::from_seed(seed);
    let mut buf = vec![0u8; size_bytes as usize];
    rng.fill_bytes(&mut buf);
    buf
}

/// Read-only collection of clips keyed by id.
#[derive(Debug, Clone, Default)]
pub struct ClipStore {
    clips: BTreeMap<String, Arc<AnnotatedClip>>,
}

impl ClipStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, clip: AnnotatedClip) {
        self.clips.insert(clip.clip_id.clone(), Arc::new(clip));
    }

    pub fn get(&self, clip_id: &str) -> Option<Arc<AnnotatedClip>> {
        self.clips.get(clip_id).cloned()
    }

    pub fn len(&self) -> usize {
        self.clips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clips.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.clips.keys().map(String::as_str)
    }

    /// Loads every `*.json` clip document in `dir`.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, ClipError> {
        let dir = dir.as_ref();
        let entries = std::fs::read_dir(dir).map_err(|source| ClipError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let mut paths: Vec<PathBuf> = entries
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|e| e == "json"))
            .collect();
        paths.sort();
        let mut store = Self::new();
        for p in paths {
            store.insert(load_clip(&p)?);
        }
        Ok(store)
    }
}

impl FromIterator<AnnotatedClip> for ClipStore {
    fn from_iter<I: IntoIterator<Item = AnnotatedClip>>(iter: I) -> Self {
        let mut store = Self::new();
        for clip in iter {
            store.insert(clip);
        }
        store
    }
}

/// Ground truth for whether a request can be fulfilled by some plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "Y", alias = "Yes")]
    Y,
    #[serde(rename = "N", alias = "No")]
    N,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequestRecord {
    pub request_id: String,
    pub clip_id: String,
    pub text: String,
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_tool: Option<String>,
    /// Inclusive frame range known to hold the requested content.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relevant_span: Option<[u32; 2]>,
}

impl RequestRecord {
    pub fn expected_tool(&self) -> Option<ToolKind> {
        self.expected_tool.as_deref().and_then(ToolKind::from_name)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read corpus {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corpus line {line}: {message}")]
    Line { line: usize, message: String },
}

/// Parses a JSON-lines corpus. Blank lines are skipped; line numbers are 1-based.
pub fn parse_request_corpus(text: &str) -> Result<Vec<RequestRecord>, CorpusError> {
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let err = |message: String| CorpusError::Line { line, message };
        let rec: RequestRecord = serde_json::from_str(raw).map_err(|e| err(e.to_string()))?;
        if rec.text.trim().is_empty() {
            return Err(err("text is empty".into()));
        }
        if rec.request_id.is_empty() || rec.clip_id.is_empty() {
            return Err(err("request_id and clip_id must be non-empty".into()));
        }
        if let Some(name) = &rec.expected_tool {
            if ToolKind::from_name(name).is_none() {
                return Err(err(format!("unknown expected_tool '{name}'")));
            }
        }
        if let Some([a, b]) = rec.relevant_span {
            if a > b {
                return Err(err(format!("relevant_span [{a}, {b}] is reversed")));
            }
        }
        if !ids.insert(rec.request_id.clone()) {
            return Err(err(format!("duplicate request_id '{}'", rec.request_id)));
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn load_request_corpus(path: impl AsRef<Path>) -> Result<Vec<RequestRecord>, CorpusError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_request_corpus(&text)
}

pub fn write_request_corpus(records: &[RequestRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serialization is infallible"));
        out.push('\n');
    }
    out
}
