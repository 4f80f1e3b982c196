//! Annotation-backed tool executors. Each one is a pure function of the
//! clip, the selected frame ids, and its parameters.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::Serialize;

use super::ToolKind;
use crate::dataset::{AnnotatedClip, FrameAnnotation};

/// Default area-ratio threshold for declaring a vehicle as moving.
pub const DEFAULT_MOTION_THRESHOLD: f64 = 1.15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToolParams {
    pub motion_threshold: f64,
}

impl Default for ToolParams {
    fn default() -> Self {
        Self {
            motion_threshold: DEFAULT_MOTION_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExecError {
    #[error("frame {0} is not part of the clip")]
    UnknownFrame(u32),
    #[error("no frames selected")]
    NoFrames,
    #[error("{tool} needs at least {needed} frames, got {got}")]
    TooFewFrames { tool: ToolKind, needed: usize, got: usize },
    #[error("motion threshold must exceed 1, got {0}")]
    InvalidThreshold(f64),
    #[error("{0} is not an annotation lookup tool")]
    NotALookupTool(ToolKind),
}

/// A `(confidence, name)` detection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Detection {
    pub confidence: f64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VehicleFinding {
    pub track_id: u32,
    pub color: String,
    pub vtype: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MotionState {
    Moving,
    NotMoving,
}

impl MotionState {
    pub fn as_str(self) -> &'static str {
        match self {
            MotionState::Moving => "moving",
            MotionState::NotMoving => "not moving",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TrackMotion {
    pub track_id: u32,
    pub state: MotionState,
}

/// Tool-specific findings for one frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Findings {
    Objects(Vec<Detection>),
    Vehicles(Vec<VehicleFinding>),
    Plates(Vec<Vec<String>>),
    Signs(Vec<Detection>),
    /// Motion of each vehicle in this frame relative to its neighbouring selected frame.
    Motion(Vec<TrackMotion>),
    Lanes(u32),
    Tracks(Vec<u32>),
    Density(f64),
}

impl Findings {
    pub fn is_empty(&self) -> bool {
        match self {
            Findings::Objects(v) | Findings::Signs(v) => v.is_empty(),
            Findings::Vehicles(v) => v.is_empty(),
            Findings::Plates(v) => v.is_empty(),
            Findings::Motion(v) => v.is_empty(),
            Findings::Tracks(v) => v.is_empty(),
            Findings::Lanes(n) => *n == 0,
            Findings::Density(d) => *d == 0.0,
        }
    }

    fn contains_label(&self, label: &str) -> bool {
        let label = label.to_lowercase();
        match self {
            Findings::Objects(v) => v.iter().any(|d| d.label.to_lowercase() == label),
            Findings::Vehicles(v) => v.iter().any(|f| f.vtype.to_lowercase() == label),
            Findings::Signs(v) => {
                !v.is_empty() && (label == "traffic sign" || v.iter().any(|d| d.label.to_lowercase() == label))
            }
            Findings::Motion(v) => match label.as_str() {
                "accident" | "collision" | "not moving" => v.iter().any(|m| m.state == MotionState::NotMoving),
                "moving" => v.iter().any(|m| m.state == MotionState::Moving),
                _ => false,
            },
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExecutionResult {
    pub tool: ToolKind,
    pub per_frame: BTreeMap<u32, Findings>,
    /// Output rendered in the tool's documented format.
    pub summary: String,
    /// Track-level motion states (Vehicle Motion Detection only), ordered by track id.
    pub track_motion: Vec<TrackMotion>,
    /// Distinct vehicle count (Traffic Flow Estimation only).
    pub vehicle_total: Option<usize>,
}

impl ExecutionResult {
    fn new(tool: ToolKind, per_frame: BTreeMap<u32, Findings>, summary: String) -> Self {
        Self {
            tool,
            per_frame,
            summary,
            track_motion: Vec::new(),
            vehicle_total: None,
        }
    }

    /// Frames whose findings contain `label`. For Vehicle Motion Detection the
    /// labels `accident` and `collision` select frames holding a stationary vehicle.
    pub fn matched_frame_ids(&self, label: &str) -> Vec<u32> {
        self.per_frame
            .iter()
            .filter(|(_, f)| f.contains_label(label))
            .map(|(&id, _)| id)
            .collect()
    }

    pub fn has_findings(&self) -> bool {
        self.per_frame.values().any(|f| !f.is_empty())
    }

    /// Per-frame densities, if this is a density result.
    pub fn densities(&self) -> Vec<(u32, f64)> {
        self.per_frame
            .iter()
            .filter_map(|(&id, f)| match f {
                Findings::Density(d) => Some((id, *d)),
                _ => None,
            })
            .collect()
    }
}

fn selected<'a>(clip: &'a AnnotatedClip, frame_ids: &[u32]) -> Result<Vec<&'a FrameAnnotation>, ExecError> {
    if frame_ids.is_empty() {
        return Err(ExecError::NoFrames);
    }
    let ids: BTreeSet<u32> = frame_ids.iter().copied().collect();
    ids.into_iter()
        .map(|id| clip.frame(id).ok_or(ExecError::UnknownFrame(id)))
        .collect()
}

fn quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', "\\'"))
}

fn render_detections(v: &[Detection]) -> String {
    v.iter()
        .map(|d| format!("({:.2}, {})", d.confidence, quote(&d.label)))
        .collect::<Vec<_>>()
        .join(", ")
}

fn sorted_detections(mut v: Vec<Detection>) -> Vec<Detection> {
    // stable: equal confidences keep annotation order
    v.sort_by(|a, b| b.confidence.total_cmp(&a.confidence));
    v
}

pub fn run_object_detection(clip: &AnnotatedClip, frame_ids: &[u32]) -> Result<ExecutionResult, ExecError> {
    let frames = selected(clip, frame_ids)?;
    let mut per_frame = BTreeMap::new();
    let mut summary = Vec::new();
    for f in frames {
        let dets = sorted_detections(
            f.objects
                .iter()
                .map(|o| Detection {
                    confidence: o.confidence,
                    label: o.label.clone(),
                })
                .collect(),
        );
        summary.push(format!("{}: [{}]", f.frame_id, render_detections(&dets)));
        per_frame.insert(f.frame_id, Findings::Objects(dets));
    }
    Ok(ExecutionResult::new(
        ToolKind::ObjectDetection,
        per_frame,
        summary.join("\n"),
    ))
}

/// Vehicle, License Plate, Traffic Sign, and Lane Number Detection read one
/// annotation field each.
pub fn run_annotation_lookup(
    tool: ToolKind,
    clip: &AnnotatedClip,
    frame_ids: &[u32],
) -> Result<ExecutionResult, ExecError> {
    let lookup = matches!(
        tool,
        ToolKind::VehicleDetection
            | ToolKind::LicensePlateDetection
            | ToolKind::TrafficSignDetection
            | ToolKind::LaneNumberDetection
    );
    if !lookup {
        return Err(ExecError::NotALookupTool(tool));
    }
    let frames = selected(clip, frame_ids)?;
    let mut per_frame = BTreeMap::new();
    let mut lines = Vec::new();
    let mut lanes = BTreeSet::new();
    for f in frames {
        let findings = match tool {
            ToolKind::VehicleDetection => {
                let v: Vec<VehicleFinding> = f
                    .vehicles
                    .iter()
                    .map(|v| VehicleFinding {
                        track_id: v.track_id,
                        color: v.color.clone(),
                        vtype: v.vtype.clone(),
                    })
                    .collect();
                let items: Vec<String> = v
                    .iter()
                    .map(|v| format!("('Color: {}', 'Type: {}')", v.color, v.vtype))
                    .collect();
                lines.push(format!("{}: [{}]", f.frame_id, items.join(", ")));
                Findings::Vehicles(v)
            }
            ToolKind::LicensePlateDetection => {
                if f.plates.is_empty() {
                    lines.push(format!("{}: []", f.frame_id));
                }
                for plate in &f.plates {
                    let chars: Vec<String> = plate.iter().map(|c| quote(c)).collect();
                    lines.push(format!("{}: [{}]", f.frame_id, chars.join(", ")));
                }
                Findings::Plates(f.plates.clone())
            }
            ToolKind::TrafficSignDetection => {
                let dets = sorted_detections(
                    f.signs
                        .iter()
                        .map(|s| Detection {
                            confidence: s.confidence,
                            label: s.name.clone(),
                        })
                        .collect(),
                );
                if dets.is_empty() {
                    lines.push(format!("{}: []", f.frame_id));
                } else {
                    lines.push(format!("{}: {}", f.frame_id, render_detections(&dets)));
                }
                Findings::Signs(dets)
            }
            ToolKind::LaneNumberDetection => {
                lanes.insert(f.lane_count);
                Findings::Lanes(f.lane_count)
            }
            _ => unreachable!(),
        };
        per_frame.insert(f.frame_id, findings);
    }
    let summary = if tool == ToolKind::LaneNumberDetection {
        let counts: Vec<String> = lanes.iter().map(u32::to_string).collect();
        format!("number of lanes : [{}]", counts.join(", "))
    } else {
        lines.join("\n")
    };
    Ok(ExecutionResult::new(tool, per_frame, summary))
}

fn motion_between(a: f64, b: f64, threshold: f64) -> MotionState {
    let ratio = a.max(b) / a.min(b);
    if ratio > threshold {
        MotionState::Moving
    } else {
        MotionState::NotMoving
    }
}

fn track_areas(f: &FrameAnnotation) -> HashMap<u32, f64> {
    f.vehicles.iter().map(|v| (v.track_id, v.bbox.area())).collect()
}

/// Compares each vehicle's box area between the first and last selected
/// frames; tracks missing from either endpoint count as moving.
pub fn run_vehicle_motion_detection(
    clip: &AnnotatedClip,
    frame_ids: &[u32],
    threshold: f64,
) -> Result<ExecutionResult, ExecError> {
    if !(threshold > 1.0) {
        return Err(ExecError::InvalidThreshold(threshold));
    }
    let frames = selected(clip, frame_ids)?;
    if frames.len() < 2 {
        return Err(ExecError::TooFewFrames {
            tool: ToolKind::VehicleMotionDetection,
            needed: 2,
            got: frames.len(),
        });
    }
    let areas: Vec<HashMap<u32, f64>> = frames.iter().map(|f| track_areas(f)).collect();
    let (first, last) = (&areas[0], &areas[areas.len() - 1]);
    let all_tracks: BTreeSet<u32> = areas.iter().flat_map(|m| m.keys().copied()).collect();
    let track_motion: Vec<TrackMotion> = all_tracks
        .into_iter()
        .map(|track_id| {
            let state = match (first.get(&track_id), last.get(&track_id)) {
                (Some(&a), Some(&b)) => motion_between(a, b, threshold),
                _ => MotionState::Moving,
            };
            TrackMotion { track_id, state }
        })
        .collect();

    let mut per_frame = BTreeMap::new();
    for (i, f) in frames.iter().enumerate() {
        let neighbour = if i + 1 < areas.len() {
            &areas[i + 1]
        } else {
            &areas[i - 1]
        };
        let mut states: Vec<TrackMotion> = areas[i]
            .iter()
            .map(|(&track_id, &a)| TrackMotion {
                track_id,
                state: neighbour
                    .get(&track_id)
                    .map_or(MotionState::Moving, |&b| motion_between(a, b, threshold)),
            })
            .collect();
        states.sort_by_key(|m| m.track_id);
        per_frame.insert(f.frame_id, Findings::Motion(states));
    }

    let summary = format!(
        "[{}]",
        track_motion
            .iter()
            .map(|m| m.state.as_str())
            .collect::<Vec<_>>()
            .join(", ")
    );
    let mut result = ExecutionResult::new(ToolKind::VehicleMotionDetection, per_frame, summary);
    result.track_motion = track_motion;
    Ok(result)
}

/// Counts distinct track ids over the selected frames.
pub fn run_traffic_flow_estimation(clip: &AnnotatedClip, frame_ids: &[u32]) -> Result<ExecutionResult, ExecError> {
    let frames = selected(clip, frame_ids)?;
    let mut seen = BTreeSet::new();
    let mut per_frame = BTreeMap::new();
    for f in frames {
        let mut ids: Vec<u32> = f.vehicles.iter().map(|v| v.track_id).collect();
        ids.sort_unstable();
        seen.extend(ids.iter().copied());
        per_frame.insert(f.frame_id, Findings::Tracks(ids));
    }
    let mut result = ExecutionResult::new(
        ToolKind::TrafficFlowEstimation,
        per_frame,
        format!("Total vehicle number: {}", seen.len()),
    );
    result.vehicle_total = Some(seen.len());
    Ok(result)
}

/// Per-frame share of road area covered by vehicle boxes, clamped to 1 and
/// rounded to two decimals. Overlapping boxes are not de-duplicated.
pub fn run_vehicle_density_estimation(clip: &AnnotatedClip, frame_ids: &[u32]) -> Result<ExecutionResult, ExecError> {
    let frames = selected(clip, frame_ids)?;
    let mut per_frame = BTreeMap::new();
    let mut summary = String::new();
    for f in frames {
        let covered = f.vehicles.iter().fold(0.0, |acc, v| acc + v.bbox.area());
        let density = ((covered / clip.road_area_px).min(1.0) * 100.0).round() / 100.0;
        if !summary.is_empty() {
            summary.push('\n');
        }
        let _ = write!(summary, "{}: {density:.2}", f.frame_id);
        per_frame.insert(f.frame_id, Findings::Density(density));
    }
    Ok(ExecutionResult::new(
        ToolKind::VehicleDensityEstimation,
        per_frame,
        summary,
    ))
}

/// Runs `tool` over the selected frames.
pub fn execute(
    tool: ToolKind,
    clip: &AnnotatedClip,
    frame_ids: &[u32],
    params: &ToolParams,
) -> Result<ExecutionResult, ExecError> {
    match tool {
        ToolKind::ObjectDetection => run_object_detection(clip, frame_ids),
        ToolKind::VehicleMotionDetection => run_vehicle_motion_detection(clip, frame_ids, params.motion_threshold),
        ToolKind::TrafficFlowEstimation => run_traffic_flow_estimation(clip, frame_ids),
        ToolKind::VehicleDensityEstimation => run_vehicle_density_estimation(clip, frame_ids),
        lookup => run_annotation_lookup(lookup, clip, frame_ids),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{BBox, ObjectAnnotation, SignAnnotation, VehicleAnnotation};

    fn clip(frames: Vec<FrameAnnotation>, road: f64) -> AnnotatedClip {
        AnnotatedClip {
            clip_id: "t".into(),
            fps: 30.0,
            frame_count: frames.len() as u32,
            compressed_size_bytes: 1,
            road_area_px: road,
            frames,
        }
    }

    fn frame(id: u32) -> FrameAnnotation {
        FrameAnnotation::empty(id, 100)
    }

    fn vehicle(track_id: u32, w: f64, h: f64) -> VehicleAnnotation {
        VehicleAnnotation {
            track_id,
            color: "blue".into(),
            vtype: "sedan".into(),
            bbox: BBox::new(0.0, 0.0, w, h),
        }
    }

    #[test]
    fn object_detection_sorts_by_confidence() {
        let mut f = frame(0);
        for (label, c) in [("person", 0.88), ("motorcycle", 0.91)] {
            f.objects.push(ObjectAnnotation {
                label: label.into(),
                confidence: c,
                bbox: BBox::new(0.0, 0.0, 1.0, 1.0),
            });
        }
        let c = clip(vec![f, frame(1)], 10.0);
        let r = run_object_detection(&c, &[0, 1]).unwrap();
        assert_eq!(r.summary, "0: [(0.91, 'motorcycle'), (0.88, 'person')]\n1: []");
        assert_eq!(r.per_frame[&1], Findings::Objects(vec![]));
        assert_eq!(r.matched_frame_ids("motorcycle"), vec![0]);
    }

    #[test]
    fn unknown_frame_is_an_error() {
        let c = clip(vec![frame(0)], 10.0);
        assert_eq!(
            run_object_detection(&c, &[0, 3]).unwrap_err(),
            ExecError::UnknownFrame(3)
        );
        assert_eq!(run_object_detection(&c, &[]).unwrap_err(), ExecError::NoFrames);
    }

    #[test]
    fn lookups_render_documented_shapes() {
        let mut f = frame(1);
        f.plates.push("BC54950".chars().map(String::from).collect());
        f.lane_count = 3;
        f.vehicles.push(vehicle(1, 10.0, 10.0));
        f.signs.push(SignAnnotation {
            confidence: 0.95,
            name: "Speed Limit 70".into(),
        });
        let c = clip(vec![frame(0), f], 10.0);
        let plates = run_annotation_lookup(ToolKind::LicensePlateDetection, &c, &[1]).unwrap();
        assert_eq!(plates.summary, "1: ['B', 'C', '5', '4', '9', '5', '0']");
        let lanes = run_annotation_lookup(ToolKind::LaneNumberDetection, &c, &[1]).unwrap();
        assert_eq!(lanes.summary, "number of lanes : [3]");
        let veh = run_annotation_lookup(ToolKind::VehicleDetection, &c, &[1]).unwrap();
        assert_eq!(veh.summary, "1: [('Color: blue', 'Type: sedan')]");
        let signs = run_annotation_lookup(ToolKind::TrafficSignDetection, &c, &[0, 1]).unwrap();
        assert_eq!(signs.summary, "0: []\n1: (0.95, 'Speed Limit 70')");
        assert_eq!(signs.per_frame[&0], Findings::Signs(vec![]));
        assert_eq!(signs.matched_frame_ids("Traffic Sign"), vec![1]);
        assert_eq!(
            run_annotation_lookup(ToolKind::TrafficFlowEstimation, &c, &[0]).unwrap_err(),
            ExecError::NotALookupTool(ToolKind::TrafficFlowEstimation)
        );
    }

    #[test]
    fn motion_uses_area_ratio() {
        // track 1: 1000 -> 1000 (ratio 1.0); track 2: 1000 -> 1500 (ratio 1.5)
        let mut a = frame(0);
        a.vehicles.push(vehicle(1, 40.0, 25.0));
        a.vehicles.push(vehicle(2, 40.0, 25.0));
        let mut b = frame(1);
        b.vehicles.push(vehicle(1, 40.0, 25.0));
        b.vehicles.push(vehicle(2, 50.0, 30.0));
        let c = clip(vec![a, b], 10.0);
        let r = run_vehicle_motion_detection(&c, &[0, 1], 1.15).unwrap();
        assert_eq!(r.summary, "[not moving, moving]");
        let reversed = run_vehicle_motion_detection(&c, &[1, 0], 1.15).unwrap();
        assert_eq!(reversed.track_motion, r.track_motion);
        assert_eq!(r.matched_frame_ids("accident"), vec![0, 1]);
    }

    #[test]
    fn motion_preconditions() {
        let c = clip(vec![frame(0), frame(1)], 10.0);
        assert!(matches!(
            run_vehicle_motion_detection(&c, &[0], 1.15),
            Err(ExecError::TooFewFrames { got: 1, .. })
        ));
        assert_eq!(
            run_vehicle_motion_detection(&c, &[0, 1], 1.0).unwrap_err(),
            ExecError::InvalidThreshold(1.0)
        );
    }

    #[test]
    fn track_missing_from_an_endpoint_is_moving() {
        let mut a = frame(0);
        a.vehicles.push(vehicle(5, 10.0, 10.0));
        let c = clip(vec![a, frame(1)], 10.0);
        let r = run_vehicle_motion_detection(&c, &[0, 1], 1.15).unwrap();
        assert_eq!(r.summary, "[moving]");
    }

    #[test]
    fn flow_counts_distinct_tracks() {
        let mut a = frame(0);
        a.vehicles.extend([vehicle(3, 1.0, 1.0), vehicle(7, 1.0, 1.0)]);
        let mut b = frame(1);
        b.vehicles.extend([vehicle(7, 1.0, 1.0), vehicle(9, 1.0, 1.0)]);
        let c = clip(vec![a, b, frame(2)], 10.0);
        let r = run_traffic_flow_estimation(&c, &[0, 1]).unwrap();
        assert_eq!(r.summary, "Total vehicle number: 3");
        let none = run_traffic_flow_estimation(&c, &[2]).unwrap();
        assert_eq!(none.vehicle_total, Some(0));
    }

    #[test]
    fn density_examples() {
        let mut light = frame(1);
        light.vehicles.push(vehicle(1, 23.0, 10.0)); // 230 px² on a 1000 px² road
        let mut full = frame(2);
        full.vehicles.push(vehicle(2, 40.0, 30.0));
        let c = clip(vec![frame(0), light, full], 1000.0);
        let r = run_vehicle_density_estimation(&c, &[0, 1, 2]).unwrap();
        assert_eq!(r.densities(), vec![(0, 0.0), (1, 0.23), (2, 1.0)]);
        assert_eq!(r.summary, "0: 0.00\n1: 0.23\n2: 1.00");
    }
}
