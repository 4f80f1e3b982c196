//! Deterministic synthetic clip generator.
//!
//! Passing vehicles approach or recede from the camera, so their box area
//! changes geometrically every frame (2.5-3.5% per frame, i.e. well above a
//! 1.15 area ratio over half a second at 30 fps). Stationary vehicles keep
//! an identical box, which makes the motion ground truth exact.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AnnotatedClip, BBox, FrameAnnotation, ObjectAnnotation, SignAnnotation, VehicleAnnotation};
use crate::toolbox::vocab;

/// Inclusive frame range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameSpan {
    pub start: u32,
    pub end: u32,
}

impl FrameSpan {
    pub fn new(start: u32, end: u32) -> Self {
        Self { start, end }
    }

    pub fn contains(&self, frame: u32) -> bool {
        (self.start..=self.end).contains(&frame)
    }
}

/// Scenario parameters for [`generate_synthetic_clip`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub clip_id: String,
    pub frame_count: u32,
    pub fps: f64,
    /// Vehicles that drive through the scene.
    pub vehicles: u32,
    /// A vehicle drives in and then stands still over this span.
    pub stopped_vehicle: Option<FrameSpan>,
    /// Stationary vehicles covering most of the road for the whole clip.
    pub congestion: u32,
    pub motorcycles: Vec<FrameSpan>,
    pub pedestrians: Vec<FrameSpan>,
    pub signs: Vec<String>,
    pub lane_count: u32,
    pub road_area_px: f64,
    pub mean_frame_bytes: u64,
    /// compressed size / sum of frame sizes, in (0, 1].
    pub compression_ratio: f64,
}

impl ScenarioSpec {
    pub fn new(clip_id: impl Into<String>, frame_count: u32) -> Self {
        Self {
            clip_id: clip_id.into(),
            frame_count,
            fps: 30.0,
            vehicles: 0,
            stopped_vehicle: None,
            congestion: 0,
            motorcycles: Vec::new(),
            pedestrians: Vec::new(),
            signs: Vec::new(),
            lane_count: 2,
            road_area_px: 600_000.0,
            mean_frame_bytes: 60_000,
            compression_ratio: 0.04,
        }
    }

    fn validate(&self) -> Result<(), SpecError> {
        let fail = |m: String| Err(SpecError(m));
        if self.clip_id.trim().is_empty() {
            return fail("clip_id is empty".into());
        }
        if self.frame_count == 0 {
            return fail("frame_count must be positive".into());
        }
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return fail(format!("fps must be positive, got {}", self.fps));
        }
        if !(self.road_area_px > 0.0) {
            return fail("road_area_px must be positive".into());
        }
        if self.mean_frame_bytes < 16 {
            return fail("mean_frame_bytes must be at least 16".into());
        }
        if !(self.compression_ratio > 0.0 && self.compression_ratio <= 1.0) {
            return fail("compression_ratio must lie in (0, 1]".into());
        }
        let spans = self
            .stopped_vehicle
            .iter()
            .chain(&self.motorcycles)
            .chain(&self.pedestrians);
        for s in spans {
            if s.start > s.end || s.end >= self.frame_count {
                return fail(format!(
                    "span {}..={} does not fit in {} frames",
                    s.start, s.end, self.frame_count
                ));
            }
        }
        if let Some(bad) = self.signs.iter().find(|s| !vocab::is_traffic_sign(s)) {
            return fail(format!("unknown traffic sign '{bad}'"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid scenario: {0}")]
pub struct SpecError(pub String);

struct Track {
    id: u32,
    color: &'static str,
    vtype: &'static str,
    plate: Vec<String>,
    confidence: f64,
    first: u32,
    last: u32,
    /// Box at `first`.
    base: BBox,
    /// Per-frame area growth factor while moving.
    growth: f64,
    /// Frame from which the box freezes, if any.
    halt: Option<u32>,
}

impl Track {
    fn bbox_at(&self, frame: u32) -> BBox {
        let moving_frames = self.halt.map_or(frame, |h| frame.min(h)) - self.first;
        let scale = self.growth.powi(moving_frames as i32).sqrt();
        let w = round1(self.base.w * scale);
        let h = round1(self.base.h * scale);
        let drift = moving_frames as f64 * 3.0;
        BBox::new(round1(self.base.x + drift), round1(self.base.y), w.max(1.0), h.max(1.0))
    }

    fn object_label(&self) -> &'static str {
        match self.vtype {
            "bus" => "bus",
            "truck" => "truck",
            _ => "car",
        }
    }
}

fn round1(v: f64) -> f64 {
    (v * 10.0).round() / 10.0
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

fn plate_chars(rng: &mut ChaCha8Rng) -> Vec<String> {
    const LETTERS: &[u8] = b"ABCDEFGHJKLMNPRSTUVWXYZ";
    let mut out = Vec::with_capacity(7);
    for _ in 0..2 {
        out.push((LETTERS[rng.random_range(0..LETTERS.len())] as char).to_string());
    }
    for _ in 0..5 {
        out.push(rng.random_range(0..10u8).to_string());
    }
    out
}

/// Area in px² above which a plate is legible.
const PLATE_LEGIBLE_AREA: f64 = 12_000.0;

/// Generates a clip; identical `(seed, spec)` always yields an identical clip.
pub fn generate_synthetic_clip(seed: u64, spec: &ScenarioSpec) -> Result<AnnotatedClip, SpecError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fc = spec.frame_count;
    let mut tracks = Vec::new();
    let mut next_id = 1u32;

    let mut new_track = |rng: &mut ChaCha8Rng, first: u32, last: u32, base: BBox, growth: f64, halt: Option<u32>| {
        let t = Track {
            id: next_id,
            color: vocab::VEHICLE_COLORS[rng.random_range(0..vocab::VEHICLE_COLORS.len())],
            vtype: vocab::VEHICLE_TYPES[rng.random_range(0..vocab::VEHICLE_TYPES.len())],
            plate: plate_chars(rng),
            confidence: round2(rng.random_range(0.6..0.99)),
            first,
            last,
            base,
            growth,
            halt,
        };
        next_id += 1;
        t
    };

    for _ in 0..spec.vehicles {
        let first = rng.random_range(0..fc);
        let duration = rng.random_range(70..=110u32);
        let last = (first + duration).min(fc - 1);
        let rate = rng.random_range(1.025..1.035);
        let approaching = rng.random_bool(0.5);
        let (w, growth) = if approaching {
            (rng.random_range(40.0..70.0), rate)
        } else {
            (rng.random_range(180.0..240.0), 1.0 / rate)
        };
        let base = BBox::new(
            round1(rng.random_range(100.0..1500.0)),
            round1(rng.random_range(300.0..800.0)),
            round1(w),
            round1(w * 0.75),
        );
        let t = new_track(&mut rng, first, last, base, growth, None);
        tracks.push(t);
    }

    if let Some(span) = spec.stopped_vehicle {
        let first = span.start.saturating_sub(45);
        let base = BBox::new(820.0, 540.0, 60.0, 45.0);
        let t = new_track(&mut rng, first, span.end, base, 1.03, Some(span.start));
        tracks.push(t);
    }

    let jam_width = (spec.road_area_px * 0.7 / (spec.congestion.max(1) as f64) / 0.75).sqrt();
    for k in 0..spec.congestion {
        let w = round1(jam_width * rng.random_range(0.95..1.05));
        let base = BBox::new(
            round1(40.0 + (k % 8) as f64 * 230.0),
            round1(300.0 + (k / 8) as f64 * 160.0),
            w,
            round1(w * 0.75),
        );
        let t = new_track(&mut rng, 0, fc - 1, base, 1.0, Some(0));
        tracks.push(t);
    }

    let sign_conf: Vec<f64> = spec.signs.iter().map(|_| round2(rng.random_range(0.8..0.97))).collect();

    let mut frames = Vec::with_capacity(fc as usize);
    for f in 0..fc {
        let jitter = rng.random_range(0.9..1.1);
        let size_bytes = ((spec.mean_frame_bytes as f64) * jitter).round() as u64;
        let mut frame = FrameAnnotation::empty(f, size_bytes);
        frame.lane_count = spec.lane_count;
        for t in tracks.iter().filter(|t| (t.first..=t.last).contains(&f)) {
            let bbox = t.bbox_at(f);
            frame.vehicles.push(VehicleAnnotation {
                track_id: t.id,
                color: t.color.to_string(),
                vtype: t.vtype.to_string(),
                bbox,
            });
            frame.objects.push(ObjectAnnotation {
                label: t.object_label().to_string(),
                confidence: t.confidence,
                bbox,
            });
            if bbox.area() >= PLATE_LEGIBLE_AREA {
                frame.plates.push(t.plate.clone());
            }
        }
        for (i, span) in spec.motorcycles.iter().enumerate() {
            if span.contains(f) {
                let x = round1(300.0 + i as f64 * 400.0 + (f - span.start) as f64 * 4.0);
                let bike = BBox::new(x, 620.0, 45.0, 60.0);
                frame.objects.push(ObjectAnnotation {
                    label: "motorcycle".into(),
                    confidence: 0.91,
                    bbox: bike,
                });
                frame.objects.push(ObjectAnnotation {
                    label: "person".into(),
                    confidence: 0.88,
                    bbox: BBox::new(x + 5.0, 570.0, 30.0, 70.0),
                });
            }
        }
        for (i, span) in spec.pedestrians.iter().enumerate() {
            if span.contains(f) {
                frame.objects.push(ObjectAnnotation {
                    label: "person".into(),
                    confidence: 0.86,
                    bbox: BBox::new(round1(1600.0 - i as f64 * 90.0), 500.0, 28.0, 72.0),
                });
            }
        }
        for (name, conf) in spec.signs.iter().zip(&sign_conf) {
            frame.signs.push(SignAnnotation {
                confidence: *conf,
                name: name.clone(),
            });
        }
        frames.push(frame);
    }

    let total: u64 = frames.iter().map(|f| f.size_bytes).sum();
    let compressed = ((total as f64) * spec.compression_ratio).floor().max(1.0) as u64;
    Ok(AnnotatedClip {
        clip_id: spec.clip_id.clone(),
        fps: spec.fps,
        frame_count: fc,
        compressed_size_bytes: compressed,
        road_area_px: spec.road_area_px,
        frames,
    })
}

/// Seeds and scenarios behind the bundled fixture clips `c01`..`c05`.
///
/// Every clip is 15 s at 30 fps (450 frames).
pub fn bundled_scenarios() -> Vec<(u64, ScenarioSpec)> {
    let c01 = ScenarioSpec {
        vehicles: 3,
        stopped_vehicle: Some(FrameSpan::new(200, 449)),
        signs: vec!["Speed Limit 60".into()],
        lane_count: 3,
        ..ScenarioSpec::new("c01", 450)
    };
    let c02 = ScenarioSpec {
        vehicles: 6,
        congestion: 10,
        signs: vec!["No Honking".into(), "Speed Limit 40".into()],
        lane_count: 4,
        ..ScenarioSpec::new("c02", 450)
    };
    let c03 = ScenarioSpec {
        vehicles: 8,
        motorcycles: vec![FrameSpan::new(60, 120), FrameSpan::new(300, 330)],
        pedestrians: vec![FrameSpan::new(150, 260)],
        signs: vec!["Pedestrian Crossing".into(), "Children Crossing".into()],
        lane_count: 2,
        ..ScenarioSpec::new("c03", 450)
    };
    let c04 = ScenarioSpec {
        vehicles: 12,
        signs: vec!["No Trucks".into(), "Speed Limit 70".into()],
        lane_count: 3,
        ..ScenarioSpec::new("c04", 450)
    };
    let c05 = ScenarioSpec {
        vehicles: 5,
        pedestrians: vec![FrameSpan::new(0, 89), FrameSpan::new(330, 449)],
        lane_count: 2,
        ..ScenarioSpec::new("c05", 450)
    };
    vec![(7, c01), (11, c02), (13, c03), (17, c04), (19, c05)]
}
