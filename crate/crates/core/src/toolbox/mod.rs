//! The toolbox: eight detection and estimation tools, their structured
//! descriptions, label sets, and annotation-backed executors.

mod exec;
pub mod vocab;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use exec::{
    execute, run_annotation_lookup, run_object_detection, run_traffic_flow_estimation, run_vehicle_density_estimation,
    run_vehicle_motion_detection, Detection, ExecError, ExecutionResult, Findings, MotionState, ToolParams,
    TrackMotion, VehicleFinding, DEFAULT_MOTION_THRESHOLD,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ToolKind {
    #[serde(rename = "Object Detection")]
    ObjectDetection,
    #[serde(rename = "Vehicle Detection")]
    VehicleDetection,
    #[serde(rename = "License Plate Detection")]
    LicensePlateDetection,
    #[serde(rename = "Traffic Sign Detection")]
    TrafficSignDetection,
    #[serde(rename = "Vehicle Motion Detection")]
    VehicleMotionDetection,
    #[serde(rename = "Lane Number Detection")]
    LaneNumberDetection,
    #[serde(rename = "Traffic Flow Estimation")]
    TrafficFlowEstimation,
    #[serde(rename = "Vehicle Density Estimation")]
    VehicleDensityEstimation,
}

impl ToolKind {
    pub const ALL: [ToolKind; 8] = [
        ToolKind::ObjectDetection,
        ToolKind::VehicleDetection,
        ToolKind::LicensePlateDetection,
        ToolKind::TrafficSignDetection,
        ToolKind::VehicleMotionDetection,
        ToolKind::LaneNumberDetection,
        ToolKind::TrafficFlowEstimation,
        ToolKind::VehicleDensityEstimation,
    ];

    /// 1-based position in the toolbox.
    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&t| t == self).unwrap() + 1
    }

    pub fn name(self) -> &'static str {
        match self {
            ToolKind::ObjectDetection => "Object Detection",
            ToolKind::VehicleDetection => "Vehicle Detection",
            ToolKind::LicensePlateDetection => "License Plate Detection",
            ToolKind::TrafficSignDetection => "Traffic Sign Detection",
            ToolKind::VehicleMotionDetection => "Vehicle Motion Detection",
            ToolKind::LaneNumberDetection => "Lane Number Detection",
            ToolKind::TrafficFlowEstimation => "Traffic Flow Estimation",
            ToolKind::VehicleDensityEstimation => "Vehicle Density Estimation",
        }
    }

    /// Case- and whitespace-insensitive lookup by display name.
    pub fn from_name(name: &str) -> Option<Self> {
        let wanted: Vec<String> = name.split_whitespace().map(str::to_lowercase).collect();
        Self::ALL.into_iter().find(|t| {
            t.name()
                .split_whitespace()
                .map(str::to_lowercase)
                .eq(wanted.iter().cloned())
        })
    }
}

impl fmt::Display for ToolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Structured description of one tool: what it can do, what it cannot do,
/// and what its output looks like.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolDescriptor {
    pub index: usize,
    pub name: String,
    pub can: Vec<String>,
    pub cannot: Vec<String>,
    pub output_example: String,
    /// Labels used for key-term mapping during frame selection.
    pub labels: Vec<String>,
}

impl ToolDescriptor {
    pub fn kind(&self) -> ToolKind {
        ToolKind::from_name(&self.name).expect("registry descriptors name known tools")
    }

    /// Three-part text block used inside prompts.
    pub fn render(&self) -> String {
        let lettered = |items: &[String]| -> String {
            items
                .iter()
                .enumerate()
                .map(|(i, s)| format!("{}) {s}", (b'a' + i as u8) as char))
                .collect::<Vec<_>>()
                .join("; ")
        };
        let mut out = format!("Tool {}: {}\n", self.index, self.name);
        out.push_str(&format!("1. The tool can {}.\n", lettered(&self.can)));
        if self.cannot.is_empty() {
            out.push_str("2. No specific limitations are listed.\n");
        } else {
            out.push_str(&format!("2. The tool cannot {}.\n", lettered(&self.cannot)));
        }
        out.push_str(&format!("3. Output example: {}\n", self.output_example));
        out
    }
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn descriptor(kind: ToolKind) -> ToolDescriptor {
    let (can, cannot, output_example, labels): (Vec<String>, Vec<&str>, &str, Vec<String>) = match kind {
        ToolKind::ObjectDetection => (
            vec![
                format!(
                    "detect 80 object categories in individual frames: {}",
                    vocab::OBJECT_LABELS.join(", ")
                ),
                "analyse frames statically only, without following objects over time".into(),
            ],
            vec![
                "restrict detection to a specified location such as a crossroad or a stretch of road",
                "restrict detection to a specified event such as the moments after an accident or a collision",
            ],
            "[(0.98, 'car'), (0.95, 'traffic light'), (0.87, 'car'), (0.83, 'fire hydrant')]",
            strings(&vocab::OBJECT_LABELS),
        ),
        ToolKind::VehicleDetection => (
            vec![
                format!("classify vehicle types: {}", vocab::VEHICLE_TYPES.join(", ")),
                format!("recognise vehicle colors: {}", vocab::VEHICLE_COLORS.join(", ")),
                "analyse frames statically only".into(),
            ],
            vec![
                "follow vehicle movement or events that happen while vehicles move",
                "restrict detection to a specified location such as a crossroad or a stretch of road",
                "restrict detection to a specified event such as the moments after an accident or a collision",
            ],
            "1: [('Color: blue', 'Type: sedan'), ('Color: blue', 'Type: hatchback')], 2: [('Color: blue', 'Type: sedan')]",
            strings(&vocab::VEHICLE_TYPES),
        ),
        ToolKind::LicensePlateDetection => (
            vec!["read the characters of vehicle license plates in each frame".into()],
            vec![],
            "1: ['C', 'J', 'X', 'S', 'G']",
            Vec::new(),
        ),
        ToolKind::TrafficSignDetection => (
            vec![format!(
                "recognise these traffic signs: {}",
                vocab::TRAFFIC_SIGNS.join(", ")
            )],
            vec![
                "recognise traffic signs outside the listed types",
                "report where a traffic sign is located",
            ],
            "(0.95, 'Speed Limit 70'), (0.86, 'No Trucks')",
            strings(&vocab::TRAFFIC_SIGN_LABELS),
        ),
        ToolKind::VehicleMotionDetection => (
            vec![
                "decide whether each vehicle is moving by comparing the area its box occupies in two selected frames; an area ratio above a threshold means moving".into(),
            ],
            vec![
                "restrict detection to a specified location such as a crossroad or a stretch of road",
                "restrict detection to a specified event such as the moments after an accident or a collision",
            ],
            "[not moving, moving, moving, not moving, moving]",
            strings(&vocab::MOTION_LABELS),
        ),
        ToolKind::LaneNumberDetection => (
            vec!["count the road lanes visible in the selected frames".into()],
            vec!["distinguish lane marking types such as solid lines, dashed lines, or arrows"],
            "number of lanes : [3]",
            Vec::new(),
        ),
        ToolKind::TrafficFlowEstimation => (
            vec!["count how many distinct vehicles appear over a period of the video".into()],
            vec![
                "follow where individual vehicles travel or how they move",
                "restrict counting to a specified location such as a crossroad or a stretch of road",
            ],
            "Total vehicle number: 8",
            Vec::new(),
        ),
        ToolKind::VehicleDensityEstimation => (
            vec![
                "compute vehicle density in a frame as the share of road area covered by vehicles".into(),
                "indicate the traffic state of a frame; higher density means congestion or heavy traffic".into(),
            ],
            vec!["restrict estimation to a specified location such as a crossroad or a stretch of road"],
            "0.23 (a value from 0 to 1; higher means heavier traffic)",
            Vec::new(),
        ),
    };
    ToolDescriptor {
        index: kind.index(),
        name: kind.name().to_string(),
        can,
        cannot: strings(&cannot),
        output_example: output_example.to_string(),
        labels,
    }
}

/// Immutable ordered set of tool descriptors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Registry {
    tools: Vec<ToolDescriptor>,
}

impl Default for Registry {
    fn default() -> Self {
        registry()
    }
}

/// The bundled eight-tool registry, in toolbox order.
pub fn registry() -> Registry {
    Registry {
        tools: ToolKind::ALL.into_iter().map(descriptor).collect(),
    }
}

impl Registry {
    pub fn len(&self) -> usize {
        self.tools.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tools.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ToolDescriptor> {
        self.tools.iter()
    }

    pub fn get(&self, kind: ToolKind) -> Option<&ToolDescriptor> {
        self.tools.iter().find(|d| d.kind() == kind)
    }

    pub fn contains(&self, kind: ToolKind) -> bool {
        self.get(kind).is_some()
    }

    pub fn kinds(&self) -> impl Iterator<Item = ToolKind> + '_ {
        self.tools.iter().map(ToolDescriptor::kind)
    }

    /// Tools not in `excluded`, in toolbox order.
    pub fn available<'a>(&'a self, excluded: &'a BTreeSet<ToolKind>) -> impl Iterator<Item = &'a ToolDescriptor> + 'a {
        self.tools.iter().filter(move |d| !excluded.contains(&d.kind()))
    }

    /// Descriptor blocks for every tool not in `excluded`, separated by blank lines.
    pub fn render(&self, excluded: &BTreeSet<ToolKind>) -> String {
        self.available(excluded)
            .map(ToolDescriptor::render)
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// JSON descriptor document.
    pub fn to_document(&self) -> String {
        serde_json::to_string_pretty(self).expect("registry serialization is infallible")
    }
}

impl<'a> IntoIterator for &'a Registry {
    type Item = &'a ToolDescriptor;
    type IntoIter = std::slice::Iter<'a, ToolDescriptor>;

    fn into_iter(self) -> Self::IntoIter {
        self.tools.iter()
    }
}
