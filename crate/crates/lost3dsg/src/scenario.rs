//! Scripted scenarios: static structure, a frame sequence, and the
//! ground-truth events used for scoring.
//!
//! Documents are JSON. Besides the frame list, a scenario names its
//! ground-truth objects once under `objects`; events refer to them by key.
//! A detection carries either `bbox3d` or a `mask` (0/1) plus `depth`
//! (meters) laid out row-major at the frame's image size.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use lost3dsg_core::{
    BBox3D, CameraIntrinsics, CameraPose, DepthImage, Detection, DetectionGeometry, FrameInput,
    PersistentScene, PixelMask, SemanticAttributes, TrackerError,
};
use serde::{Deserialize, Serialize};

use crate::export::BoxDoc;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

fn invalid(path: impl Into<String>, message: impl std::fmt::Display) -> ScenarioError {
    ScenarioError::Invalid {
        path: path.into(),
        message: message.to_string(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Exists,
    Moved,
    Removed,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Exists => "exists",
            EventKind::Moved => "moved",
            EventKind::Removed => "removed",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruthEvent {
    pub kind: EventKind,
    pub object_key: String,
    pub frame: usize,
    /// Frame after which the event is scored; defaults to `frame`.
    pub deadline: Option<usize>,
    pub expected_bbox: Option<BBox3D>,
}

impl GroundTruthEvent {
    pub fn scored_at(&self) -> usize {
        self.deadline.unwrap_or(self.frame)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoomSpec {
    pub label: String,
    pub polygon: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SupportSpec {
    pub attributes: SemanticAttributes,
    pub bbox: BBox3D,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioFrame {
    pub exploration: bool,
    pub input: FrameInput,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub rooms: Vec<RoomSpec>,
    pub supports: Vec<SupportSpec>,
    pub objects: BTreeMap<String, SemanticAttributes>,
    pub frames: Vec<ScenarioFrame>,
    pub ground_truth: Vec<GroundTruthEvent>,
}

impl Scenario {
    /// Checks the cross-references that the schema cannot express.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let mut tracking = false;
        for (i, f) in self.frames.iter().enumerate() {
            if f.exploration && tracking {
                return Err(invalid(
                    format!("frames[{i}].exploration"),
                    "exploration cannot resume after tracking has started",
                ));
            }
            tracking |= !f.exploration;
        }
        let n = self.frames.len();
        for (i, e) in self.ground_truth.iter().enumerate() {
            let path = format!("ground_truth[{i}]");
            if !self.objects.contains_key(&e.object_key) {
                return Err(invalid(
                    format!("{path}.object_key"),
                    format_args!("undefined object {:?}", e.object_key),
                ));
            }
            if e.frame >= n {
                return Err(invalid(
                    format!("{path}.frame"),
                    format_args!("frame {} out of range (scenario has {n})", e.frame),
                ));
            }
            if let Some(d) = e.deadline {
                if d < e.frame || d >= n {
                    return Err(invalid(
                        format!("{path}.deadline"),
                        format_args!("deadline {d} must lie in [{}, {n})", e.frame),
                    ));
                }
            }
            if e.kind == EventKind::Moved && e.expected_bbox.is_none() {
                return Err(invalid(
                    format!("{path}.expected_bbox"),
                    "moved events need the new location",
                ));
            }
        }
        Ok(())
    }

    /// Scene holding only the rooms and supports.
    pub fn initial_scene(&self) -> Result<PersistentScene, TrackerError> {
        let mut scene = PersistentScene::new();
        for r in &self.rooms {
            scene.add_room(&r.label, r.polygon.clone())?;
        }
        for s in &self.supports {
            scene.add_support(s.attributes.clone(), s.bbox)?;
        }
        Ok(scene)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    name: String,
    #[serde(default)]
    rooms: Vec<RoomDoc>,
    #[serde(default)]
    supports: Vec<SupportDoc>,
    #[serde(default)]
    objects: Vec<ObjectDoc>,
    frames: Vec<FrameDoc>,
    #[serde(default)]
    ground_truth: Vec<EventDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RoomDoc {
    label: String,
    polygon: Vec<[f64; 2]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SupportDoc {
    label: String,
    #[serde(default)]
    color: String,
    #[serde(default)]
    material: String,
    #[serde(default)]
    description: String,
    bbox: BoxDoc,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectDoc {
    key: String,
    label: String,
    color: String,
    material: String,
    description: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseDoc {
    rotation: [f64; 9],
    translation: [f64; 3],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct IntrinsicsDoc {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    width: usize,
    height: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameDoc {
    exploration: bool,
    pose: PoseDoc,
    intrinsics: IntrinsicsDoc,
    #[serde(default)]
    detections: Vec<DetectionDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DetectionDoc {
    label: String,
    color: String,
    material: String,
    description: String,
    bbox3d: Option<BoxDoc>,
    mask: Option<Vec<u8>>,
    depth: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EventDoc {
    kind: EventKind,
    object_key: String,
    frame: usize,
    deadline: Option<usize>,
    expected_bbox: Option<BoxDoc>,
}

fn bbox(doc: &BoxDoc, path: &str) -> Result<BBox3D, ScenarioError> {
    BBox3D::new(doc.min, doc.max).map_err(|e| invalid(path, e))
}

fn attributes(
    label: &str,
    color: &str,
    material: &str,
    description: &str,
    path: &str,
) -> Result<SemanticAttributes, ScenarioError> {
    SemanticAttributes::new(label, color, material, description).map_err(|e| invalid(path, e))
}

fn convert_frame(doc: FrameDoc, i: usize) -> Result<ScenarioFrame, ScenarioError> {
    let path = format!("frames[{i}]");
    let r = doc.pose.rotation;
    let pose = CameraPose::new(
        [[r[0], r[1], r[2]], [r[3], r[4], r[5]], [r[6], r[7], r[8]]],
        doc.pose.translation,
    )
    .map_err(|e| invalid(format!("{path}.pose"), e))?;
    let k = &doc.intrinsics;
    let intrinsics = CameraIntrinsics::new(k.fx, k.fy, k.cx, k.cy, k.width, k.height)
        .map_err(|e| invalid(format!("{path}.intrinsics"), e))?;

    let mut detections = Vec::with_capacity(doc.detections.len());
    for (j, d) in doc.detections.into_iter().enumerate() {
        let dpath = format!("{path}.detections[{j}]");
        let attrs = attributes(&d.label, &d.color, &d.material, &d.description, &dpath)?;
        let geometry = match (d.bbox3d, d.mask, d.depth) {
            (Some(b), None, None) => DetectionGeometry::Box(bbox(&b, &format!("{dpath}.bbox3d"))?),
            (None, Some(mask), Some(depth)) => {
                let (w, h) = (k.width, k.height);
                if mask.iter().any(|&m| m > 1) {
                    return Err(invalid(format!("{dpath}.mask"), "mask values must be 0 or 1"));
                }
                let mask = PixelMask::new(w, h, mask.into_iter().map(|m| m == 1).collect())
                    .map_err(|e| invalid(format!("{dpath}.mask"), e))?;
                let depth =
                    DepthImage::new(w, h, depth).map_err(|e| invalid(format!("{dpath}.depth"), e))?;
                DetectionGeometry::Masked { mask, depth }
            }
            _ => {
                return Err(invalid(
                    dpath,
                    "a detection needs either bbox3d or both mask and depth",
                ))
            }
        };
        detections.push(Detection {
            attributes: attrs,
            geometry,
        });
    }
    Ok(ScenarioFrame {
        exploration: doc.exploration,
        input: FrameInput {
            detections,
            pose,
            intrinsics,
            mode_override: Some(doc.exploration),
        },
    })
}

/// Reads and validates a scenario document. Errors carry the path of the
/// offending field, e.g. `frames[2].detections[0].bbox3d`.
pub fn load_scenario<R: Read>(mut reader: R) -> Result<Scenario, ScenarioError> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let doc: ScenarioDoc = serde_path_to_error::deserialize(de).map_err(|e| ScenarioError::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    if doc.frames.is_empty() {
        return Err(invalid("frames", "a scenario needs at least one frame"));
    }

    let mut rooms = Vec::new();
    for (i, r) in doc.rooms.into_iter().enumerate() {
        if r.polygon.len() < 3 {
            return Err(invalid(format!("rooms[{i}].polygon"), "need at least 3 vertices"));
        }
        rooms.push(RoomSpec {
            label: r.label,
            polygon: r.polygon,
        });
    }
    let mut supports = Vec::new();
    for (i, s) in doc.supports.into_iter().enumerate() {
        let path = format!("supports[{i}]");
        supports.push(SupportSpec {
            attributes: attributes(&s.label, &s.color, &s.material, &s.description, &path)?,
            bbox: bbox(&s.bbox, &format!("{path}.bbox"))?,
        });
    }
    let mut objects = BTreeMap::new();
    for (i, o) in doc.objects.into_iter().enumerate() {
        let path = format!("objects[{i}]");
        let attrs = attributes(&o.label, &o.color, &o.material, &o.description, &path)?;
        if objects.insert(o.key.clone(), attrs).is_some() {
            return Err(invalid(format!("{path}.key"), format_args!("duplicate key {:?}", o.key)));
        }
    }
    let frames = doc
        .frames
        .into_iter()
        .enumerate()
        .map(|(i, f)| convert_frame(f, i))
        .collect::<Result<Vec<_>, _>>()?;
    let mut ground_truth = Vec::new();
    for (i, e) in doc.ground_truth.into_iter().enumerate() {
        let expected_bbox = match &e.expected_bbox {
            Some(b) => Some(bbox(b, &format!("ground_truth[{i}].expected_bbox"))?),
            None => None,
        };
        ground_truth.push(GroundTruthEvent {
            kind: e.kind,
            object_key: e.object_key,
            frame: e.frame,
            deadline: e.deadline,
            expected_bbox,
        });
    }

    let scenario = Scenario {
        name: doc.name,
        rooms,
        supports,
        objects,
        frames,
        ground_truth,
    };
    scenario.validate()?;
    Ok(scenario)
}

pub fn load_scenario_file(path: &Path) -> Result<Scenario, ScenarioError> {
    load_scenario(std::fs::File::open(path)?)
}
