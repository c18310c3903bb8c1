//! The scene update loop.
//!
//! Each frame's detections are matched against the persistent objects by
//! attribute similarity. In exploration mode a match only refreshes the
//! stored box. In tracking mode a match must also be spatially consistent;
//! otherwise the old node is moved to the uncertain set and a new node is
//! spawned where the object was just seen. After the detections, tracking
//! mode prunes persistent objects that were inside the camera's visible
//! volume but not observed, and uncertain objects whose stored location is
//! now in view.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::embeddings::EmbedError;
use crate::geometry::{
    self, back_project, bbox_from_points, compute_pov_volume, frustum_contains, CameraIntrinsics,
    CameraPose, DepthImage, Frustum, GeometryError, PixelMask,
};
use crate::graph::{
    support_for, BBox3D, BelongingEdge, GraphError, Layer, NodeId, NodeState, ObjectNode,
    RoomRegion, SceneGraph, SemanticAttributes,
};
use crate::similarity::{find_best_match, lsf, LsfConfig, Providers};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrackerError {
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("node {0} is not a persistent object")]
    NotPersistent(NodeId),
    #[error("invalid frame: {0}")]
    InvalidFrame(String),
    #[error("invalid tracker configuration: {0}")]
    InvalidConfig(&'static str),
}

/// Where a detection is in space: a mask with its depth crop, or a box that
/// was computed upstream.
#[derive(Clone, Debug, PartialEq)]
pub enum DetectionGeometry {
    Masked { mask: PixelMask, depth: DepthImage },
    Box(BBox3D),
}

/// One observed object in a frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Detection {
    pub attributes: SemanticAttributes,
    pub geometry: DetectionGeometry,
}

impl Detection {
    pub fn with_box(attributes: SemanticAttributes, bbox: BBox3D) -> Self {
        Detection {
            attributes,
            geometry: DetectionGeometry::Box(bbox),
        }
    }
}

/// Everything the update needs for one frame. Detections are processed in
/// the listed order.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameInput {
    pub detections: Vec<Detection>,
    pub pose: CameraPose,
    pub intrinsics: CameraIntrinsics,
    /// Forces the mode for this frame only; `None` follows the scene.
    pub mode_override: Option<bool>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackerConfig {
    pub lsf: LsfConfig,
    /// Spatial-consistency radius, meters.
    pub epsilon: f64,
    /// Mode the scene starts in.
    pub exploration: bool,
    pub near: f64,
    pub far: f64,
    pub uncertain_recovery: bool,
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<(), TrackerError> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(TrackerError::InvalidConfig("epsilon must be positive"));
        }
        if !(self.near > 0.0 && self.near < self.far && self.far.is_finite()) {
            return Err(TrackerError::InvalidConfig("need 0 < near < far"));
        }
        Ok(())
    }
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            lsf: LsfConfig::default(),
            epsilon: geometry::DEFAULT_EPSILON,
            exploration: true,
            near: geometry::DEFAULT_NEAR,
            far: geometry::DEFAULT_FAR,
            uncertain_recovery: false,
        }
    }
}

/// What happened to one detection.
#[derive(Clone, Debug, PartialEq)]
pub enum DetectionOutcome {
    /// Geometry produced no usable points.
    Skipped,
    Spawned { id: NodeId, bbox: BBox3D },
    Updated { id: NodeId, bbox: BBox3D, score: f64 },
    /// Semantic match at an inconsistent location: `uncertain` left its old
    /// place and `spawned` was created at `bbox`.
    Relocated {
        uncertain: NodeId,
        spawned: NodeId,
        bbox: BBox3D,
        score: f64,
    },
    Recovered { id: NodeId, bbox: BBox3D, score: f64 },
}

/// Per-frame log of every transition.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct UpdateReport {
    pub frame: u64,
    pub exploration: bool,
    pub spawned: Vec<NodeId>,
    pub updated: Vec<NodeId>,
    pub marked_uncertain: Vec<NodeId>,
    pub pruned_persistent: Vec<NodeId>,
    pub pruned_uncertain: Vec<NodeId>,
    pub recovered: Vec<NodeId>,
    pub seen: BTreeSet<NodeId>,
    /// One entry per detection, in input order.
    pub outcomes: Vec<DetectionOutcome>,
}

/// The tracked scene: graph plus the persistent/uncertain partition of its
/// object nodes. Rooms and supports are static structure and are never
/// tracked or pruned.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PersistentScene {
    graph: SceneGraph,
    persistent: BTreeSet<NodeId>,
    uncertain: BTreeSet<NodeId>,
    /// Frame in which each uncertain node was marked.
    uncertain_since: BTreeMap<NodeId, u64>,
    rooms: Vec<RoomRegion>,
    frame_index: u64,
    next_id: u64,
    tracking_started: bool,
}

impl PersistentScene {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn graph(&self) -> &SceneGraph {
        &self.graph
    }

    pub fn persistent_ids(&self) -> &BTreeSet<NodeId> {
        &self.persistent
    }

    pub fn uncertain_ids(&self) -> &BTreeSet<NodeId> {
        &self.uncertain
    }

    pub fn persistent(&self) -> impl Iterator<Item = &ObjectNode> + '_ {
        self.persistent.iter().filter_map(|id| self.graph.node(*id))
    }

    pub fn uncertain(&self) -> impl Iterator<Item = &ObjectNode> + '_ {
        self.uncertain.iter().filter_map(|id| self.graph.node(*id))
    }

    pub fn node(&self, id: NodeId) -> Option<&ObjectNode> {
        self.graph.node(id)
    }

    pub fn rooms(&self) -> &[RoomRegion] {
        &self.rooms
    }

    /// Number of frames processed so far; also the index of the next frame.
    pub fn frame_index(&self) -> u64 {
        self.frame_index
    }

    /// Whether a frame without override runs in exploration mode.
    pub fn exploring(&self, config: &TrackerConfig) -> bool {
        config.exploration && !self.tracking_started
    }

    fn fresh_id(&mut self) -> NodeId {
        let id = NodeId(self.next_id);
        self.next_id += 1;
        id
    }

    /// Adds a room node whose floor polygon decides which supports belong
    /// to it. Its box spans the polygon's extent at floor height.
    pub fn add_room(
        &mut self,
        label: &str,
        polygon: Vec<[f64; 2]>,
    ) -> Result<NodeId, TrackerError> {
        if polygon.len() < 3 {
            return Err(TrackerError::InvalidFrame(alloc::format!(
                "room {label:?} needs at least 3 polygon vertices"
            )));
        }
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for [x, y] in &polygon {
            lo = [lo[0].min(*x), lo[1].min(*y)];
            hi = [hi[0].max(*x), hi[1].max(*y)];
        }
        let bbox = BBox3D::new([lo[0], lo[1], 0.0], [hi[0], hi[1], 0.0])?;
        let attributes = SemanticAttributes::new(label, "", "", "")
            .map_err(|e| TrackerError::InvalidFrame(alloc::format!("room {label:?}: {e}")))?;
        let id = self.fresh_id();
        self.graph
            .add_node(ObjectNode::new(id, Layer::Room, attributes, bbox))?;
        self.rooms.push(RoomRegion { id, polygon });
        // supports added earlier may fall inside this room
        let supports: Vec<(NodeId, BBox3D)> = self
            .graph
            .nodes_in_layer(Layer::SupportingObject)
            .filter(|s| self.graph.parent_of(s.id).is_none())
            .map(|s| (s.id, s.bbox))
            .collect();
        let region = self.rooms.last().expect("just pushed");
        let inside: Vec<NodeId> = supports
            .into_iter()
            .filter(|(_, b)| {
                let [cx, cy, _] = b.centroid();
                region.contains(cx, cy)
            })
            .map(|(sid, _)| sid)
            .collect();
        for sid in inside {
            self.graph.add_edge(BelongingEdge { child: sid, parent: id })?;
        }
        Ok(id)
    }

    /// Adds a static supporting surface such as a table or shelf.
    pub fn add_support(
        &mut self,
        attributes: SemanticAttributes,
        bbox: BBox3D,
    ) -> Result<NodeId, TrackerError> {
        let id = self.fresh_id();
        let node = ObjectNode::new(id, Layer::SupportingObject, attributes, bbox);
        self.graph.add_node(node)?;
        let [cx, cy, _] = bbox.centroid();
        if let Some(room) = self
            .rooms
            .iter()
            .filter(|r| r.contains(cx, cy))
            .map(|r| r.id)
            .min()
        {
            self.graph.add_edge(BelongingEdge { child: id, parent: room })?;
        }
        Ok(id)
    }

    fn attach_to_support(&mut self, id: NodeId) -> Result<(), TrackerError> {
        self.graph.detach(id);
        let bbox = self.graph.node(id).ok_or(GraphError::UnknownNode(id))?.bbox;
        let supports: Vec<&ObjectNode> = self.graph.nodes_in_layer(Layer::SupportingObject).collect();
        if let Some(parent) = support_for(&bbox, &supports) {
            self.graph.add_edge(BelongingEdge { child: id, parent })?;
        }
        Ok(())
    }

    /// Creates a persistent object node at `bbox`, marks it seen, and links
    /// it to the support it rests on.
    pub fn spawn_object(
        &mut self,
        attributes: SemanticAttributes,
        bbox: BBox3D,
        seen: &mut BTreeSet<NodeId>,
    ) -> Result<NodeId, TrackerError> {
        let id = self.fresh_id();
        let mut node = ObjectNode::new(id, Layer::Object, attributes, bbox);
        node.last_seen_frame = Some(self.frame_index);
        self.graph.add_node(node)?;
        self.persistent.insert(id);
        seen.insert(id);
        self.attach_to_support(id)?;
        Ok(id)
    }

    /// Replaces a persistent node's box with the newest observation.
    pub fn update_bbox(&mut self, id: NodeId, bbox: BBox3D) -> Result<(), TrackerError> {
        if !self.persistent.contains(&id) {
            return Err(TrackerError::NotPersistent(id));
        }
        let frame = self.frame_index;
        let node = self.graph.node_mut(id).ok_or(GraphError::UnknownNode(id))?;
        node.bbox = bbox;
        node.last_seen_frame = Some(frame);
        self.attach_to_support(id)
    }

    /// Moves a persistent node to the uncertain set and drops its edges.
    pub fn mark_uncertain_and_remove(&mut self, id: NodeId) -> Result<(), TrackerError> {
        if !self.persistent.remove(&id) {
            return Err(TrackerError::NotPersistent(id));
        }
        self.uncertain.insert(id);
        self.uncertain_since.insert(id, self.frame_index);
        if let Some(node) = self.graph.node_mut(id) {
            node.state = NodeState::Uncertain;
        }
        self.graph.detach(id);
        Ok(())
    }

    /// Tries to restore an uncertain node for a detection that matched no
    /// persistent object. The best uncertain candidate by similarity must
    /// reach the threshold and lie within `epsilon` of its stored box; it
    /// then returns to the persistent set with its original id and the new
    /// box. Always `None` when recovery is disabled.
    pub fn recover_uncertain(
        &mut self,
        attributes: &SemanticAttributes,
        bbox: BBox3D,
        config: &TrackerConfig,
        providers: &Providers<'_>,
        seen: &mut BTreeSet<NodeId>,
    ) -> Result<Option<(NodeId, f64)>, TrackerError> {
        if !config.uncertain_recovery || self.uncertain.is_empty() {
            return Ok(None);
        }
        let mut best: Option<(NodeId, f64)> = None;
        for id in &self.uncertain {
            let node = self.graph.node(*id).ok_or(GraphError::UnknownNode(*id))?;
            if !geometry::is_valid_association(node, &bbox, config.epsilon) {
                continue;
            }
            let score = lsf(attributes, &node.attributes, &config.lsf, providers)?;
            if score >= config.lsf.tau() && best.is_none_or(|(_, s)| score > s) {
                best = Some((*id, score));
            }
        }
        let Some((id, score)) = best else {
            return Ok(None);
        };
        self.uncertain.remove(&id);
        self.uncertain_since.remove(&id);
        self.persistent.insert(id);
        let frame = self.frame_index;
        let node = self.graph.node_mut(id).ok_or(GraphError::UnknownNode(id))?;
        node.state = NodeState::Persistent;
        node.bbox = bbox;
        node.last_seen_frame = Some(frame);
        self.attach_to_support(id)?;
        seen.insert(id);
        Ok(Some((id, score)))
    }

    /// Removes persistent nodes whose centroid is in view but which were
    /// not seen this frame. Returns the removed ids in ascending order.
    pub fn prune_persistent(&mut self, frustum: &Frustum, seen: &BTreeSet<NodeId>) -> Vec<NodeId> {
        let doomed: Vec<NodeId> = self
            .persistent()
            .filter(|n| !seen.contains(&n.id) && frustum_contains(frustum, &n.bbox))
            .map(|n| n.id)
            .collect();
        for id in &doomed {
            self.persistent.remove(id);
            self.graph.remove_node(*id);
        }
        doomed
    }

    /// Removes uncertain nodes whose stored centroid is in view. Nodes
    /// marked uncertain during the current frame are left for a later
    /// frame.
    pub fn prune_uncertain(&mut self, frustum: &Frustum) -> Vec<NodeId> {
        let now = self.frame_index;
        let doomed: Vec<NodeId> = self
            .uncertain()
            .filter(|n| self.uncertain_since.get(&n.id).is_none_or(|f| *f < now))
            .filter(|n| frustum_contains(frustum, &n.bbox))
            .map(|n| n.id)
            .collect();
        for id in &doomed {
            self.uncertain.remove(id);
            self.uncertain_since.remove(id);
            self.graph.remove_node(*id);
        }
        doomed
    }

    /// Checks the partition and graph invariants.
    pub fn check_invariants(&self) -> Result<(), String> {
        if let Some(id) = self.persistent.intersection(&self.uncertain).next() {
            return Err(alloc::format!("node {id} is both persistent and uncertain"));
        }
        for (set, state) in [
            (&self.persistent, NodeState::Persistent),
            (&self.uncertain, NodeState::Uncertain),
        ] {
            for id in set {
                match self.graph.node(*id) {
                    None => return Err(alloc::format!("node {id} missing from the graph")),
                    Some(n) if n.state != state || n.layer != Layer::Object => {
                        return Err(alloc::format!("node {id} has inconsistent state or layer"))
                    }
                    Some(_) => {}
                }
            }
        }
        for node in self.graph.nodes_in_layer(Layer::Object) {
            if !self.persistent.contains(&node.id) && !self.uncertain.contains(&node.id) {
                return Err(alloc::format!("object node {} is untracked", node.id));
            }
        }
        for id in &self.uncertain {
            if self.graph.parent_of(*id).is_some() {
                return Err(alloc::format!("uncertain node {id} still has a parent"));
            }
        }
        self.graph.check_invariants().map_err(|e| alloc::format!("{e}"))
    }

    /// Rebuilds a scene from a graph, e.g. after import. Object nodes are
    /// sorted into the two sets by their state; ids continue after the
    /// largest one present.
    pub fn from_graph(graph: SceneGraph, rooms: Vec<RoomRegion>, frame_index: u64) -> Self {
        let mut scene = PersistentScene {
            next_id: graph.nodes().map(|n| n.id.0 + 1).max().unwrap_or(0),
            frame_index,
            tracking_started: false,
            ..Default::default()
        };
        for node in graph.nodes_in_layer(Layer::Object) {
            match node.state {
                NodeState::Persistent => scene.persistent.insert(node.id),
                NodeState::Uncertain => {
                    scene.uncertain_since.insert(node.id, 0);
                    scene.uncertain.insert(node.id)
                }
            };
        }
        scene.graph = graph;
        scene.rooms = rooms;
        scene
    }
}

fn resolve_bbox(detection: &Detection, frame: &FrameInput) -> Result<Option<BBox3D>, TrackerError> {
    match &detection.geometry {
        DetectionGeometry::Box(b) => Ok(Some(*b)),
        DetectionGeometry::Masked { mask, depth } => {
            let k = &frame.intrinsics;
            if mask.width() != k.width() || mask.height() != k.height() {
                return Err(TrackerError::InvalidFrame(alloc::format!(
                    "mask is {}x{} but the camera image is {}x{}",
                    mask.width(),
                    mask.height(),
                    k.width(),
                    k.height()
                )));
            }
            let points = back_project(mask, depth, k, &frame.pose)?;
            if points.is_empty() {
                return Ok(None);
            }
            Ok(Some(bbox_from_points(&points)?))
        }
    }
}

/// Runs one frame through the update loop.
///
/// Fails atomically: on any error the scene is left exactly as it was.
/// Within a frame, a persistent node matched by one detection (or spawned or
/// recovered by it) is not offered to later detections.
pub fn scene_update(
    scene: &mut PersistentScene,
    frame: &FrameInput,
    config: &TrackerConfig,
    providers: &Providers<'_>,
) -> Result<UpdateReport, TrackerError> {
    config.validate()?;
    let mut work = scene.clone();
    let report = update_in_place(&mut work, frame, config, providers)?;
    *scene = work;
    Ok(report)
}

fn update_in_place(
    scene: &mut PersistentScene,
    frame: &FrameInput,
    config: &TrackerConfig,
    providers: &Providers<'_>,
) -> Result<UpdateReport, TrackerError> {
    let exploring = frame.mode_override.unwrap_or_else(|| scene.exploring(config));
    let mut report = UpdateReport {
        frame: scene.frame_index,
        exploration: exploring,
        ..Default::default()
    };
    let mut seen = BTreeSet::new();
    let mut claimed = BTreeSet::new();

    for detection in &frame.detections {
        let Some(bbox) = resolve_bbox(detection, frame)? else {
            report.outcomes.push(DetectionOutcome::Skipped);
            continue;
        };
        let attrs = &detection.attributes;
        let best = find_best_match(attrs, scene.persistent(), &config.lsf, providers, &claimed)?;

        let outcome = match best {
            None => {
                if let Some((id, score)) =
                    scene.recover_uncertain(attrs, bbox, config, providers, &mut seen)?
                {
                    report.recovered.push(id);
                    claimed.insert(id);
                    DetectionOutcome::Recovered { id, bbox, score }
                } else {
                    let id = scene.spawn_object(attrs.clone(), bbox, &mut seen)?;
                    report.spawned.push(id);
                    claimed.insert(id);
                    DetectionOutcome::Spawned { id, bbox }
                }
            }
            Some(m) => {
                claimed.insert(m.id);
                let node = scene.node(m.id).ok_or(GraphError::UnknownNode(m.id))?;
                if exploring {
                    scene.update_bbox(m.id, bbox)?;
                    report.updated.push(m.id);
                    DetectionOutcome::Updated { id: m.id, bbox, score: m.score }
                } else if geometry::is_valid_association(node, &bbox, config.epsilon) {
                    scene.update_bbox(m.id, bbox)?;
                    seen.insert(m.id);
                    report.updated.push(m.id);
                    DetectionOutcome::Updated { id: m.id, bbox, score: m.score }
                } else {
                    scene.mark_uncertain_and_remove(m.id)?;
                    report.marked_uncertain.push(m.id);
                    let id = scene.spawn_object(attrs.clone(), bbox, &mut seen)?;
                    report.spawned.push(id);
                    claimed.insert(id);
                    DetectionOutcome::Relocated {
                        uncertain: m.id,
                        spawned: id,
                        bbox,
                        score: m.score,
                    }
                }
            }
        };
        report.outcomes.push(outcome);
    }

    if !exploring {
        let frustum = compute_pov_volume(&frame.pose, &frame.intrinsics, config.near, config.far)?;
        report.pruned_persistent = scene.prune_persistent(&frustum, &seen);
        report.pruned_uncertain = scene.prune_uncertain(&frustum);
        scene.tracking_started = true;
    }
    report.seen = seen;
    scene.frame_index += 1;
    Ok(report)
}
