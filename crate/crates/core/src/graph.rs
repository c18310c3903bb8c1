//! The layered scene graph: rooms, supporting objects and objects, joined by
//! belonging edges between adjacent layers.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::math::Vec3;

/// Default cap on the fine-grained description, in characters.
pub const DEFAULT_MAX_DESCRIPTION: usize = 100;

/// Maximum vertical gap between an object's bottom and a support's top
/// for the object to count as resting on it, meters.
pub const SUPPORT_GAP: f64 = 0.10;

/// Minimum fraction of the object's XY footprint that must overlap a
/// support's footprint.
pub const SUPPORT_OVERLAP_RATIO: f64 = 0.5;

/// Opaque node identifier. Assigned monotonically by the tracker and never
/// reused within a scene.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Hierarchy layer of a node, ordered from the top.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Layer {
    Room,
    SupportingObject,
    Object,
}

impl Layer {
    /// The only layer a node of this layer may belong to.
    pub fn parent(self) -> Option<Layer> {
        match self {
            Layer::Room => None,
            Layer::SupportingObject => Some(Layer::Room),
            Layer::Object => Some(Layer::SupportingObject),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Layer::Room => "room",
            Layer::SupportingObject => "supporting_object",
            Layer::Object => "object",
        }
    }

    pub fn parse(s: &str) -> Option<Layer> {
        match s {
            "room" => Some(Layer::Room),
            "supporting_object" => Some(Layer::SupportingObject),
            "object" => Some(Layer::Object),
            _ => None,
        }
    }
}

/// Lifecycle state of a tracked node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeState {
    Persistent,
    Uncertain,
}

impl NodeState {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeState::Persistent => "persistent",
            NodeState::Uncertain => "uncertain",
        }
    }

    pub fn parse(s: &str) -> Option<NodeState> {
        match s {
            "persistent" => Some(NodeState::Persistent),
            "uncertain" => Some(NodeState::Uncertain),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AttributeError {
    #[error("label must not be empty")]
    EmptyLabel,
    #[error("{field} contains markup or control character {ch:?}")]
    Markup { field: &'static str, ch: char },
    #[error("description has {len} characters, limit is {max}")]
    DescriptionTooLong { len: usize, max: usize },
}

/// The attribute tuple attached to every node: label, color, material and a
/// short free-text description.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SemanticAttributes {
    label: String,
    color: String,
    material: String,
    description: String,
}

impl SemanticAttributes {
    /// Builds an attribute tuple with the default description cap.
    pub fn new(
        label: impl Into<String>,
        color: impl Into<String>,
        material: impl Into<String>,
        description: impl Into<String>,
    ) -> Result<Self, AttributeError> {
        Self::with_description_limit(label, color, material, description, DEFAULT_MAX_DESCRIPTION)
    }

    pub fn with_description_limit(
        label: impl Into<String>,
        color: impl Into<String>,
        material: impl Into<String>,
        description: impl Into<String>,
        max_description: usize,
    ) -> Result<Self, AttributeError> {
        let attrs = SemanticAttributes {
            label: label.into(),
            color: color.into(),
            material: material.into(),
            description: description.into(),
        };
        if attrs.label.trim().is_empty() {
            return Err(AttributeError::EmptyLabel);
        }
        for (field, value) in [
            ("label", &attrs.label),
            ("color", &attrs.color),
            ("material", &attrs.material),
            ("description", &attrs.description),
        ] {
            if let Some(ch) = value.chars().find(|c| is_markup(*c)) {
                return Err(AttributeError::Markup { field, ch });
            }
        }
        let len = attrs.description.chars().count();
        if len > max_description {
            return Err(AttributeError::DescriptionTooLong {
                len,
                max: max_description,
            });
        }
        Ok(attrs)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn color(&self) -> &str {
        &self.color
    }

    pub fn material(&self) -> &str {
        &self.material
    }

    pub fn description(&self) -> &str {
        &self.description
    }
}

fn is_markup(c: char) -> bool {
    c.is_control() || matches!(c, '<' | '>')
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("node {0} already exists")]
    DuplicateId(NodeId),
    #[error("node {0} does not exist")]
    UnknownNode(NodeId),
    #[error("edge {child} -> {parent}: a {child_layer} cannot belong to a {parent_layer}")]
    LayerMismatch {
        child: NodeId,
        parent: NodeId,
        child_layer: &'static str,
        parent_layer: &'static str,
    },
    #[error("node {child} already belongs to {existing}")]
    ParentAlreadySet { child: NodeId, existing: NodeId },
    #[error("invalid bounding box: {0}")]
    InvalidBox(&'static str),
    #[error("node {id} is {found} but was expected to be {expected}")]
    StateMismatch {
        id: NodeId,
        expected: &'static str,
        found: &'static str,
    },
}

/// Axis-aligned 3D box in the world frame, meters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BBox3D {
    min: Vec3,
    max: Vec3,
}

impl BBox3D {
    pub fn new(min: Vec3, max: Vec3) -> Result<Self, GraphError> {
        if min.iter().chain(max.iter()).any(|v| !v.is_finite()) {
            return Err(GraphError::InvalidBox("non-finite coordinate"));
        }
        if (0..3).any(|i| min[i] > max[i]) {
            return Err(GraphError::InvalidBox("min corner exceeds max corner"));
        }
        Ok(BBox3D { min, max })
    }

    /// Box of the given full extents centred on `center`.
    pub fn from_center_size(center: Vec3, size: Vec3) -> Result<Self, GraphError> {
        let half = [size[0] / 2.0, size[1] / 2.0, size[2] / 2.0];
        BBox3D::new(
            [center[0] - half[0], center[1] - half[1], center[2] - half[2]],
            [center[0] + half[0], center[1] + half[1], center[2] + half[2]],
        )
    }

    /// Degenerate box holding a single point.
    pub fn point(p: Vec3) -> Result<Self, GraphError> {
        BBox3D::new(p, p)
    }

    pub fn min(&self) -> Vec3 {
        self.min
    }

    pub fn max(&self) -> Vec3 {
        self.max
    }

    pub fn centroid(&self) -> Vec3 {
        [
            (self.min[0] + self.max[0]) / 2.0,
            (self.min[1] + self.max[1]) / 2.0,
            (self.min[2] + self.max[2]) / 2.0,
        ]
    }

    pub fn size(&self) -> Vec3 {
        [
            self.max[0] - self.min[0],
            self.max[1] - self.min[1],
            self.max[2] - self.min[2],
        ]
    }

    /// Area of the XY projection.
    pub fn footprint_area(&self) -> f64 {
        let s = self.size();
        s[0] * s[1]
    }

    /// Area of the intersection of both XY projections.
    pub fn footprint_overlap(&self, other: &BBox3D) -> f64 {
        let dx = self.max[0].min(other.max[0]) - self.min[0].max(other.min[0]);
        let dy = self.max[1].min(other.max[1]) - self.min[1].max(other.min[1]);
        if dx <= 0.0 || dy <= 0.0 {
            0.0
        } else {
            dx * dy
        }
    }

    /// True when the XY point lies in the closed footprint.
    pub fn footprint_contains(&self, x: f64, y: f64) -> bool {
        x >= self.min[0] && x <= self.max[0] && y >= self.min[1] && y <= self.max[1]
    }

    pub fn contains_point(&self, p: Vec3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    /// Smallest box containing both.
    pub fn union(&self, other: &BBox3D) -> BBox3D {
        BBox3D {
            min: [
                self.min[0].min(other.min[0]),
                self.min[1].min(other.min[1]),
                self.min[2].min(other.min[2]),
            ],
            max: [
                self.max[0].max(other.max[0]),
                self.max[1].max(other.max[1]),
                self.max[2].max(other.max[2]),
            ],
        }
    }
}

/// A node of the scene graph.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectNode {
    pub id: NodeId,
    pub layer: Layer,
    pub attributes: SemanticAttributes,
    pub bbox: BBox3D,
    pub state: NodeState,
    pub last_seen_frame: Option<u64>,
}

impl ObjectNode {
    /// A persistent node that has not been observed yet.
    pub fn new(id: NodeId, layer: Layer, attributes: SemanticAttributes, bbox: BBox3D) -> Self {
        ObjectNode {
            id,
            layer,
            attributes,
            bbox,
            state: NodeState::Persistent,
            last_seen_frame: None,
        }
    }
}

/// `child` belongs to `parent`, one layer up.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BelongingEdge {
    pub child: NodeId,
    pub parent: NodeId,
}

/// Floor polygon of a room, tied to the room's node.
#[derive(Clone, Debug, PartialEq)]
pub struct RoomRegion {
    pub id: NodeId,
    pub polygon: Vec<[f64; 2]>,
}

impl RoomRegion {
    /// Even-odd ray casting. Points exactly on an edge may land either way.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let poly = &self.polygon;
        if poly.len() < 3 {
            return false;
        }
        let mut inside = false;
        let mut j = poly.len() - 1;
        for i in 0..poly.len() {
            let [xi, yi] = poly[i];
            let [xj, yj] = poly[j];
            if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
                inside = !inside;
            }
            j = i;
        }
        inside
    }
}

/// The graph `G = (V, E)`. Nodes are keyed by id, so iteration order is
/// always ascending id; each child maps to at most one parent.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SceneGraph {
    nodes: BTreeMap<NodeId, ObjectNode>,
    parents: BTreeMap<NodeId, NodeId>,
}

impl SceneGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, node: ObjectNode) -> Result<(), GraphError> {
        if self.nodes.contains_key(&node.id) {
            return Err(GraphError::DuplicateId(node.id));
        }
        self.nodes.insert(node.id, node);
        Ok(())
    }

    /// Adds a belonging edge after checking endpoints and layer discipline.
    pub fn add_edge(&mut self, edge: BelongingEdge) -> Result<(), GraphError> {
        let child = self
            .nodes
            .get(&edge.child)
            .ok_or(GraphError::UnknownNode(edge.child))?;
        let parent = self
            .nodes
            .get(&edge.parent)
            .ok_or(GraphError::UnknownNode(edge.parent))?;
        if child.layer.parent() != Some(parent.layer) {
            return Err(GraphError::LayerMismatch {
                child: edge.child,
                parent: edge.parent,
                child_layer: child.layer.as_str(),
                parent_layer: parent.layer.as_str(),
            });
        }
        if let Some(existing) = self.parents.get(&edge.child) {
            return Err(GraphError::ParentAlreadySet {
                child: edge.child,
                existing: *existing,
            });
        }
        self.parents.insert(edge.child, edge.parent);
        Ok(())
    }

    /// Removes a node together with every edge touching it.
    pub fn remove_node(&mut self, id: NodeId) -> Option<ObjectNode> {
        let node = self.nodes.remove(&id)?;
        self.detach(id);
        Some(node)
    }

    /// Drops every edge touching `id`, keeping the node.
    pub fn detach(&mut self, id: NodeId) {
        self.parents.remove(&id);
        self.parents.retain(|_, parent| *parent != id);
    }

    pub fn node(&self, id: NodeId) -> Option<&ObjectNode> {
        self.nodes.get(&id)
    }

    pub(crate) fn node_mut(&mut self, id: NodeId) -> Option<&mut ObjectNode> {
        self.nodes.get_mut(&id)
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    pub fn parent_of(&self, id: NodeId) -> Option<NodeId> {
        self.parents.get(&id).copied()
    }

    /// Nodes in ascending id order.
    pub fn nodes(&self) -> impl Iterator<Item = &ObjectNode> + '_ {
        self.nodes.values()
    }

    pub fn nodes_in_layer(&self, layer: Layer) -> impl Iterator<Item = &ObjectNode> + '_ {
        self.nodes.values().filter(move |n| n.layer == layer)
    }

    /// Edges in ascending child id order.
    pub fn edges(&self) -> impl Iterator<Item = BelongingEdge> + '_ {
        self.parents
            .iter()
            .map(|(&child, &parent)| BelongingEdge { child, parent })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.parents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Re-checks every edge against the node set and the layer rule.
    /// Cycles are impossible once every edge climbs exactly one layer.
    pub fn check_invariants(&self) -> Result<(), GraphError> {
        for edge in self.edges() {
            let child = self
                .nodes
                .get(&edge.child)
                .ok_or(GraphError::UnknownNode(edge.child))?;
            let parent = self
                .nodes
                .get(&edge.parent)
                .ok_or(GraphError::UnknownNode(edge.parent))?;
            if child.layer.parent() != Some(parent.layer) {
                return Err(GraphError::LayerMismatch {
                    child: edge.child,
                    parent: edge.parent,
                    child_layer: child.layer.as_str(),
                    parent_layer: parent.layer.as_str(),
                });
            }
        }
        Ok(())
    }
}

/// Geometric stand-in for the hierarchy extraction step.
///
/// An object belongs to the support that covers at least half of its XY
/// footprint and whose top lies within [`SUPPORT_GAP`] of the object's
/// bottom; among several, the one with the larger overlap area wins, ties
/// going to the smaller id. Objects with a zero-area footprint use centroid
/// containment instead of the ratio. A support belongs to the room whose
/// floor polygon contains its centroid (smallest id on overlap).
pub fn infer_hierarchy(
    objects: &[&ObjectNode],
    supports: &[&ObjectNode],
    rooms: &[RoomRegion],
) -> Vec<BelongingEdge> {
    let mut edges = Vec::new();
    for object in objects {
        if let Some(parent) = support_for(&object.bbox, supports) {
            edges.push(BelongingEdge {
                child: object.id,
                parent,
            });
        }
    }
    for support in supports {
        if let Some(parent) = room_for(&support.bbox, rooms) {
            edges.push(BelongingEdge {
                child: support.id,
                parent,
            });
        }
    }
    edges
}

/// Best supporting parent for a box, following the rule in [`infer_hierarchy`].
pub fn support_for(bbox: &BBox3D, supports: &[&ObjectNode]) -> Option<NodeId> {
    let area = bbox.footprint_area();
    let [cx, cy, _] = bbox.centroid();
    let mut best: Option<(f64, NodeId)> = None;
    for support in supports {
        if libm::fabs(bbox.min()[2] - support.bbox.max()[2]) > SUPPORT_GAP {
            continue;
        }
        let overlap = bbox.footprint_overlap(&support.bbox);
        let qualifies = if area > 0.0 {
            overlap / area >= SUPPORT_OVERLAP_RATIO
        } else {
            support.bbox.footprint_contains(cx, cy)
        };
        if !qualifies {
            continue;
        }
        best = match best {
            Some((o, id)) if o > overlap || (o == overlap && id < support.id) => Some((o, id)),
            _ => Some((overlap, support.id)),
        };
    }
    best.map(|(_, id)| id)
}

fn room_for(bbox: &BBox3D, rooms: &[RoomRegion]) -> Option<NodeId> {
    let [cx, cy, _] = bbox.centroid();
    rooms
        .iter()
        .filter(|r| r.contains(cx, cy))
        .map(|r| r.id)
        .min()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn attrs(label: &str) -> SemanticAttributes {
        SemanticAttributes::new(label, "red", "wood", "a thing").unwrap()
    }

    fn node(id: u64, layer: Layer, min: Vec3, max: Vec3) -> ObjectNode {
        ObjectNode::new(NodeId(id), layer, attrs("thing"), BBox3D::new(min, max).unwrap())
    }

    #[test]
    fn add_node_counts() {
        let mut g = SceneGraph::new();
        g.add_node(node(1, Layer::Object, [0.0; 3], [1.0; 3])).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (1, 0));

        let mut g = SceneGraph::new();
        for i in 0..20 {
            g.add_node(node(i, Layer::Object, [0.0; 3], [1.0; 3])).unwrap();
        }
        g.add_node(node(20, Layer::Object, [0.0; 3], [1.0; 3])).unwrap();
        assert_eq!(g.node_count(), 21);
    }

    #[test]
    fn duplicate_id_is_rejected() {
        let mut g = SceneGraph::new();
        g.add_node(node(7, Layer::Object, [0.0; 3], [1.0; 3])).unwrap();
        let err = g.add_node(node(7, Layer::Object, [0.0; 3], [1.0; 3])).unwrap_err();
        assert_eq!(err, GraphError::DuplicateId(NodeId(7)));
    }

    #[test]
    fn edges_must_climb_one_layer() {
        let mut g = SceneGraph::new();
        g.add_node(node(1, Layer::Room, [0.0; 3], [5.0; 3])).unwrap();
        g.add_node(node(2, Layer::SupportingObject, [0.0; 3], [1.0; 3])).unwrap();
        g.add_node(node(3, Layer::Object, [0.0; 3], [0.1; 3])).unwrap();
        assert!(matches!(
            g.add_edge(BelongingEdge { child: NodeId(3), parent: NodeId(1) }),
            Err(GraphError::LayerMismatch { .. })
        ));
        assert!(matches!(
            g.add_edge(BelongingEdge { child: NodeId(1), parent: NodeId(2) }),
            Err(GraphError::LayerMismatch { .. })
        ));
        g.add_edge(BelongingEdge { child: NodeId(3), parent: NodeId(2) }).unwrap();
        g.add_edge(BelongingEdge { child: NodeId(2), parent: NodeId(1) }).unwrap();
        assert!(matches!(
            g.add_edge(BelongingEdge { child: NodeId(3), parent: NodeId(2) }),
            Err(GraphError::ParentAlreadySet { .. })
        ));
        assert_eq!(
            g.add_edge(BelongingEdge { child: NodeId(9), parent: NodeId(2) }),
            Err(GraphError::UnknownNode(NodeId(9)))
        );
        g.check_invariants().unwrap();

        g.remove_node(NodeId(2));
        assert_eq!(g.edge_count(), 0);
        g.check_invariants().unwrap();
    }

    #[test]
    fn attribute_validation() {
        assert_eq!(
            SemanticAttributes::new("  ", "", "", "").unwrap_err(),
            AttributeError::EmptyLabel
        );
        assert!(matches!(
            SemanticAttributes::new("mug", "<b>red</b>", "", ""),
            Err(AttributeError::Markup { field: "color", .. })
        ));
        let long = "x".repeat(101);
        assert!(matches!(
            SemanticAttributes::new("mug", "", "", long.as_str()),
            Err(AttributeError::DescriptionTooLong { len: 101, max: 100 })
        ));
        assert!(SemanticAttributes::with_description_limit("mug", "", "", long, 200).is_ok());
    }

    #[test]
    fn bbox_validation() {
        assert!(BBox3D::new([1.0, 0.0, 0.0], [0.0, 1.0, 1.0]).is_err());
        assert!(BBox3D::new([f64::NAN, 0.0, 0.0], [0.0, 1.0, 1.0]).is_err());
        let b = BBox3D::point([1.0, 2.0, 3.0]).unwrap();
        assert_eq!(b.centroid(), [1.0, 2.0, 3.0]);
    }

    #[test]
    fn object_on_table_gets_edge() {
        let table = node(1, Layer::SupportingObject, [0.0, 0.0, 0.0], [1.0, 1.0, 0.75]);
        let mug = node(2, Layer::Object, [0.4, 0.4, 0.76], [0.5, 0.5, 0.9]);
        let edges = infer_hierarchy(&[&mug], &[&table], &[]);
        assert_eq!(edges, vec![BelongingEdge { child: NodeId(2), parent: NodeId(1) }]);
    }

    #[test]
    fn floating_object_has_no_parent() {
        let table = node(1, Layer::SupportingObject, [0.0, 0.0, 0.0], [1.0, 1.0, 0.75]);
        let drone = node(2, Layer::Object, [0.4, 0.4, 2.75], [0.5, 0.5, 2.9]);
        assert!(infer_hierarchy(&[&drone], &[&table], &[]).is_empty());
    }

    #[test]
    fn partial_overlap_below_ratio_is_ignored() {
        let table = node(1, Layer::SupportingObject, [0.0, 0.0, 0.0], [1.0, 1.0, 0.75]);
        // 40% of the footprint over the table
        let mug = node(2, Layer::Object, [0.96, 0.0, 0.75], [1.06, 0.1, 0.9]);
        assert!(infer_hierarchy(&[&mug], &[&table], &[]).is_empty());
    }

    #[test]
    fn supports_join_rooms_by_centroid() {
        let table = node(5, Layer::SupportingObject, [1.0, 1.0, 0.0], [2.0, 2.0, 0.75]);
        let kitchen = RoomRegion {
            id: NodeId(1),
            polygon: vec![[0.0, 0.0], [4.0, 0.0], [4.0, 4.0], [0.0, 4.0]],
        };
        let hall = RoomRegion {
            id: NodeId(2),
            polygon: vec![[4.0, 0.0], [8.0, 0.0], [8.0, 4.0], [4.0, 4.0]],
        };
        let edges = infer_hierarchy(&[], &[&table], &[hall, kitchen]);
        assert_eq!(edges, vec![BelongingEdge { child: NodeId(5), parent: NodeId(1) }]);
    }

    #[test]
    fn room_polygon_contains() {
        let l_shape = RoomRegion {
            id: NodeId(1),
            polygon: vec![[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]],
        };
        assert!(l_shape.contains(0.5, 0.5));
        assert!(l_shape.contains(0.5, 1.5));
        assert!(!l_shape.contains(1.5, 1.5));
        assert!(!l_shape.contains(-0.1, 0.5));
    }
}
