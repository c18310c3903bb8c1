//! JSON export and import of scene graphs.
//!
//! The writer is hand-rolled so that key order and number formatting are
//! fixed: keys sorted, floats with six decimals, nodes sorted by id, edges
//! sorted by child id. Import accepts exactly that shape.

use std::fmt::Write;

use lost3dsg_core::{
    AttributeError, BBox3D, BelongingEdge, GraphError, Layer, NodeId, NodeState, ObjectNode,
    SceneGraph, SemanticAttributes,
};
use serde::Deserialize;

#[derive(Debug, thiserror::Error)]
pub enum ImportError {
    #[error("{path}: {message}")]
    Json { path: String, message: String },
    #[error("node {id}: unknown layer {value:?}")]
    Layer { id: u64, value: String },
    #[error("node {id}: unknown state {value:?}")]
    State { id: u64, value: String },
    #[error("node {id}: {source}")]
    Attributes { id: u64, source: AttributeError },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn quote(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

fn vec3(v: [f64; 3]) -> String {
    format!("[{:.6}, {:.6}, {:.6}]", v[0], v[1], v[2])
}

/// Serializes the graph. Exporting the same graph twice gives identical
/// bytes.
pub fn export_graph(graph: &SceneGraph) -> String {
    let mut out = String::from("{\n  \"edges\": [");
    let edges: Vec<BelongingEdge> = graph.edges().collect();
    for (i, e) in edges.iter().enumerate() {
        out.push_str(if i == 0 { "\n" } else { ",\n" });
        let _ = write!(out, "    {{\"child\": {}, \"parent\": {}}}", e.child.0, e.parent.0);
    }
    out.push_str(if edges.is_empty() { "],\n" } else { "\n  ],\n" });

    out.push_str("  \"nodes\": [");
    let mut first = true;
    for n in graph.nodes() {
        out.push_str(if first { "\n" } else { ",\n" });
        first = false;
        let a = &n.attributes;
        let seen = n
            .last_seen_frame
            .map_or_else(|| "null".to_string(), |f| f.to_string());
        let _ = write!(
            out,
            "    {{\n      \"bbox\": {{\"max\": {}, \"min\": {}}},\n      \"color\": {},\n      \"description\": {},\n      \"id\": {},\n      \"label\": {},\n      \"last_seen_frame\": {},\n      \"layer\": {},\n      \"material\": {},\n      \"state\": {}\n    }}",
            vec3(n.bbox.max()),
            vec3(n.bbox.min()),
            quote(a.color()),
            quote(a.description()),
            n.id.0,
            quote(a.label()),
            seen,
            quote(n.layer.as_str()),
            quote(a.material()),
            quote(n.state.as_str()),
        );
    }
    out.push_str(if first { "]\n}\n" } else { "\n  ]\n}\n" });
    out
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphDoc {
    nodes: Vec<NodeDoc>,
    edges: Vec<EdgeDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    id: u64,
    layer: String,
    label: String,
    color: String,
    material: String,
    description: String,
    bbox: BoxDoc,
    state: String,
    #[serde(default)]
    last_seen_frame: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct BoxDoc {
    pub(crate) min: [f64; 3],
    pub(crate) max: [f64; 3],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    child: u64,
    parent: u64,
}

/// Parses an exported document back into a graph, re-checking every graph
/// invariant.
pub fn import_graph(text: &str) -> Result<SceneGraph, ImportError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: GraphDoc = serde_path_to_error::deserialize(de).map_err(|e| ImportError::Json {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;

    let mut graph = SceneGraph::new();
    for n in doc.nodes {
        let layer = Layer::parse(&n.layer).ok_or_else(|| ImportError::Layer {
            id: n.id,
            value: n.layer.clone(),
        })?;
        let state = NodeState::parse(&n.state).ok_or_else(|| ImportError::State {
            id: n.id,
            value: n.state.clone(),
        })?;
        let attributes = SemanticAttributes::new(&n.label, &n.color, &n.material, &n.description)
            .map_err(|source| ImportError::Attributes { id: n.id, source })?;
        let mut node = ObjectNode::new(
            NodeId(n.id),
            layer,
            attributes,
            BBox3D::new(n.bbox.min, n.bbox.max)?,
        );
        node.state = state;
        node.last_seen_frame = n.last_seen_frame;
        graph.add_node(node)?;
    }
    for e in doc.edges {
        graph.add_edge(BelongingEdge {
            child: NodeId(e.child),
            parent: NodeId(e.parent),
        })?;
    }
    graph.check_invariants()?;
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_graph() {
        let text = export_graph(&SceneGraph::new());
        assert_eq!(text, "{\n  \"edges\": [],\n  \"nodes\": []\n}\n");
        assert_eq!(import_graph(&text).unwrap(), SceneGraph::new());
    }

    #[test]
    fn keys_are_sorted() {
        let mut g = SceneGraph::new();
        let attrs = SemanticAttributes::new("mug", "white", "ceramic", "a \"tall\" mug").unwrap();
        let bbox = BBox3D::new([0.0, 0.0, 0.0], [0.1, 0.1, 0.125]).unwrap();
        g.add_node(ObjectNode::new(NodeId(4), Layer::Object, attrs, bbox)).unwrap();
        let text = export_graph(&g);
        let keys = [
            "\"bbox\"", "\"color\"", "\"description\"", "\"id\"", "\"label\"",
            "\"last_seen_frame\"", "\"layer\"", "\"material\"", "\"state\"",
        ];
        let positions: Vec<usize> = keys.iter().map(|k| text.find(k).unwrap()).collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]), "{text}");
        assert!(text.find("\"edges\"").unwrap() < text.find("\"nodes\"").unwrap());
        assert!(text.contains("[0.100000, 0.100000, 0.125000]"));
        assert!(text.contains(r#""description": "a \"tall\" mug""#));
    }

    #[test]
    fn rejects_unknown_fields_with_path() {
        let err = import_graph(r#"{"edges": [], "nodes": [], "extra": 1}"#).unwrap_err();
        assert!(err.to_string().contains("extra"), "{err}");
        let err = import_graph(r#"{"edges": [{"child": 1, "parent": "x"}], "nodes": []}"#).unwrap_err();
        assert!(err.to_string().starts_with("edges[0].parent"), "{err}");
    }
}
