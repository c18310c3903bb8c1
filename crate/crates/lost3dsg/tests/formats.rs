mod common;

use common::{trigram_embed, OracleVectors};
use lost3dsg::core::{
    BBox3D, BelongingEdge, HashedTrigramEmbedder, Layer, NodeId, NodeState, ObjectNode, SceneGraph,
    SemanticAttributes, SentenceEmbedder,
};
use lost3dsg::export::{export_graph, import_graph, ImportError};
use lost3dsg::vectors::{bundled_word_vectors, load_word_vectors, LoadVectorsError, BUNDLED_VECTORS};
use proptest::prelude::*;

#[test]
fn bundled_vectors_match_the_raw_file() {
    let table = bundled_word_vectors();
    let oracle = OracleVectors::parse(BUNDLED_VECTORS);
    assert_eq!(table.len(), oracle.0.len());
    for (token, v) in &oracle.0 {
        let got = table.get(token).unwrap();
        assert!(got.iter().zip(v).all(|(a, b)| (a - b).abs() < 1e-12), "{token}");
    }
}

#[test]
fn vector_loader_reports_bad_lines() {
    let err = load_word_vectors("a 1 0\nb 1\n".as_bytes()).unwrap_err();
    assert!(matches!(err, LoadVectorsError::Format(_)));
    assert!(err.to_string().contains("line 2"), "{err}");
}

#[test]
fn trigram_embedder_matches_oracle() {
    for text in ["a", "ab", "abc", "  Red Ceramic MUG ", "claw hammer with a red wooden handle", "tête à tête"] {
        let got = HashedTrigramEmbedder.embed(text).unwrap();
        let want = trigram_embed(text);
        assert_eq!(got.len(), 256);
        assert!(got.iter().zip(&want).all(|(a, b)| (a - b).abs() < 1e-12), "{text}");
    }
}

fn leaf(id: u64, layer: Layer, bbox: BBox3D) -> ObjectNode {
    ObjectNode::new(NodeId(id), layer, SemanticAttributes::new("x", "", "", "").unwrap(), bbox)
}

#[test]
fn import_rejects_layer_violations() {
    let mut g = SceneGraph::new();
    let b = BBox3D::new([0.0; 3], [1.0; 3]).unwrap();
    g.add_node(leaf(0, Layer::Room, b)).unwrap();
    g.add_node(leaf(1, Layer::SupportingObject, b)).unwrap();
    g.add_edge(BelongingEdge { child: NodeId(1), parent: NodeId(0) }).unwrap();
    let text = export_graph(&g);
    assert_eq!(import_graph(&text).unwrap(), g);
    let broken = text.replace("\"layer\": \"supporting_object\"", "\"layer\": \"object\"");
    assert!(matches!(import_graph(&broken), Err(ImportError::Graph(_))));
    let broken = text.replace("\"layer\": \"supporting_object\"", "\"layer\": \"shelf\"");
    assert!(matches!(import_graph(&broken), Err(ImportError::Layer { .. })));
}

fn grid() -> impl Strategy<Value = f64> {
    (-5_000_000i64..5_000_000).prop_map(|n| n as f64 * 1e-6)
}

fn word() -> impl Strategy<Value = String> {
    "[a-z][a-z ]{0,14}".prop_map(|s| s.trim_end().to_string())
}

fn node_strategy() -> impl Strategy<Value = (SemanticAttributes, [f64; 3], [f64; 3], bool, Option<u64>)> {
    (
        (word(), word(), word(), "[ -;=?-~é]{0,100}"),
        [grid(), grid(), grid()],
        [0u32..2_000_000, 0u32..2_000_000, 0u32..2_000_000],
        any::<bool>(),
        proptest::option::of(0u64..1000),
    )
        .prop_map(|((l, c, m, d), min, ext, uncertain, seen)| {
            let max = [0, 1, 2].map(|i| min[i] + ext[i] as f64 * 1e-6);
            (SemanticAttributes::new(&l, &c, &m, &d).unwrap(), min, max, uncertain, seen)
        })
}

proptest! {
    #[test]
    fn export_round_trips(nodes in proptest::collection::vec(node_strategy(), 0..8)) {
        let mut g = SceneGraph::new();
        let room = BBox3D::new([-10.0; 3], [10.0; 3]).unwrap();
        g.add_node(leaf(0, Layer::Room, room)).unwrap();
        g.add_node(leaf(1, Layer::SupportingObject, room)).unwrap();
        g.add_edge(BelongingEdge { child: NodeId(1), parent: NodeId(0) }).unwrap();
        for (i, (attrs, min, max, uncertain, seen)) in nodes.into_iter().enumerate() {
            let id = NodeId(i as u64 + 2);
            let mut n = ObjectNode::new(id, Layer::Object, attrs, BBox3D::new(min, max).unwrap());
            n.last_seen_frame = seen;
            if uncertain {
                n.state = NodeState::Uncertain;
                g.add_node(n).unwrap();
            } else {
                g.add_node(n).unwrap();
                g.add_edge(BelongingEdge { child: id, parent: NodeId(1) }).unwrap();
            }
        }
        let text = export_graph(&g);
        let back = import_graph(&text).unwrap();
        prop_assert_eq!(export_graph(&back), text.clone());
        for (a, b) in g.nodes().zip(back.nodes()) {
            prop_assert_eq!(&a.attributes, &b.attributes);
            prop_assert_eq!((a.id, a.layer, a.state, a.last_seen_frame), (b.id, b.layer, b.state, b.last_seen_frame));
            for k in 0..3 {
                prop_assert!((a.bbox.min()[k] - b.bbox.min()[k]).abs() <= 1e-6);
                prop_assert!((a.bbox.max()[k] - b.bbox.max()[k]).abs() <= 1e-6);
            }
        }
        prop_assert_eq!(g.edges().collect::<Vec<_>>(), back.edges().collect::<Vec<_>>());
    }
}
