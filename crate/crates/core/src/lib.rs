//! Object-level 3D scene graph with semantic tracking of dynamic objects.
//!
//! Nodes carry four short text attributes (label, color, material,
//! description) and an axis-aligned box. Incoming detections are associated
//! with stored nodes by a weighted attribute similarity, then checked for
//! spatial consistency; the scene update runs in an exploration mode that
//! only adds and refines nodes, and a tracking mode that also resolves
//! identity conflicts and prunes objects that should have been visible.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the HTTP
//! sentence embedder and the scenario harness live in the `lost3dsg` crate.
#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod embeddings;
pub mod footprint;
pub mod geometry;
pub mod graph;
pub mod math;
pub mod similarity;
pub mod tracker;

pub use embeddings::{
    color_to_rgb, word_similarity, EmbedError, EmbedderKind, HashedTrigramEmbedder, RgbColor,
    SentenceEmbedder, VectorError, WordVectorTable,
};
pub use footprint::{object_memory_bytes, voxel_baseline_bytes};
pub use geometry::{
    back_project, bbox_from_points, compute_pov_volume, frustum_contains, is_valid_association,
    CameraIntrinsics, CameraPose, DepthImage, Frustum, GeometryError, PixelMask,
};
pub use graph::{
    infer_hierarchy, AttributeError, BBox3D, BelongingEdge, GraphError, Layer, NodeId, NodeState,
    ObjectNode, RoomRegion, SceneGraph, SemanticAttributes,
};
pub use similarity::{
    chromatic_similarity, component_scores, find_best_match, lsf, BestMatch, Component,
    ComponentScores, ComponentSet, ConfigError, LsfConfig, LsfWeights, Providers,
};
pub use tracker::{
    scene_update, Detection, DetectionGeometry, DetectionOutcome, FrameInput, PersistentScene,
    TrackerConfig, TrackerError, UpdateReport,
};
