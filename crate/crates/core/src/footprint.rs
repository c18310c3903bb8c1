//! Object-level memory accounting and the dense per-voxel baseline it is
//! compared against.
//!
//! The budget is fixed regardless of how nodes are stored in memory: two
//! box corners at half precision (12 B), the description capped at 100
//! one-byte characters, and label, color and material capped at 15 each.

use crate::graph::{ObjectNode, SemanticAttributes};

/// Two 3-vectors of 16-bit floats.
pub const BBOX_BYTES: usize = 12;
pub const DESCRIPTION_CAP: usize = 100;
/// Cap shared by label, color and material.
pub const SHORT_FIELD_CAP: usize = 15;
/// Largest possible per-object footprint.
pub const MAX_OBJECT_BYTES: usize = BBOX_BYTES + DESCRIPTION_CAP + 3 * SHORT_FIELD_CAP;

fn capped_chars(s: &str, cap: usize) -> usize {
    s.chars().take(cap).count()
}

/// Attribute bytes only, one byte per character, each field at its cap.
pub fn attribute_bytes(attrs: &SemanticAttributes) -> usize {
    capped_chars(attrs.description(), DESCRIPTION_CAP)
        + capped_chars(attrs.material(), SHORT_FIELD_CAP)
        + capped_chars(attrs.color(), SHORT_FIELD_CAP)
        + capped_chars(attrs.label(), SHORT_FIELD_CAP)
}

/// Bytes needed to store one node: box plus capped attribute text.
pub fn object_memory_bytes(node: &ObjectNode) -> usize {
    BBOX_BYTES + attribute_bytes(&node.attributes)
}

/// Bytes for one embedding per voxel. Saturates instead of wrapping.
pub fn voxel_baseline_bytes(voxel_count: u64, embedding_dim: u64, bytes_per_float: u64) -> u64 {
    voxel_count
        .saturating_mul(embedding_dim)
        .saturating_mul(bytes_per_float)
}
