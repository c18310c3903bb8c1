//! Reference implementations used as test oracles. They are written from
//! the definitions directly and share no code with the library beyond the
//! plain data types.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use lost3dsg::core::{BBox3D, Detection, DetectionGeometry, FrameInput, NodeId, SemanticAttributes};

pub fn fixture_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn scenario_path(name: &str) -> std::path::PathBuf {
    fixture_dir().join("scenarios").join(name)
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn trigram_embed(text: &str) -> Vec<f64> {
    let chars: Vec<char> = text.trim().to_lowercase().chars().collect();
    let grams: Vec<String> = if chars.len() < 3 {
        vec![chars.iter().collect()]
    } else {
        chars.windows(3).map(|w| w.iter().collect()).collect()
    };
    let mut v = vec![0.0; 256];
    for g in grams {
        v[(fnv1a64(g.as_bytes()) % 256) as usize] += 1.0;
    }
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// Raw vectors file parsed by hand: token -> unit vector, first one wins.
pub struct OracleVectors(pub HashMap<String, Vec<f64>>);

impl OracleVectors {
    pub fn parse(text: &str) -> Self {
        let mut map = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if i == 0 && parts.len() == 2 {
                continue;
            }
            let v: Vec<f64> = parts[1..].iter().map(|x| x.parse().unwrap()).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            map.entry(parts[0].to_lowercase())
                .or_insert_with(|| v.iter().map(|x| x / n).collect());
        }
        OracleVectors(map)
    }

    fn phrase(&self, phrase: &str) -> Option<Vec<f64>> {
        let vs: Vec<&Vec<f64>> = phrase
            .split_whitespace()
            .map(|t| t.trim_matches(|c: char| c.is_ascii_punctuation()).to_lowercase())
            .filter_map(|t| self.0.get(&t))
            .collect();
        if vs.is_empty() {
            return None;
        }
        let dim = vs[0].len();
        let mut mean = vec![0.0; dim];
        for v in &vs {
            for (m, x) in mean.iter_mut().zip(v.iter()) {
                *m += x / vs.len() as f64;
            }
        }
        Some(mean)
    }

    pub fn similarity(&self, a: &str, b: &str) -> f64 {
        match (self.phrase(a), self.phrase(b)) {
            (Some(x), Some(y)) => cosine(&x, &y).clamp(0.0, 1.0),
            _ => f64::from(u8::from(a.trim().to_lowercase() == b.trim().to_lowercase())),
        }
    }
}

/// CSS values of the colors the oracle tests draw from.
pub const ORACLE_COLORS: [(&str, [u8; 3]); 16] = [
    ("red", [255, 0, 0]),
    ("green", [0, 128, 0]),
    ("blue", [0, 0, 255]),
    ("white", [255, 255, 255]),
    ("black", [0, 0, 0]),
    ("gray", [128, 128, 128]),
    ("silver", [192, 192, 192]),
    ("orange", [255, 165, 0]),
    ("yellow", [255, 255, 0]),
    ("purple", [128, 0, 128]),
    ("brown", [165, 42, 42]),
    ("pink", [255, 192, 203]),
    ("navy", [0, 0, 128]),
    ("beige", [245, 245, 220]),
    ("olive", [128, 128, 0]),
    ("maroon", [128, 0, 0]),
];

/// Color phrase of the forms "name" or "name and name"; unknown words are
/// ignored, nothing known gives mid gray.
pub fn oracle_rgb(phrase: &str) -> [f64; 3] {
    let found: Vec<[u8; 3]> = phrase
        .split_whitespace()
        .filter_map(|w| ORACLE_COLORS.iter().find(|(n, _)| *n == w).map(|(_, c)| *c))
        .collect();
    if found.is_empty() {
        return [0.5; 3];
    }
    let mut out = [0.0; 3];
    for c in &found {
        for i in 0..3 {
            out[i] += f64::from(c[i]) / 255.0 / found.len() as f64;
        }
    }
    out
}

pub fn oracle_chromatic(a: [f64; 3], b: [f64; 3]) -> f64 {
    let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
    1.0 - d / 3f64.sqrt()
}

/// Weighted sum over the enabled components, weights rescaled to sum to 1.
pub fn oracle_lsf(
    a: &SemanticAttributes,
    b: &SemanticAttributes,
    weights: [f64; 4],
    enabled: [bool; 4],
    vectors: &OracleVectors,
) -> f64 {
    let scores = [
        vectors.similarity(a.label(), b.label()),
        oracle_chromatic(oracle_rgb(a.color()), oracle_rgb(b.color())),
        vectors.similarity(a.material(), b.material()),
        cosine(&trigram_embed(a.description()), &trigram_embed(b.description())).clamp(0.0, 1.0),
    ];
    let total: f64 = (0..4).filter(|&i| enabled[i]).map(|i| weights[i]).sum();
    (0..4)
        .filter(|&i| enabled[i])
        .map(|i| weights[i] / total * scores[i])
        .sum()
}

pub fn centroid(b: &BBox3D) -> [f64; 3] {
    let (lo, hi) = (b.min(), b.max());
    [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0, (lo[2] + hi[2]) / 2.0]
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Pinhole visibility: the point in camera coordinates lies between the
/// clip planes and inside the image rectangle scaled by depth.
pub fn oracle_in_view(frame: &FrameInput, near: f64, far: f64, p: [f64; 3]) -> bool {
    let r = frame.pose.rotation();
    let t = frame.pose.translation();
    let d = [p[0] - t[0], p[1] - t[1], p[2] - t[2]];
    let c: Vec<f64> = (0..3).map(|j| (0..3).map(|i| r[i][j] * d[i]).sum()).collect();
    let k = &frame.intrinsics;
    let (hw, hh) = (k.width() as f64 / 2.0, k.height() as f64 / 2.0);
    c[2] >= near
        && c[2] <= far
        && c[0].abs() <= c[2] * hw / k.fx()
        && c[1].abs() <= c[2] * hh / k.fy()
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleNode {
    pub attrs: SemanticAttributes,
    pub bbox: BBox3D,
    pub uncertain_since: Option<usize>,
}

pub struct OracleParams<'a> {
    pub weights: [f64; 4],
    pub tau: f64,
    pub epsilon: f64,
    pub near: f64,
    pub far: f64,
    pub vectors: &'a OracleVectors,
}

/// Straight transcription of the scene update loop over box detections:
/// greedy best match per detection with ties to the lowest id, matched
/// nodes unavailable for the rest of the frame, and pruning by centroid
/// visibility in tracking frames. Nodes marked uncertain in a frame are not
/// pruned in that same frame. Returns every live node by id.
pub fn oracle_tracker(
    frames: &[(bool, FrameInput)],
    p: &OracleParams<'_>,
) -> BTreeMap<NodeId, OracleNode> {
    let mut nodes: BTreeMap<NodeId, OracleNode> = BTreeMap::new();
    let mut next = 0u64;
    for (fi, (exploring, frame)) in frames.iter().enumerate() {
        let mut seen = BTreeSet::new();
        let mut claimed = BTreeSet::new();
        for Detection { attributes, geometry } in &frame.detections {
            let DetectionGeometry::Box(bbox) = geometry else {
                panic!("oracle handles box detections only")
            };
            let mut best: Option<(NodeId, f64)> = None;
            for (id, n) in &nodes {
                if n.uncertain_since.is_some() || claimed.contains(id) {
                    continue;
                }
                let s = oracle_lsf(attributes, &n.attrs, p.weights, [true; 4], p.vectors);
                if s >= p.tau && best.is_none_or(|(_, b)| s > b) {
                    best = Some((*id, s));
                }
            }
            let mut spawn = |nodes: &mut BTreeMap<NodeId, OracleNode>| {
                let id = NodeId(next);
                next += 1;
                nodes.insert(
                    id,
                    OracleNode {
                        attrs: attributes.clone(),
                        bbox: *bbox,
                        uncertain_since: None,
                    },
                );
                id
            };
            match best {
                None => {
                    let id = spawn(&mut nodes);
                    seen.insert(id);
                    claimed.insert(id);
                }
                Some((id, _)) => {
                    claimed.insert(id);
                    let old = centroid(&nodes[&id].bbox);
                    if *exploring {
                        nodes.get_mut(&id).unwrap().bbox = *bbox;
                    } else if dist(old, centroid(bbox)) <= p.epsilon {
                        nodes.get_mut(&id).unwrap().bbox = *bbox;
                        seen.insert(id);
                    } else {
                        nodes.get_mut(&id).unwrap().uncertain_since = Some(fi);
                        let new = spawn(&mut nodes);
                        seen.insert(new);
                        claimed.insert(new);
                    }
                }
            }
        }
        if !*exploring {
            nodes.retain(|id, n| {
                let visible = oracle_in_view(frame, p.near, p.far, centroid(&n.bbox));
                match n.uncertain_since {
                    None => !(visible && !seen.contains(id)),
                    Some(f) => !(visible && f < fi),
                }
            });
        }
    }
    nodes
}
