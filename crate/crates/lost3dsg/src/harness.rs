//! Scenario replay, scoring, the LSF ablation grid and the memory report.
//!
//! Scoring reuses the tracker's own similarity: a node matches a
//! ground-truth object when the LSF over all four components (with the
//! run's weights and threshold) reaches the threshold and, when the event
//! gives a location, the node's centroid lies within epsilon of it. Ablated
//! runs are scored the same way, so only the tracking changes between rows.
//!
//! * `exists`: some persistent node matches.
//! * `moved`: a persistent node matches at the new location and none
//!   matches at the object's previous location (the last earlier event for
//!   the same key that carries a box).
//! * `removed`: no persistent or uncertain node matches.
//!
//! Events are scored right after their deadline frame is processed.

use lost3dsg_core::footprint::object_memory_bytes;
use lost3dsg_core::math::distance;
use lost3dsg_core::{
    lsf, scene_update, voxel_baseline_bytes, BBox3D, ComponentSet, EmbedError, Layer, NodeId,
    DetectionOutcome, ObjectNode, PersistentScene, Providers, SemanticAttributes, TrackerConfig, TrackerError,
    UpdateReport,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::Serialize;

use crate::scenario::{EventKind, Scenario, ScenarioError};

/// Embedding width and float size of the per-voxel baseline.
pub const CLIP_EMBEDDING_DIM: u64 = 512;
pub const BASELINE_BYTES_PER_FLOAT: u64 = 2;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("frame {frame}: {source}")]
    Tracker { frame: usize, source: TrackerError },
    #[error("scoring: {0}")]
    Embed(#[from] EmbedError),
    #[error("{0}")]
    EmptyInput(&'static str),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub achieved: usize,
    pub expected: usize,
}

impl Tally {
    fn record(&mut self, achieved: bool) {
        self.expected += 1;
        self.achieved += usize::from(achieved);
    }

    /// `None` when nothing was expected.
    pub fn rate(&self) -> Option<f64> {
        (self.expected > 0).then(|| self.achieved as f64 / self.expected as f64)
    }
}

impl std::fmt::Display for Tally {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.achieved, self.expected)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EventOutcome {
    /// Position in the scenario's ground-truth list.
    pub index: usize,
    pub kind: EventKind,
    pub object_key: String,
    pub frame: usize,
    pub scored_at: usize,
    pub achieved: bool,
    /// Node that satisfied (exists, moved) or violated (removed) the event.
    pub node: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MetricsReport {
    pub detections: Tally,
    pub deletions: Tally,
    pub updates: Tally,
    pub events: Vec<EventOutcome>,
}

impl MetricsReport {
    /// Pretty JSON with sorted keys.
    pub fn to_json(&self) -> String {
        sorted_json(self)
    }
}

pub(crate) fn sorted_json<T: Serialize>(value: &T) -> String {
    let value = serde_json::to_value(value).expect("report types serialize");
    let mut s = serde_json::to_string_pretty(&value).expect("values serialize");
    s.push('\n');
    s
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ReplayOptions {
    /// Shuffles the detection order inside every frame.
    pub shuffle_seed: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct Replay {
    pub scene: PersistentScene,
    pub metrics: MetricsReport,
    pub reports: Vec<UpdateReport>,
    /// Earliest state holding the most object nodes.
    pub peak: PersistentScene,
}

pub fn replay(
    scenario: &Scenario,
    config: &TrackerConfig,
    providers: &Providers<'_>,
) -> Result<Replay, HarnessError> {
    replay_with(scenario, config, providers, ReplayOptions::default())
}

pub fn replay_with(
    scenario: &Scenario,
    config: &TrackerConfig,
    providers: &Providers<'_>,
    options: ReplayOptions,
) -> Result<Replay, HarnessError> {
    scenario.validate()?;
    let mut scene = scenario
        .initial_scene()
        .map_err(|source| HarnessError::Tracker { frame: 0, source })?;
    let mut rng = options.shuffle_seed.map(rand::rngs::StdRng::seed_from_u64);
    let mut peak = scene.clone();
    let mut reports = Vec::with_capacity(scenario.frames.len());
    let mut outcomes: Vec<Option<EventOutcome>> = vec![None; scenario.ground_truth.len()];

    for (i, frame) in scenario.frames.iter().enumerate() {
        let report = match rng.as_mut() {
            Some(rng) => {
                let mut input = frame.input.clone();
                input.detections.shuffle(rng);
                scene_update(&mut scene, &input, config, providers)
            }
            None => scene_update(&mut scene, &frame.input, config, providers),
        }
        .map_err(|source| HarnessError::Tracker { frame: i, source })?;
        reports.push(report);
        if object_count(&scene) > object_count(&peak) {
            peak = scene.clone();
        }
        for (idx, e) in scenario.ground_truth.iter().enumerate() {
            if e.scored_at() == i {
                outcomes[idx] = Some(score_event(scenario, idx, &scene, config, providers)?);
            }
        }
    }

    let mut metrics = MetricsReport::default();
    for outcome in outcomes.into_iter().flatten() {
        match outcome.kind {
            EventKind::Exists => metrics.detections.record(outcome.achieved),
            EventKind::Removed => metrics.deletions.record(outcome.achieved),
            EventKind::Moved => metrics.updates.record(outcome.achieved),
        }
        metrics.events.push(outcome);
    }
    Ok(Replay {
        scene,
        metrics,
        reports,
        peak,
    })
}

fn object_count(scene: &PersistentScene) -> usize {
    scene.graph().nodes_in_layer(Layer::Object).count()
}

/// Best-scoring node among `candidates` that matches `attrs` (and lies
/// within epsilon of `near` when given). Ties go to the smaller id.
fn best_match<'a>(
    attrs: &SemanticAttributes,
    near: Option<&BBox3D>,
    candidates: impl Iterator<Item = &'a ObjectNode>,
    config: &TrackerConfig,
    providers: &Providers<'_>,
) -> Result<Option<NodeId>, EmbedError> {
    let scoring = config.lsf.with_components(ComponentSet::FULL);
    let mut best: Option<(NodeId, f64)> = None;
    for node in candidates {
        if let Some(b) = near {
            if distance(node.bbox.centroid(), b.centroid()) > config.epsilon {
                continue;
            }
        }
        let score = lsf(attrs, &node.attributes, &scoring, providers)?;
        if score >= scoring.tau() && best.is_none_or(|(_, s)| score > s) {
            best = Some((node.id, score));
        }
    }
    Ok(best.map(|(id, _)| id))
}

/// Scores one ground-truth event against a scene state.
pub fn score_event(
    scenario: &Scenario,
    index: usize,
    scene: &PersistentScene,
    config: &TrackerConfig,
    providers: &Providers<'_>,
) -> Result<EventOutcome, HarnessError> {
    let event = &scenario.ground_truth[index];
    let attrs = &scenario.objects[&event.object_key];
    let expected = event.expected_bbox.as_ref();
    let (achieved, node) = match event.kind {
        EventKind::Exists => {
            let m = best_match(attrs, expected, scene.persistent(), config, providers)?;
            (m.is_some(), m)
        }
        EventKind::Moved => {
            let m = best_match(attrs, expected, scene.persistent(), config, providers)?;
            let previous = scenario.ground_truth[..index]
                .iter()
                .rev()
                .filter(|p| p.object_key == event.object_key)
                .find_map(|p| p.expected_bbox.as_ref());
            let stale = match previous {
                Some(old) => {
                    best_match(attrs, Some(old), scene.persistent(), config, providers)?
                        .filter(|id| Some(*id) != m)
                }
                None => None,
            };
            (m.is_some() && stale.is_none(), m)
        }
        EventKind::Removed => {
            let left = best_match(
                attrs,
                expected,
                scene.persistent().chain(scene.uncertain()),
                config,
                providers,
            )?;
            (left.is_none(), left)
        }
    };
    Ok(EventOutcome {
        index,
        kind: event.kind,
        object_key: event.object_key.clone(),
        frame: event.frame,
        scored_at: event.scored_at(),
        achieved,
        node: node.map(|n| n.0),
    })
}

/// The six component subsets of the published ablation, in its order:
/// full, {d,m,c}, {l,m,c}, {l,d}, {d}, {l}.
pub fn paper_subsets() -> Vec<ComponentSet> {
    use lost3dsg_core::Component::*;
    let set = |c: &[_]| ComponentSet::new(c.iter().copied()).expect("non-empty");
    vec![
        ComponentSet::FULL,
        set(&[Description, Material, Color]),
        set(&[Label, Material, Color]),
        set(&[Label, Description]),
        set(&[Description]),
        set(&[Label]),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AblationRow {
    #[serde(serialize_with = "display")]
    pub components: ComponentSet,
    /// Mean over scenarios that expect at least one event of the kind;
    /// `None` when no scenario does.
    pub deletion_rate: Option<f64>,
    pub update_rate: Option<f64>,
    pub detection_rate: Option<f64>,
}

fn display<S: serde::Serializer>(v: &ComponentSet, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

fn mean(rates: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let present: Vec<f64> = rates.flatten().collect();
    (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64)
}

/// One row per subset, in input order. Each subset replays every scenario
/// with the tracker restricted to those components.
pub fn run_ablation(
    scenarios: &[Scenario],
    subsets: &[ComponentSet],
    config: &TrackerConfig,
    providers: &Providers<'_>,
) -> Result<Vec<AblationRow>, HarnessError> {
    run_ablation_with(scenarios, subsets, config, providers, ReplayOptions::default())
}

pub fn run_ablation_with(
    scenarios: &[Scenario],
    subsets: &[ComponentSet],
    config: &TrackerConfig,
    providers: &Providers<'_>,
    options: ReplayOptions,
) -> Result<Vec<AblationRow>, HarnessError> {
    if scenarios.is_empty() {
        return Err(HarnessError::EmptyInput("no scenarios to ablate"));
    }
    if subsets.is_empty() {
        return Err(HarnessError::EmptyInput("no component subsets given"));
    }
    let mut rows = Vec::with_capacity(subsets.len());
    for &components in subsets {
        let cfg = TrackerConfig {
            lsf: config.lsf.with_components(components),
            ..*config
        };
        let mut metrics = Vec::with_capacity(scenarios.len());
        for s in scenarios {
            metrics.push(replay_with(s, &cfg, providers, options)?.metrics);
        }
        rows.push(AblationRow {
            components,
            deletion_rate: mean(metrics.iter().map(|m| m.deletions.rate())),
            update_rate: mean(metrics.iter().map(|m| m.updates.rate())),
            detection_rate: mean(metrics.iter().map(|m| m.detections.rate())),
        });
    }
    Ok(rows)
}

pub fn ablation_json(rows: &[AblationRow]) -> String {
    sorted_json(&rows)
}

/// Aligned plain-text table of the rows.
pub fn ablation_table(rows: &[AblationRow]) -> String {
    let fmt = |r: Option<f64>| r.map_or_else(|| "n/a".to_string(), |v| format!("{v:.3}"));
    let width = rows
        .iter()
        .map(|r| r.components.to_string().len())
        .chain(["components".len()])
        .max()
        .unwrap_or(0);
    let mut out = format!("{:<width$}  {:>9}  {:>7}  {:>10}\n", "components", "deletions", "updates", "detections");
    for r in rows {
        out.push_str(&format!(
            "{:<width$}  {:>9}  {:>7}  {:>10}\n",
            r.components.to_string(),
            fmt(r.deletion_rate),
            fmt(r.update_rate),
            fmt(r.detection_rate),
        ));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MemoryReport {
    pub object_count: usize,
    pub object_bytes: u64,
    pub voxel_count: u64,
    pub embedding_dim: u64,
    pub bytes_per_float: u64,
    pub voxel_bytes: u64,
    /// voxel_bytes / object_bytes; `None` for an empty scene.
    pub reduction: Option<f64>,
}

impl MemoryReport {
    pub fn to_json(&self) -> String {
        sorted_json(self)
    }
}

/// Compares the object-level storage of every object node (persistent or
/// uncertain) against one embedding per voxel.
pub fn memory_report(
    scene: &PersistentScene,
    voxel_count: u64,
    embedding_dim: u64,
    bytes_per_float: u64,
) -> MemoryReport {
    let objects: Vec<&ObjectNode> = scene.graph().nodes_in_layer(Layer::Object).collect();
    let object_bytes: u64 = objects.iter().map(|n| object_memory_bytes(n) as u64).sum();
    let voxel_bytes = voxel_baseline_bytes(voxel_count, embedding_dim, bytes_per_float);
    MemoryReport {
        object_count: objects.len(),
        object_bytes,
        voxel_count,
        embedding_dim,
        bytes_per_float,
        voxel_bytes,
        reduction: (object_bytes > 0).then(|| voxel_bytes as f64 / object_bytes as f64),
    }
}

/// Union of every node box in the scene, rooms included.
pub fn scene_bounds(scene: &PersistentScene) -> Option<BBox3D> {
    scene.graph().nodes().map(|n| n.bbox).reduce(|a, b| a.union(&b))
}

/// Voxels of side `resolution` needed to cover `bounds`; each axis is
/// rounded up and counts at least one voxel.
pub fn voxel_count(bounds: &BBox3D, resolution: f64) -> u64 {
    let size = bounds.size();
    size.iter()
        .map(|&d| ((d / resolution - 1e-9).ceil().max(1.0)) as u64)
        .product()
}

fn bbox_value(b: &BBox3D) -> serde_json::Value {
    serde_json::json!({ "min": b.min(), "max": b.max() })
}

fn outcome_value(o: &DetectionOutcome) -> serde_json::Value {
    use serde_json::json;
    match o {
        DetectionOutcome::Skipped => json!({ "kind": "skipped" }),
        DetectionOutcome::Spawned { id, bbox } => {
            json!({ "kind": "spawned", "id": id.0, "bbox": bbox_value(bbox) })
        }
        DetectionOutcome::Updated { id, bbox, score } => {
            json!({ "kind": "updated", "id": id.0, "bbox": bbox_value(bbox), "score": score })
        }
        DetectionOutcome::Relocated {
            uncertain,
            spawned,
            bbox,
            score,
        } => json!({
            "kind": "relocated",
            "uncertain": uncertain.0,
            "spawned": spawned.0,
            "bbox": bbox_value(bbox),
            "score": score,
        }),
        DetectionOutcome::Recovered { id, bbox, score } => {
            json!({ "kind": "recovered", "id": id.0, "bbox": bbox_value(bbox), "score": score })
        }
    }
}

/// The per-frame update log as pretty JSON with sorted keys.
pub fn reports_json(reports: &[UpdateReport]) -> String {
    let ids = |v: &[NodeId]| v.iter().map(|i| i.0).collect::<Vec<_>>();
    let frames: Vec<serde_json::Value> = reports
        .iter()
        .map(|r| {
            serde_json::json!({
                "frame": r.frame,
                "exploration": r.exploration,
                "spawned": ids(&r.spawned),
                "updated": ids(&r.updated),
                "marked_uncertain": ids(&r.marked_uncertain),
                "pruned_persistent": ids(&r.pruned_persistent),
                "pruned_uncertain": ids(&r.pruned_uncertain),
                "recovered": ids(&r.recovered),
                "seen": r.seen.iter().map(|i| i.0).collect::<Vec<_>>(),
                "outcomes": r.outcomes.iter().map(outcome_value).collect::<Vec<_>>(),
            })
        })
        .collect();
    sorted_json(&frames)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tally_rates() {
        let t = Tally { achieved: 2, expected: 3 };
        assert_eq!(t.to_string(), "2/3");
        assert!((t.rate().unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(Tally::default().rate(), None);
    }

    #[test]
    fn unit_cube_voxels() {
        let b = BBox3D::new([0.0; 3], [1.0; 3]).unwrap();
        assert_eq!(voxel_count(&b, 0.025), 64_000);
        let flat = BBox3D::new([0.0; 3], [1.0, 1.0, 0.0]).unwrap();
        assert_eq!(voxel_count(&flat, 0.5), 4);
    }

    #[test]
    fn mean_skips_missing() {
        assert_eq!(mean([Some(1.0), None, Some(0.5)].into_iter()), Some(0.75));
        assert_eq!(mean([None, None].into_iter()), None);
    }

    #[test]
    fn paper_subset_order() {
        let names: Vec<String> = paper_subsets().iter().map(|s| s.to_string()).collect();
        assert_eq!(
            names,
            ["full", "color,material,description", "label,color,material", "label,description", "description", "label"]
        );
    }
}
