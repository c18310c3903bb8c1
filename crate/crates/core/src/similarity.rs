//! Attribute-level similarity between two observations: four component
//! scores (label, color, material, description) blended with fixed weights,
//! and the thresholded best-match search used for data association.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::fmt;

use crate::embeddings::{
    color_to_rgb, word_similarity, EmbedError, RgbColor, SentenceEmbedder, WordVectorTable,
};
use crate::graph::{NodeId, ObjectNode, SemanticAttributes};
use crate::math;

/// Default association threshold.
pub const DEFAULT_TAU: f64 = 0.75;

const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("weight {name} = {value} is outside [0, 1]")]
    WeightOutOfRange { name: &'static str, value: f64 },
    #[error("weights sum to {0}, expected 1")]
    WeightSum(f64),
    #[error("at least one similarity component must be enabled")]
    NoComponents,
    #[error("threshold tau = {0} is outside [0, 1]")]
    Tau(f64),
    #[error("unknown similarity component {0:?}")]
    UnknownComponent(alloc::string::String),
}

/// Blend weights for label, color, material and description.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LsfWeights {
    alpha: f64,
    beta: f64,
    gamma: f64,
    delta: f64,
}

impl LsfWeights {
    /// 0.15 label, 0.30 color, 0.15 material, 0.40 description.
    pub const DEFAULT: LsfWeights = LsfWeights {
        alpha: 0.15,
        beta: 0.30,
        gamma: 0.15,
        delta: 0.40,
    };

    pub fn new(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Result<Self, ConfigError> {
        for (name, value) in [("alpha", alpha), ("beta", beta), ("gamma", gamma), ("delta", delta)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ConfigError::WeightOutOfRange { name, value });
            }
        }
        let sum = alpha + beta + gamma + delta;
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(ConfigError::WeightSum(sum));
        }
        Ok(LsfWeights {
            alpha,
            beta,
            gamma,
            delta,
        })
    }

    pub fn get(&self, component: Component) -> f64 {
        match component {
            Component::Label => self.alpha,
            Component::Color => self.beta,
            Component::Material => self.gamma,
            Component::Description => self.delta,
        }
    }

    pub fn sum(&self) -> f64 {
        self.alpha + self.beta + self.gamma + self.delta
    }
}

impl Default for LsfWeights {
    fn default() -> Self {
        Self::DEFAULT
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Component {
    Label,
    Color,
    Material,
    Description,
}

impl Component {
    pub const ALL: [Component; 4] = [
        Component::Label,
        Component::Color,
        Component::Material,
        Component::Description,
    ];

    fn bit(self) -> u8 {
        1 << self as u8
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Component::Label => "label",
            Component::Color => "color",
            Component::Material => "material",
            Component::Description => "description",
        }
    }

    /// Accepts the long names and the short `l`/`c`/`m`/`d` forms.
    pub fn parse(s: &str) -> Option<Component> {
        match s.trim().to_ascii_lowercase().as_str() {
            "label" | "l" | "s_l" => Some(Component::Label),
            "color" | "c" | "s_c" => Some(Component::Color),
            "material" | "m" | "s_m" => Some(Component::Material),
            "description" | "d" | "s_d" => Some(Component::Description),
            _ => None,
        }
    }
}

/// A non-empty-by-construction subset of components.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct ComponentSet(u8);

impl ComponentSet {
    pub const FULL: ComponentSet = ComponentSet(0b1111);

    pub fn new<I: IntoIterator<Item = Component>>(components: I) -> Result<Self, ConfigError> {
        let bits = components.into_iter().fold(0u8, |acc, c| acc | c.bit());
        if bits == 0 {
            Err(ConfigError::NoComponents)
        } else {
            Ok(ComponentSet(bits))
        }
    }

    pub fn only(component: Component) -> Self {
        ComponentSet(component.bit())
    }

    pub fn contains(&self, component: Component) -> bool {
        self.0 & component.bit() != 0
    }

    pub fn iter(&self) -> impl Iterator<Item = Component> + '_ {
        Component::ALL.into_iter().filter(|c| self.contains(*c))
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn is_full(&self) -> bool {
        *self == Self::FULL
    }
}

impl fmt::Debug for ComponentSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(Component::as_str)).finish()
    }
}

impl fmt::Display for ComponentSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_full() {
            return f.write_str("full");
        }
        for (i, c) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(c.as_str())?;
        }
        Ok(())
    }
}

/// Weights, enabled components and the association threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LsfConfig {
    pub weights: LsfWeights,
    pub components: ComponentSet,
    tau: f64,
}

impl LsfConfig {
    pub fn new(weights: LsfWeights, components: ComponentSet, tau: f64) -> Result<Self, ConfigError> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(ConfigError::Tau(tau));
        }
        Ok(LsfConfig {
            weights,
            components,
            tau,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Same weights and threshold, different component subset.
    pub fn with_components(self, components: ComponentSet) -> Self {
        LsfConfig { components, ..self }
    }

    /// Weight actually applied to `component`. Disabled components get 0;
    /// the enabled weights are rescaled proportionally to sum to 1, or
    /// shared equally if they are all zero.
    pub fn effective_weight(&self, component: Component) -> f64 {
        if !self.components.contains(component) {
            return 0.0;
        }
        let enabled: f64 = self.components.iter().map(|c| self.weights.get(c)).sum();
        if enabled > 0.0 {
            self.weights.get(component) / enabled
        } else {
            1.0 / self.components.len() as f64
        }
    }
}

impl Default for LsfConfig {
    fn default() -> Self {
        LsfConfig {
            weights: LsfWeights::DEFAULT,
            components: ComponentSet::FULL,
            tau: DEFAULT_TAU,
        }
    }
}

/// The text providers the similarity terms draw on.
#[derive(Clone, Copy)]
pub struct Providers<'a> {
    pub words: &'a WordVectorTable,
    pub sentences: &'a dyn SentenceEmbedder,
}

impl<'a> Providers<'a> {
    pub fn new(words: &'a WordVectorTable, sentences: &'a dyn SentenceEmbedder) -> Self {
        Providers { words, sentences }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComponentScores {
    pub label: f64,
    pub color: f64,
    pub material: f64,
    pub description: f64,
}

impl ComponentScores {
    pub fn get(&self, component: Component) -> f64 {
        match component {
            Component::Label => self.label,
            Component::Color => self.color,
            Component::Material => self.material,
            Component::Description => self.description,
        }
    }

    /// Weighted blend under `config`'s effective weights, clamped to `[0, 1]`.
    pub fn combine(&self, config: &LsfConfig) -> f64 {
        config
            .components
            .iter()
            .map(|c| config.effective_weight(c) * self.get(c))
            .sum::<f64>()
            .clamp(0.0, 1.0)
    }
}

/// `1 - ‖rgb1 - rgb2‖ / √3`.
pub fn chromatic_similarity(a: RgbColor, b: RgbColor) -> f64 {
    let d = math::distance(a.as_array(), b.as_array());
    (1.0 - d / libm::sqrt(3.0)).clamp(0.0, 1.0)
}

/// Clamped cosine of the two descriptions' sentence embeddings.
pub fn description_similarity(a: &str, b: &str, embedder: &dyn SentenceEmbedder) -> Result<f64, EmbedError> {
    if a == b {
        // identical texts embed identically
        embedder.embed(a)?;
        return Ok(1.0);
    }
    let va = embedder.embed(a)?;
    let vb = embedder.embed(b)?;
    Ok(math::clamped_cosine(&va, &vb))
}

fn score(
    component: Component,
    a: &SemanticAttributes,
    b: &SemanticAttributes,
    providers: &Providers<'_>,
) -> Result<f64, EmbedError> {
    Ok(match component {
        Component::Label => word_similarity(a.label(), b.label(), providers.words),
        Component::Color => chromatic_similarity(color_to_rgb(a.color()), color_to_rgb(b.color())),
        Component::Material => word_similarity(a.material(), b.material(), providers.words),
        Component::Description => {
            description_similarity(a.description(), b.description(), providers.sentences)?
        }
    })
}

/// All four component scores for a pair of attribute tuples.
pub fn component_scores(
    a: &SemanticAttributes,
    b: &SemanticAttributes,
    providers: &Providers<'_>,
) -> Result<ComponentScores, EmbedError> {
    Ok(ComponentScores {
        label: score(Component::Label, a, b, providers)?,
        color: score(Component::Color, a, b, providers)?,
        material: score(Component::Material, a, b, providers)?,
        description: score(Component::Description, a, b, providers)?,
    })
}

/// Weighted similarity of two attribute tuples in `[0, 1]`. Disabled
/// components are not evaluated, so a label-only configuration never calls
/// the sentence embedder.
pub fn lsf(
    a: &SemanticAttributes,
    b: &SemanticAttributes,
    config: &LsfConfig,
    providers: &Providers<'_>,
) -> Result<f64, EmbedError> {
    let mut total = 0.0;
    for component in config.components.iter() {
        total += config.effective_weight(component) * score(component, a, b, providers)?;
    }
    Ok(total.clamp(0.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BestMatch {
    pub id: NodeId,
    pub score: f64,
}

/// Highest-scoring unclaimed candidate whose score reaches `tau`.
///
/// Candidates are visited in ascending id order and only a strictly higher
/// score displaces the current best, so ties go to the smaller id whatever
/// order the caller supplies them in.
pub fn find_best_match<'n, I>(
    attributes: &SemanticAttributes,
    candidates: I,
    config: &LsfConfig,
    providers: &Providers<'_>,
    claimed: &BTreeSet<NodeId>,
) -> Result<Option<BestMatch>, EmbedError>
where
    I: IntoIterator<Item = &'n ObjectNode>,
{
    let mut pool: Vec<&ObjectNode> = candidates
        .into_iter()
        .filter(|n| !claimed.contains(&n.id))
        .collect();
    pool.sort_by_key(|n| n.id);

    let mut best: Option<BestMatch> = None;
    for node in pool {
        let s = lsf(attributes, &node.attributes, config, providers)?;
        if best.is_none_or(|b| s > b.score) {
            best = Some(BestMatch { id: node.id, score: s });
        }
    }
    Ok(best.filter(|b| b.score >= config.tau()))
}
