//! Differentiable probability models with exact, hand-derived gradients.
//!
//! Every model stores its parameters in one flat vector split into named
//! segments. `backward` accumulates the gradient of `sum_c upstream[c] *
//! output[c]` into a caller-provided buffer aligned with that vector.

mod checkpoint;
mod factor;
mod gradcheck;
mod mlp;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, tag};

pub use checkpoint::Checkpoint;
pub use gradcheck::{finite_difference_check, grad_check, GradReport, FD_STEP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// sigmoid(<user, item>)
    Mf,
    /// sigmoid(<w, user * item>)
    Gmf,
    /// ReLU MLP with a sigmoid output.
    MlpBinary,
    /// ReLU MLP with a softmax output.
    MlpClassifier,
    /// Binary noisy-channel model over user-item pairs: sigmoid(<user, item> + b).
    HPairwise,
    /// Multi-class noisy-channel model over (embedding, true class).
    HMulticlass,
    /// sigmoid(<w, x> + b)
    Logistic,
}

impl ModelKind {
    pub fn is_pairwise(self) -> bool {
        matches!(self, ModelKind::Mf | ModelKind::Gmf | ModelKind::HPairwise)
    }

    pub fn is_binary(self) -> bool {
        !matches!(self, ModelKind::MlpClassifier | ModelKind::HMulticlass)
    }
}

fn default_init_scale() -> f64 {
    0.01
}

/// Architecture, size, and initialisation of one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    #[serde(default)]
    pub num_users: usize,
    #[serde(default)]
    pub num_items: usize,
    #[serde(default)]
    pub latent_dim: usize,
    /// Feature width (MLP kinds, logistic) or embedding width (H-multiclass).
    #[serde(default)]
    pub input_dim: usize,
    #[serde(default)]
    pub hidden: Vec<usize>,
    #[serde(default)]
    pub num_classes: usize,
    #[serde(default = "default_init_scale")]
    pub init_scale: f64,
    #[serde(default)]
    pub seed: u64,
}

impl ModelSpec {
    fn base(kind: ModelKind) -> Self {
        Self {
            kind,
            num_users: 0,
            num_items: 0,
            latent_dim: 0,
            input_dim: 0,
            hidden: Vec::new(),
            num_classes: 0,
            init_scale: default_init_scale(),
            seed: 0,
        }
    }

    pub fn mf(num_users: usize, num_items: usize, latent_dim: usize) -> Self {
        Self { num_users, num_items, latent_dim, ..Self::base(ModelKind::Mf) }
    }

    pub fn gmf(num_users: usize, num_items: usize, latent_dim: usize) -> Self {
        Self { kind: ModelKind::Gmf, ..Self::mf(num_users, num_items, latent_dim) }
    }

    pub fn h_pairwise(num_users: usize, num_items: usize, latent_dim: usize) -> Self {
        Self { kind: ModelKind::HPairwise, ..Self::mf(num_users, num_items, latent_dim) }
    }

    pub fn mlp_binary(input_dim: usize, hidden: Vec<usize>) -> Self {
        Self { input_dim, hidden, ..Self::base(ModelKind::MlpBinary) }
    }

    pub fn mlp_classifier(input_dim: usize, hidden: Vec<usize>, num_classes: usize) -> Self {
        Self { input_dim, hidden, num_classes, ..Self::base(ModelKind::MlpClassifier) }
    }

    /// Channel model over `embedding_dim` features plus a one-hot true class.
    /// Hidden width defaults to 64.
    pub fn h_multiclass(embedding_dim: usize, num_classes: usize) -> Self {
        Self { input_dim: embedding_dim, hidden: vec![64], num_classes, ..Self::base(ModelKind::HMulticlass) }
    }

    pub fn logistic(input_dim: usize) -> Self {
        Self { input_dim, ..Self::base(ModelKind::Logistic) }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_init_scale(mut self, scale: f64) -> Self {
        self.init_scale = scale;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(format!("{:?}: {msg}", self.kind)));
        if !(self.init_scale.is_finite() && self.init_scale >= 0.0) {
            return bad("init_scale must be finite and non-negative");
        }
        match self.kind {
            ModelKind::Mf | ModelKind::Gmf | ModelKind::HPairwise => {
                if self.num_users == 0 || self.num_items == 0 || self.latent_dim == 0 {
                    return bad("num_users, num_items and latent_dim must be positive");
                }
            }
            ModelKind::MlpBinary | ModelKind::MlpClassifier | ModelKind::HMulticlass => {
                if self.input_dim == 0 {
                    return bad("input_dim must be positive");
                }
                if self.hidden.is_empty() || self.hidden.contains(&0) {
                    return bad("hidden widths must be non-empty and positive");
                }
                if self.kind != ModelKind::MlpBinary && self.num_classes < 2 {
                    return bad("num_classes must be at least 2");
                }
            }
            ModelKind::Logistic => {
                if self.input_dim == 0 {
                    return bad("input_dim must be positive");
                }
            }
        }
        Ok(())
    }

    /// Number of probabilities returned by `forward`.
    pub fn num_outputs(&self) -> usize {
        if self.kind.is_binary() {
            1
        } else {
            self.num_classes
        }
    }

    fn layer_sizes(&self) -> Vec<usize> {
        let input = match self.kind {
            ModelKind::HMulticlass => self.input_dim + self.num_classes,
            _ => self.input_dim,
        };
        let mut sizes = vec![input];
        if self.kind != ModelKind::Logistic {
            sizes.extend_from_slice(&self.hidden);
        }
        sizes.push(self.num_outputs());
        sizes
    }
}

/// A named contiguous slice of the parameter vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub name: String,
    pub offset: usize,
    pub len: usize,
    /// Initialised from the Gaussian (true) or to zero (biases).
    #[serde(skip)]
    random_init: bool,
}

/// Model input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Input<'a> {
    Pair { user: u32, item: u32 },
    Dense(&'a [f64]),
    /// Features (or an embedding) together with a true-class code.
    Conditioned { features: &'a [f64], class: usize },
}

/// Anything that maps an input to output probabilities.
pub trait Predictor: Sync {
    fn num_outputs(&self) -> usize;
    fn predict(&self, x: &Input) -> Vec<f64>;

    /// Probability of the positive class for single-output predictors.
    fn prob(&self, x: &Input) -> f64 {
        self.predict(x)[0]
    }

    /// Ranking score; any strictly increasing function of `prob`.
    fn score(&self, x: &Input) -> f64 {
        self.prob(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    spec: ModelSpec,
    params: Vec<f64>,
    segments: Vec<Segment>,
}

fn layout(spec: &ModelSpec) -> Vec<Segment> {
    let mut segs = Vec::new();
    let mut offset = 0;
    let mut push = |name: String, len: usize, random_init: bool| {
        segs.push(Segment { name, offset, len, random_init });
        offset += len;
    };
    match spec.kind {
        ModelKind::Mf | ModelKind::Gmf | ModelKind::HPairwise => {
            push("user".into(), spec.num_users * spec.latent_dim, true);
            push("item".into(), spec.num_items * spec.latent_dim, true);
            match spec.kind {
                ModelKind::Gmf => push("out".into(), spec.latent_dim, true),
                ModelKind::HPairwise => push("bias".into(), 1, false),
                _ => {}
            }
        }
        _ => {
            let sizes = spec.layer_sizes();
            for (l, w) in sizes.windows(2).enumerate() {
                push(format!("w{l}"), w[0] * w[1], true);
                push(format!("b{l}"), w[1], false);
            }
        }
    }
    segs
}

/// Builds a model with Gaussian-initialised weights (zero biases),
/// deterministic in `spec.seed`.
pub fn build_model(spec: &ModelSpec) -> Result<Model> {
    spec.validate()?;
    let segments = layout(spec);
    let total = segments.last().map_or(0, |s| s.offset + s.len);
    let mut params = vec![0.0; total];
    let mut rng = rng::stream(spec.seed, tag::INIT);
    for seg in &segments {
        if seg.random_init {
            for p in &mut params[seg.offset..seg.offset + seg.len] {
                let z: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng);
                *p = spec.init_scale * z;
            }
        }
    }
    Ok(Model { spec: spec.clone(), params, segments })
}

impl Model {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn kind(&self) -> ModelKind {
        self.spec.kind
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn segment(&self, name: &str) -> Option<&Segment> {
        self.segments.iter().find(|s| s.name == name)
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::DimensionMismatch { expected: self.params.len(), actual: params.len() });
        }
        self.params.copy_from_slice(params);
        Ok(())
    }

    /// A copy with different parameters.
    pub fn with_params(&self, params: Vec<f64>) -> Model {
        assert_eq!(params.len(), self.params.len(), "parameter layout mismatch");
        Model { spec: self.spec.clone(), params, segments: self.segments.clone() }
    }

    pub fn num_outputs(&self) -> usize {
        self.spec.num_outputs()
    }

    /// Width of the embedding tap.
    pub fn embedding_dim(&self) -> usize {
        match self.spec.kind {
            ModelKind::Mf | ModelKind::Gmf | ModelKind::HPairwise => 2 * self.spec.latent_dim,
            ModelKind::Logistic => self.spec.input_dim,
            _ => *self.spec.hidden.last().expect("validated"),
        }
    }

    /// Output probabilities: length 1 for binary kinds, a simplex otherwise.
    pub fn forward(&self, x: &Input) -> Vec<f64> {
        match self.spec.kind {
            ModelKind::Mf | ModelKind::Gmf | ModelKind::HPairwise => vec![factor::forward(self, x)],
            _ => mlp::forward(self, x).output,
        }
    }

    pub fn prob(&self, x: &Input) -> f64 {
        self.forward(x)[0]
    }

    /// Pre-squashing score (logit for binary kinds).
    pub fn logit(&self, x: &Input) -> Vec<f64> {
        match self.spec.kind {
            ModelKind::Mf | ModelKind::Gmf | ModelKind::HPairwise => vec![factor::logit(self, x)],
            _ => mlp::forward(self, x).logits,
        }
    }

    /// Accumulates d(sum_c upstream[c] * output[c]) / d(params) into `grad`.
    pub fn backward(&self, x: &Input, upstream: &[f64], grad: &mut [f64]) {
        debug_assert_eq!(upstream.len(), self.num_outputs());
        debug_assert_eq!(grad.len(), self.params.len());
        match self.spec.kind {
            ModelKind::Mf | ModelKind::Gmf | ModelKind::HPairwise => factor::backward(self, x, upstream[0], grad),
            _ => mlp::backward(self, x, upstream, grad),
        }
    }

    /// Penultimate representation: the last hidden activation for MLPs, the
    /// concatenated user and item vectors for factor models.
    pub fn embed(&self, x: &Input) -> Vec<f64> {
        match self.spec.kind {
            ModelKind::Mf | ModelKind::Gmf | ModelKind::HPairwise => factor::embed(self, x),
            ModelKind::Logistic => mlp::input_vector(self, x),
            _ => mlp::forward(self, x).penultimate().to_vec(),
        }
    }

    /// Sum of squared parameters.
    pub fn squared_norm(&self) -> f64 {
        self.params.iter().map(|p| p * p).sum()
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint::from_model(self)
    }
}

impl Predictor for Model {
    fn num_outputs(&self) -> usize {
        Model::num_outputs(self)
    }

    fn predict(&self, x: &Input) -> Vec<f64> {
        self.forward(x)
    }

    /// The logit, which does not saturate into ties the way the sigmoid does.
    fn score(&self, x: &Input) -> f64 {
        if self.spec.kind.is_binary() {
            self.logit(x)[0]
        } else {
            self.prob(x)
        }
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}
