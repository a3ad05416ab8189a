//! Cross-attention weighting: a learned weighting function.
//!
//! The target pose and every source pose go through one shared
//! [`PoseEmbedder`]. The scaled dot products of the target embedding with
//! the source embeddings are the attention logits, and their softmax is the
//! weight vector. The module is trained through the frozen bench renderer by
//! minimizing pixel MSE, so only the embedding parameters receive gradients.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::{EmbedderJson, EmbeddingConfig, EmbeddingVariant, PoseEmbedder};
use crate::error::{Error, Result};
use crate::mix_seed;
use crate::nn::{adam_step, softmax_backward, softmax_stable, AdamConfig, AdamState, MlpParams, Tape};
use crate::pose::CameraRig;
use crate::render::{render_novel_view_with_grad, FeatureVolume, Frustum, Image, RenderSettings};
use crate::weighting::WeightVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CawJson", into = "CawJson")]
pub struct CawModule {
    embedder: PoseEmbedder,
}

#[derive(Serialize, Deserialize)]
struct CawJson {
    attention_dim: usize,
    #[serde(flatten)]
    embedder: EmbedderJson,
}

impl TryFrom<CawJson> for CawModule {
    type Error = Error;

    fn try_from(raw: CawJson) -> Result<Self> {
        let embedder = PoseEmbedder::try_from(raw.embedder)?;
        if embedder.output_dim() != raw.attention_dim {
            return Err(Error::ShapeMismatch(format!(
                "attention_dim {} but the embedding outputs {}",
                raw.attention_dim,
                embedder.output_dim()
            )));
        }
        Ok(CawModule { embedder })
    }
}

impl From<CawModule> for CawJson {
    fn from(m: CawModule) -> Self {
        CawJson { attention_dim: m.attention_dim(), embedder: m.embedder.into() }
    }
}

/// Forward pass state needed to backpropagate from the weights.
#[derive(Debug, Clone)]
pub struct CawTape {
    weights: Vec<f64>,
    target: (Vec<f64>, Tape),
    sources: Vec<(Vec<f64>, Tape)>,
}

impl CawTape {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// ReLU sign pattern over every embedding evaluation.
    pub fn relu_pattern(&self) -> Vec<bool> {
        let mut out = self.target.1.relu_pattern();
        for (_, t) in &self.sources {
            out.extend(t.relu_pattern());
        }
        out
    }
}

impl CawModule {
    pub fn new(config: EmbeddingConfig, seed: u64) -> Result<Self> {
        Ok(CawModule { embedder: PoseEmbedder::new(config, seed)? })
    }

    pub fn zeroed(config: EmbeddingConfig) -> Result<Self> {
        Ok(CawModule { embedder: PoseEmbedder::zeroed(config)? })
    }

    pub fn from_embedder(embedder: PoseEmbedder) -> Self {
        CawModule { embedder }
    }

    pub fn embedder(&self) -> &PoseEmbedder {
        &self.embedder
    }

    pub fn params(&self) -> &MlpParams {
        self.embedder.mlp()
    }

    pub fn params_mut(&mut self) -> &mut MlpParams {
        self.embedder.mlp_mut()
    }

    pub fn attention_dim(&self) -> usize {
        self.embedder.output_dim()
    }

    pub fn variant(&self) -> EmbeddingVariant {
        self.embedder.config().variant
    }

    fn scale(&self) -> f64 {
        1.0 / (self.attention_dim() as f64).sqrt()
    }

    /// `E_t · E_sᵢ / √A` for every source.
    pub fn logits(&self, rig: &CameraRig) -> Result<Vec<f64>> {
        let et = self.embedder.embed(&rig.target)?;
        let es = self.embedder.embed_batch(rig.sources())?;
        let scale = self.scale();
        Ok((0..es.rows()).map(|i| dot(&et, es.row(i)) * scale).collect())
    }

    pub fn weights(&self, rig: &CameraRig) -> Result<WeightVector> {
        WeightVector::new(softmax_stable(&self.logits(rig)?))
    }

    pub fn forward(&self, rig: &CameraRig) -> Result<CawTape> {
        let target = self.embedder.embed_with_tape(&rig.target)?;
        let sources = rig.sources().iter().map(|p| self.embedder.embed_with_tape(p)).collect::<Result<Vec<_>>>()?;
        let scale = self.scale();
        let logits: Vec<f64> = sources.iter().map(|(e, _)| dot(&target.0, e) * scale).collect();
        Ok(CawTape { weights: softmax_stable(&logits), target, sources })
    }

    /// Parameter gradient of a loss given its gradient with respect to the
    /// weights.
    pub fn backward(&self, tape: &CawTape, grad_weights: &[f64]) -> Result<MlpParams> {
        if grad_weights.len() != tape.sources.len() {
            return Err(Error::dims(tape.sources.len(), grad_weights.len()));
        }
        let scale = self.scale();
        let grad_logits = softmax_backward(&tape.weights, grad_weights);
        let mlp = self.embedder.mlp();
        let a = self.attention_dim();
        let mut grad_target = vec![0.0; a];
        let mut grads = mlp.zeros_like();
        for ((emb, t), g) in tape.sources.iter().zip(&grad_logits) {
            for k in 0..a {
                grad_target[k] += g * scale * emb[k];
            }
            let upstream: Vec<f64> = tape.target.0.iter().map(|e| g * scale * e).collect();
            grads.accumulate(&mlp.backward(t, &upstream)?.0)?;
        }
        grads.accumulate(&mlp.backward(&tape.target.1, &grad_target)?.0)?;
        Ok(grads)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One training rig: encoded source volumes, the target camera, and its
/// ground-truth image. The renderer and volumes are frozen.
#[derive(Debug, Clone)]
pub struct TrainingExample {
    pub rig: CameraRig,
    pub volumes: Vec<FeatureVolume>,
    pub target: Frustum,
    pub reference: Image,
}

impl TrainingExample {
    /// The rig is read off the frustum poses.
    pub fn new(volumes: Vec<FeatureVolume>, target: Frustum, reference: Image) -> Result<Self> {
        let sources = volumes.iter().map(|v| *v.frustum().pose()).collect();
        let rig = CameraRig::new(*target.pose(), sources)?;
        Ok(TrainingExample { rig, volumes, target, reference })
    }
}

#[derive(Debug, Clone)]
pub struct CawLoss {
    pub loss: f64,
    pub grads: MlpParams,
    pub weights: Vec<f64>,
    /// ReLU pattern of the forward pass.
    pub kinks: Vec<bool>,
}

/// Render MSE of the CAW-weighted novel view and its gradient with respect
/// to the embedding parameters.
pub fn caw_loss_and_grads(module: &CawModule, example: &TrainingExample, settings: &RenderSettings) -> Result<CawLoss> {
    let tape = module.forward(&example.rig)?;
    let w = WeightVector::new(tape.weights.clone())?;
    let out = render_novel_view_with_grad(&example.volumes, &example.target, &w, settings, &example.reference)?;
    let grads = module.backward(&tape, &out.grad_weights)?;
    Ok(CawLoss { loss: out.loss, grads, weights: tape.weights.clone(), kinks: tape.relu_pattern() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub seed: u64,
    pub adam: AdamConfig,
    pub render: RenderSettings,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 5,
            seed: 0,
            adam: AdamConfig::default(),
            render: RenderSettings { width: 16, height: 16, samples: 32, seed: 0 },
        }
    }
}

/// Mean training loss per epoch, measured before each step's update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epoch_losses: Vec<f64>,
}

/// Adam on one rig per step, visiting rigs in a seeded shuffled order each
/// epoch. Deterministic given the seed.
pub fn train_caw(module: &mut CawModule, examples: &[TrainingExample], cfg: &TrainConfig) -> Result<TrainHistory> {
    if examples.is_empty() {
        return Err(Error::InvalidConfig("training needs at least one rig".into()));
    }
    let mut state = AdamState::new(module.params(), cfg.adam);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, epoch as u64));
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            let step = caw_loss_and_grads(module, &examples[i], &cfg.render)?;
            if !step.loss.is_finite() {
                return Err(Error::DivergedTraining { epoch, loss: step.loss });
            }
            total += step.loss;
            adam_step(module.params_mut(), &step.grads, &mut state)?;
            if module.params().to_flat().iter().any(|p| !p.is_finite()) {
                return Err(Error::DivergedTraining { epoch, loss: f64::NAN });
            }
        }
        let mean = total / examples.len() as f64;
        log::info!("epoch {epoch}: mean loss {mean:.6e}");
        epoch_losses.push(mean);
    }
    Ok(TrainHistory { epoch_losses })
}
