//! Pose embeddings: fixed-length vectors computed from a camera pose.
//!
//! Two variants are provided. [`EmbeddingVariant::GeometricMlp`] Fourier-encodes
//! the camera center, appends the unit view direction, and passes the result
//! through a 3-layer ReLU MLP (42 → 64 → 64 → 128 by default).
//! [`EmbeddingVariant::FlattenedLinear`] feeds the 16 raw pose entries through
//! two linear layers with a ReLU between them (16 → 64 → 128).

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Matrix, MlpParams, Tape};
use crate::pose::{camera_center, view_direction, Pose};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncodingConfig {
    pub num_freqs: usize,
    pub freq_factor: f64,
    pub include_input: bool,
}

impl Default for EncodingConfig {
    fn default() -> Self {
        EncodingConfig { num_freqs: 6, freq_factor: 1.5, include_input: true }
    }
}

impl EncodingConfig {
    /// Output length of [`positional_encode`] for a 3-vector.
    pub fn output_dim(&self) -> usize {
        3 * (2 * self.num_freqs + usize::from(self.include_input))
    }

    fn validate(&self) -> Result<()> {
        if self.num_freqs == 0 || !(self.freq_factor > 0.0) {
            return Err(Error::InvalidConfig(format!("bad encoding config {self:?}")));
        }
        Ok(())
    }
}

/// Fourier features of a 3-vector, laid out as
/// `[x, sin(f₀x), cos(f₀x), sin(f₁x), cos(f₁x), ...]` with each block
/// covering all three coordinates and `f_j = freq_factor · 2^j`.
pub fn positional_encode(x: &Vector3<f64>, cfg: &EncodingConfig) -> Vec<f64> {
    let mut out = Vec::with_capacity(cfg.output_dim());
    if cfg.include_input {
        out.extend(x.iter());
    }
    for j in 0..cfg.num_freqs {
        let f = cfg.freq_factor * f64::powi(2.0, j as i32);
        out.extend(x.iter().map(|v| (f * v).sin()));
        out.extend(x.iter().map(|v| (f * v).cos()));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingVariant {
    GeometricMlp,
    FlattenedLinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingConfig {
    pub variant: EmbeddingVariant,
    pub hidden_dim: usize,
    pub attention_dim: usize,
    pub encoding: EncodingConfig,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            variant: EmbeddingVariant::GeometricMlp,
            hidden_dim: 64,
            attention_dim: 128,
            encoding: EncodingConfig::default(),
        }
    }
}

impl EmbeddingConfig {
    pub fn flattened() -> Self {
        EmbeddingConfig { variant: EmbeddingVariant::FlattenedLinear, ..Default::default() }
    }

    pub fn input_dim(&self) -> usize {
        match self.variant {
            EmbeddingVariant::GeometricMlp => self.encoding.output_dim() + 3,
            EmbeddingVariant::FlattenedLinear => 16,
        }
    }

    /// Layer widths of the embedding MLP.
    pub fn layer_dims(&self) -> Vec<usize> {
        match self.variant {
            EmbeddingVariant::GeometricMlp => {
                vec![self.input_dim(), self.hidden_dim, self.hidden_dim, self.attention_dim]
            }
            EmbeddingVariant::FlattenedLinear => vec![16, self.hidden_dim, self.attention_dim],
        }
    }
}

/// Network input for `pose` under `cfg`, before the MLP.
pub fn pose_features(pose: &Pose, cfg: &EmbeddingConfig) -> Vec<f64> {
    match cfg.variant {
        EmbeddingVariant::GeometricMlp => {
            let mut x = positional_encode(&camera_center(pose), &cfg.encoding);
            x.extend(view_direction(pose).iter());
            x
        }
        EmbeddingVariant::FlattenedLinear => pose.flatten().to_vec(),
    }
}

/// A pose embedding network: configuration plus MLP parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EmbedderJson", into = "EmbedderJson")]
pub struct PoseEmbedder {
    config: EmbeddingConfig,
    mlp: MlpParams,
    seed: Option<u64>,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct EmbedderJson {
    pub variant: EmbeddingVariant,
    pub encoding: EncodingConfig,
    pub layers: Vec<crate::nn::Layer>,
    pub meta: Meta,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct Meta {
    pub dims: Vec<usize>,
    pub seed: Option<u64>,
}

impl TryFrom<EmbedderJson> for PoseEmbedder {
    type Error = Error;

    fn try_from(raw: EmbedderJson) -> Result<Self> {
        let mlp = MlpParams::new(raw.layers)?;
        let dims = mlp.dims();
        if dims != raw.meta.dims {
            return Err(Error::ShapeMismatch(format!(
                "meta dims {:?} disagree with layers {dims:?}",
                raw.meta.dims
            )));
        }
        let hidden_dim = if dims.len() > 2 { dims[1] } else { 0 };
        let config = EmbeddingConfig {
            variant: raw.variant,
            hidden_dim,
            attention_dim: mlp.output_dim(),
            encoding: raw.encoding,
        };
        PoseEmbedder::with_params(config, mlp, raw.meta.seed)
    }
}

impl From<PoseEmbedder> for EmbedderJson {
    fn from(e: PoseEmbedder) -> Self {
        EmbedderJson {
            variant: e.config.variant,
            encoding: e.config.encoding,
            meta: Meta { dims: e.mlp.dims(), seed: e.seed },
            layers: e.mlp.layers,
        }
    }
}

impl PoseEmbedder {
    /// Freshly initialized network (Glorot-uniform weights, zero biases).
    pub fn new(config: EmbeddingConfig, seed: u64) -> Result<Self> {
        config.encoding.validate()?;
        let mlp = MlpParams::init(&config.layer_dims(), seed)?;
        Ok(PoseEmbedder { config, mlp, seed: Some(seed) })
    }

    /// Network with every weight and bias zero; embeds every pose to zero.
    pub fn zeroed(config: EmbeddingConfig) -> Result<Self> {
        config.encoding.validate()?;
        let mlp = MlpParams::zeros(&config.layer_dims())?;
        Ok(PoseEmbedder { config, mlp, seed: None })
    }

    pub fn with_params(config: EmbeddingConfig, mlp: MlpParams, seed: Option<u64>) -> Result<Self> {
        config.encoding.validate()?;
        if mlp.dims() != config.layer_dims() {
            return Err(Error::ShapeMismatch(format!(
                "{:?} embedding expects layers {:?}, got {:?}",
                config.variant,
                config.layer_dims(),
                mlp.dims()
            )));
        }
        Ok(PoseEmbedder { config, mlp, seed })
    }

    pub fn config(&self) -> &EmbeddingConfig {
        &self.config
    }

    pub fn mlp(&self) -> &MlpParams {
        &self.mlp
    }

    pub fn mlp_mut(&mut self) -> &mut MlpParams {
        &mut self.mlp
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn output_dim(&self) -> usize {
        self.mlp.output_dim()
    }

    pub fn embed(&self, pose: &Pose) -> Result<Vec<f64>> {
        self.mlp.apply(&pose_features(pose, &self.config))
    }

    pub fn embed_with_tape(&self, pose: &Pose) -> Result<(Vec<f64>, Tape)> {
        self.mlp.forward(&pose_features(pose, &self.config))
    }

    /// Embeddings of `poses` stacked as rows of an `S × A` matrix.
    pub fn embed_batch(&self, poses: &[Pose]) -> Result<Matrix> {
        let a = self.output_dim();
        let mut data = Vec::with_capacity(poses.len() * a);
        for p in poses {
            data.extend(self.embed(p)?);
        }
        Matrix::from_vec(poses.len(), a, data)
    }
}
