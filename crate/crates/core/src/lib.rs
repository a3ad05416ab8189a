//! Source-camera weighting for few-shot novel view synthesis.
//!
//! A renderer that fuses per-source latent features usually averages them
//! uniformly. This crate replaces the average with a weight vector computed
//! from the camera poses, either with a closed-form geometric rule
//! ([`weighting`]) or with a small trainable cross-attention module
//! ([`attention`]). The [`render`] module provides a self-contained
//! volumetric bench (analytic scenes, frustum feature volumes, a weighted
//! volume renderer) on which the schemes can be compared with the image
//! metrics in [`metrics`]. Experiment drivers and file formats live in
//! [`harness`].

pub mod attention;
pub mod embedding;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod nn;
pub mod pose;
pub mod render;
pub mod weighting;

pub use error::{Error, Result};
pub use pose::{CameraRig, Pose};
pub use weighting::{compute_weights, Scheme, WeightVector};

/// SplitMix64 finalizer, used to derive independent per-item seeds
/// (per scene, per pixel) from a single experiment seed.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
