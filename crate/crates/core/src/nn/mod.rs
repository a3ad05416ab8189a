//! A small dense network kernel in double precision: row-major matrices,
//! ReLU multilayer perceptrons with analytic backpropagation, a stable
//! softmax, an Adam optimizer, and a finite-difference gradient checker.

mod adam;
mod gradcheck;
mod matrix;
mod mlp;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use gradcheck::{gradcheck, relative_error, GradcheckOptions, GradcheckReport};
pub use matrix::Matrix;
pub use mlp::{Layer, MlpParams, Tape};

/// Softmax with the maximum logit subtracted before exponentiation.
pub fn softmax_stable(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Pulls an upstream gradient on softmax outputs back onto the logits:
/// `∂L/∂zᵢ = pᵢ·(gᵢ − Σⱼ pⱼ gⱼ)`.
pub fn softmax_backward(probs: &[f64], grad_probs: &[f64]) -> Vec<f64> {
    let dot: f64 = probs.iter().zip(grad_probs).map(|(p, g)| p * g).sum();
    probs.iter().zip(grad_probs).map(|(p, g)| p * (g - dot)).collect()
}
