use serde::{Deserialize, Serialize};

use super::MlpParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    first_moment: MlpParams,
    second_moment: MlpParams,
    step: u64,
}

impl AdamState {
    pub fn new(params: &MlpParams, config: AdamConfig) -> Self {
        AdamState {
            config,
            first_moment: params.zeros_like(),
            second_moment: params.zeros_like(),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step(params: &mut MlpParams, grads: &MlpParams, state: &mut AdamState) -> Result<()> {
    if !params.same_shape(grads) || !params.same_shape(&state.first_moment) {
        return Err(Error::ShapeMismatch("parameter, gradient and optimizer shapes differ".into()));
    }
    state.step += 1;
    let AdamConfig { learning_rate, beta1, beta2, epsilon } = state.config;
    let t = state.step as i32;
    let bias1 = 1.0 - beta1.powi(t);
    let bias2 = 1.0 - beta2.powi(t);

    let update = |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
        for (((p, &g), m), v) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / bias1;
            let v_hat = *v / bias2;
            *p -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
        }
    };

    for (((p, g), m), v) in params
        .layers
        .iter_mut()
        .zip(&grads.layers)
        .zip(&mut state.first_moment.layers)
        .zip(&mut state.second_moment.layers)
    {
        update(p.weight.data_mut(), g.weight.data(), m.weight.data_mut(), v.weight.data_mut());
        update(&mut p.bias, &g.bias, &mut m.bias, &mut v.bias);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Layer, Matrix};

    fn scalar(p: f64) -> MlpParams {
        MlpParams::new(vec![Layer::new(Matrix::from_vec(1, 1, vec![p]).unwrap(), vec![0.0]).unwrap()]).unwrap()
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut p = MlpParams::init(&[3, 4, 2], 5).unwrap();
        let before = p.clone();
        let g = p.zeros_like();
        let mut s = AdamState::new(&p, AdamConfig::default());
        adam_step(&mut p, &g, &mut s).unwrap();
        assert_eq!(p, before);
        assert_eq!(s.step_count(), 1);
    }

    #[test]
    fn matches_scalar_oracle() {
        // Values from an independent scalar implementation (g = 0.5 twice).
        let mut p = scalar(1.0);
        let mut g = scalar(0.5);
        g.layers[0].bias[0] = 0.0;
        let mut s = AdamState::new(&p, AdamConfig::default());
        adam_step(&mut p, &g, &mut s).unwrap();
        assert!((p.layers[0].weight.get(0, 0) - 0.999_000_000_02).abs() < 1e-14);
        adam_step(&mut p, &g, &mut s).unwrap();
        assert!((p.layers[0].weight.get(0, 0) - 0.998_000_000_04).abs() < 1e-14);
        assert_eq!(p.layers[0].bias[0], 0.0);
    }

    #[test]
    fn first_step_moves_by_learning_rate_against_gradient() {
        let mut p = scalar(0.0);
        let mut s = AdamState::new(&p, AdamConfig::default());
        adam_step(&mut p, &scalar(-3.0), &mut s).unwrap();
        assert!((p.layers[0].weight.get(0, 0) - 1e-3).abs() < 1e-10);
    }

    #[test]
    fn rejects_mismatched_shapes() {
        let mut p = MlpParams::init(&[3, 4, 2], 5).unwrap();
        let g = MlpParams::init(&[3, 5, 2], 5).unwrap();
        let mut s = AdamState::new(&p, AdamConfig::default());
        assert!(matches!(adam_step(&mut p, &g, &mut s), Err(Error::ShapeMismatch(_))));
    }
}
