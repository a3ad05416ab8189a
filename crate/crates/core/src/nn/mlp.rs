use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::error::{Error, Result};

/// One affine layer `y = W x + b`, with `W` shaped `out × in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LayerJson", into = "LayerJson")]
pub struct Layer {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct LayerJson {
    w: Vec<Vec<f64>>,
    b: Vec<f64>,
}

impl TryFrom<LayerJson> for Layer {
    type Error = Error;

    fn try_from(raw: LayerJson) -> Result<Self> {
        let weight = Matrix::from_rows(&raw.w)?;
        Layer::new(weight, raw.b)
    }
}

impl From<Layer> for LayerJson {
    fn from(layer: Layer) -> Self {
        LayerJson { w: layer.weight.to_rows(), b: layer.bias }
    }
}

impl Layer {
    pub fn new(weight: Matrix, bias: Vec<f64>) -> Result<Self> {
        if bias.len() != weight.rows() {
            return Err(Error::dims(weight.rows(), bias.len()));
        }
        if bias.iter().any(|v| !v.is_finite()) {
            return Err(Error::ShapeMismatch("bias entries must be finite".into()));
        }
        Ok(Layer { weight, bias })
    }

    pub fn zeros(input: usize, output: usize) -> Self {
        Layer { weight: Matrix::zeros(output, input), bias: vec![0.0; output] }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.rows()
    }
}

/// Multilayer perceptron with ReLU between layers and a linear output.
///
/// The same type doubles as the gradient container in backpropagation and
/// as the moment accumulators in [`super::AdamState`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MlpJson")]
pub struct MlpParams {
    pub layers: Vec<Layer>,
}

#[derive(Deserialize)]
struct MlpJson {
    layers: Vec<Layer>,
}

impl TryFrom<MlpJson> for MlpParams {
    type Error = Error;

    fn try_from(raw: MlpJson) -> Result<Self> {
        MlpParams::new(raw.layers)
    }
}

/// Activations cached by [`MlpParams::forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct Tape {
    /// Input to each layer (post-ReLU output of the previous one).
    inputs: Vec<Vec<f64>>,
    /// Pre-activation output of each layer.
    pre_activations: Vec<Vec<f64>>,
}

impl Tape {
    pub fn pre_activations(&self) -> &[Vec<f64>] {
        &self.pre_activations
    }

    /// Sign pattern of every hidden pre-activation; constant on each
    /// linear piece of the network.
    pub fn relu_pattern(&self) -> Vec<bool> {
        let hidden = self.pre_activations.len().saturating_sub(1);
        self.pre_activations[..hidden]
            .iter()
            .flat_map(|z| z.iter().map(|v| *v > 0.0))
            .collect()
    }
}

impl MlpParams {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::ShapeMismatch("an MLP needs at least one layer".into()));
        }
        for pair in layers.windows(2) {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(Error::ShapeMismatch(format!(
                    "layer output {} does not feed next layer input {}",
                    pair[0].output_dim(),
                    pair[1].input_dim()
                )));
            }
        }
        Ok(MlpParams { layers })
    }

    /// Glorot-uniform weights in `±√(6/(fan_in+fan_out))`, zero biases.
    pub fn init(dims: &[usize], seed: u64) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::ShapeMismatch("need at least input and output dims".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = dims
            .windows(2)
            .map(|d| {
                let (fan_in, fan_out) = (d[0], d[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let data = (0..fan_in * fan_out).map(|_| rng.gen_range(-limit..=limit)).collect();
                Layer { weight: Matrix::from_vec(fan_out, fan_in, data).unwrap(), bias: vec![0.0; fan_out] }
            })
            .collect();
        Ok(MlpParams { layers })
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::ShapeMismatch("need at least input and output dims".into()));
        }
        Ok(MlpParams { layers: dims.windows(2).map(|d| Layer::zeros(d[0], d[1])).collect() })
    }

    pub fn zeros_like(&self) -> Self {
        MlpParams {
            layers: self.layers.iter().map(|l| Layer::zeros(l.input_dim(), l.output_dim())).collect(),
        }
    }

    /// `[in, hidden..., out]`.
    pub fn dims(&self) -> Vec<usize> {
        let mut dims = vec![self.layers[0].input_dim()];
        dims.extend(self.layers.iter().map(Layer::output_dim));
        dims
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    pub fn same_shape(&self, other: &MlpParams) -> bool {
        self.dims() == other.dims()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weight.data().len() + l.bias.len()).sum()
    }

    /// All parameters, layer by layer, weights (row-major) before biases.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend_from_slice(l.weight.data());
            out.extend_from_slice(&l.bias);
        }
        out
    }

    /// Inverse of [`Self::to_flat`].
    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::dims(self.num_params(), flat.len()));
        }
        let mut at = 0;
        for l in &mut self.layers {
            let n = l.weight.data().len();
            l.weight.data_mut().copy_from_slice(&flat[at..at + n]);
            at += n;
            let n = l.bias.len();
            l.bias.copy_from_slice(&flat[at..at + n]);
            at += n;
        }
        Ok(())
    }

    /// `self += other`, elementwise.
    pub fn accumulate(&mut self, other: &MlpParams) -> Result<()> {
        if !self.same_shape(other) {
            return Err(Error::ShapeMismatch("gradient shapes differ".into()));
        }
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.weight.data_mut().iter_mut().zip(b.weight.data()) {
                *x += y;
            }
            for (x, y) in a.bias.iter_mut().zip(&b.bias) {
                *x += y;
            }
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, Tape)> {
        if x.len() != self.input_dim() {
            return Err(Error::dims(self.input_dim(), x.len()));
        }
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        let mut h = x.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = layer.weight.matvec(&h)?;
            for (zi, bi) in z.iter_mut().zip(&layer.bias) {
                *zi += bi;
            }
            let next = if i == last { z.clone() } else { z.iter().map(|v| v.max(0.0)).collect() };
            inputs.push(h);
            pre_activations.push(z);
            h = next;
        }
        Ok((h, Tape { inputs, pre_activations }))
    }

    /// Output only, no tape.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.forward(x).map(|(y, _)| y)
    }

    /// Exact gradients of `output_grad · f(x)` with respect to all
    /// parameters and to the input. The ReLU derivative at zero is zero.
    pub fn backward(&self, tape: &Tape, output_grad: &[f64]) -> Result<(MlpParams, Vec<f64>)> {
        if tape.inputs.len() != self.layers.len() {
            return Err(Error::ShapeMismatch("tape does not match network depth".into()));
        }
        if output_grad.len() != self.output_dim() {
            return Err(Error::dims(self.output_dim(), output_grad.len()));
        }
        let last = self.layers.len() - 1;
        let mut grads = self.zeros_like();
        let mut upstream = output_grad.to_vec();
        for i in (0..self.layers.len()).rev() {
            let z = &tape.pre_activations[i];
            if z.len() != self.layers[i].output_dim() {
                return Err(Error::ShapeMismatch(format!("tape layer {i} has wrong width")));
            }
            let dz: Vec<f64> = if i == last {
                upstream
            } else {
                upstream.iter().zip(z).map(|(g, zi)| if *zi > 0.0 { *g } else { 0.0 }).collect()
            };
            let g = &mut grads.layers[i];
            g.weight.add_outer(&dz, &tape.inputs[i], 1.0);
            g.bias.copy_from_slice(&dz);
            upstream = self.layers[i].weight.matvec_transposed(&dz)?;
        }
        Ok((grads, upstream))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{gradcheck, GradcheckOptions};
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_network_outputs_zero() {
        let p = MlpParams::zeros(&[3, 5, 2]).unwrap();
        assert_eq!(p.apply(&[1.0, -2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn identity_layer() {
        let eye = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let p = MlpParams::new(vec![Layer::new(eye, vec![0.0, 0.0]).unwrap()]).unwrap();
        let (y, tape) = p.forward(&[-3.0, 4.0]).unwrap();
        assert_eq!(y, vec![-3.0, 4.0]);
        let (_, gx) = p.backward(&tape, &[0.5, -2.0]).unwrap();
        assert_eq!(gx, vec![0.5, -2.0]);
    }

    #[test]
    fn two_layer_hand_example() {
        let w1 = Matrix::from_rows(&[vec![0.5, -0.25], vec![1.0, 0.75]]).unwrap();
        let w2 = Matrix::from_rows(&[vec![2.0, -1.0]]).unwrap();
        let p = MlpParams::new(vec![
            Layer::new(w1, vec![0.1, -0.2]).unwrap(),
            Layer::new(w2, vec![0.3]).unwrap(),
        ])
        .unwrap();
        let (y, tape) = p.forward(&[1.0, -1.0]).unwrap();
        assert_abs_diff_eq!(y[0], 1.95, epsilon = 1e-15);
        assert_abs_diff_eq!(tape.pre_activations()[0][1], 0.05, epsilon = 1e-15);
    }

    #[test]
    fn dead_relu_blocks_gradient() {
        let w1 = Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        let w2 = Matrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let p = MlpParams::new(vec![
            Layer::new(w1, vec![-10.0, -10.0]).unwrap(),
            Layer::new(w2, vec![0.0]).unwrap(),
        ])
        .unwrap();
        let (_, tape) = p.forward(&[1.0]).unwrap();
        let (g, gx) = p.backward(&tape, &[1.0]).unwrap();
        assert_eq!(gx, vec![0.0]);
        assert!(g.layers[0].weight.data().iter().all(|v| *v == 0.0));
        assert!(g.layers[0].bias.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn shape_errors() {
        let p = MlpParams::init(&[3, 4, 2], 1).unwrap();
        assert!(matches!(p.forward(&[1.0]), Err(Error::DimensionMismatch { .. })));
        let (_, tape) = p.forward(&[1.0, 2.0, 3.0]).unwrap();
        assert!(p.backward(&tape, &[1.0]).is_err());
        let other = MlpParams::init(&[3, 4, 4, 2], 1).unwrap();
        assert!(other.backward(&tape, &[1.0, 1.0]).is_err());
        assert!(MlpParams::new(vec![Layer::zeros(2, 3), Layer::zeros(4, 1)]).is_err());
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let a = MlpParams::init(&[42, 64, 64, 128], 7).unwrap();
        let b = MlpParams::init(&[42, 64, 64, 128], 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, MlpParams::init(&[42, 64, 64, 128], 8).unwrap());
        let limit = (6.0f64 / (42.0 + 64.0)).sqrt();
        assert!(a.layers[0].weight.data().iter().all(|v| v.abs() <= limit));
        assert!(a.layers.iter().all(|l| l.bias.iter().all(|b| *b == 0.0)));
    }

    #[test]
    fn flat_round_trip_and_json() {
        let p = MlpParams::init(&[3, 4, 2], 3).unwrap();
        let mut q = p.zeros_like();
        q.set_flat(&p.to_flat()).unwrap();
        assert_eq!(p, q);
        let json = serde_json::to_string(&p).unwrap();
        assert!(json.starts_with("{\"layers\":[{\"w\":[["));
        let back: MlpParams = serde_json::from_str(&json).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn forward_is_bit_deterministic() {
        let p = MlpParams::init(&[5, 16, 16, 3], 9).unwrap();
        let x = [0.1, -0.4, 2.0, 0.0, 1.5];
        let a = p.apply(&x).unwrap();
        let b = p.apply(&x).unwrap();
        assert!(a.iter().zip(&b).all(|(u, v)| u.to_bits() == v.to_bits()));
    }

    #[test]
    fn random_three_layer_gradients_match_finite_differences() {
        let mut p = MlpParams::init(&[6, 12, 10, 4], 21).unwrap();
        // Non-zero biases so that the check exercises them.
        let mut flat = p.to_flat();
        for (i, v) in flat.iter_mut().enumerate() {
            if i % 7 == 0 {
                *v += 0.05;
            }
        }
        p.set_flat(&flat).unwrap();
        let x = [0.3, -1.1, 0.8, 0.05, -0.6, 1.7];
        let probe = [1.0, -0.5, 0.25, 2.0];

        let (_, tape) = p.forward(&x).unwrap();
        let (g, _) = p.backward(&tape, &probe).unwrap();

        let mut scratch = p.clone();
        let mut eval = |theta: &[f64]| {
            scratch.set_flat(theta).unwrap();
            let (y, tape) = scratch.forward(&x).unwrap();
            let f = y.iter().zip(&probe).map(|(a, b)| a * b).sum();
            (f, tape.relu_pattern())
        };
        let report = gradcheck(&mut eval, &p.to_flat(), &g.to_flat(), &GradcheckOptions::exhaustive());
        assert!(report.max_relative_error < 1e-6, "{report:?}");
        assert!(report.checked > p.num_params() / 2);

        // Input gradient against finite differences too.
        let (_, gx) = p.backward(&tape, &probe).unwrap();
        let mut eval_x = |xs: &[f64]| {
            let (y, tape) = p.forward(xs).unwrap();
            (y.iter().zip(&probe).map(|(a, b)| a * b).sum(), tape.relu_pattern())
        };
        let report = gradcheck(&mut eval_x, &x, &gx, &GradcheckOptions::exhaustive());
        assert!(report.max_relative_error < 1e-6, "{report:?}");
    }
}
