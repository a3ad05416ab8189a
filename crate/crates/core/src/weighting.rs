//! Deterministic source-view weighting schemes and weighted latent
//! aggregation.
//!
//! Every scheme maps a [`CameraRig`] to a [`WeightVector`]: `S` nonnegative
//! weights summing to one that replace the uniform `1/S` average when
//! per-source latents are fused. Weights are global per source view; the
//! same vector applies to every ray point.

use serde::{Deserialize, Serialize};

use crate::attention::CawModule;
use crate::error::{Error, Result};
use crate::pose::{
    angle_between, camera_center, center_distance, pose_norm_distance, CameraRig, NormKind,
};

pub const DEFAULT_EPSILON: f64 = 1e-6;

const SIMPLEX_TOL: f64 = 1e-9;

/// Weights on the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    /// Wraps `values` after checking they are finite, nonnegative, and sum
    /// to one within 1e-9.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyRig);
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidConfig(format!("weights must be finite and ≥ 0: {values:?}")));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidConfig(format!("weights sum to {sum}, not 1")));
        }
        Ok(WeightVector(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index of the largest weight (first on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.0.iter().enumerate() {
            if v > self.0[best] {
                best = i;
            }
        }
        best
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for WeightVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// A weighting scheme together with its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum Scheme {
    /// Uniform `1/S` averaging.
    Mean,
    /// Inverse of the L1 or Frobenius distance between pose matrices.
    Norm { kind: NormKind, epsilon: f64 },
    /// Gaussian kernel on camera-center distance.
    DistGauss { beta: f64 },
    /// Inverse of a blend of normalized view-angle and center-distance error.
    Error { alpha: f64, epsilon: f64 },
    /// Learned cross-attention weighting; requires a [`CawModule`].
    CrossAttention,
}

impl Scheme {
    pub fn l1() -> Self {
        Scheme::Norm { kind: NormKind::L1, epsilon: DEFAULT_EPSILON }
    }

    pub fn frobenius() -> Self {
        Scheme::Norm { kind: NormKind::Frobenius, epsilon: DEFAULT_EPSILON }
    }

    pub fn gauss(beta: f64) -> Self {
        Scheme::DistGauss { beta }
    }

    pub fn error(alpha: f64) -> Self {
        Scheme::Error { alpha, epsilon: DEFAULT_EPSILON }
    }

    /// Short name used on the command line and in result CSVs.
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Mean => "mean",
            Scheme::Norm { kind: NormKind::L1, .. } => "l1",
            Scheme::Norm { kind: NormKind::Frobenius, .. } => "fro",
            Scheme::DistGauss { .. } => "gauss",
            Scheme::Error { .. } => "err",
            Scheme::CrossAttention => "caw",
        }
    }

    /// The scheme's tunable parameter (β or α), if it has one.
    pub fn param(&self) -> Option<f64> {
        match self {
            Scheme::DistGauss { beta } => Some(*beta),
            Scheme::Error { alpha, .. } => Some(*alpha),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        match *self {
            Scheme::Norm { epsilon, .. } if !(epsilon > 0.0 && epsilon.is_finite()) => {
                bad(format!("epsilon must be > 0, got {epsilon}"))
            }
            Scheme::DistGauss { beta } if !(beta > 0.0 && beta.is_finite()) => {
                bad(format!("beta must be > 0, got {beta}"))
            }
            Scheme::Error { alpha, .. } if !(0.0..=1.0).contains(&alpha) => {
                bad(format!("alpha must lie in [0, 1], got {alpha}"))
            }
            Scheme::Error { epsilon, .. } if !(epsilon > 0.0 && epsilon.is_finite()) => {
                bad(format!("epsilon must be > 0, got {epsilon}"))
            }
            _ => Ok(()),
        }
    }
}

/// Parses `name` or `name:param`, with names as in [`Scheme::name`] and
/// `param` being β for `gauss` and α for `err` (defaults 1.0 for both).
impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let (name, param) = match spec.split_once(':') {
            Some((n, p)) => {
                let v: f64 = p.trim().parse().map_err(|_| Error::InvalidConfig(format!("bad parameter in {spec:?}")))?;
                (n.trim(), Some(v))
            }
            None => (spec.trim(), None),
        };
        let scheme = match (name, param) {
            ("mean", None) => Scheme::Mean,
            ("l1", None) => Scheme::l1(),
            ("fro", None) => Scheme::frobenius(),
            ("caw", None) => Scheme::CrossAttention,
            ("gauss", p) => Scheme::gauss(p.unwrap_or(1.0)),
            ("err", p) => Scheme::error(p.unwrap_or(1.0)),
            _ => return Err(Error::InvalidConfig(format!("unknown scheme {spec:?}"))),
        };
        scheme.validate()?;
        Ok(scheme)
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.param() {
            Some(p) => write!(f, "{}({p})", self.name()),
            None => f.write_str(self.name()),
        }
    }
}

/// Divides nonnegative intermediate weights by their sum.
pub fn normalize(intermediate: &[f64]) -> Result<WeightVector> {
    if intermediate.is_empty() {
        return Err(Error::EmptyRig);
    }
    if intermediate.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidConfig(format!(
            "intermediate weights must be finite and ≥ 0: {intermediate:?}"
        )));
    }
    let sum: f64 = intermediate.iter().sum();
    if sum <= 0.0 {
        return Err(Error::DegenerateWeights);
    }
    Ok(WeightVector(intermediate.iter().map(|v| v / sum).collect()))
}

pub fn uniform_weights(s: usize) -> Result<WeightVector> {
    if s == 0 {
        return Err(Error::EmptyRig);
    }
    Ok(WeightVector(vec![1.0 / s as f64; s]))
}

pub fn norm_weighting(rig: &CameraRig, kind: NormKind, epsilon: f64) -> Result<WeightVector> {
    let w: Vec<f64> = rig
        .sources()
        .iter()
        .map(|src| 1.0 / (epsilon + pose_norm_distance(src, &rig.target, kind)))
        .collect();
    normalize(&w)
}

/// Gaussian kernel `exp(−β‖c_t − c_i‖²)` on camera-center distances.
///
/// The exponent is shifted by the smallest squared distance before
/// exponentiating. The shift cancels in the normalization and keeps the
/// nearest source at `exp(0) = 1`, so large β cannot underflow every entry.
pub fn gaussian_weighting(rig: &CameraRig, beta: f64) -> Result<WeightVector> {
    let c_t = camera_center(&rig.target);
    let sq: Vec<f64> = rig
        .sources()
        .iter()
        .map(|src| (camera_center(src) - c_t).norm_squared())
        .collect();
    let min = sq.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = sq.iter().map(|d| (-beta * (d - min)).exp()).collect();
    normalize(&w)
}

/// Inverse blended error: `1 / (ε + α·θ_i/π + (1−α)·d_i/max_k d_k)`.
pub fn error_weighting(rig: &CameraRig, alpha: f64, epsilon: f64) -> Result<WeightVector> {
    if rig.num_sources() == 1 {
        return uniform_weights(1);
    }
    let dists: Vec<f64> = rig
        .sources()
        .iter()
        .map(|src| center_distance(&rig.target, src))
        .collect();
    let max_dist = dists.iter().copied().fold(0.0, f64::max);
    let use_distance = alpha < 1.0;
    if use_distance && max_dist <= 0.0 {
        return Err(Error::DegenerateRig("all source centers coincide with the target center"));
    }
    let w: Vec<f64> = rig
        .sources()
        .iter()
        .zip(&dists)
        .map(|(src, d)| {
            let angle_term = alpha * angle_between(&rig.target, src) / std::f64::consts::PI;
            let dist_term = if use_distance { (1.0 - alpha) * d / max_dist } else { 0.0 };
            1.0 / (epsilon + angle_term + dist_term)
        })
        .collect();
    normalize(&w)
}

/// Dispatches to the configured scheme.
///
/// `caw` must be supplied exactly when the scheme is
/// [`Scheme::CrossAttention`].
pub fn compute_weights(
    rig: &CameraRig,
    scheme: &Scheme,
    caw: Option<&CawModule>,
) -> Result<WeightVector> {
    scheme.validate()?;
    match (scheme, caw) {
        (Scheme::CrossAttention, Some(module)) => module.weights(rig),
        (Scheme::CrossAttention, None) => Err(Error::InvalidConfig(
            "cross-attention weighting needs a trained module".into(),
        )),
        (_, Some(_)) => Err(Error::InvalidConfig(format!(
            "scheme {scheme} does not take a cross-attention module"
        ))),
        (Scheme::Mean, None) => uniform_weights(rig.num_sources()),
        (Scheme::Norm { kind, epsilon }, None) => norm_weighting(rig, *kind, *epsilon),
        (Scheme::DistGauss { beta }, None) => gaussian_weighting(rig, *beta),
        (Scheme::Error { alpha, epsilon }, None) => error_weighting(rig, *alpha, *epsilon),
    }
}

/// Like [`compute_weights`], but degenerate rigs fall back to uniform weights
/// with a logged warning instead of failing. Configuration errors still fail.
pub fn compute_weights_or_uniform(
    rig: &CameraRig,
    scheme: &Scheme,
    caw: Option<&CawModule>,
) -> Result<WeightVector> {
    match compute_weights(rig, scheme, caw) {
        Err(e @ (Error::DegenerateRig(_) | Error::DegenerateWeights)) => {
            log::warn!("{scheme}: {e}; falling back to uniform weights");
            uniform_weights(rig.num_sources())
        }
        other => other,
    }
}

/// Per-source latent vectors at one point, stored as `S` columns of length
/// `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentMatrix {
    latent_len: usize,
    columns: Vec<Vec<f64>>,
}

impl LatentMatrix {
    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Self> {
        let latent_len = columns.first().map(Vec::len).ok_or(Error::EmptyRig)?;
        for col in &columns {
            if col.len() != latent_len {
                return Err(Error::dims(latent_len, col.len()));
            }
            if col.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidConfig("latent entries must be finite".into()));
            }
        }
        Ok(LatentMatrix { latent_len, columns })
    }

    pub fn latent_len(&self) -> usize {
        self.latent_len
    }

    pub fn num_sources(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, i: usize) -> &[f64] {
        &self.columns[i]
    }
}

/// `Σᵢ wᵢ·lᵢ` over the source columns.
pub fn weighted_aggregate(latents: &LatentMatrix, w: &WeightVector) -> Result<Vec<f64>> {
    if latents.num_sources() != w.len() {
        return Err(Error::dims(latents.num_sources(), w.len()));
    }
    let mut out = vec![0.0; latents.latent_len];
    for (col, &wi) in latents.columns.iter().zip(w.as_slice()) {
        for (o, &v) in out.iter_mut().zip(col) {
            *o += wi * v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pose::{look_at, Pose};
    use approx::assert_abs_diff_eq;
    use nalgebra::{Matrix3, Vector3};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn at(center: [f64; 3]) -> Pose {
        Pose::from_parts(Matrix3::identity(), Vector3::from(center)).unwrap()
    }

    /// Pose at the origin looking along `dir`.
    fn facing(dir: [f64; 3]) -> Pose {
        let d = Vector3::from(dir);
        let up = if d.normalize().cross(&Vector3::y()).norm() > 1e-6 { Vector3::y() } else { Vector3::x() };
        look_at(Vector3::zeros(), d, up).unwrap()
    }

    fn orbit(seed: u64, s: usize) -> CameraRig {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut cam = || {
            let z: f64 = rng.gen_range(-0.95..0.95);
            let phi: f64 = rng.gen_range(0.0..2.0 * PI);
            let r = (1.0 - z * z).sqrt();
            let radius: f64 = rng.gen_range(3.0..5.0);
            let eye = Vector3::new(r * phi.cos(), z, r * phi.sin()) * radius;
            look_at(eye, Vector3::zeros(), Vector3::y()).unwrap()
        };
        let target = cam();
        let sources = (0..s).map(|_| cam()).collect();
        CameraRig::new(target, sources).unwrap()
    }

    fn all_schemes() -> Vec<Scheme> {
        vec![
            Scheme::Mean,
            Scheme::l1(),
            Scheme::frobenius(),
            Scheme::gauss(0.3),
            Scheme::gauss(1.0),
            Scheme::error(0.0),
            Scheme::error(0.5),
            Scheme::error(1.0),
        ]
    }

    #[test]
    fn scheme_names_parse() {
        assert_eq!("mean".parse::<Scheme>().unwrap(), Scheme::Mean);
        assert_eq!("err:0.5".parse::<Scheme>().unwrap(), Scheme::error(0.5));
        assert_eq!("gauss".parse::<Scheme>().unwrap(), Scheme::gauss(1.0));
        assert_eq!("fro".parse::<Scheme>().unwrap(), Scheme::frobenius());
        for bad in ["median", "err:2", "gauss:x", "l1:3"] {
            assert!(bad.parse::<Scheme>().is_err(), "{bad}");
        }
        for s in [Scheme::Mean, Scheme::l1(), Scheme::gauss(0.3), Scheme::error(0.0)] {
            let spec = match s.param() {
                Some(p) => format!("{}:{p}", s.name()),
                None => s.name().to_string(),
            };
            assert_eq!(spec.parse::<Scheme>().unwrap(), s);
        }
    }
    #[test]
    fn normalize_examples() {
        assert_eq!(normalize(&[1.0, 1.0, 2.0]).unwrap().as_slice(), &[0.25, 0.25, 0.5]);
        assert_eq!(normalize(&[5.0]).unwrap().as_slice(), &[1.0]);
        assert_eq!(normalize(&[0.3; 4]).unwrap().as_slice(), &[0.25; 4]);
        assert!(matches!(normalize(&[0.0, 0.0]), Err(Error::DegenerateWeights)));
        assert!(normalize(&[1.0, -1.0]).is_err());
    }

    #[test]
    fn uniform_examples() {
        assert_eq!(uniform_weights(1).unwrap().as_slice(), &[1.0]);
        assert_eq!(uniform_weights(4).unwrap().as_slice(), &[0.25; 4]);
        assert_eq!(uniform_weights(5).unwrap().as_slice(), &[0.2; 5]);
        assert!(uniform_weights(0).is_err());
    }

    #[test]
    fn norm_weighting_examples() {
        let target = look_at(Vector3::new(0.0, 0.0, 4.0), Vector3::zeros(), Vector3::y()).unwrap();
        let rig = CameraRig::new(target, vec![target, at([1.0, 0.0, 0.0]), at([0.0, 3.0, 1.0])]).unwrap();
        for kind in [NormKind::L1, NormKind::Frobenius] {
            let w = norm_weighting(&rig, kind, DEFAULT_EPSILON).unwrap();
            assert_eq!(w.argmax(), 0);
            assert!(w[0] > 0.9999, "{kind:?}: {w:?}");
        }

        let src = at([1.0, 2.0, 3.0]);
        let rig = CameraRig::new(Pose::IDENTITY, vec![src; 3]).unwrap();
        let w = norm_weighting(&rig, NormKind::L1, DEFAULT_EPSILON).unwrap();
        for v in w.as_slice() {
            assert_abs_diff_eq!(*v, 1.0 / 3.0, epsilon = 1e-15);
        }

        // L1 distances 1 and 3 from the target.
        let rig = CameraRig::new(Pose::IDENTITY, vec![at([1.0, 0.0, 0.0]), at([1.0, 1.0, 1.0])]).unwrap();
        let w = norm_weighting(&rig, NormKind::L1, DEFAULT_EPSILON).unwrap();
        assert_abs_diff_eq!(w[0], 0.749_999_875_000_062_5, epsilon = 1e-12);
        assert_abs_diff_eq!(w[1], 0.250_000_124_999_937_46, epsilon = 1e-12);
    }

    #[test]
    fn gaussian_examples() {
        let rig = CameraRig::new(Pose::IDENTITY, vec![at([0.0; 3]), at([1.0, 0.0, 0.0])]).unwrap();
        let w = gaussian_weighting(&rig, 1.0).unwrap();
        assert_abs_diff_eq!(w[0], 0.731_058_578_630_004_9, epsilon = 1e-12);
        assert_abs_diff_eq!(w[1], 0.268_941_421_369_995_1, epsilon = 1e-12);

        let rig = orbit(3, 5);
        let w = gaussian_weighting(&rig, 1e-12).unwrap();
        for v in w.as_slice() {
            assert_abs_diff_eq!(*v, 0.2, epsilon = 1e-9);
        }

        let w = gaussian_weighting(&rig, 1e4).unwrap();
        let nearest = (0..5)
            .min_by(|&a, &b| {
                center_distance(&rig.target, &rig.sources()[a])
                    .total_cmp(&center_distance(&rig.target, &rig.sources()[b]))
            })
            .unwrap();
        assert!(w[nearest] > 0.999);
    }

    #[test]
    fn gaussian_huge_beta_does_not_underflow() {
        let rig = CameraRig::new(Pose::IDENTITY, vec![at([3.0, 0.0, 0.0]), at([4.0, 0.0, 0.0])]).unwrap();
        let w = gaussian_weighting(&rig, 1e6).unwrap();
        assert_eq!(w.as_slice(), &[1.0, 0.0]);
        // Exact tie in the limit splits evenly.
        let rig = CameraRig::new(Pose::IDENTITY, vec![at([3.0, 0.0, 0.0]), at([0.0, 3.0, 0.0])]).unwrap();
        assert_eq!(gaussian_weighting(&rig, 1e6).unwrap().as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn error_weighting_examples() {
        let rig = CameraRig::new(Pose::IDENTITY, vec![facing([0.0, 0.0, -1.0]), facing([1.0, 0.0, 0.0])]).unwrap();
        let w = error_weighting(&rig, 1.0, DEFAULT_EPSILON).unwrap();
        assert_abs_diff_eq!(w[0], 0.999_998_000_008, epsilon = 1e-12);
        assert_abs_diff_eq!(w[1], 1.999_992_000_032e-6, epsilon = 1e-12);

        let rig = CameraRig::new(Pose::IDENTITY, vec![facing([1.0, 0.0, 0.0]), facing([0.0, 1.0, 0.0])]).unwrap();
        let w = error_weighting(&rig, 1.0, DEFAULT_EPSILON).unwrap();
        assert_abs_diff_eq!(w[0], 0.5, epsilon = 1e-12);

        // α = 0 with center distances 1 and 2.
        let rig = CameraRig::new(Pose::IDENTITY, vec![at([1.0, 0.0, 0.0]), at([0.0, 2.0, 0.0])]).unwrap();
        let w = error_weighting(&rig, 0.0, DEFAULT_EPSILON).unwrap();
        assert_abs_diff_eq!(w[0], 0.666_666_444_444_740_7, epsilon = 1e-12);
        assert_abs_diff_eq!(w[1], 0.333_333_555_555_259_3, epsilon = 1e-12);
    }

    #[test]
    fn error_weighting_degenerate_rig() {
        let rig = CameraRig::new(Pose::IDENTITY, vec![facing([1.0, 0.0, 0.0]), facing([0.0, 1.0, 0.0])]).unwrap();
        assert!(matches!(error_weighting(&rig, 0.5, DEFAULT_EPSILON), Err(Error::DegenerateRig(_))));
        // The angle-only variant never looks at distances.
        assert!(error_weighting(&rig, 1.0, DEFAULT_EPSILON).is_ok());
        let w = compute_weights_or_uniform(&rig, &Scheme::error(0.5), None).unwrap();
        assert_eq!(w.as_slice(), &[0.5, 0.5]);
        // A single source is trivially fully weighted even with a coincident center.
        let rig = CameraRig::new(Pose::IDENTITY, vec![Pose::IDENTITY]).unwrap();
        assert_eq!(error_weighting(&rig, 0.0, DEFAULT_EPSILON).unwrap().as_slice(), &[1.0]);
    }

    #[test]
    fn compute_weights_dispatch() {
        let rig = orbit(11, 3);
        let w = compute_weights(&rig, &Scheme::Mean, None).unwrap();
        assert_eq!(w.as_slice(), &[1.0 / 3.0; 3]);

        // Brute-force the angular error over the rig.
        let angles: Vec<f64> = rig.sources().iter().map(|s| angle_between(&rig.target, s)).collect();
        let nearest = (0..3).min_by(|&a, &b| angles[a].total_cmp(&angles[b])).unwrap();
        let w = compute_weights(&rig, &Scheme::error(1.0), None).unwrap();
        assert_eq!(w.argmax(), nearest);

        assert!(compute_weights(&rig, &Scheme::CrossAttention, None).is_err());
        assert!(compute_weights(&rig, &Scheme::gauss(-1.0), None).is_err());
        assert!(compute_weights(&rig, &Scheme::error(1.5), None).is_err());
    }

    #[test]
    fn aggregate_examples() {
        let l = LatentMatrix::from_columns(vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        let one_hot = WeightVector::new(vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(weighted_aggregate(&l, &one_hot).unwrap(), vec![3.0, 4.0]);

        let l = LatentMatrix::from_columns(vec![vec![1.0, 1.0], vec![3.0, 3.0]]).unwrap();
        assert_eq!(weighted_aggregate(&l, &uniform_weights(2).unwrap()).unwrap(), vec![2.0, 2.0]);

        let l = LatentMatrix::from_columns(vec![vec![4.0, 0.0], vec![0.0, 4.0]]).unwrap();
        let w = WeightVector::new(vec![0.25, 0.75]).unwrap();
        assert_eq!(weighted_aggregate(&l, &w).unwrap(), vec![1.0, 3.0]);

        assert!(matches!(
            weighted_aggregate(&l, &uniform_weights(3).unwrap()),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(LatentMatrix::from_columns(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn coincident_source_dominates() {
        for seed in 0..50 {
            let base = orbit(seed, 5);
            let mut sources = base.sources().to_vec();
            let k = seed as usize % 5;
            sources[k] = base.target;
            let rig = CameraRig::new(base.target, sources).unwrap();
            let others_far = rig
                .sources()
                .iter()
                .enumerate()
                .all(|(i, s)| i == k || center_distance(s, &rig.target) >= 0.1);
            for scheme in all_schemes().into_iter().skip(1) {
                if matches!(scheme, Scheme::DistGauss { .. }) && !others_far {
                    continue;
                }
                let w = compute_weights(&rig, &scheme, None).unwrap();
                assert_eq!(w.argmax(), k, "seed {seed} {scheme}: {w:?}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn schemes_land_on_simplex(seed in any::<u64>(), s in 1usize..=8) {
            let rig = orbit(seed, s);
            for scheme in all_schemes() {
                let w = compute_weights(&rig, &scheme, None).unwrap();
                prop_assert_eq!(w.len(), s);
                prop_assert!(w.as_slice().iter().all(|v| *v >= 0.0));
                prop_assert!((w.as_slice().iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            }
        }

        #[test]
        fn permutation_equivariance(seed in any::<u64>(), s in 2usize..=6, rot in 1usize..6) {
            let rig = orbit(seed, s);
            let perm: Vec<usize> = (0..s).map(|i| (i + rot) % s).rev().collect();
            let permuted = rig.permuted(&perm).unwrap();
            for scheme in all_schemes() {
                let w = compute_weights(&rig, &scheme, None).unwrap();
                let wp = compute_weights(&permuted, &scheme, None).unwrap();
                for (i, &p) in perm.iter().enumerate() {
                    prop_assert!((wp[i] - w[p]).abs() < 1e-15);
                }
            }
        }

        #[test]
        fn uniform_aggregate_is_column_mean(
            cols in proptest::collection::vec(proptest::collection::vec(-10.0..10.0f64, 4), 1..8)
        ) {
            let s = cols.len();
            let l = LatentMatrix::from_columns(cols.clone()).unwrap();
            let agg = weighted_aggregate(&l, &uniform_weights(s).unwrap()).unwrap();
            for (j, v) in agg.iter().enumerate() {
                let mean = cols.iter().map(|c| c[j]).sum::<f64>() / s as f64;
                prop_assert!((v - mean).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn mean_recovery_limits() {
        // All sources on a circle around the target axis at equal angle and distance.
        let target = look_at(Vector3::new(0.0, 0.0, 4.0), Vector3::zeros(), Vector3::y()).unwrap();
        let sources: Vec<Pose> = (0..6)
            .map(|k| {
                let phi = k as f64 * PI / 3.0;
                let eye = Vector3::new(phi.cos(), phi.sin(), 4.0);
                look_at(eye, Vector3::zeros(), Vector3::y()).unwrap()
            })
            .collect();
        let rig = CameraRig::new(target, sources).unwrap();
        for scheme in [Scheme::error(0.0), Scheme::error(0.5), Scheme::error(1.0), Scheme::gauss(1.0)] {
            let w = compute_weights(&rig, &scheme, None).unwrap();
            for v in w.as_slice() {
                assert_abs_diff_eq!(*v, 1.0 / 6.0, epsilon = 1e-6);
            }
        }
        let same = CameraRig::new(target, vec![at([1.0, 1.0, 1.0]); 4]).unwrap();
        for scheme in [Scheme::l1(), Scheme::frobenius()] {
            let w = compute_weights(&same, &scheme, None).unwrap();
            for v in w.as_slice() {
                assert_abs_diff_eq!(*v, 0.25, epsilon = 1e-6);
            }
        }
    }
}
