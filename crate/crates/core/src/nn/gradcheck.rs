use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Below this magnitude both gradients are treated as zero and the absolute
/// difference is reported instead of a ratio.
pub const ZERO_GRADIENT_FLOOR: f64 = 1e-7;

#[derive(Debug, Clone)]
pub struct GradcheckOptions {
    /// Number of coordinates to probe; `None` checks every coordinate.
    pub probes: Option<usize>,
    /// Central-difference step.
    pub step: f64,
    pub seed: u64,
}

impl Default for GradcheckOptions {
    fn default() -> Self {
        GradcheckOptions { probes: Some(64), step: 1e-5, seed: 0 }
    }
}

impl GradcheckOptions {
    pub fn exhaustive() -> Self {
        GradcheckOptions { probes: None, ..Default::default() }
    }

    pub fn probes(n: usize, seed: u64) -> Self {
        GradcheckOptions { probes: Some(n), seed, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub max_relative_error: f64,
    /// Coordinate attaining the maximum.
    pub worst_index: Option<usize>,
    pub checked: usize,
    /// Probes dropped because the perturbation crossed a non-differentiable
    /// point (the kink signature changed).
    pub skipped_kinks: usize,
}

/// `|a − n| / max(|a|, |n|)`, or the plain difference when both are below
/// [`ZERO_GRADIENT_FLOOR`].
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let diff = (analytic - numeric).abs();
    let scale = analytic.abs().max(numeric.abs());
    if scale < ZERO_GRADIENT_FLOOR {
        diff
    } else {
        diff / scale
    }
}

/// Compares `analytic` against central differences of `f` at `params`.
///
/// `f` returns the scalar value together with a kink signature, typically
/// the sign pattern of every ReLU pre-activation. A probe whose `±step`
/// evaluations do not share the signature of the unperturbed point straddles
/// a kink and is skipped.
pub fn gradcheck<F>(
    f: &mut F,
    params: &[f64],
    analytic: &[f64],
    opts: &GradcheckOptions,
) -> GradcheckReport
where
    F: FnMut(&[f64]) -> (f64, Vec<bool>),
{
    assert_eq!(params.len(), analytic.len(), "gradient length must match parameters");
    let coords: Vec<usize> = match opts.probes {
        Some(n) if n < params.len() => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let mut idx = sample(&mut rng, params.len(), n).into_vec();
            idx.sort_unstable();
            idx
        }
        _ => (0..params.len()).collect(),
    };

    let (_, base_pattern) = f(params);
    let mut theta = params.to_vec();
    let mut report = GradcheckReport { max_relative_error: 0.0, worst_index: None, checked: 0, skipped_kinks: 0 };
    for i in coords {
        theta[i] = params[i] + opts.step;
        let (plus, plus_pattern) = f(&theta);
        theta[i] = params[i] - opts.step;
        let (minus, minus_pattern) = f(&theta);
        theta[i] = params[i];
        if plus_pattern != base_pattern || minus_pattern != base_pattern {
            report.skipped_kinks += 1;
            continue;
        }
        let numeric = (plus - minus) / (2.0 * opts.step);
        let err = relative_error(analytic[i], numeric);
        report.checked += 1;
        if !(err <= report.max_relative_error) {
            report.max_relative_error = err;
            report.worst_index = Some(i);
        }
    }
    report
}
