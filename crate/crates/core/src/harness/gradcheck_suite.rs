use std::fmt;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::attention::{caw_loss_and_grads, CawModule, TrainingExample};
use crate::embedding::{EmbeddingConfig, PoseEmbedder};
use crate::error::Result;
use crate::nn::{gradcheck, softmax_backward, softmax_stable, GradcheckOptions, GradcheckReport, MlpParams};
use crate::pose::look_at;
use crate::render::{
    encode_source_view, generate_scene, render_ground_truth, CameraIntrinsics, Frustum, RenderSettings,
    VolumeResolution,
};

/// Result of checking one differentiable map.
#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckLine {
    pub name: &'static str,
    pub report: GradcheckReport,
    pub tolerance: f64,
}

impl GradcheckLine {
    pub fn passed(&self) -> bool {
        self.report.checked > 0 && self.report.max_relative_error < self.tolerance
    }
}

impl fmt::Display for GradcheckLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<4} {:<22} max rel err {:.3e} (tol {:.0e}, {} checked, {} kinks skipped)",
            if self.passed() { "ok" } else { "FAIL" },
            self.name,
            self.report.max_relative_error,
            self.tolerance,
            self.report.checked,
            self.report.skipped_kinks
        )
    }
}

/// Scales every analytic gradient, which any working check must catch.
const FAULT_SCALE: f64 = 1.001;

fn corrupt(mut g: Vec<f64>, inject_fault: bool) -> Vec<f64> {
    if inject_fault {
        g.iter_mut().for_each(|v| *v *= FAULT_SCALE);
    }
    g
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn check_mlp(inject_fault: bool) -> Result<GradcheckLine> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut mlp = MlpParams::init(&[6, 10, 8, 4], 7)?;
    let x = random_vec(&mut rng, 6);
    let c = random_vec(&mut rng, 4);
    let (_, tape) = mlp.forward(&x)?;
    let analytic = corrupt(mlp.backward(&tape, &c)?.0.to_flat(), inject_fault);
    let params = mlp.to_flat();
    let mut f = |theta: &[f64]| {
        mlp.set_flat(theta).expect("same length");
        let (y, tape) = mlp.forward(&x).expect("fixed input");
        (y.iter().zip(&c).map(|(a, b)| a * b).sum(), tape.relu_pattern())
    };
    let report = gradcheck(&mut f, &params, &analytic, &GradcheckOptions::exhaustive());
    Ok(GradcheckLine { name: "mlp (3 layers)", report, tolerance: 1e-6 })
}

fn check_softmax(inject_fault: bool) -> Result<GradcheckLine> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let z = random_vec(&mut rng, 6);
    let g = random_vec(&mut rng, 6);
    let analytic = corrupt(softmax_backward(&softmax_stable(&z), &g), inject_fault);
    let mut f = |z: &[f64]| (softmax_stable(z).iter().zip(&g).map(|(p, g)| p * g).sum(), vec![]);
    let report = gradcheck(&mut f, &z, &analytic, &GradcheckOptions::exhaustive());
    Ok(GradcheckLine { name: "softmax", report, tolerance: 1e-6 })
}

fn check_embedding(name: &'static str, config: EmbeddingConfig, inject_fault: bool) -> Result<GradcheckLine> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut embedder = PoseEmbedder::new(config, 5)?;
    let pose = look_at(Vector3::new(1.5, 2.0, 3.0), Vector3::new(0.1, -0.2, 0.05), Vector3::y())?;
    let c = random_vec(&mut rng, embedder.output_dim());
    let (_, tape) = embedder.embed_with_tape(&pose)?;
    let analytic = corrupt(embedder.mlp().backward(&tape, &c)?.0.to_flat(), inject_fault);
    let params = embedder.mlp().to_flat();
    let mut f = |theta: &[f64]| {
        embedder.mlp_mut().set_flat(theta).expect("same length");
        let (y, tape) = embedder.embed_with_tape(&pose).expect("valid pose");
        (y.iter().zip(&c).map(|(a, b)| a * b).sum(), tape.relu_pattern())
    };
    let report = gradcheck(&mut f, &params, &analytic, &GradcheckOptions::probes(400, 4));
    Ok(GradcheckLine { name, report, tolerance: 1e-6 })
}

/// An 8×8 training example: three sources around a generated scene.
fn small_example() -> Result<(TrainingExample, RenderSettings)> {
    let scene = generate_scene(17, 3, 5)?;
    let k = CameraIntrinsics::default();
    let cam = |e: [f64; 3]| Frustum::looking_at_origin(Vector3::from(e), k);
    let settings = RenderSettings { width: 8, height: 8, samples: 32, seed: 3 };
    let target = cam([0.8, 1.2, 3.7])?;
    let volumes = [[2.0, 0.3, 3.4], [-3.5, 1.0, 1.5], [0.2, -3.0, 2.6]]
        .iter()
        .map(|e| encode_source_view(&scene, &cam(*e)?, VolumeResolution::cube(16)))
        .collect::<Result<Vec<_>>>()?;
    let reference = render_ground_truth(&scene, &target, &settings)?;
    Ok((TrainingExample::new(volumes, target, reference)?, settings))
}

fn check_caw(inject_fault: bool) -> Result<GradcheckLine> {
    let (example, settings) = small_example()?;
    let mut module = CawModule::new(EmbeddingConfig::default(), 9)?;
    let out = caw_loss_and_grads(&module, &example, &settings)?;
    let analytic = corrupt(out.grads.to_flat(), inject_fault);
    let params = module.params().to_flat();
    let mut f = |theta: &[f64]| {
        module.params_mut().set_flat(theta).expect("same length");
        let r = caw_loss_and_grads(&module, &example, &settings).expect("fixed example");
        (r.loss, r.kinks)
    };
    let report = gradcheck(&mut f, &params, &analytic, &GradcheckOptions::probes(120, 5));
    Ok(GradcheckLine { name: "caw render loss (8x8)", report, tolerance: 1e-4 })
}

/// Checks every differentiable map against central differences. With
/// `inject_fault` the analytic gradients are deliberately perturbed, so
/// every line must fail.
pub fn run_gradcheck_suite(inject_fault: bool) -> Result<Vec<GradcheckLine>> {
    Ok(vec![
        check_mlp(inject_fault)?,
        check_softmax(inject_fault)?,
        check_embedding("embedding (geometric)", EmbeddingConfig::default(), inject_fault)?,
        check_embedding("embedding (flattened)", EmbeddingConfig::flattened(), inject_fault)?,
        check_caw(inject_fault)?,
    ])
}
