use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::experiment::{run_experiment, ExperimentConfig, Protocol};
use super::results::summarize;
use crate::attention::{train_caw, CawModule, TrainConfig, TrainHistory, TrainingExample};
use crate::embedding::EmbeddingConfig;
use crate::error::{Error, Result};
use crate::mix_seed;
use crate::pose::look_at;
use crate::render::{
    encode_source_view, generate_scene, render_ground_truth, sample_close_view, CameraIntrinsics, CameraSampler,
    Frustum, RenderSettings, VolumeResolution,
};
use crate::weighting::Scheme;

const STREAM_TRAINING: u64 = 0x7452_4149;

/// How training rigs are generated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingSetConfig {
    pub scenes: usize,
    pub sources: usize,
    /// Independent rigs (target plus sources) drawn per scene.
    pub rigs_per_scene: usize,
    pub seed: u64,
    /// Fraction of rigs that get one source within `close_threshold` of the
    /// target.
    pub close_fraction: f64,
    pub close_threshold: f64,
    pub render: RenderSettings,
    pub volume: VolumeResolution,
    pub sampler: CameraSampler,
    pub blobs: (usize, usize),
}

impl Default for TrainingSetConfig {
    fn default() -> Self {
        TrainingSetConfig {
            scenes: 50,
            sources: 5,
            rigs_per_scene: 8,
            seed: 0,
            close_fraction: 0.0,
            close_threshold: 20f64.to_radians(),
            render: RenderSettings { width: 16, height: 16, samples: 32, seed: 0 },
            volume: VolumeResolution::cube(24),
            sampler: CameraSampler::default(),
            blobs: (2, 5),
        }
    }
}

/// `rigs_per_scene` rigs for each of `scenes` scenes. Scenes are seeded
/// independently of the experiment protocols' scenes, so evaluation scenes
/// are held out.
pub fn build_training_set(cfg: &TrainingSetConfig) -> Result<Vec<TrainingExample>> {
    if cfg.scenes == 0 || cfg.sources == 0 || cfg.rigs_per_scene == 0 {
        return Err(Error::InvalidConfig("training needs at least one scene, rig and source".into()));
    }
    if !(0.0..=1.0).contains(&cfg.close_fraction) {
        return Err(Error::InvalidConfig(format!("close fraction {} outside [0, 1]", cfg.close_fraction)));
    }
    let base = mix_seed(cfg.seed, STREAM_TRAINING);
    let mut examples = Vec::with_capacity(cfg.scenes * cfg.rigs_per_scene);
    for i in 0..cfg.scenes {
        let seed = mix_seed(base, i as u64);
        let scene = generate_scene(seed, cfg.blobs.0, cfg.blobs.1)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..cfg.rigs_per_scene {
            let target = cfg.sampler.sample(&mut rng)?;
            let mut sources = Vec::with_capacity(cfg.sources);
            if rng.gen_bool(cfg.close_fraction) {
                sources.push(sample_close_view(&cfg.sampler, &target, cfg.close_threshold, &mut rng)?);
            }
            while sources.len() < cfg.sources {
                sources.push(cfg.sampler.sample(&mut rng)?);
            }
            let volumes =
                sources.iter().map(|f| encode_source_view(&scene, f, cfg.volume)).collect::<Result<Vec<_>>>()?;
            let reference = render_ground_truth(&scene, &target, &cfg.render)?;
            examples.push(TrainingExample::new(volumes, target, reference)?);
        }
    }
    Ok(examples)
}

/// Builds the training set, initializes a module from `module_seed`, and
/// trains it.
pub fn train_on_scenes(
    set: &TrainingSetConfig,
    train: &TrainConfig,
    embedding: EmbeddingConfig,
    module_seed: u64,
) -> Result<(CawModule, TrainHistory)> {
    let examples = build_training_set(set)?;
    let mut module = CawModule::new(embedding, module_seed)?;
    let cfg = TrainConfig { render: set.render, ..*train };
    let history = train_caw(&mut module, &examples, &cfg)?;
    Ok((module, history))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scenes: usize,
    pub caw_psnr: f64,
    pub mean_psnr: f64,
    pub caw_ssim: f64,
    pub mean_ssim: f64,
}

/// Mean PSNR and SSIM of `module` against uniform weighting under an
/// experiment protocol.
pub fn evaluate_weighting(module: &CawModule, base: &ExperimentConfig) -> Result<EvalReport> {
    let cfg = ExperimentConfig {
        schemes: vec![Scheme::Mean, Scheme::CrossAttention],
        caw: Some(module.clone()),
        ..base.clone()
    };
    let summary = summarize(&run_experiment(&cfg)?.rows);
    let find = |name: &str| {
        summary.iter().find(|r| r.scheme == name).ok_or_else(|| Error::InvalidConfig(format!("no {name} rows")))
    };
    let (caw, mean) = (find("caw")?, find("mean")?);
    Ok(EvalReport {
        scenes: caw.scenes,
        caw_psnr: caw.mean_psnr,
        mean_psnr: mean.mean_psnr,
        caw_ssim: caw.mean_ssim,
        mean_ssim: mean.mean_ssim,
    })
}

/// A two-source rig where uniform weighting is provably suboptimal: source
/// 0 coincides with the target and source 1 looks away from the scene, so
/// its volume is empty and blending it in only dilutes density.
pub fn one_hot_example(seed: u64, settings: &RenderSettings, volume: VolumeResolution) -> Result<TrainingExample> {
    let scene = generate_scene(seed, 2, 4)?;
    let k = CameraIntrinsics::default();
    let target = Frustum::looking_at_origin(Vector3::new(0.6, 1.2, 3.7), k)?;
    let away = Frustum::new(look_at(Vector3::new(3.0, -1.0, -2.5), Vector3::new(6.0, -2.0, -5.0), Vector3::y())?, k)?;
    let volumes = vec![encode_source_view(&scene, &target, volume)?, encode_source_view(&scene, &away, volume)?];
    let reference = render_ground_truth(&scene, &target, settings)?;
    TrainingExample::new(volumes, target, reference)
}

/// Default evaluation config for held-out scenes.
pub fn held_out_config(protocol: Protocol, scenes: usize, seed: u64) -> ExperimentConfig {
    ExperimentConfig { scenes, seed, ..ExperimentConfig::new(protocol) }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn training_set_is_seeded_and_sized() {
        let cfg = TrainingSetConfig {
            scenes: 3,
            render: RenderSettings { width: 8, height: 8, samples: 16, seed: 0 },
            volume: VolumeResolution::cube(8),
            ..Default::default()
        };
        let a = build_training_set(&cfg).unwrap();
        let b = build_training_set(&cfg).unwrap();
        assert_eq!(a.len(), cfg.scenes * cfg.rigs_per_scene);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.rig, y.rig);
            assert_eq!(x.reference, y.reference);
            assert_eq!(x.rig.num_sources(), 5);
        }
        let close = build_training_set(&TrainingSetConfig { close_fraction: 1.0, ..cfg }).unwrap();
        for ex in &close {
            assert!(crate::pose::angle_between(&ex.rig.target, &ex.rig.sources()[0]) < cfg.close_threshold);
        }
    }

    #[test]
    fn away_source_sees_nothing() {
        let settings = RenderSettings { width: 8, height: 8, samples: 16, seed: 0 };
        let ex = one_hot_example(1, &settings, VolumeResolution::cube(12)).unwrap();
        let (_, away) = (&ex.volumes[0], &ex.volumes[1]);
        let res = away.resolution();
        for iz in 0..res.nz {
            for iy in 0..res.ny {
                for ix in 0..res.nx {
                    assert!(away.cell(ix, iy, iz).0[3] < 1e-9);
                }
            }
        }
    }
}
