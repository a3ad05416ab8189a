use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::results::ResultRow;
use crate::attention::CawModule;
use crate::error::{Error, Result};
use crate::metrics::{psnr, ssim};
use crate::mix_seed;
use crate::pose::CameraRig;
use crate::render::{
    encode_source_view, generate_scene, render_ground_truth, render_novel_view, sample_close_view, CameraSampler,
    FeatureVolume, Frustum, Image, RenderSettings, Scene, VolumeResolution,
};
use crate::weighting::{compute_weights_or_uniform, Scheme};

const STREAM_CAMERAS: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    /// `S` random sources and one random target per scene.
    RandomViews,
    /// Like random, but one source is rejection-sampled near the target.
    OneCloseView,
    /// Several random targets per scene, nested source subsets of growing
    /// size, metrics averaged over the targets.
    ViewSweep,
}

impl Protocol {
    pub fn name(&self) -> &'static str {
        match self {
            Protocol::RandomViews => "random",
            Protocol::OneCloseView => "close",
            Protocol::ViewSweep => "sweep",
        }
    }
}

impl std::str::FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Protocol::RandomViews),
            "close" => Ok(Protocol::OneCloseView),
            "sweep" => Ok(Protocol::ViewSweep),
            _ => Err(Error::InvalidConfig(format!("unknown protocol {s:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub protocol: Protocol,
    pub scenes: usize,
    /// Sources per rig for the random and close protocols.
    pub sources: usize,
    /// Radians.
    pub close_threshold: f64,
    pub view_counts: Vec<usize>,
    /// Random targets per scene in the sweep protocol.
    pub sweep_targets: usize,
    pub schemes: Vec<Scheme>,
    pub caw: Option<CawModule>,
    pub seed: u64,
    pub render: RenderSettings,
    pub volume: VolumeResolution,
    pub sampler: CameraSampler,
    pub blobs: (usize, usize),
}

impl ExperimentConfig {
    pub fn new(protocol: Protocol) -> Self {
        ExperimentConfig {
            protocol,
            scenes: 20,
            sources: 5,
            close_threshold: 10f64.to_radians(),
            view_counts: vec![2, 8, 16, 32],
            sweep_targets: 3,
            schemes: vec![Scheme::Mean, Scheme::error(1.0)],
            caw: None,
            seed: 0,
            render: RenderSettings::default(),
            volume: VolumeResolution::default(),
            sampler: CameraSampler::default(),
            blobs: (2, 5),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.scenes == 0 {
            return bad("need at least one scene");
        }
        if self.sources == 0 || self.view_counts.is_empty() || self.view_counts.contains(&0) {
            return bad("source counts must be positive");
        }
        if !(self.close_threshold > 0.0 && self.close_threshold < std::f64::consts::PI) {
            return bad("close-view threshold must lie in (0, π)");
        }
        if self.sweep_targets == 0 {
            return bad("sweep needs at least one target per scene");
        }
        if self.schemes.is_empty() {
            return bad("no schemes to compare");
        }
        if self.schemes.contains(&Scheme::CrossAttention) && self.caw.is_none() {
            return bad("cross-attention scheme requested without a module");
        }
        for s in &self.schemes {
            s.validate()?;
        }
        self.sampler.validate()
    }

    pub fn scene_seed(&self, scene_id: usize) -> u64 {
        mix_seed(self.seed, scene_id as u64)
    }
}

/// The rig a row was rendered from, for auditing and reproduction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneRig {
    pub scene_id: usize,
    pub seed: u64,
    pub rig: CameraRig,
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentOutput {
    /// Sorted by scene, then scheme (in configuration order), then `S`.
    pub rows: Vec<ResultRow>,
    pub rigs: Vec<SceneRig>,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let per_scene = map_scenes(cfg.scenes, |scene_id| {
        run_scene(cfg, scene_id).map_err(|e| Error::Scene { scene_id, source: Box::new(e) })
    });
    let mut out = ExperimentOutput::default();
    for result in per_scene {
        let (rows, rigs) = result?;
        out.rows.extend(rows);
        out.rigs.extend(rigs);
    }
    let scheme_rank = |name: &str, param: Option<f64>| {
        cfg.schemes.iter().position(|s| s.name() == name && s.param() == param).unwrap_or(usize::MAX)
    };
    out.rows.sort_by_key(|r| (r.scene_id, scheme_rank(&r.scheme, r.param), r.num_sources));
    Ok(out)
}

pub fn run_random_views(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    run_experiment(&ExperimentConfig { protocol: Protocol::RandomViews, ..cfg.clone() })
}

pub fn run_one_close_view(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    run_experiment(&ExperimentConfig { protocol: Protocol::OneCloseView, ..cfg.clone() })
}

pub fn run_view_sweep(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    run_experiment(&ExperimentConfig { protocol: Protocol::ViewSweep, ..cfg.clone() })
}

fn map_scenes<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
    crate::render::map_rows(n, f)
}

fn encode_all(scene: &Scene, frustums: &[Frustum], res: VolumeResolution) -> Result<Vec<FeatureVolume>> {
    frustums.iter().map(|f| encode_source_view(scene, f, res)).collect()
}

fn run_scene(cfg: &ExperimentConfig, scene_id: usize) -> Result<(Vec<ResultRow>, Vec<SceneRig>)> {
    let seed = cfg.scene_seed(scene_id);
    let scene = generate_scene(seed, cfg.blobs.0, cfg.blobs.1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, STREAM_CAMERAS));
    let render = cfg.render.with_seed(seed);

    let (targets, sources): (Vec<Frustum>, Vec<Frustum>) = match cfg.protocol {
        Protocol::RandomViews | Protocol::OneCloseView => {
            let target = cfg.sampler.sample(&mut rng)?;
            let mut sources = Vec::with_capacity(cfg.sources);
            if cfg.protocol == Protocol::OneCloseView {
                sources.push(sample_close_view(&cfg.sampler, &target, cfg.close_threshold, &mut rng)?);
            }
            while sources.len() < cfg.sources {
                sources.push(cfg.sampler.sample(&mut rng)?);
            }
            (vec![target], sources)
        }
        Protocol::ViewSweep => {
            let targets = (0..cfg.sweep_targets).map(|_| cfg.sampler.sample(&mut rng)).collect::<Result<_>>()?;
            let max = *cfg.view_counts.iter().max().expect("validated non-empty");
            let sources = (0..max).map(|_| cfg.sampler.sample(&mut rng)).collect::<Result<_>>()?;
            (targets, sources)
        }
    };
    let volumes = encode_all(&scene, &sources, cfg.volume)?;
    let truths = targets.iter().map(|t| render_ground_truth(&scene, t, &render)).collect::<Result<Vec<Image>>>()?;

    let counts: Vec<usize> = match cfg.protocol {
        Protocol::ViewSweep => cfg.view_counts.clone(),
        _ => vec![cfg.sources],
    };
    let mut rows = Vec::new();
    let mut rigs = Vec::new();
    for &s in &counts {
        let source_poses: Vec<_> = sources[..s].iter().map(|f| *f.pose()).collect();
        let target_rigs = targets
            .iter()
            .map(|t| CameraRig::new(*t.pose(), source_poses.clone()))
            .collect::<Result<Vec<_>>>()?;
        for rig in &target_rigs {
            rigs.push(SceneRig { scene_id, seed, rig: rig.clone() });
        }
        for scheme in &cfg.schemes {
            let (mut psnr_sum, mut ssim_sum) = (0.0, 0.0);
            for ((target, truth), rig) in targets.iter().zip(&truths).zip(&target_rigs) {
                let w = compute_weights_or_uniform(rig, scheme, cfg.caw.as_ref().filter(|_| *scheme == Scheme::CrossAttention))?;
                let image = render_novel_view(&volumes[..s], target, &w, &render)?;
                psnr_sum += psnr(&image, truth)?;
                ssim_sum += ssim(&image, truth)?;
            }
            let n = targets.len() as f64;
            rows.push(ResultRow {
                scene_id,
                protocol: cfg.protocol.name().into(),
                scheme: scheme.name().into(),
                param: scheme.param(),
                num_sources: s,
                seed,
                psnr: psnr_sum / n,
                ssim: ssim_sum / n,
            });
        }
    }
    Ok((rows, rigs))
}
