//! Browser demo: orbit a target camera around a generated scene and compare
//! weighting schemes on the same source rig.
//!
//! The demo logic lives in plain functions so it can be tested natively;
//! the `#[wasm_bindgen]` items are thin wrappers.

use camweight::harness::parse_rig;
use camweight::metrics::MetricReport;
use camweight::render::{
    encode_source_view, generate_scene, render_ground_truth, render_novel_view, CameraIntrinsics, CameraSampler,
    FeatureVolume, Frustum, RenderSettings, Scene, VolumeResolution,
};
use camweight::weighting::compute_weights_or_uniform;
use camweight::{compute_weights, CameraRig, Result, Scheme};
use nalgebra::Vector3;
use wasm_bindgen::prelude::*;

const ORBIT_RADIUS: f64 = 4.0;

/// Weights for a rig given as JSON, returned as a JSON array.
pub fn weigh(rig_json: &str, scheme: &str) -> Result<String> {
    let rig = parse_rig(rig_json)?;
    let w = compute_weights(&rig, &scheme.parse()?, None)?;
    Ok(serde_json::to_string(&w)?)
}

/// Camera on the orbit sphere at the given azimuth and elevation (degrees),
/// aimed at the origin.
pub fn orbit_camera(azimuth_deg: f64, elevation_deg: f64) -> Result<Frustum> {
    let (az, el) = (azimuth_deg.to_radians(), elevation_deg.clamp(-89.0, 89.0).to_radians());
    let eye = ORBIT_RADIUS * Vector3::new(el.cos() * az.sin(), el.sin(), el.cos() * az.cos());
    Frustum::looking_at_origin(eye, CameraIntrinsics::default())
}

/// A scene with a fixed set of random source cameras, encoded once.
pub struct Bench {
    scene: Scene,
    volumes: Vec<FeatureVolume>,
}

impl Bench {
    pub fn new(seed: u64, sources: usize) -> Result<Self> {
        let scene = generate_scene(seed, 2, 5)?;
        let sampler = CameraSampler::default();
        let volumes = (0..sources as u64)
            .map(|i| encode_source_view(&scene, &sampler.sample_seeded(camweight::mix_seed(seed, i))?, VolumeResolution::cube(32)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Bench { scene, volumes })
    }

    pub fn rig(&self, target: &Frustum) -> Result<CameraRig> {
        CameraRig::new(*target.pose(), self.volumes.iter().map(|v| *v.frustum().pose()).collect())
    }

    /// Renders the target with `scheme` and the ground truth.
    pub fn frame(&self, target: &Frustum, scheme: &str, size: usize) -> Result<DemoFrame> {
        let scheme: Scheme = scheme.parse()?;
        let rig = self.rig(target)?;
        let w = compute_weights_or_uniform(&rig, &scheme, None)?;
        let settings = RenderSettings { width: size, height: size, samples: 48, seed: 0 };
        let render = render_novel_view(&self.volumes, target, &w, &settings)?;
        let truth = render_ground_truth(&self.scene, target, &settings)?;
        let metrics = MetricReport::compute(&render, &truth)?;
        Ok(DemoFrame {
            size,
            weights: w.into_vec(),
            render_rgba: render.to_rgba8(),
            truth_rgba: truth.to_rgba8(),
            psnr: metrics.psnr,
            ssim: metrics.ssim,
        })
    }
}

#[wasm_bindgen]
pub struct DemoFrame {
    size: usize,
    weights: Vec<f64>,
    render_rgba: Vec<u8>,
    truth_rgba: Vec<u8>,
    psnr: f64,
    ssim: f64,
}

#[wasm_bindgen]
impl DemoFrame {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn weights(&self) -> Vec<f64> {
        self.weights.clone()
    }

    pub fn render_rgba(&self) -> Vec<u8> {
        self.render_rgba.clone()
    }

    pub fn truth_rgba(&self) -> Vec<u8> {
        self.truth_rgba.clone()
    }

    pub fn psnr(&self) -> f64 {
        self.psnr
    }

    pub fn ssim(&self) -> f64 {
        self.ssim
    }
}

fn js(e: camweight::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = weigh)]
pub fn weigh_js(rig_json: &str, scheme: &str) -> std::result::Result<String, JsError> {
    weigh(rig_json, scheme).map_err(js)
}

#[wasm_bindgen(js_name = Bench)]
pub struct JsBench(Bench);

#[wasm_bindgen(js_class = Bench)]
impl JsBench {
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32, sources: usize) -> std::result::Result<JsBench, JsError> {
        Bench::new(seed.into(), sources).map(JsBench).map_err(js)
    }

    /// The current rig as JSON, for the weighing panel.
    pub fn rig_json(&self, azimuth_deg: f64, elevation_deg: f64) -> std::result::Result<String, JsError> {
        let rig = orbit_camera(azimuth_deg, elevation_deg).and_then(|t| self.0.rig(&t)).map_err(js)?;
        Ok(camweight::harness::rig_to_json(&rig))
    }

    pub fn frame(
        &self,
        azimuth_deg: f64,
        elevation_deg: f64,
        scheme: &str,
        size: usize,
    ) -> std::result::Result<DemoFrame, JsError> {
        orbit_camera(azimuth_deg, elevation_deg).and_then(|t| self.0.frame(&t, scheme, size)).map_err(js)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frames_for_each_scheme() {
        let bench = Bench::new(3, 4).unwrap();
        let target = orbit_camera(30.0, 15.0).unwrap();
        for scheme in ["mean", "l1", "fro", "gauss:1", "err:1", "err:0.5"] {
            let f = bench.frame(&target, scheme, 16).unwrap();
            assert_eq!(f.render_rgba.len(), 16 * 16 * 4);
            assert_eq!(f.truth_rgba.len(), 16 * 16 * 4);
            assert!((f.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(f.psnr > 0.0 && f.ssim <= 1.0);
        }
        assert!(bench.frame(&target, "nope", 16).is_err());
    }

    #[test]
    fn weigh_round_trips_the_rig_json() {
        let bench = Bench::new(1, 3).unwrap();
        let rig = bench.rig(&orbit_camera(0.0, 0.0).unwrap()).unwrap();
        let json = camweight::harness::rig_to_json(&rig);
        let w: Vec<f64> = serde_json::from_str(&weigh(&json, "mean").unwrap()).unwrap();
        assert_eq!(w.len(), 3);
        assert!(weigh("{}", "mean").is_err());
    }

    #[test]
    fn orbit_camera_sits_on_the_sphere() {
        let f = orbit_camera(90.0, 0.0).unwrap();
        assert!((f.center() - Vector3::new(ORBIT_RADIUS, 0.0, 0.0)).norm() < 1e-12);
        assert!((orbit_camera(10.0, 95.0).unwrap().center().norm() - ORBIT_RADIUS).abs() < 1e-12);
    }
}
