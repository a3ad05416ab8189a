use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::camera::Frustum;
use super::image::Image;
use super::map_rows;
use super::scene::{field_query, Scene};
use super::volume::{sample_volume, FeatureVolume, LATENT_LEN};
use crate::error::{Error, Result};
use crate::mix_seed;
use crate::weighting::WeightVector;

/// Lower bound on the aggregated validity when renormalizing colors.
pub const DECODER_VALIDITY_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderSettings {
    pub width: usize,
    pub height: usize,
    /// Stratified samples per ray.
    pub samples: usize,
    /// Seeds the per-ray stratification jitter.
    pub seed: u64,
}

impl Default for RenderSettings {
    fn default() -> Self {
        RenderSettings { width: 64, height: 64, samples: 64, seed: 0 }
    }
}

impl RenderSettings {
    pub fn with_seed(self, seed: u64) -> Self {
        RenderSettings { seed, ..self }
    }

    fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.samples == 0 {
            return Err(Error::InvalidConfig(format!("render settings must be non-zero: {self:?}")));
        }
        Ok(())
    }
}

/// One stratified ray: sample depths `z_near + (k + u)·Δ` for a single
/// jitter `u ∈ [0, 1)` per ray, all with segment length `Δ·‖dir‖`.
struct Ray {
    origin: Vector3<f64>,
    dir: Vector3<f64>,
    first_depth: f64,
    depth_step: f64,
    segment: f64,
}

impl Ray {
    fn new(frustum: &Frustum, settings: &RenderSettings, px: usize, py: usize) -> Self {
        let dir = frustum.pixel_ray(px, py, settings.width, settings.height);
        let k = frustum.intrinsics();
        let depth_step = (k.z_far - k.z_near) / settings.samples as f64;
        let pixel_index = (py * settings.width + px) as u64;
        let jitter = (mix_seed(settings.seed, pixel_index) >> 11) as f64 / (1u64 << 53) as f64;
        Ray {
            origin: frustum.center(),
            dir,
            first_depth: k.z_near + jitter * depth_step,
            depth_step,
            segment: depth_step * dir.norm(),
        }
    }

    fn point(&self, k: usize) -> Vector3<f64> {
        self.origin + (self.first_depth + k as f64 * self.depth_step) * self.dir
    }
}

/// Front-to-back emission-absorption compositing over a black background.
fn composite(samples: impl Iterator<Item = ([f64; 3], f64)>, segment: f64) -> [f64; 3] {
    let mut transmittance = 1.0;
    let mut pixel = [0.0; 3];
    for (color, density) in samples {
        let keep = (-density * segment).exp();
        let w = transmittance * (1.0 - keep);
        for c in 0..3 {
            pixel[c] += w * color[c];
        }
        transmittance *= keep;
    }
    pixel.map(|v| v.clamp(0.0, 1.0))
}

fn render_rows<F>(settings: &RenderSettings, shade: F) -> Image
where
    F: Fn(usize, usize) -> [f64; 3] + Sync + Send,
{
    let rows = map_rows(settings.height, |py| {
        (0..settings.width).flat_map(|px| shade(px, py)).collect::<Vec<f64>>()
    });
    let data = rows.into_iter().flatten().collect();
    Image::from_rgb(settings.width, settings.height, data).expect("row lengths are consistent")
}

/// Reference image: the same integrator applied to the analytic field.
pub fn render_ground_truth(scene: &Scene, target: &Frustum, settings: &RenderSettings) -> Result<Image> {
    settings.validate()?;
    Ok(render_rows(settings, |px, py| {
        let ray = Ray::new(target, settings, px, py);
        composite(
            (0..settings.samples).map(|k| {
                let q = field_query(scene, &ray.point(k));
                (q.color, q.density)
            }),
            ray.segment,
        )
    }))
}

/// Analytic decoder from an aggregated latent and aggregated validity to
/// color and density.
///
/// Color is the aggregated color renormalized by the aggregated validity,
/// so it is a convex blend of the observing sources' colors. Density is the
/// aggregated density as is: every source that did not observe a point
/// contributes zero density there, so density is attenuated by the weight
/// mass of the sources that saw it.
pub fn decode(latent: &[f64; LATENT_LEN], validity: f64) -> ([f64; 3], f64) {
    let norm = validity.max(DECODER_VALIDITY_FLOOR);
    let color = [latent[0], latent[1], latent[2]].map(|v| (v / norm).clamp(0.0, 1.0));
    (color, latent[3].max(0.0))
}

fn check_inputs(volumes: &[FeatureVolume], w: &WeightVector, settings: &RenderSettings) -> Result<()> {
    settings.validate()?;
    if volumes.len() != w.len() {
        return Err(Error::dims(volumes.len(), w.len()));
    }
    Ok(())
}

/// Renders `target` from per-source feature volumes fused with weights `w`.
pub fn render_novel_view(
    volumes: &[FeatureVolume],
    target: &Frustum,
    w: &WeightVector,
    settings: &RenderSettings,
) -> Result<Image> {
    check_inputs(volumes, w, settings)?;
    let weights = w.as_slice();
    Ok(render_rows(settings, |px, py| {
        let ray = Ray::new(target, settings, px, py);
        composite(
            (0..settings.samples).map(|k| {
                let p = ray.point(k);
                let mut latent = [0.0; LATENT_LEN];
                let mut validity = 0.0;
                for (vol, &wi) in volumes.iter().zip(weights) {
                    let (l, v) = sample_volume(vol, &p);
                    for c in 0..LATENT_LEN {
                        latent[c] += wi * l[c];
                    }
                    validity += wi * v;
                }
                decode(&latent, validity)
            }),
            ray.segment,
        )
    }))
}

/// Uniform-average baseline: sums the sampled latents and divides by `S`.
pub fn render_mean_view(volumes: &[FeatureVolume], target: &Frustum, settings: &RenderSettings) -> Result<Image> {
    settings.validate()?;
    if volumes.is_empty() {
        return Err(Error::EmptyRig);
    }
    let s = volumes.len() as f64;
    Ok(render_rows(settings, |px, py| {
        let ray = Ray::new(target, settings, px, py);
        composite(
            (0..settings.samples).map(|k| {
                let p = ray.point(k);
                let mut sum = [0.0; LATENT_LEN];
                let mut validity = 0.0;
                for vol in volumes {
                    let (l, v) = sample_volume(vol, &p);
                    for c in 0..LATENT_LEN {
                        sum[c] += l[c];
                    }
                    validity += v;
                }
                decode(&sum.map(|v| v / s), validity / s)
            }),
            ray.segment,
        )
    }))
}

/// Rendered image, its pixel MSE against a reference, and the gradient of
/// that MSE with respect to the source weights.
#[derive(Debug, Clone)]
pub struct RenderGrad {
    pub image: Image,
    pub loss: f64,
    pub grad_weights: Vec<f64>,
}

/// [`render_novel_view`] plus the exact gradient of the mean squared error
/// against `reference` (averaged over pixels and channels) with respect to
/// `w`. Gradients are zero through active clamps.
pub fn render_novel_view_with_grad(
    volumes: &[FeatureVolume],
    target: &Frustum,
    w: &WeightVector,
    settings: &RenderSettings,
    reference: &Image,
) -> Result<RenderGrad> {
    check_inputs(volumes, w, settings)?;
    if reference.width() != settings.width || reference.height() != settings.height {
        return Err(Error::dims(settings.width * settings.height, reference.width() * reference.height()));
    }
    let s = volumes.len();
    let n = settings.samples;
    let weights = w.as_slice();
    let scale = 2.0 / (settings.width * settings.height * 3) as f64;

    struct RowOut {
        pixels: Vec<f64>,
        sq_err: f64,
        grad: Vec<f64>,
    }

    let rows = map_rows(settings.height, |py| {
        let mut out = RowOut { pixels: Vec::with_capacity(settings.width * 3), sq_err: 0.0, grad: vec![0.0; s] };
        // Per-sample, per-source latents and validities for the backward pass.
        let mut latents = vec![[0.0; LATENT_LEN]; n * s];
        let mut valid = vec![0.0; n * s];
        let mut agg = vec![[0.0; LATENT_LEN]; n];
        let mut agg_valid = vec![0.0; n];
        let mut colors = vec![[0.0; 3]; n];
        let mut trans = vec![0.0; n + 1];
        let mut absorb = vec![0.0; n];
        for px in 0..settings.width {
            let ray = Ray::new(target, settings, px, py);
            trans[0] = 1.0;
            let mut pixel = [0.0; 3];
            for k in 0..n {
                let p = ray.point(k);
                let mut lat = [0.0; LATENT_LEN];
                let mut v = 0.0;
                for (i, vol) in volumes.iter().enumerate() {
                    let (l, vi) = sample_volume(vol, &p);
                    latents[k * s + i] = l;
                    valid[k * s + i] = vi;
                    for c in 0..LATENT_LEN {
                        lat[c] += weights[i] * l[c];
                    }
                    v += weights[i] * vi;
                }
                agg[k] = lat;
                agg_valid[k] = v;
                let (color, density) = decode(&lat, v);
                colors[k] = color;
                let a = (-density * ray.segment).exp();
                absorb[k] = a;
                let contrib = trans[k] * (1.0 - a);
                for c in 0..3 {
                    pixel[c] += contrib * color[c];
                }
                trans[k + 1] = trans[k] * a;
            }

            let reference_px = reference.pixel(px, py);
            let mut d_pixel = [0.0; 3];
            for c in 0..3 {
                let clamped = pixel[c].clamp(0.0, 1.0);
                let diff = clamped - reference_px[c];
                out.sq_err += diff * diff;
                if clamped == pixel[c] {
                    d_pixel[c] = scale * diff;
                }
                out.pixels.push(clamped);
            }

            // Backward through compositing. `tail` holds Σ_{j>k} T_j α_j c_j.
            let mut tail = [0.0; 3];
            for k in (0..n).rev() {
                let a = absorb[k];
                let contrib = trans[k] * (1.0 - a);
                // ∂pixel/∂σ_k = δ·(T_{k+1}·c_k − tail_k)
                let mut d_density = 0.0;
                for c in 0..3 {
                    d_density += d_pixel[c] * ray.segment * (trans[k + 1] * colors[k][c] - tail[c]);
                }
                let mut d_latent = [0.0; LATENT_LEN];
                let mut d_valid = 0.0;
                let v = agg_valid[k];
                let norm = v.max(DECODER_VALIDITY_FLOOR);
                for c in 0..3 {
                    let raw = agg[k][c] / norm;
                    if !(0.0..=1.0).contains(&raw) {
                        continue;
                    }
                    let d_color = d_pixel[c] * contrib;
                    d_latent[c] = d_color / norm;
                    if v > DECODER_VALIDITY_FLOOR {
                        d_valid -= d_color * agg[k][c] / (norm * norm);
                    }
                }
                if agg[k][3] > 0.0 {
                    d_latent[3] = d_density;
                }
                for i in 0..s {
                    let l = &latents[k * s + i];
                    let mut g = d_valid * valid[k * s + i];
                    for c in 0..LATENT_LEN {
                        g += d_latent[c] * l[c];
                    }
                    out.grad[i] += g;
                }
                for c in 0..3 {
                    tail[c] += contrib * colors[k][c];
                }
            }
        }
        out
    });

    let mut data = Vec::with_capacity(settings.width * settings.height * 3);
    let mut sq_err = 0.0;
    let mut grad = vec![0.0; s];
    for row in rows {
        data.extend(row.pixels);
        sq_err += row.sq_err;
        for (g, r) in grad.iter_mut().zip(&row.grad) {
            *g += r;
        }
    }
    let image = Image::from_rgb(settings.width, settings.height, data)?;
    Ok(RenderGrad { image, loss: sq_err / (settings.width * settings.height * 3) as f64, grad_weights: grad })
}
