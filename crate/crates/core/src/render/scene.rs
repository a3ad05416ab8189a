use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An isotropic Gaussian density blob of uniform color. Its density is
/// `peak · exp(−‖p − center‖² / (2·(radius/2)²))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Blob {
    pub center: [f64; 3],
    pub radius: f64,
    pub color: [f64; 3],
    pub peak_density: f64,
}

impl Blob {
    pub fn density_at(&self, p: &Vector3<f64>) -> f64 {
        let sigma = self.radius / 2.0;
        let d2 = (p - Vector3::from(self.center)).norm_squared();
        self.peak_density * (-d2 / (2.0 * sigma * sigma)).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub seed: u64,
    pub blobs: Vec<Blob>,
    pub bounding_radius: f64,
}

impl Scene {
    pub fn new(seed: u64, blobs: Vec<Blob>, bounding_radius: f64) -> Result<Self> {
        if blobs.is_empty() {
            return Err(Error::InvalidConfig("a scene needs at least one blob".into()));
        }
        for b in &blobs {
            if !(b.peak_density >= 0.0) || !(b.radius > 0.0) {
                return Err(Error::InvalidConfig(format!("bad blob {b:?}")));
            }
            if Vector3::from(b.center).norm() + b.radius > bounding_radius + 1e-12 {
                return Err(Error::InvalidConfig(format!("blob {b:?} leaves the bounding sphere")));
            }
        }
        Ok(Scene { seed, blobs, bounding_radius })
    }
}

/// Color and density at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadianceSample {
    pub color: [f64; 3],
    pub density: f64,
}

/// Analytic radiance field: densities add, colors are density-weighted.
pub fn field_query(scene: &Scene, p: &Vector3<f64>) -> RadianceSample {
    let mut density = 0.0;
    let mut weighted = [0.0; 3];
    for b in &scene.blobs {
        let d = b.density_at(p);
        density += d;
        for c in 0..3 {
            weighted[c] += d * b.color[c];
        }
    }
    if density > 0.0 {
        RadianceSample { color: weighted.map(|w| (w / density).clamp(0.0, 1.0)), density }
    } else {
        RadianceSample { color: [0.0; 3], density: 0.0 }
    }
}

const SCENE_RADIUS: f64 = 1.0;
const CENTER_RADIUS: f64 = 0.55;
const BLOB_RADIUS: (f64, f64) = (0.25, 0.45);
const PEAK_DENSITY: (f64, f64) = (15.0, 40.0);

/// Seeded random scene with a blob count drawn from `min_blobs..=max_blobs`.
///
/// Blob colors are evenly spaced in hue (with a random phase) so that any
/// two blobs differ in color, which makes the appearance of the scene depend
/// on the viewing direction.
pub fn generate_scene(seed: u64, min_blobs: usize, max_blobs: usize) -> Result<Scene> {
    if min_blobs == 0 || min_blobs > max_blobs {
        return Err(Error::InvalidConfig(format!("bad blob count range {min_blobs}..={max_blobs}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = rng.gen_range(min_blobs..=max_blobs);
    let hue_phase: f64 = rng.gen_range(0.0..1.0);
    let mut blobs = Vec::with_capacity(count);
    for k in 0..count {
        let center = loop {
            let c = Vector3::new(
                rng.gen_range(-CENTER_RADIUS..=CENTER_RADIUS),
                rng.gen_range(-CENTER_RADIUS..=CENTER_RADIUS),
                rng.gen_range(-CENTER_RADIUS..=CENTER_RADIUS),
            );
            if c.norm() <= CENTER_RADIUS {
                break c;
            }
        };
        let radius = rng.gen_range(BLOB_RADIUS.0..=BLOB_RADIUS.1);
        let hue = (hue_phase + k as f64 / count as f64).fract();
        let saturation = rng.gen_range(0.6..=1.0);
        let value = rng.gen_range(0.75..=1.0);
        blobs.push(Blob {
            center: center.into(),
            radius,
            color: hsv_to_rgb(hue, saturation, value),
            peak_density: rng.gen_range(PEAK_DENSITY.0..=PEAK_DENSITY.1),
        });
    }
    Scene::new(seed, blobs, SCENE_RADIUS)
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [f64; 3] {
    let h6 = h * 6.0;
    let sector = h6.floor() as i32 % 6;
    let f = h6 - h6.floor();
    let p = v * (1.0 - s);
    let q = v * (1.0 - s * f);
    let t = v * (1.0 - s * (1.0 - f));
    match sector {
        0 => [v, t, p],
        1 => [q, v, p],
        2 => [p, v, t],
        3 => [p, q, v],
        4 => [t, p, v],
        _ => [v, p, q],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn seeded_and_counted() {
        assert_eq!(generate_scene(5, 2, 5).unwrap(), generate_scene(5, 2, 5).unwrap());
        assert_eq!(generate_scene(5, 1, 1).unwrap().blobs.len(), 1);
        assert!(generate_scene(0, 0, 3).is_err());
        assert!(generate_scene(0, 4, 3).is_err());
    }

    #[test]
    fn scenes_are_distinct_and_asymmetric() {
        let mut seen = HashSet::new();
        for seed in 0..100 {
            let s = generate_scene(seed, 2, 5).unwrap();
            let key = serde_json::to_string(&s.blobs).unwrap();
            assert!(seen.insert(key), "seed {seed} repeats an earlier scene");
            for (i, a) in s.blobs.iter().enumerate() {
                assert!(Vector3::from(a.center).norm() + a.radius <= s.bounding_radius);
                for b in &s.blobs[i + 1..] {
                    assert_ne!(a.color, b.color);
                    assert_ne!(a.center, b.center);
                }
            }
        }
    }

    #[test]
    fn field_far_away_is_empty() {
        let s = generate_scene(1, 3, 3).unwrap();
        let far = Vector3::new(5.1 * s.bounding_radius, 0.0, 0.0);
        assert!(field_query(&s, &far).density < 1e-6);
    }

    #[test]
    fn field_at_lone_blob_center() {
        let b = Blob { center: [0.1, 0.2, 0.3], radius: 0.4, color: [0.2, 0.4, 0.9], peak_density: 7.0 };
        let s = Scene::new(0, vec![b], 1.0).unwrap();
        let q = field_query(&s, &Vector3::from(b.center));
        assert_eq!(q.density, 7.0);
        for c in 0..3 {
            assert!((q.color[c] - b.color[c]).abs() < 1e-15);
        }
    }

    #[test]
    fn field_midpoint_blends_colors() {
        let a = Blob { center: [-0.3, 0.0, 0.0], radius: 0.4, color: [1.0, 0.0, 0.0], peak_density: 5.0 };
        let b = Blob { center: [0.3, 0.0, 0.0], color: [0.0, 0.0, 1.0], ..a };
        let s = Scene::new(0, vec![a, b], 1.0).unwrap();
        let q = field_query(&s, &Vector3::zeros());
        let expected = 2.0 * 5.0 * (-0.09f64 / (2.0 * 0.04)).exp();
        assert!((q.density - expected).abs() < 1e-12);
        assert!((q.color[0] - 0.5).abs() < 1e-15);
        assert_eq!(q.color[1], 0.0);
        assert!((q.color[2] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_blobs_outside_bounds() {
        let b = Blob { center: [0.9, 0.0, 0.0], radius: 0.4, color: [1.0; 3], peak_density: 1.0 };
        assert!(Scene::new(0, vec![b], 1.0).is_err());
        assert!(Scene::new(0, vec![], 1.0).is_err());
    }
}
