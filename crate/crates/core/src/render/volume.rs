use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::camera::Frustum;
use super::scene::{field_query, Scene};
use crate::error::{Error, Result};

/// Cells deeper than the point where a source ray's transmittance drops
/// below this value are unobserved.
pub const VISIBILITY_THRESHOLD: f64 = 0.05;

/// Latent channels per cell: `(r, g, b, σ)`.
pub const LATENT_LEN: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VolumeResolution {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl Default for VolumeResolution {
    fn default() -> Self {
        VolumeResolution { nx: 48, ny: 48, nz: 32 }
    }
}

impl VolumeResolution {
    pub fn cube(n: usize) -> Self {
        VolumeResolution { nx: n, ny: n, nz: n }
    }

    pub fn cells(&self) -> usize {
        self.nx * self.ny * self.nz
    }
}

/// Frustum-aligned grid of per-cell latents for one source camera.
///
/// Cell `(ix, iy, iz)` sits on the ray through pixel `(ix, iy)` of an
/// `nx × ny` image, at depth `z_near + (iz + ½)·Δ` with depth slices uniform
/// in `[z_near, z_far]`. Cells the camera cannot see are marked invalid and
/// hold zero latents.
#[derive(Debug, Clone)]
pub struct FeatureVolume {
    frustum: Frustum,
    resolution: VolumeResolution,
    latents: Vec<[f64; LATENT_LEN]>,
    validity: Vec<f64>,
}

impl FeatureVolume {
    pub fn frustum(&self) -> &Frustum {
        &self.frustum
    }

    pub fn resolution(&self) -> VolumeResolution {
        self.resolution
    }

    fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (iz * self.resolution.ny + iy) * self.resolution.nx + ix
    }

    pub fn cell(&self, ix: usize, iy: usize, iz: usize) -> ([f64; LATENT_LEN], bool) {
        let i = self.index(ix, iy, iz);
        (self.latents[i], self.validity[i] > 0.0)
    }

    pub fn depth_step(&self) -> f64 {
        let k = self.frustum.intrinsics();
        (k.z_far - k.z_near) / self.resolution.nz as f64
    }

    /// World-space center of a cell.
    pub fn cell_center(&self, ix: usize, iy: usize, iz: usize) -> Vector3<f64> {
        let VolumeResolution { nx, ny, .. } = self.resolution;
        let ndc_x = (ix as f64 + 0.5) / nx as f64 * 2.0 - 1.0;
        let ndc_y = 1.0 - (iy as f64 + 0.5) / ny as f64 * 2.0;
        let depth = self.frustum.intrinsics().z_near + (iz as f64 + 0.5) * self.depth_step();
        let dir = self.frustum.pose().rotation() * self.frustum.camera_direction(ndc_x, ndc_y);
        self.frustum.center() + depth * dir
    }

    pub fn valid_fraction(&self) -> f64 {
        self.validity.iter().sum::<f64>() / self.validity.len() as f64
    }
}

/// Samples the analytic field at every cell center, truncating each source
/// ray behind the point where its accumulated transmittance falls below
/// [`VISIBILITY_THRESHOLD`].
pub fn encode_source_view(scene: &Scene, frustum: &Frustum, resolution: VolumeResolution) -> Result<FeatureVolume> {
    if resolution.cells() == 0 {
        return Err(Error::InvalidConfig("volume resolution must be non-zero".into()));
    }
    let mut vol = FeatureVolume {
        frustum: *frustum,
        resolution,
        latents: vec![[0.0; LATENT_LEN]; resolution.cells()],
        validity: vec![0.0; resolution.cells()],
    };
    let VolumeResolution { nx, ny, nz } = resolution;
    let rotation = frustum.pose().rotation();
    let z_near = frustum.intrinsics().z_near;
    let step = vol.depth_step();
    for iy in 0..ny {
        for ix in 0..nx {
            let ndc_x = (ix as f64 + 0.5) / nx as f64 * 2.0 - 1.0;
            let ndc_y = 1.0 - (iy as f64 + 0.5) / ny as f64 * 2.0;
            let cam_dir = frustum.camera_direction(ndc_x, ndc_y);
            let dir = rotation * cam_dir;
            let segment = step * cam_dir.norm();
            let mut transmittance = 1.0;
            for iz in 0..nz {
                if transmittance < VISIBILITY_THRESHOLD {
                    break;
                }
                let depth = z_near + (iz as f64 + 0.5) * step;
                let q = field_query(scene, &(frustum.center() + depth * dir));
                let i = vol.index(ix, iy, iz);
                vol.latents[i] = [q.color[0], q.color[1], q.color[2], q.density];
                vol.validity[i] = 1.0;
                transmittance *= (-q.density * segment).exp();
            }
        }
    }
    Ok(vol)
}

/// Continuous grid coordinate along one axis, or `None` outside the volume.
/// Points in the outer half-cell snap to the boundary cell.
fn grid_coord(u: f64, n: usize) -> Option<f64> {
    if !(u >= -0.5 && u <= n as f64 - 0.5) {
        return None;
    }
    Some(u.clamp(0.0, (n - 1) as f64))
}

fn split(u: f64, n: usize) -> (usize, usize, f64) {
    let i0 = (u.floor() as usize).min(n - 1);
    let i1 = (i0 + 1).min(n - 1);
    (i0, i1, u - i0 as f64)
}

/// Trilinear lookup of the latent and the validity mask at a world point.
/// Points outside the frustum give a zero latent with validity 0.
pub fn sample_volume(vol: &FeatureVolume, p: &Vector3<f64>) -> ([f64; LATENT_LEN], f64) {
    let outside = ([0.0; LATENT_LEN], 0.0);
    let k = vol.frustum.intrinsics();
    let pc = vol.frustum.to_camera(p);
    let depth = -pc.z;
    if !(depth >= k.z_near && depth <= k.z_far) {
        return outside;
    }
    let VolumeResolution { nx, ny, nz } = vol.resolution;
    let t = vol.frustum.tan_half_fov();
    let ndc_x = pc.x / (depth * t * k.aspect);
    let ndc_y = pc.y / (depth * t);
    let gx = (ndc_x + 1.0) / 2.0 * nx as f64 - 0.5;
    let gy = (1.0 - ndc_y) / 2.0 * ny as f64 - 0.5;
    let gz = (depth - k.z_near) / vol.depth_step() - 0.5;
    let (Some(gx), Some(gy), Some(gz)) = (grid_coord(gx, nx), grid_coord(gy, ny), grid_coord(gz, nz)) else {
        return outside;
    };
    let (x0, x1, fx) = split(gx, nx);
    let (y0, y1, fy) = split(gy, ny);
    let (z0, z1, fz) = split(gz, nz);

    let mut latent = [0.0; LATENT_LEN];
    let mut validity = 0.0;
    for (iz, wz) in [(z0, 1.0 - fz), (z1, fz)] {
        for (iy, wy) in [(y0, 1.0 - fy), (y1, fy)] {
            for (ix, wx) in [(x0, 1.0 - fx), (x1, fx)] {
                let w = wx * wy * wz;
                if w == 0.0 {
                    continue;
                }
                let i = vol.index(ix, iy, iz);
                let cell = &vol.latents[i];
                for c in 0..LATENT_LEN {
                    latent[c] += w * cell[c];
                }
                validity += w * vol.validity[i];
            }
        }
    }
    (latent, validity)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::render::{Blob, CameraIntrinsics};

    fn camera() -> Frustum {
        Frustum::looking_at_origin(Vector3::new(0.0, 0.0, 4.0), CameraIntrinsics::default()).unwrap()
    }

    fn scene(blobs: Vec<Blob>) -> Scene {
        Scene::new(0, blobs, 1.0).unwrap()
    }

    fn empty_scene() -> Scene {
        scene(vec![Blob { center: [0.0; 3], radius: 0.3, color: [1.0; 3], peak_density: 0.0 }])
    }

    #[test]
    fn empty_scene_is_fully_valid() {
        let vol = encode_source_view(&empty_scene(), &camera(), VolumeResolution::cube(8)).unwrap();
        assert_eq!(vol.valid_fraction(), 1.0);
        assert!(vol.latents.iter().all(|l| l[3] == 0.0));
    }

    #[test]
    fn wall_hides_what_is_behind_it() {
        // A dense blob right in front of the camera on the optical axis.
        let wall = Blob { center: [0.0, 0.0, 0.6], radius: 0.4, color: [1.0, 0.0, 0.0], peak_density: 200.0 };
        let vol = encode_source_view(&scene(vec![wall]), &camera(), VolumeResolution::cube(16)).unwrap();
        let (latent, valid) = vol.cell(8, 8, 0);
        assert!(valid && latent[3] < 1.0);
        // Far slice behind the wall on the axis is unobserved; the image
        // corner ray misses the wall and stays valid all the way.
        let (latent, valid) = vol.cell(8, 8, 15);
        assert!(!valid);
        assert_eq!(latent, [0.0; 4]);
        assert!(vol.cell(0, 0, 15).1);
    }

    #[test]
    fn cell_centers_sample_exactly() {
        let b = Blob { center: [0.1, -0.2, 0.0], radius: 0.5, color: [0.3, 0.6, 0.9], peak_density: 0.5 };
        let vol = encode_source_view(&scene(vec![b]), &camera(), VolumeResolution::cube(10)).unwrap();
        for &(ix, iy, iz) in &[(3, 4, 5), (0, 0, 0), (9, 9, 9), (5, 2, 7)] {
            let (latent, valid) = sample_volume(&vol, &vol.cell_center(ix, iy, iz));
            let (cell, cell_valid) = vol.cell(ix, iy, iz);
            assert_eq!(valid, f64::from(u8::from(cell_valid)));
            for c in 0..4 {
                assert!((latent[c] - cell[c]).abs() < 1e-9, "{ix},{iy},{iz}: {latent:?} vs {cell:?}");
            }
        }
    }

    #[test]
    fn midpoint_interpolates_linearly() {
        let b = Blob { center: [0.0, 0.0, 0.0], radius: 0.6, color: [0.5, 0.5, 0.5], peak_density: 0.3 };
        let vol = encode_source_view(&scene(vec![b]), &camera(), VolumeResolution::cube(12)).unwrap();
        // Two neighbours along the depth axis share a pixel ray, so their
        // midpoint is exact in world space.
        let mid = (vol.cell_center(6, 5, 4) + vol.cell_center(6, 5, 5)) / 2.0;
        let (latent, validity) = sample_volume(&vol, &mid);
        let (a, _) = vol.cell(6, 5, 4);
        let (b, _) = vol.cell(6, 5, 5);
        for c in 0..4 {
            assert!((latent[c] - (a[c] + b[c]) / 2.0).abs() < 1e-9);
        }
        assert!((validity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn outside_points_are_empty() {
        let vol = encode_source_view(&empty_scene(), &camera(), VolumeResolution::cube(4)).unwrap();
        assert_eq!(sample_volume(&vol, &Vector3::new(0.0, 0.0, 4.0 - 6.5)), ([0.0; 4], 0.0));
        assert_eq!(sample_volume(&vol, &Vector3::new(0.0, 0.0, 4.0 - 1.0)), ([0.0; 4], 0.0));
        assert_eq!(sample_volume(&vol, &Vector3::new(0.0, 0.0, 10.0)), ([0.0; 4], 0.0));
        assert_eq!(sample_volume(&vol, &Vector3::new(5.0, 0.0, 0.0)), ([0.0; 4], 0.0));
        assert_eq!(sample_volume(&vol, &Vector3::zeros()).1, 1.0);
    }

    #[test]
    fn interpolation_error_shrinks_with_resolution() {
        // Low densities keep every cell visible so the volume is a plain
        // resampling of the field.
        let blobs = vec![
            Blob { center: [0.2, 0.1, 0.0], radius: 0.6, color: [1.0, 0.2, 0.1], peak_density: 0.2 },
            Blob { center: [-0.3, -0.2, 0.2], radius: 0.5, color: [0.1, 0.3, 1.0], peak_density: 0.3 },
        ];
        let s = scene(blobs);
        let probes: Vec<Vector3<f64>> = (0..500)
            .map(|i| {
                let t = i as f64 * 0.618_033_988_75;
                Vector3::new((t * 1.3).sin() * 0.8, (t * 2.1).cos() * 0.8, (t * 0.7).sin() * 0.8)
            })
            .collect();
        let mut errors = Vec::new();
        for n in [8, 16, 32, 64] {
            let vol = encode_source_view(&s, &camera(), VolumeResolution::cube(n)).unwrap();
            assert_eq!(vol.valid_fraction(), 1.0);
            let mae: f64 = probes
                .iter()
                .map(|p| (sample_volume(&vol, p).0[3] - field_query(&s, p).density).abs())
                .sum::<f64>()
                / probes.len() as f64;
            errors.push(mae);
        }
        for w in errors.windows(2) {
            assert!(w[1] < w[0], "errors not decreasing: {errors:?}");
        }
    }
}
