use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pose::{angle_between, camera_center, look_at, Pose};

/// Attempts allowed when rejection-sampling a camera near a target.
pub const MAX_CLOSE_VIEW_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    /// Vertical field of view in radians.
    pub fov_y: f64,
    /// Width over height.
    pub aspect: f64,
    pub z_near: f64,
    pub z_far: f64,
}

impl Default for CameraIntrinsics {
    fn default() -> Self {
        CameraIntrinsics { fov_y: 0.6, aspect: 1.0, z_near: 2.0, z_far: 6.0 }
    }
}

impl CameraIntrinsics {
    pub fn validate(&self) -> Result<()> {
        if !(self.fov_y > 0.0 && self.fov_y < std::f64::consts::PI) {
            return Err(Error::InvalidConfig(format!("fov must lie in (0, π), got {}", self.fov_y)));
        }
        if !(self.aspect > 0.0) {
            return Err(Error::InvalidConfig(format!("aspect must be > 0, got {}", self.aspect)));
        }
        if !(self.z_near > 0.0 && self.z_near < self.z_far && self.z_far.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < z_near < z_far, got {} and {}",
                self.z_near, self.z_far
            )));
        }
        Ok(())
    }
}

/// A posed pinhole camera with a bounded depth range: a truncated pyramid
/// in world space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frustum {
    pose: Pose,
    intrinsics: CameraIntrinsics,
    rotation: Matrix3<f64>,
    center: Vector3<f64>,
    tan_half_fov: f64,
}

impl Frustum {
    pub fn new(pose: Pose, intrinsics: CameraIntrinsics) -> Result<Self> {
        intrinsics.validate()?;
        Ok(Frustum {
            pose,
            intrinsics,
            rotation: pose.rotation(),
            center: camera_center(&pose),
            tan_half_fov: (intrinsics.fov_y / 2.0).tan(),
        })
    }

    /// Camera at `eye` aimed at the world origin.
    pub fn looking_at_origin(eye: Vector3<f64>, intrinsics: CameraIntrinsics) -> Result<Self> {
        Frustum::new(look_at(eye, Vector3::zeros(), up_for(&eye))?, intrinsics)
    }

    pub fn pose(&self) -> &Pose {
        &self.pose
    }

    pub fn intrinsics(&self) -> &CameraIntrinsics {
        &self.intrinsics
    }

    pub fn center(&self) -> Vector3<f64> {
        self.center
    }

    /// Camera-space direction through normalized device coordinates
    /// `(ndc_x, ndc_y) ∈ [−1, 1]²`, scaled so that its depth component is 1
    /// (the local z component is −1).
    pub fn camera_direction(&self, ndc_x: f64, ndc_y: f64) -> Vector3<f64> {
        Vector3::new(
            ndc_x * self.tan_half_fov * self.intrinsics.aspect,
            ndc_y * self.tan_half_fov,
            -1.0,
        )
    }

    /// World-space ray through the center of pixel `(px, py)` of a
    /// `width × height` image. Points along it are `center + depth · dir`.
    pub fn pixel_ray(&self, px: usize, py: usize, width: usize, height: usize) -> Vector3<f64> {
        let ndc_x = (px as f64 + 0.5) / width as f64 * 2.0 - 1.0;
        let ndc_y = 1.0 - (py as f64 + 0.5) / height as f64 * 2.0;
        self.rotation * self.camera_direction(ndc_x, ndc_y)
    }

    /// World point to camera coordinates.
    pub fn to_camera(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.tr_mul(&(p - self.center))
    }

    pub fn tan_half_fov(&self) -> f64 {
        self.tan_half_fov
    }
}

/// An up vector that is never parallel to the direction from `eye` to the
/// origin.
fn up_for(eye: &Vector3<f64>) -> Vector3<f64> {
    let dir = eye.normalize();
    if dir.y.abs() > 0.999 {
        Vector3::z()
    } else {
        Vector3::y()
    }
}

/// Draws cameras on a spherical shell, aimed at the origin, with directions
/// uniform on the sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraSampler {
    pub radius_min: f64,
    pub radius_max: f64,
    pub intrinsics: CameraIntrinsics,
}

impl Default for CameraSampler {
    fn default() -> Self {
        CameraSampler { radius_min: 4.0, radius_max: 4.0, intrinsics: CameraIntrinsics::default() }
    }
}

impl CameraSampler {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius_min > 0.0 && self.radius_min <= self.radius_max && self.radius_max.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "bad radius range [{}, {}]",
                self.radius_min, self.radius_max
            )));
        }
        self.intrinsics.validate()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Frustum> {
        self.validate()?;
        // Archimedes: z uniform in [−1, 1] and azimuth uniform gives a
        // uniform direction on the sphere.
        let z: f64 = rng.gen_range(-1.0..=1.0);
        let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let r_xy = (1.0 - z * z).max(0.0).sqrt();
        let dir = Vector3::new(r_xy * phi.cos(), r_xy * phi.sin(), z);
        let radius = if self.radius_max > self.radius_min {
            rng.gen_range(self.radius_min..=self.radius_max)
        } else {
            self.radius_min
        };
        Frustum::looking_at_origin(dir * radius, self.intrinsics)
    }

    pub fn sample_seeded(&self, seed: u64) -> Result<Frustum> {
        self.sample(&mut ChaCha8Rng::seed_from_u64(seed))
    }
}

/// Rejection-samples a camera whose view axis is within `max_angle` of the
/// target's, giving up after [`MAX_CLOSE_VIEW_ATTEMPTS`] draws.
pub fn sample_close_view<R: Rng + ?Sized>(
    sampler: &CameraSampler,
    target: &Frustum,
    max_angle: f64,
    rng: &mut R,
) -> Result<Frustum> {
    if !(max_angle > 0.0 && max_angle <= std::f64::consts::PI) {
        return Err(Error::InvalidConfig(format!("max_angle must lie in (0, π], got {max_angle}")));
    }
    for _ in 0..MAX_CLOSE_VIEW_ATTEMPTS {
        let cam = sampler.sample(rng)?;
        let angle = angle_between(cam.pose(), target.pose());
        if angle < max_angle || max_angle >= std::f64::consts::PI {
            return Ok(cam);
        }
    }
    Err(Error::ExhaustedSampling { max_angle, attempts: MAX_CLOSE_VIEW_ATTEMPTS })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pose::view_direction;

    #[test]
    fn seeded_sampling_is_reproducible() {
        let s = CameraSampler::default();
        assert_eq!(s.sample_seeded(3).unwrap(), s.sample_seeded(3).unwrap());
        assert_ne!(s.sample_seeded(3).unwrap(), s.sample_seeded(4).unwrap());
    }

    #[test]
    fn centers_stay_in_radius_range_and_face_origin() {
        let s = CameraSampler { radius_min: 3.5, radius_max: 4.5, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..1000 {
            let f = s.sample(&mut rng).unwrap();
            let r = f.center().norm();
            assert!((3.5 - 1e-12..=4.5 + 1e-12).contains(&r));
            let toward = -f.center() / r;
            assert!((view_direction(f.pose()) - toward).norm() < 1e-9);
        }
    }

    #[test]
    fn directions_are_uniform_over_octants() {
        let s = CameraSampler::default();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 8000;
        let mut counts = [0usize; 8];
        for _ in 0..n {
            let c = s.sample(&mut rng).unwrap().center();
            let idx = usize::from(c.x > 0.0) | usize::from(c.y > 0.0) << 1 | usize::from(c.z > 0.0) << 2;
            counts[idx] += 1;
        }
        let expected = n as f64 / 8.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 7 degrees of freedom: the p = 0.01 critical value is 18.475.
        assert!(chi2 < 18.475, "chi² = {chi2}, counts {counts:?}");
    }

    #[test]
    fn close_view_postcondition_and_acceptance_rate() {
        let s = CameraSampler::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let target = s.sample(&mut rng).unwrap();
        let max_angle = 10f64.to_radians();
        for _ in 0..50 {
            let cam = sample_close_view(&s, &target, max_angle, &mut rng).unwrap();
            assert!(angle_between(cam.pose(), target.pose()) < max_angle);
        }
        let any = sample_close_view(&s, &target, std::f64::consts::PI, &mut rng).unwrap();
        assert!(any.center().norm() > 0.0);

        // Acceptance rate matches the spherical cap fraction (1 − cos θ)/2.
        let n = 200_000;
        let hits = (0..n)
            .filter(|_| angle_between(s.sample(&mut rng).unwrap().pose(), target.pose()) < max_angle)
            .count();
        let rate = hits as f64 / n as f64;
        let cap = (1.0 - max_angle.cos()) / 2.0;
        let sd = (cap * (1.0 - cap) / n as f64).sqrt();
        assert!((rate - cap).abs() < 4.0 * sd, "rate {rate} vs cap {cap}");
    }

    #[test]
    fn close_view_gives_up() {
        let s = CameraSampler::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let target = s.sample(&mut rng).unwrap();
        let err = sample_close_view(&s, &target, 1e-9, &mut rng).unwrap_err();
        assert!(matches!(err, Error::ExhaustedSampling { attempts: MAX_CLOSE_VIEW_ATTEMPTS, .. }));
    }

    #[test]
    fn pixel_rays_have_unit_depth() {
        let f = Frustum::looking_at_origin(Vector3::new(0.0, 0.0, 4.0), CameraIntrinsics::default()).unwrap();
        // Centre-ish pixel of an odd image points straight down the axis.
        let d = f.pixel_ray(1, 1, 3, 3);
        assert!((d - Vector3::new(0.0, 0.0, -1.0)).norm() < 1e-15);
        let d = f.pixel_ray(0, 0, 3, 3);
        assert!(d.x < 0.0 && d.y > 0.0);
        assert!((f.to_camera(&(f.center() + 2.5 * d)).z + 2.5).abs() < 1e-12);
        assert!(CameraIntrinsics { z_near: 3.0, z_far: 2.0, ..Default::default() }.validate().is_err());
    }
}
