//! Rigid camera poses and the geometric quantities the weighting schemes
//! are built from.
//!
//! Poses are camera-to-world matrices. The camera looks down its local −z
//! axis with +y up (right-handed), so the world-space principal view axis is
//! the negated third column of the rotation block and the camera center is
//! the translation column.

use nalgebra::{Matrix3, Matrix4, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ORTHONORMAL_TOL: f64 = 1e-6;

/// A validated 4×4 camera-to-world transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[f64; 4]; 4]", into = "[[f64; 4]; 4]")]
pub struct Pose {
    matrix: Matrix4<f64>,
}

impl Pose {
    pub const IDENTITY: Pose = Pose {
        matrix: Matrix4::new(
            1.0, 0.0, 0.0, 0.0, //
            0.0, 1.0, 0.0, 0.0, //
            0.0, 0.0, 1.0, 0.0, //
            0.0, 0.0, 0.0, 1.0,
        ),
    };

    /// Validates `matrix`: bottom row exactly `(0,0,0,1)`, rotation block
    /// orthonormal to 1e-6 in Frobenius norm with positive determinant, and
    /// every entry finite.
    pub fn new(matrix: Matrix4<f64>) -> Result<Self> {
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPose("non-finite entry".into()));
        }
        let bottom = matrix.row(3);
        if bottom[0] != 0.0 || bottom[1] != 0.0 || bottom[2] != 0.0 || bottom[3] != 1.0 {
            return Err(Error::InvalidPose(format!(
                "bottom row must be (0,0,0,1), got ({}, {}, {}, {})",
                bottom[0], bottom[1], bottom[2], bottom[3]
            )));
        }
        let r: Matrix3<f64> = matrix.fixed_view::<3, 3>(0, 0).into_owned();
        let err = (r.transpose() * r - Matrix3::identity()).norm();
        if err >= ORTHONORMAL_TOL {
            return Err(Error::InvalidPose(format!(
                "rotation block is not orthonormal (|RᵀR − I| = {err:e})"
            )));
        }
        if r.determinant() <= 0.0 {
            return Err(Error::InvalidPose("rotation block has non-positive determinant".into()));
        }
        Ok(Pose { matrix })
    }

    pub fn from_rows(rows: [[f64; 4]; 4]) -> Result<Self> {
        Self::new(Matrix4::from_fn(|r, c| rows[r][c]))
    }

    /// Builds a pose from a rotation and camera center.
    pub fn from_parts(rotation: Matrix3<f64>, center: Vector3<f64>) -> Result<Self> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&center);
        Self::new(m)
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.matrix
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        self.matrix.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn to_rows(&self) -> [[f64; 4]; 4] {
        let mut rows = [[0.0; 4]; 4];
        for (r, row) in rows.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = self.matrix[(r, c)];
            }
        }
        rows
    }

    /// Row-major flattening of all 16 entries.
    pub fn flatten(&self) -> [f64; 16] {
        let mut out = [0.0; 16];
        for r in 0..4 {
            for c in 0..4 {
                out[r * 4 + c] = self.matrix[(r, c)];
            }
        }
        out
    }
}

impl TryFrom<[[f64; 4]; 4]> for Pose {
    type Error = Error;

    fn try_from(rows: [[f64; 4]; 4]) -> Result<Self> {
        Pose::from_rows(rows)
    }
}

impl From<Pose> for [[f64; 4]; 4] {
    fn from(p: Pose) -> Self {
        p.to_rows()
    }
}

/// A target pose together with the `S ≥ 1` source poses used to render it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRig")]
pub struct CameraRig {
    pub target: Pose,
    sources: Vec<Pose>,
}

#[derive(Deserialize)]
struct RawRig {
    target: Pose,
    sources: Vec<Pose>,
}

impl TryFrom<RawRig> for CameraRig {
    type Error = Error;

    fn try_from(raw: RawRig) -> Result<Self> {
        CameraRig::new(raw.target, raw.sources)
    }
}

impl CameraRig {
    pub fn new(target: Pose, sources: Vec<Pose>) -> Result<Self> {
        if sources.is_empty() {
            return Err(Error::EmptyRig);
        }
        Ok(CameraRig { target, sources })
    }

    pub fn sources(&self) -> &[Pose] {
        &self.sources
    }

    pub fn num_sources(&self) -> usize {
        self.sources.len()
    }

    /// Same rig with the sources reordered so that source `i` of the result
    /// is source `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.sources.len() {
            return Err(Error::dims(self.sources.len(), perm.len()));
        }
        let sources = perm.iter().map(|&i| self.sources[i]).collect();
        CameraRig::new(self.target, sources)
    }
}

pub fn camera_center(p: &Pose) -> Vector3<f64> {
    p.matrix.fixed_view::<3, 1>(0, 3).into_owned()
}

/// World-space principal view axis, `−R·ẑ`, normalized.
pub fn view_direction(p: &Pose) -> Vector3<f64> {
    let axis = -p.matrix.fixed_view::<3, 1>(0, 2).into_owned();
    axis.normalize()
}

/// Angle in `[0, π]` between the view axes of two poses.
pub fn angle_between(a: &Pose, b: &Pose) -> f64 {
    // atan2 keeps full precision near 0 and π, where acos of the dot
    // product loses half the digits.
    let (u, v) = (view_direction(a), view_direction(b));
    u.cross(&v).norm().atan2(u.dot(&v))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NormKind {
    L1,
    Frobenius,
}

/// Entrywise L1 or Frobenius norm of the difference of two pose matrices.
pub fn pose_norm_distance(a: &Pose, b: &Pose, kind: NormKind) -> f64 {
    let diff = a.matrix - b.matrix;
    match kind {
        NormKind::L1 => diff.iter().map(|v| v.abs()).sum(),
        NormKind::Frobenius => diff.iter().map(|v| v * v).sum::<f64>().sqrt(),
    }
}

pub fn center_distance(a: &Pose, b: &Pose) -> f64 {
    (camera_center(a) - camera_center(b)).norm()
}

/// Camera at `eye` looking at `center`, with `up` fixing the roll.
pub fn look_at(eye: Vector3<f64>, center: Vector3<f64>, up: Vector3<f64>) -> Result<Pose> {
    let forward = center - eye;
    let dist = forward.norm();
    if !(dist > 1e-12) {
        return Err(Error::DegenerateLookAt("eye coincides with center"));
    }
    let forward = forward / dist;
    let right = forward.cross(&up);
    let right_norm = right.norm();
    if !(right_norm > 1e-9 * up.norm()) {
        return Err(Error::DegenerateLookAt("up vector is parallel to the view direction"));
    }
    let right = right / right_norm;
    let true_up = right.cross(&forward);
    // Columns: local +x, +y, +z (the camera looks down −z).
    let rotation = Matrix3::from_columns(&[right, true_up, -forward]);
    Pose::from_parts(rotation, eye)
}
