use nalgebra::{Matrix3, Matrix4, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Orthonormality tolerance applied to poses read from files.
pub const LOAD_TOLERANCE: f64 = 1e-6;

/// Rigid transform `x -> R x + T` from the object frame to the camera frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "PoseJson", into = "PoseJson")]
pub struct Pose {
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Pose {
            rotation: Mat3::identity(),
            translation: Vec3::zeros(),
        }
    }

    /// Builds a pose, rejecting rotations further than `tolerance` from SO(3).
    pub fn new(rotation: Mat3, translation: Vec3, tolerance: f64) -> Result<Self> {
        let residual = orthonormality_residual(&rotation);
        if !(residual <= tolerance) || !translation.iter().all(|t| t.is_finite()) {
            return Err(Error::NotOrthonormal { residual });
        }
        Ok(Pose {
            rotation,
            translation,
        })
    }

    /// Builds a pose without checking the rotation.
    pub fn from_parts(rotation: Mat3, translation: Vec3) -> Self {
        Pose {
            rotation,
            translation,
        }
    }

    /// Pose whose rotation is `exp([omega]x)`.
    pub fn from_axis_angle(omega: Vec3, translation: Vec3) -> Self {
        Pose {
            rotation: rotation_exp(&omega),
            translation,
        }
    }

    pub fn from_translation(translation: Vec3) -> Self {
        Pose {
            rotation: Mat3::identity(),
            translation,
        }
    }

    #[inline]
    pub fn transform_point(&self, x: &Vec3) -> Vec3 {
        self.rotation * x + self.translation
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Left perturbation on the tangent space: `R <- exp(omega) R`, `T <- T + tau`.
    pub fn retract(&self, omega: &Vec3, tau: &Vec3) -> Pose {
        Pose {
            rotation: rotation_exp(omega) * self.rotation,
            translation: self.translation + tau,
        }
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    pub fn orthonormality_residual(&self) -> f64 {
        orthonormality_residual(&self.rotation)
    }
}

/// Free-function form of [`Pose::compose`].
pub fn compose(a: &Pose, b: &Pose) -> Pose {
    a.compose(b)
}

/// Free-function form of [`Pose::inverse`].
pub fn invert(a: &Pose) -> Pose {
    a.inverse()
}

/// `max(‖RᵀR − I‖_∞, |det R − 1|)`, entrywise max norm.
pub fn orthonormality_residual(r: &Mat3) -> f64 {
    let gram = r.transpose() * r - Mat3::identity();
    let off = gram.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let det = (r.determinant() - 1.0).abs();
    if off.is_nan() || det.is_nan() {
        return f64::INFINITY;
    }
    off.max(det)
}

/// Rodrigues' formula.
pub fn rotation_exp(omega: &Vec3) -> Mat3 {
    Rotation3::new(*omega).into_inner()
}

/// Axis-angle vector of a rotation matrix (angle in `[0, π]`).
pub fn rotation_log(r: &Mat3) -> Vec3 {
    Rotation3::from_matrix_unchecked(*r).scaled_axis()
}

pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Angle of the relative rotation `aᵀ b`, in `[0, π]`.
pub fn geodesic_angle(a: &Mat3, b: &Mat3) -> f64 {
    let m = a.transpose() * b;
    let cos = (m.trace() - 1.0) * 0.5;
    let sin = 0.5
        * Vec3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)]).norm();
    sin.atan2(cos)
}

/// Projects an arbitrary 3x3 matrix onto the nearest rotation (SVD polar factor).
pub fn nearest_rotation(m: &Mat3) -> Mat3 {
    let svd = m.svd(true, true);
    let u = svd.u.expect("svd u");
    let vt = svd.v_t.expect("svd v_t");
    let mut d = Mat3::identity();
    if (u * vt).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    u * d * vt
}

#[derive(Serialize, Deserialize)]
struct PoseJson {
    rotation: [f64; 9],
    translation: [f64; 3],
}

impl From<PoseJson> for Pose {
    fn from(p: PoseJson) -> Self {
        Pose {
            rotation: Mat3::from_row_slice(&p.rotation),
            translation: Vec3::from_column_slice(&p.translation),
        }
    }
}

impl From<Pose> for PoseJson {
    fn from(p: Pose) -> Self {
        let r = &p.rotation;
        PoseJson {
            rotation: [
                r[(0, 0)],
                r[(0, 1)],
                r[(0, 2)],
                r[(1, 0)],
                r[(1, 1)],
                r[(1, 2)],
                r[(2, 0)],
                r[(2, 1)],
                r[(2, 2)],
            ],
            translation: [p.translation.x, p.translation.y, p.translation.z],
        }
    }
}

/// Parses a pose JSON document and checks the rotation at [`LOAD_TOLERANCE`].
pub fn pose_from_json(text: &str) -> Result<Pose> {
    let pose: Pose = serde_json::from_str(text)?;
    Pose::new(pose.rotation, pose.translation, LOAD_TOLERANCE)
}

pub fn load_pose(path: impl AsRef<std::path::Path>) -> Result<Pose> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    pose_from_json(&text)
}
