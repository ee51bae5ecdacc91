//! Discrete rough-pose representation: 64 viewing directions on a Fibonacci
//! sphere times 60 in-plane rotation bins, plus a 2D offset and a depth.
//!
//! Conventions:
//! * The viewing direction of a rotation `R` (object -> camera) is the camera
//!   optical axis expressed in the object frame, i.e. the third row of `R`.
//!   The identity rotation looks along object `+z`.
//! * For a viewing direction `d`, in-plane angle zero is the camera whose
//!   image `y` axis is object `+y` projected onto the plane orthogonal to `d`
//!   (object `+x` when `d` is within 1e-6 of `±y`).
//! * Bin `(k, m)` decodes to `Rz(m * 2π/60) * B(v_k)` where `B(d)` is that
//!   zero-roll camera and `Rz` rolls about the optical axis.

mod symmetry;

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, Mat3, Pose, Vec3};

pub use symmetry::{canonicalize, symmetric_distance, SymmetrySpec};

pub const VIEWPOINT_COUNT: usize = 64;
pub const IN_PLANE_BINS: usize = 60;
pub const BIN_COUNT: usize = VIEWPOINT_COUNT * IN_PLANE_BINS;

/// Angular width of one in-plane bin.
pub const IN_PLANE_STEP: f64 = TAU / IN_PLANE_BINS as f64;

const POLE_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct ViewpointCodebook {
    viewpoints: Vec<Vec3>,
    bases: Vec<Mat3>,
}

impl Default for ViewpointCodebook {
    fn default() -> Self {
        Self::build()
    }
}

impl ViewpointCodebook {
    pub fn build() -> Self {
        let viewpoints = fibonacci_sphere(VIEWPOINT_COUNT);
        let bases = viewpoints.iter().map(zero_roll_rotation).collect();
        ViewpointCodebook { viewpoints, bases }
    }

    pub fn viewpoints(&self) -> &[Vec3] {
        &self.viewpoints
    }

    pub fn in_plane_angle(&self, ipr_idx: usize) -> f64 {
        ipr_idx as f64 * IN_PLANE_STEP
    }

    /// Index of the viewpoint with the largest dot product; ties go to the lower index.
    pub fn nearest_viewpoint(&self, direction: &Vec3) -> usize {
        let mut best = (0, f64::NEG_INFINITY);
        for (k, v) in self.viewpoints.iter().enumerate() {
            let d = v.dot(direction);
            if d > best.1 {
                best = (k, d);
            }
        }
        best.0
    }

    /// Roll of `rotation` about the optical axis, measured against the zero-roll
    /// camera of viewpoint `vp_idx`, in `[0, 2π)`.
    pub fn roll_angle(&self, rotation: &Mat3, vp_idx: usize) -> f64 {
        let m = rotation * self.bases[vp_idx].transpose();
        let theta = (m[(1, 0)] - m[(0, 1)]).atan2(m[(0, 0)] + m[(1, 1)]);
        theta.rem_euclid(TAU)
    }

    pub fn encode_rotation(&self, rotation: &Mat3) -> (usize, usize) {
        let k = self.nearest_viewpoint(&viewing_direction(rotation));
        let x = self.roll_angle(rotation, k) / IN_PLANE_STEP;
        // nearest bin, exact halves go down
        let m = ((x - 0.5).ceil() as i64).rem_euclid(IN_PLANE_BINS as i64) as usize;
        (k, m)
    }

    pub fn decode_rotation(&self, vp_idx: usize, ipr_idx: usize) -> Result<Mat3> {
        check_index("viewpoint", vp_idx, VIEWPOINT_COUNT)?;
        check_index("in-plane", ipr_idx, IN_PLANE_BINS)?;
        Ok(roll_about_z(self.in_plane_angle(ipr_idx)) * self.bases[vp_idx])
    }

    /// Full pose: the object center projects to the principal point plus
    /// `offset2d` at camera depth `depth`.
    pub fn decode_pose(&self, rough: &RoughPose, intr: &CameraIntrinsics) -> Result<Pose> {
        rough.validate()?;
        let rotation = self.decode_rotation(rough.vp_idx, rough.ipr_idx)?;
        let translation = intr.backproject(
            intr.cx + rough.offset2d[0],
            intr.cy + rough.offset2d[1],
            rough.depth,
        );
        Ok(Pose::from_parts(rotation, translation))
    }

    /// Classification/regression targets of a pose.
    pub fn encode_pose(&self, pose: &Pose, intr: &CameraIntrinsics) -> Result<RoughPose> {
        let (vp_idx, ipr_idx) = self.encode_rotation(&pose.rotation);
        let uv = intr.project(&pose.translation)?;
        Ok(RoughPose {
            vp_idx,
            ipr_idx,
            offset2d: [uv.x - intr.cx, uv.y - intr.cy],
            depth: pose.translation.z,
        })
    }

    /// Indices of the `count` viewpoints closest to `vp_idx`, excluding itself.
    pub fn viewpoint_neighbors(&self, vp_idx: usize, count: usize) -> Vec<usize> {
        let v = self.viewpoints[vp_idx];
        let mut others: Vec<usize> = (0..VIEWPOINT_COUNT).filter(|&k| k != vp_idx).collect();
        others.sort_by(|&a, &b| {
            self.viewpoints[b]
                .dot(&v)
                .total_cmp(&self.viewpoints[a].dot(&v))
                .then(a.cmp(&b))
        });
        others.truncate(count);
        others
    }

    /// True when bin `candidate` lies in the one-ring of bin `center`: its
    /// viewpoint is `center`'s or one of its six nearest neighbours, and its
    /// roll (re-measured against `center`'s viewpoint) is within one bin.
    pub fn in_one_ring(&self, center: (usize, usize), candidate: (usize, usize)) -> bool {
        let (k, m) = center;
        let (k2, m2) = candidate;
        if k2 != k && !self.viewpoint_neighbors(k, 6).contains(&k2) {
            return false;
        }
        let Ok(r) = self.decode_rotation(k2, m2) else {
            return false;
        };
        let delta = (self.roll_angle(&r, k) - self.in_plane_angle(m)).rem_euclid(TAU);
        delta.min(TAU - delta) <= IN_PLANE_STEP * 1.5
    }

    /// JSON list of the 64 unit viewpoint vectors.
    pub fn to_json(&self) -> String {
        let list: Vec<[f64; 3]> = self.viewpoints.iter().map(|v| [v.x, v.y, v.z]).collect();
        serde_json::to_string(&list).expect("viewpoints serialize")
    }
}

pub fn build_codebook() -> ViewpointCodebook {
    ViewpointCodebook::build()
}

/// Offset-lattice Fibonacci sphere: `z_i = 1 - (2i + 1)/n`, golden-angle azimuth.
pub fn fibonacci_sphere(n: usize) -> Vec<Vec3> {
    let golden_angle = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden_angle * i as f64;
            Vec3::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect()
}

/// Camera optical axis in the object frame.
pub fn viewing_direction(rotation: &Mat3) -> Vec3 {
    rotation.row(2).transpose()
}

/// Zero-roll rotation looking along unit direction `d`.
pub fn zero_roll_rotation(d: &Vec3) -> Mat3 {
    let up = if (d - Vec3::y()).norm() < POLE_TOLERANCE || (d + Vec3::y()).norm() < POLE_TOLERANCE
    {
        Vec3::x()
    } else {
        Vec3::y()
    };
    let y = (up - d * up.dot(d)).normalize();
    let x = y.cross(d);
    Mat3::from_rows(&[x.transpose(), y.transpose(), d.transpose()])
}

fn roll_about_z(theta: f64) -> Mat3 {
    let (s, c) = theta.sin_cos();
    Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

fn check_index(what: &'static str, index: usize, limit: usize) -> Result<()> {
    if index >= limit {
        Err(Error::IndexOutOfRange { what, index, limit })
    } else {
        Ok(())
    }
}

/// Discrete viewpoint and in-plane bin, image offset of the object center
/// from the principal point (pixels) and camera depth (meters).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoughPose {
    #[serde(rename = "vp")]
    pub vp_idx: usize,
    #[serde(rename = "ipr")]
    pub ipr_idx: usize,
    #[serde(rename = "offset")]
    pub offset2d: [f64; 2],
    pub depth: f64,
}

impl RoughPose {
    pub fn validate(&self) -> Result<()> {
        check_index("viewpoint", self.vp_idx, VIEWPOINT_COUNT)?;
        check_index("in-plane", self.ipr_idx, IN_PLANE_BINS)?;
        if !(self.depth > 0.0) || !self.offset2d.iter().all(|o| o.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "rough pose needs positive depth and finite offset, got depth {}",
                self.depth
            )));
        }
        Ok(())
    }
}

/// Depth from the similar-triangles relation `depth = f * diameter / size`,
/// where `size` is the bounding-box extent in pixels (see [`bbox_size`]).
pub fn depth_from_bbox(bbox_size: f64, diameter: f64, focal: f64) -> Result<f64> {
    if !(bbox_size > 0.0 && diameter > 0.0 && focal > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "depth_from_bbox needs positive inputs (size {bbox_size}, diameter {diameter}, focal {focal})"
        )));
    }
    Ok(focal * diameter / bbox_size)
}

/// Extent of a `[x0, y0, x1, y1]` box used for depth: its longer side.
pub fn bbox_size(bbox: [f64; 4]) -> f64 {
    (bbox[2] - bbox[0]).abs().max((bbox[3] - bbox[1]).abs())
}

/// Mean squared error between predicted and target 2D offsets.
pub fn offset_mse(predicted: &[[f64; 2]], target: &[[f64; 2]]) -> Result<f64> {
    if predicted.len() != target.len() {
        return Err(Error::CountMismatch {
            left: predicted.len(),
            left_what: "predictions",
            right: target.len(),
            right_what: "targets",
        });
    }
    if predicted.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let sum: f64 = predicted
        .iter()
        .zip(target)
        .map(|(p, t)| (p[0] - t[0]).powi(2) + (p[1] - t[1]).powi(2))
        .sum();
    Ok(sum / (2 * predicted.len()) as f64)
}
