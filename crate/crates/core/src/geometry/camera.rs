use nalgebra::{Matrix3, Vector2};
use serde::{Deserialize, Serialize};

use super::pose::Vec3;
use crate::error::{Error, Result};

/// Pinhole intrinsics. Pixel coordinates have their origin at the top-left
/// corner and pixel `(row, col)` is centered on `(u, v) = (col, row)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Self> {
        let intr = CameraIntrinsics {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        intr.validate()?;
        Ok(intr)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(Error::InvalidArgument("focal lengths must be positive".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidArgument("image size must be positive".into()));
        }
        if !(self.cx.is_finite() && self.cy.is_finite()) {
            return Err(Error::InvalidArgument("principal point must be finite".into()));
        }
        Ok(())
    }

    /// Square `size` x `size` camera with its principal point at the image center.
    pub fn centered(focal: f64, size: u32) -> Self {
        let c = (size as f64 - 1.0) * 0.5;
        CameraIntrinsics {
            fx: focal,
            fy: focal,
            cx: c,
            cy: c,
            width: size,
            height: size,
        }
    }

    pub fn k_matrix(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    pub fn project(&self, p: &Vec3) -> Result<Vector2<f64>> {
        if !(p.z > 0.0) {
            return Err(Error::BehindCamera);
        }
        Ok(Vector2::new(
            self.fx * p.x / p.z + self.cx,
            self.fy * p.y / p.z + self.cy,
        ))
    }

    /// Point at camera depth `depth` whose projection is `(u, v)`.
    pub fn backproject(&self, u: f64, v: f64, depth: f64) -> Vec3 {
        Vec3::new(
            depth * (u - self.cx) / self.fx,
            depth * (v - self.cy) / self.fy,
            depth,
        )
    }

    pub fn size(&self) -> (usize, usize) {
        (self.height as usize, self.width as usize)
    }

    /// Same camera rendering into a `height` x `width` buffer with the principal
    /// point moved so the old image center stays at the new image center.
    pub fn resized(&self, height: u32, width: u32) -> Self {
        CameraIntrinsics {
            cx: self.cx + (width as f64 - self.width as f64) * 0.5,
            cy: self.cy + (height as f64 - self.height as f64) * 0.5,
            width,
            height,
            ..*self
        }
    }
}

/// Free-function pinhole projection.
pub fn project(intr: &CameraIntrinsics, point: &Vec3) -> Result<Vector2<f64>> {
    intr.project(point)
}

pub fn load_intrinsics(path: impl AsRef<std::path::Path>) -> Result<CameraIntrinsics> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let intr: CameraIntrinsics = serde_json::from_str(&text)?;
    intr.validate()?;
    Ok(intr)
}
