use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, UnitSphere};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{rotation_exp, Pose, Vec3};

/// How the three sigma values are read.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseUnits {
    /// Standard deviations in radians and meters.
    #[default]
    StdRadians,
    /// Variances, rotation in degrees², translation in meters².
    VarianceDegrees,
}

/// Initial-pose perturbation model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub rot_sigma: f64,
    /// Per image-plane axis.
    pub offset_sigma: f64,
    pub depth_sigma: f64,
    pub seed: u64,
    #[serde(default)]
    pub units: NoiseUnits,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            rot_sigma: 0.3,
            offset_sigma: 0.01,
            depth_sigma: 0.08,
            seed: 0,
            units: NoiseUnits::StdRadians,
        }
    }
}

impl NoiseConfig {
    pub fn zero() -> Self {
        NoiseConfig {
            rot_sigma: 0.0,
            offset_sigma: 0.0,
            depth_sigma: 0.0,
            ..Default::default()
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        NoiseConfig { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rot_sigma", self.rot_sigma),
            ("offset_sigma", self.offset_sigma),
            ("depth_sigma", self.depth_sigma),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be a finite value >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Standard deviations `(radians, meters, meters)` after unit conversion.
    pub fn std_devs(&self) -> (f64, f64, f64) {
        match self.units {
            NoiseUnits::StdRadians => (self.rot_sigma, self.offset_sigma, self.depth_sigma),
            NoiseUnits::VarianceDegrees => (
                self.rot_sigma.sqrt().to_radians(),
                self.offset_sigma.sqrt(),
                self.depth_sigma.sqrt(),
            ),
        }
    }
}

/// One draw of the perturbation: rotation vector (camera frame) and
/// translation offset `(x, y, depth)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Perturbation {
    pub rotation: Vec3,
    pub offset: Vec3,
}

impl Perturbation {
    pub fn angle(&self) -> f64 {
        self.rotation.norm()
    }

    pub fn apply(&self, gt: &Pose) -> Pose {
        Pose::from_parts(rotation_exp(&self.rotation) * gt.rotation, gt.translation + self.offset)
    }
}

fn normal(sigma: f64, rng: &mut ChaCha8Rng) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    Normal::new(0.0, sigma).expect("validated sigma").sample(rng)
}

/// Axis uniform on the sphere, signed angle ~ N(0, rot), offsets ~ N(0, ·).
pub fn sample_perturbation(cfg: &NoiseConfig, rng: &mut ChaCha8Rng) -> Result<Perturbation> {
    cfg.validate()?;
    let (rot, off, depth) = cfg.std_devs();
    let axis: [f64; 3] = UnitSphere.sample(rng);
    let angle = normal(rot, rng);
    let offset = Vec3::new(normal(off, rng), normal(off, rng), normal(depth, rng));
    Ok(Perturbation {
        rotation: Vec3::from(axis) * angle,
        offset,
    })
}

/// `gt` rotated about its own origin and shifted, deterministically per `cfg.seed`.
pub fn perturb_pose(gt: &Pose, cfg: &NoiseConfig) -> Result<Pose> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let p = sample_perturbation(cfg, &mut rng)?;
    if p.rotation == Vec3::zeros() && p.offset == Vec3::zeros() {
        return Ok(*gt);
    }
    Ok(p.apply(gt))
}
