use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codebook::{ViewpointCodebook, BIN_COUNT, IN_PLANE_BINS};
use crate::error::Result;
use crate::geometry::{sample_surface_points, PointSet, Pose, Vec3};
use crate::losses::{grad_l_3dpm, grad_l_cpm, l_3dpm_smoothed, l_cpm, relative_error, PoseGradient};

use super::meshes::BundledMesh;

pub const GRADIENT_STEP: f64 = 1e-6;
pub const GRADIENT_TOLERANCE: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelftestReport {
    pub bins: usize,
    pub round_trips_ok: usize,
    pub gradient_checks: usize,
    pub gradient_failures: usize,
    pub max_gradient_error: f64,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.round_trips_ok == self.bins && self.gradient_failures == 0
    }

    pub fn summary(&self) -> String {
        let grad = if self.gradient_failures == 0 {
            "gradient checks ok".to_string()
        } else {
            format!("{}/{} gradient checks failed", self.gradient_failures, self.gradient_checks)
        };
        format!("{}/{} round-trips ok; {grad}", self.round_trips_ok, self.bins)
    }
}

/// Number of bins `(k, m)` with `encode(decode(k, m)) == (k, m)`.
pub fn codebook_round_trips(cb: &ViewpointCodebook) -> Result<usize> {
    let mut ok = 0;
    for bin in 0..BIN_COUNT {
        let (k, m) = (bin / IN_PLANE_BINS, bin % IN_PLANE_BINS);
        ok += (cb.encode_rotation(&cb.decode_rotation(k, m)?) == (k, m)) as usize;
    }
    Ok(ok)
}

/// Central differences of the mean of per-point terms along the six tangent
/// coordinates of `pred`.
pub fn numeric_gradient(pred: &Pose, h: f64, terms: impl Fn(&Pose) -> Result<Vec<f64>>) -> Result<[f64; 6]> {
    let mut out = [0.0; 6];
    for (k, slot) in out.iter_mut().enumerate() {
        let mut e = [0.0; 6];
        e[k] = h;
        let at = |s: f64| pred.retract(&(Vec3::new(e[0], e[1], e[2]) * s), &(Vec3::new(e[3], e[4], e[5]) * s));
        let (plus, minus) = (terms(&at(1.0))?, terms(&at(-1.0))?);
        let diff: f64 = plus.iter().zip(&minus).map(|(a, b)| a - b).sum();
        *slot = diff / plus.len() as f64 / (2.0 * h);
    }
    Ok(out)
}

fn worst_error(analytic: &PoseGradient, numeric: &[f64; 6]) -> f64 {
    analytic
        .as_array()
        .iter()
        .zip(numeric)
        .map(|(a, n)| relative_error(*a, *n))
        .fold(0.0, f64::max)
}

/// Codebook round-trip over every bin plus finite-difference checks of both
/// loss gradients on `configs` random configurations.
pub fn run_selftest(configs: usize, seed: u64) -> Result<SelftestReport> {
    let cb = ViewpointCodebook::build();
    let round_trips_ok = codebook_round_trips(&cb)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let meshes: Vec<_> = BundledMesh::ALL.iter().map(|m| m.mesh()).collect();
    let (mut checks, mut failures, mut worst) = (0, 0, 0.0f64);
    for i in 0..configs {
        let mesh = &meshes[i % meshes.len()];
        let pts = sample_surface_points(mesh, 40, rng.random())?;
        let mut random_pose = |spread: f64| {
            let w = Vec3::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            let t = Vec3::new(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1), 0.6 + rng.random_range(-0.1..0.1));
            Pose::from_axis_angle(w * spread, t)
        };
        let gt = random_pose(1.0);
        let pred = random_pose(1.0);
        let center = mesh.centroid();

        let g = grad_l_3dpm(&gt, &pred, &pts)?;
        let n = numeric_gradient(&pred, GRADIENT_STEP, |p| {
            pts.iter().map(|x| l_3dpm_smoothed(&gt, p, &PointSet::new(vec![*x]))).collect()
        })?;
        let g2 = grad_l_cpm(&gt, &pred, &pts, &center)?;
        let n2 = numeric_gradient(&pred, GRADIENT_STEP, |p| {
            Ok(l_cpm(&gt, p, &pts, &center)?.per_point.unwrap_or_default())
        })?;
        for e in [worst_error(&g, &n), worst_error(&g2, &n2)] {
            checks += 1;
            failures += (!(e < GRADIENT_TOLERANCE)) as usize;
            worst = worst.max(e);
        }
    }
    Ok(SelftestReport {
        bins: BIN_COUNT,
        round_trips_ok,
        gradient_checks: checks,
        gradient_failures: failures,
        max_gradient_error: worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selftest_passes() {
        let r = run_selftest(20, 1).unwrap();
        assert_eq!(r.summary(), "3840/3840 round-trips ok; gradient checks ok");
        assert_eq!(r.gradient_checks, 40);
    }
}
