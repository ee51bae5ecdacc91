//! Point-matching losses with analytic pose gradients, and ADD / ADD-S.

mod metrics;
mod point_matching;

pub use metrics::{
    add_metric, adds_metric, adds_metric_brute_force, success, ADDS_THRESHOLD, ADD_THRESHOLD,
};
pub use point_matching::{
    grad_l_3dpm, grad_l_cpm, l_3dpm, l_3dpm_smoothed, l_cpm, point_matching_observed,
    point_matching_smoothed_observed, CenterAnchor, CosineLoss, LossKind, LossValue, Observation,
    PointLoss, PoseGradient, CENTER_EXCLUSION_FRACTION, L1_SMOOTHING,
};

/// Relative difference `|a - b| / max(|a|, |b|, 1e-6)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}
