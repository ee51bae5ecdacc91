use crate::error::Result;
use crate::geometry::{KdTree, PointSet, Pose};

/// ADD success threshold as a fraction of the object diameter.
pub const ADD_THRESHOLD: f64 = 0.10;
/// ADD-S success threshold as a fraction of the object diameter.
pub const ADDS_THRESHOLD: f64 = 0.01;

/// Average distance between corresponding transformed points.
pub fn add_metric(gt: &Pose, pred: &Pose, pts: &PointSet) -> Result<f64> {
    pts.require_nonempty()?;
    let sum: f64 = pts
        .iter()
        .map(|x| (gt.transform_point(x) - pred.transform_point(x)).norm())
        .sum();
    Ok(sum / pts.len() as f64)
}

/// Average distance from each ground-truth-transformed point to the nearest
/// prediction-transformed point.
pub fn adds_metric(gt: &Pose, pred: &Pose, pts: &PointSet) -> Result<f64> {
    pts.require_nonempty()?;
    let moved = pts.transformed(pred);
    let tree = KdTree::build(moved.points());
    let sum: f64 = pts
        .iter()
        .map(|x| {
            let (_, d2) = tree.nearest(&gt.transform_point(x)).expect("tree is non-empty");
            d2.sqrt()
        })
        .sum();
    Ok(sum / pts.len() as f64)
}

/// Quadratic reference for [`adds_metric`].
pub fn adds_metric_brute_force(gt: &Pose, pred: &Pose, pts: &PointSet) -> Result<f64> {
    pts.require_nonempty()?;
    let moved = pts.transformed(pred);
    let sum: f64 = pts
        .iter()
        .map(|x| {
            let a = gt.transform_point(x);
            moved
                .iter()
                .map(|b| (a - b).norm_squared())
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .sum();
    Ok(sum / pts.len() as f64)
}

/// `distance < fraction * diameter`.
pub fn success(distance: f64, diameter: f64, fraction: f64) -> bool {
    distance < fraction * diameter
}
