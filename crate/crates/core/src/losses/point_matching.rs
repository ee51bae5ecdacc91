use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{PointSet, Pose, Vec3};

/// Smoothing length of the differentiable L1, in meters: `|r| ≈ sqrt(r² + ε²) - ε`.
pub const L1_SMOOTHING: f64 = 1e-6;

/// Model points closer than this fraction of the object size to the center are
/// dropped from the cosine loss.
pub const CENTER_EXCLUSION_FRACTION: f64 = 1e-6;

/// A loss value and, optionally, the per-point terms it averages.
#[derive(Clone, Debug, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub per_point: Option<Vec<f64>>,
}

impl LossValue {
    fn from_terms(terms: Vec<f64>) -> Self {
        let value = terms.iter().sum::<f64>() / terms.len() as f64;
        LossValue {
            value,
            per_point: Some(terms),
        }
    }
}

/// Gradient with respect to the left-perturbation tangent of the predicted
/// pose: `R' <- exp(d_rot) R'`, `T' <- T' + d_trans`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PoseGradient {
    pub d_rot: Vec3,
    pub d_trans: Vec3,
}

impl PoseGradient {
    pub fn as_array(&self) -> [f64; 6] {
        [
            self.d_rot.x,
            self.d_rot.y,
            self.d_rot.z,
            self.d_trans.x,
            self.d_trans.y,
            self.d_trans.z,
        ]
    }

    pub fn norm(&self) -> f64 {
        (self.d_rot.norm_squared() + self.d_trans.norm_squared()).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LossKind {
    #[serde(rename = "l_3dpm")]
    PointMatching,
    #[serde(rename = "l_cpm")]
    Cosine,
}

impl std::str::FromStr for LossKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l_3dpm" | "l1" => Ok(LossKind::PointMatching),
            "l_cpm" | "cosine" => Ok(LossKind::Cosine),
            other => Err(Error::InvalidArgument(format!("unknown loss {other:?}"))),
        }
    }
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LossKind::PointMatching => "l_3dpm",
            LossKind::Cosine => "l_cpm",
        })
    }
}

/// Which object center the predicted-point vectors of the cosine loss start from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum CenterAnchor {
    /// `R c + T` for both vectors.
    #[default]
    GroundTruth,
    /// `R' c + T'` for the predicted vectors.
    Predicted,
}

/// Ground truth as seen by the optimizer: model points placed in the camera
/// frame and the object center in the camera frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub points: PointSet,
    pub center: Vec3,
}

impl Observation {
    pub fn from_pose(gt: &Pose, model: &PointSet, model_center: &Vec3) -> Self {
        Observation {
            points: model.transformed(gt),
            center: gt.transform_point(model_center),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn check_pair(obs: &Observation, model: &PointSet) -> Result<()> {
    model.require_nonempty()?;
    if obs.points.len() != model.len() {
        return Err(Error::CountMismatch {
            left: obs.points.len(),
            left_what: "observed points",
            right: model.len(),
            right_what: "model points",
        });
    }
    Ok(())
}

#[inline]
fn smooth_abs(r: f64) -> f64 {
    (r * r + L1_SMOOTHING * L1_SMOOTHING).sqrt() - L1_SMOOTHING
}

#[inline]
fn smooth_abs_derivative(r: f64) -> f64 {
    r / (r * r + L1_SMOOTHING * L1_SMOOTHING).sqrt()
}

/// Mean L1 distance between observed and predicted points.
pub fn point_matching_observed(obs: &Observation, pred: &Pose, model: &PointSet) -> Result<LossValue> {
    check_pair(obs, model)?;
    let terms = obs
        .points
        .iter()
        .zip(model)
        .map(|(y, x)| (y - pred.transform_point(x)).abs().sum())
        .collect();
    Ok(LossValue::from_terms(terms))
}

/// Smoothed variant of [`point_matching_observed`]; returns value and gradient.
pub fn point_matching_smoothed_observed(
    obs: &Observation,
    pred: &Pose,
    model: &PointSet,
) -> Result<(f64, PoseGradient)> {
    check_pair(obs, model)?;
    let inv_n = 1.0 / model.len() as f64;
    let mut value = 0.0;
    let mut grad = PoseGradient::default();
    for (y, x) in obs.points.iter().zip(model) {
        let rx = pred.rotation * x;
        let r = y - (rx + pred.translation);
        value += smooth_abs(r.x) + smooth_abs(r.y) + smooth_abs(r.z);
        // d/dq of the residual y - q is -1
        let g = -r.map(smooth_abs_derivative) * inv_n;
        grad.d_rot += rx.cross(&g);
        grad.d_trans += g;
    }
    Ok((value * inv_n, grad))
}

/// Parameters of the cosine point-matching loss.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CosineLoss {
    /// Object center in the object frame.
    pub center: Vec3,
    /// Model points within this distance of `center` are skipped.
    pub exclusion_radius: f64,
    pub anchor: CenterAnchor,
}

impl CosineLoss {
    /// Exclusion radius `CENTER_EXCLUSION_FRACTION * diameter`, ground-truth anchor.
    pub fn new(center: Vec3, diameter: f64) -> Self {
        CosineLoss {
            center,
            exclusion_radius: CENTER_EXCLUSION_FRACTION * diameter,
            anchor: CenterAnchor::GroundTruth,
        }
    }

    pub fn with_anchor(self, anchor: CenterAnchor) -> Self {
        CosineLoss { anchor, ..self }
    }

    fn kept(&self, x: &Vec3) -> bool {
        let d = (x - self.center).norm();
        d >= self.exclusion_radius && d > 0.0
    }

    fn predicted_vector(&self, obs: &Observation, pred: &Pose, x: &Vec3) -> (Vec3, Vec3) {
        match self.anchor {
            CenterAnchor::GroundTruth => {
                let rx = pred.rotation * x;
                (rx + pred.translation - obs.center, rx)
            }
            CenterAnchor::Predicted => {
                let arm = pred.rotation * (x - self.center);
                (arm, arm)
            }
        }
    }

    /// Per-point negative cosine similarities and their mean.
    pub fn value_observed(&self, obs: &Observation, pred: &Pose, model: &PointSet) -> Result<LossValue> {
        check_pair(obs, model)?;
        let mut terms = Vec::with_capacity(model.len());
        for (y, x) in obs.points.iter().zip(model) {
            if !self.kept(x) {
                continue;
            }
            let v = y - obs.center;
            let (vp, _) = self.predicted_vector(obs, pred, x);
            terms.push(-cosine(&v, &vp));
        }
        if terms.is_empty() {
            return Err(Error::DegenerateCenter);
        }
        Ok(LossValue::from_terms(terms))
    }

    pub fn value_and_gradient_observed(
        &self,
        obs: &Observation,
        pred: &Pose,
        model: &PointSet,
    ) -> Result<(f64, PoseGradient)> {
        check_pair(obs, model)?;
        let mut value = 0.0;
        let mut grad = PoseGradient::default();
        let mut kept = 0usize;
        for (y, x) in obs.points.iter().zip(model) {
            if !self.kept(x) {
                continue;
            }
            kept += 1;
            let v = y - obs.center;
            let (vp, arm) = self.predicted_vector(obs, pred, x);
            let (nv, nvp) = (v.norm(), vp.norm());
            if nv == 0.0 || nvp == 0.0 {
                continue;
            }
            let c = v.dot(&vp) / (nv * nvp);
            value -= c;
            // d(-c)/dV'
            let g = -(v / nv - vp * (c / nvp)) / nvp;
            grad.d_rot += arm.cross(&g);
            if self.anchor == CenterAnchor::GroundTruth {
                grad.d_trans += g;
            }
        }
        if kept == 0 {
            return Err(Error::DegenerateCenter);
        }
        let inv_n = 1.0 / kept as f64;
        grad.d_rot *= inv_n;
        grad.d_trans *= inv_n;
        Ok((value * inv_n, grad))
    }
}

// Zero vectors have no direction; they contribute a cosine of 0.
#[inline]
fn cosine(a: &Vec3, b: &Vec3) -> f64 {
    let d = a.norm() * b.norm();
    if d == 0.0 {
        0.0
    } else {
        a.dot(b) / d
    }
}

fn bbox_diagonal(pts: &PointSet) -> f64 {
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for p in pts {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (hi - lo).norm()
}

/// `L_3Dpm`: mean over points of `‖(R x + T) - (R' x + T')‖₁` (exact L1).
pub fn l_3dpm(gt: &Pose, pred: &Pose, pts: &PointSet) -> Result<LossValue> {
    pts.require_nonempty()?;
    let terms = pts
        .iter()
        .map(|x| (gt.transform_point(x) - pred.transform_point(x)).abs().sum())
        .collect();
    Ok(LossValue::from_terms(terms))
}

/// The differentiable surrogate of [`l_3dpm`] that the gradients refer to.
pub fn l_3dpm_smoothed(gt: &Pose, pred: &Pose, pts: &PointSet) -> Result<f64> {
    pts.require_nonempty()?;
    let obs = Observation::from_pose(gt, pts, &Vec3::zeros());
    point_matching_smoothed_observed(&obs, pred, pts).map(|(v, _)| v)
}

pub fn grad_l_3dpm(gt: &Pose, pred: &Pose, pts: &PointSet) -> Result<PoseGradient> {
    pts.require_nonempty()?;
    let obs = Observation::from_pose(gt, pts, &Vec3::zeros());
    point_matching_smoothed_observed(&obs, pred, pts).map(|(_, g)| g)
}

fn default_cosine(pts: &PointSet, center: &Vec3) -> CosineLoss {
    CosineLoss::new(*center, bbox_diagonal(pts))
}

/// `L_cpm`: mean negative cosine between `V = (R x + T) - (R c + T)` and
/// `V' = (R' x + T') - (R c + T)`. The exclusion radius is scaled by the
/// bounding-box diagonal of `pts`; use [`CosineLoss`] for other settings.
pub fn l_cpm(gt: &Pose, pred: &Pose, pts: &PointSet, center: &Vec3) -> Result<LossValue> {
    pts.require_nonempty()?;
    let loss = default_cosine(pts, center);
    loss.value_observed(&Observation::from_pose(gt, pts, center), pred, pts)
}

pub fn grad_l_cpm(gt: &Pose, pred: &Pose, pts: &PointSet, center: &Vec3) -> Result<PoseGradient> {
    pts.require_nonempty()?;
    let loss = default_cosine(pts, center);
    loss.value_and_gradient_observed(&Observation::from_pose(gt, pts, center), pred, pts)
        .map(|(_, g)| g)
}

/// A point-matching loss ready to evaluate against an [`Observation`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PointLoss {
    /// Smoothed L1 point matching.
    PointMatching,
    Cosine(CosineLoss),
}

impl PointLoss {
    pub fn new(kind: LossKind, center: Vec3, diameter: f64) -> Self {
        match kind {
            LossKind::PointMatching => PointLoss::PointMatching,
            LossKind::Cosine => PointLoss::Cosine(CosineLoss::new(center, diameter)),
        }
    }

    pub fn value(&self, obs: &Observation, pred: &Pose, model: &PointSet) -> Result<f64> {
        match self {
            PointLoss::PointMatching => point_matching_smoothed_observed(obs, pred, model).map(|r| r.0),
            PointLoss::Cosine(c) => c.value_observed(obs, pred, model).map(|v| v.value),
        }
    }

    pub fn value_and_gradient(
        &self,
        obs: &Observation,
        pred: &Pose,
        model: &PointSet,
    ) -> Result<(f64, PoseGradient)> {
        match self {
            PointLoss::PointMatching => point_matching_smoothed_observed(obs, pred, model),
            PointLoss::Cosine(c) => c.value_and_gradient_observed(obs, pred, model),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rotation_exp;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(rng: &mut ChaCha8Rng, n: usize) -> PointSet {
        PointSet::new(
            (0..n)
                .map(|_| Vec3::new(rng.random(), rng.random(), rng.random()) * 0.1 - Vec3::repeat(0.05))
                .collect(),
        )
    }

    fn random_pose(rng: &mut ChaCha8Rng) -> Pose {
        let w = Vec3::new(rng.random(), rng.random(), rng.random()) * 4.0 - Vec3::repeat(2.0);
        let t = Vec3::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, 0.5 + rng.random::<f64>());
        Pose::from_axis_angle(w, t * 0.5)
    }

    #[test]
    fn l3dpm_zero_at_truth_and_exact_under_translation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts = random_points(&mut rng, 40);
        let gt = random_pose(&mut rng);
        assert_eq!(l_3dpm(&gt, &gt, &pts).unwrap().value, 0.0);
        let pred = Pose::from_parts(gt.rotation, gt.translation - Vec3::new(0.1, -0.02, 0.0));
        let v = l_3dpm(&gt, &pred, &pts).unwrap();
        assert!((v.value - 0.12).abs() < 1e-12);
        for t in v.per_point.unwrap() {
            assert!((t - 0.12).abs() < 1e-12);
        }
    }

    #[test]
    fn l3dpm_matches_scalar_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pts = random_points(&mut rng, 50);
        let (gt, pred) = (random_pose(&mut rng), random_pose(&mut rng));
        let mut sum = 0.0;
        for x in &pts {
            for i in 0..3 {
                let mut a = gt.translation[i];
                let mut b = pred.translation[i];
                for j in 0..3 {
                    a += gt.rotation[(i, j)] * x[j];
                    b += pred.rotation[(i, j)] * x[j];
                }
                sum += (a - b).abs();
            }
        }
        assert!((l_3dpm(&gt, &pred, &pts).unwrap().value - sum / 50.0).abs() < 1e-12);
    }

    #[test]
    fn lcpm_identity_and_antipodal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts = random_points(&mut rng, 60);
        let center = Vec3::new(0.01, -0.02, 0.005);
        let gt = random_pose(&mut rng);
        assert!((l_cpm(&gt, &gt, &pts, &center).unwrap().value + 1.0).abs() < 1e-12);
        // a half-turn about the center reflects every point of a plane through it
        let flat = PointSet::new(pts.iter().map(|p| Vec3::new(p.x, p.y, center.z)).collect());
        let half_turn = rotation_exp(&(Vec3::z() * std::f64::consts::PI));
        let rot = gt.rotation * half_turn;
        let pred = Pose::from_parts(rot, gt.transform_point(&center) - rot * center);
        let v = l_cpm(&gt, &pred, &flat, &center).unwrap();
        assert!((v.value - 1.0).abs() < 1e-12, "{}", v.value);
    }

    #[test]
    fn lcpm_matches_scalar_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts = random_points(&mut rng, 200);
        let center = Vec3::new(0.003, 0.001, -0.002);
        let (gt, pred) = (random_pose(&mut rng), random_pose(&mut rng));
        let c_cam = gt.transform_point(&center);
        let mut sum = 0.0;
        for x in &pts {
            let v = gt.transform_point(x) - c_cam;
            let w = pred.transform_point(x) - c_cam;
            let dot = v.x * w.x + v.y * w.y + v.z * w.z;
            let nv = (v.x * v.x + v.y * v.y + v.z * v.z).sqrt();
            let nw = (w.x * w.x + w.y * w.y + w.z * w.z).sqrt();
            sum -= dot / (nv * nw);
        }
        let v = l_cpm(&gt, &pred, &pts, &center).unwrap();
        assert!((v.value - sum / 200.0).abs() < 1e-12);
        assert!(v.value >= -1.0 && v.value <= 1.0);
    }

    #[test]
    fn lcpm_excludes_center_points() {
        let pts = PointSet::new(vec![Vec3::zeros(), Vec3::x() * 0.1]);
        let gt = Pose::from_translation(Vec3::z());
        let v = l_cpm(&gt, &gt, &pts, &Vec3::zeros()).unwrap();
        assert_eq!(v.per_point.unwrap().len(), 1);
        let only_center = PointSet::new(vec![Vec3::zeros(); 3]);
        assert!(matches!(
            l_cpm(&gt, &gt, &only_center, &Vec3::zeros()),
            Err(Error::DegenerateCenter)
        ));
    }

    #[test]
    fn empty_sets_are_errors() {
        let e = PointSet::default();
        let p = Pose::identity();
        assert!(matches!(l_3dpm(&p, &p, &e), Err(Error::EmptyPointSet)));
        assert!(matches!(l_cpm(&p, &p, &e, &Vec3::zeros()), Err(Error::EmptyPointSet)));
        assert!(grad_l_3dpm(&p, &p, &e).is_err());
        assert!(grad_l_cpm(&p, &p, &e, &Vec3::zeros()).is_err());
    }

    #[test]
    fn cosine_gradient_vanishes_at_truth() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts = random_points(&mut rng, 100);
        let gt = random_pose(&mut rng);
        let g = grad_l_cpm(&gt, &gt, &pts, &pts.mean()).unwrap();
        assert!(g.as_array().iter().all(|v| v.abs() < 1e-9), "{g:?}");
    }

    #[test]
    fn smoothed_l1_gradient_on_pure_translation() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let raw = random_points(&mut rng, 64);
        let mean = raw.mean();
        let pts = PointSet::new(raw.iter().map(|p| p - mean).collect());
        let gt = random_pose(&mut rng);
        let delta = Vec3::new(0.02, -0.01, 0.004);
        let pred = Pose::from_parts(gt.rotation, gt.translation + delta);
        let g = grad_l_3dpm(&gt, &pred, &pts).unwrap();
        assert!(g.d_rot.norm() < 1e-12);
        for i in 0..3 {
            assert!((g.d_trans[i] - delta[i].signum()).abs() < 1e-6);
        }
    }

    #[test]
    fn predicted_anchor_ignores_translation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts = random_points(&mut rng, 30);
        let gt = random_pose(&mut rng);
        let loss = CosineLoss::new(Vec3::zeros(), 0.1).with_anchor(CenterAnchor::Predicted);
        let obs = Observation::from_pose(&gt, &pts, &Vec3::zeros());
        let pred = Pose::from_parts(gt.rotation, gt.translation + Vec3::new(0.3, 0.1, 0.2));
        let v = loss.value_observed(&obs, &pred, &pts).unwrap().value;
        assert!((v + 1.0).abs() < 1e-12);
        let (_, g) = loss.value_and_gradient_observed(&obs, &pred, &pts).unwrap();
        assert_eq!(g.d_trans, Vec3::zeros());
    }

    #[test]
    fn loss_kind_names() {
        assert_eq!("l_cpm".parse::<LossKind>().unwrap(), LossKind::Cosine);
        assert_eq!(LossKind::PointMatching.to_string(), "l_3dpm");
        assert!("l2".parse::<LossKind>().is_err());
    }
}
