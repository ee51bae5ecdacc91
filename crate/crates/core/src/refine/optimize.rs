use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{sample_surface_points, Mesh, PointSet, Pose, Vec3};
use crate::losses::{LossKind, Observation, PointLoss};

/// Optimizer settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineOptions {
    pub loss_kind: LossKind,
    /// Line-search steps per inner run.
    pub max_inner_steps: usize,
    /// Length of the first trial step in the scaled tangent space (radians).
    pub step_init: f64,
    pub armijo_c: f64,
    /// Stop when the scaled gradient norm drops below this.
    pub tol_grad: f64,
    pub outer_iterations: usize,
    /// Surface samples used by [`iterative_refine`](super::iterative_refine).
    pub point_count: usize,
    pub sample_seed: u64,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions {
            loss_kind: LossKind::Cosine,
            max_inner_steps: 200,
            step_init: 0.1,
            armijo_c: 1e-4,
            tol_grad: 1e-9,
            outer_iterations: 4,
            point_count: 500,
            sample_seed: 0,
        }
    }
}

impl RefineOptions {
    pub fn with_loss(self, loss_kind: LossKind) -> Self {
        RefineOptions { loss_kind, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidArgument(m));
        if self.max_inner_steps == 0 {
            return fail("max_inner_steps must be positive".into());
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return fail(format!("armijo_c must lie in (0, 1), got {}", self.armijo_c));
        }
        if !(self.tol_grad > 0.0 && self.tol_grad.is_finite()) {
            return fail(format!("tol_grad must be positive, got {}", self.tol_grad));
        }
        if !(self.step_init > 0.0 && self.step_init.is_finite()) {
            return fail(format!("step_init must be positive, got {}", self.step_init));
        }
        if self.point_count == 0 {
            return fail("point_count must be positive".into());
        }
        Ok(())
    }
}

/// Object-frame samples with the object's center and size.
#[derive(Clone, Debug, PartialEq)]
pub struct PointModel {
    pub points: PointSet,
    pub center: Vec3,
    pub diameter: f64,
}

impl PointModel {
    pub fn from_mesh(mesh: &Mesh, count: usize, seed: u64) -> Result<Self> {
        Ok(PointModel {
            points: sample_surface_points(mesh, count, seed)?,
            center: mesh.centroid(),
            diameter: mesh.diameter(),
        })
    }

    /// Observed points and center under `gt`.
    pub fn observe(&self, gt: &Pose) -> Observation {
        Observation::from_pose(gt, &self.points, &self.center)
    }

    fn loss(&self, kind: LossKind) -> PointLoss {
        PointLoss::new(kind, self.center, self.diameter)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub outer: usize,
    pub inner: usize,
    pub loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineResult {
    pub final_pose: Pose,
    pub loss_trace: Vec<TraceEntry>,
    /// ADD before refinement, then after each outer iteration.
    pub add_trace: Vec<f64>,
    pub converged: bool,
    /// Mask IoU between the render at the current estimate and the observed
    /// render, at the start of each outer iteration (iterative runs only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub iou_trace: Vec<f64>,
}

impl RefineResult {
    /// JSON with the options echoed under `"config"`.
    pub fn to_json(&self, opts: &RefineOptions) -> Result<String> {
        #[derive(Serialize)]
        struct Report<'a> {
            config: &'a RefineOptions,
            #[serde(flatten)]
            result: &'a RefineResult,
        }
        Ok(serde_json::to_string_pretty(&Report { config: opts, result: self })?)
    }

    /// `outer,inner,loss,add` rows; `add` is the ADD reached at the end of
    /// that outer iteration.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("outer,inner,loss,add\n");
        for e in &self.loss_trace {
            let add = self.add_trace.get(e.outer + 1).copied().unwrap_or(f64::NAN);
            out.push_str(&format!("{},{},{:e},{:e}\n", e.outer, e.inner, e.loss, add));
        }
        out
    }

    /// Entries of one inner run.
    pub fn inner_run(&self, outer: usize) -> impl Iterator<Item = &TraceEntry> {
        self.loss_trace.iter().filter(move |e| e.outer == outer)
    }
}

/// Mean distance between observed points and the model under `pose`; equals
/// ADD when the observation is noise free.
pub(crate) fn observed_add(obs: &Observation, model: &PointSet, pose: &Pose) -> f64 {
    let sum: f64 = obs
        .points
        .iter()
        .zip(model)
        .map(|(y, x)| (y - pose.transform_point(x)).norm())
        .sum();
    sum / model.len() as f64
}

const ROUND_OFF: f64 = 4.0 * f64::EPSILON;

pub(crate) struct InnerRun {
    pub pose: Pose,
    pub converged: bool,
}

/// Gradient descent on `(ω, τ/ρ)` with Armijo backtracking, `ρ` the object
/// radius. Each accepted step appends its loss to `trace`.
pub(crate) fn descend(
    loss: &PointLoss,
    obs: &Observation,
    model: &PointModel,
    start: Pose,
    opts: &RefineOptions,
    outer: usize,
    trace: &mut Vec<TraceEntry>,
) -> Result<InnerRun> {
    let rho = (model.diameter / 2.0).max(f64::MIN_POSITIVE);
    let pts = &model.points;
    let (mut f, mut g) = loss.value_and_gradient(obs, &start, pts)?;
    if !f.is_finite() || !g.is_finite() {
        return Err(Error::InvalidInitialPose);
    }
    trace.push(TraceEntry { outer, inner: 0, loss: f });
    let mut pose = start;
    let mut last_step: Option<f64> = None;
    for inner in 1..=opts.max_inner_steps {
        let g_rot = g.d_rot;
        let g_trans = g.d_trans * rho;
        let norm_sq = g_rot.norm_squared() + g_trans.norm_squared();
        let norm = norm_sq.sqrt();
        if norm < opts.tol_grad {
            return Ok(InnerRun { pose, converged: true });
        }
        let mut alpha = last_step.map_or(opts.step_init / norm, |a| 2.0 * a);
        let mut accepted = None;
        for _ in 0..64 {
            let cand = pose.retract(&(-alpha * g_rot), &(-alpha * rho * g_trans));
            let fc = loss.value(obs, &cand, pts)?;
            // the second test rejects "decreases" that are only evaluation round-off
            if fc <= f - opts.armijo_c * alpha * norm_sq && f - fc > ROUND_OFF * f.abs().max(fc.abs()) {
                accepted = Some((cand, fc));
                break;
            }
            alpha *= 0.5;
        }
        let Some((cand, fc)) = accepted else {
            // no decrease representable in floating point: stationary
            return Ok(InnerRun { pose, converged: true });
        };
        pose = cand;
        f = fc;
        last_step = Some(alpha);
        trace.push(TraceEntry { outer, inner, loss: f });
        g = loss.value_and_gradient(obs, &pose, pts)?.1;
    }
    let norm = (g.d_rot.norm_squared() + (g.d_trans * rho).norm_squared()).sqrt();
    Ok(InnerRun {
        pose,
        converged: norm < opts.tol_grad,
    })
}

/// Refines `initial` against corresponded observed points by first-order
/// descent of the chosen loss.
pub fn refine_pose(initial: &Pose, observed: &Observation, model: &PointModel, opts: &RefineOptions) -> Result<RefineResult> {
    opts.validate()?;
    if observed.len() != model.points.len() {
        return Err(Error::CountMismatch {
            left: observed.len(),
            left_what: "observed points",
            right: model.points.len(),
            right_what: "model points",
        });
    }
    model.points.require_nonempty()?;
    let loss = model.loss(opts.loss_kind);
    let mut loss_trace = Vec::new();
    let run = descend(&loss, observed, model, *initial, opts, 0, &mut loss_trace)?;
    Ok(RefineResult {
        final_pose: run.pose,
        add_trace: vec![
            observed_add(observed, &model.points, initial),
            observed_add(observed, &model.points, &run.pose),
        ],
        loss_trace,
        converged: run.converged,
        iou_trace: Vec::new(),
    })
}
