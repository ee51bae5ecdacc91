use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{geodesic_angle, Pose};
use crate::losses::{add_metric, adds_metric, success, LossKind, ADD_THRESHOLD};
use crate::refine::{perturb_pose, refine_pose, NoiseConfig, PointModel, RefineOptions};

use super::dataset::DatasetEntry;
use super::meshes::MeshLibrary;
use super::report::{format_table, rate_percent};

/// Noise seed of trial `index` given the run seed (SplitMix64 finalizer).
pub fn trial_seed(seed: u64, index: usize) -> u64 {
    let mut z = seed ^ (index as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub final_pose: Pose,
    pub add: f64,
    pub adds: f64,
    /// Geodesic angle to the label rotation, radians.
    pub rotation_error: f64,
    pub add_success: bool,
}

/// Both loss arms run from the same perturbed start.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairedTrial {
    pub entry: usize,
    pub initial: Pose,
    pub l1: TrialOutcome,
    pub cosine: TrialOutcome,
}

/// One `refine_pose` per entry and loss from a shared perturbation of the
/// label pose.
pub fn ablation_trials(
    dataset: &[DatasetEntry],
    meshes: &MeshLibrary,
    noise: &NoiseConfig,
    opts: &RefineOptions,
) -> Result<Vec<PairedTrial>> {
    noise.validate()?;
    opts.validate()?;
    let mut models: BTreeMap<&str, PointModel> = BTreeMap::new();
    for e in dataset {
        if !models.contains_key(e.mesh_id.as_str()) {
            let m = PointModel::from_mesh(&meshes.get(&e.mesh_id)?.mesh, opts.point_count, opts.sample_seed)?;
            models.insert(&e.mesh_id, m);
        }
    }
    dataset
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let model = &models[e.mesh_id.as_str()];
            let gt = e.gt_pose;
            let initial = perturb_pose(&gt, &noise.with_seed(trial_seed(noise.seed, i))).map_err(|err| err.at_entry(i))?;
            let observed = model.observe(&gt);
            let arm = |kind: LossKind| -> Result<TrialOutcome> {
                let r = refine_pose(&initial, &observed, model, &opts.with_loss(kind))?;
                let add = add_metric(&gt, &r.final_pose, &model.points)?;
                Ok(TrialOutcome {
                    final_pose: r.final_pose,
                    add,
                    adds: adds_metric(&gt, &r.final_pose, &model.points)?,
                    rotation_error: geodesic_angle(&r.final_pose.rotation, &gt.rotation),
                    add_success: success(add, model.diameter, ADD_THRESHOLD),
                })
            };
            Ok(PairedTrial {
                entry: i,
                initial,
                l1: arm(LossKind::PointMatching).map_err(|err| err.at_entry(i))?,
                cosine: arm(LossKind::Cosine).map_err(|err| err.at_entry(i))?,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub object_name: String,
    pub n_samples: usize,
    pub add_rate_l1: f64,
    pub add_rate_cosine: f64,
    pub mean_rotation_error_l1: f64,
    pub mean_rotation_error_cosine: f64,
    /// 95% normal interval of the mean paired difference (cosine minus L1), radians.
    pub rotation_error_diff_ci95: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub rows: Vec<AblationRow>,
    pub noise: NoiseConfig,
    pub refine: RefineOptions,
}

impl AblationReport {
    pub fn to_table(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.object_name.clone(),
                    r.n_samples.to_string(),
                    format!("{:.1}", r.add_rate_l1),
                    format!("{:.1}", r.add_rate_cosine),
                    format!("{:.4}", r.mean_rotation_error_l1),
                    format!("{:.4}", r.mean_rotation_error_cosine),
                    format!("[{:.4}, {:.4}]", r.rotation_error_diff_ci95[0], r.rotation_error_diff_ci95[1]),
                ]
            })
            .collect();
        format_table(
            &["object", "n", "L1 ADD %", "cos ADD %", "L1 rot", "cos rot", "cos-L1 95% CI"],
            &rows,
        )
    }
}

/// Mean and 95% normal interval of `xs`.
pub fn mean_ci95(xs: &[f64]) -> (f64, [f64; 2]) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, [f64::NAN; 2]);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, [mean, mean]);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let half = 1.96 * (var / n).sqrt();
    (mean, [mean - half, mean + half])
}

/// Summarises paired trials per object (rows sorted by name).
pub fn summarize_ablation(
    dataset: &[DatasetEntry],
    trials: &[PairedTrial],
    noise: &NoiseConfig,
    opts: &RefineOptions,
) -> AblationReport {
    let mut by_object: BTreeMap<&str, Vec<&PairedTrial>> = BTreeMap::new();
    for t in trials {
        by_object.entry(dataset[t.entry].mesh_id.as_str()).or_default().push(t);
    }
    let rows = by_object
        .into_iter()
        .map(|(id, ts)| {
            let n = ts.len();
            let mean = |f: &dyn Fn(&PairedTrial) -> f64| ts.iter().map(|t| f(t)).sum::<f64>() / n as f64;
            let diffs: Vec<f64> = ts.iter().map(|t| t.cosine.rotation_error - t.l1.rotation_error).collect();
            AblationRow {
                object_name: id.to_string(),
                n_samples: n,
                add_rate_l1: rate_percent(ts.iter().filter(|t| t.l1.add_success).count(), n),
                add_rate_cosine: rate_percent(ts.iter().filter(|t| t.cosine.add_success).count(), n),
                mean_rotation_error_l1: mean(&|t| t.l1.rotation_error),
                mean_rotation_error_cosine: mean(&|t| t.cosine.rotation_error),
                rotation_error_diff_ci95: mean_ci95(&diffs).1,
            }
        })
        .collect();
    AblationReport {
        rows,
        noise: *noise,
        refine: *opts,
    }
}

/// Paired L1-versus-cosine comparison over `dataset`.
pub fn ablate_losses(
    dataset: &[DatasetEntry],
    meshes: &MeshLibrary,
    noise: &NoiseConfig,
    opts: &RefineOptions,
) -> Result<AblationReport> {
    let trials = ablation_trials(dataset, meshes, noise, opts)?;
    Ok(summarize_ablation(dataset, &trials, noise, opts))
}
