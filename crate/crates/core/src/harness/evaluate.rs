use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::codebook::SymmetrySpec;
use crate::error::{Error, Result};
use crate::geometry::{sample_surface_points, PointSet, Pose};
use crate::losses::{add_metric, adds_metric, success, ADDS_THRESHOLD, ADD_THRESHOLD};

use super::dataset::DatasetEntry;
use super::meshes::MeshLibrary;
use super::report::{format_table, rate_percent};

/// Thresholds (fractions of the diameter) and the model points used for scoring.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub add_fraction: f64,
    pub adds_fraction: f64,
    pub point_count: usize,
    pub sample_seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            add_fraction: ADD_THRESHOLD,
            adds_fraction: ADDS_THRESHOLD,
            point_count: 1000,
            sample_seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub object_name: String,
    pub symmetry: String,
    pub n_samples: usize,
    pub add_rate: f64,
    pub adds_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    /// `(add_fraction, adds_fraction)`.
    pub thresholds: (f64, f64),
    pub config: EvalConfig,
}

impl EvalReport {
    pub fn to_table(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.object_name.clone(),
                    r.symmetry.clone(),
                    r.n_samples.to_string(),
                    format!("{:.1}", r.add_rate),
                    format!("{:.1}", r.adds_rate),
                ]
            })
            .collect();
        let add = format!("ADD<{}d %", self.thresholds.0);
        let adds = format!("ADD-S<{}d %", self.thresholds.1);
        format_table(&["object", "symmetry", "n", &add, &adds], &rows)
    }
}

pub fn symmetry_label(sym: &SymmetrySpec) -> String {
    match sym {
        SymmetrySpec::None => "none".into(),
        SymmetrySpec::Cylindrical { .. } => "cylindrical".into(),
        SymmetrySpec::Discrete { rotations } => format!("discrete({})", rotations.len()),
        SymmetrySpec::Spherical => "spherical".into(),
    }
}

/// Surface samples per mesh id, in id order.
pub(crate) fn model_points(
    ids: impl Iterator<Item = String>,
    meshes: &MeshLibrary,
    count: usize,
    seed: u64,
) -> Result<BTreeMap<String, PointSet>> {
    let mut out = BTreeMap::new();
    for id in ids {
        if !out.contains_key(&id) {
            let pts = sample_surface_points(&meshes.get(&id)?.mesh, count, seed)?;
            out.insert(id, pts);
        }
    }
    Ok(out)
}

/// Per-object ADD and ADD-S success rates of `predictions` against the
/// dataset's labels; rows are sorted by object name.
pub fn evaluate(
    dataset: &[DatasetEntry],
    predictions: &[Pose],
    meshes: &MeshLibrary,
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    if dataset.len() != predictions.len() {
        return Err(Error::CountMismatch {
            left: dataset.len(),
            left_what: "manifest entries",
            right: predictions.len(),
            right_what: "predictions",
        });
    }
    let points = model_points(dataset.iter().map(|e| e.mesh_id.clone()), meshes, cfg.point_count, cfg.sample_seed)?;
    // (n, add hits, adds hits)
    let mut tally: BTreeMap<&str, (usize, usize, usize)> = BTreeMap::new();
    for (i, (entry, pred)) in dataset.iter().zip(predictions).enumerate() {
        let diameter = meshes.get(&entry.mesh_id)?.mesh.diameter();
        let pts = &points[&entry.mesh_id];
        let add = add_metric(&entry.gt_pose, pred, pts).map_err(|e| e.at_entry(i))?;
        let adds = adds_metric(&entry.gt_pose, pred, pts).map_err(|e| e.at_entry(i))?;
        let t = tally.entry(entry.mesh_id.as_str()).or_default();
        t.0 += 1;
        t.1 += success(add, diameter, cfg.add_fraction) as usize;
        t.2 += success(adds, diameter, cfg.adds_fraction) as usize;
    }
    let rows = tally
        .into_iter()
        .map(|(id, (n, a, s))| {
            Ok(EvalRow {
                object_name: id.to_string(),
                symmetry: symmetry_label(&meshes.get(id)?.symmetry),
                n_samples: n,
                add_rate: rate_percent(a, n),
                adds_rate: rate_percent(s, n),
            })
        })
        .collect::<Result<_>>()?;
    Ok(EvalReport {
        rows,
        thresholds: (cfg.add_fraction, cfg.adds_fraction),
        config: *cfg,
    })
}
