//! Bundled test meshes, manifests, batch evaluation, the loss ablation and
//! the self test.

mod ablation;
mod dataset;
mod evaluate;
mod meshes;
mod report;
mod selftest;

pub use ablation::{
    ablate_losses, ablation_trials, mean_ci95, summarize_ablation, trial_seed, AblationReport, AblationRow,
    PairedTrial, TrialOutcome,
};
pub use dataset::{
    load_dataset, load_predictions, parse_dataset, save_dataset, save_predictions, synthetic_dataset, DatasetEntry,
};
pub use evaluate::{evaluate, symmetry_label, EvalConfig, EvalReport, EvalRow};
pub use meshes::{resolve_mesh, BundledMesh, MeshEntry, MeshLibrary};
pub use report::{format_table, rate_percent};
pub use selftest::{
    codebook_round_trips, numeric_gradient, run_selftest, SelftestReport, GRADIENT_STEP, GRADIENT_TOLERANCE,
};
