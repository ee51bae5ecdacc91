//! Pose refinement by descent on the point losses, the re-render loop, the
//! initial-pose noise model and the template-matching coarse estimator.

mod chamfer;
mod coarse;
mod iterative;
mod noise;
mod optimize;

pub use chamfer::{chamfer_distance, distance_transform};
pub use coarse::{coarse_match, MatchOptions, TemplateLibrary, TemplateMatch};
pub use iterative::{iterative_refine, iterative_refine_with, mask_iou};
pub use noise::{perturb_pose, sample_perturbation, NoiseConfig, NoiseUnits, Perturbation};
pub use optimize::{refine_pose, PointModel, RefineOptions, RefineResult, TraceEntry};
