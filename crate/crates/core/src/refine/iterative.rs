use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, Mesh, Pose};
use crate::render::{
    assemble_refiner_input, crop_and_resize, crop_and_resize_binary, extract_sharp_edges, render,
    BinaryImage, ColorImage, RefinerInput, RenderBuffers, CROP_SIZE, DEFAULT_SHARP_THRESHOLD,
};

use super::optimize::{descend, observed_add, PointModel, RefineOptions, RefineResult};

/// Intersection over union of two masks; 1 when both are empty.
pub fn mask_iou(a: &BinaryImage, b: &BinaryImage) -> Result<f64> {
    b.require_size(a.size())?;
    let (mut inter, mut union) = (0usize, 0usize);
    for (x, y) in a.data().iter().zip(b.data()) {
        inter += (*x && *y) as usize;
        union += (*x || *y) as usize;
    }
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

/// Gray stand-in for a photograph of the object: silhouette at 0.5, edges at 1.
fn synthetic_photo(observed: &RenderBuffers) -> ColorImage {
    let (h, w) = observed.size();
    ColorImage::from_fn(h, w, |r, c| {
        let v = if *observed.edge_image.get(r, c) {
            1.0
        } else if *observed.mask.get(r, c) {
            0.5
        } else {
            0.0
        };
        [v; 3]
    })
}

/// Crop around the object as rendered at the estimate (or as observed when the
/// estimate is out of view) and stack the five channels.
fn refiner_input(photo: &ColorImage, observed: &RenderBuffers, estimate: &RenderBuffers) -> Result<Option<RefinerInput>> {
    let Some(bbox) = estimate.mask.bbox().or_else(|| observed.mask.bbox()) else {
        return Ok(None);
    };
    let color = crop_and_resize(photo, bbox, CROP_SIZE)?;
    let edges = crop_and_resize_binary(&estimate.edge_image, bbox, CROP_SIZE)?;
    let mask = crop_and_resize_binary(&estimate.mask, bbox, CROP_SIZE)?;
    assemble_refiner_input(&color, &edges, &mask).map(Some)
}

/// [`iterative_refine`] that also hands every assembled refiner input to `sink`.
pub fn iterative_refine_with(
    initial: &Pose,
    mesh: &Mesh,
    gt: &Pose,
    intr: &CameraIntrinsics,
    opts: &RefineOptions,
    sink: &mut dyn FnMut(usize, &RefinerInput),
) -> Result<RefineResult> {
    opts.validate()?;
    if opts.outer_iterations == 0 {
        return Err(Error::InvalidArgument("outer_iterations must be at least 1".into()));
    }
    let model = PointModel::from_mesh(mesh, opts.point_count, opts.sample_seed)?;
    let observed = model.observe(gt);
    let loss = crate::losses::PointLoss::new(opts.loss_kind, model.center, model.diameter);
    let edges = extract_sharp_edges(mesh, DEFAULT_SHARP_THRESHOLD)?;
    let observed_render = render(mesh, &edges, gt, intr)?;
    let photo = synthetic_photo(&observed_render);

    let mut pose = *initial;
    let mut loss_trace = Vec::new();
    let mut add_trace = vec![observed_add(&observed, &model.points, &pose)];
    let mut iou_trace = Vec::with_capacity(opts.outer_iterations);
    let mut converged = false;
    for outer in 0..opts.outer_iterations {
        let estimate = render(mesh, &edges, &pose, intr)?;
        iou_trace.push(mask_iou(&estimate.mask, &observed_render.mask)?);
        if let Some(input) = refiner_input(&photo, &observed_render, &estimate)? {
            sink(outer, &input);
        }
        let run = descend(&loss, &observed, &model, pose, opts, outer, &mut loss_trace)?;
        pose = run.pose;
        converged = run.converged;
        add_trace.push(observed_add(&observed, &model.points, &pose));
    }
    Ok(RefineResult {
        final_pose: pose,
        loss_trace,
        add_trace,
        converged,
        iou_trace,
    })
}

/// Repeats render, crop and refinement `opts.outer_iterations` times, each run
/// starting from the previous estimate. Observed points are `opts.point_count`
/// surface samples placed by `gt`.
pub fn iterative_refine(
    initial: &Pose,
    mesh: &Mesh,
    gt: &Pose,
    intr: &CameraIntrinsics,
    opts: &RefineOptions,
) -> Result<RefineResult> {
    iterative_refine_with(initial, mesh, gt, intr, opts, &mut |_, _| {})
}
