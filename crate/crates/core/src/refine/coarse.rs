use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codebook::{RoughPose, ViewpointCodebook, BIN_COUNT, IN_PLANE_BINS};
use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, Mesh, Pose, Vec3};
use crate::render::{render, BinaryImage, Grid, SharpEdgeSet};

use super::chamfer::{distance_transform, PaddedField};

/// Translation search and candidate settings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchOptions {
    /// Coarse grid half-width in pixels.
    pub coarse_radius: i32,
    pub coarse_stride: i32,
    /// Stride-1 half-width around the best coarse shift.
    pub fine_radius: i32,
    /// Bins kept after the one-sided pre-ranking.
    pub candidates: usize,
}

impl Default for MatchOptions {
    fn default() -> Self {
        MatchOptions {
            coarse_radius: 24,
            coarse_stride: 4,
            fine_radius: 4,
            candidates: 16,
        }
    }
}

impl MatchOptions {
    pub fn validate(&self) -> Result<()> {
        if self.coarse_radius < 0 || self.fine_radius < 0 || self.coarse_stride <= 0 || self.candidates == 0 {
            return Err(Error::InvalidArgument(format!("invalid match options {self:?}")));
        }
        Ok(())
    }

    /// Largest shift component the search can reach.
    fn max_shift(&self) -> usize {
        ((self.coarse_radius / self.coarse_stride) * self.coarse_stride + self.fine_radius) as usize
    }

    fn coarse_shifts(&self) -> Vec<(i32, i32)> {
        grid_shifts((0, 0), self.coarse_radius, self.coarse_stride)
    }
}

/// `(dv, du)` offsets around `center`, row-major (dv outer).
fn grid_shifts(center: (i32, i32), radius: i32, stride: i32) -> Vec<(i32, i32)> {
    let steps: Vec<i32> = (-(radius / stride)..=radius / stride).map(|k| k * stride).collect();
    let mut out = Vec::with_capacity(steps.len() * steps.len());
    for &dv in &steps {
        for &du in &steps {
            out.push((center.0 + dv, center.1 + du));
        }
    }
    out
}

/// Best bin and alignment found by [`TemplateLibrary::best_match`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemplateMatch {
    pub vp_idx: usize,
    pub ipr_idx: usize,
    /// Template shift `(du, dv)` in pixels.
    pub shift: [i32; 2],
    /// Symmetric chamfer distance at that shift, in pixels.
    pub score: f64,
}

/// Edge templates of every codebook bin, rendered with the object origin on
/// the optical axis at a fixed depth.
#[derive(Clone, Debug)]
pub struct TemplateLibrary {
    size: (usize, usize),
    depth: f64,
    /// Edge pixels `(row, col)` per bin, in a fixed shuffled order.
    templates: Vec<Vec<(i32, i32)>>,
    /// The same pixels as indices into a field padded by `pad`.
    indices: Vec<Vec<usize>>,
    pad: usize,
}

impl TemplateLibrary {
    pub fn build(
        mesh: &Mesh,
        edges: &SharpEdgeSet,
        cb: &ViewpointCodebook,
        depth_guess: f64,
        intr: &CameraIntrinsics,
    ) -> Result<Self> {
        if !(depth_guess > 0.0 && depth_guess.is_finite()) {
            return Err(Error::InvalidArgument(format!("depth_guess must be positive, got {depth_guess}")));
        }
        intr.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut templates = Vec::with_capacity(BIN_COUNT);
        for bin in 0..BIN_COUNT {
            let pose = Pose::from_parts(
                cb.decode_rotation(bin / IN_PLANE_BINS, bin % IN_PLANE_BINS)?,
                Vec3::new(0.0, 0.0, depth_guess),
            );
            let mut pixels: Vec<(i32, i32)> = render(mesh, edges, &pose, intr)?
                .edge_image
                .pixels()
                .into_iter()
                .map(|(r, c)| (r as i32, c as i32))
                .collect();
            // spreads each partial sum over the whole outline so pruning bites early
            pixels.shuffle(&mut rng);
            templates.push(pixels);
        }
        let pad = MatchOptions::default().max_shift();
        let size = intr.size();
        let indices = index_lists(&templates, size.1, pad);
        Ok(TemplateLibrary {
            size,
            depth: depth_guess,
            templates,
            indices,
            pad,
        })
    }

    pub fn depth(&self) -> f64 {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    /// Edge pixels `(row, col)` of a bin.
    pub fn template(&self, vp_idx: usize, ipr_idx: usize) -> &[(i32, i32)] {
        &self.templates[vp_idx * IN_PLANE_BINS + ipr_idx]
    }

    /// Binary image of a bin's template shifted by `(du, dv)`.
    pub fn template_image(&self, vp_idx: usize, ipr_idx: usize, shift: [i32; 2]) -> BinaryImage {
        let (h, w) = self.size;
        let mut img = Grid::filled(h, w, false);
        for &(r, c) in self.template(vp_idx, ipr_idx) {
            let (r, c) = (r + shift[1], c + shift[0]);
            if r >= 0 && c >= 0 && (r as usize) < h && (c as usize) < w {
                *img.get_mut(r as usize, c as usize) = true;
            }
        }
        img
    }

    /// Bins are pre-ranked by the template-to-image distance over the coarse
    /// grid, then the best candidates are scored symmetrically on the coarse
    /// grid and refined at stride 1. Ties go to the lower bin, then to the
    /// earlier shift in row-major order.
    pub fn best_match(&self, observed: &BinaryImage, opts: &MatchOptions) -> Result<TemplateMatch> {
        opts.validate()?;
        observed.require_size(self.size)?;
        let obs_pixels = observed.pixels();
        if obs_pixels.is_empty() {
            return Err(Error::NoEdges);
        }
        let pad = opts.max_shift();
        let obs_field = PaddedField::new(&distance_transform(observed), pad);
        let candidates = self.rank(&obs_field, opts);

        let mut best: Option<TemplateMatch> = None;
        let mut tmpl_idx = Vec::new();
        for bin in candidates {
            let pixels = &self.templates[bin];
            let mut img = Grid::filled(self.size.0, self.size.1, false);
            for &(r, c) in pixels {
                *img.get_mut(r as usize, c as usize) = true;
            }
            let tmpl_field = PaddedField::new(&distance_transform(&img), pad);
            tmpl_idx.clear();
            tmpl_idx.extend(pixels.iter().map(|&(r, c)| obs_field.index(r, c)));
            let obs_idx: Vec<usize> = obs_pixels.iter().map(|&(r, c)| tmpl_field.index(r as i32, c as i32)).collect();
            let score_at = |s: (i32, i32)| {
                let forward = obs_field.sum(&tmpl_idx, obs_field.offset(s)) / tmpl_idx.len() as f64;
                let backward = tmpl_field.sum(&obs_idx, tmpl_field.offset((-s.0, -s.1))) / obs_idx.len() as f64;
                0.5 * (forward + backward)
            };
            let (mut at, mut score) = ((0, 0), f64::INFINITY);
            for s in opts.coarse_shifts() {
                let v = score_at(s);
                if v < score {
                    (at, score) = (s, v);
                }
            }
            for s in grid_shifts(at, opts.fine_radius, 1) {
                let v = score_at(s);
                if v < score {
                    (at, score) = (s, v);
                }
            }
            if best.is_none_or(|b| score < b.score) {
                best = Some(TemplateMatch {
                    vp_idx: bin / IN_PLANE_BINS,
                    ipr_idx: bin % IN_PLANE_BINS,
                    shift: [at.1, at.0],
                    score,
                });
            }
        }
        best.ok_or(Error::NoEdges)
    }

    /// Up to `opts.candidates` bins with the lowest one-sided distance, in
    /// bin order.
    fn rank(&self, obs_field: &PaddedField, opts: &MatchOptions) -> Vec<usize> {
        let k = opts.candidates;
        let shifts: Vec<isize> = opts.coarse_shifts().into_iter().map(|s| obs_field.offset(s)).collect();
        let owned;
        let idx = if opts.max_shift() == self.pad {
            &self.indices
        } else {
            owned = index_lists(&self.templates, self.size.1, opts.max_shift());
            &owned
        };
        // shift-0 scores bound the k-th best over the grid from above
        let mut at_zero: Vec<f32> = idx
            .iter()
            .filter(|t| !t.is_empty())
            .map(|t| obs_field.sum(t, 0) as f32 / t.len() as f32)
            .collect();
        if at_zero.is_empty() {
            return Vec::new();
        }
        at_zero.sort_by(f32::total_cmp);
        let mut bound = at_zero[(k - 1).min(at_zero.len() - 1)];

        // best k so far, ascending by (score, bin)
        let mut top: Vec<(f32, usize)> = Vec::with_capacity(k + 1);
        for (bin, t) in idx.iter().enumerate() {
            if t.is_empty() {
                continue;
            }
            let n = t.len() as f32;
            let mut best = bound;
            let mut found = false;
            for &off in &shifts {
                // slack keeps a template sitting exactly on the bound
                if let Some(sum) = obs_field.shifted_sum(t, off, best * n * (1.0 + 1e-6)) {
                    best = best.min(sum / n);
                    found = true;
                }
            }
            if found {
                let pos = top.partition_point(|&(s, b)| (s, b) < (best, bin));
                top.insert(pos, (best, bin));
                top.truncate(k);
                if top.len() == k {
                    bound = bound.min(top[k - 1].0);
                }
            }
        }
        let mut bins: Vec<usize> = top.into_iter().map(|(_, b)| b).collect();
        bins.sort_unstable();
        bins
    }
}

fn index_lists(templates: &[Vec<(i32, i32)>], width: usize, pad: usize) -> Vec<Vec<usize>> {
    let stride = PaddedField::stride_for(width, pad);
    templates
        .iter()
        .map(|t| t.iter().map(|&(r, c)| PaddedField::index_in(stride, pad, r, c)).collect())
        .collect()
}

/// Best codebook bin for an observed edge image, with the image offset of the
/// object origin and `depth_guess` as depth.
pub fn coarse_match(
    observed_edge_image: &BinaryImage,
    mesh: &Mesh,
    edges: &SharpEdgeSet,
    cb: &ViewpointCodebook,
    depth_guess: f64,
    intr: &CameraIntrinsics,
) -> Result<RoughPose> {
    if observed_edge_image.count() == 0 {
        return Err(Error::NoEdges);
    }
    let lib = TemplateLibrary::build(mesh, edges, cb, depth_guess, intr)?;
    let m = lib.best_match(observed_edge_image, &MatchOptions::default())?;
    Ok(RoughPose {
        vp_idx: m.vp_idx,
        ipr_idx: m.ipr_idx,
        offset2d: [m.shift[0] as f64, m.shift[1] as f64],
        depth: depth_guess,
    })
}
