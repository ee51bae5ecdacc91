use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, Mesh, Pose, Vec3};

use super::edges::SharpEdgeSet;
use super::grid::{BinaryImage, DepthImage, Grid};

/// Geometry closer than this (meters) is clipped away.
pub const NEAR_PLANE: f64 = 1e-4;
/// Depth slack (meters) when testing edge samples against the depth buffer.
pub const EDGE_DEPTH_BIAS: f64 = 1e-4;

/// Edge samples per pixel of projected length.
const EDGE_SAMPLES_PER_PIXEL: f64 = 4.0;

#[derive(Clone, Debug, PartialEq)]
pub struct RenderBuffers {
    pub mask: BinaryImage,
    /// Meters along the optical axis; `+inf` for background.
    pub depth: DepthImage,
    pub edge_image: BinaryImage,
}

impl RenderBuffers {
    pub fn empty(size: (usize, usize)) -> Self {
        RenderBuffers {
            mask: Grid::filled(size.0, size.1, false),
            depth: Grid::filled(size.0, size.1, f64::INFINITY),
            edge_image: Grid::filled(size.0, size.1, false),
        }
    }

    /// `(height, width)`.
    pub fn size(&self) -> (usize, usize) {
        self.mask.size()
    }
}

#[derive(Clone, Copy, Debug)]
struct ScreenVertex {
    u: f64,
    v: f64,
    inv_z: f64,
}

fn to_screen(intr: &CameraIntrinsics, p: &Vec3) -> ScreenVertex {
    ScreenVertex {
        u: intr.fx * p.x / p.z + intr.cx,
        v: intr.fy * p.y / p.z + intr.cy,
        inv_z: 1.0 / p.z,
    }
}

/// Clip a convex polygon against `z >= NEAR_PLANE`.
fn clip_near(poly: &[Vec3]) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let (ina, inb) = (a.z >= NEAR_PLANE, b.z >= NEAR_PLANE);
        if ina {
            out.push(a);
        }
        if ina != inb {
            let t = (NEAR_PLANE - a.z) / (b.z - a.z);
            let mut p = a + (b - a) * t;
            p.z = NEAR_PLANE;
            out.push(p);
        }
    }
    out
}

/// Edge function of `p` against the directed edge `a -> b`, evaluated with the
/// endpoints in a fixed order so that a shared edge gives exactly opposite
/// values in its two triangles.
#[inline]
fn edge_function(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> f64 {
    let eval = |a: (f64, f64), b: (f64, f64)| (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
    if a <= b {
        eval(a, b)
    } else {
        -eval(b, a)
    }
}

/// Top-left rule for triangles with positive edge functions inside
/// (image coordinates, v pointing down).
#[inline]
fn is_top_left(a: (f64, f64), b: (f64, f64)) -> bool {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    (dy == 0.0 && dx > 0.0) || dy < 0.0
}

fn fill_triangle(tri: [ScreenVertex; 3], depth: &mut DepthImage) {
    let mut p = tri.map(|s| (s.u, s.v));
    let mut w = tri.map(|s| s.inv_z);
    let mut area = edge_function(p[0], p[1], p[2]);
    if area == 0.0 || !area.is_finite() {
        return;
    }
    if area < 0.0 {
        p.swap(1, 2);
        w.swap(1, 2);
        area = -area;
    }
    let (h, wd) = (depth.height() as f64, depth.width() as f64);
    let min_u = p.iter().map(|q| q.0).fold(f64::INFINITY, f64::min).ceil().max(0.0);
    let max_u = p.iter().map(|q| q.0).fold(f64::NEG_INFINITY, f64::max).floor().min(wd - 1.0);
    let min_v = p.iter().map(|q| q.1).fold(f64::INFINITY, f64::min).ceil().max(0.0);
    let max_v = p.iter().map(|q| q.1).fold(f64::NEG_INFINITY, f64::max).floor().min(h - 1.0);
    if min_u > max_u || min_v > max_v {
        return;
    }
    let edges = [(p[1], p[2]), (p[2], p[0]), (p[0], p[1])];
    let top_left = edges.map(|(a, b)| is_top_left(a, b));
    for row in min_v as usize..=max_v as usize {
        for col in min_u as usize..=max_u as usize {
            let q = (col as f64, row as f64);
            let mut bary = [0.0; 3];
            let mut inside = true;
            for k in 0..3 {
                let e = edge_function(edges[k].0, edges[k].1, q);
                if e < 0.0 || (e == 0.0 && !top_left[k]) {
                    inside = false;
                    break;
                }
                bary[k] = e / area;
            }
            if !inside {
                continue;
            }
            let inv_z = bary[0] * w[0] + bary[1] * w[1] + bary[2] * w[2];
            let z = 1.0 / inv_z;
            let cell = depth.get_mut(row, col);
            if z < *cell {
                *cell = z;
            }
        }
    }
}

/// Z-buffered coverage of both triangle facings. Geometry behind the near
/// plane is clipped, so an object fully behind the camera yields an empty mask.
pub fn rasterize(mesh: &Mesh, pose: &Pose, intr: &CameraIntrinsics, size: (usize, usize)) -> RenderBuffers {
    let mut depth = Grid::filled(size.0, size.1, f64::INFINITY);
    let cam: Vec<Vec3> = mesh.vertices().iter().map(|v| pose.transform_point(v)).collect();
    for tri in mesh.triangles() {
        let poly = [cam[tri[0]], cam[tri[1]], cam[tri[2]]];
        if poly.iter().all(|p| p.z >= NEAR_PLANE) {
            fill_triangle(poly.map(|p| to_screen(intr, &p)), &mut depth);
            continue;
        }
        let clipped = clip_near(&poly);
        for k in 1..clipped.len().saturating_sub(1) {
            let t = [clipped[0], clipped[k], clipped[k + 1]];
            fill_triangle(t.map(|p| to_screen(intr, &p)), &mut depth);
        }
    }
    let mask = depth.map(|d| d.is_finite());
    RenderBuffers {
        mask,
        depth,
        edge_image: Grid::filled(size.0, size.1, false),
    }
}

/// Draws every edge sample that is not hidden behind the depth buffer.
/// `line_width` is the side of the square stamped per visible sample.
pub fn render_edges_with_width(
    edges: &SharpEdgeSet,
    mesh: &Mesh,
    pose: &Pose,
    intr: &CameraIntrinsics,
    depth: &DepthImage,
    line_width: usize,
) -> Result<BinaryImage> {
    depth.require_size(intr.size())?;
    if line_width == 0 {
        return Err(Error::InvalidArgument("line width must be positive".into()));
    }
    let (h, w) = depth.size();
    let mut out = Grid::filled(h, w, false);
    let lo = -(((line_width - 1) / 2) as i64);
    let hi = (line_width / 2) as i64;
    let nv = mesh.vertices().len();
    for &[a, b] in &edges.edges {
        if a >= nv || b >= nv {
            return Err(Error::IndexOutOfRange {
                what: "edge vertex",
                index: a.max(b),
                limit: nv,
            });
        }
        let mut pa = pose.transform_point(&mesh.vertices()[a]);
        let mut pb = pose.transform_point(&mesh.vertices()[b]);
        if pa.z < NEAR_PLANE && pb.z < NEAR_PLANE {
            continue;
        }
        if pa.z < NEAR_PLANE || pb.z < NEAR_PLANE {
            let t = (NEAR_PLANE - pa.z) / (pb.z - pa.z);
            let cut = pa + (pb - pa) * t;
            if pa.z < NEAR_PLANE {
                pa = cut;
            } else {
                pb = cut;
            }
        }
        let (sa, sb) = (to_screen(intr, &pa), to_screen(intr, &pb));
        let length = (sb.u - sa.u).hypot(sb.v - sa.v);
        let steps = ((length * EDGE_SAMPLES_PER_PIXEL).ceil() as usize).max(1);
        for i in 0..=steps {
            let p = pa + (pb - pa) * (i as f64 / steps as f64);
            let s = to_screen(intr, &p);
            let (row, col) = ((s.v + 0.5).floor(), (s.u + 0.5).floor());
            if !(row >= 0.0 && col >= 0.0 && row < h as f64 && col < w as f64) {
                continue;
            }
            let (row, col) = (row as i64, col as i64);
            if p.z > *depth.get(row as usize, col as usize) + EDGE_DEPTH_BIAS {
                continue;
            }
            for dr in lo..=hi {
                for dc in lo..=hi {
                    let (r, c) = (row + dr, col + dc);
                    if r >= 0 && c >= 0 && r < h as i64 && c < w as i64 {
                        *out.get_mut(r as usize, c as usize) = true;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// [`render_edges_with_width`] with 1-pixel lines.
pub fn render_edges(
    edges: &SharpEdgeSet,
    mesh: &Mesh,
    pose: &Pose,
    intr: &CameraIntrinsics,
    depth: &DepthImage,
) -> Result<BinaryImage> {
    render_edges_with_width(edges, mesh, pose, intr, depth, 1)
}

/// Mask, depth and visible sharp edges at the full intrinsics resolution.
pub fn render(mesh: &Mesh, edges: &SharpEdgeSet, pose: &Pose, intr: &CameraIntrinsics) -> Result<RenderBuffers> {
    let mut buffers = rasterize(mesh, pose, intr, intr.size());
    buffers.edge_image = render_edges(edges, mesh, pose, intr, &buffers.depth)?;
    Ok(buffers)
}
