//! Procedural closed meshes with outward-facing winding.

use std::collections::HashMap;
use std::f64::consts::TAU;

use super::mesh::Mesh;
use super::pose::Vec3;

/// Axis-aligned unit cube centered at the origin (8 vertices, 12 triangles).
pub fn unit_cube() -> Mesh {
    cuboid(1.0, 1.0, 1.0)
}

pub fn cuboid(sx: f64, sy: f64, sz: f64) -> Mesh {
    let (hx, hy, hz) = (sx * 0.5, sy * 0.5, sz * 0.5);
    let vertices = (0..8)
        .map(|i| {
            Vec3::new(
                if i & 1 == 0 { -hx } else { hx },
                if i & 2 == 0 { -hy } else { hy },
                if i & 4 == 0 { -hz } else { hz },
            )
        })
        .collect();
    let quads = [
        [0, 2, 3, 1], // -z
        [4, 5, 7, 6], // +z
        [0, 1, 5, 4], // -y
        [2, 6, 7, 3], // +y
        [0, 4, 6, 2], // -x
        [1, 3, 7, 5], // +x
    ];
    let triangles = quads
        .iter()
        .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
        .collect();
    Mesh::new(vertices, triangles).expect("cuboid is valid")
}

/// Subdivided icosahedron projected onto a sphere.
pub fn icosphere(subdivisions: usize, radius: f64) -> Mesh {
    let t = (1.0 + 5f64.sqrt()) * 0.5;
    let mut vertices: Vec<Vec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Vec3>| -> usize {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) * 0.5).normalize());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let vertices = vertices.into_iter().map(|v| v * radius).collect();
    Mesh::new(vertices, faces).expect("icosphere is valid")
}

/// Closed surface of revolution about +z.
///
/// `profile` is a list of `(radius, z)` points running from the bottom to the
/// top; a radius of exactly 0 is only allowed at the two ends and becomes a pole.
pub fn revolve(profile: &[(f64, f64)], segments: usize) -> Mesh {
    assert!(profile.len() >= 2 && segments >= 3);
    let mut vertices = Vec::new();
    let mut rings = Vec::with_capacity(profile.len());
    for &(r, z) in profile {
        if r == 0.0 {
            rings.push(vec![vertices.len(); segments]);
            vertices.push(Vec3::new(0.0, 0.0, z));
        } else {
            let ring: Vec<usize> = (0..segments)
                .map(|j| {
                    let theta = TAU * j as f64 / segments as f64;
                    vertices.push(Vec3::new(r * theta.cos(), r * theta.sin(), z));
                    vertices.len() - 1
                })
                .collect();
            rings.push(ring);
        }
    }
    let mut triangles = Vec::new();
    for w in rings.windows(2) {
        let (lo, hi) = (&w[0], &w[1]);
        for j in 0..segments {
            let k = (j + 1) % segments;
            let (a, b, c, d) = (lo[j], lo[k], hi[k], hi[j]);
            if a != b {
                triangles.push([a, b, c]);
            }
            if c != d {
                triangles.push([a, c, d]);
            }
        }
    }
    Mesh::new(vertices, triangles).expect("revolved mesh is valid")
}

/// Closed cylinder of the given radius spanning `z in [-length/2, length/2]`.
pub fn cylinder(radius: f64, length: f64, segments: usize) -> Mesh {
    let h = length * 0.5;
    revolve(&[(0.0, -h), (radius, -h), (radius, h), (0.0, h)], segments)
}

/// Prism extruded along z over `[z0, z1]` from a convex counter-clockwise
/// outline, optionally with a circular through-bore of `bore_radius` sampled
/// with `bore_segments` vertices.
pub fn extruded_prism(
    outline: &[(f64, f64)],
    bore: Option<(f64, usize)>,
    z0: f64,
    z1: f64,
) -> Mesh {
    let n_out = outline.len();
    assert!(n_out >= 3 && z1 > z0);
    let mut vertices = Vec::new();
    let push_loop = |pts: &[(f64, f64)], z: f64, vertices: &mut Vec<Vec3>| -> Vec<usize> {
        pts.iter()
            .map(|&(x, y)| {
                vertices.push(Vec3::new(x, y, z));
                vertices.len() - 1
            })
            .collect()
    };
    let outer = sort_by_angle(outline);
    let out_bot = push_loop(&outer, z0, &mut vertices);
    let out_top = push_loop(&outer, z1, &mut vertices);
    let mut triangles = Vec::new();
    wall(&out_bot, &out_top, false, &mut triangles);

    match bore {
        Some((radius, segments)) => {
            let circle: Vec<(f64, f64)> = (0..segments)
                .map(|j| {
                    let t = TAU * j as f64 / segments as f64;
                    (radius * t.cos(), radius * t.sin())
                })
                .collect();
            let in_bot = push_loop(&circle, z0, &mut vertices);
            let in_top = push_loop(&circle, z1, &mut vertices);
            wall(&in_bot, &in_top, true, &mut triangles);
            stitch(&outer, &out_top, &circle, &in_top, false, &mut triangles);
            stitch(&outer, &out_bot, &circle, &in_bot, true, &mut triangles);
        }
        None => {
            for (loop_ids, z, flip) in [(&out_top, z1, false), (&out_bot, z0, true)] {
                vertices.push(Vec3::new(0.0, 0.0, z));
                let c = vertices.len() - 1;
                for j in 0..n_out {
                    let (a, b) = (loop_ids[j], loop_ids[(j + 1) % n_out]);
                    triangles.push(if flip { [c, b, a] } else { [c, a, b] });
                }
            }
        }
    }
    Mesh::new(vertices, triangles).expect("prism is valid")
}

/// Regular polygon outline with `sides` corners at circumradius `r`.
pub fn regular_polygon(sides: usize, r: f64, phase: f64) -> Vec<(f64, f64)> {
    (0..sides)
        .map(|k| {
            let t = phase + TAU * k as f64 / sides as f64;
            (r * t.cos(), r * t.sin())
        })
        .collect()
}

fn angle_of(p: &(f64, f64)) -> f64 {
    p.1.atan2(p.0).rem_euclid(TAU)
}

fn sort_by_angle(pts: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut v = pts.to_vec();
    v.sort_by(|a, b| angle_of(a).total_cmp(&angle_of(b)));
    v
}

fn wall(bottom: &[usize], top: &[usize], inward: bool, out: &mut Vec<[usize; 3]>) {
    let n = bottom.len();
    for j in 0..n {
        let k = (j + 1) % n;
        let (a, b, c, d) = (bottom[j], bottom[k], top[k], top[j]);
        if inward {
            out.extend([[a, c, b], [a, d, c]]);
        } else {
            out.extend([[a, b, c], [a, c, d]]);
        }
    }
}

// Triangulates the annulus between an outer and an inner loop (both sorted by
// angle, counter-clockwise) by merging the two angle sequences.
fn stitch(
    outer_pts: &[(f64, f64)],
    outer: &[usize],
    inner_pts: &[(f64, f64)],
    inner: &[usize],
    flip: bool,
    out: &mut Vec<[usize; 3]>,
) {
    let (no, ni) = (outer.len(), inner.len());
    let ang = |pts: &[(f64, f64)], i: usize| {
        let n = pts.len();
        angle_of(&pts[i % n]) + TAU * (i / n) as f64
    };
    let (mut a, mut b) = (0usize, 0usize);
    while a < no || b < ni {
        let advance_outer = if a == no {
            false
        } else if b == ni {
            true
        } else {
            ang(outer_pts, a + 1) <= ang(inner_pts, b + 1)
        };
        let tri = if advance_outer {
            let t = [outer[a % no], outer[(a + 1) % no], inner[b % ni]];
            a += 1;
            t
        } else {
            let t = [outer[a % no], inner[(b + 1) % ni], inner[b % ni]];
            b += 1;
            t
        };
        out.push(if flip { [tri[0], tri[2], tri[1]] } else { tri });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn signed_volume(mesh: &Mesh) -> f64 {
        mesh.triangles()
            .iter()
            .map(|&[a, b, c]| {
                let v = mesh.vertices();
                v[a].dot(&v[b].cross(&v[c])) / 6.0
            })
            .sum()
    }

    // every edge used exactly twice, once in each direction
    fn assert_closed_oriented(mesh: &Mesh) {
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for t in mesh.triangles() {
            for k in 0..3 {
                *directed.entry((t[k], t[(k + 1) % 3])).or_default() += 1;
            }
        }
        for (&(a, b), &n) in &directed {
            assert_eq!(n, 1, "edge {a}-{b} repeated");
            assert_eq!(directed.get(&(b, a)), Some(&1), "edge {a}-{b} unmatched");
        }
    }

    #[test]
    fn cube_is_closed_with_unit_volume() {
        let cube = unit_cube();
        assert_closed_oriented(&cube);
        assert!((signed_volume(&cube) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cylinder_volume() {
        let m = cylinder(0.5, 2.0, 128);
        assert_closed_oriented(&m);
        let exact = std::f64::consts::PI * 0.25 * 2.0;
        assert!((signed_volume(&m) - exact).abs() / exact < 1e-3);
    }

    #[test]
    fn icosphere_counts() {
        let s = icosphere(3, 1.0);
        assert_eq!(s.triangles().len(), 1280);
        assert_eq!(s.vertices().len(), 642);
        assert_closed_oriented(&s);
        assert!(signed_volume(&s) > 0.0);
    }

    #[test]
    fn prism_with_bore_is_closed() {
        let hex = regular_polygon(6, 1.0, 0.0);
        let m = extruded_prism(&hex, Some((0.4, 24)), -0.3, 0.3);
        assert_closed_oriented(&m);
        let area = 1.5 * 3f64.sqrt();
        let bore = 0.5 * 24.0 * 0.16 * (TAU / 24.0).sin();
        assert!((signed_volume(&m) - (area - bore) * 0.6).abs() < 1e-9);
        let solid = extruded_prism(&hex, None, 0.0, 1.0);
        assert_closed_oriented(&solid);
        assert!((signed_volume(&solid) - area).abs() < 1e-9);
    }
}
