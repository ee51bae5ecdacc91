use super::pose::{Pose, Vec3};
use crate::error::{Error, Result};

/// Indexed triangle mesh in the object frame.
///
/// `centroid` is the arithmetic mean of the vertices unless overridden with
/// [`Mesh::with_centroid`]; `diameter` is the largest vertex-to-vertex distance.
#[derive(Clone, Debug)]
pub struct Mesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    centroid: Vec3,
    diameter: f64,
}

impl Mesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let count = vertices.len();
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&index) = tri.iter().find(|&&i| i >= count) {
                return Err(Error::TriangleIndex {
                    triangle: t,
                    index,
                    count,
                });
            }
        }
        let diameter = mesh_diameter(&vertices)?;
        let centroid = vertex_mean(&vertices);
        Ok(Mesh {
            vertices,
            triangles,
            centroid,
            diameter,
        })
    }

    /// Replaces the object center used by the cosine loss.
    pub fn with_centroid(mut self, centroid: Vec3) -> Self {
        self.centroid = centroid;
        self
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn centroid(&self) -> Vec3 {
        self.centroid
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn triangle(&self, t: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Unnormalized normal `(b - a) x (c - a)`; its length is twice the area.
    pub fn face_cross(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.triangle(t);
        (b - a).cross(&(c - a))
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        0.5 * self.face_cross(t).norm()
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Axis-aligned bounds `(min, max)`.
    pub fn bounds(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    /// The same mesh with every vertex (and the centroid) moved by `pose`.
    pub fn transformed(&self, pose: &Pose) -> Mesh {
        Mesh {
            vertices: self.vertices.iter().map(|v| pose.transform_point(v)).collect(),
            triangles: self.triangles.clone(),
            centroid: pose.transform_point(&self.centroid),
            diameter: self.diameter,
        }
    }

    /// Concatenates two meshes into one (no welding).
    pub fn merged(&self, other: &Mesh) -> Result<Mesh> {
        let offset = self.vertices.len();
        let mut vertices = self.vertices.clone();
        vertices.extend_from_slice(&other.vertices);
        let mut triangles = self.triangles.clone();
        triangles.extend(
            other
                .triangles
                .iter()
                .map(|t| [t[0] + offset, t[1] + offset, t[2] + offset]),
        );
        Mesh::new(vertices, triangles)
    }
}

/// Largest pairwise vertex distance; 0 for a single vertex.
pub fn mesh_diameter(vertices: &[Vec3]) -> Result<f64> {
    if vertices.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let mut best = 0.0f64;
    for (i, a) in vertices.iter().enumerate() {
        for b in &vertices[i + 1..] {
            best = best.max((a - b).norm_squared());
        }
    }
    Ok(best.sqrt())
}

// Summed in lexicographic order so the result does not depend on vertex order.
fn vertex_mean(vertices: &[Vec3]) -> Vec3 {
    let mut sorted: Vec<&Vec3> = vertices.iter().collect();
    sorted.sort_by(|a, b| {
        a.x.total_cmp(&b.x)
            .then(a.y.total_cmp(&b.y))
            .then(a.z.total_cmp(&b.z))
    });
    let sum = sorted.into_iter().fold(Vec3::zeros(), |acc, v| acc + v);
    sum / vertices.len() as f64
}
