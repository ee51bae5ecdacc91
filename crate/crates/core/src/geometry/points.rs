use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::mesh::Mesh;
use super::pose::{Pose, Vec3};
use crate::error::{Error, Result};

/// An ordered list of 3D points. Order matters: the point-matching losses and
/// ADD pair points by index.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PointSet(Vec<Vec3>);

impl PointSet {
    pub fn new(points: Vec<Vec3>) -> Self {
        PointSet(points)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn points(&self) -> &[Vec3] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Vec3> {
        self.0.iter()
    }

    pub fn into_inner(self) -> Vec<Vec3> {
        self.0
    }

    pub(crate) fn require_nonempty(&self) -> Result<()> {
        if self.0.is_empty() {
            Err(Error::EmptyPointSet)
        } else {
            Ok(())
        }
    }

    pub fn transformed(&self, pose: &Pose) -> PointSet {
        transform_points(pose, self)
    }

    /// Subset selected by index, in the given order.
    pub fn select(&self, indices: &[usize]) -> PointSet {
        PointSet(indices.iter().map(|&i| self.0[i]).collect())
    }

    pub fn mean(&self) -> Vec3 {
        self.0.iter().fold(Vec3::zeros(), |a, p| a + p) / self.0.len().max(1) as f64
    }
}

impl From<Vec<Vec3>> for PointSet {
    fn from(v: Vec<Vec3>) -> Self {
        PointSet(v)
    }
}

impl<'a> IntoIterator for &'a PointSet {
    type Item = &'a Vec3;
    type IntoIter = std::slice::Iter<'a, Vec3>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

pub fn transform_points(pose: &Pose, pts: &PointSet) -> PointSet {
    PointSet(pts.0.iter().map(|p| pose.transform_point(p)).collect())
}

/// Area-weighted uniform samples on the mesh surface.
pub fn sample_surface_points(mesh: &Mesh, n: usize, seed: u64) -> Result<PointSet> {
    sample_surface_points_with_faces(mesh, n, seed).map(|(pts, _)| pts)
}

/// As [`sample_surface_points`], also returning the face each sample came from.
pub fn sample_surface_points_with_faces(
    mesh: &Mesh,
    n: usize,
    seed: u64,
) -> Result<(PointSet, Vec<usize>)> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    let mut cumulative = Vec::with_capacity(mesh.triangles().len());
    let mut total = 0.0;
    for t in 0..mesh.triangles().len() {
        total += mesh.triangle_area(t);
        cumulative.push(total);
    }
    if !(total > 0.0) {
        return Err(Error::DegenerateSurface);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    let mut faces = Vec::with_capacity(n);
    for _ in 0..n {
        let target = rng.random::<f64>() * total;
        let face = cumulative
            .partition_point(|&c| c <= target)
            .min(cumulative.len() - 1);
        let [a, b, c] = mesh.triangle(face);
        let r1 = rng.random::<f64>().sqrt();
        let r2 = rng.random::<f64>();
        points.push(a * (1.0 - r1) + b * (r1 * (1.0 - r2)) + c * (r1 * r2));
        faces.push(face);
    }
    Ok((PointSet(points), faces))
}
