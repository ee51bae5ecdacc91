use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Mesh;

/// Default face-normal angle above which an interior edge counts as sharp.
pub const DEFAULT_SHARP_THRESHOLD: f64 = FRAC_PI_4;

/// Mesh edges to draw, as sorted vertex-index pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharpEdgeSet {
    pub edges: Vec<[usize; 2]>,
    pub dihedral_threshold: f64,
}

impl SharpEdgeSet {
    pub fn empty(threshold: f64) -> Self {
        SharpEdgeSet {
            edges: Vec::new(),
            dihedral_threshold: threshold,
        }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

/// Edges on one face (boundary) or whose two face normals differ by at least
/// `threshold` radians. Output is sorted by vertex pair.
pub fn extract_sharp_edges(mesh: &Mesh, threshold: f64) -> Result<SharpEdgeSet> {
    let mut faces: BTreeMap<[usize; 2], Vec<usize>> = BTreeMap::new();
    for (t, tri) in mesh.triangles().iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            if a == b {
                continue;
            }
            faces.entry([a.min(b), a.max(b)]).or_default().push(t);
        }
    }
    let mut edges = Vec::new();
    for (edge, adjacent) in &faces {
        match adjacent.as_slice() {
            [_] => edges.push(*edge),
            [f, g] => {
                let (n1, n2) = (mesh.face_cross(*f), mesh.face_cross(*g));
                let angle = n1.cross(&n2).norm().atan2(n1.dot(&n2));
                if angle >= threshold {
                    edges.push(*edge);
                }
            }
            _ => return Err(Error::NonManifoldEdge(edge[0], edge[1])),
        }
    }
    Ok(SharpEdgeSet {
        edges,
        dihedral_threshold: threshold,
    })
}
