use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::codebook::SymmetrySpec;
use crate::error::{Error, Result};
use crate::geometry::shapes::{cylinder, extruded_prism, regular_polygon, revolve};
use crate::geometry::{load_obj, Mesh, Pose, Vec3};

/// Procedural test objects, sized in meters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BundledMesh {
    /// Cylinder with a flange at each end.
    Pulley,
    /// Rectangular block with a through-bore.
    Housing,
    /// Hexagonal prism with a through-bore.
    Nut,
    /// Long capped cylinder.
    Shaft,
    /// Pulley with an off-axis stud on one flange.
    PulleyWithScrew,
}

impl BundledMesh {
    pub const ALL: [BundledMesh; 5] = [
        BundledMesh::Pulley,
        BundledMesh::Housing,
        BundledMesh::Nut,
        BundledMesh::Shaft,
        BundledMesh::PulleyWithScrew,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BundledMesh::Pulley => "pulley",
            BundledMesh::Housing => "housing",
            BundledMesh::Nut => "nut",
            BundledMesh::Shaft => "shaft",
            BundledMesh::PulleyWithScrew => "pulley_with_screw",
        }
    }

    pub fn mesh(self) -> Mesh {
        match self {
            BundledMesh::Pulley => pulley(),
            BundledMesh::Housing => {
                let (a, b) = (0.04, 0.025);
                extruded_prism(&[(a, -b), (a, b), (-a, b), (-a, -b)], Some((0.012, 32)), -0.02, 0.02)
            }
            BundledMesh::Nut => extruded_prism(&regular_polygon(6, 0.02, 0.0), Some((0.009, 24)), -0.008, 0.008),
            BundledMesh::Shaft => cylinder(0.012, 0.1, 32),
            BundledMesh::PulleyWithScrew => {
                let stud = cylinder(0.004, 0.02, 12).transformed(&Pose::from_translation(Vec3::new(0.03, 0.0, 0.03)));
                pulley().merged(&stud).expect("disjoint parts merge")
            }
        }
    }

    /// Rotational symmetry in the object frame. Rotation about the axis is
    /// the only continuous symmetry recorded for revolved parts.
    pub fn symmetry(self) -> SymmetrySpec {
        let z = Vec3::z();
        match self {
            BundledMesh::Pulley | BundledMesh::Shaft => SymmetrySpec::cylindrical(z),
            BundledMesh::Housing => SymmetrySpec::dihedral(z, Vec3::x(), 2),
            BundledMesh::Nut => SymmetrySpec::dihedral(z, Vec3::x(), 6),
            BundledMesh::PulleyWithScrew => Ok(SymmetrySpec::None),
        }
        .expect("bundled symmetry is valid")
    }
}

fn pulley() -> Mesh {
    revolve(
        &[
            (0.0, -0.02),
            (0.04, -0.02),
            (0.04, -0.012),
            (0.025, -0.012),
            (0.025, 0.012),
            (0.04, 0.012),
            (0.04, 0.02),
            (0.0, 0.02),
        ],
        48,
    )
}

impl fmt::Display for BundledMesh {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BundledMesh {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::UnknownMesh(s.to_string()))
    }
}

/// A mesh with its symmetry.
#[derive(Clone, Debug)]
pub struct MeshEntry {
    pub mesh: Mesh,
    pub symmetry: SymmetrySpec,
}

/// Meshes addressable by id.
#[derive(Clone, Debug, Default)]
pub struct MeshLibrary {
    entries: BTreeMap<String, MeshEntry>,
}

impl MeshLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    /// The five bundled meshes under their names.
    pub fn bundled() -> Self {
        let mut lib = Self::new();
        for m in BundledMesh::ALL {
            lib.insert(m.name(), m.mesh(), m.symmetry());
        }
        lib
    }

    pub fn insert(&mut self, id: impl Into<String>, mesh: Mesh, symmetry: SymmetrySpec) {
        self.entries.insert(id.into(), MeshEntry { mesh, symmetry });
    }

    pub fn get(&self, id: &str) -> Result<&MeshEntry> {
        self.entries.get(id).ok_or_else(|| Error::UnknownMesh(id.to_string()))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.entries.contains_key(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

/// A bundled mesh by name, or else an OBJ file (no symmetry assumed).
pub fn resolve_mesh(spec: &str) -> Result<MeshEntry> {
    match spec.parse::<BundledMesh>() {
        Ok(m) => Ok(MeshEntry {
            mesh: m.mesh(),
            symmetry: m.symmetry(),
        }),
        Err(_) => Ok(MeshEntry {
            mesh: load_obj(spec)?,
            symmetry: SymmetrySpec::None,
        }),
    }
}
