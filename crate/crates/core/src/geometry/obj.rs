//! Minimal Wavefront OBJ reader/writer: `v` and `f` records only.

use std::fmt::Write as _;
use std::path::Path;

use super::mesh::Mesh;
use super::pose::Vec3;
use crate::error::{Error, Result};

/// Parses OBJ text. Faces with more than three corners are fan-triangulated;
/// texture/normal indices (`f 1/2/3`) and every other record are ignored.
pub fn parse_obj(text: &str, name: &str) -> Result<Mesh> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let err = |line: usize, message: String| Error::Parse {
        path: name.to_string(),
        line,
        message,
    };

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut fields = line.split_whitespace();
        match fields.next() {
            Some("v") => {
                let coords: Vec<f64> = fields
                    .take(3)
                    .map(|f| f.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| err(line_no, format!("bad vertex: {e}")))?;
                if coords.len() != 3 {
                    return Err(err(line_no, "vertex needs three coordinates".into()));
                }
                vertices.push(Vec3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let mut corners = Vec::new();
                for field in fields {
                    let idx = field.split('/').next().unwrap_or("");
                    let k: i64 = idx
                        .parse()
                        .map_err(|e| err(line_no, format!("bad face index {idx:?}: {e}")))?;
                    let resolved = match k {
                        k if k > 0 => k - 1,
                        k if k < 0 => vertices.len() as i64 + k,
                        _ => return Err(err(line_no, "face index 0".into())),
                    };
                    if resolved < 0 || resolved as usize >= vertices.len() {
                        return Err(err(line_no, format!("face index {k} out of range")));
                    }
                    corners.push(resolved as usize);
                }
                if corners.len() < 3 {
                    return Err(err(line_no, "face needs at least three vertices".into()));
                }
                for j in 1..corners.len() - 1 {
                    triangles.push([corners[0], corners[j], corners[j + 1]]);
                }
            }
            _ => {}
        }
    }
    Mesh::new(vertices, triangles)
}

pub fn load_obj(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_obj(&text, &path.display().to_string())
}

pub fn write_obj(mesh: &Mesh) -> String {
    let mut out = String::new();
    for v in mesh.vertices() {
        let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
    }
    for t in mesh.triangles() {
        let _ = writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    out
}
