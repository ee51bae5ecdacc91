use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Pose, LOAD_TOLERANCE};

use super::meshes::MeshLibrary;

/// One labelled sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub mesh_id: String,
    pub gt_pose: Pose,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_path: Option<String>,
    /// `[x0, y0, x1, y1]` in pixels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<[i64; 4]>,
}

impl DatasetEntry {
    pub fn new(mesh_id: impl Into<String>, gt_pose: Pose) -> Self {
        DatasetEntry {
            mesh_id: mesh_id.into(),
            gt_pose,
            image_path: None,
            bbox: None,
        }
    }

    /// Checks the pose, the mesh id and the bbox. Relative image paths are
    /// resolved against `base`.
    pub fn validate(&self, meshes: &MeshLibrary, base: Option<&Path>) -> Result<()> {
        Pose::new(self.gt_pose.rotation, self.gt_pose.translation, LOAD_TOLERANCE)?;
        meshes.get(&self.mesh_id)?;
        if let Some([x0, y0, x1, y1]) = self.bbox {
            if x0 < 0 || y0 < 0 || x1 <= x0 || y1 <= y0 {
                return Err(Error::InvalidArgument(format!("bad bbox [{x0}, {y0}, {x1}, {y1}]")));
            }
            if let Some(img) = &self.image_path {
                let path = base.map_or_else(|| Path::new(img).to_path_buf(), |b| b.join(img));
                let (w, h) = image::image_dimensions(&path)?;
                if x1 > w as i64 || y1 > h as i64 {
                    return Err(Error::InvalidArgument(format!(
                        "bbox [{x0}, {y0}, {x1}, {y1}] exceeds {w}x{h} image {}",
                        path.display()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Parses a manifest (JSON array of entries) and validates every entry;
/// errors carry the entry index.
pub fn parse_dataset(text: &str, meshes: &MeshLibrary, base: Option<&Path>) -> Result<Vec<DatasetEntry>> {
    let raw: Vec<serde_json::Value> = serde_json::from_str(text)?;
    raw.into_iter()
        .enumerate()
        .map(|(i, v)| {
            let entry: DatasetEntry = serde_json::from_value(v).map_err(|e| Error::from(e).at_entry(i))?;
            entry.validate(meshes, base).map_err(|e| e.at_entry(i))?;
            Ok(entry)
        })
        .collect()
}

pub fn load_dataset(path: impl AsRef<Path>, meshes: &MeshLibrary) -> Result<Vec<DatasetEntry>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text, meshes, path.parent())
}

pub fn save_dataset(path: impl AsRef<Path>, entries: &[DatasetEntry]) -> Result<()> {
    write_json(path.as_ref(), entries)
}

/// Predictions file: JSON array of poses, one per manifest entry.
pub fn load_predictions(path: impl AsRef<Path>) -> Result<Vec<Pose>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let raw: Vec<serde_json::Value> = serde_json::from_str(&text)?;
    raw.into_iter()
        .enumerate()
        .map(|(i, v)| {
            let p: Pose = serde_json::from_value(v).map_err(|e| Error::from(e).at_entry(i))?;
            Pose::new(p.rotation, p.translation, LOAD_TOLERANCE).map_err(|e| e.at_entry(i))
        })
        .collect()
}

pub fn save_predictions(path: impl AsRef<Path>, poses: &[Pose]) -> Result<()> {
    write_json(path.as_ref(), poses)
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// `per_object` labelled poses for each id: uniform rotations, object in
/// front of the camera at 0.4 to 0.8 m.
pub fn synthetic_dataset(ids: &[&str], per_object: usize, seed: u64) -> Vec<DatasetEntry> {
    use rand::{Rng, SeedableRng};
    use rand_distr::{Distribution, UnitSphere};

    use crate::geometry::Vec3;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(ids.len() * per_object);
    for id in ids {
        for _ in 0..per_object {
            let axis: [f64; 3] = UnitSphere.sample(&mut rng);
            // uniform on SO(3): angle density (1 - cos t) / π
            let angle = loop {
                let t = rng.random_range(0.0..std::f64::consts::PI);
                if rng.random::<f64>() * 2.0 < 1.0 - t.cos() {
                    break t;
                }
            };
            let translation = Vec3::new(
                rng.random_range(-0.05..0.05),
                rng.random_range(-0.05..0.05),
                rng.random_range(0.4..0.8),
            );
            out.push(DatasetEntry::new(*id, Pose::from_axis_angle(Vec3::from(axis) * angle, translation)));
        }
    }
    out
}
