//! Poses, meshes, the pinhole camera and point sampling.

mod camera;
pub mod kdtree;
mod mesh;
pub mod obj;
mod points;
mod pose;
pub mod shapes;

pub use camera::{load_intrinsics, project, CameraIntrinsics};
pub use kdtree::KdTree;
pub use mesh::{mesh_diameter, Mesh};
pub use obj::{load_obj, parse_obj, write_obj};
pub use points::{
    sample_surface_points, sample_surface_points_with_faces, transform_points, PointSet,
};
pub use pose::{
    compose, geodesic_angle, invert, load_pose, nearest_rotation, orthonormality_residual,
    pose_from_json, rotation_exp, rotation_log, skew, Mat3, Pose, Vec3, LOAD_TOLERANCE,
};

#[cfg(test)]
pub(crate) use shapes as test_shapes;
