use crate::error::{Error, Result};
use crate::geometry::{geodesic_angle, orthonormality_residual, rotation_exp, Mat3, Pose, Vec3};

const GROUP_TOLERANCE: f64 = 1e-9;

// Inputs already this close to their representative are returned untouched,
// which keeps canonicalize bitwise idempotent.
const SNAP_ANGLE: f64 = 1e-12;

/// Rotational symmetry of an object, expressed in the object frame: poses `R`
/// and `R g` look identical for every symmetry rotation `g`.
#[derive(Clone, Debug, PartialEq)]
pub enum SymmetrySpec {
    None,
    /// Continuous symmetry about a unit axis.
    Cylindrical { axis: Vec3 },
    /// Finite rotation group; contains the identity and is closed.
    Discrete { rotations: Vec<Mat3> },
    Spherical,
}

impl SymmetrySpec {
    pub fn cylindrical(axis: Vec3) -> Result<Self> {
        let spec = SymmetrySpec::Cylindrical { axis };
        spec.validate()?;
        Ok(spec)
    }

    /// Validates a finite group, moving the identity to the front and making
    /// it exact.
    pub fn discrete(rotations: Vec<Mat3>) -> Result<Self> {
        let mut rotations = rotations;
        let id = rotations
            .iter()
            .position(|g| max_abs(&(g - Mat3::identity())) < GROUP_TOLERANCE)
            .ok_or_else(|| Error::InvalidSymmetry("group lacks the identity".into()))?;
        rotations.remove(id);
        rotations.insert(0, Mat3::identity());
        let spec = SymmetrySpec::Discrete { rotations };
        spec.validate()?;
        Ok(spec)
    }

    /// `n`-fold rotations about `axis`.
    pub fn cyclic(axis: Vec3, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSymmetry("cyclic order must be positive".into()));
        }
        let axis = axis.normalize();
        Self::discrete(
            (0..n)
                .map(|k| rotation_exp(&(axis * (std::f64::consts::TAU * k as f64 / n as f64))))
                .collect(),
        )
    }

    /// `n`-fold rotations about `axis` plus half-turns about `n` axes
    /// perpendicular to it, starting at `flip_axis`.
    pub fn dihedral(axis: Vec3, flip_axis: Vec3, n: usize) -> Result<Self> {
        let axis = axis.normalize();
        let flip = (flip_axis - axis * flip_axis.dot(&axis)).normalize();
        let Self::Discrete { rotations: cyclic } = Self::cyclic(axis, n)? else {
            unreachable!()
        };
        let half_turn = rotation_exp(&(flip * std::f64::consts::PI));
        let mut all = cyclic.clone();
        all.extend(cyclic.iter().map(|g| g * half_turn));
        Self::discrete(all)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SymmetrySpec::None | SymmetrySpec::Spherical => Ok(()),
            SymmetrySpec::Cylindrical { axis } => {
                if (axis.norm() - 1.0).abs() > GROUP_TOLERANCE {
                    return Err(Error::InvalidSymmetry(format!(
                        "cylindrical axis must be unit length (norm {})",
                        axis.norm()
                    )));
                }
                Ok(())
            }
            SymmetrySpec::Discrete { rotations } => {
                if rotations.is_empty() {
                    return Err(Error::InvalidSymmetry("empty rotation group".into()));
                }
                for g in rotations {
                    if orthonormality_residual(g) > GROUP_TOLERANCE {
                        return Err(Error::InvalidSymmetry("group element is not a rotation".into()));
                    }
                }
                if !rotations
                    .iter()
                    .any(|g| max_abs(&(g - Mat3::identity())) < GROUP_TOLERANCE)
                {
                    return Err(Error::InvalidSymmetry("group lacks the identity".into()));
                }
                for a in rotations {
                    for b in rotations {
                        let ab = a * b;
                        if !rotations.iter().any(|g| max_abs(&(g - ab)) < GROUP_TOLERANCE) {
                            return Err(Error::InvalidSymmetry(
                                "rotation list is not closed under composition".into(),
                            ));
                        }
                    }
                }
                Ok(())
            }
        }
    }
}

fn max_abs(m: &Mat3) -> f64 {
    m.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

/// Representative of the symmetry-equivalence class of `pose`; translation is
/// never modified.
///
/// * `None`: unchanged.
/// * `Spherical`: identity rotation.
/// * `Cylindrical`: the class member mapping a fixed perpendicular of the axis
///   (object `+y` projected, `+x` near the axis) onto camera `+y` projected
///   orthogonally to the image of the axis.
/// * `Discrete`: the class member closest (geodesically) to the identity,
///   lowest group index on ties.
pub fn canonicalize(sym: &SymmetrySpec, pose: &Pose) -> Result<Pose> {
    sym.validate()?;
    let r = pose.rotation;
    let canonical = match sym {
        SymmetrySpec::None => return Ok(*pose),
        SymmetrySpec::Spherical => Mat3::identity(),
        SymmetrySpec::Cylindrical { axis } => {
            let w = (r * axis).normalize();
            let object_frame = frame_from_axis(axis);
            let camera_frame = frame_from_axis(&w);
            camera_frame * object_frame.transpose()
        }
        SymmetrySpec::Discrete { rotations } => {
            let mut best = (f64::INFINITY, r);
            for g in rotations {
                let candidate = r * g;
                let angle = geodesic_angle(&Mat3::identity(), &candidate);
                if angle < best.0 {
                    best = (angle, candidate);
                }
            }
            best.1
        }
    };
    if geodesic_angle(&r, &canonical) < SNAP_ANGLE {
        return Ok(*pose);
    }
    Ok(Pose::from_parts(canonical, pose.translation))
}

/// Smallest geodesic angle between `a` and any rotation equivalent to `b`.
pub fn symmetric_distance(sym: &SymmetrySpec, a: &Mat3, b: &Mat3) -> f64 {
    match sym {
        SymmetrySpec::None => geodesic_angle(a, b),
        SymmetrySpec::Spherical => 0.0,
        SymmetrySpec::Discrete { rotations } => rotations
            .iter()
            .map(|g| geodesic_angle(a, &(b * g)))
            .fold(f64::INFINITY, f64::min),
        SymmetrySpec::Cylindrical { axis } => {
            // trace(M Rot(axis, θ)) = p + q cos θ + s sin θ, maximized in closed form
            let m = a.transpose() * b;
            let p = axis.dot(&(m * axis));
            let q = m.trace() - p;
            let s = (m * crate::geometry::skew(axis)).trace();
            let best_trace = p + (q * q + s * s).sqrt();
            ((best_trace - 1.0) * 0.5).clamp(-1.0, 1.0).acos()
        }
    }
}

// Columns: axis, a fixed perpendicular, and their cross product.
fn frame_from_axis(axis: &Vec3) -> Mat3 {
    let a = axis.normalize();
    let reference = if (a - Vec3::y()).norm() < 1e-6 || (a + Vec3::y()).norm() < 1e-6 {
        Vec3::x()
    } else {
        Vec3::y()
    };
    let b = (reference - a * reference.dot(&a)).normalize();
    let c = a.cross(&b);
    Mat3::from_columns(&[a, b, c])
}
