//! Rigid-body primitives shared by every control and rendering path.
//!
//! Poses are stored as a translation plus a unit quaternion. Rotation errors
//! are expressed as axis-angle vectors obtained from the quaternion logarithm,
//! and translation errors live in the common reference frame rather than the
//! body frame.

use nalgebra::{Matrix4, Quaternion, Unit, UnitQuaternion, Vector3, Vector6};

pub type Vec3 = Vector3<f64>;

/// Rigid transform: rotation followed by translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose6D {
    pub translation: Vec3,
    pub rotation: UnitQuaternion<f64>,
}

impl Default for Pose6D {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose6D {
    pub fn identity() -> Self {
        Self {
            translation: Vec3::zeros(),
            rotation: UnitQuaternion::identity(),
        }
    }

    /// Builds a pose, renormalizing the rotation.
    pub fn new(translation: Vec3, rotation: UnitQuaternion<f64>) -> Self {
        Self {
            translation,
            rotation: renormalize(rotation),
        }
    }

    /// Builds a pose from raw `(w, x, y, z)` quaternion components.
    /// Returns `None` when the quaternion has (near) zero norm.
    pub fn from_parts(translation: Vec3, wxyz: [f64; 4]) -> Option<Self> {
        let q = Quaternion::new(wxyz[0], wxyz[1], wxyz[2], wxyz[3]);
        let norm = q.norm();
        if !norm.is_finite() || norm < 1e-12 {
            return None;
        }
        Some(Self {
            translation,
            rotation: UnitQuaternion::new_normalize(q),
        })
    }

    pub fn from_translation(x: f64, y: f64, z: f64) -> Self {
        Self {
            translation: Vec3::new(x, y, z),
            rotation: UnitQuaternion::identity(),
        }
    }

    pub fn from_rotation(rotation: UnitQuaternion<f64>) -> Self {
        Self::new(Vec3::zeros(), rotation)
    }

    /// Pure rotation of `angle` radians about `axis` (need not be unit length).
    pub fn from_axis_angle(axis: &Vec3, angle: f64) -> Self {
        let axis = Unit::new_normalize(*axis);
        Self::from_rotation(UnitQuaternion::from_axis_angle(&axis, angle))
    }

    pub fn rot_x(angle: f64) -> Self {
        Self::from_axis_angle(&Vec3::x(), angle)
    }

    pub fn rot_y(angle: f64) -> Self {
        Self::from_axis_angle(&Vec3::y(), angle)
    }

    pub fn rot_z(angle: f64) -> Self {
        Self::from_axis_angle(&Vec3::z(), angle)
    }

    /// `self` followed by `other`, i.e. the homogeneous product `self * other`.
    pub fn compose(&self, other: &Pose6D) -> Pose6D {
        Pose6D {
            translation: self.translation + self.rotation * other.translation,
            rotation: renormalize(self.rotation * other.rotation),
        }
    }

    pub fn inverse(&self) -> Pose6D {
        let rotation = renormalize(self.rotation.inverse());
        Pose6D {
            translation: -(rotation * self.translation),
            rotation,
        }
    }

    pub fn transform_point(&self, p: &Vec3) -> Vec3 {
        self.translation + self.rotation * p
    }

    pub fn rotate(&self, v: &Vec3) -> Vec3 {
        self.rotation * v
    }

    /// Applies a reference-frame increment `(dx, dθ)`: translation is added
    /// directly and the rotation is pre-multiplied by `exp(dθ)`.
    ///
    /// This is the inverse of [`pose_error`]:
    /// `current.perturb(&pose_error(target, current)) == target`.
    pub fn perturb(&self, delta: &Vector6<f64>) -> Pose6D {
        let dx = Vec3::new(delta[0], delta[1], delta[2]);
        let dtheta = Vec3::new(delta[3], delta[4], delta[5]);
        Pose6D {
            translation: self.translation + dx,
            rotation: renormalize(UnitQuaternion::from_scaled_axis(dtheta) * self.rotation),
        }
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = self.rotation.to_homogeneous();
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// Quaternion components in `(w, x, y, z)` order.
    pub fn wxyz(&self) -> [f64; 4] {
        let q = self.rotation.quaternion();
        [q.w, q.i, q.j, q.k]
    }

    pub fn is_finite(&self) -> bool {
        self.translation.iter().all(|v| v.is_finite()) && self.wxyz().iter().all(|v| v.is_finite())
    }
}

fn renormalize(q: UnitQuaternion<f64>) -> UnitQuaternion<f64> {
    UnitQuaternion::new_normalize(q.into_inner())
}

/// Axis-angle vector of a unit quaternion, taking the shortest rotation.
///
/// At exactly 180° the axis sign is ambiguous; the sign is chosen so that the
/// component with the largest magnitude is positive.
pub fn quat_log(q: &UnitQuaternion<f64>) -> Vec3 {
    let q = q.quaternion();
    let (mut w, mut v) = (q.w, q.imag());
    if w < 0.0 {
        w = -w;
        v = -v;
    }
    let s = v.norm();
    if s < 1e-15 {
        // first-order expansion of 2·atan2(s, w)/s around s = 0
        return v * (2.0 / w.max(1e-300));
    }
    if w == 0.0 {
        let imax = v.iamax();
        if v[imax] < 0.0 {
            v = -v;
        }
    }
    let angle = 2.0 * s.atan2(w);
    v * (angle / s)
}

/// Spatial velocity.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Twist {
    pub linear: Vec3,
    pub angular: Vec3,
}

impl Twist {
    pub fn new(linear: Vec3, angular: Vec3) -> Self {
        Self { linear, angular }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// Planar base twist `(vx, vy, ω)`.
    pub fn planar(vx: f64, vy: f64, wz: f64) -> Self {
        Self::new(Vec3::new(vx, vy, 0.0), Vec3::new(0.0, 0.0, wz))
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Self::new(v.fixed_rows::<3>(0).into(), v.fixed_rows::<3>(3).into())
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        let mut v = Vector6::zeros();
        v.fixed_rows_mut::<3>(0).copy_from(&self.linear);
        v.fixed_rows_mut::<3>(3).copy_from(&self.angular);
        v
    }

    pub fn is_finite(&self) -> bool {
        self.linear.iter().chain(self.angular.iter()).all(|v| v.is_finite())
    }
}

/// Spatial force.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Wrench {
    pub force: Vec3,
    pub torque: Vec3,
}

impl Wrench {
    pub fn new(force: Vec3, torque: Vec3) -> Self {
        Self { force, torque }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Self::new(v.fixed_rows::<3>(0).into(), v.fixed_rows::<3>(3).into())
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        let mut v = Vector6::zeros();
        v.fixed_rows_mut::<3>(0).copy_from(&self.force);
        v.fixed_rows_mut::<3>(3).copy_from(&self.torque);
        v
    }

    pub fn is_finite(&self) -> bool {
        self.force.iter().chain(self.torque.iter()).all(|v| v.is_finite())
    }
}

/// Six-vector error `(Δx, Δθ)` driving `current` toward `target`.
///
/// The translation part is `target − current` in the reference frame; the
/// rotation part is the axis-angle of `R_target · R_currentᵀ`. Zero iff the
/// poses coincide.
pub fn pose_error(target: &Pose6D, current: &Pose6D) -> Vector6<f64> {
    let dx = target.translation - current.translation;
    let rel = target.rotation * current.rotation.inverse();
    let dtheta = quat_log(&rel);
    Vector6::new(dx.x, dx.y, dx.z, dtheta.x, dtheta.y, dtheta.z)
}
