//! Viewpoint compensation for spherical rendering.
//!
//! A frame captured at camera pose `T_C` is painted on a sphere of radius `r`
//! centred on the capture position. When the operator's eye sits at a
//! different pose `T_V`, each image sample is drawn along the direction from
//! the eye to its sphere point. Pure rotations are compensated exactly; a
//! translated eye sees an angular error that vanishes for scene points at
//! depth `r` and once the robot head catches up with the operator.

use nalgebra::Vector2;
use thiserror::Error;

use crate::exec::{map_collect, Execution};
use crate::geometry::{quat_log, Pose6D, Vec3};

pub const DEFAULT_SPHERE_RADIUS: f64 = 1.0;
/// Eye positions closer than this to a sphere point are degenerate.
pub const DEGENERATE_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TelevisError {
    #[error("pixel ({u}, {v}) lies outside the {width}x{height} image")]
    OutOfImage { u: f64, v: f64, width: u32, height: u32 },
    #[error("angle {theta} rad exceeds half field of view {half_fov} rad")]
    OutOfFov { theta: f64, half_fov: f64 },
    #[error("eye coincides with the rendered point")]
    Degenerate,
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error("depth must be positive")]
    InvalidDepth,
}

/// Equidistant fisheye camera rendered on a sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereCamera {
    /// Camera in world at exposure time.
    pub capture_pose: Pose6D,
    pub radius: f64,
    /// Horizontal field of view; may exceed π.
    pub fov_h: f64,
    /// Pixels per radian off the optical axis.
    pub focal: f64,
    pub principal: Vector2<f64>,
    pub width: u32,
    pub height: u32,
}

impl SphereCamera {
    pub fn new(
        capture_pose: Pose6D,
        radius: f64,
        fov_h: f64,
        focal: f64,
        principal: Vector2<f64>,
        width: u32,
        height: u32,
    ) -> Result<Self, TelevisError> {
        let cam = Self {
            capture_pose,
            radius,
            fov_h,
            focal,
            principal,
            width,
            height,
        };
        cam.validate()?;
        Ok(cam)
    }

    /// 3840×2160 sensor with a 200° lens, principal point at the centre.
    pub fn wide_4k(capture_pose: Pose6D) -> Self {
        let fov = 200f64.to_radians();
        Self {
            capture_pose,
            radius: DEFAULT_SPHERE_RADIUS,
            fov_h: fov,
            focal: 1920.0 / (fov / 2.0),
            principal: Vector2::new(1920.0, 1080.0),
            width: 3840,
            height: 2160,
        }
    }

    pub fn validate(&self) -> Result<(), TelevisError> {
        let bad = |m: &str| Err(TelevisError::InvalidCamera(m.to_string()));
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return bad("radius must be positive");
        }
        if !(self.fov_h > 0.0 && self.fov_h <= 2.0 * std::f64::consts::PI) {
            return bad("fov_h must lie in (0, 2π]");
        }
        if !(self.focal > 0.0 && self.focal.is_finite()) {
            return bad("focal must be positive");
        }
        if self.width == 0 || self.height == 0 {
            return bad("image must be non-empty");
        }
        Ok(())
    }

    pub fn with_capture_pose(&self, capture_pose: Pose6D) -> Self {
        Self {
            capture_pose,
            ..self.clone()
        }
    }
}

/// Inverse equidistant projection: `θ = ρ / f`, camera-frame unit ray.
pub fn pixel_to_ray(cam: &SphereCamera, pixel: Vector2<f64>) -> Result<Vec3, TelevisError> {
    let (u, v) = (pixel.x, pixel.y);
    if !(u >= 0.0 && v >= 0.0 && u <= cam.width as f64 && v <= cam.height as f64) {
        return Err(TelevisError::OutOfImage {
            u,
            v,
            width: cam.width,
            height: cam.height,
        });
    }
    let d = pixel - cam.principal;
    let rho = d.norm();
    let theta = rho / cam.focal;
    let half_fov = cam.fov_h / 2.0;
    if theta > half_fov {
        return Err(TelevisError::OutOfFov { theta, half_fov });
    }
    let phi = d.y.atan2(d.x);
    let s = theta.sin();
    Ok(Vec3::new(s * phi.cos(), s * phi.sin(), theta.cos()))
}

/// Forward equidistant projection of a camera-frame direction.
pub fn ray_to_pixel(cam: &SphereCamera, ray: &Vec3) -> Vector2<f64> {
    let theta = ray.xy().norm().atan2(ray.z);
    let phi = ray.y.atan2(ray.x);
    cam.principal + Vector2::new(phi.cos(), phi.sin()) * (cam.focal * theta)
}

/// Direction, in the eye frame, along which the eye at `eye_pose` renders the
/// sample that the camera saw along `ray`.
pub fn compensated_direction(cam: &SphereCamera, ray: &Vec3, eye_pose: &Pose6D) -> Result<Vec3, TelevisError> {
    let p = cam.capture_pose.translation + cam.capture_pose.rotate(ray) * cam.radius;
    eye_direction(&p, eye_pose)
}

fn eye_direction(point: &Vec3, eye_pose: &Pose6D) -> Result<Vec3, TelevisError> {
    let d = eye_pose.rotation.inverse() * (point - eye_pose.translation);
    let n = d.norm();
    if !(n > DEGENERATE_EPS) {
        return Err(TelevisError::Degenerate);
    }
    Ok(d / n)
}

pub fn angle_between(a: &Vec3, b: &Vec3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Angle between the rendered direction and the true direction to the scene
/// point that lies `true_depth` along `ray`.
pub fn angular_error(cam: &SphereCamera, ray: &Vec3, eye_pose: &Pose6D, true_depth: f64) -> Result<f64, TelevisError> {
    if !(true_depth > 0.0) {
        return Err(TelevisError::InvalidDepth);
    }
    let rendered = compensated_direction(cam, ray, eye_pose)?;
    let q = cam.capture_pose.translation + cam.capture_pose.rotate(ray) * true_depth;
    let exact = eye_direction(&q, eye_pose)?;
    Ok(angle_between(&rendered, &exact))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSample {
    pub u: f64,
    pub v: f64,
    /// `NaN` where the pixel is outside the field of view or degenerate.
    pub error: f64,
}

/// Angular error over a `cols × rows` pixel grid (cell centres).
pub fn angular_error_map(
    cam: &SphereCamera,
    eye_pose: &Pose6D,
    true_depth: f64,
    cols: usize,
    rows: usize,
    exec: Execution,
) -> Vec<ErrorSample> {
    let pixels: Vec<Vector2<f64>> = (0..rows)
        .flat_map(|r| {
            (0..cols).map(move |c| {
                Vector2::new(
                    (c as f64 + 0.5) * cam.width as f64 / cols as f64,
                    (r as f64 + 0.5) * cam.height as f64 / rows as f64,
                )
            })
        })
        .collect();
    map_collect(exec, &pixels, |px| ErrorSample {
        u: px.x,
        v: px.y,
        error: pixel_to_ray(cam, *px)
            .and_then(|ray| angular_error(cam, &ray, eye_pose, true_depth))
            .unwrap_or(f64::NAN),
    })
}

/// Rate-limited pose follower standing in for the 6-DoF head arm.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadFollower {
    pub current_pose: Pose6D,
    pub v_max: f64,
    pub w_max: f64,
}

/// End-effector speed limits of the head arm: 1 m/s and 180°/s.
pub const HEAD_V_MAX: f64 = 1.0;
pub const HEAD_W_MAX: f64 = std::f64::consts::PI;

impl HeadFollower {
    pub fn new(current_pose: Pose6D, v_max: f64, w_max: f64) -> Self {
        assert!(v_max > 0.0 && w_max > 0.0, "follower rates must be positive");
        Self {
            current_pose,
            v_max,
            w_max,
        }
    }

    pub fn at_target(&self, target: &Pose6D) -> bool {
        self.current_pose.translation == target.translation && self.current_pose.rotation == target.rotation
    }

    /// Moves toward `target` by at most `v_max·dt` and `w_max·dt`, snapping
    /// onto the target once it is within one step.
    pub fn step(&mut self, target: &Pose6D, dt: f64) -> Pose6D {
        // tolerance absorbs round-off from repeated fixed-size steps
        const SNAP: f64 = 1.0 + 1e-9;
        let cur = self.current_pose;
        let d = target.translation - cur.translation;
        let max_lin = self.v_max * dt;
        let translation = if d.norm() <= max_lin * SNAP {
            target.translation
        } else {
            cur.translation + d * (max_lin / d.norm())
        };
        let rel = quat_log(&(target.rotation * cur.rotation.inverse()));
        let max_ang = self.w_max * dt;
        let rotation = if rel.norm() <= max_ang * SNAP {
            target.rotation
        } else {
            nalgebra::UnitQuaternion::from_scaled_axis(rel * (max_ang / rel.norm())) * cur.rotation
        };
        self.current_pose = Pose6D::new(translation, rotation);
        if translation == target.translation && rotation == target.rotation {
            self.current_pose = *target;
        }
        self.current_pose
    }
}
