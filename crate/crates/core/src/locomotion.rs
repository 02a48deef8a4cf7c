//! Foot-paddle mapping, command capping, Mecanum wheel kinematics and
//! dead-reckoned base pose.

use thiserror::Error;

use crate::geometry::Twist;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LocomotionError {
    /// Carries the uniform scale that brings every wheel back inside its limit.
    #[error("wheel speed {max_speed:.3} rad/s exceeds limit; feasible scale {scale:.4}")]
    WheelSaturation {
        max_speed: f64,
        scale: f64,
        wheels: [f64; 4],
    },
    #[error("invalid base geometry: {0}")]
    InvalidBase(String),
    #[error("invalid twist limits: {0}")]
    InvalidLimits(String),
}

/// Foot paddle angles (rad).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RudderState {
    pub pitch: f64,
    pub roll: f64,
    pub yaw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RudderGains {
    /// (m/s) per rad
    pub k_lin: f64,
    /// (rad/s) per rad
    pub k_ang: f64,
    pub deadzone: f64,
}

impl Default for RudderGains {
    fn default() -> Self {
        Self {
            k_lin: 5.0,
            k_ang: 4.0,
            deadzone: 0.05,
        }
    }
}

fn dead(a: f64, deadzone: f64) -> f64 {
    a.signum() * (a.abs() - deadzone).max(0.0)
}

/// Pitch drives forward speed, roll lateral speed, yaw the turn rate.
pub fn rudder_to_twist(r: &RudderState, g: &RudderGains) -> Twist {
    Twist::planar(
        g.k_lin * dead(r.pitch, g.deadzone),
        g.k_lin * dead(r.roll, g.deadzone),
        g.k_ang * dead(r.yaw, g.deadzone),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwistLimits {
    pub v_cap: f64,
    pub v_capability: f64,
    pub w_cap: f64,
}

impl Default for TwistLimits {
    /// 1.5 m/s operator cap on a 2.5 m/s platform.
    fn default() -> Self {
        Self {
            v_cap: 1.5,
            v_capability: 2.5,
            w_cap: 1.5,
        }
    }
}

impl TwistLimits {
    pub fn validate(&self) -> Result<(), LocomotionError> {
        if !(self.v_cap > 0.0 && self.v_cap <= self.v_capability) {
            return Err(LocomotionError::InvalidLimits("need 0 < v_cap <= v_capability".into()));
        }
        if !(self.w_cap > 0.0) {
            return Err(LocomotionError::InvalidLimits("w_cap must be positive".into()));
        }
        Ok(())
    }
}

/// Rescales the planar speed onto `v_cap` (direction preserved) and clamps
/// the yaw rate independently.
pub fn clamp_twist(t: &Twist, lim: &TwistLimits) -> Twist {
    let mut out = *t;
    let speed = t.linear.x.hypot(t.linear.y);
    if speed > lim.v_cap {
        let s = lim.v_cap / speed;
        out.linear.x *= s;
        out.linear.y *= s;
    }
    out.angular.z = t.angular.z.clamp(-lim.w_cap, lim.w_cap);
    out
}

/// Four-wheel base with 45° rollers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MecanumBase {
    pub wheel_radius: f64,
    pub half_length: f64,
    pub half_width: f64,
    pub wheel_speed_limit: f64,
}

impl Default for MecanumBase {
    fn default() -> Self {
        Self {
            wheel_radius: 0.05,
            half_length: 0.25,
            half_width: 0.25,
            wheel_speed_limit: 60.0,
        }
    }
}

impl MecanumBase {
    pub fn validate(&self) -> Result<(), LocomotionError> {
        let all = [
            self.wheel_radius,
            self.half_length,
            self.half_width,
            self.wheel_speed_limit,
        ];
        if all.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(LocomotionError::InvalidBase("all dimensions must be positive".into()));
        }
        Ok(())
    }

    fn lever(&self) -> f64 {
        self.half_length + self.half_width
    }
}

/// Wheel order: front-left, front-right, rear-left, rear-right.
pub fn twist_to_wheels(base: &MecanumBase, t: &Twist) -> Result<[f64; 4], LocomotionError> {
    let (vx, vy, w) = (t.linear.x, t.linear.y, t.angular.z);
    let l = base.lever();
    let r = base.wheel_radius;
    let wheels = [
        (vx - vy - l * w) / r,
        (vx + vy + l * w) / r,
        (vx + vy - l * w) / r,
        (vx - vy + l * w) / r,
    ];
    let max_speed = wheels.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max_speed > base.wheel_speed_limit {
        return Err(LocomotionError::WheelSaturation {
            max_speed,
            scale: base.wheel_speed_limit / max_speed,
            wheels,
        });
    }
    Ok(wheels)
}

/// Least-squares body twist for a set of wheel speeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WheelFit {
    pub twist: Twist,
    /// Norm of the wheel-space residual (rad/s); zero for consistent inputs.
    pub residual: f64,
}

/// Pseudo-inverse of the 4×3 wheel map. Its columns are orthogonal, so the
/// normal equations are diagonal: `AᵀA = diag(4, 4, 4l²) / R²`.
pub fn wheels_to_twist(base: &MecanumBase, w: &[f64; 4]) -> WheelFit {
    let r = base.wheel_radius;
    let l = base.lever();
    let vx = r / 4.0 * (w[0] + w[1] + w[2] + w[3]);
    let vy = r / 4.0 * (-w[0] + w[1] + w[2] - w[3]);
    let wz = r / (4.0 * l) * (-w[0] + w[1] - w[2] + w[3]);
    let twist = Twist::planar(vx, vy, wz);
    let back = [
        (vx - vy - l * wz) / r,
        (vx + vy + l * wz) / r,
        (vx + vy - l * wz) / r,
        (vx - vy + l * wz) / r,
    ];
    let residual = back.iter().zip(w).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    WheelFit { twist, residual }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlanarPose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

/// Exact integration of a constant body twist over `dt` (SE(2) exponential).
pub fn integrate_odometry(pose: &PlanarPose, t: &Twist, dt: f64) -> PlanarPose {
    let (vx, vy, w) = (t.linear.x, t.linear.y, t.angular.z);
    let a = w * dt;
    // sin(a)/w and (1 − cos a)/w, with series expansions near w = 0
    let (s, c) = if a.abs() < 1e-6 {
        (dt * (1.0 - a * a / 6.0), dt * (a / 2.0 - a * a * a / 24.0))
    } else {
        (a.sin() / w, (1.0 - a.cos()) / w)
    };
    let dx = s * vx - c * vy;
    let dy = c * vx + s * vy;
    let (st, ct) = pose.theta.sin_cos();
    PlanarPose {
        x: pose.x + ct * dx - st * dy,
        y: pose.y + st * dx + ct * dy,
        theta: pose.theta + a,
    }
}
