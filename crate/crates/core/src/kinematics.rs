//! Serial revolute chains: forward kinematics, geometric Jacobian, limit
//! proximity and the operator-side predictive avatar model.

use nalgebra::{DMatrix, DVector, Matrix6xX, Unit, UnitQuaternion};
use thiserror::Error;

use crate::geometry::{pose_error, Pose6D, Vec3};

pub const MAX_JOINTS: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error("expected {expected} joint values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("joint value {index} is not finite")]
    NonFinite { index: usize },
    #[error("chain must have between 1 and {MAX_JOINTS} joints, got {0}")]
    JointCount(usize),
    #[error("joint {index}: {reason}")]
    InvalidJoint { index: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointLimits {
    pub q_min: f64,
    pub q_max: f64,
    pub qd_max: f64,
    pub tau_max: f64,
}

/// Revolute joint: a fixed parent-to-joint transform, then rotation about `axis`.
#[derive(Debug, Clone, PartialEq)]
pub struct RevoluteJoint {
    pub axis: Unit<Vec3>,
    pub origin: Pose6D,
    pub limits: JointLimits,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainModel {
    joints: Vec<RevoluteJoint>,
    tool: Pose6D,
}

impl ChainModel {
    /// `tool` maps the last joint frame to the end effector (the palm frame).
    pub fn new(joints: Vec<RevoluteJoint>, tool: Pose6D) -> Result<Self, KinematicsError> {
        if joints.is_empty() || joints.len() > MAX_JOINTS {
            return Err(KinematicsError::JointCount(joints.len()));
        }
        for (index, j) in joints.iter().enumerate() {
            let l = &j.limits;
            let bad = |reason: &str| KinematicsError::InvalidJoint {
                index,
                reason: reason.to_string(),
            };
            if !(l.q_min.is_finite() && l.q_max.is_finite() && l.q_min < l.q_max) {
                return Err(bad("q_min must be below q_max"));
            }
            if !(l.qd_max > 0.0 && l.qd_max.is_finite()) {
                return Err(bad("qd_max must be positive"));
            }
            if !(l.tau_max > 0.0 && l.tau_max.is_finite()) {
                return Err(bad("tau_max must be positive"));
            }
            if !j.origin.is_finite() || !j.axis.iter().all(|v| v.is_finite()) {
                return Err(bad("non-finite axis or origin"));
            }
        }
        Ok(Self { joints, tool })
    }

    pub fn joints(&self) -> &[RevoluteJoint] {
        &self.joints
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn tool(&self) -> &Pose6D {
        &self.tool
    }

    /// Sum of origin offsets plus tool offset; bounds end-effector speed per unit joint rate.
    pub fn reach(&self) -> f64 {
        self.joints.iter().map(|j| j.origin.translation.norm()).sum::<f64>() + self.tool.translation.norm()
    }

    fn check(&self, q: &[f64]) -> Result<(), KinematicsError> {
        if q.len() != self.dof() {
            return Err(KinematicsError::DimensionMismatch {
                expected: self.dof(),
                got: q.len(),
            });
        }
        if let Some(index) = q.iter().position(|v| !v.is_finite()) {
            return Err(KinematicsError::NonFinite { index });
        }
        Ok(())
    }

    /// Joint frames (after each origin, before the joint rotation) and the end-effector pose.
    fn frames(&self, q: &[f64]) -> (Vec<Pose6D>, Pose6D) {
        let mut frames = Vec::with_capacity(self.dof());
        let mut t = Pose6D::identity();
        for (j, &qi) in self.joints.iter().zip(q) {
            t = t.compose(&j.origin);
            frames.push(t);
            t = t.compose(&Pose6D::from_rotation(UnitQuaternion::from_axis_angle(&j.axis, qi)));
        }
        (frames, t.compose(&self.tool))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct JointState {
    pub q: Vec<f64>,
    pub qd: Vec<f64>,
}

impl JointState {
    pub fn new(q: Vec<f64>, qd: Vec<f64>) -> Self {
        Self { q, qd }
    }

    pub fn at_rest(q: Vec<f64>) -> Self {
        let qd = vec![0.0; q.len()];
        Self { q, qd }
    }

    pub fn check(&self, model: &ChainModel) -> Result<(), KinematicsError> {
        model.check(&self.q)?;
        model.check(&self.qd)
    }
}

pub fn forward_kinematics(model: &ChainModel, q: &[f64]) -> Result<Pose6D, KinematicsError> {
    model.check(q)?;
    Ok(model.frames(q).1)
}

/// Geometric Jacobian at the end effector, expressed in the chain base frame.
/// Rows 0..3 are linear velocity of the end-effector point, rows 3..6 angular velocity.
pub fn jacobian(model: &ChainModel, q: &[f64]) -> Result<Matrix6xX<f64>, KinematicsError> {
    model.check(q)?;
    let (frames, ee) = model.frames(q);
    let mut jac = Matrix6xX::zeros(model.dof());
    for (i, (frame, joint)) in frames.iter().zip(&model.joints).enumerate() {
        let z = frame.rotation * joint.axis.into_inner();
        let lin = z.cross(&(ee.translation - frame.translation));
        jac.fixed_view_mut::<3, 1>(0, i).copy_from(&lin);
        jac.fixed_view_mut::<3, 1>(3, i).copy_from(&z);
    }
    Ok(jac)
}

/// Signed depth of each joint into the `margin` band next to its limits:
/// positive toward the upper limit, negative toward the lower, zero outside
/// both bands. The profile is continuous and linear in `q`, and keeps growing
/// past the limit itself.
pub fn limit_proximity(model: &ChainModel, q: &[f64], margin: f64) -> Result<Vec<f64>, KinematicsError> {
    model.check(q)?;
    Ok(model
        .joints
        .iter()
        .zip(q)
        .map(|(j, &qi)| {
            let upper = (margin - (j.limits.q_max - qi)).max(0.0);
            let lower = (margin - (qi - j.limits.q_min)).max(0.0);
            upper - lower
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictorConfig {
    /// Beyond this age the last report is considered stale.
    pub staleness_horizon: f64,
    /// Damped-least-squares damping.
    pub damping: f64,
    /// Integration substep.
    pub step: f64,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        Self {
            staleness_horizon: 0.100,
            damping: 0.01,
            step: 0.001,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictedAvatarState {
    pub state: JointState,
    pub prediction_horizon: f64,
    pub stale: bool,
}

/// Damped-least-squares joint step `Jᵀ(JJᵀ + λ²I)⁻¹ e`, computed in joint space
/// as `(JᵀJ + λ²I)⁻¹ Jᵀ e`.
pub fn dls_step(jac: &Matrix6xX<f64>, err: &nalgebra::Vector6<f64>, damping: f64) -> DVector<f64> {
    let n = jac.ncols();
    let jt = jac.transpose();
    let a: DMatrix<f64> = &jt * jac + DMatrix::identity(n, n) * (damping * damping);
    let b: DVector<f64> = &jt * err;
    match a.clone().cholesky() {
        Some(ch) => ch.solve(&b),
        None => a.lu().solve(&b).unwrap_or_else(|| DVector::zeros(n)),
    }
}

/// Predicts where the avatar arm is `elapsed` seconds after `last_reported`,
/// assuming it pursues `last_command` at the fastest rate its joint velocity
/// limits allow. The prediction never extends past the staleness horizon;
/// beyond it `stale` is set.
pub fn predict_avatar(
    model: &ChainModel,
    last_reported: &JointState,
    last_command: &Pose6D,
    elapsed: f64,
    cfg: &PredictorConfig,
) -> Result<PredictedAvatarState, KinematicsError> {
    last_reported.check(model)?;
    let elapsed = elapsed.max(0.0);
    let stale = elapsed > cfg.staleness_horizon;
    let horizon = elapsed.min(cfg.staleness_horizon);
    let mut q = last_reported.q.clone();
    let mut qd = last_reported.qd.clone();
    let mut t = 0.0;
    while horizon - t > 1e-12 {
        let h = cfg.step.min(horizon - t);
        let (_, ee) = model.frames(&q);
        let err = pose_error(last_command, &ee);
        let jac = jacobian(model, &q)?;
        let dq = dls_step(&jac, &err, cfg.damping);
        // uniform scaling keeps the step direction
        let scale = model
            .joints
            .iter()
            .zip(dq.iter())
            .map(|(j, d)| {
                if d.abs() > 0.0 {
                    j.limits.qd_max * h / d.abs()
                } else {
                    f64::INFINITY
                }
            })
            .fold(1.0f64, f64::min);
        for i in 0..q.len() {
            let step = dq[i] * scale;
            q[i] += step;
            qd[i] = step / h;
        }
        t += h;
    }
    Ok(PredictedAvatarState {
        state: JointState::new(q, qd),
        prediction_horizon: horizon,
        stale,
    })
}
