use nalgebra::{DVector, Vector6};
use thiserror::Error;

use crate::geometry::{pose_error, Pose6D, Twist, Wrench};
use crate::kinematics::{forward_kinematics, jacobian, limit_proximity, ChainModel, JointState, KinematicsError};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid impedance gains: {0}")]
pub struct GainsError(pub String);

/// Cartesian spring-damper gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpedanceGains {
    pub kp_lin: f64,
    pub kd_lin: f64,
    pub kp_ang: f64,
    pub kd_ang: f64,
}

impl Default for ImpedanceGains {
    /// Critically damped for a 1 kg effective mass.
    fn default() -> Self {
        Self {
            kp_lin: 400.0,
            kd_lin: 40.0,
            kp_ang: 30.0,
            kd_ang: 3.0,
        }
    }
}

impl ImpedanceGains {
    pub fn new(kp_lin: f64, kd_lin: f64, kp_ang: f64, kd_ang: f64) -> Result<Self, GainsError> {
        let g = Self {
            kp_lin,
            kd_lin,
            kp_ang,
            kd_ang,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), GainsError> {
        let all = [self.kp_lin, self.kd_lin, self.kp_ang, self.kd_ang];
        if all.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(GainsError("gains must be finite and non-negative".into()));
        }
        if (self.kp_lin > 0.0 && self.kd_lin <= 0.0) || (self.kp_ang > 0.0 && self.kd_ang <= 0.0) {
            return Err(GainsError("a positive stiffness needs a positive damping".into()));
        }
        Ok(())
    }

    /// Potential energy stored in the virtual spring for a pose error.
    pub fn spring_energy(&self, err: &Vector6<f64>) -> f64 {
        0.5 * self.kp_lin * err.fixed_rows::<3>(0).norm_squared()
            + 0.5 * self.kp_ang * err.fixed_rows::<3>(3).norm_squared()
    }
}

/// Output of one impedance control step.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpedanceCommand {
    /// Joint torques after clamping to the per-joint limits.
    pub torque: Vec<f64>,
    /// Cartesian wrench at the end effector before projection and clamping.
    pub wrench: Wrench,
    /// Pose error that produced the spring term.
    pub error: Vector6<f64>,
    pub saturated: bool,
}

/// `τ = Jᵀ F` with `F = K e + D (v_d − J q̇)`, clamped to each joint's `tau_max`.
pub fn impedance_step(
    model: &ChainModel,
    state: &JointState,
    target: &Pose6D,
    target_twist: &Twist,
    gains: &ImpedanceGains,
) -> Result<ImpedanceCommand, KinematicsError> {
    state.check(model)?;
    let current = forward_kinematics(model, &state.q)?;
    let jac = jacobian(model, &state.q)?;
    let error = pose_error(target, &current);
    let v = &jac * DVector::from_column_slice(&state.qd);
    let dv = target_twist.to_vector() - Vector6::from_column_slice(v.as_slice());
    let f = Vector6::new(
        gains.kp_lin * error[0] + gains.kd_lin * dv[0],
        gains.kp_lin * error[1] + gains.kd_lin * dv[1],
        gains.kp_lin * error[2] + gains.kd_lin * dv[2],
        gains.kp_ang * error[3] + gains.kd_ang * dv[3],
        gains.kp_ang * error[4] + gains.kd_ang * dv[4],
        gains.kp_ang * error[5] + gains.kd_ang * dv[5],
    );
    let raw = jac.transpose() * f;
    let mut saturated = false;
    let torque = raw
        .iter()
        .zip(model.joints())
        .map(|(t, j)| {
            let lim = j.limits.tau_max;
            if t.abs() > lim {
                saturated = true;
            }
            t.clamp(-lim, lim)
        })
        .collect();
    Ok(ImpedanceCommand {
        torque,
        wrench: Wrench::from_vector(&f),
        error,
        saturated,
    })
}

/// Linear repulsion `τ = −k_rep · penetration` pushing joints out of the limit margin.
pub fn limit_repulsion(model: &ChainModel, q: &[f64], margin: f64, k_rep: f64) -> Result<Vec<f64>, KinematicsError> {
    Ok(limit_proximity(model, q, margin)?
        .into_iter()
        .map(|p| -k_rep * p)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssistParams {
    pub gain_lin: f64,
    pub gain_ang: f64,
    pub deadband_force: f64,
    pub deadband_torque: f64,
}

/// Admittance mapping from the measured operator wrench to an assist twist.
/// Force and torque are handled independently; each is zero inside its
/// deadband and grows linearly with the excess magnitude outside it.
pub fn weightless_assist(measured: &Wrench, p: &AssistParams) -> Twist {
    fn band(v: &crate::geometry::Vec3, gain: f64, deadband: f64) -> crate::geometry::Vec3 {
        let n = v.norm();
        if n <= deadband || n == 0.0 {
            return crate::geometry::Vec3::zeros();
        }
        v * (gain * (n - deadband) / n)
    }
    Twist::new(
        band(&measured.force, p.gain_lin, p.deadband_force),
        band(&measured.torque, p.gain_ang, p.deadband_torque),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use crate::kinematics::tests::planar;
    use crate::kinematics::{JointLimits, RevoluteJoint};
    use nalgebra::UnitQuaternion;
    use proptest::prelude::*;

    #[test]
    fn gains_validation() {
        assert!(ImpedanceGains::new(400.0, 0.0, 0.0, 0.0).is_err());
        assert!(ImpedanceGains::new(-1.0, 1.0, 0.0, 0.0).is_err());
        assert!(ImpedanceGains::new(0.0, 0.0, 0.0, 0.0).is_ok());
        assert!(ImpedanceGains::default().validate().is_ok());
    }

    #[test]
    fn at_target_gives_zero_torque() {
        let m = planar(&[1.0, 0.7]);
        let s = JointState::at_rest(vec![0.3, -0.4]);
        let target = forward_kinematics(&m, &s.q).unwrap();
        let c = impedance_step(&m, &s, &target, &Twist::zero(), &ImpedanceGains::default()).unwrap();
        assert!(c.torque.iter().all(|t| t.abs() < 1e-12));
    }

    #[test]
    fn one_link_spring_torque() {
        let m = planar(&[1.0]);
        let gains = ImpedanceGains::new(400.0, 1e-9, 0.0, 0.0).unwrap();
        let target = Pose6D::from_translation(1.0, 0.1, 0.0);
        let c = impedance_step(&m, &JointState::at_rest(vec![0.0]), &target, &Twist::zero(), &gains).unwrap();
        assert!((c.wrench.force - Vec3::new(0.0, 40.0, 0.0)).norm() < 1e-9);
        // tau_max = 50 leaves the 40 N·m torque unclamped
        assert!((c.torque[0] - 40.0).abs() < 1e-9);
        assert!(!c.saturated);
    }

    #[test]
    fn torque_is_clamped_exactly() {
        let m = planar(&[1.0]);
        let gains = ImpedanceGains::new(4000.0, 1.0, 0.0, 0.0).unwrap();
        let target = Pose6D::from_translation(1.0, 0.1, 0.0);
        let c = impedance_step(&m, &JointState::at_rest(vec![0.0]), &target, &Twist::zero(), &gains).unwrap();
        assert_eq!(c.torque[0], 50.0);
        assert!(c.saturated);
        let target = Pose6D::from_translation(1.0, -0.1, 0.0);
        let c = impedance_step(&m, &JointState::at_rest(vec![0.0]), &target, &Twist::zero(), &gains).unwrap();
        assert_eq!(c.torque[0], -50.0);
    }

    #[test]
    fn repulsion_examples() {
        let m = planar(&[1.0]);
        assert_eq!(limit_repulsion(&m, &[0.0], 0.1, 50.0).unwrap(), vec![0.0]);
        assert!((limit_repulsion(&m, &[2.45], 0.1, 50.0).unwrap()[0] + 2.5).abs() < 1e-9);
        assert!((limit_repulsion(&m, &[-2.5], 0.1, 50.0).unwrap()[0] - 5.0).abs() < 1e-9);
    }

    #[test]
    fn repulsion_has_no_jumps() {
        let m = planar(&[1.0]);
        let k = 50.0;
        let dq = 5.0 / 1000.0;
        let mut prev = limit_repulsion(&m, &[-2.6], 0.1, k).unwrap()[0];
        for i in 1..=1040 {
            let q = -2.6 + dq * i as f64;
            let t = limit_repulsion(&m, &[q], 0.1, k).unwrap()[0];
            assert!((t - prev).abs() <= k * dq + 1e-9);
            prev = t;
        }
    }

    #[test]
    fn assist_examples() {
        let p = AssistParams {
            gain_lin: 0.02,
            gain_ang: 0.1,
            deadband_force: 2.0,
            deadband_torque: 0.5,
        };
        let t = weightless_assist(&Wrench::new(Vec3::new(1.5, 0.0, 0.0), Vec3::zeros()), &p);
        assert_eq!(t, Twist::zero());
        let t = weightless_assist(&Wrench::new(Vec3::new(10.0, 0.0, 0.0), Vec3::zeros()), &p);
        assert!((t.linear - Vec3::new(0.16, 0.0, 0.0)).norm() < 1e-12);
        let t = weightless_assist(&Wrench::new(Vec3::zeros(), Vec3::new(0.0, 0.0, 1.5)), &p);
        assert_eq!(t.linear, Vec3::zeros());
        assert!((t.angular.z - 0.1).abs() < 1e-12);
        // continuity across the deadband edge
        let mut prev = 0.0;
        for i in 0..=2000 {
            let f = 20.0 * i as f64 / 2000.0;
            let v = weightless_assist(&Wrench::new(Vec3::new(f, 0.0, 0.0), Vec3::zeros()), &p)
                .linear
                .x;
            assert!((v - prev).abs() <= 0.02 * 0.01 + 1e-12);
            prev = v;
        }
    }

    fn chain_from(base: Pose6D) -> ChainModel {
        let lim = JointLimits {
            q_min: -3.0,
            q_max: 3.0,
            qd_max: 2.0,
            tau_max: 1e6,
        };
        let joints = vec![
            RevoluteJoint {
                axis: Vec3::z_axis(),
                origin: base,
                limits: lim,
            },
            RevoluteJoint {
                axis: Vec3::y_axis(),
                origin: Pose6D::from_translation(0.4, 0.0, 0.1),
                limits: lim,
            },
            RevoluteJoint {
                axis: Vec3::x_axis(),
                origin: Pose6D::from_translation(0.3, 0.05, 0.0),
                limits: lim,
            },
        ];
        ChainModel::new(joints, Pose6D::from_translation(0.1, 0.0, 0.0)).unwrap()
    }

    proptest! {
        #[test]
        fn impedance_is_frame_equivariant(
            q in prop::collection::vec(-2.0f64..2.0, 3),
            qd in prop::collection::vec(-1.0f64..1.0, 3),
            axis in prop::array::uniform3(-1.0f64..1.0),
            angle in -3.0f64..3.0,
            off in prop::array::uniform3(-0.2f64..0.2),
        ) {
            let rot = Pose6D::from_axis_angle(&Vec3::new(axis[0], axis[1], axis[2] + 2.0), angle);
            let plain = chain_from(Pose6D::identity());
            let rotated = chain_from(rot);
            let s = JointState::new(q.clone(), qd);
            let target = forward_kinematics(&plain, &q).unwrap()
                .compose(&Pose6D::from_translation(off[0], off[1], off[2]))
                .compose(&Pose6D::from_rotation(UnitQuaternion::from_euler_angles(off[0], off[1], off[2])));
            let tw = Twist::new(Vec3::new(0.1, -0.2, 0.05), Vec3::new(0.0, 0.3, -0.1));
            let tw_rot = Twist::new(rot.rotate(&tw.linear), rot.rotate(&tw.angular));
            let gains = ImpedanceGains::default();
            let a = impedance_step(&plain, &s, &target, &tw, &gains).unwrap();
            let b = impedance_step(&rotated, &s, &rot.compose(&target), &tw_rot, &gains).unwrap();
            for (x, y) in a.torque.iter().zip(&b.torque) {
                prop_assert!((x - y).abs() < 1e-8);
            }
            prop_assert!((rot.rotate(&a.wrench.force) - b.wrench.force).norm() < 1e-8);
        }
    }
}
