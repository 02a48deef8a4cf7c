use std::path::PathBuf;

use thiserror::Error;

use crate::geometry::{Pose6D, Vec3};
use crate::haptics::{HandMapping, ImpedanceGains};
use crate::kinematics::{forward_kinematics, ChainModel, JointLimits, PredictorConfig, RevoluteJoint};
use crate::locomotion::{MecanumBase, RudderGains, TwistLimits};
use crate::netlink::ChannelModel;
use crate::televis::{SphereCamera, HEAD_V_MAX, HEAD_W_MAX};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{field}: {message}")]
pub struct ConfigInvalid {
    /// Dotted path of the offending field, e.g. `session.sensor_rate`.
    pub field: String,
    pub message: String,
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigInvalid {
    ConfigInvalid {
        field: field.to_string(),
        message: message.into(),
    }
}

/// Timing and video parameters of a session.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionParams {
    pub operator_rate: f64,
    pub sensor_rate: f64,
    /// Rate of joint-state reports from avatar to operator.
    pub arm_state_rate: f64,
    pub video_rate: f64,
    pub video_streams: u8,
    pub frame_bytes: usize,
    pub duration: f64,
    pub seed: u64,
    pub exposure: f64,
    pub encode_latency: f64,
    pub decode_latency: f64,
    /// Missed command intervals before the avatar holds.
    pub comm_loss_intervals: u32,
    pub fade_duration: f64,
    /// Depth of the scene point used for the forward-ray televis metric.
    pub scene_depth: f64,
    /// Window of the downlink bandwidth meter.
    pub bandwidth_window: f64,
    pub estop_at: Option<f64>,
    pub trace_path: Option<PathBuf>,
}

impl Default for SessionParams {
    fn default() -> Self {
        Self {
            operator_rate: 1000.0,
            sensor_rate: 500.0,
            arm_state_rate: 100.0,
            video_rate: 45.0,
            video_streams: 2,
            frame_bytes: 270_000,
            duration: 10.0,
            seed: 1,
            exposure: 0.008,
            encode_latency: 0.010,
            decode_latency: 0.012,
            comm_loss_intervals: 3,
            fade_duration: 1.0,
            scene_depth: 2.0,
            bandwidth_window: 1.0,
            estop_at: None,
            trace_path: None,
        }
    }
}

/// One arm: chain, home configuration and the rigid-body terms of its
/// simulated dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmSetup {
    pub model: ChainModel,
    pub home: Vec<f64>,
    pub inertia: Vec<f64>,
    pub joint_damping: f64,
}

impl ArmSetup {
    pub fn home_pose(&self) -> Pose6D {
        forward_kinematics(&self.model, &self.home).expect("validated arm")
    }
}

/// Seven-joint arm with a spherical shoulder, elbow and spherical wrist.
pub fn synthetic_arm() -> ArmSetup {
    let lim = |tau: f64| JointLimits {
        q_min: -2.8,
        q_max: 2.8,
        qd_max: 2.5,
        tau_max: tau,
    };
    let joint = |axis: Vec3, origin: Vec3, tau: f64| RevoluteJoint {
        axis: nalgebra::Unit::new_normalize(axis),
        origin: Pose6D::from_translation(origin.x, origin.y, origin.z),
        limits: lim(tau),
    };
    let (x, y, z, o) = (Vec3::x(), Vec3::y(), Vec3::z(), Vec3::zeros());
    let joints = vec![
        joint(z, o, 87.0),
        joint(y, o, 87.0),
        joint(x, o, 87.0),
        joint(y, Vec3::new(0.4, 0.0, 0.0), 87.0),
        joint(x, Vec3::new(0.4, 0.0, 0.0), 12.0),
        joint(y, o, 12.0),
        joint(z, o, 12.0),
    ];
    ArmSetup {
        model: ChainModel::new(joints, Pose6D::from_translation(0.1, 0.0, 0.0)).expect("synthetic arm"),
        home: vec![0.0, 1.1, 0.0, -2.2, 0.0, 1.1, 0.0],
        inertia: vec![0.6, 0.6, 0.3, 0.3, 0.05, 0.05, 0.05],
        joint_damping: 0.1,
    }
}

/// Point mass on a spring standing in for the operator's hand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorHand {
    pub mass: f64,
    pub stiffness: f64,
    pub damping: f64,
}

impl Default for OperatorHand {
    fn default() -> Self {
        Self {
            mass: 1.0,
            stiffness: 200.0,
            damping: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Repulsion {
    pub margin: f64,
    pub k_rep: f64,
}

impl Default for Repulsion {
    fn default() -> Self {
        Self {
            margin: 0.2,
            k_rep: 40.0,
        }
    }
}

/// Hand mapping plus the motor-current model of the avatar hand.
#[derive(Debug, Clone, PartialEq)]
pub struct HandSetup {
    pub mapping: HandMapping,
    /// Current per radian of commanded closure beyond the contact angle (A/rad).
    pub current_gain: f64,
    pub contact_angle: f64,
}

impl HandSetup {
    pub fn default_left() -> Self {
        Self {
            mapping: HandMapping::default_sih(),
            current_gain: 4.0,
            contact_angle: 0.6,
        }
    }

    pub fn default_right() -> Self {
        Self {
            mapping: HandMapping::default_svh(),
            current_gain: 4.0,
            contact_angle: 0.6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadSetup {
    pub home: Pose6D,
    pub v_max: f64,
    pub w_max: f64,
}

impl Default for HeadSetup {
    fn default() -> Self {
        Self {
            home: Pose6D::from_translation(0.0, 0.0, 0.6),
            v_max: HEAD_V_MAX,
            w_max: HEAD_W_MAX,
        }
    }
}

/// Fully validated session configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig {
    pub params: SessionParams,
    /// Applied to both directions; each direction draws from its own seed.
    pub channel: ChannelModel,
    /// Left then right.
    pub arms: [ArmSetup; 2],
    pub gains: ImpedanceGains,
    pub repulsion: Repulsion,
    pub predictor: PredictorConfig,
    pub operator_hand: OperatorHand,
    pub feedback_cutoff_hz: f64,
    /// Left then right.
    pub hands: [HandSetup; 2],
    pub base: MecanumBase,
    pub rudder: RudderGains,
    pub limits: TwistLimits,
    pub camera: SphereCamera,
    pub head: HeadSetup,
}

impl Default for SessionConfig {
    fn default() -> Self {
        let params = SessionParams::default();
        Self {
            channel: ChannelModel {
                rng_seed: params.seed,
                ..Default::default()
            },
            params,
            arms: [synthetic_arm(), synthetic_arm()],
            gains: ImpedanceGains::default(),
            repulsion: Repulsion::default(),
            predictor: PredictorConfig::default(),
            operator_hand: OperatorHand::default(),
            feedback_cutoff_hz: 15.0,
            hands: [HandSetup::default_left(), HandSetup::default_right()],
            base: MecanumBase::default(),
            rudder: RudderGains::default(),
            limits: TwistLimits::default(),
            camera: SphereCamera::wide_4k(Pose6D::identity()),
            head: HeadSetup::default(),
        }
    }
}

fn positive(field: &str, v: f64) -> Result<(), ConfigInvalid> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be positive and finite, got {v}")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<(), ConfigInvalid> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be non-negative and finite, got {v}")))
    }
}

impl SessionConfig {
    /// Number of operator ticks per sensor sample.
    pub fn sensor_decimation(&self) -> u64 {
        (self.params.operator_rate / self.params.sensor_rate).round() as u64
    }

    pub fn arm_state_decimation(&self) -> u64 {
        (self.params.operator_rate / self.params.arm_state_rate).round() as u64
    }

    pub fn validate(&self) -> Result<(), ConfigInvalid> {
        let p = &self.params;
        positive("session.operator_rate", p.operator_rate)?;
        positive("session.sensor_rate", p.sensor_rate)?;
        positive("session.arm_state_rate", p.arm_state_rate)?;
        positive("session.video_rate", p.video_rate)?;
        if p.operator_rate < p.sensor_rate {
            return Err(invalid("session.sensor_rate", "must not exceed operator_rate"));
        }
        for (field, rate) in [
            ("session.sensor_rate", p.sensor_rate),
            ("session.arm_state_rate", p.arm_state_rate),
        ] {
            let ratio = p.operator_rate / rate;
            if (ratio - ratio.round()).abs() > 1e-9 || ratio.round() < 1.0 {
                return Err(invalid(field, "must divide operator_rate"));
            }
        }
        positive("session.duration", p.duration)?;
        for (field, v) in [
            ("session.exposure", p.exposure),
            ("session.encode_latency", p.encode_latency),
            ("session.decode_latency", p.decode_latency),
        ] {
            non_negative(field, v)?;
        }
        if p.comm_loss_intervals == 0 {
            return Err(invalid("session.comm_loss_intervals", "must be at least 1"));
        }
        positive("session.fade_duration", p.fade_duration)?;
        positive("session.scene_depth", p.scene_depth)?;
        positive("session.bandwidth_window", p.bandwidth_window)?;
        if let Some(t) = p.estop_at {
            non_negative("session.estop_at", t)?;
        }
        self.channel.validate().map_err(|e| invalid("channel", e.0))?;
        for (name, arm) in ["arms.left", "arms.right"].iter().zip(&self.arms) {
            let n = arm.model.dof();
            if arm.home.len() != n {
                return Err(invalid(
                    &format!("{name}.home"),
                    format!("expected {n} values, got {}", arm.home.len()),
                ));
            }
            if arm.inertia.len() != n {
                return Err(invalid(
                    &format!("{name}.inertia"),
                    format!("expected {n} values, got {}", arm.inertia.len()),
                ));
            }
            for (q, j) in arm.home.iter().zip(arm.model.joints()) {
                if !(*q >= j.limits.q_min && *q <= j.limits.q_max) {
                    return Err(invalid(&format!("{name}.home"), format!("{q} outside joint limits")));
                }
            }
            for i in &arm.inertia {
                positive(&format!("{name}.inertia"), *i)?;
            }
            non_negative(&format!("{name}.joint_damping"), arm.joint_damping)?;
        }
        self.gains.validate().map_err(|e| invalid("gains", e.0))?;
        non_negative("repulsion.margin", self.repulsion.margin)?;
        non_negative("repulsion.k_rep", self.repulsion.k_rep)?;
        non_negative("predictor.staleness_horizon", self.predictor.staleness_horizon)?;
        non_negative("predictor.damping", self.predictor.damping)?;
        positive("predictor.step", self.predictor.step)?;
        positive("operator_hand.mass", self.operator_hand.mass)?;
        non_negative("operator_hand.stiffness", self.operator_hand.stiffness)?;
        non_negative("operator_hand.damping", self.operator_hand.damping)?;
        positive("feedback.cutoff_hz", self.feedback_cutoff_hz)?;
        if self.feedback_cutoff_hz >= p.sensor_rate / 2.0 {
            return Err(invalid("feedback.cutoff_hz", "must be below half the sensor rate"));
        }
        for (name, h) in ["hands.left", "hands.right"].iter().zip(&self.hands) {
            non_negative(&format!("{name}.current_gain"), h.current_gain)?;
            non_negative(&format!("{name}.contact_angle"), h.contact_angle)?;
        }
        for (field, v) in [
            ("base.wheel_radius", self.base.wheel_radius),
            ("base.half_length", self.base.half_length),
            ("base.half_width", self.base.half_width),
            ("base.wheel_speed_limit", self.base.wheel_speed_limit),
        ] {
            positive(field, v)?;
        }
        self.base.validate().map_err(|e| invalid("base", e.to_string()))?;
        non_negative("rudder.k_lin", self.rudder.k_lin)?;
        non_negative("rudder.k_ang", self.rudder.k_ang)?;
        non_negative("rudder.deadzone", self.rudder.deadzone)?;
        positive("limits.v_cap", self.limits.v_cap)?;
        positive("limits.w_cap", self.limits.w_cap)?;
        if self.limits.v_cap > self.limits.v_capability {
            return Err(invalid("limits.v_cap", "must not exceed v_capability"));
        }
        self.limits.validate().map_err(|e| invalid("limits", e.to_string()))?;
        self.camera.validate().map_err(|e| invalid("camera", e.to_string()))?;
        positive("head.v_max", self.head.v_max)?;
        positive("head.w_max", self.head.w_max)?;
        if !self.head.home.is_finite() {
            return Err(invalid("head.home", "must be finite"));
        }
        Ok(())
    }
}
