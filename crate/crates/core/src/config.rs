//! TOML configuration files.
//!
//! Every section is optional; missing sections and keys take the built-in
//! defaults of [`SessionConfig::default`]. Errors carry the line of the
//! offending key.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, Unit, Vector2};
use serde::Deserialize;
use thiserror::Error;

use crate::geometry::{Pose6D, Vec3};
use crate::haptics::{HandMapping, HandVariant, ImpedanceGains, OPERATOR_FINGER_JOINTS};
use crate::kinematics::{ChainModel, JointLimits, KinematicsError, PredictorConfig, RevoluteJoint};
use crate::locomotion::{MecanumBase, RudderGains, TwistLimits};
use crate::netlink::{Blackout, ChannelModel};
use crate::session::{
    synthetic_arm, ArmSetup, HandSetup, HeadSetup, OperatorHand, Repulsion, SessionConfig, SessionParams,
};
use crate::televis::SphereCamera;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{origin}:{line}: {message}")]
    Invalid {
        origin: String,
        line: usize,
        message: String,
    },
}

impl ConfigError {
    pub fn line(&self) -> Option<usize> {
        match self {
            Self::Invalid { line, .. } => Some(*line),
            Self::Io { .. } => None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    version: u32,
    #[serde(default)]
    session: RawSession,
    #[serde(default)]
    channel: RawChannel,
    #[serde(default)]
    arms: RawArms,
    #[serde(default)]
    gains: RawGains,
    #[serde(default)]
    repulsion: RawRepulsion,
    #[serde(default)]
    predictor: RawPredictor,
    #[serde(default)]
    operator_hand: RawOperatorHand,
    #[serde(default)]
    feedback: RawFeedback,
    #[serde(default)]
    hands: RawHands,
    #[serde(default)]
    base: RawBase,
    #[serde(default)]
    rudder: RawRudder,
    #[serde(default)]
    limits: RawLimits,
    #[serde(default)]
    camera: RawCamera,
    #[serde(default)]
    head: RawHead,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSession {
    operator_rate: Option<f64>,
    sensor_rate: Option<f64>,
    arm_state_rate: Option<f64>,
    video_rate: Option<f64>,
    video_streams: Option<u8>,
    frame_bytes: Option<usize>,
    duration: Option<f64>,
    seed: Option<u64>,
    exposure: Option<f64>,
    encode_latency: Option<f64>,
    decode_latency: Option<f64>,
    comm_loss_intervals: Option<u32>,
    fade_duration: Option<f64>,
    scene_depth: Option<f64>,
    bandwidth_window: Option<f64>,
    estop_at: Option<f64>,
    trace: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChannel {
    base_latency: Option<f64>,
    jitter_std: Option<f64>,
    loss_prob: Option<f64>,
    bandwidth_limit: Option<f64>,
    #[serde(default)]
    blackouts: Vec<RawBlackout>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBlackout {
    start: f64,
    end: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawArms {
    #[serde(default)]
    left: RawArm,
    #[serde(default)]
    right: RawArm,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawArm {
    joints: Option<Vec<RawJoint>>,
    tool: Option<RawPose>,
    home: Option<Vec<f64>>,
    inertia: Option<Vec<f64>>,
    joint_damping: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawJoint {
    axis: [f64; 3],
    #[serde(default)]
    origin: [f64; 3],
    /// Quaternion `w, x, y, z` of the joint frame.
    rotation: Option<[f64; 4]>,
    q_min: f64,
    q_max: f64,
    qd_max: f64,
    tau_max: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPose {
    #[serde(default)]
    translation: [f64; 3],
    rotation: Option<[f64; 4]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGains {
    kp_lin: Option<f64>,
    kd_lin: Option<f64>,
    kp_ang: Option<f64>,
    kd_ang: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRepulsion {
    margin: Option<f64>,
    k_rep: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPredictor {
    staleness_horizon: Option<f64>,
    damping: Option<f64>,
    step: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOperatorHand {
    mass: Option<f64>,
    stiffness: Option<f64>,
    damping: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFeedback {
    cutoff_hz: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHands {
    left: Option<RawHand>,
    right: Option<RawHand>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHand {
    variant: String,
    /// One row per actuated joint, 20 columns each.
    retarget: Option<Vec<Vec<f64>>>,
    out_min: Option<Vec<f64>>,
    out_max: Option<Vec<f64>>,
    brake_threshold: Option<Vec<f64>>,
    finger_of_output: Option<Vec<usize>>,
    current_gain: Option<f64>,
    contact_angle: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBase {
    wheel_radius: Option<f64>,
    half_length: Option<f64>,
    half_width: Option<f64>,
    wheel_speed_limit: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRudder {
    k_lin: Option<f64>,
    k_ang: Option<f64>,
    deadzone: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLimits {
    v_cap: Option<f64>,
    v_capability: Option<f64>,
    w_cap: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCamera {
    radius: Option<f64>,
    fov_deg: Option<f64>,
    width: Option<u32>,
    height: Option<u32>,
    focal: Option<f64>,
    principal: Option<[f64; 2]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHead {
    home: Option<RawPose>,
    v_max: Option<f64>,
    w_max: Option<f64>,
}

/// Error against a dotted field path, resolved to a line later.
struct FieldError {
    field: String,
    message: String,
}

fn field_err(field: impl Into<String>, message: impl Into<String>) -> FieldError {
    FieldError {
        field: field.into(),
        message: message.into(),
    }
}

fn pose_from(raw: &RawPose, field: &str) -> Result<Pose6D, FieldError> {
    let [x, y, z] = raw.translation;
    let t = Vec3::new(x, y, z);
    let pose = match raw.rotation {
        None => Some(Pose6D::new(t, nalgebra::UnitQuaternion::identity())),
        Some(q) => Pose6D::from_parts(t, q),
    };
    match pose {
        Some(p) if p.is_finite() => Ok(p),
        _ => Err(field_err(
            format!("{field}.rotation"),
            "pose must be finite with a non-zero quaternion",
        )),
    }
}

fn check_finite(field: &str, v: f64) -> Result<f64, FieldError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(field_err(field, format!("must be finite, got {v}")))
    }
}

fn build_arm(raw: &RawArm, name: &str) -> Result<ArmSetup, FieldError> {
    let default = synthetic_arm();
    let model = match &raw.joints {
        None => {
            if let Some(tool) = &raw.tool {
                let tool = pose_from(tool, &format!("{name}.tool"))?;
                ChainModel::new(default.model.joints().to_vec(), tool)
                    .map_err(|e| field_err(format!("{name}.tool"), e.to_string()))?
            } else {
                default.model.clone()
            }
        }
        Some(joints) => {
            let mut out = Vec::with_capacity(joints.len());
            for (i, j) in joints.iter().enumerate() {
                let f = format!("{name}.joints[{i}]");
                let axis = Vec3::new(j.axis[0], j.axis[1], j.axis[2]);
                if !(axis.norm() > 1e-9) || !axis.iter().all(|v| v.is_finite()) {
                    return Err(field_err(format!("{f}.axis"), "axis must be a finite non-zero vector"));
                }
                let origin = pose_from(
                    &RawPose {
                        translation: j.origin,
                        rotation: j.rotation,
                    },
                    &f,
                )?;
                out.push(RevoluteJoint {
                    axis: Unit::new_normalize(axis),
                    origin,
                    limits: JointLimits {
                        q_min: j.q_min,
                        q_max: j.q_max,
                        qd_max: j.qd_max,
                        tau_max: j.tau_max,
                    },
                });
            }
            let tool = match &raw.tool {
                Some(t) => pose_from(t, &format!("{name}.tool"))?,
                None => *default.model.tool(),
            };
            ChainModel::new(out, tool).map_err(|e| match e {
                KinematicsError::InvalidJoint { index, reason } => {
                    let key = if reason.contains("tau_max") {
                        ".tau_max"
                    } else if reason.contains("qd_max") {
                        ".qd_max"
                    } else if reason.contains("q_min") {
                        ".q_min"
                    } else {
                        ""
                    };
                    field_err(format!("{name}.joints[{index}]{key}"), reason)
                }
                other => field_err(format!("{name}.joints"), other.to_string()),
            })?
        }
    };
    let n = model.dof();
    let home = match &raw.home {
        Some(h) => h.clone(),
        None if n == default.home.len() => default.home.clone(),
        None => vec![0.0; n],
    };
    let inertia = match &raw.inertia {
        Some(v) => v.clone(),
        None if n == default.inertia.len() => default.inertia.clone(),
        None => vec![0.1; n],
    };
    Ok(ArmSetup {
        model,
        home,
        inertia,
        joint_damping: raw.joint_damping.unwrap_or(default.joint_damping),
    })
}

fn build_hand(raw: Option<&RawHand>, name: &str, default: HandSetup) -> Result<HandSetup, FieldError> {
    let Some(raw) = raw else {
        return Ok(default);
    };
    let variant = match raw.variant.as_str() {
        "svh" => HandVariant::Svh,
        "sih" => HandVariant::Sih,
        other => {
            return Err(field_err(
                format!("{name}.variant"),
                format!("unknown hand `{other}` (expected svh or sih)"),
            ));
        }
    };
    let base = match variant {
        HandVariant::Svh => HandMapping::default_svh(),
        HandVariant::Sih => HandMapping::default_sih(),
    };
    let retarget = match &raw.retarget {
        None => base.retarget.clone(),
        Some(rows) => {
            if rows.iter().any(|r| r.len() != OPERATOR_FINGER_JOINTS) {
                return Err(field_err(
                    format!("{name}.retarget"),
                    format!("every row needs {OPERATOR_FINGER_JOINTS} columns"),
                ));
            }
            DMatrix::from_row_iterator(rows.len(), OPERATOR_FINGER_JOINTS, rows.iter().flatten().copied())
        }
    };
    let mapping = HandMapping::new(
        variant,
        retarget,
        raw.out_min.clone().unwrap_or(base.out_min),
        raw.out_max.clone().unwrap_or(base.out_max),
        raw.brake_threshold.clone().unwrap_or(base.brake_threshold),
        raw.finger_of_output.clone().unwrap_or(base.finger_of_output),
    )
    .map_err(|e| {
        let msg = e.to_string();
        let key = ["retarget", "out_min", "out_max", "brake_threshold", "finger_of_output"]
            .into_iter()
            .find(|k| msg.contains(k))
            .unwrap_or("variant");
        field_err(format!("{name}.{key}"), msg)
    })?;
    Ok(HandSetup {
        mapping,
        current_gain: raw.current_gain.unwrap_or(default.current_gain),
        contact_angle: raw.contact_angle.unwrap_or(default.contact_angle),
    })
}

fn build(raw: RawConfig, base_dir: Option<&Path>) -> Result<SessionConfig, FieldError> {
    if raw.version != CONFIG_VERSION {
        return Err(field_err(
            "version",
            format!("unsupported version {} (expected {CONFIG_VERSION})", raw.version),
        ));
    }
    let d = SessionConfig::default();
    let s = &raw.session;
    let dp = &d.params;
    let params = SessionParams {
        operator_rate: s.operator_rate.unwrap_or(dp.operator_rate),
        sensor_rate: s.sensor_rate.unwrap_or(dp.sensor_rate),
        arm_state_rate: s.arm_state_rate.unwrap_or(dp.arm_state_rate),
        video_rate: s.video_rate.unwrap_or(dp.video_rate),
        video_streams: s.video_streams.unwrap_or(dp.video_streams),
        frame_bytes: s.frame_bytes.unwrap_or(dp.frame_bytes),
        duration: s.duration.unwrap_or(dp.duration),
        seed: s.seed.unwrap_or(dp.seed),
        exposure: s.exposure.unwrap_or(dp.exposure),
        encode_latency: s.encode_latency.unwrap_or(dp.encode_latency),
        decode_latency: s.decode_latency.unwrap_or(dp.decode_latency),
        comm_loss_intervals: s.comm_loss_intervals.unwrap_or(dp.comm_loss_intervals),
        fade_duration: s.fade_duration.unwrap_or(dp.fade_duration),
        scene_depth: s.scene_depth.unwrap_or(dp.scene_depth),
        bandwidth_window: s.bandwidth_window.unwrap_or(dp.bandwidth_window),
        estop_at: s.estop_at,
        trace_path: s.trace.as_ref().map(|p| match base_dir {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p.clone(),
        }),
    };

    let c = &raw.channel;
    let channel = ChannelModel {
        base_latency: c.base_latency.unwrap_or(d.channel.base_latency),
        jitter_std: c.jitter_std.unwrap_or(d.channel.jitter_std),
        loss_prob: c.loss_prob.unwrap_or(d.channel.loss_prob),
        bandwidth_limit: c.bandwidth_limit.unwrap_or(d.channel.bandwidth_limit),
        rng_seed: params.seed,
        blackouts: c
            .blackouts
            .iter()
            .map(|b| Blackout {
                start: b.start,
                end: b.end,
            })
            .collect(),
    };
    for (i, b) in c.blackouts.iter().enumerate() {
        if !(b.start.is_finite() && b.end.is_finite() && b.start <= b.end) {
            return Err(field_err(
                format!("channel.blackouts[{i}].end"),
                "blackout needs finite start <= end",
            ));
        }
    }
    if let Some(p) = c.loss_prob {
        if !(0.0..=1.0).contains(&p) {
            return Err(field_err("channel.loss_prob", format!("must lie in [0, 1], got {p}")));
        }
    }

    let arms = [
        build_arm(&raw.arms.left, "arms.left")?,
        build_arm(&raw.arms.right, "arms.right")?,
    ];

    let g = &raw.gains;
    let gains = ImpedanceGains {
        kp_lin: g.kp_lin.unwrap_or(d.gains.kp_lin),
        kd_lin: g.kd_lin.unwrap_or(d.gains.kd_lin),
        kp_ang: g.kp_ang.unwrap_or(d.gains.kp_ang),
        kd_ang: g.kd_ang.unwrap_or(d.gains.kd_ang),
    };
    for (k, v) in [
        ("kp_lin", gains.kp_lin),
        ("kd_lin", gains.kd_lin),
        ("kp_ang", gains.kp_ang),
        ("kd_ang", gains.kd_ang),
    ] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(field_err(
                format!("gains.{k}"),
                format!("must be finite and non-negative, got {v}"),
            ));
        }
    }
    if gains.kp_lin > 0.0 && gains.kd_lin == 0.0 {
        return Err(field_err(
            "gains.kd_lin",
            "a positive stiffness needs a positive damping",
        ));
    }
    if gains.kp_ang > 0.0 && gains.kd_ang == 0.0 {
        return Err(field_err(
            "gains.kd_ang",
            "a positive stiffness needs a positive damping",
        ));
    }

    let camera = {
        let r = &raw.camera;
        let width = r.width.unwrap_or(d.camera.width);
        let height = r.height.unwrap_or(d.camera.height);
        let fov_h = match r.fov_deg {
            Some(f) if f > 0.0 && f <= 360.0 => f.to_radians(),
            Some(f) => return Err(field_err("camera.fov_deg", format!("must lie in (0, 360], got {f}"))),
            None => d.camera.fov_h,
        };
        if width == 0 || height == 0 {
            return Err(field_err(
                if width == 0 { "camera.width" } else { "camera.height" },
                "image must be non-empty",
            ));
        }
        let focal = r.focal.unwrap_or(width as f64 / fov_h);
        let principal = r
            .principal
            .map(|[u, v]| Vector2::new(u, v))
            .unwrap_or_else(|| Vector2::new(width as f64 / 2.0, height as f64 / 2.0));
        SphereCamera {
            capture_pose: Pose6D::identity(),
            radius: r.radius.unwrap_or(d.camera.radius),
            fov_h,
            focal,
            principal,
            width,
            height,
        }
    };

    let head = HeadSetup {
        home: match &raw.head.home {
            Some(p) => pose_from(p, "head.home")?,
            None => d.head.home,
        },
        v_max: raw.head.v_max.unwrap_or(d.head.v_max),
        w_max: raw.head.w_max.unwrap_or(d.head.w_max),
    };
    check_finite("session.duration", params.duration)?;

    Ok(SessionConfig {
        params,
        channel,
        arms,
        gains,
        repulsion: Repulsion {
            margin: raw.repulsion.margin.unwrap_or(d.repulsion.margin),
            k_rep: raw.repulsion.k_rep.unwrap_or(d.repulsion.k_rep),
        },
        predictor: PredictorConfig {
            staleness_horizon: raw.predictor.staleness_horizon.unwrap_or(d.predictor.staleness_horizon),
            damping: raw.predictor.damping.unwrap_or(d.predictor.damping),
            step: raw.predictor.step.unwrap_or(d.predictor.step),
        },
        operator_hand: OperatorHand {
            mass: raw.operator_hand.mass.unwrap_or(d.operator_hand.mass),
            stiffness: raw.operator_hand.stiffness.unwrap_or(d.operator_hand.stiffness),
            damping: raw.operator_hand.damping.unwrap_or(d.operator_hand.damping),
        },
        feedback_cutoff_hz: raw.feedback.cutoff_hz.unwrap_or(d.feedback_cutoff_hz),
        hands: [
            build_hand(raw.hands.left.as_ref(), "hands.left", HandSetup::default_left())?,
            build_hand(raw.hands.right.as_ref(), "hands.right", HandSetup::default_right())?,
        ],
        base: MecanumBase {
            wheel_radius: raw.base.wheel_radius.unwrap_or(d.base.wheel_radius),
            half_length: raw.base.half_length.unwrap_or(d.base.half_length),
            half_width: raw.base.half_width.unwrap_or(d.base.half_width),
            wheel_speed_limit: raw.base.wheel_speed_limit.unwrap_or(d.base.wheel_speed_limit),
        },
        rudder: RudderGains {
            k_lin: raw.rudder.k_lin.unwrap_or(d.rudder.k_lin),
            k_ang: raw.rudder.k_ang.unwrap_or(d.rudder.k_ang),
            deadzone: raw.rudder.deadzone.unwrap_or(d.rudder.deadzone),
        },
        limits: TwistLimits {
            v_cap: raw.limits.v_cap.unwrap_or(d.limits.v_cap),
            v_capability: raw.limits.v_capability.unwrap_or(d.limits.v_capability),
            w_cap: raw.limits.w_cap.unwrap_or(d.limits.w_cap),
        },
        camera,
        head,
    })
}

/// Line of a dotted field path such as `arms.left.joints[2].q_max`; falls back
/// to the enclosing table header, then to line 1.
fn locate(src: &str, field: &str, message: &str) -> usize {
    let mut f = field;
    loop {
        if let Some(line) = locate_exact(src, f, message) {
            return line;
        }
        match f.rsplit_once('.') {
            Some((parent, _)) => f = parent,
            None => return 1,
        }
    }
}

/// Line of `field`, or of the header of its table; `None` when neither
/// appears in the source.
fn locate_exact(src: &str, field: &str, message: &str) -> Option<usize> {
    let (table, key, occurrence) = split_field(field);
    let mut counts: std::collections::HashMap<String, usize> = Default::default();
    let mut in_table = table.is_empty();
    let mut header_line = None;
    let mut keys_in_table = Vec::new();
    for (i, line) in src.lines().enumerate() {
        let l = line.trim();
        if l.starts_with('[') {
            let array = l.starts_with("[[");
            let name = l
                .trim_start_matches('[')
                .split(']')
                .next()
                .unwrap_or("")
                .trim()
                .to_string();
            let n = if array {
                let c = counts.entry(name.clone()).or_insert(0);
                *c += 1;
                *c - 1
            } else {
                0
            };
            in_table = name == table && occurrence.is_none_or(|o| o == n);
            if in_table && header_line.is_none() {
                header_line = Some(i + 1);
            }
            continue;
        }
        if !in_table {
            continue;
        }
        let Some((k, _)) = l.split_once('=') else {
            continue;
        };
        let k = k.trim().trim_matches('"');
        match key {
            Some(key) if k == key => return Some(i + 1),
            None => keys_in_table.push((k.to_string(), i + 1)),
            _ => {}
        }
    }
    if key.is_none() {
        if let Some((_, line)) = keys_in_table.iter().find(|(k, _)| message.contains(k.as_str())) {
            return Some(*line);
        }
    }
    header_line
}

fn split_field(field: &str) -> (String, Option<&str>, Option<usize>) {
    // `a.b[2].key` → table `a.b`, key, occurrence 2
    if let Some(open) = field.rfind('[') {
        let close = field[open..].find(']').map(|c| open + c).unwrap_or(field.len());
        let occurrence = field[open + 1..close].parse().ok();
        let key = field.get(close + 2..).filter(|k| !k.is_empty());
        return (field[..open].to_string(), key, occurrence);
    }
    match field.rsplit_once('.') {
        Some((table, key)) if is_table(table) => (table.to_string(), Some(key), None),
        Some(_) => (field.to_string(), None, None),
        None if is_table(field) => (field.to_string(), None, None),
        None => (String::new(), Some(field), None),
    }
}

fn is_table(name: &str) -> bool {
    matches!(
        name,
        "session"
            | "channel"
            | "arms.left"
            | "arms.right"
            | "gains"
            | "repulsion"
            | "predictor"
            | "operator_hand"
            | "feedback"
            | "hands.left"
            | "hands.right"
            | "base"
            | "rudder"
            | "limits"
            | "camera"
            | "head"
    )
}

fn line_of_offset(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

/// Parses and validates configuration text. `origin` names the source in
/// error messages; relative trace paths resolve against `base_dir`.
pub fn parse_config(src: &str, origin: &str, base_dir: Option<&Path>) -> Result<SessionConfig, ConfigError> {
    let invalid = |line: usize, message: String| ConfigError::Invalid {
        origin: origin.to_string(),
        line,
        message,
    };
    let raw: RawConfig = toml::from_str(src).map_err(|e| {
        let line = e.span().map_or(1, |s| line_of_offset(src, s.start));
        invalid(line, e.message().trim().to_string())
    })?;
    let cfg = build(raw, base_dir)
        .map_err(|e| invalid(locate(src, &e.field, &e.message), format!("{}: {}", e.field, e.message)))?;
    cfg.validate()
        .map_err(|e| invalid(locate(src, &e.field, &e.message), e.to_string()))?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<SessionConfig, ConfigError> {
    let src = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&src, &path.display().to_string(), path.parent())
}
