use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap, VecDeque};

use log::{debug, info, warn};
use nalgebra::{DVector, Matrix6, Vector6};

use super::config::SessionConfig;
use super::metrics::{FrameRecord, MetricsLog, SafetyMode, TickRecord};
use super::trace::{apply_offset, OperatorTrace};
use super::SessionError;
use crate::geometry::{pose_error, Pose6D, Twist, Vec3, Wrench};
use crate::haptics::{
    fade_target, impedance_step, limit_repulsion, retarget_fingers, FadeState, FingerBrakes, LowPassFilter, FINGERS,
    OPERATOR_FINGER_JOINTS,
};
use crate::kinematics::{forward_kinematics, jacobian, predict_avatar, JointState};
use crate::locomotion::{
    clamp_twist, integrate_odometry, rudder_to_twist, twist_to_wheels, wheels_to_twist, LocomotionError, PlanarPose,
};
use crate::netlink::{decode, encode, Channel, ErrorCode, Message, Side};
use crate::televis::{angular_error, HeadFollower};

/// Energy level past which a run is treated as diverged and stopped.
pub const ENERGY_ABORT: f64 = 1e9;
const DOWNLINK_SEED_SALT: u64 = 0x9E37_79B9_7F4A_7C15;
const FORWARD_RAY: Vec3 = Vec3::new(0.0, 0.0, 1.0);

// Same-instant events run in this order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Kind {
    Estop,
    VideoCapture,
    VideoSend,
    Avatar,
    Operator,
    Record,
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    kind: Kind,
    seq: u64,
    /// Tick index, frame index, or stream for video sends.
    index: u64,
    capture_ns: u64,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.kind.cmp(&other.kind))
            .then(self.seq.cmp(&other.seq))
    }
}

fn to_ns(t: f64) -> u64 {
    (t * 1e9).round().max(0.0) as u64
}

fn side_of(i: usize) -> Side {
    Side::BOTH[i]
}

/// Operator hand, modelled as a point mass tied to the trace by a spring.
#[derive(Debug, Clone, Copy)]
struct HandMass {
    x: Vec3,
    v: Vec3,
}

#[derive(Debug, Clone)]
struct Prediction {
    reported_at: f64,
    /// Prediction horizon already integrated from the report.
    horizon: f64,
    state: JointState,
    stale: bool,
}

struct Operator {
    hands: [HandMass; 2],
    trace_target: [Vec3; 2],
    command: [Pose6D; 2],
    feedback: [Wrench; 2],
    display_force: [Vec3; 2],
    reported: [Option<(JointState, f64)>; 2],
    prediction: [Option<Prediction>; 2],
    brakes: [FingerBrakes; 2],
    finger_hold: [[Option<f64>; OPERATOR_FINGER_JOINTS]; 2],
    head: Pose6D,
    pending_display: VecDeque<(f64, u8, Pose6D)>,
    displayed: Option<Pose6D>,
    overlay: Option<ErrorCode>,
    last_rtt: f64,
}

struct Avatar {
    arms: [JointState; 2],
    live: [Option<(Pose6D, Twist, f64)>; 2],
    target: [Pose6D; 2],
    hold: [Pose6D; 2],
    fades: Option<[FadeState; 2]>,
    /// Command timestamp behind the target tracked this tick.
    applied_cmd: [f64; 2],
    last_rx: Option<f64>,
    hand_cmd: [Vec<f64>; 2],
    head: HeadFollower,
    head_target: Pose6D,
    base_cmd: Twist,
    base_pose: PlanarPose,
    filters: [LowPassFilter; 2],
    wrench: [Wrench; 2],
    torque_abs_max: f64,
    wheel_abs_max: f64,
    /// Wrench feedback sequence number → command timestamp it reflects.
    pending_rtt: [BTreeMap<u32, f64>; 2],
}

/// A running simulation of the full operator ↔ avatar loop.
pub struct Session {
    cfg: SessionConfig,
    trace: OperatorTrace,
    dt: f64,
    homes: [Pose6D; 2],
    queue: BinaryHeap<Reverse<Event>>,
    next_seq: u64,
    now: f64,
    mode: SafetyMode,
    paused: bool,
    uplink: Channel,
    downlink: Channel,
    up_seq: u32,
    down_seq: u32,
    op: Operator,
    av: Avatar,
    /// Head pose at exposure start, keyed by capture timestamp.
    captures: BTreeMap<u64, Pose6D>,
    log: MetricsLog,
}

impl Session {
    pub fn new(cfg: SessionConfig, trace: OperatorTrace) -> Result<Self, SessionError> {
        cfg.validate()?;
        let p = &cfg.params;
        let mut up = cfg.channel.clone();
        up.rng_seed = p.seed;
        let mut down = cfg.channel.clone();
        down.rng_seed = p.seed ^ DOWNLINK_SEED_SALT;
        let uplink = Channel::new(up).map_err(|e| SessionError::Runtime(e.0))?;
        let downlink = Channel::new(down).map_err(|e| SessionError::Runtime(e.0))?;
        let homes = [cfg.arms[0].home_pose(), cfg.arms[1].home_pose()];
        let s0 = trace.sample_at(0.0);
        let filter = || {
            LowPassFilter::new(cfg.feedback_cutoff_hz, p.sensor_rate, 6)
                .map_err(|e| SessionError::Runtime(e.to_string()))
        };
        let hand = |i: usize| HandMass {
            x: apply_offset(&homes[i], &s0.palms[i]).translation,
            v: Vec3::zeros(),
        };
        let op = Operator {
            hands: [hand(0), hand(1)],
            trace_target: [hand(0).x, hand(1).x],
            command: homes,
            feedback: [Wrench::zero(); 2],
            display_force: [Vec3::zeros(); 2],
            reported: [None, None],
            prediction: [None, None],
            brakes: [FingerBrakes::new(), FingerBrakes::new()],
            finger_hold: [[None; OPERATOR_FINGER_JOINTS]; 2],
            head: apply_offset(&cfg.head.home, &s0.head),
            pending_display: VecDeque::new(),
            displayed: None,
            overlay: None,
            last_rtt: f64::NAN,
        };
        let av = Avatar {
            arms: [
                JointState::at_rest(cfg.arms[0].home.clone()),
                JointState::at_rest(cfg.arms[1].home.clone()),
            ],
            live: [None, None],
            target: homes,
            hold: homes,
            fades: None,
            applied_cmd: [f64::NAN; 2],
            last_rx: None,
            hand_cmd: [
                vec![0.0; cfg.hands[0].mapping.retarget.nrows()],
                vec![0.0; cfg.hands[1].mapping.retarget.nrows()],
            ],
            head: HeadFollower::new(cfg.head.home, cfg.head.v_max, cfg.head.w_max),
            head_target: cfg.head.home,
            base_cmd: Twist::zero(),
            base_pose: PlanarPose::default(),
            filters: [filter()?, filter()?],
            wrench: [Wrench::zero(); 2],
            torque_abs_max: 0.0,
            wheel_abs_max: 0.0,
            pending_rtt: [BTreeMap::new(), BTreeMap::new()],
        };
        let log = MetricsLog {
            seed: p.seed,
            exposure: p.exposure,
            encode_latency: p.encode_latency,
            decode_latency: p.decode_latency,
            transitions: vec![(0.0, SafetyMode::Running)],
            ..Default::default()
        };
        let mut s = Self {
            dt: 1.0 / p.operator_rate,
            homes,
            queue: BinaryHeap::new(),
            next_seq: 0,
            now: 0.0,
            mode: SafetyMode::Running,
            paused: false,
            uplink,
            downlink,
            up_seq: 0,
            down_seq: 0,
            op,
            av,
            captures: BTreeMap::new(),
            log,
            trace,
            cfg,
        };
        s.schedule(0.0, Kind::Avatar, 0, 0);
        s.schedule(0.0, Kind::Operator, 0, 0);
        s.schedule(0.0, Kind::Record, 0, 0);
        s.schedule(0.0, Kind::VideoCapture, 0, 0);
        if let Some(t) = s.cfg.params.estop_at {
            s.schedule(t, Kind::Estop, 0, 0);
        }
        Ok(s)
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn mode(&self) -> SafetyMode {
        self.mode
    }

    pub fn config(&self) -> &SessionConfig {
        &self.cfg
    }

    pub fn log(&self) -> &MetricsLog {
        &self.log
    }

    pub fn base_pose(&self) -> PlanarPose {
        self.av.base_pose
    }

    pub fn arm_state(&self, side: Side) -> &JointState {
        &self.av.arms[side.index()]
    }

    pub fn head_pose(&self) -> Pose6D {
        self.av.head.current_pose
    }

    /// Latest error code shown to the operator.
    pub fn operator_overlay(&self) -> Option<ErrorCode> {
        self.op.overlay
    }

    /// Stops the operator station from sending; the avatar sees a comm loss.
    pub fn set_operator_paused(&mut self, paused: bool) {
        self.paused = paused;
    }

    fn schedule(&mut self, time: f64, kind: Kind, index: u64, capture_ns: u64) {
        self.queue.push(Reverse(Event {
            time,
            kind,
            seq: self.next_seq,
            index,
            capture_ns,
        }));
        self.next_seq += 1;
    }

    fn set_mode(&mut self, mode: SafetyMode) {
        if self.mode != mode {
            debug!("t={:.4} {} -> {}", self.now, self.mode, mode);
            self.mode = mode;
            self.log.transitions.push((self.now, mode));
        }
    }

    /// Emergency stop at the current simulated instant.
    pub fn estop(&mut self) {
        self.av.fades = None;
        self.set_mode(SafetyMode::EStopped);
        for a in &mut self.av.arms {
            a.qd.iter_mut().for_each(|v| *v = 0.0);
        }
        self.send_down(Message::ErrorState {
            side: Side::Left,
            code: ErrorCode::ESTOP,
        });
    }

    /// Leaves the E-stop; the avatar holds its pose until commands arrive.
    pub fn reset_estop(&mut self) {
        if self.mode == SafetyMode::EStopped {
            self.enter_hold();
        }
    }

    fn enter_hold(&mut self) {
        for i in 0..2 {
            self.av.hold[i] = forward_kinematics(&self.cfg.arms[i].model, &self.av.arms[i].q).expect("validated arm");
        }
        self.av.fades = None;
        self.set_mode(SafetyMode::Holding);
    }

    /// Processes every event up to and including `t`.
    pub fn run_until(&mut self, t: f64) -> Result<(), SessionError> {
        while let Some(Reverse(ev)) = self.queue.peek().copied() {
            if ev.time > t + 1e-12 || self.log.aborted_at.is_some() {
                break;
            }
            self.queue.pop();
            self.now = ev.time;
            match ev.kind {
                Kind::Estop => self.estop(),
                Kind::VideoCapture => self.video_capture(ev.index),
                Kind::VideoSend => self.video_send(ev.index as u8, ev.capture_ns),
                Kind::Avatar => self.avatar_tick(ev.index)?,
                Kind::Operator => self.operator_tick(ev.index)?,
                Kind::Record => self.record(ev.index),
            }
        }
        Ok(())
    }

    pub fn finish(mut self) -> MetricsLog {
        self.log.uplink = self.uplink.stats();
        self.log.downlink = self.downlink.stats();
        self.log
    }

    fn tick_time(&self, k: u64) -> f64 {
        k as f64 / self.cfg.params.operator_rate
    }

    fn send_up(&mut self, m: Message) {
        let seq = self.up_seq;
        self.up_seq = self.up_seq.wrapping_add(1);
        match encode(&m, seq, to_ns(self.now)) {
            Ok(bytes) => {
                self.uplink.send(bytes, self.now);
            }
            Err(e) => debug!("uplink encode failed: {e}"),
        }
    }

    fn send_down(&mut self, m: Message) -> u32 {
        let seq = self.down_seq;
        self.down_seq = self.down_seq.wrapping_add(1);
        match encode(&m, seq, to_ns(self.now)) {
            Ok(bytes) => {
                self.downlink.send(bytes, self.now);
            }
            Err(e) => debug!("downlink encode failed: {e}"),
        }
        seq
    }

    fn video_capture(&mut self, j: u64) {
        let p = &self.cfg.params;
        let ready = self.now + p.exposure + p.encode_latency;
        let capture_ns = to_ns(self.now);
        for stream in 0..p.video_streams {
            self.schedule(ready, Kind::VideoSend, stream as u64, capture_ns);
        }
        // the pose at exposure start travels with the frame timestamp
        self.captures.insert(capture_ns, self.av.head.current_pose);
        self.schedule(
            (j + 1) as f64 / self.cfg.params.video_rate,
            Kind::VideoCapture,
            j + 1,
            0,
        );
    }

    fn video_send(&mut self, stream: u8, capture_ns: u64) {
        let payload = vec![0u8; self.cfg.params.frame_bytes];
        self.send_down(Message::VideoFrame {
            stream,
            capture_ts_ns: capture_ns,
            payload,
        });
    }

    fn fail(&mut self, what: &str, e: impl std::fmt::Display) {
        warn!("t={:.4}: {what}: {e}; stopping run", self.now);
        self.log.aborted_at = Some(self.now);
    }

    fn avatar_tick(&mut self, k: u64) -> Result<(), SessionError> {
        let t = self.now;
        let dt = self.dt;
        let mut fresh = false;
        for d in self.uplink.poll(t) {
            let dec = match decode(&d.bytes) {
                Ok(dec) => dec,
                Err(e) => {
                    self.log.decode_errors += 1;
                    warn!("avatar dropped frame: {e}");
                    continue;
                }
            };
            let ts = dec.timestamp_ns as f64 * 1e-9;
            match dec.message {
                Message::EefPoseCmd { side, pose, twist } => self.av.live[side.index()] = Some((pose, twist, ts)),
                Message::HandJointCmd { side, joints } => {
                    let cmd = &mut self.av.hand_cmd[side.index()];
                    if joints.len() == cmd.len() {
                        *cmd = joints;
                    }
                }
                Message::HeadPoseCmd { pose } => self.av.head_target = pose,
                Message::BaseVelocityCmd { twist } => self.av.base_cmd = twist,
                other => {
                    warn!("unexpected uplink message {:?}", other.msg_type());
                    continue;
                }
            }
            fresh = true;
            self.av.last_rx = Some(t);
        }

        let window = self.cfg.params.comm_loss_intervals as f64 * dt;
        let lost = self.av.last_rx.is_some_and(|r| t - r > window + 1e-12);
        match self.mode {
            SafetyMode::Running if lost => {
                self.enter_hold();
                for side in Side::BOTH {
                    self.send_down(Message::ErrorState {
                        side,
                        code: ErrorCode::COMM_LOSS,
                    });
                }
            }
            SafetyMode::Holding if fresh => {
                let d = self.cfg.params.fade_duration;
                self.av.fades = Some([FadeState::new(self.av.hold[0], d), FadeState::new(self.av.hold[1], d)]);
                self.set_mode(SafetyMode::Fading);
            }
            _ => {}
        }

        let mode = self.mode;
        self.av.torque_abs_max = 0.0;
        for i in 0..2 {
            let arm = &self.cfg.arms[i];
            if mode == SafetyMode::EStopped {
                self.av.arms[i].qd.iter_mut().for_each(|v| *v = 0.0);
                self.av.wrench[i] = Wrench::zero();
                self.av.applied_cmd[i] = f64::NAN;
                continue;
            }
            let live = self.av.live[i];
            let (target, twist, cmd_ts) = match mode {
                SafetyMode::Running => live.unwrap_or((self.homes[i], Twist::zero(), f64::NAN)),
                SafetyMode::Holding => (self.av.hold[i], Twist::zero(), f64::NAN),
                _ => {
                    let fades = self.av.fades.as_mut().expect("fade state while fading");
                    let goal = live.map_or(self.av.hold[i], |l| l.0);
                    let (p, f) = fade_target(&fades[i], &goal, dt);
                    fades[i] = f;
                    (p, Twist::zero(), live.map_or(f64::NAN, |l| l.2))
                }
            };
            self.av.target[i] = target;
            self.av.applied_cmd[i] = cmd_ts;
            let state = &self.av.arms[i];
            let cmd = match impedance_step(&arm.model, state, &target, &twist, &self.cfg.gains) {
                Ok(c) => c,
                Err(e) => {
                    self.fail("impedance step", e);
                    return Ok(());
                }
            };
            let rep = limit_repulsion(
                &arm.model,
                &state.q,
                self.cfg.repulsion.margin,
                self.cfg.repulsion.k_rep,
            )
            .map_err(|e| SessionError::Runtime(e.to_string()))?;
            let state = &mut self.av.arms[i];
            for (j, joint) in arm.model.joints().iter().enumerate() {
                let lim = joint.limits.tau_max;
                let tau = (cmd.torque[j] + rep[j]).clamp(-lim, lim);
                self.av.torque_abs_max = self.av.torque_abs_max.max(tau.abs());
                let acc = (tau - arm.joint_damping * state.qd[j]) / arm.inertia[j];
                state.qd[j] += dt * acc;
                state.q[j] += dt * state.qd[j];
            }
            self.av.wrench[i] = cmd.wrench;
        }
        if mode == SafetyMode::Fading
            && self
                .av
                .fades
                .as_ref()
                .is_some_and(|f| f.iter().all(FadeState::is_complete))
        {
            self.av.fades = None;
            self.set_mode(SafetyMode::Running);
        }

        if k.is_multiple_of(self.cfg.sensor_decimation()) {
            self.send_sensors();
        }
        if k.is_multiple_of(self.cfg.arm_state_decimation()) {
            for i in 0..2 {
                let state = self.av.arms[i].clone();
                self.send_down(Message::ArmStateFeedback {
                    side: side_of(i),
                    state,
                });
            }
        }

        if mode != SafetyMode::EStopped {
            let target = self.av.head_target;
            self.av.head.step(&target, dt);
        }

        let wheels = match mode {
            SafetyMode::EStopped | SafetyMode::Holding => [0.0; 4],
            _ => {
                let tw = clamp_twist(&self.av.base_cmd, &self.cfg.limits);
                match twist_to_wheels(&self.cfg.base, &tw) {
                    Ok(w) => w,
                    Err(LocomotionError::WheelSaturation { scale, wheels, .. }) => wheels.map(|w| w * scale),
                    Err(e) => return Err(SessionError::Runtime(e.to_string())),
                }
            }
        };
        self.av.wheel_abs_max = wheels.iter().fold(0.0, |m, w| m.max(w.abs()));
        let fit = wheels_to_twist(&self.cfg.base, &wheels);
        self.av.base_pose = integrate_odometry(&self.av.base_pose, &fit.twist, dt);

        self.schedule(self.tick_time(k + 1), Kind::Avatar, k + 1, 0);
        Ok(())
    }

    fn send_sensors(&mut self) {
        for i in 0..2 {
            let raw = self.av.wrench[i].to_vector();
            let filtered = Vector6::from_column_slice(self.av.filters[i].step(raw.as_slice()));
            let seq = self.send_down(Message::WrenchFeedback {
                side: side_of(i),
                wrench: Wrench::from_vector(&filtered),
            });
            let pending = &mut self.av.pending_rtt[i];
            if self.av.applied_cmd[i].is_finite() {
                pending.insert(seq, self.av.applied_cmd[i]);
            }
            while pending.len() > 4096 {
                pending.pop_first();
            }

            let hand = &self.cfg.hands[i];
            let mut currents = [0.0; FINGERS];
            for (o, c) in self.av.hand_cmd[i].iter().enumerate() {
                let f = hand.mapping.finger_of_output[o];
                currents[f] = f64::max(currents[f], hand.current_gain * (c - hand.contact_angle).max(0.0));
            }
            self.send_down(Message::HandCurrentFeedback {
                side: side_of(i),
                currents,
            });
        }
    }

    fn operator_tick(&mut self, k: u64) -> Result<(), SessionError> {
        let t = self.now;
        let dt = self.dt;
        for d in self.downlink.poll(t) {
            let dec = match decode(&d.bytes) {
                Ok(dec) => dec,
                Err(e) => {
                    self.log.decode_errors += 1;
                    warn!("operator dropped frame: {e}");
                    continue;
                }
            };
            let ts = dec.timestamp_ns as f64 * 1e-9;
            match dec.message {
                Message::WrenchFeedback { side, wrench } => {
                    let i = side.index();
                    self.op.feedback[i] = wrench;
                    if let Some(cmd) = self.av.pending_rtt[i].remove(&dec.seq) {
                        self.op.last_rtt = t - cmd;
                    }
                }
                Message::ArmStateFeedback { side, state } => {
                    self.op.reported[side.index()] = Some((state, ts));
                }
                Message::HandCurrentFeedback { side, currents } => {
                    let i = side.index();
                    self.op.brakes[i]
                        .update(&self.cfg.hands[i].mapping, &currents)
                        .map_err(|e| SessionError::Runtime(e.to_string()))?;
                }
                Message::ErrorState { code, .. } => self.op.overlay = Some(code),
                Message::VideoFrame {
                    stream, capture_ts_ns, ..
                } => {
                    self.log.frames.push(FrameRecord {
                        stream,
                        capture: capture_ts_ns as f64 * 1e-9,
                        sent: d.sent_at,
                        delivered: d.delivered_at,
                        bytes: d.bytes.len(),
                    });
                    if stream == 0 {
                        if let Some(pose) = self.captures.get(&capture_ts_ns).copied() {
                            let shown = d.delivered_at + self.cfg.params.decode_latency;
                            self.op.pending_display.push_back((shown, stream, pose));
                        }
                        self.captures = self.captures.split_off(&capture_ts_ns);
                    }
                }
                other => warn!("unexpected downlink message {:?}", other.msg_type()),
            }
        }
        while self
            .op
            .pending_display
            .front()
            .is_some_and(|(shown, _, _)| *shown <= t + 1e-12)
        {
            let (_, _, pose) = self.op.pending_display.pop_front().expect("peeked");
            self.op.displayed = Some(pose);
        }

        let sample = self.trace.sample_at(t);
        let hand_model = self.cfg.operator_hand;
        for i in 0..2 {
            let target = apply_offset(&self.homes[i], &sample.palms[i]);
            self.op.trace_target[i] = target.translation;
            self.op.display_force[i] = self.display_force(i, t)?;
            let h = &mut self.op.hands[i];
            let f = hand_model.stiffness * (target.translation - h.x)
                - hand_model.damping * h.v
                - self.op.feedback[i].force
                + self.op.display_force[i];
            h.v += f * (dt / hand_model.mass);
            h.x += h.v * dt;
            let pose = Pose6D::new(h.x, target.rotation);
            let twist = Twist::new(h.v, Vec3::zeros());
            self.op.command[i] = pose;

            let mut joints = sample.fingers[i];
            for (j, v) in joints.iter_mut().enumerate() {
                let finger = j * FINGERS / OPERATOR_FINGER_JOINTS;
                if self.op.brakes[i].engaged()[finger] {
                    let held = *self.op.finger_hold[i][j].get_or_insert(*v);
                    *v = v.min(held);
                } else {
                    self.op.finger_hold[i][j] = None;
                }
            }
            let fingers = retarget_fingers(&self.cfg.hands[i].mapping, &joints)
                .map_err(|e| SessionError::Runtime(e.to_string()))?;
            if !self.paused {
                self.send_up(Message::EefPoseCmd {
                    side: side_of(i),
                    pose,
                    twist,
                });
                self.send_up(Message::HandJointCmd {
                    side: side_of(i),
                    joints: fingers,
                });
            }
        }
        self.op.head = apply_offset(&self.cfg.head.home, &sample.head);
        if !self.paused {
            self.send_up(Message::HeadPoseCmd { pose: self.op.head });
            let twist = clamp_twist(&rudder_to_twist(&sample.rudder, &self.cfg.rudder), &self.cfg.limits);
            self.send_up(Message::BaseVelocityCmd { twist });
        }
        self.schedule(self.tick_time(k + 1), Kind::Operator, k + 1, 0);
        Ok(())
    }

    /// Cartesian push rendering the joint-limit repulsion of the predicted
    /// avatar state; zero while no report is fresh enough.
    fn display_force(&mut self, i: usize, t: f64) -> Result<Vec3, SessionError> {
        let Some((reported, at)) = &self.op.reported[i] else {
            return Ok(Vec3::zeros());
        };
        let cfg = self.cfg.predictor;
        let arm = &self.cfg.arms[i];
        let elapsed = (t - at).max(0.0);
        let want = elapsed.min(cfg.staleness_horizon);
        let cmd = self.op.command[i];
        let rt = |e: crate::kinematics::KinematicsError| SessionError::Runtime(e.to_string());
        let pred = match self.op.prediction[i].take() {
            Some(p) if p.reported_at == *at => {
                if want > p.horizon + 1e-12 {
                    let step = predict_avatar(&arm.model, &p.state, &cmd, want - p.horizon, &cfg).map_err(rt)?;
                    Prediction {
                        horizon: want,
                        state: step.state,
                        stale: elapsed > cfg.staleness_horizon,
                        ..p
                    }
                } else {
                    Prediction {
                        stale: elapsed > cfg.staleness_horizon,
                        ..p
                    }
                }
            }
            _ => {
                let step = predict_avatar(&arm.model, reported, &cmd, want, &cfg).map_err(rt)?;
                Prediction {
                    reported_at: *at,
                    horizon: want,
                    state: step.state,
                    stale: step.stale,
                }
            }
        };
        let force = if pred.stale {
            Vec3::zeros()
        } else {
            let tau = limit_repulsion(
                &arm.model,
                &pred.state.q,
                self.cfg.repulsion.margin,
                self.cfg.repulsion.k_rep,
            )
            .map_err(rt)?;
            if tau.iter().all(|v| *v == 0.0) {
                Vec3::zeros()
            } else {
                let jac = jacobian(&arm.model, &pred.state.q).map_err(rt)?;
                let lambda = cfg.damping;
                let a: Matrix6<f64> = &jac * jac.transpose() + Matrix6::identity() * (lambda * lambda);
                let b: Vector6<f64> = &jac * DVector::from_column_slice(&tau);
                let w = a.lu().solve(&b).unwrap_or_else(Vector6::zeros);
                Vec3::new(w[0], w[1], w[2])
            }
        };
        self.op.prediction[i] = Some(pred);
        Ok(force)
    }

    fn record(&mut self, k: u64) {
        let t = self.now;
        let hand_model = self.cfg.operator_hand;
        let mut energy = 0.0;
        let mut ee = [Pose6D::identity(); 2];
        let mut err_lin = [0.0; 2];
        let mut err_ang = [0.0; 2];
        for i in 0..2 {
            let arm = &self.cfg.arms[i];
            let state = &self.av.arms[i];
            let pose = match forward_kinematics(&arm.model, &state.q) {
                Ok(p) => p,
                Err(e) => {
                    self.fail("forward kinematics", e);
                    return;
                }
            };
            ee[i] = pose;
            let e = pose_error(&self.op.command[i], &pose);
            err_lin[i] = e.fixed_rows::<3>(0).norm();
            err_ang[i] = e.fixed_rows::<3>(3).norm();
            let h = &self.op.hands[i];
            energy += 0.5 * hand_model.mass * h.v.norm_squared();
            energy += 0.5 * hand_model.stiffness * (self.op.trace_target[i] - h.x).norm_squared();
            energy += state
                .qd
                .iter()
                .zip(&arm.inertia)
                .map(|(qd, m)| 0.5 * m * qd * qd)
                .sum::<f64>();
            if self.mode != SafetyMode::EStopped {
                energy += self.cfg.gains.spring_energy(&pose_error(&self.av.target[i], &pose));
            }
        }
        let televis_error = match self.op.displayed {
            Some(capture) => {
                let cam = self.cfg.camera.with_capture_pose(capture);
                angular_error(&cam, &FORWARD_RAY, &self.op.head, self.cfg.params.scene_depth).unwrap_or(f64::NAN)
            }
            None => f64::NAN,
        };
        let brakes = self.op.brakes.iter().map(FingerBrakes::count).sum();
        self.log.records.push(TickRecord {
            t,
            mode: self.mode,
            pose_error_lin: err_lin,
            pose_error_ang: err_ang,
            ee,
            target: self.av.target,
            wrench_rtt: self.op.last_rtt,
            wrench_force: [self.av.wrench[0].force.norm(), self.av.wrench[1].force.norm()],
            televis_error,
            bandwidth: self.downlink.bandwidth_meter(self.cfg.params.bandwidth_window),
            energy,
            torque_abs_max: self.av.torque_abs_max,
            wheel_abs_max: self.av.wheel_abs_max,
            base: self.av.base_pose,
            brakes,
        });
        if !(energy <= ENERGY_ABORT) {
            self.fail("energy ledger", format!("{energy:e} J exceeds {ENERGY_ABORT:e} J"));
            return;
        }
        self.schedule(self.tick_time(k + 1), Kind::Record, k + 1, 0);
    }
}

/// Runs a whole session for the configured duration.
pub fn run_session(cfg: SessionConfig, trace: OperatorTrace) -> Result<MetricsLog, SessionError> {
    let duration = cfg.params.duration;
    let seed = cfg.params.seed;
    let mut s = Session::new(cfg, trace)?;
    s.run_until(duration)?;
    let log = s.finish();
    info!(
        "session seed={seed}: {} ticks, {} frames, aborted={:?}",
        log.records.len(),
        log.frames.len(),
        log.aborted_at
    );
    Ok(log)
}
