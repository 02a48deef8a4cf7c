#![allow(dead_code)]

use rand::Rng;
use telelink::geometry::{Pose6D, Twist, Vec3, Wrench};
use telelink::kinematics::{JointState, MAX_JOINTS};
use telelink::netlink::{ErrorCode, Message, Side};

fn vec3<R: Rng>(rng: &mut R, scale: f64) -> Vec3 {
    Vec3::new(
        rng.random_range(-scale..scale),
        rng.random_range(-scale..scale),
        rng.random_range(-scale..scale),
    )
}

pub fn random_pose<R: Rng>(rng: &mut R) -> Pose6D {
    let axis = vec3(rng, 1.0);
    let axis = if axis.norm() < 1e-6 { Vec3::z() } else { axis };
    Pose6D::from_axis_angle(&axis, rng.random_range(-3.1..3.1)).compose(&Pose6D::from_translation(
        rng.random_range(-2.0..2.0),
        rng.random_range(-2.0..2.0),
        rng.random_range(-2.0..2.0),
    ))
}

fn side<R: Rng>(rng: &mut R) -> Side {
    if rng.random() {
        Side::Left
    } else {
        Side::Right
    }
}

fn floats<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-10.0..10.0)).collect()
}

fn bytes<R: Rng>(rng: &mut R, max: usize) -> Vec<u8> {
    let n = rng.random_range(0..=max);
    (0..n).map(|_| rng.random()).collect()
}

/// A valid message of a uniformly chosen type.
pub fn random_message<R: Rng>(rng: &mut R) -> Message {
    match rng.random_range(0..10) {
        0 => Message::EefPoseCmd {
            side: side(rng),
            pose: random_pose(rng),
            twist: Twist {
                linear: vec3(rng, 2.0),
                angular: vec3(rng, 2.0),
            },
        },
        1 => {
            let n = if rng.random() { 9 } else { 5 };
            Message::HandJointCmd {
                side: side(rng),
                joints: floats(rng, n),
            }
        }
        2 => Message::HeadPoseCmd { pose: random_pose(rng) },
        3 => Message::BaseVelocityCmd {
            twist: Twist {
                linear: vec3(rng, 2.0),
                angular: vec3(rng, 2.0),
            },
        },
        4 => Message::WrenchFeedback {
            side: side(rng),
            wrench: Wrench {
                force: vec3(rng, 50.0),
                torque: vec3(rng, 5.0),
            },
        },
        5 => Message::HandCurrentFeedback {
            side: side(rng),
            currents: std::array::from_fn(|_| rng.random_range(0.0..3.0)),
        },
        6 => {
            let n = rng.random_range(1..=MAX_JOINTS);
            Message::ArmStateFeedback {
                side: side(rng),
                state: JointState::new(floats(rng, n), floats(rng, n)),
            }
        }
        7 => Message::VideoFrame {
            stream: rng.random_range(0..2),
            capture_ts_ns: rng.random(),
            payload: bytes(rng, 256),
        },
        8 => Message::FaceKeypoints {
            payload: bytes(rng, 128),
        },
        _ => Message::ErrorState {
            side: side(rng),
            code: ErrorCode(rng.random()),
        },
    }
}
