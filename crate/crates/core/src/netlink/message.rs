use crate::geometry::{Pose6D, Twist, Wrench};
use crate::haptics::FINGERS;
use crate::kinematics::JointState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Left = 0,
    Right = 1,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Left, Side::Right];

    pub fn from_byte(b: u8) -> Option<Side> {
        match b {
            0 => Some(Side::Left),
            1 => Some(Side::Right),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Error codes shown to the operator as an overlay.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ErrorCode(pub u16);

impl ErrorCode {
    pub const COMM_LOSS: ErrorCode = ErrorCode(1);
    pub const TORQUE_LIMIT: ErrorCode = ErrorCode(2);
    pub const ESTOP: ErrorCode = ErrorCode(3);
}

/// Every flow between operator station and avatar robot.
#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    EefPoseCmd {
        side: Side,
        pose: Pose6D,
        twist: Twist,
    },
    /// Nine values for the SVH hand, five for the SIH hand.
    HandJointCmd {
        side: Side,
        joints: Vec<f64>,
    },
    HeadPoseCmd {
        pose: Pose6D,
    },
    BaseVelocityCmd {
        twist: Twist,
    },
    WrenchFeedback {
        side: Side,
        wrench: Wrench,
    },
    HandCurrentFeedback {
        side: Side,
        currents: [f64; FINGERS],
    },
    ArmStateFeedback {
        side: Side,
        state: JointState,
    },
    VideoFrame {
        stream: u8,
        capture_ts_ns: u64,
        payload: Vec<u8>,
    },
    FaceKeypoints {
        payload: Vec<u8>,
    },
    ErrorState {
        side: Side,
        code: ErrorCode,
    },
}

/// Wire identifiers, one per variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum MsgType {
    EefPoseCmd = 0x01,
    HandJointCmd = 0x02,
    HeadPoseCmd = 0x03,
    BaseVelocityCmd = 0x04,
    WrenchFeedback = 0x10,
    HandCurrentFeedback = 0x11,
    ArmStateFeedback = 0x12,
    ErrorState = 0x13,
    VideoFrame = 0x20,
    FaceKeypoints = 0x21,
}

impl MsgType {
    pub fn from_byte(b: u8) -> Option<MsgType> {
        use MsgType::*;
        Some(match b {
            0x01 => EefPoseCmd,
            0x02 => HandJointCmd,
            0x03 => HeadPoseCmd,
            0x04 => BaseVelocityCmd,
            0x10 => WrenchFeedback,
            0x11 => HandCurrentFeedback,
            0x12 => ArmStateFeedback,
            0x13 => ErrorState,
            0x20 => VideoFrame,
            0x21 => FaceKeypoints,
            _ => return None,
        })
    }
}

impl Message {
    pub fn msg_type(&self) -> MsgType {
        match self {
            Message::EefPoseCmd { .. } => MsgType::EefPoseCmd,
            Message::HandJointCmd { .. } => MsgType::HandJointCmd,
            Message::HeadPoseCmd { .. } => MsgType::HeadPoseCmd,
            Message::BaseVelocityCmd { .. } => MsgType::BaseVelocityCmd,
            Message::WrenchFeedback { .. } => MsgType::WrenchFeedback,
            Message::HandCurrentFeedback { .. } => MsgType::HandCurrentFeedback,
            Message::ArmStateFeedback { .. } => MsgType::ArmStateFeedback,
            Message::VideoFrame { .. } => MsgType::VideoFrame,
            Message::FaceKeypoints { .. } => MsgType::FaceKeypoints,
            Message::ErrorState { .. } => MsgType::ErrorState,
        }
    }
}
