//! Fixed little-endian framing.
//!
//! ```text
//! offset  size  field
//! 0       2     magic 0xAE 0x01
//! 2       1     msg_type
//! 3       4     seq (u32 LE)
//! 7       8     timestamp_ns (u64 LE)
//! 15      4     payload_len (u32 LE)
//! 19      n     payload
//! 19+n    4     crc32 (IEEE, LE) over bytes [0, 19+n)
//! ```

use nalgebra::{Quaternion, UnitQuaternion};
use thiserror::Error;

use super::message::{ErrorCode, Message, MsgType, Side};
use crate::geometry::{Pose6D, Twist, Vec3, Wrench};
use crate::haptics::FINGERS;
use crate::kinematics::{JointState, MAX_JOINTS};

pub const MAGIC: [u8; 2] = [0xAE, 0x01];
pub const HEADER_LEN: usize = 19;
pub const CRC_LEN: usize = 4;
pub const FRAME_OVERHEAD: usize = HEADER_LEN + CRC_LEN;
const TYPE_OFFSET: usize = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EncodeError {
    #[error("payload of {0} bytes exceeds the 32-bit length field")]
    PayloadTooLarge(usize),
    #[error("message cannot be encoded: {0}")]
    InvalidMessage(&'static str),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecodeError {
    #[error("truncated frame: need {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },
    #[error("bad magic {found:02x?}")]
    BadMagic { found: [u8; 2] },
    #[error("crc mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    CrcMismatch { stored: u32, computed: u32 },
    #[error("unknown message type {msg_type:#04x} at offset {offset}")]
    UnknownType { msg_type: u8, offset: usize },
    #[error("malformed {msg_type:?} payload: {reason}")]
    BadPayload { msg_type: MsgType, reason: &'static str },
    #[error("{extra} bytes after the end of the frame")]
    TrailingBytes { extra: usize },
}

/// A verified frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub message: Message,
    pub seq: u32,
    pub timestamp_ns: u64,
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn f64s(&mut self, vs: &[f64]) {
        for v in vs {
            self.0.extend_from_slice(&v.to_le_bytes());
        }
    }
    fn pose(&mut self, p: &Pose6D) {
        self.f64s(p.translation.as_slice());
        self.f64s(&p.wxyz());
    }
    fn twist(&mut self, t: &Twist) {
        self.f64s(t.linear.as_slice());
        self.f64s(t.angular.as_slice());
    }
}

fn payload_of(m: &Message) -> Result<Vec<u8>, EncodeError> {
    let mut w = Writer(Vec::new());
    match m {
        Message::EefPoseCmd { side, pose, twist } => {
            w.u8(*side as u8);
            w.pose(pose);
            w.twist(twist);
        }
        Message::HandJointCmd { side, joints } => {
            if joints.len() != 9 && joints.len() != 5 {
                return Err(EncodeError::InvalidMessage("hand command needs 9 or 5 joints"));
            }
            w.u8(*side as u8);
            w.f64s(joints);
        }
        Message::HeadPoseCmd { pose } => w.pose(pose),
        Message::BaseVelocityCmd { twist } => w.twist(twist),
        Message::WrenchFeedback { side, wrench } => {
            w.u8(*side as u8);
            w.f64s(wrench.force.as_slice());
            w.f64s(wrench.torque.as_slice());
        }
        Message::HandCurrentFeedback { side, currents } => {
            w.u8(*side as u8);
            w.f64s(currents);
        }
        Message::ArmStateFeedback { side, state } => {
            let n = state.q.len();
            if n == 0 || n > MAX_JOINTS || state.qd.len() != n {
                return Err(EncodeError::InvalidMessage(
                    "arm state needs 1..=16 joints with matching velocities",
                ));
            }
            w.u8(*side as u8);
            w.u8(n as u8);
            w.f64s(&state.q);
            w.f64s(&state.qd);
        }
        Message::VideoFrame {
            stream,
            capture_ts_ns,
            payload,
        } => {
            let len = u32::try_from(payload.len()).map_err(|_| EncodeError::PayloadTooLarge(payload.len() + 13))?;
            w.0.reserve(13 + payload.len());
            w.u8(*stream);
            w.0.extend_from_slice(&capture_ts_ns.to_le_bytes());
            w.0.extend_from_slice(&len.to_le_bytes());
            w.0.extend_from_slice(payload);
        }
        Message::FaceKeypoints { payload } => w.0.extend_from_slice(payload),
        Message::ErrorState { side, code } => {
            w.u8(*side as u8);
            w.0.extend_from_slice(&code.0.to_le_bytes());
        }
    }
    Ok(w.0)
}

/// Serializes a message into one frame of `23 + payload_len` bytes.
pub fn encode(m: &Message, seq: u32, timestamp_ns: u64) -> Result<Vec<u8>, EncodeError> {
    let payload = payload_of(m)?;
    let len = u32::try_from(payload.len()).map_err(|_| EncodeError::PayloadTooLarge(payload.len()))?;
    let mut out = Vec::with_capacity(FRAME_OVERHEAD + payload.len());
    out.extend_from_slice(&MAGIC);
    out.push(m.msg_type() as u8);
    out.extend_from_slice(&seq.to_le_bytes());
    out.extend_from_slice(&timestamp_ns.to_le_bytes());
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(&payload);
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

fn le_u32(b: &[u8]) -> u32 {
    u32::from_le_bytes([b[0], b[1], b[2], b[3]])
}

fn le_u64(b: &[u8]) -> u64 {
    let mut a = [0u8; 8];
    a.copy_from_slice(&b[..8]);
    u64::from_le_bytes(a)
}

/// Total frame length declared by a buffer holding at least a header.
pub fn frame_len(header: &[u8]) -> Option<usize> {
    (header.len() >= HEADER_LEN).then(|| FRAME_OVERHEAD + le_u32(&header[15..19]) as usize)
}

/// Parses and verifies exactly one frame. Never reads past `bytes`.
pub fn decode(bytes: &[u8]) -> Result<Decoded, DecodeError> {
    let truncated = |needed: usize| DecodeError::Truncated {
        needed,
        available: bytes.len(),
    };
    if bytes.len() < MAGIC.len() {
        return Err(truncated(MAGIC.len()));
    }
    if bytes[..2] != MAGIC {
        return Err(DecodeError::BadMagic {
            found: [bytes[0], bytes[1]],
        });
    }
    if bytes.len() < HEADER_LEN {
        return Err(truncated(FRAME_OVERHEAD));
    }
    let payload_len = le_u32(&bytes[15..19]) as usize;
    let total = HEADER_LEN
        .checked_add(payload_len)
        .and_then(|n| n.checked_add(CRC_LEN))
        .ok_or(truncated(usize::MAX))?;
    if bytes.len() < total {
        return Err(truncated(total));
    }
    let body = &bytes[..HEADER_LEN + payload_len];
    let stored = le_u32(&bytes[HEADER_LEN + payload_len..total]);
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(DecodeError::CrcMismatch { stored, computed });
    }
    if bytes.len() > total {
        return Err(DecodeError::TrailingBytes {
            extra: bytes.len() - total,
        });
    }
    let raw_type = bytes[TYPE_OFFSET];
    let msg_type = MsgType::from_byte(raw_type).ok_or(DecodeError::UnknownType {
        msg_type: raw_type,
        offset: TYPE_OFFSET,
    })?;
    let message = parse_payload(msg_type, &body[HEADER_LEN..])?;
    Ok(Decoded {
        message,
        seq: le_u32(&bytes[3..7]),
        timestamp_ns: le_u64(&bytes[7..15]),
    })
}

struct Reader<'a> {
    buf: &'a [u8],
    msg_type: MsgType,
}

impl<'a> Reader<'a> {
    fn bad(&self, reason: &'static str) -> DecodeError {
        DecodeError::BadPayload {
            msg_type: self.msg_type,
            reason,
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        if self.buf.len() < n {
            return Err(self.bad("payload too short"));
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8, DecodeError> {
        Ok(self.take(1)?[0])
    }

    fn side(&mut self) -> Result<Side, DecodeError> {
        let b = self.u8()?;
        Side::from_byte(b).ok_or_else(|| self.bad("side must be 0 or 1"))
    }

    fn f64(&mut self) -> Result<f64, DecodeError> {
        let v = f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes"));
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.bad("non-finite value"))
        }
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, DecodeError> {
        (0..n).map(|_| self.f64()).collect()
    }

    fn vec3(&mut self) -> Result<Vec3, DecodeError> {
        Ok(Vec3::new(self.f64()?, self.f64()?, self.f64()?))
    }

    fn pose(&mut self) -> Result<Pose6D, DecodeError> {
        let translation = self.vec3()?;
        let q = Quaternion::new(self.f64()?, self.f64()?, self.f64()?, self.f64()?);
        if (q.norm() - 1.0).abs() > 1e-9 {
            return Err(self.bad("rotation is not a unit quaternion"));
        }
        // already unit: keep the transmitted bits
        Ok(Pose6D {
            translation,
            rotation: UnitQuaternion::new_unchecked(q),
        })
    }

    fn twist(&mut self) -> Result<Twist, DecodeError> {
        Ok(Twist::new(self.vec3()?, self.vec3()?))
    }

    fn finish(self) -> Result<(), DecodeError> {
        if self.buf.is_empty() {
            Ok(())
        } else {
            Err(self.bad("unexpected bytes at end of payload"))
        }
    }
}

fn parse_payload(msg_type: MsgType, payload: &[u8]) -> Result<Message, DecodeError> {
    let mut r = Reader { buf: payload, msg_type };
    let m = match msg_type {
        MsgType::EefPoseCmd => Message::EefPoseCmd {
            side: r.side()?,
            pose: r.pose()?,
            twist: r.twist()?,
        },
        MsgType::HandJointCmd => {
            let side = r.side()?;
            let n = match r.buf.len() {
                72 => 9,
                40 => 5,
                _ => return Err(r.bad("hand command needs 9 or 5 joints")),
            };
            Message::HandJointCmd {
                side,
                joints: r.f64s(n)?,
            }
        }
        MsgType::HeadPoseCmd => Message::HeadPoseCmd { pose: r.pose()? },
        MsgType::BaseVelocityCmd => Message::BaseVelocityCmd { twist: r.twist()? },
        MsgType::WrenchFeedback => Message::WrenchFeedback {
            side: r.side()?,
            wrench: Wrench::new(r.vec3()?, r.vec3()?),
        },
        MsgType::HandCurrentFeedback => {
            let side = r.side()?;
            let mut currents = [0.0; FINGERS];
            for c in currents.iter_mut() {
                *c = r.f64()?;
            }
            Message::HandCurrentFeedback { side, currents }
        }
        MsgType::ArmStateFeedback => {
            let side = r.side()?;
            let n = r.u8()? as usize;
            if n == 0 || n > MAX_JOINTS {
                return Err(r.bad("joint count out of range"));
            }
            let q = r.f64s(n)?;
            let qd = r.f64s(n)?;
            Message::ArmStateFeedback {
                side,
                state: JointState::new(q, qd),
            }
        }
        MsgType::ErrorState => {
            let side = r.side()?;
            let b = r.take(2)?;
            Message::ErrorState {
                side,
                code: ErrorCode(u16::from_le_bytes([b[0], b[1]])),
            }
        }
        MsgType::VideoFrame => {
            let stream = r.u8()?;
            let capture_ts_ns = le_u64(r.take(8)?);
            let len = le_u32(r.take(4)?) as usize;
            if len != r.buf.len() {
                return Err(r.bad("declared video length differs from payload"));
            }
            Message::VideoFrame {
                stream,
                capture_ts_ns,
                payload: r.take(len)?.to_vec(),
            }
        }
        MsgType::FaceKeypoints => Message::FaceKeypoints {
            payload: r.take(r.buf.len())?.to_vec(),
        },
    };
    r.finish()?;
    Ok(m)
}
