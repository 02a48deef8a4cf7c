//! Message protocol between operator station and avatar, its wire codec, and
//! the simulated link carrying it.

mod channel;
mod codec;
mod message;

pub use channel::{
    Blackout, Channel, ChannelError, ChannelModel, ChannelStats, Delivery, SendOutcome, JITTER_CLIP_SIGMA, MIN_DELAY,
};
pub use codec::{decode, encode, frame_len, DecodeError, Decoded, EncodeError, FRAME_OVERHEAD, HEADER_LEN, MAGIC};
pub use message::{ErrorCode, Message, MsgType, Side};
