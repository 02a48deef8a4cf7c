//! Bilateral teleoperation core and deterministic simulation harness.
//!
//! The operator station streams palm, finger, head and base commands to the
//! avatar robot; the avatar answers with filtered wrist wrenches, arm state,
//! finger motor currents and video. Everything is exchanged as framed
//! [`netlink::Message`]s over simulated [`netlink::Channel`]s and driven by
//! the discrete-event [`session`] orchestrator.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod exec;
pub mod geometry;
pub mod haptics;
pub mod kinematics;
pub mod locomotion;
pub mod netlink;
pub mod session;
pub mod televis;

pub use exec::Execution;
pub use geometry::{pose_error, Pose6D, Twist, Vec3, Wrench};
