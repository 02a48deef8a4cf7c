//! Discrete-event simulation of the whole teleoperation loop: operator
//! station and avatar exchanging messages over simulated links while an
//! operator trace is replayed.

mod budget;
mod config;
mod metrics;
mod sim;
mod sweep;
mod trace;

use thiserror::Error;

pub use budget::{latency_budget, BudgetError, LatencyBudget};
pub use config::{
    synthetic_arm, ArmSetup, ConfigInvalid, HandSetup, HeadSetup, OperatorHand, Repulsion, SessionConfig, SessionParams,
};
pub use metrics::{metrics_columns, FrameRecord, MetricsLog, SafetyMode, TickRecord, METRICS_MAGIC};
pub use sim::{run_session, Session, ENERGY_ABORT};
pub use sweep::{stability_sweep, SweepPoint, SweepResult, DIVERGENCE_RATIO};
pub use trace::{
    apply_offset, column_names, OperatorTrace, TraceError, TraceKind, TraceSample, CIRCLE_FREQUENCY, CIRCLE_RADIUS,
    DEFAULT_SAMPLE_PERIOD, REACH_DISTANCE, REACH_TIME, TRACE_COLUMNS, TRACE_MAGIC,
};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigInvalid),
    #[error("invalid trace: {0}")]
    Trace(#[from] TraceError),
    #[error("invalid delay list: {0}")]
    InvalidDelays(String),
    #[error("{0}")]
    Runtime(String),
}
