use std::fmt;
use std::io::Write;

use crate::geometry::{Pose6D, Vec3};
use crate::locomotion::PlanarPose;
use crate::netlink::ChannelStats;

pub const METRICS_MAGIC: &str = "# telelink-metrics v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SafetyMode {
    Running,
    Holding,
    Fading,
    EStopped,
}

impl SafetyMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Running => "running",
            Self::Holding => "holding",
            Self::Fading => "fading",
            Self::EStopped => "estopped",
        }
    }
}

impl fmt::Display for SafetyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// State of the loop at the end of one avatar control tick.
#[derive(Debug, Clone, PartialEq)]
pub struct TickRecord {
    pub t: f64,
    pub mode: SafetyMode,
    /// Operator command versus achieved palm pose, per arm.
    pub pose_error_lin: [f64; 2],
    pub pose_error_ang: [f64; 2],
    /// Achieved palm poses.
    pub ee: [Pose6D; 2],
    /// Target the avatar controller actually tracked this tick.
    pub target: [Pose6D; 2],
    /// Command send to feedback arrival; `NaN` until the first sample.
    pub wrench_rtt: f64,
    pub wrench_force: [f64; 2],
    /// Rendering error at the forward ray; `NaN` before the first frame.
    pub televis_error: f64,
    pub bandwidth: f64,
    pub energy: f64,
    pub torque_abs_max: f64,
    pub wheel_abs_max: f64,
    pub base: PlanarPose,
    pub brakes: usize,
}

/// One delivered video frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameRecord {
    pub stream: u8,
    /// Exposure start.
    pub capture: f64,
    pub sent: f64,
    pub delivered: f64,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsLog {
    pub seed: u64,
    pub exposure: f64,
    pub encode_latency: f64,
    pub decode_latency: f64,
    pub records: Vec<TickRecord>,
    pub frames: Vec<FrameRecord>,
    pub transitions: Vec<(f64, SafetyMode)>,
    pub uplink: ChannelStats,
    pub downlink: ChannelStats,
    pub decode_errors: u64,
    /// Set when the energy ledger blew past the abort level.
    pub aborted_at: Option<f64>,
}

pub fn metrics_columns() -> Vec<&'static str> {
    vec![
        "t",
        "mode",
        "err_lin_left",
        "err_ang_left",
        "err_lin_right",
        "err_ang_right",
        "ee_left_x",
        "ee_left_y",
        "ee_left_z",
        "ee_right_x",
        "ee_right_y",
        "ee_right_z",
        "wrench_rtt",
        "force_left",
        "force_right",
        "televis_error",
        "bandwidth_bps",
        "energy",
        "torque_abs_max",
        "wheel_abs_max",
        "base_x",
        "base_y",
        "base_theta",
        "brakes",
    ]
}

impl MetricsLog {
    pub fn max_energy(&self) -> f64 {
        if self.aborted_at.is_some() {
            return f64::INFINITY;
        }
        self.records
            .iter()
            .map(|r| if r.energy.is_nan() { f64::INFINITY } else { r.energy })
            .fold(0.0, f64::max)
    }

    pub fn peak_bandwidth(&self) -> f64 {
        self.records.iter().map(|r| r.bandwidth).fold(0.0, f64::max)
    }

    pub fn modes_visited(&self) -> Vec<SafetyMode> {
        self.transitions.iter().map(|(_, m)| *m).collect()
    }

    pub fn final_pose_error(&self) -> Option<f64> {
        self.records
            .last()
            .map(|r| r.pose_error_lin[0].max(r.pose_error_lin[1]))
    }

    /// Versioned CSV with the seed in the header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{METRICS_MAGIC}")?;
        writeln!(w, "# seed={}", self.seed)?;
        writeln!(w, "{}", metrics_columns().join(","))?;
        let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        for r in &self.records {
            let p = |v: &Vec3| [v.x.to_string(), v.y.to_string(), v.z.to_string()];
            let [lx, ly, lz] = p(&r.ee[0].translation);
            let [rx, ry, rz] = p(&r.ee[1].translation);
            out.write_record([
                r.t.to_string(),
                r.mode.as_str().to_string(),
                r.pose_error_lin[0].to_string(),
                r.pose_error_ang[0].to_string(),
                r.pose_error_lin[1].to_string(),
                r.pose_error_ang[1].to_string(),
                lx,
                ly,
                lz,
                rx,
                ry,
                rz,
                r.wrench_rtt.to_string(),
                r.wrench_force[0].to_string(),
                r.wrench_force[1].to_string(),
                r.televis_error.to_string(),
                r.bandwidth.to_string(),
                r.energy.to_string(),
                r.torque_abs_max.to_string(),
                r.wheel_abs_max.to_string(),
                r.base.x.to_string(),
                r.base.y.to_string(),
                r.base.theta.to_string(),
                r.brakes.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}
