use thiserror::Error;

use super::metrics::MetricsLog;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BudgetError {
    #[error("log contains no delivered video frames")]
    NoVideo,
}

/// Mean glass-to-glass latency split into its stages (s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyBudget {
    pub exposure: f64,
    pub encode: f64,
    /// Queueing, serialization and propagation on the link.
    pub transmit: f64,
    pub decode: f64,
    pub frames: usize,
    pub transmit_max: f64,
}

impl LatencyBudget {
    pub fn total(&self) -> f64 {
        self.exposure + self.encode + self.transmit + self.decode
    }
}

/// Per-frame accounting from exposure start to display. Exposure, encode
/// and decode are the configured model constants; transmit is measured.
pub fn latency_budget(log: &MetricsLog) -> Result<LatencyBudget, BudgetError> {
    if log.frames.is_empty() {
        return Err(BudgetError::NoVideo);
    }
    let n = log.frames.len();
    let (sum, max) = log.frames.iter().fold((0.0, 0.0f64), |(s, m), f| {
        let d = f.delivered - f.sent;
        (s + d, m.max(d))
    });
    Ok(LatencyBudget {
        exposure: log.exposure,
        encode: log.encode_latency,
        transmit: sum / n as f64,
        decode: log.decode_latency,
        frames: n,
        transmit_max: max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::session::FrameRecord;

    fn log(frames: Vec<FrameRecord>) -> MetricsLog {
        MetricsLog {
            exposure: 0.008,
            encode_latency: 0.010,
            decode_latency: 0.012,
            frames,
            ..Default::default()
        }
    }

    #[test]
    fn stages_add_up() {
        let f = |sent: f64, delivered: f64| FrameRecord {
            stream: 0,
            capture: sent - 0.018,
            sent,
            delivered,
            bytes: 100,
        };
        let b = latency_budget(&log(vec![f(1.0, 1.002), f(2.0, 2.004)])).unwrap();
        assert!((b.transmit - 0.003).abs() < 1e-12);
        assert!((b.transmit_max - 0.004).abs() < 1e-12);
        assert!((b.total() - 0.033).abs() < 1e-12);
        assert_eq!(b.frames, 2);
    }

    #[test]
    fn no_video_is_an_error() {
        assert_eq!(latency_budget(&log(vec![])), Err(BudgetError::NoVideo));
    }
}
