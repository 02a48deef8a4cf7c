use log::info;

use super::config::SessionConfig;
use super::sim::run_session;
use super::trace::OperatorTrace;
use super::SessionError;
use crate::exec::{map_collect, Execution};

/// A run counts as diverged once its energy exceeds this multiple of the
/// zero-delay peak.
pub const DIVERGENCE_RATIO: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    /// One-way delay applied to both directions (s).
    pub delay: f64,
    pub max_energy: f64,
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub reference_peak: f64,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    /// Number of stable→diverged flips along the sweep.
    pub fn transitions(&self) -> usize {
        self.points
            .windows(2)
            .filter(|w| w[0].diverged != w[1].diverged)
            .count()
    }

    pub fn is_monotone(&self) -> bool {
        self.points.windows(2).all(|w| !w[0].diverged || w[1].diverged)
    }

    /// Last stable and first diverged delay, when the sweep brackets a threshold.
    pub fn threshold(&self) -> Option<(f64, f64)> {
        self.points
            .windows(2)
            .find(|w| !w[0].diverged && w[1].diverged)
            .map(|w| (w[0].delay, w[1].delay))
    }
}

/// Runs one session per delay, all sharing `cfg` except for the link
/// latency, and flags runs whose energy ledger grows past
/// `DIVERGENCE_RATIO` times the zero-delay peak.
pub fn stability_sweep(
    cfg: &SessionConfig,
    trace: &OperatorTrace,
    delays: &[f64],
    exec: Execution,
) -> Result<SweepResult, SessionError> {
    if delays.is_empty() {
        return Err(SessionError::InvalidDelays("no delays given".into()));
    }
    if delays.iter().any(|d| !(*d >= 0.0 && d.is_finite())) {
        return Err(SessionError::InvalidDelays(
            "delays must be finite and non-negative".into(),
        ));
    }
    if delays.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SessionError::InvalidDelays("delays must be strictly ascending".into()));
    }
    cfg.validate()?;
    let mut all = Vec::with_capacity(delays.len() + 1);
    if delays[0] != 0.0 {
        all.push(0.0);
    }
    all.extend_from_slice(delays);
    let peaks = map_collect(exec, &all, |&delay| {
        let mut c = cfg.clone();
        c.channel.base_latency = delay;
        run_session(c, trace.clone()).map(|log| log.max_energy())
    });
    let peaks = peaks.into_iter().collect::<Result<Vec<_>, _>>()?;
    let reference_peak = peaks[0];
    let offset = all.len() - delays.len();
    let points = delays
        .iter()
        .zip(&peaks[offset..])
        .map(|(&delay, &max_energy)| SweepPoint {
            delay,
            max_energy,
            diverged: !(max_energy <= DIVERGENCE_RATIO * reference_peak),
        })
        .collect();
    let result = SweepResult { reference_peak, points };
    info!("sweep over {} delays, threshold {:?}", delays.len(), result.threshold());
    Ok(result)
}
