//! Deterministic simulated link: latency, Gaussian jitter, loss, blackouts and
//! a single-server serialization queue.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

/// Smallest one-way delay; keeps delivery strictly after sending.
pub const MIN_DELAY: f64 = 1e-9;
/// Jitter draws are clipped to this many standard deviations.
pub const JITTER_CLIP_SIGMA: f64 = 3.0;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid channel model: {0}")]
pub struct ChannelError(pub String);

/// Interval `[start, end)` during which every sent packet is lost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Blackout {
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    pub base_latency: f64,
    pub jitter_std: f64,
    pub loss_prob: f64,
    /// Bits per second; `f64::INFINITY` disables serialization delay.
    pub bandwidth_limit: f64,
    pub rng_seed: u64,
    pub blackouts: Vec<Blackout>,
}

impl Default for ChannelModel {
    fn default() -> Self {
        Self {
            base_latency: 0.0,
            jitter_std: 0.0,
            loss_prob: 0.0,
            bandwidth_limit: 1e9,
            rng_seed: 0,
            blackouts: Vec::new(),
        }
    }
}

impl ChannelModel {
    pub fn validate(&self) -> Result<(), ChannelError> {
        let err = |m: &str| Err(ChannelError(m.to_string()));
        if !(self.base_latency >= 0.0 && self.base_latency.is_finite()) {
            return err("base_latency must be finite and non-negative");
        }
        if !(self.jitter_std >= 0.0 && self.jitter_std.is_finite()) {
            return err("jitter_std must be finite and non-negative");
        }
        if !(0.0..=1.0).contains(&self.loss_prob) {
            return err("loss_prob must lie in [0, 1]");
        }
        if !(self.bandwidth_limit > 0.0) {
            return err("bandwidth_limit must be positive");
        }
        if self.blackouts.iter().any(|b| !(b.start <= b.end)) {
            return err("blackout start must not exceed its end");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Delivery {
    pub bytes: Vec<u8>,
    pub sent_at: f64,
    pub delivered_at: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SendOutcome {
    Scheduled { deliver_at: f64 },
    Dropped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ChannelStats {
    pub sent: u64,
    pub dropped: u64,
    pub delivered: u64,
}

#[derive(Debug)]
struct InFlight {
    deliver_at: f64,
    order: u64,
    sent_at: f64,
    bytes: Vec<u8>,
}

impl PartialEq for InFlight {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for InFlight {}

impl PartialOrd for InFlight {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for InFlight {
    // reversed: BinaryHeap is a max-heap, we pop the earliest (FIFO on ties)
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .deliver_at
            .total_cmp(&self.deliver_at)
            .then_with(|| other.order.cmp(&self.order))
    }
}

/// One direction of the operator↔avatar link.
///
/// Time is an explicit parameter; `send` and `poll` must be called with
/// non-decreasing `now`.
#[derive(Debug)]
pub struct Channel {
    model: ChannelModel,
    rng: ChaCha8Rng,
    jitter: Option<Normal<f64>>,
    link_free_at: f64,
    in_flight: BinaryHeap<InFlight>,
    next_order: u64,
    stats: ChannelStats,
    delivered_bits: VecDeque<(f64, u64)>,
    meter_horizon: f64,
    last_now: f64,
}

impl Channel {
    pub fn new(model: ChannelModel) -> Result<Self, ChannelError> {
        model.validate()?;
        let jitter = (model.jitter_std > 0.0)
            .then(|| Normal::new(0.0, model.jitter_std).map_err(|e| ChannelError(e.to_string())))
            .transpose()?;
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(model.rng_seed),
            jitter,
            model,
            link_free_at: f64::NEG_INFINITY,
            in_flight: BinaryHeap::new(),
            next_order: 0,
            stats: ChannelStats::default(),
            delivered_bits: VecDeque::new(),
            meter_horizon: 10.0,
            last_now: f64::NEG_INFINITY,
        })
    }

    pub fn model(&self) -> &ChannelModel {
        &self.model
    }

    pub fn stats(&self) -> ChannelStats {
        self.stats
    }

    pub fn in_flight(&self) -> usize {
        self.in_flight.len()
    }

    fn advance(&mut self, now: f64) -> f64 {
        debug_assert!(
            now >= self.last_now,
            "channel time went backwards: {now} < {}",
            self.last_now
        );
        self.last_now = self.last_now.max(now);
        self.last_now
    }

    fn blacked_out(&self, t: f64) -> bool {
        self.model.blackouts.iter().any(|b| t >= b.start && t < b.end)
    }

    pub fn send(&mut self, bytes: Vec<u8>, now: f64) -> SendOutcome {
        let now = self.advance(now);
        self.stats.sent += 1;
        // draw unconditionally so the random stream does not depend on blackouts
        let lost = self.model.loss_prob > 0.0 && self.rng.random::<f64>() < self.model.loss_prob;
        if lost || self.blacked_out(now) {
            self.stats.dropped += 1;
            return SendOutcome::Dropped;
        }
        let bits = bytes.len() as f64 * 8.0;
        let serialized_at = if self.model.bandwidth_limit.is_finite() {
            let done = now.max(self.link_free_at) + bits / self.model.bandwidth_limit;
            self.link_free_at = done;
            done
        } else {
            now
        };
        let jitter = match &self.jitter {
            Some(n) => {
                let clip = JITTER_CLIP_SIGMA * self.model.jitter_std;
                n.sample(&mut self.rng).clamp(-clip, clip)
            }
            None => 0.0,
        };
        let deliver_at = (serialized_at + self.model.base_latency + jitter).max(now + MIN_DELAY);
        self.in_flight.push(InFlight {
            deliver_at,
            order: self.next_order,
            sent_at: now,
            bytes,
        });
        self.next_order += 1;
        SendOutcome::Scheduled { deliver_at }
    }

    /// Every packet due by `now`, earliest first.
    pub fn poll(&mut self, now: f64) -> Vec<Delivery> {
        let now = self.advance(now);
        let mut out = Vec::new();
        while self.in_flight.peek().is_some_and(|p| p.deliver_at <= now) {
            let p = self.in_flight.pop().expect("peeked");
            self.delivered_bits.push_back((p.deliver_at, p.bytes.len() as u64 * 8));
            out.push(Delivery {
                bytes: p.bytes,
                sent_at: p.sent_at,
                delivered_at: p.deliver_at,
            });
        }
        self.stats.delivered += out.len() as u64;
        let cutoff = now - self.meter_horizon;
        while self.delivered_bits.front().is_some_and(|(t, _)| *t < cutoff) {
            self.delivered_bits.pop_front();
        }
        out
    }

    /// Delivered bits in the trailing `window` before the last poll, per second.
    /// Windows longer than the meter horizon (10 s) are truncated to it.
    pub fn bandwidth_meter(&self, window: f64) -> f64 {
        if !(window > 0.0) || !self.last_now.is_finite() {
            return 0.0;
        }
        let from = self.last_now - window;
        let bits: u64 = self
            .delivered_bits
            .iter()
            .rev()
            .take_while(|(t, _)| *t > from)
            .map(|(_, b)| *b)
            .sum();
        bits as f64 / window
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ideal(base: f64) -> ChannelModel {
        ChannelModel {
            base_latency: base,
            bandwidth_limit: f64::INFINITY,
            ..Default::default()
        }
    }

    #[test]
    fn rejects_bad_models() {
        for m in [
            ChannelModel {
                base_latency: -1.0,
                ..Default::default()
            },
            ChannelModel {
                loss_prob: 1.5,
                ..Default::default()
            },
            ChannelModel {
                bandwidth_limit: 0.0,
                ..Default::default()
            },
        ] {
            assert!(Channel::new(m).is_err());
        }
    }

    #[test]
    fn fixed_latency() {
        let mut ch = Channel::new(ideal(0.050)).unwrap();
        let SendOutcome::Scheduled { deliver_at } = ch.send(vec![0; 10], 0.010) else {
            panic!("dropped")
        };
        assert!((deliver_at - 0.060).abs() < 1e-15);
        assert!(ch.poll(0.059).is_empty());
        let d = ch.poll(0.0601);
        assert_eq!(d.len(), 1);
        assert!(ch.poll(1.0).is_empty());
    }

    #[test]
    fn serialization_delay_and_queueing() {
        let mut ch = Channel::new(ChannelModel::default()).unwrap();
        // 125 000 bytes = 1 Mbit at 1 Gbit/s
        let SendOutcome::Scheduled { deliver_at } = ch.send(vec![0; 125_000], 0.0) else {
            panic!()
        };
        assert!((deliver_at - 0.001).abs() < 1e-12);
        let SendOutcome::Scheduled { deliver_at } = ch.send(vec![0; 125_000], 0.0) else {
            panic!()
        };
        assert!((deliver_at - 0.002).abs() < 1e-12);
    }

    #[test]
    fn total_loss() {
        let mut ch = Channel::new(ChannelModel {
            loss_prob: 1.0,
            ..Default::default()
        })
        .unwrap();
        for i in 0..1000 {
            ch.send(vec![1, 2, 3], i as f64 * 0.001);
        }
        assert!(ch.poll(100.0).is_empty());
        assert_eq!(ch.stats().dropped, 1000);
    }

    #[test]
    fn blackout_drops_everything_inside_window() {
        let mut ch = Channel::new(ChannelModel {
            blackouts: vec![Blackout { start: 0.1, end: 0.3 }],
            ..ideal(0.0)
        })
        .unwrap();
        assert!(matches!(ch.send(vec![0], 0.05), SendOutcome::Scheduled { .. }));
        assert_eq!(ch.send(vec![0], 0.1), SendOutcome::Dropped);
        assert_eq!(ch.send(vec![0], 0.29), SendOutcome::Dropped);
        assert!(matches!(ch.send(vec![0], 0.3), SendOutcome::Scheduled { .. }));
    }

    #[test]
    fn delivery_order_follows_latency() {
        let mut ch = Channel::new(ideal(0.0)).unwrap();
        ch.model.base_latency = 0.050;
        ch.send(vec![50], 0.0);
        ch.model.base_latency = 0.030;
        ch.send(vec![30], 0.0);
        let d = ch.poll(0.1);
        assert_eq!(d.iter().map(|d| d.bytes[0]).collect::<Vec<_>>(), vec![30, 50]);
    }

    #[test]
    fn ties_are_fifo() {
        let mut ch = Channel::new(ideal(0.01)).unwrap();
        for i in 0..10u8 {
            ch.send(vec![i], 0.0);
        }
        let got: Vec<u8> = ch.poll(1.0).into_iter().map(|d| d.bytes[0]).collect();
        assert_eq!(got, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn jitter_is_causal_and_clipped() {
        let mut ch = Channel::new(ChannelModel {
            base_latency: 0.001,
            jitter_std: 0.01,
            bandwidth_limit: f64::INFINITY,
            rng_seed: 3,
            ..Default::default()
        })
        .unwrap();
        for i in 0..10_000 {
            let now = i as f64 * 1e-4;
            if let SendOutcome::Scheduled { deliver_at } = ch.send(vec![0], now) {
                assert!(deliver_at > now);
                assert!(deliver_at <= now + 0.001 + 0.03 + 1e-12);
            }
        }
    }

    #[test]
    fn idle_meter_reads_zero() {
        let mut ch = Channel::new(ChannelModel::default()).unwrap();
        assert_eq!(ch.bandwidth_meter(1.0), 0.0);
        ch.poll(5.0);
        assert_eq!(ch.bandwidth_meter(1.0), 0.0);
    }
}
