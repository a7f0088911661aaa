//! Monitor-interval features, reward and the rate-update rule.

mod env;

use std::collections::VecDeque;

use num_traits::Num;

use crate::netsim::{MiReport, RATE_FLOOR};
use crate::{Error, Result};

pub use env::{env_reset, EnvConfig, EnvParams, EnvState, EpisodeTraceRow, ParamRange, StepResult};

pub const LATENCY_GRADIENT_BOUNDS: (f64, f64) = (-10.0, 10.0);
pub const LATENCY_RATIO_BOUNDS: (f64, f64) = (1.0, 10_000.0);
pub const SEND_RATIO_BOUNDS: (f64, f64) = (1.0, 1_000.0);

/// Rate-update damping used unless configured otherwise.
pub const DEFAULT_ALPHA: f64 = 0.025;

/// Scale-free summary of one monitor interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatVector {
    /// Change in mean latency per second of interval.
    pub latency_gradient: f64,
    /// Mean latency over the smallest mean latency seen so far.
    pub latency_ratio: f64,
    /// Packets sent per packet acknowledged.
    pub send_ratio: f64,
}

impl StatVector {
    /// The steady, uncongested state; flattens to zeros.
    pub const REST: StatVector = StatVector {
        latency_gradient: 0.0,
        latency_ratio: 1.0,
        send_ratio: 1.0,
    };

    /// Centered components: (gradient, ratio - 1, send ratio - 1).
    pub fn centered(&self) -> [f64; 3] {
        [
            self.latency_gradient,
            self.latency_ratio - 1.0,
            self.send_ratio - 1.0,
        ]
    }
}

/// Derives the statistics vector for `cur`.
///
/// An interval with no acknowledgements carries `prev_mean_latency`
/// forward as its latency, and its send ratio saturates when anything was
/// sent. With no latency sample yet (`running_min_latency <= 0`) the ratio is 1.
pub fn compute_stat_vector(cur: &MiReport, prev_mean_latency: f64, running_min_latency: f64) -> StatVector {
    let latency = if cur.acked > 0 {
        cur.mean_latency
    } else {
        prev_mean_latency
    };
    let gradient = if prev_mean_latency > 0.0 && latency > 0.0 {
        (latency - prev_mean_latency) / cur.mi_duration
    } else {
        0.0
    };
    let ratio = if running_min_latency > 0.0 && latency > 0.0 {
        latency / running_min_latency
    } else {
        1.0
    };
    let send_ratio = match (cur.sent, cur.acked) {
        (0, _) => 1.0,
        (_, 0) => SEND_RATIO_BOUNDS.1,
        (s, a) => s as f64 / a as f64,
    };
    StatVector {
        latency_gradient: clip(gradient, LATENCY_GRADIENT_BOUNDS),
        latency_ratio: clip(ratio, LATENCY_RATIO_BOUNDS),
        send_ratio: clip(send_ratio, SEND_RATIO_BOUNDS),
    }
}

fn clip(x: f64, (lo, hi): (f64, f64)) -> f64 {
    if x.is_nan() {
        lo
    } else {
        x.clamp(lo, hi)
    }
}

/// Fixed-length window of statistics vectors, oldest first.
///
/// The window holds the `k` vectors that precede the `d` most recent
/// intervals; the newest `d` are buffered but hidden from the state.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationHistory {
    k: usize,
    d: usize,
    // k + d entries, oldest first, rest-padded
    entries: VecDeque<StatVector>,
    running_min_latency: f64,
    prev_mean_latency: f64,
}

impl ObservationHistory {
    pub fn new(k: usize, d: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::arg("history length k must be at least 1"));
        }
        Ok(ObservationHistory {
            k,
            d,
            entries: std::iter::repeat_n(StatVector::REST, k + d).collect(),
            running_min_latency: f64::INFINITY,
            prev_mean_latency: 0.0,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn delay(&self) -> usize {
        self.d
    }

    /// The `k` visible vectors, oldest first.
    pub fn window(&self) -> impl Iterator<Item = &StatVector> {
        self.entries.iter().take(self.k)
    }

    /// Smallest per-interval mean latency seen; 0 before the first sample.
    pub fn running_min_latency(&self) -> f64 {
        if self.running_min_latency.is_finite() {
            self.running_min_latency
        } else {
            0.0
        }
    }

    pub fn push(&mut self, v: StatVector) {
        self.entries.pop_front();
        self.entries.push_back(v);
    }

    /// Folds a latency sample into the running minimum.
    pub fn observe_latency(&mut self, mean_latency: f64) {
        if mean_latency > 0.0 {
            self.running_min_latency = self.running_min_latency.min(mean_latency);
        }
    }

    /// Updates the running minimum with `report`, derives its statistics
    /// vector and pushes it.
    pub fn record(&mut self, report: &MiReport) -> StatVector {
        if report.acked > 0 {
            self.observe_latency(report.mean_latency);
        }
        let v = compute_stat_vector(report, self.prev_mean_latency, self.running_min_latency());
        if report.acked > 0 {
            self.prev_mean_latency = report.mean_latency;
        }
        self.push(v);
        v
    }

    /// The state vector: `3k` values, oldest interval first.
    pub fn flatten(&self) -> Vec<f64> {
        self.window().flat_map(|v| v.centered()).collect()
    }
}

/// Weights of the linear reward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardWeights {
    pub throughput: f64,
    pub latency: f64,
    pub loss: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights {
            throughput: 10.0,
            latency: 1000.0,
            loss: 2000.0,
        }
    }
}

impl RewardWeights {
    pub fn reward(&self, throughput: f64, latency: f64, loss: f64) -> f64 {
        linear_reward(
            throughput,
            latency,
            loss,
            (self.throughput, self.latency, self.loss),
        )
    }
}

/// `10 * throughput - 1000 * latency - 2000 * loss`, with throughput in
/// packets per second, latency in seconds and loss as a fraction.
pub fn reward(throughput: f64, latency: f64, loss: f64) -> f64 {
    RewardWeights::default().reward(throughput, latency, loss)
}

/// The reward formula over any numeric type, so it can be checked in exact arithmetic.
pub fn linear_reward<T: Num + Clone>(throughput: T, latency: T, loss: T, weights: (T, T, T)) -> T {
    weights.0 * throughput - weights.1 * latency - weights.2 * loss
}

/// Applies action `a` to the previous rate: multiply by `1 + alpha * a`
/// for `a >= 0`, divide by `1 - alpha * a` otherwise. The result never
/// drops below [`RATE_FLOOR`].
pub fn apply_action(rate_prev: f64, a: f64, alpha: f64) -> Result<f64> {
    if !a.is_finite() {
        return Err(Error::arg(format!("action must be finite, got {a}")));
    }
    Ok(scale_rate(rate_prev, a, alpha).max(RATE_FLOOR))
}

/// The unclamped two-branch rate update over any numeric type.
pub fn scale_rate<T: Num + PartialOrd + Clone>(rate_prev: T, a: T, alpha: T) -> T {
    if a >= T::zero() {
        rate_prev * (T::one() + alpha * a)
    } else {
        rate_prev / (T::one() - alpha * a)
    }
}
