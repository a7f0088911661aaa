//! Non-learning comparison controllers.
//!
//! Every controller is driven the same way: it picks a rate for the next
//! monitor interval from the report of the previous one.

use crate::netsim::{MiReport, RATE_FLOOR};
use crate::{Error, Result};

/// A sender-side rate controller.
pub trait Controller: Send {
    fn name(&self) -> &str;

    /// Rate for the first monitor interval, packets per second.
    fn initial_rate(&self) -> f64;

    /// Consumes a completed interval's report and returns the next rate.
    fn observe(&mut self, report: &MiReport) -> f64;
}

/// Piecewise-constant link capacity, packets per second.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacitySchedule {
    // (start time, capacity), sorted, first start at 0
    steps: Vec<(f64, f64)>,
}

impl CapacitySchedule {
    pub fn new(steps: Vec<(f64, f64)>) -> Result<Self> {
        if steps.first().map(|s| s.0) != Some(0.0) {
            return Err(Error::arg("capacity schedule must start at t = 0"));
        }
        if steps.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::arg("capacity schedule times must increase"));
        }
        if steps
            .iter()
            .any(|&(t, c)| !(t.is_finite() && c.is_finite() && c > 0.0))
        {
            return Err(Error::arg(
                "capacity schedule entries must be finite and positive",
            ));
        }
        Ok(CapacitySchedule { steps })
    }

    pub fn constant(capacity: f64) -> Result<Self> {
        CapacitySchedule::new(vec![(0.0, capacity)])
    }

    pub fn steps(&self) -> &[(f64, f64)] {
        &self.steps
    }

    /// Capacity in effect at time `t`.
    pub fn at(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::arg(format!("time must be >= 0, got {t}")));
        }
        let i = self.steps.partition_point(|&(s, _)| s <= t);
        Ok(self.steps[i - 1].1)
    }

    /// Time-averaged capacity over `[t0, t1]`.
    pub fn mean_over(&self, t0: f64, t1: f64) -> Result<f64> {
        if !(t1 > t0) {
            return self.at(t0);
        }
        let at_start = self.at(t0)?;
        let mut area = 0.0;
        let mut t = t0;
        let mut cap = at_start;
        for &(s, c) in self.steps.iter().filter(|&&(s, _)| s > t0 && s < t1) {
            area += cap * (s - t);
            t = s;
            cap = c;
        }
        area += cap * (t1 - t);
        Ok(area / (t1 - t0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AimdPhase {
    SlowStart,
    CongestionAvoidance,
}

/// Window state of the loss-halving sender.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AimdState {
    /// Congestion window, packets.
    pub cwnd: f64,
    /// Slow-start threshold, packets.
    pub ssthresh: f64,
    /// Smoothed round-trip time, seconds.
    pub rtt_estimate: f64,
    pub phase: AimdPhase,
}

pub const AIMD_INITIAL_CWND: f64 = 10.0;
pub const RTT_SMOOTHING: f64 = 0.875;

impl AimdState {
    pub fn new(initial_rtt: f64) -> Self {
        AimdState {
            cwnd: AIMD_INITIAL_CWND,
            ssthresh: f64::INFINITY,
            rtt_estimate: initial_rtt,
            phase: AimdPhase::SlowStart,
        }
    }

    pub fn rate(&self) -> f64 {
        (self.cwnd / self.rtt_estimate).max(RATE_FLOOR)
    }
}

/// One window update from a completed interval; returns the new state and
/// the rate `cwnd / rtt_estimate`.
pub fn aimd_step(state: AimdState, report: &MiReport) -> (AimdState, f64) {
    let mut s = state;
    if report.acked > 0 {
        s.rtt_estimate = RTT_SMOOTHING * s.rtt_estimate + (1.0 - RTT_SMOOTHING) * report.mean_latency;
    }
    if report.lost > 0 {
        let half = s.cwnd / 2.0;
        s.ssthresh = half.max(2.0);
        s.cwnd = half.max(1.0);
        s.phase = AimdPhase::CongestionAvoidance;
    } else {
        let rtts = report.mi_duration / s.rtt_estimate;
        match s.phase {
            AimdPhase::SlowStart => {
                s.cwnd *= 2f64.powf(rtts);
                if s.cwnd >= s.ssthresh {
                    s.phase = AimdPhase::CongestionAvoidance;
                }
            }
            AimdPhase::CongestionAvoidance => s.cwnd += rtts,
        }
    }
    (s, s.rate())
}

/// Reno-style AIMD sender, labelled `tcp-like`.
#[derive(Debug, Clone)]
pub struct TcpLike {
    state: AimdState,
}

impl TcpLike {
    pub const NAME: &'static str = "tcp-like";

    /// `initial_rtt` seeds the RTT estimate, usually the path's propagation round trip.
    pub fn new(initial_rtt: f64) -> Result<Self> {
        if !(initial_rtt.is_finite() && initial_rtt > 0.0) {
            return Err(Error::arg(format!(
                "initial rtt must be positive, got {initial_rtt}"
            )));
        }
        Ok(TcpLike {
            state: AimdState::new(initial_rtt),
        })
    }

    pub fn state(&self) -> &AimdState {
        &self.state
    }
}

impl Controller for TcpLike {
    fn name(&self) -> &str {
        Self::NAME
    }

    fn initial_rate(&self) -> f64 {
        self.state.rate()
    }

    fn observe(&mut self, report: &MiReport) -> f64 {
        let (next, rate) = aimd_step(self.state, report);
        self.state = next;
        rate
    }
}

/// Sends at the bottleneck capacity in effect when each interval starts.
#[derive(Debug, Clone)]
pub struct Oracle {
    schedule: CapacitySchedule,
}

impl Oracle {
    pub const NAME: &'static str = "oracle";

    pub fn new(schedule: CapacitySchedule) -> Self {
        Oracle { schedule }
    }

    pub fn rate_at(&self, t: f64) -> Result<f64> {
        self.schedule.at(t)
    }
}

impl Controller for Oracle {
    fn name(&self) -> &str {
        Self::NAME
    }

    fn initial_rate(&self) -> f64 {
        self.schedule.steps[0].1
    }

    fn observe(&mut self, report: &MiReport) -> f64 {
        self.schedule
            .at(report.end_time.max(0.0))
            .expect("report times are non-negative")
    }
}
