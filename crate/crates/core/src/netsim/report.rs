/// Aggregated measurements for the packets a sender emitted during one
/// monitor interval.
///
/// A report is complete once every packet sent inside the interval has
/// been acknowledged or reported lost, so `sent == acked + lost`.
#[derive(Debug, Clone, PartialEq)]
pub struct MiReport {
    pub sender_id: usize,
    pub mi_index: u64,
    /// Simulated time at which the interval started.
    pub start_time: f64,
    /// Simulated time at which the last packet of the interval was resolved.
    pub end_time: f64,
    pub mi_duration: f64,
    pub sent: u64,
    pub acked: u64,
    pub lost: u64,
    /// Mean round-trip latency over acknowledged packets, 0 when none were.
    pub mean_latency: f64,
    pub rate_used: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiStats {
    /// Acknowledged packets per second of interval.
    pub throughput: f64,
    pub latency: f64,
    pub loss: f64,
}

impl MiReport {
    pub fn stats(&self) -> MiStats {
        mi_stats(self)
    }
}

pub fn mi_stats(report: &MiReport) -> MiStats {
    let throughput = report.acked as f64 / report.mi_duration;
    let latency = if report.acked == 0 {
        0.0
    } else {
        report.mean_latency
    };
    let loss = if report.sent == 0 {
        0.0
    } else {
        report.lost as f64 / report.sent as f64
    };
    MiStats {
        throughput,
        latency,
        loss,
    }
}
