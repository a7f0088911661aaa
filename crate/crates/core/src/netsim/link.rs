use std::collections::VecDeque;

use rand::Rng;

use crate::{Error, Result};

/// Static parameters of a FIFO-queue link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSpec {
    /// Service rate in packets per second.
    pub bandwidth: f64,
    /// One-way propagation delay in seconds.
    pub base_latency: f64,
    /// Maximum number of packets held by the link, including the one in service.
    pub queue_size: usize,
    /// Independent per-packet drop probability.
    pub loss_rate: f64,
}

impl LinkSpec {
    pub fn new(bandwidth: f64, base_latency: f64, queue_size: usize, loss_rate: f64) -> Result<Self> {
        let spec = LinkSpec {
            bandwidth,
            base_latency,
            queue_size,
            loss_rate,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth.is_finite() && self.bandwidth > 0.0) {
            return Err(Error::arg(format!(
                "link bandwidth must be > 0, got {}",
                self.bandwidth
            )));
        }
        if !(self.base_latency.is_finite() && self.base_latency >= 0.0) {
            return Err(Error::arg(format!(
                "link latency must be >= 0, got {}",
                self.base_latency
            )));
        }
        if self.queue_size < 1 {
            return Err(Error::arg("link queue size must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.loss_rate) {
            return Err(Error::arg(format!(
                "link loss rate must be in [0, 1], got {}",
                self.loss_rate
            )));
        }
        Ok(())
    }
}

/// The simulator's unit of traffic.
#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub sender_id: usize,
    pub send_time: f64,
    /// Latency accumulated so far, in seconds.
    pub latency: f64,
    pub is_dropped: bool,
    pub(crate) id: usize,
    pub(crate) hop: usize,
    pub(crate) mi: Option<u64>,
    pub(crate) token: u64,
}

impl Packet {
    pub fn new(sender_id: usize, send_time: f64) -> Self {
        Packet {
            sender_id,
            send_time,
            latency: 0.0,
            is_dropped: false,
            id: 0,
            hop: 0,
            mi: None,
            token: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropCause {
    RandomLoss,
    QueueFull,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleResult {
    /// Accepted; the packet finishes service at `at` and reaches the far end
    /// of the link one `base_latency` later.
    Departs {
        at: f64,
    },
    Dropped(DropCause),
}

#[derive(Debug, Clone, Copy)]
struct Queued {
    packet: usize,
    arrival: f64,
    start: f64,
    departure: f64,
}

/// A packet whose departure moved because the link's parameters changed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Rescheduled {
    pub packet: usize,
    pub departure: f64,
    /// Change in the packet's accumulated latency.
    pub latency_delta: f64,
}

/// A link plus its current queue.
#[derive(Debug, Clone)]
pub struct LinkState {
    spec: LinkSpec,
    queue: VecDeque<Queued>,
    next_free: f64,
}

impl LinkState {
    pub fn new(spec: LinkSpec) -> Self {
        LinkState {
            spec,
            queue: VecDeque::new(),
            next_free: 0.0,
        }
    }

    pub fn spec(&self) -> &LinkSpec {
        &self.spec
    }

    /// Time at which the server finishes the last accepted packet.
    pub fn next_free(&self) -> f64 {
        self.next_free
    }

    /// Packets waiting or in service at `now`.
    pub fn occupancy(&self, now: f64) -> usize {
        let departed = self.queue.partition_point(|q| q.departure <= now);
        self.queue.len() - departed
    }

    fn retire(&mut self, now: f64) {
        while self.queue.front().is_some_and(|q| q.departure <= now) {
            self.queue.pop_front();
        }
    }

    /// Offers `packet` to the link at time `now`.
    ///
    /// Lossy links draw exactly one uniform sample per packet, before the
    /// queue check. Accepted packets have their latency increased by the
    /// propagation delay plus the time spent queued and in service.
    pub fn enqueue_packet<R: Rng + ?Sized>(
        &mut self,
        packet: &mut Packet,
        now: f64,
        rng: &mut R,
    ) -> ScheduleResult {
        self.retire(now);
        if self.spec.loss_rate > 0.0 && rng.gen::<f64>() < self.spec.loss_rate {
            packet.is_dropped = true;
            return ScheduleResult::Dropped(DropCause::RandomLoss);
        }
        if self.queue.len() >= self.spec.queue_size {
            packet.is_dropped = true;
            return ScheduleResult::Dropped(DropCause::QueueFull);
        }
        let start = now.max(self.next_free);
        let departure = start + 1.0 / self.spec.bandwidth;
        self.next_free = departure;
        packet.latency += self.spec.base_latency + (departure - now);
        self.queue.push_back(Queued {
            packet: packet.id,
            arrival: now,
            start,
            departure,
        });
        ScheduleResult::Departs { at: departure }
    }

    /// Replaces the link parameters at time `now`.
    ///
    /// The packet in service finishes at the old rate; everything behind it
    /// is re-timed at the new rate and latency.
    pub(crate) fn set_spec(&mut self, spec: LinkSpec, now: f64) -> Vec<Rescheduled> {
        self.retire(now);
        let old_latency = self.spec.base_latency;
        self.spec = spec;
        let service = 1.0 / spec.bandwidth;
        let mut free = now;
        let mut moved = Vec::new();
        for q in self.queue.iter_mut() {
            if q.start <= now {
                free = q.departure;
                continue;
            }
            let start = q.arrival.max(free);
            let departure = start + service;
            moved.push(Rescheduled {
                packet: q.packet,
                departure,
                latency_delta: (departure - q.departure) + (spec.base_latency - old_latency),
            });
            q.start = start;
            q.departure = departure;
            free = departure;
        }
        if let Some(last) = self.queue.back() {
            self.next_free = last.departure;
        }
        moved
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(1)
    }

    #[test]
    fn single_packet_on_empty_link() {
        let mut link = LinkState::new(LinkSpec::new(100.0, 0.05, 10, 0.0).unwrap());
        let mut p = Packet::new(0, 1.0);
        let r = link.enqueue_packet(&mut p, 1.0, &mut rng());
        match r {
            ScheduleResult::Departs { at } => assert!((at - 1.01).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
        assert!((p.latency - 0.06).abs() < 1e-12);
        assert!(!p.is_dropped);
    }

    #[test]
    fn full_queue_drops() {
        let mut link = LinkState::new(LinkSpec::new(100.0, 0.05, 1, 0.0).unwrap());
        let mut r = rng();
        let mut first = Packet::new(0, 0.0);
        assert!(matches!(
            link.enqueue_packet(&mut first, 0.0, &mut r),
            ScheduleResult::Departs { .. }
        ));
        let mut second = Packet::new(0, 0.001);
        assert_eq!(
            link.enqueue_packet(&mut second, 0.001, &mut r),
            ScheduleResult::Dropped(DropCause::QueueFull)
        );
        assert!(second.is_dropped);
    }

    #[test]
    fn certain_loss_drops_everything() {
        let mut link = LinkState::new(LinkSpec::new(100.0, 0.05, 100, 1.0).unwrap());
        let mut r = rng();
        for i in 0..50 {
            let t = i as f64 * 0.1;
            let mut p = Packet::new(0, t);
            assert_eq!(
                link.enqueue_packet(&mut p, t, &mut r),
                ScheduleResult::Dropped(DropCause::RandomLoss)
            );
            assert!(p.is_dropped);
        }
    }

    #[test]
    fn back_to_back_packets_queue_in_order() {
        let mut link = LinkState::new(LinkSpec::new(10.0, 0.0, 10, 0.0).unwrap());
        let mut r = rng();
        let mut deps = Vec::new();
        for i in 0..5 {
            let mut p = Packet::new(0, 0.0);
            p.id = i;
            if let ScheduleResult::Departs { at } = link.enqueue_packet(&mut p, 0.0, &mut r) {
                deps.push(at);
            }
        }
        for (i, d) in deps.iter().enumerate() {
            assert!((d - 0.1 * (i + 1) as f64).abs() < 1e-12);
        }
        assert_eq!(link.occupancy(0.0), 5);
        assert_eq!(link.occupancy(0.25), 3);
        assert_eq!(link.occupancy(0.5), 0);
    }

    #[test]
    fn bandwidth_change_retimes_waiting_packets() {
        let mut link = LinkState::new(LinkSpec::new(10.0, 0.0, 10, 0.0).unwrap());
        let mut r = rng();
        for i in 0..3 {
            let mut p = Packet::new(0, 0.0);
            p.id = i;
            link.enqueue_packet(&mut p, 0.0, &mut r);
        }
        // first packet is in service until 0.1; the other two move to 20 pps
        let moved = link.set_spec(LinkSpec::new(20.0, 0.0, 10, 0.0).unwrap(), 0.05);
        assert_eq!(moved.len(), 2);
        assert!((moved[0].departure - 0.15).abs() < 1e-12);
        assert!((moved[1].departure - 0.20).abs() < 1e-12);
        assert!((moved[1].latency_delta - (0.20 - 0.30)).abs() < 1e-12);
        assert!((link.next_free() - 0.20).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(LinkSpec::new(0.0, 0.1, 10, 0.0).is_err());
        assert!(LinkSpec::new(10.0, -0.1, 10, 0.0).is_err());
        assert!(LinkSpec::new(10.0, 0.1, 0, 0.0).is_err());
        assert!(LinkSpec::new(10.0, 0.1, 10, 1.5).is_err());
    }
}
