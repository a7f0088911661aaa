use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::link::{LinkSpec, LinkState, Packet, ScheduleResult};
use super::report::MiReport;
use crate::{Error, Result};

/// Lowest sending rate a sender may be configured with, packets/second.
pub const RATE_FLOOR: f64 = 1.0;
/// Bounds on the monitor-interval length derived from the smoothed RTT.
pub const MI_DURATION_MIN: f64 = 1e-3;
pub const MI_DURATION_MAX: f64 = 1.0;
const SRTT_KEEP: f64 = 0.875;

#[derive(Debug, Clone)]
struct MiProgress {
    index: u64,
    start: f64,
    end: f64,
    rate: f64,
    sent: u64,
    acked: u64,
    lost: u64,
    latency_sum: f64,
    outstanding: u64,
}

/// A traffic source with a fixed route.
#[derive(Debug, Clone)]
pub struct SenderState {
    pub sender_id: usize,
    rate: f64,
    route: Vec<usize>,
    srtt: f64,
    sent: u64,
    acked: u64,
    lost: u64,
    in_flight: u64,
    // emissions happen at anchor + i / rate
    anchor: f64,
    emitted: u64,
    emit_generation: u32,
    next_mi: u64,
    active: Option<MiProgress>,
}

impl SenderState {
    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn route(&self) -> &[usize] {
        &self.route
    }

    /// Smoothed RTT estimate, seeded with the route's round-trip propagation delay.
    pub fn srtt(&self) -> f64 {
        self.srtt
    }

    /// Length of the next monitor interval: the smoothed RTT, clamped.
    pub fn mi_duration(&self) -> f64 {
        self.srtt.clamp(MI_DURATION_MIN, MI_DURATION_MAX)
    }

    pub fn total_sent(&self) -> u64 {
        self.sent
    }

    pub fn total_acked(&self) -> u64 {
        self.acked
    }

    pub fn total_lost(&self) -> u64 {
        self.lost
    }

    pub fn in_flight(&self) -> u64 {
        self.in_flight
    }

    /// Packets sent, acked and lost so far in the monitor interval in progress.
    pub fn current_mi_counters(&self) -> Option<(u64, u64, u64)> {
        self.active.as_ref().map(|m| (m.sent, m.acked, m.lost))
    }
}

/// Something observable that happened inside the simulator.
#[derive(Debug, Clone, PartialEq)]
pub enum SimEvent {
    Enqueued {
        link: usize,
        sender: usize,
        time: f64,
        /// `None` when the packet was dropped on arrival.
        departure: Option<f64>,
    },
    Delivered {
        sender: usize,
        time: f64,
        send_time: f64,
        latency: f64,
    },
    LossNotified {
        sender: usize,
        time: f64,
    },
    LinkChanged {
        link: usize,
        time: f64,
    },
}

#[derive(Debug, Clone)]
enum Event {
    Emit { sender: usize, generation: u32 },
    Arrive { packet: usize, token: u64 },
    Deliver { packet: usize, token: u64 },
    LossNotice { packet: usize },
    LinkChange { link: usize, spec: LinkSpec },
}

#[derive(Debug, Clone)]
struct Scheduled {
    time: f64,
    seq: u64,
    event: Event,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// reversed: BinaryHeap is a max-heap and we want the earliest event first
impl Ord for Scheduled {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// A set of links and senders driven by a single event queue.
#[derive(Debug, Clone)]
pub struct Network {
    links: Vec<LinkState>,
    senders: Vec<SenderState>,
    events: BinaryHeap<Scheduled>,
    seq: u64,
    clock: f64,
    rng: ChaCha8Rng,
    packets: Vec<Option<Packet>>,
    free_slots: Vec<usize>,
    // scheduling tokens let superseded packet events be recognized
    next_token: u64,
}

/// Builds a network. Each sender is given as `(route, initial_rate)`;
/// acknowledgements retrace the route in reverse.
pub fn make_network(
    link_specs: &[LinkSpec],
    sender_inits: &[(Vec<usize>, f64)],
    seed: u64,
) -> Result<Network> {
    for spec in link_specs {
        spec.validate()?;
    }
    let mut net = Network {
        links: link_specs.iter().copied().map(LinkState::new).collect(),
        senders: Vec::with_capacity(sender_inits.len()),
        events: BinaryHeap::new(),
        seq: 0,
        clock: 0.0,
        rng: ChaCha8Rng::seed_from_u64(seed),
        packets: Vec::new(),
        free_slots: Vec::new(),
        next_token: 0,
    };
    for (sender_id, (route, rate)) in sender_inits.iter().enumerate() {
        if route.is_empty() {
            return Err(Error::arg(format!("sender {sender_id} has an empty route")));
        }
        if let Some(&link) = route.iter().find(|&&l| l >= link_specs.len()) {
            return Err(Error::InvalidRoute {
                sender: sender_id,
                link,
                n_links: link_specs.len(),
            });
        }
        check_rate(*rate)?;
        let rtt = 2.0 * route.iter().map(|&l| link_specs[l].base_latency).sum::<f64>();
        net.senders.push(SenderState {
            sender_id,
            rate: *rate,
            route: route.clone(),
            srtt: rtt,
            sent: 0,
            acked: 0,
            lost: 0,
            in_flight: 0,
            anchor: 0.0,
            emitted: 0,
            emit_generation: 0,
            next_mi: 0,
            active: None,
        });
        net.push(
            0.0,
            Event::Emit {
                sender: sender_id,
                generation: 0,
            },
        );
    }
    Ok(net)
}

fn check_rate(rate: f64) -> Result<()> {
    if !rate.is_finite() || rate < RATE_FLOOR {
        return Err(Error::arg(format!(
            "sending rate must be finite and >= {RATE_FLOOR} pps, got {rate}"
        )));
    }
    Ok(())
}

impl Network {
    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn links(&self) -> &[LinkState] {
        &self.links
    }

    pub fn senders(&self) -> &[SenderState] {
        &self.senders
    }

    pub fn sender(&self, id: usize) -> Option<&SenderState> {
        self.senders.get(id)
    }

    /// Packets queued on all links at the current clock.
    pub fn queued_packets(&self) -> usize {
        self.links.iter().map(|l| l.occupancy(self.clock)).sum()
    }

    /// Live packets belonging to `sender`, counted from the packet table.
    pub fn live_packets(&self, sender: usize) -> u64 {
        self.packets
            .iter()
            .flatten()
            .filter(|p| p.sender_id == sender)
            .count() as u64
    }

    /// Time of the earliest pending event.
    pub fn next_event_time(&self) -> Option<f64> {
        self.events.peek().map(|e| e.time)
    }

    /// Round-trip propagation delay along a sender's route.
    pub fn route_rtt(&self, sender: usize) -> f64 {
        2.0 * self.forward_latency(sender, 0)
    }

    fn forward_latency(&self, sender: usize, from_hop: usize) -> f64 {
        self.senders[sender].route[from_hop..]
            .iter()
            .map(|&l| self.links[l].spec().base_latency)
            .sum()
    }

    /// Replaces a link's parameters at simulated time `at`.
    pub fn schedule_link_change(&mut self, link: usize, at: f64, spec: LinkSpec) -> Result<()> {
        spec.validate()?;
        if link >= self.links.len() {
            return Err(Error::arg(format!("no link {link}")));
        }
        if !(at >= self.clock) {
            return Err(Error::arg(format!(
                "link change at {at} is earlier than the clock {}",
                self.clock
            )));
        }
        self.push(at, Event::LinkChange { link, spec });
        Ok(())
    }

    /// Lists violated structural invariants; empty when healthy.
    pub fn audit(&self) -> Vec<String> {
        let mut problems = Vec::new();
        for s in &self.senders {
            if s.sent != s.acked + s.lost + s.in_flight {
                problems.push(format!(
                    "sender {}: sent {} != acked {} + lost {} + in flight {}",
                    s.sender_id, s.sent, s.acked, s.lost, s.in_flight
                ));
            }
        }
        for (i, l) in self.links.iter().enumerate() {
            let occ = l.occupancy(self.clock);
            if occ > l.spec().queue_size {
                problems.push(format!(
                    "link {i}: occupancy {occ} exceeds queue size {}",
                    l.spec().queue_size
                ));
            }
        }
        if let Some(t) = self.next_event_time() {
            if t < self.clock {
                problems.push(format!("pending event at {t} precedes clock {}", self.clock));
            }
        }
        problems
    }

    /// Runs one monitor interval for `sender_id` at a fixed `rate`.
    ///
    /// The sender emits uniformly spaced packets for `mi_duration` seconds.
    /// The simulation then keeps going, with the sender still transmitting
    /// at the same rate, until every packet of the interval is acknowledged
    /// or reported lost. Packets emitted after the interval closes load the
    /// network but belong to no report.
    pub fn run_monitor_interval(
        &mut self,
        sender_id: usize,
        rate: f64,
        mi_duration: f64,
    ) -> Result<MiReport> {
        self.run_monitor_interval_observed(sender_id, rate, mi_duration, |_, _| {})
    }

    /// Like [`Network::run_monitor_interval`], calling `observe` after every
    /// processed event.
    pub fn run_monitor_interval_observed<F>(
        &mut self,
        sender_id: usize,
        rate: f64,
        mi_duration: f64,
        mut observe: F,
    ) -> Result<MiReport>
    where
        F: FnMut(&Network, &SimEvent),
    {
        if sender_id >= self.senders.len() {
            return Err(Error::arg(format!("no sender {sender_id}")));
        }
        check_rate(rate)?;
        if !(mi_duration.is_finite() && mi_duration > 0.0) {
            return Err(Error::arg(format!(
                "monitor interval must be positive, got {mi_duration}"
            )));
        }
        self.set_rate(sender_id, rate);
        let start = self.clock;
        let end = start + mi_duration;
        let sender = &mut self.senders[sender_id];
        let index = sender.next_mi;
        sender.next_mi += 1;
        sender.active = Some(MiProgress {
            index,
            start,
            end,
            rate,
            sent: 0,
            acked: 0,
            lost: 0,
            latency_sum: 0.0,
            outstanding: 0,
        });

        loop {
            let outstanding = self.senders[sender_id]
                .active
                .as_ref()
                .map_or(0, |m| m.outstanding);
            match self.next_event_time() {
                Some(t) if t < end || outstanding > 0 => {
                    if let Some(ev) = self.process_next() {
                        observe(self, &ev);
                    }
                }
                _ => break,
            }
        }
        self.clock = self.clock.max(end);

        let sender = &mut self.senders[sender_id];
        let mi = sender.active.take().expect("interval in progress");
        let mean_latency = if mi.acked > 0 {
            mi.latency_sum / mi.acked as f64
        } else {
            0.0
        };
        if mi.acked > 0 {
            sender.srtt = SRTT_KEEP * sender.srtt + (1.0 - SRTT_KEEP) * mean_latency;
        }
        Ok(MiReport {
            sender_id,
            mi_index: mi.index,
            start_time: mi.start,
            end_time: self.clock,
            mi_duration,
            sent: mi.sent,
            acked: mi.acked,
            lost: mi.lost,
            mean_latency,
            rate_used: mi.rate,
        })
    }

    fn push(&mut self, time: f64, event: Event) {
        self.seq += 1;
        self.events.push(Scheduled {
            time,
            seq: self.seq,
            event,
        });
    }

    fn set_rate(&mut self, sender_id: usize, rate: f64) {
        let now = self.clock;
        let s = &mut self.senders[sender_id];
        let pending = s.anchor + s.emitted as f64 / s.rate;
        let remaining = (pending - now).max(0.0);
        s.anchor = now + remaining * s.rate / rate;
        s.emitted = 0;
        s.rate = rate;
        s.emit_generation = s.emit_generation.wrapping_add(1);
        let (time, generation) = (s.anchor, s.emit_generation);
        self.push(
            time,
            Event::Emit {
                sender: sender_id,
                generation,
            },
        );
    }

    fn alloc(&mut self, mut packet: Packet) -> usize {
        match self.free_slots.pop() {
            Some(slot) => {
                packet.id = slot;
                self.packets[slot] = Some(packet);
                slot
            }
            None => {
                let slot = self.packets.len();
                packet.id = slot;
                self.packets.push(Some(packet));
                slot
            }
        }
    }

    fn token_matches(&self, packet: usize, token: u64) -> bool {
        matches!(self.packets.get(packet), Some(Some(p)) if p.token == token)
    }

    fn release(&mut self, id: usize) -> Packet {
        let p = self.packets[id].take().expect("live packet");
        self.free_slots.push(id);
        p
    }

    /// Pops and applies one event. Returns `None` for superseded events.
    fn process_next(&mut self) -> Option<SimEvent> {
        let Scheduled { time, event, .. } = self.events.pop()?;
        debug_assert!(time >= self.clock);
        match event {
            Event::Emit { sender, generation } => {
                if self.senders[sender].emit_generation != generation {
                    return None;
                }
                self.clock = time;
                Some(self.emit(sender, time))
            }
            Event::Arrive { packet, token } => {
                if !self.token_matches(packet, token) {
                    return None;
                }
                self.clock = time;
                self.packets[packet].as_mut().expect("live packet").hop += 1;
                Some(self.forward(packet, time))
            }
            Event::Deliver { packet, token } => {
                if !self.token_matches(packet, token) {
                    return None;
                }
                self.clock = time;
                let p = self.release(packet);
                let s = &mut self.senders[p.sender_id];
                s.acked += 1;
                s.in_flight -= 1;
                if let Some(mi) = s.active.as_mut().filter(|m| Some(m.index) == p.mi) {
                    mi.acked += 1;
                    mi.latency_sum += p.latency;
                    mi.outstanding -= 1;
                }
                Some(SimEvent::Delivered {
                    sender: p.sender_id,
                    time,
                    send_time: p.send_time,
                    latency: p.latency,
                })
            }
            Event::LossNotice { packet } => {
                self.clock = time;
                let p = self.release(packet);
                let s = &mut self.senders[p.sender_id];
                s.lost += 1;
                s.in_flight -= 1;
                if let Some(mi) = s.active.as_mut().filter(|m| Some(m.index) == p.mi) {
                    mi.lost += 1;
                    mi.outstanding -= 1;
                }
                Some(SimEvent::LossNotified {
                    sender: p.sender_id,
                    time,
                })
            }
            Event::LinkChange { link, spec } => {
                self.clock = time;
                for moved in self.links[link].set_spec(spec, time) {
                    self.next_token += 1;
                    let token = self.next_token;
                    let (hop, route_len, send_time, latency) = {
                        let p = self.packets[moved.packet].as_mut().expect("queued packet");
                        p.token = token;
                        p.latency += moved.latency_delta;
                        (
                            p.hop,
                            self.senders[p.sender_id].route.len(),
                            p.send_time,
                            p.latency,
                        )
                    };
                    if hop + 1 < route_len {
                        self.push(
                            moved.departure + spec.base_latency,
                            Event::Arrive {
                                packet: moved.packet,
                                token,
                            },
                        );
                    } else {
                        self.push(
                            send_time + latency,
                            Event::Deliver {
                                packet: moved.packet,
                                token,
                            },
                        );
                    }
                }
                Some(SimEvent::LinkChanged { link, time })
            }
        }
    }

    fn emit(&mut self, sender_id: usize, now: f64) -> SimEvent {
        let s = &mut self.senders[sender_id];
        let mi = s.active.as_mut().filter(|m| now < m.end).map(|m| {
            m.sent += 1;
            m.outstanding += 1;
            m.index
        });
        s.sent += 1;
        s.in_flight += 1;
        s.emitted += 1;
        let next = s.anchor + s.emitted as f64 / s.rate;
        let generation = s.emit_generation;
        self.push(
            next,
            Event::Emit {
                sender: sender_id,
                generation,
            },
        );
        let mut packet = Packet::new(sender_id, now);
        packet.mi = mi;
        let id = self.alloc(packet);
        self.forward(id, now)
    }

    /// Offers a packet to the link at its current hop and schedules what follows.
    fn forward(&mut self, id: usize, now: f64) -> SimEvent {
        let (sender_id, hop) = {
            let p = self.packets[id].as_ref().expect("live packet");
            (p.sender_id, p.hop)
        };
        let route_len = self.senders[sender_id].route.len();
        let link_id = self.senders[sender_id].route[hop];
        let packet = self.packets[id].as_mut().expect("live packet");
        let result = self.links[link_id].enqueue_packet(packet, now, &mut self.rng);
        self.next_token += 1;
        let token = self.next_token;
        packet.token = token;
        match result {
            ScheduleResult::Departs { at } => {
                if hop + 1 < route_len {
                    let lat = self.links[link_id].spec().base_latency;
                    self.push(at + lat, Event::Arrive { packet: id, token });
                } else {
                    let back = self.forward_latency(sender_id, 0);
                    let p = self.packets[id].as_mut().expect("live packet");
                    p.latency += back;
                    let t = p.send_time + p.latency;
                    self.push(t, Event::Deliver { packet: id, token });
                }
                SimEvent::Enqueued {
                    link: link_id,
                    sender: sender_id,
                    time: now,
                    departure: Some(at),
                }
            }
            ScheduleResult::Dropped(_) => {
                // the sender learns of the drop when the ack would have come back
                let notice = now + self.forward_latency(sender_id, hop) + self.forward_latency(sender_id, 0);
                self.push(notice, Event::LossNotice { packet: id });
                SimEvent::Enqueued {
                    link: link_id,
                    sender: sender_id,
                    time: now,
                    departure: None,
                }
            }
        }
    }
}
