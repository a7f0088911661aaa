//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use ccrl::features::{EnvConfig, EnvParams};
use ccrl::netsim::{make_network, LinkSpec, MiReport, Network, SimEvent};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Watches simulator events and records every invariant violation.
pub struct Checker {
    pub link_specs: Vec<LinkSpec>,
    last_time: f64,
    last_departure: Vec<f64>,
    last_delivered_send: f64,
    pub delivered: u64,
    pub violations: Vec<String>,
}

impl Checker {
    pub fn new(link_specs: Vec<LinkSpec>) -> Self {
        let n = link_specs.len();
        Checker {
            link_specs,
            last_time: 0.0,
            last_departure: vec![f64::NEG_INFINITY; n],
            last_delivered_send: f64::NEG_INFINITY,
            delivered: 0,
            violations: Vec::new(),
        }
    }

    pub fn on_event(&mut self, net: &Network, ev: &SimEvent) {
        let problems = net.audit();
        self.violations.extend(problems);
        let s = &net.senders()[0];
        if s.total_sent() != s.total_acked() + s.total_lost() + s.in_flight() {
            self.violations.push("conservation".into());
        }
        let time = match *ev {
            SimEvent::Enqueued {
                link,
                time,
                departure,
                ..
            } => {
                if let Some(d) = departure {
                    if d <= self.last_departure[link] {
                        self.violations.push(format!(
                            "FIFO on link {link}: {d} after {}",
                            self.last_departure[link]
                        ));
                    }
                    self.last_departure[link] = d;
                }
                let occ = net.links()[link].occupancy(time);
                if occ > self.link_specs[link].queue_size {
                    self.violations.push(format!("link {link} holds {occ}"));
                }
                time
            }
            SimEvent::Delivered {
                time,
                send_time,
                latency,
                ..
            } => {
                let floor: f64 = self
                    .link_specs
                    .iter()
                    .map(|l| 2.0 * l.base_latency + 1.0 / l.bandwidth)
                    .sum();
                if latency < floor - 1e-9 {
                    self.violations
                        .push(format!("latency {latency} below floor {floor}"));
                }
                if (time - (send_time + latency)).abs() > 1e-9 {
                    self.violations
                        .push("delivery time != send time + latency".into());
                }
                if send_time < self.last_delivered_send {
                    self.violations.push("acks out of send order".into());
                }
                self.last_delivered_send = send_time;
                self.delivered += 1;
                time
            }
            SimEvent::LinkChanged { link, time } => {
                // queued packets were re-timed; compare against their new departures
                self.last_departure[link] = net.links()[link].next_free();
                time
            }
            SimEvent::LossNotified { time, .. } => time,
        };
        if time < self.last_time {
            self.violations
                .push(format!("time went back from {} to {time}", self.last_time));
        }
        self.last_time = time;
    }
}

pub fn random_network(seed: u64) -> (EnvParams, Network, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = EnvConfig::default().sample_params(&mut rng);
    let link = params.link();
    let net = make_network(&[link, link], &[(vec![0, 1], params.initial_rate)], seed).unwrap();
    (params, net, rng)
}

pub fn run(seed: u64, mis: usize) -> (Vec<MiReport>, Checker, f64) {
    let (params, mut net, mut rng) = random_network(seed);
    let link = params.link();
    let mut checker = Checker::new(vec![link, link]);
    let mut reports = Vec::with_capacity(mis);
    for _ in 0..mis {
        let rate = params.bandwidth * rng.gen_range(0.2..2.5);
        let dur = net.senders()[0].mi_duration();
        let rep = net
            .run_monitor_interval_observed(0, rate, dur, |n, e| checker.on_event(n, e))
            .unwrap();
        if rep.sent != rep.acked + rep.lost {
            checker
                .violations
                .push(format!("report {} unbalanced", rep.mi_index));
        }
        if rep.acked > 0 && rep.mean_latency < 4.0 * params.latency - 1e-9 {
            checker.violations.push("report latency below propagation".into());
        }
        if net.senders()[0].in_flight() != net.live_packets(0) {
            checker
                .violations
                .push("in-flight count disagrees with packet table".into());
        }
        reports.push(rep);
    }
    let elapsed = net.clock();
    (reports, checker, elapsed)
}

/// Same schedule as [`run`] without any observation.
pub fn replay(seed: u64, mis: usize) -> Vec<MiReport> {
    let (params, mut net, mut rng) = random_network(seed);
    (0..mis)
        .map(|_| {
            let rate = params.bandwidth * rng.gen_range(0.2..2.5);
            let dur = net.senders()[0].mi_duration();
            net.run_monitor_interval(0, rate, dur).unwrap()
        })
        .collect()
}
