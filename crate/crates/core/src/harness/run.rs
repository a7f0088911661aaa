use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::Scenario;
use crate::baselines::{Controller, Oracle, TcpLike};
use crate::features::{apply_action, reward, EpisodeTraceRow, ObservationHistory, DEFAULT_ALPHA};
use crate::netsim::{make_network, MiReport};
use crate::policy::{load_params, GaussianPolicy, ACTION_CLIP};
use crate::units::pps_to_mbps;
use crate::{Error, Result};

pub const TRACE_HEADER: &str = "mi,sim_time_s,rate_pps,throughput_pps,latency_s,loss,reward";

/// Intervals starting before this many simulated seconds are left out of summaries.
pub const WARMUP_S: f64 = 2.0;

/// Runs a trained policy deterministically, taking the mean action.
#[derive(Debug, Clone)]
pub struct PolicyController {
    name: String,
    policy: GaussianPolicy,
    history: ObservationHistory,
    alpha: f64,
    first_rate: f64,
    rate: f64,
}

impl PolicyController {
    pub fn new(name: impl Into<String>, policy: GaussianPolicy, start_rate: f64, alpha: f64) -> Result<Self> {
        let history = ObservationHistory::new(policy.k(), 0)?;
        let a = policy.mean(&history.flatten())?.clamp(-ACTION_CLIP, ACTION_CLIP);
        let first_rate = apply_action(start_rate, a, alpha)?;
        Ok(PolicyController {
            name: name.into(),
            policy,
            history,
            alpha,
            first_rate,
            rate: first_rate,
        })
    }

    pub fn policy(&self) -> &GaussianPolicy {
        &self.policy
    }
}

impl Controller for PolicyController {
    fn name(&self) -> &str {
        &self.name
    }

    fn initial_rate(&self) -> f64 {
        self.first_rate
    }

    fn observe(&mut self, report: &MiReport) -> f64 {
        self.history.record(report);
        let state = self.history.flatten();
        let a = self
            .policy
            .mean(&state)
            .expect("history matches policy input")
            .clamp(-ACTION_CLIP, ACTION_CLIP);
        self.rate = apply_action(self.rate, a, self.alpha).expect("finite action");
        self.rate
    }
}

/// Which controller to evaluate: a policy file, `tcp-like` or `oracle`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ControllerSpec {
    TcpLike,
    Oracle,
    Policy(PathBuf),
}

impl ControllerSpec {
    pub fn parse(s: &str) -> Self {
        match s {
            "tcp-like" => ControllerSpec::TcpLike,
            "oracle" => ControllerSpec::Oracle,
            path => ControllerSpec::Policy(PathBuf::from(path)),
        }
    }

    /// Name used in outputs; policies are named by their file stem.
    pub fn label(&self) -> String {
        match self {
            ControllerSpec::TcpLike => TcpLike::NAME.into(),
            ControllerSpec::Oracle => Oracle::NAME.into(),
            ControllerSpec::Policy(p) => p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string()),
        }
    }
}

/// Builds a fresh controller for one run of `scenario`. Policies start at
/// half the initial capacity.
pub fn make_controller(spec: &ControllerSpec, scenario: &Scenario) -> Result<Box<dyn Controller>> {
    Ok(match spec {
        ControllerSpec::TcpLike => Box::new(TcpLike::new(scenario.base_rtt())?),
        ControllerSpec::Oracle => Box::new(Oracle::new(scenario.schedule.clone())),
        ControllerSpec::Policy(path) => Box::new(PolicyController::new(
            spec.label(),
            load_params(path)?,
            0.5 * scenario.initial_capacity(),
            DEFAULT_ALPHA,
        )?),
    })
}

/// Aggregate performance of one run, over intervals after the warm-up.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub controller: String,
    pub scenario: String,
    pub seed: u64,
    /// Acknowledged packets per second of interval time.
    pub throughput: f64,
    /// Mean latency of acknowledged packets, seconds.
    pub latency: f64,
    /// Lost over sent packets.
    pub loss: f64,
    pub reward: f64,
    /// Time-averaged capacity over the same intervals, packets per second.
    pub capacity: f64,
    pub utilization: f64,
    pub intervals: usize,
}

impl RunSummary {
    pub fn throughput_mbps(&self) -> f64 {
        pps_to_mbps(self.throughput)
    }

    /// Fields in [`summary_csv_header`] order.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.controller,
            self.scenario,
            self.seed,
            self.throughput,
            self.throughput_mbps(),
            self.latency,
            self.loss,
            self.reward,
            self.utilization
        )
    }
}

pub fn summary_csv_header() -> &'static str {
    "controller,scenario,seed,throughput_pps,throughput_mbps,latency_s,loss,reward,utilization"
}

#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub summary: RunSummary,
    pub trace: Vec<EpisodeTraceRow>,
}

pub fn trace_csv(rows: &[EpisodeTraceRow]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.mi_index, r.sim_time, r.rate, r.throughput, r.latency, r.loss, r.reward
        )
        .expect("write to String");
    }
    out
}

pub fn write_trace(path: impl AsRef<Path>, rows: &[EpisodeTraceRow]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, trace_csv(rows)).map_err(|e| Error::io(path, e))
}

/// Drives `controller` over `scenario` one monitor interval at a time until
/// the scenario's duration has elapsed. Writes the per-interval trace to
/// `trace_path` when given.
pub fn run_scenario(
    scenario: &Scenario,
    controller: &mut dyn Controller,
    seed: u64,
    trace_path: Option<&Path>,
) -> Result<ScenarioRun> {
    scenario.validate()?;
    let mut rate = controller.initial_rate();
    let link = scenario.link_with_capacity(scenario.initial_capacity());
    let mut net = make_network(&[link], &[(vec![0], rate)], seed)?;
    for &(t, c) in &scenario.schedule.steps()[1..] {
        if t < scenario.duration {
            net.schedule_link_change(0, t, scenario.link_with_capacity(c))?;
        }
    }

    let mut trace = Vec::new();
    let mut kept = Vec::new();
    while net.clock() < scenario.duration {
        let dur = net.senders()[0].mi_duration();
        let report = net.run_monitor_interval(0, rate, dur)?;
        let stats = report.stats();
        let row = EpisodeTraceRow {
            mi_index: report.mi_index,
            sim_time: report.start_time,
            rate: report.rate_used,
            throughput: stats.throughput,
            latency: stats.latency,
            loss: stats.loss,
            reward: reward(stats.throughput, stats.latency, stats.loss),
        };
        trace.push(row);
        if report.start_time >= WARMUP_S {
            kept.push((report.clone(), row));
        }
        rate = controller.observe(&report);
    }
    if kept.is_empty() {
        return Err(Error::arg(format!(
            "scenario `{}` ends before the {WARMUP_S} s warm-up",
            scenario.name
        )));
    }

    let n = kept.len() as f64;
    let span: f64 = kept.iter().map(|(rep, _)| rep.mi_duration).sum();
    let acked: u64 = kept.iter().map(|(rep, _)| rep.acked).sum();
    let throughput = acked as f64 / span;
    let latency = if acked == 0 {
        0.0
    } else {
        kept.iter()
            .map(|(rep, _)| rep.acked as f64 * rep.mean_latency)
            .sum::<f64>()
            / acked as f64
    };
    let sent: u64 = kept.iter().map(|(rep, _)| rep.sent).sum();
    let lost: u64 = kept.iter().map(|(rep, _)| rep.lost).sum();
    let loss = if sent == 0 { 0.0 } else { lost as f64 / sent as f64 };
    let reward = kept.iter().map(|(_, r)| r.reward).sum::<f64>() / n;
    let mut capacity = 0.0;
    for (rep, _) in &kept {
        capacity += rep.mi_duration
            * scenario
                .schedule
                .mean_over(rep.start_time, rep.start_time + rep.mi_duration)?;
    }
    capacity /= span;

    let summary = RunSummary {
        controller: controller.name().to_string(),
        scenario: scenario.name.clone(),
        seed,
        throughput,
        latency,
        loss,
        reward,
        capacity,
        utilization: throughput / capacity,
        intervals: kept.len(),
    };
    if let Some(path) = trace_path {
        write_trace(path, &trace)?;
    }
    Ok(ScenarioRun { summary, trace })
}
