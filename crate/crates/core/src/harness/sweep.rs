use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use super::run::{make_controller, run_scenario, ControllerSpec, RunSummary};
use super::Scenario;
use crate::baselines::CapacitySchedule;
use crate::units::{mbps_to_pps, pps_to_mbps};
use crate::{Error, Result};

/// The link parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Capacity in Mbps.
    Bandwidth,
    /// One-way latency in milliseconds.
    Latency,
    /// Queue size in packets.
    Queue,
    /// Random loss probability.
    Loss,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Bandwidth => "bandwidth",
            SweepAxis::Latency => "latency",
            SweepAxis::Queue => "queue",
            SweepAxis::Loss => "loss",
        }
    }

    /// `base` with this axis set to `value`.
    pub fn apply(&self, base: &Scenario, value: f64) -> Result<Scenario> {
        let mut s = base.clone();
        match self {
            SweepAxis::Bandwidth => s.schedule = CapacitySchedule::constant(mbps_to_pps(value))?,
            SweepAxis::Latency => s.base_latency = value / 1000.0,
            SweepAxis::Queue => {
                if !(value >= 1.0 && value.is_finite()) {
                    return Err(Error::arg(format!("queue size must be >= 1, got {value}")));
                }
                s.queue_size = value.round() as usize;
            }
            SweepAxis::Loss => s.loss_rate = value,
        }
        s.name = format!("{}-{}-{}", base.name, self.name(), value);
        s.validate()?;
        Ok(s)
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bandwidth" => Ok(SweepAxis::Bandwidth),
            "latency" => Ok(SweepAxis::Latency),
            "queue" => Ok(SweepAxis::Queue),
            "loss" => Ok(SweepAxis::Loss),
            other => Err(Error::arg(format!(
                "unknown sweep axis `{other}` (expected bandwidth, latency, queue or loss)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    values: Vec<f64>,
    pub base: Scenario,
    pub controllers: Vec<ControllerSpec>,
}

impl SweepSpec {
    /// Values are sorted and deduplicated; an empty list is an error.
    pub fn new(
        axis: SweepAxis,
        mut values: Vec<f64>,
        base: Scenario,
        controllers: Vec<ControllerSpec>,
    ) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::arg("sweep needs at least one value"));
        }
        if controllers.is_empty() {
            return Err(Error::arg("sweep needs at least one controller"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("sweep values must be finite"));
        }
        values.sort_by(f64::total_cmp);
        values.dedup();
        for &v in &values {
            axis.apply(&base, v)?;
        }
        Ok(SweepSpec {
            axis,
            values,
            base,
            controllers,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis: SweepAxis,
    pub value: f64,
    pub summary: RunSummary,
}

/// Runs every (controller, value, seed) combination with seeds `0..seeds_per_point`.
/// Rows come back sorted by controller, value and seed.
pub fn sweep(spec: &SweepSpec, seeds_per_point: u64, out_path: Option<&Path>) -> Result<Vec<SweepRow>> {
    if seeds_per_point == 0 {
        return Err(Error::arg("seeds_per_point must be positive"));
    }
    let mut jobs = Vec::new();
    for c in &spec.controllers {
        for &v in &spec.values {
            for seed in 0..seeds_per_point {
                jobs.push((c, v, seed));
            }
        }
    }
    let mut rows = jobs
        .par_iter()
        .map(|&(c, value, seed)| {
            let scenario = spec.axis.apply(&spec.base, value)?;
            let mut ctrl = make_controller(c, &scenario)?;
            let run = run_scenario(&scenario, ctrl.as_mut(), seed, None)?;
            Ok(SweepRow {
                axis: spec.axis,
                value,
                summary: run.summary,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| {
        a.summary
            .controller
            .cmp(&b.summary.controller)
            .then(a.value.total_cmp(&b.value))
            .then(a.summary.seed.cmp(&b.summary.seed))
    });
    if let Some(path) = out_path {
        std::fs::write(path, sweep_csv(&rows)).map_err(|e| Error::io(path, e))?;
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "controller,axis,value,seed,throughput_pps,throughput_mbps,latency_s,loss,reward,utilization\n",
    );
    for r in rows {
        let s = &r.summary;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            s.controller,
            r.axis.name(),
            r.value,
            s.seed,
            s.throughput,
            s.throughput_mbps(),
            s.latency,
            s.loss,
            s.reward,
            s.utilization
        )
        .expect("write to String");
    }
    out
}

/// Per-controller means over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub controller: String,
    pub scenario: String,
    pub seeds: u64,
    pub throughput: f64,
    pub latency: f64,
    pub loss: f64,
    pub reward: f64,
    pub utilization: f64,
    pub runs: Vec<RunSummary>,
}

/// Runs each controller on `scenario` with seeds `0..seeds` and averages.
pub fn compare(
    scenario: &Scenario,
    controllers: &[ControllerSpec],
    seeds: u64,
    out_path: Option<&Path>,
) -> Result<Vec<CompareRow>> {
    if seeds == 0 || controllers.is_empty() {
        return Err(Error::arg("compare needs at least one controller and one seed"));
    }
    let jobs: Vec<(usize, u64)> = (0..controllers.len())
        .flat_map(|c| (0..seeds).map(move |s| (c, s)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(c, seed)| {
            let mut ctrl = make_controller(&controllers[c], scenario)?;
            Ok(run_scenario(scenario, ctrl.as_mut(), seed, None)?.summary)
        })
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<CompareRow> = runs
        .chunks(seeds as usize)
        .map(|chunk| {
            let n = chunk.len() as f64;
            let mean = |f: fn(&RunSummary) -> f64| chunk.iter().map(f).sum::<f64>() / n;
            CompareRow {
                controller: chunk[0].controller.clone(),
                scenario: scenario.name.clone(),
                seeds,
                throughput: mean(|s| s.throughput),
                latency: mean(|s| s.latency),
                loss: mean(|s| s.loss),
                reward: mean(|s| s.reward),
                utilization: mean(|s| s.utilization),
                runs: chunk.to_vec(),
            }
        })
        .collect();
    if let Some(path) = out_path {
        std::fs::write(path, compare_csv(&rows)).map_err(|e| Error::io(path, e))?;
    }
    Ok(rows)
}

pub fn compare_csv(rows: &[CompareRow]) -> String {
    let mut out = String::from(
        "controller,scenario,seeds,throughput_pps,throughput_mbps,latency_s,loss,reward,utilization\n",
    );
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.controller,
            r.scenario,
            r.seeds,
            r.throughput,
            pps_to_mbps(r.throughput),
            r.latency,
            r.loss,
            r.reward,
            r.utilization
        )
        .expect("write to String");
    }
    out
}
