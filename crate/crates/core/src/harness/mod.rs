//! Evaluation scenarios, the scenario runner, parameter sweeps and
//! training configuration files.

mod config;
mod run;
mod sweep;

pub use config::{load_config, parse_config, render_config, TrainConfig, CONFIG_KEYS};
pub use run::{
    make_controller, run_scenario, summary_csv_header, trace_csv, write_trace, ControllerSpec,
    PolicyController, RunSummary, ScenarioRun, TRACE_HEADER, WARMUP_S,
};
pub use sweep::{compare, compare_csv, sweep, sweep_csv, CompareRow, SweepAxis, SweepRow, SweepSpec};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::baselines::CapacitySchedule;
use crate::netsim::LinkSpec;
use crate::units::mbps_to_pps;
use crate::{Error, Result};

/// A single-link evaluation setting with a piecewise-constant capacity.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub schedule: CapacitySchedule,
    /// One-way propagation delay, seconds.
    pub base_latency: f64,
    pub queue_size: usize,
    pub loss_rate: f64,
    /// Simulated seconds per run.
    pub duration: f64,
    /// Seed that generated the capacity schedule, if it is random.
    pub seed: u64,
}

pub const SCENARIO_NAMES: [&str; 4] = ["random-loss", "alternating", "dynamic-random", "standard"];

/// Seed of the `dynamic-random` capacity draws.
pub const DYNAMIC_RANDOM_SEED: u64 = 7;

impl Scenario {
    /// 30 Mbps, 30 ms, 1000-packet queue, no loss, two minutes.
    pub fn standard() -> Self {
        Scenario {
            name: "standard".into(),
            schedule: CapacitySchedule::constant(mbps_to_pps(30.0)).expect("positive capacity"),
            base_latency: 0.03,
            queue_size: 1000,
            loss_rate: 0.0,
            duration: 120.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        LinkSpec::new(
            self.initial_capacity(),
            self.base_latency,
            self.queue_size,
            self.loss_rate,
        )?;
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::arg(format!(
                "scenario duration must be positive, got {}",
                self.duration
            )));
        }
        Ok(())
    }

    pub fn initial_capacity(&self) -> f64 {
        self.schedule.steps()[0].1
    }

    pub fn link_with_capacity(&self, capacity: f64) -> LinkSpec {
        LinkSpec {
            bandwidth: capacity,
            base_latency: self.base_latency,
            queue_size: self.queue_size,
            loss_rate: self.loss_rate,
        }
    }

    /// Round-trip propagation delay.
    pub fn base_rtt(&self) -> f64 {
        2.0 * self.base_latency
    }
}

/// Looks up a built-in scenario by name.
pub fn builtin_scenario(name: &str) -> Result<Scenario> {
    let scenario = match name {
        "random-loss" => Scenario {
            name: name.into(),
            schedule: CapacitySchedule::constant(mbps_to_pps(30.0))?,
            base_latency: 0.03,
            queue_size: 10,
            loss_rate: 0.01,
            duration: 25.0,
            seed: 0,
        },
        "alternating" => {
            let steps = (0..5)
                .map(|i| {
                    let mbps = if i % 2 == 0 { 20.0 } else { 40.0 };
                    (5.0 * i as f64, mbps_to_pps(mbps))
                })
                .collect();
            Scenario {
                name: name.into(),
                schedule: CapacitySchedule::new(steps)?,
                base_latency: 0.03,
                queue_size: 1000,
                loss_rate: 0.0,
                duration: 25.0,
                seed: 0,
            }
        }
        "dynamic-random" => {
            let mut rng = ChaCha8Rng::seed_from_u64(DYNAMIC_RANDOM_SEED);
            let steps = (0..24)
                .map(|i| (5.0 * i as f64, mbps_to_pps(rng.gen_range(16.0..=32.0))))
                .collect();
            Scenario {
                name: name.into(),
                schedule: CapacitySchedule::new(steps)?,
                base_latency: 0.032,
                queue_size: 500,
                loss_rate: 0.0,
                duration: 120.0,
                seed: DYNAMIC_RANDOM_SEED,
            }
        }
        "standard" => Scenario::standard(),
        _ => {
            return Err(Error::UnknownScenario {
                name: name.into(),
                known: SCENARIO_NAMES.join(", "),
            })
        }
    };
    Ok(scenario)
}

/// Bottleneck capacity of `scenario` at time `t`, packets per second.
pub fn oracle_rate(scenario: &Scenario, t: f64) -> Result<f64> {
    scenario.schedule.at(t)
}
