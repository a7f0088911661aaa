use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{apply_action, ObservationHistory, RewardWeights, DEFAULT_ALPHA};
use crate::netsim::{make_network, LinkSpec, MiReport, MiStats, Network, RATE_FLOOR};
use crate::{Error, Result};

/// Closed interval a parameter is drawn from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamRange {
    pub min: f64,
    pub max: f64,
}

impl ParamRange {
    pub const fn new(min: f64, max: f64) -> Self {
        ParamRange { min, max }
    }

    pub const fn fixed(value: f64) -> Self {
        ParamRange {
            min: value,
            max: value,
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite() && self.min <= self.max) {
            return Err(Error::arg(format!(
                "{name} range [{}, {}] is empty or not finite",
                self.min, self.max
            )));
        }
        Ok(())
    }

    fn uniform<R: Rng>(&self, rng: &mut R) -> f64 {
        rng.gen_range(self.min..=self.max)
    }

    fn log_uniform<R: Rng>(&self, rng: &mut R) -> f64 {
        rng.gen_range(self.min.ln()..=self.max.ln()).exp()
    }
}

/// Training environment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    /// History length in monitor intervals.
    pub k: usize,
    /// Observation delay in monitor intervals.
    pub d: usize,
    /// Rate-update damping.
    pub alpha: f64,
    pub episode_len: usize,
    /// Link bandwidth, packets/second.
    pub bandwidth: ParamRange,
    /// One-way latency per link, seconds.
    pub latency: ParamRange,
    /// Queue size in packets, drawn log-uniformly.
    pub queue: ParamRange,
    pub loss: ParamRange,
    /// Initial sending rate as a fraction of bandwidth.
    pub initial_rate: ParamRange,
    pub reward: RewardWeights,
    /// Sending rate cap as a multiple of the episode's bandwidth.
    pub max_rate_multiple: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            k: 10,
            d: 0,
            alpha: DEFAULT_ALPHA,
            episode_len: 400,
            bandwidth: ParamRange::new(100.0, 500.0),
            latency: ParamRange::new(0.05, 0.5),
            queue: ParamRange::new(2.0, 2981.0),
            loss: ParamRange::new(0.0, 0.05),
            initial_rate: ParamRange::new(0.3, 1.5),
            reward: RewardWeights::default(),
            max_rate_multiple: 4.0,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::arg("k must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::arg("alpha must be positive"));
        }
        if self.episode_len < 1 {
            return Err(Error::arg("episode_len must be at least 1"));
        }
        self.bandwidth.validate("bandwidth")?;
        self.latency.validate("latency")?;
        self.queue.validate("queue")?;
        self.loss.validate("loss")?;
        self.initial_rate.validate("initial_rate")?;
        if self.bandwidth.min <= 0.0 || self.latency.min < 0.0 || self.queue.min < 1.0 {
            return Err(Error::arg("link parameter ranges must describe valid links"));
        }
        if self.loss.min < 0.0 || self.loss.max > 1.0 {
            return Err(Error::arg("loss range must lie in [0, 1]"));
        }
        if self.initial_rate.min <= 0.0 {
            return Err(Error::arg("initial rate fraction must be positive"));
        }
        if !(self.max_rate_multiple >= 1.0) {
            return Err(Error::arg("max_rate_multiple must be >= 1"));
        }
        Ok(())
    }

    /// Length of the flattened state vector.
    pub fn state_dim(&self) -> usize {
        3 * self.k
    }

    /// Draws one episode's link and sender parameters.
    pub fn sample_params<R: Rng>(&self, rng: &mut R) -> EnvParams {
        let bandwidth = self.bandwidth.uniform(rng);
        let latency = self.latency.uniform(rng);
        let queue_size = (self.queue.log_uniform(rng).round() as usize).max(1);
        let loss = self.loss.uniform(rng);
        let initial_rate = (self.initial_rate.uniform(rng) * bandwidth).max(RATE_FLOOR);
        EnvParams {
            bandwidth,
            latency,
            queue_size,
            loss,
            initial_rate,
        }
    }
}

/// Parameters drawn for one episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvParams {
    pub bandwidth: f64,
    pub latency: f64,
    pub queue_size: usize,
    pub loss: f64,
    pub initial_rate: f64,
}

impl EnvParams {
    pub fn link(&self) -> LinkSpec {
        LinkSpec {
            bandwidth: self.bandwidth,
            base_latency: self.latency,
            queue_size: self.queue_size,
            loss_rate: self.loss,
        }
    }
}

/// One row of an episode trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeTraceRow {
    pub mi_index: u64,
    pub sim_time: f64,
    pub rate: f64,
    pub throughput: f64,
    pub latency: f64,
    pub loss: f64,
    pub reward: f64,
}

#[derive(Debug, Clone)]
pub struct StepResult {
    pub state: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    pub report: MiReport,
    pub stats: MiStats,
}

impl StepResult {
    pub fn trace_row(&self) -> EpisodeTraceRow {
        EpisodeTraceRow {
            mi_index: self.report.mi_index,
            sim_time: self.report.start_time,
            rate: self.report.rate_used,
            throughput: self.stats.throughput,
            latency: self.stats.latency,
            loss: self.stats.loss,
            reward: self.reward,
        }
    }
}

/// A running episode: two identical links in series and one sender.
#[derive(Debug, Clone)]
pub struct EnvState {
    config: EnvConfig,
    params: EnvParams,
    network: Network,
    history: ObservationHistory,
    rate: f64,
    rate_ceiling: f64,
    steps: usize,
    done: bool,
}

/// Starts an episode with parameters drawn from `config` using `seed`.
pub fn env_reset(config: &EnvConfig, seed: u64) -> Result<(EnvState, Vec<f64>)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = config.sample_params(&mut rng);
    let link = params.link();
    let network = make_network(&[link, link], &[(vec![0, 1], params.initial_rate)], rng.gen())?;
    let history = ObservationHistory::new(config.k, config.d)?;
    let state = history.flatten();
    let env = EnvState {
        config: config.clone(),
        params,
        network,
        history,
        rate: params.initial_rate,
        rate_ceiling: (params.bandwidth * config.max_rate_multiple).max(RATE_FLOOR),
        steps: 0,
        done: false,
    };
    Ok((env, state))
}

impl EnvState {
    pub fn params(&self) -> &EnvParams {
        &self.params
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn state(&self) -> Vec<f64> {
        self.history.flatten()
    }

    /// Applies action `a`, runs one monitor interval and returns the new
    /// state and reward.
    pub fn step(&mut self, a: f64) -> Result<StepResult> {
        if self.done {
            return Err(Error::EpisodeDone);
        }
        self.rate = apply_action(self.rate, a, self.config.alpha)?.min(self.rate_ceiling);
        let duration = self.network.senders()[0].mi_duration();
        let report = self.network.run_monitor_interval(0, self.rate, duration)?;
        let stats = report.stats();
        let reward = self
            .config
            .reward
            .reward(stats.throughput, stats.latency, stats.loss);
        self.history.record(&report);
        self.steps += 1;
        self.done = self.steps >= self.config.episode_len;
        Ok(StepResult {
            state: self.history.flatten(),
            reward,
            done: self.done,
            report,
            stats,
        })
    }
}
