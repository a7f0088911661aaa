use std::fmt::Write as _;
use std::path::Path;

use crate::features::EnvConfig;
use crate::ppo::PpoConfig;
use crate::{Error, Result};

/// Environment and trainer settings read from a `key = value` file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainConfig {
    pub env: EnvConfig,
    pub ppo: PpoConfig,
}

/// Every key the config file accepts.
pub const CONFIG_KEYS: [&str; 31] = [
    "k",
    "d",
    "alpha",
    "episode_len",
    "bandwidth_min",
    "bandwidth_max",
    "latency_min",
    "latency_max",
    "queue_min",
    "queue_max",
    "loss_min",
    "loss_max",
    "initial_rate_min",
    "initial_rate_max",
    "reward_throughput",
    "reward_latency",
    "reward_loss",
    "max_rate_multiple",
    "gamma",
    "gae_lambda",
    "clip_eps",
    "learning_rate",
    "steps_per_update",
    "epochs_per_update",
    "minibatch_size",
    "value_coef",
    "entropy_coef",
    "total_episodes",
    "n_envs",
    "max_grad_norm",
    "reward_scale",
];

fn slot<'a>(c: &'a mut TrainConfig, key: &str) -> Option<Slot<'a>> {
    let (e, p) = (&mut c.env, &mut c.ppo);
    Some(match key {
        "k" => Slot::Int(&mut e.k),
        "d" => Slot::Int(&mut e.d),
        "alpha" => Slot::Real(&mut e.alpha),
        "episode_len" => Slot::Int(&mut e.episode_len),
        "bandwidth_min" => Slot::Real(&mut e.bandwidth.min),
        "bandwidth_max" => Slot::Real(&mut e.bandwidth.max),
        "latency_min" => Slot::Real(&mut e.latency.min),
        "latency_max" => Slot::Real(&mut e.latency.max),
        "queue_min" => Slot::Real(&mut e.queue.min),
        "queue_max" => Slot::Real(&mut e.queue.max),
        "loss_min" => Slot::Real(&mut e.loss.min),
        "loss_max" => Slot::Real(&mut e.loss.max),
        "initial_rate_min" => Slot::Real(&mut e.initial_rate.min),
        "initial_rate_max" => Slot::Real(&mut e.initial_rate.max),
        "reward_throughput" => Slot::Real(&mut e.reward.throughput),
        "reward_latency" => Slot::Real(&mut e.reward.latency),
        "reward_loss" => Slot::Real(&mut e.reward.loss),
        "max_rate_multiple" => Slot::Real(&mut e.max_rate_multiple),
        "gamma" => Slot::Real(&mut p.gamma),
        "gae_lambda" => Slot::Real(&mut p.gae_lambda),
        "clip_eps" => Slot::Real(&mut p.clip_eps),
        "learning_rate" => Slot::Real(&mut p.learning_rate),
        "steps_per_update" => Slot::Int(&mut p.steps_per_update),
        "epochs_per_update" => Slot::Int(&mut p.epochs_per_update),
        "minibatch_size" => Slot::Int(&mut p.minibatch_size),
        "value_coef" => Slot::Real(&mut p.value_coef),
        "entropy_coef" => Slot::Real(&mut p.entropy_coef),
        "total_episodes" => Slot::Int(&mut p.total_episodes),
        "n_envs" => Slot::Int(&mut p.n_envs),
        "max_grad_norm" => Slot::Real(&mut p.max_grad_norm),
        "reward_scale" => Slot::Real(&mut p.reward_scale),
        _ => return None,
    })
}

enum Slot<'a> {
    Int(&'a mut usize),
    Real(&'a mut f64),
}

/// Parses a config; keys not listed are left at their defaults. `origin`
/// only labels error messages.
pub fn parse_config(text: &str, origin: &Path) -> Result<TrainConfig> {
    let mut config = TrainConfig::default();
    let err = |line: usize, msg: String| Error::Config {
        path: origin.to_path_buf(),
        line,
        msg,
    };
    let mut seen = std::collections::HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| err(idx + 1, format!("expected `key = value`, found `{line}`")))?;
        if !seen.insert(key.to_string()) {
            return Err(err(idx + 1, format!("duplicate key `{key}`")));
        }
        match slot(&mut config, key) {
            None => return Err(err(idx + 1, format!("unknown key `{key}`"))),
            Some(Slot::Int(v)) => {
                *v = value.parse().map_err(|_| {
                    err(
                        idx + 1,
                        format!("`{key}` needs a non-negative integer, got `{value}`"),
                    )
                })?
            }
            Some(Slot::Real(v)) => {
                *v = value
                    .parse()
                    .map_err(|_| err(idx + 1, format!("`{key}` needs a number, got `{value}`")))?
            }
        }
    }
    config.env.validate()?;
    config.ppo.validate()?;
    Ok(config)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<TrainConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, path)
}

/// Writes every key, so `parse_config(render_config(c))` reproduces `c`.
pub fn render_config(config: &TrainConfig) -> String {
    let mut c = config.clone();
    let mut out = String::new();
    for key in CONFIG_KEYS {
        match slot(&mut c, key).expect("listed key") {
            Slot::Int(v) => writeln!(out, "{key} = {v}"),
            Slot::Real(v) => writeln!(out, "{key} = {v:?}"),
        }
        .expect("write to String");
    }
    out
}
