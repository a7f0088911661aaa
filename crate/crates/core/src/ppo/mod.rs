//! Proximal policy optimization: advantage estimation, the clipped surrogate
//! loss with its analytic gradient, Adam, and the training loop.

mod train;

pub use train::{train, CurveRow, TrainOutcome, Trainer, TrainingCurve, CURVE_HEADER, SMOOTHING};

use crate::policy::{gaussian_entropy, GaussianPolicy};
use crate::{Error, Result};

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PpoConfig {
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_eps: f64,
    pub learning_rate: f64,
    /// Transitions collected per update, across all environments.
    pub steps_per_update: usize,
    pub epochs_per_update: usize,
    pub minibatch_size: usize,
    pub value_coef: f64,
    pub entropy_coef: f64,
    /// Training stops after the update during which this many episodes have completed.
    pub total_episodes: usize,
    pub n_envs: usize,
    /// Gradient norm limit, applied separately to the policy and value parameters.
    pub max_grad_norm: f64,
    /// Rewards are multiplied by this before advantage and value estimation.
    pub reward_scale: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            gamma: 0.99,
            gae_lambda: 0.95,
            clip_eps: 0.2,
            learning_rate: 3e-4,
            steps_per_update: 4096,
            epochs_per_update: 4,
            minibatch_size: 256,
            value_coef: 0.5,
            entropy_coef: 0.0,
            total_episodes: 3000,
            n_envs: 8,
            max_grad_norm: 0.5,
            reward_scale: 1e-5,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::arg(format!("gamma must be in [0, 1), got {}", self.gamma)));
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return Err(Error::arg("gae_lambda must be in [0, 1]"));
        }
        for (name, v) in [
            ("clip_eps", self.clip_eps),
            ("learning_rate", self.learning_rate),
            ("max_grad_norm", self.max_grad_norm),
            ("reward_scale", self.reward_scale),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::arg(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("value_coef", self.value_coef),
            ("entropy_coef", self.entropy_coef),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::arg(format!("{name} must be >= 0, got {v}")));
            }
        }
        for (name, v) in [
            ("steps_per_update", self.steps_per_update),
            ("epochs_per_update", self.epochs_per_update),
            ("minibatch_size", self.minibatch_size),
            ("total_episodes", self.total_episodes),
            ("n_envs", self.n_envs),
        ] {
            if v == 0 {
                return Err(Error::arg(format!("{name} must be positive")));
            }
        }
        if self.steps_per_update < self.n_envs {
            return Err(Error::arg("steps_per_update must be at least n_envs"));
        }
        Ok(())
    }
}

/// Generalized advantage estimates and value targets for one trajectory
/// segment. `bootstrap` is the value of the state after the last step; it is
/// ignored when that step ends an episode.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap: f64,
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = rewards.len();
    if values.len() != n || dones.len() != n {
        return Err(Error::arg(format!(
            "compute_gae: {} rewards, {} values, {} done flags",
            n,
            values.len(),
            dones.len()
        )));
    }
    let mut adv = vec![0.0; n];
    let mut next_adv = 0.0;
    let mut next_value = bootstrap;
    for t in (0..n).rev() {
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_value * live - values[t];
        next_adv = delta + gamma * lambda * live * next_adv;
        adv[t] = next_adv;
        next_value = values[t];
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((adv, returns))
}

/// Shifts and scales `adv` to mean 0 and standard deviation 1.
pub fn normalize_advantages(adv: &mut [f64]) {
    if adv.is_empty() {
        return;
    }
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let var = adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    let scale = if std > 1e-8 { 1.0 / std } else { 1.0 };
    adv.iter_mut().for_each(|a| *a = (*a - mean) * scale);
}

/// One training sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub state: Vec<f64>,
    pub action: f64,
    pub old_log_prob: f64,
    pub advantage: f64,
    pub ret: f64,
}

/// Terms of [`ppo_loss`], reported for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossParts {
    pub total: f64,
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    /// Fraction of samples whose ratio left the clip range.
    pub clip_fraction: f64,
}

/// Clipped surrogate loss and its gradient with respect to the flat policy
/// parameters:
/// `-mean(min(rA, clip(r)A)) + value_coef * mean((V - R)^2) - entropy_coef * H`.
pub fn ppo_loss(
    batch: &[Sample],
    policy: &GaussianPolicy,
    clip_eps: f64,
    value_coef: f64,
    entropy_coef: f64,
) -> Result<(LossParts, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::arg("ppo_loss: empty batch"));
    }
    let n = batch.len() as f64;
    let log_std = policy.log_std();
    let inv_var = (-2.0 * log_std).exp();
    let mut grads = policy.zero_grads();
    let mut parts = LossParts::default();
    let mut clipped = 0usize;
    for s in batch {
        let cache = policy.mean_net.forward_cached(&s.state)?;
        let mean = cache.output()[0];
        let diff = s.action - mean;
        let log_prob = crate::policy::gaussian_log_density(s.action, mean, log_std);
        let ratio = (log_prob - s.old_log_prob).exp();
        let surr1 = ratio * s.advantage;
        let surr2 = ratio.clamp(1.0 - clip_eps, 1.0 + clip_eps) * s.advantage;
        parts.policy -= surr1.min(surr2) / n;
        if !(1.0 - clip_eps..=1.0 + clip_eps).contains(&ratio) {
            clipped += 1;
        }
        if surr1 <= surr2 {
            // d(-rA/n) = -(rA/n) dlogp
            let c = -surr1 / n;
            policy
                .mean_net
                .backward(&cache, &[c * diff * inv_var], &mut grads.mean_net);
            grads.log_std += c * (diff * diff * inv_var - 1.0);
        }

        let vcache = policy.value_net.forward_cached(&s.state)?;
        let err = vcache.output()[0] - s.ret;
        parts.value += err * err / n;
        policy
            .value_net
            .backward(&vcache, &[2.0 * value_coef * err / n], &mut grads.value_net);
    }
    parts.entropy = gaussian_entropy(log_std);
    grads.log_std -= entropy_coef;
    parts.total = parts.policy + value_coef * parts.value - entropy_coef * parts.entropy;
    parts.clip_fraction = clipped as f64 / n;
    Ok((parts, grads.flatten()))
}

/// Scales `grads` down so its Euclidean norm is at most `max_norm`; returns the original norm.
pub fn clip_grad_norm(grads: &mut [f64], max_norm: f64) -> f64 {
    let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        grads.iter_mut().for_each(|g| *g *= s);
    }
    norm
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// First and second moment estimates for Adam.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        AdamState {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step(state: &mut AdamState, params: &mut [f64], grads: &[f64], lr: f64) -> Result<()> {
    if params.len() != grads.len() || state.m.len() != params.len() {
        return Err(Error::arg(format!(
            "adam_step: {} params, {} grads, {} moments",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    state.t += 1;
    let c1 = 1.0 - ADAM_BETA1.powf(state.t as f64);
    let c2 = 1.0 - ADAM_BETA2.powf(state.t as f64);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = ADAM_BETA1 * state.m[i] + (1.0 - ADAM_BETA1) * g;
        state.v[i] = ADAM_BETA2 * state.v[i] + (1.0 - ADAM_BETA2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
    }
    Ok(())
}
