use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use super::mlp::MlpParams;
use crate::{Error, Result};

pub const HIDDEN_SIZES: [usize; 2] = [32, 16];
pub const LOG_STD_BOUNDS: (f64, f64) = (-20.0, 2.0);
pub const INITIAL_LOG_STD: f64 = -0.5;
/// Sampled actions are clipped to `[-ACTION_CLIP, ACTION_CLIP]` before use.
pub const ACTION_CLIP: f64 = 100.0;

/// Log density of `N(mean, exp(log_std)^2)` at `x`.
pub fn gaussian_log_density(x: f64, mean: f64, log_std: f64) -> f64 {
    let z = (x - mean) * (-log_std).exp();
    -0.5 * z * z - log_std - 0.5 * (2.0 * PI).ln()
}

/// Differential entropy of a Gaussian with the given log standard deviation.
pub fn gaussian_entropy(log_std: f64) -> f64 {
    log_std + 0.5 * (1.0 + (2.0 * PI).ln())
}

/// Layer sizes for a history of `k` statistics vectors.
pub fn network_dims(k: usize) -> Vec<usize> {
    vec![3 * k, HIDDEN_SIZES[0], HIDDEN_SIZES[1], 1]
}

/// Stochastic policy with a state-independent standard deviation, plus a
/// separate value network of the same shape.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPolicy {
    k: usize,
    pub mean_net: MlpParams,
    pub value_net: MlpParams,
    log_std: f64,
}

impl GaussianPolicy {
    pub fn new<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Self {
        let dims = network_dims(k);
        GaussianPolicy {
            k,
            mean_net: MlpParams::orthogonal(&dims, 1.0, 0.01, rng),
            value_net: MlpParams::orthogonal(&dims, 1.0, 1.0, rng),
            log_std: INITIAL_LOG_STD,
        }
    }

    pub fn from_parts(k: usize, mean_net: MlpParams, value_net: MlpParams, log_std: f64) -> Result<Self> {
        for (name, net) in [("mean", &mean_net), ("value", &value_net)] {
            if net.input_dim() != 3 * k || net.output_dim() != 1 {
                return Err(Error::arg(format!(
                    "{name} network dims {:?} do not fit history length {k}",
                    net.dims()
                )));
            }
        }
        if !log_std.is_finite() {
            return Err(Error::arg("log_std must be finite"));
        }
        Ok(GaussianPolicy {
            k,
            mean_net,
            value_net,
            log_std: log_std.clamp(LOG_STD_BOUNDS.0, LOG_STD_BOUNDS.1),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn state_dim(&self) -> usize {
        3 * self.k
    }

    pub fn log_std(&self) -> f64 {
        self.log_std
    }

    pub fn set_log_std(&mut self, log_std: f64) {
        self.log_std = log_std.clamp(LOG_STD_BOUNDS.0, LOG_STD_BOUNDS.1);
    }

    pub fn mean(&self, state: &[f64]) -> Result<f64> {
        Ok(self.mean_net.forward(state)?[0])
    }

    pub fn value(&self, state: &[f64]) -> Result<f64> {
        Ok(self.value_net.forward(state)?[0])
    }

    pub fn log_prob(&self, state: &[f64], a: f64) -> Result<f64> {
        Ok(gaussian_log_density(a, self.mean(state)?, self.log_std))
    }

    /// Draws `a = mean(state) + exp(log_std) * z` and returns it with its log density.
    pub fn sample_action<R: Rng + ?Sized>(&self, state: &[f64], rng: &mut R) -> Result<(f64, f64)> {
        let mean = self.mean(state)?;
        let z: f64 = rng.sample(StandardNormal);
        let a = mean + self.log_std.exp() * z;
        Ok((a, gaussian_log_density(a, mean, self.log_std)))
    }

    /// Number of entries in the flat parameter vector.
    pub fn n_params(&self) -> usize {
        self.mean_net.n_params() + 1 + self.value_net.n_params()
    }

    /// Entries `0..policy_params()` of the flat vector belong to the action
    /// distribution (mean network, then log_std); the rest to the value network.
    pub fn policy_params(&self) -> usize {
        self.mean_net.n_params() + 1
    }

    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        self.mean_net.write_flat(&mut out);
        out.push(self.log_std);
        self.value_net.write_flat(&mut out);
        out
    }

    /// Loads a flat vector; log_std is clamped to its bounds.
    pub fn set_flat_params(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.n_params(), "flat parameter length");
        let used = self.mean_net.read_flat(flat);
        self.log_std = flat[used].clamp(LOG_STD_BOUNDS.0, LOG_STD_BOUNDS.1);
        self.value_net.read_flat(&flat[used + 1..]);
    }

    /// Flat gradients shaped like [`GaussianPolicy::flat_params`], all zero.
    pub fn zero_grads(&self) -> PolicyGrads {
        PolicyGrads {
            mean_net: MlpParams::zeros(self.mean_net.dims()),
            log_std: 0.0,
            value_net: MlpParams::zeros(self.value_net.dims()),
        }
    }

    /// Log density of `a` and its gradient with respect to every parameter.
    pub fn log_prob_with_grad(&self, state: &[f64], a: f64) -> Result<(f64, Vec<f64>)> {
        let cache = self.mean_net.forward_cached(state)?;
        let mean = cache.output()[0];
        let inv_var = (-2.0 * self.log_std).exp();
        let diff = a - mean;
        let mut grads = self.zero_grads();
        self.mean_net
            .backward(&cache, &[diff * inv_var], &mut grads.mean_net);
        grads.log_std = diff * diff * inv_var - 1.0;
        Ok((gaussian_log_density(a, mean, self.log_std), grads.flatten()))
    }

    /// Value estimate and its gradient with respect to every parameter.
    pub fn value_with_grad(&self, state: &[f64]) -> Result<(f64, Vec<f64>)> {
        let cache = self.value_net.forward_cached(state)?;
        let mut grads = self.zero_grads();
        self.value_net.backward(&cache, &[1.0], &mut grads.value_net);
        Ok((cache.output()[0], grads.flatten()))
    }
}

/// Gradient accumulator with the same layout as the policy parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyGrads {
    pub mean_net: MlpParams,
    pub log_std: f64,
    pub value_net: MlpParams,
}

impl PolicyGrads {
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.mean_net.write_flat(&mut out);
        out.push(self.log_std);
        self.value_net.write_flat(&mut out);
        out
    }
}
