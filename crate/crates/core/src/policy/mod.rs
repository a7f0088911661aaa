//! Small fully connected networks, the Gaussian policy head built on them,
//! finite-difference gradient checking and the text parameter format.

mod gaussian;
mod io;
mod mlp;

pub use gaussian::{
    gaussian_entropy, gaussian_log_density, network_dims, GaussianPolicy, PolicyGrads, ACTION_CLIP,
    HIDDEN_SIZES, INITIAL_LOG_STD, LOG_STD_BOUNDS,
};
pub use io::{load_params, parse_params, render_params, save_params, FORMAT_VERSION};
pub use mlp::{ForwardCache, Layer, MlpParams};

use crate::Result;

pub const FD_STEP: f64 = 1e-5;

/// Relative difference used by the gradient checks.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Largest relative error between analytic and central-difference
/// gradients of `log_prob(state, a)` and `value(state)`, over every parameter.
pub fn grad_check(policy: &GaussianPolicy, state: &[f64], a: f64) -> Result<f64> {
    let (_, lp_grad) = policy.log_prob_with_grad(state, a)?;
    let (_, v_grad) = policy.value_with_grad(state)?;
    let base = policy.flat_params();
    let mut probe = policy.clone();
    let mut worst: f64 = 0.0;
    let mut flat = base.clone();
    for i in 0..base.len() {
        flat[i] = base[i] + FD_STEP;
        probe.set_flat_params(&flat);
        let (lp_hi, v_hi) = (probe.log_prob(state, a)?, probe.value(state)?);
        flat[i] = base[i] - FD_STEP;
        probe.set_flat_params(&flat);
        let (lp_lo, v_lo) = (probe.log_prob(state, a)?, probe.value(state)?);
        flat[i] = base[i];
        let lp_fd = (lp_hi - lp_lo) / (2.0 * FD_STEP);
        let v_fd = (v_hi - v_lo) / (2.0 * FD_STEP);
        worst = worst
            .max(relative_error(lp_grad[i], lp_fd))
            .max(relative_error(v_grad[i], v_fd));
    }
    Ok(worst)
}
