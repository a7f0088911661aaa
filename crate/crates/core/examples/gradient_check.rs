//! Compares backpropagated gradients of a fresh policy against central
//! finite differences.

use ccrl::policy::{grad_check, GaussianPolicy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> ccrl::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for k in [1, 2, 10] {
        let policy = GaussianPolicy::new(k, &mut rng);
        let state: Vec<f64> = (0..3 * k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a = policy.mean(&state)? + 0.3;
        let err = grad_check(&policy, &state, a)?;
        println!(
            "k={k:>2}: {} parameters, worst relative error {err:.2e}",
            policy.n_params()
        );
    }
    Ok(())
}
