//! A short PPO run on randomized links. Pass an output directory to keep
//! the policy file and training curve.
//!
//! ```text
//! cargo run --release --example train_policy -- /tmp/run
//! ```

use std::path::Path;

use ccrl::features::EnvConfig;
use ccrl::policy::save_params;
use ccrl::ppo::{PpoConfig, Trainer};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let env = EnvConfig {
        k: 2,
        ..EnvConfig::default()
    };
    let ppo = PpoConfig {
        total_episodes: 200,
        ..PpoConfig::default()
    };
    let mut trainer = Trainer::new(&env, &ppo, 0)?;
    while !trainer.is_finished() {
        let row = trainer.iterate()?;
        println!(
            "update {:>3}  episodes {:>4}  mean {:>9.0}  smoothed {:>9.0}",
            row.iter, row.episodes, row.mean_reward, row.smoothed_reward
        );
    }
    if let Some(dir) = std::env::args().nth(1) {
        let dir = Path::new(&dir);
        std::fs::create_dir_all(dir)?;
        save_params(trainer.policy(), dir.join("policy.txt"))?;
        std::fs::write(dir.join("training.csv"), trainer.curve().to_csv())?;
        println!("wrote {}", dir.display());
    }
    Ok(())
}
