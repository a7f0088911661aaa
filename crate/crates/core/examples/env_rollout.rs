//! One randomized training episode under a hand-written rule: grow the
//! rate while latency stays near its minimum, back off otherwise.

use ccrl::features::{env_reset, EnvConfig};

fn main() -> ccrl::Result<()> {
    let cfg = EnvConfig {
        k: 2,
        episode_len: 60,
        ..EnvConfig::default()
    };
    let (mut env, mut state) = env_reset(&cfg, 3)?;
    let p = *env.params();
    println!(
        "bandwidth {:.0} pps, latency {:.3} s, queue {}, loss {:.3}, start rate {:.0} pps",
        p.bandwidth, p.latency, p.queue_size, p.loss, p.initial_rate
    );
    let mut total = 0.0;
    while !env.is_done() {
        // newest stat vector is the last three entries: gradient, ratio - 1, send ratio - 1
        let latest = &state[state.len() - 3..];
        let a = if latest[1] < 0.05 && latest[2] < 0.05 {
            4.0
        } else {
            -4.0
        };
        let step = env.step(a)?;
        total += step.reward;
        if env.steps() % 10 == 0 {
            let s = step.stats;
            println!(
                "step {:>3}: rate {:>6.1}  thr {:>6.1}  lat {:.3}  loss {:.3}  reward {:>8.1}",
                env.steps(),
                env.rate(),
                s.throughput,
                s.latency,
                s.loss,
                step.reward
            );
        }
        state = step.state;
    }
    println!("episode reward {total:.0}");
    Ok(())
}
