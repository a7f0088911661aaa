//! The loss-halving AIMD sender against the capacity oracle on a link with
//! 1% random loss.

use ccrl::baselines::{Oracle, TcpLike};
use ccrl::harness::{builtin_scenario, run_scenario};

fn main() -> ccrl::Result<()> {
    let scenario = builtin_scenario("random-loss")?;
    let mut tcp = TcpLike::new(scenario.base_rtt())?;
    let mut oracle = Oracle::new(scenario.schedule.clone());
    for (name, ctrl) in [
        ("tcp-like", &mut tcp as &mut dyn ccrl::baselines::Controller),
        ("oracle", &mut oracle),
    ] {
        let s = run_scenario(&scenario, ctrl, 0, None)?.summary;
        println!(
            "{name:<9} {:6.2} Mbps  utilization {:.3}  latency {:.4} s  loss {:.4}",
            s.throughput_mbps(),
            s.utilization,
            s.latency,
            s.loss
        );
    }
    Ok(())
}
