//! Averages controllers over three seeds on the randomly changing link.
//! Extra arguments are policy files to include.

use ccrl::harness::{builtin_scenario, compare, ControllerSpec};

fn main() -> ccrl::Result<()> {
    let scenario = builtin_scenario("dynamic-random")?;
    let mut controllers = vec![ControllerSpec::TcpLike, ControllerSpec::Oracle];
    controllers.extend(std::env::args().skip(1).map(|p| ControllerSpec::parse(&p)));
    for row in compare(&scenario, &controllers, 3, None)? {
        println!(
            "{:<12} utilization {:.3}  latency {:.4} s  loss {:.4}  reward {:.0}",
            row.controller, row.utilization, row.latency, row.loss, row.reward
        );
    }
    Ok(())
}
