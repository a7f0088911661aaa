//! Drives one sender over a two-hop path at a few fixed rates and prints
//! what each monitor interval measured.

use ccrl::netsim::{make_network, LinkSpec};

fn main() -> ccrl::Result<()> {
    let link = LinkSpec::new(300.0, 0.03, 100, 0.01)?;
    let mut net = make_network(&[link, link], &[(vec![0, 1], 200.0)], 42)?;
    println!("mi  rate_pps  sent  acked  lost  mean_latency_s");
    for rate in [150.0, 250.0, 300.0, 400.0, 600.0, 300.0] {
        for _ in 0..3 {
            let dur = net.senders()[0].mi_duration();
            let r = net.run_monitor_interval(0, rate, dur)?;
            println!(
                "{:>2}  {:>8.0}  {:>4}  {:>5}  {:>4}  {:.4}",
                r.mi_index, r.rate_used, r.sent, r.acked, r.lost, r.mean_latency
            );
        }
    }
    println!("simulated {:.2} s", net.clock());
    Ok(())
}
