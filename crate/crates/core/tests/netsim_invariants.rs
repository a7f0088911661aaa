//! Randomized checks of the simulator's structural invariants.

mod common;

use ccrl::netsim::{make_network, LinkSpec, SimEvent};
use common::{random_network, run, Checker};
use proptest::prelude::*;

#[test]
fn thousand_random_networks_hold_invariants() {
    for seed in 0..1000 {
        let (reports, checker, _) = run(seed, 50);
        assert!(
            checker.violations.is_empty(),
            "seed {seed}: {:?}",
            &checker.violations[..checker.violations.len().min(5)]
        );
        if seed % 20 == 0 {
            let (again, _, _) = run(seed, 50);
            assert_eq!(reports, again, "seed {seed} not deterministic");
        }
    }
}

#[test]
fn long_run_throughput_respects_capacity() {
    for seed in 0..20 {
        let (params, mut net, _) = random_network(seed);
        let mut delivered = 0u64;
        while net.clock() < 10.0 {
            let dur = net.senders()[0].mi_duration();
            net.run_monitor_interval_observed(0, 3.0 * params.bandwidth, dur, |_, e| {
                if matches!(e, SimEvent::Delivered { .. }) {
                    delivered += 1;
                }
            })
            .unwrap();
        }
        // one extra packet of slack for the one in service at time zero
        assert!(
            delivered as f64 <= params.bandwidth * net.clock() + 1.0,
            "seed {seed}: {delivered} acks in {} s at {} pps",
            net.clock(),
            params.bandwidth
        );
    }
}

#[test]
fn link_changes_keep_invariants() {
    let base = LinkSpec::new(400.0, 0.02, 50, 0.01).unwrap();
    let mut net = make_network(&[base], &[(vec![0], 300.0)], 5).unwrap();
    for i in 1..10 {
        let bw = if i % 2 == 0 { 400.0 } else { 150.0 };
        net.schedule_link_change(
            0,
            i as f64 * 0.5,
            LinkSpec {
                bandwidth: bw,
                ..base
            },
        )
        .unwrap();
    }
    let mut checker = Checker::new(vec![base]);
    while net.clock() < 5.0 {
        let dur = net.senders()[0].mi_duration();
        let rep = net
            .run_monitor_interval_observed(0, 350.0, dur, |n, e| checker.on_event(n, e))
            .unwrap();
        assert_eq!(rep.sent, rep.acked + rep.lost);
    }
    assert!(checker.violations.is_empty(), "{:?}", checker.violations);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn same_seed_same_reports(seed in any::<u64>(), mis in 1usize..20) {
        let (a, _, ta) = run(seed, mis);
        let (b, _, tb) = run(seed, mis);
        prop_assert_eq!(a, b);
        prop_assert_eq!(ta, tb);
    }

    #[test]
    fn reports_balance(seed in any::<u64>()) {
        let (reports, checker, _) = run(seed, 10);
        prop_assert!(checker.violations.is_empty(), "{:?}", checker.violations);
        for r in reports {
            prop_assert_eq!(r.sent, r.acked + r.lost);
        }
    }
}
