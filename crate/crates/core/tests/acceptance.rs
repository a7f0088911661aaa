//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any fails.
//!
//! The training criteria run twelve full PPO runs, so expect this target to
//! take about an hour on a single core.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ccrl::features::{
    apply_action, env_reset, linear_reward, scale_rate, EnvConfig, RewardWeights, DEFAULT_ALPHA,
};
use ccrl::harness::{builtin_scenario, make_controller, run_scenario, ControllerSpec, RunSummary};
use ccrl::policy::{grad_check, network_dims, save_params, GaussianPolicy, MlpParams, FD_STEP};
use ccrl::ppo::{compute_gae, ppo_loss, PpoConfig, Sample, TrainOutcome, Trainer};

const TRAIN_SEEDS: [u64; 3] = [0, 1, 2];
const EVAL_SEEDS: [u64; 3] = [0, 1, 2];
const FD_TOLERANCE: f64 = 1e-4;
const GAE_TOLERANCE: f64 = 1e-10;
/// Kolmogorov-Smirnov critical value coefficient at the 0.01 level.
const KS_COEF_001: f64 = 1.628;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Verdict {
            pass,
            detail: detail.into(),
        }
    }
}

fn report(id: u32, name: &str, started: Instant, v: &Verdict) -> bool {
    println!(
        "{} {id}. {name} ({:.1} s): {}",
        if v.pass { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64(),
        v.detail
    );
    v.pass
}

fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

fn simulator_invariants() -> Verdict {
    let started = Instant::now();
    let mut failures = Vec::new();
    let mut mis = 0usize;
    for seed in 0..1000 {
        let (reports, checker, _) = common::run(seed, 50);
        mis += reports.len();
        if !checker.violations.is_empty() {
            failures.push(format!("seed {seed}: {}", checker.violations[0]));
        }
        if reports.iter().any(|r| r.sent != r.acked + r.lost) {
            failures.push(format!("seed {seed}: unbalanced report"));
        }
        if common::replay(seed, 50) != reports {
            failures.push(format!("seed {seed}: rerun differs"));
        }
    }
    let secs = started.elapsed().as_secs_f64();
    let mut detail = format!(
        "1000 networks, {mis} MIs, {} failures, {secs:.1} s",
        failures.len()
    );
    if let Some(first) = failures.first() {
        detail.push_str(&format!("; first: {first}"));
    }
    Verdict::new(failures.is_empty() && secs < 60.0, detail)
}

fn random_policy(k: usize, rng: &mut ChaCha8Rng) -> GaussianPolicy {
    let dims = network_dims(k);
    GaussianPolicy::from_parts(
        k,
        MlpParams::orthogonal(&dims, 1.0, 1.0, rng),
        MlpParams::orthogonal(&dims, 1.0, 1.0, rng),
        rng.gen_range(-1.0..0.5),
    )
    .unwrap()
}

fn ppo_loss_fd_error(policy: &GaussianPolicy, batch: &[Sample]) -> f64 {
    let loss = |p: &GaussianPolicy| ppo_loss(batch, p, 0.2, 0.5, 0.01).unwrap();
    let (_, grad) = loss(policy);
    let base = policy.flat_params();
    let mut probe = policy.clone();
    let mut flat = base.clone();
    let mut worst: f64 = 0.0;
    for i in 0..base.len() {
        flat[i] = base[i] + FD_STEP;
        probe.set_flat_params(&flat);
        let hi = loss(&probe).0.total;
        flat[i] = base[i] - FD_STEP;
        probe.set_flat_params(&flat);
        let lo = loss(&probe).0.total;
        flat[i] = base[i];
        worst = worst.max(relative_error(grad[i], (hi - lo) / (2.0 * FD_STEP)));
    }
    worst
}

/// Discounted sum of TD residuals written out term by term.
fn brute_force_gae(r: &[f64], v: &[f64], d: &[bool], boot: f64, gamma: f64, lambda: f64) -> Vec<f64> {
    let n = r.len();
    let next_value = |u: usize| if u + 1 < n { v[u + 1] } else { boot };
    (0..n)
        .map(|t| {
            let mut total = 0.0;
            for u in t..n {
                let cont = if d[u] { 0.0 } else { 1.0 };
                let delta = r[u] + gamma * cont * next_value(u) - v[u];
                total += (gamma * lambda).powi((u - t) as i32) * delta;
                if d[u] {
                    break;
                }
            }
            total
        })
        .collect()
}

fn numerics_oracles() -> Verdict {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut policy_worst: f64 = 0.0;
    let mut loss_worst: f64 = 0.0;
    let mut gae_worst: f64 = 0.0;
    for case in 0..100 {
        let k = 1 + case % 3;
        let policy = random_policy(k, &mut rng);
        let state: Vec<f64> = (0..3 * k).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let a = policy.mean(&state).unwrap() + rng.gen_range(-1.0..1.0);
        policy_worst = policy_worst.max(grad_check(&policy, &state, a).unwrap());

        let batch: Vec<Sample> = (0..4)
            .map(|_| {
                let state: Vec<f64> = (0..3 * k).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let (action, lp) = policy.sample_action(&state, &mut rng).unwrap();
                Sample {
                    state,
                    action,
                    old_log_prob: lp + rng.gen_range(-0.05..=0.05),
                    advantage: rng.gen_range(-2.0..2.0),
                    ret: rng.gen_range(-1.0..1.0),
                }
            })
            .collect();
        loss_worst = loss_worst.max(ppo_loss_fd_error(&policy, &batch));

        let r: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let d: Vec<bool> = (0..10).map(|_| rng.gen_bool(0.2)).collect();
        let boot = rng.gen_range(-1.0..1.0);
        let gamma = rng.gen_range(0.0..1.0);
        let lambda = rng.gen_range(0.0..=1.0);
        let (adv, ret) = compute_gae(&r, &v, &d, boot, gamma, lambda).unwrap();
        for (t, want) in brute_force_gae(&r, &v, &d, boot, gamma, lambda)
            .into_iter()
            .enumerate()
        {
            gae_worst = gae_worst
                .max((adv[t] - want).abs())
                .max((ret[t] - (want + v[t])).abs());
        }
    }
    let secs = started.elapsed().as_secs_f64();
    Verdict::new(
        policy_worst < FD_TOLERANCE && loss_worst < FD_TOLERANCE && gae_worst < GAE_TOLERANCE && secs < 60.0,
        format!(
            "max rel err: log-prob/value {policy_worst:.2e}, PPO loss {loss_worst:.2e}; \
             GAE max abs err {gae_worst:.2e}; {secs:.1} s"
        ),
    )
}

fn action_and_reward() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let q = |v: f64| BigRational::from_float(v).unwrap();
    let alpha = BigRational::new(1.into(), 40.into());
    let alpha_matches = DEFAULT_ALPHA == 0.025;
    let mut inverse_ok = true;
    let mut linear_ok = true;
    for _ in 0..10_000 {
        let x = rng.gen_range(1.0..1e5);
        let a = rng.gen_range(-100.0..100.0);
        let there = scale_rate(q(x), q(a), alpha.clone());
        inverse_ok &= scale_rate(there, -q(a), alpha.clone()) == q(x);
        inverse_ok &= apply_action(x, a, DEFAULT_ALPHA).unwrap() > 0.0;

        let w = (q(10.0), q(1000.0), q(2000.0));
        let r = |t: BigRational, l: BigRational, p: BigRational| linear_reward(t, l, p, w.clone());
        let (t1, l1, p1) = (
            q(rng.gen_range(0.0..1e4)),
            q(rng.gen_range(0.0..5.0)),
            q(rng.gen_range(0.0..1.0)),
        );
        let (t2, l2, p2) = (
            q(rng.gen_range(0.0..1e4)),
            q(rng.gen_range(0.0..5.0)),
            q(rng.gen_range(0.0..1.0)),
        );
        let c = q(rng.gen_range(-50.0..50.0));
        let lhs = r(
            t1.clone() + c.clone() * t2.clone(),
            l1.clone() + c.clone() * l2.clone(),
            p1.clone() + c.clone() * p2.clone(),
        );
        linear_ok &= lhs == r(t1, l1, p1) + c * r(t2, l2, p2);
    }
    let w = RewardWeights::default();
    let weights_ok = (w.throughput, -w.latency, -w.loss) == (10.0, -1000.0, -2000.0);
    let env_ok = EnvConfig::default().alpha == DEFAULT_ALPHA && EnvConfig::default().reward == w;
    Verdict::new(
        inverse_ok && linear_ok && alpha_matches && weights_ok && env_ok,
        format!(
            "exact inverse {inverse_ok}, exact linearity {linear_ok}, alpha 0.025 {alpha_matches}, \
             weights (10, -1000, -2000) {weights_ok}, env defaults {env_ok}"
        ),
    )
}

fn ks_continuous(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

fn ks_discrete(mut xs: Vec<usize>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_unstable();
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut below = 0usize;
    let mut i = 0;
    while i < xs.len() {
        let q = xs[i];
        let mut j = i;
        while j < xs.len() && xs[j] == q {
            j += 1;
        }
        // left limit at q, then the value at q
        d = d.max((below as f64 / n - cdf(q as f64 - 1.0)).abs());
        d = d.max((j as f64 / n - cdf(q as f64)).abs());
        below = j;
        i = j;
    }
    d
}

fn sampling_distribution() -> Verdict {
    let cfg = EnvConfig::default();
    let n = 10_000;
    let params: Vec<_> = (0..n).map(|s| *env_reset(&cfg, s).unwrap().0.params()).collect();
    let uniform = |lo: f64, hi: f64| move |x: f64| ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
    let (qlo, qhi) = (cfg.queue.min, cfg.queue.max);
    let queue_cdf = move |q: f64| {
        let upper = (q + 0.5).min(qhi);
        if upper <= qlo {
            0.0
        } else {
            (upper.ln() - qlo.ln()) / (qhi.ln() - qlo.ln())
        }
    };
    let stats = [
        (
            "bandwidth",
            ks_continuous(
                params.iter().map(|p| p.bandwidth).collect(),
                uniform(cfg.bandwidth.min, cfg.bandwidth.max),
            ),
        ),
        (
            "latency",
            ks_continuous(
                params.iter().map(|p| p.latency).collect(),
                uniform(cfg.latency.min, cfg.latency.max),
            ),
        ),
        (
            "loss",
            ks_continuous(
                params.iter().map(|p| p.loss).collect(),
                uniform(cfg.loss.min, cfg.loss.max),
            ),
        ),
        (
            "initial rate",
            ks_continuous(
                params.iter().map(|p| p.initial_rate / p.bandwidth).collect(),
                uniform(cfg.initial_rate.min, cfg.initial_rate.max),
            ),
        ),
        (
            "queue",
            ks_discrete(params.iter().map(|p| p.queue_size).collect(), queue_cdf),
        ),
    ];
    let critical = KS_COEF_001 / (n as f64).sqrt();
    let pass = stats.iter().all(|(_, d)| *d < critical);
    let detail = stats
        .iter()
        .map(|(name, d)| format!("{name} D={d:.4}"))
        .collect::<Vec<_>>()
        .join(", ");
    Verdict::new(pass, format!("{detail}; critical {critical:.4}"))
}

fn cli(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_ccrl"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(String::from_utf8_lossy(&out.stdout).into_owned())
    } else {
        Err(String::from_utf8_lossy(&out.stderr).into_owned())
    }
}

fn end_to_end_determinism(dir: &Path) -> Verdict {
    let config = dir.join("small.cfg");
    std::fs::write(
        &config,
        "k = 2\nepisode_len = 50\nsteps_per_update = 400\nminibatch_size = 100\nn_envs = 4\ntotal_episodes = 24\n",
    )
    .unwrap();
    // two policy files, then two traces
    type Artifacts = (Vec<u8>, Vec<u8>, Vec<u8>, Vec<u8>);
    let run = || -> Result<Artifacts, String> {
        let (a, b) = (dir.join("a"), dir.join("b"));
        let (ta, tb) = (dir.join("a.csv"), dir.join("b.csv"));
        for out in [&a, &b] {
            cli(&[
                "train",
                "--config",
                config.to_str().unwrap(),
                "--seed",
                "5",
                "--out",
                out.to_str().unwrap(),
            ])?;
        }
        let policy = a.join("policy.txt");
        for trace in [&ta, &tb] {
            cli(&[
                "eval",
                "--policy",
                policy.to_str().unwrap(),
                "--scenario",
                "random-loss",
                "--seed",
                "3",
                "--trace",
                trace.to_str().unwrap(),
            ])?;
        }
        let read = |p: &Path| std::fs::read(p).map_err(|e| e.to_string());
        Ok((
            read(&policy)?,
            read(&b.join("policy.txt"))?,
            read(&ta)?,
            read(&tb)?,
        ))
    };
    match run() {
        Ok((pa, pb, ta, tb)) => {
            let (policy_same, trace_same) = (pa == pb, ta == tb);
            Verdict::new(
                policy_same && trace_same && !pa.is_empty() && !ta.is_empty(),
                format!(
                    "policy files identical {policy_same} ({} bytes), traces identical {trace_same} ({} bytes)",
                    pa.len(),
                    ta.len()
                ),
            )
        }
        Err(e) => Verdict::new(false, format!("cli failed: {}", e.trim())),
    }
}

fn training_config(gamma: f64, k: usize) -> (EnvConfig, PpoConfig) {
    let env = EnvConfig {
        k,
        ..EnvConfig::default()
    };
    // 300 updates of 4096 400-MI steps complete about 3072 episodes
    let ppo = PpoConfig {
        gamma,
        total_episodes: 3072,
        ..PpoConfig::default()
    };
    (env, ppo)
}

fn train_one(gamma: f64, k: usize, seed: u64) -> TrainOutcome {
    let (env, ppo) = training_config(gamma, k);
    let started = Instant::now();
    let outcome = Trainer::new(&env, &ppo, seed).unwrap().run().unwrap();
    println!(
        "     trained gamma={gamma} k={k} seed={seed}: {} updates, final smoothed reward {:.0} ({:.0} s)",
        outcome.curve.len(),
        outcome.curve.final_smoothed().unwrap(),
        started.elapsed().as_secs_f64()
    );
    outcome
}

/// `a` exceeds `b` by at least `fraction` of `|b|`.
fn exceeds_by(a: f64, b: f64, fraction: f64) -> bool {
    a - b >= fraction * b.abs()
}

fn compare_runs(better: &[TrainOutcome], worse: &[TrainOutcome], fraction: f64) -> (usize, String) {
    let mut wins = 0;
    let pairs: Vec<String> = better
        .iter()
        .zip(worse)
        .map(|(a, b)| {
            let (fa, fb) = (
                a.curve.final_smoothed().unwrap(),
                b.curve.final_smoothed().unwrap(),
            );
            let won = exceeds_by(fa, fb, fraction);
            wins += usize::from(won);
            format!("{fa:.0} vs {fb:.0}{}", if won { "" } else { " (no)" })
        })
        .collect();
    (wins, pairs.join(", "))
}

fn evaluate(spec: &ControllerSpec, scenario: &str, seed: u64) -> RunSummary {
    let scenario = builtin_scenario(scenario).unwrap();
    let mut ctrl = make_controller(spec, &scenario).unwrap();
    run_scenario(&scenario, ctrl.as_mut(), seed, None)
        .unwrap()
        .summary
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let mut all = true;

    let t = Instant::now();
    all &= report(1, "simulator invariants", t, &simulator_invariants());
    let t = Instant::now();
    all &= report(2, "numerics oracles", t, &numerics_oracles());
    let t = Instant::now();
    all &= report(3, "action and reward", t, &action_and_reward());

    let t = Instant::now();
    all &= report(7, "episode sampling distribution", t, &sampling_distribution());
    let t = Instant::now();
    all &= report(
        8,
        "end-to-end determinism",
        t,
        &end_to_end_determinism(dir.path()),
    );

    let t = Instant::now();
    let runs = |gamma: f64, k: usize| -> Vec<TrainOutcome> {
        TRAIN_SEEDS.iter().map(|&s| train_one(gamma, k, s)).collect()
    };
    let g99_k10 = runs(0.99, 10);
    let g0_k10 = runs(0.0, 10);
    let g99_k2 = runs(0.99, 2);
    let g99_k1 = runs(0.99, 1);
    let (gamma_wins, gamma_detail) = compare_runs(&g99_k10, &g0_k10, 0.25);
    let (k_wins, k_detail) = compare_runs(&g99_k2, &g99_k1, 0.15);
    all &= report(
        4,
        "training improves",
        t,
        &Verdict::new(
            gamma_wins >= 2 && k_wins >= 2,
            format!(
                "gamma 0.99 vs 0 (>= 25%): {gamma_wins}/3 [{gamma_detail}]; \
                 k 2 vs 1 (>= 15%): {k_wins}/3 [{k_detail}]"
            ),
        ),
    );

    let best = g99_k10
        .iter()
        .max_by(|a, b| {
            a.curve
                .final_smoothed()
                .unwrap()
                .total_cmp(&b.curve.final_smoothed().unwrap())
        })
        .unwrap();
    let policy_path = dir.path().join("best.txt");
    save_params(&best.policy, &policy_path).unwrap();
    let learned = ControllerSpec::Policy(policy_path);

    let t = Instant::now();
    let mut hits = 0;
    let mut rows = Vec::new();
    for &seed in &EVAL_SEEDS {
        let p = evaluate(&learned, "random-loss", seed);
        let tcp = evaluate(&ControllerSpec::TcpLike, "random-loss", seed);
        let ok = p.utilization >= 0.70 && tcp.utilization <= 0.50;
        hits += usize::from(ok);
        rows.push(format!(
            "seed {seed}: policy {:.3}, tcp-like {:.3}",
            p.utilization, tcp.utilization
        ));
    }
    all &= report(
        5,
        "random-loss utilization",
        t,
        &Verdict::new(hits >= 2, format!("{hits}/3 seeds [{}]", rows.join("; "))),
    );

    let t = Instant::now();
    let mut hits = 0;
    let mut rows = Vec::new();
    for &seed in &EVAL_SEEDS {
        let p = evaluate(&learned, "alternating", seed);
        let tcp = evaluate(&ControllerSpec::TcpLike, "alternating", seed);
        let ok = p.utilization >= 0.70 && p.latency <= 0.8 * tcp.latency;
        hits += usize::from(ok);
        rows.push(format!(
            "seed {seed}: utilization {:.3}, latency {:.4} s vs tcp-like {:.4} s",
            p.utilization, p.latency, tcp.latency
        ));
    }
    all &= report(
        6,
        "alternating tracking",
        t,
        &Verdict::new(hits >= 2, format!("{hits}/3 seeds [{}]", rows.join("; "))),
    );

    if !all {
        std::process::exit(1);
    }
}
