use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ccrl::harness::{
    builtin_scenario, compare, load_config, make_controller, run_scenario, summary_csv_header, sweep,
    ControllerSpec, Scenario, SweepAxis, SweepSpec, TrainConfig,
};
use ccrl::ppo::train;

#[derive(Parser)]
#[command(
    name = "ccrl",
    about = "Rate control experiments on a simulated link",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a policy; writes policy.txt and training.csv into --out.
    Train {
        /// `key = value` config file; defaults are used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one controller on a scenario and print its summary.
    Eval {
        /// Policy file, `tcp-like` or `oracle`.
        #[arg(long)]
        policy: String,
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Per-interval trace CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Vary one link parameter of the standard scenario.
    Sweep {
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated values: Mbps, ms, packets or loss fraction.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        controllers: Vec<String>,
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Average several controllers over seeds on one scenario.
    Compare {
        #[arg(long)]
        scenario: String,
        #[arg(long, value_delimiter = ',', required = true)]
        controllers: Vec<String>,
        #[arg(long, default_value_t = 3)]
        seeds: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> ccrl::Result<()> {
    match cli.command {
        Command::Train { config, seed, out } => {
            let cfg = match config {
                Some(path) => load_config(path)?,
                None => TrainConfig::default(),
            };
            let outcome = train(&cfg.env, &cfg.ppo, seed, &out)?;
            let last = outcome.curve.rows().last().expect("at least one update");
            println!(
                "{} updates, {} episodes, smoothed reward {:.1}; wrote {}",
                outcome.curve.len(),
                last.episodes,
                last.smoothed_reward,
                out.display()
            );
        }
        Command::Eval {
            policy,
            scenario,
            seed,
            trace,
        } => {
            let scenario = builtin_scenario(&scenario)?;
            let mut ctrl = make_controller(&ControllerSpec::parse(&policy), &scenario)?;
            let run = run_scenario(&scenario, ctrl.as_mut(), seed, trace.as_deref())?;
            println!("{}", summary_csv_header());
            println!("{}", run.summary.csv_row());
        }
        Command::Sweep {
            axis,
            values,
            controllers,
            seeds,
            out,
        } => {
            let controllers = controllers.iter().map(|c| ControllerSpec::parse(c)).collect();
            let spec = SweepSpec::new(axis, values, Scenario::standard(), controllers)?;
            let rows = sweep(&spec, seeds, Some(&out))?;
            println!("{} rows written to {}", rows.len(), out.display());
        }
        Command::Compare {
            scenario,
            controllers,
            seeds,
            out,
        } => {
            let scenario = builtin_scenario(&scenario)?;
            let controllers: Vec<_> = controllers.iter().map(|c| ControllerSpec::parse(c)).collect();
            for row in compare(&scenario, &controllers, seeds, Some(&out))? {
                println!(
                    "{:<12} throughput {:8.1} pps  latency {:.4} s  loss {:.4}  utilization {:.3}",
                    row.controller, row.throughput, row.latency, row.loss, row.utilization
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
