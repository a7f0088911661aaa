//! Sweeps bottleneck bandwidth for both baselines and prints the CSV.

use ccrl::harness::{sweep, sweep_csv, ControllerSpec, Scenario, SweepAxis, SweepSpec};

fn main() -> ccrl::Result<()> {
    let spec = SweepSpec::new(
        SweepAxis::Bandwidth,
        vec![5.0, 10.0, 20.0, 50.0],
        Scenario::standard(),
        vec![ControllerSpec::TcpLike, ControllerSpec::Oracle],
    )?;
    print!("{}", sweep_csv(&sweep(&spec, 2, None)?));
    Ok(())
}
