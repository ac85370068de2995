//! A small sum-rate versus SNR sweep written as CSV to stdout.

use thplab::experiments::{fig1_checks, run_fig1, Experiment, ExperimentConfig};

fn main() -> thplab::Result<()> {
    let mut cfg = ExperimentConfig::defaults(Experiment::Fig1);
    cfg.apply_text("trials = 100\ngrid = 0,10,20,30\n")?;
    let result = run_fig1(&cfg)?;
    result.write_csv(std::io::stdout())?;
    for check in fig1_checks(&result)? {
        eprintln!("{check}");
    }
    Ok(())
}
