//! Command-line front end for the experiments.

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use thplab::experiments::{
    coverage_checks, fig1_checks, fig2_checks, fig3_checks, fig4_checks, link_level_checks, run_coverage,
    run_fig1, run_fig2, run_fig3, run_fig4, run_link_level, run_scaling, scaling_checks, validate_cdf,
    write_coverage_csv, write_link_level_csv, Check, Experiment, ExperimentConfig, Law,
};
use thplab::quantizer::Backend;
use thplab::{Error, Result};

#[derive(Parser)]
#[command(name = "thplab", version, about = "THP with quantized feedback: Monte Carlo experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// KS tests of the closed-form laws against sampled statistics.
    ValidateCdf,
    /// Sum rate versus SNR for two feedback rates.
    Fig1,
    /// Sum rate versus number of users, THP against ZFBF.
    Fig2,
    /// Feedback adapted to SNR at fixed K; SNR gap to perfect CSI.
    Fig3,
    /// Sum rate versus B with B + log2 K fixed, high SNR.
    Fig4,
    /// Sum rate against n_T log2(P/n_T log K) over a K grid.
    Scaling,
    /// Coverage of the extremal concentration intervals.
    Coverage,
    /// Symbol-level simulation of one channel realization.
    LinkLevel,
}

impl Command {
    fn experiment(self) -> Experiment {
        match self {
            Self::ValidateCdf => Experiment::ValidateCdf,
            Self::Fig1 => Experiment::Fig1,
            Self::Fig2 => Experiment::Fig2,
            Self::Fig3 => Experiment::Fig3,
            Self::Fig4 => Experiment::Fig4,
            Self::Scaling => Experiment::Scaling,
            Self::Coverage => Experiment::Coverage,
            Self::LinkLevel => Experiment::LinkLevel,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Rvq,
    CellApprox,
}

#[derive(Args)]
struct Common {
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Trials per point (samples for validate-cdf, symbols for link-level).
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// CSV output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Feedback model.
    #[arg(long, value_enum, global = true)]
    backend: Option<BackendArg>,
    /// key=value file (nT, B, P_dB, M, K, grid, trials, seed, backend).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Evaluate the acceptance checks and exit nonzero if any fails.
    #[arg(long, global = true)]
    check: bool,
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::defaults(cli.command.experiment());
    if let Some(path) = &cli.common.config {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        cfg.apply_text(&text)?;
    }
    if let Some(s) = cli.common.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.common.trials {
        cfg.trials = t;
    }
    if let Some(b) = cli.common.backend {
        cfg.backend = match b {
            BackendArg::Rvq => Backend::Rvq,
            BackendArg::CellApprox => Backend::CellApprox,
        };
    }
    cfg.out = cli.common.out.clone();
    cfg.validate()?;
    Ok(cfg)
}

fn output(cfg: &ExperimentConfig) -> Result<Box<dyn Write>> {
    Ok(match &cfg.out {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

/// Laws run by validate-cdf with their thresholds. Iteration-dependent laws
/// use the grid as the list of iterations.
fn laws(cfg: &ExperimentConfig) -> Vec<(Law, f64)> {
    let mut v = vec![(Law::FirstIteration, 0.01), (Law::CellModel, 0.01)];
    let iterations: Vec<usize> = cfg.grid.iter().map(|&n| n as usize).filter(|&n| n >= 2).collect();
    v.extend(iterations.iter().map(|&n| (Law::OmegaBeta(n), 0.015)));
    v.extend(iterations.iter().map(|&n| (Law::Exact(n), 0.015)));
    v.extend(iterations.iter().map(|&n| (Law::HighSnr(n), 0.015)));
    v
}

fn run_validate(cfg: &ExperimentConfig) -> Result<Vec<Check>> {
    let mut w = csv::Writer::from_writer(output(cfg)?);
    w.write_record(["law", "samples", "in_support", "support_lo", "support_hi", "ks", "threshold", "passed"])?;
    let mut checks = Vec::new();
    for (law, threshold) in laws(cfg) {
        let mut c = cfg.clone();
        // One greedy run contributes about K samples; run one per 100 requested.
        if let Law::OmegaBeta(_) = law {
            c.trials = cfg.trials.div_ceil(100);
        }
        let r = validate_cdf(&c, law, threshold)?;
        w.write_record([
            law.to_string(),
            r.samples.to_string(),
            r.in_support.to_string(),
            r.support.0.to_string(),
            r.support.1.to_string(),
            r.statistic.to_string(),
            threshold.to_string(),
            r.passed.to_string(),
        ])?;
        w.flush()?;
        checks.push(Check::new(
            format!("validate-cdf: {law} KS < {threshold}"),
            r.passed,
            format!("KS {:.5} on {} samples", r.statistic, r.in_support),
        ));
    }
    Ok(checks)
}

fn run(cli: &Cli) -> Result<Vec<Check>> {
    let cfg = build_config(cli)?;
    log::info!("{} with {:?}", cfg.experiment, cfg);
    match cfg.experiment {
        Experiment::ValidateCdf => run_validate(&cfg),
        Experiment::Fig1 => {
            let r = run_fig1(&cfg)?;
            r.write_csv(output(&cfg)?)?;
            fig1_checks(&r)
        }
        Experiment::Fig2 => {
            let r = run_fig2(&cfg)?;
            r.write_csv(output(&cfg)?)?;
            fig2_checks(&r)
        }
        Experiment::Fig3 => {
            let r = run_fig3(&cfg)?;
            r.write_csv(output(&cfg)?)?;
            fig3_checks(&r)
        }
        Experiment::Fig4 => {
            let r = run_fig4(&cfg)?;
            r.write_csv(output(&cfg)?)?;
            fig4_checks(&r)
        }
        Experiment::Scaling => {
            let r = run_scaling(&cfg)?;
            r.write_csv(output(&cfg)?)?;
            scaling_checks(&r)
        }
        Experiment::Coverage => {
            let rows = run_coverage(&cfg)?;
            write_coverage_csv(&rows, output(&cfg)?)?;
            Ok(coverage_checks(&rows))
        }
        Experiment::LinkLevel => {
            let s = run_link_level(&cfg)?;
            write_link_level_csv(&s, output(&cfg)?)?;
            Ok(link_level_checks(&s))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(checks) => {
            if !cli.common.check {
                return ExitCode::SUCCESS;
            }
            for c in &checks {
                eprintln!("{c}");
            }
            if checks.iter().all(|c| c.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
