//! Evaluates the closed-form SINR distributions and checks one of them
//! against simulation with a Kolmogorov-Smirnov statistic.

use thplab::analysis::{cdf_gamma_first, cdf_gamma_n, cdf_highsnr, chi_n, CdfParams};
use thplab::experiments::{validate_cdf, Experiment, ExperimentConfig, Law};
use thplab::numerics::QuadratureSpec;

fn main() -> thplab::Result<()> {
    let p = CdfParams::new(4, 8, 3.0)?;
    let q = QuadratureSpec::default();
    // The laws for later iterations live above x_min = 1/δ − 1.
    println!("# x_min = {:.4}", p.x_min());
    println!("x, F1, F2, F3, F4, F_highsnr2");
    for &f in &[1.1, 1.5, 2.0, 3.0, 5.0, 8.0] {
        let x = f * p.x_min();
        let exact: Vec<String> =
            (2..=4).map(|n| cdf_gamma_n(x, n, &p, &q).map(|v| format!("{v:.5}"))).collect::<Result<_, _>>()?;
        println!("{x:.3}, {:.5}, {}, {:.5}", cdf_gamma_first(x, &p)?, exact.join(", "), cdf_highsnr(x, 2, &p)?);
    }
    for n in 1..=4 {
        match chi_n(n, 1e4, &p) {
            Ok(c) => println!("extreme-value centre for iteration {n} at K = 1e4: {c:.3}"),
            Err(e) => println!("extreme-value centre for iteration {n} at K = 1e4: {e}"),
        }
    }

    let mut cfg = ExperimentConfig::defaults(Experiment::ValidateCdf);
    cfg.trials = 20_000;
    let report = validate_cdf(&cfg, Law::CellModel, 0.02)?;
    println!("{}: KS = {:.4} over {} samples", report.law, report.statistic, report.in_support);
    Ok(())
}
