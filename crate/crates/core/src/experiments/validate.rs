//! Goodness of fit of the closed-form laws against sampled statistics.

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{run_trials, ExperimentConfig};
use crate::analysis::{cdf_gamma_first, cdf_gamma_n, cdf_highsnr, CdfParams};
use crate::channel::{isotropic_unit, SystemParams};
use crate::error::{Error, Result};
use crate::numerics::{ComplexVector, QuadratureSpec};
use crate::quantizer::{cell_approx_csi, draw_feedback, sample_cell_approx_with, QuantizedCsi};
use crate::scheduler::{greedy_select, metric_first, metric_n};

/// Minimum number of samples inside the evaluation support.
pub const MIN_KS_SAMPLES: usize = 100;

const BATCH: usize = 1000;

/// `P(k, x)` for integer shape: `1 − e^{−x} Σ_{j<k} x^j/j!`.
pub fn gamma_cdf_integer(x: f64, shape: usize) -> f64 {
    if !(x > 0.0) {
        return 0.0;
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1..shape {
        term *= x / j as f64;
        sum += term;
    }
    (1.0 - (-x).exp() * sum).clamp(0.0, 1.0)
}

/// Regularized incomplete beta `I_x(a, b)` for integer shapes, as a binomial tail.
pub fn beta_cdf_integer(x: f64, a: usize, b: usize) -> f64 {
    if !(x > 0.0) {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let n = a + b - 1;
    let mut sum = 0.0;
    let mut binom = 1.0;
    for j in 0..=n {
        if j > 0 {
            binom *= (n + 1 - j) as f64 / j as f64;
        }
        if j >= a {
            sum += binom * x.powi(j as i32) * (1.0 - x).powi((n - j) as i32);
        }
    }
    sum.clamp(0.0, 1.0)
}

/// `sup |F_emp − F|` over the sample points inside `[lo, hi]`, with both
/// one-sided limits of the empirical CDF at ties. The empirical CDF counts
/// every sample, including those outside the support.
pub fn ks_statistic<F>(samples: &[f64], cdf: F, support: (f64, f64)) -> Result<f64>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::Domain("samples contain NaN".into()));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    // (value, count strictly below, count at or below)
    let mut groups: Vec<(f64, usize, usize)> = Vec::new();
    let mut i = 0;
    while i < xs.len() {
        let mut j = i;
        while j < xs.len() && xs[j] == xs[i] {
            j += 1;
        }
        if xs[i] >= support.0 && xs[i] <= support.1 {
            groups.push((xs[i], i, j));
        }
        i = j;
    }
    let inside: usize = groups.iter().map(|g| g.2 - g.1).sum();
    if inside < MIN_KS_SAMPLES {
        return Err(Error::StatisticalPower { needed: MIN_KS_SAMPLES, have: inside });
    }
    let d = groups
        .par_iter()
        .map(|&(x, below, upto)| {
            let f = cdf(x)?;
            Ok((f - below as f64 / n).abs().max((upto as f64 / n - f).abs()))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(d.into_iter().fold(0.0, f64::max))
}

/// Which sampled statistic is compared with which closed form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Law {
    /// First-iteration SINR under the cell model against its closed form.
    FirstIteration,
    /// Residual energy `ω` of the candidates at iteration `n` of greedy runs
    /// against `Beta(n_T−n+1, n−1)`.
    OmegaBeta(usize),
    /// `ρ² sin²θ / δ` under the cell model against `Gamma(n_T−1)`.
    CellModel,
    /// SINR at iteration `n` against the exact quadrature CDF.
    Exact(usize),
    /// `ω cos²θ / sin²θ` at iteration `n` against the interference-limited law.
    HighSnr(usize),
}

impl std::fmt::Display for Law {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::FirstIteration => write!(f, "first-iteration"),
            Self::OmegaBeta(n) => write!(f, "omega-beta n={n}"),
            Self::CellModel => write!(f, "cell-model"),
            Self::Exact(n) => write!(f, "exact n={n}"),
            Self::HighSnr(n) => write!(f, "high-snr n={n}"),
        }
    }
}

/// Result of one goodness-of-fit run.
#[derive(Clone, Debug, PartialEq)]
pub struct KsReport {
    pub law: Law,
    pub samples: usize,
    pub in_support: usize,
    pub statistic: f64,
    pub support: (f64, f64),
    pub threshold: f64,
    pub passed: bool,
}

/// `n − 1` orthonormal isotropic directions.
fn random_basis(rng: &mut ChaCha8Rng, antennas: usize, count: usize) -> Result<Vec<ComplexVector>> {
    let mut basis: Vec<ComplexVector> = Vec::with_capacity(count);
    while basis.len() < count {
        let v = isotropic_unit(rng, antennas).project_out(&basis)?;
        if let Ok(u) = v.normalized() {
            basis.push(u);
        }
    }
    Ok(basis)
}

/// A cell-model record with its residual energy against a random
/// `(n−1)`-dimensional subspace.
fn cell_with_residual(params: &SystemParams, n: usize, rng: &mut ChaCha8Rng) -> Result<(QuantizedCsi, Vec<ComplexVector>)> {
    let basis = random_basis(rng, params.antennas, n - 1)?;
    Ok((cell_approx_csi(0, params, rng), basis))
}

fn check_iteration(n: usize, params: &SystemParams) -> Result<()> {
    if n < 1 || n > params.antennas {
        return Err(Error::InvalidParameter(format!("iteration {n} outside 1..={}", params.antennas)));
    }
    Ok(())
}

fn batched<F>(cfg: &ExperimentConfig, law: Law, f: F) -> Result<Vec<f64>>
where
    F: Fn(&mut ChaCha8Rng) -> Result<f64> + Sync,
{
    let batches = cfg.trials.div_ceil(BATCH);
    let stream = cfg.stream().child(law_tag(law));
    let run = run_trials(&stream, batches, |rng| (0..BATCH).map(|_| f(rng)).collect::<Result<Vec<f64>>>())?;
    let mut out: Vec<f64> = run.outputs.into_iter().flatten().collect();
    out.truncate(cfg.trials);
    Ok(out)
}

fn law_tag(law: Law) -> u64 {
    match law {
        Law::FirstIteration => 1,
        Law::OmegaBeta(n) => 100 + n as u64,
        Law::CellModel => 2,
        Law::Exact(n) => 200 + n as u64,
        Law::HighSnr(n) => 300 + n as u64,
    }
}

/// Draws the statistic behind `law`. For [`Law::OmegaBeta`] `cfg.trials`
/// counts greedy runs over `cfg.params.users` users and every remaining
/// candidate contributes one sample; otherwise it is the sample count.
pub fn law_samples(cfg: &ExperimentConfig, law: Law) -> Result<Vec<f64>> {
    let p = cfg.params;
    match law {
        Law::FirstIteration => batched(cfg, law, |rng| Ok(metric_first(&cell_approx_csi(0, &p, rng), &p))),
        Law::CellModel => {
            let delta = p.delta();
            batched(cfg, law, |rng| Ok(sample_cell_approx_with(p.antennas, delta, rng).1 / delta))
        }
        Law::Exact(n) => {
            check_iteration(n, &p)?;
            batched(cfg, law, |rng| {
                let (csi, basis) = cell_with_residual(&p, n, rng)?;
                Ok(metric_n(&csi, &basis, &p)?.0)
            })
        }
        Law::HighSnr(n) => {
            check_iteration(n, &p)?;
            batched(cfg, law, |rng| {
                let (csi, basis) = cell_with_residual(&p, n, rng)?;
                let omega = csi.h_hat.project_out(&basis)?.norm_sqr();
                Ok(omega * csi.cos_sqr / csi.sin_sqr)
            })
        }
        Law::OmegaBeta(n) => {
            if n < 2 || n > p.antennas {
                return Err(Error::InvalidParameter(format!("iteration {n} outside 2..={}", p.antennas)));
            }
            if p.users < 500 {
                return Err(Error::StatisticalPower { needed: 500, have: p.users });
            }
            let stream = cfg.stream().child(law_tag(law));
            let run = run_trials(&stream, cfg.trials, |rng| {
                let all = draw_feedback(&p, cfg.backend, rng)?;
                let sched = greedy_select(&all, &p)?;
                let basis = &sched.basis[..n - 1];
                let taken = &sched.users[..n - 1];
                all.iter()
                    .filter(|c| !taken.contains(&c.user))
                    .map(|c| Ok(c.h_hat.project_out(basis)?.norm_sqr()))
                    .collect::<Result<Vec<f64>>>()
            })?;
            Ok(run.outputs.into_iter().flatten().collect())
        }
    }
}

/// Lower end of the support on which the law is claimed.
pub fn law_support_min(params: &SystemParams, law: Law) -> f64 {
    match law {
        Law::FirstIteration | Law::Exact(_) | Law::HighSnr(_) => params.x_min(),
        Law::OmegaBeta(_) | Law::CellModel => 0.0,
    }
}

/// The closed-form CDF of `law`.
pub fn law_cdf(params: &SystemParams, law: Law, x: f64) -> Result<f64> {
    let cp = CdfParams::from_system(params);
    let nt = params.antennas;
    match law {
        Law::FirstIteration => cdf_gamma_first(x, &cp),
        Law::OmegaBeta(n) => Ok(beta_cdf_integer(x, nt - n + 1, n - 1)),
        Law::CellModel => Ok(gamma_cdf_integer(x, nt - 1)),
        Law::Exact(n) => cdf_gamma_n(x, n, &cp, &QuadratureSpec::default()),
        Law::HighSnr(n) => cdf_highsnr(x, n, &cp),
    }
}

/// Samples the statistic, compares it with the closed form on
/// `[support minimum, empirical 0.999 quantile]` and reports the KS distance.
pub fn validate_cdf(cfg: &ExperimentConfig, law: Law, threshold: f64) -> Result<KsReport> {
    let samples = law_samples(cfg, law)?;
    let mut sorted = samples.clone();
    sorted.sort_by(f64::total_cmp);
    let hi = sorted[((sorted.len() as f64 * 0.999) as usize).min(sorted.len() - 1)];
    let lo = law_support_min(&cfg.params, law);
    let support = (lo, hi);
    let in_support = sorted.iter().filter(|&&x| x >= lo && x <= hi).count();
    let statistic = ks_statistic(&samples, |x| law_cdf(&cfg.params, law, x), support)?;
    Ok(KsReport {
        law,
        samples: samples.len(),
        in_support,
        statistic,
        support,
        threshold,
        passed: statistic < threshold,
    })
}

/// Inverse-CDF draws used by the KS self-tests.
#[cfg(test)]
fn exponential_samples(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    use rand::Rng;
    (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect()
}
