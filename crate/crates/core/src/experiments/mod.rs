//! Monte Carlo engine, distribution checks and the figure sweeps.
//!
//! Trials run in parallel, each on its own derived random stream, and are
//! collected in trial order, so results never depend on the worker count.
//! A trial that hits a degenerate configuration is redrawn from a child
//! stream; redraws are counted and logged.

mod config;
mod sweeps;
mod validate;

use std::io::Write;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{RngStream, SystemParams};
use crate::error::{Error, Result};
use crate::quantizer::{draw_feedback, Backend, CellDraw, QuantizedCsi};
use crate::scheduler::{greedy_select, Schedule};
use crate::thp::{schedule_sinrs, sum_rate, zfbf_rates_for};

pub use config::{Experiment, ExperimentConfig};
pub use sweeps::{
    coverage_checks, fig1_checks, fig2_checks, fig3_checks, fig4_checks, link_level_checks,
    run_coverage, run_fig1, run_fig2, run_fig3, run_fig4, run_link_level, run_scaling,
    scaling_checks, write_coverage_csv, write_link_level_csv, CoverageRow, LinkLevelRow,
    LinkLevelSummary, COVERAGE_CHECK_USERS, FIG2_CHECK_USERS, SCALING_CHECK_USERS,
};
pub use validate::{
    beta_cdf_integer, gamma_cdf_integer, ks_statistic, law_cdf, law_samples, law_support_min,
    validate_cdf, KsReport, Law, MIN_KS_SAMPLES,
};

/// Redraws allowed per trial before a degeneracy is reported.
pub const MAX_RESAMPLES: u64 = 16;

/// Sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        if xs.is_empty() {
            return Self { mean: f64::NAN, stderr: f64::NAN };
        }
        let mean = xs.iter().sum::<f64>() / n;
        if xs.len() < 2 {
            return Self { mean, stderr: 0.0 };
        }
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Self { mean, stderr: (var / n).sqrt() }
    }
}

/// Per-trial outputs of a Monte Carlo run.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRun<T> {
    pub outputs: Vec<T>,
    /// Trials that needed at least one redraw.
    pub resampled_trials: usize,
    pub redraws: u64,
}

fn one_trial<T, F>(stream: &RngStream, trial: u64, f: &F) -> Result<(T, u64)>
where
    F: Fn(&mut ChaCha8Rng) -> Result<T>,
{
    let mut last = String::new();
    for attempt in 0..=MAX_RESAMPLES {
        let s = if attempt == 0 { *stream } else { stream.child(attempt) };
        match f(&mut s.rng(trial)) {
            Ok(v) => return Ok((v, attempt)),
            Err(Error::Degeneracy(msg)) => {
                log::warn!("trial {trial} attempt {attempt}: {msg}; redrawing");
                last = msg;
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::Degeneracy(format!("trial {trial} still degenerate after {MAX_RESAMPLES} redraws: {last}")))
}

/// Runs `trials` independent trials of `f` in parallel.
pub fn run_trials<T, F>(stream: &RngStream, trials: usize, f: F) -> Result<TrialRun<T>>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> Result<T> + Sync,
{
    let results: Vec<Result<(T, u64)>> =
        (0..trials as u64).into_par_iter().map(|t| one_trial(stream, t, &f)).collect();
    let mut run = TrialRun { outputs: Vec::with_capacity(trials), resampled_trials: 0, redraws: 0 };
    for r in results {
        let (v, redraws) = r?;
        if redraws > 0 {
            run.resampled_trials += 1;
            run.redraws += redraws;
        }
        run.outputs.push(v);
    }
    if run.resampled_trials > 0 {
        log::info!("{} of {trials} trials were redrawn", run.resampled_trials);
    }
    Ok(run)
}

/// One full draw, quantization, schedule and THP evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    pub schedule: Schedule,
    pub sinrs: Vec<f64>,
    pub sum_rate: f64,
}

/// A single trial of the THP chain from the stream's `trial`-th generator.
/// Degenerate draws are returned as errors; [`run_trials`] redraws them.
pub fn run_trial(params: &SystemParams, stream: &RngStream, trial: u64, backend: Backend) -> Result<TrialOutcome> {
    run_trial_with(params, backend, &mut stream.rng(trial))
}

pub fn run_trial_with(params: &SystemParams, backend: Backend, rng: &mut ChaCha8Rng) -> Result<TrialOutcome> {
    let all = draw_feedback(params, backend, rng)?;
    thp_outcome(&all, params)
}

/// Greedy schedule and THP SINRs for given feedback.
pub fn thp_outcome(all: &[QuantizedCsi], params: &SystemParams) -> Result<TrialOutcome> {
    let schedule = greedy_select(all, params)?;
    let sinrs = schedule_sinrs(&schedule, all, params)?;
    let sum_rate = sum_rate(&sinrs);
    Ok(TrialOutcome { schedule, sinrs, sum_rate })
}

pub fn thp_sum_rate(all: &[QuantizedCsi], params: &SystemParams) -> Result<f64> {
    Ok(thp_outcome(all, params)?.sum_rate)
}

/// ZFBF sum rate on the greedy schedule.
pub fn zfbf_sum_rate(all: &[QuantizedCsi], params: &SystemParams) -> Result<f64> {
    let sched = greedy_select(all, params)?;
    Ok(zfbf_rates_for(&sched.selected(all), params)?.iter().sum())
}

/// Perfect-CSI records for the channels behind some feedback.
pub fn perfect_feedback(all: &[QuantizedCsi]) -> Result<Vec<QuantizedCsi>> {
    all.iter().map(|c| QuantizedCsi::perfect(c.user, &c.channel())).collect()
}

/// Feedback for several `(B, K)` pairs from one draw, plus perfect CSI for
/// the largest user set. Smaller user sets are prefixes of the largest one,
/// so points of a sweep are paired.
#[derive(Clone, Debug, PartialEq)]
pub struct FeedbackSet {
    pub quantized: Vec<Vec<QuantizedCsi>>,
    pub perfect: Vec<QuantizedCsi>,
}

pub fn draw_feedback_set(
    params: &SystemParams,
    backend: Backend,
    plan: &[(u32, usize)],
    rng: &mut ChaCha8Rng,
) -> Result<FeedbackSet> {
    let users = plan.iter().map(|p| p.1).max().ok_or_else(|| Error::InvalidParameter("empty plan".into()))?;
    let base = params.with_users(users);
    match backend {
        Backend::CellApprox => {
            let draws: Vec<CellDraw> = (0..users).map(|_| CellDraw::sample(params.antennas, rng)).collect();
            let quantized = plan
                .iter()
                .map(|&(bits, k)| {
                    let delta = base.with_bits(bits).delta();
                    draws[..k].iter().enumerate().map(|(u, d)| d.csi(u, delta)).collect()
                })
                .collect();
            let perfect = draws.iter().enumerate().map(|(u, d)| d.csi(u, 0.0)).collect();
            Ok(FeedbackSet { quantized, perfect })
        }
        Backend::Rvq | Backend::Perfect => {
            let channels = crate::channel::draw_channels_with(&base, rng);
            let perfect = crate::quantizer::quantize_channels(&base, &channels, Backend::Perfect, rng)?;
            let quantized = plan
                .iter()
                .map(|&(bits, k)| {
                    let sub = crate::channel::ChannelSet::from_channels(channels.channels[..k].to_vec());
                    crate::quantizer::quantize_channels(&base.with_bits(bits).with_users(k), &sub, backend, rng)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(FeedbackSet { quantized, perfect })
        }
    }
}

/// A named curve over the sweep axis.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: String,
    pub values: Vec<Estimate>,
}

impl Series {
    pub fn means(&self) -> Vec<f64> {
        self.values.iter().map(|e| e.mean).collect()
    }
}

/// Mean curves with standard errors plus deterministic reference columns.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub axis_name: String,
    pub axis: Vec<f64>,
    pub series: Vec<Series>,
    pub references: Vec<(String, Vec<f64>)>,
    pub trials: usize,
    pub resampled_trials: usize,
}

impl SweepResult {
    pub fn series(&self, name: &str) -> Result<&Series> {
        self.series
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::InvalidParameter(format!("no series named {name}")))
    }

    pub fn reference(&self, name: &str) -> Result<&[f64]> {
        self.references
            .iter()
            .find(|r| r.0 == name)
            .map(|r| r.1.as_slice())
            .ok_or_else(|| Error::InvalidParameter(format!("no reference named {name}")))
    }

    /// Columns: axis, then `<series>_mean` and `<series>_se` per series,
    /// then one column per reference.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![self.axis_name.clone()];
        for s in &self.series {
            header.push(format!("{}_mean", s.name));
            header.push(format!("{}_se", s.name));
        }
        header.extend(self.references.iter().map(|r| r.0.clone()));
        w.write_record(&header)?;
        for (i, a) in self.axis.iter().enumerate() {
            let mut rec = vec![a.to_string()];
            for s in &self.series {
                rec.push(s.values[i].mean.to_string());
                rec.push(s.values[i].stderr.to_string());
            }
            rec.extend(self.references.iter().map(|r| r.1[i].to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Splits per-trial rows laid out point-major (`point * names.len() + v`)
/// into one series per name.
fn series_from_rows(rows: &[Vec<f64>], points: usize, names: &[String]) -> Vec<Series> {
    let v = names.len();
    names
        .iter()
        .enumerate()
        .map(|(j, name)| Series {
            name: name.clone(),
            values: (0..points)
                .map(|i| Estimate::from_samples(&rows.iter().map(|r| r[i * v + j]).collect::<Vec<_>>()))
                .collect(),
        })
        .collect()
}

/// Outcome of one acceptance-style check.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}] {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}
