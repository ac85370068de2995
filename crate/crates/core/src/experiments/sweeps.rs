//! Sum-rate sweeps, the scaling table, extremal coverage and link level.

use std::io::Write;

use super::{
    draw_feedback_set, run_trials, series_from_rows, thp_sum_rate, zfbf_sum_rate, Check, Estimate,
    ExperimentConfig, Series, SweepResult,
};
use crate::analysis::{extreme_interval, scaling_targets, tradeoff_bits, tradeoff_constant, tradeoff_users, CdfParams};
use crate::channel::{db_to_linear, linear_to_db};
use crate::error::{Error, Result};
use crate::numerics::ComplexVector;
use crate::quantizer::draw_feedback;
use crate::scheduler::greedy_select;
use crate::thp::{build_precoders, link_level, quantization_interference, th_encode, transmit_receive_with_noise};

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

fn ceiling(users: f64, cfg: &ExperimentConfig, power: f64) -> Result<f64> {
    Ok(scaling_targets(users, &cfg.params.with_power(power))?.bc_ceiling)
}

/// Sum rate versus SNR at fixed `K` for feedback rates `B` and `B + 4`.
///
/// Series: `thp_q_lo`, `thp_q_hi`, `zfbf_q_lo`, `zfbf_q_hi`, `thp_perfect`,
/// `zfbf_perfect`, and the paired differences `hi_minus_lo` and
/// `perfect_minus_q_lo`/`perfect_minus_q_hi` (THP). The reference column is
/// the broadcast ceiling.
pub fn run_fig1(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let p = cfg.params;
    let k = p.users;
    let bits = [p.feedback_bits, p.feedback_bits + 4];
    let plan = [(bits[0], k), (bits[1], k)];
    let run = run_trials(&cfg.stream(), cfg.trials, |rng| {
        let fb = draw_feedback_set(&p, cfg.backend, &plan, rng)?;
        let mut row = Vec::with_capacity(cfg.grid.len() * 9);
        for &db in &cfg.grid {
            let q = p.with_power(db_to_linear(db));
            let lo = thp_sum_rate(&fb.quantized[0], &q)?;
            let hi = thp_sum_rate(&fb.quantized[1], &q)?;
            let perfect = thp_sum_rate(&fb.perfect, &q)?;
            row.extend([
                lo,
                hi,
                zfbf_sum_rate(&fb.quantized[0], &q)?,
                zfbf_sum_rate(&fb.quantized[1], &q)?,
                perfect,
                zfbf_sum_rate(&fb.perfect, &q)?,
                hi - lo,
                perfect - lo,
                perfect - hi,
            ]);
        }
        Ok(row)
    })?;
    let names = names(&[
        "thp_q_lo",
        "thp_q_hi",
        "zfbf_q_lo",
        "zfbf_q_hi",
        "thp_perfect",
        "zfbf_perfect",
        "hi_minus_lo",
        "perfect_minus_q_lo",
        "perfect_minus_q_hi",
    ]);
    let ceil = cfg.grid.iter().map(|&db| ceiling(k as f64, cfg, db_to_linear(db))).collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        axis_name: "p_db".into(),
        axis: cfg.grid.clone(),
        series: series_from_rows(&run.outputs, cfg.grid.len(), &names),
        references: vec![
            ("bits_lo".into(), vec![f64::from(bits[0]); cfg.grid.len()]),
            ("bits_hi".into(), vec![f64::from(bits[1]); cfg.grid.len()]),
            ("bc_ceiling".into(), ceil),
        ],
        trials: cfg.trials,
        resampled_trials: run.resampled_trials,
    })
}

/// Slope in bits per dB between the last grid point and the point closest
/// to 10 dB below it.
fn top_decade_slope(axis: &[f64], s: &Series) -> f64 {
    let last = axis.len() - 1;
    let target = axis[last] - 10.0;
    let (i, _) = axis
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - target).abs().total_cmp(&(b.1 - target).abs()))
        .expect("nonempty axis");
    if i == last {
        return f64::NAN;
    }
    (s.values[last].mean - s.values[i].mean) / (axis[last] - axis[i])
}

/// Higher rate within two standard errors of the paired difference.
fn not_below(d: &Series) -> (bool, String) {
    let worst = d
        .values
        .iter()
        .map(|e| e.mean + 2.0 * e.stderr)
        .fold(f64::INFINITY, f64::min);
    (worst >= 0.0, format!("min(diff + 2se) = {worst:.4}"))
}

pub fn fig1_checks(r: &SweepResult) -> Result<Vec<Check>> {
    let (ok, detail) = not_below(r.series("hi_minus_lo")?);
    let mut checks = vec![Check::new("fig1: more bits never worse (2 se)", ok, detail)];
    let (a, da) = not_below(r.series("perfect_minus_q_lo")?);
    let (b, db) = not_below(r.series("perfect_minus_q_hi")?);
    checks.push(Check::new("fig1: quantized <= perfect (2 se)", a && b, format!("{da}; {db}")));
    let sp = top_decade_slope(&r.axis, r.series("thp_perfect")?);
    let slo = top_decade_slope(&r.axis, r.series("thp_q_lo")?);
    let shi = top_decade_slope(&r.axis, r.series("thp_q_hi")?);
    checks.push(Check::new(
        "fig1: quantized curves flatten in the top decade",
        slo < 0.5 * sp && shi < 0.5 * sp,
        format!("slopes (bits/dB): perfect {sp:.4}, lo {slo:.4}, hi {shi:.4}"),
    ));
    Ok(checks)
}

/// Sum rate versus `K` at fixed SNR, THP against ZFBF.
///
/// Series: `thp_q`, `zfbf_q`, `thp_perfect`, `zfbf_perfect`, and the paired
/// gaps `gap_q = thp_q − zfbf_q`, `gap_perfect = thp_perfect − zfbf_perfect`.
pub fn run_fig2(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let p = cfg.params;
    let names = names(&["thp_q", "zfbf_q", "thp_perfect", "zfbf_perfect", "gap_q", "gap_perfect"]);
    let mut series: Vec<Series> = names.iter().map(|n| Series { name: n.clone(), values: vec![] }).collect();
    let mut resampled = 0;
    let mut ceil = Vec::new();
    for &kf in &cfg.grid {
        let k = users_from_axis(kf)?;
        let q = p.with_users(k);
        let run = run_trials(&cfg.stream(), cfg.trials, |rng| {
            let fb = draw_feedback_set(&q, cfg.backend, &[(q.feedback_bits, k)], rng)?;
            let tq = thp_sum_rate(&fb.quantized[0], &q)?;
            let zq = zfbf_sum_rate(&fb.quantized[0], &q)?;
            let tp = thp_sum_rate(&fb.perfect, &q)?;
            let zp = zfbf_sum_rate(&fb.perfect, &q)?;
            Ok(vec![tq, zq, tp, zp, tq - zq, tp - zp])
        })?;
        resampled += run.resampled_trials;
        for (s, col) in series.iter_mut().zip(series_from_rows(&run.outputs, 1, &names)) {
            s.values.push(col.values[0]);
        }
        ceil.push(ceiling(kf, cfg, p.power)?);
    }
    Ok(SweepResult {
        axis_name: "users".into(),
        axis: cfg.grid.clone(),
        series,
        references: vec![("bc_ceiling".into(), ceil)],
        trials: cfg.trials,
        resampled_trials: resampled,
    })
}

fn users_from_axis(k: f64) -> Result<usize> {
    if !(k >= 1.0) || k.fract() != 0.0 {
        return Err(Error::Config(format!("user count {k} is not a positive integer")));
    }
    Ok(k as usize)
}

/// User counts at which the fig2 trends are asserted when all are on the grid.
pub const FIG2_CHECK_USERS: [f64; 3] = [50.0, 200.0, 1000.0];

fn check_points(axis: &[f64]) -> Vec<usize> {
    let idx: Vec<usize> =
        FIG2_CHECK_USERS.iter().filter_map(|k| axis.iter().position(|a| a == k)).collect();
    if idx.len() == FIG2_CHECK_USERS.len() {
        idx
    } else {
        (0..axis.len()).collect()
    }
}

/// Each step of `s` over `idx` moves in direction `sign` within two
/// standard errors, and the end-to-end change is significant at two.
fn trend(s: &Series, idx: &[usize], sign: f64) -> (bool, String) {
    let se = |a: usize, b: usize| (s.values[a].stderr.powi(2) + s.values[b].stderr.powi(2)).sqrt();
    let steps_ok = idx.windows(2).all(|w| sign * (s.values[w[1]].mean - s.values[w[0]].mean) >= -2.0 * se(w[0], w[1]));
    let (a, b) = (idx[0], idx[idx.len() - 1]);
    let total = sign * (s.values[b].mean - s.values[a].mean);
    let vals: Vec<String> = idx.iter().map(|&i| format!("{:.3}±{:.3}", s.values[i].mean, s.values[i].stderr)).collect();
    (steps_ok && total > 2.0 * se(a, b), format!("{}: {}", s.name, vals.join(" -> ")))
}

pub fn fig2_checks(r: &SweepResult) -> Result<Vec<Check>> {
    let idx = check_points(&r.axis);
    let gq = r.series("gap_q")?;
    let min_gap = idx.iter().map(|&i| gq.values[i].mean + 2.0 * gq.values[i].stderr).fold(f64::INFINITY, f64::min);
    let mut checks = vec![Check::new("fig2: THP-Q >= ZFBF-Q (2 se)", min_gap >= 0.0, format!("min(gap + 2se) = {min_gap:.4}"))];
    let (ok, d) = trend(gq, &idx, 1.0);
    checks.push(Check::new("fig2: quantized THP-ZFBF gap increases in K", ok, d));
    let (ok, d) = trend(r.series("gap_perfect")?, &idx, -1.0);
    checks.push(Check::new("fig2: perfect-CSI THP-ZFBF gap decreases in K", ok, d));
    let mut all_ok = true;
    let mut details = Vec::new();
    for name in ["thp_q", "zfbf_q", "thp_perfect", "zfbf_perfect"] {
        let (ok, d) = trend(r.series(name)?, &idx, 1.0);
        all_ok &= ok;
        details.push(d);
    }
    checks.push(Check::new("fig2: all series increase in K", all_ok, details.join("; ")));
    Ok(checks)
}

/// Linear interpolation of the SNR (dB) at which an increasing curve reaches `rate`.
fn invert_curve(db: &[f64], rate: &[f64], target: f64) -> Option<f64> {
    if target < rate[0] || target > rate[rate.len() - 1] {
        return None;
    }
    for i in 1..db.len() {
        if rate[i] >= target {
            let t = if rate[i] > rate[i - 1] { (target - rate[i - 1]) / (rate[i] - rate[i - 1]) } else { 0.0 };
            return Some(db[i - 1] + t * (db[i] - db[i - 1]));
        }
    }
    None
}

/// Fine SNR grid for the perfect-CSI reference curves of fig3.
fn fig3_fine_grid(grid: &[f64]) -> Vec<f64> {
    let lo = grid[0] - 25.0;
    let hi = grid[grid.len() - 1];
    let steps = ((hi - lo) / 0.5).ceil() as usize;
    (0..=steps).map(|i| lo + 0.5 * i as f64).collect()
}

/// Feedback adapted to SNR along `B + log₂K = (n_T−1) log₂P + c`, with `c`
/// fixed by the anchor `(K, B, P)` of the configuration and `K` held fixed.
///
/// Series: `thp_q`, `zfbf_q`, `thp_perfect`, `zfbf_perfect` and the paired
/// rate gaps `rate_gap_thp`, `rate_gap_zfbf`. References: the adapted `bits`
/// and the SNR gaps `snr_gap_thp_db`, `snr_gap_zfbf_db`, i.e. how much less
/// SNR the perfect-CSI scheme needs for the same mean rate.
pub fn run_fig3(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let p = cfg.params;
    let k = p.users;
    let c = tradeoff_constant(k as f64, f64::from(p.feedback_bits), p.power, p.antennas);
    let bits = cfg
        .grid
        .iter()
        .map(|&db| tradeoff_bits(k as f64, db_to_linear(db), p.antennas, c))
        .collect::<Result<Vec<u32>>>()?;
    let plan: Vec<(u32, usize)> = bits.iter().map(|&b| (b, k)).collect();
    let fine = fig3_fine_grid(&cfg.grid);
    let m = cfg.grid.len();
    let run = run_trials(&cfg.stream(), cfg.trials, |rng| {
        let fb = draw_feedback_set(&p, cfg.backend, &plan, rng)?;
        let mut row = Vec::with_capacity(6 * m + 2 * fine.len());
        for (i, &db) in cfg.grid.iter().enumerate() {
            let q = p.with_power(db_to_linear(db)).with_bits(bits[i]);
            let tq = thp_sum_rate(&fb.quantized[i], &q)?;
            let zq = zfbf_sum_rate(&fb.quantized[i], &q)?;
            let tp = thp_sum_rate(&fb.perfect, &q)?;
            let zp = zfbf_sum_rate(&fb.perfect, &q)?;
            row.extend([tq, zq, tp, zp, tp - tq, zp - zq]);
        }
        for &db in &fine {
            let q = p.with_power(db_to_linear(db));
            row.push(thp_sum_rate(&fb.perfect, &q)?);
            row.push(zfbf_sum_rate(&fb.perfect, &q)?);
        }
        Ok(row)
    })?;
    let names = names(&["thp_q", "zfbf_q", "thp_perfect", "zfbf_perfect", "rate_gap_thp", "rate_gap_zfbf"]);
    let head: Vec<Vec<f64>> = run.outputs.iter().map(|r| r[..6 * m].to_vec()).collect();
    let tail: Vec<Vec<f64>> = run.outputs.iter().map(|r| r[6 * m..].to_vec()).collect();
    let series = series_from_rows(&head, m, &names);
    let curves = series_from_rows(&tail, fine.len(), &names[2..4]);
    let gap = |q: &Series, perfect: &Series| -> Vec<f64> {
        let pm = perfect.means();
        cfg.grid
            .iter()
            .zip(q.values.iter())
            .map(|(&db, e)| invert_curve(&fine, &pm, e.mean).map_or(f64::NAN, |d| db - d))
            .collect()
    };
    let snr_gap_thp = gap(&series[0], &curves[0]);
    let snr_gap_zfbf = gap(&series[1], &curves[1]);
    Ok(SweepResult {
        axis_name: "p_db".into(),
        axis: cfg.grid.clone(),
        series,
        references: vec![
            ("bits".into(), bits.iter().map(|&b| f64::from(b)).collect()),
            ("snr_gap_thp_db".into(), snr_gap_thp),
            ("snr_gap_zfbf_db".into(), snr_gap_zfbf),
        ],
        trials: cfg.trials,
        resampled_trials: run.resampled_trials,
    })
}

/// Sample mean and standard deviation over the grid.
fn spread(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = if xs.len() > 1 { (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
    (mean, sd)
}

pub fn fig3_checks(r: &SweepResult) -> Result<Vec<Check>> {
    let thp = r.reference("snr_gap_thp_db")?;
    let zf = r.reference("snr_gap_zfbf_db")?;
    let finite = thp.iter().chain(zf).all(|g| g.is_finite());
    let (mean, sd) = spread(thp);
    let rel = sd / mean;
    let fmt = |v: &[f64]| v.iter().map(|g| format!("{g:.2}")).collect::<Vec<_>>().join(" ");
    Ok(vec![
        Check::new(
            "fig3: THP-Q SNR gap to perfect CSI is flat (rel. std < 20%)",
            finite && mean > 0.0 && rel < 0.2,
            format!("gaps (dB): {}; mean {mean:.3}, rel. std {rel:.3}", fmt(thp)),
        ),
        Check::new(
            "fig3: ZFBF gap exceeds THP gap",
            finite && thp.iter().zip(zf).all(|(t, z)| z > t),
            format!("ZFBF gaps (dB): {}", fmt(zf)),
        ),
    ])
}

/// Sum rate versus `B` with `B + log₂K` held at the anchor value, at `P`
/// and `P + 5 dB`. Smaller user sets are prefixes of the largest.
///
/// Series: `thp_q_p<dB>`, `zfbf_q_p<dB>` per power. Reference: `users`.
pub fn run_fig4(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let p = cfg.params;
    let total = f64::from(p.feedback_bits) + (p.users as f64).log2();
    let powers = [p.power, p.power * db_to_linear(5.0)];
    let plan = cfg
        .grid
        .iter()
        .map(|&b| {
            if !(b >= 1.0) || b.fract() != 0.0 {
                return Err(Error::Config(format!("feedback bits {b} is not a positive integer")));
            }
            let bits = b as u32;
            let k = tradeoff_users(bits, total)?;
            if k < p.antennas {
                return Err(Error::Infeasible(format!("B = {bits} leaves K = {k} < n_T")));
            }
            Ok((bits, k))
        })
        .collect::<Result<Vec<_>>>()?;
    let run = run_trials(&cfg.stream(), cfg.trials, |rng| {
        let fb = draw_feedback_set(&p, cfg.backend, &plan, rng)?;
        let mut row = Vec::new();
        for (i, &(bits, k)) in plan.iter().enumerate() {
            for &pw in &powers {
                let q = p.with_power(pw).with_bits(bits).with_users(k);
                row.push(thp_sum_rate(&fb.quantized[i], &q)?);
                row.push(zfbf_sum_rate(&fb.quantized[i], &q)?);
            }
        }
        Ok(row)
    })?;
    let mut names = Vec::new();
    for &pw in &powers {
        let db = linear_to_db(pw).round();
        names.push(format!("thp_q_p{db}"));
        names.push(format!("zfbf_q_p{db}"));
    }
    Ok(SweepResult {
        axis_name: "bits".into(),
        axis: cfg.grid.clone(),
        series: series_from_rows(&run.outputs, plan.len(), &names),
        references: vec![("users".into(), plan.iter().map(|p| p.1 as f64).collect())],
        trials: cfg.trials,
        resampled_trials: run.resampled_trials,
    })
}

pub fn fig4_checks(r: &SweepResult) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let mut differ = Vec::new();
    for s in r.series.iter().filter(|s| s.name.starts_with("thp_q_")) {
        let m = s.means();
        let (mean, _) = spread(&m);
        let range = m.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - m.iter().cloned().fold(f64::INFINITY, f64::min);
        checks.push(Check::new(
            format!("fig4: {} varies < 10% across B", s.name),
            range / mean < 0.1,
            format!("range/mean = {:.4}", range / mean),
        ));
        let z = r.series(&s.name.replacen("thp", "zfbf", 1))?;
        differ.push(s.values.iter().zip(&z.values).any(|(a, b)| {
            (a.mean - b.mean).abs() > 2.0 * (a.stderr.powi(2) + b.stderr.powi(2)).sqrt()
        }));
    }
    checks.push(Check::new("fig4: ZFBF differs from THP", differ.iter().all(|&d| d), format!("{differ:?}")));
    Ok(checks)
}

/// Mean THP sum rate over a `K` grid against `n_T log₂(ϱ log K)`.
///
/// Series: `thp_q`, `ratio` (`thp_q / rate_target`). References:
/// `rate_target`, `bc_ceiling`, `bc_gap_rel` (`(bc_ceiling − thp_q)/thp_q`).
pub fn run_scaling(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let p = cfg.params;
    let mut rate = Vec::new();
    let mut ratio = Vec::new();
    let mut target = Vec::new();
    let mut bc = Vec::new();
    let mut gap = Vec::new();
    let mut resampled = 0;
    for &kf in &cfg.grid {
        let q = p.with_users(users_from_axis(kf)?);
        let t = scaling_targets(kf, &q)?;
        let run = run_trials(&cfg.stream(), cfg.trials, |rng| thp_sum_rate(&draw_feedback(&q, cfg.backend, rng)?, &q))?;
        resampled += run.resampled_trials;
        let e = Estimate::from_samples(&run.outputs);
        rate.push(e);
        ratio.push(Estimate { mean: e.mean / t.rate_target, stderr: e.stderr / t.rate_target });
        target.push(t.rate_target);
        bc.push(t.bc_ceiling);
        gap.push((t.bc_ceiling - e.mean) / e.mean);
    }
    Ok(SweepResult {
        axis_name: "users".into(),
        axis: cfg.grid.clone(),
        series: vec![Series { name: "thp_q".into(), values: rate }, Series { name: "ratio".into(), values: ratio }],
        references: vec![("rate_target".into(), target), ("bc_ceiling".into(), bc), ("bc_gap_rel".into(), gap)],
        trials: cfg.trials,
        resampled_trials: resampled,
    })
}

/// User count at which the scaling ratio is bounded when present.
pub const SCALING_CHECK_USERS: f64 = 1e4;

pub fn scaling_checks(r: &SweepResult) -> Result<Vec<Check>> {
    let ratio = r.series("ratio")?;
    let last = r.axis.iter().position(|&k| k == SCALING_CHECK_USERS).unwrap_or(r.axis.len() - 1);
    let at = ratio.values[last].mean;
    let first = ratio.values[0].mean;
    let gap = r.reference("bc_gap_rel")?;
    Ok(vec![
        Check::new(
            format!("scaling: ratio at K = {} in [0.6, 1.4]", r.axis[last]),
            (0.6..=1.4).contains(&at),
            format!("ratio {at:.4}"),
        ),
        Check::new(
            "scaling: ratio closer to 1 at the larger K",
            (at - 1.0).abs() < (first - 1.0).abs(),
            format!("K = {}: {first:.4}, K = {}: {at:.4}", r.axis[0], r.axis[last]),
        ),
        Check::new(
            "scaling: ratio finite and positive",
            ratio.values.iter().all(|e| e.mean.is_finite() && e.mean > 0.0),
            format!("{:?}", ratio.means()),
        ),
        Check::new(
            "scaling: relative gap to the BC ceiling shrinks",
            gap[last] < gap[0],
            format!("{:.4} -> {:.4}", gap[0], gap[last]),
        ),
    ])
}

/// Coverage of one concentration interval.
#[derive(Clone, Debug, PartialEq)]
pub struct CoverageRow {
    pub users: usize,
    pub iteration: usize,
    pub center: f64,
    pub lower: f64,
    pub upper: f64,
    pub coverage: Estimate,
    pub mean_sinr: f64,
    /// Why the interval could not be formed, if it could not.
    pub domain_error: Option<String>,
}

/// Fraction of trials whose scheduled SINR at each iteration falls in
/// `[χ_n − φ log log √K, χ_n + φ log log √K]`, per `K` of the grid.
pub fn run_coverage(cfg: &ExperimentConfig) -> Result<Vec<CoverageRow>> {
    let p = cfg.params;
    let cp = CdfParams::from_system(&p);
    let mut rows = Vec::new();
    for &kf in &cfg.grid {
        let k = users_from_axis(kf)?;
        let q = p.with_users(k);
        let run = run_trials(&cfg.stream(), cfg.trials, |rng| {
            let all = draw_feedback(&q, cfg.backend, rng)?;
            Ok(greedy_select(&all, &q)?.metrics)
        })?;
        for n in 1..=p.antennas {
            let gammas: Vec<f64> = run.outputs.iter().map(|m| m[n - 1]).collect();
            let mean_sinr = gammas.iter().sum::<f64>() / gammas.len() as f64;
            let row = match extreme_interval(n, kf, &cp) {
                Ok(iv) => {
                    let hits: Vec<f64> = gammas.iter().map(|&g| if iv.contains(g) { 1.0 } else { 0.0 }).collect();
                    CoverageRow {
                        users: k,
                        iteration: n,
                        center: iv.center,
                        lower: iv.lower,
                        upper: iv.upper,
                        coverage: Estimate::from_samples(&hits),
                        mean_sinr,
                        domain_error: None,
                    }
                }
                Err(e) => CoverageRow {
                    users: k,
                    iteration: n,
                    center: f64::NAN,
                    lower: f64::NAN,
                    upper: f64::NAN,
                    coverage: Estimate { mean: f64::NAN, stderr: f64::NAN },
                    mean_sinr,
                    domain_error: Some(e.to_string()),
                },
            };
            rows.push(row);
        }
    }
    Ok(rows)
}

pub fn write_coverage_csv<W: Write>(rows: &[CoverageRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["users", "n", "center", "lower", "upper", "coverage", "coverage_se", "mean_sinr", "domain_error"])?;
    for r in rows {
        w.write_record([
            r.users.to_string(),
            r.iteration.to_string(),
            r.center.to_string(),
            r.lower.to_string(),
            r.upper.to_string(),
            r.coverage.mean.to_string(),
            r.coverage.stderr.to_string(),
            r.mean_sinr.to_string(),
            r.domain_error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// User count at which coverage is bounded when present.
pub const COVERAGE_CHECK_USERS: usize = 10_000;

pub fn coverage_checks(rows: &[CoverageRow]) -> Vec<Check> {
    let mut checks = Vec::new();
    let ks: Vec<usize> = {
        let mut v: Vec<usize> = rows.iter().map(|r| r.users).collect();
        v.dedup();
        v
    };
    let at = if ks.contains(&COVERAGE_CHECK_USERS) { COVERAGE_CHECK_USERS } else { ks[ks.len() / 2] };
    let sel: Vec<&CoverageRow> = rows.iter().filter(|r| r.users == at).collect();
    let worst = sel.iter().map(|r| r.coverage.mean).fold(f64::INFINITY, f64::min);
    checks.push(Check::new(
        format!("coverage: >= 0.8 for every n at K = {at}"),
        sel.iter().all(|r| r.coverage.mean >= 0.8),
        format!(
            "per n: {}; min {worst:.3}",
            sel.iter().map(|r| format!("{:.3}", r.coverage.mean)).collect::<Vec<_>>().join(" ")
        ),
    ));
    let iterations = rows.iter().map(|r| r.iteration).max().unwrap_or(0);
    for n in 1..=iterations {
        let cov: Vec<f64> = rows.iter().filter(|r| r.iteration == n).map(|r| r.coverage.mean).collect();
        checks.push(Check::new(
            format!("coverage: increases in K for n = {n}"),
            cov.windows(2).all(|w| w[1] > w[0]),
            cov.iter().map(|c| format!("{c:.3}")).collect::<Vec<_>>().join(" -> "),
        ));
    }
    checks
}

/// Link-level measurement of one scheduled user.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkLevelRow {
    pub position: usize,
    pub user: usize,
    pub predicted_sinr: f64,
    pub measured_sinr: f64,
    pub relative_error: f64,
    pub tx_power: f64,
}

/// Link-level report with the largest deviation between the explicit
/// interference reconstruction and `y − v − g·n` over the first symbols.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkLevelSummary {
    pub rows: Vec<LinkLevelRow>,
    pub symbol_error_rate: f64,
    pub reconstruction_error: f64,
    pub symbols: usize,
}

/// Symbols used for the interference reconstruction check.
const RECONSTRUCTION_SYMBOLS: usize = 1000;

/// One channel realization sent `cfg.trials` symbol vectors.
pub fn run_link_level(cfg: &ExperimentConfig) -> Result<LinkLevelSummary> {
    use crate::channel::complex_gaussian;
    use rand::Rng;
    let p = cfg.params;
    let run = run_trials(&cfg.stream(), 1, |rng| {
        let all = draw_feedback(&p, cfg.backend, rng)?;
        let sched = greedy_select(&all, &p)?;
        let pre = build_precoders(&sched, &all, &p)?;
        let sel = sched.selected(&all);
        let channels: Vec<ComplexVector> = sel.iter().map(|c| c.channel()).collect();
        let points = crate::thp::Constellation::new(p.constellation_order)?;
        let mut worst: f64 = 0.0;
        for _ in 0..RECONSTRUCTION_SYMBOLS {
            let s = ComplexVector::new(
                (0..sel.len()).map(|_| points.points()[rng.gen_range(0..points.points().len())]).collect(),
            )?;
            let (x, v) = th_encode(&s, &pre.b, pre.tau)?;
            let noise: Vec<_> = (0..sel.len()).map(|_| complex_gaussian(rng)).collect();
            let y = transmit_receive_with_noise(&x, &pre, &channels, &noise, &p)?;
            let e = quantization_interference(&x, &pre, &sel)?;
            for k in 0..sel.len() {
                let residual = y[k] - v[k] - noise[k] * pre.gains[k];
                worst = worst.max((residual - e[k]).norm());
            }
        }
        let report = link_level(&sched, &all, &p, cfg.trials, rng)?;
        Ok((sched.users.clone(), report, worst))
    })?;
    let (users, report, worst) = run.outputs.into_iter().next().expect("one trial");
    let rows = (0..users.len())
        .map(|k| LinkLevelRow {
            position: k,
            user: users[k],
            predicted_sinr: report.predicted_sinr[k],
            measured_sinr: report.measured_sinr[k],
            relative_error: (report.measured_sinr[k] - report.predicted_sinr[k]).abs() / report.predicted_sinr[k],
            tx_power: report.tx_power[k],
        })
        .collect();
    Ok(LinkLevelSummary { rows, symbol_error_rate: report.symbol_error_rate, reconstruction_error: worst, symbols: report.symbols })
}

pub fn write_link_level_csv<W: Write>(s: &LinkLevelSummary, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["position", "user", "predicted_sinr", "measured_sinr", "relative_error", "tx_power", "symbol_error_rate"])?;
    for r in &s.rows {
        w.write_record([
            r.position.to_string(),
            r.user.to_string(),
            r.predicted_sinr.to_string(),
            r.measured_sinr.to_string(),
            r.relative_error.to_string(),
            r.tx_power.to_string(),
            s.symbol_error_rate.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn link_level_checks(s: &LinkLevelSummary) -> Vec<Check> {
    let worst = s.rows.iter().map(|r| r.relative_error).fold(0.0, f64::max);
    vec![
        Check::new(
            "link-level: interference reconstruction matches y - v - noise to 1e-10",
            s.reconstruction_error < 1e-10,
            format!("max abs error {:e}", s.reconstruction_error),
        ),
        Check::new(
            "link-level: predicted SINR within 2% of measured",
            worst < 0.02,
            format!("max relative error {worst:.4} over {} symbols", s.symbols),
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::Experiment;

    #[test]
    fn curve_inversion() {
        let db = [0.0, 10.0, 20.0];
        let rate = [1.0, 3.0, 7.0];
        assert_eq!(invert_curve(&db, &rate, 5.0), Some(15.0));
        assert_eq!(invert_curve(&db, &rate, 1.0), Some(0.0));
        assert_eq!(invert_curve(&db, &rate, 0.5), None);
        assert_eq!(invert_curve(&db, &rate, 8.0), None);
    }

    #[test]
    fn fig4_plan_keeps_the_sum() {
        let mut cfg = ExperimentConfig::defaults(Experiment::Fig4);
        cfg.trials = 4;
        cfg.grid = vec![5.0, 8.0];
        let r = run_fig4(&cfg).unwrap();
        assert_eq!(r.reference("users").unwrap(), &[3000.0, 375.0]);
        assert_eq!(r.series.len(), 4);
        assert!(r.series.iter().all(|s| s.values.iter().all(|e| e.mean > 0.0)));
    }

    #[test]
    fn small_sweeps_run() {
        let mut cfg = ExperimentConfig::defaults(Experiment::Fig1);
        cfg.trials = 8;
        cfg.grid = vec![0.0, 20.0];
        let r = run_fig1(&cfg).unwrap();
        assert_eq!(r.axis.len(), 2);
        assert!(r.series.iter().all(|s| s.values.len() == 2));
        assert_eq!(r.series("thp_q_lo").unwrap().values.len(), 2);

        let mut cfg = ExperimentConfig::defaults(Experiment::Fig3);
        cfg.trials = 4;
        cfg.params.users = 200;
        cfg.grid = vec![10.0, 15.0];
        let r = run_fig3(&cfg).unwrap();
        assert_eq!(r.reference("bits").unwrap(), &[6.0, 11.0]);
    }

    #[test]
    fn coverage_reports_domain_failures() {
        let mut cfg = ExperimentConfig::defaults(Experiment::Coverage);
        cfg.trials = 4;
        cfg.grid = vec![5.0, 200.0];
        let rows = run_coverage(&cfg).unwrap();
        assert_eq!(rows.len(), 8);
        assert!(rows[0].domain_error.is_some());
        let ok = rows.iter().find(|r| r.users == 200 && r.domain_error.is_none()).unwrap();
        assert!((ok.upper - ok.lower - 2.0 * cfg.params.phi() * (200f64.sqrt().ln().ln())).abs() < 1e-9);
    }
}
