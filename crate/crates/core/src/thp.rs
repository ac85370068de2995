//! Tomlinson-Harashima precoding on quantized directions.
//!
//! The feedforward filter is `F = Q̂^H` and the feedback filter
//! `B = diag(1/r̂_kk) R̂ − I`, both from the LQ factorization of the scheduled
//! quantized directions `Ĥ_S = R̂ Q̂`. Each receiver scales by
//! `g_k = √(κ/P)/(ρ_k cosθ_k r̂_kk)`, reduces modulo the constellation
//! boundary and slices.

use rand::Rng;

use crate::channel::{complex_gaussian, SystemParams};
use crate::error::{Error, Result};
use crate::numerics::{
    conj_inner, lower_triangular_inverse, lq_decompose, ComplexMatrix, ComplexVector, C64,
    DEGENERACY_TOL,
};
use crate::quantizer::QuantizedCsi;
use crate::scheduler::{greedy_select, Schedule};

/// Square `M`-QAM with unit average energy.
#[derive(Clone, Debug, PartialEq)]
pub struct Constellation {
    order: u32,
    side: u32,
    spacing: f64,
    tau: f64,
    points: Vec<C64>,
}

impl Constellation {
    pub fn new(order: u32) -> Result<Self> {
        let side = (f64::from(order).sqrt().round()) as u32;
        if order < 4 || side * side != order {
            return Err(Error::InvalidParameter(format!("M must be a square >= 4, got {order}")));
        }
        let m = f64::from(order);
        // Per-axis levels ±a, ±3a, ..., with a = √(3/(2(M−1))).
        let spacing = (3.0 / (2.0 * (m - 1.0))).sqrt();
        let tau = m.sqrt() * spacing;
        let level = |i: u32| (2.0 * f64::from(i) - f64::from(side - 1)) * spacing;
        let mut points = Vec::with_capacity(order as usize);
        for i in 0..side {
            for j in 0..side {
                points.push(C64::new(level(i), level(j)));
            }
        }
        Ok(Self { order, side, spacing, tau, points })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// Half-width `τ = √M √(3/(2(M−1)))` of the modulo region.
    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Points in lexicographic `(re, im)` order.
    pub fn points(&self) -> &[C64] {
        &self.points
    }

    fn axis_index(&self, x: f64) -> u32 {
        let q = (x / self.spacing + f64::from(self.side - 1)) / 2.0;
        // ceil(q − ½) rounds half-way cases down.
        let i = (q - 0.5).ceil();
        i.clamp(0.0, f64::from(self.side - 1)) as u32
    }

    /// Index of the nearest point; ties go to the smaller index.
    pub fn slice(&self, z: C64) -> usize {
        (self.axis_index(z.re) * self.side + self.axis_index(z.im)) as usize
    }
}

fn modulo_axis(x: f64, tau: f64) -> f64 {
    let period = 2.0 * tau;
    let mut r = x - period * ((x + tau) / period).floor();
    if r >= tau {
        r -= period;
    }
    if r < -tau {
        r += period;
    }
    r
}

/// Componentwise reduction into `[−τ, τ) × [−τ, τ)`.
pub fn modulo(z: C64, tau: f64) -> C64 {
    C64::new(modulo_axis(z.re, tau), modulo_axis(z.im, tau))
}

/// Transmit and receive filters for one schedule.
#[derive(Clone, Debug)]
pub struct PrecoderSet {
    /// Feedforward filter `F = Q̂^H` (`n_T × L`).
    pub f: ComplexMatrix,
    /// Strictly lower-triangular feedback filter.
    pub b: ComplexMatrix,
    /// Receiver gains `g_k`.
    pub gains: Vec<f64>,
    /// `R̂` from the LQ factorization of `Ĥ_S`.
    pub r: ComplexMatrix,
    pub kappa: f64,
    pub tau: f64,
}

impl PrecoderSet {
    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }
}

fn stacked_directions(sel: &[&QuantizedCsi]) -> Result<ComplexMatrix> {
    let rows: Vec<ComplexVector> = sel.iter().map(|c| c.h_hat.clone()).collect();
    ComplexMatrix::from_rows(&rows)
}

/// Builds the precoder for the scheduled users in schedule order.
pub fn build_precoders(
    sched: &Schedule,
    all_csi: &[QuantizedCsi],
    params: &SystemParams,
) -> Result<PrecoderSet> {
    if sched.len() != params.antennas {
        return Err(Error::Dimension(format!(
            "schedule has {} users, expected {}",
            sched.len(),
            params.antennas
        )));
    }
    build_precoders_for(&sched.selected(all_csi), params)
}

/// Same as [`build_precoders`] for an explicit ordered user list.
pub fn build_precoders_for(sel: &[&QuantizedCsi], params: &SystemParams) -> Result<PrecoderSet> {
    let lq = lq_decompose(&stacked_directions(sel)?)?;
    let l = sel.len();
    let constellation = Constellation::new(params.constellation_order)?;
    let m = f64::from(params.constellation_order);
    let kappa = m / (m - 1.0) * l as f64;
    let mut b = ComplexMatrix::zeros(l, l);
    let mut gains = Vec::with_capacity(l);
    for k in 0..l {
        let rkk = lq.r.get(k, k).re;
        if rkk < DEGENERACY_TOL {
            return Err(Error::Degeneracy(format!("r_kk = {rkk:e} at position {k}")));
        }
        for j in 0..k {
            b.set(k, j, lq.r.get(k, j) / rkk);
        }
        let effective = sel[k].rho() * sel[k].cos_theta() * rkk;
        if effective < DEGENERACY_TOL {
            return Err(Error::Degeneracy(format!("user {} has no useful gain", sel[k].user)));
        }
        gains.push((kappa / params.power).sqrt() / effective);
    }
    Ok(PrecoderSet { f: lq.q.conj_transpose(), b, gains, r: lq.r, kappa, tau: constellation.tau() })
}

/// Modulo pre-subtraction: `x_k = MOD(s_k − Σ_{l<k} B_kl x_l)`; returns
/// `(x, v)` with `v = (B + I) x`.
pub fn th_encode(s: &ComplexVector, b: &ComplexMatrix, tau: f64) -> Result<(ComplexVector, ComplexVector)> {
    let l = s.len();
    if b.rows() != l || b.cols() != l {
        return Err(Error::Dimension(format!("B is {}x{}, s has {l} entries", b.rows(), b.cols())));
    }
    let mut x = Vec::with_capacity(l);
    let mut v = Vec::with_capacity(l);
    for k in 0..l {
        let fb: C64 = (0..k).map(|j| b.get(k, j) * x[j]).sum();
        let xk = modulo(s[k] - fb, tau);
        x.push(xk);
        v.push(xk + fb);
    }
    Ok((ComplexVector::new(x)?, ComplexVector::new(v)?))
}

/// `y = G(√(P/κ) H_S F x + n)` with explicit noise samples.
pub fn transmit_receive_with_noise(
    x: &ComplexVector,
    pre: &PrecoderSet,
    channels: &[ComplexVector],
    noise: &[C64],
    params: &SystemParams,
) -> Result<ComplexVector> {
    let l = pre.len();
    if channels.len() != l || noise.len() != l || x.len() != l {
        return Err(Error::Dimension("x, channels, noise and precoder sizes differ".into()));
    }
    let tx = pre.f.mul_vec(x)?.scale_real((params.power / pre.kappa).sqrt());
    let y = (0..l)
        .map(|k| {
            let hk = &channels[k];
            let rx: C64 = hk.iter().zip(tx.iter()).map(|(a, b)| a * b).sum();
            Ok((rx + noise[k]) * pre.gains[k])
        })
        .collect::<Result<Vec<_>>>()?;
    ComplexVector::new(y)
}

/// Draws unit-variance noise and passes `x` through the channels.
pub fn transmit_receive<R: Rng + ?Sized>(
    x: &ComplexVector,
    pre: &PrecoderSet,
    channels: &[ComplexVector],
    noise_rng: &mut R,
    params: &SystemParams,
) -> Result<ComplexVector> {
    let noise: Vec<C64> = (0..pre.len()).map(|_| complex_gaussian(noise_rng)).collect();
    transmit_receive_with_noise(x, pre, channels, &noise, params)
}

/// Residual interference from quantization:
/// `(Φ diag R̂)^{-1} Ω H̃ Q̂^H x`, one entry per scheduled user.
pub fn quantization_interference(
    x: &ComplexVector,
    pre: &PrecoderSet,
    sel: &[&QuantizedCsi],
) -> Result<ComplexVector> {
    let fx = pre.f.mul_vec(x)?;
    let entries = sel
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let proj: C64 = c.h_tilde.iter().zip(fx.iter()).map(|(a, b)| a * b).sum();
            proj * (c.sin_theta() / (c.cos_theta() * pre.r.get(k, k).re))
        })
        .collect();
    ComplexVector::new(entries)
}

/// Modulo reduction followed by the slicer; returns the point index.
pub fn receiver_detect(y: C64, tau: f64, c: &Constellation) -> usize {
    c.slice(modulo(y, tau))
}

fn sinr_formula(phi: f64, csi: &QuantizedCsi, r_sqr: f64, leak: f64) -> f64 {
    let signal = phi * csi.rho_sqr * r_sqr * csi.cos_sqr;
    if signal <= 0.0 {
        return 0.0;
    }
    signal / (phi * csi.rho_sqr * csi.sin_sqr * leak + 1.0)
}

/// SINR of the user at `position` in the schedule:
/// `φρ²r̂²cos²θ / (φρ²sin²θ ‖h̃Q̂^H‖² + 1)`, from a fresh LQ of `Ĥ_S`.
pub fn sinr_exact(
    position: usize,
    sched: &Schedule,
    all_csi: &[QuantizedCsi],
    params: &SystemParams,
) -> Result<f64> {
    let sel = sched.selected(all_csi);
    if position >= sel.len() {
        return Err(Error::Dimension(format!("position {position} outside schedule")));
    }
    let lq = lq_decompose(&stacked_directions(&sel)?)?;
    Ok(sinrs_from_factors(&sel, &lq.r, &lq.q, params)?[position])
}

fn sinrs_from_factors(
    sel: &[&QuantizedCsi],
    r: &ComplexMatrix,
    q: &ComplexMatrix,
    params: &SystemParams,
) -> Result<Vec<f64>> {
    let rows: Vec<ComplexVector> = (0..q.rows()).map(|i| q.row(i)).collect();
    sel.iter()
        .enumerate()
        .map(|(k, c)| {
            let leak = rows.iter().map(|qr| conj_inner(&c.h_tilde, qr).map(|z| z.norm_sqr())).sum::<Result<f64>>()?;
            Ok(sinr_formula(params.phi(), c, r.get(k, k).norm_sqr(), leak))
        })
        .collect()
}

/// SINRs of all scheduled users in schedule order.
pub fn schedule_sinrs(sched: &Schedule, all_csi: &[QuantizedCsi], params: &SystemParams) -> Result<Vec<f64>> {
    let sel = sched.selected(all_csi);
    let lq = lq_decompose(&stacked_directions(&sel)?)?;
    sinrs_from_factors(&sel, &lq.r, &lq.q, params)
}

/// `Σ log₂(1 + γ_k)`.
pub fn sum_rate(sinrs: &[f64]) -> f64 {
    sinrs.iter().map(|g| g.ln_1p() / std::f64::consts::LN_2).sum()
}

/// Zero-forcing beamforming rates for an ordered user list: beams are the
/// normalized columns of the pseudo-inverse of `Ĥ_S`, each with power
/// `P/n_T`, and SINRs are evaluated on the true channels.
pub fn zfbf_rates_for(sel: &[&QuantizedCsi], params: &SystemParams) -> Result<Vec<f64>> {
    let lq = lq_decompose(&stacked_directions(sel)?)?;
    let pinv = lq.q.conj_transpose().matmul(&lower_triangular_inverse(&lq.r)?)?;
    let beams = (0..pinv.cols()).map(|j| pinv.col(j).normalized()).collect::<Result<Vec<_>>>()?;
    let rho = params.rho_per_antenna();
    let rates = sel
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let h = c.channel();
            let gains: Vec<f64> =
                beams.iter().map(|w| h.iter().zip(w.iter()).map(|(a, b)| a * b).sum::<C64>().norm_sqr()).collect();
            let interference: f64 = gains.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, g)| g).sum();
            let sinr = rho * gains[k] / (1.0 + rho * interference);
            sinr.ln_1p() / std::f64::consts::LN_2
        })
        .collect();
    Ok(rates)
}

/// Per-user ZFBF rates on the greedy schedule used for THP.
pub fn zfbf_baseline(all_csi: &[QuantizedCsi], params: &SystemParams) -> Result<Vec<f64>> {
    let sched = greedy_select(all_csi, params)?;
    zfbf_rates_for(&sched.selected(all_csi), params)
}

/// Symbol-level measurement for one fixed channel realization.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkLevelReport {
    /// `1 / E|y_k − v_k|²` per scheduled user.
    pub measured_sinr: Vec<f64>,
    /// The closed-form SINR per scheduled user.
    pub predicted_sinr: Vec<f64>,
    /// Mean interference-plus-noise power `E|y_k − v_k|²`.
    pub distortion_power: Vec<f64>,
    /// Mean `|x_k|²` per position.
    pub tx_power: Vec<f64>,
    pub symbol_error_rate: f64,
    pub symbols: usize,
}

/// Sends `symbols` uniformly drawn symbol vectors through the full chain.
pub fn link_level<R: Rng + ?Sized>(
    sched: &Schedule,
    all_csi: &[QuantizedCsi],
    params: &SystemParams,
    symbols: usize,
    rng: &mut R,
) -> Result<LinkLevelReport> {
    if symbols == 0 {
        return Err(Error::StatisticalPower { needed: 1, have: 0 });
    }
    let constellation = Constellation::new(params.constellation_order)?;
    let pre = build_precoders(sched, all_csi, params)?;
    let sel = sched.selected(all_csi);
    let channels: Vec<ComplexVector> = sel.iter().map(|c| c.channel()).collect();
    let l = sel.len();
    let mut dist = vec![0.0; l];
    let mut power = vec![0.0; l];
    let mut errors = 0usize;
    for _ in 0..symbols {
        let idx: Vec<usize> = (0..l).map(|_| rng.gen_range(0..constellation.points().len())).collect();
        let s = ComplexVector::new(idx.iter().map(|&i| constellation.points()[i]).collect())?;
        let (x, v) = th_encode(&s, &pre.b, pre.tau)?;
        let y = transmit_receive(&x, &pre, &channels, rng, params)?;
        for k in 0..l {
            dist[k] += (y[k] - v[k]).norm_sqr();
            power[k] += x[k].norm_sqr();
            if receiver_detect(y[k], pre.tau, &constellation) != idx[k] {
                errors += 1;
            }
        }
    }
    let n = symbols as f64;
    let distortion_power: Vec<f64> = dist.iter().map(|d| d / n).collect();
    Ok(LinkLevelReport {
        measured_sinr: distortion_power.iter().map(|d| 1.0 / d).collect(),
        predicted_sinr: schedule_sinrs(sched, all_csi, params)?,
        distortion_power,
        tx_power: power.iter().map(|p| p / n).collect(),
        symbol_error_rate: errors as f64 / (n * l as f64),
        symbols,
    })
}
