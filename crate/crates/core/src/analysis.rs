//! Closed-form laws for the scheduled SINRs.
//!
//! Everything here is derived under the spherical-cap cell model and is
//! only claimed on `x ≥ 1/δ − 1`; below that threshold the functions return
//! [`Error::Support`]. Survival functions (`1 − F`) are evaluated in log
//! space and are the primary interface; the CDFs are `1 − sf`.

use std::f64::consts::LN_2;

use crate::channel::SystemParams;
use crate::error::{Error, Result};
use crate::numerics::{
    gauss_2f1, ln_beta, ln_gamma, ln_v_integral, whittaker_w_scaled, QuadratureSpec,
};

/// Parameters of the SINR laws: `n_T`, `B` and `φ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CdfParams {
    pub antennas: usize,
    pub bits: u32,
    pub phi: f64,
}

impl CdfParams {
    pub fn new(antennas: usize, bits: u32, phi: f64) -> Result<Self> {
        if antennas < 2 {
            return Err(Error::InvalidParameter("n_T must be at least 2".into()));
        }
        if bits < 1 {
            return Err(Error::InvalidParameter("B must be at least 1".into()));
        }
        if !(phi > 0.0) || !phi.is_finite() {
            return Err(Error::InvalidParameter(format!("φ must be positive, got {phi}")));
        }
        Ok(Self { antennas, bits, phi })
    }

    pub fn from_system(p: &SystemParams) -> Self {
        Self { antennas: p.antennas, bits: p.feedback_bits, phi: p.phi() }
    }

    fn nt(&self) -> f64 {
        self.antennas as f64
    }

    fn ln_codebook(&self) -> f64 {
        f64::from(self.bits) * LN_2
    }

    pub fn delta(&self) -> f64 {
        (-f64::from(self.bits) / (self.nt() - 1.0)).exp2()
    }

    /// Support threshold `1/δ − 1`.
    pub fn x_min(&self) -> f64 {
        1.0 / self.delta() - 1.0
    }

    fn check_iteration(&self, n: usize) -> Result<()> {
        if n < 2 || n > self.antennas {
            return Err(Error::InvalidParameter(format!(
                "iteration index must lie in 2..={}, got {n}",
                self.antennas
            )));
        }
        Ok(())
    }

    fn check_support(&self, x: f64) -> Result<()> {
        let x_min = self.x_min();
        // Relative slack so that the threshold itself is accepted.
        if !(x >= x_min * (1.0 - 1e-12)) {
            return Err(Error::Support { x, x_min });
        }
        Ok(())
    }

    fn ln_beta_n(&self, n: usize) -> Result<f64> {
        ln_beta(self.nt() - n as f64 + 1.0, n as f64 - 1.0)
    }

    /// `ln a_n`, `a_n = 2^B / β(n_T−n+1, n−1)`.
    pub fn ln_a_n(&self, n: usize) -> Result<f64> {
        self.check_iteration(n)?;
        Ok(self.ln_codebook() - self.ln_beta_n(n)?)
    }

    /// `ln c_n`, `c_n = 2^B (n−2)! / β(n_T−n+1, n−1)`.
    pub fn ln_c_n(&self, n: usize) -> Result<f64> {
        Ok(self.ln_a_n(n)? + ln_gamma(n as f64 - 1.0)?)
    }

    pub fn c_n(&self, n: usize) -> Result<f64> {
        self.ln_c_n(n).map(f64::exp)
    }

    /// `ln b_{1,n} = ln c_n − ((2n_T−n−1)/2) ln φ`.
    pub fn ln_b1(&self, n: usize) -> Result<f64> {
        Ok(self.ln_c_n(n)? - 0.5 * (2.0 * self.nt() - n as f64 - 1.0) * self.phi.ln())
    }

    /// `ln b_{2,n} = ln b_{1,n} + c/(2φ)` with `c = (n_T−1)/(2n_T−1)`.
    pub fn ln_b2(&self, n: usize) -> Result<f64> {
        Ok(self.ln_b1(n)? + self.shift() / (2.0 * self.phi))
    }

    /// The shift `(n_T−1)/(2n_T−1)` of the upper bound.
    pub fn shift(&self) -> f64 {
        (self.nt() - 1.0) / (2.0 * self.nt() - 1.0)
    }

    /// `ln d_n`, `d_n = 2^B β(2n_T−n, n−1)/β(n_T−n+1, n−1)`.
    pub fn ln_d_n(&self, n: usize) -> Result<f64> {
        self.check_iteration(n)?;
        let nf = n as f64;
        Ok(self.ln_codebook() + ln_beta(2.0 * self.nt() - nf, nf - 1.0)? - self.ln_beta_n(n)?)
    }

    pub fn d_n(&self, n: usize) -> Result<f64> {
        self.ln_d_n(n).map(f64::exp)
    }

    /// Whittaker indices `(κ, μ) = ((−2n_T−n+3)/2, (2n_T−n)/2)`.
    pub fn whittaker_indices(&self, n: usize) -> (f64, f64) {
        let (nt, nf) = (self.nt(), n as f64);
        (0.5 * (-2.0 * nt - nf + 3.0), 0.5 * (2.0 * nt - nf))
    }

    /// Interference penalty `Δ = 2^B/φ^{n_T−1}`.
    pub fn interference_penalty(&self) -> f64 {
        (self.ln_codebook() - (self.nt() - 1.0) * self.phi.ln()).exp()
    }
}

/// `ln(1 − F)` of the first-iteration SINR.
pub fn ln_sf_gamma_first(x: f64, p: &CdfParams) -> Result<f64> {
    p.check_support(x)?;
    Ok(p.ln_codebook() - x / p.phi - (p.nt() - 1.0) * x.ln_1p())
}

/// `F(x) = 1 − 2^B e^{−x/φ}/(1+x)^{n_T−1}` on `x ≥ 1/δ − 1`.
pub fn cdf_gamma_first(x: f64, p: &CdfParams) -> Result<f64> {
    Ok(-ln_sf_gamma_first(x, p)?.exp_m1())
}

/// `ln(1 − F)` at iteration `n ≥ 2`:
/// `ln a_n + (n_T−n+1) ln x + ln V(n−1; 2−n_T; 1−n_T; 1/φ; x)`.
pub fn ln_sf_gamma_n(x: f64, n: usize, p: &CdfParams, q: &QuadratureSpec) -> Result<f64> {
    p.check_iteration(n)?;
    p.check_support(x)?;
    let nt = p.antennas as i32;
    let m1 = n as i32 - 1;
    let ln_v = ln_v_integral(m1, 2 - nt, 1 - nt, 1.0 / p.phi, x, q)?;
    Ok(p.ln_a_n(n)? + (p.nt() - n as f64 + 1.0) * x.ln() + ln_v)
}

/// Exact CDF of `γ_k(n)`; `n = 1` falls back to [`cdf_gamma_first`].
pub fn cdf_gamma_n(x: f64, n: usize, p: &CdfParams, q: &QuadratureSpec) -> Result<f64> {
    if n == 1 {
        return cdf_gamma_first(x, p);
    }
    Ok(-ln_sf_gamma_n(x, n, p, q)?.exp_m1())
}

/// Which member of a pair of bounds or expansions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Lower,
    Upper,
}

/// `ln(1 − F)` of the Whittaker bound on the given side.
pub fn ln_sf_bound(x: f64, n: usize, p: &CdfParams, q: &QuadratureSpec, side: Side) -> Result<f64> {
    p.check_iteration(n)?;
    p.check_support(x)?;
    let (kappa, mu) = p.whittaker_indices(n);
    let (nt, nf, phi) = (p.nt(), n as f64, p.phi);
    match side {
        Side::Lower => {
            let z = x / phi;
            let ws = whittaker_w_scaled(kappa, mu, z, q)?;
            Ok(p.ln_b1(n)? - 0.5 * (nf - 1.0) * x.ln() - x / phi + kappa * z.ln() + ws.ln())
        }
        Side::Upper => {
            let xc = x + p.shift();
            let z = xc / phi;
            let ws = whittaker_w_scaled(kappa, mu, z, q)?;
            Ok(p.ln_b2(n)? + (nt - nf + 1.0) * x.ln() - 0.5 * (2.0 * nt - nf + 1.0) * xc.ln()
                - x / (2.0 * phi)
                - z / 2.0
                + kappa * z.ln()
                + ws.ln())
        }
    }
}

/// Lower (`F̃`) or upper (`F̄`) CDF bound; `F̃ ≤ F ≤ F̄`.
pub fn cdf_bound(x: f64, n: usize, p: &CdfParams, q: &QuadratureSpec, side: Side) -> Result<f64> {
    Ok(-ln_sf_bound(x, n, p, q, side)?.exp_m1())
}

/// `ln(1 − F)` of the leading-order tail of the bound on `side`:
/// lower `c_n φ^{n−1} x^{−n_T−n+2} e^{−x/φ}`,
/// upper `c_n φ^{n−1} x^{n_T−n+1} (x+c)^{−(2n_T−1)} e^{−x/φ}`.
pub fn ln_sf_tail_expansion(x: f64, n: usize, p: &CdfParams, side: Side) -> Result<f64> {
    p.check_iteration(n)?;
    if !(x > 0.0) {
        return Err(Error::Domain(format!("tail expansion needs x > 0, got {x}")));
    }
    let (nt, nf) = (p.nt(), n as f64);
    let common = p.ln_c_n(n)? + (nf - 1.0) * p.phi.ln() - x / p.phi;
    Ok(match side {
        Side::Lower => common - (nt + nf - 2.0) * x.ln(),
        Side::Upper => common + (nt - nf + 1.0) * x.ln() - (2.0 * nt - 1.0) * (x + p.shift()).ln(),
    })
}

pub fn tail_expansion(x: f64, n: usize, p: &CdfParams, side: Side) -> Result<f64> {
    Ok(-ln_sf_tail_expansion(x, n, p, side)?.exp_m1())
}

/// A two-sided concentration interval for a scheduled SINR.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtremeInterval {
    pub lower: f64,
    pub upper: f64,
    pub center: f64,
    pub half_width: f64,
}

impl ExtremeInterval {
    fn symmetric(center: f64, half_width: f64) -> Self {
        Self { lower: center - half_width, upper: center + half_width, center, half_width }
    }

    fn between(lower: f64, upper: f64) -> Self {
        Self { lower, upper, center: 0.5 * (lower + upper), half_width: 0.5 * (upper - lower) }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

fn ln_ln_checked(a: f64, what: &str) -> Result<f64> {
    if !(a > std::f64::consts::E) {
        return Err(Error::Domain(format!(
            "{what} = {a:e} must exceed e for the extremal asymptotics to apply"
        )));
    }
    Ok(a.ln().ln())
}

/// `log log √K`, positive only for `K > e²`.
fn ln_ln_sqrt(k: f64) -> Result<f64> {
    ln_ln_checked(k.sqrt(), "√K")
}

/// `ln` of the extremal argument `A_n`: `c_n K/φ^{n_T−1}`, or
/// `2^B K/φ^{n_T−1}` when `n = 1`.
pub fn ln_extremal_argument(n: usize, users: f64, p: &CdfParams) -> Result<f64> {
    let ln_coeff = if n == 1 { p.ln_codebook() } else { p.ln_c_n(n)? };
    Ok(ln_coeff + users.ln() - (p.nt() - 1.0) * p.phi.ln())
}

/// Centre `χ_n = φ log A − φ m log log A` with `m = n_T+n−2`
/// (`m = n_T−1` when `n = 1`).
pub fn chi_n(n: usize, users: f64, p: &CdfParams) -> Result<f64> {
    if n == 0 || n > p.antennas {
        return Err(Error::InvalidParameter(format!("iteration index {n} out of range")));
    }
    let ln_a = ln_extremal_argument(n, users, p)?;
    let ll = ln_ln_checked(ln_a.exp(), "c_n K/φ^(n_T−1)")?;
    let m = if n == 1 { p.nt() - 1.0 } else { p.nt() + n as f64 - 2.0 };
    Ok(p.phi * ln_a - p.phi * m * ll)
}

/// `[χ_n − φ log log √K, χ_n + φ log log √K]`.
pub fn extreme_interval(n: usize, users: f64, p: &CdfParams) -> Result<ExtremeInterval> {
    let center = chi_n(n, users, p)?;
    Ok(ExtremeInterval::symmetric(center, p.phi * ln_ln_sqrt(users)?))
}

/// `K (1 − F̃(a x + b))` with `a = φ`, `b = χ_n`, evaluated on the lower
/// Whittaker bound. Tends to `e^{−x}` as `K → ∞`.
pub fn evt_normalized_tail(x: f64, n: usize, users: f64, p: &CdfParams, q: &QuadratureSpec) -> Result<f64> {
    let b = chi_n(n, users, p)?;
    Ok(users * ln_sf_bound(p.phi * x + b, n, p, q, Side::Lower)?.exp())
}

/// The same normalized tail after substituting the leading-order expansion:
/// `e^{−x} (log A)^m / (x + log A − m log log A)^m`.
pub fn evt_leading_order(x: f64, n: usize, users: f64, p: &CdfParams) -> Result<f64> {
    p.check_iteration(n)?;
    let ln_a = ln_extremal_argument(n, users, p)?;
    let ll = ln_ln_checked(ln_a.exp(), "c_n K/φ^(n_T−1)")?;
    let m = p.nt() + n as f64 - 2.0;
    let denom = x + ln_a - m * ll;
    if !(denom > 0.0) {
        return Err(Error::Domain("normalized argument is not positive".into()));
    }
    Ok((-x + m * (ln_a.ln() - denom.ln())).exp())
}

/// `ln(1 − F)` of the interference-limited SINR `ω cos²θ/sin²θ`.
///
/// For `n ≥ 2` the hypergeometric term is evaluated after the Pfaff
/// transformation, `1 − F = d_n (1+x)^{−(n_T−1)} ₂F₁(n_T−1, n−1; 2n_T−1; 1/(1+x))`,
/// which converges for every `x > 0`.
pub fn ln_sf_highsnr(x: f64, n: usize, p: &CdfParams) -> Result<f64> {
    p.check_support(x)?;
    let nt = p.nt();
    if n == 1 {
        return Ok(p.ln_codebook() - (nt - 1.0) * x.ln_1p());
    }
    let f = gauss_2f1(nt - 1.0, n as f64 - 1.0, 2.0 * nt - 1.0, 1.0 / (1.0 + x))?;
    Ok(p.ln_d_n(n)? - (nt - 1.0) * x.ln_1p() + f.ln())
}

/// CDF of `ω_k(n) cos²θ_k/sin²θ_k` on `x ≥ 1/δ − 1`.
pub fn cdf_highsnr(x: f64, n: usize, p: &CdfParams) -> Result<f64> {
    Ok(-ln_sf_highsnr(x, n, p)?.exp_m1())
}

/// High-SNR concentration interval of the `n`-th scheduled SINR.
pub fn extreme_interval_highsnr(n: usize, users: f64, p: &CdfParams) -> Result<ExtremeInterval> {
    if !(users > std::f64::consts::E) {
        return Err(Error::Domain(format!("K = {users} must exceed e")));
    }
    let e = 1.0 / (p.nt() - 1.0);
    let l = users.sqrt().ln();
    if n == 1 {
        let d = p.ln_codebook().exp();
        return Ok(ExtremeInterval::between((d * users / l).powf(e) - 1.0, (d * users * l).powf(e) - 1.0));
    }
    let d = p.d_n(n)?;
    Ok(ExtremeInterval::between((d * users / l).powf(e), (d * users * l).powf(e)))
}

/// High-SNR sum-rate approximation without its `O(log₂ log K)` term:
/// `(n_T/(n_T−1))(B + log₂K) + (1/(n_T−1)) Σ_{n=2}^{n_T} log₂(β(2n_T−n,n−1)/β(n_T−n+1,n−1))`.
pub fn sumrate_highsnr_approx(users: f64, p: &CdfParams) -> Result<f64> {
    let nt = p.nt();
    let mut corr = 0.0;
    for n in 2..=p.antennas {
        let nf = n as f64;
        corr += (ln_beta(2.0 * nt - nf, nf - 1.0)? - ln_beta(nt - nf + 1.0, nf - 1.0)?) / LN_2;
    }
    Ok(nt / (nt - 1.0) * (f64::from(p.bits) + users.log2()) + corr / (nt - 1.0))
}

/// Reference values for the sum-rate scaling law at a given `K`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingTargets {
    /// `n_T log₂(ϱ log K)`.
    pub rate_target: f64,
    /// Asymptotic gap to the broadcast capacity, `n_T log₂(1 + 1/(M−1))`.
    pub gap_bound: f64,
    /// `n_T log₂(1 + ϱ log K)`.
    pub bc_ceiling: f64,
    /// Extra ceiling from a `log log K` term, `n_T log₂(1 + ϱ(log K + log log K))` minus the above.
    pub bc_slack: f64,
}

pub fn scaling_targets(users: f64, params: &SystemParams) -> Result<ScalingTargets> {
    if !(users >= 3.0) {
        return Err(Error::Domain(format!("scaling targets need K >= 3, got {users}")));
    }
    let nt = params.antennas as f64;
    let rho = params.rho_per_antenna();
    let m = f64::from(params.constellation_order);
    let lk = users.ln();
    let bc = nt * (rho * lk).ln_1p() / LN_2;
    Ok(ScalingTargets {
        rate_target: nt * (rho * lk).log2(),
        gap_bound: nt * (1.0 / (m - 1.0)).ln_1p() / LN_2,
        bc_ceiling: bc,
        bc_slack: nt * (rho * (lk + lk.ln())).ln_1p() / LN_2 - bc,
    })
}

/// `ln ε_n = ln Γ(n_T−n+1) + (n−1) ln(n−1) − ln Γ(n)`, with `0⁰ = 1`.
pub fn ln_epsilon_lower(n: usize, antennas: usize) -> Result<f64> {
    check_perfect_index(n, antennas)?;
    let nf = n as f64;
    let pow = if n == 1 { 0.0 } else { (nf - 1.0) * (nf - 1.0).ln() };
    Ok(ln_gamma(antennas as f64 - nf + 1.0)? + pow - ln_gamma(nf)?)
}

/// `ln ϵ_n = ln Γ(n_T−n+1)`.
pub fn ln_epsilon_upper(n: usize, antennas: usize) -> Result<f64> {
    check_perfect_index(n, antennas)?;
    ln_gamma(antennas as f64 - n as f64 + 1.0)
}

fn check_perfect_index(n: usize, antennas: usize) -> Result<()> {
    if n == 0 || n > antennas {
        return Err(Error::InvalidParameter(format!("iteration index {n} out of 1..={antennas}")));
    }
    Ok(())
}

/// Concentration interval of the `n`-th scheduled SNR with perfect CSI:
/// `[ϖ_n − ϱ log log √K, υ_n + ϱ log log √K]`, where
/// `ϖ_n = ϱ log(K/ε_n) + ϱ(n_T−n) log log(K/ε_n)` and `υ_n` uses `ϵ_n`.
pub fn perfect_csi_interval(n: usize, users: f64, power: f64, antennas: usize) -> Result<ExtremeInterval> {
    let rho = power / antennas as f64;
    let second = antennas as f64 - n as f64;
    let centre = |ln_eps: f64| -> Result<f64> {
        let ln_arg = users.ln() - ln_eps;
        let ll = ln_ln_checked(ln_arg.exp(), "K/ε_n")?;
        Ok(rho * ln_arg + rho * second * ll)
    };
    let lo = centre(ln_epsilon_lower(n, antennas)?)?;
    let hi = centre(ln_epsilon_upper(n, antennas)?)?;
    let w = rho * ln_ln_sqrt(users)?;
    Ok(ExtremeInterval::between(lo - w, hi + w))
}

/// Constant `c` of `B + log₂K = (n_T−1) log₂P + c` through an anchor point.
pub fn tradeoff_constant(users: f64, bits: f64, power: f64, antennas: usize) -> f64 {
    bits + users.log2() - (antennas as f64 - 1.0) * power.log2()
}

/// Feedback bits keeping `B + log₂K − (n_T−1) log₂P` at `c`, rounded.
pub fn tradeoff_bits(users: f64, power: f64, antennas: usize, c: f64) -> Result<u32> {
    let b = ((antennas as f64 - 1.0) * power.log2() + c - users.log2()).round();
    if !(b >= 1.0) {
        return Err(Error::Infeasible(format!("tradeoff law asks for B = {b} < 1")));
    }
    Ok(b as u32)
}

/// User count with `B + log₂K` held at `total`, rounded to the nearest integer.
pub fn tradeoff_users(bits: u32, total: f64) -> Result<usize> {
    let k = (total - f64::from(bits)).exp2().round();
    if !(k >= 1.0) {
        return Err(Error::Infeasible(format!("B = {bits} leaves K = {k} < 1")));
    }
    Ok(k as usize)
}
