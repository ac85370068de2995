//! Special functions for real, positive arguments.
//!
//! Only the parameter ranges needed by the SINR laws are supported: Whittaker
//! `W` through its Laplace-type integral representation, the Gauss
//! hypergeometric series inside the unit disk, and the semi-infinite
//! `V`-integral that gives the exact SINR distribution after the first
//! scheduling step.

use std::f64::consts::PI;

use super::quadrature::{integrate_to_infinity, QuadratureSpec};
use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn ln_gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection: Γ(x)Γ(1−x) = π / sin(πx).
        return (PI / (PI * x).sin()).ln() - ln_gamma_unchecked(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("ln_gamma needs a positive argument, got {x}")));
    }
    Ok(ln_gamma_unchecked(x))
}

pub fn gamma_fn(x: f64) -> Result<f64> {
    ln_gamma(x).map(f64::exp)
}

/// `ln β(a, b)`.
pub fn ln_beta(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0) || !(b > 0.0) {
        return Err(Error::Domain(format!("beta needs positive arguments, got ({a}, {b})")));
    }
    Ok(ln_gamma(a)? + ln_gamma(b)? - ln_gamma(a + b)?)
}

/// `β(a, b) = Γ(a)Γ(b)/Γ(a+b)`.
pub fn beta_fn(a: f64, b: f64) -> Result<f64> {
    ln_beta(a, b).map(f64::exp)
}

/// `n!` as a float (exact for n ≤ 22).
pub fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Gauss hypergeometric `₂F₁(a, b; c; z)` by its power series, `|z| < 1`.
pub fn gauss_2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    if !(z.abs() < 1.0) {
        return Err(Error::Domain(format!("2F1 series needs |z| < 1, got {z}")));
    }
    if c <= 0.0 && c.fract() == 0.0 {
        return Err(Error::Domain(format!("2F1 undefined for c = {c}")));
    }
    let mut sum = 1.0;
    let mut term = 1.0;
    for l in 0..100_000u32 {
        let lf = f64::from(l);
        term *= (a + lf) * (b + lf) / ((c + lf) * (lf + 1.0)) * z;
        sum += term;
        if term == 0.0 || term.abs() < 1e-16 * sum.abs() {
            return Ok(sum);
        }
    }
    Err(Error::Accuracy { value: sum, estimate: term.abs() })
}

/// `W_{κ,μ}(x)` divided by its large-`x` leading behaviour `e^{−x/2} x^κ`.
///
/// Uses `W = e^{−x/2} x^κ / Γ(μ−κ+½) ∫₀^∞ e^{−s} s^{μ−κ−½} (1 + s/x)^{μ+κ−½} ds`,
/// the integral representation valid for `μ − κ + ½ > 0`. The ratio tends
/// to 1 as `x → ∞`, which keeps tail computations free of underflow.
pub fn whittaker_w_scaled(kappa: f64, mu: f64, x: f64, q: &QuadratureSpec) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("Whittaker W needs x > 0, got {x}")));
    }
    let p = mu - kappa - 0.5;
    if !(p > -1.0) {
        return Err(Error::Domain(format!(
            "integral representation needs mu - kappa + 1/2 > 0 (kappa={kappa}, mu={mu})"
        )));
    }
    let e = mu + kappa - 0.5;
    let ln_norm = ln_gamma(p + 1.0)?;
    let integrand = |s: f64| {
        if s <= 0.0 {
            return if p == 0.0 { 1.0 } else { 0.0 };
        }
        (-s + p * s.ln() + e * (s / x).ln_1p() - ln_norm).exp()
    };
    integrate_to_infinity(integrand, 0.0, q)
}

/// Whittaker function of the second kind `W_{κ,μ}(x)` for real `x > 0`.
pub fn whittaker_w(kappa: f64, mu: f64, x: f64, q: &QuadratureSpec) -> Result<f64> {
    let scaled = whittaker_w_scaled(kappa, mu, x, q)?;
    Ok(scaled * (-0.5 * x + kappa * x.ln()).exp())
}

/// Natural log of
/// `V(m1; m2; m3; μ; x) = ∫_x^∞ e^{−μt} (t−x)^{m1−1} (t+1)^{m2−1} t^{m3−1} dt`.
///
/// With `t = x + s/μ` the prefactor `e^{−μx} μ^{−m1} (x+1)^{m2−1} x^{m3−1}`
/// is pulled out analytically and the remaining O(1) integral over
/// `s ∈ [0, ∞)` is done numerically.
pub fn ln_v_integral(m1: i32, m2: i32, m3: i32, mu: f64, x: f64, q: &QuadratureSpec) -> Result<f64> {
    if m1 < 1 {
        return Err(Error::Domain(format!("V-integral needs m1 >= 1, got {m1}")));
    }
    if !(mu > 0.0) || !(x > 0.0) || !mu.is_finite() || !x.is_finite() {
        return Err(Error::Domain(format!("V-integral needs mu > 0 and x > 0 (mu={mu}, x={x})")));
    }
    let (e1, e2, e3) = (f64::from(m1 - 1), f64::from(m2 - 1), f64::from(m3 - 1));
    let inner = integrate_to_infinity(
        |s: f64| {
            let u = s / mu;
            let mut lv = -s + e2 * (u / (x + 1.0)).ln_1p() + e3 * (u / x).ln_1p();
            if e1 != 0.0 {
                if s <= 0.0 {
                    return 0.0;
                }
                lv += e1 * s.ln();
            }
            lv.exp()
        },
        0.0,
        q,
    )?;
    if !(inner > 0.0) {
        return Err(Error::Accuracy { value: inner, estimate: f64::NAN });
    }
    Ok(-mu * x - f64::from(m1) * mu.ln() + e2 * (x + 1.0).ln() + e3 * x.ln() + inner.ln())
}

pub fn v_integral(m1: i32, m2: i32, m3: i32, mu: f64, x: f64, q: &QuadratureSpec) -> Result<f64> {
    ln_v_integral(m1, m2, m3, mu, x, q).map(f64::exp)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs()
    }

    #[test]
    fn beta_examples() {
        assert!(close(beta_fn(3.0, 1.0).unwrap(), 1.0 / 3.0, 1e-13));
        assert!(close(beta_fn(5.0, 2.0).unwrap(), 1.0 / 30.0, 1e-13));
        assert!(close(ln_gamma(0.5).unwrap(), PI.sqrt().ln(), 1e-13));
    }

    #[test]
    fn gamma_at_integers_is_factorial() {
        for n in 1..20u32 {
            assert!(close(gamma_fn(f64::from(n)).unwrap(), factorial(n - 1), 1e-12), "n={n}");
        }
    }

    #[test]
    fn non_positive_arguments_are_rejected() {
        assert!(matches!(ln_gamma(0.0), Err(Error::Domain(_))));
        assert!(matches!(ln_gamma(-1.5), Err(Error::Domain(_))));
        assert!(matches!(beta_fn(1.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn gauss_2f1_examples() {
        assert_eq!(gauss_2f1(2.3, -1.1, 4.0, 0.0).unwrap(), 1.0);
        let v = gauss_2f1(1.0, 1.0, 2.0, -0.5).unwrap();
        assert!(close(v, 1.5f64.ln() / 0.5, 1e-14));
        assert!(matches!(gauss_2f1(1.0, 1.0, 2.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(gauss_2f1(1.0, 1.0, -2.0, 0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn whittaker_reduces_to_exponential() {
        let q = QuadratureSpec::default();
        for &z in &[1.0, 5.0, 20.0] {
            let w = whittaker_w(0.0, 0.5, z, &q).unwrap();
            assert!(close(w, (-z / 2.0).exp(), 1e-10), "z={z}");
        }
    }

    #[test]
    fn v_integral_exponential_case() {
        let q = QuadratureSpec::default();
        let v = v_integral(1, 1, 1, 1.0, 2.0, &q).unwrap();
        assert!(close(v, (-2.0f64).exp(), 1e-10));
    }

    #[test]
    fn v_integral_monotone_in_x() {
        let q = QuadratureSpec::default();
        let mut prev = f64::INFINITY;
        for i in 1..40 {
            let x = 2.0 * f64::from(i);
            let v = v_integral(2, -2, -3, 1.0 / 3.0, x, &q).unwrap();
            assert!(v > 0.0 && v < prev);
            prev = v;
        }
        assert!(prev < 1e-15);
    }

    #[test]
    fn v_integral_domain() {
        let q = QuadratureSpec::default();
        assert!(v_integral(0, 1, 1, 1.0, 1.0, &q).is_err());
        assert!(v_integral(1, 1, 1, 0.0, 1.0, &q).is_err());
        assert!(v_integral(1, 1, 1, 1.0, -1.0, &q).is_err());
    }
}
