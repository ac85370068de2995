//! The closed-form SINR laws: bound ordering, tails, extremal asymptotics,
//! high-SNR forms and the feedback tradeoff, against independent arithmetic.

use statrs::function::beta::beta;
use thplab::analysis::*;
use thplab::error::Error;
use thplab::numerics::QuadratureSpec;

fn grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect()
}

#[test]
fn exact_law_lies_between_its_bounds() {
    let q = QuadratureSpec::default();
    for &phi in &[1.0, 3.0, 10.0] {
        let p = CdfParams::new(4, 8, phi).unwrap();
        for n in 2..=4 {
            for x in grid(p.x_min(), 30.0 * phi, 50) {
                let exact = ln_sf_gamma_n(x, n, &p, &q).unwrap();
                let lower = ln_sf_bound(x, n, &p, &q, Side::Lower).unwrap();
                let upper = ln_sf_bound(x, n, &p, &q, Side::Upper).unwrap();
                // F̃ ≤ F ≤ F̄ is sf_lower ≥ sf ≥ sf_upper.
                assert!(lower >= exact - 1e-9 && exact >= upper - 1e-9, "φ={phi} n={n} x={x}");
            }
        }
    }
}

#[test]
fn bound_gap_decays_in_the_tail() {
    let q = QuadratureSpec::default();
    let p = CdfParams::new(4, 8, 3.0).unwrap();
    for n in 2..=4 {
        let gap = |x: f64| {
            ln_sf_bound(x, n, &p, &q, Side::Lower).unwrap().exp() - ln_sf_bound(x, n, &p, &q, Side::Upper).unwrap().exp()
        };
        let (g20, g60) = (gap(60.0), gap(180.0));
        assert!(g20 > 0.0 && g60 >= 0.0 && g60 < 0.05 * g20, "n={n}: {g60:e} vs {g20:e}");
    }
}

#[test]
fn cdfs_are_monotone_with_unit_limit() {
    let q = QuadratureSpec::default();
    let p = CdfParams::new(4, 8, 3.0).unwrap();
    for n in 1..=4 {
        let xs = grid(p.x_min(), 200.0, 80);
        let f: Vec<f64> = xs.iter().map(|&x| cdf_gamma_n(x, n, &p, &q).unwrap()).collect();
        assert!(f.windows(2).all(|w| w[1] >= w[0]), "n={n}");
        assert!(f[f.len() - 1] > 1.0 - 1e-12);
        let h: Vec<f64> = xs.iter().map(|&x| cdf_highsnr(x, n, &p).unwrap()).collect();
        assert!(h.windows(2).all(|w| w[1] >= w[0]), "n={n}");
    }
}

#[test]
fn laws_refuse_arguments_below_the_support() {
    let q = QuadratureSpec::default();
    let p = CdfParams::new(4, 8, 3.0).unwrap();
    let x = 0.5 * p.x_min();
    assert!(matches!(cdf_gamma_first(x, &p), Err(Error::Support { .. })));
    assert!(matches!(cdf_gamma_n(x, 2, &p, &q), Err(Error::Support { .. })));
    assert!(matches!(cdf_bound(x, 3, &p, &q, Side::Upper), Err(Error::Support { .. })));
    assert!(matches!(cdf_highsnr(x, 4, &p), Err(Error::Support { .. })));
    // At the threshold (1+x)^{n_T−1} = 2^B, leaving F = 1 − e^{−x/φ}.
    let f0 = cdf_gamma_first(p.x_min(), &p).unwrap();
    assert!((f0 - (1.0 - (-p.x_min() / 3.0).exp())).abs() < 1e-12);
}

#[test]
fn tail_expansions_agree_with_bounds_to_first_order() {
    let q = QuadratureSpec::default();
    let p = CdfParams::new(4, 8, 3.0).unwrap();
    assert!((p.c_n(2).unwrap() - 768.0).abs() < 1e-9);
    for n in 2..=4 {
        for side in [Side::Lower, Side::Upper] {
            let err = |x: f64| {
                (ln_sf_bound(x, n, &p, &q, side).unwrap() - ln_sf_tail_expansion(x, n, &p, side).unwrap()).abs()
            };
            let errs: Vec<f64> = [20.0, 50.0, 200.0, 1000.0].iter().map(|m| err(m * 3.0)).collect();
            assert!(errs.windows(2).all(|w| w[1] < w[0]), "n={n} {side:?}: {errs:?}");
            // The relative error decays like 1/x.
            assert!(errs[3] < 0.03 && errs[3] * 1000.0 < 1.5 * errs[2] * 200.0, "n={n} {side:?}: {errs:?}");
        }
        let lo = ln_sf_tail_expansion(3000.0, n, &p, Side::Lower).unwrap();
        let hi = ln_sf_tail_expansion(3000.0, n, &p, Side::Upper).unwrap();
        assert!((lo - hi).abs() < 1e-3);
    }
}

#[test]
fn extremal_centre_matches_arithmetic() {
    let p = CdfParams::new(4, 8, 3.0).unwrap();
    let a: f64 = 256.0 * 1e4 / 27.0;
    let expected = 3.0 * a.ln() - 9.0 * a.ln().ln();
    assert!((chi_n(1, 1e4, &p).unwrap() - expected).abs() < 1e-10);
    assert!((expected - 12.43).abs() < 0.01);
    let i = extreme_interval(2, 1e4, &p).unwrap();
    assert!((i.half_width - 3.0 * 100.0f64.ln().ln()).abs() < 1e-12 * i.half_width.abs().max(1.0));
    assert!(chi_n(3, 1e5, &p).unwrap() > chi_n(3, 1e4, &p).unwrap());
    assert!(matches!(chi_n(2, 1e-3, &p), Err(Error::Domain(_))));
}

#[test]
fn interference_penalty_enters_the_extremal_argument() {
    let p = CdfParams::new(4, 8, 3.0).unwrap();
    for n in 2..=4 {
        let coeff = p.ln_c_n(n).unwrap() - 8.0 * std::f64::consts::LN_2;
        let lhs = ln_extremal_argument(n, 1e4, &p).unwrap();
        assert!((lhs - (p.interference_penalty().ln() + 1e4f64.ln() + coeff)).abs() < 1e-12);
    }
}

#[test]
fn normalized_extremal_tail_approaches_exponential_slowly() {
    let q = QuadratureSpec::default();
    let p = CdfParams::new(4, 8, 3.0).unwrap();
    for n in 2..=3 {
        for &x in &[-1.0, 0.0, 2.0] {
            let dev = |k: f64| (evt_normalized_tail(x, n, k, &p, &q).unwrap() / (-x).exp()).ln().abs();
            let devs: Vec<f64> = [1e6, 1e12, 1e30, 1e100].iter().map(|&k| dev(k)).collect();
            assert!(devs.windows(2).all(|w| w[1] < w[0]), "n={n} x={x}: {devs:?}");
            // Leading-order substitution and the full bound converge together.
            let lead = evt_leading_order(x, n, 1e100, &p).unwrap();
            let full = evt_normalized_tail(x, n, 1e100, &p, &q).unwrap();
            assert!((lead / full - 1.0).abs() < 0.1);
        }
    }
    // At desk-scale K the centre can fall below the support of the law.
    let r = evt_normalized_tail(-1.0, 4, 1e6, &p, &q);
    assert!(matches!(r, Err(Error::Support { .. }) | Err(Error::Domain(_))), "{r:?}");
}

#[test]
fn high_snr_law_constants_and_tail() {
    let p = CdfParams::new(4, 8, 3.0).unwrap();
    assert!((p.d_n(2).unwrap() - 128.0).abs() < 1e-9);
    for n in 2..=4 {
        let x = 1e3;
        let sf = 1.0 - cdf_highsnr(x, n, &p).unwrap();
        let tail = p.d_n(n).unwrap() / x.powi(3);
        assert!((sf / tail - 1.0).abs() < 0.01, "n={n}: {sf} vs {tail}");
    }
}

#[test]
fn high_snr_law_matches_hypergeometric_euler_integral() {
    // 1 − F = (d_n/x^{n_T−1}) ₂F₁(n_T−1, 2n_T−n; 2n_T−1; −1/x).
    let p = CdfParams::new(4, 8, 3.0).unwrap();
    for n in 2..=4 {
        let (a, b, c) = (3.0, (8 - n) as f64, 7.0);
        for &x in &[p.x_min(), 20.0, 150.0] {
            let z = -1.0 / x;
            let panels = 20_000;
            let h = 1.0 / panels as f64;
            let f = |t: f64| t.powf(b - 1.0) * (1.0 - t).powf(c - b - 1.0) * (1.0 - z * t).powf(-a);
            let simpson: f64 = (0..panels)
                .map(|i| {
                    let t0 = i as f64 * h;
                    h / 6.0 * (f(t0) + 4.0 * f(t0 + 0.5 * h) + f(t0 + h))
                })
                .sum();
            let f21 = simpson / beta(b, c - b);
            let oracle = p.d_n(n).unwrap() / x.powi(3) * f21;
            let sf = 1.0 - cdf_highsnr(x, n, &p).unwrap();
            assert!((sf / oracle - 1.0).abs() < 1e-8, "n={n} x={x}");
        }
    }
}

#[test]
fn high_snr_interval_and_sum_rate() {
    let p = CdfParams::new(4, 8, 3.0).unwrap();
    let i = extreme_interval_highsnr(1, 1e4, &p).unwrap();
    assert!((i.lower - ((256.0 * 1e4 / 100.0f64.ln()).cbrt() - 1.0)).abs() < 1e-9);
    assert!((i.lower - 81.22).abs() < 0.01);
    for n in 1..=4 {
        let i = extreme_interval_highsnr(n, 1e4, &p).unwrap();
        assert!(i.lower < i.upper);
    }
    let expected = (-1.0 - 5.0f64.log2() - 20.0f64.log2()) / 3.0;
    let at = |bits: u32, k: f64| sumrate_highsnr_approx(k, &CdfParams::new(4, bits, 3.0).unwrap()).unwrap();
    assert!((at(8, 1.0) - (4.0 / 3.0 * 8.0 + expected)).abs() < 1e-12);
    for bits in 4..16 {
        assert!((at(bits + 1, 1e3) - at(bits, 1e3) - 4.0 / 3.0).abs() < 1e-12);
    }
}

#[test]
fn perfect_csi_interval_orders_its_centres() {
    for n in 1..=4 {
        assert!(ln_epsilon_lower(n, 4).unwrap() >= ln_epsilon_upper(n, 4).unwrap() - 1e-15);
        let i = perfect_csi_interval(n, 1e4, 100.0, 4).unwrap();
        assert!(i.lower < i.upper);
    }
    assert!((ln_epsilon_lower(1, 4).unwrap() - 6.0f64.ln()).abs() < 1e-12);
}

#[test]
fn tradeoff_anchors() {
    let c3 = tradeoff_constant(5000.0, 6.0, 10.0, 4);
    assert!((c3 - 8.32).abs() < 0.005, "{c3}");
    assert_eq!(tradeoff_bits(5000.0, 10.0, 4, c3).unwrap(), 6);
    let b = tradeoff_bits(1000.0, 1000.0, 4, c3).unwrap();
    assert_eq!(tradeoff_bits(2000.0, 1000.0, 4, c3).unwrap(), b - 1);
    let total = 5.0 + 3000.0f64.log2();
    assert!((total - 16.55).abs() < 0.005);
    assert_eq!(tradeoff_users(5, total).unwrap(), 3000);
    assert!(matches!(tradeoff_bits(1e9, 1.0, 4, c3), Err(Error::Infeasible(_))));
}

#[test]
fn scaling_reference_values() {
    use thplab::channel::SystemParams;
    let p = SystemParams::new(10_000, 4, 8, 16.0, 4).unwrap();
    let t = scaling_targets(1e4, &p).unwrap();
    assert!((t.gap_bound - 4.0 * (4.0f64 / 3.0).log2()).abs() < 1e-12);
    assert!((t.rate_target - 4.0 * (4.0 * 1e4f64.ln()).log2()).abs() < 1e-12);
    assert!((t.rate_target - 20.8).abs() < 0.05);
    assert!(t.bc_ceiling > t.rate_target && t.bc_slack > 0.0);
}
