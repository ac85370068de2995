//! Greedy selection checked by brute force: exhaustive argmax, explicit
//! projector and cross-module SINR agreement.

use thplab::channel::{RngStream, SystemParams};
use thplab::error::Error;
use thplab::numerics::{conj_inner, lq_decompose, ComplexMatrix, ComplexVector};
use thplab::quantizer::{draw_feedback, Backend};
use thplab::scheduler::{greedy_select, metric_first, metric_n};
use thplab::thp::sinr_exact;

fn params(users: usize) -> SystemParams {
    SystemParams::with_power_db(users, 4, 6, 15.0, 16).unwrap()
}

#[test]
fn every_pick_maximizes_the_metric_over_remaining_candidates() {
    let p = params(50);
    let stream = RngStream::new(21, 0);
    for t in 0..200 {
        let csi = draw_feedback(&p, Backend::Rvq, &mut stream.rng(t)).unwrap();
        let s = greedy_select(&csi, &p).unwrap();
        for n in 0..4 {
            let basis = &s.basis[..n];
            let best = csi
                .iter()
                .filter(|c| !s.users[..n].contains(&c.user))
                .map(|c| metric_n(c, basis, &p).unwrap().0)
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((s.metrics[n] - best).abs() <= 1e-12 * best.max(1.0), "trial {t} iteration {}", n + 1);
        }
        assert!((s.metrics[0] - metric_first(&csi[s.users[0]], &p)).abs() < 1e-12);
        let mut ids = s.users.clone();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), 4);
    }
}

#[test]
fn residual_matches_explicit_projector() {
    let p = params(30);
    let stream = RngStream::new(22, 0);
    for t in 0..100 {
        let csi = draw_feedback(&p, Backend::CellApprox, &mut stream.rng(t)).unwrap();
        let s = greedy_select(&csi, &p).unwrap();
        for n in 1..4 {
            let q = ComplexMatrix::from_rows(&s.basis[..n]).unwrap();
            let projector = ComplexMatrix::identity(4).sub(&q.conj_transpose().matmul(&q).unwrap()).unwrap();
            for c in &csi {
                let (_, xi) = metric_n(c, &s.basis[..n], &p).unwrap();
                // Row vectors: ξ = ĥ (I − Q^H Q), computed as the transpose product.
                let col = ComplexMatrix::new(1, 4, c.h_hat.as_slice().to_vec()).unwrap();
                let oracle = col.matmul(&projector).unwrap().row(0);
                assert!(xi.sub(&oracle).unwrap().norm() < 1e-12);
            }
        }
    }
}

#[test]
fn basis_and_triangular_factor_invariants() {
    let p = params(100);
    let stream = RngStream::new(23, 0);
    for t in 0..100 {
        let csi = draw_feedback(&p, Backend::Rvq, &mut stream.rng(t)).unwrap();
        let s = greedy_select(&csi, &p).unwrap();
        let q = ComplexMatrix::from_rows(&s.basis).unwrap();
        assert!(q.matmul(&q.conj_transpose()).unwrap().max_abs_diff(&ComplexMatrix::identity(4)) < 1e-10);
        assert_eq!(s.residuals[0], 1.0);
        assert!(s.residuals.iter().all(|w| (0.0..=1.0).contains(w)));
        let rows: Vec<ComplexVector> = s.selected(&csi).iter().map(|c| c.h_hat.clone()).collect();
        let lq = lq_decompose(&ComplexMatrix::from_rows(&rows).unwrap()).unwrap();
        for n in 0..4 {
            let energy: f64 = (0..=n).map(|j| lq.r.get(n, j).norm_sqr()).sum();
            assert!((energy - 1.0).abs() < 1e-10);
            assert!((lq.r.get(n, n).norm_sqr() - s.residuals[n]).abs() < 1e-10);
            let g = sinr_exact(n, &s, &csi, &p).unwrap();
            assert!((g - s.metrics[n]).abs() < 1e-12 * g.max(1.0), "position {n}: {g} vs {}", s.metrics[n]);
        }
    }
}

#[test]
fn growing_the_basis_never_raises_a_metric() {
    let p = params(40);
    let stream = RngStream::new(24, 0);
    let csi = draw_feedback(&p, Backend::Rvq, &mut stream.rng(0)).unwrap();
    let s = greedy_select(&csi, &p).unwrap();
    for c in &csi {
        let metrics: Vec<f64> = (0..4).map(|n| metric_n(c, &s.basis[..n], &p).unwrap().0).collect();
        assert!(metrics.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        if s.users.contains(&c.user) {
            continue;
        }
        let inner: f64 = s.basis.iter().map(|q| conj_inner(&c.h_hat, q).unwrap().norm_sqr()).sum();
        assert!((inner - 1.0).abs() < 1e-10, "a full basis spans every direction");
    }
}

#[test]
fn too_few_users_is_an_error() {
    let p = params(2);
    let csi = draw_feedback(&p, Backend::Rvq, &mut RngStream::new(25, 0).rng(0)).unwrap();
    assert_eq!(greedy_select(&csi, &p), Err(Error::InsufficientUsers { needed: 4, have: 2 }));
}
