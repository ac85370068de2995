//! Greedy user selection from quantized feedback.
//!
//! At each step the candidate with the largest SINR metric is added and its
//! quantized direction, orthogonalized against the directions already
//! chosen, extends the basis `q̂₁..q̂_n`. Exactly `n_T` users are scheduled.

use crate::channel::SystemParams;
use crate::error::{Error, Result};
use crate::numerics::{conj_inner, ComplexVector, DEGENERACY_TOL};
use crate::quantizer::QuantizedCsi;

/// Ordered outcome of the greedy search.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    /// Selected user ids in precoding order.
    pub users: Vec<usize>,
    /// Orthonormal basis `q̂_n = ξ_{S(n)}/‖ξ_{S(n)}‖`.
    pub basis: Vec<ComplexVector>,
    /// `ω_n = ‖ξ_{S(n)}‖²` at selection.
    pub residuals: Vec<f64>,
    /// Selection metric of each chosen user at its iteration.
    pub metrics: Vec<f64>,
}

impl Schedule {
    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    /// The feedback records of the scheduled users, in order.
    pub fn selected<'a>(&self, all: &'a [QuantizedCsi]) -> Vec<&'a QuantizedCsi> {
        self.users.iter().map(|&u| &all[u]).collect()
    }
}

fn metric_from(phi: f64, csi: &QuantizedCsi, omega: f64) -> f64 {
    let signal = phi * csi.rho_sqr * omega * csi.cos_sqr;
    if signal <= 0.0 {
        return 0.0;
    }
    signal / (phi * csi.rho_sqr * csi.sin_sqr + 1.0)
}

/// `γ_k(1) = φρ²cos²θ / (φρ²sin²θ + 1)`.
pub fn metric_first(csi: &QuantizedCsi, params: &SystemParams) -> f64 {
    metric_from(params.phi(), csi, 1.0)
}

/// Metric against a partial basis, with the residual `ξ = ĥ − Σ⟨ĥ,q̂_i⟩q̂_i`.
pub fn metric_n(
    csi: &QuantizedCsi,
    basis: &[ComplexVector],
    params: &SystemParams,
) -> Result<(f64, ComplexVector)> {
    let xi = csi.h_hat.project_out(basis)?;
    let omega = xi.norm_sqr().min(1.0);
    Ok((metric_from(params.phi(), csi, omega), xi))
}

/// Runs the greedy selection over all users' feedback.
pub fn greedy_select(all_csi: &[QuantizedCsi], params: &SystemParams) -> Result<Schedule> {
    let nt = params.antennas;
    if all_csi.len() < nt {
        return Err(Error::InsufficientUsers { needed: nt, have: all_csi.len() });
    }
    if let Some(c) = all_csi.iter().find(|c| c.dimension() != nt) {
        return Err(Error::Dimension(format!("user {} has dimension {}", c.user, c.dimension())));
    }
    let phi = params.phi();
    // Residual energies are tracked incrementally; the winner's residual is
    // then recomputed explicitly from the basis.
    let mut omega = vec![1.0f64; all_csi.len()];
    let mut available = vec![true; all_csi.len()];
    let mut sched = Schedule {
        users: Vec::with_capacity(nt),
        basis: Vec::with_capacity(nt),
        residuals: Vec::with_capacity(nt),
        metrics: Vec::with_capacity(nt),
    };
    for n in 1..=nt {
        if let Some(q) = sched.basis.last() {
            for (k, c) in all_csi.iter().enumerate() {
                if available[k] {
                    let p = conj_inner(&c.h_hat, q)?.norm_sqr();
                    omega[k] = (omega[k] - p).max(0.0);
                }
            }
        }
        let mut best: Option<(usize, f64)> = None;
        for (k, c) in all_csi.iter().enumerate() {
            if !available[k] {
                continue;
            }
            let g = metric_from(phi, c, omega[k]);
            if best.is_none_or(|(_, bg)| g > bg) {
                best = Some((k, g));
            }
        }
        let (k, _) = best.expect("candidate set is nonempty while n <= K");
        let (gamma, xi) = metric_n(&all_csi[k], &sched.basis, params)?;
        let norm = xi.norm();
        if norm < DEGENERACY_TOL {
            return Err(Error::Degeneracy(format!(
                "iteration {n}: quantized directions are linearly dependent (|xi| = {norm:e})"
            )));
        }
        available[k] = false;
        sched.users.push(k);
        sched.residuals.push(if n == 1 { 1.0 } else { norm * norm });
        sched.metrics.push(gamma);
        sched.basis.push(xi.scale_real(1.0 / norm));
    }
    Ok(sched)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::RngStream;
    use crate::quantizer::{draw_feedback, Backend};

    fn csi(user: usize, h_hat: ComplexVector, rho_sqr: f64, cos_sqr: f64) -> QuantizedCsi {
        let e = (0..h_hat.len())
            .map(|i| ComplexVector::basis(h_hat.len(), i).project_out(std::slice::from_ref(&h_hat)).unwrap())
            .find(|v| v.norm() > 1e-6)
            .unwrap()
            .normalized()
            .unwrap();
        QuantizedCsi::new(user, h_hat, rho_sqr, cos_sqr, e).unwrap()
    }

    fn params(phi: f64) -> SystemParams {
        // κ = (16/15)·4, so P = φκ.
        SystemParams::new(4, 4, 8, phi * 64.0 / 15.0, 16).unwrap()
    }

    #[test]
    fn first_metric_examples() {
        let p = params(3.0);
        let e1 = ComplexVector::basis(4, 0);
        assert!((metric_first(&csi(0, e1.clone(), 1.0, 1.0), &p) - 3.0).abs() < 1e-12);
        assert_eq!(metric_first(&csi(0, e1.clone(), 0.0, 1.0), &p), 0.0);
        assert!((metric_first(&csi(0, e1, 4.2, 4.0 / 4.2), &p) - 7.5).abs() < 1e-12);
    }

    #[test]
    fn metric_n_edge_cases() {
        let p = params(3.0);
        let basis = vec![ComplexVector::basis(4, 0), ComplexVector::basis(4, 1)];
        let orth = csi(0, ComplexVector::basis(4, 2), 2.0, 0.9);
        let (g, xi) = metric_n(&orth, &basis, &p).unwrap();
        assert!((g - metric_first(&orth, &p)).abs() < 1e-12);
        assert!((xi.norm_sqr() - 1.0).abs() < 1e-12);
        let inside = ComplexVector::from_real(&[0.6, 0.8, 0.0, 0.0]).unwrap();
        let (g, _) = metric_n(&csi(1, inside, 2.0, 0.9), &basis, &p).unwrap();
        assert!(g.abs() < 1e-20);
    }

    #[test]
    fn orthogonal_codewords_sorted_by_gain() {
        let p = params(3.0);
        let rhos = [1.0, 3.0, 2.0, 3.0];
        let all: Vec<_> =
            (0..4).map(|k| csi(k, ComplexVector::basis(4, k), rhos[k], 1.0)).collect();
        let s = greedy_select(&all, &p).unwrap();
        assert_eq!(s.users, vec![1, 3, 2, 0]);
        assert!(s.residuals.iter().all(|w| (w - 1.0).abs() < 1e-12));
    }

    #[test]
    fn too_few_users() {
        let p = params(3.0);
        let all: Vec<_> = (0..2).map(|k| csi(k, ComplexVector::basis(4, k), 1.0, 1.0)).collect();
        assert_eq!(greedy_select(&all, &p), Err(Error::InsufficientUsers { needed: 4, have: 2 }));
    }

    #[test]
    fn dependent_directions_are_degenerate() {
        let p = params(3.0);
        let e1 = ComplexVector::basis(4, 0);
        let all: Vec<_> = (0..4).map(|k| csi(k, e1.clone(), 1.0 + k as f64, 1.0)).collect();
        match greedy_select(&all, &p) {
            Err(Error::Degeneracy(msg)) => assert!(msg.contains("iteration 2")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn basis_is_orthonormal() {
        let p = SystemParams::new(30, 4, 6, 10.0, 16).unwrap();
        let mut rng = RngStream::new(11, 0).rng(0);
        let all = draw_feedback(&p, Backend::Rvq, &mut rng).unwrap();
        let s = greedy_select(&all, &p).unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(s.residuals[0], 1.0);
        for (i, a) in s.basis.iter().enumerate() {
            for (j, b) in s.basis.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((conj_inner(a, b).unwrap().norm() - want).abs() < 1e-10);
            }
        }
    }
}
