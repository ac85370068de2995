//! Self-contained numerical building blocks: complex linear algebra of small
//! dimension, adaptive quadrature and the special functions used by the SINR
//! laws.

pub mod linalg;
pub mod quadrature;
pub mod special;

pub use linalg::{
    conj_inner, lower_triangular_inverse, lq_decompose, ComplexMatrix, ComplexVector, LqFactors,
    C64, DEGENERACY_TOL,
};
pub use quadrature::{integrate, integrate_to_infinity, QuadratureSpec};
pub use special::{
    beta_fn, factorial, gamma_fn, gauss_2f1, ln_beta, ln_gamma, ln_v_integral, v_integral,
    whittaker_w, whittaker_w_scaled,
};
