//! Small dense complex linear algebra.
//!
//! Dimensions in this crate never exceed the antenna count (a handful), so
//! everything here is a straightforward row-major implementation over
//! [`C64`]. The LQ factorization is the engine shared by the scheduler and
//! the precoder: rows are orthogonalized in the order given, which is the
//! precoding order.

use std::fmt;
use std::ops::Index;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Residual norm below which a row is treated as linearly dependent.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// A dense complex vector with at least one finite entry.
#[derive(Clone, PartialEq)]
pub struct ComplexVector(Vec<C64>);

impl fmt::Debug for ComplexVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

impl ComplexVector {
    pub fn new(entries: Vec<C64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Dimension("vector must have at least one entry".into()));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("vector entries must be finite".into()));
        }
        Ok(Self(entries))
    }

    /// Builds a vector without validation. Callers guarantee the invariants.
    pub(crate) fn from_vec_unchecked(entries: Vec<C64>) -> Self {
        debug_assert!(!entries.is_empty());
        Self(entries)
    }

    pub fn from_real(entries: &[f64]) -> Result<Self> {
        Self::new(entries.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn zeros(len: usize) -> Self {
        assert!(len >= 1, "vector length must be positive");
        Self(vec![C64::new(0.0, 0.0); len])
    }

    /// The `i`-th canonical basis vector of length `len`.
    pub fn basis(len: usize, i: usize) -> Self {
        let mut v = Self::zeros(len);
        v.0[i] = C64::new(1.0, 0.0);
        v
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, C64> {
        self.0.iter()
    }

    pub fn into_inner(self) -> Vec<C64> {
        self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self(self.0.iter().map(|z| z * s).collect())
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self(self.0.iter().map(|z| z * s).collect())
    }

    /// Unit-norm copy; fails when the norm is below [`DEGENERACY_TOL`].
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n < DEGENERACY_TOL {
            return Err(Error::Degeneracy(format!("cannot normalize vector of norm {n:e}")));
        }
        Ok(self.scale_real(1.0 / n))
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: C64, other: &Self) -> Result<Self> {
        check_len(self, other)?;
        Ok(Self(self.0.iter().zip(&other.0).map(|(a, b)| a + s * b).collect()))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(C64::new(-1.0, 0.0), other)
    }

    /// Removes the components along an orthonormal `basis`, returning the
    /// residual. One modified Gram-Schmidt sweep followed by a second
    /// re-orthogonalization sweep.
    pub fn project_out(&self, basis: &[ComplexVector]) -> Result<Self> {
        let mut v = self.0.clone();
        for _ in 0..2 {
            for q in basis {
                if q.len() != v.len() {
                    return Err(Error::Dimension(format!(
                        "basis vector length {} vs {}",
                        q.len(),
                        v.len()
                    )));
                }
                let c: C64 = v.iter().zip(&q.0).map(|(a, b)| a * b.conj()).sum();
                for (vi, qi) in v.iter_mut().zip(&q.0) {
                    *vi -= c * qi;
                }
            }
        }
        Ok(Self(v))
    }
}

impl Index<usize> for ComplexVector {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

fn check_len(a: &ComplexVector, b: &ComplexVector) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!("vector lengths {} and {}", a.len(), b.len())));
    }
    Ok(())
}

/// `Σ a_i · conj(b_i)`, i.e. the row-vector product `a b^H`.
pub fn conj_inner(a: &ComplexVector, b: &ComplexVector) -> Result<C64> {
    check_len(a, b)?;
    Ok(a.0.iter().zip(&b.0).map(|(x, y)| x * y.conj()).sum())
}

/// Row-major dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", &self.data[i * self.cols..(i + 1) * self.cols])?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension("matrix dimensions must be positive".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("matrix entries must be finite".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, C64::new(1.0, 0.0));
        }
        m
    }

    /// Stacks row vectors of equal length.
    pub fn from_rows(rows: &[ComplexVector]) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| Error::Dimension("at least one row required".into()))?;
        let cols = first.len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::Dimension(format!("row length {} vs {cols}", r.len())));
            }
            data.extend_from_slice(r.as_slice());
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> ComplexVector {
        ComplexVector(self.data[i * self.cols..(i + 1) * self.cols].to_vec())
    }

    pub fn col(&self, j: usize) -> ComplexVector {
        ComplexVector((0..self.rows).map(|i| self.get(i, j)).collect())
    }

    pub fn conj_transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &ComplexVector) -> Result<ComplexVector> {
        if self.cols != v.len() {
            return Err(Error::Dimension(format!(
                "cannot apply {}x{} matrix to length-{} vector",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok(ComplexVector(
            (0..self.rows)
                .map(|i| (0..self.cols).map(|j| self.get(i, j) * v[j]).sum())
                .collect(),
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension("matrix shapes differ".into()));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_lower_triangular(&self) -> bool {
        (0..self.rows).all(|i| ((i + 1)..self.cols).all(|j| self.get(i, j) == C64::new(0.0, 0.0)))
    }
}

/// `H = R Q` with `R` lower-triangular (real nonnegative diagonal) and `Q`
/// having orthonormal rows.
#[derive(Clone, Debug)]
pub struct LqFactors {
    pub r: ComplexMatrix,
    pub q: ComplexMatrix,
}

impl LqFactors {
    pub fn q_rows(&self) -> Vec<ComplexVector> {
        (0..self.q.rows()).map(|i| self.q.row(i)).collect()
    }
}

/// Gram-Schmidt over the rows of `h` in the given order.
pub fn lq_decompose(h: &ComplexMatrix) -> Result<LqFactors> {
    let (l, n) = (h.rows(), h.cols());
    if l > n {
        return Err(Error::Dimension(format!("LQ needs rows <= cols, got {l}x{n}")));
    }
    let mut r = ComplexMatrix::zeros(l, l);
    let mut basis: Vec<ComplexVector> = Vec::with_capacity(l);
    for i in 0..l {
        let row = h.row(i);
        let mut v = row.0.clone();
        for _ in 0..2 {
            for (j, q) in basis.iter().enumerate() {
                let c: C64 = v.iter().zip(&q.0).map(|(a, b)| a * b.conj()).sum();
                for (vi, qi) in v.iter_mut().zip(&q.0) {
                    *vi -= c * qi;
                }
                r.data[i * l + j] += c;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < DEGENERACY_TOL {
            return Err(Error::Degeneracy(format!(
                "row {i} is linearly dependent on its predecessors (residual {norm:e})"
            )));
        }
        r.set(i, i, C64::new(norm, 0.0));
        basis.push(ComplexVector(v.into_iter().map(|z| z / norm).collect()));
    }
    let q = ComplexMatrix::from_rows(&basis)?;
    Ok(LqFactors { r, q })
}

/// Inverse of a nonsingular lower-triangular matrix by forward substitution.
pub fn lower_triangular_inverse(r: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = r.rows();
    if r.cols() != n {
        return Err(Error::Dimension("triangular inverse needs a square matrix".into()));
    }
    let mut inv = ComplexMatrix::zeros(n, n);
    for col in 0..n {
        for i in col..n {
            let rhs = if i == col { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            let acc: C64 = (col..i).map(|k| r.get(i, k) * inv.get(k, col)).sum();
            let d = r.get(i, i);
            if d.norm() < DEGENERACY_TOL {
                return Err(Error::Degeneracy(format!("zero pivot at {i}")));
            }
            inv.set(i, col, (rhs - acc) / d);
        }
    }
    Ok(inv)
}
