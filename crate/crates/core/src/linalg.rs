//! Thin helpers over `nalgebra` for dense complex matrices.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn cis(angle: f64) -> C64 {
    C64::from_polar(1.0, angle)
}

/// Eigen-decomposition of a Hermitian matrix. Eigenvalues come back in
/// ascending order with matching eigenvector columns.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl HermitianEigen {
    pub fn new(a: &CMat) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::invalid(format!(
                "eigendecomposition needs a square matrix, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let n = a.nrows();
        if n == 0 {
            return Ok(Self {
                values: vec![],
                vectors: CMat::zeros(0, 0),
            });
        }
        // symmetrize first so tiny round-off asymmetry never leaks in
        let sym = (a + a.adjoint()) * c(0.5, 0.0);
        let eig = SymmetricEigen::new(sym);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = CMat::from_fn(n, n, |r, col| eig.eigenvectors[(r, order[col])]);
        Ok(Self { values, vectors })
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// V · diag(f(λ)) · V^H
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (j, &lam) in self.values.iter().enumerate() {
            let s = f(lam);
            for i in 0..n {
                scaled[(i, j)] *= s;
            }
        }
        scaled * self.vectors.adjoint()
    }
}

/// Clip negative eigenvalues of a Hermitian matrix to zero and rebuild it.
pub fn clip_psd(a: &CMat) -> Result<CMat> {
    let eig = HermitianEigen::new(a)?;
    if eig.min() >= 0.0 {
        return Ok((a + a.adjoint()) * c(0.5, 0.0));
    }
    Ok(eig.reconstruct_with(|l| l.max(0.0)))
}

/// Hermitian PSD square root V·√Λ·V^H (negative eigenvalues treated as 0).
pub fn hermitian_sqrt(a: &CMat) -> Result<CMat> {
    let eig = HermitianEigen::new(a)?;
    Ok(eig.reconstruct_with(|l| l.max(0.0).sqrt()))
}

pub fn diag(entries: &[C64]) -> CMat {
    CMat::from_diagonal(&CVec::from_column_slice(entries))
}

pub fn frobenius_sq(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

pub fn norm_sq(v: &CVec) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Real trace of a product `A·B` without forming the product.
pub fn trace_product(a: &CMat, b: &CMat) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Singular values in descending order.
pub fn singular_values(a: &CMat) -> Vec<f64> {
    let mut s: Vec<f64> = a.clone().singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

pub fn is_hermitian(a: &CMat, rel_tol: f64) -> bool {
    let scale = frobenius_sq(a).sqrt().max(f64::MIN_POSITIVE);
    frobenius_sq(&(a - a.adjoint())).sqrt() <= rel_tol * scale
}
