//! Small linear-algebra kernels used by the discretization: a compressed
//! sparse row matrix for assembled operators, banded LU/Cholesky for the
//! node-local (fully Dirichlet) layouts, dense fallbacks through nalgebra,
//! Gauss-Legendre rules and a Lanczos iteration for extremal eigenvalues.

mod band;
mod dense;
mod eigen;
mod lanczos;
mod quadrature;
mod sparse;

pub use band::{BandCholesky, BandLu};
pub use dense::{dense_generalized_symmetric_eigen, GeneralizedEigen};
pub use eigen::complex_eigenvalues;
pub use lanczos::{lanczos_largest, LanczosOutcome};
pub use quadrature::{gauss_legendre, GaussRule};
pub use sparse::{CooBuilder, CsrMatrix};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{BresseError, Result};

/// Scalar field shared by the factorization kernels.
pub trait Field:
    Copy
    + std::fmt::Debug
    + PartialEq
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
    + std::ops::AddAssign
    + std::ops::SubAssign
    + std::ops::Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    fn zero() -> Self;
    fn from_real(x: f64) -> Self;
    fn modulus(self) -> f64;
}

impl Field for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_real(x: f64) -> Self {
        x
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl Field for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
}

/// Assembled system matrix on the constrained space: sparse when the
/// constraint basis is node-local, dense when it is not.
#[derive(Debug, Clone)]
pub enum SystemMatrix {
    Sparse(CsrMatrix),
    Dense(DMatrix<f64>),
}

impl SystemMatrix {
    pub fn dim(&self) -> usize {
        match self {
            SystemMatrix::Sparse(m) => m.dim(),
            SystemMatrix::Dense(m) => m.nrows(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            SystemMatrix::Sparse(m) => m.get(i, j),
            SystemMatrix::Dense(m) => m[(i, j)],
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        match self {
            SystemMatrix::Sparse(m) => m.mul_vec(x),
            SystemMatrix::Dense(m) => {
                let y = m * DVector::from_column_slice(x);
                y.as_slice().to_vec()
            }
        }
    }

    pub fn mul_cvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        match self {
            SystemMatrix::Sparse(m) => m.mul_cvec(x),
            SystemMatrix::Dense(m) => {
                let n = m.nrows();
                let mut y = vec![Complex64::new(0.0, 0.0); n];
                for j in 0..n {
                    let xj = x[j];
                    if xj.re == 0.0 && xj.im == 0.0 {
                        continue;
                    }
                    let col = m.column(j);
                    for (yi, &a) in y.iter_mut().zip(col.iter()) {
                        *yi += xj * a;
                    }
                }
                y
            }
        }
    }

    /// xᵀ A y for real vectors.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.mul_vec(y))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            SystemMatrix::Sparse(m) => m.to_dense(),
            SystemMatrix::Dense(m) => m.clone(),
        }
    }

    /// Half bandwidth, or `None` for dense storage.
    pub fn bandwidth(&self) -> Option<usize> {
        match self {
            SystemMatrix::Sparse(m) => Some(m.bandwidth()),
            SystemMatrix::Dense(_) => None,
        }
    }

    pub fn max_abs(&self) -> f64 {
        match self {
            SystemMatrix::Sparse(m) => m.max_abs(),
            SystemMatrix::Dense(m) => m.amax(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.max_abs() == 0.0
    }

    /// Nonzero triplets in row-major order.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        match self {
            SystemMatrix::Sparse(m) => m.triplets(),
            SystemMatrix::Dense(m) => {
                let mut out = Vec::new();
                for i in 0..m.nrows() {
                    for j in 0..m.ncols() {
                        let v = m[(i, j)];
                        if v != 0.0 {
                            out.push((i, j, v));
                        }
                    }
                }
                out
            }
        }
    }
}

/// Sparse matrices narrower than this use the banded kernels.
const BAND_LIMIT_FRACTION: usize = 8;

fn banded_width(terms: &[&SystemMatrix]) -> Option<usize> {
    let mut bw = 0;
    let n = terms.first()?.dim();
    for t in terms {
        bw = bw.max(t.bandwidth()?);
    }
    if bw * BAND_LIMIT_FRACTION <= n.max(8) {
        Some(bw)
    } else {
        None
    }
}

/// Factorization of a symmetric positive definite linear combination
/// Σ cᵢ Aᵢ of system matrices.
#[derive(Debug, Clone)]
pub enum SpdFactor {
    Banded(BandCholesky),
    Dense(nalgebra::Cholesky<f64, nalgebra::Dyn>),
}

impl SpdFactor {
    pub fn new(terms: &[(f64, &SystemMatrix)]) -> Result<Self> {
        let mats: Vec<&SystemMatrix> = terms.iter().map(|(_, m)| *m).collect();
        let n = mats[0].dim();
        if let Some(bw) = banded_width(&mats) {
            let mut band = BandCholesky::zeros(n, bw);
            for (c, m) in terms {
                if let SystemMatrix::Sparse(s) = m {
                    for (i, j, v) in s.triplets() {
                        if j <= i {
                            band.add(i, j, c * v);
                        }
                    }
                }
            }
            band.factor()?;
            Ok(SpdFactor::Banded(band))
        } else {
            let mut dense = DMatrix::<f64>::zeros(n, n);
            for (c, m) in terms {
                dense += m.to_dense() * *c;
            }
            nalgebra::Cholesky::new(dense)
                .map(SpdFactor::Dense)
                .ok_or(BresseError::NotPositiveDefinite {
                    what: "symmetric system matrix",
                })
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        match self {
            SpdFactor::Banded(f) => f.solve(b),
            SpdFactor::Dense(f) => f.solve(&DVector::from_column_slice(b)).as_slice().to_vec(),
        }
    }
}

/// LU factorization of a complex linear combination Σ cᵢ Aᵢ of real system
/// matrices, with partial pivoting.
#[derive(Debug, Clone)]
pub enum ComplexFactor {
    Banded(BandLu<Complex64>),
    Dense(nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl ComplexFactor {
    pub fn new(terms: &[(Complex64, &SystemMatrix)]) -> Result<Self> {
        let mats: Vec<&SystemMatrix> = terms.iter().map(|(_, m)| *m).collect();
        let n = mats[0].dim();
        if let Some(bw) = banded_width(&mats) {
            let mut band = BandLu::zeros(n, bw, bw);
            for (c, m) in terms {
                if let SystemMatrix::Sparse(s) = m {
                    for (i, j, v) in s.triplets() {
                        band.add(i, j, *c * v);
                    }
                }
            }
            band.factor()?;
            Ok(ComplexFactor::Banded(band))
        } else {
            let mut dense = DMatrix::<Complex64>::zeros(n, n);
            for (c, m) in terms {
                let d = m.to_dense();
                for j in 0..n {
                    for i in 0..n {
                        dense[(i, j)] += *c * d[(i, j)];
                    }
                }
            }
            let lu = nalgebra::LU::new(dense);
            let u = lu.u();
            let scale = (0..n).map(|i| u[(i, i)].norm()).fold(0.0, f64::max);
            let smallest = (0..n).map(|i| u[(i, i)].norm()).fold(f64::INFINITY, f64::min);
            if !(smallest > scale * 1e-15) {
                return Err(BresseError::SingularMatrix {
                    what: "shifted pencil",
                });
            }
            Ok(ComplexFactor::Dense(lu))
        }
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        match self {
            ComplexFactor::Banded(f) => f.solve(b),
            ComplexFactor::Dense(f) => f
                .solve(&DVector::from_column_slice(b))
                .map(|x| x.as_slice().to_vec())
                .unwrap_or_else(|| vec![Complex64::new(f64::NAN, f64::NAN); b.len()]),
        }
    }

    /// Solves with the entrywise conjugate of the factored matrix.
    pub fn solve_conj(&self, b: &[Complex64]) -> Vec<Complex64> {
        let cb: Vec<Complex64> = b.iter().map(|z| z.conj()).collect();
        self.solve(&cb).into_iter().map(|z| z.conj()).collect()
    }
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Hermitian inner product xᴴy.
pub fn cdot(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}
