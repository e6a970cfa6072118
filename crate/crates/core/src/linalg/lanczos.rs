use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

#[derive(Debug, Clone, Copy)]
pub struct LanczosOutcome {
    /// Largest Ritz value.
    pub value: f64,
    /// Residual bound |β_k sₖ| for the returned Ritz pair.
    pub residual: f64,
    pub iterations: usize,
}

/// Largest eigenvalue of an operator that is self-adjoint and positive
/// semidefinite with respect to the Hermitian inner product `inner`.
///
/// Full reorthogonalization keeps the basis orthonormal to working
/// precision, so the iteration also terminates cleanly when the Krylov space
/// becomes invariant.
pub fn lanczos_largest(
    dim: usize,
    mut apply: impl FnMut(&[Complex64]) -> Vec<Complex64>,
    inner: impl Fn(&[Complex64], &[Complex64]) -> Complex64,
    start: Vec<Complex64>,
    max_iter: usize,
    tol: f64,
) -> LanczosOutcome {
    let max_iter = max_iter.min(dim).max(1);
    let norm = |x: &[Complex64]| inner(x, x).re.max(0.0).sqrt();
    let mut q = start;
    let nq = norm(&q);
    for z in q.iter_mut() {
        *z /= nq;
    }
    let mut basis: Vec<Vec<Complex64>> = vec![q];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut best = LanczosOutcome {
        value: 0.0,
        residual: f64::INFINITY,
        iterations: 0,
    };
    for k in 0..max_iter {
        let mut w = apply(&basis[k]);
        let a = inner(&basis[k], &w).re;
        alpha.push(a);
        for _ in 0..2 {
            for qj in &basis {
                let c = inner(qj, &w);
                for (wi, qi) in w.iter_mut().zip(qj) {
                    *wi -= c * qi;
                }
            }
        }
        let b = norm(&w);

        let m = alpha.len();
        let mut t = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alpha[i];
            if i + 1 < m {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let (imax, theta) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        let residual = (b * eig.eigenvectors[(m - 1, imax)]).abs();
        best = LanczosOutcome {
            value: theta,
            residual,
            iterations: k + 1,
        };
        if residual <= tol * theta.abs() || b <= 1e-14 * theta.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        if k + 1 == max_iter {
            break;
        }
        beta.push(b);
        for wi in w.iter_mut() {
            *wi /= b;
        }
        basis.push(w);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_top_eigenvalue_of_diagonal_operator() {
        let d: Vec<f64> = (1..=40).map(|k| 1.0 + (k as f64).sqrt()).collect();
        let dim = d.len();
        let start: Vec<Complex64> = (0..dim).map(|i| Complex64::new(1.0, 0.1 * i as f64)).collect();
        let out = lanczos_largest(
            dim,
            |x| x.iter().zip(&d).map(|(z, s)| z * s).collect(),
            |x, y| x.iter().zip(y).map(|(a, b)| a.conj() * b).sum(),
            start,
            dim,
            1e-12,
        );
        assert!((out.value - d[dim - 1]).abs() < 1e-10 * d[dim - 1]);
    }
}
