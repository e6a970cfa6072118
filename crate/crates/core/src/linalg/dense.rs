use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{BresseError, Result};

/// Eigenpairs of the symmetric-definite pencil (A, B): A x = μ B x, with
/// eigenvalues ascending and eigenvectors B-orthonormal (columns).
#[derive(Debug, Clone)]
pub struct GeneralizedEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

pub fn dense_generalized_symmetric_eigen(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
) -> Result<GeneralizedEigen> {
    let chol = nalgebra::Cholesky::new(b.clone()).ok_or(BresseError::NotPositiveDefinite {
        what: "generalized eigenproblem metric",
    })?;
    let l = chol.l();
    // C = L⁻¹ A L⁻ᵀ
    let y = l
        .solve_lower_triangular(a)
        .ok_or(BresseError::SingularMatrix { what: "Cholesky factor" })?;
    let c = l
        .solve_lower_triangular(&y.transpose())
        .ok_or(BresseError::SingularMatrix { what: "Cholesky factor" })?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let n = a.nrows();
    let lt = l.transpose();
    let mut values = Vec::with_capacity(n);
    let mut vectors = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        values.push(eig.eigenvalues[i]);
        let z = eig.eigenvectors.column(i).into_owned();
        let x = lt
            .solve_upper_triangular(&z)
            .ok_or(BresseError::SingularMatrix { what: "Cholesky factor" })?;
        vectors.set_column(k, &x);
    }
    Ok(GeneralizedEigen { values, vectors })
}
