use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// LU factorization with partial pivoting, kept for repeated solves.
#[derive(Clone, Debug)]
pub struct DenseLu {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    n: usize,
}

impl DenseLu {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Usage(format!("LU needs a square matrix, got {}x{}", a.nrows(), a.ncols())));
        }
        let n = a.nrows();
        let scale = a.amax().max(f64::MIN_POSITIVE);
        let lu = a.lu();
        let u = lu.u();
        let min_pivot = (0..n).map(|i| u[(i, i)].abs()).fold(f64::INFINITY, f64::min);
        if n > 0 && !(min_pivot > scale * 1e3 * f64::EPSILON) {
            return Err(Error::Numerical(format!("matrix is singular to working precision (pivot {min_pivot:.3e})")));
        }
        Ok(DenseLu { lu, n })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::Usage(format!("rhs length {} does not match {}", b.len(), self.n)));
        }
        let x = self
            .lu
            .solve(&DVector::from_column_slice(b))
            .ok_or_else(|| Error::Numerical("LU solve failed".into()))?;
        Ok(x.as_slice().to_vec())
    }
}

pub fn dense_lu_solve(a: DMatrix<f64>, b: &[f64]) -> Result<Vec<f64>> {
    DenseLu::new(a)?.solve(b)
}

/// Eigenpairs of a symmetric-definite pencil restricted to a subspace.
#[derive(Clone, Debug)]
pub struct GenEigen {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Eigenvectors in the full space, one column each, normalized so `x^T B x = 1`.
    pub vectors: DMatrix<f64>,
    /// `max_i ||A x_i - lambda_i B x_i|| / ||x_i||`
    pub residual: f64,
}

/// Solves `Q^T A Q z = lambda Q^T B Q z` and maps back `x = Q z`.
pub fn sym_gen_eig_all(a: &DMatrix<f64>, b: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<GenEigen> {
    let n = a.nrows();
    if a.ncols() != n || b.shape() != (n, n) || q.nrows() != n {
        return Err(Error::Usage("incompatible shapes in generalized eigenproblem".into()));
    }
    let ah = q.transpose() * a * q;
    let bh = q.transpose() * b * q;
    let ah = (&ah + ah.transpose()) * 0.5;
    let bh = (&bh + bh.transpose()) * 0.5;
    let chol = bh
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("B is not positive definite on the subspace".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    let c = &linv * ah * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = c.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let z = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    let vectors = q * (linv.transpose() * z);
    let mut residual: f64 = 0.0;
    for (k, lam) in values.iter().enumerate() {
        let x = vectors.column(k);
        let r = a * x - b * x * *lam;
        residual = residual.max(r.norm() / x.norm().max(f64::MIN_POSITIVE));
    }
    Ok(GenEigen { values, vectors, residual })
}

/// Smallest eigenpair of the pencil `(A, B)` on `range(Q)`.
pub fn sym_gen_eig_smallest(a: &DMatrix<f64>, b: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<(f64, Vec<f64>, f64)> {
    let all = sym_gen_eig_all(a, b, q)?;
    if all.values.is_empty() {
        return Err(Error::Numerical("empty subspace".into()));
    }
    let x = all.vectors.column(0);
    let lam = all.values[0];
    let r = (a * x - b * x * lam).norm() / x.norm();
    Ok((lam, x.iter().copied().collect(), r))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_system_returns_rhs() {
        let x = dense_lu_solve(DMatrix::identity(3, 3), &[1.0, -2.0, 3.5]).unwrap();
        assert_eq!(x, vec![1.0, -2.0, 3.5]);
    }

    #[test]
    fn pivoting_handles_zero_leading_entry() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0]);
        let x = dense_lu_solve(a, &[3.0, 4.0]).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-15 && (x[1] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(dense_lu_solve(a, &[1.0, 1.0]), Err(Error::Numerical(_))));
    }

    #[test]
    fn identical_forms_give_unit_eigenvalue() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0]);
        let q = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 1.0, 0.0, 2.0]);
        let (lam, _, res) = sym_gen_eig_smallest(&a, &a, &q).unwrap();
        assert!((lam - 1.0).abs() < 1e-13);
        assert!(res < 1e-8);
    }

    #[test]
    fn diagonal_pencil() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0]));
        let b = DMatrix::identity(2, 2);
        let (lam, x, _) = sym_gen_eig_smallest(&a, &b, &DMatrix::identity(2, 2)).unwrap();
        assert!((lam - 1.0).abs() < 1e-14);
        assert!(x[1].abs() < 1e-14);
    }
}
