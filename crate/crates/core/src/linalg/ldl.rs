use sprs::{CsMat, FillInReduction, TriMat};
use sprs_ldl::{Ldl, LdlNumeric};

use super::{CsrMatrix, DenseLu};
use crate::error::{Error, Result};

/// Sparse `L D L^T` factorization of the symmetric part of a matrix, reverse Cuthill-McKee ordered.
pub struct SparseLdl {
    n: usize,
    factor: Factor,
}

/// Tiny systems go through a dense LU.
const DENSE_BELOW: usize = 8;

enum Factor {
    Sparse(LdlNumeric<f64, usize>),
    Dense(DenseLu),
}

impl SparseLdl {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Usage(format!("LDL needs a square matrix, got {}x{}", n, a.ncols())));
        }
        if n < DENSE_BELOW {
            return Ok(SparseLdl { n, factor: Factor::Dense(DenseLu::new(a.to_dense())?) });
        }
        let mut tri = TriMat::new((n, n));
        for (i, j, v) in a.triplets() {
            tri.add_triplet(i, j, 0.5 * v);
            tri.add_triplet(j, i, 0.5 * v);
        }
        let m: CsMat<f64> = tri.to_csc();
        let factor = Ldl::new()
            .fill_in_reduction(FillInReduction::ReverseCuthillMcKee)
            .check_symmetry(sprs::SymmetryCheck::DontCheckSymmetry)
            .numeric(m.view())
            .map_err(|e| Error::Numerical(format!("LDL factorization failed: {e}")))?;
        if factor.d().iter().any(|d| !d.is_finite() || *d == 0.0) {
            return Err(Error::Numerical("LDL factorization hit a zero pivot".into()));
        }
        Ok(SparseLdl { n, factor: Factor::Sparse(factor) })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        match &self.factor {
            Factor::Sparse(f) => f.nnz(),
            Factor::Dense(_) => self.n * self.n,
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        match &self.factor {
            Factor::Sparse(f) => f.solve(b.to_vec()),
            Factor::Dense(lu) => lu.solve(b).unwrap_or_else(|_| vec![f64::NAN; b.len()]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_laplacian() {
        let n = 50;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.5));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &t);
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x = SparseLdl::new(&a).unwrap().solve(&b);
        let r = super::super::sub(&a.matvec(&x), &b);
        assert!(super::super::norm_inf(&r) < 1e-13);
    }

    #[test]
    fn rejects_singular() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]);
        assert!(SparseLdl::new(&a).is_err());
        let n = 20;
        let t: Vec<_> = (0..n).filter(|i| *i != 7).map(|i| (i, i, 1.0)).collect();
        assert!(SparseLdl::new(&CsrMatrix::from_triplets(n, n, &t)).is_err());
    }
}
