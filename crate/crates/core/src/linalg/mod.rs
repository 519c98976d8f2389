//! Linear algebra kernels: sparse storage, dense factorizations and Krylov solvers.

mod dense;
mod iterative;
mod ldl;
mod sparse;

pub use dense::{dense_lu_solve, sym_gen_eig_smallest, sym_gen_eig_all, DenseLu, GenEigen};
pub use iterative::{cg, gmres, IterStats};
pub use ldl::SparseLdl;
pub use sparse::CsrMatrix;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `y += s * x`
pub fn axpy(s: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}
