//! Discrete Poincare constants `min ||curl v|| / ||v||` over edge fields
//! that are `L^2`-orthogonal to discrete gradients.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fespace::{curl_matrix, grad_matrix, mass_matrix, FESpace, Kind};
use crate::linalg::{dot, norm2, sym_gen_eig_all, CsrMatrix, SparseLdl};
use crate::mesh::SimplicialMesh;

use super::csv::{fmt_float, CsvTable};

#[derive(Clone, Copy, Debug)]
pub struct PoincareConfig {
    /// Shift in the inverse iteration `(A + shift B)^{-1} B`.
    pub shift: f64,
    pub block: usize,
    pub max_iterations: usize,
    /// Stop once the relative residual of the smallest pair drops below this.
    pub tol: f64,
    pub seed: u64,
}

impl Default for PoincareConfig {
    fn default() -> Self {
        PoincareConfig { shift: 1.0, block: 8, max_iterations: 60, tol: 1e-10, seed: 7 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoincareRow {
    pub h: f64,
    /// Dimension of the gradient-free edge space.
    pub dim: usize,
    /// `sqrt(lambda_min)`.
    pub ratio: f64,
    /// `||A x - lambda B x|| / (lambda ||B x||)`
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug, Default)]
pub struct PoincareReport {
    pub with_bc: bool,
    pub rows: Vec<PoincareRow>,
}

impl PoincareReport {
    pub fn to_csv(&self) -> String {
        let mut t = CsvTable::new(&["h", "dim", "ratio", "residual"]);
        for r in &self.rows {
            t.push(vec![fmt_float(r.h), r.dim.to_string(), fmt_float(r.ratio), fmt_float(r.residual)]);
        }
        t.to_string()
    }

    pub fn ratios(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.ratio).collect()
    }
}

/// Matrices of the curl-curl pencil on one mesh.
pub struct CurlPencil {
    /// `C^T B_RT C`
    pub stiffness: CsrMatrix,
    /// Edge mass matrix.
    pub mass: CsrMatrix,
    /// Gradient matrix, one column dropped without boundary conditions (constants).
    pub grad: CsrMatrix,
}

impl CurlPencil {
    pub fn new(mesh: &Arc<SimplicialMesh>, with_bc: bool) -> Result<Self> {
        let p1 = FESpace::new(mesh.clone(), Kind::P1, with_bc);
        let n0 = FESpace::new(mesh.clone(), Kind::N0, with_bc);
        let rt0 = FESpace::new(mesh.clone(), Kind::RT0, with_bc);
        let mut g = grad_matrix(&p1, &n0)?;
        if !with_bc && p1.dim() > 0 {
            let keep: Vec<usize> = (1..p1.dim()).collect();
            let rows: Vec<usize> = (0..n0.dim()).collect();
            g = g.restrict(&rows, &keep);
        }
        let c = curl_matrix(&n0, &rt0)?;
        let brt = mass_matrix(&rt0);
        let stiffness = c.transpose().mul(&brt)?.mul(&c)?;
        Ok(CurlPencil { stiffness, mass: mass_matrix(&n0), grad: g })
    }

    pub fn dim(&self) -> usize {
        self.mass.nrows()
    }

    /// Dimension of the `B`-orthogonal complement of `range(G)`.
    pub fn constrained_dim(&self) -> usize {
        self.dim().saturating_sub(self.grad.ncols())
    }

    fn rel_residual(&self, x: &[f64], lam: f64) -> f64 {
        let ax = self.stiffness.matvec(x);
        let bx = self.mass.matvec(x);
        let r: Vec<f64> = ax.iter().zip(&bx).map(|(a, b)| a - lam * b).collect();
        norm2(&r) / (lam.abs() * norm2(&bx)).max(f64::MIN_POSITIVE)
    }
}

struct GradProjector<'a> {
    grad: &'a CsrMatrix,
    bg: CsrMatrix,
    gram: Option<SparseLdl>,
}

impl<'a> GradProjector<'a> {
    fn new(p: &'a CurlPencil) -> Result<Self> {
        let bg = p.mass.mul(&p.grad)?;
        let gram = if p.grad.ncols() == 0 { None } else { Some(SparseLdl::new(&p.grad.transpose().mul(&bg)?)?) };
        Ok(GradProjector { grad: &p.grad, bg, gram })
    }

    /// `x - G (G^T B G)^{-1} G^T B x`
    fn apply(&self, x: &mut [f64]) {
        let Some(gram) = &self.gram else { return };
        let s = gram.solve(&self.bg.transpose_matvec(x));
        for (xi, gi) in x.iter_mut().zip(self.grad.matvec(&s)) {
            *xi -= gi;
        }
    }
}

fn columns_to_dense(cols: &[Vec<f64>]) -> DMatrix<f64> {
    let n = cols.first().map_or(0, |c| c.len());
    DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i])
}

/// Smallest ratio by block shifted-inverse subspace iteration with Rayleigh-Ritz.
pub fn poincare_constant(mesh: &Arc<SimplicialMesh>, with_bc: bool, cfg: &PoincareConfig) -> Result<Option<PoincareRow>> {
    let pencil = CurlPencil::new(mesh, with_bc)?;
    let dim = pencil.constrained_dim();
    if dim == 0 {
        return Ok(None);
    }
    let n = pencil.dim();
    let proj = GradProjector::new(&pencil)?;
    let shifted = SparseLdl::new(&pencil.stiffness.add_scaled(cfg.shift, &pencil.mass))?;
    let p = cfg.block.min(dim).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut x: Vec<Vec<f64>> = (0..p)
        .map(|_| {
            let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            proj.apply(&mut v);
            v
        })
        .collect();
    let (mut lam, mut residual, mut iterations) = (f64::NAN, f64::INFINITY, 0);
    while iterations < cfg.max_iterations {
        iterations += 1;
        let y: Vec<Vec<f64>> = x
            .iter()
            .map(|v| {
                let mut w = shifted.solve(&pencil.mass.matvec(v));
                proj.apply(&mut w);
                let s = norm2(&w).max(f64::MIN_POSITIVE);
                w.iter_mut().for_each(|t| *t /= s);
                w
            })
            .collect();
        let ay: Vec<Vec<f64>> = y.iter().map(|v| pencil.stiffness.matvec(v)).collect();
        let by: Vec<Vec<f64>> = y.iter().map(|v| pencil.mass.matvec(v)).collect();
        let ah = DMatrix::from_fn(p, p, |i, j| dot(&y[i], &ay[j]));
        let bh = DMatrix::from_fn(p, p, |i, j| dot(&y[i], &by[j]));
        let eig = sym_gen_eig_all(&ah, &bh, &DMatrix::identity(p, p))?;
        let ym = columns_to_dense(&y);
        let xm = ym * &eig.vectors;
        x = (0..p).map(|j| xm.column(j).iter().copied().collect()).collect();
        lam = eig.values[0];
        residual = pencil.rel_residual(&x[0], lam);
        if residual <= cfg.tol {
            break;
        }
    }
    if !(lam > 0.0) {
        return Err(Error::Numerical(format!("curl-curl pencil has nonpositive smallest eigenvalue {lam}")));
    }
    Ok(Some(PoincareRow { h: mesh.max_diameter(), dim, ratio: lam.sqrt(), residual, iterations }))
}

/// Same quantity from a dense orthonormal basis of the gradient-free subspace (small meshes only).
pub fn poincare_constant_dense(mesh: &Arc<SimplicialMesh>, with_bc: bool) -> Result<Option<PoincareRow>> {
    let pencil = CurlPencil::new(mesh, with_bc)?;
    let dim = pencil.constrained_dim();
    if dim == 0 {
        return Ok(None);
    }
    let a = pencil.stiffness.to_dense();
    let b = pencil.mass.to_dense();
    let xg = &b * pencil.grad.to_dense();
    let q = complement_basis(&xg, dim)?;
    let eig = sym_gen_eig_all(&a, &b, &q)?;
    let lam = eig.values[0];
    let x: Vec<f64> = eig.vectors.column(0).iter().copied().collect();
    let residual = pencil.rel_residual(&x, lam);
    Ok(Some(PoincareRow { h: mesh.max_diameter(), dim, ratio: lam.sqrt(), residual, iterations: 1 }))
}

/// Orthonormal basis of `null(X^T)` from the eigenvectors of `I - X (X^T X)^{-1} X^T`.
pub fn complement_basis(x: &DMatrix<f64>, dim: usize) -> Result<DMatrix<f64>> {
    let n = x.nrows();
    let gram = x.transpose() * x;
    let inv = gram
        .cholesky()
        .ok_or_else(|| Error::Numerical("gradient Gram matrix is singular".into()))?
        .inverse();
    let proj = DMatrix::identity(n, n) - x * inv * x.transpose();
    let proj = (&proj + proj.transpose()) * 0.5;
    let eig = proj.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    if dim > 0 && (eig.eigenvalues[order[dim - 1]] - 1.0).abs() > 1e-8 {
        return Err(Error::Numerical("complement projector has an unexpected rank".into()));
    }
    Ok(DMatrix::from_fn(n, dim, |r, c| eig.eigenvectors[(r, order[c])]))
}

/// One row per mesh; meshes with an empty constrained space are skipped.
pub fn poincare_study(meshes: &[Arc<SimplicialMesh>], with_bc: bool, cfg: &PoincareConfig) -> Result<PoincareReport> {
    let mut rows = Vec::new();
    for m in meshes {
        if let Some(r) = poincare_constant(m, with_bc, cfg)? {
            rows.push(r);
        }
    }
    Ok(PoincareReport { with_bc, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradients_are_excluded_by_the_complement() {
        let m = Arc::new(SimplicialMesh::cube(2).unwrap());
        let p = CurlPencil::new(&m, true).unwrap();
        let xg = p.mass.to_dense() * p.grad.to_dense();
        let q = complement_basis(&xg, p.constrained_dim()).unwrap();
        assert!((q.transpose() * &xg).abs().max() < 1e-12);
    }

    #[test]
    fn iterative_matches_dense() {
        let m = Arc::new(SimplicialMesh::cube(3).unwrap());
        for bc in [true, false] {
            let d = poincare_constant_dense(&m, bc).unwrap().unwrap();
            let s = poincare_constant(&m, bc, &PoincareConfig::default()).unwrap().unwrap();
            assert!((d.ratio - s.ratio).abs() < 1e-8 * d.ratio, "{} {}", d.ratio, s.ratio);
            assert!(s.residual < 1e-8 && d.residual < 1e-8);
            assert_eq!(d.dim, s.dim);
        }
    }

    #[test]
    fn single_cube_has_one_interior_edge() {
        let m = Arc::new(SimplicialMesh::cube(1).unwrap());
        let r = poincare_constant(&m, true, &PoincareConfig::default()).unwrap().unwrap();
        assert_eq!(r.dim, 1);
        assert!(r.ratio > 0.0);
    }
}
