use super::{axpy, dot, norm2};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Preconditioned conjugate gradients for a symmetric positive definite operator.
///
/// `precond` is the inverse diagonal (Jacobi); pass `None` for plain CG.
/// Stops when `||r|| <= tol * ||b||`.
pub fn cg<A>(apply: A, b: &[f64], x0: Option<&[f64]>, precond: Option<&[f64]>, tol: f64, max_iter: usize) -> Result<(Vec<f64>, IterStats)>
where
    A: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let bnorm = norm2(b);
    let mut x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![0.0; n]);
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], IterStats { iterations: 0, relative_residual: 0.0 }));
    }
    let ax = apply(&x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let prec = |r: &[f64]| -> Vec<f64> {
        match precond {
            Some(d) => r.iter().zip(d).map(|(a, b)| a * b).collect(),
            None => r.to_vec(),
        }
    };
    let mut z = prec(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 0..max_iter {
        let rel = norm2(&r) / bnorm;
        if rel <= tol {
            return Ok((x, IterStats { iterations: it, relative_residual: rel }));
        }
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Numerical(format!("CG breakdown: p^T A p = {pap:.3e}")));
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        z = prec(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    let rel = norm2(&r) / bnorm;
    if rel <= tol {
        Ok((x, IterStats { iterations: max_iter, relative_residual: rel }))
    } else {
        Err(Error::Numerical(format!("CG did not converge in {max_iter} iterations (residual {rel:.3e})")))
    }
}

/// Restarted GMRES(m) with modified Gram-Schmidt and Givens rotations.
pub fn gmres<A>(apply: A, b: &[f64], restart: usize, tol: f64, max_iter: usize) -> Result<(Vec<f64>, IterStats)>
where
    A: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let bnorm = norm2(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, IterStats { iterations: 0, relative_residual: 0.0 }));
    }
    let m = restart.max(1);
    let mut total = 0;
    loop {
        let ax = apply(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm2(&r);
        if beta / bnorm <= tol {
            return Ok((x, IterStats { iterations: total, relative_residual: beta / bnorm }));
        }
        if total >= max_iter {
            return Err(Error::Numerical(format!(
                "GMRES did not converge in {max_iter} iterations (residual {:.3e})",
                beta / bnorm
            )));
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|ri| ri / beta).collect()];
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            let mut w = apply(&v[k]);
            for (i, vi) in v.iter().enumerate() {
                h[i][k] = dot(&w, vi);
                axpy(-h[i][k], vi, &mut w);
            }
            h[k + 1][k] = norm2(&w);
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let d = h[k][k].hypot(h[k + 1][k]);
            if d == 0.0 {
                return Err(Error::Numerical("GMRES breakdown: singular Hessenberg".into()));
            }
            cs[k] = h[k][k] / d;
            sn[k] = h[k + 1][k] / d;
            h[k][k] = d;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            total += 1;
            let hk1 = norm2(&w);
            if g[k + 1].abs() / bnorm <= tol * 0.5 || total >= max_iter || hk1 == 0.0 {
                break;
            }
            v.push(w.iter().map(|wi| wi / hk1).collect());
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let s: f64 = (i + 1..k_used).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        for (i, yi) in y.iter().enumerate() {
            axpy(*yi, &v[i], &mut x);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CsrMatrix;

    fn laplace_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t)
    }

    #[test]
    fn cg_solves_spd_system() {
        let a = laplace_1d(50);
        let xs: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = a.matvec(&xs);
        let (x, st) = cg(|v| a.matvec(v), &b, None, None, 1e-13, 500).unwrap();
        assert!(st.relative_residual <= 1e-13);
        for (u, v) in x.iter().zip(&xs) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn gmres_solves_nonsymmetric_system() {
        let n = 40;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 3.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.2));
            }
            if i > 1 {
                t.push((i, i - 2, 0.4));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &t);
        let xs: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 * 0.1).collect();
        let b = a.matvec(&xs);
        let (x, _) = gmres(|v| a.matvec(v), &b, 10, 1e-13, 1000).unwrap();
        for (u, v) in x.iter().zip(&xs) {
            assert!((u - v).abs() < 1e-10);
        }
    }
}
