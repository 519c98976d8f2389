//! The bump kernel `rho(y) = eta exp(-1/(1-|y|^2))` and symmetric ball rules.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::mollify::neumaier_sum;

/// Gauss-Legendre nodes and weights on `[-1, 1]` (Newton on the Legendre recurrence).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for k in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * k + 1) as f64 * z * p1 - k as f64 * p2) / (k + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Gauss-Legendre rule mapped to `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    (x.iter().map(|t| 0.5 * (t + 1.0)).collect(), w.iter().map(|t| 0.5 * t).collect())
}

/// `exp(-1/(1-t))` for `t = |y|^2 < 1`, zero otherwise.
pub fn bump_profile(t: f64) -> f64 {
    if t < 1.0 {
        (-1.0 / (1.0 - t)).exp()
    } else {
        0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Kernel {
    eta: f64,
}

impl Kernel {
    pub fn new(eta: f64) -> Result<Self> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::Parameter(format!("kernel normalization must be positive, got {eta}")));
        }
        Ok(Kernel { eta })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn eval(&self, y: &Vec3) -> f64 {
        self.eta * bump_profile(y.norm_squared())
    }
}

/// Symmetric rule on the unit ball with weights `w_q`, kernel values `rho(y_q)`
/// and their products `m_q = w_q rho(y_q)` summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct BallQuadrature {
    nodes: Vec<Vec3>,
    weights: Vec<f64>,
    masses: Vec<f64>,
    order: usize,
    kernel: Kernel,
}

impl BallQuadrature {
    pub fn nodes(&self) -> &[Vec3] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `w_q rho(y_q)`.
    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec3, f64)> + '_ {
        self.nodes.iter().zip(self.masses.iter().copied())
    }

    fn calibrate(nodes: Vec<Vec3>, weights: Vec<f64>, order: usize) -> Result<Self> {
        let raw: Vec<f64> = nodes.iter().map(|y| bump_profile(y.norm_squared())).collect();
        let total = neumaier_sum(&weights.iter().zip(&raw).map(|(w, r)| w * r).collect::<Vec<_>>());
        if nodes.is_empty() || !(total > 0.0) {
            return Err(Error::Config("ball rule has no interior node".into()));
        }
        let kernel = Kernel::new(1.0 / total)?;
        let mut masses: Vec<f64> = weights.iter().zip(&raw).map(|(w, r)| w * r * kernel.eta).collect();
        let s = neumaier_sum(&masses);
        masses.iter_mut().for_each(|m| *m /= s);
        Ok(BallQuadrature { nodes, weights, masses, order: order, kernel })
    }
}

/// Spherical product rule: radial Gauss-Legendre on `(0,1)` with `2k` nodes,
/// Gauss-Legendre in `cos(theta)` with `ceil((k+1)/2)` nodes and an even
/// equispaced azimuth. Exact antipodal symmetry; angular degree `>= k`.
pub fn build_ball_quadrature(target_order: usize) -> Result<BallQuadrature> {
    if target_order < 3 {
        return Err(Error::Config(format!("ball quadrature order must be >= 3, got {target_order}")));
    }
    let n_r = 2 * target_order;
    let n_p = (target_order + 2) / 2;
    let n_a = 2 * n_p;
    let (r, wr) = gauss_legendre_unit(n_r);
    let (c, wc) = gauss_legendre(n_p);
    let offset = 0.318_309_886_183_790_7;
    let mut nodes = Vec::with_capacity(n_r * n_p * n_a);
    let mut weights = Vec::with_capacity(n_r * n_p * n_a);
    for (ri, wri) in r.iter().zip(&wr) {
        for (ci, wci) in c.iter().zip(&wc) {
            let s = (1.0 - ci * ci).sqrt();
            for k in 0..n_a {
                let phi = offset + 2.0 * PI * k as f64 / n_a as f64;
                nodes.push(Vec3::new(ri * s * phi.cos(), ri * s * phi.sin(), ri * ci));
                weights.push(wri * ri * ri * wci * 2.0 * PI / n_a as f64);
            }
        }
    }
    let degree = (2 * n_p - 1).min(n_a - 1);
    BallQuadrature::calibrate(nodes, weights, degree)
}

/// Tensor Gauss grid on `[-1,1]^3` with exterior nodes dropped.
pub fn build_tensor_ball_quadrature(points_per_axis: usize) -> Result<BallQuadrature> {
    let (x, w) = gauss_legendre(points_per_axis);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for i in 0..points_per_axis {
        for j in 0..points_per_axis {
            for k in 0..points_per_axis {
                let y = Vec3::new(x[i], x[j], x[k]);
                if y.norm_squared() < 1.0 {
                    nodes.push(y);
                    weights.push(w[i] * w[j] * w[k]);
                }
            }
        }
    }
    BallQuadrature::calibrate(nodes, weights, points_per_axis.saturating_mul(2).saturating_sub(1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for p in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(p as i32)).sum();
                let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-14, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn kernel_values() {
        let k = Kernel::new(2.0).unwrap();
        assert_eq!(k.eval(&Vec3::new(1.0, 0.0, 0.0)), 0.0);
        assert_eq!(k.eval(&Vec3::new(0.0, 2.0, 0.0)), 0.0);
        assert!((k.eval(&Vec3::zeros()) - 2.0 * (-1.0f64).exp()).abs() < 1e-16);
        let y = Vec3::new(0.99f64.sqrt(), 0.0, 0.0);
        assert!((k.eval(&y) / (2.0 * (-100.0f64).exp()) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ball_rule_partition_of_unity_and_symmetry() {
        for order in [3, 4, 8, 20] {
            let q = build_ball_quadrature(order).unwrap();
            let s = neumaier_sum(q.masses());
            assert!((s - 1.0).abs() <= 1e-15);
            let m: Vec3 = q.iter().map(|(y, m)| y * m).sum();
            assert!(m.norm() <= 1e-14);
            assert!(q.nodes().iter().all(|y| y.norm() < 1.0));
            assert!(q.order() >= order);
        }
    }

    #[test]
    fn angular_exactness() {
        let q = build_ball_quadrature(6).unwrap();
        let w: f64 = q.weights().iter().sum();
        assert!((w - 4.0 * PI / 3.0).abs() < 1e-13);
        let x2: f64 = q.nodes().iter().zip(q.weights()).map(|(y, w)| w * y.x * y.x * y.y * y.y).sum();
        assert!((x2 - 4.0 * PI / 105.0).abs() < 1e-13);
    }

    #[test]
    fn low_order_is_rejected() {
        assert!(matches!(build_ball_quadrature(2), Err(Error::Config(_))));
    }
}
