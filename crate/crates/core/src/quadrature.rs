//! Quadrature on simplices in barycentric form; weights are normalized to sum to one,
//! so an integral is `|S| * sum_i w_i f(x_i)`.

use crate::geometry::Vec3;
use crate::kernel::gauss_legendre_unit;

#[derive(Clone, Debug, PartialEq)]
pub struct SimplexRule<const N: usize> {
    pub points: Vec<[f64; N]>,
    pub weights: Vec<f64>,
}

pub type SegmentRule = SimplexRule<2>;
pub type TriangleRule = SimplexRule<3>;
pub type TetRule = SimplexRule<4>;

impl<const N: usize> SimplexRule<N> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Physical points for the simplex with vertices `v`.
    pub fn map(&self, v: &[Vec3; N]) -> impl Iterator<Item = (Vec3, f64)> + '_ {
        let v = *v;
        self.points.iter().zip(&self.weights).map(move |(l, w)| {
            let mut x = Vec3::zeros();
            for i in 0..N {
                x += v[i] * l[i];
            }
            (x, *w)
        })
    }
}

/// `n`-point Gauss-Legendre on a segment (exact for degree `2n-1`).
pub fn segment_rule(n: usize) -> SegmentRule {
    let (x, w) = gauss_legendre_unit(n);
    SimplexRule { points: x.iter().map(|t| [1.0 - t, *t]).collect(), weights: w }
}

/// Collapsed (Duffy) Gauss rule with `n` points per direction (exact for degree `2n-2`).
pub fn triangle_rule(n: usize) -> TriangleRule {
    let (x, w) = gauss_legendre_unit(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let u = x[i];
            let v = x[j] * (1.0 - u);
            points.push([1.0 - u - v, u, v]);
            weights.push(2.0 * w[i] * w[j] * (1.0 - u));
        }
    }
    SimplexRule { points, weights }
}

/// Collapsed Gauss rule with `n` points per direction (exact for degree `2n-3`).
pub fn tet_rule(n: usize) -> TetRule {
    let (x, w) = gauss_legendre_unit(n);
    let mut points = Vec::with_capacity(n * n * n);
    let mut weights = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let u = x[i];
                let v = x[j] * (1.0 - u);
                let s = x[k] * (1.0 - u) * (1.0 - x[j]);
                points.push([1.0 - u - v - s, u, v, s]);
                weights.push(6.0 * w[i] * w[j] * w[k] * (1.0 - u) * (1.0 - u) * (1.0 - x[j]));
            }
        }
    }
    SimplexRule { points, weights }
}

/// Symmetric 4-point rule, exact for quadratics.
pub fn tet_rule_degree2() -> TetRule {
    let a = 0.585_410_196_624_968_5;
    let b = 0.138_196_601_125_010_5;
    SimplexRule { points: vec![[a, b, b, b], [b, a, b, b], [b, b, a, b], [b, b, b, a]], weights: vec![0.25; 4] }
}

/// Smallest collapsed-Gauss tet rule exact for `degree`.
pub fn tet_rule_for_degree(degree: usize) -> TetRule {
    tet_rule((degree + 4) / 2)
}

pub fn triangle_rule_for_degree(degree: usize) -> TriangleRule {
    triangle_rule((degree + 3) / 2)
}

/// Tensor Gauss rule on an axis-aligned box: `(points, weights)` with weights
/// summing to the box volume.
pub fn box_rule(lo: &Vec3, hi: &Vec3, n: usize) -> (Vec<Vec3>, Vec<f64>) {
    let (x, w) = gauss_legendre_unit(n);
    let d = hi - lo;
    let mut pts = Vec::with_capacity(n * n * n);
    let mut wts = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                pts.push(Vec3::new(lo.x + d.x * x[i], lo.y + d.y * x[j], lo.z + d.z * x[k]));
                wts.push(w[i] * w[j] * w[k] * d.x * d.y * d.z);
            }
        }
    }
    (pts, wts)
}

/// Points and weights covering a volume (weights sum to its measure).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VolumeRule {
    pub points: Vec<Vec3>,
    pub weights: Vec<f64>,
}

impl VolumeRule {
    /// Cellwise rule over a mesh.
    pub fn from_mesh(mesh: &crate::mesh::SimplicialMesh, rule: &TetRule) -> Self {
        let mut out = VolumeRule::default();
        for k in 0..mesh.num_cells() {
            let vol = mesh.geometry(k).volume;
            for (x, w) in rule.map(&mesh.cell_vertices(k)) {
                out.points.push(x);
                out.weights.push(w * vol);
            }
        }
        out
    }

    /// Tensor Gauss rule on a box.
    pub fn tensor_box(lo: &Vec3, hi: &Vec3, n: usize) -> Self {
        let (points, weights) = box_rule(lo, hi, n);
        VolumeRule { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }
}

pub fn tet_volume(v: &[Vec3; 4]) -> f64 {
    (v[1] - v[0]).cross(&(v[2] - v[0])).dot(&(v[3] - v[0])) / 6.0
}

pub fn triangle_area_vector(v: &[Vec3; 3]) -> Vec3 {
    (v[1] - v[0]).cross(&(v[2] - v[0])) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    /// `int_{K_hat} l0^a l1^b l2^c l3^d = a! b! c! d! 3! / (a+b+c+d+3)!` (normalized by |K_hat| = 1/6).
    fn tet_moment(e: [u32; 4]) -> f64 {
        let s: u32 = e.iter().sum();
        e.iter().map(|k| factorial(*k)).product::<f64>() * 6.0 / factorial(s + 3)
    }

    #[test]
    fn tet_rules_exact_for_declared_degree() {
        for deg in 1..9u32 {
            let r = tet_rule_for_degree(deg as usize);
            for a in 0..=deg {
                for b in 0..=deg - a {
                    let c = deg - a - b;
                    let q: f64 = r
                        .points
                        .iter()
                        .zip(&r.weights)
                        .map(|(l, w)| w * l[1].powi(a as i32) * l[2].powi(b as i32) * l[3].powi(c as i32))
                        .sum();
                    assert!((q - tet_moment([0, a, b, c])).abs() < 1e-14, "deg {deg}");
                }
            }
        }
        let r = tet_rule_degree2();
        let q: f64 = r.points.iter().zip(&r.weights).map(|(l, w)| w * l[0] * l[1]).sum();
        assert!((q - tet_moment([1, 1, 0, 0])).abs() < 1e-15);
    }

    #[test]
    fn triangle_rules_exact_for_declared_degree() {
        for deg in 1..9u32 {
            let r = triangle_rule_for_degree(deg as usize);
            for a in 0..=deg {
                let b = deg - a;
                let q: f64 = r.points.iter().zip(&r.weights).map(|(l, w)| w * l[1].powi(a as i32) * l[2].powi(b as i32)).sum();
                let exact = factorial(a) * factorial(b) * 2.0 / factorial(a + b + 2);
                assert!((q - exact).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn box_rule_volume() {
        let (_, w) = box_rule(&Vec3::zeros(), &Vec3::new(1.0, 2.0, 3.0), 4);
        assert!((w.iter().sum::<f64>() - 6.0).abs() < 1e-13);
    }
}
