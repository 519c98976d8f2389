//! Star-shaped polytopes and the radial shrinking/expansion maps.
//!
//! The transversal field is `j(x) = k(x) = kappa (x - x_c)` with
//! `kappa = 1 / r_out`, so both maps are radial contractions/dilations
//! about the star center when `delta` is constant.

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mollify::DeltaField;

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Halfspace {
    pub normal: Vec3,
    pub offset: f64,
}

impl Halfspace {
    pub fn new(normal: Vec3, offset: f64) -> Self {
        Halfspace { normal, offset }
    }

    pub fn excess(&self, x: &Vec3) -> f64 {
        self.normal.dot(x) - self.offset
    }
}

/// Convex polytope `{x : n_i . x <= b_i}` star-shaped w.r.t. `B(x_c, rho_in)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StarDomain {
    halfspaces: Vec<Halfspace>,
    center: Vec3,
    star_radius: f64,
    outer_radius: f64,
    kappa: f64,
    margin: f64,
    vertices: Vec<Vec3>,
}

impl StarDomain {
    pub fn new(halfspaces: Vec<Halfspace>, center: Vec3, star_radius: f64) -> Result<Self> {
        if halfspaces.len() < 4 {
            return Err(Error::Parameter("a bounded polytope needs at least 4 halfspaces".into()));
        }
        for (i, h) in halfspaces.iter().enumerate() {
            if (h.normal.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::Parameter(format!("halfspace {i} normal is not unit length")));
            }
        }
        if !(star_radius > 0.0) {
            return Err(Error::Parameter("star radius must be positive".into()));
        }
        let min_gap = halfspaces.iter().map(|h| -h.excess(&center)).fold(f64::INFINITY, f64::min);
        if min_gap < star_radius * (1.0 - 1e-12) {
            return Err(Error::Parameter(format!(
                "ball B(x_c, {star_radius}) is not contained in the domain (min gap {min_gap})"
            )));
        }
        let vertices = polytope_vertices(&halfspaces)?;
        let outer_radius = vertices.iter().map(|v| (v - center).norm()).fold(0.0, f64::max);
        let kappa = 1.0 / outer_radius;
        Ok(StarDomain { margin: kappa * min_gap, halfspaces, center, star_radius, outer_radius, kappa, vertices })
    }

    pub fn unit_cube() -> Self {
        let mut hs = Vec::new();
        for k in 0..3 {
            let mut n = Vec3::zeros();
            n[k] = 1.0;
            hs.push(Halfspace::new(n, 1.0));
            hs.push(Halfspace::new(-n, 0.0));
        }
        StarDomain::new(hs, Vec3::new(0.5, 0.5, 0.5), 0.5).expect("unit cube is a valid star domain")
    }

    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.halfspaces
    }

    pub fn center(&self) -> Vec3 {
        self.center
    }

    pub fn star_radius(&self) -> f64 {
        self.star_radius
    }

    pub fn outer_radius(&self) -> f64 {
        self.outer_radius
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `gamma = kappa * min_i (b_i - x_c . n_i)`.
    pub fn transversality_margin(&self) -> f64 {
        self.margin
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn tolerance(&self) -> f64 {
        1e-12 * self.outer_radius
    }

    pub fn contains(&self, x: &Vec3) -> bool {
        let tol = self.tolerance();
        self.halfspaces.iter().all(|h| h.excess(x) <= tol)
    }

    /// Distance to the boundary for interior points (negative outside).
    pub fn boundary_distance(&self, x: &Vec3) -> f64 {
        self.halfspaces.iter().map(|h| -h.excess(x)).fold(f64::INFINITY, f64::min)
    }

    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    /// Radial displacement `kappa (x - x_c)` shared by both maps.
    fn field(&self, x: &Vec3) -> Vec3 {
        (x - self.center) * self.kappa
    }
}

fn polytope_vertices(hs: &[Halfspace]) -> Result<Vec<Vec3>> {
    let mut out: Vec<Vec3> = Vec::new();
    let n = hs.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let m = Mat3::from_rows(&[hs[i].normal.transpose(), hs[j].normal.transpose(), hs[k].normal.transpose()]);
                if m.determinant().abs() < 1e-12 {
                    continue;
                }
                let Some(inv) = m.try_inverse() else { continue };
                let p = inv * Vec3::new(hs[i].offset, hs[j].offset, hs[k].offset);
                let scale = 1.0 + p.norm();
                if hs.iter().all(|h| h.excess(&p) <= 1e-10 * scale) && !out.iter().any(|q| (q - p).norm() < 1e-10 * scale) {
                    out.push(p);
                }
            }
        }
    }
    if out.len() < 4 {
        return Err(Error::Parameter("halfspaces do not bound a polytope".into()));
    }
    Ok(out)
}

/// `phi_delta(x) = x - delta(x) j(x)` with the safety radius `r`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShrinkMap {
    domain: StarDomain,
    radius: f64,
}

impl ShrinkMap {
    pub fn new(domain: StarDomain, radius: f64) -> Result<Self> {
        let max = domain.kappa * domain.star_radius;
        if !(radius >= 0.0) || radius > max * (1.0 + 1e-12) {
            return Err(Error::Parameter(format!("shrink radius {radius} exceeds kappa*rho_in = {max}")));
        }
        Ok(ShrinkMap { domain, radius })
    }

    /// `r = kappa rho_in`, valid for constant `delta`.
    pub fn for_constant_delta(domain: StarDomain) -> Self {
        let r = domain.kappa * domain.star_radius;
        ShrinkMap { domain, radius: r }
    }

    /// `r = kappa rho_in / 2`, used with mesh-scaled `delta`.
    pub fn for_variable_delta(domain: StarDomain) -> Self {
        let r = 0.5 * domain.kappa * domain.star_radius;
        ShrinkMap { domain, radius: r }
    }

    pub fn domain(&self) -> &StarDomain {
        &self.domain
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Point and Jacobian for given `delta(x)` and `grad delta(x)`.
    pub fn eval_with(&self, x: &Vec3, delta: f64, grad_delta: &Vec3) -> Result<(Vec3, Mat3)> {
        radial_eval(&self.domain, x, delta, grad_delta, -1.0)
    }

    pub fn eval(&self, x: &Vec3, delta: &DeltaField) -> Result<(Vec3, Mat3)> {
        let (d, g) = delta.eval(x)?;
        self.eval_with(x, d, &g)
    }
}

/// `theta_delta(x) = x + delta(x) k(x)` with the safety radius `zeta`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpandMap {
    domain: StarDomain,
    zeta: f64,
}

impl ExpandMap {
    pub fn new(domain: StarDomain, zeta: f64) -> Result<Self> {
        let max = domain.kappa * domain.star_radius / 3.0;
        if !(zeta > 0.0) || zeta > max * (1.0 + 1e-12) {
            return Err(Error::Parameter(format!("expansion radius {zeta} outside (0, kappa*rho_in/3 = {max}]")));
        }
        Ok(ExpandMap { domain, zeta })
    }

    /// `zeta = kappa rho_in / 3`.
    pub fn standard(domain: StarDomain) -> Self {
        let z = domain.kappa * domain.star_radius / 3.0;
        ExpandMap { domain, zeta: z }
    }

    pub fn domain(&self) -> &StarDomain {
        &self.domain
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn eval_with(&self, x: &Vec3, delta: f64, grad_delta: &Vec3) -> Result<(Vec3, Mat3)> {
        radial_eval(&self.domain, x, delta, grad_delta, 1.0)
    }

    pub fn eval(&self, x: &Vec3, delta: &DeltaField) -> Result<(Vec3, Mat3)> {
        let (d, g) = delta.eval(x)?;
        self.eval_with(x, d, &g)
    }
}

fn radial_eval(d: &StarDomain, x: &Vec3, delta: f64, grad: &Vec3, sign: f64) -> Result<(Vec3, Mat3)> {
    if !d.contains(x) {
        return Err(Error::Domain([x.x, x.y, x.z]));
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::Parameter(format!("delta(x) = {delta} outside [0, 1]")));
    }
    let j = d.field(x);
    let point = x + j * (sign * delta);
    let jac = Mat3::identity() + (Mat3::identity() * (d.kappa * delta) + j * grad.transpose()) * sign;
    Ok((point, jac))
}

/// Outcome of a sampled check of `phi_delta(D) + B(0, delta r) in D`.
#[derive(Clone, Debug, PartialEq)]
pub struct InclusionCheck {
    pub holds: bool,
    /// `(x, y, delta)` of the first violating sample.
    pub violation: Option<(Vec3, Vec3, f64)>,
}

/// Samples domain vertices, boundary and interior points, unit directions and
/// `delta in {0, delta_max/4, ..., delta_max}` and tests `phi(x) + delta r y in D`.
pub fn verify_inclusion(map: &ShrinkMap, delta_max: f64, samples: usize, seed: u64) -> InclusionCheck {
    let d = &map.domain;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = d.bounding_box();
    let mut points: Vec<Vec3> = d.vertices().to_vec();
    let mut guard = 0;
    while points.len() < d.vertices().len() + samples.max(1) && guard < 1000 * samples.max(1) {
        guard += 1;
        let p = Vec3::new(rng.gen_range(lo.x..=hi.x), rng.gen_range(lo.y..=hi.y), rng.gen_range(lo.z..=hi.z));
        if d.contains(&p) {
            points.push(p);
        }
    }
    let mut dirs: Vec<Vec3> = Vec::new();
    for h in d.halfspaces() {
        dirs.push(h.normal);
    }
    for v in d.vertices() {
        let t = v - d.center;
        if t.norm() > 0.0 {
            dirs.push(t.normalize());
        }
    }
    for _ in 0..samples.max(1) {
        let g = Vec3::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        if g.norm() > 1e-3 {
            dirs.push(g.normalize());
        }
    }
    for k in 0..=4 {
        let delta = delta_max * k as f64 / 4.0;
        for x in &points {
            let Ok((phi, _)) = map.eval_with(x, delta, &Vec3::zeros()) else {
                return InclusionCheck { holds: false, violation: Some((*x, Vec3::zeros(), delta)) };
            };
            for y in &dirs {
                if !d.contains(&(phi + y * (delta * map.radius))) {
                    return InclusionCheck { holds: false, violation: Some((*x, *y, delta)) };
                }
            }
        }
    }
    InclusionCheck { holds: true, violation: None }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube() -> StarDomain {
        StarDomain::unit_cube()
    }

    #[test]
    fn cube_constants() {
        let d = cube();
        assert!((d.outer_radius() - 0.75f64.sqrt()).abs() < 1e-15);
        assert!((d.kappa() - 1.0 / 0.75f64.sqrt()).abs() < 1e-14);
        assert_eq!(d.vertices().len(), 8);
        assert!((d.transversality_margin() - 0.5 * d.kappa()).abs() < 1e-15);
    }

    #[test]
    fn zero_delta_is_identity() {
        let m = ShrinkMap::for_constant_delta(cube());
        let x = Vec3::new(0.2, 0.3, 0.9);
        let (p, j) = m.eval_with(&x, 0.0, &Vec3::zeros()).unwrap();
        assert_eq!(p, x);
        assert_eq!(j, Mat3::identity());
    }

    #[test]
    fn center_is_fixed() {
        let d = cube();
        let k = d.kappa();
        let m = ShrinkMap::for_constant_delta(d.clone());
        let (p, j) = m.eval_with(&d.center(), 0.2, &Vec3::zeros()).unwrap();
        assert_eq!(p, d.center());
        assert!((j - Mat3::identity() * (1.0 - 0.2 * k)).norm() < 1e-15);
        let e = ExpandMap::standard(d.clone());
        let (p, j) = e.eval_with(&d.center(), 0.2, &Vec3::zeros()).unwrap();
        assert_eq!(p, d.center());
        assert!((j - Mat3::identity() * (1.0 + 0.2 * k)).norm() < 1e-15);
    }

    #[test]
    fn corner_images() {
        let d = cube();
        let x = Vec3::new(1.0, 1.0, 1.0);
        let (p, _) = ShrinkMap::for_constant_delta(d.clone()).eval_with(&x, 0.1, &Vec3::zeros()).unwrap();
        let (q, _) = ExpandMap::standard(d).eval_with(&x, 0.1, &Vec3::zeros()).unwrap();
        let c = 0.1 / 0.75f64.sqrt() * 0.5;
        for k in 0..3 {
            assert!((p[k] - (1.0 - c)).abs() < 1e-15);
            assert!((q[k] - (1.0 + c)).abs() < 1e-15);
        }
        assert!((p[0] - 0.94226).abs() < 1e-5);
        assert!((q[0] - 1.05773).abs() < 1e-5);
    }

    #[test]
    fn errors() {
        let m = ShrinkMap::for_constant_delta(cube());
        assert!(matches!(m.eval_with(&Vec3::new(1.5, 0.5, 0.5), 0.1, &Vec3::zeros()), Err(Error::Domain(_))));
        assert!(matches!(m.eval_with(&Vec3::new(0.5, 0.5, 0.5), 1.5, &Vec3::zeros()), Err(Error::Parameter(_))));
        assert!(ShrinkMap::new(cube(), 10.0).is_err());
        assert!(ExpandMap::new(cube(), 1.0).is_err());
    }

    #[test]
    fn membership() {
        let d = cube();
        assert!(d.contains(&Vec3::new(0.5, 0.5, 0.5)));
        assert!(!d.contains(&Vec3::new(1.1, 0.0, 0.0)));
        assert!(d.contains(&Vec3::new(1.0, 0.5, 0.5)));
        assert!(d.contains(&Vec3::new(1.0 + 1e-14, 0.5, 0.5)));
    }

    #[test]
    fn inclusion_checks() {
        assert!(verify_inclusion(&ShrinkMap::for_constant_delta(cube()), 0.5, 200, 1).holds);
        assert!(verify_inclusion(&ShrinkMap::for_constant_delta(cube()), 0.0, 10, 1).holds);
        let bad = ShrinkMap { domain: cube(), radius: 10.0 };
        let r = verify_inclusion(&bad, 0.5, 50, 1);
        assert!(!r.holds && r.violation.is_some());
    }

    #[test]
    fn jacobian_matches_variable_delta_product_rule() {
        let d = cube();
        let m = ShrinkMap::for_variable_delta(d.clone());
        let g = Vec3::new(0.1, -0.05, 0.02);
        let delta = |x: &Vec3| 0.05 + g.dot(&(x - Vec3::new(0.5, 0.5, 0.5)));
        let x = Vec3::new(0.3, 0.6, 0.7);
        let (_, j) = m.eval_with(&x, delta(&x), &g).unwrap();
        let h = 1e-6;
        for c in 0..3 {
            let mut xp = x;
            xp[c] += h;
            let mut xm = x;
            xm[c] -= h;
            let (pp, _) = m.eval_with(&xp, delta(&xp), &g).unwrap();
            let (pm, _) = m.eval_with(&xm, delta(&xm), &g).unwrap();
            let col = (pp - pm) / (2.0 * h);
            assert!((col - j.column(c)).norm() < 1e-8);
        }
    }

    #[test]
    fn tetrahedral_domain() {
        let s = 1.0 / 3f64.sqrt();
        let hs = vec![
            Halfspace::new(Vec3::new(-1.0, 0.0, 0.0), 0.0),
            Halfspace::new(Vec3::new(0.0, -1.0, 0.0), 0.0),
            Halfspace::new(Vec3::new(0.0, 0.0, -1.0), 0.0),
            Halfspace::new(Vec3::new(s, s, s), s),
        ];
        let c = Vec3::repeat(0.2);
        let d = StarDomain::new(hs, c, 0.2 * 0.99).unwrap();
        assert_eq!(d.vertices().len(), 4);
        assert!(verify_inclusion(&ShrinkMap::for_constant_delta(d), 0.5, 100, 3).holds);
    }
}
