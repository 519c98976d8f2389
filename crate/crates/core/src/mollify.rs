//! Pullback/Piola mollifiers `K_delta^{g,c,d,b}` and their extension-by-zero
//! counterparts `K_{delta,0}^{g,c,d,b}`.
//!
//! Each ball node `y_q` defines a sample map
//! `T_q(x) = x -+ delta(x) kappa (x - x_c) + delta(x) r y_q`
//! (shrinking with radius `r`, or expanding with radius `zeta`). The mollifiers
//! are weighted sums of the pullbacks of the input by the `T_q`:
//!
//! | family | value |
//! |--------|-------|
//! | g | `f(T_q x)` |
//! | c | `DT_q^T g(T_q x)` |
//! | d | `det(DT_q) DT_q^{-1} g(T_q x)` |
//! | b | `det(DT_q) f(T_q x)` |
//!
//! For constant `delta`, `DT_q` is the shrink (or expansion) Jacobian.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{ExpandMap, Mat3, ShrinkMap, StarDomain, Vec3};
use crate::kernel::BallQuadrature;
use crate::mesh::MeshsizeField;
use crate::quadrature::VolumeRule;

/// `delta(x)`: a constant, or `eps * h(x)` with the P1 meshsize `h`.
#[derive(Clone, Debug)]
pub enum DeltaField {
    Constant(f64),
    MeshScaled { eps: f64, meshsize: Arc<MeshsizeField> },
}

impl DeltaField {
    pub fn constant(delta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::Parameter(format!("delta = {delta} outside [0, 1]")));
        }
        Ok(DeltaField::Constant(delta))
    }

    pub fn mesh_scaled(eps: f64, meshsize: Arc<MeshsizeField>) -> Result<Self> {
        if !(eps >= 0.0) || eps * meshsize.max_value() > 1.0 {
            return Err(Error::Parameter(format!("eps = {eps} gives delta outside [0, 1]")));
        }
        Ok(DeltaField::MeshScaled { eps, meshsize })
    }

    /// `(delta(x), grad delta(x))`.
    pub fn eval(&self, x: &Vec3) -> Result<(f64, Vec3)> {
        match self {
            DeltaField::Constant(d) => Ok((*d, Vec3::zeros())),
            DeltaField::MeshScaled { eps, meshsize } => {
                let (h, g) = meshsize.eval(x)?;
                Ok((eps * h, g * *eps))
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, DeltaField::Constant(_))
    }

    /// Upper bound of `delta` over the domain.
    pub fn max_value(&self) -> f64 {
        match self {
            DeltaField::Constant(d) => *d,
            DeltaField::MeshScaled { eps, meshsize } => eps * meshsize.max_value(),
        }
    }

    /// Lipschitz constant of `delta`.
    pub fn lipschitz(&self) -> f64 {
        match self {
            DeltaField::Constant(_) => 0.0,
            DeltaField::MeshScaled { eps, meshsize } => eps * meshsize.lipschitz(),
        }
    }
}

/// Which form degree the mollifier acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    /// Scalar potentials (gradient domain).
    Grad,
    /// Vector fields with tangential continuity (curl domain).
    Curl,
    /// Vector fields with normal continuity (divergence domain).
    Div,
    /// Densities.
    Broken,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Grad, Family::Curl, Family::Div, Family::Broken];

    pub fn tag(self) -> char {
        match self {
            Family::Grad => 'g',
            Family::Curl => 'c',
            Family::Div => 'd',
            Family::Broken => 'b',
        }
    }

    pub fn is_vector(self) -> bool {
        matches!(self, Family::Curl | Family::Div)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.tag())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "g" => Ok(Family::Grad),
            "c" => Ok(Family::Curl),
            "d" => Ok(Family::Div),
            "b" => Ok(Family::Broken),
            _ => Err(Error::Usage(format!("unknown family `{s}` (expected g, c, d or b)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MollifierVariant {
    pub family: Family,
    pub zero_extension: bool,
}

impl MollifierVariant {
    pub fn new(family: Family, zero_extension: bool) -> Self {
        MollifierVariant { family, zero_extension }
    }
}

pub trait ScalarField: Sync {
    fn value(&self, x: &Vec3) -> f64;
}

pub trait VectorField: Sync {
    fn value(&self, x: &Vec3) -> Vec3;
}

/// Scalar field with an analytic gradient.
pub trait SmoothScalarField: ScalarField {
    fn gradient(&self, x: &Vec3) -> Vec3;
}

/// Vector field with an analytic Jacobian `J_ij = d_j g_i`.
pub trait SmoothVectorField: VectorField {
    fn jacobian(&self, x: &Vec3) -> Mat3;

    fn curl(&self, x: &Vec3) -> Vec3 {
        let j = self.jacobian(x);
        Vec3::new(j[(2, 1)] - j[(1, 2)], j[(0, 2)] - j[(2, 0)], j[(1, 0)] - j[(0, 1)])
    }

    fn divergence(&self, x: &Vec3) -> f64 {
        self.jacobian(x).trace()
    }
}

/// Adapter turning a closure into a scalar field.
pub struct ScalarFn<F>(pub F);

impl<F: Fn(&Vec3) -> f64 + Sync> ScalarField for ScalarFn<F> {
    fn value(&self, x: &Vec3) -> f64 {
        (self.0)(x)
    }
}

/// Adapter turning a closure into a vector field.
pub struct VectorFn<F>(pub F);

impl<F: Fn(&Vec3) -> Vec3 + Sync> VectorField for VectorFn<F> {
    fn value(&self, x: &Vec3) -> Vec3 {
        (self.0)(x)
    }
}

#[derive(Clone, Copy)]
pub enum FieldRef<'a> {
    Scalar(&'a dyn ScalarField),
    Vector(&'a dyn VectorField),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Value {
    Scalar(f64),
    Vector(Vec3),
}

impl Value {
    pub fn scalar(self) -> Option<f64> {
        match self {
            Value::Scalar(v) => Some(v),
            Value::Vector(_) => None,
        }
    }

    pub fn vector(self) -> Option<Vec3> {
        match self {
            Value::Vector(v) => Some(v),
            Value::Scalar(_) => None,
        }
    }

    pub fn abs_diff(&self, other: &Value) -> f64 {
        match (self, other) {
            (Value::Scalar(a), Value::Scalar(b)) => (a - b).abs(),
            (Value::Vector(a), Value::Vector(b)) => (a - b).amax(),
            _ => f64::INFINITY,
        }
    }
}

/// `det(A) A^{-1}` for a 3x3 matrix, rows `a2 x a3`, `a3 x a1`, `a1 x a2` of the columns.
pub fn adjugate(a: &Mat3) -> Mat3 {
    let (c1, c2, c3): (Vec3, Vec3, Vec3) = (a.column(0).into(), a.column(1).into(), a.column(2).into());
    Mat3::from_rows(&[c2.cross(&c3).transpose(), c3.cross(&c1).transpose(), c1.cross(&c2).transpose()])
}

/// One sample of the mollifier at a point: `(mass, T_q(x), DT_q)`.
#[derive(Clone, Copy, Debug)]
pub struct Sample {
    pub mass: f64,
    pub point: Vec3,
    pub jacobian: Mat3,
}

/// All data needed to evaluate the eight mollifiers on a domain.
#[derive(Clone, Debug)]
pub struct Mollifier {
    shrink: ShrinkMap,
    expand: ExpandMap,
    delta: DeltaField,
    quadrature: BallQuadrature,
}

impl Mollifier {
    /// Uses `r = kappa rho_in` for constant `delta`, `kappa rho_in / 2` otherwise,
    /// and `zeta = kappa rho_in / 3`.
    pub fn new(domain: StarDomain, delta: DeltaField, quadrature: BallQuadrature) -> Self {
        let shrink = if delta.is_constant() {
            ShrinkMap::for_constant_delta(domain.clone())
        } else {
            ShrinkMap::for_variable_delta(domain.clone())
        };
        let expand = ExpandMap::standard(domain);
        Mollifier { shrink, expand, delta, quadrature }
    }

    pub fn with_maps(shrink: ShrinkMap, expand: ExpandMap, delta: DeltaField, quadrature: BallQuadrature) -> Result<Self> {
        if shrink.domain() != expand.domain() {
            return Err(Error::Usage("shrink and expansion maps use different domains".into()));
        }
        Ok(Mollifier { shrink, expand, delta, quadrature })
    }

    pub fn domain(&self) -> &StarDomain {
        self.shrink.domain()
    }

    pub fn delta(&self) -> &DeltaField {
        &self.delta
    }

    pub fn quadrature(&self) -> &BallQuadrature {
        &self.quadrature
    }

    pub fn shrink_map(&self) -> &ShrinkMap {
        &self.shrink
    }

    pub fn expand_map(&self) -> &ExpandMap {
        &self.expand
    }

    /// Ball radius factor: `r` for the shrinking family, `zeta` for zero extension.
    pub fn radius(&self, zero_extension: bool) -> f64 {
        if zero_extension {
            self.expand.zeta()
        } else {
            self.shrink.radius()
        }
    }

    /// Largest displacement factor: `|T_q(x) - x| <= delta(x) * displacement_factor`.
    pub fn displacement_factor(&self, zero_extension: bool) -> f64 {
        self.domain().kappa() * self.domain().outer_radius() + self.radius(zero_extension)
    }

    /// Sample maps at `x` (requires `x` in the closed domain).
    pub fn samples(&self, zero_extension: bool, x: &Vec3) -> Result<Vec<Sample>> {
        let (d, g) = self.delta.eval(x)?;
        self.samples_with(zero_extension, x, d, &g)
    }

    pub fn samples_with(&self, zero_extension: bool, x: &Vec3, delta: f64, grad: &Vec3) -> Result<Vec<Sample>> {
        let (base, jac) = if zero_extension {
            self.expand.eval_with(x, delta, grad)?
        } else {
            self.shrink.eval_with(x, delta, grad)?
        };
        let r = self.radius(zero_extension) * delta;
        let rg = grad * self.radius(zero_extension);
        Ok(self
            .quadrature
            .iter()
            .map(|(y, m)| Sample { mass: m, point: base + y * r, jacobian: jac + y * rg.transpose() })
            .collect())
    }

    /// Sample point `T_q(x)` for given `delta(x)` (no Jacobian, no domain check).
    #[inline]
    pub fn sample_point(&self, zero_extension: bool, x: &Vec3, delta: f64, q: usize) -> Vec3 {
        let d = self.domain();
        let sign = if zero_extension { 1.0 } else { -1.0 };
        x + (x - d.center()) * (sign * delta * d.kappa()) + self.quadrature.nodes()[q] * (delta * self.radius(zero_extension))
    }

    fn check_sample(&self, zero_extension: bool, x: &Vec3, p: &Vec3) -> Result<bool> {
        if self.domain().contains(p) {
            Ok(true)
        } else if zero_extension {
            Ok(false)
        } else {
            Err(Error::InclusionViolation { origin: [x.x, x.y, x.z], point: [p.x, p.y, p.z] })
        }
    }

    fn check_point(&self, x: &Vec3) -> Result<(f64, Vec3)> {
        if !self.domain().contains(x) {
            return Err(Error::Domain([x.x, x.y, x.z]));
        }
        let (d, g) = self.delta.eval(x)?;
        if !(0.0..=1.0).contains(&d) {
            return Err(Error::Parameter(format!("delta(x) = {d} outside [0, 1]")));
        }
        Ok((d, g))
    }

    pub fn mollify_scalar(&self, family: Family, zero_extension: bool, f: &dyn ScalarField, x: &Vec3) -> Result<f64> {
        if family.is_vector() {
            return Err(Error::Usage(format!("family {family} acts on vector fields")));
        }
        let (d, g) = self.check_point(x)?;
        if d == 0.0 {
            return Ok(f.value(x));
        }
        let mut acc = 0.0;
        for s in self.samples_with(zero_extension, x, d, &g)? {
            if !self.check_sample(zero_extension, x, &s.point)? {
                continue;
            }
            let a = if family == Family::Broken { s.jacobian.determinant() } else { 1.0 };
            acc += s.mass * a * f.value(&s.point);
        }
        Ok(acc)
    }

    pub fn mollify_vector(&self, family: Family, zero_extension: bool, f: &dyn VectorField, x: &Vec3) -> Result<Vec3> {
        if !family.is_vector() {
            return Err(Error::Usage(format!("family {family} acts on scalar fields")));
        }
        let (d, g) = self.check_point(x)?;
        if d == 0.0 {
            return Ok(f.value(x));
        }
        let mut acc = Vec3::zeros();
        for s in self.samples_with(zero_extension, x, d, &g)? {
            if !self.check_sample(zero_extension, x, &s.point)? {
                continue;
            }
            let v = f.value(&s.point);
            acc += match family {
                Family::Curl => s.jacobian.transpose() * v,
                _ => adjugate(&s.jacobian) * v,
            } * s.mass;
        }
        Ok(acc)
    }

    /// `K_delta` (or `K_{delta,0}` when `variant.zero_extension`) applied to `field` at `x`.
    pub fn mollify(&self, variant: MollifierVariant, field: FieldRef<'_>, x: &Vec3) -> Result<Value> {
        match field {
            FieldRef::Scalar(f) => self.mollify_scalar(variant.family, variant.zero_extension, f, x).map(Value::Scalar),
            FieldRef::Vector(f) => self.mollify_vector(variant.family, variant.zero_extension, f, x).map(Value::Vector),
        }
    }

    /// `K_{delta,0}` of the given family.
    pub fn mollify_zero(&self, family: Family, field: FieldRef<'_>, x: &Vec3) -> Result<Value> {
        self.mollify(MollifierVariant::new(family, true), field, x)
    }

    /// Gradient of `K^g f` by differentiating under the sum (chain rule).
    pub fn mollified_gradient(&self, zero_extension: bool, f: &dyn SmoothScalarField, x: &Vec3) -> Result<Vec3> {
        let (d, g) = self.check_point(x)?;
        if d == 0.0 {
            return Ok(f.gradient(x));
        }
        let mut acc = Vec3::zeros();
        for s in self.samples_with(zero_extension, x, d, &g)? {
            if self.check_sample(zero_extension, x, &s.point)? {
                acc += s.jacobian.transpose() * f.gradient(&s.point) * s.mass;
            }
        }
        Ok(acc)
    }

    /// `d_m (DT_q)_{ki}`; the sample maps are quadratic in `x` only through `delta(x)`,
    /// whose gradient is piecewise constant.
    fn jacobian_derivatives(&self, zero_extension: bool, grad: &Vec3) -> [Mat3; 3] {
        let sign = if zero_extension { 1.0 } else { -1.0 };
        let k = self.domain().kappa() * sign;
        let mut out = [Mat3::zeros(); 3];
        for (m, dm) in out.iter_mut().enumerate() {
            for kk in 0..3 {
                for i in 0..3 {
                    let mut v = 0.0;
                    if kk == i {
                        v += grad[m];
                    }
                    if kk == m {
                        v += grad[i];
                    }
                    dm[(kk, i)] = k * v;
                }
            }
        }
        out
    }

    /// Jacobian of `K^c g` or `K^d g` by differentiating under the sum, including
    /// the derivatives of `DT_q` when `delta` varies.
    pub fn mollified_jacobian(&self, family: Family, zero_extension: bool, f: &dyn SmoothVectorField, x: &Vec3) -> Result<Mat3> {
        if !family.is_vector() {
            return Err(Error::Usage(format!("family {family} has no vector Jacobian")));
        }
        let (d, g) = self.check_point(x)?;
        if d == 0.0 {
            return Ok(f.jacobian(x));
        }
        let dd = self.jacobian_derivatives(zero_extension, &g);
        let mut acc = Mat3::zeros();
        for s in self.samples_with(zero_extension, x, d, &g)? {
            if !self.check_sample(zero_extension, x, &s.point)? {
                continue;
            }
            let v = f.value(&s.point);
            let jv = f.jacobian(&s.point) * s.jacobian;
            let a = &s.jacobian;
            let mut out = Mat3::zeros();
            for m in 0..3 {
                // column m: d_m [A(x) v(T x)] = (d_m A) v + A (Dv DT)[:, m]
                let col_jv: Vec3 = jv.column(m).into();
                let col = match family {
                    Family::Curl => dd[m].transpose() * v + a.transpose() * col_jv,
                    _ => adjugate_derivative(a, &dd[m]) * v + adjugate(a) * col_jv,
                };
                out.set_column(m, &col);
            }
            acc += out * s.mass;
        }
        Ok(acc)
    }
}

/// Directional derivative of `adj(A)` along `dA`.
pub fn adjugate_derivative(a: &Mat3, da: &Mat3) -> Mat3 {
    let c: [Vec3; 3] = [a.column(0).into(), a.column(1).into(), a.column(2).into()];
    let dc: [Vec3; 3] = [da.column(0).into(), da.column(1).into(), da.column(2).into()];
    let row = |i: usize, j: usize| dc[i].cross(&c[j]) + c[i].cross(&dc[j]);
    Mat3::from_rows(&[row(1, 2).transpose(), row(2, 0).transpose(), row(0, 1).transpose()])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairingKind {
    /// `int v . curl w - w . curl v`
    Curl,
    /// `int v . grad q + q div v`
    Div,
}

/// A field together with the derivative the pairing needs.
#[derive(Clone, Copy)]
pub struct PairingOperand<'a> {
    pub value: FieldRef<'a>,
    pub derivative: Option<FieldRef<'a>>,
}

/// Volume form of the tangential (`Curl`) or normal (`Div`) trace pairing with `w`.
pub fn trace_pairing(kind: PairingKind, v: &PairingOperand<'_>, w: &PairingOperand<'_>, rule: &VolumeRule) -> Result<f64> {
    let missing = || Error::Usage("trace pairing needs derivative evaluators of both operands".into());
    let (vd, wd) = (v.derivative.ok_or_else(missing)?, w.derivative.ok_or_else(missing)?);
    let bad = || Error::Usage("trace pairing operands have the wrong value kinds".into());
    let terms: Vec<f64> = match (kind, v.value, vd, w.value, wd) {
        (PairingKind::Curl, FieldRef::Vector(v), FieldRef::Vector(cv), FieldRef::Vector(w), FieldRef::Vector(cw)) => rule
            .points
            .par_iter()
            .zip(&rule.weights)
            .map(|(x, wt)| wt * (v.value(x).dot(&cw.value(x)) - w.value(x).dot(&cv.value(x))))
            .collect(),
        (PairingKind::Div, FieldRef::Vector(v), FieldRef::Scalar(dv), FieldRef::Scalar(q), FieldRef::Vector(gq)) => rule
            .points
            .par_iter()
            .zip(&rule.weights)
            .map(|(x, wt)| wt * (v.value(x).dot(&gq.value(x)) + q.value(x) * dv.value(x)))
            .collect(),
        _ => return Err(bad()),
    };
    Ok(neumaier_sum(&terms))
}

/// Compensated summation.
pub fn neumaier_sum(v: &[f64]) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for &x in v {
        let t = s + x;
        if s.abs() >= x.abs() {
            c += (s - t) + x;
        } else {
            c += (x - t) + s;
        }
        s = t;
    }
    s + c
}

/// A mollified field bound to its operator, usable wherever a field is expected.
/// Evaluation errors are reported as NaN.
pub struct Mollified<'a> {
    pub mollifier: &'a Mollifier,
    pub variant: MollifierVariant,
    pub field: FieldRef<'a>,
}

impl ScalarField for Mollified<'_> {
    fn value(&self, x: &Vec3) -> f64 {
        match self.field {
            FieldRef::Scalar(f) => self
                .mollifier
                .mollify_scalar(self.variant.family, self.variant.zero_extension, f, x)
                .unwrap_or(f64::NAN),
            FieldRef::Vector(_) => f64::NAN,
        }
    }
}

impl VectorField for Mollified<'_> {
    fn value(&self, x: &Vec3) -> Vec3 {
        match self.field {
            FieldRef::Vector(f) => self
                .mollifier
                .mollify_vector(self.variant.family, self.variant.zero_extension, f, x)
                .unwrap_or(Vec3::repeat(f64::NAN)),
            FieldRef::Scalar(_) => Vec3::repeat(f64::NAN),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::build_ball_quadrature;
    use crate::mesh::SimplicialMesh;

    fn mollifier(delta: f64) -> Mollifier {
        Mollifier::new(StarDomain::unit_cube(), DeltaField::constant(delta).unwrap(), build_ball_quadrature(6).unwrap())
    }

    #[test]
    fn constants_are_preserved() {
        let m = mollifier(0.1);
        let one = ScalarFn(|_: &Vec3| 3.5);
        for x in [Vec3::new(0.5, 0.5, 0.5), Vec3::new(1.0, 1.0, 0.0), Vec3::new(0.1, 0.9, 0.3)] {
            let v = m.mollify_scalar(Family::Grad, false, &one, &x).unwrap();
            assert!((v - 3.5).abs() < 1e-14);
        }
    }

    #[test]
    fn affine_fields_map_to_shrunk_point() {
        let m = mollifier(0.1);
        let a = Vec3::new(0.3, -1.2, 2.0);
        let f = ScalarFn(move |x: &Vec3| a.dot(x) + 0.7);
        let x = Vec3::new(0.9, 0.2, 0.6);
        let (phi, _) = m.shrink_map().eval_with(&x, 0.1, &Vec3::zeros()).unwrap();
        let v = m.mollify_scalar(Family::Grad, false, &f, &x).unwrap();
        assert!((v - (a.dot(&phi) + 0.7)).abs() < 1e-14);
    }

    #[test]
    fn div_family_scales_constants() {
        let m = mollifier(0.1);
        let c = Vec3::new(1.0, -2.0, 0.5);
        let f = VectorFn(move |_: &Vec3| c);
        let s = 1.0 - 0.1 * StarDomain::unit_cube().kappa();
        let v = m.mollify_vector(Family::Div, false, &f, &Vec3::new(0.4, 0.4, 0.4)).unwrap();
        assert!((v - c * s * s).norm() < 1e-13);
        let v = m.mollify_vector(Family::Curl, false, &f, &Vec3::new(0.4, 0.4, 0.4)).unwrap();
        assert!((v - c * s).norm() < 1e-13);
        let b = m.mollify_scalar(Family::Broken, false, &ScalarFn(|_: &Vec3| 1.0), &Vec3::new(0.2, 0.4, 0.4)).unwrap();
        assert!((b - s * s * s).abs() < 1e-13);
    }

    #[test]
    fn zero_delta_is_identity() {
        let m = mollifier(0.0);
        let f = ScalarFn(|x: &Vec3| x.x.sin() * x.y);
        let x = Vec3::new(0.3, 0.6, 0.1);
        assert_eq!(m.mollify_scalar(Family::Grad, false, &f, &x).unwrap(), f.value(&x));
        assert_eq!(m.mollify_scalar(Family::Broken, true, &f, &x).unwrap(), f.value(&x));
    }

    #[test]
    fn wrong_kinds_and_outside_points() {
        let m = mollifier(0.1);
        let f = ScalarFn(|_: &Vec3| 1.0);
        assert!(matches!(m.mollify_scalar(Family::Curl, false, &f, &Vec3::repeat(0.5)), Err(Error::Usage(_))));
        assert!(matches!(m.mollify_scalar(Family::Grad, false, &f, &Vec3::repeat(1.5)), Err(Error::Domain(_))));
    }

    #[test]
    fn zero_extension_vanishes_near_boundary_and_is_one_inside() {
        let m = mollifier(0.05);
        let one = ScalarFn(|_: &Vec3| 1.0);
        let zeta = m.radius(true);
        let x = Vec3::new(1.0 - 0.5 * 0.05 * zeta, 0.5, 0.5);
        assert_eq!(m.mollify_scalar(Family::Grad, true, &one, &x).unwrap(), 0.0);
        let v = m.mollify_scalar(Family::Grad, true, &one, &Vec3::new(0.5, 0.5, 0.5)).unwrap();
        assert!((v - 1.0).abs() < 1e-14);
        let band = m.mollify_scalar(Family::Grad, true, &one, &Vec3::new(0.97, 0.5, 0.5)).unwrap();
        assert!((0.0..=1.0 + 1e-14).contains(&band));
    }

    struct Trig;
    impl VectorField for Trig {
        fn value(&self, x: &Vec3) -> Vec3 {
            Vec3::new((2.0 * x.y).sin() * x.z, (x.x + x.z).cos(), x.x * x.y * (3.0 * x.z).sin())
        }
    }
    impl SmoothVectorField for Trig {
        fn jacobian(&self, x: &Vec3) -> Mat3 {
            Mat3::new(
                0.0,
                2.0 * (2.0 * x.y).cos() * x.z,
                (2.0 * x.y).sin(),
                -(x.x + x.z).sin(),
                0.0,
                -(x.x + x.z).sin(),
                x.y * (3.0 * x.z).sin(),
                x.x * (3.0 * x.z).sin(),
                3.0 * x.x * x.y * (3.0 * x.z).cos(),
            )
        }
    }

    struct CurlOf<'a>(&'a Trig);
    impl VectorField for CurlOf<'_> {
        fn value(&self, x: &Vec3) -> Vec3 {
            self.0.curl(x)
        }
    }
    struct DivOf<'a>(&'a Trig);
    impl ScalarField for DivOf<'_> {
        fn value(&self, x: &Vec3) -> f64 {
            self.0.divergence(x)
        }
    }

    #[test]
    fn chain_rule_commutes_with_variable_delta() {
        let mesh = Arc::new(SimplicialMesh::graded_cube(3, 1.6).unwrap());
        let h = Arc::new(MeshsizeField::new(mesh));
        let d = DeltaField::mesh_scaled(0.05, h).unwrap();
        let m = Mollifier::new(StarDomain::unit_cube(), d, build_ball_quadrature(4).unwrap());
        let g = Trig;
        for x in [Vec3::new(0.31, 0.47, 0.52), Vec3::new(0.8, 0.15, 0.66)] {
            for zero in [false, true] {
                let jc = m.mollified_jacobian(Family::Curl, zero, &g, &x).unwrap();
                let curl = Vec3::new(jc[(2, 1)] - jc[(1, 2)], jc[(0, 2)] - jc[(2, 0)], jc[(1, 0)] - jc[(0, 1)]);
                let rhs = m.mollify_vector(Family::Div, zero, &CurlOf(&g), &x).unwrap();
                assert!((curl - rhs).amax() < 1e-12, "{:?}", curl - rhs);
                let jd = m.mollified_jacobian(Family::Div, zero, &g, &x).unwrap();
                let rhs = m.mollify_scalar(Family::Broken, zero, &DivOf(&g), &x).unwrap();
                assert!((jd.trace() - rhs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn adjugate_identities() {
        let a = Mat3::new(1.0, 0.2, -0.3, 0.1, 0.9, 0.05, 0.0, -0.2, 1.1);
        assert!((adjugate(&a) - a.try_inverse().unwrap() * a.determinant()).norm() < 1e-14);
        let da = Mat3::new(0.3, -0.1, 0.2, 0.0, 0.5, 0.1, 0.2, 0.0, -0.4);
        let h = 1e-6;
        let fd = (adjugate(&(a + da * h)) - adjugate(&(a - da * h))) / (2.0 * h);
        assert!((fd - adjugate_derivative(&a, &da)).norm() < 1e-9);
    }

    #[test]
    fn pairing_of_constants_vanishes_and_missing_derivative_errors() {
        let c = VectorFn(|_: &Vec3| Vec3::new(1.0, 2.0, 3.0));
        let z = VectorFn(|_: &Vec3| Vec3::zeros());
        let rule = VolumeRule::tensor_box(&Vec3::zeros(), &Vec3::repeat(1.0), 3);
        let op = PairingOperand { value: FieldRef::Vector(&c), derivative: Some(FieldRef::Vector(&z)) };
        assert_eq!(trace_pairing(PairingKind::Curl, &op, &op, &rule).unwrap(), 0.0);
        let no = PairingOperand { value: FieldRef::Vector(&c), derivative: None };
        assert!(matches!(trace_pairing(PairingKind::Curl, &no, &op, &rule), Err(Error::Usage(_))));
    }
}
