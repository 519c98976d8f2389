//! Pointwise commutation sweeps, trace pairings and projection checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fespace::FEFunction;
use crate::fields::{
    affine_scalar, affine_vector, constant_vector, plane_wave, polynomial_bubble, trig_vector, AnalyticScalar, AnalyticVector, Curl, Divergence, Gradient,
};
use crate::geometry::{Mat3, StarDomain, Vec3};
use crate::mollify::{trace_pairing, Family, FieldRef, Mollified, Mollifier, MollifierVariant, PairingKind, PairingOperand, ScalarField, SmoothScalarField, SmoothVectorField, VectorField};
use crate::quadrature::VolumeRule;
use crate::quasiinterp::SmoothedInterpMatrix;

use super::csv::{fmt_float, CsvTable};
use super::norms::{lp_error, lp_norm, Operand};

/// Uniform points of the domain by rejection from its bounding box.
pub fn sample_points(domain: &StarDomain, count: usize, seed: u64) -> Vec<Vec3> {
    let (lo, hi) = domain.bounding_box();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x = Vec3::new(rng.gen_range(lo.x..=hi.x), rng.gen_range(lo.y..=hi.y), rng.gen_range(lo.z..=hi.z));
        if domain.contains(&x) {
            out.push(x);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Diagram {
    Grad,
    Curl,
    Div,
}

impl Diagram {
    pub fn name(self) -> &'static str {
        match self {
            Diagram::Grad => "grad",
            Diagram::Curl => "curl",
            Diagram::Div => "div",
        }
    }
}

/// One component of `D K f` against `K D f` at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CommuteRow {
    pub point: usize,
    pub zero_extension: bool,
    pub diagram: Diagram,
    pub component: usize,
    pub lhs: f64,
    pub rhs: f64,
}

impl CommuteRow {
    pub fn abs_diff(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

fn curl_of(j: &crate::geometry::Mat3) -> Vec3 {
    Vec3::new(j[(2, 1)] - j[(1, 2)], j[(0, 2)] - j[(2, 0)], j[(1, 0)] - j[(0, 1)])
}

/// `grad K^g f = K^c grad f`, `curl K^c u = K^d curl u`, `div K^d w = K^b div w` at each point.
pub fn commute_check(
    m: &Mollifier,
    zero_extension: bool,
    points: &[Vec3],
    f: &dyn SmoothScalarField,
    u: &dyn SmoothVectorField,
    w: &dyn SmoothVectorField,
) -> Result<Vec<CommuteRow>> {
    let mut rows = Vec::with_capacity(7 * points.len());
    for (p, x) in points.iter().enumerate() {
        let mut push = |diagram, lhs: &[f64], rhs: &[f64]| {
            for c in 0..lhs.len() {
                rows.push(CommuteRow { point: p, zero_extension, diagram, component: c, lhs: lhs[c], rhs: rhs[c] });
            }
        };
        let l = m.mollified_gradient(zero_extension, f, x)?;
        let r = m.mollify_vector(Family::Curl, zero_extension, &Gradient(f), x)?;
        push(Diagram::Grad, l.as_slice(), r.as_slice());
        let l = curl_of(&m.mollified_jacobian(Family::Curl, zero_extension, u, x)?);
        let r = m.mollify_vector(Family::Div, zero_extension, &Curl(u), x)?;
        push(Diagram::Curl, l.as_slice(), r.as_slice());
        let l = m.mollified_jacobian(Family::Div, zero_extension, w, x)?.trace();
        let r = m.mollify_scalar(Family::Broken, zero_extension, &Divergence(w), x)?;
        push(Diagram::Div, &[l], &[r]);
    }
    Ok(rows)
}

pub fn commute_table(rows: &[CommuteRow]) -> CsvTable {
    let mut t = CsvTable::new(&["point", "zero_extension", "diagram", "component", "lhs", "rhs", "abs_diff"]);
    for r in rows {
        t.push(vec![
            r.point.to_string(),
            r.zero_extension.to_string(),
            r.diagram.name().into(),
            r.component.to_string(),
            fmt_float(r.lhs),
            fmt_float(r.rhs),
            fmt_float(r.abs_diff()),
        ]);
    }
    t
}

/// `curl` (or `div`) of a mollified vector field, differentiated under the sum.
struct MollifiedDerivative<'a> {
    m: &'a Mollifier,
    family: Family,
    g: &'a dyn SmoothVectorField,
}

impl VectorField for MollifiedDerivative<'_> {
    fn value(&self, x: &Vec3) -> Vec3 {
        self.m.mollified_jacobian(self.family, true, self.g, x).map_or(Vec3::repeat(f64::NAN), |j| curl_of(&j))
    }
}

impl ScalarField for MollifiedDerivative<'_> {
    fn value(&self, x: &Vec3) -> f64 {
        self.m.mollified_jacobian(self.family, true, self.g, x).map_or(f64::NAN, |j| j.trace())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub kind: &'static str,
    pub g: usize,
    pub partner: usize,
    pub value: f64,
}

/// `int K_{delta,0}^c g . curl w - w . curl K_{delta,0}^c g` for every `(g, w)`, and
/// `int K_{delta,0}^d g . grad q + q div K_{delta,0}^d g` for every `(g, q)`.
pub fn trace_check(
    m: &Mollifier,
    gs: &[&dyn SmoothVectorField],
    ws: &[&dyn SmoothVectorField],
    qs: &[&dyn SmoothScalarField],
    rule: &VolumeRule,
) -> Result<Vec<TraceRow>> {
    let mut rows = Vec::new();
    for (i, g) in gs.iter().enumerate() {
        let kc = Mollified { mollifier: m, variant: MollifierVariant::new(Family::Curl, true), field: FieldRef::Vector(*g) };
        let dc = MollifiedDerivative { m, family: Family::Curl, g: *g };
        let v = PairingOperand { value: FieldRef::Vector(&kc), derivative: Some(FieldRef::Vector(&dc)) };
        for (j, w) in ws.iter().enumerate() {
            let cw = Curl(*w);
            let wo = PairingOperand { value: FieldRef::Vector(*w), derivative: Some(FieldRef::Vector(&cw)) };
            rows.push(TraceRow { kind: "curl", g: i, partner: j, value: trace_pairing(PairingKind::Curl, &v, &wo, rule)? });
        }
        let kd = Mollified { mollifier: m, variant: MollifierVariant::new(Family::Div, true), field: FieldRef::Vector(*g) };
        let dd = MollifiedDerivative { m, family: Family::Div, g: *g };
        let v = PairingOperand { value: FieldRef::Vector(&kd), derivative: Some(FieldRef::Scalar(&dd)) };
        for (j, q) in qs.iter().enumerate() {
            let gq = Gradient(*q);
            let qo = PairingOperand { value: FieldRef::Scalar(*q), derivative: Some(FieldRef::Vector(&gq)) };
            rows.push(TraceRow { kind: "div", g: i, partner: j, value: trace_pairing(PairingKind::Div, &v, &qo, rule)? });
        }
    }
    Ok(rows)
}

/// Fields for the trace pairings: `g` vanishing to high order on the unit cube boundary,
/// `w` and `q` nonvanishing there.
pub struct TraceBattery {
    pub gs: Vec<AnalyticVector>,
    pub ws: Vec<AnalyticVector>,
    pub qs: Vec<AnalyticScalar>,
}

impl Default for TraceBattery {
    fn default() -> Self {
        let a = Mat3::new(1.0, 2.0, 0.0, 0.0, 1.0, -1.0, 3.0, 0.0, 1.0);
        TraceBattery {
            gs: [2.0, 1.0, 3.0].iter().map(|w| AnalyticVector::scaled(polynomial_bubble(6), trig_vector(*w))).collect(),
            ws: vec![trig_vector(1.7), constant_vector(Vec3::new(1.0, -2.0, 0.5)), affine_vector(a, Vec3::new(0.2, 0.1, 0.3))],
            qs: vec![
                plane_wave(Vec3::new(1.0, 2.0, 3.0), 0.5),
                affine_scalar(Vec3::new(1.0, 1.0, -1.0), 2.0),
                plane_wave(Vec3::new(-2.0, 0.5, 1.0), 1.1),
            ],
        }
    }
}

impl TraceBattery {
    pub fn run(&self, m: &Mollifier, rule: &VolumeRule) -> Result<Vec<TraceRow>> {
        trace_check(
            m,
            &self.gs.iter().map(|g| g as &dyn SmoothVectorField).collect::<Vec<_>>(),
            &self.ws.iter().map(|w| w as &dyn SmoothVectorField).collect::<Vec<_>>(),
            &self.qs.iter().map(|q| q as &dyn SmoothScalarField).collect::<Vec<_>>(),
            rule,
        )
    }
}

pub fn trace_table(rows: &[TraceRow]) -> CsvTable {
    let mut t = CsvTable::new(&["pairing", "g", "partner", "value"]);
    for r in rows {
        t.push(vec![r.kind.into(), r.g.to_string(), r.partner.to_string(), fmt_float(r.value)]);
    }
    t
}

/// Random coefficient vectors in `[-1, 1]`.
pub fn random_functions(interp: &SmoothedInterpMatrix, count: usize, seed: u64) -> Result<Vec<FEFunction>> {
    let space = interp.space().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| FEFunction::new(space.clone(), (0..space.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect()))
        .collect()
}

/// `max ||J_h I_h K_delta f_h - f_h|| / ||f_h||` in `L^2` over random discrete fields.
pub fn project_check(interp: &SmoothedInterpMatrix, count: usize, seed: u64) -> Result<f64> {
    let mesh = interp.space().mesh().clone();
    let mut worst: f64 = 0.0;
    for f in random_functions(interp, count, seed)? {
        let p = interp.project(&f)?;
        let nf = lp_norm(Operand::Discrete(&f), 2.0, &mesh)?;
        if nf == 0.0 {
            continue;
        }
        let e = lp_error(Operand::Discrete(&f), Operand::Discrete(&p), 2.0, &mesh)?;
        if !e.is_finite() {
            return Err(Error::Numerical("projection produced a non-finite field".into()));
        }
        worst = worst.max(e / nf);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{plane_wave, trig_vector};
    use crate::kernel::build_ball_quadrature;
    use crate::mollify::DeltaField;

    #[test]
    fn commutation_holds_at_sampled_points() {
        let d = StarDomain::unit_cube();
        let m = Mollifier::new(d.clone(), DeltaField::constant(0.1).unwrap(), build_ball_quadrature(4).unwrap());
        let pts = sample_points(&d, 5, 3);
        assert!(pts.iter().all(|p| d.contains(p)));
        let f = plane_wave(Vec3::new(1.0, -2.0, 0.5), 0.2);
        let (u, w) = (trig_vector(2.0), trig_vector(1.3));
        let rows = commute_check(&m, false, &pts, &f, &u, &w).unwrap();
        assert_eq!(rows.len(), 5 * 7);
        assert!(rows.iter().all(|r| r.abs_diff() < 1e-12));
        assert_eq!(sample_points(&d, 5, 3), pts);
    }
}
