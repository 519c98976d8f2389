use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fespace::{FEFunction, Kind};
use crate::geometry::StarDomain;
use crate::kernel::BallQuadrature;
use crate::mesh::SimplicialMesh;
use crate::mollify::{DeltaField, Family, FieldRef, Mollified, Mollifier, MollifierVariant};
use crate::quadrature::VolumeRule;
use crate::quasiinterp::QuasiInterpContext;

use super::csv::{fmt_float, fmt_opt, CsvTable};
use super::norms::{lp_error, lp_error_on_rule, lp_norm, Operand};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub parameter: f64,
    pub error: f64,
    /// `log2(e_prev / e_cur)` for parameter halving; `None` on the first row.
    pub order: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceTable {
    pub parameter_label: String,
    pub norm_label: String,
    pub field_label: String,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn new(parameter_label: &str, norm_label: &str, field_label: &str) -> Self {
        ConvergenceTable {
            parameter_label: parameter_label.into(),
            norm_label: norm_label.into(),
            field_label: field_label.into(),
            rows: Vec::new(),
        }
    }

    /// Appends a row; the order uses the actual parameter ratio.
    pub fn push(&mut self, parameter: f64, error: f64) {
        let order = self.rows.last().map(|prev| (prev.error / error).ln() / (prev.parameter / parameter).ln());
        self.rows.push(ConvergenceRow { parameter, error, order });
    }

    pub fn orders(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.order).collect()
    }

    pub fn min_order(&self) -> Option<f64> {
        self.orders().into_iter().reduce(f64::min)
    }

    /// Least-squares slope of `log error` against `log parameter` over all rows.
    pub fn fitted_order(&self) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self.rows.iter().filter(|r| r.error > 0.0).map(|r| (r.parameter.ln(), r.error.ln())).collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        Some(sxy / sxx)
    }

    pub fn to_table(&self) -> CsvTable {
        let mut t = CsvTable::new(&["field", "norm", &self.parameter_label, "error", "observed_order"]);
        for r in &self.rows {
            t.push(vec![
                self.field_label.clone(),
                self.norm_label.clone(),
                fmt_float(r.parameter),
                fmt_float(r.error),
                fmt_opt(r.order),
            ]);
        }
        t
    }

    pub fn to_csv(&self) -> String {
        self.to_table().to_string()
    }
}

/// `||K_delta f - f||_{L^2(D)}` over a sequence of constant `delta`, on a tensor Gauss rule
/// over the bounding box of the domain.
pub fn mollify_rate(
    domain: &StarDomain,
    quadrature: &BallQuadrature,
    variant: MollifierVariant,
    field: FieldRef<'_>,
    field_label: &str,
    deltas: &[f64],
    points_per_axis: usize,
) -> Result<ConvergenceTable> {
    check_field(variant.family, field)?;
    let (lo, hi) = domain.bounding_box();
    let rule = VolumeRule::tensor_box(&lo, &hi, points_per_axis);
    let label = format!("K{}{}", variant.family.tag(), if variant.zero_extension { "0" } else { "" });
    let mut table = ConvergenceTable::new("delta", "L2", &format!("{label}:{field_label}"));
    for &d in deltas {
        let m = Mollifier::new(domain.clone(), DeltaField::constant(d)?, quadrature.clone());
        let k = Mollified { mollifier: &m, variant, field };
        let kf = match field {
            FieldRef::Scalar(_) => FieldRef::Scalar(&k),
            FieldRef::Vector(_) => FieldRef::Vector(&k),
        };
        let e = lp_error_on_rule(kf, field, 2.0, &rule)?;
        if !e.is_finite() {
            return Err(Error::Numerical(format!("mollification error is not finite at delta = {d}")));
        }
        table.push(d, e);
    }
    Ok(table)
}

fn check_field(family: Family, field: FieldRef<'_>) -> Result<()> {
    match (family.is_vector(), field) {
        (true, FieldRef::Vector(_)) | (false, FieldRef::Scalar(_)) => Ok(()),
        _ => Err(Error::Usage(format!("family {} does not act on this field type", family.tag()))),
    }
}

/// Per mesh: `h`, and per field the `L^2` error of `J_h I_h K_delta f` and the ratio
/// `||J_h I_h K_delta f|| / ||f||`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuasiInterpRow {
    pub n: usize,
    pub h: f64,
    pub dim: usize,
    pub errors: Vec<f64>,
    pub stability: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuasiInterpStudy {
    pub kind: Kind,
    pub with_bc: bool,
    pub epsilon: f64,
    pub field_labels: Vec<String>,
    pub rows: Vec<QuasiInterpRow>,
}

impl QuasiInterpStudy {
    pub fn table(&self, field: usize) -> ConvergenceTable {
        let mut t = ConvergenceTable::new("h", "L2", &self.field_labels[field]);
        for r in &self.rows {
            t.push(r.h, r.errors[field]);
        }
        t
    }

    /// `max_n ratio / min_n ratio` for one field.
    pub fn stability_spread(&self, field: usize) -> f64 {
        let v: Vec<f64> = self.rows.iter().map(|r| r.stability[field]).collect();
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        max / min
    }

    pub fn to_csv(&self) -> String {
        let mut t = CsvTable::new(&["space", "bc", "epsilon", "n", "h", "dim", "field", "l2_error", "observed_order", "stability_ratio"]);
        for (f, label) in self.field_labels.iter().enumerate() {
            let conv = self.table(f);
            for (r, c) in self.rows.iter().zip(&conv.rows) {
                t.push(vec![
                    self.kind.to_string(),
                    self.with_bc.to_string(),
                    fmt_float(self.epsilon),
                    r.n.to_string(),
                    fmt_float(r.h),
                    r.dim.to_string(),
                    label.clone(),
                    fmt_float(r.errors[f]),
                    fmt_opt(c.order),
                    fmt_float(r.stability[f]),
                ]);
            }
        }
        t.to_string()
    }
}

/// Runs `J_h I_h K_delta` on uniform cubes `n` for every field, assembling once per mesh.
pub fn quasi_interp_rate(
    kind: Kind,
    with_bc: bool,
    fields: &[(String, FieldRef<'_>)],
    ns: &[usize],
    epsilon: f64,
    ball_order: usize,
) -> Result<QuasiInterpStudy> {
    let meshes = ns.iter().map(|&n| SimplicialMesh::cube(n).map(Arc::new)).collect::<Result<Vec<_>>>()?;
    quasi_interp_rate_on(&meshes, &StarDomain::unit_cube(), kind, with_bc, fields, epsilon, ball_order)
}

/// Same study on arbitrary meshes of `domain`; the `n` column is the mesh index.
pub fn quasi_interp_rate_on(
    meshes: &[Arc<SimplicialMesh>],
    domain: &StarDomain,
    kind: Kind,
    with_bc: bool,
    fields: &[(String, FieldRef<'_>)],
    epsilon: f64,
    ball_order: usize,
) -> Result<QuasiInterpStudy> {
    let mut rows = Vec::new();
    for (i, mesh) in meshes.iter().enumerate() {
        let ctx = QuasiInterpContext::new(mesh.clone(), domain.clone(), ball_order)?;
        let n = cube_resolution(mesh).unwrap_or(i);
        rows.push(quasi_interp_row(&ctx, n, kind, with_bc, fields, epsilon)?);
    }
    Ok(QuasiInterpStudy {
        kind,
        with_bc,
        epsilon,
        field_labels: fields.iter().map(|(l, _)| l.clone()).collect(),
        rows,
    })
}

/// `n` when the mesh has the cell count `6 n^3` of a uniform cube subdivision.
fn cube_resolution(mesh: &SimplicialMesh) -> Option<usize> {
    let n = ((mesh.num_cells() / 6) as f64).cbrt().round() as usize;
    (6 * n * n * n == mesh.num_cells()).then_some(n)
}

fn quasi_interp_row(
    ctx: &QuasiInterpContext,
    n: usize,
    kind: Kind,
    with_bc: bool,
    fields: &[(String, FieldRef<'_>)],
    epsilon: f64,
) -> Result<QuasiInterpRow> {
    let interp = ctx.assemble(kind, with_bc, epsilon)?;
    let mut errors = Vec::new();
    let mut stability = Vec::new();
    for (_, f) in fields {
        let u: FEFunction = interp.quasi_interpolate(*f)?;
        errors.push(lp_error(Operand::Field(*f), Operand::Discrete(&u), 2.0, &ctx.mesh)?);
        let nf = lp_norm(Operand::Field(*f), 2.0, &ctx.mesh)?;
        stability.push(lp_norm(Operand::Discrete(&u), 2.0, &ctx.mesh)? / nf);
    }
    Ok(QuasiInterpRow { n, h: ctx.mesh.max_diameter(), dim: interp.space().dim(), errors, stability })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{plane_wave, sine_bubble};
    use crate::geometry::Vec3;
    use crate::kernel::build_ball_quadrature;

    #[test]
    fn orders_from_halving() {
        let mut t = ConvergenceTable::new("h", "L2", "x");
        t.push(0.1, 1.0);
        t.push(0.05, 0.25);
        t.push(0.025, 0.0625);
        assert_eq!(t.rows[0].order, None);
        assert!(t.orders().iter().all(|o| (o - 2.0).abs() < 1e-12));
        assert!((t.fitted_order().unwrap() - 2.0).abs() < 1e-12);
        assert!(t.to_csv().starts_with("field,norm,h,error,observed_order\nx,L2,1.00000000000e-1,1.00000000000e0,\n"));
    }

    #[test]
    fn mollification_error_decreases_linearly() {
        let f = plane_wave(Vec3::new(1.0, 2.0, -1.5), 0.3);
        let q = build_ball_quadrature(4).unwrap();
        let t = mollify_rate(
            &StarDomain::unit_cube(),
            &q,
            MollifierVariant::new(Family::Grad, false),
            FieldRef::Scalar(&f),
            "wave",
            &[0.1, 0.05],
            6,
        )
        .unwrap();
        assert!(t.min_order().unwrap() > 0.8);
        let g = sine_bubble();
        let r = mollify_rate(&StarDomain::unit_cube(), &q, MollifierVariant::new(Family::Grad, false), FieldRef::Vector(&crate::fields::trig_vector(1.0)), "v", &[0.1], 4);
        assert!(matches!(r, Err(Error::Usage(_))));
        let _ = g;
    }

    #[test]
    fn quasi_interpolation_reproduces_affine() {
        let f = crate::fields::affine_scalar(Vec3::new(1.0, -2.0, 0.5), 0.25);
        let s = quasi_interp_rate(Kind::P1, false, &[("affine".into(), FieldRef::Scalar(&f))], &[2], 0.02, 3).unwrap();
        assert!(s.rows[0].errors[0] < 1e-11);
    }
}
