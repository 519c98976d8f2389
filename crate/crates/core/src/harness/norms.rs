use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fespace::FEFunction;
use crate::geometry::Vec3;
use crate::mesh::SimplicialMesh;
use crate::mollify::{FieldRef, Value};
use crate::quadrature::{tet_rule_for_degree, VolumeRule};

/// Either side of an error norm.
#[derive(Clone, Copy)]
pub enum Operand<'a> {
    Field(FieldRef<'a>),
    Discrete(&'a FEFunction),
    Zero,
}

impl Operand<'_> {
    fn eval(&self, k: usize, x: &Vec3) -> Option<Value> {
        match self {
            Operand::Field(FieldRef::Scalar(f)) => Some(Value::Scalar(f.value(x))),
            Operand::Field(FieldRef::Vector(f)) => Some(Value::Vector(f.value(x))),
            Operand::Discrete(u) => Some(u.space.eval_on_cell(&u.coeffs, k, x)),
            Operand::Zero => None,
        }
    }
}

fn magnitude(a: Option<Value>, b: Option<Value>) -> Result<f64> {
    let m = match (a, b) {
        (Some(Value::Scalar(x)), Some(Value::Scalar(y))) => (x - y).abs(),
        (Some(Value::Vector(x)), Some(Value::Vector(y))) => (x - y).norm(),
        (Some(Value::Scalar(x)), None) | (None, Some(Value::Scalar(x))) => x.abs(),
        (Some(Value::Vector(x)), None) | (None, Some(Value::Vector(x))) => x.norm(),
        (None, None) => 0.0,
        _ => return Err(Error::Usage("cannot compare a scalar with a vector field".into())),
    };
    Ok(m)
}

fn accumulate(p: f64, terms: impl Iterator<Item = (f64, f64)>) -> f64 {
    if p.is_infinite() {
        terms.fold(0.0, |m, (v, _)| m.max(v))
    } else {
        terms.map(|(v, w)| w * v.powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// `||f - g||_{L^p(D)}` by a cellwise degree-4 Gauss rule; `p = inf` is the max over nodes.
pub fn lp_error(f: Operand<'_>, g: Operand<'_>, p: f64, mesh: &SimplicialMesh) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Parameter(format!("p must be >= 1, got {p}")));
    }
    let rule = tet_rule_for_degree(4);
    let per_cell: Vec<Vec<(f64, f64)>> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|k| {
            let vol = mesh.geometry(k).volume;
            rule.map(&mesh.cell_vertices(k))
                .map(|(x, w)| Ok((magnitude(f.eval(k, &x), g.eval(k, &x))?, w * vol)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(accumulate(p, per_cell.into_iter().flatten()))
}

pub fn lp_norm(f: Operand<'_>, p: f64, mesh: &SimplicialMesh) -> Result<f64> {
    lp_error(f, Operand::Zero, p, mesh)
}

/// `||f - g||_{L^p}` over an arbitrary point rule (no mesh).
pub fn lp_error_on_rule(f: FieldRef<'_>, g: FieldRef<'_>, p: f64, rule: &VolumeRule) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Parameter(format!("p must be >= 1, got {p}")));
    }
    let (f, g) = (Operand::Field(f), Operand::Field(g));
    let terms: Vec<(f64, f64)> = rule
        .points
        .par_iter()
        .zip(&rule.weights)
        .map(|(x, w)| Ok((magnitude(f.eval(0, x), g.eval(0, x))?, *w)))
        .collect::<Result<_>>()?;
    Ok(accumulate(p, terms.into_iter()))
}
