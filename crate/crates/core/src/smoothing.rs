//! Degrees of freedom of mollified fields, `sigma_i(K_delta f)`.
//!
//! Each dof entity `S` is pushed through every ball-node sample map `T_q` (as the
//! affine simplex through the mapped vertices) and the dof functional is applied on
//! the image: `sigma_S(K f) = sum_q m_q sigma_{T_q S}(f)`. For finite element inputs
//! the image is clipped against mesh cells and integrated exactly; for other inputs
//! Gauss rules on the image are used.

use std::sync::Arc;

use rayon::prelude::*;

use crate::clip::{clip_segment, clip_tet, clip_triangle, Plane};
use crate::error::{Error, Result};
use crate::fespace::{check_field_kind, DofRules, Entity, FESpace, FEFunction};
use crate::geometry::Vec3;
use crate::linalg::CsrMatrix;
use crate::mollify::{FieldRef, Mollifier, Value};
use crate::quadrature::{tet_volume, triangle_area_vector};

const MEASURE_RTOL: f64 = 1e-9;

/// `I_h K_delta` (or `I_h K_{delta,0}`) restricted to the dofs of one space.
#[derive(Clone, Debug)]
pub struct SmoothedDofs {
    space: Arc<FESpace>,
    mollifier: Arc<Mollifier>,
    zero_extension: bool,
    vertex_delta: Vec<f64>,
    domain_planes: Vec<Plane>,
}

fn contribution(space: &FESpace, k: usize, x: &Vec3, weight: f64, dir: Option<&Vec3>, row: &mut Vec<(usize, f64)>) {
    let l = space.mesh().barycentric(k, x);
    for cd in space.cell_dofs(k) {
        let Some(j) = cd.dof else { continue };
        let v = match (space.shape_value(k, cd.shape, &l), dir) {
            (Value::Scalar(s), _) => s,
            (Value::Vector(v), Some(d)) => v.dot(d),
            (Value::Vector(_), None) => unreachable!(),
        };
        row.push((j, weight * v));
    }
}

fn bbox(pts: &[Vec3]) -> (Vec3, Vec3) {
    let mut lo = pts[0];
    let mut hi = pts[0];
    for p in &pts[1..] {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (lo, hi)
}

impl SmoothedDofs {
    pub fn new(space: Arc<FESpace>, mollifier: Arc<Mollifier>, zero_extension: bool) -> Result<Self> {
        let mesh = space.mesh();
        let vertex_delta = mesh
            .vertices()
            .iter()
            .map(|v| mollifier.delta().eval(v).map(|(d, _)| d))
            .collect::<Result<Vec<f64>>>()?;
        let domain_planes = mollifier.domain().halfspaces().iter().map(|h| Plane::new(h.normal, h.offset)).collect();
        Ok(SmoothedDofs { space, mollifier, zero_extension, vertex_delta, domain_planes })
    }

    pub fn space(&self) -> &Arc<FESpace> {
        &self.space
    }

    pub fn mollifier(&self) -> &Arc<Mollifier> {
        &self.mollifier
    }

    pub fn zero_extension(&self) -> bool {
        self.zero_extension
    }

    fn is_identity(&self) -> bool {
        self.vertex_delta.iter().all(|d| *d == 0.0)
    }

    /// Image of dof `i`'s entity under sample map `q`.
    pub fn image(&self, i: usize, q: usize) -> Entity {
        let ids = self.space.dof_vertex_ids(i);
        let verts = self.space.mesh().vertices();
        let mut k = 0;
        self.space.dof_entity(i).map(|_| {
            let v = ids[k];
            k += 1;
            self.mollifier.sample_point(self.zero_extension, &verts[v], self.vertex_delta[v], q)
        })
    }

    fn check_inclusion(&self, origin: &Vec3, e: &Entity) -> Result<()> {
        if self.zero_extension {
            return Ok(());
        }
        for p in e.vertices() {
            if !self.mollifier.domain().contains(p) {
                return Err(Error::Config(format!(
                    "inclusion violation: sample ({:.6}, {:.6}, {:.6}) of ({:.6}, {:.6}, {:.6}) leaves the domain",
                    p.x, p.y, p.z, origin.x, origin.y, origin.z
                )));
            }
        }
        Ok(())
    }

    /// Measure of `e` inside the domain.
    fn inside_measure(&self, e: &Entity) -> f64 {
        let planes = &self.domain_planes;
        match e {
            Entity::Point(p) => {
                if self.mollifier.domain().contains(p) {
                    1.0
                } else {
                    0.0
                }
            }
            Entity::Segment(v) => clip_segment(&v[0], &v[1], planes).map_or(0.0, |(a, b)| (b - a) * (v[1] - v[0]).norm()),
            Entity::Triangle(v, _) => clip_triangle(v, planes).iter().map(|t| triangle_area_vector(t).norm()).sum(),
            Entity::Tet(v) => clip_tet(v, planes).iter().map(|t| tet_volume(t).abs()).sum(),
        }
    }

    /// Lowest-id candidate cell containing `x`.
    fn owner(&self, candidates: &[usize], x: &Vec3) -> Option<usize> {
        let mesh = self.space.mesh();
        candidates.iter().copied().find(|&k| {
            let g = mesh.geometry(k);
            let tol = 1e-12 * g.diameter;
            if (0..3).any(|a| x[a] < g.lo[a] - tol || x[a] > g.hi[a] + tol) {
                return false;
            }
            mesh.barycentric(k, x).iter().all(|l| *l >= -1e-12)
        })
    }

    /// Whether cell `k` is the lowest-id candidate containing `c` (trivially so for interior points of `k`).
    fn owns(&self, k: usize, candidates: &[usize], c: &Vec3) -> bool {
        let l = self.space.mesh().barycentric(k, c);
        if l.iter().all(|v| *v > 1e-9) {
            return true;
        }
        self.owner(candidates, c) == Some(k)
    }

    /// Row `i` of the matrix: `sigma_i(K theta_j)` for all `j`, from exact integration on clipped pieces.
    fn row(&self, i: usize) -> Result<Vec<(usize, f64)>> {
        let space = &*self.space;
        let mesh = space.mesh();
        let ids = space.dof_vertex_ids(i);
        let origin = mesh.vertices()[ids[0]];
        let candidates = mesh.star_union(&ids);
        let mut row = Vec::new();
        for (q, mass) in self.mollifier.quadrature().masses().iter().enumerate() {
            let e = self.image(i, q);
            self.check_inclusion(&origin, &e)?;
            let target = if self.zero_extension { self.inside_measure(&e) } else { e.measure() };
            let (lo, hi) = bbox(e.vertices());
            let mut covered = 0.0;
            match e {
                Entity::Point(p) => match self.owner(&candidates, &p) {
                    Some(k) => {
                        contribution(space, k, &p, *mass, None, &mut row);
                        covered = 1.0;
                    }
                    None => {
                        if target > 0.0 {
                            return Err(self.reach_error(i));
                        }
                    }
                },
                _ => {
                    for &k in &candidates {
                        let g = mesh.geometry(k);
                        let tol = 1e-12 * g.diameter;
                        if (0..3).any(|a| hi[a] < g.lo[a] - tol || lo[a] > g.hi[a] + tol) {
                            continue;
                        }
                        let planes = mesh.cell_planes(k);
                        let mut all_inside = true;
                        let mut rejected = false;
                        for p in &planes {
                            let mut out = 0;
                            for v in e.vertices() {
                                if p.eval(v) > 0.0 {
                                    out += 1;
                                }
                            }
                            rejected |= out == e.vertices().len();
                            all_inside &= out == 0;
                        }
                        if rejected {
                            continue;
                        }
                        let keep = |c: &Vec3| self.owns(k, &candidates, c);
                        match &e {
                            Entity::Segment(v) => {
                                let clipped = if all_inside { Some((0.0, 1.0)) } else { clip_segment(&v[0], &v[1], &planes) };
                                if let Some((t0, t1)) = clipped {
                                    let d = v[1] - v[0];
                                    let mid = v[0] + d * (0.5 * (t0 + t1));
                                    if t1 > t0 && keep(&mid) {
                                        let piece = d * (t1 - t0);
                                        contribution(space, k, &mid, *mass, Some(&piece), &mut row);
                                        covered += piece.norm();
                                    }
                                }
                            }
                            Entity::Triangle(v, s) => {
                                let n = triangle_area_vector(v) * *s;
                                let n = n / n.norm();
                                let pieces = if all_inside { vec![*v] } else { clip_triangle(v, &planes) };
                                for t in pieces {
                                    let c = (t[0] + t[1] + t[2]) / 3.0;
                                    let area = triangle_area_vector(&t).norm();
                                    if area > 0.0 && keep(&c) {
                                        contribution(space, k, &c, *mass, Some(&(n * area)), &mut row);
                                        covered += area;
                                    }
                                }
                            }
                            Entity::Tet(v) => {
                                let pieces = if all_inside { vec![*v] } else { clip_tet(v, &planes) };
                                for t in pieces {
                                    let c = (t[0] + t[1] + t[2] + t[3]) / 4.0;
                                    let vol = tet_volume(&t).abs();
                                    if vol > 0.0 {
                                        contribution(space, k, &c, *mass * vol, None, &mut row);
                                        covered += vol;
                                    }
                                }
                            }
                            Entity::Point(_) => unreachable!(),
                        }
                    }
                }
            }
            let scale = e.measure().max(f64::MIN_POSITIVE);
            if (covered - target).abs() > MEASURE_RTOL * scale {
                return Err(self.reach_error(i));
            }
        }
        row.sort_unstable_by_key(|e| e.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len() / 8);
        for (j, v) in row {
            match merged.last_mut() {
                Some(last) if last.0 == j => last.1 += v,
                _ => merged.push((j, v)),
            }
        }
        Ok(merged)
    }

    fn reach_error(&self, i: usize) -> Error {
        Error::Config(format!(
            "image of {} dof {i} is not covered by the cells around its entity; epsilon exceeds its admissible maximum",
            self.space.kind()
        ))
    }

    /// The matrix `M` with `M e_j = coeff(I_h K theta_j)`.
    pub fn matrix(&self) -> Result<CsrMatrix> {
        let n = self.space.dim();
        if self.is_identity() {
            return Ok(CsrMatrix::identity(n));
        }
        let rows = (0..n).into_par_iter().map(|i| self.row(i)).collect::<Result<Vec<_>>>()?;
        Ok(CsrMatrix::from_rows(n, rows))
    }

    /// Coefficients of `I_h K f` for a finite element input (exact).
    pub fn apply_discrete(&self, f: &FEFunction, matrix: &CsrMatrix) -> Result<Vec<f64>> {
        if !Arc::ptr_eq(&f.space, &self.space) {
            return Err(Error::Usage("finite element function lives in a different space".into()));
        }
        Ok(matrix.matvec(&f.coeffs))
    }

    /// Coefficients of `I_h K f` for a general field, with `rules` on each image.
    pub fn apply(&self, field: FieldRef<'_>, rules: &DofRules) -> Result<Vec<f64>> {
        check_field_kind(self.space.kind(), &field)?;
        let n = self.space.dim();
        if self.is_identity() {
            return (0..n).into_par_iter().map(|i| rules.apply(&self.space.dof_entity(i), field)).collect();
        }
        (0..n)
            .into_par_iter()
            .map(|i| {
                let origin = self.space.mesh().vertices()[self.space.dof_vertex_ids(i)[0]];
                let mut acc = 0.0;
                for (q, mass) in self.mollifier.quadrature().masses().iter().enumerate() {
                    let e = self.image(i, q);
                    self.check_inclusion(&origin, &e)?;
                    acc += mass * self.integrate(&e, field, rules)?;
                }
                Ok(acc)
            })
            .collect()
    }

    /// Dof functional on `e`, restricted to the domain for zero extension.
    fn integrate(&self, e: &Entity, field: FieldRef<'_>, rules: &DofRules) -> Result<f64> {
        if !self.zero_extension {
            return rules.apply(e, field);
        }
        let planes = &self.domain_planes;
        match e {
            Entity::Point(p) => {
                if self.mollifier.domain().contains(p) {
                    rules.apply(e, field)
                } else {
                    Ok(0.0)
                }
            }
            Entity::Segment(v) => match clip_segment(&v[0], &v[1], planes) {
                Some((t0, t1)) => {
                    let d = v[1] - v[0];
                    rules.apply(&Entity::Segment([v[0] + d * t0, v[0] + d * t1]), field)
                }
                None => Ok(0.0),
            },
            Entity::Triangle(v, s) => {
                let n = triangle_area_vector(v) * *s;
                let mut acc = 0.0;
                for t in clip_triangle(v, planes) {
                    let sign = triangle_area_vector(&t).dot(&n).signum();
                    acc += rules.apply(&Entity::Triangle(t, sign), field)?;
                }
                Ok(acc)
            }
            Entity::Tet(v) => clip_tet(v, planes).iter().map(|t| rules.apply(&Entity::Tet(*t), field)).sum(),
        }
    }
}
