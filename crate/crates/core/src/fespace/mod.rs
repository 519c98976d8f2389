//! Lowest-order finite element spaces P1, N0 (edge), RT0 (face) and P0 on a
//! tetrahedral mesh, with canonical interpolation and the discrete derivatives.

mod diff;
mod reference;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

pub use diff::{curl_matrix, div_matrix, grad_matrix, mass_matrix};
pub use reference::{piola_conditioning, ReferenceElement};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::mesh::{SimplicialMesh, LOCAL_EDGES};
use crate::mollify::{Family, FieldRef, ScalarField, Value, VectorField};
use crate::quadrature::{segment_rule, tet_rule, tet_volume, triangle_area_vector, triangle_rule, SegmentRule, TetRule, TriangleRule};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Kind {
    P1,
    N0,
    RT0,
    P0,
}

impl Kind {
    pub const ALL: [Kind; 4] = [Kind::P1, Kind::N0, Kind::RT0, Kind::P0];

    pub fn family(self) -> Family {
        match self {
            Kind::P1 => Family::Grad,
            Kind::N0 => Family::Curl,
            Kind::RT0 => Family::Div,
            Kind::P0 => Family::Broken,
        }
    }

    pub fn from_family(f: Family) -> Self {
        match f {
            Family::Grad => Kind::P1,
            Family::Curl => Kind::N0,
            Family::Div => Kind::RT0,
            Family::Broken => Kind::P0,
        }
    }

    pub fn tag(self) -> char {
        self.family().tag()
    }

    pub fn is_vector(self) -> bool {
        matches!(self, Kind::N0 | Kind::RT0)
    }

    /// Local shape function count.
    pub fn local_dim(self) -> usize {
        match self {
            Kind::P1 | Kind::RT0 => 4,
            Kind::N0 => 6,
            Kind::P0 => 1,
        }
    }

    /// The next space in the complex.
    pub fn next(self) -> Option<Kind> {
        match self {
            Kind::P1 => Some(Kind::N0),
            Kind::N0 => Some(Kind::RT0),
            Kind::RT0 => Some(Kind::P0),
            Kind::P0 => None,
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Kind::P1 => "P1",
            Kind::N0 => "N0",
            Kind::RT0 => "RT0",
            Kind::P0 => "P0",
        };
        f.write_str(s)
    }
}

impl FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "P1" | "p1" => Ok(Kind::P1),
            "N0" | "n0" => Ok(Kind::N0),
            "RT0" | "rt0" => Ok(Kind::RT0),
            "P0" | "p0" => Ok(Kind::P0),
            _ => Ok(Kind::from_family(s.parse()?)),
        }
    }
}

/// Local shape function described by local vertex indices of its entity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LocalShape {
    Vertex(usize),
    /// `lambda_a grad lambda_b - lambda_b grad lambda_a`.
    Edge(usize, usize),
    /// `s 2 (lambda_a grad lambda_b x grad lambda_c + cyclic)`.
    Face(usize, usize, usize, f64),
    Cell,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellDof {
    pub entity: usize,
    pub dof: Option<usize>,
    pub shape: LocalShape,
}

/// Geometric support of a degree of freedom.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Entity {
    Point(Vec3),
    /// Directed segment.
    Segment([Vec3; 2]),
    /// Triangle; the flux is taken along `sign * (p1 - p0) x (p2 - p0)`.
    Triangle([Vec3; 3], f64),
    Tet([Vec3; 4]),
}

impl Entity {
    pub fn vertices(&self) -> &[Vec3] {
        match self {
            Entity::Point(p) => std::slice::from_ref(p),
            Entity::Segment(v) => v,
            Entity::Triangle(v, _) => v,
            Entity::Tet(v) => v,
        }
    }

    pub fn map(&self, mut f: impl FnMut(&Vec3) -> Vec3) -> Entity {
        match self {
            Entity::Point(p) => Entity::Point(f(p)),
            Entity::Segment(v) => Entity::Segment([f(&v[0]), f(&v[1])]),
            Entity::Triangle(v, s) => Entity::Triangle([f(&v[0]), f(&v[1]), f(&v[2])], *s),
            Entity::Tet(v) => Entity::Tet([f(&v[0]), f(&v[1]), f(&v[2]), f(&v[3])]),
        }
    }

    /// Length, area or volume (1 for a point).
    pub fn measure(&self) -> f64 {
        match self {
            Entity::Point(_) => 1.0,
            Entity::Segment(v) => (v[1] - v[0]).norm(),
            Entity::Triangle(v, _) => triangle_area_vector(v).norm(),
            Entity::Tet(v) => tet_volume(v).abs(),
        }
    }
}

/// Quadrature used by the dof functionals of non-polynomial fields.
#[derive(Clone, Debug, PartialEq)]
pub struct DofRules {
    pub segment: SegmentRule,
    pub triangle: TriangleRule,
    pub tet: TetRule,
}

impl DofRules {
    /// `n` Gauss points per direction on every entity.
    pub fn with_points(n: usize) -> Self {
        DofRules { segment: segment_rule(n), triangle: triangle_rule(n), tet: tet_rule(n) }
    }

    /// Dof functional of `field` on `entity`.
    pub fn apply(&self, entity: &Entity, field: FieldRef<'_>) -> Result<f64> {
        match (entity, field) {
            (Entity::Point(p), FieldRef::Scalar(f)) => Ok(f.value(p)),
            (Entity::Segment(v), FieldRef::Vector(f)) => {
                let t = v[1] - v[0];
                Ok(self.segment.map(v).map(|(x, w)| w * f.value(&x).dot(&t)).sum())
            }
            (Entity::Triangle(v, s), FieldRef::Vector(f)) => {
                let a = triangle_area_vector(v) * *s;
                Ok(self.triangle.map(v).map(|(x, w)| w * f.value(&x).dot(&a)).sum())
            }
            (Entity::Tet(v), FieldRef::Scalar(f)) => {
                let vol = tet_volume(v).abs();
                Ok(vol * self.tet.map(v).map(|(x, w)| w * f.value(&x)).sum::<f64>())
            }
            _ => Err(Error::Usage("field kind does not match the degree of freedom".into())),
        }
    }
}

impl Default for DofRules {
    /// 8 points on edges, 7 per direction on faces, 6 per direction on cells.
    fn default() -> Self {
        DofRules { segment: segment_rule(8), triangle: triangle_rule(7), tet: tet_rule(6) }
    }
}

#[derive(Debug)]
pub struct FESpace {
    mesh: Arc<SimplicialMesh>,
    kind: Kind,
    with_bc: bool,
    entity_to_dof: Vec<Option<usize>>,
    dof_to_entity: Vec<usize>,
    cell_dofs: Vec<Vec<CellDof>>,
}

fn local_index(cell: &[usize; 4], v: usize) -> usize {
    cell.iter().position(|&c| c == v).expect("entity vertex belongs to cell")
}

impl FESpace {
    pub fn new(mesh: Arc<SimplicialMesh>, kind: Kind, with_bc: bool) -> Self {
        let n_entities = match kind {
            Kind::P1 => mesh.num_vertices(),
            Kind::N0 => mesh.num_edges(),
            Kind::RT0 => mesh.num_faces(),
            Kind::P0 => mesh.num_cells(),
        };
        let on_boundary = |e: usize| match kind {
            Kind::P1 => mesh.is_boundary_vertex(e),
            Kind::N0 => mesh.is_boundary_edge(e),
            Kind::RT0 => mesh.is_boundary_face(e),
            Kind::P0 => false,
        };
        let mut entity_to_dof = vec![None; n_entities];
        let mut dof_to_entity = Vec::new();
        for (e, slot) in entity_to_dof.iter_mut().enumerate() {
            if !(with_bc && on_boundary(e)) {
                *slot = Some(dof_to_entity.len());
                dof_to_entity.push(e);
            }
        }
        let cell_dofs = (0..mesh.num_cells())
            .map(|k| {
                let c = &mesh.cells()[k];
                match kind {
                    Kind::P1 => (0..4).map(|i| CellDof { entity: c[i], dof: entity_to_dof[c[i]], shape: LocalShape::Vertex(i) }).collect(),
                    Kind::N0 => mesh
                        .cell_edges(k)
                        .iter()
                        .map(|&e| {
                            let [a, b] = mesh.edges()[e];
                            CellDof { entity: e, dof: entity_to_dof[e], shape: LocalShape::Edge(local_index(c, a), local_index(c, b)) }
                        })
                        .collect(),
                    Kind::RT0 => mesh
                        .cell_faces(k)
                        .iter()
                        .map(|&f| {
                            let [a, b, cc] = mesh.faces()[f];
                            let shape = LocalShape::Face(local_index(c, a), local_index(c, b), local_index(c, cc), mesh.face_sign(f));
                            CellDof { entity: f, dof: entity_to_dof[f], shape }
                        })
                        .collect(),
                    Kind::P0 => vec![CellDof { entity: k, dof: entity_to_dof[k], shape: LocalShape::Cell }],
                }
            })
            .collect();
        FESpace { mesh, kind, with_bc, entity_to_dof, dof_to_entity, cell_dofs }
    }

    pub fn mesh(&self) -> &Arc<SimplicialMesh> {
        &self.mesh
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn with_bc(&self) -> bool {
        self.with_bc
    }

    pub fn dim(&self) -> usize {
        self.dof_to_entity.len()
    }

    pub fn num_entities(&self) -> usize {
        self.entity_to_dof.len()
    }

    pub fn dof_of_entity(&self, e: usize) -> Option<usize> {
        self.entity_to_dof[e]
    }

    pub fn entity_of_dof(&self, i: usize) -> usize {
        self.dof_to_entity[i]
    }

    /// Entities carrying a dof, in dof order.
    pub fn free_entities(&self) -> &[usize] {
        &self.dof_to_entity
    }

    pub fn cell_dofs(&self, k: usize) -> &[CellDof] {
        &self.cell_dofs[k]
    }

    /// Global vertex ids of the entity carrying dof `i`.
    pub fn dof_vertex_ids(&self, i: usize) -> Vec<usize> {
        let e = self.dof_to_entity[i];
        match self.kind {
            Kind::P1 => vec![e],
            Kind::N0 => self.mesh.edges()[e].to_vec(),
            Kind::RT0 => self.mesh.faces()[e].to_vec(),
            Kind::P0 => self.mesh.cells()[e].to_vec(),
        }
    }

    /// Oriented geometric support of dof `i`.
    pub fn dof_entity(&self, i: usize) -> Entity {
        let e = self.dof_to_entity[i];
        let v = self.mesh.vertices();
        match self.kind {
            Kind::P1 => Entity::Point(v[e]),
            Kind::N0 => {
                let [a, b] = self.mesh.edges()[e];
                Entity::Segment([v[a], v[b]])
            }
            Kind::RT0 => {
                let [a, b, c] = self.mesh.faces()[e];
                Entity::Triangle([v[a], v[b], v[c]], self.mesh.face_sign(e))
            }
            Kind::P0 => Entity::Tet(self.mesh.cell_vertices(e)),
        }
    }

    /// Value of a local shape function of cell `k` at barycentric coordinates `l`.
    pub fn shape_value(&self, k: usize, shape: LocalShape, l: &[f64; 4]) -> Value {
        let g = &self.mesh.geometry(k).grad_lambda;
        match shape {
            LocalShape::Vertex(i) => Value::Scalar(l[i]),
            LocalShape::Edge(a, b) => Value::Vector(g[b] * l[a] - g[a] * l[b]),
            LocalShape::Face(a, b, c, s) => {
                let v = g[b].cross(&g[c]) * l[a] + g[c].cross(&g[a]) * l[b] + g[a].cross(&g[b]) * l[c];
                Value::Vector(v * (2.0 * s))
            }
            LocalShape::Cell => Value::Scalar(1.0 / self.mesh.geometry(k).volume),
        }
    }

    /// Dof functional of local dof `i` of cell `k` (global orientation).
    pub fn dof_apply(&self, k: usize, i: usize, field: FieldRef<'_>, rules: &DofRules) -> Result<f64> {
        let cd = self.cell_dofs[k]
            .get(i)
            .ok_or_else(|| Error::Usage(format!("local dof {i} out of range for {}", self.kind)))?;
        let v = self.mesh.vertices();
        let entity = match self.kind {
            Kind::P1 => Entity::Point(v[cd.entity]),
            Kind::N0 => {
                let [a, b] = self.mesh.edges()[cd.entity];
                Entity::Segment([v[a], v[b]])
            }
            Kind::RT0 => {
                let [a, b, c] = self.mesh.faces()[cd.entity];
                Entity::Triangle([v[a], v[b], v[c]], self.mesh.face_sign(cd.entity))
            }
            Kind::P0 => Entity::Tet(self.mesh.cell_vertices(k)),
        };
        rules.apply(&entity, field)
    }

    /// Canonical interpolant; boundary dofs of spaces with essential conditions are dropped.
    pub fn interpolate(self: &Arc<Self>, field: FieldRef<'_>, rules: &DofRules) -> Result<FEFunction> {
        check_field_kind(self.kind, &field)?;
        let coeffs = (0..self.dim())
            .into_par_iter()
            .map(|i| rules.apply(&self.dof_entity(i), field))
            .collect::<Result<Vec<f64>>>()?;
        Ok(FEFunction { space: self.clone(), coeffs })
    }

    /// Evaluates `sum_i c_i theta_i` on cell `k` at `x` (the polynomial is extended outside `k`).
    pub fn eval_on_cell(&self, coeffs: &[f64], k: usize, x: &Vec3) -> Value {
        let l = self.mesh.barycentric(k, x);
        let mut s = 0.0;
        let mut v = Vec3::zeros();
        for cd in &self.cell_dofs[k] {
            let Some(j) = cd.dof else { continue };
            match self.shape_value(k, cd.shape, &l) {
                Value::Scalar(t) => s += coeffs[j] * t,
                Value::Vector(t) => v += t * coeffs[j],
            }
        }
        if self.kind.is_vector() {
            Value::Vector(v)
        } else {
            Value::Scalar(s)
        }
    }

    /// Global basis function `theta_j` as a coefficient vector.
    pub fn basis_coeffs(&self, j: usize) -> Vec<f64> {
        let mut c = vec![0.0; self.dim()];
        c[j] = 1.0;
        c
    }

    pub fn same_mesh(&self, other: &FESpace) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh)
    }
}

pub(crate) fn check_field_kind(kind: Kind, field: &FieldRef<'_>) -> Result<()> {
    let ok = matches!((kind.is_vector(), field), (true, FieldRef::Vector(_)) | (false, FieldRef::Scalar(_)));
    if ok {
        Ok(())
    } else {
        Err(Error::Usage(format!("{kind} expects a {} field", if kind.is_vector() { "vector" } else { "scalar" })))
    }
}

#[derive(Clone, Debug)]
pub struct FEFunction {
    pub space: Arc<FESpace>,
    pub coeffs: Vec<f64>,
}

impl FEFunction {
    pub fn new(space: Arc<FESpace>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.dim() {
            return Err(Error::Usage(format!("expected {} coefficients, got {}", space.dim(), coeffs.len())));
        }
        Ok(FEFunction { space, coeffs })
    }

    pub fn zeros(space: Arc<FESpace>) -> Self {
        let n = space.dim();
        FEFunction { space, coeffs: vec![0.0; n] }
    }

    /// Value at `x`, on the owning cell or on `side` if given.
    pub fn eval(&self, x: &Vec3, side: Option<usize>) -> Result<Value> {
        let k = match side {
            Some(k) if k < self.space.mesh.num_cells() => k,
            Some(k) => return Err(Error::Usage(format!("cell {k} out of range"))),
            None => self.space.mesh.locate(x).ok_or(Error::Evaluation([x.x, x.y, x.z]))?.cell,
        };
        Ok(self.space.eval_on_cell(&self.coeffs, k, x))
    }

    pub fn as_field(&self) -> FieldRef<'_> {
        if self.space.kind.is_vector() {
            FieldRef::Vector(self)
        } else {
            FieldRef::Scalar(self)
        }
    }

    /// `dof_id,value` lines with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("dof_id,value\n");
        for (i, c) in self.coeffs.iter().enumerate() {
            s.push_str(&format!("{i},{c:.11e}\n"));
        }
        s
    }
}

impl ScalarField for FEFunction {
    fn value(&self, x: &Vec3) -> f64 {
        match self.eval(x, None) {
            Ok(Value::Scalar(s)) => s,
            _ => f64::NAN,
        }
    }
}

impl VectorField for FEFunction {
    fn value(&self, x: &Vec3) -> Vec3 {
        match self.eval(x, None) {
            Ok(Value::Vector(v)) => v,
            _ => Vec3::repeat(f64::NAN),
        }
    }
}

/// Local edge index of `(a, b)` in [`LOCAL_EDGES`].
pub fn local_edge(a: usize, b: usize) -> Option<usize> {
    let (a, b) = if a < b { (a, b) } else { (b, a) };
    LOCAL_EDGES.iter().position(|e| e[0] == a && e[1] == b)
}
