//! Matching tetrahedral meshes with edge/face connectivity and affine cell maps.

mod io;
mod locate;
mod meshsize;

use std::collections::HashMap;

pub use io::{read_mesh, read_mesh_str, write_mesh, write_mesh_string, MeshFile};
pub use locate::{Location, PointLocator};
pub use meshsize::MeshsizeField;

use crate::clip::Plane;
use crate::error::{Error, Result};
use crate::geometry::{Mat3, Vec3};

/// Local edges of a tetrahedron as pairs of local vertex indices.
pub const LOCAL_EDGES: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];

/// Local faces; face `i` is opposite local vertex `i`.
pub const LOCAL_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

/// Affine data of a cell: `T_K(x_hat) = v0 + J_K x_hat`, barycentric gradients and size measures.
#[derive(Clone, Debug, PartialEq)]
pub struct CellGeometry {
    pub jacobian: Mat3,
    pub translation: Vec3,
    pub det: f64,
    pub volume: f64,
    /// Diameter (longest edge).
    pub diameter: f64,
    /// Inradius.
    pub inradius: f64,
    /// Smallest vertex-to-opposite-face height.
    pub min_height: f64,
    /// `grad lambda_i` for the four local vertices.
    pub grad_lambda: [Vec3; 4],
    pub lo: Vec3,
    pub hi: Vec3,
}

#[derive(Clone, Debug)]
pub struct SimplicialMesh {
    vertices: Vec<Vec3>,
    cells: Vec<[usize; 4]>,
    edges: Vec<[usize; 2]>,
    faces: Vec<[usize; 3]>,
    face_owners: Vec<(usize, Option<usize>)>,
    face_normals: Vec<Vec3>,
    face_signs: Vec<f64>,
    face_areas: Vec<f64>,
    cell_edges: Vec<[usize; 6]>,
    cell_faces: Vec<[usize; 4]>,
    geometry: Vec<CellGeometry>,
    vertex_cells: Vec<Vec<usize>>,
    boundary_vertex: Vec<bool>,
    boundary_edge: Vec<bool>,
    repaired: usize,
    locator: PointLocator,
}

fn cell_geometry(v: [Vec3; 4]) -> CellGeometry {
    let jacobian = Mat3::from_columns(&[v[1] - v[0], v[2] - v[0], v[3] - v[0]]);
    let det = jacobian.determinant();
    let inv_t = jacobian.try_inverse().unwrap_or_else(Mat3::zeros).transpose();
    let g1: Vec3 = inv_t.column(0).into();
    let g2: Vec3 = inv_t.column(1).into();
    let g3: Vec3 = inv_t.column(2).into();
    let grad_lambda = [-(g1 + g2 + g3), g1, g2, g3];
    let volume = det.abs() / 6.0;
    let diameter = LOCAL_EDGES.iter().map(|e| (v[e[1]] - v[e[0]]).norm()).fold(0.0, f64::max);
    let area_sum: f64 = LOCAL_FACES
        .iter()
        .map(|f| 0.5 * (v[f[1]] - v[f[0]]).cross(&(v[f[2]] - v[f[0]])).norm())
        .sum();
    let min_height = grad_lambda.iter().map(|g| 1.0 / g.norm()).fold(f64::INFINITY, f64::min);
    let mut lo = v[0];
    let mut hi = v[0];
    for p in &v[1..] {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    CellGeometry {
        jacobian,
        translation: v[0],
        det,
        volume,
        diameter,
        inradius: 3.0 * volume / area_sum,
        min_height,
        grad_lambda,
        lo,
        hi,
    }
}

impl SimplicialMesh {
    /// Builds connectivity and geometry; negatively oriented cells are repaired by
    /// swapping their last two vertices.
    pub fn new(vertices: Vec<Vec3>, mut cells: Vec<[usize; 4]>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::Structure("mesh has no cells".into()));
        }
        let nv = vertices.len();
        let mut repaired = 0;
        for (k, c) in cells.iter_mut().enumerate() {
            if c.iter().any(|&i| i >= nv) {
                return Err(Error::Structure(format!("cell {k} references a vertex id >= {nv}")));
            }
            let mut s = *c;
            s.sort_unstable();
            if s.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Structure(format!("cell {k} repeats a vertex")));
            }
            let g = cell_geometry([vertices[c[0]], vertices[c[1]], vertices[c[2]], vertices[c[3]]]);
            if g.det == 0.0 || g.volume <= 1e-14 * g.diameter.powi(3) {
                return Err(Error::Structure(format!("cell {k} is degenerate")));
            }
            if g.det < 0.0 {
                c.swap(2, 3);
                repaired += 1;
            }
        }

        let geometry: Vec<CellGeometry> = cells
            .iter()
            .map(|c| cell_geometry([vertices[c[0]], vertices[c[1]], vertices[c[2]], vertices[c[3]]]))
            .collect();

        let mut edges: Vec<[usize; 2]> = cells
            .iter()
            .flat_map(|c| LOCAL_EDGES.iter().map(move |e| sorted2(c[e[0]], c[e[1]])))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        let edge_index: HashMap<[usize; 2], usize> = edges.iter().enumerate().map(|(i, e)| (*e, i)).collect();

        let mut face_list: Vec<([usize; 3], usize)> = cells
            .iter()
            .enumerate()
            .flat_map(|(k, c)| LOCAL_FACES.iter().map(move |f| (sorted3(c[f[0]], c[f[1]], c[f[2]]), k)))
            .collect();
        face_list.sort_unstable();
        let mut faces = Vec::new();
        let mut face_owners = Vec::new();
        let mut i = 0;
        while i < face_list.len() {
            let mut j = i + 1;
            while j < face_list.len() && face_list[j].0 == face_list[i].0 {
                j += 1;
            }
            match j - i {
                1 => face_owners.push((face_list[i].1, None)),
                2 => face_owners.push((face_list[i].1, Some(face_list[i + 1].1))),
                n => {
                    return Err(Error::Structure(format!("face {:?} is shared by {n} cells", face_list[i].0)));
                }
            }
            faces.push(face_list[i].0);
            i = j;
        }
        let face_index: HashMap<[usize; 3], usize> = faces.iter().enumerate().map(|(i, f)| (*f, i)).collect();

        let cell_edges: Vec<[usize; 6]> = cells
            .iter()
            .map(|c| {
                let mut out = [0; 6];
                for (l, e) in LOCAL_EDGES.iter().enumerate() {
                    out[l] = edge_index[&sorted2(c[e[0]], c[e[1]])];
                }
                out
            })
            .collect();
        let cell_faces: Vec<[usize; 4]> = cells
            .iter()
            .map(|c| {
                let mut out = [0; 4];
                for (l, f) in LOCAL_FACES.iter().enumerate() {
                    out[l] = face_index[&sorted3(c[f[0]], c[f[1]], c[f[2]])];
                }
                out
            })
            .collect();

        let mut face_normals = Vec::with_capacity(faces.len());
        let mut face_signs = Vec::with_capacity(faces.len());
        let mut face_areas = Vec::with_capacity(faces.len());
        for (fi, f) in faces.iter().enumerate() {
            let (a, b, c) = (vertices[f[0]], vertices[f[1]], vertices[f[2]]);
            let cross = (b - a).cross(&(c - a));
            let area = 0.5 * cross.norm();
            let (kl, kr) = face_owners[fi];
            let opposite = |k: usize| -> Vec3 {
                let cv = cells[k];
                let o = cv.iter().find(|v| !f.contains(v)).copied().expect("cell has a vertex off the face");
                vertices[o]
            };
            let mut n = cross / cross.norm();
            // outward from K_l
            if n.dot(&(opposite(kl) - a)) > 0.0 {
                n = -n;
            }
            if let Some(kr) = kr {
                if n.dot(&(opposite(kr) - a)) <= 0.0 {
                    return Err(Error::Structure(format!("cells {kl} and {kr} overlap across face {fi}")));
                }
            }
            face_signs.push(if cross.dot(&n) > 0.0 { 1.0 } else { -1.0 });
            face_normals.push(n);
            face_areas.push(area);
        }

        let mut vertex_cells = vec![Vec::new(); nv];
        for (k, c) in cells.iter().enumerate() {
            for &v in c {
                vertex_cells[v].push(k);
            }
        }
        if let Some(v) = vertex_cells.iter().position(|s| s.is_empty()) {
            return Err(Error::Structure(format!("vertex {v} belongs to no cell")));
        }
        let mut boundary_vertex = vec![false; nv];
        let mut boundary_edge = vec![false; edges.len()];
        for (fi, f) in faces.iter().enumerate() {
            if face_owners[fi].1.is_none() {
                for &v in f {
                    boundary_vertex[v] = true;
                }
                for (a, b) in [(f[0], f[1]), (f[0], f[2]), (f[1], f[2])] {
                    boundary_edge[edge_index[&[a, b]]] = true;
                }
            }
        }
        let locator = PointLocator::new(&geometry);
        Ok(SimplicialMesh {
            vertices,
            cells,
            edges,
            faces,
            face_owners,
            face_normals,
            face_signs,
            face_areas,
            cell_edges,
            cell_faces,
            geometry,
            vertex_cells,
            boundary_vertex,
            boundary_edge,
            repaired,
            locator,
        })
    }

    /// Kuhn subdivision of the unit cube into `6 n^3` congruent tetrahedra.
    pub fn cube(n: usize) -> Result<Self> {
        Self::cube_mapped(n, |p| p)
    }

    /// Kuhn cube mesh with vertices moved by `map` (e.g. to grade towards a corner).
    pub fn cube_mapped<F: Fn(Vec3) -> Vec3>(n: usize, map: F) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter("cube mesh needs n >= 1".into()));
        }
        let idx = |i: usize, j: usize, k: usize| (i * (n + 1) + j) * (n + 1) + k;
        let h = 1.0 / n as f64;
        let mut vertices = Vec::with_capacity((n + 1).pow(3));
        for i in 0..=n {
            for j in 0..=n {
                for k in 0..=n {
                    vertices.push(map(Vec3::new(i as f64 * h, j as f64 * h, k as f64 * h)));
                }
            }
        }
        const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let mut cells = Vec::with_capacity(6 * n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for p in PERMS {
                        let mut c = [i, j, k];
                        let mut tet = [idx(c[0], c[1], c[2]); 4];
                        for (s, &axis) in p.iter().enumerate() {
                            c[axis] += 1;
                            tet[s + 1] = idx(c[0], c[1], c[2]);
                        }
                        cells.push(tet);
                    }
                }
            }
        }
        let mut m = Self::new(vertices, cells)?;
        m.repaired = 0;
        Ok(m)
    }

    /// Cube mesh graded towards the origin by `x -> x^power` componentwise.
    pub fn graded_cube(n: usize, power: f64) -> Result<Self> {
        Self::cube_mapped(n, |p| Vec3::new(p.x.powf(power), p.y.powf(power), p.z.powf(power)))
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn cells(&self) -> &[[usize; 4]] {
        &self.cells
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64 + self.num_faces() as i64 - self.num_cells() as i64
    }

    /// `(K_l, K_r)`; `K_r` is `None` on the boundary.
    pub fn face_owners(&self, f: usize) -> (usize, Option<usize>) {
        self.face_owners[f]
    }

    /// Unit normal pointing from `K_l` to `K_r` (outward on the boundary).
    pub fn face_normal(&self, f: usize) -> Vec3 {
        self.face_normals[f]
    }

    /// Sign relating `(b-a) x (c-a)` of the sorted face `(a,b,c)` to `n_F`.
    pub fn face_sign(&self, f: usize) -> f64 {
        self.face_signs[f]
    }

    pub fn face_area(&self, f: usize) -> f64 {
        self.face_areas[f]
    }

    pub fn is_boundary_face(&self, f: usize) -> bool {
        self.face_owners[f].1.is_none()
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.boundary_edge[e]
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    pub fn num_boundary_faces(&self) -> usize {
        self.face_owners.iter().filter(|o| o.1.is_none()).count()
    }

    pub fn cell_edges(&self, k: usize) -> &[usize; 6] {
        &self.cell_edges[k]
    }

    pub fn cell_faces(&self, k: usize) -> &[usize; 4] {
        &self.cell_faces[k]
    }

    pub fn geometry(&self, k: usize) -> &CellGeometry {
        &self.geometry[k]
    }

    pub fn vertex_cells(&self, v: usize) -> &[usize] {
        &self.vertex_cells[v]
    }

    /// Number of cells whose orientation was repaired on input.
    pub fn repaired_cells(&self) -> usize {
        self.repaired
    }

    pub fn cell_vertices(&self, k: usize) -> [Vec3; 4] {
        let c = self.cells[k];
        [self.vertices[c[0]], self.vertices[c[1]], self.vertices[c[2]], self.vertices[c[3]]]
    }

    pub fn total_volume(&self) -> f64 {
        self.geometry.iter().map(|g| g.volume).sum()
    }

    pub fn max_diameter(&self) -> f64 {
        self.geometry.iter().map(|g| g.diameter).fold(0.0, f64::max)
    }

    pub fn min_height(&self) -> f64 {
        self.geometry.iter().map(|g| g.min_height).fold(f64::INFINITY, f64::min)
    }

    /// `max_K h_K / rho_K`.
    pub fn shape_regularity(&self) -> f64 {
        self.geometry.iter().map(|g| g.diameter / g.inradius).fold(0.0, f64::max)
    }

    /// Barycentric coordinates of `x` with respect to cell `k`.
    pub fn barycentric(&self, k: usize, x: &Vec3) -> [f64; 4] {
        let g = &self.geometry[k];
        let v0 = self.vertices[self.cells[k][0]];
        let d = x - v0;
        let l1 = g.grad_lambda[1].dot(&d);
        let l2 = g.grad_lambda[2].dot(&d);
        let l3 = g.grad_lambda[3].dot(&d);
        [1.0 - l1 - l2 - l3, l1, l2, l3]
    }

    /// Halfspaces `-lambda_i(x) <= 0` bounding cell `k`.
    pub fn cell_planes(&self, k: usize) -> [Plane; 4] {
        let g = &self.geometry[k];
        let c = &self.cells[k];
        let mut out = [Plane::new(Vec3::zeros(), 0.0); 4];
        for i in 0..4 {
            // lambda_i(x) = grad_i . (x - v_j) for any j != i
            let vj = self.vertices[c[(i + 1) % 4]];
            out[i] = Plane::new(-g.grad_lambda[i], -g.grad_lambda[i].dot(&vj));
        }
        out
    }

    /// Cell containing `x` (lowest id on ties), with barycentric coordinates.
    pub fn locate(&self, x: &Vec3) -> Option<Location> {
        self.locator.locate(self, x)
    }

    /// Sorted union of the vertex stars of `verts`.
    pub fn star_union(&self, verts: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = verts.iter().flat_map(|&v| self.vertex_cells[v].iter().copied()).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Cells sharing at least one vertex with `k` (the neighborhood `T_K`).
    pub fn cell_neighborhood(&self, k: usize) -> Vec<usize> {
        self.star_union(&self.cells[k])
    }

    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        self.edges.binary_search(&sorted2(a, b)).ok()
    }

    pub fn face_index(&self, a: usize, b: usize, c: usize) -> Option<usize> {
        self.faces.binary_search(&sorted3(a, b, c)).ok()
    }
}

pub(crate) fn sorted2(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

pub(crate) fn sorted3(a: usize, b: usize, c: usize) -> [usize; 3] {
    let mut s = [a, b, c];
    s.sort_unstable();
    s
}
