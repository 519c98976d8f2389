use super::Kind;
use crate::geometry::{Mat3, Vec3};
use crate::mesh::{SimplicialMesh, LOCAL_EDGES, LOCAL_FACES};
use crate::mollify::Value;
use crate::quadrature::{segment_rule, tet_rule, triangle_area_vector, triangle_rule};

/// Shape functions and dofs on `conv{0, e_x, e_y, e_z}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReferenceElement {
    pub kind: Kind,
}

const VERTS: [[f64; 3]; 4] = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

fn vert(i: usize) -> Vec3 {
    Vec3::from(VERTS[i])
}

fn lambda(x: &Vec3) -> [f64; 4] {
    [1.0 - x.x - x.y - x.z, x.x, x.y, x.z]
}

fn grad(i: usize) -> Vec3 {
    match i {
        0 => Vec3::new(-1.0, -1.0, -1.0),
        _ => vert(i),
    }
}

impl ReferenceElement {
    pub fn new(kind: Kind) -> Self {
        ReferenceElement { kind }
    }

    pub fn n_sh(&self) -> usize {
        self.kind.local_dim()
    }

    pub fn shape(&self, i: usize, x: &Vec3) -> Value {
        let l = lambda(x);
        match self.kind {
            Kind::P1 => Value::Scalar(l[i]),
            Kind::N0 => {
                let [a, b] = LOCAL_EDGES[i];
                Value::Vector(grad(b) * l[a] - grad(a) * l[b])
            }
            Kind::RT0 => {
                let [a, b, c] = LOCAL_FACES[i];
                let v = grad(b).cross(&grad(c)) * l[a] + grad(c).cross(&grad(a)) * l[b] + grad(a).cross(&grad(b)) * l[c];
                Value::Vector(v * 2.0)
            }
            Kind::P0 => Value::Scalar(1.0),
        }
    }

    /// `sigma_i(f)`: vertex value, edge tangential integral, face flux, or cell mean.
    pub fn dof(&self, i: usize, f: &dyn Fn(&Vec3) -> Value) -> f64 {
        match self.kind {
            Kind::P1 => f(&vert(i)).scalar().unwrap_or(f64::NAN),
            Kind::N0 => {
                let [a, b] = LOCAL_EDGES[i];
                let v = [vert(a), vert(b)];
                let t = v[1] - v[0];
                segment_rule(3).map(&v).map(|(x, w)| w * f(&x).vector().map_or(f64::NAN, |u| u.dot(&t))).sum()
            }
            Kind::RT0 => {
                let [a, b, c] = LOCAL_FACES[i];
                let v = [vert(a), vert(b), vert(c)];
                let n = triangle_area_vector(&v);
                triangle_rule(3).map(&v).map(|(x, w)| w * f(&x).vector().map_or(f64::NAN, |u| u.dot(&n))).sum()
            }
            Kind::P0 => {
                let v = [vert(0), vert(1), vert(2), vert(3)];
                tet_rule(3).map(&v).map(|(x, w)| w * f(&x).scalar().unwrap_or(f64::NAN)).sum()
            }
        }
    }

    /// `max_ij |sigma_i(theta_j) - delta_ij|`.
    pub fn unisolvence_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n_sh() {
            for j in 0..self.n_sh() {
                let s = self.dof(i, &|x| self.shape(j, x));
                let e = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((s - e).abs());
            }
        }
        worst
    }
}

/// Per cell: `(cond A_K for the curl map, cond A_K for the div map, cond J_K)` in the spectral norm.
pub fn piola_conditioning(mesh: &SimplicialMesh, k: usize) -> (f64, f64, f64) {
    let j = mesh.geometry(k).jacobian;
    let cond = |a: &Mat3| {
        let s = a.singular_values();
        s.max() / s.min()
    };
    let a_curl = j.transpose();
    let a_div = j.try_inverse().unwrap_or_else(Mat3::zeros) * j.determinant();
    (cond(&a_curl), cond(&a_div), cond(&j))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_elements_are_unisolvent() {
        for kind in Kind::ALL {
            assert!(ReferenceElement::new(kind).unisolvence_defect() < 1e-13, "{kind}");
        }
    }

    #[test]
    fn piola_conditioning_bounded_by_jacobian() {
        let m = SimplicialMesh::graded_cube(3, 1.7).unwrap();
        for k in 0..m.num_cells() {
            let (c, d, j) = piola_conditioning(&m, k);
            assert!(c <= j * (1.0 + 1e-12) && d <= j * (1.0 + 1e-12));
        }
    }
}
