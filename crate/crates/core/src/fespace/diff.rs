use super::{FESpace, Kind};
use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::mollify::Value;
use crate::quadrature::tet_rule_degree2;

fn check_pair(from: &FESpace, to: &FESpace, kf: Kind, kt: Kind) -> Result<()> {
    if from.kind() != kf || to.kind() != kt {
        return Err(Error::Usage(format!("expected {kf} -> {kt}, got {} -> {}", from.kind(), to.kind())));
    }
    if !from.same_mesh(to) {
        return Err(Error::Usage("spaces live on different meshes".into()));
    }
    if from.with_bc() != to.with_bc() {
        return Err(Error::Usage("boundary condition flags differ".into()));
    }
    Ok(())
}

/// `P1 -> N0`: `-1` at the low vertex, `+1` at the high vertex of each edge.
pub fn grad_matrix(p1: &FESpace, n0: &FESpace) -> Result<CsrMatrix> {
    check_pair(p1, n0, Kind::P1, Kind::N0)?;
    let m = p1.mesh();
    let mut t = Vec::with_capacity(2 * m.num_edges());
    for (e, [a, b]) in m.edges().iter().enumerate() {
        t.push((e, *a, -1.0));
        t.push((e, *b, 1.0));
    }
    let full = CsrMatrix::from_triplets(m.num_edges(), m.num_vertices(), &t);
    Ok(full.restrict(n0.free_entities(), p1.free_entities()))
}

/// `N0 -> RT0`: boundary circulation of each face in the direction of its normal.
pub fn curl_matrix(n0: &FESpace, rt0: &FESpace) -> Result<CsrMatrix> {
    check_pair(n0, rt0, Kind::N0, Kind::RT0)?;
    let m = n0.mesh();
    let mut t = Vec::with_capacity(3 * m.num_faces());
    for (f, [a, b, c]) in m.faces().iter().enumerate() {
        let s = m.face_sign(f);
        let e = |p: usize, q: usize| m.edge_index(p, q).expect("face edge exists");
        t.push((f, e(*a, *b), s));
        t.push((f, e(*b, *c), s));
        t.push((f, e(*a, *c), -s));
    }
    let full = CsrMatrix::from_triplets(m.num_faces(), m.num_edges(), &t);
    Ok(full.restrict(rt0.free_entities(), n0.free_entities()))
}

/// `RT0 -> P0`: `+1` for the face's left cell, `-1` for its right cell.
pub fn div_matrix(rt0: &FESpace, p0: &FESpace) -> Result<CsrMatrix> {
    check_pair(rt0, p0, Kind::RT0, Kind::P0)?;
    let m = rt0.mesh();
    let mut t = Vec::with_capacity(2 * m.num_faces());
    for f in 0..m.num_faces() {
        let (l, r) = m.face_owners(f);
        t.push((l, f, 1.0));
        if let Some(r) = r {
            t.push((r, f, -1.0));
        }
    }
    let full = CsrMatrix::from_triplets(m.num_cells(), m.num_faces(), &t);
    Ok(full.restrict(p0.free_entities(), rt0.free_entities()))
}

/// `L^2` Gram matrix of the basis (exact: all products are quadratic).
pub fn mass_matrix(space: &FESpace) -> CsrMatrix {
    let m = space.mesh();
    if space.kind() == Kind::P0 {
        let t: Vec<_> = space
            .free_entities()
            .iter()
            .enumerate()
            .map(|(i, &k)| (i, i, 1.0 / m.geometry(k).volume))
            .collect();
        return CsrMatrix::from_triplets(space.dim(), space.dim(), &t);
    }
    let rule = tet_rule_degree2();
    let mut t = Vec::new();
    for k in 0..m.num_cells() {
        let vol = m.geometry(k).volume;
        let dofs = space.cell_dofs(k);
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let vals: Vec<Value> = dofs.iter().map(|cd| space.shape_value(k, cd.shape, l)).collect();
            for (a, da) in dofs.iter().enumerate() {
                let Some(i) = da.dof else { continue };
                for (b, db) in dofs.iter().enumerate() {
                    let Some(j) = db.dof else { continue };
                    let p = match (vals[a], vals[b]) {
                        (Value::Scalar(x), Value::Scalar(y)) => x * y,
                        (Value::Vector(x), Value::Vector(y)) => x.dot(&y),
                        _ => unreachable!(),
                    };
                    t.push((i, j, w * vol * p));
                }
            }
        }
    }
    CsrMatrix::from_triplets(space.dim(), space.dim(), &t)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::fespace::DofRules;
    use crate::fields::{plane_wave, sine_bubble, tangential_bubble_vector, normal_bubble_vector, trig_vector, Curl, Divergence, Gradient};
    use crate::geometry::Vec3;
    use crate::mesh::SimplicialMesh;
    use crate::mollify::FieldRef;

    fn complex(n: usize, bc: bool) -> [Arc<FESpace>; 4] {
        let m = Arc::new(SimplicialMesh::cube(n).unwrap());
        Kind::ALL.map(|k| Arc::new(FESpace::new(m.clone(), k, bc)))
    }

    #[test]
    fn complex_property_is_exact() {
        for bc in [false, true] {
            let [p1, n0, rt0, p0] = complex(3, bc);
            let g = grad_matrix(&p1, &n0).unwrap();
            let c = curl_matrix(&n0, &rt0).unwrap();
            let d = div_matrix(&rt0, &p0).unwrap();
            assert_eq!(c.mul(&g).unwrap().nnz(), 0);
            assert_eq!(d.mul(&c).unwrap().nnz(), 0);
            if !bc {
                assert!(g.matvec(&vec![1.0; p1.dim()]).iter().all(|v| *v == 0.0));
            }
        }
        let [p1, n0, ..] = complex(1, false);
        assert!(matches!(grad_matrix(&n0, &p1), Err(Error::Usage(_))));
        let other = complex(1, false);
        assert!(matches!(grad_matrix(&p1, &other[1]), Err(Error::Usage(_))));
    }

    #[test]
    fn grad_entry_of_hat() {
        let [p1, n0, ..] = complex(2, false);
        let g = grad_matrix(&p1, &n0).unwrap();
        let [a, b] = p1.mesh().edges()[5];
        assert_eq!(g.get(5, a), -1.0);
        assert_eq!(g.get(5, b), 1.0);
    }

    #[test]
    fn interpolation_diagrams_commute() {
        let rules = DofRules::default();
        for bc in [false, true] {
            let [p1, n0, rt0, p0] = complex(3, bc);
            let g = grad_matrix(&p1, &n0).unwrap();
            let c = curl_matrix(&n0, &rt0).unwrap();
            let d = div_matrix(&rt0, &p0).unwrap();
            let f = if bc { sine_bubble() } else { plane_wave(Vec3::new(1.3, -2.0, 0.7), 0.4) };
            let u = if bc { tangential_bubble_vector() } else { trig_vector(2.0) };
            let w = if bc { normal_bubble_vector() } else { trig_vector(1.5) };
            let a = p1.interpolate(FieldRef::Scalar(&f), &rules).unwrap();
            let b = n0.interpolate(FieldRef::Vector(&Gradient(&f)), &rules).unwrap();
            assert!(crate::linalg::norm_inf(&crate::linalg::sub(&g.matvec(&a.coeffs), &b.coeffs)) < 1e-11);
            let a = n0.interpolate(FieldRef::Vector(&u), &rules).unwrap();
            let b = rt0.interpolate(FieldRef::Vector(&Curl(&u)), &rules).unwrap();
            assert!(crate::linalg::norm_inf(&crate::linalg::sub(&c.matvec(&a.coeffs), &b.coeffs)) < 1e-11);
            let a = rt0.interpolate(FieldRef::Vector(&w), &rules).unwrap();
            let b = p0.interpolate(FieldRef::Scalar(&Divergence(&w)), &rules).unwrap();
            assert!(crate::linalg::norm_inf(&crate::linalg::sub(&d.matvec(&a.coeffs), &b.coeffs)) < 1e-11);
        }
    }

    #[test]
    fn mass_matrices() {
        let [p1, n0, rt0, p0] = complex(2, false);
        let one = vec![1.0; p1.dim()];
        let b = mass_matrix(&p1);
        assert!((crate::linalg::dot(&one, &b.matvec(&one)) - 1.0).abs() < 1e-13);
        let bp0 = mass_matrix(&p0);
        let vol: Vec<f64> = (0..p0.dim()).map(|k| p0.mesh().geometry(k).volume).collect();
        assert!((crate::linalg::dot(&vol, &bp0.matvec(&vol)) - 1.0).abs() < 1e-13);
        for s in [n0, rt0] {
            let c = crate::fields::constant_vector(Vec3::new(1.0, 2.0, -1.0));
            let u = s.interpolate(FieldRef::Vector(&c), &DofRules::default()).unwrap();
            let bm = mass_matrix(&s);
            assert!((crate::linalg::dot(&u.coeffs, &bm.matvec(&u.coeffs)) - 6.0).abs() < 1e-12);
        }
    }
}
