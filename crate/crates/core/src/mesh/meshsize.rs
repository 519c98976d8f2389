use std::sync::Arc;

use super::SimplicialMesh;
use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Continuous P1 meshsize: each vertex carries the mean diameter of its incident cells.
#[derive(Clone, Debug)]
pub struct MeshsizeField {
    mesh: Arc<SimplicialMesh>,
    values: Vec<f64>,
    gradients: Vec<Vec3>,
    lower: f64,
    upper: f64,
    lipschitz: f64,
}

impl MeshsizeField {
    pub fn new(mesh: Arc<SimplicialMesh>) -> Self {
        let values: Vec<f64> = (0..mesh.num_vertices())
            .map(|v| {
                let s = mesh.vertex_cells(v);
                s.iter().map(|&k| mesh.geometry(k).diameter).sum::<f64>() / s.len() as f64
            })
            .collect();
        let mut gradients = Vec::with_capacity(mesh.num_cells());
        let (mut lower, mut upper, mut lipschitz) = (f64::INFINITY, 0.0f64, 0.0f64);
        for k in 0..mesh.num_cells() {
            let g = mesh.geometry(k);
            let c = mesh.cells()[k];
            let grad: Vec3 = (0..4).map(|i| g.grad_lambda[i] * values[c[i]]).sum();
            lipschitz = lipschitz.max(grad.norm());
            for &v in &c {
                lower = lower.min(values[v] / g.diameter);
                upper = upper.max(values[v] / g.diameter);
            }
            gradients.push(grad);
        }
        MeshsizeField { mesh, values, gradients, lower, upper, lipschitz }
    }

    pub fn mesh(&self) -> &Arc<SimplicialMesh> {
        &self.mesh
    }

    pub fn vertex_values(&self) -> &[f64] {
        &self.values
    }

    pub fn cell_gradient(&self, k: usize) -> Vec3 {
        self.gradients[k]
    }

    /// `c'` with `c' h_K <= h(x)` on every cell.
    pub fn lower_constant(&self) -> f64 {
        self.lower
    }

    /// `c''` with `h(x) <= c'' h_K` on every cell.
    pub fn upper_constant(&self) -> f64 {
        self.upper
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn eval_in_cell(&self, k: usize, x: &Vec3) -> (f64, Vec3) {
        let l = self.mesh.barycentric(k, x);
        let c = self.mesh.cells()[k];
        let v: f64 = (0..4).map(|i| l[i] * self.values[c[i]]).sum();
        (v, self.gradients[k])
    }

    pub fn eval(&self, x: &Vec3) -> Result<(f64, Vec3)> {
        let loc = self.mesh.locate(x).ok_or(Error::Evaluation([x.x, x.y, x.z]))?;
        let c = self.mesh.cells()[loc.cell];
        let v: f64 = (0..4).map(|i| loc.barycentric[i] * self.values[c[i]]).sum();
        Ok((v, self.gradients[loc.cell]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_mesh_has_constant_meshsize() {
        let m = Arc::new(SimplicialMesh::cube(3).unwrap());
        let h = MeshsizeField::new(m.clone());
        let hk = 3f64.sqrt() / 3.0;
        assert!(h.vertex_values().iter().all(|v| (v - hk).abs() < 1e-14));
        assert!(h.lipschitz() < 1e-12);
        let (v, _) = h.eval(&Vec3::new(0.3, 0.4, 0.5)).unwrap();
        assert!((v - hk).abs() < 1e-14);
    }

    #[test]
    fn graded_mesh_constants() {
        let m = Arc::new(SimplicialMesh::graded_cube(4, 2.0).unwrap());
        let h = MeshsizeField::new(m.clone());
        assert!(h.lipschitz().is_finite() && h.lipschitz() > 0.0);
        assert!(h.lower_constant() > 0.0 && h.upper_constant() < 10.0);
        let rule = crate::quadrature::tet_rule(2);
        for k in 0..m.num_cells() {
            let hk = m.geometry(k).diameter;
            for (x, _) in rule.map(&m.cell_vertices(k)) {
                let (v, _) = h.eval_in_cell(k, &x);
                assert!(v >= h.lower_constant() * hk * (1.0 - 1e-12));
                assert!(v <= h.upper_constant() * hk * (1.0 + 1e-12));
            }
        }
        assert!(h.eval(&Vec3::new(3.0, 0.0, 0.0)).is_err());
    }
}
