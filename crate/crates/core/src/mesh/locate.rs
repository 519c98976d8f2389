use super::{CellGeometry, SimplicialMesh};
use crate::geometry::Vec3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Location {
    pub cell: usize,
    pub barycentric: [f64; 4],
}

/// Uniform background grid of cell bounding boxes.
#[derive(Clone, Debug)]
pub struct PointLocator {
    lo: Vec3,
    cell_size: Vec3,
    dims: [usize; 3],
    bins: Vec<Vec<usize>>,
}

const BARY_TOL: f64 = 1e-12;

impl PointLocator {
    pub fn new(geometry: &[CellGeometry]) -> Self {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for g in geometry {
            lo = lo.inf(&g.lo);
            hi = hi.sup(&g.hi);
        }
        let ext = hi - lo;
        let n = geometry.len().max(1) as f64;
        let per_axis = (n / 2.0).cbrt().ceil().max(1.0) as usize;
        let dims = [per_axis; 3];
        let cell_size = Vec3::new(
            (ext.x / per_axis as f64).max(1e-300),
            (ext.y / per_axis as f64).max(1e-300),
            (ext.z / per_axis as f64).max(1e-300),
        );
        let mut loc = PointLocator { lo, cell_size, dims, bins: vec![Vec::new(); dims[0] * dims[1] * dims[2]] };
        for (k, g) in geometry.iter().enumerate() {
            let pad = Vec3::repeat(1e-12) + (g.hi - g.lo) * 1e-9;
            let a = loc.bin_coords(&(g.lo - pad));
            let b = loc.bin_coords(&(g.hi + pad));
            for i in a[0]..=b[0] {
                for j in a[1]..=b[1] {
                    for l in a[2]..=b[2] {
                        let id = loc.bin_id([i, j, l]);
                        loc.bins[id].push(k);
                    }
                }
            }
        }
        loc
    }

    fn bin_coords(&self, x: &Vec3) -> [usize; 3] {
        let mut out = [0; 3];
        for d in 0..3 {
            let t = ((x[d] - self.lo[d]) / self.cell_size[d]).floor();
            out[d] = t.clamp(0.0, (self.dims[d] - 1) as f64) as usize;
        }
        out
    }

    fn bin_id(&self, c: [usize; 3]) -> usize {
        (c[0] * self.dims[1] + c[1]) * self.dims[2] + c[2]
    }

    /// Bins are filled in increasing cell order, so the first hit is the lowest id.
    pub fn locate(&self, mesh: &SimplicialMesh, x: &Vec3) -> Option<Location> {
        let scale = self.cell_size.norm();
        for d in 0..3 {
            let hi = self.lo[d] + self.cell_size[d] * self.dims[d] as f64;
            if x[d] < self.lo[d] - 1e-9 * scale || x[d] > hi + 1e-9 * scale {
                return None;
            }
        }
        let bin = &self.bins[self.bin_id(self.bin_coords(x))];
        bin.iter().find_map(|&k| {
            let l = mesh.barycentric(k, x);
            l.iter().all(|v| *v >= -BARY_TOL).then_some(Location { cell: k, barycentric: l })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interior_and_exterior_points() {
        let m = SimplicialMesh::cube(3).unwrap();
        let loc = m.locate(&Vec3::new(0.5, 0.5, 0.5)).unwrap();
        let s: f64 = loc.barycentric.iter().sum();
        assert!((s - 1.0).abs() < 1e-14);
        assert!(loc.barycentric.iter().all(|l| *l >= -1e-12 && *l <= 1.0 + 1e-12));
        assert!(m.locate(&Vec3::new(2.0, 2.0, 2.0)).is_none());
    }

    #[test]
    fn ties_go_to_lowest_cell() {
        let m = SimplicialMesh::cube(2).unwrap();
        for f in 0..m.num_faces() {
            if let (kl, Some(kr)) = m.face_owners(f) {
                let c: Vec3 = m.faces()[f].iter().map(|&v| m.vertices()[v]).sum::<Vec3>() / 3.0;
                let loc = m.locate(&c).unwrap();
                let mut owners = m.vertex_cells(m.faces()[f][0]).to_vec();
                owners.retain(|&k| m.barycentric(k, &c).iter().all(|l| *l >= -1e-12));
                assert_eq!(loc.cell, *owners.iter().min().unwrap());
                assert!(loc.cell <= kl.min(kr));
            }
        }
    }

    #[test]
    fn every_cell_centroid_found_in_its_cell() {
        let m = SimplicialMesh::graded_cube(3, 1.7).unwrap();
        for k in 0..m.num_cells() {
            let c: Vec3 = m.cell_vertices(k).iter().sum::<Vec3>() / 4.0;
            assert_eq!(m.locate(&c).unwrap().cell, k);
        }
    }
}
