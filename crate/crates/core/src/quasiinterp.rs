//! Stable commuting quasi-interpolation `J_h I_h K_delta`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fespace::{curl_matrix, div_matrix, grad_matrix, mass_matrix, DofRules, FEFunction, FESpace, Kind};
use crate::geometry::StarDomain;
use crate::kernel::{build_ball_quadrature, BallQuadrature};
use crate::linalg::{cg, dot, gmres, norm_inf, sub, CsrMatrix, DenseLu};
use crate::mesh::{MeshsizeField, SimplicialMesh};
use crate::mollify::{DeltaField, FieldRef, Mollifier, SmoothScalarField, SmoothVectorField};
use crate::fields::{Curl, Divergence, Gradient};
use crate::smoothing::SmoothedDofs;

/// Dense LU is used up to this dimension, GMRES above.
pub const DENSE_LIMIT: usize = 1500;

/// Everything needed to build mollifiers `delta = eps * meshsize` on one mesh.
#[derive(Clone, Debug)]
pub struct QuasiInterpContext {
    pub mesh: Arc<SimplicialMesh>,
    pub meshsize: Arc<MeshsizeField>,
    pub domain: StarDomain,
    pub quadrature: BallQuadrature,
    pub rules: DofRules,
}

impl QuasiInterpContext {
    pub fn new(mesh: Arc<SimplicialMesh>, domain: StarDomain, ball_order: usize) -> Result<Self> {
        let meshsize = Arc::new(MeshsizeField::new(mesh.clone()));
        let quadrature = build_ball_quadrature(ball_order)?;
        Ok(QuasiInterpContext { mesh, meshsize, domain, quadrature, rules: DofRules::default() })
    }

    pub fn unit_cube(n: usize, ball_order: usize) -> Result<Self> {
        QuasiInterpContext::new(Arc::new(SimplicialMesh::cube(n)?), StarDomain::unit_cube(), ball_order)
    }

    pub fn mollifier(&self, eps: f64) -> Result<Arc<Mollifier>> {
        let delta = DeltaField::mesh_scaled(eps, self.meshsize.clone())?;
        Ok(Arc::new(Mollifier::new(self.domain.clone(), delta, self.quadrature.clone())))
    }

    pub fn space(&self, kind: Kind, with_bc: bool) -> Arc<FESpace> {
        Arc::new(FESpace::new(self.mesh.clone(), kind, with_bc))
    }

    /// Largest `eps` keeping every pushed entity inside the vertex stars of the entity:
    /// displacement `delta (1 + r) <= H_min / 4`.
    pub fn epsilon_max(&self) -> Result<f64> {
        let m = self.mollifier(1.0)?;
        let reach = 1.0 + m.radius(false).max(m.radius(true));
        Ok(self.mesh.min_height() / (4.0 * self.meshsize.max_value() * reach))
    }

    /// Largest `eps` (by bisection below `hi`) such that the images of sample points of
    /// every cell stay in the cell neighborhood (or leave the domain, for zero extension).
    pub fn sampled_epsilon_max(&self, hi: f64, steps: usize) -> Result<f64> {
        let (mut lo, mut hi) = (0.0, hi);
        if self.neighborhood_holds(hi)? {
            return Ok(hi);
        }
        for _ in 0..steps {
            let mid = 0.5 * (lo + hi);
            if self.neighborhood_holds(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }

    fn neighborhood_holds(&self, eps: f64) -> Result<bool> {
        let m = self.mollifier(eps)?;
        let mesh = &self.mesh;
        for k in 0..mesh.num_cells() {
            let hood = mesh.cell_neighborhood(k);
            let v = mesh.cell_vertices(k);
            let mut pts = v.to_vec();
            pts.push((v[0] + v[1] + v[2] + v[3]) / 4.0);
            for p in &pts {
                let (d, _) = m.delta().eval(p)?;
                for zero_ext in [false, true] {
                    for q in 0..m.quadrature().len() {
                        let y = m.sample_point(zero_ext, p, d, q);
                        if zero_ext && !self.domain.contains(&y) {
                            continue;
                        }
                        let inside = hood.iter().any(|&c| mesh.barycentric(c, &y).iter().all(|l| *l >= -1e-12));
                        if !inside {
                            return Ok(false);
                        }
                    }
                }
            }
        }
        Ok(true)
    }

    pub fn assemble(&self, kind: Kind, with_bc: bool, eps: f64) -> Result<SmoothedInterpMatrix> {
        let smoothed = SmoothedDofs::new(self.space(kind, with_bc), self.mollifier(eps)?, with_bc)?;
        SmoothedInterpMatrix::assemble(smoothed, eps, self.rules.clone())
    }
}

#[derive(Clone, Debug)]
enum Solver {
    Dense(DenseLu),
    Gmres,
}

/// `M` with `M e_j = coeff(I_h K_delta theta_j)` and its inverse `J_h`.
#[derive(Clone, Debug)]
pub struct SmoothedInterpMatrix {
    smoothed: SmoothedDofs,
    epsilon: f64,
    matrix: CsrMatrix,
    solver: Solver,
    rules: DofRules,
}

/// Operator norms of `I - M`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DefectNorms {
    /// Mass-weighted 2-norm (power iteration).
    pub mass: f64,
    /// Coefficient infinity norm.
    pub inf: f64,
}

impl DefectNorms {
    pub fn max(&self) -> f64 {
        self.mass.max(self.inf)
    }
}

impl SmoothedInterpMatrix {
    pub fn assemble(smoothed: SmoothedDofs, epsilon: f64, rules: DofRules) -> Result<Self> {
        let matrix = smoothed.matrix()?;
        let solver = if matrix.nrows() <= DENSE_LIMIT {
            Solver::Dense(DenseLu::new(matrix.to_dense()).map_err(|_| {
                Error::Numerical(format!("smoothed interpolation matrix is singular; epsilon = {epsilon} is too large"))
            })?)
        } else {
            Solver::Gmres
        };
        Ok(SmoothedInterpMatrix { smoothed, epsilon, matrix, solver, rules })
    }

    pub fn space(&self) -> &Arc<FESpace> {
        self.smoothed.space()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn smoothed(&self) -> &SmoothedDofs {
        &self.smoothed
    }

    pub fn rules(&self) -> &DofRules {
        &self.rules
    }

    /// `M c = b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        match &self.solver {
            Solver::Dense(lu) => lu.solve(b),
            Solver::Gmres => gmres(|x| self.matrix.matvec(x), b, 60, 1e-14, 3000).map(|(x, _)| x),
        }
    }

    /// `J_h I_h K_delta f`.
    pub fn quasi_interpolate(&self, field: FieldRef<'_>) -> Result<FEFunction> {
        let b = self.smoothed.apply(field, &self.rules)?;
        FEFunction::new(self.space().clone(), self.solve(&b)?)
    }

    /// `J_h I_h K_delta f_h` for a discrete input.
    pub fn project(&self, f: &FEFunction) -> Result<FEFunction> {
        let b = self.smoothed.apply_discrete(f, &self.matrix)?;
        FEFunction::new(self.space().clone(), self.solve(&b)?)
    }

    /// Norms of `I - M`: the `B`-weighted 2-norm by power iteration on
    /// `B^{-1} (I-M)^T B (I-M)`, and the coefficient infinity norm.
    pub fn defect_norms(&self, iterations: usize) -> Result<DefectNorms> {
        let n = self.matrix.nrows();
        let e = CsrMatrix::identity(n).add_scaled(-1.0, &self.matrix);
        let inf = e.norm_inf();
        if n == 0 {
            return Ok(DefectNorms { mass: 0.0, inf });
        }
        let b = mass_matrix(self.space());
        let jac: Vec<f64> = b.diagonal().iter().map(|d| 1.0 / d).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut lam = 0.0;
        for _ in 0..iterations {
            let bx = b.matvec(&x);
            let xn = dot(&x, &bx).sqrt();
            if xn == 0.0 {
                break;
            }
            x.iter_mut().for_each(|v| *v /= xn);
            let ex = e.matvec(&x);
            let bex = b.matvec(&ex);
            lam = dot(&ex, &bex);
            let rhs = e.transpose_matvec(&bex);
            x = cg(|v| b.matvec(v), &rhs, Some(&x), Some(&jac), 1e-12, 10 * n + 100)?.0;
        }
        Ok(DefectNorms { mass: lam.max(0.0).sqrt(), inf })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CalibrationConfig {
    pub target: f64,
    pub max_halvings: usize,
    pub power_iterations: usize,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig { target: 0.45, max_halvings: 20, power_iterations: 30 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationStep {
    pub epsilon: f64,
    /// Worst norms over the calibrated spaces.
    pub norms: DefectNorms,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Calibration {
    pub epsilon: f64,
    pub history: Vec<CalibrationStep>,
}

impl Calibration {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epsilon,mass_norm,inf_norm\n");
        for h in &self.history {
            s.push_str(&format!("{:.11e},{:.11e},{:.11e}\n", h.epsilon, h.norms.mass, h.norms.inf));
        }
        s
    }
}

/// Halves `eps` from `eps_start` until `max(||I-M||_B, ||I-M||_inf) <= target` on all `spaces`.
pub fn calibrate_epsilon(ctx: &QuasiInterpContext, spaces: &[(Kind, bool)], eps_start: f64, cfg: &CalibrationConfig) -> Result<Calibration> {
    if !(eps_start > 0.0) {
        return Err(Error::Parameter(format!("starting epsilon must be positive, got {eps_start}")));
    }
    let mut eps = eps_start;
    let mut history = Vec::new();
    for _ in 0..=cfg.max_halvings {
        let mut worst = DefectNorms { mass: 0.0, inf: 0.0 };
        for &(kind, bc) in spaces {
            let n = match ctx.assemble(kind, bc, eps) {
                Ok(m) => m.defect_norms(cfg.power_iterations)?,
                Err(Error::Numerical(_)) => DefectNorms { mass: f64::INFINITY, inf: f64::INFINITY },
                Err(e) => return Err(e),
            };
            worst.mass = worst.mass.max(n.mass);
            worst.inf = worst.inf.max(n.inf);
        }
        history.push(CalibrationStep { epsilon: eps, norms: worst });
        if worst.max() <= cfg.target {
            return Ok(Calibration { epsilon: eps, history });
        }
        eps *= 0.5;
    }
    Err(Error::Calibration {
        halvings: cfg.max_halvings,
        history: history.iter().map(|h| (h.epsilon, h.norms.max())).collect(),
    })
}

/// All eight spaces.
pub fn all_spaces() -> Vec<(Kind, bool)> {
    [false, true].iter().flat_map(|&bc| Kind::ALL.map(|k| (k, bc))).collect()
}

/// The four quasi-interpolants of one complex sharing one `eps`.
#[derive(Clone, Debug)]
pub struct Complex {
    pub with_bc: bool,
    pub interps: [SmoothedInterpMatrix; 4],
    pub grad: CsrMatrix,
    pub curl: CsrMatrix,
    pub div: CsrMatrix,
}

/// Largest entry of the three commutation defects `(grad, curl, div)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CommutationDefects {
    pub grad: f64,
    pub curl: f64,
    pub div: f64,
}

impl CommutationDefects {
    pub fn max(&self) -> f64 {
        self.grad.max(self.curl).max(self.div)
    }
}

impl Complex {
    pub fn build(ctx: &QuasiInterpContext, eps: f64, with_bc: bool) -> Result<Self> {
        let interps = [
            ctx.assemble(Kind::P1, with_bc, eps)?,
            ctx.assemble(Kind::N0, with_bc, eps)?,
            ctx.assemble(Kind::RT0, with_bc, eps)?,
            ctx.assemble(Kind::P0, with_bc, eps)?,
        ];
        Complex::from_interps(interps)
    }

    pub fn from_interps(interps: [SmoothedInterpMatrix; 4]) -> Result<Self> {
        let eps = interps[0].epsilon();
        if interps.iter().any(|m| m.epsilon() != eps) {
            return Err(Error::Usage("quasi-interpolants of one complex must share epsilon".into()));
        }
        let with_bc = interps[0].space().with_bc();
        for (m, k) in interps.iter().zip(Kind::ALL) {
            if m.space().kind() != k {
                return Err(Error::Usage(format!("expected {k} in position of {}", m.space().kind())));
            }
        }
        let s: Vec<&Arc<FESpace>> = interps.iter().map(|m| m.space()).collect();
        let grad = grad_matrix(s[0], s[1])?;
        let curl = curl_matrix(s[1], s[2])?;
        let div = div_matrix(s[2], s[3])?;
        Ok(Complex { with_bc, interps, grad, curl, div })
    }

    pub fn epsilon(&self) -> f64 {
        self.interps[0].epsilon()
    }

    /// `||G J^g f - J^c grad f||_inf` and the curl and div analogues.
    pub fn commutation_defects(&self, f: &dyn SmoothScalarField, u: &dyn SmoothVectorField, w: &dyn SmoothVectorField) -> Result<CommutationDefects> {
        let [mg, mc, md, mb] = &self.interps;
        let jf = mg.quasi_interpolate(FieldRef::Scalar(f))?;
        let jgf = mc.quasi_interpolate(FieldRef::Vector(&Gradient(f)))?;
        let grad = norm_inf(&sub(&self.grad.matvec(&jf.coeffs), &jgf.coeffs));
        let ju = mc.quasi_interpolate(FieldRef::Vector(u))?;
        let jcu = md.quasi_interpolate(FieldRef::Vector(&Curl(u)))?;
        let curl = norm_inf(&sub(&self.curl.matvec(&ju.coeffs), &jcu.coeffs));
        let jw = md.quasi_interpolate(FieldRef::Vector(w))?;
        let jdw = mb.quasi_interpolate(FieldRef::Scalar(&Divergence(w)))?;
        let div = norm_inf(&sub(&self.div.matvec(&jw.coeffs), &jdw.coeffs));
        Ok(CommutationDefects { grad, curl, div })
    }

    /// Same defects for discrete inputs `f_h in P1`, `u_h in N0`, `w_h in RT0`.
    pub fn discrete_commutation_defects(&self, f: &FEFunction, u: &FEFunction, w: &FEFunction) -> Result<CommutationDefects> {
        let [mg, mc, md, mb] = &self.interps;
        let d = |a: &CsrMatrix, lo: &SmoothedInterpMatrix, hi: &SmoothedInterpMatrix, x: &FEFunction| -> Result<f64> {
            let left = a.matvec(&lo.project(x)?.coeffs);
            let ax = FEFunction::new(hi.space().clone(), a.matvec(&x.coeffs))?;
            Ok(norm_inf(&sub(&left, &hi.project(&ax)?.coeffs)))
        };
        Ok(CommutationDefects { grad: d(&self.grad, mg, mc, f)?, curl: d(&self.curl, mc, md, u)?, div: d(&self.div, md, mb, w)? })
    }
}

/// Max commutation defect over the three squares; all four matrices must share `eps`.
pub fn check_discrete_commutation(
    mats: [&SmoothedInterpMatrix; 4],
    f: &dyn SmoothScalarField,
    u: &dyn SmoothVectorField,
    w: &dyn SmoothVectorField,
) -> Result<f64> {
    let eps = mats[0].epsilon();
    if mats.iter().any(|m| m.epsilon() != eps) {
        return Err(Error::Usage("commutation check needs one shared epsilon".into()));
    }
    let c = Complex::from_interps(mats.map(|m| m.clone()))?;
    Ok(c.commutation_defects(f, u, w)?.max())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{affine_scalar, sine_bubble, trig_vector};
    use crate::mollify::ScalarFn;

    #[test]
    fn zero_epsilon_gives_identity() {
        let ctx = QuasiInterpContext::unit_cube(2, 4).unwrap();
        let m = ctx.assemble(Kind::N0, false, 0.0).unwrap();
        assert_eq!(m.matrix().add_scaled(-1.0, &CsrMatrix::identity(m.space().dim())).nnz(), 0);
    }

    #[test]
    fn constants_preserved_and_projection() {
        let ctx = QuasiInterpContext::unit_cube(2, 4).unwrap();
        let eps = ctx.epsilon_max().unwrap();
        let m = ctx.assemble(Kind::P1, false, eps).unwrap();
        let one = ScalarFn(|_: &crate::geometry::Vec3| 1.0);
        let u = m.quasi_interpolate(FieldRef::Scalar(&one)).unwrap();
        assert!(u.coeffs.iter().all(|c| (c - 1.0).abs() < 1e-12));
        let f = affine_scalar(crate::geometry::Vec3::new(1.0, 2.0, 3.0), -1.0);
        let fh = m.space().interpolate(FieldRef::Scalar(&f), &DofRules::default()).unwrap();
        let p = m.project(&fh).unwrap();
        assert!(norm_inf(&sub(&p.coeffs, &fh.coeffs)) < 1e-12);
    }

    #[test]
    fn calibration_and_bounds() {
        let ctx = QuasiInterpContext::unit_cube(2, 4).unwrap();
        let emax = ctx.epsilon_max().unwrap();
        assert!(ctx.sampled_epsilon_max(4.0 * emax, 20).unwrap() >= emax);
        let cal = calibrate_epsilon(&ctx, &[(Kind::P0, false)], emax, &CalibrationConfig::default()).unwrap();
        assert!(cal.epsilon <= emax);
        let last = cal.history.last().unwrap();
        assert!(last.norms.max() <= 0.45);
        let again = calibrate_epsilon(&ctx, &[(Kind::P0, false)], cal.epsilon, &CalibrationConfig::default()).unwrap();
        assert_eq!(again.epsilon, cal.epsilon);
        assert_eq!(again.history.len(), 1);
    }

    #[test]
    fn mismatched_epsilon_is_usage_error() {
        let ctx = QuasiInterpContext::unit_cube(1, 4).unwrap();
        let a = ctx.assemble(Kind::P1, false, 0.01).unwrap();
        let b = ctx.assemble(Kind::N0, false, 0.02).unwrap();
        let c = ctx.assemble(Kind::RT0, false, 0.01).unwrap();
        let d = ctx.assemble(Kind::P0, false, 0.01).unwrap();
        let r = check_discrete_commutation([&a, &b, &c, &d], &sine_bubble(), &trig_vector(1.0), &trig_vector(1.0));
        assert!(matches!(r, Err(Error::Usage(_))));
    }

    #[test]
    fn gradient_free_input_has_zero_defect() {
        let ctx = QuasiInterpContext::unit_cube(2, 4).unwrap();
        let eps = 0.5 * ctx.epsilon_max().unwrap();
        let c = Complex::build(&ctx, eps, false).unwrap();
        let f = affine_scalar(crate::geometry::Vec3::zeros(), 2.0);
        let d = c.commutation_defects(&f, &trig_vector(1.0), &trig_vector(2.0)).unwrap();
        assert!(d.grad < 1e-13);
        assert!(d.max() < 1e-9);
    }
}
