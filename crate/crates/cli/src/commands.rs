use std::path::Path;
use std::sync::Arc;

use derham_qi::fespace::Kind;
use derham_qi::fields::{
    gradient_of_wave, plane_wave, polynomial_bubble, scalar_battery, sine_bubble, tangential_bubble_vector, trig_vector, vector_battery, normal_bubble_vector,
    AnalyticScalar, AnalyticVector,
};
use derham_qi::harness::csv::{fmt_float, CsvTable};
use derham_qi::harness::studies::commute_table;
use derham_qi::harness::studies::trace_table;
use derham_qi::harness::{self, sample_points, PoincareConfig, TraceBattery};
use derham_qi::harness::{poincare_study, quasi_interp_rate_on};
use derham_qi::mesh::read_mesh;
use derham_qi::mollify::{Family, FieldRef, MollifierVariant};
use derham_qi::quadrature::VolumeRule;
use derham_qi::quasiinterp::{all_spaces, calibrate_epsilon, CalibrationConfig, QuasiInterpContext};
use derham_qi::{build_ball_quadrature, DeltaField, Mollifier, SimplicialMesh, StarDomain, Vec3};

use crate::config::{EpsilonPolicy, MeshSpec, RunConfig};
use crate::AppError;

const DELTAS: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];
const COMMUTE_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-8;
const PROJECT_TOL: f64 = 1e-10;
const EIGEN_TOL: f64 = 1e-8;

fn meshes(cfg: &RunConfig, default: &[usize]) -> Result<Vec<Arc<SimplicialMesh>>, AppError> {
    match &cfg.mesh {
        Some(MeshSpec::File(p)) => Ok(vec![Arc::new(read_mesh(p)?.into_mesh()?)]),
        Some(MeshSpec::Cubes(ns)) => Ok(ns.iter().map(|&n| SimplicialMesh::cube(n).map(Arc::new)).collect::<Result<_, _>>()?),
        None => Ok(default.iter().map(|&n| SimplicialMesh::cube(n).map(Arc::new)).collect::<Result<_, _>>()?),
    }
}

/// Studies involving mollifiers live on the unit cube.
fn check_unit_cube(m: &SimplicialMesh) -> Result<(), AppError> {
    let (mut lo, mut hi) = (Vec3::repeat(f64::INFINITY), Vec3::repeat(f64::NEG_INFINITY));
    for v in m.vertices() {
        lo = lo.inf(v);
        hi = hi.sup(v);
    }
    let tol = 1e-10;
    if lo.amax() > tol || (hi - Vec3::repeat(1.0)).amax() > tol || (m.total_volume() - 1.0).abs() > tol {
        return Err(AppError::Validation("mesh must tile the unit cube for this study".into()));
    }
    Ok(())
}

fn emit(cfg: &RunConfig, name: &str, table: &str) -> Result<(), AppError> {
    match &cfg.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| AppError::Validation(format!("cannot create {}: {e}", dir.display())))?;
            let path = dir.join(format!("{name}.csv"));
            write(&path, table)
        }
        None => {
            print!("{table}");
            Ok(())
        }
    }
}

fn write(path: &Path, text: &str) -> Result<(), AppError> {
    std::fs::write(path, text).map_err(|e| AppError::Validation(format!("cannot write {}: {e}", path.display())))
}

fn note(cfg: &RunConfig, line: &str) {
    if cfg.out.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

fn invariant(name: &str, value: f64, tol: f64) -> Result<(), AppError> {
    if value <= tol {
        Ok(())
    } else {
        Err(AppError::Numerical(format!("invariant `{name}` violated: {value:.3e} > {tol:.0e}")))
    }
}

fn constant_delta(cfg: &RunConfig) -> f64 {
    match cfg.epsilon {
        EpsilonPolicy::Value(v) => v,
        EpsilonPolicy::Auto => 0.1,
    }
}

fn compact_bump() -> AnalyticScalar {
    let c = Vec3::repeat(0.5);
    let r2: f64 = 0.16;
    AnalyticScalar::new(
        "compact-bump",
        move |x| {
            let t = (x - c).norm_squared() / r2;
            if t < 1.0 {
                (1.0 - 1.0 / (1.0 - t)).exp()
            } else {
                0.0
            }
        },
        move |x| {
            let t = (x - c).norm_squared() / r2;
            if t < 1.0 {
                (x - c) * (-2.0 * (1.0 - 1.0 / (1.0 - t)).exp() / (r2 * (1.0 - t).powi(2)))
            } else {
                Vec3::zeros()
            }
        },
    )
}

pub fn mollify_rate(cfg: &RunConfig) -> Result<(), AppError> {
    let domain = StarDomain::unit_cube();
    let q = build_ball_quadrature(cfg.ball_order.unwrap_or(4))?;
    let families: Vec<Family> = match cfg.space {
        Some(k) => vec![k.family()],
        None => vec![Family::Grad, Family::Curl, Family::Div, Family::Broken],
    };
    let zero = cfg.bc;
    let scalar = if zero { compact_bump() } else { plane_wave(Vec3::new(1.0, 2.0, -1.5), 0.3) };
    let vector = if zero { AnalyticVector::scaled(compact_bump(), trig_vector(2.0)) } else { trig_vector(2.0) };
    let mut out = CsvTable::new(&["field", "norm", "delta", "error", "observed_order"]);
    let mut worst = f64::INFINITY;
    for fam in families {
        let field = if fam.is_vector() { FieldRef::Vector(&vector) } else { FieldRef::Scalar(&scalar) };
        let label = if fam.is_vector() { &vector.name } else { &scalar.name };
        let t = harness::mollify_rate(&domain, &q, MollifierVariant::new(fam, zero), field, label, &DELTAS, 16)?;
        if let Some(o) = t.fitted_order() {
            worst = worst.min(o);
        }
        out.rows.extend(t.to_table().rows);
    }
    emit(cfg, "mollify_rate", &out.to_string())?;
    note(cfg, &format!("min fitted order {}", fmt_float(worst)));
    Ok(())
}

pub fn commute_check(cfg: &RunConfig) -> Result<(), AppError> {
    let domain = StarDomain::unit_cube();
    let q = build_ball_quadrature(cfg.ball_order.unwrap_or(6))?;
    let m = Mollifier::new(domain.clone(), DeltaField::constant(constant_delta(cfg))?, q);
    let pts = sample_points(&domain, 200, cfg.seed);
    let f = plane_wave(Vec3::new(1.3, -2.1, 0.8), 0.4);
    let (u, w) = (trig_vector(2.0), trig_vector(1.4));
    let rows = harness::commute_check(&m, cfg.bc, &pts, &f, &u, &w)?;
    emit(cfg, "commute_check", &commute_table(&rows).to_string())?;
    let worst = rows.iter().fold(0.0f64, |a, r| a.max(r.abs_diff()));
    note(cfg, &format!("max defect {}", fmt_float(worst)));
    invariant("continuous commutation", worst, COMMUTE_TOL)
}

pub fn trace_check(cfg: &RunConfig) -> Result<(), AppError> {
    let domain = StarDomain::unit_cube();
    let q = build_ball_quadrature(cfg.ball_order.unwrap_or(4))?;
    let m = Mollifier::new(domain, DeltaField::constant(constant_delta(cfg))?, q);
    let rule = VolumeRule::tensor_box(&Vec3::zeros(), &Vec3::repeat(1.0), 40);
    let rows = TraceBattery::default().run(&m, &rule)?;
    emit(cfg, "trace_check", &trace_table(&rows).to_string())?;
    let worst = rows.iter().fold(0.0f64, |a, r| a.max(r.value.abs()));
    note(cfg, &format!("max |pairing| {}", fmt_float(worst)));
    invariant("vanishing trace pairing", worst, TRACE_TOL)
}

fn resolve_epsilon(cfg: &RunConfig, ctx: &QuasiInterpContext, spaces: &[(Kind, bool)]) -> Result<f64, AppError> {
    match cfg.epsilon {
        EpsilonPolicy::Value(v) => Ok(v),
        EpsilonPolicy::Auto => {
            let cal = calibrate_epsilon(ctx, spaces, ctx.epsilon_max()?, &CalibrationConfig::default())?;
            if cfg.out.is_some() {
                emit(cfg, "calibration", &cal.to_csv())?;
            } else {
                eprint!("{}", cal.to_csv());
            }
            Ok(cal.epsilon)
        }
    }
}

pub fn quasi_interp(cfg: &RunConfig) -> Result<(), AppError> {
    let ms = meshes(cfg, &[4, 8])?;
    for m in &ms {
        check_unit_cube(m)?;
    }
    let kind = cfg.space.unwrap_or(Kind::P1);
    let ball = cfg.ball_order.unwrap_or(3);
    let coarsest = ms.iter().min_by_key(|m| m.num_cells()).expect("at least one mesh");
    let ctx = QuasiInterpContext::new(coarsest.clone(), StarDomain::unit_cube(), ball)?;
    let spaces: Vec<(Kind, bool)> = all_spaces().into_iter().filter(|s| s.1 == cfg.bc).collect();
    let eps = resolve_epsilon(cfg, &ctx, &spaces)?;
    let scalars: Vec<AnalyticScalar> = scalar_battery(cfg.seed, 3);
    let vectors: Vec<AnalyticVector> = if cfg.bc {
        vec![tangential_bubble_vector(), normal_bubble_vector(), gradient_of_wave(Vec3::new(1.0, -1.0, 2.0), 0.2)]
    } else {
        vector_battery(cfg.seed, 3)
    };
    let scalars = if cfg.bc { vec![sine_bubble(), polynomial_bubble(1), polynomial_bubble(2)] } else { scalars };
    let fields: Vec<(String, FieldRef<'_>)> = if kind.is_vector() {
        vectors.iter().map(|v| (v.name.clone(), FieldRef::Vector(v))).collect()
    } else {
        scalars.iter().map(|s| (s.name.clone(), FieldRef::Scalar(s))).collect()
    };
    let study = quasi_interp_rate_on(&ms, &StarDomain::unit_cube(), kind, cfg.bc, &fields, eps, ball)?;
    emit(cfg, "quasi_interp", &study.to_csv())?;
    note(cfg, &format!("epsilon {}", fmt_float(eps)));
    Ok(())
}

pub fn project_check(cfg: &RunConfig) -> Result<(), AppError> {
    let ms = meshes(cfg, &[4])?;
    let kind = cfg.space.unwrap_or(Kind::P1);
    let ball = cfg.ball_order.unwrap_or(3);
    let mut t = CsvTable::new(&["cells", "space", "bc", "epsilon", "max_relative_defect"]);
    let mut worst: f64 = 0.0;
    for m in &ms {
        check_unit_cube(m)?;
        let ctx = QuasiInterpContext::new(m.clone(), StarDomain::unit_cube(), ball)?;
        let eps = resolve_epsilon(cfg, &ctx, &[(kind, cfg.bc)])?;
        let interp = ctx.assemble(kind, cfg.bc, eps)?;
        let d = harness::project_check(&interp, 10, cfg.seed)?;
        worst = worst.max(d);
        t.push(vec![m.num_cells().to_string(), kind.to_string(), cfg.bc.to_string(), fmt_float(eps), fmt_float(d)]);
    }
    emit(cfg, "project_check", &t.to_string())?;
    println!("max defect {}", fmt_float(worst));
    invariant("projection", worst, PROJECT_TOL)
}

pub fn poincare(cfg: &RunConfig) -> Result<(), AppError> {
    let ms = meshes(cfg, &[4, 8])?;
    let pc = PoincareConfig { seed: cfg.seed, ..PoincareConfig::default() };
    let rep = poincare_study(&ms, cfg.bc, &pc)?;
    if rep.rows.len() < ms.len() {
        note(cfg, &format!("{} mesh(es) skipped: empty gradient-free space", ms.len() - rep.rows.len()));
    }
    emit(cfg, "poincare", &rep.to_csv())?;
    let worst = rep.rows.iter().fold(0.0f64, |a, r| a.max(r.residual));
    invariant("eigen residual", worst, EIGEN_TOL)
}

pub fn mesh_info(cfg: &RunConfig) -> Result<(), AppError> {
    for m in meshes(cfg, &[1])? {
        println!("V={} E={} F={} T={}", m.num_vertices(), m.num_edges(), m.num_faces(), m.num_cells());
        println!("euler={} boundary_faces={}", m.euler_characteristic(), m.num_boundary_faces());
        println!("h_max={} min_height={} volume={}", fmt_float(m.max_diameter()), fmt_float(m.min_height()), fmt_float(m.total_volume()));
    }
    Ok(())
}
