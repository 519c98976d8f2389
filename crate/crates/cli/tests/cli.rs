use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_derham-qi")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn mesh_info_counts_single_cube() {
    let o = run(&["mesh-info", "--cube", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("V=8 E=19 F=18 T=6"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["mesh-info", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&["nonexistent"]).status.code(), Some(2));
    assert_eq!(run(&["mesh-info", "--cube", "0"]).status.code(), Some(2));
    assert_eq!(run(&["project-check", "--epsilon", "-1"]).status.code(), Some(2));
    assert_eq!(run(&["mesh-info", "--cube", "2", "--mesh", "x.mesh"]).status.code(), Some(2));
}

#[test]
fn project_check_passes_for_edge_space_with_bc() {
    let o = run(&["project-check", "--cube", "4", "--space", "n0", "--bc"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let line = stdout(&o).lines().find(|l| l.starts_with("max defect")).map(str::to_owned).unwrap();
    let v: f64 = line.trim_start_matches("max defect ").parse().unwrap();
    assert!(v <= 1e-10);
}

#[test]
fn config_file_keys_are_checked() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "cube = 2\ncolour = blue\n").unwrap();
    assert_eq!(run(&["mesh-info", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    let good = dir.path().join("good.cfg");
    std::fs::write(&good, "# coarse\ncube = 1\n").unwrap();
    let o = run(&["mesh-info", "--config", good.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("T=6"));
}

#[test]
fn outputs_are_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = run(&["quasi-interp", "--cube", "2,3", "--space", "p1", "--seed", "5", "--out", d.path().to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["quasi_interp.csv", "calibration.csv"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{f} differs");
    }
}

#[test]
fn poincare_writes_rows() {
    let o = run(&["poincare", "--cube", "2,3"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert_eq!(s.lines().next(), Some("h,dim,ratio,residual"));
    assert_eq!(s.lines().count(), 3);
}
