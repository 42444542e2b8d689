use ascflow::anisotropy::Anisotropy;
use ascflow::curvature::curvature_from_support;
use ascflow::harness::*;
use ascflow::sphere::{build_grid, GridMode};
use ascflow::state::{Gauge, InitialBody};
use proptest::prelude::*;
use std::fs;
use std::path::Path;
use std::sync::Arc;

fn sphere_toml(name: &str, radius: f64, eps: f64) -> String {
    format!(
        r#"name = "{name}"
dimension = 2
gauge = "gauss-support"

[grid]
mode = "full2d"
resolution = 8

[body]
shape = "sphere"
radius = {radius}

[anisotropy]
kind = "constant"
a = 1.0

[pinch]
eps = {eps}

[controls]
records = 30
"#
    )
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = walkdir::WalkDir::new(dir)
        .into_iter()
        .map(Result::unwrap)
        .filter(|e| e.file_type().is_file())
        .map(|e| (e.path().strip_prefix(dir).unwrap().display().to_string(), fs::read(e.path()).unwrap()))
        .collect();
    out.sort();
    out
}

fn ellipsoid() -> impl Strategy<Value = InitialBody> {
    (0.2..3.0f64, 0.2..3.0f64, 0.2..3.0f64).prop_map(|(a, b, c)| InitialBody::Ellipsoid { a, b, c })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn config_round_trips(body in ellipsoid(), eps in 0.01..0.99f64, res in 4usize..40, records in 2usize..500, seed in any::<u64>()) {
        let mut cfg = ExperimentConfig::from_toml(&sphere_toml("p", 1.0, 0.1)).unwrap();
        cfg.body = body;
        cfg.pinch.eps = eps;
        cfg.grid.resolution = res;
        cfg.controls.records = records;
        cfg.seed = seed;
        cfg.anisotropy = Anisotropy::quadratic(1.0, eps, vec![]).unwrap();
        let back = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}

#[test]
fn unknown_keys_are_config_errors() {
    let text = sphere_toml("x", 1.0, 0.1).replace("records = 30", "records = 30\nrecrods = 4");
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.toml");
    fs::write(&path, text).unwrap();
    let err = run_experiment(&path, &Overrides::default()).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn malformed_eps_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, sphere_toml("bad", 1.0, 1.5)).unwrap();
    let out = dir.path().join("out");
    let err = run_experiment(&path, &Overrides { output_dir: Some(out.clone()), ..Default::default() }).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(!out.exists());
}

#[test]
fn missing_file_is_an_io_error() {
    let err = run_experiment(Path::new("/nonexistent/cfg.toml"), &Overrides::default()).unwrap_err();
    assert_eq!(err.exit_code(), 5);
}

#[test]
fn runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.toml");
    fs::write(&path, sphere_toml("s", 1.0, 0.1)).unwrap();
    let run_into = |name: &str| {
        let out = dir.path().join(name);
        run_experiment(&path, &Overrides { output_dir: Some(out.clone()), seed: Some(9), ..Default::default() }).unwrap();
        files(&out)
    };
    let a = run_into("a");
    let b = run_into("b");
    let names: Vec<&str> = a.iter().map(|f| f.0.as_str()).collect();
    for expected in ["diagnostics.csv", "summary.json", "trajectory.csv", "rescaled_parabolic.csv", "meshes/record_00000.obj"] {
        assert!(names.contains(&expected), "{expected} missing from {names:?}");
    }
    assert_eq!(a, b);
    let header = String::from_utf8(a.iter().find(|f| f.0 == "trajectory.csv").unwrap().1.clone()).unwrap();
    assert!(header.lines().next().unwrap().contains('['), "columns carry units");
}

#[test]
fn records_override_applies() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.toml");
    fs::write(&path, sphere_toml("s", 1.0, 0.1)).unwrap();
    let cfg = load_experiment(&path, &Overrides { records: Some(7), seed: Some(3), ..Default::default() }).unwrap();
    assert_eq!(cfg.controls.records, 7);
    assert_eq!(cfg.seed, 3);
}

fn parse_obj(text: &str) -> Vec<[f64; 3]> {
    text.lines()
        .filter_map(|l| l.strip_prefix("v "))
        .map(|l| {
            let v: Vec<f64> = l.split_whitespace().map(|x| x.parse().unwrap()).collect();
            [v[0], v[1], v[2]]
        })
        .collect()
}

#[test]
fn meshes_place_vertices_on_the_surface() {
    let grid = Arc::new(build_grid(2, GridMode::Full2d, 12).unwrap());
    let mesh = |body: InitialBody| {
        let s = body.sample(&grid, Gauge::GaussSupport).unwrap();
        let b = curvature_from_support(&s).unwrap();
        mesh_obj(&s, &b)
    };
    let unit = mesh(InitialBody::Sphere { radius: 1.0, center: [0.0; 3] });
    let verts = parse_obj(&unit);
    assert_eq!(verts.len(), grid.len());
    assert!(verts.iter().all(|v| ((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt() - 1.0).abs() < 1e-10));
    let faces = unit.lines().filter(|l| l.starts_with("f ")).count();
    // A closed triangulated sphere satisfies V − E + F = 2 with E = 3F/2.
    assert_eq!(verts.len() as i64 - faces as i64 / 2, 2);

    let moved = parse_obj(&mesh(InitialBody::Sphere { radius: 1.0, center: [0.5, -1.0, 2.0] }));
    for (a, b) in verts.iter().zip(&moved) {
        assert!((b[0] - a[0] - 0.5).abs() < 1e-10 && (b[1] - a[1] + 1.0).abs() < 1e-10 && (b[2] - a[2] - 2.0).abs() < 1e-10);
    }

    let ax = Arc::new(build_grid(2, GridMode::Axisym, 65).unwrap());
    let s = InitialBody::Ellipsoid { a: 1.0, b: 1.0, c: 1.2 }.sample(&ax, Gauge::GaussSupport).unwrap();
    let obj = mesh_obj(&s, &curvature_from_support(&s).unwrap());
    let zmax = parse_obj(&obj).iter().map(|v| v[2].abs()).fold(0.0, f64::max);
    assert!((zmax - 1.2).abs() < 1e-8);
    assert!(obj.lines().any(|l| l.starts_with("l ")));
}

#[test]
fn batch_scales_with_radius_squared() {
    let dir = tempfile::tempdir().unwrap();
    let cfgs = dir.path().join("cfgs");
    fs::create_dir(&cfgs).unwrap();
    for (name, r) in [("a", 0.5), ("b", 1.0), ("c", 2.0)] {
        fs::write(cfgs.join(format!("{name}.toml")), sphere_toml(name, r, 0.1)).unwrap();
    }
    let out = dir.path().join("out");
    let (rows, root) = batch(&cfgs, &Overrides { output_dir: Some(out.clone()), ..Default::default() }).unwrap();
    assert!(root.join("batch.csv").exists());
    let t: Vec<f64> = rows.iter().map(|r| r.extinction_time.unwrap()).collect();
    assert!((t[1] / t[0] - 4.0).abs() < 1e-3);
    assert!((t[2] / t[0] - 16.0).abs() < 1e-3);
    assert!(out.join("b").join("summary.json").exists());
}

#[test]
fn batch_isolates_bad_configs() {
    let dir = tempfile::tempdir().unwrap();
    let cfgs = dir.path().join("cfgs");
    fs::create_dir(&cfgs).unwrap();
    fs::write(cfgs.join("a.toml"), sphere_toml("a", 1.0, 0.1)).unwrap();
    fs::write(cfgs.join("b.toml"), sphere_toml("b", 1.0, 1.5)).unwrap();
    fs::write(cfgs.join("c.toml"), sphere_toml("c", 2.0, 0.1)).unwrap();
    let (rows, _) = batch(&cfgs, &Overrides { output_dir: Some(dir.path().join("out")), ..Default::default() }).unwrap();
    let codes: Vec<i32> = rows.iter().map(|r| r.exit_code).collect();
    assert_eq!(codes, [0, 2, 0]);
    assert!(!rows[1].message.is_empty());
}

#[test]
fn empty_batch_writes_an_empty_table() {
    let dir = tempfile::tempdir().unwrap();
    let (rows, root) = batch(dir.path(), &Overrides { output_dir: Some(dir.path().join("out")), ..Default::default() }).unwrap();
    assert!(rows.is_empty());
    let text = fs::read_to_string(root.join("batch.csv")).unwrap();
    assert_eq!(text.lines().count(), 1);
}

#[test]
fn audit_config_runs_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("audit.toml");
    fs::write(
        &path,
        r#"
[batches.small]
expect = "non-negative"

[batches.small.spec]
dims = [2, 3]
samples = 200
seed = 5
eps_range = [0.05, 0.3]
bounds = { inf_psi = 1.0, sup_psi = 2.0, sup_grad = 0.5, sup_hess = 0.5 }
c = { mode = "admissible", factor = 1.0 }
"#,
    )
    .unwrap();
    let (outcomes, root) = run_audit(&path, &Overrides { output_dir: Some(dir.path().join("out")), ..Default::default() }).unwrap();
    assert_eq!(outcomes.len(), 1);
    assert!(outcomes[0].passed);
    assert_eq!(outcomes[0].summary.samples, 400);
    assert!(root.join("audit_small.csv").exists());
    assert!(root.join("audit_summary.json").exists());
}
