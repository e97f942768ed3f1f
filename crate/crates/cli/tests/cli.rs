use std::path::Path;
use std::process::Command;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["rdindex"];
    full.extend_from_slice(args);
    let code = rdindex::run(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn pair_file() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../problems/pair.json").display().to_string()
}

#[test]
fn list_names_every_example() {
    let (code, out, _) = run(&["list"]);
    assert_eq!(code, 0);
    for name in ["ex31", "ex32", "ex33", "ex34", "ex35"] {
        assert!(out.lines().any(|l| l.starts_with(name)));
    }
}

#[test]
fn analyze_constant_pair_from_file() {
    let (code, out, err) = run(&["analyze", &pair_file()]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(out.lines().next(), Some("nu = 2"));
    assert!(out.contains("consistency at t0 = 0: pass"));
    let (code, out, _) = run(&["analyze", "--problem", &pair_file(), "--format", "json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["report"]["nu"], 2);
}

#[test]
fn classify_ex31() {
    let (code, out, _) = run(&["classify", "ex31", "--interval", "0", "1"]);
    assert_eq!(code, 0);
    assert_eq!(out.trim(), "well-structure, index 2");
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["analyze", "no-such-problem"]).0, 2);
    assert_eq!(run(&["solve-dae", "ex32", "--interval", "0.5", "1", "--h", "0.3"]).0, 1);
    assert_eq!(run(&["solve-dae", "ex32", "--order", "3"]).0, 1);
    assert_eq!(run(&["solve-iae", "ex34", "--c", "0.5,0.2"]).0, 1);
    assert_eq!(run(&["classify", "ex32", "--interval", "0", "5"]).0, 1);
    assert_eq!(run(&["analyze", "ex34", "--format", "csv"]).0, 1);
    assert_eq!(run(&["solve-iae", "ex32"]).0, 1);
    assert_eq!(run(&["frobnicate"]).0, 1);
    assert_eq!(run(&["--help"]).0, 0);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_rdindex");
    let st = Command::new(bin).args(["analyze", "missing"]).output().unwrap();
    assert_eq!(st.status.code(), Some(2));
    let st = Command::new(bin).args(["analyze", &pair_file()]).output().unwrap();
    assert_eq!(st.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&st.stdout).starts_with("nu = 2"));
}

#[test]
fn solver_failure_is_data() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let (code, out, _) = run(&["solve-dae", "ex32", "--interval", "1", "2", "--out", d]);
    assert_eq!(code, 0);
    assert!(out.contains("completed: false"));
    let diag: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("ex32_diagnostics.json")).unwrap()).unwrap();
    assert_eq!(diag["completed"], false);
    assert!(diag["failure"]["t"].as_f64().unwrap() > std::f64::consts::FRAC_PI_2);
    let cp = diag["critical_points"][0].as_f64().unwrap();
    assert!((cp - std::f64::consts::FRAC_PI_2).abs() < 1e-3);
    let csv = std::fs::read_to_string(dir.path().join("ex32_solution.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("t,y1,y2,exact1,exact2,error"));
}

#[test]
fn solve_iae_from_file_and_csv_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let (code, out, err) =
        run(&["solve-iae", &pair_file(), "--h", "0.05", "--c", "0,0.5,1", "--out", d, "--format", "csv"]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(out.lines().next(), Some("t,y1,y2"));
    // zero data: the solution is zero
    for line in out.lines().skip(1) {
        for v in line.split(',').skip(1) {
            assert_eq!(v.parse::<f64>().unwrap(), 0.0);
        }
    }
    assert!(dir.path().join("pair_diagnostics.json").exists());
}

#[test]
fn reproduce_fig2_flags_the_critical_point() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = run(&["reproduce", "fig2", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.contains("criterion 6 PASS"));
    let s: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fig2_summary.json")).unwrap()).unwrap();
    let cp = s["critical_points"][0].as_f64().unwrap();
    assert!((cp - 1.5708).abs() < 1e-3);
    assert!(s["verdict"]["pass"].as_bool().unwrap());
    let csv = std::fs::read_to_string(dir.path().join("fig2.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("t,y1,y2,exact1,exact2,error"));
}

#[test]
fn same_arguments_same_bytes() {
    let a = run(&["classify", "ex35", "--interval", "1", "2", "--seed", "7", "--format", "json"]).1;
    let b = run(&["classify", "ex35", "--interval", "1", "2", "--seed", "7", "--format", "json"]).1;
    assert_eq!(a, b);
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&d1, &d2] {
        assert_eq!(run(&["solve-iae", "ex34", "--interval", "1", "2", "--out", d.path().to_str().unwrap()]).0, 0);
    }
    for f in ["ex34_solution.csv", "ex34_diagnostics.json"] {
        assert_eq!(std::fs::read(d1.path().join(f)).unwrap(), std::fs::read(d2.path().join(f)).unwrap());
    }
}
