use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn jrh(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jrh"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("JRH_N")
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn geometry_writes_arcs_and_overlay() {
    let d = tempfile::tempdir().unwrap();
    let o = jrh(&["geometry", "--A", "-0.7", "--B", "-0.8", "--levels", "-0.1,-0.05,0.05,0.1"], d.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let svg = fs::read_to_string(d.path().join("geometry.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 9);
    assert_eq!(svg.matches("<polygon").count(), 6);
    let g = json(&d.path().join("geometry.json"));
    assert_eq!(g["arcs"].as_array().unwrap().len(), 15);
    assert!(!d.path().join(".jrh.lock").exists());
}

#[test]
fn geometry_is_deterministic_and_replayable() {
    let d = tempfile::tempdir().unwrap();
    let (a, b, c) = (d.path().join("a"), d.path().join("b"), d.path().join("c"));
    assert!(jrh(&["geometry", "--levels", "0.05"], &a).status.success());
    assert!(jrh(&["geometry", "--levels", "0.05"], &b).status.success());
    let o = Command::new(env!("CARGO_BIN_EXE_jrh"))
        .arg("run")
        .arg(a.join("config.json"))
        .arg("--into")
        .arg(&c)
        .output()
        .unwrap();
    assert!(o.status.success());
    for f in ["arcs.csv", "geometry.json", "geometry.svg"] {
        let x = fs::read(a.join(f)).unwrap();
        assert_eq!(x, fs::read(b.join(f)).unwrap(), "{f}");
        assert_eq!(x, fs::read(c.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn invalid_parameters_exit_2_without_files() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("g");
    let o = jrh(&["geometry", "--A", "0.5"], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
    let o = jrh(&["asym", "eval", "--z", "1"], &out);
    assert_eq!(o.status.code(), Some(2));
    let o = jrh(&["geometry", "--n", "x"], &out);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn locked_directory_is_refused() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join(".jrh.lock"), "1\n").unwrap();
    let o = jrh(&["geometry"], d.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("locked"));
}

#[test]
fn zeros_case_a_counts() {
    let d = tempfile::tempdir().unwrap();
    let o = jrh(&["zeros", "--n", "100", "--alpha", "-69.99999", "--beta", "-79.99999"], d.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&d.path().join("report.json"));
    assert_eq!(r["case"], "A");
    let counts: Vec<i64> = r["per_arc_counts"].as_array().unwrap().iter().map(|v| v.as_i64().unwrap()).collect();
    for (c, w) in counts.iter().zip([30, 50, 20]) {
        assert!((c - w).abs() <= 3, "{counts:?}");
    }
    let csv = fs::read_to_string(d.path().join("zeros.csv")).unwrap();
    assert_eq!(csv.lines().count(), 101);
    assert!(fs::read_to_string(d.path().join("zeros.svg")).unwrap().matches("<circle").count() == 100);
}

#[test]
fn zeros_case_c_from_exponents() {
    let d = tempfile::tempdir().unwrap();
    let o = jrh(
        &["zeros", "--n", "100", "--alpha", "-69.99999999999999999999", "--beta", "-79.999999999999999999999999999999"],
        d.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&d.path().join("report.json"))["case"], "C");
}

#[test]
fn zeros_edge_cases() {
    let d = tempfile::tempdir().unwrap();
    let o = jrh(&["zeros", "--n", "1", "--alpha", "-0.5", "--beta", "-0.7"], &d.path().join("one"));
    assert!(o.status.success());
    assert_eq!(json(&d.path().join("one/report.json"))["per_arc_counts"].as_array().unwrap().len(), 3);
    let o = jrh(&["zeros", "--n", "100", "--alpha", "-70", "--beta", "-79.99999"], &d.path().join("int"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("multiplicity"));
}

#[test]
fn converge_routes_and_skips() {
    let d = tempfile::tempdir().unwrap();
    let o = jrh(&["converge", "--A", "-0.6913", "--B", "-0.8071", "--ns", "40,80"], &d.path().join("g"));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = json(&d.path().join("g/convergence.json"));
    let rows = s["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 16);
    for r in rows {
        let p = r["point"].as_str().unwrap();
        let f = r["formula"].as_str().unwrap();
        if p.starts_with("near_zeta_minus") {
            assert_eq!(f, "local_minus");
        } else {
            assert_eq!(f, format!("outer_{}", p.trim_start_matches("domain_")));
        }
    }
    for (_, ord) in s["fitted_order"].as_array().unwrap().iter().map(|v| (v[0].clone(), v[1].as_f64().unwrap())) {
        assert!((0.5..=1.5).contains(&ord), "{ord}");
    }
    // (A+B)·40 = -60 for the default pair
    let o = jrh(&["converge", "--ns", "40"], &d.path().join("r"));
    assert!(o.status.success());
    let csv = fs::read_to_string(d.path().join("r/convergence.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.contains("skipped")));
}

#[test]
fn env_overrides_flags() {
    let d = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_jrh"))
        .args(["zeros", "--alpha", "-3.499", "--beta", "-4.2", "--out"])
        .arg(d.path())
        .env("JRH_N", "5")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&d.path().join("report.json"))["n"], 5);
}

#[test]
fn phase_and_asym_tables() {
    let d = tempfile::tempdir().unwrap();
    let o = jrh(&["phase", "eval", "--z", "-6,1", "--samples", "2", "--seed", "3"], &d.path().join("p"));
    assert!(o.status.success());
    assert_eq!(fs::read_to_string(d.path().join("p/phase.csv")).unwrap().lines().count(), 4);
    let o = jrh(&["asym", "compare", "--A", "-0.6913", "--B", "-0.8071", "--n", "80", "--z", "-6,1"], &d.path().join("a"));
    assert!(o.status.success());
    let csv = fs::read_to_string(d.path().join("a/asym.csv")).unwrap();
    let rel: f64 = csv.lines().nth(1).unwrap().rsplit(',').next().unwrap().parse().unwrap();
    assert!(rel < 1e-2, "{rel}");
}
