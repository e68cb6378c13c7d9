use std::path::Path;
use std::process::{Command, Output};

fn repbf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_repbf")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn manifest(p: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(p).to_str().unwrap().to_string()
}

#[test]
fn exit_codes() {
    assert_eq!(repbf(&["analyze", "--study", "3,2.5,1"]).status.code(), Some(0));
    assert_eq!(repbf(&["analyze", "--study", "3,2.5"]).status.code(), Some(1));
    assert_eq!(repbf(&["analyze", "--input", "/nonexistent/x.csv"]).status.code(), Some(1));
    assert_eq!(repbf(&["analyze", "--tol=0", "--study", "3,2.5,1"]).status.code(), Some(1));
    let o = repbf(&["analyze", "--tol=1e-300", "--study", "3,2.5,1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bracket"));
    assert_eq!(repbf(&["--help"]).status.code(), Some(0));
}

#[test]
fn malformed_input_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.csv");
    std::fs::write(&p, "label,z_o,z_r,c\nok,3,2.5,1\nbad,3,x,1\n").unwrap();
    let o = repbf(&["analyze", "--input", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn contours_write_both_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = repbf(&["contours", "--z-o", "3", "--gamma", "0.19", "--resolution", "20", "--out-dir", d]);
    assert!(o.status.success());
    let grid = std::fs::read_to_string(dir.path().join("conflict_grid.csv")).unwrap();
    assert_eq!(grid.lines().count(), 401);
    let trace = std::fs::read_to_string(dir.path().join("u_gamma.csv")).unwrap();
    assert!(trace.lines().count() > 10);

    let o = repbf(&["contours", "--z-o", "1", "--gamma", "0.5", "--resolution", "10", "--out-dir", d]);
    assert!(o.status.success());
    let trace = std::fs::read_to_string(dir.path().join("u_gamma.csv")).unwrap();
    assert_eq!(trace.trim(), "h,psi,p_conflict");
}

#[test]
fn curves_respect_orderings() {
    let o = repbf(&["curves", "--study", "3,2.5,1", "--points", "50", "--spacing", "log", "--grid-min", "0.01"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("g,bf_0s,bf_sa,bf_r,psi,bf_0sm,bf_sma"));
    let mut rows = 0;
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap_or(f64::NAN)).collect();
        let (bf_sa, bf_r, bf_sma) = (v[2], v[3], v[6]);
        assert!(bf_sma >= bf_sa.min(bf_r) * (1.0 - 1e-12) && bf_sma <= bf_sa.max(bf_r) * (1.0 + 1e-12));
        assert!(v[5] >= v[1] * (1.0 - 1e-12), "mixture BF_0 evidence at least the skeptical one");
        rows += 1;
    }
    assert_eq!(rows, 50);
}

#[test]
fn bf_vs_alpha_falls_back_beyond_reach() {
    let o = repbf(&["bf-vs-alpha", "--study", "3,2.5,1", "--alpha", "0.99"]);
    assert!(o.status.success());
    let row = stdout(&o).lines().nth(1).unwrap().to_string();
    let v: Vec<&str> = row.split(',').collect();
    assert!(v[2].starts_with("fallback"));
    assert_eq!(v[1], v[6]);
}

#[test]
fn simulate_is_reproducible() {
    let scn = manifest("scenarios/bfsa-limit.toml");
    let a = repbf(&["simulate", &scn, "--seed", "9"]);
    let b = repbf(&["simulate", &scn, "--seed", "9"]);
    let c = repbf(&["simulate", &scn, "--seed", "10"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let j = repbf(&["simulate", &scn, "--format", "jsonl"]);
    let v: serde_json::Value = serde_json::from_str(stdout(&j).lines().next().unwrap()).unwrap();
    assert_eq!(v["n_values"].as_array().unwrap().len(), 9);
}

#[test]
fn jsonl_has_one_record_per_study() {
    let o = repbf(&["analyze", "--input", &manifest("data/ssrp.csv"), "--format", "jsonl"]);
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 12);
    let rand: serde_json::Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
    assert_eq!(rand["skeptical"]["outcome"], "nonexistent");
}
