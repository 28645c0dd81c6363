use std::fs;
use std::process::{Command, Output};

fn aggdiff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aggdiff")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn constants_for_the_power_law() {
    let out = aggdiff(&["constants", "--m", "3"]);
    assert!(out.status.success());
    let v = json(&out);
    assert!((v["theta"].as_f64().unwrap() - 0.5).abs() < 1e-12, "{v}");
    let out = aggdiff(&["constants", "--law", "hard-sphere"]);
    let v = json(&out);
    assert_eq!(v["theta"].as_f64(), Some(1.0));
    assert!((v["gamma"].as_f64().unwrap() - 0.25).abs() < 1e-9, "{v}");
}

#[test]
fn bad_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "[scenario]\nid = x\ntier = pde\n[model]\nm = banana\n").unwrap();
    let out = aggdiff(&["run", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 5"));
}

#[test]
fn solver_error_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("leak.cfg");
    fs::write(
        &cfg,
        "[scenario]\nid = leak\ntier = pde\n[model]\nm = 2\ninteraction = 0\n\
         [grid]\ncells = 50\nleft = -1\nright = 1\nbc = whole_line\n[initial]\nwidth = 2\n",
    )
    .unwrap();
    let out = aggdiff(&["run", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("scenario leak"));
}

#[test]
fn energy_of_a_stored_field() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("chi.csv");
    let n = 4000;
    let h = 2.0 / n as f64;
    let mut text = String::from("x_center,rho\n");
    for k in 0..n {
        let x = -0.5 + (k as f64 + 0.5) * h;
        text.push_str(&format!("{x},{}\n", if (0.0..1.0).contains(&x) { 1.0 } else { 0.0 }));
    }
    fs::write(&csv, text).unwrap();
    let out = aggdiff(&["energy", csv.to_str().unwrap(), "--law", "hard-sphere", "--eps", "0.02"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    // two interfaces of the unit plateau, γ = 1/4 each
    assert!((json(&out)["total"].as_f64().unwrap() - 0.5).abs() < 1e-3);
}

#[test]
fn run_writes_readable_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("plateau.cfg");
    fs::write(
        &cfg,
        "[scenario]\nid = plateau\ntier = pde\nt_end = 0.01\n\
         [grid]\ncells = 400\nleft = -1\nright = 1\n[pde]\neps = 0.05\nscheme = semi_implicit\n\
         [initial]\nkind = plateau\n",
    )
    .unwrap();
    let out = aggdiff(&["run", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let snap = dir.path().join("plateau").join("snapshot_001.csv");
    let out = aggdiff(&["energy", snap.to_str().unwrap(), "--eps", "0.05"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(json(&out)["total"].as_f64().unwrap().is_finite());
}

#[test]
fn sweep_reports_its_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.cfg");
    fs::write(
        &cfg,
        "[scenario]\nid = s\ntier = pde\nt_end = 0.005\n[grid]\ncells = 60\n\
         [sweep]\nkey = model.m\nvalues = 2, 3\n",
    )
    .unwrap();
    let out = aggdiff(&["sweep", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--workers", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(dir.path().join("s").join("sweep_summary.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
    // a sweep file is not a single run
    let out = aggdiff(&["run", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_constants_suite() {
    let out = aggdiff(&["verify", "constants"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("PASS [ 1]"), "{text}");
    assert_eq!(aggdiff(&["verify", "nonsense"]).status.code(), Some(2));
}
