use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_orbitframe"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("orbitframe-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn dyadic_text() -> String {
    std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/dyadic_1d.toml")).unwrap()
}

/// The dyadic scenario without its frame stage, for quick runs.
fn dyadic_certificates_only() -> String {
    let text = dyadic_text();
    text[..text.find("[frame]").unwrap()].to_string()
}

#[test]
fn list_rows_filter_and_json() {
    let o = run(&["list"]);
    assert_eq!(code(&o), 0);
    let out = String::from_utf8(o.stdout).unwrap();
    assert_eq!(out.lines().count(), 1 + 6);
    for name in ["dyadic_1d", "similitude_2d", "lorentz_an_n2", "glsym_n2_p1", "glsym_n3_p1", "sl2_remark"] {
        assert!(out.contains(name), "{name}");
    }
    let o = run(&["list", "lorentz"]);
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 2);
    let o = run(&["list", "--json"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 6);
}

#[test]
fn dyadic_run_is_tight_and_deterministic() {
    let a = scratch("dyadic-a");
    let b = scratch("dyadic-b");
    let o = run(&["run", "--scenario", "dyadic_1d", "--out", a.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let o = run(&["--threads", "1", "run", "--scenario", "dyadic_1d", "--out", b.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let ra = std::fs::read(a.join("report.json")).unwrap();
    let rb = std::fs::read(b.join("report.json")).unwrap();
    assert_eq!(ra, rb);
    let r = report(&a);
    let vol = r["frame"]["volume"].as_f64().unwrap();
    assert_eq!(vol, 1.0);
    for k in ["a_emp", "b_emp"] {
        assert!((r["empirical"][k].as_f64().unwrap() - vol).abs() <= 1e-6);
    }
    assert_eq!(r["outcome"], "verified");
    let csv = std::fs::read_to_string(a.join("bounds.csv")).unwrap();
    assert!(csv.starts_with("quantity,index,value\n"));
    assert!(csv.contains("\na_pred,,1\n") && csv.contains("\nb_pred,,3\n"));
    let heat = std::fs::read_to_string(a.join("covering_heatmap.csv")).unwrap();
    assert_eq!(heat.lines().count(), 1 + 4096);
}

#[test]
fn seed_changes_probes_only() {
    let dir = scratch("seeded");
    let o = run(&["run", "--scenario", "dyadic_1d", "--seed", "99", "--out", dir.to_str().unwrap(), "--json"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["seed"], 99);
    assert_eq!(v, report(&dir));
}

#[test]
fn overlapping_annulus_exits_2_with_witness() {
    let dir = scratch("violated");
    // [1, 2.5] meets 2 [1, 2.5]
    let text = dyadic_certificates_only().replace("inner = 1.0, outer = 1.5", "inner = 1.0, outer = 2.5");
    let path = dir.join("s.toml");
    std::fs::write(&path, text).unwrap();
    let o = run(&["run", "--scenario", path.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let r = report(&dir);
    let w = &r["separation"]["status"]["witness"]["pair"];
    let (i, j) = (w[0].as_u64().unwrap(), w[1].as_u64().unwrap());
    assert_eq!(i.abs_diff(j), 1);
    assert_eq!(r["separation_counterpart"]["status"]["status"], "violated");
}

#[test]
fn failed_epsilon_search_is_inconclusive() {
    let dir = scratch("inconclusive");
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/lorentz_an_n2.toml")).unwrap();
    // the avoidance bound needs eps < 1/16, so stopping at 1/2 finds nothing
    let text = text.replace("[separation.bq]\n", "[separation.bq]\neps_min = 0.5\n");
    let path = dir.join("s.toml");
    std::fs::write(&path, text).unwrap();
    let o = run(&["run", "--scenario", path.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(report(&dir)["outcome"], "inconclusive");
}

#[test]
fn normalize_prints_canonical_text() {
    let o = run(&["normalize", "--scenario", "lorentz_an_n2"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(orbitframe_cli::normalize(&text).unwrap(), text);
}

#[test]
fn parse_and_io_errors_exit_1() {
    let dir = scratch("errors");
    let o = run(&["run", "--scenario", dir.join("missing.toml").to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let path = dir.join("bad.toml");
    std::fs::write(&path, dyadic_certificates_only().replace("n = 1", "n = [1")).unwrap();
    let o = run(&["run", "--scenario", path.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("bad.toml:9:"), "{err}");
    // a lattice window with the wrong number of axes is rejected before running
    std::fs::write(&path, dyadic_certificates_only().replace("a_range = [[-8, 8]]", "a_range = [[-8, 8], [0, 1]]")).unwrap();
    let o = run(&["run", "--scenario", path.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
}

#[test]
fn verify_identities_table_and_json() {
    let o = run(&["verify-identities", "--family", "lorentz_an", "--json"]);
    assert_eq!(code(&o), 0);
    let rows: Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = rows.as_array().unwrap();
    assert!(rows.iter().all(|r| r["pass"] == true));
    let conj = rows.iter().find(|r| r["identity"].as_str().unwrap().starts_with("a n(x)")).unwrap();
    assert_eq!(conj["samples"], 1000);
    assert!(conj["max_residual"].as_f64().unwrap() <= 1e-10);

    let o = run(&["verify-identities", "--family", "triangular_q", "--json"]);
    let rows: Value = serde_json::from_slice(&o.stdout).unwrap();
    let bracket = rows
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["family"] == "triangular_q n=4" && r["identity"].as_str().unwrap().starts_with("[d(t)"))
        .unwrap();
    assert_eq!(bracket["max_residual"].as_f64().unwrap(), 0.0);

    let o = run(&["verify-identities"]);
    assert_eq!(code(&o), 0);
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.contains("0 failed"));
    for f in ["similitude", "lorentz_an", "triangular_q", "sl2_lower"] {
        assert!(out.contains(f));
    }
    assert_eq!(code(&run(&["verify-identities", "--family", "nope"])), 1);
}

#[test]
fn emit_grid_outputs() {
    let dir = scratch("emit");
    let o = run(&["emit-grid", "--scenario", "dyadic_1d", "--index", "9", "--mode", "0", "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.join("frame_vector.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("w0,re,im,abs"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 16380);
    // the dilation 2^1 atom is 2^{-1/2} on [2, 4]
    for r in &rows {
        let want = if (2.0..=4.0).contains(&r[0]) { 0.5f64.sqrt() } else { 0.0 };
        assert!((r[3] - want).abs() < 1e-12);
    }
    let o = run(&["emit-grid", "--scenario", "sl2_remark", "--what", "covering", "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(dir.join("covering_heatmap.csv")).unwrap();
    assert!(csv.starts_with("x0,x1,multiplicity\n"));
    let o = run(&["emit-grid", "--scenario", "sl2_remark", "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
}
