use std::path::Path;
use std::process::Command;

use extcop::constructions::{permutation_copula, tent_copula, PermutationCopulaSpec};
use extcop::copula::dinf_distance;
use extcop::io;
use extcop::rational::ratio;
use extcop::{CopulaModel, GridDensity, GridSpec};
use serde_json::Value;

fn extcop(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_extcop")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn tent_validates() {
    let dir = tempfile::tempdir().unwrap();
    let tent = dir.path().join("tent.json");
    let (code, _, _) = extcop(&["gen", "tent", "--t", "1/2", "--out", p(&tent)]);
    assert_eq!(code, 0);
    let (code, out, _) = extcop(&["validate", "--measure", p(&tent), "--m", "100"]);
    assert_eq!(code, 0);
    assert_eq!(json(&out)["ok"], true);
    assert_eq!(json(&out)["version"], "1.0");
}

#[test]
fn distance_pi_m() {
    let (code, out, _) = extcop(&["dist", "--a", "pi", "--b", "m", "--r", "64"]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["estimate"].as_f64().unwrap(), 0.25);
    // Same number as the library call.
    let lib = dinf_distance(
        &CopulaModel::independence(2).unwrap(),
        &CopulaModel::comonotone(2).unwrap(),
        64,
    )
    .unwrap();
    assert_eq!(v["certified_bound"].as_f64().unwrap(), lib.certified_bound);
}

#[test]
fn perm_then_validate_and_cover() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = extcop(&["gen", "perm", "--m", "3", "--perm", "2=2,1,0"]);
    assert_eq!(code, 0);
    let f = dir.path().join("p.json");
    std::fs::write(&f, &out).unwrap();
    let lib = permutation_copula(&PermutationCopulaSpec::new(3, vec![vec![2, 1, 0]]).unwrap()).unwrap();
    assert_eq!(io::load_segment_measure(&out).unwrap(), lib);
    assert_eq!(extcop(&["validate", "--measure", p(&f), "--m", "3"]).0, 0);
    let (code, out, _) = extcop(&["analyze", "cover", "--measure", p(&f), "--r", "4"]);
    assert_eq!(code, 0);
    assert_eq!(json(&out)["covered"], true);
}

#[test]
fn failed_validation_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let tent = dir.path().join("tent.json");
    std::fs::write(&tent, io::save_segment_measure(&tent_copula(&ratio(1, 3), 2).unwrap())).unwrap();
    assert_eq!(extcop(&["validate", "--measure", p(&tent), "--m", "9"]).0, 0);
    // A single diagonal of the lower-left quarter with all the mass is not a copula.
    let bad = r#"{"version":"1.0","n":2,"segments":[{"a":["0","0"],"b":["1/2","1/2"],"w":"1"}]}"#;
    let f = dir.path().join("bad.json");
    std::fs::write(&f, bad).unwrap();
    let (code, out, _) = extcop(&["validate", "--measure", p(&f), "--m", "2"]);
    assert_eq!(code, 1);
    assert_eq!(json(&out)["ok"], false);
}

#[test]
fn usage_errors_exit_two() {
    let (code, _, err) = extcop(&["approx", "--bogus"]);
    assert_eq!(code, 2);
    assert!(err.contains("Usage"));
    let (code, _, err) = extcop(&["optimize", "--marginals", "uniform:0,1", "uniform:0,1", "--g", "x1*"]);
    assert_eq!(code, 2);
    assert!(err.contains("column 4"), "{err}");
    assert_eq!(extcop(&["validate", "--measure", "/nonexistent.json", "--m", "2"]).0, 2);
    assert_eq!(extcop(&["--help"]).0, 0);
}

#[test]
fn domain_errors_exit_one() {
    assert_eq!(extcop(&["gen", "tent", "--t", "2"]).0, 1);
    assert_eq!(extcop(&["dist", "--a", "w", "--b", "pi", "--r", "4", "--n", "3"]).0, 1);
}

#[test]
fn checkerboard_needs_refinement() {
    let dir = tempfile::tempdir().unwrap();
    let board = GridDensity::new(
        GridSpec::new(2, 2).unwrap(),
        vec![ratio(2, 1), ratio(0, 1), ratio(0, 1), ratio(2, 1)],
    )
    .unwrap();
    let f = dir.path().join("board.json");
    std::fs::write(&f, io::pretty(&io::density_to_json(&board))).unwrap();
    let (code, _, err) = extcop(&["analyze", "decompose", "--density", p(&f), "--scale", "1"]);
    assert_eq!(code, 1);
    assert!(err.contains("1/2"), "{err}");
    let (code, out, _) = extcop(&["analyze", "decompose", "--density", p(&f), "--scale", "1/2"]);
    assert_eq!(code, 0);
    assert!(json(&out).get("h1").is_some());
    let (code, out, _) = extcop(&["analyze", "extremality", "--measure", p(&f)]);
    assert_eq!(code, 0);
    assert_eq!(json(&out)["verdict"], "NOT_EXTREME");
}

#[test]
fn approx_writes_both_files() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let (code, _, _) = extcop(&["approx", "--copula", "pi", "--m", "8", "--out-dir", p(&out_dir)]);
    assert_eq!(code, 0);
    let report = json(&std::fs::read_to_string(out_dir.join("report.json")).unwrap());
    assert!(report["lattice_dinf"].as_f64().unwrap() <= 0.625);
    let measure = out_dir.join("segment-measure.json");
    let (code, csv, _) = extcop(&["plot-data", "--measure", p(&measure)]);
    assert_eq!(code, 0);
    assert_eq!(csv.lines().count(), 65);
    let (code, out, _) = extcop(&["analyze", "cover", "--measure", p(&measure), "--r", "8"]);
    assert_eq!(code, 0);
    assert_eq!(json(&out)["covered"], true);
}

#[test]
fn optimize_with_witness() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w.json");
    let (code, out, _) = extcop(&[
        "optimize", "--marginals", "uniform:0,1", "uniform:0,1", "--g-builtin", "product", "--k", "16", "--sense",
        "min", "--witness", p(&w),
    ]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert!((v["value"].as_f64().unwrap() - 1.0 / 6.0).abs() < 0.01);
    assert_eq!(v["solver"], "exact");
    assert_eq!(extcop(&["validate", "--measure", p(&w), "--m", "16"]).0, 0);
}

#[test]
fn tabulated_marginal_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.csv");
    std::fs::write(&t, "p,x\n0,0\n1,1\n").unwrap();
    let spec = format!("table:{}", p(&t));
    let (code, out, err) = extcop(&["match-prob", "--fx", &spec, "--fy", "uniform:0,1", "--schedule", "0.25:16"]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(json(&out)["estimate"].as_f64().unwrap(), 1.0);
}

#[test]
fn sampling_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let tent = dir.path().join("tent.json");
    extcop(&["gen", "tent", "--t", "1/2", "--out", p(&tent)]);
    let a = extcop(&["sample", "--measure", p(&tent), "--count", "20", "--seed", "3"]).1;
    let b = extcop(&["sample", "--measure", p(&tent), "--count", "20", "--seed", "3"]).1;
    let c = extcop(&["sample", "--measure", p(&tent), "--count", "20", "--seed", "4"]).1;
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(a.lines().count(), 20);
}

#[test]
fn config_file_supplies_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[dist]\na = \"pi\"\nb = \"m\"\nr = 8\n").unwrap();
    let (code, out, _) = extcop(&["--config", p(&cfg), "dist", "--r", "64"]);
    assert_eq!(code, 0);
    assert_eq!(json(&out)["resolution"], 64);
    assert_eq!(json(&out)["estimate"].as_f64().unwrap(), 0.25);
}

#[test]
fn map_checks_and_graph() {
    let dir = tempfile::tempdir().unwrap();
    let dbl = dir.path().join("dbl.json");
    std::fs::write(
        &dbl,
        r#"{"breakpoints":["0","1/2","1"],"pieces":[{"coord":2,"slope":"2","intercept":"0"},{"coord":2,"slope":"2","intercept":"-1"}]}"#,
    )
    .unwrap();
    let (code, out, _) = extcop(&["check", "mp", "--map", p(&dbl), "--r", "1024"]);
    assert_eq!(code, 0);
    assert_eq!(json(&out)["ok"], true);
    let sq = dir.path().join("sq.json");
    std::fs::write(&sq, r#"{"power":[2.0]}"#).unwrap();
    let (code, out, _) = extcop(&["check", "mp", "--map", p(&sq), "--r", "4"]);
    assert_eq!(code, 1);
    assert!((json(&out)["max_deviation"].as_f64().unwrap() - 0.25).abs() < 1e-12);
    let (code, out, _) = extcop(&["gen", "graph", "--map", p(&dbl)]);
    assert_eq!(code, 0);
    assert_eq!(io::load_segment_measure(&out).unwrap().segments().len(), 2);
}

#[test]
fn in_process_run_matches_binary() {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let args = ["extcop", "gen", "fourline3d"].map(String::from).to_vec();
    assert_eq!(extcop_cli::run(args, &mut out, &mut err), 0);
    assert_eq!(String::from_utf8(out).unwrap(), extcop(&["gen", "fourline3d"]).1);
}
