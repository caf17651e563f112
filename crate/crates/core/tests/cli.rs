use std::process::Command;

use arcext::cli::{run_to, CACHE_ENV};
use arcext::QPoly;
use serde_json::Value;

fn run(args: &[&str]) -> (i32, String) {
    let argv: Vec<String> = std::iter::once("arcext").chain(args.iter().copied()).map(String::from).collect();
    let mut out = String::new();
    let code = run_to(&argv, &mut out);
    (code, out)
}

fn ok(args: &[&str]) -> String {
    let (code, out) = run(args);
    assert_eq!(code, 0, "{args:?} failed:\n{out}");
    out
}

#[test]
fn klpoly_example() {
    assert_eq!(ok(&["klpoly", "-m", "4", "-n", "2", "--lambda", "vvvv^^", "--mu", "v^vv^v"]).trim(), "q^4 + q^2");
    let j = ok(&["klpoly", "-m", "4", "-n", "2", "--lambda", "vvvv^^", "--mu", "v^vv^v", "--format", "json"]);
    let v: Value = serde_json::from_str(&j).unwrap();
    assert_eq!(v["recursive"], v["closed"]);
    let p: QPoly = v["closed"].as_str().unwrap().parse().unwrap();
    assert_eq!(p.to_string(), "q^4 + q^2");
}

#[test]
fn index_shorthand_matches_strings() {
    let a = ok(&["klpoly", "-m", "4", "-n", "2", "--kl", "5,4", "--mu", "4,1"]);
    let b = ok(&["klpoly", "-m", "4", "-n", "2", "--lambda", "vvvv^^", "--mu", "v^vv^v"]);
    assert_eq!(a, b);
    let c = ok(&["decomp", "-m", "2", "-n", "1", "--j", "1", "--mu", "0"]);
    let d = ok(&["decomp", "-m", "2", "-n", "1", "--lambda", "v^v", "--mu", "^vv"]);
    assert_eq!(c, d);
    assert_eq!(c.trim(), "q");
}

#[test]
fn extdim_total_with_oracles() {
    let out = ok(&["extdim", "-m", "3", "-n", "1", "--all", "--oracle", "shelton"]);
    assert!(out.contains("total dimension: 16"), "{out}");
    assert!(out.contains("oracle agrees: yes"));
    let out = ok(&["extdim", "-m", "3", "-n", "1", "--all", "--oracle", "closed"]);
    assert!(out.contains("total dimension: 16"));
    let v: Value =
        serde_json::from_str(&ok(&["extdim", "-m", "2", "-n", "2", "--all", "--oracle", "shelton", "--format", "json"])).unwrap();
    assert_eq!(v["oracle_agrees"], Value::Bool(true));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["klpoly", "-m", "4"]).0, 2);
    assert_eq!(run(&["frobnicate"]).0, 2);
    assert_eq!(run(&["klpoly", "-m", "4", "-n", "2", "--lambda", "vvxv^^", "--mu", "v^vv^v"]).0, 2);
    assert_eq!(run(&["klpoly", "-m", "4", "-n", "2", "--lambda", "vvvv^^"]).0, 2);
    assert_eq!(run(&["render", "--diagram", "garbage"]).0, 2);
    assert_eq!(run(&["ainfty", "-m", "2", "-n", "2", "--mode", "bogus"]).0, 2);
    assert_eq!(run(&["extdim", "-m", "2", "-n", "1", "--all", "--format", "xml"]).0, 2);
}

#[test]
fn domain_errors_exit_one() {
    assert_eq!(run(&["klpoly", "-m", "4", "-n", "2", "--lambda", "vvv^^", "--mu", "v^vv^v"]).0, 1);
    assert_eq!(run(&["klpoly", "-m", "4", "-n", "2", "--j", "1", "--mu", "v^vv^v"]).0, 1);
    assert_eq!(run(&["multtable", "-m", "3", "-n", "1"]).0, 1);
    assert_eq!(run(&["extdim", "-m", "2", "-n", "2", "--all", "--oracle", "closed"]).0, 1);
}

#[test]
fn help_and_version_exit_zero() {
    let (code, out) = run(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("klpoly") && out.contains("ainfty"));
    assert_eq!(run(&["--version"]).0, 0);
}

#[test]
fn json_parse_emit_parse_is_a_fixpoint() {
    for args in [
        &["basis", "-m", "2", "-n", "1", "--format", "json"][..],
        &["cartan", "-m", "2", "-n", "2", "--format", "json"],
        &["resolve", "-m", "3", "-n", "2", "--kl", "3,1", "--format", "json"],
        &["extbasis", "-m", "3", "-n", "2", "--kl", "3,1", "--mu", "2,0", "--format", "json"],
        &["quiver", "-m", "2", "-n", "2", "--format", "json"],
        &["ainfty", "-m", "2", "-n", "2", "--mode", "canonical", "--max-arity", "4", "--format", "json"],
    ] {
        let out = ok(args);
        let v: Value = serde_json::from_str(&out).unwrap();
        let again: Value = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
        assert_eq!(v, again, "{args:?}");
        assert_eq!(format!("{}\n", serde_json::to_string_pretty(&again).unwrap()), out);
    }
}

#[test]
fn ainfty_report_lines() {
    let out = ok(&["ainfty", "-m", "2", "-n", "2", "--mode", "canonical", "--max-arity", "5", "--stasheff", "4"]);
    let first = out.lines().next().unwrap();
    assert!(first.starts_with("m3: nonzero"), "{out}");
    assert!(first.ends_with("m4: 0, m5: 0"), "{out}");
    assert!(out.contains("Stasheff violations: 0"));
    let out = ok(&["ainfty", "-m", "3", "-n", "1", "--mode", "labelled", "--max-arity", "5"]);
    assert_eq!(out.lines().next().unwrap(), "m3: 0, m4: 0, m5: 0");
}

#[test]
fn cold_and_warm_cache_agree() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let args = ["extdim", "-m", "3", "-n", "2", "--all", "--cache", d];
    let cold = ok(&args);
    assert!(std::fs::read_dir(dir.path()).unwrap().next().is_some(), "cache directory stays empty");
    let warm = ok(&args);
    assert_eq!(cold, warm);
    assert_eq!(cold, ok(&args[..args.len() - 2]));
}

#[test]
fn binary_exit_codes_and_cache_env() {
    let bin = env!("CARGO_BIN_EXE_arcext");
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(bin)
        .args(["resolve", "-m", "2", "-n", "1", "--lambda", "vv^"])
        .env(CACHE_ENV, dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("verified: yes"));
    assert!(std::fs::read_dir(dir.path()).unwrap().next().is_some());
    let out = Command::new(bin).args(["klpoly", "-m", "1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    let out = Command::new(bin).args(["klpoly", "-m", "1", "-n", "1", "--lambda", "vvv", "--mu", "^v"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));
}

#[test]
fn render_writes_svg() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.svg");
    let d = "cups=(0,1) rays= | v^ | caps=(0,1) rays=";
    ok(&["render", "--x", d, "--y", d, "-o", p.to_str().unwrap()]);
    let svg = std::fs::read_to_string(&p).unwrap();
    assert!(svg.starts_with("<?xml"));
    assert_eq!(arcext::render::panel_count(&svg), 3);
    let out = ok(&["render", "--diagram", d]);
    assert_eq!(out.matches("class=\"cup\"").count(), 1);
}

#[test]
fn multiply_idempotent() {
    let d = "cups=(0,1) rays= | v^ | caps=(0,1) rays=";
    let v: Value = serde_json::from_str(&ok(&["multiply", "-m", "1", "-n", "1", "--x", d, "--y", d, "--format", "json"])).unwrap();
    assert_eq!(v["product"], serde_json::json!([{"coefficient": "1", "diagram": d}]));
}
