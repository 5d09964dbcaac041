use std::path::PathBuf;
use std::process::{Command, Output};

use lmoment_cli::report::{emit_report, Format, Status, SuiteResult};

fn lmoment(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lmoment"))
        .args(args)
        .env_remove("LMOMENT_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("lmoment-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn schema() -> serde_json::Value {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/schema/suite-report.schema.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn quick_profile_passes_and_matches_schema() {
    let o = lmoment(&["suite", "--profile", "quick", "--json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    let validator = jsonschema::validator_for(&schema()).unwrap();
    let errors: Vec<String> = validator.iter_errors(&v).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}");
    let r: SuiteResult = serde_json::from_value(v).unwrap();
    assert_eq!(r.verdict, Status::Pass);
    assert!(r.checks.iter().all(|c| !c.required || c.status == Status::Pass));

    // loading and re-emitting reproduces the bytes
    let again = emit_report(&r, Format::Json).unwrap();
    assert_eq!(again, o.stdout);
}

#[test]
fn corrupted_golden_fails_exactly_that_check() {
    let shipped: serde_json::Value =
        serde_json::from_str(include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/goldens.json"))).unwrap();
    let mut bad = shipped.clone();
    let x = bad["residues.p_same_3"][2].as_f64().unwrap();
    bad["residues.p_same_3"][2] = serde_json::json!(x * (1.0 + 1e-4));
    let path = tmp("goldens-bad.json");
    std::fs::write(&path, serde_json::to_string(&bad).unwrap()).unwrap();

    let base = lmoment(&["suite", "--only", "residues,shiftconv", "--json"]);
    let o = lmoment(&["suite", "--only", "residues,shiftconv", "--json", "--goldens", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let before: SuiteResult = serde_json::from_slice(&base.stdout).unwrap();
    let after: SuiteResult = serde_json::from_slice(&o.stdout).unwrap();
    let failed = |r: &SuiteResult| -> Vec<String> {
        r.checks.iter().filter(|c| c.status == Status::Fail).map(|c| c.name.clone()).collect()
    };
    assert!(failed(&before).is_empty());
    assert_eq!(failed(&after), vec!["residues.golden_p_same_3".to_string()]);
    let c = after.check("residues.golden_p_same_3").unwrap();
    assert!((c.residual - 1e-4).abs() < 2e-8);
}

#[test]
fn tolerance_overrides_are_bounded() {
    let ok = lmoment(&["suite", "--only", "residues.ingham", "--tol", "residues.ingham=1e-14"]);
    assert!(ok.status.success());
    assert!(stdout(&ok).contains("tol=1.000000000000e-14"));
    let loose = lmoment(&["suite", "--only", "residues.ingham", "--tol", "residues.ingham=1e-10"]);
    assert_eq!(loose.status.code(), Some(2));
    let fixed = lmoment(&["suite", "--only", "fe", "--tol", "fe.afe_median_decreasing=2"]);
    assert_eq!(fixed.status.code(), Some(2));
    let unknown = lmoment(&["suite", "--tol", "no.such.check=1"]);
    assert_eq!(unknown.status.code(), Some(2));
}

#[test]
fn reports_identical_across_thread_counts() {
    let a = lmoment(&["--threads", "1", "suite", "--only", "identities.k_,residues", "--json"]);
    let b = Command::new(env!("CARGO_BIN_EXE_lmoment"))
        .args(["suite", "--only", "identities.k_,residues", "--json"])
        .env("LMOMENT_THREADS", "3")
        .output()
        .unwrap();
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn csv_and_human_formats() {
    let c = lmoment(&["suite", "--only", "residues", "--format", "csv"]);
    let text = stdout(&c);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "name,criterion,required,status,residual,tolerance,citation");
    assert!(lines.all(|l| l.starts_with("residues.")));
    let h = lmoment(&["suite", "--only", "residues.ingham"]);
    assert!(stdout(&h).contains("[Ingham's constant 1/(2π²) for ζ]"));
}

#[test]
fn characters_subcommand() {
    let o = lmoment(&["characters", "--modulus", "12", "--primitive"]);
    let v = json(&o);
    let list = v.as_array().unwrap();
    assert_eq!(list.len(), 1);
    assert_eq!(list[0]["conductor"], 12);
    let all = json(&lmoment(&["characters", "--modulus", "7"]));
    assert_eq!(all.as_array().unwrap().len(), 6);
}

#[test]
fn expsum_subcommands() {
    let v = json(&lmoment(&["expsum", "kloosterman", "--m", "1", "--n", "1", "--c", "3"]));
    assert!((v["value"][0].as_f64().unwrap() + 1.0).abs() < 1e-12);
    let v = json(&lmoment(&["expsum", "ramanujan", "--q", "12", "--h", "6"]));
    assert_eq!(v["value"].as_f64().unwrap(), -4.0);
    let v = json(&lmoment(&["expsum", "avg-kloosterman", "--q0", "5", "--m", "0", "--n", "0", "--c", "5"]));
    assert!(v["value"].as_f64().unwrap().is_finite());
    let o = lmoment(&["expsum", "verify-lemma421", "--grid", "5,12,2"]);
    assert!(o.status.success());
    assert_eq!(json(&o)["status"], "PASS");
}

#[test]
fn lfunc_and_series_subcommands() {
    let v = json(&lmoment(&["lfunc", "eval", "--char", "4:1", "--s", "1"]));
    assert!((v["value"][0].as_f64().unwrap() - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
    let v = json(&lmoment(&["lfunc", "alpha", "--char1", "3:1", "--char2", "4:1", "--s", "0.5+40i"]));
    assert!((v["abs"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    let o = lmoment(&["lfunc", "afe", "--char1", "3:1", "--char2", "3:1", "--T-range", "100,200", "--samples", "3"]);
    let text = stdout(&o);
    assert_eq!(text.lines().next().unwrap(), "t,ReL,ImL,absR");
    assert_eq!(text.lines().count(), 4);
    let v = json(&lmoment(&["series", "show", "--what", "zeta", "--order", "3"]));
    assert_eq!(v["start"], -1);
    assert!((v["coefficients"][1][0].as_f64().unwrap() - 0.5772156649015329).abs() < 1e-12);
}

#[test]
fn mainterm_subcommands() {
    let v = json(&lmoment(&["mainterm", "p-same", "--q", "3"]));
    let lead = v["leading"].as_f64().unwrap();
    assert!((lead - 1.0 / (9.0 * std::f64::consts::PI.powi(2))).abs() < 1e-12);
    let v = json(&lmoment(&["mainterm", "p-mixed", "--char1", "3:1", "--char2", "4:1"]));
    assert_eq!(v["coefficients"].as_array().unwrap().len(), 3);
    let v = json(&lmoment(&["mainterm", "dedekind", "--D", "-4"]));
    assert_eq!(v["formula"], "dedekind");
    assert_eq!(lmoment(&["mainterm", "dedekind", "--D", "16"]).status.code(), Some(2));
    let o = lmoment(&["mainterm", "verify-cancel", "--q", "3"]);
    assert!(o.status.success());
    assert!(json(&o)["residual"].as_f64().unwrap() < 1e-8);
}

#[test]
fn voronoi_subcommand() {
    let o = lmoment(&["voronoi", "verify", "--char1", "1:0", "--char2", "1:0", "--support", "10,100"]);
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["status"], "PASS");
    assert!(v["residual"].as_f64().unwrap() < 1e-6);
    assert!(v["n_dual_used"].as_u64().unwrap() > 0);
}

#[test]
fn shiftconv_subcommand() {
    let o = lmoment(&["shiftconv", "compare", "--char1", "1:0", "--char2", "1:0", "--N", "4096", "--doublings", "2"]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "N,D_bf_re,D_bf_im,D_mt_re,D_mt_im,delta,relative,normalized");
    assert_eq!(lines.len(), 3);
    assert!(lines[2].starts_with("1.638400000000e4,"));
    let bad = lmoment(&["shiftconv", "compare", "--char1", "1:0", "--char2", "1:0", "--N", "1024", "--alpha", "1000"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn moments_subcommand() {
    let out = tmp("moments.csv");
    let o = lmoment(&[
        "moments", "run", "--char1", "3:1", "--char2", "4:1", "--T-list", "40,80", "--format", "csv", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.starts_with("T,integral,main,delta"));
    assert_eq!(lmoment(&["moments", "run", "--T-list", "40"]).status.code(), Some(2));
}
