use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const FLAGSHIP: &str = "svrm:vector_based:r=separable:[entropic:beta=1,entropic:beta=1];C=entropic:K=[[1,1,0]];beta=1,1";

fn riskset(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_riskset")).args(args).env("RISKSET_THREADS", "2").output().expect("binary runs")
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn two_rows(dir: &TempDir) -> PathBuf {
    write(dir, "two.csv", "prob,X1,X2\n0.5,0,0\n0.5,-1,1\n")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("report on stdout")
}

#[test]
fn evaluate_passes_with_closed_form_values() {
    let dir = TempDir::new().unwrap();
    let csv = two_rows(&dir);
    let out = riskset(&["evaluate", "--scenarios", s(&csv), "--spec", "entropic:beta=1", "--spec", "separable:[entropic:beta=1,worst_case]"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["schema"], 1);
    let v = r["results"][0]["values"].as_array().unwrap();
    assert!((v[0].as_f64().unwrap() - 0.620115).abs() < 1e-6);
    assert!((v[1].as_f64().unwrap() - ((1.0 + (-1f64).exp()) / 2.0).ln()).abs() < 1e-12);
    let w = r["results"][1]["values"].as_array().unwrap();
    assert_eq!(w[1].as_f64().unwrap(), 0.0);
}

#[test]
fn separability_on_aggregate_exits_one_and_names_the_bullet() {
    let out = riskset(&["separability", "--spec", "aggregate_entropic:beta=1,weights=0.5,0.5", "--trials", "50"]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    let refuted = r["results"][0]["refuted"].as_array().unwrap();
    assert!(refuted.iter().any(|n| n.as_str().unwrap().starts_with("marginal domination")));
    let records = r["records"].as_array().unwrap();
    let inv = records.iter().find(|x| x["name"] == "copula invariance").unwrap();
    assert_eq!(inv["verdict"], "info");
    for rec in records {
        assert!(rec["anchor"].as_str().unwrap().contains(" / "));
        if rec["verdict"] == "fail" {
            assert!(rec["witness"].is_object());
        }
    }
    let d = r["results"][0]["coupling_z_pm1"]["discrepancy"].as_f64().unwrap();
    assert!((d - 1f64.cosh().ln()).abs() < 1e-6);
}

#[test]
fn input_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let bad_sum = write(&dir, "sum.csv", "prob,X1\n0.5,1\n0.4,2\n");
    let out = riskset(&["evaluate", "--scenarios", s(&bad_sum), "--spec", "worst_case"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let bad_header = write(&dir, "hdr.csv", "p,X1\n1,0\n");
    assert_eq!(riskset(&["evaluate", "--scenarios", s(&bad_header), "--spec", "worst_case"]).status.code(), Some(2));
    assert_eq!(riskset(&["audit", "--spec", "entropic:beta=-1"]).status.code(), Some(2));
    assert_eq!(riskset(&["audit", "--spec", "worst_case", "--trials", "0"]).status.code(), Some(2));
    assert_eq!(riskset(&["support", "--spec", "orthant:dim=2", "--grid", "2"]).status.code(), Some(2));
    assert_eq!(riskset(&["evaluate", "--spec", "worst_case"]).status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_riskset"))
        .args(["audit", "--spec", "worst_case"])
        .env("RISKSET_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reports_are_byte_identical_per_seed() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let args = |p: &Path| {
        vec!["audit".to_string(), "--spec".into(), "separable:[entropic:beta=1,avar:alpha=0.25]".into(), "--trials".into(), "80".into(), "--seed".into(), "7".into(), "--out".into(), s(p).into()]
    };
    let run = |p: &Path| Command::new(env!("CARGO_BIN_EXE_riskset")).args(args(p)).env("RISKSET_THREADS", "3").output().unwrap();
    assert_eq!(run(&a).status.code(), run(&b).status.code());
    let (ra, rb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    // only the echoed output path differs
    let strip = |bytes: &[u8], p: &Path| String::from_utf8_lossy(bytes).replace(s(p), "OUT");
    assert_eq!(strip(&ra, &a), strip(&rb, &b));
    let one = Command::new(env!("CARGO_BIN_EXE_riskset")).args(args(&a)).env("RISKSET_THREADS", "1").output().unwrap();
    assert!(one.status.code().is_some());
    assert_eq!(std::fs::read(&a).unwrap(), ra);
}

#[test]
fn support_on_flagship_classifies_the_axes() {
    let out = riskset(&["support", "--spec", "entropic:K=[[1,1,0]];beta=1,1", "--grid", "19"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let dirs = r["results"][0]["directions"].as_array().unwrap();
    assert_eq!(dirs.len(), 19);
    // the axes carry log 2 without attainment; the diagonal attains 0
    assert!((dirs[0]["sigma"].as_f64().unwrap() - 2f64.ln()).abs() < 1e-8);
    assert_eq!(dirs[0]["attained"], false);
    assert!(dirs[9]["sigma"].as_f64().unwrap().abs() < 1e-8);
}

#[test]
fn frontier_writes_csv() {
    let dir = TempDir::new().unwrap();
    let csv = two_rows(&dir);
    let path = dir.path().join("f.csv");
    let out = riskset(&["frontier", "--scenarios", s(&csv), "--spec", FLAGSHIP, "--grid", "5", "--csv", s(&path)]);
    assert_eq!(out.status.code(), Some(0));
    let body = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = body.lines().collect();
    assert_eq!(lines[0], "angle_deg,w1,w2,sigma,attain1,attain2,finite");
    assert_eq!(lines.len(), 6);
}

#[test]
fn allocate_on_flagship() {
    let dir = TempDir::new().unwrap();
    let csv = two_rows(&dir);
    let out = riskset(&["allocate", "--scenarios", s(&csv), "--spec", FLAGSHIP, "--weights", "1,1", "--trials", "20"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["results"][0]["status"], "attained");

    let out = riskset(&["allocate", "--scenarios", s(&csv), "--spec", FLAGSHIP, "--weights", "1,0", "--trials", "20"]);
    let r = report(&out);
    assert_eq!(r["results"][0]["status"], "not_attained");
    let inf = r["results"][0]["infimum"].as_f64().unwrap();
    assert!((inf - (((1.0 + 1f64.exp()) / 2.0).ln() - 2f64.ln())).abs() < 1e-8);

    let out = riskset(&["allocate", "--scenarios", s(&csv), "--spec", "svrm:aggregate_halfspace:beta=1;weights=1,1", "--trials", "20"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(report(&out)["results"][1]["hypotheses_hold"], false);
}

#[test]
fn conditional_on_a_tree() {
    let dir = TempDir::new().unwrap();
    let tree = write(
        &dir,
        "tree.json",
        r#"{"probabilities":[0.25,0.25,0.25,0.25],
            "partitions":[[[0,1,2,3]],[[0,1],[2,3]],[[0],[1],[2],[3]]],
            "X":[[1,0],[0,1],[-1,2],[2,-2]]}"#,
    );
    let out = riskset(&["conditional", "--tree", s(&tree), "--spec", "separable:[entropic:beta=1,entropic:beta=1]", "--trials", "30"]);
    assert_eq!(out.status.code(), Some(0));
    let out = riskset(&["conditional", "--tree", s(&tree), "--spec", "aggregate_entropic:beta=1,weights=0.5,0.5", "--trials", "30"]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    let sep = r["records"].as_array().unwrap().iter().find(|x| x["name"] == "conditional separability (stage 1)").unwrap().clone();
    assert_eq!(sep["verdict"], "fail");
    assert!(sep["witness"]["data"]["cell"].is_array());

    let out = riskset(&["evaluate", "--tree", s(&tree), "--spec", "separable:[worst_case,worst_case]"]);
    assert_eq!(out.status.code(), Some(0));
    let stage1 = &report(&out)["results"][0]["stages"][1]["cells"][0]["value"];
    assert_eq!(stage1[0].as_f64().unwrap(), 0.0);
}

#[test]
fn dual_reports_feasibility() {
    let dir = TempDir::new().unwrap();
    let csv = two_rows(&dir);
    let out = riskset(&["dual", "--scenarios", s(&csv), "--spec", "separable:[entropic:beta=1,entropic:beta=2]", "--trials", "20"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let c = &r["results"][0]["components"][0];
    assert_eq!(c["feasibility"]["nonpositive"], true);
    assert!(c["biconjugate_residual"].as_f64().unwrap().abs() <= 1e-9);
}
