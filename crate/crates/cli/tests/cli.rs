use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use serde_json::Value;
use ssate_core::csvio::{write_labeled, write_one_sample, write_unlabeled};
use ssate_core::oracle::DgpSpec;
use ssate_core::sim::{sample_one, sample_two};
use tempfile::TempDir;

fn ssate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ssate"))
        .args(args)
        .env_remove("SSATE_THREADS")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_d1(dir: &TempDir, n: usize, seed: u64) -> PathBuf {
    let p = path(dir, "d1.csv");
    let ds = sample_one(&DgpSpec::d1(), n, seed).unwrap();
    write_one_sample(File::create(&p).unwrap(), &ds).unwrap();
    p
}

fn write_d2(dir: &TempDir, m: usize, l: usize, seed: u64) -> (PathBuf, PathBuf) {
    let (lp, up) = (path(dir, "lab.csv"), path(dir, "unl.csv"));
    let ds = sample_two(&DgpSpec::d2(), m, l, seed).unwrap();
    write_labeled(File::create(&lp).unwrap(), ds.labeled(), ds.k()).unwrap();
    write_unlabeled(File::create(&up).unwrap(), ds.unlabeled(), ds.k()).unwrap();
    (lp, up)
}

#[test]
fn two_row_file_reports_schema_fields() {
    let dir = TempDir::new().unwrap();
    let p = path(&dir, "two.csv");
    std::fs::write(&p, "x1,o,d,y\n0,1,1,2.0\n1,1,0,1.0\n").unwrap();
    let v = json(&ssate(&[
        "estimate-os",
        "--input",
        s(&p),
        "--folds",
        "1",
        "--degree",
        "0",
    ]));
    assert_eq!(v["schema"], "ssate/v1");
    assert_eq!(v["command"], "estimate-os");
    let r = &v["report"];
    assert_eq!(r["method"], "OS-eff");
    assert!(r["tau_hat"].is_f64() && r["se"].is_f64());
    assert_eq!(r["ci"].as_array().unwrap().len(), 2);
}

#[test]
fn coupling_violation_exits_2_naming_the_row() {
    let dir = TempDir::new().unwrap();
    let p = path(&dir, "bad.csv");
    std::fs::write(&p, "x1,o,d,y\n0,1,1,2.0\n1,1,0,1.0\n0,0,1,NA\n").unwrap();
    let out = ssate(&["estimate-os", "--input", s(&p)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("row 3"), "{}", stderr(&out));
}

#[test]
fn parse_errors_carry_line_numbers() {
    let dir = TempDir::new().unwrap();
    let p = path(&dir, "bad.csv");
    std::fs::write(&p, "x1,o,d,y\n0,1,1,2.0\n1,1,0,oops\n").unwrap();
    let out = ssate(&["estimate-os", "--input", s(&p)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
}

#[test]
fn estimation_failure_exits_3() {
    let dir = TempDir::new().unwrap();
    let p = path(&dir, "tiny.csv");
    std::fs::write(&p, "x1,o,d,y\n0,1,1,2.0\n1,1,0,1.0\n").unwrap();
    let out = ssate(&["estimate-os", "--input", s(&p)]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn riesz_modes_agree_on_d1() {
    let dir = TempDir::new().unwrap();
    let p = write_d1(&dir, 4000, 21);
    for mode in ["ls-riesz", "mle-g", "kl-riesz"] {
        let v = json(&ssate(&[
            "estimate-os",
            "--input",
            s(&p),
            "--riesz-mode",
            mode,
        ]));
        let r = &v["report"];
        let (tau, se) = (r["tau_hat"].as_f64().unwrap(), r["se"].as_f64().unwrap());
        assert!((tau - 0.5).abs() <= 4.0 * se, "{mode}: {tau} +- {se}");
        assert_eq!(v["config"]["nuisance"]["riesz_mode"], mode);
    }
}

#[test]
fn missing_beta_star_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let (lp, up) = write_d2(&dir, 50, 50, 1);
    let out = ssate(&["estimate-ts", "--labeled", s(&lp), "--unlabeled", s(&up)]);
    assert_eq!(out.status.code(), Some(2));
    let msg = stderr(&out);
    assert!(
        msg.contains("--beta-star") && msg.contains("Usage:"),
        "{msg}"
    );
}

#[test]
fn ts_estimate_on_d2_files() {
    let dir = TempDir::new().unwrap();
    let (lp, up) = write_d2(&dir, 2000, 2000, 22);
    let v = json(&ssate(&[
        "estimate-ts",
        "--labeled",
        s(&lp),
        "--unlabeled",
        s(&up),
        "--beta-star",
        "0.5",
    ]));
    let r = &v["report"];
    let (tau, se) = (r["tau_hat"].as_f64().unwrap(), r["se"].as_f64().unwrap());
    assert!((tau - 0.5).abs() <= 4.0 * se, "{tau} +- {se}");
    assert_eq!(r["method"], "TS-eff");
}

#[test]
fn beta_one_ignores_unlabeled_values() {
    let dir = TempDir::new().unwrap();
    let (lp, up) = write_d2(&dir, 300, 200, 23);
    let other = path(&dir, "other.csv");
    let rows = std::fs::read_to_string(&up).unwrap().lines().count() - 1;
    let shifted = format!("x1\n{}", "0.25\n".repeat(rows));
    std::fs::write(&other, shifted).unwrap();
    let run = |u: &Path| {
        let v = json(&ssate(&[
            "estimate-ts",
            "--labeled",
            s(&lp),
            "--unlabeled",
            s(u),
            "--beta-star",
            "1",
        ]));
        (
            v["report"]["tau_hat"].as_f64().unwrap(),
            v["report"]["se"].as_f64().unwrap(),
        )
    };
    assert_eq!(run(&up), run(&other));
}

#[test]
fn bounds_for_presets() {
    let v = json(&ssate(&["bounds", "--dgp-preset", "d1"]));
    let r = &v["report"];
    assert_eq!(r["tau0"], 0.5);
    assert_eq!(r["v_os"], 8.25);
    assert_eq!(r["v_tilde_os"], 8.0);
    assert_eq!(r["v_ipw"], 10.0);
    assert_eq!(r["v_hahn"], 4.25);
    let v = json(&ssate(&["bounds", "--dgp-preset", "d2", "--alpha", "0.5"]));
    let r = &v["report"];
    assert_eq!(r["beta_star"], 0.5);
    assert_eq!(r["v_ts_at_beta_star"], 8.25);
    assert_eq!(r["v_tilde_ts"], 4.0);
}

#[test]
fn spec_without_overlap_cites_common_support() {
    let dir = TempDir::new().unwrap();
    let p = path(&dir, "spec.json");
    std::fs::write(
        &p,
        r#"{"family":"discrete_x","support":[[0],[1]],"p_mass":[0.5,0.5],"e":[0.0,0.5],
            "mu1":[0,1],"mu0":[0,0],"sigma2_1":[1,1],"sigma2_0":[1,1]}"#,
    )
    .unwrap();
    let out = ssate(&["bounds", "--dgp", s(&p)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("common support"), "{}", stderr(&out));
}

#[test]
fn config_file_with_flag_override() {
    let dir = TempDir::new().unwrap();
    let data = write_d1(&dir, 400, 24);
    let cfg = path(&dir, "cfg.json");
    std::fs::write(
        &cfg,
        format!(
            r#"{{"input": {:?}, "seed": 5, "nuisance": {{"clip_eps": 0.02}}}}"#,
            s(&data)
        ),
    )
    .unwrap();
    let v = json(&ssate(&["estimate-os", "--config", s(&cfg), "--seed", "9"]));
    assert_eq!(v["seed"], 9);
    assert_eq!(v["config"]["nuisance"]["clip_eps"], 0.02);
    let bad = path(&dir, "bad.json");
    std::fs::write(&bad, r#"{"input": "x.csv", "sede": 1}"#).unwrap();
    assert_eq!(
        ssate(&["estimate-os", "--config", s(&bad)]).status.code(),
        Some(2)
    );
}

#[test]
fn simulate_smoke_with_per_rep_csv() {
    let dir = TempDir::new().unwrap();
    let csv = path(&dir, "reps.csv");
    let start = Instant::now();
    let v = json(&ssate(&[
        "simulate",
        "--dgp-preset",
        "d1",
        "--method",
        "OS-eff",
        "--n",
        "1000",
        "--reps",
        "10",
        "--per-rep-csv",
        s(&csv),
    ]));
    assert!(start.elapsed().as_secs_f64() < 10.0);
    assert_eq!(v["report"]["reps_completed"], 10);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 11);
    assert!(text.starts_with("rep,seed,tau_hat,se,ci_lo,ci_hi,covered,converged"));
}

#[test]
fn incomplete_simulation_exits_4() {
    let out = ssate(&[
        "simulate",
        "--dgp-preset",
        "d1",
        "--method",
        "OS-eff",
        "--n",
        "4",
        "--reps",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(4));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["report"]["complete"], false);
}

#[test]
fn thread_count_does_not_change_output() {
    let args = [
        "simulate",
        "--dgp-preset",
        "d2",
        "--method",
        "TS-eff",
        "--m",
        "200",
        "--l",
        "300",
        "--reps",
        "12",
        "--seed",
        "4",
    ];
    let one = ssate(&[&args[..], &["--threads", "1"]].concat());
    let four = ssate(&[&args[..], &["--threads", "4"]].concat());
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn output_flag_writes_file() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "b.json");
    let o = ssate(&["bounds", "--dgp-preset", "d1", "--output", s(&out)]);
    assert!(o.status.success() && o.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(v["report"]["v_os"], 8.25);
}
