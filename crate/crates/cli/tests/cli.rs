use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run_in(args: &[&str], threads: Option<&str>, cwd: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_stepwalk"));
    cmd.args(args);
    if let Some(dir) = cwd {
        cmd.current_dir(dir);
    }
    if let Some(t) = threads {
        cmd.env("REINFORCE_THREADS", t);
    }
    cmd.output().expect("binary runs")
}

fn stepwalk(args: &[&str], threads: Option<&str>) -> Output {
    run_in(args, threads, None)
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn data_rows(text: &str) -> usize {
    text.lines().skip(2).count()
}

#[test]
fn simulate_writes_one_row_per_step() {
    let out = stepwalk(
        &[
            "simulate", "--mode", "positive", "--p", "0", "--n", "1000", "--paths", "1",
        ],
        None,
    );
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# stepwalk ") && text.contains("schema=1"));
    assert_eq!(lines.next().unwrap(), "n,path_id,S_n,G_n");
    assert_eq!(data_rows(&text), 1000);
}

#[test]
fn asclt_reports_gaussian_target() {
    let out = stepwalk(
        &[
            "asclt", "--p", "0.25", "--f", "cosine", "--n", "100000", "--paths", "200", "--format",
            "json",
        ],
        None,
    );
    assert!(out.status.success());
    let m = json_of(&out);
    let f = &m["aggregates"]["functions"][0];
    assert!((f["target"].as_f64().unwrap() - 0.606531).abs() < 1e-6);
    assert_eq!(m["replicate_seeds"].as_array().unwrap().len(), 200);
    assert!(m.get("wall_time_secs").is_none());
}

#[test]
fn verify_oracle_suite_exits_zero() {
    let out = stepwalk(&["verify", "--suite", "oracle"], None);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("criterion  1 [oracle] PASS"));
}

#[test]
fn oracle_checks_pass_and_cap_is_enforced() {
    let out = stepwalk(
        &[
            "oracle",
            "--n",
            "6",
            "--p",
            "0.3",
            "--mode",
            "negative",
            "--dist",
            "discrete:-1,0,2;0.25,0.5,0.25",
            "--format",
            "json",
        ],
        None,
    );
    assert!(out.status.success());
    let m = json_of(&out);
    assert_eq!(m["checks_passed"], Value::Bool(true));
    assert_eq!(
        m["aggregates"]["checks"]["rational_identities"],
        Value::Bool(true)
    );
    let out = stepwalk(&["oracle", "--n", "11"], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("invalid n"));
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    // same file name in two directories, since the manifest echoes the path
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let run = |dir: &Path, threads: &str| {
        let path = dir.join("lil.csv");
        let out = run_in(
            &[
                "lil", "--p", "0.25", "--n", "20000", "--paths", "16", "--seed", "9", "--out",
                "lil.csv",
            ],
            Some(threads),
            Some(dir),
        );
        assert!(out.status.success());
        let manifest = std::fs::read_to_string(dir.join("lil.manifest.json")).unwrap();
        (std::fs::read_to_string(&path).unwrap(), manifest)
    };
    assert!(run(a.path(), "1") == run(b.path(), "3"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.json");
    std::fs::write(
        &cfg,
        r#"{"mode":"negative","p":0.5,"dist":{"kind":"gaussian","mean":0.2,"sd":1.0},"n":50,"paths":3,"seed":5}"#,
    )
    .unwrap();
    let out = stepwalk(
        &[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--n",
            "40",
            "--format",
            "json",
        ],
        None,
    );
    assert!(out.status.success());
    let m = json_of(&out);
    assert_eq!(m["config"]["n"], 40);
    assert_eq!(m["config"]["mode"], "negative");
    assert_eq!(m["config"]["dist"]["kind"], "gaussian");
    assert_eq!(m["replicate_seeds"].as_array().unwrap().len(), 3);

    std::fs::write(&cfg, r#"{"p":0.5,"bogus":1}"#).unwrap();
    let out = stepwalk(&["simulate", "--config", cfg.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_parameters_name_the_field() {
    for (args, field) in [
        (vec!["simulate", "--p", "1.5"], "p"),
        (vec!["simulate", "--paths", "0"], "paths"),
        (
            vec!["asclt", "--f", "exp_quadratic:0.7", "--n", "100"],
            "exp_quadratic",
        ),
        (vec!["asclt", "--p", "0.8", "--n", "100"], "p"),
        (
            vec![
                "lil",
                "--kind",
                "walk_check",
                "--mode",
                "positive",
                "--n",
                "100",
            ],
            "mode",
        ),
    ] {
        let out = stepwalk(&args, None);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(
            String::from_utf8_lossy(&out.stderr).contains(field),
            "{args:?}"
        );
    }
}

#[test]
fn timing_is_opt_in() {
    let out = stepwalk(
        &[
            "coeffs", "--p", "0.25", "--n", "100", "--format", "json", "--timing",
        ],
        None,
    );
    assert!(json_of(&out)["wall_time_secs"].is_number());
}

#[test]
fn csv_goes_to_file_with_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bm.csv");
    let out = stepwalk(
        &[
            "bm",
            "--n",
            "10000",
            "--paths",
            "4",
            "--checkpoints",
            "10",
            "--out",
            path.to_str().unwrap(),
        ],
        None,
    );
    assert!(out.status.success() && out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(
        text.lines().nth(1).unwrap(),
        "n,path_id,stat,running_max,constant"
    );
    // rows at 10, 100, 1000, 10000 for each path
    assert_eq!(data_rows(&text), 16);
    let manifest: Value = serde_json::from_slice(
        &std::fs::read(Path::new(&path).with_extension("manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(
        manifest["aggregates"]["running_max_over_constant"]["paths"],
        4
    );
}
