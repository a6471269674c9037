//! The command-line contract: exit codes, seed resolution, config files,
//! report formats and file output.

use std::path::Path;
use std::process::{Command, Output};

use proptest::prelude::*;

use grushin::linops::c;
use grushin_lab::emit::{parse_json, to_json};
use grushin_lab::report::ParamValue;
use grushin_lab::{Field, Kind, Outcome, Report, RunConfig};

fn run(args: &[&str], seed_env: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_grushin-lab"));
    cmd.args(args).env_remove("GRUSHIN_SEED");
    if let Some(s) = seed_env {
        cmd.env("GRUSHIN_SEED", s);
    }
    cmd.output().unwrap()
}

fn code(args: &[&str]) -> Option<i32> {
    run(args, None).status.code()
}

fn report_of(out: &Output) -> Report {
    parse_json(&out.stdout).unwrap()
}

#[test]
fn passing_run_exits_zero_and_echoes_resolved_params() {
    let out = run(&["poisson", "--f", "gaussian", "--format", "json"], None);
    assert_eq!(out.status.code(), Some(0));
    let r = report_of(&out);
    assert!(r.pass);
    assert_eq!(r.config.params["truncation"], ParamValue::Int(20000));
    assert_eq!(r.version, grushin::VERSION);
    assert!(String::from_utf8_lossy(&out.stderr).contains("PASS theta_error"));
}

#[test]
fn failed_gate_exits_one_but_still_reports() {
    let out = run(&["poisson", "--N", "1"], None);
    assert_eq!(out.status.code(), Some(1));
    let r = report_of(&out);
    assert!(!r.pass);
    assert!(r.summary.iter().any(|g| g.name == "rhs_monodromy_error" && !g.pass));
}

#[test]
fn numerical_failure_is_a_failed_completion_gate() {
    let out = run(&["bvp-n2d", "--z-re", "0"], None);
    assert_eq!(out.status.code(), Some(1));
    let r = report_of(&out);
    assert_eq!(r.summary.len(), 1);
    assert_eq!(r.summary[0].name, "completed");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&["no-such-command"]), Some(2));
    assert_eq!(code(&["poisson", "--bogus", "1"]), Some(2));
    assert_eq!(code(&["poisson", "--f", "cosine"]), Some(2));
    assert_eq!(code(&["poisson", "--N", "two"]), Some(2));
    assert_eq!(code(&[]), Some(2));
    assert_eq!(run(&["poisson"], Some("minus-one")).status.code(), Some(2));
    assert_eq!(code(&["--help"]), Some(0));
}

#[test]
fn environment_seed_overrides_flag() {
    let out = run(&["jordan-cloud", "--n", "6", "--seed", "3"], Some("11"));
    assert_eq!(report_of(&out).config.seed, 11);
    let flag = run(&["jordan-cloud", "--n", "6", "--seed", "11"], None);
    assert_eq!(out.stdout, flag.stdout);
    let other = run(&["jordan-cloud", "--n", "6", "--seed", "3"], None);
    assert_ne!(out.stdout, other.stdout);
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn config_file_matches_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "run.json",
        r#"{"subcommand": "circulant", "params": {"kernel": "random", "n": 6}, "seed": 5, "format": "csv"}"#,
    );
    let from_file = run(&["--config", &cfg], None);
    let from_flags = run(&["circulant", "--kernel", "random", "--n", "6", "--seed", "5", "--format", "csv"], None);
    assert_eq!(from_file.status.code(), Some(0));
    assert_eq!(from_file.stdout, from_flags.stdout);
}

#[test]
fn config_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let field = write(dir.path(), "a.json", r#"{"subcommand": "poisson", "verbose": true}"#);
    let param = write(dir.path(), "b.json", r#"{"subcommand": "poisson", "params": {"M": 2}}"#);
    assert_eq!(code(&["--config", &field]), Some(2));
    assert_eq!(code(&["--config", &param]), Some(2));
    assert_eq!(code(&["--config", "/nonexistent/run.json"]), Some(2));
    assert_eq!(code(&["--config", &field, "poisson"]), Some(2));
}

#[test]
fn out_path_infers_format_and_writes_atomically() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("n2d.csv");
    let out = run(&["bvp-n2d", "--out", path.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("m,step,n_aa_re,n_aa_im,"));
    assert_eq!(text.lines().count(), 4);
    let names: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names, vec![std::ffi::OsString::from("n2d.csv")]);
    assert_eq!(code(&["bvp-n2d", "--out", "/nonexistent/dir/x.csv"]), Some(2));
}

#[test]
fn tabulated_potential_file() {
    let dir = tempfile::tempdir().unwrap();
    let values: String = (0..52).map(|i| format!("{}\n", (i as f64 / 51.0).powi(2))).collect();
    let good = write(dir.path(), "v.txt", &values);
    let out = run(&["bvp-n2d", "--potential-file", &good, "--format", "json"], None);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report_of(&out).records[0]["m"], Field::Int(50));
    let bad = write(dir.path(), "w.txt", "0\nzero\n0\n");
    assert_eq!(code(&["bvp-n2d", "--potential-file", &bad]), Some(2));
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e300f64..1e300, -1.0f64..1.0, Just(0.0), Just(f64::NAN)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn json_reports_round_trip(seed in any::<u64>(), rows in prop::collection::vec((any::<i64>(), finite(), finite(), finite(), "[a-z ]{0,8}"), 0..6)) {
        let mut o = Outcome::new(&[("i", Kind::Int), ("x", Kind::Real), ("z", Kind::Complex), ("t", Kind::Text)]);
        for (i, x, re, im, t) in rows {
            o.push(vec![Field::int(i), Field::real(x), Field::complex(c(re, im)), Field::text(t)]);
        }
        let cfg = RunConfig { subcommand: "jordan-cloud".into(), params: Default::default(), seed, out: None, format: None };
        let r = Report::new(cfg, o);
        let bytes = to_json(&r).unwrap();
        let back = parse_json(&bytes).unwrap();
        prop_assert_eq!(&back, &r);
        prop_assert_eq!(to_json(&back).unwrap(), bytes);
    }
}
