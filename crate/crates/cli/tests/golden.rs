//! Golden-file tests for the `nvk` binary. Expected outputs live in
//! `tests/golden/`; run with `UPDATE_GOLDEN=1` to rewrite them.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nvk_cli::complex::parse_complex;
use nvk_cli::descriptor::Descriptor;
use nvk_core::convex_transform::{transform_general, ConvexCoefficients};
use nvk_core::representation::eval_reduced;
use nvk_core::{Complex64, PolyUpperPoint, QuadratureConfig};
use serde_json::Value;

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn input(name: &str) -> String {
    golden_dir().join("inputs").join(name).display().to_string()
}

fn nvk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nvk"))
        .args(args)
        .env_remove("NVK_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn check_golden(name: &str, actual: &str) {
    let path = golden_dir().join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&path, actual).unwrap();
        return;
    }
    let expected = fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden file {name}; run with UPDATE_GOLDEN=1"));
    assert_eq!(actual, expected, "output differs from {name}");
}

fn run_ok(args: &[&str]) -> String {
    let o = nvk(args);
    assert_eq!(o.status.code(), Some(0), "nvk {args:?} failed: {}", stderr(&o));
    stdout(&o)
}

#[test]
fn eval_worked_example() {
    let out = run_ok(&["eval", &input("pi_delta.json"), "--z", "0+1i", "--z", "1+2i"]);
    check_golden("eval_pi_delta.jsonl", &out);
    let first: Value = serde_json::from_str(out.lines().next().unwrap()).unwrap();
    assert_eq!(first["value"], "0+1i");
}

#[test]
fn eval_linear_part_only() {
    let out = run_ok(&["eval", &input("linear_only.json"), "--z", "0+1i,0+1i"]);
    check_golden("eval_linear_only.jsonl", &out);
    let v: Value = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(v["value"], "0+2i");
}

#[test]
fn eval_methods_agree() {
    let path = input("mixed.json");
    let reduced = run_ok(&["eval", &path, "--z", "0.3+0.8i"]);
    let quadrature = run_ok(&["eval", &path, "--z", "0.3+0.8i", "--method", "quadrature"]);
    let value = |s: &str| {
        let v: Value = serde_json::from_str(s.trim()).unwrap();
        parse_complex(v["value"].as_str().unwrap()).unwrap()
    };
    let (a, b) = (value(&reduced), value(&quadrature));
    assert!((a - b).norm() <= 1e-12 * b.norm(), "{a} vs {b}");
}

#[test]
fn transform_outputs() {
    let source = input("pi_delta.json");
    let half = run_ok(&["transform", &source, "--k", "0.5,0.5"]);
    check_golden("transform_half.json", &half);
    let doc: Value = serde_json::from_str(&half).unwrap();
    assert_eq!(doc["measure"]["type"], "ladder");
    assert_eq!(doc["measure"]["b"], serde_json::json!([1.0]));
    assert_eq!(doc["measure"]["beta"], 2.0);

    let three = run_ok(&["transform", &source, "--k", "0.5,0.25,0.25"]);
    check_golden("transform_three.json", &three);
    let doc: Value = serde_json::from_str(&three).unwrap();
    assert_eq!(doc["measure"]["b"], serde_json::json!([0.5, 1.0]));
    assert_eq!(doc["measure"]["beta"], 2.0);

    let padded = run_ok(&["transform", &source, "--k", "1,0"]);
    check_golden("transform_one_zero.json", &padded);
    let doc: Value = serde_json::from_str(&padded).unwrap();
    assert_eq!(doc["measure"]["type"], "product");
    assert_eq!(doc["b"], serde_json::json!([0.0, 0.0]));
}

#[test]
fn transform_writes_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.json");
    let printed = run_ok(&["transform", &input("mixed.json"), "--k", "0.3,0.7", "--out", out.to_str().unwrap()]);
    assert!(printed.is_empty());
    let written = fs::read_to_string(&out).unwrap();
    assert_eq!(written, run_ok(&["transform", &input("mixed.json"), "--k", "0.3,0.7"]));
}

/// The transformed descriptor re-parses, and `eval` on it matches the
/// in-process evaluation of the transformed data.
#[test]
fn descriptor_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = QuadratureConfig::default();
    let source = Descriptor::load(Path::new(&input("mixed.json"))).unwrap().to_data().unwrap();
    for k in [vec![0.3, 0.7], vec![0.5, 0.25, 0.25], vec![0.0, 0.6, 0.4], vec![1.0, 0.0]] {
        let k_arg = k.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
        let out = dir.path().join("t.json");
        run_ok(&["transform", &input("mixed.json"), "--k", &k_arg, "--out", out.to_str().unwrap()]);

        let reparsed = Descriptor::load(&out).unwrap();
        assert_eq!(Descriptor::parse(&reparsed.to_json()).unwrap(), reparsed);

        let expected = transform_general(&source, &ConvexCoefficients::new(k.clone()).unwrap()).unwrap();
        let z: Vec<Complex64> = (0..k.len())
            .map(|j| Complex64::new(0.4 * j as f64 - 0.5, 0.5 + 0.3 * j as f64))
            .collect();
        let z_arg = z
            .iter()
            .map(|c| nvk_cli::complex::format_complex(*c))
            .collect::<Vec<_>>()
            .join(",");
        let line = run_ok(&["eval", out.to_str().unwrap(), "--z", &z_arg]);
        let v: Value = serde_json::from_str(line.trim()).unwrap();
        let got = parse_complex(v["value"].as_str().unwrap()).unwrap();
        let want = eval_reduced(&expected, &PolyUpperPoint::new(z).unwrap(), &cfg).unwrap().value;
        assert!((got - want).norm() <= 1e-12 * want.norm().max(1.0), "k={k:?}: {got} vs {want}");
    }
}

#[test]
fn verify_reports_are_golden() {
    check_golden(
        "verify_kernels.csv",
        &run_ok(&["verify", "--suite", "kernels", "--samples", "4", "--format", "csv"]),
    );
    check_golden(
        "verify_ladder.json",
        &run_ok(&["verify", "--suite", "ladder", "--n", "3", "--samples", "3"]),
    );
    check_golden("verify_main.csv", &run_ok(&["verify", "--suite", "main", "--samples", "5", "--format", "csv"]));
}

#[test]
fn verify_is_deterministic() {
    let args = ["verify", "--suite", "ladder", "--n", "3", "--samples", "6", "--format", "csv"];
    let serial = run_ok(&args);
    assert_eq!(serial, run_ok(&args));
    let mut parallel = args.to_vec();
    parallel.extend(["--jobs", "4"]);
    assert_eq!(serial, run_ok(&parallel));

    let explicit = nvk_core::sampling::DEFAULT_SEED.to_string();
    let mut seeded = args.to_vec();
    seeded.extend(["--seed", &explicit]);
    assert_eq!(serial, run_ok(&seeded));

    let from_env = Command::new(env!("CARGO_BIN_EXE_nvk"))
        .args(args)
        .env("NVK_SEED", "17")
        .output()
        .unwrap();
    assert_eq!(from_env.status.code(), Some(0));
    assert_ne!(stdout(&from_env), serial);
    assert_eq!(stdout(&from_env), run_ok(&[&args[..], &["--seed", "17"]].concat()));
}

#[test]
fn verify_suites_pass_and_summarize() {
    for suite in ["ladder", "main", "conditions", "kernels"] {
        let o = nvk(&["verify", "--suite", suite, "--samples", "5"]);
        assert_eq!(o.status.code(), Some(0), "{suite}: {}", stderr(&o));
        let summary = stderr(&o);
        assert!(summary.starts_with(&format!("suite {suite}:")), "{summary}");
        assert!(summary.trim_end().ends_with("passed"), "{summary}");
        let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert_eq!(report["passed"], true);
    }
}

#[test]
fn csv_header_is_stable() {
    let out = run_ok(&["verify", "--suite", "kernels", "--n", "2", "--samples", "1", "--format", "csv"]);
    assert_eq!(
        out.lines().next().unwrap(),
        "sample,check,inputs,lhs_re,lhs_im,rhs_re,rhs_im,rel_error"
    );
}

#[test]
fn classify_outputs() {
    let lebesgue = input("lebesgue.json");
    let pi_delta = input("pi_delta.json");
    let out = run_ok(&[
        "classify", "--alpha", "1", "--beta", "1", "--gamma", "1", "--delta", "-1", "--mu", &lebesgue,
    ]);
    check_golden("classify_iii1b.json", &out);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["case"], "iii1b");
    assert_eq!(v["representing"], true);

    let cases = [
        (["1", "1", "1", "-1"], &pi_delta, "iii1b", Value::Bool(true)),
        (["1", "1", "-1", "-1"], &pi_delta, "iii1a", Value::Bool(true)),
        (["1", "1", "1", "1"], &pi_delta, "iii2a", Value::Bool(false)),
        (["1", "0", "1", "0"], &pi_delta, "NotRepresenting", Value::Bool(false)),
    ];
    for ([a, b, c, d], mu, case, representing) in cases {
        let out = run_ok(&["classify", "--alpha", a, "--beta", b, "--gamma", c, "--delta", d, "--mu", mu]);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["representing"], representing, "{a} {b} {c} {d}");
        assert_eq!(v["case"], case, "{a} {b} {c} {d}");
        assert!(v["evidence"]["growth"]["value"].is_number() || v["evidence"]["growth"]["diverged"] == true);
        assert!(v["evidence"]["nevanlinna_max"].is_number());
    }
}

fn assert_exit(args: &[&str], code: i32, message: &str) {
    let o = nvk(args);
    assert_eq!(o.status.code(), Some(code), "nvk {args:?}: {}", stderr(&o));
    assert!(stderr(&o).contains(message), "nvk {args:?}: {}", stderr(&o));
}

#[test]
fn exit_codes() {
    let pi_delta = input("pi_delta.json");
    assert_exit(&["eval", &pi_delta, "--z", "0-1i"], 2, "point not in poly-upper half-plane");
    assert_exit(&["eval", &pi_delta, "--z", "0+1"], 2, "malformed complex literal");
    assert_exit(&["eval", &pi_delta, "--z", "0+1i,0+1i"], 2, "dimension");
    assert_exit(&["eval", &input("missing_comma.json"), "--z", "0+1i"], 2, "line 4, column 3");
    assert_exit(&["eval", &input("negative_b.json"), "--z", "0+1i"], 2, "at b[0]");
    assert_exit(&["eval", &input("absent.json"), "--z", "0+1i"], 2, "absent.json");
    assert_exit(&["eval", &input("heavy_density.json"), "--z", "0+1i"], 3, "growth condition");
    assert_exit(&["transform", &pi_delta, "--k", "0.5,0.4"], 2, "sum");
    assert_exit(&["transform", &pi_delta, "--k", "1.5,-0.5"], 2, "");
    assert_exit(&["verify", "--suite", "bogus"], 2, "invalid value 'bogus'");
    assert_exit(&["verify", "--suite", "ladder", "--n", "1"], 2, "n ≥ 2");
    assert_exit(&["verify", "--suite", "kernels", "--tol", "-1"], 2, "");
    assert_exit(&["frobnicate"], 2, "unrecognized subcommand");
    assert_eq!(nvk(&["--help"]).status.code(), Some(0));
}
