//! End-to-end runs of the `epsilon-lab` binary: exit codes, report shape and
//! determinism across pool sizes.

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_epsilon-lab"));
    cmd.env_remove("EPSILON_LAB_CAP");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON document")
}

fn scratch(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("epsilon-lab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn gauss_over_f3_passes() {
    let out = run(&["gauss", "--p", "3", "--q", "3", "--c", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["command"], "gauss");
    assert_eq!(r["pass"], true);
    assert_eq!(r["report"]["quadratic_character"], 1);
    assert!((r["report"]["modulus"].as_f64().unwrap() - 3f64.sqrt()).abs() < 1e-9);
}

#[test]
fn gauss_rejects_mismatched_characteristic() {
    let out = run(&["gauss", "--p", "5", "--q", "9", "--c", "1"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(report(&out)["error"]["kind"], "invalid_input");
}

#[test]
fn bundled_product_check_passes_under_two_primes() {
    let out = run(&["product-check", "--q", "7", "--second-ell"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["pass"], true);
    assert!(r["caps"]["tate"].as_u64().is_some());
}

#[test]
fn malformed_spec_names_the_offending_field() {
    let spec = scratch("bad_spec.json", r#"{"field":{"q":9},"f":{"num":[1,1],"den":[0]}}"#);
    let out = run(&["eps-global", "--spec", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let r = report(&out);
    assert_eq!(r["pass"], false);
    let msg = r["error"]["message"].as_str().unwrap();
    assert!(msg.contains("spec.f"), "message should carry the field path: {msg}");
}

#[test]
fn unknown_fields_are_rejected() {
    let spec = scratch("extra_field.json", r#"{"field":{"q":5},"f":{"num":[0,1]},"colour":"red"}"#);
    let out = run(&["eps-global", "--spec", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn missing_input_file_is_invalid_input() {
    let out = run(&["eps-global", "--spec", "/nonexistent/spec.json"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn cap_flag_and_environment_both_trigger_exit_4() {
    let out = run(&["product-check", "--q", "5", "--cap", "1"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(report(&out)["error"]["kind"], "cap_exceeded");

    let out = bin().args(["product-check", "--q", "5"]).env("EPSILON_LAB_CAP", "1").output().unwrap();
    assert_eq!(out.status.code(), Some(4));

    // The flag wins over the environment.
    let out = bin().args(["product-check", "--q", "5", "--cap", "100000"]).env("EPSILON_LAB_CAP", "1").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn eps_local_reports_agreeing_closed_form() {
    let chi = scratch(
        "chi.json",
        r#"{"field":{"q":5},"c_pi":{"zeta":4,"power":1},"tame_e":1,"wild_h":{"exponents":[-2],"coeffs":[1]}}"#,
    );
    let form = scratch("form.json", r#"{"field":{"q":5},"v":0,"prec":8,"coeffs":[1]}"#);
    let out = run(&["eps-local", "--char", chi.to_str().unwrap(), "--form", form.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["report"]["swan"], 2);
    assert_eq!(r["report"]["closed_form"]["agrees"], true);
}

#[test]
fn induction_check_for_a_quadratic_cover() {
    let cover = scratch("cover.json", r#"{"family":"kummer","e":2}"#);
    let omega = scratch("omega.json", r#"{"field":{"q":5},"num":[1]}"#);
    let out = run(&["induction-check", "--cover", cover.to_str().unwrap(), "--omega", omega.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["pass"], true);
}

#[test]
fn json_out_writes_the_report_to_a_file() {
    let path = std::env::temp_dir().join(format!("epsilon-lab-out-{}.json", std::process::id()));
    let out = run(&["gauss", "--p", "5", "--q", "25", "--c", "7", "--json-out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(r["pass"], true);
    std::fs::remove_file(path).ok();
}

#[test]
fn reports_are_identical_across_pool_sizes() {
    for args in [
        &["corpus", "--seed", "7", "--count", "4"][..],
        &["twisted-check", "--seed", "3", "--exhaustive-order", "8", "--random-cases", "10"][..],
    ] {
        let one = run(&[args, &["--threads", "1"]].concat());
        let eight = run(&[args, &["--threads", "8"]].concat());
        assert_eq!(one.status.code(), Some(0));
        assert_eq!(one.stdout, eight.stdout, "{args:?}");
    }
}
