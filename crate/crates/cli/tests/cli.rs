//! End-to-end tests of the command-line interface: outputs, exit codes, and
//! determinism.

use std::path::PathBuf;
use std::process::{Command, Output};

fn model(name: &str) -> String {
    let mut p = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    p.pop();
    p.pop();
    p.push("models");
    p.push(name);
    p.to_string_lossy().into_owned()
}

fn varfield(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_varfield"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn elform_free_particle_plain() {
    let out = varfield(&["elform", &model("free_particle.vf")]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "-y_{1,1} w(y) dx1");
}

#[test]
fn elform_latex_format() {
    let out = varfield(&["elform", &model("free_particle.vf"), "--format", "latex"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "-y_{11}\\,\\omega\\wedge dx");
}

#[test]
fn elform_json_is_schema_tagged() {
    let out = varfield(&["elform", &model("free_particle.vf"), "--format", "json"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).expect("valid JSON");
    assert_eq!(doc["schema"], "varfield-json/1");
    assert_eq!(doc["kind"], "form");
}

#[test]
fn missing_model_exits_2_and_names_the_path() {
    let out = varfield(&["elform", "models/str_does_not_exist.vf"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("str_does_not_exist.vf"), "{err}");
}

#[test]
fn unknown_field_name_exits_2() {
    let out = varfield(&["noether", &model("free_particle.vf"), "bogus"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("unknown vector field `bogus`"), "{err}");
}

#[test]
fn pair_current_of_the_wronskian_pair_is_constant() {
    let out = varfield(&["paircurrent", &model("free_particle.vf"), "psiA", "psiB"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "-1");
}

#[test]
fn noether_current_of_translation() {
    let out = varfield(&["noether", &model("free_particle.vf"), "psiA"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "y_{1}");
}

#[test]
fn verify_pair_current_passes_along_extremal() {
    let out = varfield(&[
        "verify",
        &model("free_particle.vf"),
        "paircurrent",
        "--section",
        "ext1",
        "--fields",
        "psiA,psiB",
        "--tol",
        "1e-12",
    ]);
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(stdout(&out).contains("PASS"));
}

#[test]
fn verify_extremal_fails_on_non_extremal_section() {
    let out = varfield(&[
        "verify",
        &model("free_particle.vf"),
        "extremal",
        "--section",
        "cubic",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("FAIL"));
}

#[test]
fn verify_first_variation_by_finite_differences() {
    let out = varfield(&[
        "verify",
        &model("free_particle.vf"),
        "firstvar",
        "--section",
        "sq",
        "--fields",
        "psiHump",
        "--grid",
        "0:1:1001",
    ]);
    assert!(out.status.success(), "{}", stdout(&out));
}

#[test]
fn verify_json_report() {
    let out = varfield(&[
        "verify",
        &model("free_particle.vf"),
        "extremal",
        "--section",
        "ext1",
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).expect("valid JSON");
    assert_eq!(doc["kind"], "verify_report");
    assert_eq!(doc["report"]["pass"], true);
}

#[test]
fn varsplit_reports_zero_identity_residual() {
    let out = varfield(&["varsplit", &model("wave.vf"), "psiU,psiV"]);
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(stdout(&out).contains("identity residual:\n0"));
}

#[test]
fn jacobi_of_wave_kernel_member_is_zero() {
    let out = varfield(&["jacobi", &model("wave.vf"), "psiW"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "0");
}

#[test]
fn ym_demo_dim2_prints_four_passes() {
    let out = varfield(&["ym-demo", "--dim", "2"]);
    assert!(out.status.success(), "{}", stdout(&out));
    let text = stdout(&out);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 4);
}

#[test]
fn output_is_deterministic_across_runs() {
    let args = ["elform", &model("yangmills_su2_d2.vf"), "--format", "json"];
    let a = varfield(&args);
    let b = varfield(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn timeout_cancels_long_derivations() {
    let out = varfield(&[
        "jacobi",
        &model("yangmills_su2_d4.vf"),
        "psihat",
        "--timeout-s",
        "0.000001",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("cancelled"), "{err}");
}

#[test]
fn max_order_cap_rejects_deep_derivations() {
    let out = varfield(&[
        "jacobi",
        &model("free_particle.vf"),
        "psiX2",
        "--max-order",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(2));
}
