//! End-to-end runs of the nmi binary: JSON in, JSON out, stable exit codes.

use serde_json::Value;
use std::path::PathBuf;
use std::process::{Command, Output};
use std::sync::atomic::{AtomicU32, Ordering};

fn nmi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nmi"))
        .args(args)
        .output()
        .expect("binary runs")
}

static FILE_SEQ: AtomicU32 = AtomicU32::new(0);

fn fixture(content: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("nmi-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("temp dir");
    let path = dir.join(format!("f{}.json", FILE_SEQ.fetch_add(1, Ordering::Relaxed)));
    std::fs::write(&path, content).expect("fixture write");
    path
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

#[test]
fn induct_identity_closes_immediately() {
    let step = fixture(r#"{"n":1,"table":[0,1]}"#);
    let out = nmi(&["induct", step.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["stages"], serde_json::json!(["0x0"]));
    assert_eq!(v["closed"], Value::Bool(true));
}

#[test]
fn induct_three_point_chain_has_four_stages() {
    let step = fixture(r#"{"n":3,"table":[1,3,5,7,1,3,5,7]}"#);
    let out = nmi(&["induct", step.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["stages"], serde_json::json!(["0x0", "0x1", "0x3", "0x7"]));
    assert_eq!(v["lfp"], "0x7");
}

#[test]
fn induct_undefined_step_exits_with_the_partiality_code() {
    let step = fixture(r#"{"n":1,"table":[null,0]}"#);
    let out = nmi(&["induct", step.to_str().unwrap()]);
    assert_eq!(code(&out), 6);
    let v = stdout_json(&out);
    assert_eq!(v["closed"], Value::Bool(false));
    assert_eq!(v["failed_at"], 0);
}

#[test]
fn induct_names_the_offending_field_on_schema_errors() {
    let step = fixture(r#"{"n":2,"table":[0]}"#);
    let out = nmi(&["induct", step.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("step.table"), "stderr names the field: {err}");
}

#[test]
fn induct_missing_file_is_an_input_error() {
    let out = nmi(&["induct", "/definitely/not/here.json"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn eval_constant_returns_its_value() {
    let out = nmi(&["eval", "(S2 5)"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["value"], 5);
}

#[test]
fn eval_successor_reads_the_environment() {
    let env = fixture(r#"{"n":0,"nums":[4]}"#);
    let out = nmi(&["eval", "(S1)", "--env", env.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["value"], 5);
}

#[test]
fn eval_non_index_exits_distinctly() {
    let out = nmi(&["eval", "0"]);
    assert_eq!(code(&out), 4);
    let v = stdout_json(&out);
    assert_eq!(v["result"]["kind"], "not_an_index");
    assert_eq!(v["value"], Value::Null);
}

#[test]
fn eval_divergent_loop_traces_budget_many_frames() {
    let loop_code = nmi_core::kleene::loop_idx().to_string();
    let out = nmi(&["eval", &loop_code, "--trace", "--budget", "40"]);
    assert_eq!(code(&out), 7);
    let v = stdout_json(&out);
    assert_eq!(v["result"]["kind"], "budget_exceeded");
    assert_eq!(v["trace"]["end"], "budget_cut");
    assert_eq!(v["trace"]["frames"].as_array().expect("frame list").len(), 40);
}

#[test]
fn eval_accepts_decimal_and_sexpr_spellings_alike() {
    let sexpr = nmi(&["eval", "(S4 (S1) (S2 6))"]);
    let decimal_code =
        nmi_core::kleene::k4(&nmi_core::kleene::k1(), &nmi_core::kleene::k2(&nmi_core::nat(6)))
            .to_string();
    let decimal = nmi(&["eval", &decimal_code]);
    assert_eq!(code(&sexpr), 0);
    assert_eq!(stdout_json(&sexpr)["value"], 7);
    assert_eq!(sexpr.stdout, decimal.stdout);
}

#[test]
fn eval_output_is_deterministic() {
    let a = nmi(&["eval", "(S2 5)", "--seed", "9"]);
    let b = nmi(&["eval", "(S2 5)", "--seed", "9"]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(code(&a), code(&b));
}

#[test]
fn compile_then_validate_accepts_with_the_same_value() {
    let env = fixture(r#"{"n":0,"oracles":[{"support":1,"table":[5,9]}]}"#);
    let dir = std::env::temp_dir().join(format!("nmi-cli-test-{}", std::process::id()));
    let compiled = dir.join("compiled.json");
    let out = nmi(&[
        "procedure",
        "compile",
        "(S8.2 (S3))",
        "--env",
        env.to_str().unwrap(),
        "--out",
        compiled.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let saved: Value =
        serde_json::from_str(&std::fs::read_to_string(&compiled).expect("out file")).unwrap();
    assert_eq!(saved["value"], 5);
    let check = nmi(&[
        "procedure",
        "validate",
        "(S8.2 (S3))",
        "--env",
        env.to_str().unwrap(),
        "--repr",
        compiled.to_str().unwrap(),
    ]);
    assert_eq!(code(&check), 0);
    let v = stdout_json(&check);
    assert_eq!(v["verdict"], "accept");
    assert_eq!(v["value"], 5);
}

#[test]
fn validate_rejects_a_mutated_representation() {
    let env = fixture(r#"{"n":0,"oracles":[{"support":1,"table":[5,9]}]}"#);
    let out = nmi(&["procedure", "compile", "(S8.2 (S3))", "--env", env.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let mut v = stdout_json(&out);
    v["representation"]["value"] = serde_json::json!(6);
    let mutated = fixture(&v.to_string());
    let check = nmi(&[
        "procedure",
        "validate",
        "(S8.2 (S3))",
        "--env",
        env.to_str().unwrap(),
        "--repr",
        mutated.to_str().unwrap(),
    ]);
    assert_eq!(code(&check), 0, "a reject is an answer, not an error");
    let verdict = stdout_json(&check);
    assert_eq!(verdict["verdict"], "reject");
    assert!(verdict["reason"].as_str().is_some_and(|r| !r.is_empty()));
}

#[test]
fn consistency_holds_over_a_compiled_family() {
    let fam = fixture(
        r#"{"oracles":[{"support":1,"table":[5,9]},{"support":1,"table":[0,1]},{"support":1,"table":[1,1]}]}"#,
    );
    let out = nmi(&["procedure", "consistency", "(S8.2 (S3))", "--oracles", fam.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["consistent"], Value::Bool(true));
    assert_eq!(v["members"], 3);
}

#[test]
fn honest_history_reproduces_the_direct_value() {
    let env = fixture(r#"{"n":0,"oracles":[{"support":1,"table":[5,9]}]}"#);
    let fam = fixture(r#"{"oracles":[{"support":1,"table":[5,9]},{"support":1,"table":[0,1]}]}"#);
    let out = nmi(&[
        "procedure",
        "honest",
        "(S8.2 (S3))",
        "--env",
        env.to_str().unwrap(),
        "--oracles",
        fam.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["value"], 5);
    assert!(v["history"]["elements"].as_array().is_some_and(|e| !e.is_empty()));
}

#[test]
fn delay_profile_covers_every_item_of_the_member() {
    let fam = fixture(r#"{"oracles":[{"support":1,"table":[5,9]},{"support":1,"table":[0,1]}]}"#);
    let out = nmi(&["procedure", "delay", "(S8.2 (S3))", "--oracles", fam.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    let len = v["length"].as_u64().expect("length") as usize;
    assert_eq!(v["delays"].as_array().expect("delays").len(), len);
    assert_eq!(v["levels"].as_array().expect("levels").len(), len);
}

#[test]
fn hb_covers_a_constant_zero_oracle_with_one_prefix() {
    let oracle = fixture(r#"{"L":1,"table":[0,0]}"#);
    let out = nmi(&["realiser", "hb", oracle.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["cover"].as_array().expect("cover").len(), 1);
    assert_eq!(v["is_cover"], Value::Bool(true));
}

#[test]
fn pincherle_of_the_constant_depth_oracle_is_the_depth() {
    let oracle = fixture(r#"{"L":2,"table":[2,2,2,2]}"#);
    let out = nmi(&["realiser", "pincherle", oracle.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["bound"], 2);
}

#[test]
fn recover_agrees_with_the_trace_on_a_chain() {
    let step = fixture(r#"{"n":2,"table":[1,3,3,3]}"#);
    let out = nmi(&["realiser", "recover", step.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["agree"], Value::Bool(true));
    assert_eq!(v["recovered"], v["trace_order"]);
}

#[test]
fn recover_on_a_partial_definition_exits_with_the_partiality_code() {
    let step = fixture(r#"{"n":2,"table":[null,3,3,3]}"#);
    let out = nmi(&["realiser", "recover", step.to_str().unwrap()]);
    assert_eq!(code(&out), 6);
}

#[test]
fn out_flag_writes_exactly_the_stdout_document() {
    let step = fixture(r#"{"n":1,"table":[0,1]}"#);
    let direct = nmi(&["induct", step.to_str().unwrap()]);
    let dir = std::env::temp_dir().join(format!("nmi-cli-test-{}", std::process::id()));
    let saved = dir.join("induct-out.json");
    let via_out = nmi(&["induct", step.to_str().unwrap(), "--out", saved.to_str().unwrap()]);
    assert_eq!(code(&via_out), 0);
    assert!(via_out.stdout.is_empty());
    assert_eq!(std::fs::read(&saved).expect("out file"), direct.stdout);
}

#[test]
fn selftest_sweeps_pass() {
    let out = nmi(&["selftest", "--seed", "7"]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["pass"], Value::Bool(true));
    for check in v["checks"].as_array().expect("checks") {
        assert_eq!(check["pass"], Value::Bool(true), "check {}", check["name"]);
    }
}
