//! Drives the built binary: exit codes, output shape, determinism.

use std::path::PathBuf;
use std::process::Command;

use mediator::io::{self, RawKernel};
use serde_json::Value;

fn fixture(name: &str) -> String {
    format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn scratch(name: &str, body: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn mediator(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_mediator")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn json(text: &str) -> Value {
    let v: Value = serde_json::from_str(text).unwrap();
    // canonical form: re-serializing gives the same bytes
    assert_eq!(io::to_canonical_json(&v), text);
    v
}

#[test]
fn decide_then_verify_example1() {
    let (code, out, _) = mediator(&["decide", &fixture("example1_table2.json")]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["verdict"], "implementable");
    let kernel: RawKernel = serde_json::from_value(v["kernel"].clone()).unwrap();
    let s = &kernel.table["s"];
    let w1 = s["w1"].clone();
    let ratios: Vec<String> = ["w1", "w2", "w3", "w4", "w5"]
        .iter()
        .map(|w| s[*w].checked_div(&w1).unwrap().to_string())
        .collect();
    assert_eq!(ratios, ["1", "2", "2", "1", "2"]);

    let kpath = scratch("example1_kernel.json", &io::to_canonical_json(&kernel));
    let kpath = kpath.to_str().unwrap();
    let (code, out, _) = mediator(&["verify", &fixture("example1_table2.json"), kpath]);
    assert_eq!(code, 0, "{out}");
    assert_eq!(json(&out)["verified"], true);

    let (code, out, _) = mediator(&[
        "verify",
        &fixture("example1_table2.json"),
        kpath,
        "--jb",
        &fixture("example1_table1.json"),
    ]);
    assert_eq!(code, 3);
    let v = json(&out);
    assert_eq!(v["mismatches"][0]["state"], "w1");
    assert_eq!(v["mismatches"][0]["player"], "1");
}

#[test]
fn negotiation_is_rejected_with_loop() {
    let (code, out, _) = mediator(&["decide", &fixture("negotiation.json")]);
    assert_eq!(code, 2);
    let v = json(&out);
    assert_eq!(v["certificate"]["kind"], "f_loop");
    assert_eq!(v["certificate"]["product"], "1/6");
}

#[test]
fn subgroup_decision() {
    let (code, out, _) = mediator(&["decide", &fixture("negotiation.json"), "--group", "1"]);
    assert_eq!(code, 0, "{out}");
    let v = json(&out);
    assert_eq!(v["group"], serde_json::json!(["1"]));
    let (code, _, err) = mediator(&["decide", &fixture("negotiation.json"), "--group", "9"]);
    assert_eq!(code, 1);
    assert!(err.contains("schema"));
}

#[test]
fn modified_table_is_rejected() {
    let (code, out, _) = mediator(&["--format", "text", "decide", &fixture("example1_modified.json")]);
    assert_eq!(code, 2);
    assert!(out.starts_with("rejected: F-loop"), "{out}");
}

#[test]
fn check_phi_tables() {
    let good = r#"{"w1|w2": "1/2", "w2|w3": "1", "w1|w3": "1/2", "w4|w5": "1/2"}"#;
    let (code, out, _) = mediator(&[
        "check",
        &fixture("example1_table2.json"),
        scratch("phi_good.json", good).to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{out}");
    let v = json(&out);
    assert_eq!(v["f"]["w1"], "1/2");
    assert_eq!(v["f"]["w2"], "1");

    let bad = r#"{"w1|w2": "1/2", "w2|w3": "1", "w1|w3": "1/2", "w4|w5": "1/4"}"#;
    let (code, out, _) = mediator(&[
        "check",
        &fixture("example1_table2.json"),
        scratch("phi_bad.json", bad).to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
    assert_eq!(json(&out)["verdict"], "violation");

    let not_edge = r#"{"w1|w4": "1"}"#;
    let (code, _, _) = mediator(&[
        "check",
        &fixture("example1_table2.json"),
        scratch("phi_not_edge.json", not_edge).to_str().unwrap(),
    ]);
    assert_eq!(code, 1);
}

#[test]
fn components() {
    let (code, out, _) = mediator(&["ckc", &fixture("example1_table1.json")]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["components"], serde_json::json!([["w1", "w2", "w3"], ["w4", "w5"]]));
    assert_eq!(v["component_graph"][0]["components"], serde_json::json!([0, 1]));
}

#[test]
fn potential_exit_codes() {
    let (code, out, _) = mediator(&["potential", &fixture("prisoners_dilemma.json")]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["potential"]["D,D"], "2");
    let (code, out, _) = mediator(&["potential", &fixture("matching_pennies.json")]);
    assert_eq!(code, 2);
    let v = json(&out);
    assert_eq!(v["cycle"].as_array().unwrap().len(), 5);
}

#[test]
fn multi_signal() {
    let (code, out, _) = mediator(&[
        "multi",
        &fixture("two_state_high.json"),
        &fixture("two_state_high.json"),
        &fixture("two_state_high.json"),
        &fixture("two_state_low.json"),
    ]);
    assert_eq!(code, 0, "{out}");
    let v = json(&out);
    assert_eq!(v["weights"], serde_json::json!(["1/2", "1/2"]));
    assert_eq!(v["kernel"]["table"]["s1"]["a"], "2/3");
    assert_eq!(v["member_signal"], serde_json::json!(["s1", "s1", "s2"]));

    // {(1/2,1/2), (1,0)} preserves positivity but not strictly
    let uninformed = r#"{"a": {"1": {"a": "1/2", "b": "1/2"}, "2": {"a": "1/2", "b": "1/2"}},
                         "b": {"1": {"a": "1/2", "b": "1/2"}, "2": {"a": "1/2", "b": "1/2"}}}"#;
    let sure = r#"{"a": {"1": {"a": "1"}, "2": {"a": "1"}}, "b": {"1": {"a": "1"}, "2": {"a": "1"}}}"#;
    let u = scratch("uninformed.json", uninformed);
    let s = scratch("sure.json", sure);
    let args = ["multi", &fixture("two_state_high.json"), u.to_str().unwrap(), s.to_str().unwrap()];
    let (code, out, _) = mediator(&args);
    assert_eq!(code, 2);
    let v = json(&out);
    assert_eq!(v["verdict"], "not_spp");
    assert_eq!(v["member"], 1);
    assert_eq!(v["option"], serde_json::json!({"a": "1", "b": "-1"}));

    let mut pp = args.to_vec();
    pp.extend(["--semantics", "pp"]);
    let (code, out, _) = mediator(&pp);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["degraded"], true);
    assert_eq!(v["member_signal"], serde_json::json!(["s1", null]));
}

#[test]
fn simulate_is_deterministic() {
    let args = [
        "simulate",
        &fixture("example1_table2.json"),
        &fixture("example1_kernel.json"),
        "--samples",
        "20000",
        "--seed",
        "11",
    ];
    let (code, first, _) = mediator(&args);
    assert_eq!(code, 0, "{first}");
    let (_, second, _) = mediator(&args);
    assert_eq!(first, second);
    assert_eq!(json(&first)["passed"], true);

    let (code, _, err) = mediator(&["simulate", &fixture("example1_table2.json"), &fixture("example1_kernel.json"), "--samples", "5"]);
    assert_eq!(code, 1, "{err}");
}

#[test]
fn demos_are_stable() {
    for name in ["negotiation", "example1"] {
        for format in ["json", "text"] {
            let (code, a, _) = mediator(&["--format", format, "demo", name]);
            let (_, b, _) = mediator(&["--format", format, "demo", name]);
            assert_eq!(code, 0);
            assert_eq!(a, b);
            if format == "json" {
                assert_eq!(json(&a)["passed"], true);
            }
        }
    }
}

#[test]
fn input_errors_exit_one() {
    let (code, _, err) = mediator(&["validate", "/does/not/exist.json"]);
    assert_eq!(code, 1);
    assert!(err.contains("\"file\""));

    let p = scratch("garbage.json", "{ not json");
    let (code, _, err) = mediator(&["validate", p.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("\"parse\""));

    let float = std::fs::read_to_string(fixture("two_state_high.json"))
        .unwrap()
        .replace("\"1/2\"", "0.5");
    let p = scratch("float.json", &float);
    let (code, _, _) = mediator(&["validate", p.to_str().unwrap()]);
    assert_eq!(code, 1);

    let bad_prior = std::fs::read_to_string(fixture("two_state_high.json"))
        .unwrap()
        .replacen("\"1/2\"", "\"1/3\"", 1);
    let p = scratch("bad_prior.json", &bad_prior);
    let (code, _, err) = mediator(&["validate", p.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("schema"), "{err}");

    let (code, _, _) = mediator(&["decide", &fixture("prisoners_dilemma.json")]);
    assert_eq!(code, 1);
    let (code, _, _) = mediator(&["frobnicate"]);
    assert_eq!(code, 1);
}

#[test]
fn validate_reports_shape() {
    let (code, out, _) = mediator(&["validate", &fixture("example1_table2.json")]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["joint_belief"], "valid");
    assert_eq!(v["players"], serde_json::json!(["1", "2"]));
}
