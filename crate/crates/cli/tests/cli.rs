use std::fs;
use std::os::unix::fs::PermissionsExt;
use std::path::PathBuf;

use assert_cmd::Command;
use predicates::prelude::*;

fn qmap() -> Command {
    Command::cargo_bin("qmap").unwrap()
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

#[test]
fn solve_then_verify_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let sol = dir.path().join("sol.json");
    qmap()
        .args(["solve", "--program"])
        .arg(fixture("chem5.json"))
        .args(["--arch", "line:5", "--alternating", "phase0", "--out"])
        .arg(&sol)
        .assert()
        .success()
        .stdout(predicate::str::contains("depth=5 swaps=0"));
    qmap()
        .args(["verify", "--program"])
        .arg(fixture("chem5.json"))
        .args(["--arch", "line:5", "--solution"])
        .arg(&sol)
        .assert()
        .success()
        .stdout(predicate::str::starts_with("ok: depth=5"));
}

#[test]
fn tampered_solution_is_rejected_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let sol = dir.path().join("sol.json");
    qmap()
        .args(["solve", "--program"])
        .arg(fixture("one_gate.json"))
        .args(["--arch", "line:2", "--out"])
        .arg(&sol)
        .assert()
        .success();
    let mut doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&sol).unwrap()).unwrap();
    // Break injectivity of the time-0 mapping.
    doc["mapping"][0][1] = doc["mapping"][0][0].clone();
    fs::write(&sol, doc.to_string()).unwrap();
    qmap()
        .args(["verify", "--program"])
        .arg(fixture("one_gate.json"))
        .args(["--arch", "line:2", "--solution"])
        .arg(&sol)
        .assert()
        .code(1)
        .stderr(predicate::str::contains("violation"));
}

#[test]
fn emit_smt_declares_every_variable() {
    let out = qmap()
        .args(["emit-smt", "--program"])
        .arg(fixture("one_gate.json"))
        .args(["--arch", "line:2", "--horizon", "1"])
        .assert()
        .success()
        .get_output()
        .stdout
        .clone();
    let text = String::from_utf8(out).unwrap();
    // |Q|T + 2|G| + 2|E|T = 2 + 2 + 2 variables for one gate on line(2).
    assert_eq!(text.matches("(declare-fun ").count(), 6);
    assert!(text.contains("(check-sat)"));
}

#[test]
fn identical_invocations_write_identical_solutions() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for path in [&a, &b] {
        qmap()
            .args(["solve", "--program"])
            .arg(fixture("triangle.json"))
            .args(["--arch", "line:3", "--objective", "swap", "--out"])
            .arg(path)
            .assert()
            .success();
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn missing_required_arguments_exit_2() {
    qmap().arg("solve").assert().code(2);
}

#[test]
fn unknown_arch_kind_exits_2() {
    qmap()
        .args(["solve", "--program"])
        .arg(fixture("one_gate.json"))
        .args(["--arch", "bogus:3"])
        .assert()
        .code(2)
        .stderr(predicate::str::contains("unknown arch kind"));
}

#[test]
fn certify_reports_the_floor() {
    qmap()
        .args(["certify", "--program"])
        .arg(fixture("one_gate.json"))
        .args(["--arch", "line:2"])
        .assert()
        .success()
        .stdout(predicate::str::contains(
            "certified: no solution with depth < 1 (exact instance unsat at horizon 0)",
        ));
}

#[test]
fn fidelity_objective_prints_the_score() {
    qmap()
        .args(["solve", "--program"])
        .arg(fixture("chem5.json"))
        .args(["--arch", "line:5", "--objective", "fidelity"])
        .assert()
        .success()
        .stdout(predicate::str::is_match(r"fidelity=0\.\d{6}\n").unwrap());
}

#[test]
fn bench_writes_csv_and_json_reports() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("report");
    qmap()
        .args(["bench", "--family", "all-to-all", "--n", "3", "--out"])
        .arg(&prefix)
        .assert()
        .success();
    let csv = fs::read_to_string(prefix.with_extension("csv")).unwrap();
    assert!(csv.lines().count() >= 2, "header plus at least one row");
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(prefix.with_extension("json")).unwrap()).unwrap();
    assert!(json.is_object() || json.is_array());
}

#[test]
fn external_backend_without_command_exits_2() {
    qmap()
        .env_remove("QMAP_SOLVER")
        .args(["solve", "--program"])
        .arg(fixture("one_gate.json"))
        .args(["--arch", "line:2", "--backend", "external"])
        .assert()
        .code(2)
        .stderr(predicate::str::contains("QMAP_SOLVER"));
}

#[test]
fn external_backend_timeout_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("hang.sh");
    fs::write(&script, "#!/bin/sh\ncat > /dev/null\nsleep 30\n").unwrap();
    fs::set_permissions(&script, fs::Permissions::from_mode(0o755)).unwrap();
    qmap()
        .args(["solve", "--program"])
        .arg(fixture("one_gate.json"))
        .args(["--arch", "line:2", "--backend", "external", "--timeout", "1", "--solver-cmd"])
        .arg(&script)
        .assert()
        .code(3);
}
