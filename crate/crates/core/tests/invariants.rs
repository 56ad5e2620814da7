//! Cross-module invariants: model enumeration, reduction soundness,
//! absorption payoff, post-processing, SMT emission, and the external
//! backend driven by stub solver scripts.

use std::fs;
use std::os::unix::fs::PermissionsExt;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use qmap_core::arch::build_line;
use qmap_core::encode::{build, emit_smtlib, EncodingOptions, Phase};
use qmap_core::qprog::{parse_program, Program};
use qmap_core::solution::{decode, postprocess_absorb, verify};
use qmap_core::solve::sat::CnfTranslation;
use qmap_core::solve::{
    check, minimize_depth, minimize_swaps, portfolio_solve, Backend, Objective, Status, SwapSearch,
};

fn fixture(name: &str) -> Program {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    parse_program(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn every_enumerated_model_decodes_and_verifies() {
    let p = fixture("one_gate.json");
    let g = build_line(3).unwrap();
    let opts = EncodingOptions::new(1);
    let cs = build(&p, &g, &opts).unwrap();
    let models = CnfTranslation::new(&cs).enumerate(&cs, 10_000).unwrap();
    assert!(!models.is_empty());
    for m in &models {
        assert!(m.satisfies_system(&cs));
        let sol = decode(m, &cs.vars).unwrap();
        verify(&p, &g, &sol).unwrap();
    }
    // Blocking clauses guarantee pairwise-distinct assignments.
    for i in 0..models.len() {
        for j in i + 1..models.len() {
            assert_ne!(models[i], models[j]);
        }
    }
}

#[test]
fn reductions_never_grow_the_model_count() {
    let p = fixture("triangle.json");
    let g = build_line(3).unwrap();
    let count = |opts: &EncodingOptions| {
        let cs = build(&p, &g, opts).unwrap();
        CnfTranslation::new(&cs).enumerate(&cs, 100_000).unwrap().len()
    };
    let exact = count(&EncodingOptions::new(3));
    let mut phase0 = EncodingOptions::new(3);
    phase0.alternating_matchings = Some(Phase::Zero);
    let mut pinned = EncodingOptions::new(3);
    pinned.initial_mapping = Some(vec![0, 1, 2]);
    let mut budgeted = EncodingOptions::new(3);
    budgeted.swap_budget = Some(0);
    assert!(exact > 0);
    assert!(count(&phase0) <= exact);
    assert!(count(&pinned) < exact, "pinning the initial mapping must cut models");
    assert!(count(&budgeted) <= exact);
}

#[test]
fn absorption_never_needs_more_swaps() {
    let p = fixture("triangle.json");
    let g = build_line(3).unwrap();
    let on = EncodingOptions::new(1);
    let mut off = EncodingOptions::new(1);
    off.absorption_enabled = false;
    let s_on = minimize_swaps(&p, &g, &on, &Backend::Internal, 1, SwapSearch::Linear)
        .unwrap()
        .swap_count();
    let s_off = minimize_swaps(&p, &g, &off, &Backend::Internal, 1, SwapSearch::Linear)
        .unwrap()
        .swap_count();
    assert!(s_on <= s_off);
    assert_eq!(s_on, 0);
    assert!(s_off > 0, "the triangle program needs real SWAPs without absorption");
}

#[test]
fn postprocess_absorb_improves_or_preserves() {
    let p = fixture("triangle.json");
    let g = build_line(3).unwrap();
    let mut off = EncodingOptions::new(1);
    off.absorption_enabled = false;
    let sol =
        minimize_swaps(&p, &g, &off, &Backend::Internal, 1, SwapSearch::Linear).unwrap();
    let out = postprocess_absorb(&sol, &p, &g).unwrap();
    verify(&p, &g, &out).unwrap();
    assert!(out.swap_count() <= sol.swap_count());
    assert!(out.horizon <= sol.horizon);
    assert_eq!(out.placements.len(), sol.placements.len());
}

#[test]
fn binary_and_linear_budget_scans_agree() {
    let p = fixture("chem5.json");
    let g = build_line(5).unwrap();
    let mut off = EncodingOptions::new(1);
    off.absorption_enabled = false;
    // Slack 0 keeps the horizon at the depth optimum (8 steps here), where
    // both scan strategies must land on the same minimal budget.
    let lin = minimize_swaps(&p, &g, &off, &Backend::Internal, 0, SwapSearch::Linear).unwrap();
    let bin = minimize_swaps(&p, &g, &off, &Backend::Internal, 0, SwapSearch::Binary).unwrap();
    assert_eq!(lin.swap_count(), bin.swap_count());
    assert_eq!(lin.horizon, bin.horizon);
}

#[test]
fn smtlib_emission_is_deterministic_and_complete() {
    let p = fixture("chem5.json");
    let g = build_line(5).unwrap();
    let cs = build(&p, &g, &EncodingOptions::new(5)).unwrap();
    let a = emit_smtlib(&cs);
    let b = emit_smtlib(&cs);
    assert_eq!(a, b, "emission must be byte-identical");
    let declared = a.matches("(declare-fun ").count();
    assert_eq!(declared, cs.vars.count());
    assert!(a.ends_with("(check-sat)\n(get-model)\n"));
}

#[test]
fn portfolio_is_deterministic_and_respects_candidates() {
    let p = fixture("chem5.json");
    let g = build_line(5).unwrap();
    let opts = EncodingOptions::new(1);
    let candidates = vec![vec![0, 1, 2, 3, 4], vec![4, 3, 2, 1, 0]];
    let run = || {
        portfolio_solve(&p, &g, &opts, &Backend::Internal, Objective::Depth, &candidates, 2)
            .unwrap()
    };
    let first = run();
    let second = run();
    verify(&p, &g, &first).unwrap();
    assert_eq!(first, second);
    assert!(candidates.contains(&first.mapping[0]));
}

// --- External backend, driven by stub scripts -------------------------------

fn stub_script(dir: &std::path::Path, body: &str) -> String {
    let path = dir.join("stub.sh");
    fs::write(&path, format!("#!/bin/sh\n{body}\n")).unwrap();
    fs::set_permissions(&path, fs::Permissions::from_mode(0o755)).unwrap();
    path.display().to_string()
}

#[test]
fn external_stub_unsat() {
    let dir = tempfile::tempdir().unwrap();
    let cmd = stub_script(dir.path(), "cat > /dev/null\necho unsat");
    let p = fixture("one_gate.json");
    let g = build_line(2).unwrap();
    let cs = build(&p, &g, &EncodingOptions::new(1)).unwrap();
    let outcome = check(&cs, &Backend::External { command: cmd, timeout: None }).unwrap();
    assert_eq!(outcome.status, Status::Unsat);
    assert!(outcome.model.is_none());
}

#[test]
fn external_stub_sat_model_decodes() {
    let dir = tempfile::tempdir().unwrap();
    let cmd = stub_script(
        dir.path(),
        r#"cat > /dev/null
echo sat
echo '(model'
echo '  (define-fun pi_q0_t0 () Int 0)'
echo '  (define-fun pi_q1_t0 () Int 1)'
echo '  (define-fun tg_0 () Int 0)'
echo '  (define-fun xg_0 () Int 0)'
echo '  (define-fun a_e0_t0 () Bool false)'
echo '  (define-fun s_e0_t0 () Bool false)'
echo ')'"#,
    );
    let p = fixture("one_gate.json");
    let g = build_line(2).unwrap();
    let cs = build(&p, &g, &EncodingOptions::new(1)).unwrap();
    let outcome = check(&cs, &Backend::External { command: cmd, timeout: None }).unwrap();
    assert_eq!(outcome.status, Status::Sat);
    let model = outcome.model.unwrap();
    assert!(model.satisfies_system(&cs));
    let sol = decode(&model, &cs.vars).unwrap();
    verify(&p, &g, &sol).unwrap();
    assert_eq!(sol.horizon, 1);
}

#[test]
fn external_stub_unknown_is_timeout() {
    let dir = tempfile::tempdir().unwrap();
    let cmd = stub_script(dir.path(), "cat > /dev/null\necho unknown");
    let p = fixture("one_gate.json");
    let g = build_line(2).unwrap();
    let cs = build(&p, &g, &EncodingOptions::new(1)).unwrap();
    let outcome = check(&cs, &Backend::External { command: cmd, timeout: None }).unwrap();
    assert_eq!(outcome.status, Status::Timeout);
}

#[test]
fn external_stub_hang_is_killed_on_timeout() {
    let dir = tempfile::tempdir().unwrap();
    let cmd = stub_script(dir.path(), "cat > /dev/null\nsleep 30\necho sat");
    let p = fixture("one_gate.json");
    let g = build_line(2).unwrap();
    let cs = build(&p, &g, &EncodingOptions::new(1)).unwrap();
    let start = Instant::now();
    let outcome = check(
        &cs,
        &Backend::External { command: cmd, timeout: Some(Duration::from_millis(250)) },
    )
    .unwrap();
    assert_eq!(outcome.status, Status::Timeout);
    assert!(start.elapsed() < Duration::from_secs(10), "child must be killed promptly");
}

#[test]
fn external_garbage_verdict_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cmd = stub_script(dir.path(), "cat > /dev/null\necho flibbertigibbet");
    let p = fixture("one_gate.json");
    let g = build_line(2).unwrap();
    let cs = build(&p, &g, &EncodingOptions::new(1)).unwrap();
    let err = check(&cs, &Backend::External { command: cmd, timeout: None }).unwrap_err();
    assert!(matches!(err, qmap_core::Error::Backend(_)));
}

#[test]
fn external_missing_binary_is_an_error() {
    let p = fixture("one_gate.json");
    let g = build_line(2).unwrap();
    let cs = build(&p, &g, &EncodingOptions::new(1)).unwrap();
    let backend = Backend::External {
        command: "/nonexistent/definitely-not-a-solver".into(),
        timeout: None,
    };
    assert!(check(&cs, &backend).is_err());
}

#[test]
fn deepening_grows_the_emitted_script() {
    let p = fixture("chem5.json");
    let g = build_line(5).unwrap();
    let sol = minimize_depth(&p, &g, &EncodingOptions::new(1), &Backend::Internal, None).unwrap();
    assert_eq!(sol.horizon, 5);
    let small = emit_smtlib(&build(&p, &g, &EncodingOptions::new(4)).unwrap());
    let large = emit_smtlib(&build(&p, &g, &EncodingOptions::new(5)).unwrap());
    assert!(large.len() > small.len());
}
