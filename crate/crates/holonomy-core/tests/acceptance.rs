//! Acceptance suite: every published verification check, one test per
//! criterion, printing one PASS/FAIL line each (run with `--nocapture` to
//! see the measured errors).

use holonomy_core::verify::{run_check, CheckOutcome};

fn run(name: &str) {
    let outcome: CheckOutcome = run_check(name).expect("check is published");
    for m in &outcome.measurements {
        println!("    {m}");
    }
    println!("{} {}", if outcome.passed { "PASS" } else { "FAIL" }, outcome.name);
    assert!(outcome.passed, "acceptance check `{name}` failed");
}

#[test]
fn acceptance_01_closed_form_holonomy() {
    run("closed-form-holonomy");
}

#[test]
fn acceptance_02_connection_closed_form() {
    run("connection-closed-form");
}

#[test]
fn acceptance_03_pure_limit() {
    run("pure-limit");
}

#[test]
fn acceptance_04_purity_oscillation() {
    run("purity-oscillation");
}

#[test]
fn acceptance_05_mixed_to_pure() {
    run("mixed-to-pure");
}

#[test]
fn acceptance_06_pure_to_mixed() {
    run("pure-to-mixed");
}

#[test]
fn acceptance_07_ellipse_shrinking() {
    run("ellipse-shrinking");
}

#[test]
fn acceptance_08_gauge_artifact() {
    run("gauge-artifact");
}

#[test]
fn acceptance_09_dynamics_vs_holonomy() {
    run("dynamics-vs-holonomy");
}

#[test]
fn acceptance_10_structural_invariants() {
    run("structural-invariants");
}
