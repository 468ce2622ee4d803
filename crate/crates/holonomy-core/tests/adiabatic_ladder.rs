//! Slow-schedule convergence ladders: leakage and infidelity against the
//! holonomy prediction as the loop duration grows, and the gap dependence.

use holonomy_core::dynamics::{adiabatic_report, composite_hamiltonian};
use holonomy_core::frames::{iontrap_dark_frame, lift_iso_entangled, CHART_NORTH, DEFAULT_FD_STEP};
use holonomy_core::holonomy::{holonomy_exponential_product, Loop};
use holonomy_core::statekit::SpectralWeights;
use std::f64::consts::PI;

#[test]
fn leakage_falls_with_duration_and_gap() {
    let frame = iontrap_dark_frame();
    let weights = SpectralWeights::from_r(0.5).unwrap();
    let iso = lift_iso_entangled(frame.clone(), weights.clone()).unwrap();
    let theta0 = PI / 3.0;

    let holonomy_loop = Loop::latitude(CHART_NORTH, theta0, 20_000);
    let holonomy =
        holonomy_exponential_product(&frame, Some(&weights), &holonomy_loop, DEFAULT_FD_STEP)
            .unwrap();

    let schedule_loop = Loop::latitude(CHART_NORTH, theta0, 2_000);
    let lifted0 = iso.evaluate(&schedule_loop.point(0)).unwrap();
    let durations = [250.0, 500.0, 1_000.0, 2_000.0];

    let family = composite_hamiltonian(&iso, 0.0, 1.0);
    let ladder =
        adiabatic_report(&family, &lifted0, &holonomy, &schedule_loop, 0, &durations).unwrap();
    for row in &ladder {
        println!(
            "T = {:6.0}  steps = {:7}  leakage = {:.3e}  infidelity = {:.3e}",
            row.duration, row.steps, row.leakage, row.infidelity
        );
    }
    // oscillatory envelope: compare the endpoints of the ladder
    assert!(
        ladder.last().unwrap().leakage <= ladder.first().unwrap().leakage,
        "leakage did not fall from T = 250 to T = 2000"
    );
    assert!(ladder.last().unwrap().infidelity <= 1e-3);

    // doubling the gap at fixed T must not increase the leakage envelope
    let wide_gap = composite_hamiltonian(&iso, 0.0, 2.0);
    let wide = adiabatic_report(
        &wide_gap,
        &lifted0,
        &holonomy,
        &schedule_loop,
        0,
        &[durations[durations.len() - 1]],
    )
    .unwrap();
    println!(
        "T = {:6.0}  steps = {:7}  leakage = {:.3e}  (gap doubled)",
        wide[0].duration, wide[0].steps, wide[0].leakage
    );
    assert!(wide[0].leakage <= ladder.last().unwrap().leakage);
}

#[test]
fn zero_duration_is_exact() {
    let frame = iontrap_dark_frame();
    let weights = SpectralWeights::from_r(0.5).unwrap();
    let iso = lift_iso_entangled(frame.clone(), weights.clone()).unwrap();
    let loop_ = Loop::latitude(CHART_NORTH, PI / 3.0, 200);
    let lifted0 = iso.evaluate(&loop_.point(0)).unwrap();
    let family = composite_hamiltonian(&iso, 0.0, 1.0);
    // zero-length schedule against the trivial holonomy
    let identity = holonomy_core::holonomy::closed_form_from_solid_angle(0.0, 0.5);
    let report = adiabatic_report(&family, &lifted0, &identity, &loop_, 0, &[0.0]).unwrap();
    assert!(report[0].infidelity <= 1e-12);
    assert!(report[0].leakage <= 1e-12);
}
