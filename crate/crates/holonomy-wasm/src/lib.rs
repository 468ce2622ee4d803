//! Browser bindings for the holonomy library: Bloch-ellipse transport
//! curves, live loop integration, and the gauge-artifact comparison.

use holonomy_core::frames::{iontrap_dark_frame, CHART_EQUATORIAL, CHART_NORTH, DEFAULT_FD_STEP};
use holonomy_core::holonomy::{
    closed_form_from_solid_angle, holonomy_exponential_product, holonomy_wilson_link,
    scenario_composite_mixed, scenario_pure_to_mixed, transport_polarized, HolonomyResult, Loop,
};
use holonomy_core::statekit::SpectralWeights;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Transport curves over an Ω sweep: for each of `count` samples of
/// Ω ∈ [0, 2π] the output holds seven numbers
/// (Ω, x, z, purity) of the polarized input scaled by R, then
/// (x, z, purity) of the pure input, flattened row-major.
#[wasm_bindgen]
pub fn transport_curves(r: f64, big_r: f64, count: usize) -> Result<Vec<f64>, JsValue> {
    let count = count.clamp(2, 4096);
    let mut out = Vec::with_capacity(count * 7);
    for i in 0..count {
        let omega = 2.0 * std::f64::consts::PI * i as f64 / (count - 1) as f64;
        let u = closed_form_from_solid_angle(omega, r);
        let mixed = scenario_composite_mixed(&u, r, big_r).map_err(err)?;
        let pure = scenario_pure_to_mixed(&u, r).map_err(err)?;
        let bm = mixed.bloch_vector().map_err(err)?;
        let bp = pure.bloch_vector().map_err(err)?;
        out.extend_from_slice(&[omega, bm[0], bm[2], mixed.purity(), bp[0], bp[2], pure.purity()]);
    }
    Ok(out)
}

#[derive(Serialize)]
struct MatrixJson {
    re: [[f64; 2]; 2],
    im: [[f64; 2]; 2],
}

fn matrix_json(result: &HolonomyResult) -> MatrixJson {
    let u = result.u_row_initial();
    MatrixJson {
        re: [[u[(0, 0)].re, u[(0, 1)].re], [u[(1, 0)].re, u[(1, 1)].re]],
        im: [[u[(0, 0)].im, u[(0, 1)].im], [u[(1, 0)].im, u[(1, 1)].im]],
    }
}

#[derive(Serialize)]
struct HolonomyReport {
    omega: f64,
    u: MatrixJson,
    exp_error: f64,
    wilson_error: f64,
    unitarity_defect: f64,
    bloch: [f64; 3],
    purity: f64,
}

/// Integrate a latitude loop on the northern chart with both numerical
/// methods and report errors against the solid-angle closed form, plus the
/// transported reduced state. Returns JSON.
#[wasm_bindgen]
pub fn holonomy_report(theta0: f64, r: f64, segments: usize) -> Result<String, JsValue> {
    if !(0.0 < theta0 && theta0 < std::f64::consts::PI - 0.05) {
        return Err(err("theta0 outside the northern chart"));
    }
    let segments = segments.clamp(8, 50_000);
    let frame = iontrap_dark_frame();
    let weights = SpectralWeights::from_r(r).map_err(err)?;
    let loop_ = Loop::latitude(CHART_NORTH, theta0, segments);
    let omega = 2.0 * std::f64::consts::PI * (1.0 - theta0.cos());
    let reference = closed_form_from_solid_angle(omega, r);

    let exp = holonomy_exponential_product(&frame, Some(&weights), &loop_, DEFAULT_FD_STEP)
        .map_err(err)?;
    let wilson = holonomy_wilson_link(&frame, Some(&weights), &loop_).map_err(err)?;
    let rho = transport_polarized(&exp, r).map_err(err)?;

    let report = HolonomyReport {
        omega,
        u: matrix_json(&exp),
        exp_error: exp.u_row_initial().sub(reference.u_row_initial()).max_norm(),
        wilson_error: wilson.u_row_initial().sub(reference.u_row_initial()).max_norm(),
        unitarity_defect: exp.unitarity_defect,
        bloch: rho.bloch_vector().map_err(err)?,
        purity: rho.purity(),
    };
    serde_json::to_string(&report).map_err(err)
}

#[derive(Serialize)]
struct GaugeArtifactReport {
    u_equatorial: MatrixJson,
    u_north: MatrixJson,
    equatorial_angle: f64,
    north_angle: f64,
}

/// Integrate a tiny polar loop in both gauges: the equatorial chart shows
/// the coordinate-singularity artifact exp(−i 2πr cosθ σ_y) while the
/// northern chart stays near the identity. Returns JSON.
#[wasm_bindgen]
pub fn gauge_artifact_report(theta: f64, r: f64, segments: usize) -> Result<String, JsValue> {
    if !(0.0 < theta && theta < 0.5) {
        return Err(err("the artifact demo wants a small polar angle (0, 0.5)"));
    }
    let segments = segments.clamp(8, 50_000);
    let frame = iontrap_dark_frame();
    let weights = SpectralWeights::from_r(r).map_err(err)?;
    let equatorial = Loop::latitude(CHART_EQUATORIAL, theta, segments).permissive();
    let north = Loop::latitude(CHART_NORTH, theta, segments);
    let u_eq = holonomy_exponential_product(&frame, Some(&weights), &equatorial, DEFAULT_FD_STEP)
        .map_err(err)?;
    let u_n = holonomy_exponential_product(&frame, Some(&weights), &north, DEFAULT_FD_STEP)
        .map_err(err)?;
    let report = GaugeArtifactReport {
        u_equatorial: matrix_json(&u_eq),
        u_north: matrix_json(&u_n),
        equatorial_angle: -2.0 * std::f64::consts::PI * r * theta.cos(),
        north_angle: r * 2.0 * std::f64::consts::PI * (1.0 - theta.cos()),
    };
    serde_json::to_string(&report).map_err(err)
}

fn err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curves_have_the_expected_stride_and_ranges() {
        let data = transport_curves(0.5, 1.0, 64).unwrap();
        assert_eq!(data.len(), 64 * 7);
        for chunk in data.chunks(7) {
            // purity columns stay inside [1/2, 1]
            assert!((0.5 - 1e-12..=1.0 + 1e-12).contains(&chunk[3]));
            assert!((0.5 - 1e-12..=1.0 + 1e-12).contains(&chunk[6]));
        }
        // ellipse half-axes: polarized (1, r), pure input (r, 1)
        let max_x_mixed = data.chunks(7).map(|c| c[1].abs()).fold(0.0, f64::max);
        let max_x_pure = data.chunks(7).map(|c| c[4].abs()).fold(0.0, f64::max);
        assert!((max_x_mixed - 1.0).abs() < 1e-2);
        assert!((max_x_pure - 0.5).abs() < 1e-2);
    }

    #[test]
    fn reports_are_valid_json_with_small_errors() {
        let report = holonomy_report(std::f64::consts::FRAC_PI_3, 0.5, 2000).unwrap();
        let value: serde_json::Value = serde_json::from_str(&report).unwrap();
        assert!(value["exp_error"].as_f64().unwrap() < 1e-6);
        assert!(value["wilson_error"].as_f64().unwrap() < 1e-5);
        assert!((value["u"]["re"][0][1].as_f64().unwrap() - 1.0).abs() < 1e-6);

        let artifact = gauge_artifact_report(0.01, 0.5, 2000).unwrap();
        let value: serde_json::Value = serde_json::from_str(&artifact).unwrap();
        // equatorial gauge near −I at r = 0.5
        assert!((value["u_equatorial"]["re"][0][0].as_f64().unwrap() + 1.0).abs() < 1e-3);
        assert!((value["u_north"]["re"][0][0].as_f64().unwrap() - 1.0).abs() < 1e-3);
    }
}
