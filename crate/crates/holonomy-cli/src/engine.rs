//! Scenario execution: build the frame and loop, run the requested
//! computation per point, and emit result rows in a fixed column order.

use crate::scenario::{FrameSpec, Mode, OutputKind, Scenario, SchemaError, SweepSpec};
use holonomy_core::dynamics::{
    composite_hamiltonian, default_steps, schrodinger_evolve, Schedule, Stepper,
};
use holonomy_core::frames::{lift_iso_entangled, FrameFamily};
use holonomy_core::holonomy::{
    holonomy_exponential_product, holonomy_wilson_link, scenario_composite_mixed, solid_angle,
    HolonomyResult, Loop,
};
use holonomy_core::numerics::ComplexMatrix;
use holonomy_core::statekit::{
    partial_trace_ancilla, trace_distance, AncillaBasis, BipartiteState, DensityOperator,
    SpectralWeights,
};
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;

#[derive(Debug)]
pub enum RunError {
    Schema(SchemaError),
    Numerical(String),
    Io(std::io::Error),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Schema(e) => write!(f, "{e}"),
            RunError::Numerical(e) => write!(f, "numerical error: {e}"),
            RunError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl From<SchemaError> for RunError {
    fn from(e: SchemaError) -> Self {
        RunError::Schema(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

fn numerical(e: impl std::fmt::Display) -> RunError {
    RunError::Numerical(e.to_string())
}

/// One output row. Optional quantities print as empty CSV cells / JSON null.
#[derive(Debug, Clone, Serialize)]
pub struct ResultRow {
    pub scenario_id: String,
    pub omega_solid: Option<f64>,
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub u00_re: f64,
    pub u00_im: f64,
    pub u01_re: f64,
    pub u01_im: f64,
    pub u10_re: f64,
    pub u10_im: f64,
    pub u11_re: f64,
    pub u11_im: f64,
    pub bloch_x: Option<f64>,
    pub bloch_y: Option<f64>,
    pub bloch_z: Option<f64>,
    pub purity: Option<f64>,
    pub method: String,
    pub unitarity_defect: f64,
    pub infidelity: Option<f64>,
}

pub const CSV_HEADER: &str = "scenario_id,omega_solid,r,R,u00_re,u00_im,u01_re,u01_im,\
u10_re,u10_im,u11_re,u11_im,bloch_x,bloch_y,bloch_z,purity,method,unitarity_defect,infidelity";

fn fmt_value(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_value).unwrap_or_default()
}

impl ResultRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.scenario_id,
            fmt_opt(self.omega_solid),
            fmt_value(self.r),
            fmt_value(self.big_r),
            fmt_value(self.u00_re),
            fmt_value(self.u00_im),
            fmt_value(self.u01_re),
            fmt_value(self.u01_im),
            fmt_value(self.u10_re),
            fmt_value(self.u10_im),
            fmt_value(self.u11_re),
            fmt_value(self.u11_im),
            fmt_opt(self.bloch_x),
            fmt_opt(self.bloch_y),
            fmt_opt(self.bloch_z),
            fmt_opt(self.purity),
            self.method,
            fmt_value(self.unitarity_defect),
            fmt_opt(self.infidelity),
        )
    }

    fn validate(&self) -> Result<(), RunError> {
        let fields = [
            ("omega_solid", self.omega_solid),
            ("bloch_x", self.bloch_x),
            ("bloch_y", self.bloch_y),
            ("bloch_z", self.bloch_z),
            ("purity", self.purity),
            ("infidelity", self.infidelity),
            ("u00_re", Some(self.u00_re)),
            ("u00_im", Some(self.u00_im)),
            ("u01_re", Some(self.u01_re)),
            ("u01_im", Some(self.u01_im)),
            ("u10_re", Some(self.u10_re)),
            ("u10_im", Some(self.u10_im)),
            ("u11_re", Some(self.u11_re)),
            ("u11_im", Some(self.u11_im)),
            ("unitarity_defect", Some(self.unitarity_defect)),
        ];
        for (name, value) in fields {
            if let Some(v) = value {
                if !v.is_finite() {
                    return Err(RunError::Numerical(format!("row field {name} is not finite")));
                }
            }
        }
        if let Some(p) = self.purity {
            if !(0.5 - 1e-9..=1.0 + 1e-9).contains(&p) {
                return Err(RunError::Numerical(format!("purity {p} outside [1/2, 1]")));
            }
        }
        Ok(())
    }
}

/// Sweep parameter values, index order.
fn sweep_values(sweep: &SweepSpec) -> Vec<f64> {
    (0..sweep.count)
        .map(|k| {
            if sweep.count == 1 {
                sweep.from
            } else {
                sweep.from + (sweep.to - sweep.from) * k as f64 / (sweep.count - 1) as f64
            }
        })
        .collect()
}

struct PointOverride {
    theta0: Option<f64>,
    r: Option<f64>,
    big_r: Option<f64>,
}

impl PointOverride {
    fn none() -> Self {
        Self { theta0: None, r: None, big_r: None }
    }
}

fn integrate(
    scenario: &Scenario,
    frame: &FrameFamily,
    weights: &SpectralWeights,
    loop_: &Loop,
) -> Result<HolonomyResult, RunError> {
    let tabulated = matches!(scenario.frame, Some(FrameSpec::Tabulated(_)));
    if tabulated {
        holonomy_wilson_link(frame, Some(weights), loop_).map_err(numerical)
    } else {
        holonomy_exponential_product(frame, Some(weights), loop_, scenario.h).map_err(numerical)
    }
}

fn holonomy_row(
    scenario: &Scenario,
    frame: &FrameFamily,
    scenario_id: String,
    point: &PointOverride,
) -> Result<ResultRow, RunError> {
    let r = point.r.unwrap_or_else(|| scenario.effective_r());
    let big_r = point.big_r.unwrap_or(scenario.big_r);
    let weights = match point.r {
        Some(swept) => SpectralWeights::from_r(swept)
            .map_err(|e| RunError::Schema(SchemaError(format!("swept r: {e}"))))?,
        None => scenario.spectral_weights()?,
    };
    let chart = scenario.loop_chart(frame);
    let loop_ = scenario.build_loop_with(&chart, point.theta0)?;
    let holonomy = integrate(scenario, frame, &weights, &loop_)?;
    let omega = solid_angle(&loop_).ok();
    let wants = scenario.effective_outputs();
    let (bloch, purity) = if wants.contains(&OutputKind::Bloch)
        || wants.contains(&OutputKind::Purity)
    {
        let rho = scenario_composite_mixed(&holonomy, r, big_r).map_err(numerical)?;
        let b = rho.bloch_vector().map_err(numerical)?;
        (Some(b), Some(rho.purity()))
    } else {
        (None, None)
    };
    let row = assemble_row(
        scenario_id,
        &holonomy,
        omega,
        r,
        big_r,
        bloch,
        purity,
        None,
        &wants,
    );
    row.validate()?;
    Ok(row)
}

fn dynamics_row(
    scenario: &Scenario,
    frame: &FrameFamily,
    scenario_id: String,
) -> Result<ResultRow, RunError> {
    let r = scenario.effective_r();
    let weights = scenario.spectral_weights()?;
    let chart = scenario.loop_chart(frame);
    let loop_ = scenario.build_loop(&chart)?;
    let holonomy = integrate(scenario, frame, &weights, &loop_)?;
    let omega = solid_angle(&loop_).ok();

    let iso = lift_iso_entangled(frame.clone(), weights.clone()).map_err(numerical)?;
    let family = composite_hamiltonian(&iso, 0.0, scenario.gap);
    let duration = scenario.t.unwrap_or(0.0);
    let steps = scenario.steps.unwrap_or_else(|| default_steps(&family, duration));
    let schedule = Schedule::from_loop(&loop_, duration);
    let q0 = loop_.point(0);
    let lifted0 = iso.evaluate(&q0).map_err(numerical)?;
    let psi = schrodinger_evolve(&family, &schedule, &lifted0[0], steps, Stepper::MidpointExponential)
        .map_err(numerical)?
        .normalized();

    let dim_s = frame.dim_s();
    let n = frame.n();
    let rho_dyn = partial_trace_ancilla(
        &BipartiteState::from_vector(dim_s, n, psi, AncillaBasis::computational(n))
            .map_err(numerical)?,
    )
    .map_err(numerical)?;

    // prediction in the ambient space, from the transported frame label 0
    let rho_pred_frame =
        holonomy_core::holonomy::transport_polarized(&holonomy, r).map_err(numerical)?;
    let rho_pred = holonomy_core::holonomy::reduced_state_ambient(&iso, &q0, &rho_pred_frame)
        .map_err(numerical)?;
    let infidelity = trace_distance(&rho_dyn, &rho_pred).map_err(numerical)?;

    // dark-sector conditional state for the Bloch/purity columns
    let base0 = frame.evaluate(&q0).map_err(numerical)?;
    let projected = ComplexMatrix::from_fn(n, n, |p, q| {
        base0[p].dot(&base0[q].apply(rho_dyn.matrix()))
    });
    let trace = projected.trace().re;
    if trace <= 0.0 {
        return Err(RunError::Numerical("evolved state has no dark-sector weight".into()));
    }
    let conditional = DensityOperator::new(
        projected
            .add(&projected.adjoint())
            .scale_re(0.5 / trace),
    )
    .map_err(numerical)?;

    let wants = scenario.effective_outputs();
    let bloch = conditional.bloch_vector().map_err(numerical)?;
    let row = assemble_row(
        scenario_id,
        &holonomy,
        omega,
        r,
        scenario.big_r,
        Some(bloch),
        Some(conditional.purity()),
        Some(infidelity),
        &wants,
    );
    row.validate()?;
    Ok(row)
}

#[allow(clippy::too_many_arguments)]
fn assemble_row(
    scenario_id: String,
    holonomy: &HolonomyResult,
    omega: Option<f64>,
    r: f64,
    big_r: f64,
    bloch: Option<[f64; 3]>,
    purity: Option<f64>,
    infidelity: Option<f64>,
    wants: &[OutputKind],
) -> ResultRow {
    let u = holonomy.u_row_initial();
    let keep = |kind: OutputKind| wants.contains(&kind);
    ResultRow {
        scenario_id,
        omega_solid: omega.filter(|_| keep(OutputKind::SolidAngle)),
        r,
        big_r,
        u00_re: u[(0, 0)].re,
        u00_im: u[(0, 0)].im,
        u01_re: u[(0, 1)].re,
        u01_im: u[(0, 1)].im,
        u10_re: u[(1, 0)].re,
        u10_im: u[(1, 0)].im,
        u11_re: u[(1, 1)].re,
        u11_im: u[(1, 1)].im,
        bloch_x: bloch.map(|b| b[0]).filter(|_| keep(OutputKind::Bloch)),
        bloch_y: bloch.map(|b| b[1]).filter(|_| keep(OutputKind::Bloch)),
        bloch_z: bloch.map(|b| b[2]).filter(|_| keep(OutputKind::Bloch)),
        purity: purity.filter(|_| keep(OutputKind::Purity)),
        method: holonomy.method.as_str().to_string(),
        unitarity_defect: holonomy.unitarity_defect,
        infidelity,
    }
}

/// Execute a parsed scenario. Sweep points run in parallel; row order is the
/// sweep index order.
pub fn execute(scenario: &Scenario, scenario_id: &str) -> Result<Vec<ResultRow>, RunError> {
    let frame = scenario.build_frame()?;
    if frame.n() != 2 {
        return Err(RunError::Schema(SchemaError(format!(
            "row output supports two-fold degeneracy, frame has N = {}",
            frame.n()
        ))));
    }
    match scenario.mode {
        Mode::Holonomy => Ok(vec![holonomy_row(
            scenario,
            &frame,
            scenario_id.to_string(),
            &PointOverride::none(),
        )?]),
        Mode::Dynamics => Ok(vec![dynamics_row(scenario, &frame, scenario_id.to_string())?]),
        Mode::Sweep => {
            let sweep = scenario.sweep.as_ref().expect("validated");
            let values = sweep_values(sweep);
            values
                .par_iter()
                .enumerate()
                .map(|(k, &value)| {
                    let mut point = PointOverride::none();
                    match sweep.parameter.as_str() {
                        "theta0" => point.theta0 = Some(value),
                        "r" => point.r = Some(value),
                        "R" => point.big_r = Some(value),
                        _ => unreachable!("validated"),
                    }
                    holonomy_row(scenario, &frame, format!("{scenario_id}[{k}]"), &point)
                })
                .collect()
        }
    }
}

/// Output format of `run`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

pub fn write_rows(
    rows: &[ResultRow],
    format: OutputFormat,
    mut sink: impl Write,
) -> Result<(), RunError> {
    match format {
        OutputFormat::Csv => {
            writeln!(sink, "{CSV_HEADER}")?;
            for row in rows {
                writeln!(sink, "{}", row.to_csv_line())?;
            }
        }
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut sink, rows)
                .map_err(|e| RunError::Numerical(format!("serialization: {e}")))?;
            writeln!(sink)?;
        }
    }
    Ok(())
}
