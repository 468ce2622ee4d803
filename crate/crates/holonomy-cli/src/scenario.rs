//! Scenario file schema and validation. Unknown fields are rejected, not
//! guessed; all angles are radians.

use holonomy_core::frames::{
    closed_form_frame, tabulated_frame, Chart, CoordRange, FrameFamily, TabulatedPoint,
    CHART_NORTH,
};
use holonomy_core::holonomy::Loop;
use holonomy_core::numerics::{StateVector, C64};
use holonomy_core::statekit::SpectralWeights;
use serde::Deserialize;

#[derive(Debug)]
pub struct SchemaError(pub String);

impl std::fmt::Display for SchemaError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "schema error: {}", self.0)
    }
}

impl std::error::Error for SchemaError {}

fn default_big_r() -> f64 {
    1.0
}

fn default_segments() -> usize {
    20_000
}

fn default_fd_step() -> f64 {
    1e-5
}

fn default_gap() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "lowercase")]
pub enum Model {
    Iontrap,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "lowercase")]
pub enum Mode {
    Holonomy,
    Dynamics,
    Sweep,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "lowercase")]
pub enum LoopSpec {
    Latitude { theta0: f64 },
    Polygon { vertices: Vec<Vec<f64>> },
    Samples { points: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: String,
    pub from: f64,
    pub to: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TabulatedSpec {
    pub chart: String,
    pub points: Vec<TabulatedPointSpec>,
    #[serde(default)]
    pub gram_schmidt: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TabulatedPointSpec {
    pub coords: Vec<f64>,
    /// `vectors[a][i]` is the `[re, im]` pair of component i of frame vector a.
    pub vectors: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum FrameSpec {
    ClosedForm(String),
    Tabulated(TabulatedSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Holonomy,
    Bloch,
    Purity,
    SolidAngle,
    Infidelity,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub model: Model,
    pub mode: Mode,
    #[serde(rename = "loop")]
    pub loop_spec: LoopSpec,
    pub r: f64,
    #[serde(rename = "R", default = "default_big_r")]
    pub big_r: f64,
    /// Optional mixing spectrum; overrides `r` when present.
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    #[serde(default = "default_segments")]
    pub m: usize,
    #[serde(default = "default_fd_step")]
    pub h: f64,
    /// Loop duration (dynamics mode).
    #[serde(default)]
    pub t: Option<f64>,
    /// Gap of the composite Hamiltonian (dynamics mode).
    #[serde(default = "default_gap")]
    pub gap: f64,
    /// Step count override (dynamics mode).
    #[serde(default)]
    pub steps: Option<usize>,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub outputs: Option<Vec<OutputKind>>,
    /// Custom-model frame description.
    #[serde(default)]
    pub frame: Option<FrameSpec>,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, SchemaError> {
        let scenario: Scenario =
            serde_json::from_str(text).map_err(|e| SchemaError(e.to_string()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    fn validate(&self) -> Result<(), SchemaError> {
        if !(-1.0..=1.0).contains(&self.r) {
            return Err(SchemaError(format!("field `r` = {} outside [-1, 1]", self.r)));
        }
        if !(-1.0..=1.0).contains(&self.big_r) {
            return Err(SchemaError(format!("field `R` = {} outside [-1, 1]", self.big_r)));
        }
        if self.m < 8 {
            return Err(SchemaError(format!("field `m` = {} below the minimum of 8", self.m)));
        }
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(SchemaError(format!("field `h` = {} must be positive", self.h)));
        }
        if let Some(weights) = &self.weights {
            if weights.len() != 2 {
                return Err(SchemaError(format!(
                    "field `weights` has length {}; row output supports two-level weights only",
                    weights.len()
                )));
            }
            SpectralWeights::new(weights.clone())
                .map_err(|e| SchemaError(format!("field `weights`: {e}")))?;
        }
        match self.mode {
            Mode::Sweep => {
                let sweep = self
                    .sweep
                    .as_ref()
                    .ok_or_else(|| SchemaError("mode `sweep` requires a `sweep` block".into()))?;
                if sweep.count == 0 {
                    return Err(SchemaError("field `sweep.count` must be at least 1".into()));
                }
                match sweep.parameter.as_str() {
                    "theta0" => {
                        if !matches!(self.loop_spec, LoopSpec::Latitude { .. }) {
                            return Err(SchemaError(
                                "sweep over `theta0` requires a latitude loop".into(),
                            ));
                        }
                    }
                    "r" if self.weights.is_some() => {
                        return Err(SchemaError(
                            "sweep over `r` conflicts with explicit `weights`".into(),
                        ))
                    }
                    "r" | "R" => {}
                    other => {
                        return Err(SchemaError(format!(
                            "field `sweep.parameter` = `{other}`; expected theta0, r or R"
                        )))
                    }
                }
            }
            Mode::Dynamics => {
                let t = self.t.ok_or_else(|| {
                    SchemaError("mode `dynamics` requires the duration field `t`".into())
                })?;
                if !(t.is_finite() && t >= 0.0) {
                    return Err(SchemaError(format!("field `t` = {t} must be non-negative")));
                }
                if self.gap <= 0.0 {
                    return Err(SchemaError(format!("field `gap` = {} must be positive", self.gap)));
                }
            }
            Mode::Holonomy => {}
        }
        if self.sweep.is_some() && self.mode != Mode::Sweep {
            return Err(SchemaError("a `sweep` block requires mode `sweep`".into()));
        }
        if let Some(outputs) = &self.outputs {
            if outputs.contains(&OutputKind::Infidelity) && self.mode != Mode::Dynamics {
                return Err(SchemaError(
                    "output `infidelity` is only produced in dynamics mode".into(),
                ));
            }
        }
        match self.model {
            Model::Iontrap => {
                if self.frame.is_some() {
                    return Err(SchemaError(
                        "field `frame` is only accepted for the custom model".into(),
                    ));
                }
            }
            Model::Custom => {
                if self.frame.is_none() {
                    return Err(SchemaError("the custom model requires a `frame` block".into()));
                }
                if self.mode == Mode::Dynamics {
                    return Err(SchemaError(
                        "dynamics mode is only wired to the iontrap model".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// The spectrum used for the lift: explicit weights, else from r.
    pub fn spectral_weights(&self) -> Result<SpectralWeights, SchemaError> {
        match &self.weights {
            Some(w) => SpectralWeights::new(w.clone())
                .map_err(|e| SchemaError(format!("field `weights`: {e}"))),
            None => SpectralWeights::from_r(self.r)
                .map_err(|e| SchemaError(format!("field `r`: {e}"))),
        }
    }

    /// Effective r (polarization) for reporting: from weights when given.
    pub fn effective_r(&self) -> f64 {
        match &self.weights {
            Some(w) => w[0] - w[1],
            None => self.r,
        }
    }

    pub fn build_frame(&self) -> Result<FrameFamily, SchemaError> {
        match self.model {
            Model::Iontrap => Ok(holonomy_core::frames::iontrap_dark_frame()),
            Model::Custom => match self.frame.as_ref().unwrap() {
                FrameSpec::ClosedForm(name) => closed_form_frame(name)
                    .map_err(|e| SchemaError(format!("field `frame.closed_form`: {e}"))),
                FrameSpec::Tabulated(spec) => {
                    let dim = spec
                        .points
                        .first()
                        .map(|p| p.coords.len())
                        .ok_or_else(|| SchemaError("tabulated frame has no points".into()))?;
                    let chart = Chart {
                        id: spec.chart.clone(),
                        ranges: (0..dim).map(|_| CoordRange::unbounded()).collect(),
                    };
                    let points = spec
                        .points
                        .iter()
                        .map(|p| TabulatedPoint {
                            coords: p.coords.clone(),
                            vectors: p
                                .vectors
                                .iter()
                                .map(|v| {
                                    StateVector::from_complex(
                                        v.iter().map(|[re, im]| C64::new(*re, *im)).collect(),
                                    )
                                })
                                .collect(),
                        })
                        .collect();
                    tabulated_frame(chart, points, spec.gram_schmidt)
                        .map_err(|e| SchemaError(format!("field `frame.tabulated`: {e}")))
                }
            },
        }
    }

    /// Chart the loop lives in: the northern gauge for the ion trap (the
    /// chart in which latitude holonomies take the solid-angle form), the
    /// frame's own chart otherwise.
    pub fn loop_chart(&self, frame: &FrameFamily) -> String {
        match self.model {
            Model::Iontrap => CHART_NORTH.to_string(),
            Model::Custom => frame
                .charts()
                .first()
                .map(|c| c.id.clone())
                .unwrap_or_default(),
        }
    }

    pub fn build_loop(&self, chart: &str) -> Result<Loop, SchemaError> {
        self.build_loop_with(chart, None)
    }

    /// Build the loop, optionally overriding the latitude (used by sweeps).
    pub fn build_loop_with(
        &self,
        chart: &str,
        theta0_override: Option<f64>,
    ) -> Result<Loop, SchemaError> {
        match &self.loop_spec {
            LoopSpec::Latitude { theta0 } => {
                let theta0 = theta0_override.unwrap_or(*theta0);
                if !(theta0.is_finite() && theta0 > 0.0 && theta0 < std::f64::consts::PI) {
                    return Err(SchemaError(format!(
                        "field `loop.latitude.theta0` = {theta0} outside (0, π)"
                    )));
                }
                Ok(Loop::latitude(chart, theta0, self.m))
            }
            LoopSpec::Polygon { vertices } => {
                if vertices.len() < 2 {
                    return Err(SchemaError(
                        "field `loop.polygon.vertices` needs at least two vertices".into(),
                    ));
                }
                let per_edge = (self.m / vertices.len()).max(1);
                Ok(Loop::polygon(chart, vertices, per_edge))
            }
            LoopSpec::Samples { points } => {
                if points.len() < 2 {
                    return Err(SchemaError(
                        "field `loop.samples.points` needs at least two points".into(),
                    ));
                }
                Ok(Loop::from_points(chart, points.clone()))
            }
        }
    }

    /// Outputs to compute, defaulted by mode.
    pub fn effective_outputs(&self) -> Vec<OutputKind> {
        match &self.outputs {
            Some(outputs) => outputs.clone(),
            None => match self.mode {
                Mode::Dynamics => vec![
                    OutputKind::Holonomy,
                    OutputKind::Bloch,
                    OutputKind::Purity,
                    OutputKind::SolidAngle,
                    OutputKind::Infidelity,
                ],
                _ => vec![
                    OutputKind::Holonomy,
                    OutputKind::Bloch,
                    OutputKind::Purity,
                    OutputKind::SolidAngle,
                ],
            },
        }
    }
}
