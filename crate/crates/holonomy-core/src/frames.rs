//! Parametrized orthonormal frames over charts of control-parameter space.
//!
//! A [`FrameFamily`] is a smooth map from control parameters to an ordered
//! orthonormal set of vectors spanning a degenerate subspace. Frames are
//! supplied analytically per chart; pointwise eigensolvers return arbitrary
//! gauges, so the connection machinery downstream presumes these smooth
//! evaluators and numerical eigenframes are only used by tests for
//! gauge-invariant span comparisons.
//!
//! The built-in ion-trap dark frame carries two charts over the (θ, φ)
//! sphere. The `equatorial` chart holds the raw dark states, which are
//! singular at the poles; the `north` chart applies the integer-charge
//! rotation exp(-iσ_y φ) to the frame labels, which makes the frame regular
//! at the north pole and is the chart in which latitude-loop holonomies take
//! the solid-angle form.

use crate::numerics::{C64, StateVector};
use crate::statekit::{AncillaBasis, SpectralWeights};
use std::collections::HashMap;
use std::sync::Arc;
use thiserror::Error;

/// Orthonormality drift above which evaluation fails (or triggers repair).
pub const ORTHONORMALITY_LIMIT: f64 = 1e-8;

/// Default central-difference step, radians.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Sphere chart of the raw dark states, poles excluded.
pub const CHART_EQUATORIAL: &str = "equatorial";
/// Sphere chart regular at the north pole.
pub const CHART_NORTH: &str = "north";

/// Pole margin of the built-in sphere charts, radians.
pub const POLE_MARGIN: f64 = 0.05;

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("unknown chart `{0}`")]
    UnknownChart(String),
    #[error("chart `{chart}` domain violation: coordinate {index} = {value}")]
    ChartDomainViolation { chart: String, index: usize, value: f64 },
    #[error("coordinate count {got} does not match chart dimension {expected}")]
    CoordinateCount { got: usize, expected: usize },
    #[error("frame is not orthonormal (drift {0:.3e}) and repair is disabled")]
    NotOrthonormal(f64),
    #[error("weights length {got} does not match frame degeneracy {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("no tabulated frame at coordinates {0:?}")]
    TabulatedPointMissing(Vec<f64>),
    #[error("frame evaluator failed: {0}")]
    Evaluator(String),
}

/// One coordinate's validity range. Periodic coordinates are unrestricted.
#[derive(Clone, Debug)]
pub struct CoordRange {
    pub min: f64,
    pub max: f64,
    pub period: Option<f64>,
}

impl CoordRange {
    pub fn bounded(min: f64, max: f64) -> Self {
        Self { min, max, period: None }
    }

    pub fn periodic(period: f64) -> Self {
        Self { min: f64::NEG_INFINITY, max: f64::INFINITY, period: Some(period) }
    }

    pub fn unbounded() -> Self {
        Self { min: f64::NEG_INFINITY, max: f64::INFINITY, period: None }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.period.is_some() || (x >= self.min && x <= self.max)
    }
}

/// Chart descriptor: a name, a coordinate dimension and per-coordinate ranges.
#[derive(Clone, Debug)]
pub struct Chart {
    pub id: String,
    pub ranges: Vec<CoordRange>,
}

impl Chart {
    pub fn dim(&self) -> usize {
        self.ranges.len()
    }

    fn sphere(id: &str, theta_min: f64, theta_max: f64) -> Self {
        Self {
            id: id.to_string(),
            ranges: vec![
                CoordRange::bounded(theta_min, theta_max),
                CoordRange::periodic(2.0 * std::f64::consts::PI),
            ],
        }
    }
}

/// A point in one chart of control-parameter space.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlPoint {
    pub chart: String,
    pub coords: Vec<f64>,
}

impl ControlPoint {
    pub fn new(chart: &str, coords: Vec<f64>) -> Self {
        Self { chart: chart.to_string(), coords }
    }

    /// Sphere-chart point (θ, φ).
    pub fn sphere(chart: &str, theta: f64, phi: f64) -> Self {
        Self::new(chart, vec![theta, phi])
    }
}

type FrameEval = dyn Fn(&ControlPoint) -> Result<Vec<StateVector>, FrameError> + Send + Sync;

/// Smooth map from control parameters to an ordered orthonormal frame of
/// `n` vectors in a `dim_s`-dimensional space.
#[derive(Clone)]
pub struct FrameFamily {
    n: usize,
    dim_s: usize,
    charts: Vec<Chart>,
    eval: Arc<FrameEval>,
}

impl FrameFamily {
    /// Wrap a closed-form evaluator. Orthonormality is still checked at
    /// every evaluation.
    pub fn from_evaluator(
        n: usize,
        dim_s: usize,
        charts: Vec<Chart>,
        eval: impl Fn(&ControlPoint) -> Result<Vec<StateVector>, FrameError> + Send + Sync + 'static,
    ) -> Self {
        Self { n, dim_s, charts, eval: Arc::new(eval) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim_s(&self) -> usize {
        self.dim_s
    }

    pub fn charts(&self) -> &[Chart] {
        &self.charts
    }

    pub fn chart(&self, id: &str) -> Result<&Chart, FrameError> {
        self.charts
            .iter()
            .find(|c| c.id == id)
            .ok_or_else(|| FrameError::UnknownChart(id.to_string()))
    }

    fn check_domain(&self, q: &ControlPoint) -> Result<(), FrameError> {
        let chart = self.chart(&q.chart)?;
        if q.coords.len() != chart.dim() {
            return Err(FrameError::CoordinateCount { got: q.coords.len(), expected: chart.dim() });
        }
        for (i, (x, range)) in q.coords.iter().zip(&chart.ranges).enumerate() {
            if !range.contains(*x) {
                return Err(FrameError::ChartDomainViolation {
                    chart: q.chart.clone(),
                    index: i,
                    value: *x,
                });
            }
        }
        Ok(())
    }

    /// Evaluate the frame, enforcing the chart domain.
    pub fn evaluate(&self, q: &ControlPoint) -> Result<Vec<StateVector>, FrameError> {
        self.check_domain(q)?;
        self.eval_checked(q)
    }

    /// Evaluate outside the declared chart domain. Only meant for the
    /// gauge-singularity demonstrations near the poles; everything else
    /// should go through [`FrameFamily::evaluate`].
    pub fn evaluate_permissive(&self, q: &ControlPoint) -> Result<Vec<StateVector>, FrameError> {
        let chart = self.chart(&q.chart)?;
        if q.coords.len() != chart.dim() {
            return Err(FrameError::CoordinateCount { got: q.coords.len(), expected: chart.dim() });
        }
        self.eval_checked(q)
    }

    fn eval_checked(&self, q: &ControlPoint) -> Result<Vec<StateVector>, FrameError> {
        let frame = (self.eval)(q)?;
        let drift = orthonormality_drift(&frame);
        if drift > ORTHONORMALITY_LIMIT {
            return Err(FrameError::NotOrthonormal(drift));
        }
        Ok(frame)
    }
}

fn orthonormality_drift(frame: &[StateVector]) -> f64 {
    let mut drift = 0.0f64;
    for (i, a) in frame.iter().enumerate() {
        for (j, b) in frame.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            drift = drift.max((a.dot(b) - C64::new(target, 0.0)).norm());
        }
    }
    drift
}

/// Modified Gram-Schmidt, in place.
fn gram_schmidt(frame: &mut [StateVector]) {
    for i in 0..frame.len() {
        for j in 0..i {
            let overlap = frame[j].dot(&frame[i]);
            frame[i] = frame[i].sub(&frame[j].scale(overlap));
        }
        frame[i] = frame[i].normalized();
    }
}

/// Dark states of the three-ground-state ion coupled to one excited level,
/// ordered basis (|0⟩, |1⟩, |a⟩, |e⟩):
///
///   D_0 = cosθ cosφ |0⟩ + cosθ sinφ |1⟩ − sinθ |a⟩
///   D_1 = −sinφ |0⟩ + cosφ |1⟩
///
/// on the `equatorial` chart. The `north` chart returns the label-rotated
/// frame W(φ)·D with W = exp(-iσ_y φ), regular at θ = 0.
pub fn iontrap_dark_frame() -> FrameFamily {
    let charts = vec![
        Chart::sphere(CHART_EQUATORIAL, POLE_MARGIN, std::f64::consts::PI - POLE_MARGIN),
        Chart::sphere(CHART_NORTH, 0.0, std::f64::consts::PI - POLE_MARGIN),
    ];
    FrameFamily::from_evaluator(2, 4, charts, |q| {
        let (theta, phi) = (q.coords[0], q.coords[1]);
        let d0 = StateVector::from_real(&[
            theta.cos() * phi.cos(),
            theta.cos() * phi.sin(),
            -theta.sin(),
            0.0,
        ]);
        let d1 = StateVector::from_real(&[-phi.sin(), phi.cos(), 0.0, 0.0]);
        match q.chart.as_str() {
            CHART_EQUATORIAL => Ok(vec![d0, d1]),
            CHART_NORTH => {
                let (c, s) = (phi.cos(), phi.sin());
                let n0 = d0.scale(C64::new(c, 0.0)).sub(&d1.scale(C64::new(s, 0.0)));
                let n1 = d0.scale(C64::new(s, 0.0)).add(&d1.scale(C64::new(c, 0.0)));
                Ok(vec![n0, n1])
            }
            other => Err(FrameError::UnknownChart(other.to_string())),
        }
    })
}

/// Two-level rotating frame {(cos t, sin t), (−sin t, cos t)} on a single
/// unbounded chart `line`.
pub fn planar_rotation_frame() -> FrameFamily {
    let charts = vec![Chart { id: "line".into(), ranges: vec![CoordRange::unbounded()] }];
    FrameFamily::from_evaluator(2, 2, charts, |q| {
        let t = q.coords[0];
        Ok(vec![
            StateVector::from_real(&[t.cos(), t.sin()]),
            StateVector::from_real(&[-t.sin(), t.cos()]),
        ])
    })
}

/// Look up a named closed-form frame.
pub fn closed_form_frame(name: &str) -> Result<FrameFamily, FrameError> {
    match name {
        "iontrap_dark" => Ok(iontrap_dark_frame()),
        "planar_rotation" => Ok(planar_rotation_frame()),
        other => Err(FrameError::Evaluator(format!("unknown closed-form frame `{other}`"))),
    }
}

/// One tabulated sample point: coordinates and the frame vectors there.
#[derive(Clone, Debug)]
pub struct TabulatedPoint {
    pub coords: Vec<f64>,
    pub vectors: Vec<StateVector>,
}

/// Frame given only at explicit sample points; evaluation anywhere else is
/// an error (no interpolation).
pub fn tabulated_frame(
    chart: Chart,
    points: Vec<TabulatedPoint>,
    repair: bool,
) -> Result<FrameFamily, FrameError> {
    let first = points
        .first()
        .ok_or_else(|| FrameError::Evaluator("tabulated frame needs at least one point".into()))?;
    let n = first.vectors.len();
    let dim_s = first.vectors.first().map(|v| v.dim()).unwrap_or(0);
    if n == 0 || dim_s == 0 {
        return Err(FrameError::Evaluator("tabulated frame has empty vectors".into()));
    }

    let mut table: HashMap<Vec<u64>, Vec<StateVector>> = HashMap::with_capacity(points.len());
    for point in points {
        if point.coords.len() != chart.dim() {
            return Err(FrameError::CoordinateCount {
                got: point.coords.len(),
                expected: chart.dim(),
            });
        }
        if point.vectors.len() != n || point.vectors.iter().any(|v| v.dim() != dim_s) {
            return Err(FrameError::Evaluator(format!(
                "inconsistent vector shape at {:?}",
                point.coords
            )));
        }
        let mut vectors = point.vectors;
        let drift = orthonormality_drift(&vectors);
        if drift > ORTHONORMALITY_LIMIT {
            if !repair {
                return Err(FrameError::NotOrthonormal(drift));
            }
            gram_schmidt(&mut vectors);
        }
        table.insert(coord_key(&point.coords), vectors);
    }

    let chart_clone = chart.clone();
    Ok(FrameFamily::from_evaluator(n, dim_s, vec![chart_clone], move |q| {
        table
            .get(&coord_key(&q.coords))
            .cloned()
            .ok_or_else(|| FrameError::TabulatedPointMissing(q.coords.clone()))
    }))
}

fn coord_key(coords: &[f64]) -> Vec<u64> {
    coords.iter().map(|x| x.to_bits()).collect()
}

/// Central difference (frame(q + h·e_μ) − frame(q − h·e_μ)) / 2h.
pub fn frame_derivative(
    frame: &FrameFamily,
    q: &ControlPoint,
    direction: usize,
    h: f64,
) -> Result<Vec<StateVector>, FrameError> {
    frame_derivative_impl(frame, q, direction, h, false)
}

pub(crate) fn frame_derivative_impl(
    frame: &FrameFamily,
    q: &ControlPoint,
    direction: usize,
    h: f64,
    permissive: bool,
) -> Result<Vec<StateVector>, FrameError> {
    let mut fwd = q.clone();
    let mut bwd = q.clone();
    fwd.coords[direction] += h;
    bwd.coords[direction] -= h;
    let (plus, minus) = if permissive {
        (frame.evaluate_permissive(&fwd)?, frame.evaluate_permissive(&bwd)?)
    } else {
        (frame.evaluate(&fwd)?, frame.evaluate(&bwd)?)
    };
    let inv = C64::new(1.0 / (2.0 * h), 0.0);
    Ok(plus
        .iter()
        .zip(&minus)
        .map(|(p, m)| p.sub(m).scale(inv))
        .collect())
}

/// Orthonormal frame on system ⊗ ancilla whose members all reduce to the
/// same mixing spectrum:
///
///   Ξ_a(q) = Σ_k sqrt(λ_k) ξ_{[a+k] mod N}(q) ⊗ φ_k.
#[derive(Clone)]
pub struct IsoEntangledFrame {
    base: FrameFamily,
    weights: SpectralWeights,
    ancilla: AncillaBasis,
}

impl IsoEntangledFrame {
    pub fn new(base: FrameFamily, weights: SpectralWeights) -> Result<Self, FrameError> {
        if weights.len() != base.n() {
            return Err(FrameError::LengthMismatch { got: weights.len(), expected: base.n() });
        }
        let ancilla = AncillaBasis::computational(base.n());
        Ok(Self { base, weights, ancilla })
    }

    pub fn base(&self) -> &FrameFamily {
        &self.base
    }

    pub fn weights(&self) -> &SpectralWeights {
        &self.weights
    }

    pub fn ancilla(&self) -> &AncillaBasis {
        &self.ancilla
    }

    pub fn n(&self) -> usize {
        self.base.n()
    }

    /// Dimension of the product space.
    pub fn dim_total(&self) -> usize {
        self.base.dim_s() * self.base.n()
    }

    pub fn evaluate(&self, q: &ControlPoint) -> Result<Vec<StateVector>, FrameError> {
        let base = self.base.evaluate(q)?;
        Ok(self.lift(&base))
    }

    pub fn evaluate_permissive(&self, q: &ControlPoint) -> Result<Vec<StateVector>, FrameError> {
        let base = self.base.evaluate_permissive(q)?;
        Ok(self.lift(&base))
    }

    fn lift(&self, base: &[StateVector]) -> Vec<StateVector> {
        let n = self.base.n();
        (0..n)
            .map(|a| {
                let mut xi = StateVector::zeros(self.dim_total());
                for k in 0..n {
                    let lambda = self.weights.lambda(k);
                    if lambda == 0.0 {
                        continue;
                    }
                    let term = base[(a + k) % n]
                        .tensor(self.ancilla.vector(k))
                        .scale(C64::new(lambda.sqrt(), 0.0));
                    xi = xi.add(&term);
                }
                xi
            })
            .collect()
    }
}

/// Lift a base frame to the iso-entangled composite frame.
pub fn lift_iso_entangled(
    base: FrameFamily,
    weights: SpectralWeights,
) -> Result<IsoEntangledFrame, FrameError> {
    IsoEntangledFrame::new(base, weights)
}
