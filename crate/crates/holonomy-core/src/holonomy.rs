//! Holonomies of closed parameter loops, by two independent numerical
//! methods and by the ion-trap closed form, plus the transport maps that
//! turn a holonomy into final reduced density operators.
//!
//! Path ordering: with the row-is-initial-label convention the transport
//! satisfies dU/dt = −U·A(q_t)·q̇, so segment factors accumulate on the
//! right, earliest segment leftmost. For counterclockwise latitude loops on
//! the northern chart this reproduces U = exp(i r Ω σ_y) with Ω the enclosed
//! solid angle.

use crate::connection::{
    mixed_connection_impl, wilczek_zee_impl, ConnectionError, IndexConvention, IontrapPatch,
};
use crate::frames::{ControlPoint, FrameError, FrameFamily, IsoEntangledFrame};
use crate::numerics::{self, ComplexMatrix, StateVector, C64};
use crate::statekit::{DensityOperator, SpectralWeights, StatekitError};
use thiserror::Error;

/// Unitarity defect above which a holonomy result is refused outright.
pub const UNITARITY_LIMIT: f64 = 1e-9;
/// Defect below which the product is left untouched instead of polar-polished.
pub const UNITARITY_POLISH_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum HolonomyError {
    #[error("loop does not close: frame endpoint mismatch {0:.3e}")]
    NonClosure(f64),
    #[error("loop needs at least {expected} samples, got {got}")]
    TooFewSamples { got: usize, expected: usize },
    #[error(transparent)]
    Connection(#[from] ConnectionError),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    State(#[from] StatekitError),
    #[error(
        "link unitarization failed after {segments} segments; the loop is \
         under-sampled — double the segment count"
    )]
    UndersampledLoop { segments: usize },
    #[error(
        "holonomy unitarity defect {defect:.3e} exceeds {UNITARITY_LIMIT:.0e}; \
         increase the segment count"
    )]
    ExcessiveDefect { defect: f64 },
    #[error("solid angles are defined for sphere charts, not `{0}`")]
    NotSphereLoop(String),
    #[error("holonomy uses convention {got:?}, expected {expected:?}")]
    ConventionMismatch { got: IndexConvention, expected: IndexConvention },
    #[error("initial label {label} out of range for degeneracy {n}")]
    LabelOutOfRange { label: usize, n: usize },
    #[error(transparent)]
    Numerics(#[from] numerics::NumericsError),
}

/// What the sample list of a loop describes.
#[derive(Clone, Debug, PartialEq)]
pub enum LoopKind {
    /// Constant-θ circle; φ runs over the stored samples.
    Latitude { theta0: f64 },
    /// Straight coordinate edges between user vertices.
    Polygon,
    /// Explicit sample list.
    Samples,
}

/// Discretized closed path inside one chart.
///
/// Samples run q_0 … q_M with q_M equal to q_0 up to declared coordinate
/// periods; closure is verified against the frame itself before integration.
#[derive(Clone, Debug)]
pub struct Loop {
    chart: String,
    points: Vec<Vec<f64>>,
    kind: LoopKind,
    permissive: bool,
}

impl Loop {
    /// Latitude circle at θ0 traversed with increasing φ in `segments` steps.
    pub fn latitude(chart: &str, theta0: f64, segments: usize) -> Self {
        let two_pi = 2.0 * std::f64::consts::PI;
        let points = (0..=segments)
            .map(|i| vec![theta0, two_pi * i as f64 / segments as f64])
            .collect();
        Self {
            chart: chart.to_string(),
            points,
            kind: LoopKind::Latitude { theta0 },
            permissive: false,
        }
    }

    /// Closed polygon through the given chart vertices, each edge subdivided
    /// linearly in coordinates.
    pub fn polygon(chart: &str, vertices: &[Vec<f64>], samples_per_edge: usize) -> Self {
        assert!(vertices.len() >= 2, "polygon needs at least two vertices");
        assert!(samples_per_edge >= 1);
        let mut points = Vec::new();
        let m = vertices.len();
        for e in 0..m {
            let a = &vertices[e];
            let b = &vertices[(e + 1) % m];
            for s in 0..samples_per_edge {
                let f = s as f64 / samples_per_edge as f64;
                points.push(
                    a.iter().zip(b).map(|(x, y)| x * (1.0 - f) + y * f).collect::<Vec<f64>>(),
                );
            }
        }
        points.push(vertices[0].clone());
        Self { chart: chart.to_string(), points, kind: LoopKind::Polygon, permissive: false }
    }

    /// Loop through explicit sample points (first and last must agree up to
    /// coordinate periods).
    pub fn from_points(chart: &str, points: Vec<Vec<f64>>) -> Self {
        Self { chart: chart.to_string(), points, kind: LoopKind::Samples, permissive: false }
    }

    /// Same loop with the chart-domain guard disabled. Meant for the
    /// gauge-singularity demonstrations near the poles.
    pub fn permissive(mut self) -> Self {
        self.permissive = true;
        self
    }

    /// Traversal reversed; the enclosed solid angle changes sign.
    pub fn reversed(&self) -> Self {
        let mut points = self.points.clone();
        points.reverse();
        Self {
            chart: self.chart.clone(),
            points,
            kind: self.kind.clone(),
            permissive: self.permissive,
        }
    }

    pub fn chart(&self) -> &str {
        &self.chart
    }

    pub fn kind(&self) -> &LoopKind {
        &self.kind
    }

    pub fn is_permissive(&self) -> bool {
        self.permissive
    }

    pub fn segments(&self) -> usize {
        self.points.len().saturating_sub(1)
    }

    pub fn point(&self, i: usize) -> ControlPoint {
        ControlPoint::new(&self.chart, self.points[i].clone())
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }
}

/// Integration method that produced a holonomy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    ExponentialProduct,
    WilsonLink,
    ClosedForm,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::ExponentialProduct => "exponential-product",
            Method::WilsonLink => "wilson-link",
            Method::ClosedForm => "closed-form",
        }
    }
}

/// N×N holonomy unitary plus integration diagnostics.
#[derive(Clone, Debug)]
pub struct HolonomyResult {
    u: ComplexMatrix,
    pub method: Method,
    pub segments: usize,
    /// Unitarity defect of the raw ordered product, before any polishing.
    pub unitarity_defect: f64,
    pub convention: IndexConvention,
}

impl HolonomyResult {
    pub fn new(
        u: ComplexMatrix,
        method: Method,
        segments: usize,
        unitarity_defect: f64,
    ) -> Self {
        Self { u, method, segments, unitarity_defect, convention: IndexConvention::RowInitial }
    }

    /// The holonomy with rows indexed by the initial frame label.
    pub fn u_row_initial(&self) -> &ComplexMatrix {
        &self.u
    }

    /// The same unitary re-indexed to act on coefficient columns.
    pub fn u_col(&self) -> ComplexMatrix {
        self.u.transpose()
    }

    pub fn n(&self) -> usize {
        self.u.rows()
    }
}

fn frame_closure_defect(
    frame: &FrameFamily,
    loop_: &Loop,
) -> Result<f64, HolonomyError> {
    let first = eval_frame(frame, &loop_.point(0), loop_.permissive)?;
    let last = eval_frame(frame, &loop_.point(loop_.points.len() - 1), loop_.permissive)?;
    Ok(first
        .iter()
        .zip(&last)
        .map(|(a, b)| a.sub(b).norm())
        .fold(0.0, f64::max))
}

fn eval_frame(
    frame: &FrameFamily,
    q: &ControlPoint,
    permissive: bool,
) -> Result<Vec<StateVector>, FrameError> {
    if permissive {
        frame.evaluate_permissive(q)
    } else {
        frame.evaluate(q)
    }
}

fn validate_loop(frame: &FrameFamily, loop_: &Loop) -> Result<(), HolonomyError> {
    if loop_.points.len() < 2 {
        return Err(HolonomyError::TooFewSamples { got: loop_.points.len(), expected: 2 });
    }
    let defect = frame_closure_defect(frame, loop_)?;
    if defect > 1e-12 {
        return Err(HolonomyError::NonClosure(defect));
    }
    Ok(())
}

fn finalize_product(
    u: ComplexMatrix,
    method: Method,
    segments: usize,
) -> Result<HolonomyResult, HolonomyError> {
    let defect = u.unitarity_defect();
    if defect > UNITARITY_LIMIT {
        return Err(HolonomyError::ExcessiveDefect { defect });
    }
    let u = if defect > UNITARITY_POLISH_FLOOR {
        numerics::unitary_polar_factor(&u)?
    } else {
        u
    };
    Ok(HolonomyResult::new(u, method, segments, defect))
}

/// Ordered product of per-segment exponentials exp(−Σ_μ A_μ(q_mid)·Δq_μ),
/// midpoint rule, composed in path order.
pub fn holonomy_exponential_product(
    frame: &FrameFamily,
    weights: Option<&SpectralWeights>,
    loop_: &Loop,
    h: f64,
) -> Result<HolonomyResult, HolonomyError> {
    validate_loop(frame, loop_)?;
    let n = frame.n();
    let mut u = ComplexMatrix::identity(n);
    let m = loop_.segments();
    for i in 0..m {
        let a = &loop_.points[i];
        let b = &loop_.points[i + 1];
        let mid = ControlPoint::new(
            &loop_.chart,
            a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect(),
        );
        let mut exponent = ComplexMatrix::zeros(n, n);
        for (direction, (x, y)) in a.iter().zip(b).enumerate() {
            let dq = y - x;
            if dq == 0.0 {
                continue;
            }
            let sample = match weights {
                Some(w) => {
                    mixed_connection_impl(frame, w, &mid, direction, h, loop_.permissive)?
                }
                None => wilczek_zee_impl(frame, &mid, direction, h, loop_.permissive)?,
            };
            exponent = exponent.add(&sample.matrix.scale_re(-dq));
        }
        u = u.matmul(&numerics::expm(&exponent));
    }
    finalize_product(u, Method::ExponentialProduct, m)
}

/// Ordered product of per-segment overlap links, each unitarized by the
/// polar factor. Entry (a, b) of a link is
/// Σ_k λ_k ⟨ξ_{[b+k]}(q_{i+1}) | ξ_{[a+k]}(q_i)⟩.
pub fn holonomy_wilson_link(
    frame: &FrameFamily,
    weights: Option<&SpectralWeights>,
    loop_: &Loop,
) -> Result<HolonomyResult, HolonomyError> {
    validate_loop(frame, loop_)?;
    let n = frame.n();
    let pure_weights = SpectralWeights::pure(n);
    let w = weights.unwrap_or(&pure_weights);
    if w.len() != n {
        return Err(HolonomyError::Connection(ConnectionError::LengthMismatch {
            got: w.len(),
            expected: n,
        }));
    }
    let m = loop_.segments();
    let mut u = ComplexMatrix::identity(n);
    let mut prev = eval_frame(frame, &loop_.point(0), loop_.permissive)?;
    for i in 0..m {
        let next = eval_frame(frame, &loop_.point(i + 1), loop_.permissive)?;
        let link = ComplexMatrix::from_fn(n, n, |a, b| {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..n {
                let lambda = w.lambda(k);
                if lambda == 0.0 {
                    continue;
                }
                acc += next[(b + k) % n].dot(&prev[(a + k) % n]) * lambda;
            }
            acc
        });
        let unitary_link = numerics::unitary_polar_factor(&link)
            .map_err(|_| HolonomyError::UndersampledLoop { segments: m })?;
        u = u.matmul(&unitary_link);
        prev = next;
    }
    finalize_product(u, Method::WilsonLink, m)
}

/// [[cos(rΩ), sin(rΩ)], [−sin(rΩ), cos(rΩ)]] — the exponential of i r Ω σ_y
/// in row-is-initial-label form.
pub fn closed_form_from_solid_angle(omega: f64, r: f64) -> HolonomyResult {
    let angle = r * omega;
    let u = ComplexMatrix::from_real_rows(&[
        &[angle.cos(), angle.sin()],
        &[-angle.sin(), angle.cos()],
    ]);
    HolonomyResult::new(u, Method::ClosedForm, 0, 0.0)
}

/// Closed-form ion-trap holonomy exp(i r Ω σ_y), Ω from the loop geometry.
pub fn iontrap_holonomy_closed_form(
    loop_: &Loop,
    r: f64,
) -> Result<HolonomyResult, HolonomyError> {
    let omega = solid_angle(loop_)?;
    let mut result = closed_form_from_solid_angle(omega, r);
    result.segments = loop_.segments();
    Ok(result)
}

/// Oriented solid angle enclosed by a sphere-chart loop.
///
/// Latitude loops use (φ_M − φ_0)·(1 − cosθ0) exactly; other loops sum the
/// signed spherical excesses of the triangles spanned from the north pole,
/// so a counterclockwise loop around the pole measures the area of the
/// region containing the pole.
pub fn solid_angle(loop_: &Loop) -> Result<f64, HolonomyError> {
    if IontrapPatch::from_chart(loop_.chart()).is_none() {
        return Err(HolonomyError::NotSphereLoop(loop_.chart.clone()));
    }
    if loop_.points.len() < 2 {
        return Err(HolonomyError::TooFewSamples { got: loop_.points.len(), expected: 2 });
    }
    let first = &loop_.points[0];
    let last = &loop_.points[loop_.points.len() - 1];
    let two_pi = 2.0 * std::f64::consts::PI;
    let theta_gap = (first[0] - last[0]).abs();
    let phi_gap = (first[1] - last[1]).rem_euclid(two_pi).min(
        (last[1] - first[1]).rem_euclid(two_pi),
    );
    if theta_gap > 1e-9 || phi_gap > 1e-9 {
        return Err(HolonomyError::NonClosure(theta_gap.max(phi_gap)));
    }

    if let LoopKind::Latitude { theta0 } = loop_.kind {
        return Ok((last[1] - first[1]) * (1.0 - theta0.cos()));
    }

    let unit = |c: &Vec<f64>| -> [f64; 3] {
        let (theta, phi) = (c[0], c[1]);
        [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
    };
    let mut omega = 0.0;
    for i in 0..loop_.points.len() - 1 {
        let p = unit(&loop_.points[i]);
        let q = unit(&loop_.points[i + 1]);
        // signed excess of the triangle (north pole, p, q)
        let triple = p[0] * q[1] - p[1] * q[0]; // ẑ · (p × q)
        let denom = 1.0 + p[2] + q[2] + (p[0] * q[0] + p[1] * q[1] + p[2] * q[2]);
        omega += 2.0 * triple.atan2(denom);
    }
    Ok(omega)
}

/// Initial condition for [`apply_to_reduced_state`], expressed in the lifted
/// frame at the loop base point.
#[derive(Clone, Debug)]
pub enum InitialCondition {
    /// Start from the single lifted frame member with this label.
    FrameLabel(usize),
    /// Start from a mixed composite state, written in the lifted frame basis.
    CompositeDensity(DensityOperator),
}

/// Reduced density operator of the system after transport, written in the
/// base-frame basis at the loop base point.
///
/// The gate acts as Ξ_a → Σ_b U_ab Ξ_b; a composite density ϱ evolves by
/// conjugation with that gate and is then traced over the ancilla, which in
/// the frame basis reads `ρ[p][q] = Σ_k λ_k ϱ(T)[p−k][q−k]` (indices mod N).
pub fn apply_to_reduced_state(
    holonomy: &HolonomyResult,
    weights: &SpectralWeights,
    initial: &InitialCondition,
) -> Result<DensityOperator, HolonomyError> {
    if holonomy.convention != IndexConvention::RowInitial {
        return Err(HolonomyError::ConventionMismatch {
            got: holonomy.convention,
            expected: IndexConvention::RowInitial,
        });
    }
    let n = holonomy.n();
    if weights.len() != n {
        return Err(HolonomyError::Connection(ConnectionError::LengthMismatch {
            got: weights.len(),
            expected: n,
        }));
    }
    let rho0 = match initial {
        InitialCondition::FrameLabel(a) => {
            if *a >= n {
                return Err(HolonomyError::LabelOutOfRange { label: *a, n });
            }
            ComplexMatrix::from_fn(n, n, |i, j| {
                if i == *a && j == *a {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            })
        }
        InitialCondition::CompositeDensity(rho) => {
            if rho.dim() != n {
                return Err(HolonomyError::State(StatekitError::DimensionMismatch(format!(
                    "composite density dim {} != degeneracy {n}",
                    rho.dim()
                ))));
            }
            rho.matrix().clone()
        }
    };
    // gate matrix in the lifted-frame basis is the transpose of the
    // row-is-initial-label unitary
    let gate = holonomy.u_col();
    let rho_t = gate.matmul(&rho0).matmul(&gate.adjoint());
    let reduced = ComplexMatrix::from_fn(n, n, |p, q| {
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..n {
            let lambda = weights.lambda(k);
            if lambda == 0.0 {
                continue;
            }
            acc += rho_t[((p + n - k) % n, (q + n - k) % n)] * lambda;
        }
        acc
    });
    Ok(DensityOperator::new(reduced)?)
}

/// Express a frame-basis reduced state as an operator on the ambient system
/// space, using the base frame at `q0`.
pub fn reduced_state_ambient(
    iso: &IsoEntangledFrame,
    q0: &ControlPoint,
    rho_frame: &DensityOperator,
) -> Result<DensityOperator, HolonomyError> {
    let base = iso.base().evaluate(q0)?;
    let n = iso.n();
    if rho_frame.dim() != n {
        return Err(HolonomyError::State(StatekitError::DimensionMismatch(format!(
            "frame-basis density dim {} != degeneracy {n}",
            rho_frame.dim()
        ))));
    }
    let dim_s = iso.base().dim_s();
    let mut out = ComplexMatrix::zeros(dim_s, dim_s);
    for p in 0..n {
        for q in 0..n {
            let coeff = rho_frame.matrix()[(p, q)];
            if coeff.norm_sqr() == 0.0 {
                continue;
            }
            out = out.add(&base[p].outer(&base[q]).scale(coeff));
        }
    }
    Ok(DensityOperator::new(out)?)
}

/// Transport of the standard-polarized purification: start from the lifted
/// frame member with label 0 (reduced state diag((1+r)/2, (1−r)/2)) and
/// apply the holonomy.
pub fn transport_polarized(
    holonomy: &HolonomyResult,
    r: f64,
) -> Result<DensityOperator, HolonomyError> {
    let weights = SpectralWeights::from_r(r).map_err(HolonomyError::State)?;
    apply_to_reduced_state(holonomy, &weights, &InitialCondition::FrameLabel(0))
}

/// Apply the holonomy gate to the purification whose reduced state is the
/// pure label-0 projector: the lift of the Hadamard-rotated frame. Returns
/// the final reduced state in the base-frame basis.
pub fn scenario_pure_to_mixed(
    holonomy: &HolonomyResult,
    r: f64,
) -> Result<DensityOperator, HolonomyError> {
    let weights = SpectralWeights::from_r(r).map_err(HolonomyError::State)?;
    let n = holonomy.n();
    if n != 2 {
        return Err(HolonomyError::State(StatekitError::DimensionMismatch(format!(
            "pure-to-mixed scenario is two-level, got degeneracy {n}"
        ))));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    // Hadamard-rotated frame labels in the abstract two-level space
    let xi = [StateVector::from_real(&[s, s]), StateVector::from_real(&[s, -s])];
    // lifted vectors on the 2x2 product space
    let lifted: Vec<StateVector> = (0..2)
        .map(|a| {
            let mut v = StateVector::zeros(4);
            for k in 0..2 {
                let term = xi[(a + k) % 2]
                    .tensor(&StateVector::basis(2, k))
                    .scale(C64::new(weights.lambda(k).sqrt(), 0.0));
                v = v.add(&term);
            }
            v
        })
        .collect();
    // initial coefficients (1, 1)/√2 in the rotated lift; the gate applies
    // its matrix elements in that basis: d = Uᵀ c
    let c = [C64::new(s, 0.0), C64::new(s, 0.0)];
    let u = holonomy.u_row_initial();
    let mut psi = StateVector::zeros(4);
    for b in 0..2 {
        let d_b = c[0] * u[(0, b)] + c[1] * u[(1, b)];
        psi = psi.add(&lifted[b].scale(d_b));
    }
    let rho = crate::statekit::partial_trace_ancilla(&crate::statekit::BipartiteState::from_vector(
        2,
        2,
        psi,
        crate::statekit::AncillaBasis::computational(2),
    )?)?;
    Ok(rho)
}

/// Transport of the mixed composite input diag((1+R)/2, (1−R)/2) in the
/// lifted frame basis, reduced to the system.
pub fn scenario_composite_mixed(
    holonomy: &HolonomyResult,
    r: f64,
    big_r: f64,
) -> Result<DensityOperator, HolonomyError> {
    let weights = SpectralWeights::from_r(r).map_err(HolonomyError::State)?;
    let composite = SpectralWeights::from_r(big_r).map_err(HolonomyError::State)?;
    apply_to_reduced_state(
        holonomy,
        &weights,
        &InitialCondition::CompositeDensity(DensityOperator::from_diagonal(&composite)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{
        iontrap_dark_frame, planar_rotation_frame, Chart, CoordRange, CHART_EQUATORIAL,
        CHART_NORTH, DEFAULT_FD_STEP,
    };
    use crate::statekit::SpectralWeights;
    use std::f64::consts::PI;

    fn mat_close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
        a.sub(b).max_norm() <= tol
    }

    fn i_sigma_y() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[-1.0, 0.0]])
    }

    #[test]
    fn constant_frame_loop_is_trivial() {
        let charts = vec![Chart { id: "line".into(), ranges: vec![CoordRange::unbounded()] }];
        let frame = FrameFamily::from_evaluator(2, 2, charts, |_| {
            Ok(vec![StateVector::basis(2, 0), StateVector::basis(2, 1)])
        });
        let loop_ = Loop::from_points(
            "line",
            (0..=40).map(|i| vec![(i as f64 / 40.0) * 2.0 * PI]).collect(),
        );
        let u = holonomy_exponential_product(&frame, None, &loop_, 1e-5).unwrap();
        assert!(mat_close(u.u_row_initial(), &ComplexMatrix::identity(2), 1e-12));
        let w = holonomy_wilson_link(&frame, None, &loop_).unwrap();
        assert!(mat_close(w.u_row_initial(), &ComplexMatrix::identity(2), 1e-12));
    }

    #[test]
    fn degenerate_loop_gives_identity() {
        let frame = iontrap_dark_frame();
        let loop_ = Loop::from_points(CHART_NORTH, vec![vec![1.0, 0.0], vec![1.0, 0.0]]);
        let w = holonomy_wilson_link(&frame, None, &loop_).unwrap();
        assert!(mat_close(w.u_row_initial(), &ComplexMatrix::identity(2), 1e-14));
    }

    #[test]
    fn latitude_loop_matches_solid_angle_law_for_mixed_weights() {
        // θ0 = π/3 → Ω = π; r = 0.5 → rΩ = π/2 → U = iσ_y
        let frame = iontrap_dark_frame();
        let weights = SpectralWeights::from_r(0.5).unwrap();
        let loop_ = Loop::latitude(CHART_NORTH, PI / 3.0, 20_000);
        let u = holonomy_exponential_product(&frame, Some(&weights), &loop_, DEFAULT_FD_STEP)
            .unwrap();
        assert!(mat_close(u.u_row_initial(), &i_sigma_y(), 1e-6), "{:?}", u.u_row_initial());
        let w = holonomy_wilson_link(&frame, Some(&weights), &loop_).unwrap();
        assert!(mat_close(w.u_row_initial(), &i_sigma_y(), 1e-6));
        assert!(u.u_row_initial().sub(w.u_row_initial()).max_norm() <= 1e-6, "method agreement");
    }

    #[test]
    fn latitude_loop_pure_limit_gives_minus_identity() {
        let frame = iontrap_dark_frame();
        let weights = SpectralWeights::from_r(1.0).unwrap();
        let loop_ = Loop::latitude(CHART_NORTH, PI / 3.0, 20_000);
        let u = holonomy_exponential_product(&frame, Some(&weights), &loop_, DEFAULT_FD_STEP)
            .unwrap();
        let minus_i = ComplexMatrix::identity(2).scale_re(-1.0);
        assert!(mat_close(u.u_row_initial(), &minus_i, 1e-6));
    }

    #[test]
    fn balanced_weights_loop_is_trivial() {
        let frame = iontrap_dark_frame();
        let weights = SpectralWeights::from_r(0.0).unwrap();
        let loop_ = Loop::latitude(CHART_NORTH, PI / 3.0, 2_000);
        let u = holonomy_exponential_product(&frame, Some(&weights), &loop_, DEFAULT_FD_STEP)
            .unwrap();
        assert!(mat_close(u.u_row_initial(), &ComplexMatrix::identity(2), 1e-8));
        let w = holonomy_wilson_link(&frame, Some(&weights), &loop_).unwrap();
        assert!(mat_close(w.u_row_initial(), &ComplexMatrix::identity(2), 1e-8));
    }

    #[test]
    fn planar_rotation_full_turn_closes_to_identity() {
        let frame = planar_rotation_frame();
        let loop_ = Loop::from_points(
            "line",
            (0..=2000).map(|i| vec![2.0 * PI * i as f64 / 2000.0]).collect(),
        );
        let u = holonomy_exponential_product(&frame, None, &loop_, 1e-5).unwrap();
        // integer-charge rotation: exp(-i 2π σ_y) = I
        assert!(mat_close(u.u_row_initial(), &ComplexMatrix::identity(2), 1e-8));
    }

    #[test]
    fn holonomies_are_unitary() {
        let frame = iontrap_dark_frame();
        for r in [0.0, 0.3, 0.9] {
            let weights = SpectralWeights::from_r(r).unwrap();
            let loop_ = Loop::latitude(CHART_NORTH, 1.1, 4_000);
            let u =
                holonomy_exponential_product(&frame, Some(&weights), &loop_, DEFAULT_FD_STEP)
                    .unwrap();
            assert!(u.u_row_initial().unitarity_defect() <= 1e-9);
            let w = holonomy_wilson_link(&frame, Some(&weights), &loop_).unwrap();
            assert!(w.u_row_initial().unitarity_defect() <= 1e-9);
        }
    }

    #[test]
    fn pure_holonomy_is_chart_independent() {
        // at r = 1 the chart transition has integer charge, so integrating
        // the same latitude loop in either gauge gives the same unitary
        let frame = iontrap_dark_frame();
        let weights = SpectralWeights::from_r(1.0).unwrap();
        for theta0 in [0.7, 1.4, 2.2] {
            let north = Loop::latitude(CHART_NORTH, theta0, 4_000);
            let equatorial = Loop::latitude(CHART_EQUATORIAL, theta0, 4_000);
            let un = holonomy_exponential_product(&frame, Some(&weights), &north, DEFAULT_FD_STEP)
                .unwrap();
            let ue =
                holonomy_exponential_product(&frame, Some(&weights), &equatorial, DEFAULT_FD_STEP)
                    .unwrap();
            assert!(
                un.u_row_initial().sub(ue.u_row_initial()).max_norm() <= 1e-9,
                "charts disagree at θ0 = {theta0}"
            );
        }
    }

    #[test]
    fn methods_agree_on_a_loop_with_varying_connection() {
        // wavy latitude: θ(φ) = θ0 + a sin φ, so the connection genuinely
        // varies along the path and both integrators carry real error terms
        let frame = iontrap_dark_frame();
        let weights = SpectralWeights::from_r(0.8).unwrap();
        let m = 4_000;
        let points = (0..=m)
            .map(|i| {
                let phi = 2.0 * PI * i as f64 / m as f64;
                vec![1.1 + 0.35 * phi.sin(), phi]
            })
            .collect();
        let loop_ = Loop::from_points(CHART_NORTH, points);
        let exp = holonomy_exponential_product(&frame, Some(&weights), &loop_, DEFAULT_FD_STEP)
            .unwrap();
        let wilson = holonomy_wilson_link(&frame, Some(&weights), &loop_).unwrap();
        assert!(
            exp.u_row_initial().sub(wilson.u_row_initial()).max_norm() <= 1e-5,
            "method disagreement {:.3e}",
            exp.u_row_initial().sub(wilson.u_row_initial()).max_norm()
        );
        // and both match the solid-angle law for the enclosed area
        let omega = solid_angle(&loop_).unwrap();
        let reference = closed_form_from_solid_angle(omega, 0.8);
        assert!(exp.u_row_initial().sub(reference.u_row_initial()).max_norm() <= 1e-5);
    }

    #[test]
    fn double_traversal_squares_the_holonomy() {
        let frame = iontrap_dark_frame();
        let weights = SpectralWeights::from_r(0.7).unwrap();
        let theta0 = 1.0;
        let single = Loop::latitude(CHART_NORTH, theta0, 3_000);
        let two_pi = 2.0 * PI;
        let doubled = Loop::from_points(
            CHART_NORTH,
            (0..=6_000).map(|i| vec![theta0, 2.0 * two_pi * i as f64 / 6_000.0]).collect(),
        );
        let u1 = holonomy_exponential_product(&frame, Some(&weights), &single, DEFAULT_FD_STEP)
            .unwrap();
        let u2 =
            holonomy_exponential_product(&frame, Some(&weights), &doubled, DEFAULT_FD_STEP)
                .unwrap();
        let squared = u1.u_row_initial().matmul(u1.u_row_initial());
        assert!(mat_close(u2.u_row_initial(), &squared, 1e-6));
    }

    #[test]
    fn orthogonal_links_report_undersampling() {
        // Consecutive tabulated frames with zero mutual overlap make a
        // singular link that cannot be unitarized.
        use crate::frames::{tabulated_frame, TabulatedPoint};
        let chart = Chart { id: "line".into(), ranges: vec![CoordRange::unbounded()] };
        let points = vec![
            TabulatedPoint {
                coords: vec![0.0],
                vectors: vec![StateVector::basis(4, 0), StateVector::basis(4, 1)],
            },
            TabulatedPoint {
                coords: vec![1.0],
                vectors: vec![StateVector::basis(4, 2), StateVector::basis(4, 3)],
            },
        ];
        let frame = tabulated_frame(chart, points, false).unwrap();
        let loop_ = Loop::from_points("line", vec![vec![0.0], vec![1.0], vec![0.0]]);
        let err = holonomy_wilson_link(&frame, None, &loop_);
        assert!(matches!(err, Err(HolonomyError::UndersampledLoop { .. })));
    }

    #[test]
    fn non_smooth_frames_are_rejected_by_the_differencer() {
        // A frame that flips discontinuously has an enormous raw
        // anti-Hermiticity defect at the jump.
        let charts = vec![Chart { id: "line".into(), ranges: vec![CoordRange::unbounded()] }];
        let frame = FrameFamily::from_evaluator(2, 2, charts, |q| {
            if q.coords[0] < 0.5 {
                Ok(vec![StateVector::basis(2, 0), StateVector::basis(2, 1)])
            } else {
                Ok(vec![StateVector::basis(2, 1), StateVector::basis(2, 0)])
            }
        });
        // segment midpoint 0.5 straddles the jump under central differencing
        let loop_ = Loop::from_points("line", vec![vec![0.0], vec![1.0], vec![0.0]]);
        let err = holonomy_exponential_product(&frame, None, &loop_, 1e-5);
        assert!(matches!(
            err,
            Err(HolonomyError::Connection(ConnectionError::AntiHermiticityDefect(_)))
        ));
    }

    #[test]
    fn open_path_is_rejected() {
        let frame = iontrap_dark_frame();
        let open = Loop::from_points(
            CHART_NORTH,
            (0..=100).map(|i| vec![1.0, 3.0 * i as f64 / 100.0]).collect(),
        );
        let err = holonomy_exponential_product(&frame, None, &open, DEFAULT_FD_STEP);
        assert!(matches!(err, Err(HolonomyError::NonClosure(_))));
    }

    #[test]
    fn solid_angle_of_latitude_circles() {
        let equator = Loop::latitude(CHART_NORTH, PI / 2.0, 100);
        assert!((solid_angle(&equator).unwrap() - 2.0 * PI).abs() < 1e-12);
        let sixty = Loop::latitude(CHART_NORTH, PI / 3.0, 100);
        assert!((solid_angle(&sixty).unwrap() - PI).abs() < 1e-12);
        let reversed = sixty.reversed();
        assert!((solid_angle(&reversed).unwrap() + PI).abs() < 1e-12);
    }

    #[test]
    fn solid_angle_by_triangle_fan_agrees_with_latitude_formula() {
        let theta0 = 0.9;
        let fanned = Loop::from_points(
            CHART_NORTH,
            (0..=5_000).map(|i| vec![theta0, 2.0 * PI * i as f64 / 5_000.0]).collect(),
        );
        let exact = 2.0 * PI * (1.0 - theta0.cos());
        assert!((solid_angle(&fanned).unwrap() - exact).abs() < 1e-6);
    }

    #[test]
    fn solid_angle_rejects_non_sphere_charts() {
        let loop_ = Loop::from_points("line", vec![vec![0.0], vec![0.0]]);
        assert!(matches!(solid_angle(&loop_), Err(HolonomyError::NotSphereLoop(_))));
    }

    #[test]
    fn closed_form_holonomy_values() {
        let loop_ = Loop::latitude(CHART_NORTH, PI / 3.0, 100);
        let u = iontrap_holonomy_closed_form(&loop_, 0.5).unwrap();
        assert!(mat_close(u.u_row_initial(), &i_sigma_y(), 1e-14));
        let trivial = iontrap_holonomy_closed_form(&loop_, 0.0).unwrap();
        assert!(mat_close(trivial.u_row_initial(), &ComplexMatrix::identity(2), 1e-15));
    }

    #[test]
    fn equatorial_gauge_artifact_near_the_pole() {
        // Integrating the equatorial-gauge connection around a tiny polar
        // loop shows the patch artifact exp(-i 2πr cosθ σ_y); the northern
        // gauge gives ≈ I for the same loop.
        let frame = iontrap_dark_frame();
        let r = 0.5;
        let weights = SpectralWeights::from_r(r).unwrap();
        let theta = 0.01;
        let equatorial = Loop::latitude(CHART_EQUATORIAL, theta, 20_000).permissive();
        let u = holonomy_exponential_product(&frame, Some(&weights), &equatorial, DEFAULT_FD_STEP)
            .unwrap();
        let angle = -2.0 * PI * r * theta.cos();
        let artifact = ComplexMatrix::from_real_rows(&[
            &[angle.cos(), angle.sin()],
            &[-angle.sin(), angle.cos()],
        ]);
        assert!(mat_close(u.u_row_initial(), &artifact, 1e-6));
        // at r = 0.5 and θ → 0 this is ≈ −I
        assert!(mat_close(u.u_row_initial(), &ComplexMatrix::identity(2).scale_re(-1.0), 1e-3));

        let north = Loop::latitude(CHART_NORTH, theta, 2_000);
        let un = holonomy_exponential_product(&frame, Some(&weights), &north, DEFAULT_FD_STEP)
            .unwrap();
        assert!(mat_close(un.u_row_initial(), &ComplexMatrix::identity(2), 1e-3));
    }

    #[test]
    fn transported_state_examples() {
        let r = 0.5;
        // identity holonomy leaves the initial reduction unchanged
        let id = HolonomyResult::new(ComplexMatrix::identity(2), Method::ClosedForm, 0, 0.0);
        let rho = transport_polarized(&id, r).unwrap();
        assert!((rho.matrix()[(0, 0)].re - 0.75).abs() < 1e-14);
        assert!((rho.matrix()[(1, 1)].re - 0.25).abs() < 1e-14);

        // 2rΩ = π swaps the populations
        let u = closed_form_from_solid_angle(PI / (2.0 * r), r);
        let rho = transport_polarized(&u, r).unwrap();
        assert!((rho.matrix()[(0, 0)].re - 0.25).abs() < 1e-12);
        assert!((rho.matrix()[(1, 1)].re - 0.75).abs() < 1e-12);

        // 2rΩ = π/2 produces the pure state ½(I + σ_x)
        let u = closed_form_from_solid_angle(PI / (4.0 * r), r);
        let rho = transport_polarized(&u, r).unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-12);
        let b = rho.bloch_vector().unwrap();
        assert!((b[0] - 1.0).abs() < 1e-12 && b[1].abs() < 1e-12 && b[2].abs() < 1e-12);
    }

    #[test]
    fn transported_purity_follows_the_oscillation_law() {
        let r = 0.5f64;
        for i in 0..40 {
            let omega = 4.0 * PI * i as f64 / 39.0;
            let u = closed_form_from_solid_angle(omega, r);
            let rho = transport_polarized(&u, r).unwrap();
            let expected =
                0.5 * (1.0 + r * r + (1.0 - r * r) * (2.0 * r * omega).sin().powi(2));
            assert!((rho.purity() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn pure_to_mixed_scenario_follows_its_closed_form() {
        let r = 0.5f64;
        for i in 0..25 {
            let omega = 3.0 * PI * i as f64 / 24.0;
            let u = closed_form_from_solid_angle(omega, r);
            let rho = scenario_pure_to_mixed(&u, r).unwrap();
            let b = rho.bloch_vector().unwrap();
            let x = -r * (2.0 * r * omega).sin();
            let z = (2.0 * r * omega).cos();
            assert!((b[0] - x).abs() < 1e-12, "omega {omega}");
            assert!((b[2] - z).abs() < 1e-12);
            assert!(b[1].abs() < 1e-12);
        }
        // purity 1 exactly at Ω = nπ/(2r)
        for n in 0..4 {
            let omega = n as f64 * PI / (2.0 * r);
            let u = closed_form_from_solid_angle(omega, r);
            let rho = scenario_pure_to_mixed(&u, r).unwrap();
            assert!((rho.purity() - 1.0).abs() < 1e-12);
        }
        // r = 1 stays pure for every Ω
        for i in 0..10 {
            let omega = 2.0 * PI * i as f64 / 9.0;
            let u = closed_form_from_solid_angle(omega, 1.0);
            let rho = scenario_pure_to_mixed(&u, 1.0).unwrap();
            let b = rho.bloch_vector().unwrap();
            let norm = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn composite_mixed_scenario_shrinks_the_ellipse() {
        let r = 0.5f64;
        let omega = PI / (4.0 * r); // 2rΩ = π/2
        let u = closed_form_from_solid_angle(omega, r);
        // R = 1 reduces to the polarized transport
        let full = scenario_composite_mixed(&u, r, 1.0).unwrap();
        let direct = transport_polarized(&u, r).unwrap();
        assert!(full.matrix().sub(direct.matrix()).max_norm() < 1e-13);
        // R = 0 is invariant
        let frozen = scenario_composite_mixed(&u, r, 0.0).unwrap();
        assert!(frozen
            .matrix()
            .sub(&ComplexMatrix::identity(2).scale_re(0.5))
            .max_norm()
            < 1e-13);
        // R = 0.5 scales the Bloch vector: x = R sin(2rΩ) = 0.5 here
        let half = scenario_composite_mixed(&u, r, 0.5).unwrap();
        let b = half.bloch_vector().unwrap();
        assert!((b[0] - 0.5).abs() < 1e-12);
        assert!(b[1].abs() < 1e-12 && b[2].abs() < 1e-12);
        let bf = direct.bloch_vector().unwrap();
        for axis in 0..3 {
            assert!((b[axis] - 0.5 * bf[axis]).abs() < 1e-12);
        }
    }

    #[test]
    fn convention_mismatch_is_refused() {
        let mut u = HolonomyResult::new(ComplexMatrix::identity(2), Method::ClosedForm, 0, 0.0);
        u.convention = IndexConvention::ColInitial;
        let err = transport_polarized(&u, 0.5);
        assert!(matches!(err, Err(HolonomyError::ConventionMismatch { .. })));
    }

    #[test]
    fn transported_purification_anchor() {
        // After the loop: coefficients of Ξ_b are cos(rΩ) and sin(rΩ).
        let r = 0.6;
        let omega = 1.3;
        let u = closed_form_from_solid_angle(omega, r);
        let c = u.u_col();
        let coeffs = [c[(0, 0)], c[(1, 0)]]; // column action on e_0
        assert!((coeffs[0].re - (r * omega).cos()).abs() < 1e-14);
        assert!((coeffs[1].re - (r * omega).sin()).abs() < 1e-14);
    }
}
