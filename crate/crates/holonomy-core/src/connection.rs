//! Gauge-potential samples along parameter directions.
//!
//! The stored matrix follows the transport expansion in which the ROW index
//! is the initial frame label: entry (a, b) of a pure sample is
//! ⟨ξ_b(q)| ∂_μ ξ_a(q)⟩, and the mixed sample is the weight-sum of
//! cyclically label-shifted copies of it. Every sample carries its index
//! convention so downstream consumers can refuse mismatched matrices instead
//! of silently transposing them.

use crate::frames::{self, ControlPoint, FrameError, FrameFamily};
use crate::numerics::{ComplexMatrix, C64};
use crate::statekit::SpectralWeights;
use std::sync::Arc;
use thiserror::Error;

/// Raw finite-difference anti-Hermiticity defect above which the sample is
/// rejected (bad step size or a non-smooth frame).
pub const ANTI_HERMITICITY_LIMIT: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ConnectionError {
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error("connection sample has anti-Hermiticity defect {0:.3e} before symmetrization")]
    AntiHermiticityDefect(f64),
    #[error("gauge transform is not unitary at the sample point (defect {0:.3e})")]
    NonUnitaryGauge(f64),
    #[error("weights length {got} does not match frame degeneracy {expected}")]
    LengthMismatch { got: usize, expected: usize },
}

/// Which label the matrix rows carry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IndexConvention {
    /// Row index is the initial frame label; coefficient columns transform
    /// by the transpose.
    RowInitial,
    /// Row index is the final label; matrices act directly on coefficient
    /// columns.
    ColInitial,
}

/// One component A_μ(q) of the gauge potential.
#[derive(Clone, Debug)]
pub struct ConnectionSample {
    pub point: ControlPoint,
    pub direction: usize,
    pub matrix: ComplexMatrix,
    pub convention: IndexConvention,
    /// ‖A + A†‖_max of the raw finite-difference matrix, before it was
    /// symmetrized away. A quality metric for the differencing step.
    pub defect: f64,
}

fn overlap_matrix(
    frame: &[crate::numerics::StateVector],
    derivative: &[crate::numerics::StateVector],
) -> ComplexMatrix {
    let n = frame.len();
    // entry (a, b) = ⟨ξ_b | ∂ ξ_a⟩
    ComplexMatrix::from_fn(n, n, |a, b| frame[b].dot(&derivative[a]))
}

fn anti_hermitize(m: &ComplexMatrix) -> ComplexMatrix {
    m.sub(&m.adjoint()).scale_re(0.5)
}

pub(crate) fn wilczek_zee_impl(
    frame: &FrameFamily,
    q: &ControlPoint,
    direction: usize,
    h: f64,
    permissive: bool,
) -> Result<ConnectionSample, ConnectionError> {
    let f = if permissive { frame.evaluate_permissive(q) } else { frame.evaluate(q) }?;
    let d = frames::frame_derivative_impl(frame, q, direction, h, permissive)?;
    let raw = overlap_matrix(&f, &d);
    let defect = raw.anti_hermiticity_defect();
    if defect > ANTI_HERMITICITY_LIMIT {
        return Err(ConnectionError::AntiHermiticityDefect(defect));
    }
    Ok(ConnectionSample {
        point: q.clone(),
        direction,
        matrix: anti_hermitize(&raw),
        convention: IndexConvention::RowInitial,
        defect,
    })
}

/// Pure-state gauge potential component at `q` along `direction`, by central
/// differences with step `h`.
pub fn wilczek_zee(
    frame: &FrameFamily,
    q: &ControlPoint,
    direction: usize,
    h: f64,
) -> Result<ConnectionSample, ConnectionError> {
    wilczek_zee_impl(frame, q, direction, h, false)
}

/// Relabel (a, b) → (a+k, b+k) mod n.
fn shift_matrix(m: &ComplexMatrix, k: usize) -> ComplexMatrix {
    let n = m.rows();
    ComplexMatrix::from_fn(n, n, |a, b| m[((a + k) % n, (b + k) % n)])
}

pub(crate) fn mixed_connection_impl(
    frame: &FrameFamily,
    weights: &SpectralWeights,
    q: &ControlPoint,
    direction: usize,
    h: f64,
    permissive: bool,
) -> Result<ConnectionSample, ConnectionError> {
    if weights.len() != frame.n() {
        return Err(ConnectionError::LengthMismatch {
            got: weights.len(),
            expected: frame.n(),
        });
    }
    let pure = wilczek_zee_impl(frame, q, direction, h, permissive)?;
    Ok(ConnectionSample {
        matrix: shift_sum(&pure.matrix, weights),
        ..pure
    })
}

/// λ-weighted sum of cyclically shifted copies of a pure sample. This is the
/// same arithmetic used inside [`mixed_connection`].
pub fn shift_sum(pure: &ComplexMatrix, weights: &SpectralWeights) -> ComplexMatrix {
    let n = pure.rows();
    let mut out = ComplexMatrix::zeros(n, n);
    for k in 0..weights.len() {
        let lambda = weights.lambda(k);
        if lambda == 0.0 {
            continue;
        }
        out = out.add(&shift_matrix(pure, k).scale_re(lambda));
    }
    out
}

/// Mixed-state gauge potential: the weight-sum of label-shifted pure
/// overlaps, identical to differencing the iso-entangled lifted frame.
pub fn mixed_connection(
    frame: &FrameFamily,
    weights: &SpectralWeights,
    q: &ControlPoint,
    direction: usize,
    h: f64,
) -> Result<ConnectionSample, ConnectionError> {
    mixed_connection_impl(frame, weights, q, direction, h, false)
}

/// Pointwise unitary change of frame labels.
#[derive(Clone)]
pub struct GaugeTransform {
    eval: Arc<dyn Fn(&ControlPoint) -> ComplexMatrix + Send + Sync>,
}

impl GaugeTransform {
    pub fn new(eval: impl Fn(&ControlPoint) -> ComplexMatrix + Send + Sync + 'static) -> Self {
        Self { eval: Arc::new(eval) }
    }

    /// V(θ, φ) = exp(-i r σ_y φ) = [[cos rφ, -sin rφ], [sin rφ, cos rφ]],
    /// the patch transition used on the sphere's northern cap.
    pub fn iontrap_north(r: f64) -> Self {
        Self::new(move |q| {
            let phi = q.coords[1];
            let (c, s) = ((r * phi).cos(), (r * phi).sin());
            ComplexMatrix::from_real_rows(&[&[c, -s], &[s, c]])
        })
    }

    pub fn evaluate(&self, q: &ControlPoint) -> ComplexMatrix {
        (self.eval)(q)
    }
}

/// Transform connection samples as A → V A V† + (∂_μ V) V†, with ∂_μ V by
/// central differences.
pub fn gauge_transform(
    samples: &[ConnectionSample],
    v: &GaugeTransform,
    h: f64,
) -> Result<Vec<ConnectionSample>, ConnectionError> {
    samples
        .iter()
        .map(|sample| {
            let vq = v.evaluate(&sample.point);
            let unitary_defect = vq.unitarity_defect();
            if unitary_defect > 1e-12 {
                return Err(ConnectionError::NonUnitaryGauge(unitary_defect));
            }
            let mut fwd = sample.point.clone();
            let mut bwd = sample.point.clone();
            fwd.coords[sample.direction] += h;
            bwd.coords[sample.direction] -= h;
            let dv = v
                .evaluate(&fwd)
                .sub(&v.evaluate(&bwd))
                .scale(C64::new(1.0 / (2.0 * h), 0.0));
            let transformed = vq
                .matmul(&sample.matrix)
                .matmul(&vq.adjoint())
                .add(&dv.matmul(&vq.adjoint()));
            let defect = transformed.anti_hermiticity_defect();
            if defect > 1e-9 {
                return Err(ConnectionError::AntiHermiticityDefect(defect));
            }
            Ok(ConnectionSample {
                point: sample.point.clone(),
                direction: sample.direction,
                matrix: transformed,
                convention: sample.convention,
                defect,
            })
        })
        .collect()
}

/// Sphere patch selector for the ion-trap closed forms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IontrapPatch {
    Equatorial,
    North,
}

impl IontrapPatch {
    pub fn chart_id(&self) -> &'static str {
        match self {
            IontrapPatch::Equatorial => frames::CHART_EQUATORIAL,
            IontrapPatch::North => frames::CHART_NORTH,
        }
    }

    pub fn from_chart(chart: &str) -> Option<Self> {
        match chart {
            frames::CHART_EQUATORIAL => Some(IontrapPatch::Equatorial),
            frames::CHART_NORTH => Some(IontrapPatch::North),
            _ => None,
        }
    }
}

/// Closed-form dark-frame connection: A_φ = i r σ_y cosθ on the equatorial
/// patch, A_φ = −i r σ_y (1 − cosθ) on the northern patch; A_θ = 0 on both.
pub fn iontrap_connection_closed_form(
    patch: IontrapPatch,
    r: f64,
    q: &ControlPoint,
) -> Result<ConnectionSample, ConnectionError> {
    let frame = frames::iontrap_dark_frame();
    let chart = frame.chart(patch.chart_id())?;
    for (i, (x, range)) in q.coords.iter().zip(&chart.ranges).enumerate() {
        if !range.contains(*x) {
            return Err(ConnectionError::Frame(FrameError::ChartDomainViolation {
                chart: chart.id.clone(),
                index: i,
                value: *x,
            }));
        }
    }
    let theta = q.coords[0];
    let coefficient = match patch {
        IontrapPatch::Equatorial => r * theta.cos(),
        IontrapPatch::North => -r * (1.0 - theta.cos()),
    };
    // i σ_y = [[0, 1], [-1, 0]]
    let matrix = ComplexMatrix::from_real_rows(&[&[0.0, coefficient], &[-coefficient, 0.0]]);
    Ok(ConnectionSample {
        point: ControlPoint::new(patch.chart_id(), q.coords.clone()),
        direction: 1,
        matrix,
        convention: IndexConvention::RowInitial,
        defect: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{
        iontrap_dark_frame, Chart, ControlPoint, CoordRange, FrameFamily, CHART_EQUATORIAL,
        CHART_NORTH, DEFAULT_FD_STEP, POLE_MARGIN,
    };
    use crate::numerics::StateVector;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn i_sigma_y_times(c: f64) -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[0.0, c], &[-c, 0.0]])
    }

    fn random_equatorial_point(rng: &mut StdRng) -> ControlPoint {
        ControlPoint::sphere(
            CHART_EQUATORIAL,
            rng.gen_range(POLE_MARGIN + 0.05..PI - POLE_MARGIN - 0.05),
            rng.gen_range(0.0..2.0 * PI),
        )
    }

    #[test]
    fn dark_frame_phi_component_is_cos_theta_rotation() {
        let frame = iontrap_dark_frame();
        let mut rng = StdRng::seed_from_u64(53);
        for _ in 0..20 {
            let q = random_equatorial_point(&mut rng);
            let sample = wilczek_zee(&frame, &q, 1, DEFAULT_FD_STEP).unwrap();
            let expected = i_sigma_y_times(q.coords[0].cos());
            assert!(sample.matrix.sub(&expected).max_norm() <= 1e-9);
        }
    }

    #[test]
    fn dark_frame_theta_component_vanishes() {
        let frame = iontrap_dark_frame();
        let mut rng = StdRng::seed_from_u64(59);
        for _ in 0..20 {
            let q = random_equatorial_point(&mut rng);
            let sample = wilczek_zee(&frame, &q, 0, DEFAULT_FD_STEP).unwrap();
            assert!(sample.matrix.max_norm() <= 1e-10);
        }
    }

    #[test]
    fn constant_frame_has_zero_connection() {
        let charts = vec![Chart { id: "line".into(), ranges: vec![CoordRange::unbounded()] }];
        let frame = FrameFamily::from_evaluator(2, 2, charts, |_| {
            Ok(vec![StateVector::basis(2, 0), StateVector::basis(2, 1)])
        });
        let sample =
            wilczek_zee(&frame, &ControlPoint::new("line", vec![0.3]), 0, 1e-5).unwrap();
        assert!(sample.matrix.max_norm() <= 1e-13);
    }

    #[test]
    fn mixed_connection_with_pure_weights_equals_wilczek_zee() {
        let frame = iontrap_dark_frame();
        let weights = SpectralWeights::pure(2);
        let mut rng = StdRng::seed_from_u64(61);
        for _ in 0..100 {
            let q = random_equatorial_point(&mut rng);
            for direction in 0..2 {
                let pure = wilczek_zee(&frame, &q, direction, DEFAULT_FD_STEP).unwrap();
                let mixed =
                    mixed_connection(&frame, &weights, &q, direction, DEFAULT_FD_STEP).unwrap();
                assert!(mixed.matrix.sub(&pure.matrix).max_norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn mixed_connection_vanishes_for_balanced_weights() {
        let frame = iontrap_dark_frame();
        let weights = SpectralWeights::from_r(0.0).unwrap();
        let q = ControlPoint::sphere(CHART_EQUATORIAL, 1.2, 0.8);
        let sample = mixed_connection(&frame, &weights, &q, 1, DEFAULT_FD_STEP).unwrap();
        assert!(sample.matrix.max_norm() <= 1e-10);
    }

    #[test]
    fn mixed_connection_closed_form_value() {
        // θ = π/3, r = 0.5: A_φ = i·0.25·σ_y
        let frame = iontrap_dark_frame();
        let weights = SpectralWeights::from_r(0.5).unwrap();
        let q = ControlPoint::sphere(CHART_EQUATORIAL, PI / 3.0, 0.0);
        let sample = mixed_connection(&frame, &weights, &q, 1, DEFAULT_FD_STEP).unwrap();
        assert!((sample.matrix[(0, 1)].re - 0.25).abs() <= 1e-9);
        assert!((sample.matrix[(1, 0)].re + 0.25).abs() <= 1e-9);
        assert!(sample.matrix[(0, 0)].norm() <= 1e-10);
        assert!(sample.matrix[(1, 1)].norm() <= 1e-10);
    }

    #[test]
    fn shift_sum_identity_is_exact() {
        let frame = iontrap_dark_frame();
        let weights = SpectralWeights::new(vec![0.7, 0.3]).unwrap();
        let mut rng = StdRng::seed_from_u64(67);
        for _ in 0..25 {
            let q = random_equatorial_point(&mut rng);
            let pure = wilczek_zee(&frame, &q, 1, DEFAULT_FD_STEP).unwrap();
            let mixed = mixed_connection(&frame, &weights, &q, 1, DEFAULT_FD_STEP).unwrap();
            let composed = shift_sum(&pure.matrix, &weights);
            assert_eq!(mixed.matrix, composed); // bitwise: same arithmetic path
        }
    }

    #[test]
    fn samples_are_anti_hermitian_with_small_raw_defect() {
        let frame = iontrap_dark_frame();
        let mut rng = StdRng::seed_from_u64(71);
        for _ in 0..50 {
            let q = random_equatorial_point(&mut rng);
            let sample = wilczek_zee(&frame, &q, 1, DEFAULT_FD_STEP).unwrap();
            assert!(sample.defect <= 1e-9, "raw defect {:.3e}", sample.defect);
            assert!(sample.matrix.anti_hermiticity_defect() <= 1e-15);
        }
    }

    #[test]
    fn gauge_transform_with_identity_is_identity() {
        let frame = iontrap_dark_frame();
        let q = ControlPoint::sphere(CHART_EQUATORIAL, 1.0, 0.3);
        let sample = wilczek_zee(&frame, &q, 1, DEFAULT_FD_STEP).unwrap();
        let v = GaugeTransform::new(|_| ComplexMatrix::identity(2));
        let out = gauge_transform(std::slice::from_ref(&sample), &v, DEFAULT_FD_STEP).unwrap();
        assert!(out[0].matrix.sub(&sample.matrix).max_norm() <= 1e-10);
    }

    #[test]
    fn north_gauge_transform_matches_closed_form() {
        let frame = iontrap_dark_frame();
        let r = 0.7;
        let weights = SpectralWeights::from_r(r).unwrap();
        let v = GaugeTransform::iontrap_north(r);
        let mut rng = StdRng::seed_from_u64(73);
        for _ in 0..20 {
            let q = random_equatorial_point(&mut rng);
            let sample = mixed_connection(&frame, &weights, &q, 1, DEFAULT_FD_STEP).unwrap();
            let out =
                gauge_transform(std::slice::from_ref(&sample), &v, DEFAULT_FD_STEP).unwrap();
            let expected = i_sigma_y_times(-r * (1.0 - q.coords[0].cos()));
            assert!(
                out[0].matrix.sub(&expected).max_norm() <= 1e-8,
                "at θ = {}",
                q.coords[0]
            );
        }
    }

    #[test]
    fn gauge_transform_on_the_equator() {
        // A(π/2) = 0, transformed A_N = −i r σ_y
        let frame = iontrap_dark_frame();
        let r = 0.5;
        let weights = SpectralWeights::from_r(r).unwrap();
        let q = ControlPoint::sphere(CHART_EQUATORIAL, FRAC_PI_2, 1.1);
        let sample = mixed_connection(&frame, &weights, &q, 1, DEFAULT_FD_STEP).unwrap();
        assert!(sample.matrix.max_norm() <= 1e-9);
        let out = gauge_transform(
            std::slice::from_ref(&sample),
            &GaugeTransform::iontrap_north(r),
            DEFAULT_FD_STEP,
        )
        .unwrap();
        assert!(out[0].matrix.sub(&i_sigma_y_times(-r)).max_norm() <= 1e-8);
    }

    #[test]
    fn gauge_transform_rejects_non_unitary_gauges() {
        let frame = iontrap_dark_frame();
        let q = ControlPoint::sphere(CHART_EQUATORIAL, 1.0, 0.0);
        let sample = wilczek_zee(&frame, &q, 1, DEFAULT_FD_STEP).unwrap();
        let v = GaugeTransform::new(|_| ComplexMatrix::identity(2).scale_re(1.5));
        let out = gauge_transform(std::slice::from_ref(&sample), &v, DEFAULT_FD_STEP);
        assert!(matches!(out, Err(ConnectionError::NonUnitaryGauge(_))));
    }

    #[test]
    fn closed_form_connection_values() {
        let r = 0.5;
        // equatorial patch near the pole margin: A → i r σ_y cosθ
        let q = ControlPoint::sphere(CHART_EQUATORIAL, POLE_MARGIN, 0.0);
        let sample =
            iontrap_connection_closed_form(IontrapPatch::Equatorial, 1.0, &q).unwrap();
        assert!(sample.matrix.sub(&i_sigma_y_times(POLE_MARGIN.cos())).max_norm() <= 1e-15);

        // northern patch is regular at the pole
        let q = ControlPoint::sphere(CHART_NORTH, 0.0, 0.0);
        let sample = iontrap_connection_closed_form(IontrapPatch::North, r, &q).unwrap();
        assert!(sample.matrix.max_norm() <= 1e-15);

        let q = ControlPoint::sphere(CHART_EQUATORIAL, PI / 3.0, 0.0);
        let sample =
            iontrap_connection_closed_form(IontrapPatch::Equatorial, r, &q).unwrap();
        assert!(sample.matrix.sub(&i_sigma_y_times(0.25)).max_norm() <= 1e-15);

        // pole coordinates rejected on the equatorial patch
        let q = ControlPoint::sphere(CHART_EQUATORIAL, 0.01, 0.0);
        assert!(iontrap_connection_closed_form(IontrapPatch::Equatorial, r, &q).is_err());
    }

    #[test]
    fn numerical_connection_matches_closed_form_on_both_patches() {
        let frame = iontrap_dark_frame();
        let r = 0.6;
        let weights = SpectralWeights::from_r(r).unwrap();
        let mut rng = StdRng::seed_from_u64(79);
        for _ in 0..20 {
            let theta = rng.gen_range(0.1..PI - 0.1);
            let phi = rng.gen_range(0.0..2.0 * PI);
            for patch in [IontrapPatch::Equatorial, IontrapPatch::North] {
                let q = ControlPoint::sphere(patch.chart_id(), theta, phi);
                let numeric =
                    mixed_connection(&frame, &weights, &q, 1, DEFAULT_FD_STEP).unwrap();
                let closed = iontrap_connection_closed_form(patch, r, &q).unwrap();
                assert!(
                    numeric.matrix.sub(&closed.matrix).max_norm() <= 1e-8,
                    "patch {patch:?} at θ = {theta:.3}"
                );
            }
        }
    }
}
