//! Composite Hamiltonians and time-dependent Schrödinger integration.
//!
//! The composite family realizes H̃(q) = E(q)·P_Ξ(q) + Δ·(I − P_Ξ(q)) with
//! P_Ξ the projector onto the lifted iso-entangled frame, so the lifted
//! frame members are instantaneous eigenvectors at energy E(q) with a gap Δ
//! to everything else. Integrating a slow schedule around a closed loop and
//! comparing the endpoint against the holonomy prediction is the dynamical
//! consistency check for the whole transport pipeline.

use crate::frames::{ControlPoint, FrameError, IsoEntangledFrame};
use crate::holonomy::{HolonomyError, HolonomyResult, Loop};
use crate::numerics::{self, ComplexMatrix, StateVector, C64};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Holonomy(#[from] HolonomyError),
    #[error("Hamiltonian is not Hermitian at a schedule point (defect {0:.3e})")]
    NotHermitian(f64),
    #[error("state norm drifted by {drift:.3e}; the step count is too small")]
    StepCountTooSmall { drift: f64 },
    #[error("initial state is not normalized (norm {0:.12})")]
    NotNormalized(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

type HamEval = dyn Fn(&ControlPoint) -> ComplexMatrix + Send + Sync;
type EnergyEval = dyn Fn(&ControlPoint) -> f64 + Send + Sync;

/// Parametrized Hermitian Hamiltonian with a known degenerate-subspace
/// energy and gap.
#[derive(Clone)]
pub struct HamiltonianFamily {
    dim: usize,
    eval: Arc<HamEval>,
    energy: Arc<EnergyEval>,
    gap: f64,
    norm_bound: f64,
}

impl HamiltonianFamily {
    pub fn new(
        dim: usize,
        gap: f64,
        norm_bound: f64,
        energy: impl Fn(&ControlPoint) -> f64 + Send + Sync + 'static,
        eval: impl Fn(&ControlPoint) -> ComplexMatrix + Send + Sync + 'static,
    ) -> Self {
        Self { dim, eval: Arc::new(eval), energy: Arc::new(energy), gap, norm_bound }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gap(&self) -> f64 {
        self.gap
    }

    /// Bound on the spectral norm over the schedule, used for step counts.
    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    pub fn energy(&self, q: &ControlPoint) -> f64 {
        (self.energy)(q)
    }

    pub fn evaluate(&self, q: &ControlPoint) -> Result<ComplexMatrix, DynamicsError> {
        let h = (self.eval)(q);
        let defect = h.hermiticity_defect();
        if defect > 1e-12 {
            return Err(DynamicsError::NotHermitian(defect));
        }
        Ok(h)
    }
}

/// Laser coupling of three ground states to one excited state, ordered basis
/// (|0⟩, |1⟩, |a⟩, |e⟩), with couplings
/// (ω sinθ cosφ, ω sinθ sinφ, ω cosθ). Spectrum (−ω, 0, 0, ω).
pub fn iontrap_hamiltonian(omega: f64, theta: f64, phi: f64) -> ComplexMatrix {
    let w0 = omega * theta.sin() * phi.cos();
    let w1 = omega * theta.sin() * phi.sin();
    let wa = omega * theta.cos();
    let mut h = ComplexMatrix::zeros(4, 4);
    for (i, w) in [w0, w1, wa].into_iter().enumerate() {
        h[(3, i)] = C64::new(w, 0.0);
        h[(i, 3)] = C64::new(w, 0.0);
    }
    h
}

/// The ion-trap Hamiltonian as a family over the sphere charts.
pub fn iontrap_family(omega: f64) -> HamiltonianFamily {
    HamiltonianFamily::new(
        4,
        omega,
        omega,
        |_| 0.0,
        move |q| iontrap_hamiltonian(omega, q.coords[0], q.coords[1]),
    )
}

/// H̃(q) = energy·P_Ξ(q) + gap·(I − P_Ξ(q)) on the system ⊗ ancilla space.
pub fn composite_hamiltonian(
    iso: &IsoEntangledFrame,
    energy: f64,
    gap: f64,
) -> HamiltonianFamily {
    let iso = iso.clone();
    let dim = iso.dim_total();
    HamiltonianFamily::new(
        dim,
        gap,
        energy.abs().max(gap.abs()),
        move |_| energy,
        move |q| {
            let lifted = iso
                .evaluate(q)
                .unwrap_or_else(|e| panic!("composite Hamiltonian frame evaluation: {e}"));
            let mut projector = ComplexMatrix::zeros(dim, dim);
            for xi in &lifted {
                projector = projector.add(&xi.outer(xi));
            }
            ComplexMatrix::identity(dim)
                .scale_re(gap)
                .add(&projector.scale_re(energy - gap))
        },
    )
}

/// Time schedule t ∈ [0, T] → control point, default uniform traversal.
#[derive(Clone)]
pub struct Schedule {
    duration: f64,
    path: Arc<dyn Fn(f64) -> ControlPoint + Send + Sync>,
}

impl Schedule {
    pub fn new(
        duration: f64,
        path: impl Fn(f64) -> ControlPoint + Send + Sync + 'static,
    ) -> Self {
        Self { duration, path: Arc::new(path) }
    }

    /// Uniform traversal of a loop's samples, piecewise linear in chart
    /// coordinates.
    pub fn from_loop(loop_: &Loop, duration: f64) -> Self {
        assert!(loop_.points().len() >= 2, "schedule needs at least two loop samples");
        let chart = loop_.chart().to_string();
        let points: Vec<Vec<f64>> = loop_.points().to_vec();
        Self::new(duration, move |t| {
            let m = points.len() - 1;
            let f = if duration > 0.0 { (t / duration).clamp(0.0, 1.0) } else { 0.0 };
            let x = f * m as f64;
            let i = (x.floor() as usize).min(m.saturating_sub(1));
            let frac = x - i as f64;
            let coords = points[i]
                .iter()
                .zip(&points[i + 1])
                .map(|(a, b)| a * (1.0 - frac) + b * frac)
                .collect();
            ControlPoint::new(&chart, coords)
        })
    }

    pub fn constant(q: ControlPoint, duration: f64) -> Self {
        Self::new(duration, move |_| q.clone())
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn at(&self, t: f64) -> ControlPoint {
        (self.path)(t)
    }
}

/// Integration scheme for [`schrodinger_evolve`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stepper {
    /// Unitary midpoint rule: ψ ← exp(−i H(q(t_mid)) δt) ψ.
    MidpointExponential,
    /// Classical Runge–Kutta cross-check; not exactly norm-preserving.
    Rk4,
}

/// Default step count: 200 steps per unit of T·‖H‖, so the per-step phase
/// stays near 5e-3 rad.
pub fn default_steps(family: &HamiltonianFamily, duration: f64) -> usize {
    ((200.0 * duration * family.norm_bound()).ceil() as usize).max(1)
}

/// Integrate the time-dependent Schrödinger equation along a schedule.
pub fn schrodinger_evolve(
    family: &HamiltonianFamily,
    schedule: &Schedule,
    psi0: &StateVector,
    steps: usize,
    stepper: Stepper,
) -> Result<StateVector, DynamicsError> {
    if psi0.dim() != family.dim() {
        return Err(DynamicsError::DimensionMismatch(format!(
            "state dim {} vs Hamiltonian dim {}",
            psi0.dim(),
            family.dim()
        )));
    }
    if !psi0.is_normalized(1e-10) {
        return Err(DynamicsError::NotNormalized(psi0.norm()));
    }
    let duration = schedule.duration();
    if duration == 0.0 || steps == 0 {
        return Ok(psi0.clone());
    }
    let dt = duration / steps as f64;
    let mut psi = psi0.clone();
    for j in 0..steps {
        match stepper {
            Stepper::MidpointExponential => {
                let q = schedule.at((j as f64 + 0.5) * dt);
                let h = family.evaluate(&q)?;
                let step = numerics::expm(&h.scale(C64::new(0.0, -dt)));
                psi = psi.apply(&step);
            }
            Stepper::Rk4 => {
                let t = j as f64 * dt;
                let deriv = |time: f64, state: &StateVector| -> Result<StateVector, DynamicsError> {
                    let h = family.evaluate(&schedule.at(time))?;
                    Ok(state.apply(&h).scale(C64::new(0.0, -1.0)))
                };
                let k1 = deriv(t, &psi)?;
                let k2 = deriv(t + 0.5 * dt, &psi.add(&k1.scale(C64::new(0.5 * dt, 0.0))))?;
                let k3 = deriv(t + 0.5 * dt, &psi.add(&k2.scale(C64::new(0.5 * dt, 0.0))))?;
                let k4 = deriv(t + dt, &psi.add(&k3.scale(C64::new(dt, 0.0))))?;
                let increment = k1
                    .add(&k2.scale(C64::new(2.0, 0.0)))
                    .add(&k3.scale(C64::new(2.0, 0.0)))
                    .add(&k4)
                    .scale(C64::new(dt / 6.0, 0.0));
                psi = psi.add(&increment);
            }
        }
        let drift = (psi.norm() - 1.0).abs();
        if drift > 1e-8 {
            return Err(DynamicsError::StepCountTooSmall { drift });
        }
    }
    Ok(psi)
}

/// Σ_b U_ab · frame_b: the holonomy-transported frame member with initial
/// label `a`, expressed in the ambient space of the given frame vectors.
pub fn transport_prediction(
    frame_at_base: &[StateVector],
    holonomy: &HolonomyResult,
    label: usize,
) -> Result<StateVector, DynamicsError> {
    let n = frame_at_base.len();
    if holonomy.n() != n {
        return Err(DynamicsError::DimensionMismatch(format!(
            "holonomy degeneracy {} vs frame size {n}",
            holonomy.n()
        )));
    }
    if label >= n {
        return Err(DynamicsError::DimensionMismatch(format!(
            "label {label} out of range for degeneracy {n}"
        )));
    }
    let dim = frame_at_base[0].dim();
    let mut psi = StateVector::zeros(dim);
    let u = holonomy.u_row_initial();
    for (b, xi) in frame_at_base.iter().enumerate() {
        psi = psi.add(&xi.scale(u[(label, b)]));
    }
    Ok(psi)
}

/// Fraction of the state outside the span of the given frame vectors.
pub fn subspace_leakage(frame: &[StateVector], psi: &StateVector) -> f64 {
    let inside: f64 = frame.iter().map(|xi| xi.dot(psi).norm_sqr()).sum();
    (1.0 - inside).max(0.0)
}

/// One row of an adiabatic convergence ladder.
#[derive(Clone, Debug)]
pub struct AdiabaticSample {
    pub duration: f64,
    pub steps: usize,
    /// 1 − |⟨prediction|ψ(T)⟩|².
    pub infidelity: f64,
    /// 1 − ⟨ψ(T)| P_frame |ψ(T)⟩ at the endpoint.
    pub leakage: f64,
}

/// Evolve the composite system around the loop for each requested duration
/// and compare the endpoint with the holonomy prediction.
///
/// The dynamical phase exp(−i∫E dt) drops out of both reported numbers, so
/// no explicit division is needed even for E ≠ 0.
pub fn adiabatic_report(
    family: &HamiltonianFamily,
    frame_at_start: &[StateVector],
    holonomy: &HolonomyResult,
    loop_: &Loop,
    label: usize,
    durations: &[f64],
) -> Result<Vec<AdiabaticSample>, DynamicsError> {
    let psi0 = frame_at_start
        .get(label)
        .ok_or_else(|| {
            DynamicsError::DimensionMismatch(format!("label {label} out of frame range"))
        })?
        .clone();
    let prediction = transport_prediction(frame_at_start, holonomy, label)?;
    durations
        .iter()
        .map(|&duration| {
            let schedule = Schedule::from_loop(loop_, duration);
            let steps = default_steps(family, duration);
            let psi = schrodinger_evolve(
                family,
                &schedule,
                &psi0,
                steps,
                Stepper::MidpointExponential,
            )?;
            let infidelity = (1.0 - prediction.dot(&psi).norm_sqr()).max(0.0);
            let leakage = subspace_leakage(frame_at_start, &psi);
            Ok(AdiabaticSample { duration, steps, infidelity, leakage })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{iontrap_dark_frame, lift_iso_entangled, CHART_NORTH};
    use crate::numerics::hermitian_eigensystem;
    use crate::statekit::SpectralWeights;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    /// det(λI − H) coefficients by the trace recursion, highest power first.
    fn characteristic_polynomial(h: &ComplexMatrix) -> Vec<C64> {
        let n = h.rows();
        let mut coeffs = vec![C64::new(1.0, 0.0)];
        let mut m = ComplexMatrix::zeros(n, n);
        for k in 1..=n {
            // M_k = H·M_{k-1} + c_{k-1}·I ; c_k = −tr(H·M_k)/k
            m = h.matmul(&m).add(&ComplexMatrix::identity(n).scale(coeffs[k - 1]));
            let c = h.matmul(&m).trace() * C64::new(-1.0 / k as f64, 0.0);
            coeffs.push(c);
        }
        coeffs
    }

    #[test]
    fn hamiltonian_vanishes_without_coupling() {
        assert!(iontrap_hamiltonian(0.0, 1.0, 2.0).max_norm() == 0.0);
    }

    #[test]
    fn hamiltonian_spectrum_from_characteristic_polynomial() {
        let h = iontrap_hamiltonian(1.0, PI / 4.0, 0.0);
        // λ⁴ − ω²λ², i.e. coefficients (1, 0, −1, 0, 0) at ω = 1
        let coeffs = characteristic_polynomial(&h);
        let expected = [1.0, 0.0, -1.0, 0.0, 0.0];
        for (c, e) in coeffs.iter().zip(expected) {
            assert!((c.re - e).abs() < 1e-12 && c.im.abs() < 1e-12);
        }
        let (w, _) = hermitian_eigensystem(&h, 1e-12).unwrap();
        let expected = [-1.0, 0.0, 0.0, 1.0];
        for (got, want) in w.iter().zip(expected) {
            assert!((got - want).abs() < 1e-10);
        }
    }

    #[test]
    fn hamiltonian_spectrum_scales_with_omega() {
        let mut rng = StdRng::seed_from_u64(83);
        for _ in 0..20 {
            let omega = rng.gen_range(0.1..3.0);
            let theta = rng.gen_range(0.0..PI);
            let phi = rng.gen_range(0.0..2.0 * PI);
            let (w, _) =
                hermitian_eigensystem(&iontrap_hamiltonian(omega, theta, phi), 1e-12).unwrap();
            assert!((w[0] + omega).abs() < 1e-10);
            assert!(w[1].abs() < 1e-10 && w[2].abs() < 1e-10);
            assert!((w[3] - omega).abs() < 1e-10);
        }
    }

    fn test_iso(r: f64) -> IsoEntangledFrame {
        lift_iso_entangled(iontrap_dark_frame(), SpectralWeights::from_r(r).unwrap()).unwrap()
    }

    #[test]
    fn composite_hamiltonian_annihilates_the_lifted_frame_at_zero_energy() {
        let iso = test_iso(0.6);
        let family = composite_hamiltonian(&iso, 0.0, 1.0);
        let q = ControlPoint::sphere(CHART_NORTH, 1.1, 0.7);
        let h = family.evaluate(&q).unwrap();
        for xi in iso.evaluate(&q).unwrap() {
            assert!(xi.apply(&h).norm() < 1e-10);
        }
    }

    #[test]
    fn composite_hamiltonian_matrix_elements() {
        // E = 1, λ = (0.8, 0.2): ⟨Ξ_a|H̃|Ξ_b⟩ = δ_ab, and H̃ maps the lifted
        // span to itself.
        let iso = test_iso(0.6);
        let family = composite_hamiltonian(&iso, 1.0, 2.0);
        let q = ControlPoint::sphere(CHART_NORTH, 0.9, 0.3);
        let h = family.evaluate(&q).unwrap();
        let lifted = iso.evaluate(&q).unwrap();
        for (a, xa) in lifted.iter().enumerate() {
            let h_xa = xa.apply(&h);
            for (b, xb) in lifted.iter().enumerate() {
                let elem = xb.dot(&h_xa);
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((elem.re - expected).abs() < 1e-12 && elem.im.abs() < 1e-12);
            }
            // no coupling out of the span
            let mut residual = h_xa.clone();
            for xb in &lifted {
                residual = residual.sub(&xb.scale(xb.dot(&h_xa)));
            }
            assert!(residual.norm() < 1e-10);
        }
    }

    #[test]
    fn composite_spectrum_has_the_right_multiplicities() {
        let iso = test_iso(0.4);
        let energy = 0.25;
        let gap = 1.5;
        let family = composite_hamiltonian(&iso, energy, gap);
        let q = ControlPoint::sphere(CHART_NORTH, 1.3, 2.0);
        let (w, _) = hermitian_eigensystem(&family.evaluate(&q).unwrap(), 1e-12).unwrap();
        let at_energy = w.iter().filter(|x| (**x - energy).abs() < 1e-10).count();
        let at_gap = w.iter().filter(|x| (**x - gap).abs() < 1e-10).count();
        assert_eq!(at_energy, 2);
        assert_eq!(at_gap, 6);
    }

    #[test]
    fn explicit_two_level_form_matches_the_projector_form() {
        // H_E = E(σ_0^S ⊗ [λ_0 φ_0φ_0† + λ_1 φ_1φ_1†] + sqrt(λ_0λ_1) σ_1^S ⊗ σ_1^A)
        let frame = iontrap_dark_frame();
        let mut rng = StdRng::seed_from_u64(89);
        for _ in 0..50 {
            let lambda0: f64 = rng.gen_range(0.0..1.0);
            let weights = SpectralWeights::new(vec![lambda0, 1.0 - lambda0]).unwrap();
            let iso = lift_iso_entangled(frame.clone(), weights.clone()).unwrap();
            let energy = rng.gen_range(0.2..2.0);
            let q = ControlPoint::sphere(
                CHART_NORTH,
                rng.gen_range(0.1..PI - 0.1),
                rng.gen_range(0.0..2.0 * PI),
            );
            let xi = frame.evaluate(&q).unwrap();
            let sigma0_s = xi[0].outer(&xi[0]).add(&xi[1].outer(&xi[1]));
            let sigma1_s = xi[0].outer(&xi[1]).add(&xi[1].outer(&xi[0]));
            let phi0 = StateVector::basis(2, 0);
            let phi1 = StateVector::basis(2, 1);
            let weight_mix = phi0
                .outer(&phi0)
                .scale_re(weights.lambda(0))
                .add(&phi1.outer(&phi1).scale_re(weights.lambda(1)));
            let sigma1_a = phi0.outer(&phi1).add(&phi1.outer(&phi0));
            let explicit = sigma0_s
                .tensor(&weight_mix)
                .add(
                    &sigma1_s
                        .tensor(&sigma1_a)
                        .scale_re((weights.lambda(0) * weights.lambda(1)).sqrt()),
                )
                .scale_re(energy);

            // projector form with the gap removed: E·P_Ξ
            let family = composite_hamiltonian(&iso, energy, 0.0);
            let projector_form = family.evaluate(&q).unwrap();
            assert!(explicit.sub(&projector_form).max_norm() <= 1e-12);
        }
    }

    #[test]
    fn pure_weights_decouple_the_ancilla() {
        let iso = test_iso(1.0);
        let family = composite_hamiltonian(&iso, 1.0, 3.0);
        let q = ControlPoint::sphere(CHART_NORTH, 1.0, 0.4);
        let h = family.evaluate(&q).unwrap();
        let base = iso.base().evaluate(&q).unwrap();
        // product vectors ξ_a ⊗ φ_0 are eigenvectors at E
        for xi in &base {
            let product = xi.tensor(&StateVector::basis(2, 0));
            let image = product.apply(&h);
            assert!(image.sub(&product).norm() < 1e-10);
        }
    }

    #[test]
    fn constant_hamiltonian_advances_eigenstate_phase_only() {
        let q = ControlPoint::sphere(CHART_NORTH, 0.8, 0.0);
        let family = iontrap_family(1.0);
        let h = family.evaluate(&q).unwrap();
        let (w, v) = hermitian_eigensystem(&h, 1e-12).unwrap();
        // bright state at energy +ω
        let bright =
            StateVector::from_complex((0..4).map(|i| v[(i, 3)]).collect());
        let schedule = Schedule::constant(q, 3.0);
        let out = schrodinger_evolve(&family, &schedule, &bright, 600, Stepper::MidpointExponential)
            .unwrap();
        let overlap = bright.dot(&out);
        assert!((overlap.norm() - 1.0).abs() < 1e-10);
        let expected_phase = C64::new(0.0, -w[3] * 3.0).exp();
        assert!((overlap - expected_phase).norm() < 1e-6);
    }

    #[test]
    fn norm_is_preserved_along_the_evolution() {
        let iso = test_iso(0.5);
        let family = composite_hamiltonian(&iso, 0.0, 1.0);
        let loop_ = Loop::latitude(CHART_NORTH, 1.0, 200);
        let schedule = Schedule::from_loop(&loop_, 20.0);
        let q0 = loop_.point(0);
        let psi0 = iso.evaluate(&q0).unwrap()[0].clone();
        let out =
            schrodinger_evolve(&family, &schedule, &psi0, 4000, Stepper::MidpointExponential)
                .unwrap();
        assert!((out.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn zero_length_schedule_is_identity() {
        let iso = test_iso(0.5);
        let family = composite_hamiltonian(&iso, 0.0, 1.0);
        let q = ControlPoint::sphere(CHART_NORTH, 1.0, 0.0);
        let psi0 = iso.evaluate(&q).unwrap()[0].clone();
        let schedule = Schedule::constant(q, 0.0);
        let out = schrodinger_evolve(&family, &schedule, &psi0, 100, Stepper::MidpointExponential)
            .unwrap();
        assert!(out.sub(&psi0).norm() == 0.0);
    }

    #[test]
    fn rk4_guard_catches_undersampled_runs() {
        let family = iontrap_family(40.0);
        let q = ControlPoint::sphere(CHART_NORTH, 0.8, 0.0);
        let psi0 = StateVector::basis(4, 3);
        let schedule = Schedule::constant(q, 10.0);
        let err = schrodinger_evolve(&family, &schedule, &psi0, 20, Stepper::Rk4);
        assert!(matches!(err, Err(DynamicsError::StepCountTooSmall { .. })));
    }

    #[test]
    fn rk4_agrees_with_exponential_stepper_when_resolved() {
        let family = iontrap_family(1.0);
        let loop_ = Loop::latitude(CHART_NORTH, 1.0, 100);
        let schedule = Schedule::from_loop(&loop_, 5.0);
        let q0 = loop_.point(0);
        let frame = iontrap_dark_frame();
        let psi0 = frame.evaluate(&q0).unwrap()[0].clone();
        let a = schrodinger_evolve(&family, &schedule, &psi0, 2000, Stepper::MidpointExponential)
            .unwrap();
        let b = schrodinger_evolve(&family, &schedule, &psi0, 2000, Stepper::Rk4).unwrap();
        assert!(a.sub(&b).norm() < 1e-6);
    }
}
