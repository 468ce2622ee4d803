//! Quantum-state objects: density operators, spectral weights, tensor
//! products, partial trace over an ancilla, purification, Bloch coordinates,
//! purity.
//!
//! Composite indices are system-major throughout: a product-space index is
//! i = s·dim_a + a. The ancilla basis is parameter-independent and only as
//! many ancilla vectors are stored as are actually used.

use crate::numerics::{self, ComplexMatrix, StateVector, C64};
use thiserror::Error;

/// Validation tolerance for density operators, weights and ancilla bases.
pub const STATE_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum StatekitError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("not a density operator: {0}")]
    InvalidDensity(String),
    #[error("invalid spectral weights: {0}")]
    InvalidWeights(String),
    #[error("ancilla basis is not orthonormal (defect {0:.3e})")]
    AncillaNotOrthonormal(f64),
    #[error(transparent)]
    Numerics(#[from] numerics::NumericsError),
}

/// Unit-trace positive Hermitian operator.
#[derive(Clone, Debug)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
}

impl DensityOperator {
    /// Validates Hermiticity, unit trace and positivity (eigenvalues ≥ -1e-12).
    pub fn new(matrix: ComplexMatrix) -> Result<Self, StatekitError> {
        if !matrix.is_square() {
            return Err(StatekitError::InvalidDensity(format!(
                "matrix is {}x{}, not square",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let herm = matrix.hermiticity_defect();
        if herm > STATE_TOL {
            return Err(StatekitError::InvalidDensity(format!(
                "Hermiticity defect {herm:.3e}"
            )));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(StatekitError::InvalidDensity(format!(
                "trace {:.17} + {:.3e}i, expected 1",
                tr.re, tr.im
            )));
        }
        let (eigs, _) = numerics::hermitian_eigensystem(&matrix, 1e-12)?;
        if let Some(min) = eigs.first() {
            if *min < -STATE_TOL {
                return Err(StatekitError::InvalidDensity(format!(
                    "negative eigenvalue {min:.3e}"
                )));
            }
        }
        Ok(Self { matrix })
    }

    pub fn pure(state: &StateVector) -> Result<Self, StatekitError> {
        if !state.is_normalized(1e-10) {
            return Err(StatekitError::InvalidDensity(format!(
                "state norm {:.12} is not 1",
                state.norm()
            )));
        }
        let v = state.scale(C64::new(1.0 / state.norm(), 0.0));
        Ok(Self { matrix: v.outer(&v) })
    }

    /// Diagonal density operator from a probability vector.
    pub fn from_diagonal(weights: &SpectralWeights) -> Self {
        let n = weights.len();
        Self {
            matrix: ComplexMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    C64::new(weights.lambda(i), 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            }),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Tr ρ².
    pub fn purity(&self) -> f64 {
        self.matrix.matmul(&self.matrix).trace().re
    }

    /// (Tr ρσ_x, Tr ρσ_y, Tr ρσ_z) for a qubit.
    pub fn bloch_vector(&self) -> Result<[f64; 3], StatekitError> {
        if self.dim() != 2 {
            return Err(StatekitError::DimensionMismatch(format!(
                "Bloch vector requires dim 2, got {}",
                self.dim()
            )));
        }
        let tr = |m: &ComplexMatrix| self.matrix.matmul(m).trace().re;
        Ok([
            tr(&ComplexMatrix::sigma_x()),
            tr(&ComplexMatrix::sigma_y()),
            tr(&ComplexMatrix::sigma_z()),
        ])
    }

    /// Eigenvalues (descending, ties kept in the eigensolver's deterministic
    /// order) with their eigenvectors.
    pub fn spectral_decomposition(&self) -> Result<Vec<(f64, StateVector)>, StatekitError> {
        let (w, v) = numerics::hermitian_eigensystem(&self.matrix, 1e-12)?;
        let n = self.dim();
        let mut pairs: Vec<(f64, StateVector)> = (0..n)
            .map(|k| {
                let col = StateVector::from_complex((0..n).map(|i| v[(i, k)]).collect());
                (w[k], col)
            })
            .collect();
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0)); // stable: preserves cluster order
        Ok(pairs)
    }
}

/// Mixing spectrum λ of the reduced states: λ_k ≥ 0, Σλ_k = 1.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralWeights {
    lambdas: Vec<f64>,
}

impl SpectralWeights {
    pub fn new(lambdas: Vec<f64>) -> Result<Self, StatekitError> {
        if lambdas.is_empty() {
            return Err(StatekitError::InvalidWeights("empty weight list".into()));
        }
        for (k, l) in lambdas.iter().enumerate() {
            if !l.is_finite() || *l < -STATE_TOL || *l > 1.0 + STATE_TOL {
                return Err(StatekitError::InvalidWeights(format!(
                    "lambda[{k}] = {l} outside [0, 1]"
                )));
            }
        }
        let sum: f64 = lambdas.iter().sum();
        if (sum - 1.0).abs() > STATE_TOL {
            return Err(StatekitError::InvalidWeights(format!(
                "weights sum to {sum:.17}, expected 1"
            )));
        }
        Ok(Self { lambdas })
    }

    /// Two-level weights ((1+r)/2, (1-r)/2).
    pub fn from_r(r: f64) -> Result<Self, StatekitError> {
        if !(-1.0..=1.0).contains(&r) {
            return Err(StatekitError::InvalidWeights(format!("r = {r} outside [-1, 1]")));
        }
        Self::new(vec![0.5 * (1.0 + r), 0.5 * (1.0 - r)])
    }

    /// (1, 0, …, 0): the pure-state limit.
    pub fn pure(n: usize) -> Self {
        let mut lambdas = vec![0.0; n];
        lambdas[0] = 1.0;
        Self { lambdas }
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn lambda(&self, k: usize) -> f64 {
        self.lambdas[k]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.lambdas
    }
}

/// Fixed, parameter-independent orthonormal ancilla vectors {|φ_k⟩}.
#[derive(Clone, Debug)]
pub struct AncillaBasis {
    dim: usize,
    vectors: Vec<StateVector>,
}

impl AncillaBasis {
    /// The computational basis of an n-dimensional ancilla.
    pub fn computational(n: usize) -> Self {
        Self {
            dim: n,
            vectors: (0..n).map(|k| StateVector::basis(n, k)).collect(),
        }
    }

    pub fn new(dim: usize, vectors: Vec<StateVector>) -> Result<Self, StatekitError> {
        if vectors.is_empty() || vectors.len() > dim {
            return Err(StatekitError::DimensionMismatch(format!(
                "{} ancilla vectors for dimension {dim}",
                vectors.len()
            )));
        }
        let mut defect = 0.0f64;
        for (i, a) in vectors.iter().enumerate() {
            if a.dim() != dim {
                return Err(StatekitError::DimensionMismatch(format!(
                    "ancilla vector {i} has dim {}, expected {dim}",
                    a.dim()
                )));
            }
            for (j, b) in vectors.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                defect = defect.max((a.dot(b) - C64::new(target, 0.0)).norm());
            }
        }
        if defect > STATE_TOL {
            return Err(StatekitError::AncillaNotOrthonormal(defect));
        }
        Ok(Self { dim, vectors })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vector(&self, k: usize) -> &StateVector {
        &self.vectors[k]
    }
}

/// Pure or mixed state on a system ⊗ ancilla product space.
#[derive(Clone, Debug)]
pub enum BipartitePayload {
    Vector(StateVector),
    Density(DensityOperator),
}

#[derive(Clone, Debug)]
pub struct BipartiteState {
    dim_s: usize,
    dim_a: usize,
    ancilla_basis: AncillaBasis,
    payload: BipartitePayload,
}

impl BipartiteState {
    pub fn from_vector(
        dim_s: usize,
        dim_a: usize,
        vector: StateVector,
        ancilla_basis: AncillaBasis,
    ) -> Result<Self, StatekitError> {
        if vector.dim() != dim_s * dim_a {
            return Err(StatekitError::DimensionMismatch(format!(
                "vector dim {} != {dim_s} x {dim_a}",
                vector.dim()
            )));
        }
        if ancilla_basis.dim() != dim_a {
            return Err(StatekitError::DimensionMismatch(format!(
                "ancilla basis dim {} != {dim_a}",
                ancilla_basis.dim()
            )));
        }
        Ok(Self { dim_s, dim_a, ancilla_basis, payload: BipartitePayload::Vector(vector) })
    }

    pub fn from_density(
        dim_s: usize,
        dim_a: usize,
        rho: DensityOperator,
        ancilla_basis: AncillaBasis,
    ) -> Result<Self, StatekitError> {
        if rho.dim() != dim_s * dim_a {
            return Err(StatekitError::DimensionMismatch(format!(
                "density dim {} != {dim_s} x {dim_a}",
                rho.dim()
            )));
        }
        if ancilla_basis.dim() != dim_a {
            return Err(StatekitError::DimensionMismatch(format!(
                "ancilla basis dim {} != {dim_a}",
                ancilla_basis.dim()
            )));
        }
        Ok(Self { dim_s, dim_a, ancilla_basis, payload: BipartitePayload::Density(rho) })
    }

    pub fn dim_s(&self) -> usize {
        self.dim_s
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn ancilla_basis(&self) -> &AncillaBasis {
        &self.ancilla_basis
    }

    pub fn payload(&self) -> &BipartitePayload {
        &self.payload
    }
}

/// Trace out the ancilla factor.
pub fn partial_trace_ancilla(state: &BipartiteState) -> Result<DensityOperator, StatekitError> {
    let (ds, da) = (state.dim_s, state.dim_a);
    let mut out = ComplexMatrix::zeros(ds, ds);
    match &state.payload {
        BipartitePayload::Vector(psi) => {
            for s in 0..ds {
                for sp in 0..ds {
                    let mut acc = C64::new(0.0, 0.0);
                    for a in 0..da {
                        acc += psi.get(s * da + a) * psi.get(sp * da + a).conj();
                    }
                    out[(s, sp)] = acc;
                }
            }
        }
        BipartitePayload::Density(rho) => {
            let m = rho.matrix();
            for s in 0..ds {
                for sp in 0..ds {
                    let mut acc = C64::new(0.0, 0.0);
                    for a in 0..da {
                        acc += m[(s * da + a, sp * da + a)];
                    }
                    out[(s, sp)] = acc;
                }
            }
        }
    }
    DensityOperator::new(out)
}

/// Purification of `rho` against the given ancilla basis: the k-th largest
/// eigenvalue is paired with |φ_k⟩.
pub fn purify(
    rho: &DensityOperator,
    ancilla_basis: &AncillaBasis,
) -> Result<StateVector, StatekitError> {
    let n = rho.dim();
    if ancilla_basis.len() < n {
        return Err(StatekitError::DimensionMismatch(format!(
            "need {n} ancilla vectors, basis has {}",
            ancilla_basis.len()
        )));
    }
    let spectrum = rho.spectral_decomposition()?;
    let mut psi = StateVector::zeros(n * ancilla_basis.dim());
    for (k, (lambda, v)) in spectrum.iter().enumerate() {
        if *lambda <= 0.0 {
            continue;
        }
        let term = v.tensor(ancilla_basis.vector(k)).scale(C64::new(lambda.sqrt(), 0.0));
        psi = psi.add(&term);
    }
    Ok(psi)
}

/// ½ Tr |ρ − σ| via the spectrum of the difference.
pub fn trace_distance(a: &DensityOperator, b: &DensityOperator) -> Result<f64, StatekitError> {
    if a.dim() != b.dim() {
        return Err(StatekitError::DimensionMismatch(format!(
            "trace distance between dims {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    let diff = a.matrix().sub(b.matrix());
    let (eigs, _) = numerics::hermitian_eigensystem(&diff, 1e-12)?;
    Ok(0.5 * eigs.iter().map(|x| x.abs()).sum::<f64>())
}
