//! Dense complex linear algebra sized for small dimensions (dim ≤ 16):
//! Hermitian eigensolver, matrix exponential, unitary polar factor, norms.
//!
//! Everything works on owned row-major [`ComplexMatrix`] values. All
//! operations are pure functions; nothing here holds global state.

use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;

/// Hermiticity defect above which [`hermitian_eigensystem`] refuses its input.
pub const HERMITICITY_LIMIT: f64 = 1e-10;

/// Convergence threshold of the polar-factor Newton iteration.
pub const POLAR_NEWTON_TOL: f64 = 1e-14;

const JACOBI_SWEEP_CAP: usize = 100;
const POLAR_NEWTON_CAP: usize = 50;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),
    #[error("shape mismatch: {0}x{1} vs {2}x{3}")]
    ShapeMismatch(usize, usize, usize, usize),
    #[error("matrix is not Hermitian (defect {0:.3e} > {HERMITICITY_LIMIT:.0e})")]
    NotHermitian(f64),
    #[error("{0} did not converge within {1} iterations")]
    NoConvergence(&'static str, usize),
    #[error("matrix is numerically singular (pivot {0:.3e})")]
    Singular(f64),
    #[error("non-finite entry produced in {0}")]
    NonFinite(&'static str),
}

/// Dense complex matrix, row-major storage.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl std::fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Build from rows of real entries.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = if r > 0 { rows[0].len() } else { 0 };
        Self::from_fn(r, c, |i, j| C64::new(rows[i][j], 0.0))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, z: C64) -> Self {
        let data = self.data.iter().map(|a| a * z).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale_re(&self, x: f64) -> Self {
        self.scale(C64::new(x, 0.0))
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> C64 {
        assert!(self.is_square());
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    /// Kronecker product, left factor major: `out[(i1*r2+i2, j1*c2+j2)] = a[i1,j1]·b[i2,j2]`.
    pub fn tensor(&self, other: &Self) -> Self {
        let (r1, c1, r2, c2) = (self.rows, self.cols, other.rows, other.cols);
        Self::from_fn(r1 * r2, c1 * c2, |i, j| {
            self[(i / r2, j / c2)] * other[(i % r2, j % c2)]
        })
    }

    /// Largest entry magnitude.
    pub fn max_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].norm()).sum())
            .fold(0.0, f64::max)
    }

    /// ‖M − M†‖_max.
    pub fn hermiticity_defect(&self) -> f64 {
        self.sub(&self.adjoint()).max_norm()
    }

    /// ‖M + M†‖_max.
    pub fn anti_hermiticity_defect(&self) -> f64 {
        self.add(&self.adjoint()).max_norm()
    }

    /// ‖M†M − I‖_max.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.rows;
        self.adjoint().matmul(self).sub(&Self::identity(n)).max_norm()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn sigma_x() -> Self {
        Self::from_fn(2, 2, |i, j| if i != j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
    }

    pub fn sigma_y() -> Self {
        let mut m = Self::zeros(2, 2);
        m[(0, 1)] = C64::new(0.0, -1.0);
        m[(1, 0)] = C64::new(0.0, 1.0);
        m
    }

    pub fn sigma_z() -> Self {
        let mut m = Self::zeros(2, 2);
        m[(0, 0)] = C64::new(1.0, 0.0);
        m[(1, 1)] = C64::new(-1.0, 0.0);
        m
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Dense complex vector.
#[derive(Clone, PartialEq)]
pub struct StateVector {
    data: Vec<C64>,
}

impl std::fmt::Debug for StateVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "StateVector[")?;
        for z in &self.data {
            write!(f, " {:+.6}{:+.6}i", z.re, z.im)?;
        }
        write!(f, " ]")
    }
}

impl StateVector {
    pub fn zeros(dim: usize) -> Self {
        Self { data: vec![C64::new(0.0, 0.0); dim] }
    }

    /// k-th computational basis vector of the given dimension.
    pub fn basis(dim: usize, k: usize) -> Self {
        assert!(k < dim);
        let mut v = Self::zeros(dim);
        v.data[k] = C64::new(1.0, 0.0);
        v
    }

    pub fn from_complex(data: Vec<C64>) -> Self {
        Self { data }
    }

    pub fn from_real(data: &[f64]) -> Self {
        Self { data: data.iter().map(|&x| C64::new(x, 0.0)).collect() }
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.data
    }

    pub fn get(&self, i: usize) -> C64 {
        self.data[i]
    }

    pub fn set(&mut self, i: usize, z: C64) {
        self.data[i] = z;
    }

    /// ⟨self|other⟩, conjugate-linear in `self`.
    pub fn dot(&self, other: &Self) -> C64 {
        assert_eq!(self.dim(), other.dim());
        self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }

    pub fn scale(&self, z: C64) -> Self {
        Self { data: self.data.iter().map(|a| a * z).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim());
        Self { data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim());
        Self { data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect() }
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        assert!(n > 0.0, "cannot normalize the zero vector");
        self.scale(C64::new(1.0 / n, 0.0))
    }

    /// Kronecker product, left factor major.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut data = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.data {
            for b in &other.data {
                data.push(a * b);
            }
        }
        Self { data }
    }

    /// |self⟩⟨other|.
    pub fn outer(&self, other: &Self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.dim(), other.dim(), |i, j| {
            self.data[i] * other.data[j].conj()
        })
    }

    /// Matrix-vector product m·self.
    pub fn apply(&self, m: &ComplexMatrix) -> Self {
        assert_eq!(m.cols(), self.dim());
        let mut out = Self::zeros(m.rows());
        for i in 0..m.rows() {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..m.cols() {
                acc += m[(i, j)] * self.data[j];
            }
            out.data[i] = acc;
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Eigenvalues (ascending) and eigenvectors (columns, unitary) of a Hermitian
/// matrix by cyclic Jacobi rotations.
///
/// Within a degenerate cluster the eigenvector order is fixed by sorting on
/// the index of each vector's largest-magnitude component, and every vector's
/// global phase is chosen so that component is real positive. Same input,
/// same frame.
pub fn hermitian_eigensystem(
    m: &ComplexMatrix,
    tol: f64,
) -> Result<(Vec<f64>, ComplexMatrix), NumericsError> {
    if !m.is_square() {
        return Err(NumericsError::NotSquare(m.rows(), m.cols()));
    }
    let defect = m.hermiticity_defect();
    if defect > HERMITICITY_LIMIT {
        return Err(NumericsError::NotHermitian(defect));
    }
    let n = m.rows();
    if n == 0 {
        return Ok((vec![], ComplexMatrix::zeros(0, 0)));
    }

    // Work on the exactly Hermitian part; the input may carry defects up to
    // HERMITICITY_LIMIT.
    let mut a = m.add(&m.adjoint()).scale_re(0.5);
    let mut v = ComplexMatrix::identity(n);

    let scale = a.max_norm();
    if scale == 0.0 {
        return Ok((vec![0.0; n], v));
    }
    let thresh = (tol.max(1e-15) * scale / (10.0 * n as f64)).max(f64::MIN_POSITIVE);

    let mut converged = false;
    for _sweep in 0..JACOBI_SWEEP_CAP {
        let mut off_max = 0.0f64;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let g = a[(p, q)];
                let absg = g.norm();
                off_max = off_max.max(absg);
                if absg <= thresh {
                    continue;
                }
                let phase = g / absg;
                let alpha = a[(p, p)].re;
                let beta = a[(q, q)].re;
                let tau = (beta - alpha) / (2.0 * absg);
                // smaller-magnitude root of t² - 2τt - 1 = 0
                let t = if tau >= 0.0 {
                    -1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Unitary plane rotation J with J[p][p]=c, J[p][q]=-s·phase,
                // J[q][p]=s·conj(phase), J[q][q]=c; apply A ← J†AJ, V ← VJ.
                let sp = C64::new(s, 0.0) * phase;
                let spc = sp.conj();
                for j in 0..n {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = apj * c + aqj * sp;
                    a[(q, j)] = aqj * c - apj * spc;
                }
                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = aip * c + aiq * spc;
                    a[(i, q)] = aiq * c - aip * sp;
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * c + viq * spc;
                    v[(i, q)] = viq * c - vip * sp;
                }
                // Re-symmetrize the rotated pair against drift.
                a[(p, q)] = (a[(p, q)] + a[(q, p)].conj()) * 0.5;
                a[(q, p)] = a[(p, q)].conj();
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
            }
        }
        if off_max <= thresh {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(NumericsError::NoConvergence("Jacobi sweeps", JACOBI_SWEEP_CAP));
    }

    let mut order: Vec<usize> = (0..n).collect();
    let eigs: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| eigs[i].total_cmp(&eigs[j]));

    // Deterministic order inside degenerate clusters: sort on the index of
    // the largest-magnitude component of each eigenvector.
    let cluster_tol = scale * 1e-10;
    let argmax = |col: usize| -> usize {
        let mut best = 0;
        let mut best_val = -1.0f64;
        for i in 0..n {
            let x = v[(i, col)].norm();
            if x > best_val + 1e-15 {
                best_val = x;
                best = i;
            }
        }
        best
    };
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (eigs[order[end]] - eigs[order[start]]).abs() <= cluster_tol {
            end += 1;
        }
        if end - start > 1 {
            order[start..end].sort_by_key(|&col| argmax(col));
        }
        start = end;
    }

    let mut w = Vec::with_capacity(n);
    let mut vec_out = ComplexMatrix::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        w.push(eigs[old_col]);
        let k = argmax(old_col);
        let pivot = v[(k, old_col)];
        let ph = if pivot.norm() > 0.0 {
            pivot.conj() / pivot.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..n {
            vec_out[(i, new_col)] = v[(i, old_col)] * ph;
        }
    }

    if !vec_out.is_finite() || !w.iter().all(|x| x.is_finite()) {
        return Err(NumericsError::NonFinite("hermitian_eigensystem"));
    }
    Ok((w, vec_out))
}

/// Matrix exponential by scaling-and-squaring with a truncated Taylor series.
///
/// The input is halved until its 1-norm is ≤ 0.5, the series is summed until
/// the term norm drops below 1e-16, and the result is squared back up.
pub fn expm(m: &ComplexMatrix) -> ComplexMatrix {
    assert!(m.is_square(), "expm requires a square matrix");
    let n = m.rows();
    if n == 0 {
        return ComplexMatrix::zeros(0, 0);
    }

    let norm = m.one_norm();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let a = m.scale_re(0.5f64.powi(squarings as i32));

    let mut result = ComplexMatrix::identity(n);
    let mut term = ComplexMatrix::identity(n);
    for k in 1..=64u32 {
        term = term.matmul(&a).scale_re(1.0 / k as f64);
        result = result.add(&term);
        if term.max_norm() < 1e-16 {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.matmul(&result);
    }
    result
}

/// Inverse by Gauss-Jordan elimination with partial pivoting.
pub fn inverse(m: &ComplexMatrix) -> Result<ComplexMatrix, NumericsError> {
    if !m.is_square() {
        return Err(NumericsError::NotSquare(m.rows(), m.cols()));
    }
    let n = m.rows();
    let mut a = m.clone();
    let mut inv = ComplexMatrix::identity(n);
    let scale = m.max_norm().max(f64::MIN_POSITIVE);

    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_val = a[(col, col)].norm();
        for row in col + 1..n {
            let val = a[(row, col)].norm();
            if val > pivot_val {
                pivot_val = val;
                pivot_row = row;
            }
        }
        if pivot_val < 1e-14 * scale {
            return Err(NumericsError::Singular(pivot_val));
        }
        if pivot_row != col {
            for j in 0..n {
                let tmp = a[(col, j)];
                a[(col, j)] = a[(pivot_row, j)];
                a[(pivot_row, j)] = tmp;
                let tmp = inv[(col, j)];
                inv[(col, j)] = inv[(pivot_row, j)];
                inv[(pivot_row, j)] = tmp;
            }
        }
        let pivot = a[(col, col)];
        for j in 0..n {
            a[(col, j)] /= pivot;
            inv[(col, j)] /= pivot;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[(row, col)];
            if factor.norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..n {
                let acj = a[(col, j)];
                let icj = inv[(col, j)];
                a[(row, j)] -= factor * acj;
                inv[(row, j)] -= factor * icj;
            }
        }
    }
    Ok(inv)
}

/// Closest unitary to `m` in Frobenius norm, by the Newton iteration
/// X ← (X + X^{-†})/2.
///
/// Fails with `NoConvergence` when an iterate is numerically singular or the
/// update never drops below [`POLAR_NEWTON_TOL`]; either signals an input too
/// far from unitary (for Wilson links: a step that is too large).
pub fn unitary_polar_factor(m: &ComplexMatrix) -> Result<ComplexMatrix, NumericsError> {
    if !m.is_square() {
        return Err(NumericsError::NotSquare(m.rows(), m.cols()));
    }
    let mut x = m.clone();
    for _ in 0..POLAR_NEWTON_CAP {
        let xinv = inverse(&x)
            .map_err(|_| NumericsError::NoConvergence("polar Newton iteration", POLAR_NEWTON_CAP))?;
        let next = x.add(&xinv.adjoint()).scale_re(0.5);
        let delta = next.sub(&x).max_norm();
        x = next;
        if delta < POLAR_NEWTON_TOL {
            if !x.is_finite() {
                return Err(NumericsError::NonFinite("unitary_polar_factor"));
            }
            return Ok(x);
        }
    }
    Err(NumericsError::NoConvergence("polar Newton iteration", POLAR_NEWTON_CAP))
}
