//! Dense complex linear algebra for small Hermitian problems.
//!
//! Everything here is dimension-generic, but the physical model fixes
//! dim = 8, so all routines favour robustness over asymptotic speed. The
//! eigensolver is a cyclic complex Jacobi iteration.

use num_complex::Complex64 as C64;
use std::fmt;
use std::sync::OnceLock;
use thiserror::Error;

/// Hermiticity check tolerance: ‖A − A†‖_max ≤ HERM_TOL · (1 + ‖A‖_max).
pub const HERM_TOL: f64 = 1e-12;
/// Eigendecomposition residual tolerance (relative to 1 + ‖A‖_op).
pub const EIG_TOL: f64 = 1e-10;
/// Eigenvalues closer than DEGENERACY_TOL · (1 + ‖A‖_op) count as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum MatrixError {
    #[error("matrix is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("non-finite entry encountered")]
    NonFinite,
    #[error("Jacobi eigensolver failed to converge after {0} sweeps")]
    NoConvergence(usize),
    #[error("operator norm requested for a non-Hermitian matrix")]
    OperatorNormNonHermitian,
    #[error("singular matrix")]
    Singular,
}

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![C64::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let dim = rows.len();
        Self::from_fn(dim, |i, j| rows[i][j])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z * s) .collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.matmul(other).sub(&other.matmul(self))
    }

    pub fn kron(&self, other: &Self) -> Self {
        let (n, m) = (self.dim, other.dim);
        Self::from_fn(n * m, |i, j| {
            self[(i / m, j / m)] * other[(i % m, j % m)]
        })
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.dim, v.len());
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// Entrywise max modulus.
    pub fn max_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn hermiticity_residual(&self) -> f64 {
        let mut r: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                r = r.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        r
    }

    /// Column `j` as a vector.
    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.dim).map(|i| self[(i, j)]).collect()
    }
}

/// Inner product ⟨a|b⟩ with conjugation on the left argument.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn vec_norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Outer product |a⟩⟨b|.
pub fn outer(a: &[C64], b: &[C64]) -> ComplexMatrix {
    ComplexMatrix::from_fn(a.len(), |i, j| a[i] * b[j].conj())
}

/// Eigendecomposition of a Hermitian matrix: ascending eigenvalues,
/// orthonormal eigenvector columns.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors as columns, same order as `eigenvalues`.
    pub eigenvectors: ComplexMatrix,
}

impl Spectrum {
    pub fn eigenvector(&self, k: usize) -> Vec<C64> {
        self.eigenvectors.column(k)
    }

    /// Rotate a matrix into the eigenbasis: V† A V.
    pub fn to_eigenbasis(&self, a: &ComplexMatrix) -> ComplexMatrix {
        self.eigenvectors.adjoint().matmul(&a.matmul(&self.eigenvectors))
    }

    /// Rotate a matrix from the eigenbasis back: V A V†.
    pub fn from_eigenbasis(&self, a: &ComplexMatrix) -> ComplexMatrix {
        self.eigenvectors.matmul(&a.matmul(&self.eigenvectors.adjoint()))
    }

    /// Apply a scalar function to the spectrum: Σ f(E_k) |v_k⟩⟨v_k|.
    pub fn map_eigenvalues(&self, mut f: impl FnMut(f64) -> C64) -> ComplexMatrix {
        let n = self.eigenvalues.len();
        let v = &self.eigenvectors;
        let mut out = ComplexMatrix::zeros(n);
        for k in 0..n {
            let fk = f(self.eigenvalues[k]);
            if fk.norm_sqr() == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = v[(i, k)];
                for j in 0..n {
                    out[(i, j)] += fk * vik * v[(j, k)].conj();
                }
            }
        }
        out
    }
}

/// Hermitian operator with a transparent (lazy, race-free) spectrum cache.
#[derive(Clone, Debug)]
pub struct HermitianOperator {
    mat: ComplexMatrix,
    spectrum: OnceLock<Spectrum>,
}

impl HermitianOperator {
    /// Validates finiteness and ‖A − A†‖_max ≤ 1e-12 (1 + ‖A‖_max).
    pub fn new(mat: ComplexMatrix) -> Result<Self, MatrixError> {
        if !mat.is_finite() {
            return Err(MatrixError::NonFinite);
        }
        let r = mat.hermiticity_residual();
        if r > HERM_TOL * (1.0 + mat.max_norm()) {
            return Err(MatrixError::NotHermitian { residual: r });
        }
        Ok(Self { mat, spectrum: OnceLock::new() })
    }

    /// Symmetrizes (A + A†)/2 first; for matrices Hermitian only up to
    /// roundoff (e.g. assembled from products).
    pub fn new_symmetrized(mat: ComplexMatrix) -> Result<Self, MatrixError> {
        let sym = mat.add(&mat.adjoint()).scale(C64::new(0.5, 0.0));
        Self::new(sym)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn spectrum(&self) -> &Spectrum {
        self.spectrum.get_or_init(|| {
            jacobi_eigh(&self.mat).expect("validated Hermitian matrix must diagonalize")
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.spectrum().eigenvalues
    }

    /// Largest |eigenvalue|.
    pub fn operator_norm(&self) -> f64 {
        self.eigenvalues().iter().map(|e| e.abs()).fold(0.0, f64::max)
    }

    pub fn add(&self, other: &Self) -> Result<Self, MatrixError> {
        Self::new(self.mat.add(&other.mat))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            mat: self.mat.scale(C64::new(s, 0.0)),
            spectrum: OnceLock::new(),
        }
    }
}

/// Two-sided Jacobi eigensolver for complex Hermitian matrices.
///
/// Convergence: off-diagonal Frobenius norm below 1e-14 · ‖A‖_F.
/// Eigenvalues ascending; each eigenvector's largest-modulus component is
/// rotated to the positive real axis (first such index on ties).
pub fn jacobi_eigh(a: &ComplexMatrix) -> Result<Spectrum, MatrixError> {
    let n = a.dim();
    let mut m = a.clone();
    // enforce exact Hermiticity of the working copy
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
        m[(i, i)] = C64::new(m[(i, i)].re, 0.0);
    }
    let mut v = ComplexMatrix::identity(n);
    let fro = m.frobenius_norm().max(f64::MIN_POSITIVE);
    let tol = 1e-14 * fro;
    let max_sweeps = 60;

    for sweep in 0..=max_sweeps {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += 2.0 * m[(i, j)].norm_sqr();
            }
        }
        if off.sqrt() <= tol {
            return Ok(sort_spectrum(m, v));
        }
        if sweep == max_sweeps {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.norm() <= tol / (n as f64) {
                    continue;
                }
                // unitary 2x2 rotation zeroing (p,q)
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let abs_apq = apq.norm();
                let phase = apq / abs_apq;
                let tau = (aqq - app) / (2.0 * abs_apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // columns: col_p' = c*col_p - s*conj(phase)... apply G with
                // G[pp]=c, G[pq]=s*phase, G[qp]=-s*conj(phase), G[qq]=c  (A <- G† A G)
                let g_pq = phase * s;
                for i in 0..n {
                    let aip = m[(i, p)];
                    let aiq = m[(i, q)];
                    m[(i, p)] = aip * c - aiq * g_pq.conj();
                    m[(i, q)] = aip * g_pq + aiq * c;
                }
                for j in 0..n {
                    let apj = m[(p, j)];
                    let aqj = m[(q, j)];
                    m[(p, j)] = apj * c - aqj * g_pq;
                    m[(q, j)] = apj * g_pq.conj() + aqj * c;
                }
                // re-symmetrize the touched entries against roundoff
                m[(p, q)] = C64::new(0.0, 0.0);
                m[(q, p)] = C64::new(0.0, 0.0);
                m[(p, p)] = C64::new(m[(p, p)].re, 0.0);
                m[(q, q)] = C64::new(m[(q, q)].re, 0.0);
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * c - viq * g_pq.conj();
                    v[(i, q)] = vip * g_pq + viq * c;
                }
            }
        }
    }
    Err(MatrixError::NoConvergence(60))
}

fn sort_spectrum(m: ComplexMatrix, v: ComplexMatrix) -> Spectrum {
    let n = m.dim();
    let mut order: Vec<usize> = (0..n).collect();
    let evals: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    order.sort_by(|&a, &b| evals[a].partial_cmp(&evals[b]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&k| evals[k]).collect();
    let mut vecs = ComplexMatrix::zeros(n);
    for (new_k, &old_k) in order.iter().enumerate() {
        // phase fix: largest-modulus component real positive
        let mut best = 0;
        let mut best_mod = 0.0;
        for i in 0..n {
            let md = v[(i, old_k)].norm();
            if md > best_mod + 1e-15 {
                best_mod = md;
                best = i;
            }
        }
        let ph = v[(best, old_k)];
        let rot = if ph.norm() > 0.0 { ph.conj() / ph.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..n {
            vecs[(i, new_k)] = v[(i, old_k)] * rot;
        }
    }
    Spectrum { eigenvalues, eigenvectors: vecs }
}

/// T_ijk = σ_i ⊗ σ_j ⊗ σ_k, big-endian slot order (slot i acts on the most
/// significant bit of the basis index).
pub fn pauli_tensor(i: usize, j: usize, k: usize) -> Result<HermitianOperator, MatrixError> {
    let s = pauli(i)?;
    let t = pauli(j)?;
    let u = pauli(k)?;
    HermitianOperator::new(s.kron(&t).kron(&u))
}

fn pauli(i: usize) -> Result<ComplexMatrix, MatrixError> {
    let z = |re: f64, im: f64| C64::new(re, im);
    let rows = match i {
        0 => [[z(1., 0.), z(0., 0.)], [z(0., 0.), z(1., 0.)]],
        1 => [[z(0., 0.), z(1., 0.)], [z(1., 0.), z(0., 0.)]],
        2 => [[z(0., 0.), z(0., -1.)], [z(0., 1.), z(0., 0.)]],
        3 => [[z(1., 0.), z(0., 0.)], [z(0., 0.), z(-1., 0.)]],
        _ => return Err(MatrixError::IndexOutOfRange(format!("pauli index {i}"))),
    };
    Ok(ComplexMatrix::from_fn(2, |a, b| rows[a][b]))
}

/// U = Σ_k e^{−i t E_k} |v_k⟩⟨v_k|.
pub fn unitary_of(h: &HermitianOperator, t: f64) -> ComplexMatrix {
    h.spectrum()
        .map_eigenvalues(|e| C64::new(0.0, -t * e).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormKind {
    /// Σ singular values.
    Trace,
    /// max |eigenvalue|; Hermitian input required.
    Operator,
    /// Entrywise max modulus.
    Max,
}

/// Matrix norms per the conventions used by the bound formulas.
pub fn norm(a: &ComplexMatrix, kind: NormKind) -> Result<f64, MatrixError> {
    if !a.is_finite() {
        return Err(MatrixError::NonFinite);
    }
    match kind {
        NormKind::Max => Ok(a.max_norm()),
        NormKind::Operator => {
            let h = HermitianOperator::new(a.clone())
                .map_err(|_| MatrixError::OperatorNormNonHermitian)?;
            Ok(h.operator_norm())
        }
        NormKind::Trace => {
            let h = a.hermiticity_residual();
            if h <= HERM_TOL * (1.0 + a.max_norm()) {
                let herm = HermitianOperator::new(a.clone())?;
                Ok(herm.eigenvalues().iter().map(|e| e.abs()).sum())
            } else {
                // singular values from A†A
                let ata = HermitianOperator::new_symmetrized(a.adjoint().matmul(a))?;
                Ok(ata
                    .eigenvalues()
                    .iter()
                    .map(|e| e.max(0.0).sqrt())
                    .sum())
            }
        }
    }
}

/// Small dense real matrix (row-major); the bound algebra is 2x2 / 3x3.
#[derive(Clone, PartialEq)]
pub struct RealMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl fmt::Debug for RealMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "RealMatrix {}x{} [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                write!(f, "{:+.6e} ", self[(i, j)])?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl std::ops::Index<(usize, usize)> for RealMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RealMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.dim + j]
    }
}

impl RealMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        Self::from_fn(n, |i, j| (0..n).map(|k| self[(i, k)] * other[(k, j)]).sum())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|x| x * s).collect() }
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }

    pub fn symmetry_residual(&self) -> f64 {
        let mut r: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                r = r.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        r
    }

    pub fn antisymmetry_residual(&self) -> f64 {
        let mut r: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                r = r.max((self[(i, j)] + self[(j, i)]).abs());
            }
        }
        r
    }

    /// Gauss-Jordan inverse with partial pivoting.
    pub fn inverse(&self) -> Result<Self, MatrixError> {
        let n = self.dim;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            let mut piv = col;
            for r in (col + 1)..n {
                if a[(r, col)].abs() > a[(piv, col)].abs() {
                    piv = r;
                }
            }
            if a[(piv, col)].abs() < 1e-300 {
                return Err(MatrixError::Singular);
            }
            if piv != col {
                for j in 0..n {
                    a.data.swap(col * n + j, piv * n + j);
                    inv.data.swap(col * n + j, piv * n + j);
                }
            }
            let d = a[(col, col)];
            for j in 0..n {
                a[(col, j)] /= d;
                inv[(col, j)] /= d;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[(r, col)];
                if f == 0.0 {
                    continue;
                }
                for j in 0..n {
                    let s = a[(col, j)];
                    a[(r, j)] -= f * s;
                    let s2 = inv[(col, j)];
                    inv[(r, j)] -= f * s2;
                }
            }
        }
        Ok(inv)
    }

    /// Eigendecomposition of a symmetric matrix (via the complex kernel).
    pub fn sym_eigen(&self) -> Result<(Vec<f64>, RealMatrix), MatrixError> {
        let c = ComplexMatrix::from_fn(self.dim, |i, j| {
            C64::new(0.5 * (self[(i, j)] + self[(j, i)]), 0.0)
        });
        let spec = jacobi_eigh(&c)?;
        let vecs = RealMatrix::from_fn(self.dim, |i, j| spec.eigenvectors[(i, j)].re);
        Ok((spec.eigenvalues, vecs))
    }

    /// Symmetric square root (input must be PSD up to roundoff).
    pub fn sym_sqrt(&self) -> Result<Self, MatrixError> {
        let (w, v) = self.sym_eigen()?;
        let n = self.dim;
        Ok(Self::from_fn(n, |i, j| {
            (0..n).map(|k| v[(i, k)] * w[k].max(0.0).sqrt() * v[(j, k)]).sum()
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::proptest;
    use proptest::test_runner::Config as ProptestConfig;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> HermitianOperator {
        let raw = ComplexMatrix::from_fn(n, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        HermitianOperator::new_symmetrized(raw).unwrap()
    }

    #[test]
    fn pauli_identity_and_diag() {
        let t000 = pauli_tensor(0, 0, 0).unwrap();
        assert!(t000.matrix().sub(&ComplexMatrix::identity(8)).max_norm() < 1e-15);
        let t300 = pauli_tensor(3, 0, 0).unwrap();
        for i in 0..8 {
            let expect = if i < 4 { 1.0 } else { -1.0 };
            assert!((t300.matrix()[(i, i)].re - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn pauli_product_example() {
        // (1,3,0)·(1,0,3) = T033
        let a = pauli_tensor(1, 3, 0).unwrap();
        let b = pauli_tensor(1, 0, 3).unwrap();
        let c = pauli_tensor(0, 3, 3).unwrap();
        let prod = a.matrix().matmul(b.matrix());
        assert!(prod.sub(c.matrix()).max_norm() < 1e-14);
    }

    #[test]
    fn pauli_index_out_of_range() {
        assert!(pauli_tensor(4, 0, 0).is_err());
    }

    /// Exhaustive product check against the structure-constant expansion of
    /// σ_a σ_b = δ_ab I + i ε_abc σ_c applied slotwise.
    #[test]
    fn pauli_multiplication_table_exhaustive() {
        fn single(a: usize, b: usize) -> Vec<(usize, C64)> {
            // σ_a σ_b as sum over basis {σ_0..σ_3}
            if a == 0 {
                return vec![(b, C64::new(1.0, 0.0))];
            }
            if b == 0 {
                return vec![(a, C64::new(1.0, 0.0))];
            }
            if a == b {
                return vec![(0, C64::new(1.0, 0.0))];
            }
            let eps = |i, j, k| -> f64 {
                match (i, j, k) {
                    (1, 2, 3) | (2, 3, 1) | (3, 1, 2) => 1.0,
                    (3, 2, 1) | (1, 3, 2) | (2, 1, 3) => -1.0,
                    _ => 0.0,
                }
            };
            let c = 6 - a - b;
            vec![(c, C64::new(0.0, eps(a, b, c)))]
        }
        for i in 0..4usize {
            for j in 0..4usize {
                for k in 0..4usize {
                    for l in 0..4usize {
                        for m in 0..4usize {
                            for n in 0..4usize {
                                let lhs = pauli_tensor(i, j, k)
                                    .unwrap()
                                    .matrix()
                                    .matmul(pauli_tensor(l, m, n).unwrap().matrix());
                                let (s1, c1) = single(i, l)[0];
                                let (s2, c2) = single(j, m)[0];
                                let (s3, c3) = single(k, n)[0];
                                let rhs = pauli_tensor(s1, s2, s3)
                                    .unwrap()
                                    .matrix()
                                    .scale(c1 * c2 * c3);
                                assert!(lhs.sub(&rhs).max_norm() < 1e-13,
                                    "T{i}{j}{k} T{l}{m}{n} mismatch");
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn eig_diag_sorted() {
        let d = ComplexMatrix::from_fn(4, |i, j| {
            if i == j {
                C64::new([2.0, 1.0, -3.0, 0.5][i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let spec = jacobi_eigh(&d).unwrap();
        assert_eq!(spec.eigenvalues.len(), 4);
        let expect = [-3.0, 0.5, 1.0, 2.0];
        for (a, b) in spec.eigenvalues.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn eig_reconstruction_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let h = random_hermitian(8, &mut rng);
            let spec = h.spectrum();
            let rec = spec.map_eigenvalues(|e| C64::new(e, 0.0));
            let scale = 1.0 + h.operator_norm();
            assert!(rec.sub(h.matrix()).max_norm() <= 1e-10 * scale);
            // orthonormality
            let vtv = spec.eigenvectors.adjoint().matmul(&spec.eigenvectors);
            assert!(vtv.sub(&ComplexMatrix::identity(8)).max_norm() < 1e-10);
            // residual per eigenpair
            for k in 0..8 {
                let v = spec.eigenvector(k);
                let hv = h.matrix().apply(&v);
                let res: f64 = hv
                    .iter()
                    .zip(&v)
                    .map(|(x, y)| (x - y * spec.eigenvalues[k]).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                assert!(res <= 1e-10 * scale);
            }
        }
    }

    #[test]
    fn unitary_identity_at_t0_and_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = random_hermitian(8, &mut rng);
        let u0 = unitary_of(&h, 0.0);
        assert!(u0.sub(&ComplexMatrix::identity(8)).max_norm() < 1e-12);
        let (s, t) = (0.7, 1.9);
        let us = unitary_of(&h, s);
        let ut = unitary_of(&h, t);
        let ust = unitary_of(&h, s + t);
        assert!(us.matmul(&ut).sub(&ust).max_norm() < 1e-10);
        let uu = us.matmul(&us.adjoint());
        assert!(uu.sub(&ComplexMatrix::identity(8)).max_norm() < 1e-10);
    }

    #[test]
    fn norms() {
        let id = ComplexMatrix::identity(8);
        assert!((norm(&id, NormKind::Trace).unwrap() - 8.0).abs() < 1e-12);
        let mut d = ComplexMatrix::zeros(4);
        d[(0, 0)] = C64::new(3.0, 0.0);
        d[(1, 1)] = C64::new(-1.0, 0.0);
        assert!((norm(&d, NormKind::Operator).unwrap() - 3.0).abs() < 1e-12);
        assert!((norm(&d, NormKind::Max).unwrap() - 3.0).abs() < 1e-12);
        // trace norm of Hermitian equals Σ|E_k|
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_hermitian(6, &mut rng);
        let tn = norm(h.matrix(), NormKind::Trace).unwrap();
        let direct: f64 = h.eigenvalues().iter().map(|e| e.abs()).sum();
        assert!((tn - direct).abs() < 1e-10);
        // operator norm rejects non-Hermitian
        let mut nh = ComplexMatrix::zeros(2);
        nh[(0, 1)] = C64::new(1.0, 0.0);
        assert!(matches!(
            norm(&nh, NormKind::Operator),
            Err(MatrixError::OperatorNormNonHermitian)
        ));
        // trace norm of a non-Hermitian matrix = sum of singular values
        let mut up = ComplexMatrix::zeros(2);
        up[(0, 1)] = C64::new(2.0, 0.0);
        assert!((norm(&up, NormKind::Trace).unwrap() - 2.0).abs() < 1e-12);
        let mut nf = ComplexMatrix::zeros(2);
        nf[(0, 0)] = C64::new(f64::NAN, 0.0);
        assert!(matches!(norm(&nf, NormKind::Max), Err(MatrixError::NonFinite)));
    }

    #[test]
    fn real_matrix_inverse() {
        let m = RealMatrix::from_fn(3, |i, j| [[4., 1., 0.], [1., 3., 1.], [0., 1., 2.]][i][j]);
        let inv = m.inverse().unwrap();
        let prod = m.matmul(&inv);
        assert!(prod.sub(&RealMatrix::identity(3)).max_abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn eig_reconstructs(seed in 0u64..10_000) {
            use proptest::prop_assert;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random_hermitian(8, &mut rng);
            let rec = h.spectrum().map_eigenvalues(|e| C64::new(e, 0.0));
            prop_assert!(rec.sub(h.matrix()).max_norm() <= 1e-10 * (1.0 + h.operator_norm()));
        }

        #[test]
        fn unitary_group_law(seed in 0u64..10_000, s in -3.0f64..3.0, t in -3.0f64..3.0) {
            use proptest::prop_assert;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random_hermitian(8, &mut rng);
            let lhs = unitary_of(&h, s).matmul(&unitary_of(&h, t));
            let rhs = unitary_of(&h, s + t);
            prop_assert!(lhs.sub(&rhs).max_norm() < 1e-10);
        }
    }
}
