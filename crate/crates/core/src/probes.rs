//! Probe state construction: ground states, Gibbs states, named pure probes.

use crate::matrix::{
    vec_norm, ComplexMatrix, HermitianOperator, MatrixError, Spectrum, DEGENERACY_TOL,
};
use num_complex::Complex64 as C64;
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("temperature must be positive (got {0})")]
    NonPositiveTemperature(f64),
    #[error("unknown probe id {0:?}")]
    UnknownProbe(String),
    #[error("state invariant violated: {0}")]
    InvalidState(String),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// Pure or mixed probe state of the 8-level manifold.
#[derive(Clone, Debug)]
pub enum QuantumState {
    Pure(PureState),
    Mixed(MixedState),
}

#[derive(Clone, Debug)]
pub struct PureState {
    vector: Vec<C64>,
}

#[derive(Clone, Debug)]
pub struct MixedState {
    density: HermitianOperator,
    eigen: OnceLock<(Vec<f64>, ComplexMatrix)>,
}

impl PureState {
    pub fn new(vector: Vec<C64>) -> Result<Self, ProbeError> {
        let n = vec_norm(&vector);
        if (n - 1.0).abs() > 1e-12 {
            return Err(ProbeError::InvalidState(format!("norm {n} != 1")));
        }
        Ok(Self { vector })
    }

    /// Normalizes, then applies the deterministic phase fix (largest-modulus
    /// component real positive).
    pub fn normalized(mut vector: Vec<C64>) -> Result<Self, ProbeError> {
        let n = vec_norm(&vector);
        if n < 1e-300 {
            return Err(ProbeError::InvalidState("zero vector".into()));
        }
        for z in vector.iter_mut() {
            *z /= n;
        }
        fix_phase(&mut vector);
        Self::new(vector)
    }

    pub fn vector(&self) -> &[C64] {
        &self.vector
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }

    pub fn density(&self) -> HermitianOperator {
        HermitianOperator::new(crate::matrix::outer(&self.vector, &self.vector))
            .expect("projector is Hermitian")
    }
}

pub fn fix_phase(v: &mut [C64]) {
    let mut best = 0;
    let mut best_mod = 0.0;
    for (i, z) in v.iter().enumerate() {
        let m = z.norm();
        if m > best_mod + 1e-15 {
            best_mod = m;
            best = i;
        }
    }
    if best_mod > 0.0 {
        let rot = v[best].conj() / best_mod;
        for z in v.iter_mut() {
            *z *= rot;
        }
    }
}

impl MixedState {
    pub fn new(density: ComplexMatrix) -> Result<Self, ProbeError> {
        let op = HermitianOperator::new(density)?;
        let tr = op.matrix().trace();
        if (tr.re - 1.0).abs() > 1e-12 || tr.im.abs() > 1e-12 {
            return Err(ProbeError::InvalidState(format!("trace {tr} != 1")));
        }
        let min_eig = op.eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eig < -1e-12 {
            return Err(ProbeError::InvalidState(format!("negative eigenvalue {min_eig}")));
        }
        Ok(Self { density: op, eigen: OnceLock::new() })
    }

    pub fn density(&self) -> &HermitianOperator {
        &self.density
    }

    /// Eigenvalues clipped to [0, 1], with eigenvectors; cached.
    pub fn eigendata(&self) -> (&[f64], &ComplexMatrix) {
        let (w, v) = self.eigen.get_or_init(|| {
            let s = self.density.spectrum();
            (
                s.eigenvalues.iter().map(|e| e.max(0.0)).collect(),
                s.eigenvectors.clone(),
            )
        });
        (w, v)
    }
}

impl QuantumState {
    pub fn dim(&self) -> usize {
        match self {
            QuantumState::Pure(p) => p.dim(),
            QuantumState::Mixed(m) => m.density().dim(),
        }
    }

    pub fn density_matrix(&self) -> ComplexMatrix {
        match self {
            QuantumState::Pure(p) => p.density().matrix().clone(),
            QuantumState::Mixed(m) => m.density().matrix().clone(),
        }
    }

    pub fn as_pure(&self) -> Option<&PureState> {
        match self {
            QuantumState::Pure(p) => Some(p),
            QuantumState::Mixed(_) => None,
        }
    }
}

/// Lowest-eigenvalue eigenvector with a degeneracy flag. The flag is set when
/// the gap E1 − E0 falls below the degeneracy threshold; callers computing
/// bounds must refuse or report divergence in that case.
pub fn ground_state(h: &HermitianOperator) -> Result<(PureState, bool), ProbeError> {
    let spec = h.spectrum();
    let scale = 1.0 + h.operator_norm();
    let degenerate = spec.eigenvalues[1] - spec.eigenvalues[0] < DEGENERACY_TOL * scale;
    let mut v = spec.eigenvector(0);
    fix_phase(&mut v);
    Ok((PureState::new(v)?, degenerate))
}

/// Gibbs state e^{−H/T} / Z computed spectrally (stationary by construction).
pub fn thermal_state(h: &HermitianOperator, temperature: f64) -> Result<MixedState, ProbeError> {
    if !(temperature > 0.0) {
        return Err(ProbeError::NonPositiveTemperature(temperature));
    }
    let spec = h.spectrum();
    let e0 = spec.eigenvalues[0];
    let weights: Vec<f64> = spec
        .eigenvalues
        .iter()
        .map(|e| (-(e - e0) / temperature).exp())
        .collect();
    let z: f64 = weights.iter().sum();
    let mut k = 0;
    let rho = spec.map_eigenvalues(|_| {
        let w = C64::new(weights[k] / z, 0.0);
        k += 1;
        w
    });
    MixedState::new(rho)
}

/// Gibbs populations and the eigenbasis, without forming the density matrix.
pub fn thermal_populations(spec: &Spectrum, temperature: f64) -> Vec<f64> {
    let e0 = spec.eigenvalues[0];
    let w: Vec<f64> = spec
        .eigenvalues
        .iter()
        .map(|e| (-(e - e0) / temperature).exp())
        .collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProbeId {
    /// (e5 + e8)/√2
    PsiA,
    /// (e5 + e6 + e7 + e8)/2
    PsiB,
    /// (2 e1 + e2 + e3 + 2 e4)/√10
    PsiOpt,
}

impl std::str::FromStr for ProbeId {
    type Err = ProbeError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "psiA" | "psi_a" | "A" => Ok(ProbeId::PsiA),
            "psiB" | "psi_b" | "B" => Ok(ProbeId::PsiB),
            "psiOpt" | "psi_opt" | "opt" => Ok(ProbeId::PsiOpt),
            other => Err(ProbeError::UnknownProbe(other.into())),
        }
    }
}

pub fn named_probe(id: ProbeId) -> PureState {
    let r = |x: f64| C64::new(x, 0.0);
    let z = r(0.0);
    let v = match id {
        ProbeId::PsiA => {
            let a = r(1.0 / 2f64.sqrt());
            vec![z, z, z, z, a, z, z, a]
        }
        ProbeId::PsiB => {
            let a = r(0.5);
            vec![z, z, z, z, a, a, a, a]
        }
        ProbeId::PsiOpt => {
            let a = r(1.0 / 10f64.sqrt());
            vec![a * 2.0, a, a, a * 2.0, z, z, z, z]
        }
    };
    PureState::new(v).expect("named probes are normalized")
}
