//! OH ground-state Stark–Zeeman model: unit conversions, parameter mapping,
//! Hamiltonian and derivative assembly.
//!
//! Unit system: energies in kelvin (E/k_B), times in 1/kelvin (hbar = k_B = 1).

use crate::matrix::{pauli_tensor, ComplexMatrix, HermitianOperator, MatrixError};
use num_complex::Complex64 as C64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid field specification: {0}")]
    InvalidField(String),
    #[error("parameter index {0} out of range 1..=3")]
    BadParameterIndex(usize),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// Laboratory field configuration. B is along z; E forms angle `theta` with z.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldSpec {
    /// Magnetic field magnitude in gauss.
    pub b_gauss: f64,
    /// Electric field magnitude in kV/cm.
    pub e_kvcm: f64,
    /// Angle between E and the z axis, radians in [0, pi].
    pub theta: f64,
}

impl FieldSpec {
    pub fn new(b_gauss: f64, e_kvcm: f64, theta: f64) -> Result<Self, ModelError> {
        if !(b_gauss.is_finite() && e_kvcm.is_finite() && theta.is_finite()) {
            return Err(ModelError::InvalidField("non-finite input".into()));
        }
        if b_gauss < 0.0 || e_kvcm < 0.0 {
            return Err(ModelError::InvalidField("negative magnitude".into()));
        }
        if !(0.0..=std::f64::consts::PI).contains(&theta) {
            return Err(ModelError::InvalidField(format!("theta {theta} outside [0, pi]")));
        }
        Ok(Self { b_gauss, e_kvcm, theta })
    }
}

/// The three encoding parameters, in kelvin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParamPoint {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
}

impl ParamPoint {
    pub fn new(l1: f64, l2: f64, l3: f64) -> Self {
        Self { l1, l2, l3 }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.l1, self.l2, self.l3]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self { l1: a[0], l2: a[1], l3: a[2] }
    }

    pub fn get(&self, mu: usize) -> f64 {
        self.as_array()[mu - 1]
    }

    pub fn with_component(&self, mu: usize, value: f64) -> Self {
        let mut a = self.as_array();
        a[mu - 1] = value;
        Self::from_array(a)
    }
}

/// Physical constants in kelvin-based units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalConstants {
    /// Lambda-doubling energy, kelvin.
    pub delta: f64,
    /// Bohr magneton per gauss, kelvin/G.
    pub mu_b_per_gauss: f64,
    /// Electric dipole coupling per kV/cm, kelvin/(kV/cm).
    pub mu_e_per_kvcm: f64,
}

// CODATA 2018
const PLANCK_H: f64 = 6.62607015e-34; // J s
const BOLTZMANN_KB: f64 = 1.380649e-23; // J/K
const BOHR_MAGNETON: f64 = 9.2740100783e-24; // J/T
const DEBYE: f64 = 3.33564e-30; // C m

/// Lambda-doubling frequency of the OH ground manifold, Hz.
const LAMBDA_DOUBLING_HZ: f64 = 1.667e9;
/// OH electric dipole moment, debye.
const OH_DIPOLE_DEBYE: f64 = 1.66;

pub fn default_constants() -> PhysicalConstants {
    PhysicalConstants {
        delta: PLANCK_H * LAMBDA_DOUBLING_HZ / BOLTZMANN_KB,
        mu_b_per_gauss: BOHR_MAGNETON * 1e-4 / BOLTZMANN_KB,
        mu_e_per_kvcm: OH_DIPOLE_DEBYE * DEBYE * 1e5 / BOLTZMANN_KB,
    }
}

/// Conversion factor from seconds to 1/kelvin time units (k_B/hbar).
pub fn seconds_to_inverse_kelvin() -> f64 {
    let hbar = PLANCK_H / (2.0 * std::f64::consts::PI);
    BOLTZMANN_KB / hbar
}

pub fn lambdas_from_fields(f: &FieldSpec, c: &PhysicalConstants) -> ParamPoint {
    ParamPoint {
        l1: c.mu_b_per_gauss * f.b_gauss,
        l2: c.mu_e_per_kvcm * f.e_kvcm * f.theta.cos(),
        l3: c.mu_e_per_kvcm * f.e_kvcm * f.theta.sin(),
    }
}

fn t(i: usize, j: usize, k: usize) -> ComplexMatrix {
    pauli_tensor(i, j, k).expect("indices in range").matrix().clone()
}

/// H = −Δ T300 − (4/5)λ1 (2 T030 + T003) + (2/5)λ2 (2 T130 + T103)
///     − (2/5)λ3 (√3 T101 + T111 + T122)
pub fn build_hamiltonian(p: &ParamPoint, c: &PhysicalConstants) -> HermitianOperator {
    let r = |x: f64| C64::new(x, 0.0);
    let mut m = t(3, 0, 0).scale(r(-c.delta));
    m = m.add(&t(0, 3, 0).scale(r(-0.8 * 2.0 * p.l1)));
    m = m.add(&t(0, 0, 3).scale(r(-0.8 * p.l1)));
    m = m.add(&t(1, 3, 0).scale(r(0.4 * 2.0 * p.l2)));
    m = m.add(&t(1, 0, 3).scale(r(0.4 * p.l2)));
    m = m.add(&t(1, 0, 1).scale(r(-0.4 * 3f64.sqrt() * p.l3)));
    m = m.add(&t(1, 1, 1).scale(r(-0.4 * p.l3)));
    m = m.add(&t(1, 2, 2).scale(r(-0.4 * p.l3)));
    HermitianOperator::new(m).expect("Hamiltonian is Hermitian by construction")
}

/// ∂H/∂λ_mu; constant in the parameters (the model is affine).
pub fn build_dh(mu: usize) -> Result<HermitianOperator, ModelError> {
    let r = |x: f64| C64::new(x, 0.0);
    let m = match mu {
        1 => t(0, 3, 0).scale(r(-1.6)).add(&t(0, 0, 3).scale(r(-0.8))),
        2 => t(1, 3, 0).scale(r(0.8)).add(&t(1, 0, 3).scale(r(0.4))),
        3 => t(1, 0, 1)
            .scale(r(-0.4 * 3f64.sqrt()))
            .add(&t(1, 1, 1).scale(r(-0.4)))
            .add(&t(1, 2, 2).scale(r(-0.4))),
        _ => return Err(ModelError::BadParameterIndex(mu)),
    };
    Ok(HermitianOperator::new(m)?)
}

/// All three derivatives in order.
pub fn build_dh_all() -> [HermitianOperator; 3] {
    [
        build_dh(1).unwrap(),
        build_dh(2).unwrap(),
        build_dh(3).unwrap(),
    ]
}
