//! Precision bounds for joint electric/magnetic field estimation with an
//! OH-molecule probe: quantum Fisher information, Holevo bound, measurement
//! saturability conditions, and a sequential feedback control simulator.
//!
//! Units: energies in kelvin, times in 1/kelvin (hbar = k_B = 1).

pub mod adaptive;
pub mod estimation;
pub mod hcrb;
pub mod matrix;
pub mod model;
pub mod probes;
pub mod unitary;

pub use matrix::{ComplexMatrix, HermitianOperator, RealMatrix};
pub use model::{default_constants, FieldSpec, ParamPoint, PhysicalConstants};
pub use probes::{ProbeId, PureState, QuantumState};
