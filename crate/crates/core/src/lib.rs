//! Simulator for quantum-nondemolition phonon readout, coherent
//! displacement, and Wigner tomography of a torsional nano-oscillator
//! interrogated by a beam of Rydberg atoms.
//!
//! The crate models the joint oscillator ⊗ two-level-atom density matrix
//! under a Lindblad master equation with a time-dependent coupling set by
//! classical fly-by trajectories, plus the Ramsey pulse/detect machinery and
//! protocol layers built on top of it:
//!
//! - [`hilbert`]: truncated Fock ⊗ two-level operator algebra
//! - [`model`]: physical parameters, coupling geometry, beam sampling
//! - [`hamiltonian`]: rotating-frame and adiabatically-eliminated Hamiltonians
//! - [`dissipation`]: Lindblad channel set
//! - [`propagator`]: master-equation integrators and instantaneous unitaries
//! - [`ramsey`]: QND measurement engine (pulses, calibration, collapse)
//! - [`control`]: coherent displacement via driven fly-by atoms
//! - [`tomography`]: Wigner-function reconstruction protocol
//! - [`seeding`]/[`exec`]: deterministic parallel Monte Carlo plumbing

pub mod constants;
pub mod control;
pub mod dissipation;
pub mod exec;
pub mod hamiltonian;
pub mod hilbert;
pub mod linalg;
pub mod model;
pub mod propagator;
pub mod quad;
pub mod ramsey;
pub mod reference;
pub mod seeding;
pub mod tomography;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("integrator step size underflow at t = {t:.6e} s (stiffness or bad tolerances)")]
    StepSizeUnderflow { t: f64 },

    #[error("operator is not unitary (defect {defect:.3e})")]
    NonUnitary { defect: f64 },

    #[error("the split-step method requires a resonant-coupling Hamiltonian structure")]
    UnsupportedHamiltonian,

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error(
        "displacement target |α| = {requested:.4} unreachable: max |α| = {max_reachable:.4} \
         at the Rabi-frequency cap"
    )]
    TargetUnreachable { requested: f64, max_reachable: f64 },

    #[error("probability {0} outside [0, 1] beyond numerical slack")]
    InvalidProbability(f64),
}
