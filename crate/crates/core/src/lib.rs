//! Phononic bosonic Josephson junction: the driven optomechanical model, its
//! two-mode reduction, the classical `(z, phi)` junction dynamics and tools to
//! analyse them.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod bjj;
pub mod error;
pub mod full_model;
pub mod ode;

pub use bjj::{
    bjj_rhs, hamiltonian, inverse_rescaled_time, rescaled_time, simulate_bjj, simulate_damped,
    simulate_rescaled, symmetry_transform, tunneling_current, BjjParams, BjjState, BjjTrajectory,
    Clock, DampedSeries,
};
pub use error::{Error, Result};
pub use full_model::{
    derive_bjj_params, effective_params, phonon_observables, simulate_full, simulate_reduced,
    steady_state, validity_check, BjjMapping, ComplexTrajectory, FullInit, FullSystemParams,
    MechanicalMode, PhononSample, ReducedMode, ReducedParams, SteadyState, ValidityReport,
};
pub use num_complex::Complex64;
pub use ode::{integrate, Crossing, IntegratorOptions, OdeError, RawTrajectory};
