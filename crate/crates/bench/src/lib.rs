//! Fixed workloads shared by the benchmarks.

use std::f64::consts::FRAC_PI_2;

use phonon_bjj::{BjjParams, BjjState, FullInit, FullSystemParams};

/// Josephson-regime junction from the zero-phase figures.
pub fn josephson() -> (BjjParams, BjjState) {
    (BjjParams::symmetric(0.99), BjjState::new(0.5, 0.0))
}

/// Strongly interacting junction oscillating about `phi = pi/2`.
pub fn half_pi() -> (BjjParams, BjjState) {
    (BjjParams::symmetric(7.0), BjjState::new(0.4, FRAC_PI_2))
}

/// Damped, asymmetric junction that becomes self-trapped.
pub fn damped() -> (BjjParams, BjjState) {
    (
        BjjParams::symmetric(0.9)
            .with_asymmetry(0.03, 0.01)
            .with_damping(0.01),
        BjjState::new(0.5, 0.0),
    )
}

/// Full model at the comparison parameters, 75/25 phonon split.
pub fn full_system() -> (FullSystemParams, FullInit) {
    let params = FullSystemParams::oracle_preset();
    let alpha = phonon_bjj::steady_state(&params)
        .expect("valid parameters")
        .alpha;
    let init = FullInit {
        cavity: alpha,
        mechanical: [
            phonon_bjj::Complex64::new(75f64.sqrt(), 0.0),
            phonon_bjj::Complex64::from_polar(5.0, std::f64::consts::FRAC_PI_4),
        ],
    };
    (params, init)
}
