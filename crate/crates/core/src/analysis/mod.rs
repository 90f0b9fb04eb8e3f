//! Closed-form predictors and trajectory diagnostics for the junction.

mod predictors;
mod regime;

pub use predictors::{
    classify_stationary_points, critical_g, critical_values, critical_z, damping_transition_time,
    energy_contours, linear_frequencies, mst_condition, potential, potential_curve,
    potential_symmetric, CriticalValues, CriticalZ, EnergyGrid, Frequency, GridSpec,
    LinearFrequencies, MstCheck, PointKind, PotentialCurve, StationaryPoint, TransitionTime,
};
pub use regime::{
    classify_regime, critical_delta, estimate_frequency, is_trapped, trajectory_frequency,
    CriticalDelta, PhaseMode, RegimeReport, SearchOptions, Window, TRAPPED_MEAN_Z,
};
