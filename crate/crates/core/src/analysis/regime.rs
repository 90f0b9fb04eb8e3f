use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bjj::{simulate_bjj, BjjParams, BjjState, BjjTrajectory};
use crate::error::{invalid, Error, Result};
use crate::ode::{Crossing, IntegratorOptions};

/// Time window of a trajectory used for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub start: f64,
    pub end: f64,
}

impl Window {
    pub const fn new(start: f64, end: f64) -> Self {
        Self { start, end }
    }

    pub fn length(&self) -> f64 {
        self.end - self.start
    }
}

impl Default for Window {
    fn default() -> Self {
        Self::new(20.0, 200.0)
    }
}

/// `|mean z|` above this counts as a non-zero average imbalance.
pub const TRAPPED_MEAN_Z: f64 = 0.05;

/// Demeaned crossings needed for three oscillation periods.
const MIN_PERIOD_CROSSINGS: usize = 6;

/// Samples per unit time used to average over the window.
const SAMPLES_PER_UNIT: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseMode {
    ZeroPhase,
    HalfPiPhase,
    RunningPhase,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport {
    pub phase_mode: PhaseMode,
    pub self_trapped: bool,
    pub mean_z: f64,
    pub sign_changes: usize,
    /// Total change of `phi` over the window, in units of `pi`.
    pub winding: f64,
    /// Angular frequency of `z` on the trajectory clock, if enough crossings were seen.
    pub dominant_freq: Option<f64>,
    pub window: Window,
    /// Set when the window holds fewer than three oscillations.
    pub inconclusive: Option<String>,
}

/// Classifies the motion of `traj` over `window`.
///
/// Trapped means no sign change of `z` and `|mean z| > 0.05`. The phase mode is
/// running when `phi` advances by more than `2 pi`, otherwise it is decided by
/// the mean of `phi` modulo `pi`.
pub fn classify_regime(traj: &BjjTrajectory, window: Window) -> Result<RegimeReport> {
    let (s0, s1) = traj.span();
    if !(window.start >= s0 && window.end <= s1 && window.start < window.end) {
        return Err(Error::WindowOutsideSpan {
            start: window.start,
            end: window.end,
            span_start: s0,
            span_end: s1,
        });
    }
    let n = ((window.length() * SAMPLES_PER_UNIT).ceil() as usize).clamp(1000, 200_000);
    let (ts, zs, phis) = traj.uniform(window.start, window.end, n)?;
    let mean_z = time_average(&ts, &zs);
    let mean_phi = time_average(&ts, &phis);
    let sign_changes = traj
        .raw()
        .zero_crossings_in(0, Crossing::Any, (window.start, window.end))?
        .len();
    let winding = (phis[phis.len() - 1] - phis[0]) / PI;

    let phase_mode = if winding.abs() > 2.0 {
        PhaseMode::RunningPhase
    } else {
        let r = mean_phi.rem_euclid(PI);
        if !(PI / 4.0..=3.0 * PI / 4.0).contains(&r) {
            PhaseMode::ZeroPhase
        } else {
            PhaseMode::HalfPiPhase
        }
    };
    let self_trapped = sign_changes == 0 && mean_z.abs() > TRAPPED_MEAN_Z;

    let crossings = demeaned_crossings(&ts, &zs, mean_z);
    let dominant_freq = frequency_from_crossings(&crossings).ok();
    let (z_lo, z_hi) = zs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &z| {
            (a.min(z), b.max(z))
        });
    let moving = z_hi - z_lo > 1e-6;
    let inconclusive =
        (moving && phase_mode != PhaseMode::RunningPhase && crossings.len() < MIN_PERIOD_CROSSINGS)
            .then(|| {
                format!(
                "window [{}, {}] holds {} crossings of z about its mean; need {} for three periods",
                window.start,
                window.end,
                crossings.len(),
                MIN_PERIOD_CROSSINGS
            )
            });

    Ok(RegimeReport {
        phase_mode,
        self_trapped,
        mean_z,
        sign_changes,
        winding,
        dominant_freq,
        window,
        inconclusive,
    })
}

/// Trapezoidal time average.
fn time_average(ts: &[f64], ys: &[f64]) -> f64 {
    let span = ts[ts.len() - 1] - ts[0];
    let area: f64 = ts
        .windows(2)
        .zip(ys.windows(2))
        .map(|(t, y)| 0.5 * (t[1] - t[0]) * (y[0] + y[1]))
        .sum();
    area / span
}

/// Crossings of `ys - level`, linearly interpolated between samples.
fn demeaned_crossings(ts: &[f64], ys: &[f64], level: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for (&t, &y) in ts.iter().zip(ys) {
        let v = y - level;
        if let Some((tp, vp)) = prev {
            if vp == 0.0 {
                // Counted when first reached.
            } else if v == 0.0 {
                out.push(t);
            } else if (vp < 0.0) != (v < 0.0) {
                out.push(tp + (t - tp) * vp / (vp - v));
            }
        } else if v == 0.0 {
            out.push(t);
        }
        prev = Some((t, v));
    }
    out
}

/// Uses an even number of gaps so that unequal half periods average out.
fn frequency_from_crossings(crossings: &[f64]) -> Result<f64> {
    const NEEDED: usize = 4;
    if crossings.len() < NEEDED {
        return Err(Error::TooFewCrossings {
            found: crossings.len(),
            needed: NEEDED,
        });
    }
    let gaps = (crossings.len() - 1) & !1;
    let mean_gap = (crossings[gaps] - crossings[0]) / gaps as f64;
    Ok(PI / mean_gap)
}

/// Angular frequency of a sampled series over `window`, `pi / mean gap` between
/// crossings of the demeaned series.
pub fn estimate_frequency(times: &[f64], values: &[f64], window: Window) -> Result<f64> {
    if times.len() != values.len() {
        return Err(invalid("values", "length differs from times"));
    }
    let (ts, ys): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= window.start && **t <= window.end)
        .map(|(&t, &y)| (t, y))
        .unzip();
    if ts.len() < 2 {
        return Err(Error::TooFewCrossings {
            found: 0,
            needed: 4,
        });
    }
    let mean = time_average(&ts, &ys);
    frequency_from_crossings(&demeaned_crossings(&ts, &ys, mean))
}

/// Frequency of `z` from a trajectory, sampled on a fine uniform grid.
pub fn trajectory_frequency(traj: &BjjTrajectory, window: Window) -> Result<f64> {
    let n = ((window.length() * SAMPLES_PER_UNIT).ceil() as usize).clamp(1000, 200_000);
    let (ts, zs, _) = traj.uniform(window.start, window.end, n)?;
    estimate_frequency(&ts, &zs, window)
}

/// Settings of the critical asymmetry search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub window: Window,
    pub delta_hi: f64,
    pub tolerance: f64,
    pub integrator: IntegratorOptions,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            window: Window::default(),
            delta_hi: 5.0,
            tolerance: 1e-3,
            integrator: IntegratorOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalDelta {
    /// Midpoint of the final bracket.
    pub delta: f64,
    /// Last asymmetry found untrapped and first found trapped.
    pub bracket: (f64, f64),
    /// Already self-trapped at `Delta = 0`; `delta` is then 0.
    pub trapped_at_zero: bool,
    pub evaluations: usize,
}

/// Whether the junction with asymmetry `delta` is self-trapped over the window.
pub fn is_trapped(z0: f64, phi0: f64, g: f64, delta: f64, opts: &SearchOptions) -> Result<bool> {
    let traj = simulate_bjj(
        &BjjParams::new(g, delta),
        BjjState::new(z0, phi0),
        (0.0, opts.window.end),
        &opts.integrator,
    )?;
    Ok(classify_regime(&traj, opts.window)?.self_trapped)
}

/// Smallest asymmetry `Delta >= 0` that self-traps the initial state, by bisection.
pub fn critical_delta(z0: f64, phi0: f64, g: f64, opts: &SearchOptions) -> Result<CriticalDelta> {
    if !(opts.delta_hi > 0.0 && opts.tolerance > 0.0) {
        return Err(invalid("search", "delta_hi and tolerance must be positive"));
    }
    if is_trapped(z0, phi0, g, 0.0, opts)? {
        return Ok(CriticalDelta {
            delta: 0.0,
            bracket: (0.0, 0.0),
            trapped_at_zero: true,
            evaluations: 1,
        });
    }
    if !is_trapped(z0, phi0, g, opts.delta_hi, opts)? {
        return Err(Error::NoTransitionInRange {
            delta_hi: opts.delta_hi,
        });
    }
    let (mut lo, mut hi) = (0.0, opts.delta_hi);
    let mut evaluations = 2;
    while hi - lo > opts.tolerance {
        let mid = 0.5 * (lo + hi);
        if is_trapped(z0, phi0, g, mid, opts)? {
            hi = mid;
        } else {
            lo = mid;
        }
        evaluations += 1;
    }
    Ok(CriticalDelta {
        delta: 0.5 * (lo + hi),
        bracket: (lo, hi),
        trapped_at_zero: false,
        evaluations,
    })
}
