//! Adaptive explicit Runge–Kutta integration.
//!
//! The integrator is the Dormand–Prince 5(4) pair with the free fourth-order
//! continuous extension. It works on real state vectors only; complex systems
//! are packed by the caller as interleaved `(re, im)` pairs.
//!
//! ```
//! use phonon_bjj::ode::{integrate, IntegratorOptions};
//!
//! let traj = integrate(
//!     |_t, y: &[f64], dy: &mut [f64]| dy[0] = -y[0],
//!     &[1.0],
//!     (0.0, 1.0),
//!     &IntegratorOptions::default(),
//! )
//! .unwrap();
//! let y1 = traj.last_state()[0];
//! assert!((y1 - (-1.0f64).exp()).abs() < 1e-8);
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised by the integrator and by trajectory queries.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("invalid time span [{start}, {end}]: start must be strictly before end")]
    InvalidSpan { start: f64, end: f64 },
    #[error("invalid integrator options: {0}")]
    InvalidOptions(&'static str),
    #[error("initial state is empty or contains non-finite entries")]
    NonFiniteInitialState,
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("step budget of {max_steps} exhausted at t = {t}")]
    StepBudgetExhausted { t: f64, max_steps: usize },
    #[error("non-finite derivative at t = {t} for state {state:?}")]
    NonFiniteDerivative { t: f64, state: Vec<f64> },
    #[error("component {index} out of range for dimension {dim}")]
    ComponentOutOfRange { index: usize, dim: usize },
    #[error("time {t} lies outside the trajectory span [{start}, {end}]")]
    OutsideSpan { t: f64, start: f64, end: f64 },
    #[error("trajectory was integrated without dense output")]
    NoDenseOutput,
}

/// Tolerances and step controls for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Upper bound on the step size, in the time units of the integrated system.
    #[serde(default = "unbounded", skip_serializing_if = "is_unbounded")]
    pub max_step: f64,
    #[serde(default = "yes")]
    pub dense_output: bool,
    /// Number of accepted + rejected steps allowed before giving up.
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

fn default_max_steps() -> usize {
    5_000_000
}

fn unbounded() -> f64 {
    f64::INFINITY
}

fn is_unbounded(v: &f64) -> bool {
    *v == f64::INFINITY
}

fn yes() -> bool {
    true
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self::dimensionless()
    }
}

impl IntegratorOptions {
    /// Defaults for the dimensionless Josephson equations.
    pub fn dimensionless() -> Self {
        Self {
            rel_tol: 1e-11,
            abs_tol: 1e-13,
            max_step: f64::INFINITY,
            dense_output: true,
            max_steps: default_max_steps(),
        }
    }

    /// Defaults for models written in physical angular-frequency units.
    pub fn physical() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            ..Self::dimensionless()
        }
    }

    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_max_step(mut self, max_step: f64) -> Self {
        self.max_step = max_step;
        self
    }

    pub fn validate(&self) -> Result<(), OdeError> {
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(OdeError::InvalidOptions("rel_tol must be positive"));
        }
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(OdeError::InvalidOptions("abs_tol must be positive"));
        }
        if !(self.max_step > 0.0) {
            return Err(OdeError::InvalidOptions("max_step must be positive"));
        }
        if self.max_steps == 0 {
            return Err(OdeError::InvalidOptions("max_steps must be at least 1"));
        }
        Ok(())
    }
}

/// Direction filter for [`RawTrajectory::zero_crossings`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Crossing {
    Rising,
    Falling,
    Any,
}

impl Crossing {
    fn accepts(self, rising: bool) -> bool {
        match self {
            Crossing::Rising => rising,
            Crossing::Falling => !rising,
            Crossing::Any => true,
        }
    }
}

/// Accepted integration steps together with the piecewise-quartic interpolant.
///
/// States are stored flat, `dim` values per time. When dense output is enabled
/// each step `[t_i, t_{i+1}]` keeps five coefficient vectors.
#[derive(Debug, Clone)]
pub struct RawTrajectory {
    dim: usize,
    times: Vec<f64>,
    states: Vec<f64>,
    dense: Option<Vec<f64>>,
    rel_tol: f64,
}

impl RawTrajectory {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.states.chunks_exact(self.dim)
    }

    /// One component across all stored samples.
    pub fn component(&self, index: usize) -> Result<Vec<f64>, OdeError> {
        self.check_component(index)?;
        Ok(self.states().map(|s| s[index]).collect())
    }

    pub fn last_state(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    pub fn span(&self) -> (f64, f64) {
        (self.times[0], self.times[self.len() - 1])
    }

    pub fn has_dense_output(&self) -> bool {
        self.dense.is_some()
    }

    fn check_component(&self, index: usize) -> Result<(), OdeError> {
        if index >= self.dim {
            return Err(OdeError::ComponentOutOfRange {
                index,
                dim: self.dim,
            });
        }
        Ok(())
    }

    fn check_time(&self, t: f64) -> Result<(), OdeError> {
        let (start, end) = self.span();
        if !(t >= start && t <= end) {
            return Err(OdeError::OutsideSpan { t, start, end });
        }
        Ok(())
    }

    /// Index `i` of the step containing `t`, i.e. `times[i] <= t <= times[i + 1]`.
    fn step_index(&self, t: f64) -> usize {
        let n = self.times.len();
        let idx = self.times.partition_point(|&s| s <= t);
        idx.saturating_sub(1).min(n.saturating_sub(2))
    }

    fn eval_in_step(&self, step: usize, t: f64, index: usize) -> f64 {
        let dense = self.dense.as_ref().expect("dense output checked by caller");
        let t0 = self.times[step];
        let h = self.times[step + 1] - t0;
        let theta = (t - t0) / h;
        let theta1 = 1.0 - theta;
        let base = step * 5 * self.dim;
        let r = |k: usize| dense[base + k * self.dim + index];
        r(0) + theta * (r(1) + theta1 * (r(2) + theta * (r(3) + theta1 * r(4))))
    }

    /// Evaluates the interpolant. Stored mesh points return the stored state bit-for-bit.
    pub fn eval(&self, t: f64) -> Result<Vec<f64>, OdeError> {
        self.check_time(t)?;
        if let Ok(i) = self.times.binary_search_by(|s| s.total_cmp(&t)) {
            return Ok(self.state(i).to_vec());
        }
        if self.dense.is_none() {
            return Err(OdeError::NoDenseOutput);
        }
        let step = self.step_index(t);
        Ok((0..self.dim)
            .map(|k| self.eval_in_step(step, t, k))
            .collect())
    }

    /// Evaluates a single component of the interpolant.
    pub fn eval_component(&self, t: f64, index: usize) -> Result<f64, OdeError> {
        self.check_component(index)?;
        self.check_time(t)?;
        if let Ok(i) = self.times.binary_search_by(|s| s.total_cmp(&t)) {
            return Ok(self.state(i)[index]);
        }
        if self.dense.is_none() {
            return Err(OdeError::NoDenseOutput);
        }
        Ok(self.eval_in_step(self.step_index(t), t, index))
    }

    /// Evaluates the interpolant on `grid`. Every grid point must lie in the span.
    pub fn resample(&self, grid: &[f64]) -> Result<Vec<Vec<f64>>, OdeError> {
        grid.iter().map(|&t| self.eval(t)).collect()
    }

    /// Zero crossings of one component, refined on the interpolant.
    pub fn zero_crossings(&self, index: usize, direction: Crossing) -> Result<Vec<f64>, OdeError> {
        self.zero_crossings_in(index, direction, self.span())
    }

    /// Zero crossings of one component restricted to `window`.
    pub fn zero_crossings_in(
        &self,
        index: usize,
        direction: Crossing,
        window: (f64, f64),
    ) -> Result<Vec<f64>, OdeError> {
        self.check_component(index)?;
        if self.dense.is_none() {
            return Err(OdeError::NoDenseOutput);
        }
        let (start, end) = self.span();
        let lo = window.0.max(start);
        let hi = window.1.min(end);
        let mut out = Vec::new();
        if !(lo < hi) {
            return Ok(out);
        }
        // Each step is scanned at a few interior points so that two roots inside
        // one step are not missed.
        const SUBDIVISIONS: usize = 4;
        let first = self.step_index(lo);
        let last = self.step_index(hi);
        let mut prev: Option<(f64, f64)> = None;
        for step in first..=last {
            let t0 = self.times[step];
            let t1 = self.times[step + 1];
            for k in 0..=SUBDIVISIONS {
                let t = t0 + (t1 - t0) * k as f64 / SUBDIVISIONS as f64;
                let t = if k == SUBDIVISIONS { t1 } else { t };
                if t < lo || t > hi {
                    continue;
                }
                if prev.is_some_and(|(tp, _)| t <= tp) {
                    continue;
                }
                let v = if k == 0 || k == SUBDIVISIONS {
                    self.eval_component(t, index)?
                } else {
                    self.eval_in_step(step, t, index)
                };
                match prev {
                    None => {
                        if v == 0.0 {
                            // Root exactly at the window start; direction from the slope.
                            let probe =
                                self.eval_component((t + (t1 - t0) * 1e-3).min(hi), index)?;
                            if probe != 0.0 && direction.accepts(probe > 0.0) {
                                out.push(t);
                            }
                        }
                    }
                    Some((tp, vp)) => {
                        if vp != 0.0 && v == 0.0 {
                            let next = self.eval_component(
                                (t + (t1 - t0) / SUBDIVISIONS as f64).min(hi),
                                index,
                            )?;
                            let rising = if next != 0.0 { next > 0.0 } else { vp < 0.0 };
                            if direction.accepts(rising) {
                                out.push(t);
                            }
                        } else if vp * v < 0.0 && direction.accepts(v > 0.0) {
                            out.push(self.refine_root(step, index, tp, vp, t, v));
                        }
                    }
                }
                prev = Some((t, v));
            }
        }
        Ok(out)
    }

    /// Illinois false position on the interpolant of one step.
    fn refine_root(
        &self,
        step: usize,
        index: usize,
        mut a: f64,
        mut fa: f64,
        mut b: f64,
        mut fb: f64,
    ) -> f64 {
        let tol = (self.rel_tol * 1e-3).max(4.0 * f64::EPSILON) * a.abs().max(b.abs()).max(1.0);
        let mut side = 0i8;
        for _ in 0..200 {
            if (b - a).abs() <= tol {
                break;
            }
            let c = (a * fb - b * fa) / (fb - fa);
            let c = if c.is_finite() && c > a.min(b) && c < a.max(b) {
                c
            } else {
                0.5 * (a + b)
            };
            let fc = self.eval_in_step(step, c, index);
            if fc == 0.0 {
                return c;
            }
            if fc * fb < 0.0 {
                a = b;
                fa = fb;
                side = 0;
            } else {
                if side == 1 {
                    fa *= 0.5;
                }
                side = 1;
            }
            b = c;
            fb = fc;
        }
        // Keep whichever end is closer to the root by value.
        if fa.abs() < fb.abs() {
            a
        } else {
            b
        }
    }
}

/// Zero crossings of `traj` component `index` (see [`RawTrajectory::zero_crossings`]).
pub fn detect_zero_crossings(
    traj: &RawTrajectory,
    index: usize,
    direction: Crossing,
) -> Result<Vec<f64>, OdeError> {
    traj.zero_crossings(index, direction)
}

/// Evaluates the interpolant of `traj` on `grid`.
pub fn resample(traj: &RawTrajectory, grid: &[f64]) -> Result<Vec<Vec<f64>>, OdeError> {
    traj.resample(grid)
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

struct Workspace {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    y_new: Vec<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
            y_new: vec![0.0; n],
        }
    }
}

fn eval_rhs<F>(rhs: &mut F, t: f64, y: &[f64], out: &mut [f64]) -> Result<(), OdeError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    rhs(t, y, out);
    if out.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(OdeError::NonFiniteDerivative {
            t,
            state: y.to_vec(),
        })
    }
}

fn error_norm(y: &[f64], y_new: &[f64], err: &[f64], opts: &IntegratorOptions) -> f64 {
    let sum: f64 = y
        .iter()
        .zip(y_new)
        .zip(err)
        .map(|((&a, &b), &e)| {
            let sc = opts.abs_tol + opts.rel_tol * a.abs().max(b.abs());
            (e / sc) * (e / sc)
        })
        .sum();
    (sum / y.len() as f64).sqrt()
}

fn initial_step<F>(
    rhs: &mut F,
    t0: f64,
    y0: &[f64],
    f0: &[f64],
    opts: &IntegratorOptions,
    span_len: f64,
) -> Result<f64, OdeError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y0.len() as f64;
    let sc = |v: f64| opts.abs_tol + opts.rel_tol * v.abs();
    let d0 = (y0.iter().map(|&v| (v / sc(v)).powi(2)).sum::<f64>() / n).sqrt();
    let d1 = (y0
        .iter()
        .zip(f0)
        .map(|(&v, &f)| (f / sc(v)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let h0 = h0.min(opts.max_step).min(span_len);
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(&v, &f)| v + h0 * f).collect();
    let mut f1 = vec![0.0; y0.len()];
    eval_rhs(rhs, t0 + h0, &y1, &mut f1)?;
    let d2 = (y0
        .iter()
        .zip(f0.iter().zip(&f1))
        .map(|(&v, (&a, &b))| ((b - a) / sc(v)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt()
        / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 5.0)
    };
    Ok((100.0 * h0).min(h1).min(opts.max_step).min(span_len))
}

/// Integrates `dy/dt = rhs(t, y)` over `span = (start, end)` with `start < end`.
///
/// The returned trajectory holds every accepted step (including both span
/// endpoints) and, when `opts.dense_output` is set, the continuous extension.
pub fn integrate<F>(
    mut rhs: F,
    y0: &[f64],
    span: (f64, f64),
    opts: &IntegratorOptions,
) -> Result<RawTrajectory, OdeError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let (t_start, t_end) = span;
    if !(t_start.is_finite() && t_end.is_finite() && t_start < t_end) {
        return Err(OdeError::InvalidSpan {
            start: t_start,
            end: t_end,
        });
    }
    opts.validate()?;
    if y0.is_empty() || y0.iter().any(|v| !v.is_finite()) {
        return Err(OdeError::NonFiniteInitialState);
    }

    let n = y0.len();
    let mut ws = Workspace::new(n);
    let mut y = y0.to_vec();
    let mut t = t_start;

    let mut times = vec![t];
    let mut states = y.clone();
    let mut dense = opts.dense_output.then(Vec::new);

    eval_rhs(&mut rhs, t, &y, &mut ws.k[0])?;
    let mut h = initial_step(&mut rhs, t, &y, &ws.k[0].clone(), opts, t_end - t_start)?;

    let mut steps = 0usize;
    let mut last_rejected = false;
    let mut err_prev: f64 = 1e-4;

    while t < t_end {
        steps += 1;
        if steps > opts.max_steps {
            return Err(OdeError::StepBudgetExhausted {
                t,
                max_steps: opts.max_steps,
            });
        }
        let remaining = t_end - t;
        let mut last = false;
        if h >= remaining {
            h = remaining;
            last = true;
        } else if h > 0.5 * remaining && h < remaining {
            // Avoid leaving a sliver for the final step.
            h = 0.5 * remaining;
        }
        if h <= 10.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(OdeError::StepSizeUnderflow { t, h });
        }

        let (k_lo, k_hi) = ws.k.split_at_mut(1);
        let k1 = &k_lo[0];
        let [k2, k3, k4, k5, k6, k7] = k_hi else {
            unreachable!()
        };

        for i in 0..n {
            ws.tmp[i] = y[i] + h * A21 * k1[i];
        }
        eval_rhs(&mut rhs, t + C2 * h, &ws.tmp, k2)?;
        for i in 0..n {
            ws.tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        eval_rhs(&mut rhs, t + C3 * h, &ws.tmp, k3)?;
        for i in 0..n {
            ws.tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        eval_rhs(&mut rhs, t + C4 * h, &ws.tmp, k4)?;
        for i in 0..n {
            ws.tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        eval_rhs(&mut rhs, t + C5 * h, &ws.tmp, k5)?;
        for i in 0..n {
            ws.tmp[i] =
                y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        let t_new = if last { t_end } else { t + h };
        eval_rhs(&mut rhs, t_new, &ws.tmp, k6)?;
        for i in 0..n {
            ws.y_new[i] =
                y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        eval_rhs(&mut rhs, t_new, &ws.y_new, k7)?;
        for i in 0..n {
            ws.tmp[i] =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let err = error_norm(&y, &ws.y_new, &ws.tmp, opts);
        if !err.is_finite() {
            return Err(OdeError::NonFiniteDerivative {
                t,
                state: y.clone(),
            });
        }

        // PI step-size controller (Hairer, Nørsett & Wanner, II.4).
        const SAFETY: f64 = 0.9;
        const ALPHA: f64 = 0.2 - 0.04 * 0.75;
        const BETA: f64 = 0.04;
        if err <= 1.0 {
            let mut fac = SAFETY * err.max(1e-10).powf(-ALPHA) * err_prev.powf(BETA);
            fac = fac.clamp(0.2, 10.0);
            if last_rejected {
                fac = fac.min(1.0);
            }
            err_prev = err.max(1e-4);

            if let Some(d) = dense.as_mut() {
                let start = d.len();
                d.resize(start + 5 * n, 0.0);
                let block = &mut d[start..];
                for i in 0..n {
                    let dy = ws.y_new[i] - y[i];
                    let bspl = h * k1[i] - dy;
                    block[i] = y[i];
                    block[n + i] = dy;
                    block[2 * n + i] = bspl;
                    block[3 * n + i] = dy - h * k7[i] - bspl;
                    block[4 * n + i] = h
                        * (D1 * k1[i]
                            + D3 * k3[i]
                            + D4 * k4[i]
                            + D5 * k5[i]
                            + D6 * k6[i]
                            + D7 * k7[i]);
                }
            }

            y.copy_from_slice(&ws.y_new);
            t = t_new;
            times.push(t);
            states.extend_from_slice(&y);
            // FSAL: the last stage is the first stage of the next step.
            ws.k.swap(0, 6);

            h = (h * fac).min(opts.max_step);
            last_rejected = false;
        } else {
            let fac = (SAFETY * err.powf(-0.2)).max(0.2);
            h *= fac;
            last_rejected = true;
        }
    }

    Ok(RawTrajectory {
        dim: n,
        times,
        states,
        dense,
        rel_tol: opts.rel_tol,
    })
}
