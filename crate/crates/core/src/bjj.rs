//! Classical phase-space dynamics of the two-phonon Josephson junction.
//!
//! State variables are the population imbalance `z = (n1 - n2) / N_T` and the
//! phase difference `phi = theta2 - theta1`. Time is measured in the rescaled
//! unit `t = 2 J N_T t_phys` throughout; [`BjjParams::time_scale`] converts back.
//!
//! The undamped equations are
//!
//! ```text
//! dz/dt   = (1 - z^2) sin 2phi
//! dphi/dt = Delta + g z - z cos 2phi
//! ```
//!
//! with conserved energy `H = Delta z + g z^2 / 2 + (1 - z^2) cos(2phi) / 2`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::ode::{integrate, IntegratorOptions, RawTrajectory};

/// Dimensionless junction parameters plus the dimensional carriers `J` and `N_T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BjjParams {
    /// Asymmetry from the frequency mismatch, `(w1 - w2) / (2 J N_T)`.
    #[serde(default)]
    pub delta0: f64,
    /// Asymmetry from the Kerr mismatch, `(U1 - U2) / (2 J)`.
    #[serde(default)]
    pub delta_u: f64,
    /// Self-interaction, `(U1 + U2) / (2 J)`.
    pub g: f64,
    /// Damping, `gamma0 / (J N_T)`.
    #[serde(default)]
    pub gamma: f64,
    /// Two-phonon exchange strength `J` (angular frequency).
    #[serde(default = "one")]
    pub exchange: f64,
    /// Initial total phonon number `N_T`.
    #[serde(default = "one")]
    pub total_phonons: f64,
}

fn one() -> f64 {
    1.0
}

impl BjjParams {
    /// Undamped junction with total asymmetry `delta` carried by `delta0`.
    pub fn new(g: f64, delta: f64) -> Self {
        Self {
            delta0: delta,
            delta_u: 0.0,
            g,
            gamma: 0.0,
            exchange: 1.0,
            total_phonons: 1.0,
        }
    }

    pub fn symmetric(g: f64) -> Self {
        Self::new(g, 0.0)
    }

    pub fn with_asymmetry(mut self, delta0: f64, delta_u: f64) -> Self {
        self.delta0 = delta0;
        self.delta_u = delta_u;
        self
    }

    pub fn with_damping(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_carriers(mut self, exchange: f64, total_phonons: f64) -> Self {
        self.exchange = exchange;
        self.total_phonons = total_phonons;
        self
    }

    /// Total asymmetry `Delta = Delta0 + Delta_u`.
    pub fn delta(&self) -> f64 {
        self.delta0 + self.delta_u
    }

    /// Rescaled time units per unit of physical time, `2 J N_T`.
    pub fn time_scale(&self) -> f64 {
        2.0 * self.exchange * self.total_phonons
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("delta0", self.delta0),
            ("delta_u", self.delta_u),
            ("g", self.g),
            ("gamma", self.gamma),
            ("exchange", self.exchange),
            ("total_phonons", self.total_phonons),
        ] {
            if !v.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        if self.gamma < 0.0 {
            return Err(invalid("gamma", "must be non-negative"));
        }
        if self.total_phonons < 1.0 {
            return Err(invalid("total_phonons", "must be at least 1"));
        }
        Ok(())
    }
}

/// A point `(z, phi)` of the junction phase space. `phi` is kept unwrapped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BjjState {
    pub z: f64,
    pub phi: f64,
}

impl BjjState {
    pub fn new(z: f64, phi: f64) -> Self {
        Self { z, phi }
    }

    fn check(&self) -> Result<()> {
        if !(self.z.abs() <= 1.0) {
            return Err(Error::ImbalanceOutOfRange { z: self.z });
        }
        if !self.phi.is_finite() {
            return Err(invalid("phi", "must be finite"));
        }
        Ok(())
    }
}

#[inline]
fn rhs_raw(z: f64, phi: f64, delta: f64, g: f64) -> (f64, f64) {
    let (s, c) = (2.0 * phi).sin_cos();
    ((1.0 - z * z) * s, delta + g * z - z * c)
}

#[inline]
pub(crate) fn energy(z: f64, phi: f64, delta: f64, g: f64) -> f64 {
    delta * z + 0.5 * g * z * z + 0.5 * (1.0 - z * z) * (2.0 * phi).cos()
}

/// Right-hand side `(dz/dt, dphi/dt)` of the undamped equations.
pub fn bjj_rhs(state: BjjState, params: &BjjParams) -> Result<(f64, f64)> {
    state.check()?;
    Ok(rhs_raw(state.z, state.phi, params.delta(), params.g))
}

/// Junction energy `H_J(z, phi)` for the total asymmetry of `params`.
pub fn hamiltonian(state: BjjState, params: &BjjParams) -> f64 {
    energy(state.z, state.phi, params.delta(), params.g)
}

/// Tunneling current `I = J N_T^2 (1 - z^2) sin 2phi`, in phonons per unit physical time.
pub fn tunneling_current(state: BjjState, params: &BjjParams) -> f64 {
    let n = params.total_phonons;
    params.exchange * n * n * (1.0 - state.z * state.z) * (2.0 * state.phi).sin()
}

/// Maps `tau = (2 / gamma) (1 - exp(-gamma t / 2))`; identity for `gamma = 0`.
pub fn rescaled_time(t: f64, gamma: f64) -> f64 {
    if gamma == 0.0 {
        t
    } else {
        -(2.0 / gamma) * (-0.5 * gamma * t).exp_m1()
    }
}

/// Inverse of [`rescaled_time`]; fails for `tau >= 2 / gamma`.
pub fn inverse_rescaled_time(tau: f64, gamma: f64) -> Result<f64> {
    if gamma < 0.0 {
        return Err(invalid("gamma", "must be non-negative"));
    }
    if gamma == 0.0 {
        return Ok(tau);
    }
    let limit = 2.0 / gamma;
    if tau >= limit {
        return Err(Error::RescaledTimeDomain { tau, limit });
    }
    Ok(-(2.0 / gamma) * (-0.5 * gamma * tau).ln_1p())
}

/// Which clock the `times` of a [`BjjTrajectory`] refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Clock {
    /// Rescaled time `t = 2 J N_T t_phys`.
    Rescaled,
    /// Damping-rescaled time `tau`.
    Tau,
}

/// Parallel series carried by damped runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DampedSeries {
    pub t: Vec<f64>,
    pub tau: Vec<f64>,
    /// Imbalance normalised by the initial phonon number.
    pub z: Vec<f64>,
    /// Effective imbalance `z exp(gamma t / 2)`.
    pub z_prime: Vec<f64>,
}

/// Josephson trajectory on the accepted integrator steps.
///
/// `z` and `phi` are the integrated variables on the `clock`: `(z, phi)` over
/// `t` for undamped and damped runs, `(z', phi)` over `tau` for runs of
/// [`simulate_rescaled`]. Energy and current series are attached per sample.
#[derive(Debug, Clone)]
pub struct BjjTrajectory {
    pub params: BjjParams,
    pub clock: Clock,
    pub times: Vec<f64>,
    pub z: Vec<f64>,
    pub phi: Vec<f64>,
    pub energy: Vec<f64>,
    pub current: Vec<f64>,
    pub damped: Option<DampedSeries>,
    /// Set when integration stopped before the requested end.
    pub stop_reason: Option<String>,
    raw: RawTrajectory,
}

impl BjjTrajectory {
    pub fn raw(&self) -> &RawTrajectory {
        &self.raw
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn span(&self) -> (f64, f64) {
        self.raw.span()
    }

    pub fn initial(&self) -> BjjState {
        BjjState::new(self.z[0], self.phi[0])
    }

    /// Interpolated state on the trajectory clock.
    pub fn state_at(&self, t: f64) -> Result<BjjState> {
        let y = self.raw.eval(t)?;
        Ok(BjjState::new(y[0], y[1]))
    }

    /// Uniform samples `(times, z, phi)` on `[start, end]` with `n >= 2` points.
    pub fn uniform(
        &self,
        start: f64,
        end: f64,
        n: usize,
    ) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let n = n.max(2);
        let (s0, s1) = self.span();
        if !(start >= s0 && end <= s1 && start < end) {
            return Err(Error::WindowOutsideSpan {
                start,
                end,
                span_start: s0,
                span_end: s1,
            });
        }
        let dt = (end - start) / (n - 1) as f64;
        let mut ts = Vec::with_capacity(n);
        let mut zs = Vec::with_capacity(n);
        let mut ps = Vec::with_capacity(n);
        for i in 0..n {
            let t = if i + 1 == n {
                end
            } else {
                start + dt * i as f64
            };
            let y = self.raw.eval(t)?;
            ts.push(t);
            zs.push(y[0]);
            ps.push(y[1]);
        }
        Ok((ts, zs, ps))
    }
}

fn check_span(span: (f64, f64)) -> Result<()> {
    if !(span.0.is_finite() && span.1.is_finite() && span.0 < span.1) {
        return Err(Error::Integration(crate::ode::OdeError::InvalidSpan {
            start: span.0,
            end: span.1,
        }));
    }
    Ok(())
}

/// Integrates the undamped equations with `Delta = Delta0 + Delta_u`.
///
/// The damping in `params` is ignored here; see [`simulate_damped`].
pub fn simulate_bjj(
    params: &BjjParams,
    init: BjjState,
    span: (f64, f64),
    opts: &IntegratorOptions,
) -> Result<BjjTrajectory> {
    params.validate()?;
    init.check()?;
    check_span(span)?;
    let delta = params.delta();
    let g = params.g;
    let raw = integrate(
        |_t, y: &[f64], dy: &mut [f64]| {
            let (dz, dphi) = rhs_raw(y[0], y[1], delta, g);
            dy[0] = dz;
            dy[1] = dphi;
        },
        &[init.z, init.phi],
        span,
        opts,
    )?;
    let times = raw.times().to_vec();
    let z = raw.component(0)?;
    let phi = raw.component(1)?;
    let energy = z
        .iter()
        .zip(&phi)
        .map(|(&z, &p)| energy(z, p, delta, g))
        .collect();
    let current = z
        .iter()
        .zip(&phi)
        .map(|(&z, &p)| tunneling_current(BjjState::new(z, p), params))
        .collect();
    Ok(BjjTrajectory {
        params: *params,
        clock: Clock::Rescaled,
        times,
        z,
        phi,
        energy,
        current,
        damped: None,
        stop_reason: None,
        raw,
    })
}

/// Effective asymmetry `2 Delta0 / (2 - gamma tau) + Delta_u` seen by the `tau` dynamics.
pub fn effective_asymmetry(params: &BjjParams, tau: f64) -> f64 {
    2.0 * params.delta0 / (2.0 - params.gamma * tau) + params.delta_u
}

fn damped_current(params: &BjjParams, t: f64, z: f64, phi: f64) -> f64 {
    let n = params.total_phonons;
    params.exchange * n * n * ((-params.gamma * t).exp() - z * z) * (2.0 * phi).sin()
}

/// Integrates the damped equations in rescaled time `t`.
///
/// `z` stays normalised by the initial phonon number, so the total population
/// decays as `exp(-gamma t)`. The trajectory carries `z' = z exp(gamma t / 2)`
/// and `tau` alongside.
pub fn simulate_damped(
    params: &BjjParams,
    init: BjjState,
    span: (f64, f64),
    opts: &IntegratorOptions,
) -> Result<BjjTrajectory> {
    params.validate()?;
    init.check()?;
    check_span(span)?;
    let BjjParams {
        delta0,
        delta_u,
        g,
        gamma,
        ..
    } = *params;
    let raw = integrate(
        |t, y: &[f64], dy: &mut [f64]| {
            let (z, phi) = (y[0], y[1]);
            let (s, c) = (2.0 * phi).sin_cos();
            let decay = (-0.5 * gamma * t).exp();
            dy[0] = (decay * decay - z * z) * s - 0.5 * gamma * z;
            dy[1] = delta0 + delta_u * decay + g * z - z * c;
        },
        &[init.z, init.phi],
        span,
        opts,
    )?;
    let times = raw.times().to_vec();
    let z = raw.component(0)?;
    let phi = raw.component(1)?;
    let tau: Vec<f64> = times.iter().map(|&t| rescaled_time(t, gamma)).collect();
    let z_prime: Vec<f64> = times
        .iter()
        .zip(&z)
        .map(|(&t, &z)| z * (0.5 * gamma * t).exp())
        .collect();
    let energy = tau
        .iter()
        .zip(z_prime.iter().zip(&phi))
        .map(|(&tau, (&zp, &p))| energy(zp, p, effective_asymmetry(params, tau), g))
        .collect();
    let current = times
        .iter()
        .zip(z.iter().zip(&phi))
        .map(|(&t, (&z, &p))| damped_current(params, t, z, p))
        .collect();
    Ok(BjjTrajectory {
        params: *params,
        clock: Clock::Rescaled,
        damped: Some(DampedSeries {
            t: times.clone(),
            tau,
            z: z.clone(),
            z_prime,
        }),
        times,
        z,
        phi,
        energy,
        current,
        stop_reason: None,
        raw,
    })
}

/// Relative margin kept below the singular point `tau = 2 / gamma`.
pub const TAU_SINGULAR_MARGIN: f64 = 1e-6;

/// Integrates the effective-imbalance equations over `tau`.
///
/// `init.z` is `z'(0)` (equal to `z(0)`). If the requested end reaches the
/// singular point `2 / gamma`, integration stops at `(2 / gamma)(1 - 1e-6)` and
/// `stop_reason` says so.
pub fn simulate_rescaled(
    params: &BjjParams,
    init: BjjState,
    tau_span: (f64, f64),
    opts: &IntegratorOptions,
) -> Result<BjjTrajectory> {
    params.validate()?;
    init.check()?;
    check_span(tau_span)?;
    let BjjParams {
        delta0,
        delta_u,
        g,
        gamma,
        ..
    } = *params;
    if tau_span.0 < 0.0 {
        return Err(invalid("tau_span", "must start at tau >= 0"));
    }
    let mut end = tau_span.1;
    let mut stop_reason = None;
    if gamma > 0.0 {
        let limit = 2.0 / gamma;
        let tau_max = limit * (1.0 - TAU_SINGULAR_MARGIN);
        if tau_span.0 >= tau_max {
            return Err(Error::RescaledTimeDomain {
                tau: tau_span.0,
                limit,
            });
        }
        if end > tau_max {
            end = tau_max;
            stop_reason = Some(format!(
                "stopped at tau = {tau_max}: asymmetry coefficient 2*delta0/(2 - gamma*tau) is singular at tau = {limit}"
            ));
        }
    }
    let raw = integrate(
        |tau, y: &[f64], dy: &mut [f64]| {
            let (zp, phi) = (y[0], y[1]);
            let (s, c) = (2.0 * phi).sin_cos();
            dy[0] = (1.0 - zp * zp) * s;
            dy[1] = 2.0 * delta0 / (2.0 - gamma * tau) + delta_u + g * zp - zp * c;
        },
        &[init.z, init.phi],
        (tau_span.0, end),
        opts,
    )?;
    let taus = raw.times().to_vec();
    let z_prime = raw.component(0)?;
    let phi = raw.component(1)?;
    let t: Vec<f64> = taus
        .iter()
        .map(|&tau| inverse_rescaled_time(tau, gamma))
        .collect::<Result<_>>()?;
    let z: Vec<f64> = taus
        .iter()
        .zip(&z_prime)
        .map(|(&tau, &zp)| zp * (1.0 - 0.5 * gamma * tau))
        .collect();
    let energy = taus
        .iter()
        .zip(z_prime.iter().zip(&phi))
        .map(|(&tau, (&zp, &p))| energy(zp, p, effective_asymmetry(params, tau), g))
        .collect();
    let current = t
        .iter()
        .zip(z.iter().zip(&phi))
        .map(|(&t, (&z, &p))| damped_current(params, t, z, p))
        .collect();
    Ok(BjjTrajectory {
        params: *params,
        clock: Clock::Tau,
        times: taus.clone(),
        z: z_prime.clone(),
        phi,
        energy,
        current,
        damped: Some(DampedSeries {
            t,
            tau: taus,
            z,
            z_prime,
        }),
        stop_reason,
        raw,
    })
}

/// The invariance `Delta -> -Delta`, `g -> -g`, `phi -> -phi + pi/2`.
///
/// Both asymmetry components are negated. The damping and carriers are untouched.
pub fn symmetry_transform(params: &BjjParams, state: BjjState) -> (BjjParams, BjjState) {
    let mut p = *params;
    p.delta0 = -params.delta0;
    p.delta_u = -params.delta_u;
    p.g = -params.g;
    (p, BjjState::new(state.z, -state.phi + FRAC_PI_2))
}
