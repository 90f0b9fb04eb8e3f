//! Mean-field model of a driven cavity quadratically coupled to two nonlinear
//! mechanical modes, and its reduction to a two-mode model with two-phonon
//! exchange.
//!
//! The full model integrates
//!
//! ```text
//! db_i/dt = -(gamma_i/2 + i w_i0) b_i - 2i U_i0 |b_i|^2 b_i - 2i g_i |a|^2 (b_i + b_i*)
//! da/dt   = -(kappa/2 + i [Delta_cav + sum_i g_i (b_i + b_i*)^2]) a - i Omega
//! ```
//!
//! with the cavity in the frame of the drive and the mechanics in the lab frame.
//! Eliminating the cavity gives
//!
//! ```text
//! db_1/dt = -(gamma_1/2 + i w_1) b_1 - 2i U_1 |b_1|^2 b_1 - 2i J_1 b_2^2 b_1*
//! ```
//!
//! and the same with `1 <-> 2`, where `U_i` and `J_i` are complex. The
//! Hermitian approximants replace them by real values when `kappa << |Delta_i|`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bjj::BjjParams;
use crate::error::{invalid, Error, Result};
use crate::ode::{integrate, IntegratorOptions, RawTrajectory};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// One nonlinear mechanical mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanicalMode {
    /// Bare frequency `w_i0`.
    pub freq: f64,
    /// Bare Kerr nonlinearity `U_i0`.
    pub kerr: f64,
    /// Quadratic optomechanical coupling `g_i`.
    pub coupling: f64,
    /// Energy damping rate `gamma_i`.
    #[serde(default)]
    pub damping: f64,
}

/// Physical parameters of the cavity and the two mechanical modes.
///
/// All entries are angular frequencies in the caller's units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FullSystemParams {
    pub cavity_freq: f64,
    pub drive_freq: f64,
    pub drive_amp: f64,
    pub cavity_damping: f64,
    pub modes: [MechanicalMode; 2],
}

impl FullSystemParams {
    /// Cavity detuning from the drive, `w_c - w_d`.
    pub fn cavity_detuning(&self) -> f64 {
        self.cavity_freq - self.drive_freq
    }

    pub fn validate(&self) -> Result<()> {
        let scalars = [
            ("cavity_freq", self.cavity_freq),
            ("drive_freq", self.drive_freq),
            ("drive_amp", self.drive_amp),
            ("cavity_damping", self.cavity_damping),
        ];
        for (name, v) in scalars {
            if !v.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        if self.cavity_damping < 0.0 {
            return Err(invalid("cavity_damping", "must be non-negative"));
        }
        for m in &self.modes {
            if ![m.freq, m.kerr, m.coupling, m.damping]
                .iter()
                .all(|v| v.is_finite())
            {
                return Err(invalid("modes", "mode parameters must be finite"));
            }
            if m.damping < 0.0 {
                return Err(invalid("modes.damping", "must be non-negative"));
            }
            if m.coupling < 0.0 {
                return Err(invalid(
                    "modes.coupling",
                    "must be non-negative for the zero mechanical steady state",
                ));
            }
        }
        Ok(())
    }

    /// Parameters hitting target values of the reduced model.
    ///
    /// Mode frequencies are set so that the shifted frequencies equal
    /// `shifted_freq`, the drive amplitude so that `|alpha| = alpha_abs`, and the
    /// cavity detuning so that `Delta_1 = Delta_2 = mech_detuning`. The drive
    /// frequency is put at zero, so `cavity_freq` equals the cavity detuning.
    pub fn from_targets(
        cavity_damping: f64,
        shifted_freq: f64,
        mech_detuning: f64,
        alpha_abs: f64,
        coupling: f64,
        kerr: f64,
    ) -> Self {
        let n_alpha = alpha_abs * alpha_abs;
        let bare = shifted_freq - 2.0 * coupling * n_alpha;
        let detuning = mech_detuning + 2.0 * shifted_freq;
        // |alpha| = 2 Omega / sqrt(kappa^2 + 4 Delta_cav^2)
        let drive_amp = 0.5 * alpha_abs * cavity_damping.hypot(2.0 * detuning);
        let mode = MechanicalMode {
            freq: bare,
            kerr,
            coupling,
            damping: 0.0,
        };
        Self {
            cavity_freq: detuning,
            drive_freq: 0.0,
            drive_amp,
            cavity_damping,
            modes: [mode, mode],
        }
    }

    /// Parameters used for the full-versus-reduced comparison:
    /// `kappa = 1`, shifted frequencies 150, `Delta_1 = Delta_2 = 12`,
    /// `|alpha| = 20` and `|G_i| = 0.02`.
    pub fn oracle_preset() -> Self {
        Self::from_targets(1.0, 150.0, 12.0, 20.0, 0.001, 0.0)
    }
}

/// Steady-state amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub alpha: Complex64,
    pub beta: [Complex64; 2],
}

/// `alpha = -2i Omega / (kappa + 2i Delta_cav)`, `beta_i = 0`.
pub fn steady_state(params: &FullSystemParams) -> Result<SteadyState> {
    params.validate()?;
    let denom = Complex64::new(params.cavity_damping, 2.0 * params.cavity_detuning());
    if denom == Complex64::new(0.0, 0.0) {
        return Err(Error::SingularDetuning { which: "cavity" });
    }
    Ok(SteadyState {
        alpha: -2.0 * I * params.drive_amp / denom,
        beta: [Complex64::new(0.0, 0.0); 2],
    })
}

/// Effective two-mode parameters after adiabatic elimination of the cavity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedParams {
    pub alpha: Complex64,
    /// `w_i = w_i0 + 2 g_i |alpha|^2`.
    pub shifted_freq: [f64; 2],
    /// `G_i = g_i alpha`.
    pub eff_coupling: [Complex64; 2],
    /// `Delta_i = Delta_cav - 2 w_i`.
    pub detuning: [f64; 2],
    /// Complex Kerr `U_i = U_i0 - |G_i|^2 / (Delta_i - i kappa/2)`.
    pub kerr: [Complex64; 2],
    /// Complex exchange `J_1`, `J_2`.
    pub exchange: [Complex64; 2],
    /// `U_i0 - g_i^2 |alpha|^2 / Delta_i`.
    pub kerr_approx: [f64; 2],
    /// `-g_1 g_2 |alpha|^2 / Delta_1`.
    pub exchange_approx: f64,
    pub damping: [f64; 2],
}

/// Closed-form reduced parameters.
pub fn effective_params(params: &FullSystemParams) -> Result<ReducedParams> {
    let ss = steady_state(params)?;
    let n_alpha = ss.alpha.norm_sqr();
    let kappa = params.cavity_damping;
    let [m1, m2] = params.modes;
    let shifted = [
        m1.freq + 2.0 * m1.coupling * n_alpha,
        m2.freq + 2.0 * m2.coupling * n_alpha,
    ];
    let detuning = [
        params.cavity_detuning() - 2.0 * shifted[0],
        params.cavity_detuning() - 2.0 * shifted[1],
    ];
    let names = ["Delta_1", "Delta_2"];
    let resolvent = |k: usize| -> Result<Complex64> {
        let d = Complex64::new(detuning[k], -0.5 * kappa);
        if d == Complex64::new(0.0, 0.0) {
            return Err(Error::SingularDetuning { which: names[k] });
        }
        Ok(d)
    };
    let g = [m1.coupling, m2.coupling];
    let eff_coupling = [g[0] * ss.alpha, g[1] * ss.alpha];
    let g12 = g[0] * g[1] * n_alpha;

    let mut kerr = [Complex64::new(0.0, 0.0); 2];
    let mut kerr_approx = [0.0; 2];
    for k in 0..2 {
        let u0 = params.modes[k].kerr;
        let gk = eff_coupling[k].norm_sqr();
        kerr[k] = if gk == 0.0 {
            Complex64::new(u0, 0.0)
        } else {
            u0 - gk / resolvent(k)?
        };
        kerr_approx[k] = if gk == 0.0 {
            u0
        } else if detuning[k] == 0.0 {
            return Err(Error::SingularDetuning { which: names[k] });
        } else {
            u0 - g[k] * g[k] * n_alpha / detuning[k]
        };
    }
    let (exchange, exchange_approx) = if g12 == 0.0 {
        ([Complex64::new(0.0, 0.0); 2], 0.0)
    } else {
        if detuning[0] == 0.0 {
            return Err(Error::SingularDetuning { which: names[0] });
        }
        (
            [-g12 / resolvent(1)?, -g12 / resolvent(0)?],
            -g12 / detuning[0],
        )
    };
    Ok(ReducedParams {
        alpha: ss.alpha,
        shifted_freq: shifted,
        eff_coupling,
        detuning,
        kerr,
        exchange,
        kerr_approx,
        exchange_approx,
        damping: [m1.damping, m2.damping],
    })
}

/// Junction parameters obtained from a reduced model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BjjMapping {
    pub params: BjjParams,
    /// Offset added to the physical phase difference to get the junction phase:
    /// `0` for `J > 0`, `pi/2` for `J < 0`.
    pub phase_offset: f64,
    /// Signed Hermitian exchange `J`.
    pub signed_exchange: f64,
}

impl BjjMapping {
    /// Converts a physical phase difference `theta2 - theta1` to the junction phase.
    pub fn junction_phase(&self, physical_phi: f64) -> f64 {
        physical_phi + self.phase_offset
    }
}

/// Maps the Hermitian approximants to dimensionless junction parameters.
///
/// With `J < 0` the rescaled clock `2 J N_T t` would run backwards; the junction
/// is then expressed with `|J|`, which flips the signs of `g` and `Delta` and
/// shifts the phase by `pi/2` (see [`BjjMapping::phase_offset`]).
/// Unequal mode dampings enter through their mean.
pub fn derive_bjj_params(reduced: &ReducedParams, total_phonons: f64) -> Result<BjjMapping> {
    let j = reduced.exchange_approx;
    if j == 0.0 || !j.is_finite() {
        return Err(Error::NoExchange);
    }
    if !(total_phonons >= 1.0) {
        return Err(invalid("total_phonons", "must be at least 1"));
    }
    let ja = j.abs();
    let [u1, u2] = reduced.kerr_approx;
    let [w1, w2] = reduced.shifted_freq;
    let gamma0 = 0.5 * (reduced.damping[0] + reduced.damping[1]);
    let params = BjjParams {
        delta0: (w1 - w2) / (2.0 * ja * total_phonons),
        delta_u: (u1 - u2) / (2.0 * ja),
        g: (u1 + u2) / (2.0 * ja),
        gamma: gamma0 / (ja * total_phonons),
        exchange: ja,
        total_phonons,
    };
    Ok(BjjMapping {
        params,
        phase_offset: if j > 0.0 { 0.0 } else { FRAC_PI_2 },
        signed_exchange: j,
    })
}

/// Complex amplitudes stored as interleaved `(re, im)` pairs.
///
/// The raw mechanical states may be stored in a frame rotating at
/// [`ComplexTrajectory::frame`]; the accessors return lab-frame amplitudes.
#[derive(Debug, Clone)]
pub struct ComplexTrajectory {
    raw: RawTrajectory,
    /// Index of `b_1` among the stored amplitudes (`b_2` follows it).
    mech_offset: usize,
    frame: f64,
}

impl ComplexTrajectory {
    pub fn raw(&self) -> &RawTrajectory {
        &self.raw
    }

    pub fn times(&self) -> &[f64] {
        self.raw.times()
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    /// Number of complex amplitudes per sample.
    pub fn amplitudes(&self) -> usize {
        self.raw.dim() / 2
    }

    /// Rotation frequency of the stored mechanical amplitudes.
    pub fn frame(&self) -> f64 {
        self.frame
    }

    fn to_lab(&self, t: f64, k: usize, c: Complex64) -> Complex64 {
        if self.frame == 0.0 || k < self.mech_offset {
            c
        } else {
            c * Complex64::from_polar(1.0, -self.frame * t)
        }
    }

    pub fn amplitude(&self, sample: usize, k: usize) -> Complex64 {
        let s = self.raw.state(sample);
        self.to_lab(
            self.raw.times()[sample],
            k,
            Complex64::new(s[2 * k], s[2 * k + 1]),
        )
    }

    /// Cavity amplitude for full-model runs.
    pub fn cavity(&self, sample: usize) -> Option<Complex64> {
        (self.mech_offset == 1).then(|| self.amplitude(sample, 0))
    }

    pub fn mechanical(&self, sample: usize) -> [Complex64; 2] {
        [
            self.amplitude(sample, self.mech_offset),
            self.amplitude(sample, self.mech_offset + 1),
        ]
    }

    pub fn mechanical_at(&self, t: f64) -> Result<[Complex64; 2]> {
        let y = self.raw.eval(t)?;
        let o = self.mech_offset;
        Ok([o, o + 1].map(|k| self.to_lab(t, k, Complex64::new(y[2 * k], y[2 * k + 1]))))
    }

    pub fn populations(&self) -> Vec<[f64; 2]> {
        (0..self.len())
            .map(|i| {
                let [b1, b2] = self.mechanical(i);
                [b1.norm_sqr(), b2.norm_sqr()]
            })
            .collect()
    }
}

/// Initial amplitudes for [`simulate_full`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FullInit {
    pub cavity: Complex64,
    pub mechanical: [Complex64; 2],
}

/// Integrates the full mean-field equations.
pub fn simulate_full(
    params: &FullSystemParams,
    init: FullInit,
    span: (f64, f64),
    opts: &IntegratorOptions,
) -> Result<ComplexTrajectory> {
    params.validate()?;
    let kappa = params.cavity_damping;
    let detuning = params.cavity_detuning();
    let omega = params.drive_amp;
    let modes = params.modes;
    let y0 = pack(&[init.cavity, init.mechanical[0], init.mechanical[1]]);
    let raw = integrate(
        move |_t, y: &[f64], dy: &mut [f64]| {
            let a = Complex64::new(y[0], y[1]);
            let na = a.norm_sqr();
            let mut shift = detuning;
            for (k, m) in modes.iter().enumerate() {
                let b = Complex64::new(y[2 + 2 * k], y[3 + 2 * k]);
                let x = 2.0 * b.re; // b + b*
                shift += m.coupling * x * x;
                let db = -(0.5 * m.damping + I * m.freq) * b
                    - 2.0 * I * m.kerr * b.norm_sqr() * b
                    - 2.0 * I * m.coupling * na * x;
                dy[2 + 2 * k] = db.re;
                dy[3 + 2 * k] = db.im;
            }
            let da = -(0.5 * kappa + I * shift) * a - I * omega;
            dy[0] = da.re;
            dy[1] = da.im;
        },
        &y0,
        span,
        opts,
    )?;
    Ok(ComplexTrajectory {
        raw,
        mech_offset: 1,
        frame: 0.0,
    })
}

/// Coefficient set used by [`simulate_reduced`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReducedMode {
    /// Complex `U_i`, `J_i` straight from the elimination.
    ComplexCoefficients,
    /// Real approximants `U_i^approx`, `J^approx`.
    HermitianApprox,
}

/// Integrates the reduced two-mode equations.
///
/// The equations are solved in a frame rotating at the mean shifted frequency,
/// where they are autonomous and slow; the trajectory reports lab-frame amplitudes.
pub fn simulate_reduced(
    reduced: &ReducedParams,
    init: [Complex64; 2],
    span: (f64, f64),
    mode: ReducedMode,
    opts: &IntegratorOptions,
) -> Result<ComplexTrajectory> {
    let (kerr, exchange) = match mode {
        ReducedMode::ComplexCoefficients => (reduced.kerr, reduced.exchange),
        ReducedMode::HermitianApprox => (
            reduced.kerr_approx.map(|u| Complex64::new(u, 0.0)),
            [Complex64::new(reduced.exchange_approx, 0.0); 2],
        ),
    };
    let all_finite = kerr.iter().chain(&exchange).all(|c| c.is_finite())
        && reduced
            .shifted_freq
            .iter()
            .chain(&reduced.damping)
            .all(|v| v.is_finite());
    if !all_finite {
        return Err(invalid("reduced", "coefficients must be finite"));
    }
    let frame = 0.5 * (reduced.shifted_freq[0] + reduced.shifted_freq[1]);
    let freq = reduced.shifted_freq.map(|w| w - frame);
    let damping = reduced.damping;
    let start = Complex64::from_polar(1.0, frame * span.0);
    let raw = integrate(
        move |_t, y: &[f64], dy: &mut [f64]| {
            let b = [Complex64::new(y[0], y[1]), Complex64::new(y[2], y[3])];
            for k in 0..2 {
                let (own, other) = (b[k], b[1 - k]);
                let db = -(0.5 * damping[k] + I * freq[k]) * own
                    - 2.0 * I * kerr[k] * own.norm_sqr() * own
                    - 2.0 * I * exchange[k] * other * other * own.conj();
                dy[2 * k] = db.re;
                dy[2 * k + 1] = db.im;
            }
        },
        &pack(&init.map(|b| b * start)),
        span,
        opts,
    )?;
    Ok(ComplexTrajectory {
        raw,
        mech_offset: 0,
        frame,
    })
}

fn pack(values: &[Complex64]) -> Vec<f64> {
    values.iter().flat_map(|c| [c.re, c.im]).collect()
}

/// Populations, phases, imbalance and phase difference at one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhononSample {
    pub t: f64,
    pub n: [f64; 2],
    /// Phases in `(-pi, pi]`, after removal of the reference rotation if one was given.
    pub theta: [f64; 2],
    pub n_total: f64,
    pub z: f64,
    /// Unwrapped `theta2 - theta1`; `None` where a mode is empty and the phase is undefined.
    pub phi: Option<f64>,
}

/// Populations below this fraction of `N_T(0)` leave the phase undefined.
pub const EMPTY_MODE_FRACTION: f64 = 1e-12;

/// Classical observables of the mechanical amplitudes.
///
/// `frame`, when given, holds the rotation frequencies `w_i`; phases are then
/// taken from `b_i exp(i w_i t)`.
pub fn phonon_observables(
    traj: &ComplexTrajectory,
    n_total0: f64,
    frame: Option<[f64; 2]>,
) -> Result<Vec<PhononSample>> {
    if !(n_total0 > 0.0) {
        return Err(invalid("n_total0", "must be positive"));
    }
    let mut out = Vec::with_capacity(traj.len());
    let mut last_phi: Option<f64> = None;
    for (i, &t) in traj.times().iter().enumerate() {
        let mut b = traj.mechanical(i);
        if let Some(w) = frame {
            for k in 0..2 {
                b[k] *= Complex64::from_polar(1.0, w[k] * t);
            }
        }
        let n = [b[0].norm_sqr(), b[1].norm_sqr()];
        let theta = [b[0].arg(), b[1].arg()];
        let defined = n.iter().all(|&v| v > EMPTY_MODE_FRACTION * n_total0);
        let phi = defined.then(|| {
            let raw = theta[1] - theta[0];
            match last_phi {
                None => raw - 2.0 * PI * (raw / (2.0 * PI)).round(),
                Some(prev) => raw + 2.0 * PI * ((prev - raw) / (2.0 * PI)).round(),
            }
        });
        if phi.is_some() {
            last_phi = phi;
        }
        out.push(PhononSample {
            t,
            n,
            theta,
            n_total: n[0] + n[1],
            z: (n[0] - n[1]) / n_total0,
            phi,
        });
    }
    Ok(out)
}

/// `lhs >> rhs` or `lhs << rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    MuchGreater,
    MuchLess,
}

/// One named validity condition with its numbers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Condition {
    pub name: &'static str,
    pub relation: Relation,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`.
    pub ratio: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidityReport {
    /// Required separation factor for `>>` and `<<`.
    pub threshold: f64,
    pub conditions: Vec<Condition>,
}

impl ValidityReport {
    pub fn all_pass(&self) -> bool {
        self.conditions.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

/// Default separation factor read into `>>` and `<<`.
pub const DEFAULT_VALIDITY_THRESHOLD: f64 = 10.0;

/// Validity of the adiabatic reduction at the default threshold of 10.
pub fn validity_check(params: &FullSystemParams) -> Result<ValidityReport> {
    validity_check_with(params, DEFAULT_VALIDITY_THRESHOLD)
}

pub fn validity_check_with(params: &FullSystemParams, threshold: f64) -> Result<ValidityReport> {
    if !(threshold > 0.0) {
        return Err(invalid("threshold", "must be positive"));
    }
    let ss = steady_state(params)?;
    let kappa = params.cavity_damping;
    let n_alpha = ss.alpha.norm_sqr();
    let shifted: Vec<f64> = params
        .modes
        .iter()
        .map(|m| m.freq + 2.0 * m.coupling * n_alpha)
        .collect();
    let detuning: Vec<f64> = shifted
        .iter()
        .map(|w| params.cavity_detuning() - 2.0 * w)
        .collect();
    let max_g = params
        .modes
        .iter()
        .map(|m| m.coupling * ss.alpha.norm())
        .fold(0.0, f64::max);
    let max_gamma = params.modes.iter().map(|m| m.damping).fold(0.0, f64::max);
    let max_det = detuning.iter().map(|d| d.abs()).fold(0.0, f64::max);
    let min_det = detuning
        .iter()
        .map(|d| d.abs())
        .fold(f64::INFINITY, f64::min);
    let min_scale = shifted
        .iter()
        .copied()
        .chain([params.cavity_detuning().abs()])
        .fold(f64::INFINITY, f64::min);

    let cond = |name, relation, lhs: f64, rhs: f64| {
        let ratio = lhs / rhs;
        let pass = match relation {
            Relation::MuchGreater => ratio >= threshold,
            Relation::MuchLess => ratio <= 1.0 / threshold,
        };
        Condition {
            name,
            relation,
            lhs,
            rhs,
            ratio,
            pass,
        }
    };
    Ok(ValidityReport {
        threshold,
        conditions: vec![
            cond("strong-drive", Relation::MuchGreater, ss.alpha.norm(), 1.0),
            cond(
                "cavity-hierarchy",
                Relation::MuchGreater,
                kappa,
                max_g.max(max_gamma),
            ),
            cond("rotating-wave", Relation::MuchLess, max_det, min_scale),
            cond(
                "near-degenerate",
                Relation::MuchLess,
                (detuning[0] - detuning[1]).abs().max(kappa),
                min_det,
            ),
        ],
    })
}
