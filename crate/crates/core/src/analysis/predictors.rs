use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::bjj::energy;
use crate::error::{invalid, Error, Result};

/// Energy of the initial state and whether it lies above the self-trapping threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MstCheck {
    pub h0: f64,
    pub is_mst: bool,
}

/// Self-trapping test `H0 > 1/2` for the symmetric junction.
pub fn mst_condition(z0: f64, phi0: f64, g: f64, delta: f64) -> Result<MstCheck> {
    if delta != 0.0 {
        return Err(Error::AsymmetricRefused { delta });
    }
    check_z(z0)?;
    let h0 = energy(z0, phi0, 0.0, g);
    Ok(MstCheck {
        h0,
        is_mst: h0 > 0.5,
    })
}

fn check_z(z: f64) -> Result<()> {
    if !(z.abs() <= 1.0) {
        return Err(Error::ImbalanceOutOfRange { z });
    }
    Ok(())
}

/// `g_c = (1 - (1 - z0^2) cos 2phi0) / z0^2`.
pub fn critical_g(z0: f64, phi0: f64) -> Result<f64> {
    check_z(z0)?;
    if z0 == 0.0 {
        return Err(Error::Undefined(
            "critical g needs z0 != 0 (division by zero)".into(),
        ));
    }
    Ok((1.0 - (1.0 - z0 * z0) * (2.0 * phi0).cos()) / (z0 * z0))
}

/// Critical imbalance with a flag for the degenerate `phi0 = m pi` case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalZ {
    pub value: f64,
    /// `phi0` is a multiple of `pi`, so `z_c = 0`.
    pub degenerate: bool,
}

/// `z_c = sqrt((1 - cos 2phi0) / (g - cos 2phi0))`, defined for `g >= 1`.
pub fn critical_z(phi0: f64, g: f64) -> Result<CriticalZ> {
    let c = (2.0 * phi0).cos();
    let num = 1.0 - c;
    // cos 2phi0 rounds to 1 within a few ulps of m pi.
    let degenerate = num <= 4.0 * f64::EPSILON;
    if degenerate {
        if g <= 1.0 {
            return Err(Error::Undefined(format!(
                "critical z at phi0 = m pi needs g > 1, got g = {g}"
            )));
        }
        return Ok(CriticalZ {
            value: 0.0,
            degenerate,
        });
    }
    if g <= c {
        return Err(Error::Undefined(format!(
            "critical z is imaginary for g = {g} <= cos 2phi0 = {c}"
        )));
    }
    if g < 1.0 {
        return Err(Error::Undefined(format!(
            "critical z exceeds 1 for g = {g} < 1"
        )));
    }
    Ok(CriticalZ {
        value: (num / (g - c)).sqrt(),
        degenerate,
    })
}

/// Critical quantities for one initial state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalValues {
    pub g_c: Option<f64>,
    pub z_c: Option<f64>,
    pub delta_crit: Option<f64>,
    pub h0: f64,
}

/// Closed-form critical values; `delta_crit` is left for a numerical search.
pub fn critical_values(z0: f64, phi0: f64, g: f64, delta: f64) -> Result<CriticalValues> {
    check_z(z0)?;
    Ok(CriticalValues {
        g_c: critical_g(z0, phi0).ok(),
        z_c: critical_z(phi0, g).ok().map(|c| c.value),
        delta_crit: None,
        h0: energy(z0, phi0, delta, g),
    })
}

/// One frequency in rescaled and physical units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Frequency {
    pub rescaled: f64,
    pub physical: f64,
}

/// Small-amplitude angular frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFrequencies {
    /// Non-interacting plasma frequency.
    pub omega0: Frequency,
    /// Linear-limit frequency; `None` for `g >= 1`.
    pub omega_l: Option<Frequency>,
    /// AC Josephson frequency.
    pub omega_ac: Frequency,
}

/// Frequencies for `g`, `Delta`; `time_scale` is `2 J N_T`.
pub fn linear_frequencies(g: f64, delta: f64, time_scale: f64) -> LinearFrequencies {
    let f = |w: f64| Frequency {
        rescaled: w,
        physical: w * time_scale,
    };
    LinearFrequencies {
        omega0: f(SQRT_2),
        omega_l: (g < 1.0).then(|| f((2.0 * (1.0 - g)).sqrt())),
        omega_ac: f((2.0 * delta).abs()),
    }
}

/// Effective potential `W(z)`; the particle moves where `W(z) <= H0`.
pub fn potential(z: f64, h0: f64, g: f64, delta: f64) -> f64 {
    if delta == 0.0 {
        return potential_symmetric(z, h0, g);
    }
    let z2 = z * z;
    h0 + 4.0 * h0 * h0 - 1.0 - 8.0 * h0 * delta * z
        + 2.0 * (1.0 + 2.0 * delta * delta - 2.0 * h0 * g) * z2
        + 4.0 * delta * g * z2 * z
        + (g * g - 1.0) * z2 * z2
}

/// `W(z) = H0 + 4 H0^2 - 1 + 2 (1 - 2 H0 g) z^2 + (g^2 - 1) z^4`.
pub fn potential_symmetric(z: f64, h0: f64, g: f64) -> f64 {
    let z2 = z * z;
    h0 + 4.0 * h0 * h0 - 1.0 + 2.0 * (1.0 - 2.0 * h0 * g) * z2 + (g * g - 1.0) * z2 * z2
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialCurve {
    pub h0: f64,
    pub g: f64,
    pub delta: f64,
    /// `(z, W(z) - H0)` on a uniform grid over `[-1, 1]`.
    pub samples: Vec<(f64, f64)>,
}

pub fn potential_curve(h0: f64, g: f64, delta: f64, points: usize) -> Result<PotentialCurve> {
    if points < 2 {
        return Err(invalid("points", "need at least 2 samples"));
    }
    let samples = linspace(-1.0, 1.0, points)
        .map(|z| (z, potential(z, h0, g, delta) - h0))
        .collect();
    Ok(PotentialCurve {
        h0,
        g,
        delta,
        samples,
    })
}

fn linspace(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    let step = (b - a) / (n - 1) as f64;
    (0..n).map(move |i| if i + 1 == n { b } else { a + step * i as f64 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointKind {
    Minimum,
    Maximum,
    Saddle,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationaryPoint {
    pub z: f64,
    pub phi: f64,
    /// Family index: `phi = m pi` or `phi = (m + 1/2) pi`.
    pub m: i32,
    pub kind: PointKind,
}

/// Classifies a diagonal Hessian by the signs of its eigenvalues.
fn kind_of(h_zz: f64, h_pp: f64) -> PointKind {
    const EPS: f64 = 1e-12;
    if h_zz.abs() < EPS || h_pp.abs() < EPS {
        PointKind::Degenerate
    } else if h_zz > 0.0 && h_pp > 0.0 {
        PointKind::Minimum
    } else if h_zz < 0.0 && h_pp < 0.0 {
        PointKind::Maximum
    } else {
        PointKind::Saddle
    }
}

/// Stationary points `[0, m pi]` and `[0, (m + 1/2) pi]` for `m` in `{0, 1}`.
///
/// At `z = 0` the Hessian of `H_J` is diagonal with `H_zz = g - cos 2phi` and
/// `H_phiphi = -2 cos 2phi`.
pub fn classify_stationary_points(g: f64, delta: f64) -> Result<Vec<StationaryPoint>> {
    if delta != 0.0 {
        return Err(Error::AsymmetricRefused { delta });
    }
    let mut out = Vec::with_capacity(4);
    for m in 0..2 {
        for phi in [m as f64 * PI, m as f64 * PI + FRAC_PI_2] {
            // cos 2phi is exactly +-1 on these lines.
            let c = if phi.rem_euclid(PI) == 0.0 { 1.0 } else { -1.0 };
            out.push(StationaryPoint {
                z: 0.0,
                phi,
                m,
                kind: kind_of(g - c, -2.0 * c),
            });
        }
    }
    Ok(out)
}

/// `tau* = (2 - 2 Delta0 / (Delta_crit - Delta_u)) / gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransitionTime {
    pub tau_star: f64,
    /// The effective asymmetry already exceeds the critical value at `tau = 0`.
    pub trapped_from_start: bool,
}

pub fn damping_transition_time(
    delta0: f64,
    delta_u: f64,
    delta_crit: f64,
    gamma: f64,
) -> Result<TransitionTime> {
    if !(gamma > 0.0) {
        return Err(invalid("gamma", "must be positive"));
    }
    if delta_crit <= delta_u {
        return Ok(TransitionTime {
            tau_star: 0.0,
            trapped_from_start: true,
        });
    }
    let tau_star = (2.0 - 2.0 * delta0 / (delta_crit - delta_u)) / gamma;
    Ok(TransitionTime {
        tau_star,
        trapped_from_start: tau_star <= 0.0,
    })
}

/// Rectangular grid over `(z, phi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub z_min: f64,
    pub z_max: f64,
    pub z_points: usize,
    pub phi_min: f64,
    pub phi_max: f64,
    pub phi_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            z_min: -1.0,
            z_max: 1.0,
            z_points: 101,
            phi_min: -PI,
            phi_max: PI,
            phi_points: 101,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyGrid {
    pub z: Vec<f64>,
    pub phi: Vec<f64>,
    /// `values[i][j] = H_J(z[i], phi[j])`.
    pub values: Vec<Vec<f64>>,
}

impl EnergyGrid {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }
}

/// `H_J` evaluated on a grid.
pub fn energy_contours(g: f64, delta: f64, grid: &GridSpec) -> Result<EnergyGrid> {
    let GridSpec {
        z_min,
        z_max,
        z_points,
        phi_min,
        phi_max,
        phi_points,
    } = *grid;
    if !(z_min >= -1.0 && z_max <= 1.0 && z_min < z_max) {
        return Err(invalid(
            "grid.z",
            "range must lie inside [-1, 1] with z_min < z_max",
        ));
    }
    if !(phi_min.is_finite() && phi_max.is_finite() && phi_min < phi_max) {
        return Err(invalid(
            "grid.phi",
            "range must be finite with phi_min < phi_max",
        ));
    }
    if z_points < 2 || phi_points < 2 {
        return Err(invalid("grid", "need at least 2 points per axis"));
    }
    let z: Vec<f64> = linspace(z_min, z_max, z_points).collect();
    let phi: Vec<f64> = linspace(phi_min, phi_max, phi_points).collect();
    let values = z
        .iter()
        .map(|&zi| phi.iter().map(|&p| energy(zi, p, delta, g)).collect())
        .collect();
    Ok(EnergyGrid { z, phi, values })
}
