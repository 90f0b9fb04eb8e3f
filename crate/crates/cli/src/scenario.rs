//! Running one resolved scenario into an in-memory bundle of files.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use phonon_bjj::analysis::{
    classify_regime, classify_stationary_points, critical_delta, critical_values,
    damping_transition_time, energy_contours, linear_frequencies, mst_condition, potential_curve,
    trajectory_frequency, RegimeReport, SearchOptions, Window,
};
use phonon_bjj::{
    derive_bjj_params, effective_params, hamiltonian, phonon_observables, simulate_bjj,
    simulate_damped, simulate_full, simulate_reduced, steady_state, tunneling_current,
    validity_check, BjjMapping, BjjParams, BjjState, BjjTrajectory, ComplexTrajectory,
    Error as CoreError, FullInit, FullSystemParams, ReducedMode, ReducedParams,
};
use serde_json::{json, Value};

use crate::config::{Analysis, ModelKind, PhononInit, Scenario, Setup, SpanSpec};
use crate::error::{CliError, Result};
use crate::output::{extension, pretty, provenance, Emitted, Table};

/// Population mismatch above which the reduced model is reported as off track.
pub const REDUCTION_TOLERANCE: f64 = 0.05;

/// Analysis window used to measure the Josephson period of a phonon run.
const PERIOD_PROBE: Window = Window::new(0.0, 200.0);

/// Outputs of one scenario, held in memory.
#[derive(Debug, Clone)]
pub struct ResultBundle {
    pub name: String,
    pub trajectory: Option<Table>,
    /// Analysis records by name.
    pub records: BTreeMap<String, Value>,
    /// Reasons an analysis gave no verdict.
    pub inconclusive: Vec<String>,
    pub files: Vec<Emitted>,
}

impl ResultBundle {
    pub fn record(&self, name: &str) -> Option<&Value> {
        self.records.get(name)
    }

    pub fn file(&self, name: &str) -> Option<&Emitted> {
        self.files.iter().find(|f| f.name == name)
    }
}

/// Runs the scenario and renders its files.
pub fn run_scenario(s: &Scenario) -> Result<ResultBundle> {
    let mut b = Builder {
        s,
        records: BTreeMap::new(),
        inconclusive: Vec::new(),
        files: Vec::new(),
        trajectory: None,
    };
    match &s.setup {
        Setup::Junction { params, initial } => b.junction(params, *initial)?,
        Setup::Phonon {
            params,
            initial,
            reduced_mode,
        } => b.phonon(params, initial, *reduced_mode)?,
    }
    Ok(b.finish("simulate"))
}

/// Energy landscape only.
pub fn run_contours(s: &Scenario) -> Result<ResultBundle> {
    let Setup::Junction { params, .. } = &s.setup else {
        return Err(CliError::config("model", "contours need a junction model"));
    };
    let mut b = Builder {
        s,
        records: BTreeMap::new(),
        inconclusive: Vec::new(),
        files: Vec::new(),
        trajectory: None,
    };
    b.contours(params)?;
    Ok(b.finish("contours"))
}

/// Reduced and junction parameters with the validity report.
pub fn derive_params(s: &Scenario) -> Result<(Value, ResultBundle)> {
    let Setup::Phonon {
        params, initial, ..
    } = &s.setup
    else {
        return Err(CliError::config(
            "model",
            "derive-params needs the full or reduced model",
        ));
    };
    let reduced = effective_params(params)?;
    let mapping = derive_bjj_params(&reduced, initial.total())?;
    let state = junction_state(&mapping, initial);
    let doc = json!({
        "reduced": reduced,
        "junction": mapping,
        "initial": { "z": state.z, "phi": state.phi },
        "validity": validity_check(params)?,
    });
    let mut b = Builder {
        s,
        records: BTreeMap::new(),
        inconclusive: Vec::new(),
        files: Vec::new(),
        trajectory: None,
    };
    b.files.push(Emitted {
        name: format!("{}.derived.json", s.name),
        contents: pretty(&doc),
    });
    Ok((doc, b.finish("derive-params")))
}

struct Builder<'a> {
    s: &'a Scenario,
    records: BTreeMap<String, Value>,
    inconclusive: Vec<String>,
    files: Vec<Emitted>,
    trajectory: Option<Table>,
}

impl Builder<'_> {
    fn wants(&self, a: Analysis) -> bool {
        self.s.analyses.contains(&a)
    }

    fn record(&mut self, a: Analysis, v: Value) {
        self.records.insert(a.name().to_string(), v);
    }

    fn junction(&mut self, p: &BjjParams, initial: Option<BjjState>) -> Result<()> {
        let s = self.s;
        let traj = match (s.span, initial) {
            (Some(SpanSpec::Interval(a, b)), Some(init)) => {
                let traj = match s.model {
                    ModelKind::Bjj => simulate_bjj(p, init, (a, b), &s.integrator)?,
                    ModelKind::BjjDamped => simulate_damped(p, init, (a, b), &s.integrator)?,
                    _ => phonon_bjj::simulate_rescaled(p, init, (a, b), &s.integrator)?,
                };
                if let Some(reason) = &traj.stop_reason {
                    return Err(CliError::Numerical(CoreError::Undefined(reason.clone())));
                }
                self.trajectory = Some(junction_table(&traj, s.model));
                Some(traj)
            }
            _ => None,
        };
        let delta = p.delta();

        if let Some(traj) = &traj {
            if self.wants(Analysis::Regime) {
                let mut out = Vec::new();
                for w in &s.windows {
                    let r = classify_regime(traj, *w)?;
                    if let Some(why) = &r.inconclusive {
                        self.inconclusive
                            .push(format!("regime on [{}, {}]: {why}", w.start, w.end));
                    }
                    out.push(regime_value(&r));
                }
                self.record(Analysis::Regime, Value::Array(out));
            }
            if self.wants(Analysis::Frequency) {
                let mut out = Vec::new();
                for w in &s.windows {
                    out.push(match trajectory_frequency(traj, *w) {
                        Ok(omega) => json!({ "window": w, "omega": omega }),
                        Err(e @ CoreError::TooFewCrossings { .. }) => {
                            self.inconclusive
                                .push(format!("frequency on [{}, {}]: {e}", w.start, w.end));
                            json!({ "window": w, "omega": null, "error": e.to_string() })
                        }
                        Err(e) => return Err(e.into()),
                    });
                }
                let predicted = linear_frequencies(p.g, delta, p.time_scale());
                self.record(
                    Analysis::Frequency,
                    json!({ "measured": out, "predicted": predicted }),
                );
            }
            if self.wants(Analysis::Conservation) {
                let h0 = traj.energy[0];
                let drift = traj
                    .energy
                    .iter()
                    .map(|h| (h - h0).abs())
                    .fold(0.0, f64::max);
                self.record(
                    Analysis::Conservation,
                    json!({ "quantity": "H", "initial": h0, "max_abs_drift": drift }),
                );
            }
        }

        if let Some(init) = initial {
            let h0 = hamiltonian(init, p);
            if self.wants(Analysis::Potential) {
                let curve = potential_curve(h0, p.g, delta, 401)?;
                let mut t = Table::new(&["z", "W_minus_H0"]);
                for (z, w) in &curve.samples {
                    t.push_full(&[*z, *w]);
                }
                self.files.push(Emitted {
                    name: format!("{}.potential.{}", s.name, extension(s.format)),
                    contents: t.render(s.format),
                });
                self.record(
                    Analysis::Potential,
                    json!({ "h0": h0, "g": p.g, "delta": delta, "w_at_zero_minus_h0": curve.samples[curve.samples.len() / 2].1 }),
                );
            }
            if self.wants(Analysis::CriticalValues) {
                let cv = critical_values(init.z, init.phi, p.g, delta)?;
                let mst = mst_condition(init.z, init.phi, p.g, delta).ok();
                self.record(
                    Analysis::CriticalValues,
                    json!({ "values": cv, "mst": mst }),
                );
            }
            if self.wants(Analysis::CriticalDelta) {
                let opts = SearchOptions {
                    window: s.windows[0],
                    delta_hi: s.delta_hi,
                    tolerance: s.search_tolerance,
                    integrator: s.integrator,
                };
                let v = match critical_delta(init.z, init.phi, p.g, &opts) {
                    Ok(c) => json!(c),
                    Err(e @ CoreError::NoTransitionInRange { .. }) => {
                        self.inconclusive.push(format!("critical-delta: {e}"));
                        json!({ "error": e.to_string() })
                    }
                    Err(e) => return Err(e.into()),
                };
                self.record(
                    Analysis::CriticalDelta,
                    json!({ "search": { "window": opts.window, "delta_hi": opts.delta_hi, "tolerance": opts.tolerance }, "result": v }),
                );
            }
        }
        if self.wants(Analysis::Contours) {
            self.contours(p)?;
        }
        if self.wants(Analysis::LinearFrequencies) {
            let v = linear_frequencies(p.g, delta, p.time_scale());
            self.record(Analysis::LinearFrequencies, json!(v));
        }
        if self.wants(Analysis::StationaryPoints) {
            let v = classify_stationary_points(p.g, delta)?;
            self.record(Analysis::StationaryPoints, json!(v));
        }
        if self.wants(Analysis::DampingTransition) {
            let crit = s.delta_crit.expect("checked during resolution");
            let v = damping_transition_time(p.delta0, p.delta_u, crit, p.gamma)?;
            self.record(
                Analysis::DampingTransition,
                json!({ "delta_crit": crit, "result": v }),
            );
        }
        Ok(())
    }

    fn contours(&mut self, p: &BjjParams) -> Result<()> {
        let s = self.s;
        let grid = energy_contours(p.g, p.delta(), &s.grid)?;
        let mut t = Table::new(&["z", "phi", "H"]);
        for (j, &phi) in grid.phi.iter().enumerate() {
            for (i, &z) in grid.z.iter().enumerate() {
                t.push_full(&[z, phi, grid.at(i, j)]);
            }
        }
        self.files.push(Emitted {
            name: format!("{}.contours.{}", s.name, extension(s.format)),
            contents: t.render(s.format),
        });
        let (mut lo, mut hi) = ((f64::INFINITY, 0.0, 0.0), (f64::NEG_INFINITY, 0.0, 0.0));
        for (j, &phi) in grid.phi.iter().enumerate() {
            for (i, &z) in grid.z.iter().enumerate() {
                let h = grid.at(i, j);
                if h < lo.0 {
                    lo = (h, z, phi);
                }
                if h > hi.0 {
                    hi = (h, z, phi);
                }
            }
        }
        self.record(
            Analysis::Contours,
            json!({
                "grid": s.grid,
                "rows": t.rows(),
                "min": { "H": lo.0, "z": lo.1, "phi": lo.2 },
                "max": { "H": hi.0, "z": hi.1, "phi": hi.2 },
            }),
        );
        Ok(())
    }

    fn phonon(&mut self, p: &FullSystemParams, init: &PhononInit, mode: ReducedMode) -> Result<()> {
        let s = self.s;
        let reduced = effective_params(p)?;
        let mapping = match derive_bjj_params(&reduced, init.total()) {
            Ok(m) => Some(m),
            Err(CoreError::NoExchange) => None,
            Err(e) => return Err(e.into()),
        };
        let end = match s.span.expect("checked during resolution") {
            SpanSpec::Interval(_, b) => b,
            SpanSpec::Periods(k) => {
                let m = mapping.as_ref().ok_or_else(|| {
                    CliError::config(
                        "span.periods",
                        "no exchange coupling, so no Josephson period",
                    )
                })?;
                k * josephson_period(m, init)?
            }
        };
        let full = |s: &Scenario| -> Result<ComplexTrajectory> {
            let cavity = match init.cavity {
                Some(c) => c,
                None => steady_state(p)?.alpha,
            };
            let fi = FullInit {
                cavity,
                mechanical: init.amplitudes(),
            };
            Ok(simulate_full(p, fi, (0.0, end), &s.integrator)?)
        };
        let reduce = |s: &Scenario, red: &ReducedParams| -> Result<ComplexTrajectory> {
            Ok(simulate_reduced(
                red,
                init.amplitudes(),
                (0.0, end),
                mode,
                &s.integrator,
            )?)
        };
        let main = if s.model == ModelKind::Full {
            full(s)?
        } else {
            reduce(s, &reduced)?
        };
        self.trajectory = Some(phonon_table(&main, mapping.as_ref(), init.total())?);

        let mut derived = json!({ "reduced": reduced, "junction": mapping, "span": [0.0, end] });
        if let Some(m) = &mapping {
            let st = junction_state(m, init);
            derived["initial"] = json!({ "z": st.z, "phi": st.phi });
        }
        self.records.insert("derived".into(), derived);

        if self.wants(Analysis::Conservation) {
            let n0 = init.total();
            let pops = main.populations();
            let drift = pops
                .iter()
                .map(|n| ((n[0] + n[1]) / n0 - 1.0).abs())
                .fold(0.0, f64::max);
            self.record(
                Analysis::Conservation,
                json!({ "quantity": "N_T", "initial": n0, "max_rel_drift": drift }),
            );
        }
        if self.wants(Analysis::ReductionError) {
            let (f, r) = if s.model == ModelKind::Full {
                (main.clone(), reduce(s, &reduced)?)
            } else {
                (full(s)?, main.clone())
            };
            let (by_total, by_mode) = population_deviation(&f, &r, init.total())?;
            self.record(
                Analysis::ReductionError,
                json!({
                    "reduced_mode": mode,
                    "horizon": end,
                    "max_dev_over_total": by_total,
                    "max_dev_per_mode": by_mode,
                    "tolerance": REDUCTION_TOLERANCE,
                    "within_tolerance": by_total < REDUCTION_TOLERANCE,
                }),
            );
        }
        if self.wants(Analysis::Validity) {
            self.record(Analysis::Validity, json!(validity_check(p)?));
        }
        Ok(())
    }

    fn finish(mut self, command: &str) -> ResultBundle {
        let s = self.s;
        if let Some(t) = &self.trajectory {
            self.files.insert(
                0,
                Emitted {
                    name: format!("{}.{}", s.name, extension(s.format)),
                    contents: t.render(s.format),
                },
            );
        }
        if !self.records.is_empty() {
            let mut doc = json!({ "analyses": self.records });
            if !self.inconclusive.is_empty() {
                doc["inconclusive"] = json!(self.inconclusive);
            }
            self.files.push(Emitted {
                name: format!("{}.analysis.json", s.name),
                contents: pretty(&doc),
            });
        }
        let names: Vec<String> = self.files.iter().map(|f| f.name.clone()).collect();
        let integrator = (self.trajectory.is_some()
            || s.analyses.contains(&Analysis::CriticalDelta))
        .then_some(&s.integrator);
        self.files.push(Emitted {
            name: format!("{}.provenance.json", s.name),
            contents: provenance(command, &s.echo, integrator, &names),
        });
        ResultBundle {
            name: s.name.clone(),
            trajectory: self.trajectory,
            records: self.records,
            inconclusive: self.inconclusive,
            files: self.files,
        }
    }
}

fn regime_value(r: &RegimeReport) -> Value {
    json!(r)
}

/// Columns `t, z, phi, H, I`, plus `z_prime, tau` for damped runs.
fn junction_table(traj: &BjjTrajectory, model: ModelKind) -> Table {
    match (model, &traj.damped) {
        (ModelKind::Bjj, _) | (_, None) => {
            let mut t = Table::new(&["t", "z", "phi", "H", "I"]);
            for i in 0..traj.len() {
                t.push_full(&[
                    traj.times[i],
                    traj.z[i],
                    traj.phi[i],
                    traj.energy[i],
                    traj.current[i],
                ]);
            }
            t
        }
        (_, Some(d)) => {
            let mut t = Table::new(&["t", "z", "phi", "H", "I", "z_prime", "tau"]);
            for i in 0..traj.len() {
                t.push_full(&[
                    d.t[i],
                    d.z[i],
                    traj.phi[i],
                    traj.energy[i],
                    traj.current[i],
                    d.z_prime[i],
                    d.tau[i],
                ]);
            }
            t
        }
    }
}

/// Columns `t, z, phi, H, I, n1, n2, n_total`; `phi` is the junction phase and
/// `H`, `I` use the mapped junction parameters.
fn phonon_table(traj: &ComplexTrajectory, mapping: Option<&BjjMapping>, n0: f64) -> Result<Table> {
    let obs = phonon_observables(traj, n0, None)?;
    let mut t = Table::new(&["t", "z", "phi", "H", "I", "n1", "n2", "n_total"]);
    for o in &obs {
        let phi = o.phi.map(|v| v + mapping.map_or(0.0, |m| m.phase_offset));
        let (h, i) = match (phi, mapping) {
            (Some(phi), Some(m)) => {
                let st = BjjState::new(o.z, phi);
                (
                    Some(hamiltonian(st, &m.params)),
                    Some(tunneling_current(st, &m.params)),
                )
            }
            _ => (None, None),
        };
        t.push(&[
            Some(o.t),
            Some(o.z),
            phi,
            h,
            i,
            Some(o.n[0]),
            Some(o.n[1]),
            Some(o.n_total),
        ]);
    }
    Ok(t)
}

fn junction_state(m: &BjjMapping, init: &PhononInit) -> BjjState {
    let z = (init.n[0] - init.n[1]) / init.total();
    let raw = init.theta[1] - init.theta[0];
    BjjState::new(
        z,
        m.junction_phase(raw - 2.0 * PI * (raw / (2.0 * PI)).round()),
    )
}

/// Physical-time period of the mapped junction started from the initial state.
fn josephson_period(m: &BjjMapping, init: &PhononInit) -> Result<f64> {
    let state = junction_state(m, init);
    let undamped = BjjParams {
        gamma: 0.0,
        ..m.params
    };
    let traj = simulate_bjj(
        &undamped,
        state,
        (PERIOD_PROBE.start, PERIOD_PROBE.end),
        &phonon_bjj::IntegratorOptions::dimensionless(),
    )?;
    let omega = trajectory_frequency(&traj, PERIOD_PROBE).map_err(|e| match e {
        CoreError::TooFewCrossings { .. } => {
            CliError::Inconclusive(format!("cannot measure the Josephson period: {e}"))
        }
        e => e.into(),
    })?;
    Ok(2.0 * PI / omega / m.params.time_scale())
}

/// `(max |dn_i| / N_T(0), max |dn_i| / n_i^reduced)` over the full-run samples.
pub fn population_deviation(
    full: &ComplexTrajectory,
    reduced: &ComplexTrajectory,
    n0: f64,
) -> Result<(f64, f64)> {
    let (mut by_total, mut by_mode): (f64, f64) = (0.0, 0.0);
    for (i, &t) in full.times().iter().enumerate() {
        let bf = full.mechanical(i);
        let br = reduced.mechanical_at(t)?;
        for k in 0..2 {
            let nr = br[k].norm_sqr();
            let diff = (bf[k].norm_sqr() - nr).abs();
            by_total = by_total.max(diff / n0);
            if nr > 0.0 {
                by_mode = by_mode.max(diff / nr);
            }
        }
    }
    Ok((by_total, by_mode))
}
