//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use phonon_bjj::analysis::{
    classify_regime, critical_delta, critical_g, mst_condition, potential, trajectory_frequency,
    SearchOptions, Window,
};
use phonon_bjj::{simulate_bjj, symmetry_transform, BjjParams, BjjState, IntegratorOptions};
use phonon_bjj_cli::{
    presets, resolve, run_document, run_scenario, ModelKind, ResultBundle, Table,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(value: f64, target: f64, rel: f64) -> bool {
    (value / target - 1.0).abs() <= rel
}

fn frequency(g: f64, delta: f64, z0: f64, end: f64) -> (f64, Vec<f64>) {
    let traj = simulate_bjj(
        &BjjParams::new(g, delta),
        BjjState::new(z0, 0.0),
        (0.0, end),
        &IntegratorOptions::default(),
    )
    .expect("integration");
    let w = trajectory_frequency(&traj, Window::new(0.0, end)).expect("frequency");
    (w, traj.z.clone())
}

fn preset_members(name: &str) -> Vec<ResultBundle> {
    let (_, run) = run_document(&presets::preset(name).expect("preset"), None).expect("run");
    run.members.into_iter().map(|(_, b)| b).collect()
}

fn regime(b: &ResultBundle, window: usize) -> &Value {
    &b.record("regime").expect("regime record")[window]
}

fn omega(b: &ResultBundle) -> Option<f64> {
    b.record("frequency")?["measured"][0]["omega"].as_f64()
}

fn column(t: &Table, name: &str) -> Vec<f64> {
    t.column(name)
        .expect("column")
        .iter()
        .map(|v| v.expect("cell"))
        .collect()
}

fn excursion(b: &ResultBundle) -> f64 {
    let z = column(b.trajectory.as_ref().expect("trajectory"), "z");
    let (lo, hi) = z
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, c), &v| {
            (a.min(v), c.max(v))
        });
    hi - lo
}

fn linear_frequency() -> Check {
    let (w, _) = frequency(0.0, 0.0, 0.01, 50.0);
    ensure(
        within(w, SQRT_2, 0.01),
        format!("omega = {w:.6}, expected {SQRT_2:.6}"),
    )
}

fn interacting_linear_frequency() -> Check {
    let mut ok = true;
    let mut parts = Vec::new();
    for (g, expected) in [(0.5, 1.0), (0.75, 0.5f64.sqrt())] {
        let (w, _) = frequency(g, 0.0, 0.01, 50.0);
        ok &= within(w, expected, 0.01);
        parts.push(format!("g = {g}: omega = {w:.6} (expected {expected:.6})"));
    }
    ensure(ok, parts.join("; "))
}

fn ac_josephson() -> Check {
    let (w, z) = frequency(0.1, 1.0, 0.001, 50.0);
    let (lo, hi) = z
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, c), &v| {
            (a.min(v), c.max(v))
        });
    let amplitude = 0.5 * (hi - lo);
    ensure(
        within(w, 2.0, 0.02) && within(amplitude, 0.5, 0.05),
        format!(
            "omega = {w:.4} (expected 2 +- 2%), amplitude = {amplitude:.4} (expected 0.5 +- 5%)"
        ),
    )
}

fn interaction_transition() -> Check {
    let mut bad = Vec::new();
    let mut n = 0;
    for (name, mode, trapped) in [
        ("fig3a", "zero-phase", false),
        ("fig3b", "zero-phase", false),
        ("fig3c", "running-phase", true),
        ("fig3d", "running-phase", true),
    ] {
        for b in preset_members(name) {
            let r = regime(&b, 0);
            n += 1;
            if r["phase_mode"] != mode || r["self_trapped"] != trapped || !b.inconclusive.is_empty()
            {
                bad.push(format!(
                    "{}: {} trapped={} {:?}",
                    b.name, r["phase_mode"], r["self_trapped"], b.inconclusive
                ));
            }
        }
    }
    ensure(
        bad.is_empty(),
        format!(
            "{n} runs, z(0) in {{0.1, 0.3, 0.5, 0.6, 0.9, 0.99}}; {}",
            if bad.is_empty() {
                "verdicts identical".into()
            } else {
                bad.join("; ")
            }
        ),
    )
}

fn imbalance_transition() -> Check {
    let a = &preset_members("fig4a")[0];
    let b = &preset_members("fig4b")[0];
    let d = preset_members("fig4d");
    let (lo, hi) = (&d[0], &d[1]);
    let period = |x: &ResultBundle| omega(x).map_or(f64::NAN, |w| 2.0 * PI / w);
    let trapped = |x: &ResultBundle| regime(x, 0)["self_trapped"] == true;
    let checks = [
        !trapped(b),
        period(b) > period(a),
        trapped(lo),
        trapped(hi),
        period(hi) < period(lo),
        excursion(hi) < excursion(lo),
    ];
    ensure(
        checks.iter().all(|c| *c),
        format!(
            "periods z0=0.2: {:.3}, 0.4999: {:.3} (trapped {}), 0.5001: {:.3} (trapped {}), 0.7: {:.3} (trapped {}); excursions 0.5001: {:.4}, 0.7: {:.4}",
            period(a), period(b), trapped(b), period(lo), trapped(lo), period(hi), trapped(hi), excursion(lo), excursion(hi)
        ),
    )
}

fn critical_asymmetry() -> Check {
    let opts = SearchOptions::default();
    let a = critical_delta(0.5, 0.0, 0.9, &opts)
        .map_err(|e| e.to_string())?
        .delta;
    let b = critical_delta(0.5, FRAC_PI_2, 6.0, &opts)
        .map_err(|e| e.to_string())?
        .delta;
    ensure(
        (a - 0.05).abs() <= 0.01 && (b - 0.24).abs() <= 0.02,
        format!("(0.5, 0, 0.9): {a:.4} (expected 0.05 +- 0.01); (0.5, pi/2, 6): {b:.4} (expected 0.24 +- 0.02)"),
    )
}

fn damping_transition() -> Check {
    let b = &preset_members("fig7a")[0];
    let early = regime(b, 0);
    let late = regime(b, 1);
    let t = b.trajectory.as_ref().expect("trajectory");
    let (tau, zp) = (column(t, "tau"), column(t, "z_prime"));
    // Onset: the last time z' changes sign.
    let onset = (1..zp.len())
        .rev()
        .find(|&i| zp[i - 1].signum() != zp[i].signum())
        .map(|i| tau[i])
        .unwrap_or(0.0);
    let predicted = b.record("damping-transition").expect("record")["result"]["tau_star"].as_f64();
    ensure(
        early["self_trapped"] == false && late["self_trapped"] == true && (onset - 50.0).abs() <= 10.0,
        format!(
            "[0, 35]: trapped={} mean_z={:.3} sign_changes={}; [65, 190]: trapped={}; onset (last sign change of z') = {onset:.2}, predicted tau* = {predicted:?}",
            early["self_trapped"], early["mean_z"].as_f64().unwrap_or(f64::NAN), early["sign_changes"], late["self_trapped"]
        ),
    )
}

fn energy_conservation() -> Check {
    let mut worst = (0.0f64, String::new());
    let mut runs = 0;
    for name in presets::names() {
        let doc = presets::preset(&name).expect("preset");
        if resolve(
            &phonon_bjj_cli::ScenarioConfig::members(&doc).expect("members")[0].1,
            None,
        )
        .expect("resolve")
        .model
            != ModelKind::Bjj
        {
            continue;
        }
        let (_, run) = run_document(&doc, None).expect("run");
        for (_, b) in &run.members {
            let Some(t) = &b.trajectory else { continue };
            let h = column(t, "H");
            let drift = h.iter().map(|v| (v - h[0]).abs()).fold(0.0, f64::max);
            runs += 1;
            if drift >= worst.0 {
                worst = (drift, b.name.clone());
            }
        }
    }
    ensure(
        worst.0 <= 1e-8 && runs > 0,
        format!(
            "{runs} undamped runs, max |H - H0| = {:.3e} ({})",
            worst.0, worst.1
        ),
    )
}

fn symmetry() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let p = BjjParams::new(rng.gen_range(-4.0..8.0), rng.gen_range(-0.3..0.3));
        let s = BjjState::new(rng.gen_range(-0.9..0.9), rng.gen_range(-PI..PI));
        let (q, s2) = symmetry_transform(&p, s);
        let opts = IntegratorOptions::default();
        let a = simulate_bjj(&p, s, (0.0, 50.0), &opts).map_err(|e| e.to_string())?;
        let b = simulate_bjj(&q, s2, (0.0, 50.0), &opts).map_err(|e| e.to_string())?;
        for k in 0..=200 {
            let t = 0.25 * k as f64;
            let (x, y) = (a.state_at(t).unwrap(), b.state_at(t).unwrap());
            worst = worst
                .max((x.z - y.z).abs())
                .max((y.phi - (FRAC_PI_2 - x.phi)).abs());
        }
    }
    ensure(
        worst <= 1e-6,
        format!("20 cases x 201 times, max deviation {worst:.3e}"),
    )
}

fn mst_equivalence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut cases, mut skipped) = (0, 0);
    let mut bad = Vec::new();
    while cases < 100 {
        let z0 = rng.gen_range(0.05..0.95) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let phi0 = rng.gen_range(-PI..PI);
        let g = rng.gen_range(0.0..10.0);
        if (g - critical_g(z0, phi0).map_err(|e| e.to_string())?).abs() < 0.02 {
            skipped += 1;
            continue;
        }
        cases += 1;
        let traj = simulate_bjj(
            &BjjParams::symmetric(g),
            BjjState::new(z0, phi0),
            (0.0, 200.0),
            &IntegratorOptions::default(),
        )
        .map_err(|e| e.to_string())?;
        let trapped = classify_regime(&traj, Window::default())
            .map_err(|e| e.to_string())?
            .self_trapped;
        let m = mst_condition(z0, phi0, g, 0.0).map_err(|e| e.to_string())?;
        let barrier = potential(0.0, m.h0, g, 0.0) > m.h0;
        if trapped != m.is_mst || barrier != trapped {
            bad.push(format!("(z0={z0:.4}, phi0={phi0:.4}, g={g:.4}): trapped={trapped} H0>1/2={} W(0)>H0={barrier}", m.is_mst));
        }
    }
    ensure(
        bad.is_empty(),
        format!(
            "{cases} cases ({skipped} redrawn in the separatrix band); {}",
            if bad.is_empty() {
                "all agree".into()
            } else {
                bad.join("; ")
            }
        ),
    )
}

fn reduction_oracle() -> Check {
    let start = Instant::now();
    let b = run_scenario(&resolve(&presets::preset("oracle-compare").unwrap(), None).unwrap())
        .map_err(|e| e.to_string())?;
    let r = b.record("reduction-error").expect("record");
    let conditions = b.record("validity").expect("record")["conditions"]
        .as_array()
        .expect("conditions")
        .clone();
    let ratio = |name: &str| {
        conditions
            .iter()
            .find(|c| c["name"] == name)
            .and_then(|c| c["ratio"].as_f64())
            .unwrap_or(f64::NAN)
    };
    let valid = conditions.iter().all(|c| c["pass"] == true);
    let dev = r["max_dev_over_total"].as_f64().unwrap_or(f64::NAN);
    let secs = start.elapsed().as_secs_f64();
    ensure(
        valid && (ratio("cavity-hierarchy") - 50.0).abs() < 1e-6 && dev < 0.05 && secs <= 600.0,
        format!(
            "kappa/|G| = {:.3}, validity ratios pass = {valid}; max |n_i full - n_i reduced| / N_T = {dev:.4} (per mode {:.4}) over {:.2}; {secs:.1} s",
            ratio("cavity-hierarchy"),
            r["max_dev_per_mode"].as_f64().unwrap_or(f64::NAN),
            r["horizon"].as_f64().unwrap_or(f64::NAN)
        ),
    )
}

fn reduced_conservation() -> Check {
    let mut doc = presets::preset("oracle-compare").unwrap();
    doc["model"] = json!("reduced");
    doc["reduced_mode"] = json!("hermitian-approx");
    doc["analyses"] = json!(["conservation"]);
    let b = run_scenario(&resolve(&doc, None).unwrap()).map_err(|e| e.to_string())?;
    let drift = b.record("conservation").expect("record")["max_rel_drift"]
        .as_f64()
        .unwrap_or(f64::NAN);
    ensure(
        drift <= 1e-8,
        format!("max |N_T/N_T(0) - 1| = {drift:.3e} over one Josephson period"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("linear frequency omega_0", linear_frequency),
        ("linear frequency omega_L", interacting_linear_frequency),
        ("AC Josephson oscillation", ac_josephson),
        ("interaction-driven transition", interaction_transition),
        ("imbalance-driven transition", imbalance_transition),
        ("critical asymmetry", critical_asymmetry),
        ("damping-induced transition", damping_transition),
        ("energy conservation", energy_conservation),
        ("symmetry transformation", symmetry),
        ("self-trapping predictor", mst_equivalence),
        ("reduction oracle", reduction_oracle),
        ("reduced-model conservation", reduced_conservation),
    ];
    let mut failed = 0;
    for (i, (title, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {title}: {detail} [{secs:.1} s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {}: {title}: {detail} [{secs:.1} s]", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria pass",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
