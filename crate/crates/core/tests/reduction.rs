use std::f64::consts::FRAC_PI_4;

use phonon_bjj::analysis::{trajectory_frequency, Window};
use phonon_bjj::full_model::{
    effective_params, phonon_observables, simulate_full, simulate_reduced, steady_state, FullInit,
    FullSystemParams, MechanicalMode, ReducedMode,
};
use phonon_bjj::{derive_bjj_params, simulate_bjj, BjjState, Complex64, IntegratorOptions};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn free_system(omega: f64, kappa: f64) -> FullSystemParams {
    let mode = MechanicalMode {
        freq: 3.0,
        kerr: 0.0,
        coupling: 0.0,
        damping: 0.0,
    };
    FullSystemParams {
        cavity_freq: 2.0,
        drive_freq: 0.0,
        drive_amp: omega,
        cavity_damping: kappa,
        modes: [mode, mode],
    }
}

#[test]
fn free_evolution_conserves_populations() {
    let init = FullInit {
        cavity: c(0.0, 0.0),
        mechanical: [
            Complex64::from_polar(3.0, 0.2),
            Complex64::from_polar(2.0, -1.0),
        ],
    };
    let traj = simulate_full(
        &free_system(0.0, 1.0),
        init,
        (0.0, 30.0),
        &IntegratorOptions::physical(),
    )
    .unwrap();
    let opts = IntegratorOptions::physical();
    for n in traj.populations() {
        for (v, exact) in n.iter().zip([9.0, 4.0]) {
            assert!(
                (v / exact - 1.0).abs() < 100.0 * opts.rel_tol,
                "{v} vs {exact}"
            );
        }
    }
}

#[test]
fn undriven_cavity_decays() {
    let kappa = 0.7;
    let init = FullInit {
        cavity: c(1.5, -0.5),
        mechanical: [c(0.0, 0.0); 2],
    };
    let traj = simulate_full(
        &free_system(0.0, kappa),
        init,
        (0.0, 10.0),
        &IntegratorOptions::physical(),
    )
    .unwrap();
    let a0 = init.cavity.norm();
    for (i, &t) in traj.times().iter().enumerate() {
        let a = traj.cavity(i).unwrap().norm();
        assert!((a - a0 * (-0.5 * kappa * t).exp()).abs() < 1e-7);
    }
}

#[test]
fn steady_state_is_stationary() {
    let p = FullSystemParams::oracle_preset();
    let alpha = steady_state(&p).unwrap().alpha;
    let init = FullInit {
        cavity: alpha,
        mechanical: [c(0.0, 0.0); 2],
    };
    let traj = simulate_full(&p, init, (0.0, 20.0), &IntegratorOptions::physical()).unwrap();
    for i in 0..traj.len() {
        assert!((traj.cavity(i).unwrap() - alpha).norm() < 1e-6 * alpha.norm());
        assert_eq!(traj.mechanical(i), [c(0.0, 0.0); 2]);
    }
}

#[test]
fn empty_mode_stays_empty() {
    let r = effective_params(&FullSystemParams::oracle_preset()).unwrap();
    for mode in [
        ReducedMode::ComplexCoefficients,
        ReducedMode::HermitianApprox,
    ] {
        let traj = simulate_reduced(
            &r,
            [c(8.0, 0.0), c(0.0, 0.0)],
            (0.0, 200.0),
            mode,
            &IntegratorOptions::physical(),
        )
        .unwrap();
        assert!(traj.populations().iter().all(|n| n[1] == 0.0));
        let obs = phonon_observables(&traj, 64.0, None).unwrap();
        assert!(obs.iter().all(|s| s.phi.is_none()));
        assert!((obs[0].z - 1.0).abs() < 1e-15);
    }
}

#[test]
fn observables_of_unbalanced_state() {
    let r = effective_params(&FullSystemParams::oracle_preset()).unwrap();
    let traj = simulate_reduced(
        &r,
        [c(75f64.sqrt(), 0.0), c(5.0, 0.0)],
        (0.0, 1.0),
        ReducedMode::HermitianApprox,
        &IntegratorOptions::physical(),
    )
    .unwrap();
    let obs = phonon_observables(&traj, 100.0, None).unwrap();
    assert!((obs[0].z - 0.5).abs() < 1e-14);
    assert_eq!(obs[0].phi, Some(0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn hermitian_reduction_conserves_total(
        n1 in 1.0f64..99.0,
        theta in -3.0f64..3.0,
        kerr in -1e-4f64..1e-4,
    ) {
        let mut p = FullSystemParams::oracle_preset();
        p.modes[0].kerr = kerr;
        let r = effective_params(&p).unwrap();
        let init = [c(n1.sqrt(), 0.0), Complex64::from_polar((100.0 - n1).sqrt(), theta)];
        // Drift grows with the horizon, which here spans several Josephson periods.
        let opts = IntegratorOptions::physical().with_tolerances(1e-10, 1e-12);
        let traj = simulate_reduced(&r, init, (0.0, 2000.0), ReducedMode::HermitianApprox, &opts)
            .unwrap();
        let obs = phonon_observables(&traj, 100.0, None).unwrap();
        for s in &obs {
            prop_assert!((s.n_total / 100.0 - 1.0).abs() <= 1e-8, "{}", s.n_total);
            prop_assert!(s.z.abs() <= 1.0);
        }
        let phis: Vec<f64> = obs.iter().filter_map(|s| s.phi).collect();
        prop_assert!(phis.windows(2).all(|w| (w[1] - w[0]).abs() < std::f64::consts::PI));
    }
}

/// Largest population mismatch over the samples of the full run, as
/// `(max |dn_i| / N_T(0), max |dn_i| / n_i^red)`.
fn population_deviation(
    p: &FullSystemParams,
    n: [f64; 2],
    theta: [f64; 2],
    end: f64,
) -> (f64, f64) {
    let r = effective_params(p).unwrap();
    let b = [
        Complex64::from_polar(n[0].sqrt(), theta[0]),
        Complex64::from_polar(n[1].sqrt(), theta[1]),
    ];
    let opts = IntegratorOptions::physical();
    let alpha = steady_state(p).unwrap().alpha;
    let full = simulate_full(
        p,
        FullInit {
            cavity: alpha,
            mechanical: b,
        },
        (0.0, end),
        &opts,
    )
    .unwrap();
    let reduced =
        simulate_reduced(&r, b, (0.0, end), ReducedMode::ComplexCoefficients, &opts).unwrap();
    let total = n[0] + n[1];
    let (mut by_total, mut by_mode): (f64, f64) = (0.0, 0.0);
    for (i, &t) in full.times().iter().enumerate() {
        let bf = full.mechanical(i);
        let br = reduced.mechanical_at(t).unwrap();
        for k in 0..2 {
            let nr = br[k].norm_sqr();
            let diff = (bf[k].norm_sqr() - nr).abs();
            by_total = by_total.max(diff / total);
            by_mode = by_mode.max(diff / nr);
        }
    }
    (by_total, by_mode)
}

#[test]
fn reduced_model_tracks_full_model_over_a_josephson_period() {
    let p = FullSystemParams::oracle_preset();
    let r = effective_params(&p).unwrap();
    let mapping = derive_bjj_params(&r, 100.0).unwrap();
    let state = BjjState::new(0.5, mapping.junction_phase(FRAC_PI_4));
    let bjj = simulate_bjj(
        &mapping.params,
        state,
        (0.0, 60.0),
        &IntegratorOptions::default(),
    )
    .unwrap();
    let w = trajectory_frequency(&bjj, Window::new(0.0, 60.0)).unwrap();
    let period = 2.0 * std::f64::consts::PI / w / mapping.params.time_scale();
    let (dev, per_mode) = population_deviation(&p, [75.0, 25.0], [0.0, FRAC_PI_4], period);
    println!("deviation over period {period}: {dev} of N_T, {per_mode} per mode");
    assert!(dev < 0.05, "deviation {dev} over period {period}");
}
