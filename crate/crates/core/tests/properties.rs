use proptest::prelude::*;

use fkpp_core::classify::{classify_run, ClassifySettings};
use fkpp_core::critical::{CriticalSpeeds, SpeedSettings};
use fkpp_core::eigen::{principal_eigenvalue, EigenSettings};
use fkpp_core::fbp::{simulate, FbpProblem, FbpSettings, InitialData};
use fkpp_core::periodic::{periodic_state, stability_index, Environment, OdeSettings, PeriodicFn, Reaction};
use fkpp_core::semiwave::{relax_dirichlet_pinned, relax_dirichlet_zero, SemiWaveSettings};

fn coarse_eigen() -> EigenSettings {
    EigenSettings { nodes: 64, steps_per_period: 64, tol: 1e-9, max_periods: 300, extrapolate: false }
}

fn coarse_semiwave() -> SemiWaveSettings {
    SemiWaveSettings { nodes_per_unit: 16, steps_per_period: 64, period_tol: 1e-7, flux_samples: 64, ..Default::default() }
}

fn coarse_fbp() -> FbpSettings {
    FbpSettings { nodes: 128, steps_per_period: 128, ..Default::default() }
}

const RESOLVED: f64 = 1e-9;

fn logistic() -> Reaction {
    Reaction::homogeneous_logistic(1.0, 1.0, 1.0)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn logistic_stability_index_is_minus_b_p_squared(
        a_mean in 0.5f64..3.0, a_amp in 0.0f64..0.4, b_mean in 0.5f64..2.0, b_amp in 0.0f64..0.4,
    ) {
        let a = PeriodicFn::sin_offset(1.0, a_mean, a_amp * a_mean, 1, 128).unwrap();
        let b = PeriodicFn::sin_offset(1.0, b_mean, b_amp * b_mean, 2, 128).unwrap();
        let f = Reaction::logistic(a, b.clone()).unwrap();
        let p = periodic_state(&f, &OdeSettings::default()).unwrap();
        let (alpha, stable) = stability_index(&f, &p);
        prop_assert!(stable);
        for ((t, al), v) in alpha.times().zip(alpha.values()).zip(p.values()) {
            prop_assert!((al + b.eval(t) * v * v).abs() < 1e-8);
        }
    }

    #[test]
    fn eigenvalue_is_decreasing_in_length(k in -1.5f64..1.5, amp in 0.0f64..0.8, l1 in 0.5f64..4.0, dl in 0.2f64..2.0) {
        let kf = PeriodicFn::sin_offset(1.0, k, amp, 1, 64).unwrap();
        let a = PeriodicFn::sin_offset(1.0, 1.0, 0.5, 1, 64).unwrap();
        let s = coarse_eigen();
        let short = principal_eigenvalue(&kf, &a, l1, &s).unwrap();
        let long = principal_eigenvalue(&kf, &a, l1 + dl, &s).unwrap();
        prop_assert!(long.lambda1 < short.lambda1);
        let interior = &long.eigenfunction.first()[1..long.eigenfunction.first().len() - 1];
        prop_assert!(interior.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn eigenvalue_sees_only_mean_of_a(k in -1.0f64..1.0, amp in 0.0f64..0.9, l in 1.0f64..4.0) {
        let s = coarse_eigen();
        let kf = PeriodicFn::constant(1.0, k);
        let varying = principal_eigenvalue(&kf, &PeriodicFn::sin_offset(1.0, 1.0, amp, 1, 64).unwrap(), l, &s).unwrap();
        let flat = principal_eigenvalue(&kf, &PeriodicFn::constant(1.0, 1.0), l, &s).unwrap();
        prop_assert!((varying.lambda1 - flat.lambda1).abs() < 1e-6);
    }

    #[test]
    fn dirichlet_profile_grows_with_length(l in 4.0f64..8.0, dl in 1.0f64..4.0, k in -0.5f64..0.5) {
        let env = Environment::new(logistic()).unwrap();
        let s = coarse_semiwave();
        let base = PeriodicFn::constant(1.0, k);
        let short = relax_dirichlet_zero(&base, &env, l, &s).unwrap();
        let long = relax_dirichlet_zero(&base, &env, l + dl, &s).unwrap();
        for i in 0..=16 {
            let z = l * i as f64 / 16.0;
            for t in [0.0, 0.25, 0.5, 0.75] {
                prop_assert!(long.eval(t, z) >= short.eval(t, z) - 1e-7);
            }
        }
    }

    #[test]
    fn pinned_profile_grows_with_drift(l in 4.0f64..8.0, k in -0.5f64..0.5, dk in 0.2f64..0.8) {
        let env = Environment::new(logistic()).unwrap();
        let s = coarse_semiwave();
        let base = PeriodicFn::constant(1.0, k);
        let slow = relax_dirichlet_pinned(&base, &env, l, &s).unwrap();
        let fast = relax_dirichlet_pinned(&base.offset(dk), &env, l, &s).unwrap();
        for i in 0..=16 {
            let z = l * i as f64 / 16.0;
            for t in [0.0, 0.25, 0.5, 0.75] {
                prop_assert!(fast.eval(t, z) >= slow.eval(t, z) - 1e-7);
            }
        }
    }

    #[test]
    fn scheme_preserves_order_of_nested_data(beta in 0.0f64..1.5, amp in 0.0f64..0.5, s1 in 0.1f64..1.0, ds in 0.05f64..1.0) {
        let problem = FbpProblem::new(
            PeriodicFn::sin_offset(1.0, beta, amp, 1, 64).unwrap(),
            PeriodicFn::constant(1.0, 1.0),
            logistic(),
        ).unwrap();
        let lower = simulate(&problem, &InitialData::cosine(0.7, s1).unwrap(), 4, &coarse_fbp(), None).unwrap();
        let upper = simulate(&problem, &InitialData::cosine(0.7, s1 + ds).unwrap(), 4, &coarse_fbp(), None).unwrap();
        for (a, b) in lower.snapshots.iter().zip(&upper.snapshots) {
            prop_assert!(b.g <= a.g && b.h >= a.h);
            for j in 0..a.w.len() {
                prop_assert!(a.w[j] <= b.eval(a.x_of(j)) + 1e-10);
            }
        }
    }

    #[test]
    fn fronts_move_outward_and_stay_bounded(beta in 0.0f64..3.0, sigma in 0.1f64..4.0, h0 in 0.3f64..2.0) {
        let problem = FbpProblem::new(PeriodicFn::constant(1.0, beta), PeriodicFn::constant(1.0, 1.0), logistic()).unwrap();
        let traj = simulate(&problem, &InitialData::cosine(h0, sigma).unwrap(), 3, &coarse_fbp(), None).unwrap();
        for i in 1..traj.len() {
            // Below ~1e-9 a vanishing solution is dominated by round-off left in stiff
            // modes and the front slopes carry no sign information.
            if traj.sup[i] > RESOLVED {
                prop_assert!(traj.hdot[i] > 0.0 && traj.gdot[i] < 0.0);
            }
            prop_assert!(traj.h[i] >= traj.h[i - 1] - 1e-12 && traj.g[i] <= traj.g[i - 1] + 1e-12);
            prop_assert!(traj.sup[i] <= traj.amplitude_bound);
        }
    }
}

#[test]
fn classification_is_deterministic() {
    let env = Environment::new(logistic()).unwrap();
    let one = PeriodicFn::constant(1.0, 1.0);
    let speeds = SpeedSettings {
        semiwave: SemiWaveSettings { nodes_per_unit: 32, steps_per_period: 64, flux_samples: 64, ..Default::default() },
        ..Default::default()
    };
    let crit = CriticalSpeeds::compute(&PeriodicFn::constant(1.0, 0.0), &one, &env, &speeds).unwrap();
    let problem = FbpProblem::new(PeriodicFn::constant(1.0, 0.0), one, logistic()).unwrap();
    let init = InitialData::cosine(0.5, 1.0).unwrap();
    let run = || classify_run(&problem, &init, &crit, &env, &coarse_fbp(), &ClassifySettings::default()).unwrap();
    let (ta, a) = run();
    let (tb, b) = run();
    assert_eq!(a, b);
    assert_eq!(ta.h, tb.h);
    assert_eq!(ta.final_snapshot(), tb.final_snapshot());
}
