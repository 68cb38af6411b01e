use chemohapto_core::condition::{check_theorem, CheckOptions, ConditionCase};
use chemohapto_core::grid::integrate;
use chemohapto_core::{Grid, InitialData, KineticSpec, ModelParams, Solver, SolverConfig};
use proptest::prelude::*;

fn params(chi: f64, tau: f64, kinetics: KineticSpec, n: usize) -> ModelParams {
    ModelParams {
        chi,
        xi: 1.0,
        tau,
        kinetics,
        grid: Grid::unit_square(n).unwrap(),
    }
}

fn kinetics() -> impl Strategy<Value = KineticSpec> {
    prop_oneof![
        Just(KineticSpec::Zero),
        (0.1f64..3.0).prop_map(|mu| KineticSpec::Logistic { mu }),
        (0.1f64..0.9).prop_map(|gamma| KineticSpec::SubLogPow {
            a: 1.0,
            b: 1.0,
            gamma
        }),
        (1u32..=3, 0.1f64..3.0).prop_map(|(k, mu)| KineticSpec::IterLog { k, mu }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_states_keep_sign_and_order(
        seed in prop::collection::vec(0.0f64..5.0, 64),
        wseed in prop::collection::vec(0.0f64..1.0, 64),
        chi in 0.0f64..4.0,
        tau in prop_oneof![Just(0.0), 0.1f64..2.0],
        kin in kinetics(),
    ) {
        let p = params(chi, tau, kin, 8);
        let g = p.grid;
        let solver = Solver::new(p, SolverConfig::default()).unwrap();
        let ic = InitialData::new(
            g.field(seed).unwrap(),
            g.constant(0.3),
            g.field(wseed).unwrap(),
            None,
        )
        .unwrap();
        let m0 = integrate(&ic.u0);
        let w0_max = ic.w0.max();
        let out = solver
            .run_observed(&ic, 0.05, 0.01, |before, after, _| {
                assert!(after.u.min() >= 0.0);
                assert!(after.v.min() >= 0.0);
                assert!(after.w.min() >= 0.0 && after.w.max() <= w0_max);
                for (a, b) in after.w.values().iter().zip(before.w.values()) {
                    assert!(a <= b);
                }
                if kin.is_zero() && after.clipped_mass == 0.0 {
                    assert!((integrate(&after.u) - m0).abs() <= 1e-9 * m0);
                }
            })
            .unwrap();
        prop_assert!(out.failure.is_none());
    }
}

#[test]
fn identical_inputs_give_identical_trajectories() {
    let p = params(1.5, 1.0, KineticSpec::IterLog { k: 2, mu: 1.0 }, 16);
    let g = p.grid;
    let ic = InitialData::new(
        g.sample(|x, y| 1.0 + (6.0 * x).sin() * (3.0 * y).cos()),
        g.constant(1.0),
        g.sample(|x, _| 0.5 + 0.1 * x),
        None,
    )
    .unwrap();
    let a = Solver::new(p, SolverConfig::default())
        .unwrap()
        .run(&ic, 0.2, 0.02)
        .unwrap();
    let b = Solver::new(p, SolverConfig::default())
        .unwrap()
        .run(&ic, 0.2, 0.02)
        .unwrap();
    assert_eq!(a.records.len(), b.records.len());
    for (x, y) in a.records.iter().zip(&b.records) {
        let bits = |r: &chemohapto_core::diagnostics::DiagnosticsRecord| r.values().map(f64::to_bits);
        assert_eq!(bits(x), bits(y));
    }
    assert_eq!(a.final_state, b.final_state);
}

#[test]
fn damping_cases_are_reported_for_sources() {
    let g = Grid::unit_square(16).unwrap();
    let ic = InitialData::new(g.constant(2.0), g.zeros(), g.constant(0.5), None).unwrap();
    let opts = CheckOptions::default();
    let iter = check_theorem(
        &params(50.0, 0.0, KineticSpec::IterLog { k: 3, mu: 1.0 }, 16),
        &ic,
        &opts,
    )
    .unwrap();
    assert_eq!(iter.condition_case, ConditionCase::Tau0Damping);
    // with τ > 0 the damping case is unavailable; large χ·M₁ fails the threshold
    let big = check_theorem(&params(50.0, 1.0, KineticSpec::Zero, 16), &ic, &opts).unwrap();
    assert_eq!(big.condition_case, ConditionCase::NotSatisfied);
    assert!(!big.tau0_damping_holds && !big.threshold_holds);
}
