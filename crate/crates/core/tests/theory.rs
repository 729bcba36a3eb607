use approx::assert_abs_diff_eq;
use spgg_core::game::{CostModel, GameParams};
use spgg_core::solver::SolverConfig;
use spgg_core::theory::{
    check_assumptions, comparative_statics, theorem1_conditions, verify_lemma1, verify_theorem1, Direction,
    SweepParam,
};

const LINEAR: CostModel = CostModel::Linear { a: 1.0 };

fn positive_floor(p: GameParams) -> GameParams {
    GameParams { c_min: 0.1, ..p }
}

#[test]
fn assumption_examples() {
    let p = positive_floor(GameParams::baseline());
    assert!(check_assumptions(&p, &LINEAR, 11).all_ok);
    assert!(check_assumptions(&p, &CostModel::Quadratic { a: 0.1, b: 0.5 }, 11).all_ok);
    let zero = check_assumptions(&GameParams::baseline(), &LINEAR, 11);
    assert!(!zero.positive_lower_bound);
    assert!(zero.simulation_only);
    assert!(!zero.all_ok);
    let concave = check_assumptions(&p, &CostModel::Quadratic { a: 2.0, b: -0.5 }, 11);
    assert!(!concave.cost_convex);
}

#[test]
fn condition_arithmetic() {
    let base = positive_floor(GameParams::baseline());
    assert!(!theorem1_conditions(&base, &LINEAR).unwrap().rho_ok);

    let strong = GameParams { rho: 3.3, ..base };
    let r = theorem1_conditions(&strong, &LINEAR).unwrap();
    assert!(r.rho_ok && r.gamma_ok);
    assert!(r.gamma_required_scaled < 0.0 && r.gamma_required_unscaled < 0.0);
    assert_abs_diff_eq!(r.penalty_required, (1.0 + 1.5 + 1.1) * 0.9, epsilon = 1e-12);
    assert!(!r.penalty_ok);
    assert!(r.predicted_profile.is_none());

    assert!(theorem1_conditions(&GameParams::baseline(), &LINEAR).is_err());
}

#[test]
fn theorem_holds_when_conditions_do() {
    let p = positive_floor(GameParams {
        rho: 3.3,
        penalty: 3.5,
        ..GameParams::baseline()
    });
    let v = verify_theorem1(&p, &LINEAR, &SolverConfig::default()).unwrap();
    assert!(v.passed);
    assert_eq!(v.conditions.predicted_profile, Some(vec![1.0; 3]));
    for c in v.equilibrium.profile.as_slice() {
        assert_abs_diff_eq!(*c, 1.0, epsilon = 1e-4);
    }
    assert!(verify_theorem1(&positive_floor(GameParams::baseline()), &LINEAR, &SolverConfig::default()).is_err());
}

#[test]
fn lemma_on_baseline() {
    let r = verify_lemma1(&GameParams::baseline(), &LINEAR, &SolverConfig::default(), 25).unwrap();
    assert!(r.passed, "{:?}", r.violations);
    let flat = GameParams {
        gamma_coop: 0.0,
        ..GameParams::baseline()
    };
    let r = verify_lemma1(&flat, &LINEAR, &SolverConfig::default(), 9).unwrap();
    assert!(r.passed);
    for curve in r.curves.iter().filter(|c| c.agent == 2) {
        assert!(curve.points.windows(2).all(|w| w[0].1 == w[1].1));
    }
}

#[test]
fn welfare_rises_with_gamma_and_rho() {
    let cfg = SolverConfig {
        grid_points: 201,
        ..SolverConfig::default()
    };
    for which in [SweepParam::Gamma, SweepParam::Rho] {
        let (lo, hi) = which.default_range();
        let r = comparative_statics(&GameParams::baseline(), &LINEAR, which, lo, hi, 9, &cfg).unwrap();
        assert_eq!(r.expected, Direction::NonDecreasing);
        assert!(r.monotone, "{}: {:?}", r.parameter, r.violations);
    }
}

#[test]
fn threshold_sweep_declines_overall() {
    let r = comparative_statics(
        &GameParams::baseline(),
        &LINEAR,
        SweepParam::Threshold,
        0.5,
        2.0,
        25,
        &SolverConfig::default(),
    )
    .unwrap();
    assert_eq!(r.expected, Direction::NonIncreasing);
    assert!(r.welfare.last().unwrap() < r.welfare.first().unwrap());
}
