use approx::assert_abs_diff_eq;
use spgg_core::game::{
    cumulative_sum, reward, success, utilities, welfare, ContributionProfile, CostModel, GameParams,
};

const LINEAR: CostModel = CostModel::Linear { a: 1.0 };

fn profile(c: &[f64]) -> ContributionProfile {
    ContributionProfile::new(c.to_vec(), &GameParams::baseline()).unwrap()
}

/// Term-by-term payoff written out independently of the library.
fn oracle_reward(i: usize, c: &[f64], p: &GameParams) -> f64 {
    let total: f64 = c.iter().sum();
    let prev = if i == 0 { 0.0 } else { c[i - 1] };
    let penalty = if total < p.threshold { p.penalty } else { 0.0 };
    -c[i] + p.gamma_coop * prev / p.threshold * c[i] + p.rho / p.n as f64 * total - penalty
}

#[test]
fn baseline_equilibrium_utilities() {
    let c = [0.267, 1.0, 1.0];
    let u = utilities(&profile(&c), &GameParams::baseline(), &LINEAR);
    for (i, expected) in [1.093, 0.760, 1.860].into_iter().enumerate() {
        assert_abs_diff_eq!(u[i], expected, epsilon = 1e-3);
        assert_abs_diff_eq!(u[i], oracle_reward(i, &c, &GameParams::baseline()), epsilon = 1e-12);
    }
    assert!(u[2] > u[0] && u[0] > u[1]);
    assert_abs_diff_eq!(welfare(&profile(&c), &GameParams::baseline(), &LINEAR), 3.713, epsilon = 2e-3);
}

#[test]
fn rewards_match_oracle_on_random_profiles() {
    let p = GameParams::baseline();
    let mut x = 0.123_f64;
    for _ in 0..200 {
        let c: Vec<f64> = (0..3)
            .map(|_| {
                x = (x * 9301.0 + 0.49297).fract();
                x
            })
            .collect();
        let prof = profile(&c);
        for i in 0..3 {
            let r = reward(i, &prof, &p, &LINEAR).unwrap();
            assert_abs_diff_eq!(r.total, oracle_reward(i, &c, &p), epsilon = 1e-12);
            let parts = r.cost_term + r.synergy_term + r.share_term + r.penalty_term;
            assert_abs_diff_eq!(parts, r.total, epsilon = 1e-12);
        }
    }
}

#[test]
fn first_agent_has_no_synergy() {
    let r = reward(0, &profile(&[0.7, 0.2, 0.9]), &GameParams::baseline(), &LINEAR).unwrap();
    assert_eq!(r.synergy_term, 0.0);
}

#[test]
fn sums_success_and_welfare_examples() {
    let c = profile(&[0.267, 1.0, 1.0]);
    assert_abs_diff_eq!(cumulative_sum(&c, 3).unwrap(), 2.267, epsilon = 1e-12);
    assert_eq!(cumulative_sum(&c, 0).unwrap(), 0.0);
    assert!(cumulative_sum(&c, 4).is_err());

    let p = GameParams::baseline();
    assert!(success(&c, &p));
    assert!(!success(&profile(&[0.0, 0.0, 0.0]), &p));
    assert!(success(&profile(&[0.5, 0.5, 0.0]), &p));

    assert_abs_diff_eq!(welfare(&profile(&[0.0, 0.0, 0.0]), &p, &LINEAR), -1.5, epsilon = 1e-12);
    assert_abs_diff_eq!(welfare(&profile(&[1.0, 1.0, 1.0]), &p, &LINEAR), 5.4, epsilon = 1e-12);
    for u in utilities(&profile(&[0.0, 0.0, 0.0]), &p, &LINEAR) {
        assert_abs_diff_eq!(u, -0.5, epsilon = 1e-12);
    }
}

#[test]
fn out_of_box_profiles_are_rejected() {
    let p = GameParams::baseline();
    assert!(ContributionProfile::new(vec![0.5, 1.2, 0.0], &p).is_err());
    assert!(ContributionProfile::new(vec![0.5, 0.5], &p).is_err());
    assert!(ContributionProfile::new(vec![0.5, f64::NAN, 0.5], &p).is_err());
}
