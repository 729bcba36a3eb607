//! Payoff model of the sequential public goods game.
//!
//! Agents `0..n` contribute in order. Agent `i` receives
//!
//! ```text
//! R_i = -cost(c_i) + gamma * (x_i / B) * c_i + (rho / n) * C - P * 1(C < B)
//! ```
//!
//! where `x_i` is the predecessor's contribution `c_{i-1}` (with `c_{-1} = 0`)
//! under [`SynergyMode::Predecessor`], or `c_i` itself under
//! [`SynergyMode::SelfScore`], and the aggregate `C` is either the cumulative
//! sum `S_n` or the final agent's contribution `c_n` depending on
//! [`SuccessMode`]. Agent indices are zero-based throughout the crate.

use serde::{Deserialize, Serialize};

use crate::error::GameError;

/// Which aggregate of the profile drives the shared term and the success test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SuccessMode {
    /// `C = S_n = c_1 + ... + c_n`.
    #[default]
    CumulativeSum,
    /// `C = c_n`.
    FinalScore,
}

/// Numerator of the synergy bonus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SynergyMode {
    /// `gamma * (c_{i-1} / B) * c_i`.
    #[default]
    Predecessor,
    /// `gamma * (c_i / B) * c_i`.
    #[serde(rename = "self")]
    SelfScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameParams {
    /// Number of agents.
    pub n: usize,
    /// Cooperation coefficient scaling the synergy bonus.
    pub gamma_coop: f64,
    /// Reward multiplier of the shared term.
    pub rho: f64,
    /// Task success threshold `B`.
    pub threshold: f64,
    /// Collective failure penalty `P`.
    pub penalty: f64,
    pub c_min: f64,
    pub c_max: f64,
    #[serde(default)]
    pub success_mode: SuccessMode,
    #[serde(default)]
    pub synergy_mode: SynergyMode,
}

impl GameParams {
    /// The three-agent setting used for the backward-induction study:
    /// `gamma = 1.5`, `rho = 1.8`, `B = 1`, `P = 0.5`, `c in [0, 1]`.
    pub fn baseline() -> Self {
        Self {
            n: 3,
            gamma_coop: 1.5,
            rho: 1.8,
            threshold: 1.0,
            penalty: 0.5,
            c_min: 0.0,
            c_max: 1.0,
            success_mode: SuccessMode::CumulativeSum,
            synergy_mode: SynergyMode::Predecessor,
        }
    }

    pub fn validate(&self) -> Result<(), GameError> {
        let finite = [
            self.gamma_coop,
            self.rho,
            self.threshold,
            self.penalty,
            self.c_min,
            self.c_max,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(GameError::InvalidParams("all parameters must be finite".into()));
        }
        if self.n == 0 {
            return Err(GameError::InvalidParams("n must be at least 1".into()));
        }
        if self.gamma_coop < 0.0 || self.rho < 0.0 || self.penalty < 0.0 {
            return Err(GameError::InvalidParams(
                "gamma_coop, rho and penalty must be non-negative".into(),
            ));
        }
        if self.threshold <= 0.0 {
            return Err(GameError::InvalidParams("threshold must be positive".into()));
        }
        if !(0.0 <= self.c_min && self.c_min <= self.c_max) {
            return Err(GameError::InvalidParams(format!(
                "contribution bounds must satisfy 0 <= c_min <= c_max (got [{}, {}])",
                self.c_min, self.c_max
            )));
        }
        Ok(())
    }

    /// Width of the contribution interval.
    pub fn range(&self) -> f64 {
        self.c_max - self.c_min
    }

    pub fn clamp(&self, c: f64) -> f64 {
        c.clamp(self.c_min, self.c_max)
    }
}

/// Individual cost of producing a contribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CostModel {
    /// `cost(c) = a * c`.
    Linear { a: f64 },
    /// `cost(c) = a * c + b * c^2`.
    Quadratic { a: f64, b: f64 },
    /// Cost of reaching score `c` in `(0, 1)` on a sigmoid response surface
    /// `c = sigmoid(z)`. Free inputs already give logit `free_logit`; the
    /// priced input moves the logit by `2 * weight` over its whole range and
    /// costs `kappa` per unit of that range. Scores beyond reach cost infinity.
    InverseSigmoid { kappa: f64, weight: f64, free_logit: f64 },
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel::Linear { a: 1.0 }
    }
}

impl CostModel {
    pub fn cost(&self, c: f64) -> f64 {
        match *self {
            CostModel::Linear { a } => a * c,
            CostModel::Quadratic { a, b } => a * c + b * c * c,
            CostModel::InverseSigmoid { kappa, .. } => match self.priced_share(c) {
                Some(share) => kappa * share,
                None => f64::INFINITY,
            },
        }
    }

    /// Share of the priced input's range needed for `c`, `None` if out of reach.
    fn priced_share(&self, c: f64) -> Option<f64> {
        let CostModel::InverseSigmoid { weight, free_logit, .. } = *self else {
            return Some(0.0);
        };
        let logit = if c <= 0.0 {
            f64::NEG_INFINITY
        } else if c >= 1.0 {
            f64::INFINITY
        } else {
            (c / (1.0 - c)).ln()
        };
        let share = (logit - free_logit) / (2.0 * weight);
        (share <= 1.0 + 1e-9).then(|| share.clamp(0.0, 1.0))
    }

    /// Whether `cost` is convex on `[0, 1]`.
    pub fn is_convex(&self) -> bool {
        match *self {
            CostModel::Linear { .. } => true,
            CostModel::Quadratic { b, .. } => b >= 0.0,
            // the logit is convex above one half only
            CostModel::InverseSigmoid { free_logit, .. } => free_logit >= 0.0,
        }
    }

    pub fn marginal(&self, c: f64) -> f64 {
        match *self {
            CostModel::Linear { a } => a,
            CostModel::Quadratic { a, b } => a + 2.0 * b * c,
            CostModel::InverseSigmoid { kappa, weight, .. } => match self.priced_share(c) {
                Some(share) if share > 0.0 => kappa / (2.0 * weight * c * (1.0 - c)),
                Some(_) => 0.0,
                None => f64::INFINITY,
            },
        }
    }

    pub fn validate(&self) -> Result<(), GameError> {
        let ok = match *self {
            CostModel::Linear { a } => a.is_finite() && a > 0.0,
            CostModel::Quadratic { a, b } => a.is_finite() && b.is_finite() && a > 0.0 && b >= 0.0,
            CostModel::InverseSigmoid {
                kappa,
                weight,
                free_logit,
            } => kappa.is_finite() && weight.is_finite() && free_logit.is_finite() && kappa > 0.0 && weight > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(GameError::InvalidCost(format!("{self:?}")))
        }
    }
}

/// Ordered contributions `c_1..c_n` of one play of the game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ContributionProfile(Vec<f64>);

impl ContributionProfile {
    /// Checks length and bounds against `params`.
    pub fn new(contributions: Vec<f64>, params: &GameParams) -> Result<Self, GameError> {
        if contributions.len() != params.n {
            return Err(GameError::ProfileLength {
                expected: params.n,
                got: contributions.len(),
            });
        }
        if let Some((index, &value)) = contributions
            .iter()
            .enumerate()
            .find(|(_, c)| !(params.c_min..=params.c_max).contains(*c))
        {
            return Err(GameError::OutOfBounds {
                index,
                value,
                c_min: params.c_min,
                c_max: params.c_max,
            });
        }
        Ok(Self(contributions))
    }

    /// Wraps contributions that are already known to be in bounds.
    pub(crate) fn from_trusted(contributions: Vec<f64>) -> Self {
        Self(contributions)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// Per-agent payoff split into its four additive terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub cost_term: f64,
    pub synergy_term: f64,
    pub share_term: f64,
    pub penalty_term: f64,
    pub total: f64,
}

/// The end-of-game quantities a single agent's payoff depends on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    /// `S_n`.
    pub sum: f64,
    /// `c_n`.
    pub last: f64,
}

impl Outcome {
    pub fn aggregate(&self, mode: SuccessMode) -> f64 {
        match mode {
            SuccessMode::CumulativeSum => self.sum,
            SuccessMode::FinalScore => self.last,
        }
    }
}

/// `S_k = c_1 + ... + c_k`; `k = 0` is the empty sum.
pub fn cumulative_sum(profile: &ContributionProfile, k: usize) -> Result<f64, GameError> {
    if k > profile.len() {
        return Err(GameError::IndexOutOfRange {
            index: k,
            len: profile.len(),
        });
    }
    Ok(profile.0[..k].iter().sum())
}

/// Payoff of one agent from its own contribution, its predecessor's, the
/// end-of-game outcome and a precomputed cost. Shared by every caller that
/// evaluates rewards so the formula lives in exactly one place.
pub fn payoff_terms(
    params: &GameParams,
    cost_value: f64,
    own: f64,
    predecessor: f64,
    outcome: Outcome,
) -> RewardBreakdown {
    let cost_term = -cost_value;
    let numerator = match params.synergy_mode {
        SynergyMode::Predecessor => predecessor,
        SynergyMode::SelfScore => own,
    };
    let synergy_term = params.gamma_coop * (numerator / params.threshold) * own;
    let aggregate = outcome.aggregate(params.success_mode);
    let share_term = params.rho / params.n as f64 * aggregate;
    let penalty_term = if aggregate < params.threshold {
        -params.penalty
    } else {
        0.0
    };
    RewardBreakdown {
        cost_term,
        synergy_term,
        share_term,
        penalty_term,
        total: cost_term + synergy_term + share_term + penalty_term,
    }
}

fn outcome_of(profile: &ContributionProfile) -> Outcome {
    Outcome {
        sum: profile.0.iter().sum(),
        last: profile.0.last().copied().unwrap_or(0.0),
    }
}

/// Reward of `agent` when its cost is supplied externally (e.g. by an
/// environment whose cost is not a function of the score).
pub fn reward_with_cost(
    agent: usize,
    profile: &ContributionProfile,
    params: &GameParams,
    cost_value: f64,
) -> Result<RewardBreakdown, GameError> {
    if agent >= profile.len() {
        return Err(GameError::IndexOutOfRange {
            index: agent,
            len: profile.len(),
        });
    }
    let c = profile.0[agent];
    let predecessor = if agent == 0 { 0.0 } else { profile.0[agent - 1] };
    Ok(payoff_terms(params, cost_value, c, predecessor, outcome_of(profile)))
}

pub fn reward(
    agent: usize,
    profile: &ContributionProfile,
    params: &GameParams,
    cost: &CostModel,
) -> Result<RewardBreakdown, GameError> {
    let c = profile
        .0
        .get(agent)
        .copied()
        .ok_or(GameError::IndexOutOfRange {
            index: agent,
            len: profile.len(),
        })?;
    reward_with_cost(agent, profile, params, cost.cost(c))
}

/// Totals of every agent's reward, in order.
pub fn utilities(profile: &ContributionProfile, params: &GameParams, cost: &CostModel) -> Vec<f64> {
    (0..profile.len())
        .map(|i| {
            reward(i, profile, params, cost)
                .expect("index within profile")
                .total
        })
        .collect()
}

pub fn success(profile: &ContributionProfile, params: &GameParams) -> bool {
    outcome_of(profile).aggregate(params.success_mode) >= params.threshold
}

/// Total welfare `W = sum_i R_i`.
pub fn welfare(profile: &ContributionProfile, params: &GameParams, cost: &CostModel) -> f64 {
    utilities(profile, params, cost).iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn profile(v: &[f64]) -> ContributionProfile {
        ContributionProfile::new(v.to_vec(), &GameParams::baseline()).unwrap()
    }

    const LINEAR: CostModel = CostModel::Linear { a: 1.0 };

    #[test]
    fn cumulative_sum_examples() {
        let p = profile(&[0.267, 1.0, 1.0]);
        assert_abs_diff_eq!(cumulative_sum(&p, 3).unwrap(), 2.267, epsilon = 1e-12);
        assert_eq!(cumulative_sum(&p, 0).unwrap(), 0.0);
        assert_abs_diff_eq!(
            cumulative_sum(&profile(&[0.5, 0.5, 0.5]), 2).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert!(matches!(
            cumulative_sum(&p, 4),
            Err(GameError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn baseline_rewards_match_hand_arithmetic() {
        let params = GameParams::baseline();
        let p = profile(&[0.267, 1.0, 1.0]);
        // agent 1: -0.267 + 0 + 0.6 * 2.267
        let r1 = reward(0, &p, &params, &LINEAR).unwrap();
        assert_eq!(r1.synergy_term, 0.0);
        assert_abs_diff_eq!(r1.total, -0.267 + 0.6 * 2.267, epsilon = 1e-12);
        // agent 2: -1 + 1.5 * 0.267 + 0.6 * 2.267
        let r2 = reward(1, &p, &params, &LINEAR).unwrap();
        assert_abs_diff_eq!(r2.total, -1.0 + 1.5 * 0.267 + 0.6 * 2.267, epsilon = 1e-12);
        let r3 = reward(2, &p, &params, &LINEAR).unwrap();
        assert_abs_diff_eq!(r3.total, 1.8602, epsilon = 1e-12);
        assert_abs_diff_eq!(r1.total, 1.0932, epsilon = 1e-12);
        assert_abs_diff_eq!(r2.total, 0.7607, epsilon = 1e-12);
    }

    #[test]
    fn zero_profile_pays_only_the_penalty() {
        let params = GameParams::baseline();
        let p = profile(&[0.0, 0.0, 0.0]);
        for i in 0..3 {
            assert_eq!(reward(i, &p, &params, &LINEAR).unwrap().total, -0.5);
        }
        assert!(!success(&p, &params));
        assert_eq!(welfare(&p, &params, &LINEAR), -1.5);
    }

    #[test]
    fn success_boundary_counts_as_success() {
        let params = GameParams::baseline();
        assert!(success(&profile(&[0.5, 0.5, 0.0]), &params));
        assert!(success(&profile(&[0.267, 1.0, 1.0]), &params));
    }

    #[test]
    fn welfare_examples() {
        let params = GameParams::baseline();
        assert_abs_diff_eq!(
            welfare(&profile(&[0.267, 1.0, 1.0]), &params, &LINEAR),
            1.0932 + 0.7607 + 1.8602,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            welfare(&profile(&[1.0, 1.0, 1.0]), &params, &LINEAR),
            5.4,
            epsilon = 1e-12
        );
    }

    #[test]
    fn final_score_and_self_modes() {
        let mut params = GameParams::baseline();
        params.success_mode = SuccessMode::FinalScore;
        params.synergy_mode = SynergyMode::SelfScore;
        let p = profile(&[1.0, 1.0, 0.5]);
        assert!(!success(&p, &params));
        let r = reward(0, &p, &params, &LINEAR).unwrap();
        assert_abs_diff_eq!(r.synergy_term, 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.share_term, 0.6 * 0.5, epsilon = 1e-12);
        assert_eq!(r.penalty_term, -0.5);
    }

    #[test]
    fn profile_validation() {
        let params = GameParams::baseline();
        assert!(matches!(
            ContributionProfile::new(vec![0.1, 0.2], &params),
            Err(GameError::ProfileLength { .. })
        ));
        assert!(matches!(
            ContributionProfile::new(vec![0.1, 1.2, 0.0], &params),
            Err(GameError::OutOfBounds { index: 1, .. })
        ));
    }

    #[test]
    fn params_validation() {
        let mut p = GameParams::baseline();
        assert!(p.validate().is_ok());
        p.threshold = 0.0;
        assert!(p.validate().is_err());
        let mut p = GameParams::baseline();
        p.c_min = 2.0;
        assert!(p.validate().is_err());
        assert!(CostModel::Linear { a: 0.0 }.validate().is_err());
    }

    fn arb_case() -> impl Strategy<Value = (GameParams, Vec<f64>, CostModel)> {
        (1usize..6, 0.0..3.0f64, 0.0..4.0f64, 0.1..3.0f64, 0.0..2.0f64, 0.1..2.0f64, 0.0..1.0f64)
            .prop_flat_map(|(n, g, r, b, pen, a, qb)| {
                let params = GameParams {
                    n,
                    gamma_coop: g,
                    rho: r,
                    threshold: b,
                    penalty: pen,
                    ..GameParams::baseline()
                };
                (
                    Just(params),
                    proptest::collection::vec(0.0..=1.0f64, n),
                    prop_oneof![
                        Just(CostModel::Linear { a }),
                        Just(CostModel::Quadratic { a, b: qb })
                    ],
                )
            })
    }

    proptest! {
        #[test]
        fn reward_decomposes_and_penalty_is_dichotomous((params, c, cost) in arb_case()) {
            let p = ContributionProfile::new(c, &params).unwrap();
            let ok = success(&p, &params);
            for i in 0..params.n {
                let r = reward(i, &p, &params, &cost).unwrap();
                prop_assert_eq!(r.total, r.cost_term + r.synergy_term + r.share_term + r.penalty_term);
                prop_assert!(r.cost_term <= 0.0);
                prop_assert_eq!(r.penalty_term, if ok { 0.0 } else { -params.penalty });
                if i == 0 {
                    prop_assert_eq!(r.synergy_term, 0.0);
                }
            }
        }

        #[test]
        fn welfare_is_linear_in_rho((params, c, cost) in arb_case(), rho2 in 0.0..4.0f64) {
            let p = ContributionProfile::new(c, &params).unwrap();
            let w1 = welfare(&p, &params, &cost);
            let shifted = GameParams { rho: rho2, ..params.clone() };
            let w2 = welfare(&p, &shifted, &cost);
            let s: f64 = p.as_slice().iter().sum();
            prop_assert!((w2 - w1 - (rho2 - params.rho) * s).abs() < 1e-9);
        }

        #[test]
        fn without_incentives_reward_is_negative_cost((params, c, cost) in arb_case()) {
            let params = GameParams { gamma_coop: 0.0, rho: 0.0, penalty: 0.0, ..params };
            let p = ContributionProfile::new(c, &params).unwrap();
            for i in 0..params.n {
                let r = reward(i, &p, &params, &cost).unwrap();
                prop_assert_eq!(r.total, -cost.cost(p.as_slice()[i]));
            }
        }
    }
}
