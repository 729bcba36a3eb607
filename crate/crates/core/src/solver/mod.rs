//! Subgame perfect equilibrium by backward induction.
//!
//! Two engines share one search routine:
//!
//! * [`SolverMode::Nested`] evaluates every candidate of agent `i` by
//!   recursively solving agents `i+1..n` (cost grows as `grid^n`).
//! * [`SolverMode::Dp`] tabulates, for each later agent, the final cumulative
//!   sum reached from a history state `(c_prev, s_prev)` and interpolates it
//!   bilinearly. This relies on `(c_prev, s_prev)` being a sufficient
//!   statistic, which holds only for predecessor synergy with the
//!   cumulative-sum success rule.

mod dp;
mod nested;
pub mod search;

use serde::{Deserialize, Serialize};

use crate::error::SolverError;
use crate::game::{
    self, payoff_terms, ContributionProfile, CostModel, GameParams, Outcome, SuccessMode,
    SynergyMode,
};
use search::SearchSettings;

pub use dp::DpTables;

/// Largest agent count accepted in nested mode.
pub const MAX_NESTED_AGENTS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SolverMode {
    #[default]
    Nested,
    Dp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// On payoff ties choose the larger contribution.
    #[default]
    PreferLarger,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub grid_points: usize,
    pub refine_iters: usize,
    /// Contribution tolerance used by equilibrium checks.
    pub tol: f64,
    /// Payoff difference below which two candidates are considered tied.
    pub payoff_tie_eps: f64,
    pub tie_break: TieBreak,
    /// DP grid size along `c_prev`.
    pub dp_c_cells: usize,
    /// DP grid size along `s_prev`.
    pub dp_s_cells: usize,
    pub mode: SolverMode,
    /// Evaluate the top-level candidates on the rayon pool.
    pub parallel: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            grid_points: 401,
            refine_iters: 40,
            tol: 1e-4,
            payoff_tie_eps: 1e-9,
            tie_break: TieBreak::PreferLarger,
            dp_c_cells: 201,
            dp_s_cells: 401,
            mode: SolverMode::Nested,
            parallel: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if self.grid_points < 3 {
            return Err(SolverError::Config("grid_points must be at least 3".into()));
        }
        if !(self.tol > 0.0) {
            return Err(SolverError::Config("tol must be positive".into()));
        }
        if !(self.payoff_tie_eps >= 0.0) {
            return Err(SolverError::Config("payoff_tie_eps must be non-negative".into()));
        }
        if self.mode == SolverMode::Dp && (self.dp_c_cells < 2 || self.dp_s_cells < 2) {
            return Err(SolverError::Config("DP grids need at least 2 cells per axis".into()));
        }
        Ok(())
    }

    pub(crate) fn search(&self, parallel: bool) -> SearchSettings {
        SearchSettings {
            grid_points: self.grid_points,
            refine_iters: self.refine_iters,
            tie_eps: self.payoff_tie_eps,
            parallel,
        }
    }

    /// Spacing of the contribution grid for `params`.
    pub fn grid_step(&self, params: &GameParams) -> f64 {
        params.range() / (self.grid_points - 1) as f64
    }
}

/// Sufficient statistic of a history for the acting agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryState {
    /// Zero-based acting agent.
    pub agent: usize,
    /// Predecessor contribution (0 for the first agent).
    pub c_prev: f64,
    /// Sum of all earlier contributions.
    pub s_prev: f64,
}

impl HistoryState {
    pub fn initial() -> Self {
        Self {
            agent: 0,
            c_prev: 0.0,
            s_prev: 0.0,
        }
    }

    fn check(&self, params: &GameParams) -> Result<(), SolverError> {
        if self.agent >= params.n {
            return Err(SolverError::Config(format!(
                "agent {} out of range for n = {}",
                self.agent, params.n
            )));
        }
        if !self.c_prev.is_finite() || !self.s_prev.is_finite() || self.s_prev < 0.0 {
            return Err(SolverError::Config(format!("invalid history state {self:?}")));
        }
        Ok(())
    }
}

/// Smallest own contribution that keeps success reachable when all successors
/// contribute `c_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyBoundary {
    /// The boundary clamped to `[c_min, c_max]`.
    pub contribution: f64,
    /// False when even `c_max` from this agent cannot reach the threshold.
    pub reachable: bool,
}

pub fn min_penalty_avoiding_contribution(state: &HistoryState, params: &GameParams) -> PenaltyBoundary {
    let successors = params.n.saturating_sub(state.agent + 1) as f64;
    let raw = match params.success_mode {
        SuccessMode::CumulativeSum => params.threshold - state.s_prev - successors * params.c_max,
        SuccessMode::FinalScore => {
            if state.agent + 1 == params.n {
                params.threshold
            } else {
                params.c_min
            }
        }
    };
    let reachable = match params.success_mode {
        SuccessMode::CumulativeSum => raw <= params.c_max,
        SuccessMode::FinalScore => params.threshold <= params.c_max,
    };
    PenaltyBoundary {
        contribution: raw.max(params.c_min).min(params.c_max),
        reachable,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestResponse {
    pub contribution: f64,
    /// The acting agent's payoff when successors follow their best responses.
    pub value: f64,
    /// On-path contributions of the successors.
    pub continuation: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub mode: SolverMode,
    /// Contribution grid spacing.
    pub grid_step: f64,
    /// Smallest golden-section bracket reached at the top level.
    pub bracket_error: f64,
    /// DP cell width along `c_prev` (DP mode only).
    pub dp_cell_width: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumResult {
    pub profile: ContributionProfile,
    pub utilities: Vec<f64>,
    pub welfare: f64,
    pub success: bool,
    pub diagnostics: Diagnostics,
}

/// The last mover's payoff is concave between penalty jumps when the synergy
/// term is linear in its own contribution (convex cost, linear share).
pub(crate) fn leaf_is_concave(params: &GameParams, cost: &CostModel, agent: usize) -> bool {
    agent + 1 == params.n && params.synergy_mode == SynergyMode::Predecessor && cost.is_convex()
}

/// With a linear or quadratic cost the concave leaf is a quadratic between
/// penalty jumps, so piece ends and its vertex are enough.
pub(crate) fn leaf_is_closed_form(params: &GameParams, cost: &CostModel, agent: usize) -> bool {
    leaf_is_concave(params, cost, agent) && !matches!(cost, CostModel::InverseSigmoid { .. })
}

/// Stationary point of a closed-form leaf, shared by all its pieces; `None`
/// when the leaf is affine.
pub(crate) fn leaf_vertex(params: &GameParams, cost: &CostModel, c_prev: f64) -> Option<f64> {
    match *cost {
        CostModel::Quadratic { a, b } if b > 0.0 => {
            let slope = params.gamma_coop * c_prev / params.threshold + params.rho / params.n as f64;
            Some((slope - a) / (2.0 * b))
        }
        _ => None,
    }
}

/// Payoff of the acting agent for a candidate given how the game ends.
pub(crate) fn stage_value(
    params: &GameParams,
    cost: &CostModel,
    own: f64,
    c_prev: f64,
    outcome: Outcome,
) -> f64 {
    payoff_terms(params, cost.cost(own), own, c_prev, outcome).total
}

fn check_inputs(params: &GameParams, cost: &CostModel, config: &SolverConfig) -> Result<(), SolverError> {
    params.validate()?;
    cost.validate()?;
    config.validate()?;
    match config.mode {
        SolverMode::Nested if params.n > MAX_NESTED_AGENTS => Err(SolverError::Config(format!(
            "nested mode supports at most {MAX_NESTED_AGENTS} agents (got {}); use dp mode",
            params.n
        ))),
        SolverMode::Dp
            if params.success_mode != SuccessMode::CumulativeSum
                || params.synergy_mode != SynergyMode::Predecessor =>
        {
            Err(SolverError::Config(
                "dp mode requires predecessor synergy and cumulative-sum success".into(),
            ))
        }
        _ => Ok(()),
    }
}

fn finish(
    params: &GameParams,
    cost: &CostModel,
    config: &SolverConfig,
    contributions: Vec<f64>,
    bracket: f64,
) -> EquilibriumResult {
    let profile = ContributionProfile::from_trusted(contributions);
    let utilities = game::utilities(&profile, params, cost);
    let welfare = utilities.iter().sum();
    let success = game::success(&profile, params);
    EquilibriumResult {
        profile,
        utilities,
        welfare,
        success,
        diagnostics: Diagnostics {
            mode: config.mode,
            grid_step: config.grid_step(params),
            bracket_error: bracket,
            dp_cell_width: (config.mode == SolverMode::Dp)
                .then(|| params.range() / (config.dp_c_cells - 1) as f64),
        },
    }
}

/// Best response of `state.agent` with successors at their recursive best
/// responses.
pub fn best_response(
    state: &HistoryState,
    params: &GameParams,
    cost: &CostModel,
    config: &SolverConfig,
) -> Result<BestResponse, SolverError> {
    check_inputs(params, cost, config)?;
    state.check(params)?;
    Ok(match config.mode {
        SolverMode::Nested => nested::Nested::new(params, cost, config).best_response(state),
        SolverMode::Dp => {
            let tables = DpTables::build(params, cost, config);
            tables.best_response(state)
        }
    })
}

/// On-path equilibrium profile played forward from the empty history.
pub fn solve_spne(
    params: &GameParams,
    cost: &CostModel,
    config: &SolverConfig,
) -> Result<EquilibriumResult, SolverError> {
    check_inputs(params, cost, config)?;
    let (contributions, bracket) = match config.mode {
        SolverMode::Nested => nested::Nested::new(params, cost, config).play(),
        SolverMode::Dp => DpTables::build(params, cost, config).play(),
    };
    Ok(finish(params, cost, config, contributions, bracket))
}

/// Best responses of `agent` to each predecessor contribution in `c_prev`,
/// holding the prior sum at `s_prev`.
pub fn best_response_curve(
    agent: usize,
    c_prev: &[f64],
    s_prev: f64,
    params: &GameParams,
    cost: &CostModel,
    config: &SolverConfig,
) -> Result<Vec<(f64, f64)>, SolverError> {
    check_inputs(params, cost, config)?;
    let dp = (config.mode == SolverMode::Dp).then(|| DpTables::build(params, cost, config));
    let nested = nested::Nested::new(params, cost, config);
    c_prev
        .iter()
        .map(|&cp| {
            let state = HistoryState {
                agent,
                c_prev: cp,
                s_prev,
            };
            state.check(params)?;
            let c = match &dp {
                Some(t) => t.best_contribution(&state).0,
                None => nested.best(&state, false).0,
            };
            Ok((cp, c))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINEAR: CostModel = CostModel::Linear { a: 1.0 };

    #[test]
    fn penalty_boundary_examples() {
        let params = GameParams::baseline();
        let b = min_penalty_avoiding_contribution(
            &HistoryState { agent: 2, c_prev: 0.2, s_prev: 0.467 },
            &params,
        );
        assert!((b.contribution - 0.533).abs() < 1e-12);
        assert!(b.reachable);
        let b = min_penalty_avoiding_contribution(&HistoryState::initial(), &params);
        assert_eq!(b.contribution, params.c_min);
        let high = GameParams { threshold: 2.5, ..params };
        let b = min_penalty_avoiding_contribution(
            &HistoryState { agent: 2, c_prev: 0.0, s_prev: 0.0 },
            &high,
        );
        assert_eq!(b.contribution, 1.0);
        assert!(!b.reachable);
    }

    #[test]
    fn last_agent_best_responses() {
        let params = GameParams::baseline();
        let cfg = SolverConfig::default();
        let br = |c_prev, s_prev| {
            best_response(&HistoryState { agent: 2, c_prev, s_prev }, &params, &LINEAR, &cfg)
                .unwrap()
        };
        assert_eq!(br(1.0, 1.267).contribution, 1.0);
        assert!((br(0.2, 0.467).contribution - 0.533).abs() < 1e-9);
        assert!(br(0.2, 0.467).continuation.is_empty());
    }

    #[test]
    fn middle_agent_best_response() {
        let params = GameParams::baseline();
        let r = best_response(
            &HistoryState { agent: 1, c_prev: 0.267, s_prev: 0.267 },
            &params,
            &LINEAR,
            &SolverConfig::default(),
        )
        .unwrap();
        assert_eq!(r.contribution, 1.0);
        assert_eq!(r.continuation, vec![1.0]);
    }

    #[test]
    fn nested_rejects_too_many_agents() {
        let params = GameParams { n: 7, ..GameParams::baseline() };
        let err = solve_spne(&params, &LINEAR, &SolverConfig::default()).unwrap_err();
        assert!(matches!(err, SolverError::Config(_)));
    }

    #[test]
    fn dp_rejects_variant_modes() {
        let params = GameParams {
            success_mode: SuccessMode::FinalScore,
            ..GameParams::baseline()
        };
        let cfg = SolverConfig { mode: SolverMode::Dp, ..SolverConfig::default() };
        assert!(matches!(solve_spne(&params, &LINEAR, &cfg), Err(SolverError::Config(_))));
    }

    #[test]
    fn bad_config_rejected() {
        let cfg = SolverConfig { grid_points: 2, ..SolverConfig::default() };
        assert!(solve_spne(&GameParams::baseline(), &LINEAR, &cfg).is_err());
    }
}
