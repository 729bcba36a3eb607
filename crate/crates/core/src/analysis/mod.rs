//! Parameter sweeps, Pareto-proximity sampling and tabular export.

pub mod export;
mod pareto;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::AnalysisError;
use crate::game::{CostModel, GameParams};
use crate::solver::{solve_spne, SolverConfig};
use crate::theory::{sweep_values, SweepParam};

pub use pareto::{
    dominates, dominates_with_margin, pareto_assess, pareto_assess_samples, pareto_grid,
    sample_profile, ParetoReport, MAX_EXAMPLES,
};

/// How the failure penalty follows the threshold during a `B` sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum PenaltyRule {
    /// Keep the base penalty.
    #[default]
    Fixed,
    /// `P = k * B`.
    Proportional { k: f64 },
}

impl PenaltyRule {
    fn apply(&self, params: &mut GameParams) {
        if let PenaltyRule::Proportional { k } = *self {
            params.penalty = k * params.threshold;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param_name: String,
    pub param_value: f64,
    pub profile: Vec<f64>,
    pub utilities: Vec<f64>,
    pub welfare: f64,
    pub success: bool,
}

/// Parameters used for one sweep point.
pub fn sweep_point_params(
    base: &GameParams,
    which: SweepParam,
    value: f64,
    penalty_rule: PenaltyRule,
) -> GameParams {
    let mut p = which.apply(base, value);
    penalty_rule.apply(&mut p);
    p
}

/// Solves the equilibrium at `count` evenly spaced values of one parameter.
/// Rows come back in ascending parameter order.
pub fn sweep(
    base: &GameParams,
    cost: &CostModel,
    which: SweepParam,
    lo: f64,
    hi: f64,
    count: usize,
    penalty_rule: PenaltyRule,
    config: &SolverConfig,
) -> Result<Vec<SweepRow>, AnalysisError> {
    if count < 2 || !(lo <= hi) {
        return Err(AnalysisError::InvalidArgument(format!(
            "sweep needs count >= 2 and lo <= hi (got {count}, [{lo}, {hi}])"
        )));
    }
    sweep_values(lo, hi, count)
        .par_iter()
        .map(|&value| {
            let params = sweep_point_params(base, which, value, penalty_rule);
            let r = solve_spne(&params, cost, config)?;
            Ok(SweepRow {
                param_name: which.name().to_string(),
                param_value: value,
                profile: r.profile.into_vec(),
                utilities: r.utilities,
                welfare: r.welfare,
                success: r.success,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_sweep_returns_endpoints() {
        let rows = sweep(
            &GameParams::baseline(),
            &CostModel::default(),
            SweepParam::Rho,
            1.0,
            3.0,
            2,
            PenaltyRule::Fixed,
            &SolverConfig { grid_points: 101, ..SolverConfig::default() },
        )
        .unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].param_value, 1.0);
        assert_eq!(rows[1].param_value, 3.0);
        assert_eq!(rows[0].param_name, "rho");
    }

    #[test]
    fn proportional_penalty_rule() {
        let p = sweep_point_params(
            &GameParams::baseline(),
            SweepParam::Threshold,
            1.5,
            PenaltyRule::Proportional { k: 0.5 },
        );
        assert_eq!(p.threshold, 1.5);
        assert_eq!(p.penalty, 0.75);
        let p = sweep_point_params(&GameParams::baseline(), SweepParam::Threshold, 1.5, PenaltyRule::Fixed);
        assert_eq!(p.penalty, 0.5);
    }

    #[test]
    fn rejects_single_point() {
        let err = sweep(
            &GameParams::baseline(),
            &CostModel::default(),
            SweepParam::Gamma,
            0.5,
            3.0,
            1,
            PenaltyRule::Fixed,
            &SolverConfig::default(),
        );
        assert!(matches!(err, Err(AnalysisError::InvalidArgument(_))));
    }
}
