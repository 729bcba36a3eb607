//! Numeric checks of the model's assumptions and equilibrium theorems.
//!
//! Nothing here proves anything; each check evaluates the sufficient
//! conditions directly or compares them against solver output.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::TheoryError;
use crate::game::{CostModel, GameParams};
use crate::solver::{best_response_curve, solve_spne, EquilibriumResult, SolverConfig};

/// Absolute welfare tolerance for monotonicity checks.
pub const WELFARE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    /// `c_min > 0`.
    pub positive_lower_bound: bool,
    /// `c_min = 0`: usable for simulation, not for theorem checking.
    pub simulation_only: bool,
    /// `cost'(c) > 0` at every probe.
    pub marginal_cost_positive: bool,
    /// Second finite difference of the cost is non-negative at every probe.
    pub cost_convex: bool,
    pub failures: Vec<String>,
    pub all_ok: bool,
}

pub fn check_assumptions(params: &GameParams, cost: &CostModel, probe_points: usize) -> AssumptionReport {
    let probes = probe_points.max(3);
    let mut failures = Vec::new();
    let positive_lower_bound = params.c_min > 0.0;
    if !positive_lower_bound {
        failures.push(format!(
            "c_min = {} is not positive; simulation-only regime",
            params.c_min
        ));
    }
    if !(params.c_max.is_finite() && params.c_min <= params.c_max) {
        failures.push("contribution bounds are not a finite interval".into());
    }
    let h = params.range() / (probes - 1) as f64;
    let xs: Vec<f64> = (0..probes).map(|k| params.c_min + h * k as f64).collect();

    let mut marginal_cost_positive = true;
    for &x in &xs {
        let m = cost.marginal(x);
        if !(m > 0.0) {
            marginal_cost_positive = false;
            failures.push(format!("marginal cost {m} <= 0 at c = {x}"));
        }
    }
    let mut cost_convex = true;
    for w in xs.windows(3) {
        let d2 = cost.cost(w[0]) - 2.0 * cost.cost(w[1]) + cost.cost(w[2]);
        // rounding slack proportional to the magnitudes involved
        let slack = 1e-12 * (1.0 + cost.cost(w[2]).abs());
        if d2 < -slack {
            cost_convex = false;
            failures.push(format!("second difference {d2} < 0 around c = {}", w[1]));
        }
    }
    AssumptionReport {
        positive_lower_bound,
        simulation_only: !positive_lower_bound,
        marginal_cost_positive,
        cost_convex,
        all_ok: failures.is_empty(),
        failures,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    /// `n * cost'(c_max)`.
    pub rho_required: f64,
    pub rho_margin: f64,
    pub rho_ok: bool,
    /// `(cost'(c_max) * B - rho/n) / (c_min / B)`.
    pub gamma_required_scaled: f64,
    /// `(cost'(c_max) - rho/n) / (c_min / B)`.
    pub gamma_required_unscaled: f64,
    /// The larger of the two forms.
    pub gamma_required: f64,
    pub gamma_margin: f64,
    pub gamma_ok: bool,
    /// `(cost'(c_max) + gamma * c_max / B + rho/n) * (c_max - c_min)`.
    pub penalty_required: f64,
    pub penalty_margin: f64,
    pub penalty_ok: bool,
    pub all_ok: bool,
    /// `(c_max, ..., c_max)` when every condition holds.
    pub predicted_profile: Option<Vec<f64>>,
}

/// Evaluates the sufficient conditions for the all-`c_max` equilibrium.
pub fn theorem1_conditions(params: &GameParams, cost: &CostModel) -> Result<ConditionReport, TheoryError> {
    if !(params.c_min > 0.0) {
        return Err(TheoryError::Precondition(
            "c_min must be positive for the cooperation-coefficient condition".into(),
        ));
    }
    let n = params.n as f64;
    let b = params.threshold;
    let share = params.rho / n;
    let top = cost.marginal(params.c_max);

    let rho_required = n * top;
    let rho_margin = params.rho - rho_required;

    let denom = params.c_min / b;
    let gamma_required_scaled = (top * b - share) / denom;
    let gamma_required_unscaled = (top - share) / denom;
    let gamma_required = gamma_required_scaled.max(gamma_required_unscaled);
    let gamma_margin = params.gamma_coop - gamma_required;

    let penalty_required = (top + params.gamma_coop * params.c_max / b + share) * params.range();
    let penalty_margin = params.penalty - penalty_required;

    let rho_ok = rho_margin > 0.0;
    let gamma_ok = gamma_margin > 0.0;
    let penalty_ok = penalty_margin > 0.0;
    let all_ok = rho_ok && gamma_ok && penalty_ok;
    Ok(ConditionReport {
        rho_required,
        rho_margin,
        rho_ok,
        gamma_required_scaled,
        gamma_required_unscaled,
        gamma_required,
        gamma_margin,
        gamma_ok,
        penalty_required,
        penalty_margin,
        penalty_ok,
        all_ok,
        predicted_profile: all_ok.then(|| vec![params.c_max; params.n]),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Verdict {
    pub passed: bool,
    /// Largest `|c_i - c_max|` of the solved profile.
    pub max_deviation: f64,
    pub conditions: ConditionReport,
    pub equilibrium: EquilibriumResult,
}

/// Solves the game and compares the profile with `(c_max, ..., c_max)`.
/// Refuses to run when the sufficient conditions do not hold.
pub fn verify_theorem1(
    params: &GameParams,
    cost: &CostModel,
    config: &SolverConfig,
) -> Result<Theorem1Verdict, TheoryError> {
    let conditions = theorem1_conditions(params, cost)?;
    if !conditions.all_ok {
        return Err(TheoryError::Precondition(format!(
            "sufficient conditions not met (rho_ok={}, gamma_ok={}, penalty_ok={})",
            conditions.rho_ok, conditions.gamma_ok, conditions.penalty_ok
        )));
    }
    let equilibrium = solve_spne(params, cost, config)?;
    let max_deviation = equilibrium
        .profile
        .as_slice()
        .iter()
        .map(|c| (params.c_max - c).abs())
        .fold(0.0, f64::max);
    Ok(Theorem1Verdict {
        passed: max_deviation <= config.tol,
        max_deviation,
        conditions,
        equilibrium,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseCurve {
    pub agent: usize,
    pub s_prev: f64,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityViolation {
    pub agent: usize,
    pub s_prev: f64,
    pub c_prev: (f64, f64),
    pub response: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub passed: bool,
    /// Allowed decrease between consecutive responses (one grid step).
    pub tolerance: f64,
    pub curves: Vec<ResponseCurve>,
    pub violations: Vec<MonotonicityViolation>,
}

fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count)
        .map(|k| {
            if k + 1 == count {
                hi
            } else {
                lo + (hi - lo) * k as f64 / (count - 1) as f64
            }
        })
        .collect()
}

/// Prior sums probed for agent `agent`: low, middle and high ends of the
/// feasible range `[agent * c_min, agent * c_max]`.
fn representative_sums(params: &GameParams, agent: usize) -> Vec<f64> {
    let lo = agent as f64 * params.c_min;
    let hi = agent as f64 * params.c_max;
    let mut v = linspace(lo, hi, 3);
    v.dedup();
    v
}

/// Checks that every agent after the first responds non-decreasingly to its
/// predecessor's contribution.
pub fn verify_lemma1(
    params: &GameParams,
    cost: &CostModel,
    config: &SolverConfig,
    grid_size: usize,
) -> Result<LemmaReport, TheoryError> {
    if grid_size < 2 {
        return Err(TheoryError::Precondition("grid_size must be at least 2".into()));
    }
    let tolerance = config.grid_step(params);
    let samples = linspace(params.c_min, params.c_max, grid_size);
    let jobs: Vec<(usize, f64)> = (1..params.n)
        .flat_map(|agent| {
            representative_sums(params, agent)
                .into_iter()
                .map(move |s| (agent, s))
        })
        .collect();
    let curves = jobs
        .par_iter()
        .map(|&(agent, s_prev)| {
            best_response_curve(agent, &samples, s_prev, params, cost, config).map(|points| {
                ResponseCurve {
                    agent,
                    s_prev,
                    points,
                }
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let violations: Vec<MonotonicityViolation> = curves
        .iter()
        .flat_map(|curve| {
            curve.points.windows(2).filter_map(move |w| {
                (w[1].1 < w[0].1 - tolerance).then(|| MonotonicityViolation {
                    agent: curve.agent,
                    s_prev: curve.s_prev,
                    c_prev: (w[0].0, w[1].0),
                    response: (w[0].1, w[1].1),
                })
            })
        })
        .collect();
    Ok(LemmaReport {
        passed: violations.is_empty(),
        tolerance,
        curves,
        violations,
    })
}

/// Parameter varied in sweeps and comparative statics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Gamma,
    Rho,
    #[serde(rename = "b", alias = "threshold")]
    Threshold,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::Gamma => "gamma",
            SweepParam::Rho => "rho",
            SweepParam::Threshold => "B",
        }
    }

    /// Default sweep range.
    pub fn default_range(&self) -> (f64, f64) {
        match self {
            SweepParam::Gamma => (0.5, 3.0),
            SweepParam::Rho => (1.0, 3.0),
            SweepParam::Threshold => (0.5, 2.0),
        }
    }

    /// Predicted direction of equilibrium welfare as the parameter grows.
    pub fn expected_direction(&self) -> Direction {
        match self {
            SweepParam::Gamma | SweepParam::Rho => Direction::NonDecreasing,
            SweepParam::Threshold => Direction::NonIncreasing,
        }
    }

    pub fn apply(&self, params: &GameParams, value: f64) -> GameParams {
        let mut p = params.clone();
        match self {
            SweepParam::Gamma => p.gamma_coop = value,
            SweepParam::Rho => p.rho = value,
            SweepParam::Threshold => p.threshold = value,
        }
        p
    }
}

impl std::str::FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gamma" | "gamma_coop" => Ok(SweepParam::Gamma),
            "rho" => Ok(SweepParam::Rho),
            "b" | "threshold" => Ok(SweepParam::Threshold),
            other => Err(format!("unknown sweep parameter '{other}' (gamma, rho, b)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    NonDecreasing,
    NonIncreasing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignViolation {
    pub index: usize,
    pub values: (f64, f64),
    pub welfare: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticsReport {
    pub parameter: String,
    pub values: Vec<f64>,
    pub welfare: Vec<f64>,
    pub expected: Direction,
    pub monotone: bool,
    pub violations: Vec<SignViolation>,
}

/// Evenly spaced values including both ends.
pub fn sweep_values(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    linspace(lo, hi, count)
}

/// Sign-level check of equilibrium welfare against the predicted direction.
pub fn comparative_statics(
    params: &GameParams,
    cost: &CostModel,
    which: SweepParam,
    lo: f64,
    hi: f64,
    count: usize,
    config: &SolverConfig,
) -> Result<StaticsReport, TheoryError> {
    if !(lo < hi) || count < 2 {
        return Err(TheoryError::Precondition("need lo < hi and count >= 2".into()));
    }
    let values = linspace(lo, hi, count);
    let welfare = values
        .par_iter()
        .map(|&v| solve_spne(&which.apply(params, v), cost, config).map(|r| r.welfare))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(sign_report(which, values, welfare))
}

pub(crate) fn sign_report(which: SweepParam, values: Vec<f64>, welfare: Vec<f64>) -> StaticsReport {
    let expected = which.expected_direction();
    let violations: Vec<SignViolation> = (1..welfare.len())
        .filter(|&k| match expected {
            Direction::NonDecreasing => welfare[k] < welfare[k - 1] - WELFARE_TOL,
            Direction::NonIncreasing => welfare[k] > welfare[k - 1] + WELFARE_TOL,
        })
        .map(|k| SignViolation {
            index: k,
            values: (values[k - 1], values[k]),
            welfare: (welfare[k - 1], welfare[k]),
        })
        .collect();
    StaticsReport {
        parameter: which.name().to_string(),
        monotone: violations.is_empty(),
        values,
        welfare,
        expected,
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::ContributionProfile;

    const LINEAR: CostModel = CostModel::Linear { a: 1.0 };

    fn bounded(c_min: f64) -> GameParams {
        GameParams {
            c_min,
            ..GameParams::baseline()
        }
    }

    #[test]
    fn assumption_examples() {
        assert!(check_assumptions(&bounded(0.1), &LINEAR, 11).all_ok);
        let r = check_assumptions(&bounded(0.0), &LINEAR, 11);
        assert!(r.simulation_only && !r.all_ok);
        assert!(r.marginal_cost_positive && r.cost_convex);
        let q = CostModel::Quadratic { a: 0.1, b: 0.5 };
        assert!(check_assumptions(&bounded(0.1), &q, 11).all_ok);
    }

    #[test]
    fn concave_cost_is_flagged() {
        let q = CostModel::Quadratic { a: 1.0, b: -0.3 };
        let r = check_assumptions(&bounded(0.1), &q, 11);
        assert!(!r.cost_convex);
    }

    #[test]
    fn baseline_fails_rho_condition() {
        let r = theorem1_conditions(&bounded(0.1), &LINEAR).unwrap();
        assert!(!r.rho_ok);
        assert!(!r.all_ok);
        assert!(r.predicted_profile.is_none());
    }

    #[test]
    fn condition_arithmetic() {
        let params = GameParams {
            rho: 3.3,
            ..bounded(0.1)
        };
        let r = theorem1_conditions(&params, &LINEAR).unwrap();
        assert!(r.rho_ok);
        assert!(r.gamma_required_scaled < 0.0 && r.gamma_required_unscaled < 0.0);
        assert!(r.gamma_ok);
        assert!((r.penalty_required - 3.24).abs() < 1e-12);
        assert!(!r.penalty_ok);
        let ok = GameParams { penalty: 3.5, ..params };
        assert!(theorem1_conditions(&ok, &LINEAR).unwrap().all_ok);
    }

    #[test]
    fn zero_lower_bound_is_a_precondition_error() {
        assert!(matches!(
            theorem1_conditions(&bounded(0.0), &LINEAR),
            Err(TheoryError::Precondition(_))
        ));
    }

    #[test]
    fn theorem1_holds_on_example() {
        let params = GameParams {
            rho: 3.3,
            penalty: 3.5,
            ..bounded(0.1)
        };
        let v = verify_theorem1(&params, &LINEAR, &SolverConfig::default()).unwrap();
        assert!(v.passed, "{v:?}");
        assert_eq!(v.equilibrium.profile.as_slice(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn theorem1_refuses_baseline() {
        let err = verify_theorem1(&bounded(0.1), &LINEAR, &SolverConfig::default()).unwrap_err();
        assert!(matches!(err, TheoryError::Precondition(_)));
    }

    #[test]
    fn lemma_on_baseline_last_agent_curve() {
        let params = GameParams::baseline();
        let cfg = SolverConfig::default();
        let curve = best_response_curve(2, &[0.2, 0.9], 0.467, &params, &LINEAR, &cfg).unwrap();
        assert!((curve[0].1 - 0.533).abs() < 1e-9);
        assert_eq!(curve[1].1, 1.0);
        let report = verify_lemma1(&params, &LINEAR, &cfg, 25).unwrap();
        assert!(report.passed, "{:?}", report.violations);
    }

    #[test]
    fn lemma_without_synergy_is_flat() {
        let params = GameParams {
            gamma_coop: 0.0,
            ..GameParams::baseline()
        };
        let cfg = SolverConfig::default();
        let report = verify_lemma1(&params, &LINEAR, &cfg, 9).unwrap();
        assert!(report.passed);
        for curve in report.curves.iter().filter(|c| c.agent == 2) {
            let first = curve.points[0].1;
            assert!(curve.points.iter().all(|p| p.1 == first));
        }
    }

    #[test]
    fn duplicate_samples_get_identical_responses() {
        let cfg = SolverConfig::default();
        let curve =
            best_response_curve(1, &[0.3, 0.3, 0.3], 0.3, &GameParams::baseline(), &LINEAR, &cfg).unwrap();
        assert!(curve.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn rho_derivative_at_fixed_profile_matches_finite_difference() {
        let params = GameParams::baseline();
        let profile = ContributionProfile::new(vec![0.3, 0.7, 0.9], &params).unwrap();
        let w = |rho: f64| crate::game::welfare(&profile, &GameParams { rho, ..params.clone() }, &LINEAR);
        let h = 1e-5;
        let fd = (w(params.rho + h) - w(params.rho - h)) / (2.0 * h);
        assert!((fd - 1.9).abs() < 1e-8);
    }

    #[test]
    fn sign_report_flags_reversals() {
        let r = sign_report(SweepParam::Gamma, vec![0.0, 1.0, 2.0], vec![1.0, 0.5, 2.0]);
        assert!(!r.monotone);
        assert_eq!(r.violations.len(), 1);
        let r = sign_report(SweepParam::Threshold, vec![0.0, 1.0], vec![1.0, 1.0 + 1e-7]);
        assert!(r.monotone);
    }

    #[test]
    fn sweep_param_parsing() {
        assert_eq!("B".parse::<SweepParam>().unwrap(), SweepParam::Threshold);
        assert_eq!("gamma".parse::<SweepParam>().unwrap(), SweepParam::Gamma);
        assert!("p".parse::<SweepParam>().is_err());
    }
}
