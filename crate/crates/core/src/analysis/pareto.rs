//! Monte Carlo search for profiles that Pareto-dominate the equilibrium.
//!
//! Sample `k` of a run with seed `s` is drawn from its own ChaCha8 stream:
//! the generator is seeded with `s` and switched to stream `k` before the
//! `n` uniform draws. Samples are therefore independent of evaluation order
//! and thread count.

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::AnalysisError;
use crate::game::{utilities, ContributionProfile, CostModel, GameParams};
use crate::solver::{solve_spne, SolverConfig};

/// Cap on the dominating profiles kept in a report.
pub const MAX_EXAMPLES: usize = 10;

/// `u` weakly improves on `v` everywhere and strictly somewhere.
pub fn dominates(u: &[f64], v: &[f64]) -> Result<bool, AnalysisError> {
    dominates_with_margin(u, v, 0.0)
}

/// Dominance where improvements must exceed `margin` to count as strict and
/// shortfalls up to `margin` are forgiven. `margin = 0` is exact comparison.
pub fn dominates_with_margin(u: &[f64], v: &[f64], margin: f64) -> Result<bool, AnalysisError> {
    if u.len() != v.len() {
        return Err(AnalysisError::LengthMismatch(u.len(), v.len()));
    }
    let weakly = u.iter().zip(v).all(|(a, b)| *a >= *b - margin);
    let strictly = u.iter().zip(v).any(|(a, b)| *a > *b + margin);
    Ok(weakly && strictly)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoReport {
    pub sample_count: usize,
    pub seed: u64,
    pub dominating_count: usize,
    pub spne_profile: Vec<f64>,
    pub spne_utilities: Vec<f64>,
    /// Up to [`MAX_EXAMPLES`] dominating profiles, lowest sample index first.
    pub examples: Vec<Vec<f64>>,
}

/// The `index`-th uniform profile of the stream family seeded by `seed`.
pub fn sample_profile(params: &GameParams, seed: u64, index: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let dist = Uniform::new_inclusive(params.c_min, params.c_max);
    (0..params.n).map(|_| dist.sample(&mut rng)).collect()
}

fn count_dominating<I>(
    params: &GameParams,
    cost: &CostModel,
    baseline: &[f64],
    profiles: I,
) -> (usize, Vec<Vec<f64>>)
where
    I: IndexedParallelIterator<Item = Vec<f64>>,
{
    let hits: Vec<Option<Vec<f64>>> = profiles
        .map(|c| {
            let u = utilities(&ContributionProfile::from_trusted(c.clone()), params, cost);
            dominates(&u, baseline).expect("equal lengths").then_some(c)
        })
        .collect();
    let count = hits.iter().filter(|h| h.is_some()).count();
    let examples = hits.into_iter().flatten().take(MAX_EXAMPLES).collect();
    (count, examples)
}

/// Samples `sample_count` uniform profiles and counts those dominating the
/// equilibrium utilities.
pub fn pareto_assess(
    params: &GameParams,
    cost: &CostModel,
    sample_count: usize,
    seed: u64,
    config: &SolverConfig,
) -> Result<ParetoReport, AnalysisError> {
    if sample_count == 0 {
        return Err(AnalysisError::InvalidArgument("sample_count must be at least 1".into()));
    }
    let spne = solve_spne(params, cost, config)?;
    let (dominating_count, examples) = count_dominating(
        params,
        cost,
        &spne.utilities,
        (0..sample_count)
            .into_par_iter()
            .map(|k| sample_profile(params, seed, k as u64)),
    );
    Ok(ParetoReport {
        sample_count,
        seed,
        dominating_count,
        spne_profile: spne.profile.into_vec(),
        spne_utilities: spne.utilities,
        examples,
    })
}

/// Same count over caller-supplied profiles (validated against `params`).
pub fn pareto_assess_samples(
    params: &GameParams,
    cost: &CostModel,
    spne_profile: &ContributionProfile,
    samples: &[Vec<f64>],
    seed: u64,
) -> Result<ParetoReport, AnalysisError> {
    if samples.is_empty() {
        return Err(AnalysisError::InvalidArgument("no samples".into()));
    }
    for s in samples {
        ContributionProfile::new(s.clone(), params).map_err(|e| AnalysisError::InvalidArgument(e.to_string()))?;
    }
    let baseline = utilities(spne_profile, params, cost);
    let (dominating_count, examples) =
        count_dominating(params, cost, &baseline, samples.to_vec().into_par_iter());
    Ok(ParetoReport {
        sample_count: samples.len(),
        seed,
        dominating_count,
        spne_profile: spne_profile.as_slice().to_vec(),
        spne_utilities: baseline,
        examples,
    })
}

/// Exhaustive check over the regular grid with `points_per_axis` values per
/// coordinate.
pub fn pareto_grid(
    params: &GameParams,
    cost: &CostModel,
    spne_profile: &ContributionProfile,
    points_per_axis: usize,
) -> Result<ParetoReport, AnalysisError> {
    if points_per_axis < 2 {
        return Err(AnalysisError::InvalidArgument("need at least 2 points per axis".into()));
    }
    let axis: Vec<f64> = (0..points_per_axis)
        .map(|k| {
            if k + 1 == points_per_axis {
                params.c_max
            } else {
                params.c_min + params.range() * k as f64 / (points_per_axis - 1) as f64
            }
        })
        .collect();
    let total = points_per_axis.pow(params.n as u32);
    let baseline = utilities(spne_profile, params, cost);
    let (dominating_count, examples) = count_dominating(
        params,
        cost,
        &baseline,
        (0..total).into_par_iter().map(|mut idx| {
            let mut c = vec![0.0; params.n];
            for slot in c.iter_mut() {
                *slot = axis[idx % points_per_axis];
                idx /= points_per_axis;
            }
            c
        }),
    );
    Ok(ParetoReport {
        sample_count: total,
        seed: 0,
        dominating_count,
        spne_profile: spne_profile.as_slice().to_vec(),
        spne_utilities: baseline,
        examples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn dominance_examples() {
        assert!(dominates(&[1.093, 0.760, 1.860], &[-0.5, -0.5, -0.5]).unwrap());
        let u = [0.3, 0.2, 0.1];
        assert!(!dominates(&u, &u).unwrap());
        assert!(!dominates(&[1.0, 0.0, 2.0], &[0.0, 1.0, 1.0]).unwrap());
        assert!(matches!(
            dominates(&[1.0], &[1.0, 2.0]),
            Err(AnalysisError::LengthMismatch(1, 2))
        ));
    }

    #[test]
    fn margin_variant() {
        assert!(!dominates_with_margin(&[1.0 + 1e-9, 1.0], &[1.0, 1.0], 1e-6).unwrap());
        assert!(dominates_with_margin(&[1.1, 1.0 - 1e-9], &[1.0, 1.0], 1e-6).unwrap());
    }

    #[test]
    fn streams_are_stable_and_distinct() {
        let p = GameParams::baseline();
        assert_eq!(sample_profile(&p, 7, 3), sample_profile(&p, 7, 3));
        assert_ne!(sample_profile(&p, 7, 3), sample_profile(&p, 7, 4));
        assert_ne!(sample_profile(&p, 7, 3), sample_profile(&p, 8, 3));
    }

    #[test]
    fn equilibrium_sample_never_counts() {
        let p = GameParams::baseline();
        let cost = CostModel::default();
        let spne = ContributionProfile::new(vec![0.267, 1.0, 1.0], &p).unwrap();
        let r = pareto_assess_samples(&p, &cost, &spne, &[spne.as_slice().to_vec()], 0).unwrap();
        assert_eq!(r.dominating_count, 0);
        assert!(pareto_assess(&p, &cost, 0, 1, &SolverConfig::default()).is_err());
    }

    #[test]
    fn no_incentive_game_has_no_dominating_grid_point() {
        let p = GameParams {
            penalty: 0.0,
            gamma_coop: 0.0,
            rho: 0.0,
            ..GameParams::baseline()
        };
        let cost = CostModel::default();
        let spne = solve_spne(&p, &cost, &SolverConfig::default()).unwrap();
        assert_eq!(spne.profile.as_slice(), &[0.0, 0.0, 0.0]);
        let grid = pareto_grid(&p, &cost, &spne.profile, 11).unwrap();
        assert_eq!(grid.sample_count, 1331);
        assert_eq!(grid.dominating_count, 0);
        let sampled = pareto_assess(&p, &cost, 2000, 5, &SolverConfig::default()).unwrap();
        assert_eq!(sampled.dominating_count, 0);
    }

    #[test]
    fn sampled_means_are_centered() {
        let p = GameParams::baseline();
        let n = 10_000u64;
        let mut sums = vec![0.0; p.n];
        for k in 0..n {
            for (s, c) in sums.iter_mut().zip(sample_profile(&p, 42, k)) {
                *s += c;
            }
        }
        let sigma = (1.0f64 / 12.0).sqrt() / (n as f64).sqrt();
        for s in sums {
            assert!((s / n as f64 - 0.5).abs() < 3.0 * sigma);
        }
    }

    proptest! {
        #[test]
        fn dominance_is_irreflexive_and_antisymmetric(
            u in proptest::collection::vec(-2.0..2.0f64, 3),
            v in proptest::collection::vec(-2.0..2.0f64, 3),
        ) {
            prop_assert!(!dominates(&u, &u).unwrap());
            prop_assert!(!(dominates(&u, &v).unwrap() && dominates(&v, &u).unwrap()));
        }
    }
}
