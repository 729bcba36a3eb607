//! Bounded 1-D maximization of piecewise-smooth objectives.
//!
//! The interval is scanned on a uniform grid together with any known
//! breakpoints, then each smooth piece is refined by golden-section search
//! inside the cell around its best grid point. Every evaluated point stays a
//! candidate, so refinement can never make the answer worse.

use rayon::prelude::*;
use smallvec::SmallVec;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy)]
pub struct SearchSettings {
    pub grid_points: usize,
    pub refine_iters: usize,
    /// Candidates whose value is within this of the best count as tied.
    pub tie_eps: f64,
    /// Evaluate grid points on the rayon pool.
    pub parallel: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub x: f64,
    pub value: f64,
    /// Width of the smallest bracket the refinement ended with (grid step if
    /// no refinement ran).
    pub bracket: f64,
}

/// Golden-section maximization over the open interval `(lo, hi)`. Returns
/// every evaluated `(x, f(x))` pair plus the final bracket width.
pub fn golden_section_max<F>(lo: f64, hi: f64, iters: usize, mut f: F) -> (Vec<(f64, f64)>, f64)
where
    F: FnMut(f64) -> f64,
{
    let mut evals = Vec::with_capacity(iters + 2);
    if !(hi > lo) || iters == 0 {
        return (evals, (hi - lo).max(0.0));
    }
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    evals.push((x1, f1));
    evals.push((x2, f2));
    for _ in 0..iters {
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
            evals.push((x1, f1));
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
            evals.push((x2, f2));
        }
    }
    (evals, b - a)
}

/// Picks the largest `x` whose value is within `tie_eps` of the maximum.
fn select(points: &[(f64, f64)], tie_eps: f64) -> (f64, f64) {
    let best = points
        .iter()
        .map(|p| p.1)
        .fold(f64::NEG_INFINITY, f64::max);
    points
        .iter()
        .filter(|p| p.1 >= best - tie_eps)
        .fold((f64::NEG_INFINITY, f64::NEG_INFINITY), |acc, &p| {
            if p.0 > acc.0 {
                p
            } else {
                acc
            }
        })
}

/// Relative distance under which a tied winner is moved onto a nearby piece
/// end. Keeps results on exact boundaries instead of a hair inside them.
const SNAP_REL: f64 = 1e-6;

/// Moves `(x, value)` onto the nearest evaluated piece end when that end is
/// tied with it and lies within `SNAP_REL` of the interval length.
fn snap(x: f64, value: f64, ends: &[(f64, f64)], span: f64, tie_eps: f64) -> (f64, f64) {
    ends.iter()
        .filter(|e| (e.0 - x).abs() <= SNAP_REL * span && e.1 >= value - tie_eps)
        .min_by(|a, b| (a.0 - x).abs().total_cmp(&(b.0 - x).abs()))
        .copied()
        .unwrap_or((x, value))
}

/// Maximizes `f` over `[lo, hi]`. `breaks` are points where `f` may jump;
/// each is evaluated explicitly and treated as the left end of a new piece.
pub fn maximize<F>(lo: f64, hi: f64, breaks: &[f64], settings: &SearchSettings, f: F) -> Maximum
where
    F: Fn(f64) -> f64 + Sync,
{
    if hi <= lo {
        return Maximum {
            x: lo,
            value: f(lo),
            bracket: 0.0,
        };
    }
    let steps = settings.grid_points.max(2) - 1;
    let step = (hi - lo) / steps as f64;
    let node = |k: usize| if k == steps { hi } else { lo + step * k as f64 };

    let mut cuts: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|b| *b > lo && *b < hi)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut points: Vec<(f64, f64)> =
        Vec::with_capacity(steps + 1 + cuts.len() * 3 + 2 * (settings.refine_iters + 2) * (cuts.len() + 1));
    if settings.parallel {
        let values: Vec<f64> = (0..=steps).into_par_iter().map(|k| f(node(k))).collect();
        points.extend(values.into_iter().enumerate().map(|(k, v)| (node(k), v)));
    } else {
        points.extend((0..=steps).map(|k| {
            let x = node(k);
            (x, f(x))
        }));
    }
    let cut_values: Vec<f64> = cuts.iter().map(|&c| f(c)).collect();

    let mut bracket = step;
    if settings.refine_iters > 0 {
        // pieces: [lo, cut_1), [cut_1, cut_2), ..., [cut_k, hi]
        for w in 0..=cuts.len() {
            let a = if w == 0 { lo } else { cuts[w - 1] };
            let b = if w == cuts.len() { hi } else { cuts[w] };
            let last = w == cuts.len();
            // grid indices inside the piece
            let first_k = ((a - lo) / step).ceil().max(0.0) as usize;
            let mut best: Option<(f64, f64)> = (w > 0).then(|| (a, cut_values[w - 1]));
            let mut k = first_k.min(steps);
            while k <= steps {
                let (x, v) = points[k];
                if x < a {
                    k += 1;
                    continue;
                }
                if x > b || (x == b && !last) {
                    break;
                }
                if best.map_or(true, |(bx, bv)| v > bv || (v == bv && x > bx)) {
                    best = Some((x, v));
                }
                k += 1;
            }
            let Some((bx, _)) = best else { continue };
            let left = (bx - step).max(a);
            let right = (bx + step).min(b);
            let (evals, width) = golden_section_max(left, right, settings.refine_iters, &f);
            bracket = bracket.min(width.max(0.0));
            points.extend(evals);
        }
    }
    let mut ends: Vec<(f64, f64)> = cuts.iter().copied().zip(cut_values).collect();
    points.extend(ends.iter().copied());
    ends.push(points[0]);
    ends.push(points[steps]);
    let (x, value) = select(&points, settings.tie_eps);
    let (x, value) = snap(x, value, &ends, hi - lo, settings.tie_eps);
    Maximum { x, value, bracket }
}

/// Maximizes an objective that is concave on every piece between `breaks`.
/// Each piece is searched by golden section alone, with both closed ends
/// evaluated, so no grid scan is needed.
pub fn maximize_concave_pieces<F>(
    lo: f64,
    hi: f64,
    breaks: &[f64],
    settings: &SearchSettings,
    f: F,
) -> Maximum
where
    F: Fn(f64) -> f64,
{
    if hi <= lo {
        return Maximum {
            x: lo,
            value: f(lo),
            bracket: 0.0,
        };
    }
    let mut cuts: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|b| *b > lo && *b < hi)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let iters = settings.refine_iters.max(1);
    let mut points = Vec::with_capacity((cuts.len() + 1) * (iters + 4));
    let mut bracket = hi - lo;
    let mut ends = Vec::with_capacity(cuts.len() + 2);
    for w in 0..=cuts.len() {
        let a = if w == 0 { lo } else { cuts[w - 1] };
        let b = if w == cuts.len() { hi } else { cuts[w] };
        points.push((a, f(a)));
        ends.push(points[points.len() - 1]);
        if w == cuts.len() {
            points.push((b, f(b)));
            ends.push(points[points.len() - 1]);
        }
        let (evals, width) = golden_section_max(a, b, iters, &f);
        bracket = bracket.min(width);
        points.extend(evals);
    }
    let (x, value) = select(&points, settings.tie_eps);
    let (x, value) = snap(x, value, &ends, hi - lo, settings.tie_eps);
    Maximum { x, value, bracket }
}

/// Maximizes an objective that is affine or concave quadratic on every piece
/// between `breaks`, all pieces sharing the stationary point `vertex`. Only
/// piece ends and the vertex are evaluated; the open right end of an inner
/// piece is approached to within a relative `1e-9` of its length.
pub fn maximize_quadratic_pieces<F>(
    lo: f64,
    hi: f64,
    breaks: &[f64],
    vertex: Option<f64>,
    settings: &SearchSettings,
    f: F,
) -> Maximum
where
    F: Fn(f64) -> f64,
{
    if hi <= lo {
        return Maximum {
            x: lo,
            value: f(lo),
            bracket: 0.0,
        };
    }
    // called once per leaf evaluation, so the buffers stay on the stack
    let mut cuts: SmallVec<[f64; 4]> = breaks.iter().copied().filter(|b| *b > lo && *b < hi).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut points: SmallVec<[(f64, f64); 8]> = SmallVec::new();
    let mut ends: SmallVec<[(f64, f64); 8]> = SmallVec::new();
    let mut bracket = 0.0f64;
    for w in 0..=cuts.len() {
        let a = if w == 0 { lo } else { cuts[w - 1] };
        let b = if w == cuts.len() { hi } else { cuts[w] };
        points.push((a, f(a)));
        ends.push(points[points.len() - 1]);
        if w == cuts.len() {
            points.push((b, f(b)));
            ends.push(points[points.len() - 1]);
        } else {
            let gap = (b - a) * 1e-9;
            bracket = bracket.max(gap);
            points.push((b - gap, f(b - gap)));
        }
    }
    if let Some(v) = vertex.filter(|v| *v > lo && *v < hi) {
        points.push((v, f(v)));
    }
    let (x, value) = select(&points, settings.tie_eps);
    let (x, value) = snap(x, value, &ends, hi - lo, settings.tie_eps);
    Maximum { x, value, bracket }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings() -> SearchSettings {
        SearchSettings {
            grid_points: 41,
            refine_iters: 40,
            tie_eps: 1e-12,
            parallel: false,
        }
    }

    #[test]
    fn golden_section_finds_smooth_interior_maximum() {
        let (evals, width) = golden_section_max(0.0, 1.0, 60, |x| -(x - 0.3141).powi(2));
        let (x, _) = select(&evals, 0.0);
        assert!((x - 0.3141).abs() < 1e-8);
        assert!(width < 1e-10);
    }

    #[test]
    fn refinement_beats_grid() {
        let m = maximize(0.0, 1.0, &[], &settings(), |x| -(x - 0.123_456).powi(2));
        // the tie rule may move the answer by up to sqrt(tie_eps) on a flat top
        assert!((m.x - 0.123_456).abs() < 2e-6, "{m:?}");
    }

    #[test]
    fn jump_boundary_is_found_exactly() {
        // -x on [0, 0.533) minus a penalty, -x above: optimum sits on the cut.
        let t = 0.533;
        let f = |x: f64| -0.1 * x - if x < t { 0.5 } else { 0.0 };
        let m = maximize(0.0, 1.0, &[t], &settings(), f);
        assert_eq!(m.x, t);
    }

    #[test]
    fn near_ties_snap_to_piece_ends() {
        let m = maximize(0.0, 1.0, &[], &SearchSettings { tie_eps: 1e-9, ..settings() }, |x| -x);
        assert_eq!(m.x, 0.0);
        let m = maximize_concave_pieces(0.0, 1.0, &[0.4], &SearchSettings { tie_eps: 1e-9, ..settings() }, |x| {
            -x - if x < 0.4 { 1.0 } else { 0.0 }
        });
        assert_eq!(m.x, 0.4);
    }

    #[test]
    fn ties_prefer_larger_argument() {
        let m = maximize(0.0, 1.0, &[], &settings(), |_| 1.0);
        assert_eq!(m.x, 1.0);
    }

    #[test]
    fn concave_pieces_match_grid_search() {
        let t = 0.41;
        let f = |x: f64| -(x - 0.7f64).powi(2) + 0.9 * x - if x < t { 0.2 } else { 0.0 };
        let a = maximize(0.0, 1.0, &[t], &settings(), f);
        let b = maximize_concave_pieces(0.0, 1.0, &[t], &settings(), f);
        assert!((a.x - b.x).abs() < 1e-7, "{a:?} {b:?}");
        let flat = maximize_concave_pieces(0.0, 1.0, &[0.5], &settings(), |_| 0.0);
        assert_eq!(flat.x, 1.0);
    }

    #[test]
    fn affine_pieces_match_concave_search() {
        let mut state = 7u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..200 {
            let (slope, jump, cut) = (next() * 2.0 - 1.0, next() * 2.0 - 1.0, next());
            let f = |x: f64| slope * x + if x < cut { jump } else { 0.0 };
            let a = maximize_concave_pieces(0.0, 1.0, &[cut], &settings(), f);
            let b = maximize_quadratic_pieces(0.0, 1.0, &[cut], None, &settings(), f);
            assert!((a.x - b.x).abs() < 1e-7 && (a.value - b.value).abs() < 1e-9, "{a:?} {b:?}");
        }
        let flat = maximize_quadratic_pieces(0.0, 1.0, &[0.5], None, &settings(), |_| 0.0);
        assert_eq!(flat.x, 1.0);
    }

    #[test]
    fn quadratic_pieces_match_concave_search() {
        let mut state = 11u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..200 {
            let (peak, curve, jump, cut) = (next() * 1.4 - 0.2, next() + 0.1, next() * 2.0 - 1.0, next());
            let f = |x: f64| -curve * (x - peak).powi(2) + if x < cut { jump } else { 0.0 };
            let a = maximize_concave_pieces(0.0, 1.0, &[cut], &settings(), f);
            let b = maximize_quadratic_pieces(0.0, 1.0, &[cut], Some(peak), &settings(), f);
            assert!((a.x - b.x).abs() < 1e-5 && (a.value - b.value).abs() < 1e-9, "{a:?} {b:?}");
        }
    }

    #[test]
    fn degenerate_interval() {
        let m = maximize(0.5, 0.5, &[], &settings(), |x| x);
        assert_eq!(m.x, 0.5);
    }

    #[test]
    fn parallel_matches_serial() {
        let f = |x: f64| (7.0 * x).sin() - if x < 0.4 { 0.3 } else { 0.0 };
        let a = maximize(0.0, 1.0, &[0.4], &settings(), f);
        let b = maximize(0.0, 1.0, &[0.4], &SearchSettings { parallel: true, ..settings() }, f);
        assert_eq!(a, b);
    }
}
