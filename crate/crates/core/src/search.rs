//! Searching for orders with small snake numbers.

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::metric::{FiniteMetricSpace, PointId, TotalOrder};
use crate::snake::RankRuns;

pub const MAX_EXHAUSTIVE_POINTS: usize = 9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SearchError {
    #[error("TooLarge: exhaustive search takes at most {max} points, got {n}")]
    TooLarge { n: usize, max: usize },
    #[error("BadScales: scales must be positive and finite")]
    BadScales,
    #[error("NoDisjointPairs: no scale in the objective has a pair of disjoint balls")]
    NoDisjointPairs,
    #[error("SizeMismatch: order has {got} points, space has {expected}")]
    SizeMismatch { expected: usize, got: usize },
}

/// Value of an order: the largest snake over all scales and all ordered
/// pairs whose balls are disjoint at that scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchObjective {
    pub scales: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    pub best_order: TotalOrder,
    pub best_value: usize,
    pub explored: u64,
    pub exhaustive: bool,
}

struct ScaleData {
    balls: Vec<Vec<PointId>>,
    pairs: Vec<(PointId, PointId)>,
}

/// Balls and qualifying pairs per scale, shared by every evaluation.
pub struct Evaluator {
    n: usize,
    scales: Vec<ScaleData>,
}

impl Evaluator {
    pub fn new(space: &FiniteMetricSpace, objective: &SearchObjective) -> Result<Self, SearchError> {
        if objective.scales.is_empty() || objective.scales.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(SearchError::BadScales);
        }
        let n = space.len();
        let scales: Vec<ScaleData> = objective
            .scales
            .iter()
            .map(|&eps| {
                let balls = (0..n).map(|p| space.ball(p, eps)).collect();
                let pairs = (0..n)
                    .cartesian_product(0..n)
                    .filter(|&(x, y)| x != y && space.d(x, y) >= 2.0 * eps)
                    .collect();
                ScaleData { balls, pairs }
            })
            .filter(|s: &ScaleData| !s.pairs.is_empty())
            .collect();
        if scales.is_empty() {
            return Err(SearchError::NoDisjointPairs);
        }
        Ok(Evaluator { n, scales })
    }

    /// `(max, sum)` of pair snakes; the sum only guides local search.
    pub fn score(&self, order: &TotalOrder) -> Result<(usize, usize), SearchError> {
        if order.len() != self.n {
            return Err(SearchError::SizeMismatch { expected: self.n, got: order.len() });
        }
        let (mut max, mut sum) = (0, 0);
        for scale in &self.scales {
            let runs: Vec<RankRuns> = scale.balls.iter().map(|b| RankRuns::from_points(order, b)).collect();
            for &(x, y) in &scale.pairs {
                let v = runs[x].snake_len(&runs[y]).expect("a ball contains its center");
                max = max.max(v);
                sum += v;
            }
        }
        Ok((max, sum))
    }

    pub fn value(&self, order: &TotalOrder) -> Result<usize, SearchError> {
        self.score(order).map(|s| s.0)
    }

    fn masks(&self) -> Vec<Vec<(u32, u32)>> {
        let mask = |b: &[PointId]| b.iter().fold(0u32, |m, &p| m | 1 << p);
        self.scales
            .iter()
            .map(|s| s.pairs.iter().map(|&(x, y)| (mask(&s.balls[x]), mask(&s.balls[y]))).collect())
            .collect()
    }
}

/// Greedy snake over a point sequence with bitmask balls, stopping once
/// `limit` is reached.
fn mask_snake(seq: &[PointId], u1: u32, u2: u32, limit: usize) -> usize {
    let mut want = u1;
    let mut taken = 0usize;
    for &p in seq {
        if want >> p & 1 == 1 {
            taken += 1;
            if taken > limit {
                break;
            }
            want = if want == u1 { u2 } else { u1 };
        }
    }
    taken - 1
}

/// Objective of `seq`, or `None` as soon as it reaches `cutoff`.
fn mask_value(seq: &[PointId], masks: &[Vec<(u32, u32)>], cutoff: usize) -> Option<usize> {
    let mut best = 0;
    for &(u1, u2) in masks.iter().flatten() {
        best = best.max(mask_snake(seq, u1, u2, cutoff));
        if best >= cutoff {
            return None;
        }
    }
    Some(best)
}

/// Evaluates every order and returns the lexicographically first minimizer
/// (orders compared as point sequences).
pub fn exhaustive_min_snake(space: &FiniteMetricSpace, objective: &SearchObjective) -> Result<SearchResult, SearchError> {
    let n = space.len();
    if n > MAX_EXHAUSTIVE_POINTS {
        return Err(SearchError::TooLarge { n, max: MAX_EXHAUSTIVE_POINTS });
    }
    let eval = Evaluator::new(space, objective)?;
    let masks = eval.masks();
    let branches: Vec<(usize, Vec<PointId>, u64)> = (0..n)
        .into_par_iter()
        .map(|first| {
            let rest: Vec<PointId> = (0..n).filter(|&p| p != first).collect();
            let mut best = usize::MAX;
            let mut best_seq = Vec::new();
            let mut explored = 0u64;
            let mut seq = vec![first; n];
            for tail in rest.into_iter().permutations(n - 1) {
                seq[1..].copy_from_slice(&tail);
                explored += 1;
                if let Some(v) = mask_value(&seq, &masks, best) {
                    best = v;
                    best_seq.clone_from(&seq);
                }
            }
            (best, best_seq, explored)
        })
        .collect();
    let explored = branches.iter().map(|b| b.2).sum();
    let (best_value, best_seq, _) = branches
        .into_iter()
        .min_by_key(|b| b.0)
        .expect("a space has at least one point");
    let best_order = TotalOrder::from_sequence(best_seq).expect("a permutation");
    Ok(SearchResult { best_order, best_value, explored, exhaustive: true })
}

/// Seeded walk over adjacent transpositions.
///
/// Each iteration proposes swapping a random adjacent pair and keeps the
/// swap unless it worsens `(arrangement, max, sum)`, where the arrangement
/// cost sums rank gaps over pairs closer than twice the largest scale. The
/// snake objective alone is too flat for single swaps to make progress.
/// The best order seen by `(max, sum)` is returned.
pub fn local_search_min_snake(
    space: &FiniteMetricSpace,
    objective: &SearchObjective,
    seed: u64,
    iterations: usize,
) -> Result<SearchResult, SearchError> {
    let eval = Evaluator::new(space, objective)?;
    let n = space.len();
    let reach = 2.0 * objective.scales.iter().copied().fold(0.0, f64::max);
    let close: Vec<(PointId, PointId)> =
        (0..n).tuple_combinations().filter(|&(a, b)| space.d(a, b) < reach).collect();
    let arrangement = |t: &TotalOrder| close.iter().map(|&(a, b)| t.rank(a).abs_diff(t.rank(b))).sum::<usize>();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seq: Vec<PointId> = (0..n).collect();
    seq.shuffle(&mut rng);
    let start = TotalOrder::from_sequence(seq.clone()).expect("a permutation");
    let (max, sum) = eval.score(&start)?;
    let mut key = (arrangement(&start), max, sum);
    let mut best = ((max, sum), start);
    let mut explored = 1u64;
    if n < 2 {
        return Ok(SearchResult { best_order: best.1, best_value: max, explored, exhaustive: false });
    }
    for _ in 0..iterations {
        let i = rng.gen_range(0..n - 1);
        seq.swap(i, i + 1);
        let candidate = TotalOrder::from_sequence(seq.clone()).expect("a permutation");
        let (max, sum) = eval.score(&candidate)?;
        explored += 1;
        let k = (arrangement(&candidate), max, sum);
        if k <= key {
            key = k;
            if (max, sum) < best.0 {
                best = ((max, sum), candidate);
            }
        } else {
            seq.swap(i, i + 1);
        }
    }
    Ok(SearchResult { best_order: best.1, best_value: best.0 .0, explored, exhaustive: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::Generator;
    use crate::snake::snake_number_at_scale;

    fn objective(scales: &[f64]) -> SearchObjective {
        SearchObjective { scales: scales.to_vec() }
    }

    #[test]
    fn segment_four_points() {
        let s = Generator::Segment { n: 4 }.build().unwrap();
        let r = exhaustive_min_snake(&s, &objective(&[0.3])).unwrap();
        assert_eq!(r.best_value, 1);
        assert_eq!(r.explored, 24);
        assert!(r.exhaustive);
        assert_eq!(r.best_order, TotalOrder::identity(4));
    }

    #[test]
    fn too_large_and_bad_scales() {
        let s = Generator::Segment { n: 10 }.build().unwrap();
        assert_eq!(
            exhaustive_min_snake(&s, &objective(&[0.1])).unwrap_err(),
            SearchError::TooLarge { n: 10, max: 9 }
        );
        let small = Generator::Segment { n: 4 }.build().unwrap();
        assert_eq!(exhaustive_min_snake(&small, &objective(&[])).unwrap_err(), SearchError::BadScales);
        assert_eq!(exhaustive_min_snake(&small, &objective(&[-0.1])).unwrap_err(), SearchError::BadScales);
        assert_eq!(local_search_min_snake(&s, &objective(&[5.0]), 0, 3).unwrap_err(), SearchError::NoDisjointPairs);
    }

    #[test]
    fn evaluators_agree() {
        let s = Generator::Circle { n: 8 }.build().unwrap();
        let obj = objective(&[0.1, 0.15625, 0.2]);
        let eval = Evaluator::new(&s, &obj).unwrap();
        let masks = eval.masks();
        for perm in (0..8).permutations(8).step_by(97) {
            let t = TotalOrder::from_sequence(perm.clone()).unwrap();
            let slow = obj
                .scales
                .iter()
                .filter_map(|&e| snake_number_at_scale(&s, &t, e).ok())
                .map(|m| m.value.value().unwrap())
                .max()
                .unwrap();
            assert_eq!(eval.value(&t).unwrap(), slow);
            assert_eq!(mask_value(&perm, &masks, usize::MAX), Some(slow));
        }
    }

    #[test]
    fn pinned_small_minima() {
        let c6 = Generator::Circle { n: 6 }.build().unwrap();
        assert_eq!(exhaustive_min_snake(&c6, &objective(&[0.17])).unwrap().best_value, C6_017);
        assert_eq!(exhaustive_min_snake(&c6, &objective(&[1.25 / 6.0])).unwrap().best_value, C6_QUARTER);
        let tri = Generator::Tripod { m: 2 }.build().unwrap();
        let r = exhaustive_min_snake(&tri, &objective(&[0.5])).unwrap();
        assert_eq!((r.best_value, r.explored), (TRIPOD_2, 5040));
    }

    const C6_017: usize = 2;
    const C6_QUARTER: usize = 2;
    const TRIPOD_2: usize = 1;

    #[test]
    fn exhaustive_beats_supplied_orders() {
        let s = Generator::Circle { n: 7 }.build().unwrap();
        let obj = objective(&[0.15, 0.2]);
        let best = exhaustive_min_snake(&s, &obj).unwrap();
        let eval = Evaluator::new(&s, &obj).unwrap();
        assert_eq!(eval.value(&best.best_order).unwrap(), best.best_value);
        for t in [s.natural_order().unwrap(), s.natural_order().unwrap().reversed()] {
            assert!(best.best_value <= eval.value(&t).unwrap());
        }
        for seed in 0..4 {
            assert!(local_search_min_snake(&s, &obj, seed, 50).unwrap().best_value >= best.best_value);
        }
    }

    #[test]
    fn segment_natural_order_is_unique_up_to_reversal_and_end_swaps() {
        for n in 3..=7 {
            let s = Generator::Segment { n }.build().unwrap();
            let step = 1.0 / (n - 1) as f64;
            // just above each multiple of the spacing, one scale per ball shape
            let scales: Vec<f64> = (0..n / 2).map(|k| (k as f64 + 0.01) * step).collect();
            let obj = objective(&scales);
            let eval = Evaluator::new(&s, &obj).unwrap();
            let good: Vec<Vec<usize>> = (0..n)
                .permutations(n)
                .filter(|p| eval.value(&TotalOrder::from_sequence(p.clone()).unwrap()).unwrap() <= 1)
                .collect();
            let ident: Vec<usize> = (0..n).collect();
            let rev: Vec<usize> = (0..n).rev().collect();
            if n == 3 {
                // no pair of balls beyond singletons is disjoint, so every order qualifies
                assert_eq!(good.len(), 6);
                continue;
            }
            // a ball holding an endpoint always holds its neighbour, so the two
            // points at either end may be swapped without changing any snake
            let mut expected = Vec::new();
            for base in [ident, rev] {
                for (swap_head, swap_tail) in [(false, false), (false, true), (true, false), (true, true)] {
                    let mut p = base.clone();
                    if swap_head {
                        p.swap(0, 1);
                    }
                    if swap_tail {
                        p.swap(n - 2, n - 1);
                    }
                    expected.push(p);
                }
            }
            expected.sort();
            assert_eq!(good, expected, "n={n}");
        }
    }

    #[test]
    fn local_search_on_segment() {
        let s = Generator::Segment { n: 20 }.build().unwrap();
        let obj = objective(&[0.1]);
        let start = local_search_min_snake(&s, &obj, 7, 0).unwrap();
        assert_eq!(start.explored, 1);
        let a = local_search_min_snake(&s, &obj, 7, 2000).unwrap();
        let b = local_search_min_snake(&s, &obj, 7, 2000).unwrap();
        assert_eq!(a, b);
        assert!(a.best_value <= start.best_value);
        let natural = Evaluator::new(&s, &obj).unwrap().value(&s.natural_order().unwrap()).unwrap();
        assert_eq!(natural, 1);
        assert_eq!(a.best_value, LOCAL_SEGMENT_20);
    }

    const LOCAL_SEGMENT_20: usize = 1;

    #[test]
    fn thread_count_does_not_change_results() {
        let s = Generator::Circle { n: 7 }.build().unwrap();
        let obj = objective(&[0.15]);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| exhaustive_min_snake(&s, &obj).unwrap())
        };
        assert_eq!(run(1), run(4));
    }
}
