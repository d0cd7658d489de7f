//! Longest snakes between ordered set pairs and scale-explicit snake numbers.
//!
//! A snake of length `s` in `(U1, U2)` is a `T`-increasing sequence
//! `a_0 < a_1 < ... < a_s` with even-indexed points in `U1` and odd-indexed
//! points in `U2`. On a finite space the limit `ε → 0` degenerates to
//! singleton balls, so everything here takes the ball radius explicitly.

use std::cmp::{Ordering, Reverse};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::metric::{FiniteMetricSpace, PointId, PointPair, TotalOrder};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SnakeError {
    #[error("SamePoint: pair ({0},{0}) is not a pair of distinct points")]
    SamePoint(PointId),
    #[error("BadScale: radius {0} must be positive and finite")]
    BadScale(f64),
    #[error("BadScales: scale list must be positive and strictly increasing")]
    BadScales,
    #[error("NoDisjointPairs: every pair of balls overlaps at radius {0}")]
    NoDisjointPairs(f64),
    #[error("PointOutOfRange: point id {0} out of range")]
    PointOutOfRange(PointId),
}

/// Which set of the ordered pair a witness point was taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    #[serde(rename = "U1")]
    First,
    #[serde(rename = "U2")]
    Second,
}

impl Side {
    fn flip(self) -> Self {
        match self {
            Side::First => Side::Second,
            Side::Second => Side::First,
        }
    }

    fn at(index: usize) -> Self {
        if index.is_multiple_of(2) {
            Side::First
        } else {
            Side::Second
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SnakeWitness {
    pub points: Vec<PointId>,
    pub memberships: Vec<Side>,
}

impl SnakeWitness {
    fn from_points(points: Vec<PointId>) -> Self {
        let memberships = (0..points.len()).map(Side::at).collect();
        SnakeWitness { points, memberships }
    }

    pub fn length(&self) -> usize {
        self.points.len() - 1
    }
}

/// Longest snake of a set pair; `value() == None` means no snake (`U1 = ∅`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SnakeResult {
    pub witness: Option<SnakeWitness>,
}

impl SnakeResult {
    pub const NO_SNAKE: SnakeResult = SnakeResult { witness: None };

    pub fn value(&self) -> Option<usize> {
        self.witness.as_ref().map(SnakeWitness::length)
    }

    fn from_points(points: Vec<PointId>) -> Self {
        if points.is_empty() {
            Self::NO_SNAKE
        } else {
            SnakeResult { witness: Some(SnakeWitness::from_points(points)) }
        }
    }
}

fn membership(n: usize, set: &[PointId]) -> Vec<bool> {
    let mut mask = vec![false; n];
    for &p in set {
        mask[p] = true;
    }
    mask
}

/// Greedy longest snake: scan in `T`-order and take every point that lies in
/// the currently needed set. Taking the earliest admissible point never hurts
/// (exchange argument), so the scan is exact.
pub fn longest_snake(order: &TotalOrder, u1: &[PointId], u2: &[PointId]) -> SnakeResult {
    let n = order.len();
    let in1 = membership(n, u1);
    let in2 = membership(n, u2);
    let mut need = Side::First;
    let mut taken = Vec::new();
    for &p in order.sequence() {
        let hit = match need {
            Side::First => in1[p],
            Side::Second => in2[p],
        };
        if hit {
            taken.push(p);
            need = need.flip();
        }
    }
    SnakeResult::from_points(taken)
}

/// Quadratic dynamic program over positions and parities; used as a test
/// oracle for [`longest_snake`].
pub fn longest_snake_oracle(order: &TotalOrder, u1: &[PointId], u2: &[PointId]) -> SnakeResult {
    let n = order.len();
    let in1 = membership(n, u1);
    let in2 = membership(n, u2);
    // best[pos][parity]: longest alternating run ending at `pos`, where the
    // point at `pos` sits at an even (0) or odd (1) index; counts points.
    let mut best = vec![[0usize; 2]; n];
    let mut prev = vec![[usize::MAX; 2]; n];
    for pos in 0..n {
        let p = order.point_at(pos);
        if in1[p] {
            best[pos][0] = 1;
            for earlier in 0..pos {
                if best[earlier][1] > 0 && best[earlier][1] + 1 > best[pos][0] {
                    best[pos][0] = best[earlier][1] + 1;
                    prev[pos][0] = earlier;
                }
            }
        }
        if in2[p] {
            for earlier in 0..pos {
                if best[earlier][0] > 0 && best[earlier][0] + 1 > best[pos][1] {
                    best[pos][1] = best[earlier][0] + 1;
                    prev[pos][1] = earlier;
                }
            }
        }
    }
    let mut end = None;
    let mut top = 0;
    for (pos, b) in best.iter().enumerate() {
        for parity in 0..2 {
            if b[parity] > top {
                top = b[parity];
                end = Some((pos, parity));
            }
        }
    }
    let mut points = Vec::with_capacity(top);
    while let Some((pos, parity)) = end {
        points.push(order.point_at(pos));
        let back = prev[pos][parity];
        end = (back != usize::MAX).then(|| (back, 1 - parity));
    }
    points.reverse();
    SnakeResult::from_points(points)
}

/// Independent witness checker: ranks strictly increase and memberships
/// alternate starting in `U1`.
pub fn is_valid_witness(order: &TotalOrder, u1: &[PointId], u2: &[PointId], witness: &SnakeWitness) -> bool {
    if witness.points.is_empty() || witness.points.len() != witness.memberships.len() {
        return false;
    }
    let ranks_increase = witness.points.windows(2).all(|w| order.rank(w[0]) < order.rank(w[1]));
    let alternates = witness.points.iter().zip(&witness.memberships).enumerate().all(|(i, (p, side))| {
        *side == Side::at(i)
            && match side {
                Side::First => u1.contains(p),
                Side::Second => u2.contains(p),
            }
    });
    ranks_increase && alternates
}

/// Snake value at one radius, or `Overlap` when the pair's balls may meet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScaleSnake {
    Snake(SnakeResult),
    Overlap,
}

impl ScaleSnake {
    pub fn value(&self) -> Option<usize> {
        match self {
            ScaleSnake::Snake(r) => r.value(),
            ScaleSnake::Overlap => None,
        }
    }

    pub fn is_overlap(&self) -> bool {
        matches!(self, ScaleSnake::Overlap)
    }
}

/// A pair is evaluated only when `d(x,y) ≥ 2ε`, which forces the open balls
/// to be disjoint by the triangle inequality.
#[inline]
pub fn balls_separated(space: &FiniteMetricSpace, pair: PointPair, eps: f64) -> bool {
    space.d(pair.x, pair.y) >= 2.0 * eps
}

fn check_scale(eps: f64) -> Result<(), SnakeError> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(SnakeError::BadScale(eps))
    }
}

fn check_pair(space: &FiniteMetricSpace, x: PointId, y: PointId) -> Result<PointPair, SnakeError> {
    for p in [x, y] {
        if p >= space.len() {
            return Err(SnakeError::PointOutOfRange(p));
        }
    }
    PointPair::new(x, y).ok_or(SnakeError::SamePoint(x))
}

pub fn snake_at_scale(
    space: &FiniteMetricSpace,
    order: &TotalOrder,
    x: PointId,
    y: PointId,
    eps: f64,
) -> Result<ScaleSnake, SnakeError> {
    let pair = check_pair(space, x, y)?;
    check_scale(eps)?;
    if !balls_separated(space, pair, eps) {
        return Ok(ScaleSnake::Overlap);
    }
    Ok(ScaleSnake::Snake(longest_snake(order, &space.ball(x, eps), &space.ball(y, eps))))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnakeProfile {
    pub pair: PointPair,
    pub scales: Vec<f64>,
    pub values: Vec<ScaleSnake>,
    pub overlap_at: Option<f64>,
}

impl SnakeProfile {
    /// Witness at the largest scale that is not an overlap.
    pub fn last_witness(&self) -> Option<&SnakeWitness> {
        self.values.iter().rev().find_map(|v| match v {
            ScaleSnake::Snake(r) => r.witness.as_ref(),
            ScaleSnake::Overlap => None,
        })
    }
}

pub fn pair_snake_profile(
    space: &FiniteMetricSpace,
    order: &TotalOrder,
    x: PointId,
    y: PointId,
    scales: &[f64],
) -> Result<SnakeProfile, SnakeError> {
    let pair = check_pair(space, x, y)?;
    let increasing = scales.windows(2).all(|w| w[0] < w[1]);
    if !increasing || scales.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(SnakeError::BadScales);
    }
    let values = scales
        .iter()
        .map(|&eps| snake_at_scale(space, order, x, y, eps))
        .collect::<Result<Vec<_>, _>>()?;
    let overlap_at = scales.iter().zip(&values).find(|(_, v)| v.is_overlap()).map(|(&e, _)| e);
    debug_assert!(values
        .iter()
        .take_while(|v| !v.is_overlap())
        .map(ScaleSnake::value)
        .collect::<Vec<_>>()
        .windows(2)
        .all(|w| w[0] <= w[1]));
    Ok(SnakeProfile { pair, scales: scales.to_vec(), values, overlap_at })
}

/// An open ball stored as maximal runs of consecutive ranks.
///
/// When two balls are disjoint, every run belongs to exactly one of them, so
/// the greedy scan only has to visit run boundaries.
#[derive(Debug, Clone)]
pub struct RankRuns(Vec<(u32, u32)>);

impl RankRuns {
    pub fn from_points(order: &TotalOrder, points: &[PointId]) -> Self {
        let ranks: Vec<u32> = points.iter().map(|&p| order.rank(p) as u32).collect();
        Self::from_ranks(&ranks)
    }

    /// Builds the runs from ranks given in any order.
    pub fn from_ranks(ranks: &[u32]) -> Self {
        let mut ranks = ranks.to_vec();
        ranks.sort_unstable();
        let mut runs: Vec<(u32, u32)> = Vec::new();
        for r in ranks {
            match runs.last_mut() {
                Some(last) if last.1 + 1 == r => last.1 = r,
                _ => runs.push((r, r)),
            }
        }
        RankRuns(runs)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Longest snake of `(self, other)`, assuming the two point sets are disjoint.
    pub fn snake_len(&self, other: &RankRuns) -> Option<usize> {
        self.walk(other, |_| {})
    }

    /// As [`RankRuns::snake_len`], also collecting the ranks of the greedy witness.
    pub fn snake_ranks(&self, other: &RankRuns) -> Vec<u32> {
        let mut ranks = Vec::new();
        self.walk(other, |r| ranks.push(r));
        ranks
    }

    fn walk(&self, other: &RankRuns, mut take: impl FnMut(u32)) -> Option<usize> {
        let (a, b) = (&self.0, &other.0);
        let (mut i, mut j) = (0, 0);
        let mut need = Side::First;
        let mut taken = 0usize;
        while i < a.len() || j < b.len() {
            let from_a = j >= b.len() || (i < a.len() && a[i].0 < b[j].0);
            let (side, start) = if from_a {
                i += 1;
                (Side::First, a[i - 1].0)
            } else {
                j += 1;
                (Side::Second, b[j - 1].0)
            };
            if side == need {
                taken += 1;
                take(start);
                need = need.flip();
            }
        }
        taken.checked_sub(1)
    }
}

/// Per-point balls at a fixed radius, in run form.
pub fn ball_runs(space: &FiniteMetricSpace, order: &TotalOrder, eps: f64) -> Vec<RankRuns> {
    (0..space.len())
        .into_par_iter()
        .map(|p| RankRuns::from_points(order, &space.ball(p, eps)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleMaximum {
    pub value: SnakeResult,
    pub argmax: PointPair,
}

/// Maximum of [`snake_at_scale`] over all ordered pairs whose balls are disjoint.
///
/// Ties are broken by the smallest `(rank x, rank y)`, so the result does not
/// depend on how the sweep is scheduled.
pub fn snake_number_at_scale(
    space: &FiniteMetricSpace,
    order: &TotalOrder,
    eps: f64,
) -> Result<ScaleMaximum, SnakeError> {
    check_scale(eps)?;
    let runs = ball_runs(space, order, eps);
    let n = space.len();
    type Key = (usize, Reverse<(usize, usize)>);
    let better = |a: Option<Key>, b: Option<Key>| match (a, b) {
        (Some(a), Some(b)) => Some(if b.cmp(&a) == Ordering::Greater { b } else { a }),
        (a, None) => a,
        (None, b) => b,
    };
    let best = (0..n)
        .into_par_iter()
        .map(|rx| {
            let x = order.point_at(rx);
            let mut local: Option<Key> = None;
            for ry in 0..n {
                let y = order.point_at(ry);
                if x == y || space.d(x, y) < 2.0 * eps {
                    continue;
                }
                let v = runs[x].snake_len(&runs[y]).expect("a ball contains its center");
                local = better(local, Some((v, Reverse((rx, ry)))));
            }
            local
        })
        .reduce(|| None, better);
    let (_, Reverse((rx, ry))) = best.ok_or(SnakeError::NoDisjointPairs(eps))?;
    let argmax = PointPair { x: order.point_at(rx), y: order.point_at(ry) };
    let value = longest_snake(order, &space.ball(argmax.x, eps), &space.ball(argmax.y, eps));
    Ok(ScaleMaximum { value, argmax })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::Generator;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ident(n: usize) -> TotalOrder {
        TotalOrder::identity(n)
    }

    #[test]
    fn full_alternation() {
        let r = longest_snake(&ident(4), &[0, 2], &[1, 3]);
        assert_eq!(r.value(), Some(3));
        assert_eq!(r.witness.unwrap().points, vec![0, 1, 2, 3]);
    }

    #[test]
    fn empty_second_set_gives_single_point() {
        assert_eq!(longest_snake(&ident(4), &[0, 2], &[]).value(), Some(0));
        assert_eq!(longest_snake_oracle(&ident(4), &[0, 2], &[]).value(), Some(0));
    }

    #[test]
    fn overlapping_sets() {
        assert_eq!(longest_snake(&ident(3), &[0, 1], &[1, 2]).value(), Some(1));
        assert_eq!(longest_snake_oracle(&ident(3), &[0, 1], &[1, 2]).value(), Some(1));
        assert_eq!(longest_snake_oracle(&ident(3), &[0, 1, 2], &[0, 1, 2]).value(), Some(2));
        assert_eq!(longest_snake(&ident(3), &[0, 1, 2], &[0, 1, 2]).value(), Some(2));
    }

    #[test]
    fn no_snake_without_first_set() {
        assert_eq!(longest_snake(&ident(3), &[], &[1]), SnakeResult::NO_SNAKE);
        assert_eq!(longest_snake_oracle(&ident(3), &[], &[1]), SnakeResult::NO_SNAKE);
        assert_eq!(longest_snake_oracle(&ident(3), &[], &[]).value(), None);
    }

    #[test]
    fn oracle_matches_on_fixed_examples() {
        let t = ident(4);
        for (u1, u2) in [(vec![0, 2], vec![1, 3]), (vec![0, 2], vec![]), (vec![0, 1], vec![1, 2])] {
            assert_eq!(longest_snake(&t, &u1, &u2).value(), longest_snake_oracle(&t, &u1, &u2).value());
        }
    }

    #[test]
    fn segment_natural_order_is_one() {
        let s = Generator::Segment { n: 101 }.build().unwrap();
        let t = s.natural_order().unwrap();
        let v = snake_at_scale(&s, &t, 20, 80, 0.05).unwrap();
        assert_eq!(v.value(), Some(1));
    }

    #[test]
    fn glued_circle_pairs() {
        let s = Generator::Circle { n: 100 }.build().unwrap();
        let t = s.natural_order().unwrap();
        assert_eq!(snake_at_scale(&s, &t, 0, 50, 0.1).unwrap().value(), Some(2));
        assert_eq!(snake_at_scale(&s, &t, 25, 75, 0.1).unwrap().value(), Some(1));
    }

    #[test]
    fn overlap_and_errors() {
        let s = Generator::Segment { n: 11 }.build().unwrap();
        let t = s.natural_order().unwrap();
        assert_eq!(snake_at_scale(&s, &t, 2, 4, 0.11).unwrap(), ScaleSnake::Overlap);
        assert_eq!(snake_at_scale(&s, &t, 3, 3, 0.1), Err(SnakeError::SamePoint(3)));
        assert_eq!(snake_at_scale(&s, &t, 1, 3, 0.0), Err(SnakeError::BadScale(0.0)));
    }

    #[test]
    fn profiles() {
        // at N = 100 the radius 0.01 equals the spacing and the open ball is a singleton
        let s = Generator::Circle { n: 1000 }.build().unwrap();
        let t = s.natural_order().unwrap();
        let p = pair_snake_profile(&s, &t, 0, 500, &[0.01, 0.05, 0.1]).unwrap();
        let vals: Vec<_> = p.values.iter().map(ScaleSnake::value).collect();
        assert_eq!(vals, vec![Some(2), Some(2), Some(2)]);
        assert_eq!(p.overlap_at, None);

        let seg = Generator::Segment { n: 101 }.build().unwrap();
        let nat = seg.natural_order().unwrap();
        let p = pair_snake_profile(&seg, &nat, 10, 30, &[0.02, 0.05, 0.09, 0.11, 0.3]).unwrap();
        let vals: Vec<_> = p.values.iter().map(ScaleSnake::value).collect();
        assert_eq!(vals, vec![Some(1), Some(1), Some(1), None, None]);
        assert_eq!(p.overlap_at, Some(0.11));
        assert!(pair_snake_profile(&seg, &nat, 10, 30, &[0.2, 0.1]).is_err());
        assert_eq!(pair_snake_profile(&seg, &nat, 5, 5, &[0.1]), Err(SnakeError::SamePoint(5)));
    }

    #[test]
    fn scale_maximum() {
        let c = Generator::Circle { n: 100 }.build().unwrap();
        let t = c.natural_order().unwrap();
        let m = snake_number_at_scale(&c, &t, 0.1).unwrap();
        assert_eq!(m.value.value(), Some(2));
        assert!(m.argmax.x == 0 || m.argmax.y == 0);

        let two = FiniteMetricSpace::from_matrix(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        for t in [TotalOrder::identity(2), TotalOrder::identity(2).reversed()] {
            assert_eq!(snake_number_at_scale(&two, &t, 0.3).unwrap().value.value(), Some(1));
        }
        assert_eq!(
            snake_number_at_scale(&two, &TotalOrder::identity(2), 0.6),
            Err(SnakeError::NoDisjointPairs(0.6))
        );
    }

    #[test]
    fn runs_agree_with_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..2000 {
            let n = rng.gen_range(2..20);
            let mut seq: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                seq.swap(i, rng.gen_range(0..=i));
            }
            let t = TotalOrder::from_sequence(seq).unwrap();
            let mut u1 = Vec::new();
            let mut u2 = Vec::new();
            for p in 0..n {
                match rng.gen_range(0..3) {
                    0 => u1.push(p),
                    1 => u2.push(p),
                    _ => {}
                }
            }
            if u1.is_empty() {
                continue;
            }
            let (a, b) = (RankRuns::from_points(&t, &u1), RankRuns::from_points(&t, &u2));
            let scan = longest_snake(&t, &u1, &u2);
            assert_eq!(a.snake_len(&b), scan.value());
            let ranks: Vec<usize> = scan.witness.unwrap().points.iter().map(|&p| t.rank(p)).collect();
            assert_eq!(a.snake_ranks(&b).iter().map(|&r| r as usize).collect::<Vec<_>>(), ranks);
        }
    }

    fn instance() -> impl Strategy<Value = (Vec<usize>, Vec<u8>)> {
        (1usize..13).prop_flat_map(|n| {
            (Just((0..n).collect::<Vec<_>>()).prop_shuffle(), proptest::collection::vec(0u8..4, n))
        })
    }

    fn split(tags: &[u8]) -> (Vec<usize>, Vec<usize>) {
        let u1 = (0..tags.len()).filter(|&p| tags[p] & 1 == 1).collect();
        let u2 = (0..tags.len()).filter(|&p| tags[p] & 2 == 2).collect();
        (u1, u2)
    }

    proptest! {
        #[test]
        fn greedy_equals_oracle((seq, tags) in instance()) {
            let t = TotalOrder::from_sequence(seq).unwrap();
            let (u1, u2) = split(&tags);
            let g = longest_snake(&t, &u1, &u2);
            let o = longest_snake_oracle(&t, &u1, &u2);
            prop_assert_eq!(g.value(), o.value());
            for w in [&g.witness, &o.witness].into_iter().flatten() {
                prop_assert!(is_valid_witness(&t, &u1, &u2, w));
            }
        }

        #[test]
        fn ordered_pair_asymmetry_at_most_one((seq, tags) in instance()) {
            let t = TotalOrder::from_sequence(seq).unwrap();
            let (u1, u2) = split(&tags);
            if let (Some(a), Some(b)) = (longest_snake(&t, &u1, &u2).value(), longest_snake(&t, &u2, &u1).value()) {
                prop_assert!(a.abs_diff(b) <= 1);
            }
        }

        #[test]
        fn subset_monotone((seq, tags) in instance(), extra in proptest::collection::vec(0u8..4, 12)) {
            let t = TotalOrder::from_sequence(seq).unwrap();
            let (u1, u2) = split(&tags);
            let grown: Vec<u8> = tags.iter().zip(&extra).map(|(a, b)| a | b).collect();
            let (v1, v2) = split(&grown);
            let small = longest_snake(&t, &u1, &u2).value();
            let big = longest_snake(&t, &v1, &v2).value();
            prop_assert!(small <= big);
        }

        #[test]
        fn scale_monotone_until_overlap(n in 5usize..60, x in 0usize..60, y in 0usize..60, seed in 0u64..1000) {
            let (x, y) = (x % n, y % n);
            prop_assume!(x != y);
            let s = Generator::Circle { n }.build().unwrap();
            let mut seq: Vec<usize> = (0..n).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in (1..n).rev() {
                seq.swap(i, rng.gen_range(0..=i));
            }
            let t = TotalOrder::from_sequence(seq).unwrap();
            let scales: Vec<f64> = (1..12).map(|k| k as f64 * 0.023).collect();
            let p = pair_snake_profile(&s, &t, x, y, &scales).unwrap();
            let vals: Vec<usize> = p.values.iter().map_while(ScaleSnake::value).collect();
            prop_assert!(vals.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(p.values[vals.len()..].iter().all(ScaleSnake::is_overlap));
        }
    }
}
