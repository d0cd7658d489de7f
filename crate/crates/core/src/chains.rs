//! Chain assignment, the lexicographic chain order built from a cover
//! hierarchy, and the pairwise certificate that bounds its snake number.
//!
//! Each point gets a chain `(U_0(x), U_1(x), ..., U_L(x))`: a set at every
//! level, linked by the parent map. Points are then ordered by comparing
//! their chains lexicographically, level by level, under per-level orders of
//! the sets. With every level of multiplicity at most `n + 1`, any pair of
//! balls that sit in disjoint groups of sets carries no snake longer than
//! `2n + 1`, and [`theorem_b_certificate`] checks exactly that on every pair.

use std::cmp::Reverse;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::hierarchy::CoverHierarchy;
use crate::metric::{FiniteMetricSpace, PointId, PointPair, TotalOrder};
use crate::snake::RankRuns;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChainError {
    #[error("BadLevelOrder: level order {level} is not a permutation of the {sets} set indices")]
    BadLevelOrder { level: usize, sets: usize },
    #[error("LevelCount: expected {expected} level orders, got {got}")]
    LevelCount { expected: usize, got: usize },
    #[error("SizeMismatch: hierarchy covers {hierarchy} points but the order has {order}")]
    SizeMismatch { hierarchy: usize, order: usize },
}

/// One chain of set indices per point, level 0 first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChainAssignment {
    pub chains: Vec<Vec<usize>>,
}

/// Canonical chains: at the deepest level take the smallest-index set that
/// contains the point, then follow parents up to level 0.
pub fn assign_chains(h: &CoverHierarchy, n_points: usize) -> ChainAssignment {
    let depth = h.depth();
    let deepest = h.level(depth - 1);
    let mut leaf = vec![usize::MAX; n_points];
    for (idx, set) in deepest.sets().iter().enumerate() {
        for &p in set {
            if leaf[p] == usize::MAX {
                leaf[p] = idx;
            }
        }
    }
    let chains = leaf
        .into_iter()
        .map(|mut set| {
            let mut chain = vec![0; depth];
            for level in (0..depth).rev() {
                chain[level] = set;
                if level > 0 {
                    set = h.parent_of(level, set);
                }
            }
            chain
        })
        .collect();
    ChainAssignment { chains }
}

/// Index-order level orders, the default choice of `T_i`.
pub fn default_level_orders(h: &CoverHierarchy) -> Vec<Vec<usize>> {
    h.levels().iter().map(|c| (0..c.len()).collect()).collect()
}

/// Seeded random level orders, for checking that the bound does not depend
/// on the choice of `T_i`.
pub fn seeded_level_orders(h: &CoverHierarchy, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    h.levels()
        .iter()
        .map(|c| {
            let mut perm: Vec<usize> = (0..c.len()).collect();
            perm.shuffle(&mut rng);
            perm
        })
        .collect()
}

/// Lexicographic chain order. `level_orders[i]` lists the set indices of
/// level `i` in increasing `T_i` order; `None` uses index order. Points with
/// identical chains fall back to point id.
pub fn lex_order(
    h: &CoverHierarchy,
    n_points: usize,
    level_orders: Option<&[Vec<usize>]>,
) -> Result<TotalOrder, ChainError> {
    let defaults;
    let level_orders = match level_orders {
        Some(lo) => lo,
        None => {
            defaults = default_level_orders(h);
            &defaults
        }
    };
    if level_orders.len() != h.depth() {
        return Err(ChainError::LevelCount { expected: h.depth(), got: level_orders.len() });
    }
    let mut positions = Vec::with_capacity(h.depth());
    for (level, seq) in level_orders.iter().enumerate() {
        let sets = h.level(level).len();
        let mut pos = vec![usize::MAX; sets];
        for (k, &u) in seq.iter().enumerate() {
            if u >= sets || pos[u] != usize::MAX {
                return Err(ChainError::BadLevelOrder { level, sets });
            }
            pos[u] = k;
        }
        if seq.len() != sets {
            return Err(ChainError::BadLevelOrder { level, sets });
        }
        positions.push(pos);
    }
    let chains = assign_chains(h, n_points).chains;
    let keys: Vec<Vec<usize>> = chains
        .iter()
        .map(|chain| chain.iter().enumerate().map(|(level, &u)| positions[level][u]).collect())
        .collect();
    Ok(TotalOrder::sorted_by_key(n_points, |p| &keys[p]))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertifiedPair {
    pub pair: PointPair,
    pub level: usize,
    pub radius: f64,
    pub value: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub pass: bool,
    pub bound: usize,
    /// Ordered pair attaining the largest snake (smallest pair on ties).
    pub worst: Option<CertifiedPair>,
    pub checked_pairs: usize,
    /// Unordered pairs `(a, b)`, `a < b`, for which no level is fine enough.
    pub skipped_pairs: Vec<(PointId, PointId)>,
}

impl Certificate {
    pub fn worst_value(&self) -> Option<usize> {
        self.worst.as_ref().map(|w| w.value)
    }
}

/// The level and radius used to certify the pair at distance `d`.
///
/// Level `k` is admissible when `2·mesh_k < d`; the certified radius there is
/// `min(margin_k, (d - 2·mesh_k) / 2)`, which keeps every set meeting
/// `B_r(a)` disjoint from every set meeting `B_r(b)`. Among admissible levels
/// the largest radius wins (then the coarsest level).
pub fn certified_radius(meshes: &[f64], margins: &[f64], d: f64) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (k, (&mesh, &margin)) in meshes.iter().zip(margins).enumerate() {
        if !(2.0 * mesh < d) || !(margin > 0.0) {
            continue;
        }
        let r = margin.min((d - 2.0 * mesh) / 2.0);
        if best.is_none_or(|(_, b)| r > b) {
            best = Some((k, r));
        }
    }
    best
}

/// Other points sorted by distance, with their ranks, per point.
struct Neighbourhoods {
    dists: Vec<Vec<f64>>,
    ranks: Vec<Vec<u32>>,
}

impl Neighbourhoods {
    fn new(space: &FiniteMetricSpace, order: &TotalOrder) -> Self {
        let (dists, ranks) = (0..space.len())
            .into_par_iter()
            .map(|x| {
                let row = space.row(x);
                let mut ids: Vec<PointId> = (0..space.len()).collect();
                ids.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
                let d = ids.iter().map(|&p| row[p]).collect::<Vec<_>>();
                let r = ids.iter().map(|&p| order.rank(p) as u32).collect::<Vec<_>>();
                (d, r)
            })
            .unzip();
        Neighbourhoods { dists, ranks }
    }

    fn ball(&self, x: PointId, r: f64) -> RankRuns {
        let k = self.dists[x].partition_point(|&d| d < r);
        RankRuns::from_ranks(&self.ranks[x][..k])
    }
}

/// Checks, for every pair of distinct points, that the pair of certified
/// balls contains no snake longer than `2n + 1` in either direction.
pub fn theorem_b_certificate(
    space: &FiniteMetricSpace,
    order: &TotalOrder,
    h: &CoverHierarchy,
    n: usize,
) -> Result<Certificate, ChainError> {
    if order.len() != space.len() {
        return Err(ChainError::SizeMismatch { hierarchy: space.len(), order: order.len() });
    }
    let bound = 2 * n + 1;
    let meshes = h.meshes();
    let margins = h.margins().to_vec();
    let hoods = Neighbourhoods::new(space, order);
    let npts = space.len();

    type Worst = Option<(usize, Reverse<PointPair>, usize, f64)>;
    let pick = |a: Worst, b: Worst| match (a, b) {
        (Some(x), Some(y)) => Some(if (y.0, y.1) > (x.0, x.1) { y } else { x }),
        (x, None) => x,
        (None, y) => y,
    };
    let (worst, checked, skipped) = (0..npts)
        .into_par_iter()
        .map(|a| {
            let mut worst: Worst = None;
            let mut checked = 0usize;
            let mut skipped = Vec::new();
            for b in (a + 1)..npts {
                let Some((level, r)) = certified_radius(&meshes, &margins, space.d(a, b)) else {
                    skipped.push((a, b));
                    continue;
                };
                checked += 1;
                let (ba, bb) = (hoods.ball(a, r), hoods.ball(b, r));
                for (pair, v) in [
                    (PointPair { x: a, y: b }, ba.snake_len(&bb)),
                    (PointPair { x: b, y: a }, bb.snake_len(&ba)),
                ] {
                    let v = v.expect("balls contain their centers");
                    worst = pick(worst, Some((v, Reverse(pair), level, r)));
                }
            }
            (worst, checked, skipped)
        })
        .reduce(
            || (None, 0, Vec::new()),
            |(wa, ca, mut sa), (wb, cb, sb)| {
                sa.extend(sb);
                (pick(wa, wb), ca + cb, sa)
            },
        );
    let mut skipped_pairs = skipped;
    skipped_pairs.sort_unstable();
    let worst = worst.map(|(value, Reverse(pair), level, radius)| CertifiedPair { pair, level, radius, value });
    let pass = worst.as_ref().is_none_or(|w| w.value <= bound);
    Ok(Certificate { pass, bound, worst, checked_pairs: checked, skipped_pairs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cover::Cover;
    use crate::hierarchy::{build_hierarchy, Builder};
    use crate::metric::{bit_reversal_sequence, Generator};
    use crate::snake::longest_snake;

    fn two_leaf_line() -> (FiniteMetricSpace, CoverHierarchy) {
        let s = Generator::Segment { n: 8 }.build().unwrap();
        let leaves = Cover::new(&s, vec![vec![0, 1, 2, 3], vec![4, 5, 6, 7]]).unwrap();
        let h = CoverHierarchy::from_parts(&s, vec![Cover::whole(&s), leaves], vec![vec![0, 0]], 1).unwrap();
        (s, h)
    }

    #[test]
    fn depth_one_chains_and_order() {
        let s = Generator::Segment { n: 6 }.build().unwrap();
        let h = build_hierarchy(&s, Builder::Partition, 1, 1).unwrap();
        let chains = assign_chains(&h, 6);
        assert!(chains.chains.iter().all(|c| c == &vec![0]));
        assert_eq!(lex_order(&h, 6, None).unwrap(), TotalOrder::identity(6));
    }

    #[test]
    fn chains_follow_parents() {
        let s = Generator::Cantor { depth: 3 }.build().unwrap();
        let h = build_hierarchy(&s, Builder::Partition, 3, 1).unwrap();
        let chains = assign_chains(&h, s.len());
        for (p, chain) in chains.chains.iter().enumerate() {
            for (level, &u) in chain.iter().enumerate() {
                assert!(h.level(level).sets()[u].contains(&p));
                if level > 0 {
                    assert_eq!(h.parent_of(level, u), chain[level - 1]);
                }
            }
        }
    }

    #[test]
    fn smallest_leaf_wins() {
        let s = Generator::Segment { n: 4 }.build().unwrap();
        let leaves = Cover::new(&s, vec![vec![0], vec![1], vec![2], vec![1, 2], vec![3], vec![1, 3]]).unwrap();
        let h = CoverHierarchy::from_parts(&s, vec![Cover::whole(&s), leaves], vec![vec![0; 6]], 3).unwrap();
        let chains = assign_chains(&h, 4);
        assert_eq!(chains.chains[1], vec![0, 1]);
        assert_eq!(chains.chains[3], vec![0, 4]);
    }

    #[test]
    fn two_leaves_split_the_order() {
        let (_, h) = two_leaf_line();
        let t = lex_order(&h, 8, Some(&[vec![0], vec![1, 0]])).unwrap();
        assert_eq!(t.sequence(), &[4, 5, 6, 7, 0, 1, 2, 3]);
        let t = lex_order(&h, 8, None).unwrap();
        assert!((0..4).all(|l| (4..8).all(|r| t.less(l, r))));
        assert!(lex_order(&h, 8, Some(&[vec![0], vec![1, 1]])).is_err());
        assert!(lex_order(&h, 8, Some(&[vec![0]])).is_err());
    }

    #[test]
    fn radius_selection() {
        // level 1 mesh 0.2, margin 0.05; level 2 mesh 0, margin 0.01
        let meshes = [1.0, 0.2, 0.0];
        let margins = [f64::INFINITY, 0.05, 0.01];
        assert_eq!(certified_radius(&meshes, &margins, 0.6), Some((1, 0.05)));
        assert_eq!(certified_radius(&meshes, &margins, 0.41), Some((2, 0.01)));
        assert_eq!(certified_radius(&meshes, &margins, 0.015), Some((2, 0.0075)));
        assert_eq!(certified_radius(&[1.0, 0.1], &[f64::INFINITY, 0.05], 0.15), None);
    }

    #[test]
    fn natural_segment_certificate() {
        let s = Generator::Segment { n: 64 }.build().unwrap();
        let h = build_hierarchy(&s, Builder::Brick, 4, 2).unwrap();
        let t = s.natural_order().unwrap();
        let c = theorem_b_certificate(&s, &t, &h, 1).unwrap();
        assert!(c.pass);
        assert_eq!(c.worst_value(), Some(1));
        assert!(c.skipped_pairs.is_empty());
        assert_eq!(c.checked_pairs, 64 * 63 / 2);
    }

    #[test]
    fn certificate_values_match_direct_evaluation() {
        let s = Generator::Grid { dim: 1, m: 32 }.build().unwrap();
        let h = build_hierarchy(&s, Builder::Brick, 4, 2).unwrap();
        let t = TotalOrder::from_sequence(bit_reversal_sequence(32)).unwrap();
        let c = theorem_b_certificate(&s, &t, &h, 1).unwrap();
        let w = c.worst.unwrap();
        let direct = longest_snake(&t, &s.ball(w.pair.x, w.radius), &s.ball(w.pair.y, w.radius));
        assert_eq!(direct.value(), Some(w.value));
    }

    #[test]
    fn lex_order_of_a_built_hierarchy_is_certified() {
        for seed in 0..4 {
            let s = Generator::Grid { dim: 1, m: 40 }.build().unwrap();
            let h = build_hierarchy(&s, Builder::Brick, 4, 2).unwrap();
            let orders = seeded_level_orders(&h, seed);
            let t = lex_order(&h, s.len(), Some(&orders)).unwrap();
            assert!(t.is_bijection());
            let c = theorem_b_certificate(&s, &t, &h, 1).unwrap();
            assert!(c.pass, "seed {seed}: {c:?}");
        }
    }
}
