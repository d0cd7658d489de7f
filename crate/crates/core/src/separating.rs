//! Separating families and the binary-code order.
//!
//! A family `U_0, U_1, ...` separates points when every pair of distinct
//! points is split by some member. Each point gets the code
//! `c(x)_i = [x ∈ U_i]`, and points are ordered by comparing codes
//! lexicographically.

use serde::Serialize;
use thiserror::Error;

use crate::metric::{FiniteMetricSpace, PointId, TotalOrder};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeparationError {
    #[error("NotSeparating: points {0} and {1} lie in exactly the same family members")]
    NotSeparating(PointId, PointId),
    #[error("PointOutOfRange: family member {set} names point {point}, which is out of range")]
    PointOutOfRange { set: usize, point: PointId },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SeparationMethod {
    /// One cut-set per merge of the single-linkage dendrogram.
    Dendrogram,
    /// A caller-supplied family, validated for separation.
    Provided(Vec<Vec<PointId>>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SeparatingFamily {
    pub sets: Vec<Vec<PointId>>,
    pub codes: Vec<Vec<bool>>,
}

impl SeparatingFamily {
    /// Computes codes and checks that they are pairwise distinct.
    pub fn new(n_points: usize, sets: Vec<Vec<PointId>>) -> Result<Self, SeparationError> {
        let mut codes = vec![vec![false; sets.len()]; n_points];
        for (i, set) in sets.iter().enumerate() {
            for &p in set {
                if p >= n_points {
                    return Err(SeparationError::PointOutOfRange { set: i, point: p });
                }
                codes[p][i] = true;
            }
        }
        let mut by_code: Vec<PointId> = (0..n_points).collect();
        by_code.sort_by(|&a, &b| codes[a].cmp(&codes[b]).then(a.cmp(&b)));
        if let Some(w) = by_code.windows(2).find(|w| codes[w[0]] == codes[w[1]]) {
            return Err(SeparationError::NotSeparating(w[0].min(w[1]), w[0].max(w[1])));
        }
        Ok(SeparatingFamily { sets, codes })
    }

    pub fn code_string(&self, p: PointId) -> String {
        self.codes[p].iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

/// Single-linkage merges `(height, left, right)` in merge order, where
/// `left` is the cluster holding the smaller point id.
fn single_linkage_merges(space: &FiniteMetricSpace) -> Vec<(f64, Vec<PointId>, Vec<PointId>)> {
    let n = space.len();
    let mut edges: Vec<(f64, PointId, PointId)> = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for a in 0..n {
        for b in (a + 1)..n {
            edges.push((space.d(a, b), a, b));
        }
    }
    edges.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
    let mut owner: Vec<usize> = (0..n).collect();
    let mut members: Vec<Vec<PointId>> = (0..n).map(|p| vec![p]).collect();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    for (h, a, b) in edges {
        let (ca, cb) = (owner[a], owner[b]);
        if ca == cb {
            continue;
        }
        let (keep, gone) = if members[ca][0] < members[cb][0] { (ca, cb) } else { (cb, ca) };
        let moved = std::mem::take(&mut members[gone]);
        let left = members[keep].clone();
        for &p in &moved {
            owner[p] = keep;
        }
        members[keep].extend_from_slice(&moved);
        members[keep].sort_unstable();
        merges.push((h, left, moved));
        if merges.len() + 1 == n {
            break;
        }
    }
    merges
}

/// Builds a separating family.
///
/// The dendrogram method walks the single-linkage merges from the root down
/// and contributes, for every merge, the child that does not hold the
/// smaller point id. Two points are split by the merge that first joins
/// them, so the family always separates.
pub fn separating_family(space: &FiniteMetricSpace, method: SeparationMethod) -> Result<SeparatingFamily, SeparationError> {
    let sets = match method {
        SeparationMethod::Dendrogram => single_linkage_merges(space)
            .into_iter()
            .rev()
            .map(|(_, _, right)| right)
            .collect(),
        SeparationMethod::Provided(sets) => sets,
    };
    SeparatingFamily::new(space.len(), sets)
}

/// Lexicographic order on codes (`0 < 1`, member 0 most significant).
pub fn binary_code_order(family: &SeparatingFamily) -> TotalOrder {
    TotalOrder::sorted_by_key(family.codes.len(), |p| &family.codes[p])
}

/// Smallest distance between a family member and its complement.
pub fn min_member_gap(space: &FiniteMetricSpace, family: &SeparatingFamily) -> f64 {
    let n = space.len();
    let mut gap = f64::INFINITY;
    for set in &family.sets {
        let mut inside = vec![false; n];
        for &p in set {
            inside[p] = true;
        }
        for &p in set {
            for q in (0..n).filter(|&q| !inside[q]) {
                gap = gap.min(space.d(p, q));
            }
        }
    }
    gap
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::Generator;
    use crate::snake::snake_number_at_scale;

    #[test]
    fn two_points() {
        let s = FiniteMetricSpace::from_matrix(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let f = separating_family(&s, SeparationMethod::Dendrogram).unwrap();
        assert_eq!(f.sets, vec![vec![1]]);
        assert_eq!((f.code_string(0), f.code_string(1)), ("0".into(), "1".into()));
        assert_eq!(binary_code_order(&f), TotalOrder::identity(2));
    }

    #[test]
    fn cantor_dendrogram() {
        let s = Generator::Cantor { depth: 3 }.build().unwrap();
        let f = separating_family(&s, SeparationMethod::Dendrogram).unwrap();
        assert_eq!(f.sets.len(), 7);
        // the root split contributes the right half
        assert_eq!(f.sets[0], vec![4, 5, 6, 7]);
        let mut codes = f.codes.clone();
        codes.sort();
        codes.dedup();
        assert_eq!(codes.len(), 8);
        // codes follow the construction blocks, so the order is coordinate order
        assert_eq!(binary_code_order(&f), TotalOrder::identity(8));
    }

    #[test]
    fn provided_family_must_separate() {
        let s = Generator::Segment { n: 3 }.build().unwrap();
        let err = separating_family(&s, SeparationMethod::Provided(vec![vec![0, 1]])).unwrap_err();
        assert_eq!(err, SeparationError::NotSeparating(0, 1));
        assert!(separating_family(&s, SeparationMethod::Provided(vec![vec![9]])).is_err());
    }

    #[test]
    fn complements_of_points() {
        // U_i = M \ {i}: c(0) = 011, c(1) = 101, c(2) = 110
        let s = Generator::Segment { n: 3 }.build().unwrap();
        let f = separating_family(&s, SeparationMethod::Provided(vec![vec![1, 2], vec![0, 2], vec![0, 1]])).unwrap();
        assert_eq!(f.code_string(0), "011");
        assert_eq!(f.code_string(1), "101");
        assert_eq!(f.code_string(2), "110");
        assert_eq!(binary_code_order(&f), TotalOrder::identity(3));
    }

    #[test]
    fn snake_at_most_one_below_the_member_gap() {
        for depth in [3, 5, 6] {
            let s = Generator::Cantor { depth }.build().unwrap();
            let f = separating_family(&s, SeparationMethod::Dendrogram).unwrap();
            let t = binary_code_order(&f);
            let gap = min_member_gap(&s, &f);
            for frac in [0.1, 0.3, 0.49] {
                let v = snake_number_at_scale(&s, &t, gap * frac).unwrap();
                assert!(v.value.value().unwrap() <= 1);
            }
        }
    }

    #[test]
    fn separating_order_on_ingested_space() {
        let s = FiniteMetricSpace::from_points(vec![vec![0.0, 0.0], vec![5.0, 0.0], vec![0.1, 0.0], vec![5.2, 0.1]])
            .unwrap();
        let f = separating_family(&s, SeparationMethod::Dendrogram).unwrap();
        let t = binary_code_order(&f);
        assert!(t.is_bijection());
        // the two tight clusters stay contiguous
        let r: Vec<usize> = (0..4).map(|p| t.rank(p)).collect();
        assert_eq!(r[0].abs_diff(r[2]), 1);
        assert_eq!(r[1].abs_diff(r[3]), 1);
    }
}
