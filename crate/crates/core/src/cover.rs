//! Covers of a finite space and their combinatorics: multiplicity, Lebesgue
//! number, multiplicity margin, and staggered brick covers of grids.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::metric::{FiniteMetricSpace, PointId, Provenance};
use crate::real::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoverError {
    #[error("EmptySet: cover set {0} is empty")]
    EmptySet(usize),
    #[error("PointOutOfRange: cover set {set} names point {point}, which is out of range")]
    PointOutOfRange { set: usize, point: PointId },
    #[error("Uncovered: point {0} is not covered")]
    Uncovered(PointId),
    #[error("NotAGrid: brick covers need a generated grid, got {0}")]
    NotAGrid(String),
    #[error("SideTooSmall: brick side {side} must exceed the grid spacing {spacing}")]
    SideTooSmall { side: f64, spacing: f64 },
    #[error("MultiplicityExceeded: point {} lies in {} sets, bound {bound}", .report.worst_point, .report.max_point_multiplicity)]
    MultiplicityExceeded { report: MultiplicityReport, bound: usize },
    #[error("CannotRefine: level {level}: {reason}")]
    CannotRefine { level: usize, reason: String },
    #[error("BadParams: {0}")]
    BadParams(String),
}

/// A family of non-empty point sets whose union is the whole space.
#[derive(Debug, Clone, PartialEq)]
pub struct Cover {
    sets: Vec<Vec<PointId>>,
    mesh: f64,
}

impl Cover {
    /// Sorts and deduplicates each set, checks coverage and computes the mesh.
    pub fn new(space: &FiniteMetricSpace, sets: Vec<Vec<PointId>>) -> Result<Self, CoverError> {
        let n = space.len();
        let mut covered = vec![false; n];
        let mut clean = Vec::with_capacity(sets.len());
        for (idx, mut set) in sets.into_iter().enumerate() {
            if set.is_empty() {
                return Err(CoverError::EmptySet(idx));
            }
            set.sort_unstable();
            set.dedup();
            if let Some(&point) = set.iter().find(|&&p| p >= n) {
                return Err(CoverError::PointOutOfRange { set: idx, point });
            }
            for &p in &set {
                covered[p] = true;
            }
            clean.push(set);
        }
        if let Some(p) = covered.iter().position(|c| !c) {
            return Err(CoverError::Uncovered(p));
        }
        let mesh = clean.iter().map(|s| set_diameter(space, s)).fold(0.0, f64::max);
        Ok(Cover { sets: clean, mesh })
    }

    pub fn whole(space: &FiniteMetricSpace) -> Self {
        Cover { sets: vec![(0..space.len()).collect()], mesh: space.diameter() }
    }

    pub fn singletons(space: &FiniteMetricSpace) -> Self {
        Cover { sets: (0..space.len()).map(|p| vec![p]).collect(), mesh: 0.0 }
    }

    pub fn sets(&self) -> &[Vec<PointId>] {
        &self.sets
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn mesh(&self) -> f64 {
        self.mesh
    }

    /// For every point, the indices of the sets containing it (ascending).
    pub fn memberships(&self, n: usize) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); n];
        for (idx, set) in self.sets.iter().enumerate() {
            for &p in set {
                out[p].push(idx);
            }
        }
        out
    }
}

pub fn set_diameter(space: &FiniteMetricSpace, set: &[PointId]) -> f64 {
    let mut diam = 0.0f64;
    for (i, &a) in set.iter().enumerate() {
        for &b in &set[i + 1..] {
            diam = diam.max(space.d(a, b));
        }
    }
    diam
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiplicityReport {
    pub max_point_multiplicity: usize,
    pub worst_point: PointId,
    /// Margin at the requested bound; zero iff the bound is exceeded.
    pub margin: Real,
}

/// Largest number of sets sharing a point, the first point attaining it, and
/// the multiplicity margin for `bound`.
pub fn cover_multiplicity(space: &FiniteMetricSpace, cover: &Cover, bound: usize) -> MultiplicityReport {
    let counts: Vec<usize> = cover.memberships(space.len()).iter().map(Vec::len).collect();
    let (worst_point, max_point_multiplicity) = counts
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0), |best, (p, c)| if c > best.1 { (p, c) } else { best });
    MultiplicityReport {
        max_point_multiplicity,
        worst_point,
        margin: Real(multiplicity_margin(space, cover, bound)),
    }
}

/// Largest `r` such that every open `r`-ball lies inside some cover set.
///
/// For a point `x` and a set `U ∋ x`, the depth of `x` in `U` is the distance
/// from `x` to the nearest point outside `U` (infinite when `U` is everything).
pub fn lebesgue_number(space: &FiniteMetricSpace, cover: &Cover) -> f64 {
    let n = space.len();
    let memberships = cover.memberships(n);
    let mut inside = vec![false; n];
    let mut worst = f64::INFINITY;
    for x in 0..n {
        let row = space.row(x);
        let mut best = 0.0f64;
        for &idx in &memberships[x] {
            let set = &cover.sets[idx];
            for &p in set {
                inside[p] = true;
            }
            let depth = (0..n).filter(|&p| !inside[p]).map(|p| row[p]).fold(f64::INFINITY, f64::min);
            for &p in set {
                inside[p] = false;
            }
            best = best.max(depth);
        }
        worst = worst.min(best);
    }
    worst
}

/// Distance from every point to every set: `out[x][u] = min_{p ∈ U} d(x, p)`.
fn point_set_distances(space: &FiniteMetricSpace, cover: &Cover) -> Vec<Vec<f64>> {
    let n = space.len();
    let mut out = vec![vec![f64::INFINITY; cover.len()]; n];
    for (u, set) in cover.sets.iter().enumerate() {
        for (x, slot) in out.iter_mut().enumerate() {
            let row = space.row(x);
            slot[u] = set.iter().map(|&p| row[p]).fold(f64::INFINITY, f64::min);
        }
    }
    out
}

/// Largest `r` such that every open `r`-ball meets at most `m` sets.
///
/// A ball `B_r(x)` meets `U` iff `dist(x, U) < r`, so for each point the
/// answer is its `(m+1)`-th smallest set distance; zero when the point
/// already lies in more than `m` sets, infinite when there are at most `m`
/// sets.
pub fn multiplicity_margin(space: &FiniteMetricSpace, cover: &Cover, m: usize) -> f64 {
    point_set_distances(space, cover)
        .into_iter()
        .map(|mut ds| {
            if ds.len() <= m {
                f64::INFINITY
            } else {
                let (_, kth, _) = ds.select_nth_unstable_by(m, f64::total_cmp);
                *kth
            }
        })
        .fold(f64::INFINITY, f64::min)
}

/// Number of cover sets met by the open ball `B_r(x)`, by direct enumeration.
pub fn sets_met_by_ball(space: &FiniteMetricSpace, cover: &Cover, x: PointId, r: f64) -> usize {
    let ball = space.ball(x, r);
    cover.sets.iter().filter(|set| set.iter().any(|p| ball.binary_search(p).is_ok())).count()
}

/// Offset of the brick row along coordinate `j`, given the box indices of
/// all higher coordinates. Each higher coordinate `i` contributes a shift of
/// `side / 2^(i-j)` when its index is odd.
fn brick_shift(side: f64, j: usize, higher: &[(usize, i64)]) -> f64 {
    higher
        .iter()
        .filter(|(_, k)| k.rem_euclid(2) == 1)
        .map(|&(i, _)| side / 2f64.powi((i - j) as i32))
        .sum()
}

/// Staggered-brick cover of a generated grid (a segment counts as a 1-d grid).
///
/// Boxes have side `side`; each box is enlarged by `side / 8` on every face
/// and membership is half-open (`[lo, hi)`). Rows along coordinate `j` are
/// shifted in coordinate `j - 1` by `side / 2`, and the layers above them
/// add halving shifts (`side / 4`, ...), so that junction zones of adjacent
/// layers never coincide. The point multiplicity is checked against `d + 1`.
pub fn brick_cover(space: &FiniteMetricSpace, side: f64) -> Result<Cover, CoverError> {
    let (dim, m) = match *space.provenance() {
        Provenance::Grid { dim, m } => (dim, m),
        Provenance::Segment { n } => (1, n),
        ref other => return Err(CoverError::NotAGrid(format!("{other:?}"))),
    };
    let spacing = if m > 1 { 1.0 / (m - 1) as f64 } else { 0.0 };
    if !(side > spacing) || !side.is_finite() {
        return Err(CoverError::SideTooSmall { side, spacing });
    }
    let coords = space.coords().expect("grids carry coordinates");
    let margin = side / 8.0;
    let mut boxes: BTreeMap<Vec<i64>, Vec<PointId>> = BTreeMap::new();
    for (p, x) in coords.iter().enumerate() {
        // box keys are built from the top coordinate down: (dim-1, k), ...
        let mut partial: Vec<Vec<(usize, i64)>> = vec![Vec::new()];
        for j in (0..dim).rev() {
            let mut next = Vec::new();
            for prefix in &partial {
                let shift = brick_shift(side, j, prefix);
                let base = ((x[j] - shift) / side).floor() as i64;
                for k in (base - 1)..=(base + 1) {
                    let lo = k as f64 * side + shift - margin;
                    let hi = (k + 1) as f64 * side + shift + margin;
                    if lo <= x[j] && x[j] < hi {
                        let mut key = prefix.clone();
                        key.push((j, k));
                        next.push(key);
                    }
                }
            }
            partial = next;
        }
        for key in partial {
            boxes.entry(key.into_iter().map(|(_, k)| k).collect()).or_default().push(p);
        }
    }
    let cover = Cover::new(space, boxes.into_values().collect())?;
    let report = cover_multiplicity(space, &cover, dim + 1);
    if report.max_point_multiplicity > dim + 1 {
        return Err(CoverError::MultiplicityExceeded { report, bound: dim + 1 });
    }
    Ok(cover)
}
