//! Refinement hierarchies of covers with a parent map and certified
//! multiplicity margins.
//!
//! Level 0 is the whole space. Every set at level `i ≥ 1` names a parent at
//! level `i - 1` that contains it, meshes at least halve from level to level,
//! and each level carries a positive margin: every open ball of that radius
//! meets at most `mult_bound` sets of the level.

use serde::{Deserialize, Serialize};

use crate::cover::{
    brick_cover, cover_multiplicity, lebesgue_number, multiplicity_margin, set_diameter, Cover, CoverError,
};
use crate::metric::{FiniteMetricSpace, PointId, Provenance};
use crate::real::Real;

/// How intermediate levels are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Builder {
    /// Staggered brick covers (generated grids only).
    Brick,
    /// Single-linkage partitions; works for any space.
    Partition,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverHierarchy {
    levels: Vec<Cover>,
    /// `parent[i - 1][u]` is the index at level `i - 1` of the parent of set `u` at level `i`.
    parent: Vec<Vec<usize>>,
    margins: Vec<f64>,
    mult_bound: usize,
}

impl CoverHierarchy {
    /// Assembles a hierarchy from explicit parts. Margins are computed here;
    /// nothing else is checked (see [`validate_hierarchy`]).
    pub fn from_parts(
        space: &FiniteMetricSpace,
        levels: Vec<Cover>,
        parent: Vec<Vec<usize>>,
        mult_bound: usize,
    ) -> Result<Self, CoverError> {
        if levels.is_empty() {
            return Err(CoverError::BadParams("a hierarchy needs at least one level".into()));
        }
        if parent.len() + 1 != levels.len() {
            return Err(CoverError::BadParams(format!(
                "{} parent maps for {} levels",
                parent.len(),
                levels.len()
            )));
        }
        for (i, map) in parent.iter().enumerate() {
            if map.len() != levels[i + 1].len() {
                return Err(CoverError::BadParams(format!(
                    "level {} has {} sets but {} parent entries",
                    i + 1,
                    levels[i + 1].len(),
                    map.len()
                )));
            }
        }
        let margins = levels.iter().map(|c| multiplicity_margin(space, c, mult_bound)).collect();
        Ok(CoverHierarchy { levels, parent, margins, mult_bound })
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[Cover] {
        &self.levels
    }

    pub fn level(&self, i: usize) -> &Cover {
        &self.levels[i]
    }

    /// Parent of set `set` at level `level ≥ 1`.
    pub fn parent_of(&self, level: usize, set: usize) -> usize {
        self.parent[level - 1][set]
    }

    pub fn parent_maps(&self) -> &[Vec<usize>] {
        &self.parent
    }

    pub fn meshes(&self) -> Vec<f64> {
        self.levels.iter().map(Cover::mesh).collect()
    }

    pub fn margins(&self) -> &[f64] {
        &self.margins
    }

    pub fn mult_bound(&self) -> usize {
        self.mult_bound
    }

    /// Replaces the stored margins, e.g. with values read back from a file.
    pub fn with_margins(mut self, margins: Vec<f64>) -> Result<Self, CoverError> {
        if margins.len() != self.levels.len() {
            return Err(CoverError::BadParams("one margin per level required".into()));
        }
        self.margins = margins;
        Ok(self)
    }
}

fn is_subset(small: &[PointId], big: &[PointId]) -> bool {
    // both sorted
    let mut it = big.iter();
    small.iter().all(|p| it.any(|q| q == p))
}

/// Smallest-index parent containing each child set.
fn parent_map(prev: &Cover, next: &Cover) -> Option<Vec<usize>> {
    next.sets()
        .iter()
        .map(|child| prev.sets().iter().position(|parent| is_subset(child, parent)))
        .collect()
}

struct LevelCandidate {
    cover: Cover,
    margin: f64,
}

fn accept(
    space: &FiniteMetricSpace,
    prev: &Cover,
    prev_lebesgue: f64,
    cover: Cover,
    mult_bound: usize,
) -> Result<Option<LevelCandidate>, CoverError> {
    let fine_enough = cover.mesh() <= prev.mesh() / 2.0 && cover.mesh() < prev.mesh() && cover.mesh() < prev_lebesgue;
    if !fine_enough {
        return Ok(None);
    }
    let report = cover_multiplicity(space, &cover, mult_bound);
    if report.max_point_multiplicity > mult_bound {
        return Err(CoverError::MultiplicityExceeded { report, bound: mult_bound });
    }
    Ok(Some(LevelCandidate { margin: report.margin.0, cover }))
}

const BRICK_SHRINK: f64 = 0.9;

fn next_brick_level(
    space: &FiniteMetricSpace,
    level: usize,
    prev: &Cover,
    start_side: f64,
    mult_bound: usize,
) -> Result<(LevelCandidate, f64), CoverError> {
    let lebesgue = lebesgue_number(space, prev);
    let mut side = start_side;
    loop {
        let cover = match brick_cover(space, side) {
            Ok(c) => c,
            Err(CoverError::SideTooSmall { spacing, .. }) => {
                return Err(CoverError::CannotRefine {
                    level,
                    reason: format!("brick side fell to the grid spacing {spacing} before the mesh halved"),
                })
            }
            Err(e) => return Err(e),
        };
        if let Some(candidate) = accept(space, prev, lebesgue, cover, mult_bound)? {
            return Ok((candidate, side));
        }
        side *= BRICK_SHRINK;
    }
}

/// Minimum spanning tree edges `(weight, a, b)` by Prim's algorithm.
fn minimum_spanning_tree(space: &FiniteMetricSpace) -> Vec<(f64, PointId, PointId)> {
    let n = space.len();
    let mut in_tree = vec![false; n];
    let mut best = vec![(f64::INFINITY, 0usize); n];
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    if n == 0 {
        return edges;
    }
    in_tree[0] = true;
    for p in 1..n {
        best[p] = (space.d(0, p), 0);
    }
    for _ in 1..n {
        let next = (0..n)
            .filter(|&p| !in_tree[p])
            .min_by(|&a, &b| best[a].0.total_cmp(&best[b].0).then(a.cmp(&b)))
            .expect("a point remains outside the tree");
        in_tree[next] = true;
        edges.push((best[next].0, best[next].1, next));
        for p in 0..n {
            if !in_tree[p] && space.d(next, p) < best[p].0 {
                best[p] = (space.d(next, p), next);
            }
        }
    }
    edges
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Connected components of the MST restricted to edges shorter than `cut`,
/// listed in order of their smallest point.
fn components_below(n: usize, mst: &[(f64, PointId, PointId)], cut: f64) -> Vec<Vec<PointId>> {
    let mut uf: Vec<usize> = (0..n).collect();
    for &(w, a, b) in mst {
        if w < cut {
            let (ra, rb) = (find(&mut uf, a), find(&mut uf, b));
            if ra != rb {
                uf[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let mut slot = vec![usize::MAX; n];
    let mut out: Vec<Vec<PointId>> = Vec::new();
    for p in 0..n {
        let root = find(&mut uf, p);
        if slot[root] == usize::MAX {
            slot[root] = out.len();
            out.push(Vec::new());
        }
        out[slot[root]].push(p);
    }
    out
}

fn next_partition_level(
    space: &FiniteMetricSpace,
    level: usize,
    prev: &Cover,
    mst: &[(f64, PointId, PointId)],
    mult_bound: usize,
) -> Result<LevelCandidate, CoverError> {
    let lebesgue = lebesgue_number(space, prev);
    let mut cuts: Vec<f64> = mst.iter().map(|e| e.0).collect();
    cuts.sort_by(|a, b| b.total_cmp(a));
    cuts.dedup();
    for cut in cuts {
        let cover = Cover::new(space, components_below(space.len(), mst, cut))?;
        if let Some(candidate) = accept(space, prev, lebesgue, cover, mult_bound)? {
            return Ok(candidate);
        }
    }
    Err(CoverError::CannotRefine { level, reason: "no single-linkage cut halves the mesh".into() })
}

/// Builds a hierarchy with `depth` levels.
///
/// Level 0 is `{M}`; levels `1..depth-1` come from the builder, each the
/// coarsest candidate whose mesh is at most half the previous mesh and below
/// the previous level's Lebesgue number (which guarantees a parent exists).
/// For `depth ≥ 2` the last level is the partition into single points, so
/// that distinct points end on distinct chains.
pub fn build_hierarchy(
    space: &FiniteMetricSpace,
    builder: Builder,
    depth: usize,
    mult_bound: usize,
) -> Result<CoverHierarchy, CoverError> {
    if depth == 0 || mult_bound == 0 {
        return Err(CoverError::BadParams("depth and mult_bound must be >= 1".into()));
    }
    if builder == Builder::Brick && !matches!(space.provenance(), Provenance::Grid { .. } | Provenance::Segment { .. }) {
        return Err(CoverError::NotAGrid(format!("{:?}", space.provenance())));
    }
    let mut levels = vec![Cover::whole(space)];
    let mut parent = Vec::new();
    let mut margins = vec![multiplicity_margin(space, &levels[0], mult_bound)];
    let mst = if builder == Builder::Partition { minimum_spanning_tree(space) } else { Vec::new() };
    let mut side = 0.5;
    for level in 1..depth {
        let prev = levels.last().expect("level 0 exists");
        let candidate = if level == depth - 1 {
            let cover = Cover::singletons(space);
            let lebesgue = lebesgue_number(space, prev);
            accept(space, prev, lebesgue, cover, mult_bound)?.ok_or_else(|| CoverError::CannotRefine {
                level,
                reason: format!("previous level already has mesh {}", prev.mesh()),
            })?
        } else {
            match builder {
                Builder::Brick => {
                    let (candidate, used) = next_brick_level(space, level, prev, side, mult_bound)?;
                    side = used / 2.0;
                    candidate
                }
                Builder::Partition => next_partition_level(space, level, prev, &mst, mult_bound)?,
            }
        };
        if candidate.margin <= 0.0 {
            return Err(CoverError::MultiplicityExceeded {
                report: cover_multiplicity(space, &candidate.cover, mult_bound),
                bound: mult_bound,
            });
        }
        let map = parent_map(prev, &candidate.cover).ok_or_else(|| CoverError::CannotRefine {
            level,
            reason: "a set has no parent containing it".into(),
        })?;
        parent.push(map);
        margins.push(candidate.margin);
        levels.push(candidate.cover);
    }
    let hierarchy = CoverHierarchy { levels, parent, margins, mult_bound };
    let report = validate_hierarchy(space, &hierarchy, mult_bound);
    debug_assert!(report.ok, "builder produced an invalid hierarchy: {report:?}");
    Ok(hierarchy)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelDiagnostics {
    pub level: usize,
    pub sets: usize,
    pub mesh: Real,
    pub recomputed_mesh: Real,
    pub margin: Real,
    pub recomputed_margin: Real,
    pub max_multiplicity: usize,
    pub covers_space: bool,
    pub mesh_ok: bool,
    pub margin_ok: bool,
    /// Sets at this level that are not contained in their named parent.
    pub refinement_failures: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HierarchyReport {
    pub ok: bool,
    pub mult_bound: usize,
    pub levels: Vec<LevelDiagnostics>,
}

/// Checks refinement set by set, mesh halving and positive margins.
pub fn validate_hierarchy(space: &FiniteMetricSpace, h: &CoverHierarchy, mult_bound: usize) -> HierarchyReport {
    let n = space.len();
    let mut levels = Vec::with_capacity(h.depth());
    for (i, cover) in h.levels.iter().enumerate() {
        let recomputed_mesh = cover.sets().iter().map(|s| set_diameter(space, s)).fold(0.0, f64::max);
        let recomputed_margin = multiplicity_margin(space, cover, mult_bound);
        let counts = cover.memberships(n);
        let covers_space = counts.iter().all(|c| !c.is_empty())
            && cover.sets().iter().flatten().all(|&p| p < n);
        let max_multiplicity = counts.iter().map(Vec::len).max().unwrap_or(0);
        let mesh_ok = recomputed_mesh == cover.mesh()
            && (i == 0 || {
                let prev = h.levels[i - 1].mesh();
                recomputed_mesh < prev && recomputed_mesh <= prev / 2.0
            });
        let refinement_failures = if i == 0 {
            Vec::new()
        } else {
            let prev = &h.levels[i - 1];
            cover
                .sets()
                .iter()
                .enumerate()
                .filter(|&(u, set)| {
                    let p = h.parent[i - 1][u];
                    p >= prev.len() || !is_subset(set, &prev.sets()[p])
                })
                .map(|(u, _)| u)
                .collect()
        };
        let stored_margin = h.margins[i];
        let margin_ok = recomputed_margin > 0.0 && stored_margin > 0.0 && stored_margin <= recomputed_margin;
        levels.push(LevelDiagnostics {
            level: i,
            sets: cover.len(),
            mesh: Real(cover.mesh()),
            recomputed_mesh: Real(recomputed_mesh),
            margin: Real(stored_margin),
            recomputed_margin: Real(recomputed_margin),
            max_multiplicity,
            covers_space,
            mesh_ok,
            margin_ok,
            refinement_failures,
        });
    }
    let ok = levels
        .iter()
        .all(|l| l.covers_space && l.mesh_ok && l.margin_ok && l.refinement_failures.is_empty());
    HierarchyReport { ok, mult_bound, levels }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cover::sets_met_by_ball;
    use crate::metric::Generator;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn check_margins_by_enumeration(space: &FiniteMetricSpace, h: &CoverHierarchy, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (cover, &margin) in h.levels().iter().zip(h.margins()) {
            assert!(margin > 0.0);
            let r = if margin.is_finite() { margin } else { space.diameter() * 2.0 };
            for _ in 0..100 {
                let x = rng.gen_range(0..space.len());
                assert!(sets_met_by_ball(space, cover, x, r) <= h.mult_bound());
            }
        }
    }

    #[test]
    fn grid1_brick_hierarchy() {
        let s = Generator::Grid { dim: 1, m: 64 }.build().unwrap();
        let h = build_hierarchy(&s, Builder::Brick, 4, 2).unwrap();
        assert_eq!(h.depth(), 4);
        assert!(validate_hierarchy(&s, &h, 2).ok);
        assert!(h.margins().iter().all(|&m| m > 0.0));
        check_margins_by_enumeration(&s, &h, 1);
    }

    #[test]
    fn grid2_brick_hierarchy() {
        let s = Generator::Grid { dim: 2, m: 32 }.build().unwrap();
        let h = build_hierarchy(&s, Builder::Brick, 3, 3).unwrap();
        assert!(validate_hierarchy(&s, &h, 3).ok);
        check_margins_by_enumeration(&s, &h, 2);
    }

    #[test]
    fn grid3_brick_hierarchy() {
        let s = Generator::Grid { dim: 3, m: 8 }.build().unwrap();
        let h = build_hierarchy(&s, Builder::Brick, 3, 4).unwrap();
        assert!(validate_hierarchy(&s, &h, 4).ok);
        check_margins_by_enumeration(&s, &h, 3);
    }

    #[test]
    fn cantor_partition_uses_construction_blocks() {
        let s = Generator::Cantor { depth: 5 }.build().unwrap();
        let h = build_hierarchy(&s, Builder::Partition, 4, 1).unwrap();
        assert!(validate_hierarchy(&s, &h, 1).ok);
        // level k is the partition into the 2^k construction blocks
        for k in 1..3 {
            let expected: Vec<Vec<usize>> =
                (0..1usize << k).map(|b| (b << (5 - k)..(b + 1) << (5 - k)).collect()).collect();
            assert_eq!(h.level(k).sets(), expected.as_slice());
        }
        assert_eq!(h.level(3).len(), 32);
        check_margins_by_enumeration(&s, &h, 4);
    }

    #[test]
    fn parent_tie_break_is_smallest_index() {
        let s = FiniteMetricSpace::from_points(vec![vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let prev = Cover::new(&s, vec![vec![0, 1, 2], vec![0, 1, 2]]).unwrap();
        let next = Cover::singletons(&s);
        assert_eq!(parent_map(&prev, &next).unwrap(), vec![0, 0, 0]);
    }

    #[test]
    fn brick_requires_grid_and_params() {
        let s = Generator::Circle { n: 20 }.build().unwrap();
        assert!(matches!(build_hierarchy(&s, Builder::Brick, 3, 2), Err(CoverError::NotAGrid(_))));
        assert!(build_hierarchy(&s, Builder::Partition, 0, 2).is_err());
        assert!(build_hierarchy(&s, Builder::Partition, 3, 0).is_err());
    }

    #[test]
    fn multiplicity_bound_too_small() {
        let s = Generator::Grid { dim: 2, m: 16 }.build().unwrap();
        assert!(matches!(
            build_hierarchy(&s, Builder::Brick, 3, 1),
            Err(CoverError::MultiplicityExceeded { .. })
        ));
    }

    #[test]
    fn cannot_refine_past_the_spacing() {
        let s = Generator::Grid { dim: 1, m: 8 }.build().unwrap();
        assert!(matches!(build_hierarchy(&s, Builder::Brick, 8, 2), Err(CoverError::CannotRefine { .. })));
    }

    #[test]
    fn depth_one_is_the_whole_space() {
        let s = Generator::Segment { n: 5 }.build().unwrap();
        let h = build_hierarchy(&s, Builder::Partition, 1, 1).unwrap();
        assert_eq!(h.depth(), 1);
        assert_eq!(h.level(0).sets(), &[vec![0, 1, 2, 3, 4]]);
        assert_eq!(h.margins()[0], f64::INFINITY);
    }

    #[test]
    fn validator_catches_injected_faults() {
        let s = Generator::Segment { n: 8 }.build().unwrap();
        let good = build_hierarchy(&s, Builder::Partition, 3, 1).unwrap();
        assert!(validate_hierarchy(&s, &good, 1).ok);

        // wrong parent
        let mut levels = good.levels().to_vec();
        levels[1] = Cover::new(&s, vec![vec![0, 1, 2, 3], vec![4, 5, 6, 7]]).unwrap();
        let bad_parent = CoverHierarchy::from_parts(
            &s,
            vec![levels[0].clone(), levels[1].clone(), Cover::singletons(&s)],
            vec![vec![0, 0], vec![0, 0, 0, 0, 1, 1, 1, 0]],
            1,
        )
        .unwrap();
        let report = validate_hierarchy(&s, &bad_parent, 1);
        assert!(!report.ok);
        assert_eq!(report.levels[2].refinement_failures, vec![7]);

        // a point in mult_bound + 1 sets
        let overlapping = Cover::new(&s, vec![vec![0, 1, 2, 3], vec![3, 4, 5, 6, 7]]).unwrap();
        let fat = CoverHierarchy::from_parts(&s, vec![Cover::whole(&s), overlapping], vec![vec![0, 0]], 1).unwrap();
        let report = validate_hierarchy(&s, &fat, 1);
        assert!(!report.ok);
        assert!(!report.levels[1].margin_ok);
        assert_eq!(report.levels[1].recomputed_margin.0, 0.0);
    }
}
