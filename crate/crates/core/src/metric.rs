//! Finite metric spaces, their generators, open balls and total orders.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance applied to metric validation (times the diameter).
pub const METRIC_TOLERANCE: f64 = 1e-9;

/// Largest number of points a generator will produce.
pub const MAX_GENERATED_POINTS: usize = 4096;

pub type PointId = usize;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("EmptyMatrix: distance matrix is empty")]
    EmptyMatrix,
    #[error("NotSquare: distance matrix is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },
    #[error("NonFinite: distance ({i},{j}) is not finite")]
    NonFinite { i: usize, j: usize },
    #[error("NonZeroDiagonal: diagonal entry ({i},{i}) is {value}, expected 0")]
    NonZeroDiagonal { i: usize, value: f64 },
    #[error("AsymmetricMatrix: d({i},{j}) = {dij} but d({j},{i}) = {dji}")]
    AsymmetricMatrix { i: usize, j: usize, dij: f64, dji: f64 },
    #[error("NegativeDistance: d({i},{j}) = {value}")]
    NegativeDistance { i: usize, j: usize, value: f64 },
    #[error("CoincidentPoints: d({i},{j}) = 0 for distinct points")]
    CoincidentPoints { i: usize, j: usize },
    #[error("TriangleViolation ({i},{j},{k}): d({i},{k}) > d({i},{j}) + d({j},{k})")]
    TriangleViolation { i: usize, j: usize, k: usize },
    #[error("BadParams: {0}")]
    BadParams(String),
    #[error("NotGenerated: space has no natural order ({0})")]
    NotGenerated(String),
    #[error("NotAPermutation: {0}")]
    NotAPermutation(String),
    #[error("PointOutOfRange: point id {0} out of range")]
    PointOutOfRange(PointId),
}

/// Where a space came from. Generated spaces remember their parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Ingested,
    Points { p: String },
    Segment { n: usize },
    Circle { n: usize },
    Grid { dim: usize, m: usize },
    Tripod { m: usize },
    TripodProduct { factors: usize, m: usize, metric: String },
    Cantor { depth: usize },
}

/// Generator parameters for the synthetic test geometries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    /// `n` equally spaced points on `[0,1]`.
    Segment { n: usize },
    /// `n` equally spaced points on a circle of unit circumference.
    Circle { n: usize },
    /// `m^dim` lattice in the unit cube.
    Grid { dim: usize, m: usize },
    /// Center plus three unit legs of `m` points each, path metric.
    Tripod { m: usize },
    /// `factors`-fold product of `Tripod { m }` under the max metric.
    TripodProduct { factors: usize, m: usize },
    /// Left endpoints of the `2^depth` intervals of the middle-thirds construction.
    Cantor { depth: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetricSpace {
    n: usize,
    dist: Vec<f64>,
    diameter: f64,
    labels: Option<Vec<String>>,
    coords: Option<Vec<Vec<f64>>>,
    provenance: Provenance,
}

impl FiniteMetricSpace {
    /// Validates a square distance matrix and wraps it as an ingested space.
    pub fn from_matrix(matrix: &[Vec<f64>]) -> Result<Self, MetricError> {
        let n = matrix.len();
        if n == 0 {
            return Err(MetricError::EmptyMatrix);
        }
        for (row, r) in matrix.iter().enumerate() {
            if r.len() != n {
                return Err(MetricError::NotSquare { row, len: r.len(), expected: n });
            }
        }
        let dist: Vec<f64> = matrix.iter().flatten().copied().collect();
        let space = Self::from_parts(n, dist, None, Provenance::Ingested);
        space.validate()?;
        Ok(space)
    }

    /// Builds a Euclidean space from coordinates and validates it.
    pub fn from_points(coords: Vec<Vec<f64>>) -> Result<Self, MetricError> {
        let n = coords.len();
        if n == 0 {
            return Err(MetricError::EmptyMatrix);
        }
        let dim = coords[0].len();
        if let Some(bad) = coords.iter().position(|c| c.len() != dim) {
            return Err(MetricError::BadParams(format!(
                "point {bad} has {} coordinates, expected {dim}",
                coords[bad].len()
            )));
        }
        let dist = euclidean_matrix(&coords);
        let mut space = Self::from_parts(n, dist, Some(coords), Provenance::Points { p: "euclidean".into() });
        space.validate()?;
        space.labels = None;
        Ok(space)
    }

    fn from_parts(n: usize, dist: Vec<f64>, coords: Option<Vec<Vec<f64>>>, provenance: Provenance) -> Self {
        let diameter = dist.iter().copied().filter(|d| d.is_finite()).fold(0.0, f64::max);
        FiniteMetricSpace { n, dist, diameter, labels: None, coords, provenance }
    }

    /// Checks every metric axiom. The triangle check is cubic in the point count.
    pub fn validate(&self) -> Result<(), MetricError> {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                if !self.d(i, j).is_finite() {
                    return Err(MetricError::NonFinite { i, j });
                }
            }
        }
        let tol = METRIC_TOLERANCE * self.diameter;
        for i in 0..n {
            let dii = self.d(i, i);
            if dii != 0.0 {
                return Err(MetricError::NonZeroDiagonal { i, value: dii });
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let (dij, dji) = (self.d(i, j), self.d(j, i));
                if (dij - dji).abs() > tol {
                    return Err(MetricError::AsymmetricMatrix { i, j, dij, dji });
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                if self.d(i, j) < 0.0 {
                    return Err(MetricError::NegativeDistance { i, j, value: self.d(i, j) });
                }
                if i != j && self.d(i, j) == 0.0 {
                    return Err(MetricError::CoincidentPoints { i: i.min(j), j: i.max(j) });
                }
            }
        }
        for i in 0..n {
            for k in (i + 1)..n {
                let dik = self.d(i, k);
                for j in 0..n {
                    if j != i && j != k && dik > self.d(i, j) + self.d(j, k) + tol {
                        return Err(MetricError::TriangleViolation { i, j, k });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn generate(generator: Generator) -> Result<Self, MetricError> {
        generator.build()
    }

    #[inline]
    pub fn d(&self, i: PointId, j: PointId) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn row(&self, i: PointId) -> &[f64] {
        &self.dist[i * self.n..(i + 1) * self.n]
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn coords(&self) -> Option<&[Vec<f64>]> {
        self.coords.as_deref()
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self, MetricError> {
        if labels.len() != self.n {
            return Err(MetricError::BadParams(format!("{} labels for {} points", labels.len(), self.n)));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn check_point(&self, p: PointId) -> Result<(), MetricError> {
        if p < self.n {
            Ok(())
        } else {
            Err(MetricError::PointOutOfRange(p))
        }
    }

    /// Open ball `{ p : d(center, p) < radius }`, as sorted point ids.
    pub fn ball(&self, center: PointId, radius: f64) -> Vec<PointId> {
        self.row(center)
            .iter()
            .enumerate()
            .filter(|(_, &d)| d < radius)
            .map(|(p, _)| p)
            .collect()
    }

    /// Smallest positive distance in the space (`inf` for a single point).
    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                best = best.min(self.d(i, j));
            }
        }
        best
    }

    /// Distances in row-major order.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    /// The natural order of a generated segment or circle.
    ///
    /// Segment points are already generated in coordinate order. For the
    /// circle, point 0 is the glue point `0 = 1`, which goes first; the rest
    /// follow in coordinate order on `(0,1)`, which is again id order.
    pub fn natural_order(&self) -> Result<TotalOrder, MetricError> {
        match self.provenance {
            Provenance::Segment { .. } | Provenance::Circle { .. } => Ok(TotalOrder::identity(self.n)),
            ref other => Err(MetricError::NotGenerated(format!("{other:?}"))),
        }
    }

    pub fn order_from_permutation(&self, perm: Vec<PointId>) -> Result<TotalOrder, MetricError> {
        if perm.len() != self.n {
            return Err(MetricError::NotAPermutation(format!(
                "{} entries for {} points",
                perm.len(),
                self.n
            )));
        }
        TotalOrder::from_sequence(perm)
    }
}

fn euclidean_matrix(coords: &[Vec<f64>]) -> Vec<f64> {
    let n = coords.len();
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = coords[i]
                .iter()
                .zip(&coords[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    dist
}

fn matrix_from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Vec<f64> {
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = f(i, j);
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    dist
}

/// Position of a tripod point: `None` for the center, else `(leg, t)` with `t ∈ (0,1]`.
fn tripod_position(m: usize, id: usize) -> Option<(usize, f64)> {
    if id == 0 {
        None
    } else {
        let leg = (id - 1) / m;
        let k = (id - 1) % m + 1;
        Some((leg, k as f64 / m as f64))
    }
}

fn tripod_distance(m: usize, a: usize, b: usize) -> f64 {
    match (tripod_position(m, a), tripod_position(m, b)) {
        (None, None) => 0.0,
        (None, Some((_, t))) | (Some((_, t)), None) => t,
        (Some((la, ta)), Some((lb, tb))) => {
            if la == lb {
                (ta - tb).abs()
            } else {
                ta + tb
            }
        }
    }
}

impl Generator {
    pub fn n_points(&self) -> Option<usize> {
        match *self {
            Generator::Segment { n } | Generator::Circle { n } => Some(n),
            Generator::Grid { dim, m } => checked_pow(m, dim),
            Generator::Tripod { m } => m.checked_mul(3)?.checked_add(1),
            Generator::TripodProduct { factors, m } => checked_pow(m.checked_mul(3)?.checked_add(1)?, factors),
            Generator::Cantor { depth } => {
                if depth < usize::BITS as usize {
                    Some(1usize << depth)
                } else {
                    None
                }
            }
        }
    }

    fn check(&self) -> Result<usize, MetricError> {
        let bad = |msg: &str| Err(MetricError::BadParams(msg.to_string()));
        match *self {
            Generator::Segment { n } | Generator::Circle { n } if n == 0 => return bad("point count must be >= 1"),
            Generator::Grid { dim, m } if dim == 0 || m == 0 => return bad("grid needs dim >= 1 and m >= 1"),
            Generator::Tripod { m: 0 } => return bad("tripod legs need m >= 1 points"),
            Generator::TripodProduct { factors, m } if factors == 0 || m == 0 => {
                return bad("tripod product needs n >= 1 factors and m >= 1")
            }
            Generator::Cantor { depth: 0 } => return bad("cantor depth must be >= 1"),
            _ => {}
        }
        match self.n_points() {
            Some(n) if n <= MAX_GENERATED_POINTS => Ok(n),
            _ => Err(MetricError::BadParams(format!(
                "{self:?} would exceed {MAX_GENERATED_POINTS} points"
            ))),
        }
    }

    pub fn build(&self) -> Result<FiniteMetricSpace, MetricError> {
        let count = self.check()?;
        let space = match *self {
            Generator::Segment { n } => {
                let denom = (n.max(2) - 1) as f64;
                let xs: Vec<f64> = (0..n).map(|k| k as f64 / denom).collect();
                let dist = matrix_from_fn(n, |i, j| (xs[i] - xs[j]).abs());
                let coords = xs.iter().map(|&x| vec![x]).collect();
                FiniteMetricSpace::from_parts(n, dist, Some(coords), Provenance::Segment { n })
            }
            Generator::Circle { n } => {
                let xs: Vec<f64> = (0..n).map(|k| k as f64 / n as f64).collect();
                let dist = matrix_from_fn(n, |i, j| {
                    let a = (xs[i] - xs[j]).abs();
                    a.min(1.0 - a)
                });
                let coords = xs.iter().map(|&x| vec![x]).collect();
                FiniteMetricSpace::from_parts(n, dist, Some(coords), Provenance::Circle { n })
            }
            Generator::Grid { dim, m } => {
                let denom = (m.max(2) - 1) as f64;
                let coords: Vec<Vec<f64>> = (0..count)
                    .map(|mut idx| {
                        let mut c = vec![0.0; dim];
                        for slot in c.iter_mut() {
                            *slot = (idx % m) as f64 / denom;
                            idx /= m;
                        }
                        c
                    })
                    .collect();
                let dist = euclidean_matrix(&coords);
                FiniteMetricSpace::from_parts(count, dist, Some(coords), Provenance::Grid { dim, m })
            }
            Generator::Tripod { m } => {
                let dist = matrix_from_fn(count, |i, j| tripod_distance(m, i, j));
                FiniteMetricSpace::from_parts(count, dist, None, Provenance::Tripod { m })
            }
            Generator::TripodProduct { factors, m } => {
                let base = 3 * m + 1;
                let digits = |mut idx: usize| {
                    let mut out = Vec::with_capacity(factors);
                    for _ in 0..factors {
                        out.push(idx % base);
                        idx /= base;
                    }
                    out
                };
                let tuples: Vec<Vec<usize>> = (0..count).map(digits).collect();
                let dist = matrix_from_fn(count, |i, j| {
                    tuples[i]
                        .iter()
                        .zip(&tuples[j])
                        .map(|(&a, &b)| tripod_distance(m, a, b))
                        .fold(0.0, f64::max)
                });
                FiniteMetricSpace::from_parts(
                    count,
                    dist,
                    None,
                    Provenance::TripodProduct { factors, m, metric: "max".into() },
                )
            }
            Generator::Cantor { depth } => {
                let xs: Vec<f64> = (0..count)
                    .map(|idx| {
                        // bit k (most significant first) selects the right third at level k+1
                        (0..depth)
                            .filter(|k| idx >> (depth - 1 - k) & 1 == 1)
                            .map(|k| 2.0 * 3f64.powi(-(k as i32 + 1)))
                            .sum()
                    })
                    .collect();
                let dist = matrix_from_fn(count, |i, j| (xs[i] - xs[j]).abs());
                let coords = xs.iter().map(|&x| vec![x]).collect();
                FiniteMetricSpace::from_parts(count, dist, Some(coords), Provenance::Cantor { depth })
            }
        };
        Ok(space)
    }
}

fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    let exp = u32::try_from(exp).ok()?;
    base.checked_pow(exp)
}

/// Gap between sibling construction blocks at level `k` of the Cantor set.
pub fn cantor_gap(level: usize) -> f64 {
    3f64.powi(-(level as i32))
}

/// A strict total order on point ids, stored as a rank permutation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TotalOrder {
    rank: Vec<usize>,
    seq: Vec<PointId>,
}

/// Serialized as the point sequence from least to greatest.
impl Serialize for TotalOrder {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.seq.serialize(serializer)
    }
}

impl TotalOrder {
    pub fn identity(n: usize) -> Self {
        TotalOrder { rank: (0..n).collect(), seq: (0..n).collect() }
    }

    /// `seq` lists point ids in increasing order, so `rank(seq[k]) = k`.
    pub fn from_sequence(seq: Vec<PointId>) -> Result<Self, MetricError> {
        let n = seq.len();
        let mut rank = vec![usize::MAX; n];
        for (k, &p) in seq.iter().enumerate() {
            if p >= n {
                return Err(MetricError::NotAPermutation(format!("id {p} out of range for {n} points")));
            }
            if rank[p] != usize::MAX {
                return Err(MetricError::NotAPermutation(format!("id {p} repeated")));
            }
            rank[p] = k;
        }
        Ok(TotalOrder { rank, seq })
    }

    /// Sorts point ids by `key`, breaking ties by point id.
    pub fn sorted_by_key<K: Ord>(n: usize, key: impl Fn(PointId) -> K) -> Self {
        let mut seq: Vec<PointId> = (0..n).collect();
        seq.sort_by(|&a, &b| key(a).cmp(&key(b)).then(a.cmp(&b)));
        Self::from_sequence(seq).expect("sorting a range yields a permutation")
    }

    pub fn len(&self) -> usize {
        self.seq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seq.is_empty()
    }

    #[inline]
    pub fn rank(&self, p: PointId) -> usize {
        self.rank[p]
    }

    #[inline]
    pub fn point_at(&self, rank: usize) -> PointId {
        self.seq[rank]
    }

    pub fn ranks(&self) -> &[usize] {
        &self.rank
    }

    pub fn sequence(&self) -> &[PointId] {
        &self.seq
    }

    pub fn less(&self, a: PointId, b: PointId) -> bool {
        self.rank[a] < self.rank[b]
    }

    pub fn reversed(&self) -> Self {
        let seq: Vec<_> = self.seq.iter().rev().copied().collect();
        Self::from_sequence(seq).expect("reversal keeps a permutation")
    }

    /// Checks that `rank` and `seq` are mutually inverse bijections.
    pub fn is_bijection(&self) -> bool {
        let n = self.seq.len();
        self.rank.len() == n
            && self.seq.iter().enumerate().all(|(k, &p)| p < n && self.rank[p] == k)
    }
}

/// An ordered pair of distinct points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PointPair {
    pub x: PointId,
    pub y: PointId,
}

impl PointPair {
    pub fn new(x: PointId, y: PointId) -> Option<Self> {
        (x != y).then_some(PointPair { x, y })
    }

    pub fn swapped(self) -> Self {
        PointPair { x: self.y, y: self.x }
    }
}

/// The bit-reversal permutation of `0..2^bits`, as a sequence in T-order.
pub fn bit_reversal_sequence(n: usize) -> Vec<PointId> {
    let bits = n.next_power_of_two().trailing_zeros();
    let mut seq: Vec<PointId> = (0..n.next_power_of_two())
        .map(|i| if bits == 0 { i } else { i.reverse_bits() >> (usize::BITS - bits) })
        .filter(|&p| p < n)
        .collect();
    seq.truncate(n);
    seq
}
