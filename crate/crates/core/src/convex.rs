//! `T`-convex hulls and the decomposition of a ball's exterior into
//! `T`-convex classes whose hulls avoid a smaller ball.

use serde::Serialize;
use thiserror::Error;

use crate::metric::{FiniteMetricSpace, PointId, TotalOrder};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConvexError {
    #[error("EmptyExterior: no point lies at distance >= {r} from {x0}")]
    EmptyExterior { x0: PointId, r: f64 },
    #[error("BadParams: {0}")]
    BadParams(String),
}

/// Smallest `T`-convex superset of `subset`: on a finite order, the order
/// interval between its minimum and maximum. Returned in `T`-order.
pub fn t_convex_hull(order: &TotalOrder, subset: &[PointId]) -> Vec<PointId> {
    let ranks = subset.iter().map(|&p| order.rank(p));
    match (ranks.clone().min(), ranks.max()) {
        (Some(lo), Some(hi)) => order.sequence()[lo..=hi].to_vec(),
        _ => Vec::new(),
    }
}

pub fn is_t_convex(order: &TotalOrder, subset: &[PointId]) -> bool {
    t_convex_hull(order, subset).len() == {
        let mut s = subset.to_vec();
        s.sort_unstable();
        s.dedup();
        s.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexDecomposition {
    /// Point sets in `T`-order, each listed in `T`-order.
    pub classes: Vec<Vec<PointId>>,
    pub center: PointId,
    pub exterior_radius: f64,
    pub excluded_radius: f64,
    /// First and last point of each class in `T`.
    pub class_intervals: Vec<(PointId, PointId)>,
}

/// Splits `N = {x : d(x0, x) ≥ r}` by `a ~ b` iff the hull of `{a, b}` misses
/// `B_eps(x0)`. Walking the order, a class ends exactly where a point of the
/// small ball appears between two exterior points.
pub fn convex_decomposition(
    space: &FiniteMetricSpace,
    order: &TotalOrder,
    x0: PointId,
    r: f64,
    eps: f64,
) -> Result<ConvexDecomposition, ConvexError> {
    if x0 >= space.len() {
        return Err(ConvexError::BadParams(format!("point {x0} out of range")));
    }
    if !(eps > 0.0 && eps <= r && r.is_finite()) {
        return Err(ConvexError::BadParams(format!("need 0 < eps <= r, got eps={eps}, r={r}")));
    }
    let row = space.row(x0);
    let mut classes: Vec<Vec<PointId>> = Vec::new();
    let mut open = false;
    for &p in order.sequence() {
        if row[p] < eps {
            open = false;
        } else if row[p] >= r {
            if !open {
                classes.push(Vec::new());
                open = true;
            }
            classes.last_mut().expect("a class is open").push(p);
        }
    }
    if classes.is_empty() {
        return Err(ConvexError::EmptyExterior { x0, r });
    }
    let class_intervals = classes.iter().map(|c| (c[0], *c.last().expect("classes are non-empty"))).collect();
    Ok(ConvexDecomposition { classes, center: x0, exterior_radius: r, excluded_radius: eps, class_intervals })
}

impl ConvexDecomposition {
    /// Class index per point (`None` outside the exterior).
    pub fn class_of(&self, n_points: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; n_points];
        for (i, class) in self.classes.iter().enumerate() {
            for &p in class {
                out[p] = Some(i);
            }
        }
        out
    }

    /// Checks that every class hull stays out of the excluded ball.
    pub fn hulls_avoid_ball(&self, space: &FiniteMetricSpace, order: &TotalOrder) -> bool {
        let row = space.row(self.center);
        self.classes
            .iter()
            .all(|c| t_convex_hull(order, c).iter().all(|&p| row[p] >= self.excluded_radius))
    }

    /// Number of classes met by `points`.
    pub fn classes_met(&self, n_points: usize, points: &[PointId]) -> usize {
        let class_of = self.class_of(n_points);
        let mut met: Vec<usize> = points.iter().filter_map(|&p| class_of[p]).collect();
        met.sort_unstable();
        met.dedup();
        met.len()
    }
}
