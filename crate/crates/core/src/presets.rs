//! Named end-to-end experiments.
//!
//! A preset report keeps two kinds of checks apart: `claims` are bounds the
//! theory guarantees, `fixtures` are values pinned from earlier oracle runs.
//! A failing claim is a real violation; a failing fixture means drift.

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::chains::{lex_order, theorem_b_certificate, ChainError};
use crate::cover::CoverError;
use crate::hierarchy::{build_hierarchy, validate_hierarchy, Builder};
use crate::io::{CertificateReport, SearchReport};
use crate::metric::{bit_reversal_sequence, cantor_gap, FiniteMetricSpace, Generator, MetricError, TotalOrder};
use crate::real::{reals, Real};
use crate::search::{exhaustive_min_snake, SearchError, SearchObjective};
use crate::separating::{binary_code_order, min_member_gap, separating_family, SeparationError, SeparationMethod};
use crate::snake::{snake_at_scale, snake_number_at_scale, SnakeError};

pub const PRESET_NAMES: [&str; 8] = [
    "segment-natural",
    "circle-glued",
    "circle-exhaustive",
    "cantor-binary",
    "grid1-theoremB",
    "grid2-theoremB",
    "tripod-exhaustive",
    "segment-adversarial",
];

/// Exhaustive minimum over circle orders at `1.25 / N`, `N = 6` and `N = 8`.
pub const PINNED_CIRCLE_MIN: [(usize, usize); 2] = [(6, 2), (8, 2)];
/// Exhaustive minimum over the 5040 orders of the 7-point tripod at `eps = 0.5`.
pub const PINNED_TRIPOD_MIN: usize = 1;
/// Largest certified snake for `grid(1,64)`, brick depth 4, lex order.
pub const PINNED_GRID1_WORST: usize = 1;
/// Largest certified snake for `grid(2,32)`, brick depth 3, lex order.
pub const PINNED_GRID2_WORST: usize = 1;
/// Largest certified snake for the bit-reversal order on 64 segment points.
pub const PINNED_ADVERSARIAL_WORST: usize = 5;

#[derive(Debug, Error)]
pub enum PresetError {
    #[error("Unknown: unknown preset {0:?}")]
    Unknown(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Snake(#[from] SnakeError),
    #[error(transparent)]
    Cover(#[from] CoverError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Separation(#[from] SeparationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Eq,
    Le,
    Ge,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub relation: Relation,
    pub expected: i64,
    pub observed: i64,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, relation: Relation, expected: i64, observed: i64) -> Self {
        let pass = match relation {
            Relation::Eq => observed == expected,
            Relation::Le => observed <= expected,
            Relation::Ge => observed >= expected,
        };
        Check { name: name.into(), relation, expected, observed, pass }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PresetReport {
    pub preset: String,
    pub pass: bool,
    pub claims: Vec<Check>,
    pub fixtures: Vec<Check>,
    /// Reported for orientation only, never asserted.
    pub context: Vec<String>,
    pub results: Value,
    /// `scale,value` rows for presets that sweep scales.
    #[serde(skip)]
    pub sweep: Vec<(f64, usize)>,
}

impl PresetReport {
    fn new(preset: &str, claims: Vec<Check>, fixtures: Vec<Check>, context: Vec<String>, results: Value) -> Self {
        let pass = claims.iter().chain(&fixtures).all(|c| c.pass);
        PresetReport { preset: preset.into(), pass, claims, fixtures, context, results, sweep: Vec::new() }
    }

    fn with_sweep(mut self, sweep: Vec<(f64, usize)>) -> Self {
        self.sweep = sweep;
        self
    }
}

pub fn run_preset(name: &str) -> Result<PresetReport, PresetError> {
    match name {
        "segment-natural" => segment_natural(),
        "circle-glued" => circle_glued(),
        "circle-exhaustive" => circle_exhaustive(),
        "cantor-binary" => cantor_binary(),
        "grid1-theoremB" => chain_certificate_preset("grid1-theoremB", Generator::Grid { dim: 1, m: 64 }, 4, 1, None, PINNED_GRID1_WORST),
        "grid2-theoremB" => chain_certificate_preset("grid2-theoremB", Generator::Grid { dim: 2, m: 32 }, 3, 2, None, PINNED_GRID2_WORST),
        "tripod-exhaustive" => tripod_exhaustive(),
        "segment-adversarial" => chain_certificate_preset(
            "segment-adversarial",
            Generator::Segment { n: 64 },
            4,
            1,
            Some(bit_reversal_sequence(64)),
            PINNED_ADVERSARIAL_WORST,
        ),
        other => Err(PresetError::Unknown(other.into())),
    }
}

fn scale_values(space: &FiniteMetricSpace, order: &TotalOrder, scales: &[f64]) -> Result<Vec<(f64, usize, [usize; 2])>, PresetError> {
    scales
        .iter()
        .map(|&eps| {
            let m = snake_number_at_scale(space, order, eps)?;
            Ok((eps, m.value.value().unwrap_or(0), [m.argmax.x, m.argmax.y]))
        })
        .collect()
}

pub const SEGMENT_SCALES: [f64; 4] = [0.01, 0.05, 0.1, 0.2];
pub const CIRCLE_SCALES: [f64; 3] = [0.01, 0.05, 0.1];

fn segment_natural() -> Result<PresetReport, PresetError> {
    let space = Generator::Segment { n: 1001 }.build()?;
    let order = space.natural_order()?;
    let rows = scale_values(&space, &order, &SEGMENT_SCALES)?;
    let claims = rows.iter().map(|&(eps, v, _)| Check::new(format!("snake at eps={eps}"), Relation::Eq, 1, v as i64)).collect();
    let results = json!({
        "space": {"kind": "segment", "n": 1001},
        "order": "natural",
        "scales": reals(&SEGMENT_SCALES),
        "values": rows.iter().map(|r| r.1).collect::<Vec<_>>(),
        "argmax": rows.iter().map(|r| r.2).collect::<Vec<_>>(),
    });
    let sweep = rows.iter().map(|r| (r.0, r.1)).collect();
    Ok(PresetReport::new("segment-natural", claims, Vec::new(), Vec::new(), results).with_sweep(sweep))
}

/// Pair of antipodal points a quarter turn away from the glue point.
pub const CIRCLE_AWAY_PAIR: (usize, usize) = (250, 750);

fn circle_glued() -> Result<PresetReport, PresetError> {
    let space = Generator::Circle { n: 1000 }.build()?;
    let order = space.natural_order()?;
    let rows = scale_values(&space, &order, &CIRCLE_SCALES)?;
    let mut claims = Vec::new();
    let mut away = Vec::new();
    for &(eps, v, argmax) in &rows {
        claims.push(Check::new(format!("snake at eps={eps}"), Relation::Eq, 2, v as i64));
        claims.push(Check::new(
            format!("argmax contains the glue point at eps={eps}"),
            Relation::Eq,
            1,
            argmax.contains(&0) as i64,
        ));
        let (x, y) = CIRCLE_AWAY_PAIR;
        let a = snake_at_scale(&space, &order, x, y, eps)?.value().unwrap_or(0);
        let b = snake_at_scale(&space, &order, y, x, eps)?.value().unwrap_or(0);
        claims.push(Check::new(format!("pair away from the glue at eps={eps}"), Relation::Eq, 1, a.max(b) as i64));
        away.push([a, b]);
    }
    let results = json!({
        "space": {"kind": "circle", "n": 1000},
        "order": "natural (glue point 0 first)",
        "scales": reals(&CIRCLE_SCALES),
        "values": rows.iter().map(|r| r.1).collect::<Vec<_>>(),
        "argmax": rows.iter().map(|r| r.2).collect::<Vec<_>>(),
        "away_pair": [CIRCLE_AWAY_PAIR.0, CIRCLE_AWAY_PAIR.1],
        "away_values": away,
    });
    let sweep = rows.iter().map(|r| (r.0, r.1)).collect();
    Ok(PresetReport::new("circle-glued", claims, Vec::new(), Vec::new(), results).with_sweep(sweep))
}

/// Scale used for an `n`-point circle search: a quarter spacing past the
/// nearest neighbour, so each ball holds three points.
pub fn circle_search_scale(n: usize) -> f64 {
    1.25 / n as f64
}

fn circle_exhaustive() -> Result<PresetReport, PresetError> {
    let mut fixtures = Vec::new();
    let mut claims = Vec::new();
    let mut runs = Vec::new();
    let floor = PINNED_CIRCLE_MIN[0].1;
    for &(n, pinned) in &PINNED_CIRCLE_MIN {
        let space = Generator::Circle { n }.build()?;
        let scales = vec![circle_search_scale(n)];
        let r = exhaustive_min_snake(&space, &SearchObjective { scales: scales.clone() })?;
        fixtures.push(Check::new(format!("minimum over all orders, N={n}"), Relation::Eq, pinned as i64, r.best_value as i64));
        if n != PINNED_CIRCLE_MIN[0].0 {
            claims.push(Check::new(format!("N={n} minimum at least the N=6 minimum"), Relation::Ge, floor as i64, r.best_value as i64));
        }
        runs.push(json!({"n": n, "search": SearchReport::new("exhaustive", &scales, None, None, &r)}));
    }
    let context = vec!["the continuum circle has snake number at least 2 under every order".to_string()];
    Ok(PresetReport::new("circle-exhaustive", claims, fixtures, context, json!({ "runs": runs })))
}

fn tripod_exhaustive() -> Result<PresetReport, PresetError> {
    let space = Generator::Tripod { m: 2 }.build()?;
    let scales = vec![0.5];
    let r = exhaustive_min_snake(&space, &SearchObjective { scales: scales.clone() })?;
    let fixtures = vec![Check::new("minimum over all orders, m=2", Relation::Eq, PINNED_TRIPOD_MIN as i64, r.best_value as i64)];
    let context = vec!["the continuum tripod has snake number at least 2 under every order".to_string()];
    let results = json!({"space": {"kind": "tripod", "m": 2}, "search": SearchReport::new("exhaustive", &scales, None, None, &r)});
    Ok(PresetReport::new("tripod-exhaustive", Vec::new(), fixtures, context, results))
}

/// Ten log-spaced scales strictly below half the finest Cantor gap.
pub fn cantor_fine_scales(depth: usize) -> Vec<f64> {
    let top = cantor_gap(depth) / 2.0;
    (1..=10).map(|k| top * 10f64.powf(-(k as f64) / 3.0)).collect()
}

/// Ten log-spaced scales from the finest gap up to a quarter, where
/// disjoint balls still exist.
pub fn cantor_coarse_scales(depth: usize) -> Vec<f64> {
    let (lo, hi) = (cantor_gap(depth).ln(), 0.25f64.ln());
    (0..10).map(|k| (lo + (hi - lo) * k as f64 / 9.0).exp()).collect()
}

fn cantor_binary() -> Result<PresetReport, PresetError> {
    let depth = 7;
    let space = Generator::Cantor { depth }.build()?;
    let family = separating_family(&space, SeparationMethod::Dendrogram)?;
    let order = binary_code_order(&family);
    let fine = cantor_fine_scales(depth);
    let coarse = cantor_coarse_scales(depth);
    let fine_rows = scale_values(&space, &order, &fine)?;
    let coarse_rows = scale_values(&space, &order, &coarse)?;
    let claims = fine_rows
        .iter()
        .map(|&(eps, v, _)| Check::new(format!("snake at eps={eps:e}"), Relation::Le, 1, v as i64))
        .collect();
    let fixtures = coarse_rows
        .iter()
        .map(|&(eps, v, _)| Check::new(format!("snake at coarse eps={eps:e}"), Relation::Le, 1, v as i64))
        .collect();
    let results = json!({
        "space": {"kind": "cantor", "depth": depth},
        "family_size": family.sets.len(),
        "min_member_gap": Real(min_member_gap(&space, &family)),
        "order": order,
        "fine_scales": reals(&fine),
        "fine_values": fine_rows.iter().map(|r| r.1).collect::<Vec<_>>(),
        "coarse_scales": reals(&coarse),
        "coarse_values": coarse_rows.iter().map(|r| r.1).collect::<Vec<_>>(),
    });
    let sweep = fine_rows.iter().chain(&coarse_rows).map(|r| (r.0, r.1)).collect();
    Ok(PresetReport::new("cantor-binary", claims, fixtures, Vec::new(), results).with_sweep(sweep))
}

/// Builds a brick hierarchy with multiplicity `dim + 1` and certifies either
/// the lex order or, for the negative control, a supplied order.
fn chain_certificate_preset(
    name: &str,
    generator: Generator,
    depth: usize,
    dim: usize,
    adversarial: Option<Vec<usize>>,
    pinned_worst: usize,
) -> Result<PresetReport, PresetError> {
    let space = generator.build()?;
    let h = build_hierarchy(&space, Builder::Brick, depth, dim + 1)?;
    let validation = validate_hierarchy(&space, &h, dim + 1);
    let (order, order_name) = match adversarial {
        Some(seq) => (space.order_from_permutation(seq)?, "bit-reversal"),
        None => (lex_order(&h, space.len(), None)?, "lex"),
    };
    let cert = theorem_b_certificate(&space, &order, &h, dim)?;
    let report = CertificateReport::from(&cert);
    let worst = cert.worst_value().unwrap_or(0) as i64;
    let mut claims = vec![Check::new("hierarchy validates", Relation::Eq, 1, validation.ok as i64)];
    let mut fixtures = vec![Check::new("worst certified snake", Relation::Eq, pinned_worst as i64, worst)];
    if order_name == "lex" {
        claims.push(Check::new("certificate passes", Relation::Eq, 1, cert.pass as i64));
        claims.push(Check::new("worst certified snake", Relation::Le, cert.bound as i64, worst));
        claims.push(Check::new("skipped pairs", Relation::Eq, 0, cert.skipped_pairs.len() as i64));
    } else {
        // the negative control is expected to break the bound
        fixtures.push(Check::new("certificate fails", Relation::Eq, 0, cert.pass as i64));
        fixtures.push(Check::new("worst exceeds the bound", Relation::Ge, cert.bound as i64 + 1, worst));
    }
    let results = json!({
        "space": space.provenance(),
        "builder": "brick",
        "depth": depth,
        "mult_bound": dim + 1,
        "meshes": reals(&h.meshes()),
        "margins": reals(h.margins()),
        "order": order_name,
        "certificate": report,
    });
    Ok(PresetReport::new(name, claims, fixtures, Vec::new(), results))
}
