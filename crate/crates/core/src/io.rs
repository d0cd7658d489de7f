//! On-disk formats: space, order and hierarchy files, plus JSON and CSV
//! reports. Every float goes through [`Real`].

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chains::Certificate;
use crate::cover::{Cover, CoverError};
use crate::hierarchy::CoverHierarchy;
use crate::metric::{FiniteMetricSpace, Generator, MetricError, PointId, Provenance, TotalOrder};
use crate::real::{reals, Real};
use crate::search::SearchResult;
use crate::snake::{ScaleSnake, SnakeProfile};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("Io: {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("Json: {path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("Csv: {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("BadFormat: {0}")]
    BadFormat(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Cover(#[from] CoverError),
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let text = fs::read_to_string(path).map_err(|source| IoError::Io { path: path.into(), source })?;
    serde_json::from_str(&text).map_err(|source| IoError::Json { path: path.into(), source })
}

/// Pretty JSON with a trailing newline; byte-stable for equal inputs.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    fs::write(path, to_json_string(value)).map_err(|source| IoError::Io { path: path.into(), source })
}

/// Space file. Generated spaces also record their generator, so that
/// natural orders and brick covers are available after a reload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "metric", rename_all = "snake_case")]
pub enum SpaceFile {
    Matrix {
        n: usize,
        dist: Vec<Vec<Real>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        generator: Option<Provenance>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<String>>,
    },
    Points {
        coords: Vec<Vec<Real>>,
        p: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<String>>,
    },
}

fn generator_of(p: &Provenance) -> Option<Generator> {
    Some(match *p {
        Provenance::Segment { n } => Generator::Segment { n },
        Provenance::Circle { n } => Generator::Circle { n },
        Provenance::Grid { dim, m } => Generator::Grid { dim, m },
        Provenance::Tripod { m } => Generator::Tripod { m },
        Provenance::TripodProduct { factors, m, .. } => Generator::TripodProduct { factors, m },
        Provenance::Cantor { depth } => Generator::Cantor { depth },
        Provenance::Ingested | Provenance::Points { .. } => return None,
    })
}

impl SpaceFile {
    pub fn from_space(space: &FiniteMetricSpace) -> Self {
        let labels = space.labels().map(<[String]>::to_vec);
        match (space.provenance(), space.coords()) {
            (Provenance::Points { p }, Some(coords)) => SpaceFile::Points {
                coords: coords.iter().map(|c| reals(c)).collect(),
                p: p.clone(),
                labels,
            },
            (prov, _) => SpaceFile::Matrix {
                n: space.len(),
                dist: (0..space.len()).map(|i| reals(space.row(i))).collect(),
                generator: generator_of(prov).map(|_| prov.clone()),
                labels,
            },
        }
    }

    /// Rebuilds and validates the space. A recorded generator is rerun and
    /// its distances must match the file exactly.
    pub fn into_space(self) -> Result<FiniteMetricSpace, IoError> {
        let (space, labels) = match self {
            SpaceFile::Matrix { n, dist, generator, labels } => {
                if dist.len() != n {
                    return Err(IoError::BadFormat(format!("\"n\" is {n} but \"dist\" has {} rows", dist.len())));
                }
                let matrix: Vec<Vec<f64>> = dist.iter().map(|r| r.iter().map(|x| x.0).collect()).collect();
                let space = match generator {
                    Some(prov) => {
                        let g = generator_of(&prov)
                            .ok_or_else(|| IoError::BadFormat(format!("{prov:?} is not a generator")))?;
                        let space = g.build()?;
                        if space.matrix() != matrix {
                            return Err(IoError::BadFormat(format!(
                                "distances do not match the recorded generator {prov:?}"
                            )));
                        }
                        space
                    }
                    None => FiniteMetricSpace::from_matrix(&matrix)?,
                };
                (space, labels)
            }
            SpaceFile::Points { coords, p, labels } => {
                if p != "euclidean" {
                    return Err(IoError::BadFormat(format!("unsupported point metric {p:?}")));
                }
                let coords = coords.iter().map(|c| c.iter().map(|x| x.0).collect()).collect();
                (FiniteMetricSpace::from_points(coords)?, labels)
            }
        };
        match labels {
            Some(l) => Ok(space.with_labels(l)?),
            None => Ok(space),
        }
    }
}

pub fn read_space(path: &Path) -> Result<FiniteMetricSpace, IoError> {
    read_json::<SpaceFile>(path)?.into_space()
}

pub fn write_space(path: &Path, space: &FiniteMetricSpace) -> Result<(), IoError> {
    write_json(path, &SpaceFile::from_space(space))
}

pub fn read_order(path: &Path, space: &FiniteMetricSpace) -> Result<TotalOrder, IoError> {
    let seq: Vec<PointId> = read_json(path)?;
    Ok(space.order_from_permutation(seq)?)
}

pub fn write_order(path: &Path, order: &TotalOrder) -> Result<(), IoError> {
    write_json(path, order)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelFile {
    pub sets: Vec<Vec<PointId>>,
    pub mesh: Real,
    pub margin: Real,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchyFile {
    pub levels: Vec<LevelFile>,
    pub parent: Vec<Vec<usize>>,
    pub mult_bound: usize,
}

impl HierarchyFile {
    pub fn from_hierarchy(h: &CoverHierarchy) -> Self {
        let levels = h
            .levels()
            .iter()
            .zip(h.margins())
            .map(|(c, &m)| LevelFile { sets: c.sets().to_vec(), mesh: Real(c.mesh()), margin: Real(m) })
            .collect();
        HierarchyFile { levels, parent: h.parent_maps().to_vec(), mult_bound: h.mult_bound() }
    }

    /// Rebuilds the hierarchy, keeping the margins stored in the file; run
    /// `validate_hierarchy` to check them.
    pub fn into_hierarchy(self, space: &FiniteMetricSpace) -> Result<CoverHierarchy, IoError> {
        let margins = self.levels.iter().map(|l| l.margin.0).collect();
        let covers = self
            .levels
            .into_iter()
            .map(|l| Cover::new(space, l.sets))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(CoverHierarchy::from_parts(space, covers, self.parent, self.mult_bound)?.with_margins(margins)?)
    }
}

pub fn read_hierarchy(path: &Path, space: &FiniteMetricSpace) -> Result<CoverHierarchy, IoError> {
    read_json::<HierarchyFile>(path)?.into_hierarchy(space)
}

pub fn write_hierarchy(path: &Path, h: &CoverHierarchy) -> Result<(), IoError> {
    write_json(path, &HierarchyFile::from_hierarchy(h))
}

/// Snake profile of one ordered pair. `null` values mark overlapping balls.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileReport {
    pub pair: [PointId; 2],
    pub scales: Vec<Real>,
    pub values: Vec<Option<usize>>,
    pub witness: Vec<PointId>,
    pub overlap_at: Option<Real>,
}

impl From<&SnakeProfile> for ProfileReport {
    fn from(p: &SnakeProfile) -> Self {
        ProfileReport {
            pair: [p.pair.x, p.pair.y],
            scales: reals(&p.scales),
            values: p
                .values
                .iter()
                .map(|v| match v {
                    ScaleSnake::Snake(r) => r.value(),
                    ScaleSnake::Overlap => None,
                })
                .collect(),
            witness: p.last_witness().map(|w| w.points.clone()).unwrap_or_default(),
            overlap_at: p.overlap_at.map(Real),
        }
    }
}

/// `scale,value` rows; overlapping scales are written as `overlap`.
pub fn write_profile_csv(path: &Path, report: &ProfileReport) -> Result<(), IoError> {
    let csv_err = |source| IoError::Csv { path: path.into(), source };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["scale", "value"]).map_err(csv_err)?;
    for (scale, value) in report.scales.iter().zip(&report.values) {
        let v = value.map_or_else(|| "overlap".to_string(), |v| v.to_string());
        w.write_record([crate::real::format_sig17(scale.0), v]).map_err(csv_err)?;
    }
    w.flush().map_err(|source| IoError::Io { path: path.into(), source })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateReport {
    pub pass: bool,
    pub bound: usize,
    pub worst_pair: Option<[PointId; 2]>,
    pub worst_value: Option<usize>,
    pub worst_level: Option<usize>,
    pub worst_radius: Option<Real>,
    pub checked_pairs: usize,
    pub skipped_pairs: Vec<[PointId; 2]>,
}

impl From<&Certificate> for CertificateReport {
    fn from(c: &Certificate) -> Self {
        CertificateReport {
            pass: c.pass,
            bound: c.bound,
            worst_pair: c.worst.as_ref().map(|w| [w.pair.x, w.pair.y]),
            worst_value: c.worst_value(),
            worst_level: c.worst.as_ref().map(|w| w.level),
            worst_radius: c.worst.as_ref().map(|w| Real(w.radius)),
            checked_pairs: c.checked_pairs,
            skipped_pairs: c.skipped_pairs.iter().map(|&(a, b)| [a, b]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchReport {
    pub method: String,
    pub scales: Vec<Real>,
    pub seed: Option<u64>,
    pub iterations: Option<usize>,
    pub best_value: usize,
    pub explored: u64,
    pub exhaustive: bool,
    pub best_order: TotalOrder,
}

impl SearchReport {
    pub fn new(method: &str, scales: &[f64], seed: Option<u64>, iterations: Option<usize>, r: &SearchResult) -> Self {
        SearchReport {
            method: method.into(),
            scales: reals(scales),
            seed,
            iterations,
            best_value: r.best_value,
            explored: r.explored,
            exhaustive: r.exhaustive,
            best_order: r.best_order.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::{build_hierarchy, Builder};

    #[test]
    fn generated_space_round_trip() {
        let s = Generator::Circle { n: 7 }.build().unwrap();
        let json = to_json_string(&SpaceFile::from_space(&s));
        assert!(json.contains("\"metric\": \"matrix\""));
        assert!(json.contains("\"kind\": \"circle\""));
        let back = serde_json::from_str::<SpaceFile>(&json).unwrap().into_space().unwrap();
        assert_eq!(back, s);
        assert!(back.natural_order().is_ok());
    }

    #[test]
    fn ingested_and_points_round_trip() {
        let m = vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.5], vec![2.0, 1.5, 0.0]];
        let s = FiniteMetricSpace::from_matrix(&m).unwrap();
        let json = to_json_string(&SpaceFile::from_space(&s));
        assert!(!json.contains("generator"));
        assert_eq!(serde_json::from_str::<SpaceFile>(&json).unwrap().into_space().unwrap(), s);

        let json = r#"{"metric":"points","coords":[[0,0],[3,4]],"p":"euclidean"}"#;
        let s = serde_json::from_str::<SpaceFile>(json).unwrap().into_space().unwrap();
        assert_eq!(s.d(0, 1), 5.0);
        let again = serde_json::from_str::<SpaceFile>(&to_json_string(&SpaceFile::from_space(&s))).unwrap();
        assert_eq!(again.into_space().unwrap(), s);
    }

    #[test]
    fn bad_space_files() {
        let tampered = r#"{"metric":"matrix","n":2,"dist":[[0,0.5],[0.5,0]],"generator":{"kind":"segment","n":2}}"#;
        assert!(matches!(
            serde_json::from_str::<SpaceFile>(tampered).unwrap().into_space(),
            Err(IoError::BadFormat(_))
        ));
        let asym = r#"{"metric":"matrix","n":2,"dist":[[0,1],[2,0]]}"#;
        assert!(matches!(
            serde_json::from_str::<SpaceFile>(asym).unwrap().into_space(),
            Err(IoError::Metric(MetricError::AsymmetricMatrix { .. }))
        ));
        let manhattan = r#"{"metric":"points","coords":[[0,0],[3,4]],"p":"manhattan"}"#;
        assert!(serde_json::from_str::<SpaceFile>(manhattan).unwrap().into_space().is_err());
    }

    #[test]
    fn hierarchy_round_trip() {
        let s = Generator::Grid { dim: 1, m: 16 }.build().unwrap();
        let h = build_hierarchy(&s, Builder::Brick, 3, 2).unwrap();
        let file = HierarchyFile::from_hierarchy(&h);
        let json = to_json_string(&file);
        let back: HierarchyFile = serde_json::from_str(&json).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.into_hierarchy(&s).unwrap(), h);
    }

    #[test]
    fn files_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let s = Generator::Segment { n: 5 }.build().unwrap();
        let sp = dir.path().join("s.json");
        let op = dir.path().join("o.json");
        write_space(&sp, &s).unwrap();
        write_order(&op, &TotalOrder::from_sequence(vec![4, 3, 2, 1, 0]).unwrap()).unwrap();
        let s2 = read_space(&sp).unwrap();
        assert_eq!(s2, s);
        assert_eq!(read_order(&op, &s2).unwrap().sequence(), &[4, 3, 2, 1, 0]);
        assert_eq!(fs::read_to_string(&op).unwrap(), "[\n  4,\n  3,\n  2,\n  1,\n  0\n]\n");
        assert!(matches!(read_space(&dir.path().join("missing.json")), Err(IoError::Io { .. })));
    }
}
