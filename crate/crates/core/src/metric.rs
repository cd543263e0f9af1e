//! Finite metric spaces and point clouds.
//!
//! A [`FiniteMetricSpace`] owns a validated distance matrix. Validation checks
//! the metric axioms with an additive slack of `1e-12 * max(dist)` and then
//! snaps off-diagonal distances that agree within that slack onto a single
//! representative value, so that "equal within tolerance" and "bitwise equal"
//! coincide for every downstream comparison.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

/// Relative slack used for every distance comparison in a space.
pub const RELATIVE_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("distance matrix is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },
    #[error("distance matrix is empty")]
    Empty,
    #[error("entry ({0}, {1}) is negative or not finite")]
    InvalidEntry(usize, usize),
    #[error("not symmetric: dist[{0}][{1}] != dist[{1}][{0}]")]
    NotSymmetric(usize, usize),
    #[error("nonzero diagonal entry at {0}")]
    NonzeroDiagonal(usize),
    #[error("zero distance between distinct points {0} and {1}")]
    ZeroOffDiagonal(usize, usize),
    #[error("triangle inequality violated: dist[{0}][{2}] > dist[{0}][{1}] + dist[{1}][{2}]")]
    TriangleViolation(usize, usize, usize),
    #[error("points {0} and {1} coincide")]
    DuplicatePoints(usize, usize),
    #[error("point {index} has dimension {len}, expected {expected}")]
    DimensionMismatch { index: usize, len: usize, expected: usize },
    #[error("{labels} labels given for {points} points")]
    LabelCount { labels: usize, points: usize },
    #[error("parse error at {position}: {reason}")]
    Parse { position: String, reason: String },
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, MetricError>;

/// A finite set of labelled points with a validated metric.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetricSpace {
    labels: Vec<String>,
    dist: Vec<Vec<f64>>,
    tolerance: f64,
}

impl FiniteMetricSpace {
    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i][j]
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.dist
    }

    /// Absolute comparison tolerance, `1e-12 * max(dist)`.
    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn approx_eq(&self, a: f64, b: f64) -> bool {
        (a - b).abs() <= self.tolerance
    }

    pub fn diameter(&self) -> f64 {
        self.dist
            .iter()
            .flatten()
            .copied()
            .fold(0.0, f64::max)
    }

    /// Smallest distance between distinct points, `None` for a single point.
    pub fn min_distance(&self) -> Option<f64> {
        let n = self.len();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| self.dist[i][j])
            .reduce(f64::min)
    }

    /// Replace the labels. The count must match the number of points.
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(MetricError::LabelCount {
                labels: labels.len(),
                points: self.len(),
            });
        }
        self.labels = labels;
        Ok(self)
    }

    /// JSON text with every distance written to 17 significant digits.
    pub fn to_json(&self) -> String {
        let labels = serde_json::to_string(&self.labels).expect("string array serializes");
        let mut out = format!("{{\"labels\":{labels},\"dist\":[");
        for (i, row) in self.dist.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push('[');
            push_row(&mut out, row);
            out.push(']');
        }
        out.push_str("]}\n");
        out
    }

    /// CSV text, one row per line, no header. Labels are not carried.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in &self.dist {
            push_row(&mut out, row);
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path, format: Format) -> Result<()> {
        let text = match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
        };
        fs::write(path, text).map_err(|e| MetricError::Io(e.to_string()))
    }
}

fn push_row(out: &mut String, row: &[f64]) {
    for (j, x) in row.iter().enumerate() {
        if j > 0 {
            out.push(',');
        }
        write!(out, "{x:.16e}").expect("writing to a String cannot fail");
    }
}

/// Validate a raw distance matrix against the metric axioms.
///
/// Checks run in order: shape, entries, symmetry, diagonal, distinctness,
/// then every triple `(i, j, k)` for `dist[i][k] <= dist[i][j] + dist[j][k]`.
/// The first violation is returned with its witnessing indices.
pub fn validate_metric(dist: Vec<Vec<f64>>) -> Result<FiniteMetricSpace> {
    let n = dist.len();
    if n == 0 {
        return Err(MetricError::Empty);
    }
    for (row, r) in dist.iter().enumerate() {
        if r.len() != n {
            return Err(MetricError::NotSquare { row, len: r.len(), expected: n });
        }
    }
    for i in 0..n {
        for j in 0..n {
            let x = dist[i][j];
            if !x.is_finite() || x < 0.0 {
                return Err(MetricError::InvalidEntry(i, j));
            }
        }
    }
    let max = dist.iter().flatten().copied().fold(0.0, f64::max);
    let slack = RELATIVE_SLACK * max;

    for i in 0..n {
        for j in i + 1..n {
            if (dist[i][j] - dist[j][i]).abs() > slack {
                return Err(MetricError::NotSymmetric(i, j));
            }
        }
    }
    for (i, row) in dist.iter().enumerate() {
        if row[i] != 0.0 {
            return Err(MetricError::NonzeroDiagonal(i));
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            if dist[i][j] == 0.0 || dist[j][i] == 0.0 {
                return Err(MetricError::ZeroOffDiagonal(i, j));
            }
        }
    }

    let dist = snap_distances(dist, slack);

    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if dist[i][k] > dist[i][j] + dist[j][k] + slack {
                    return Err(MetricError::TriangleViolation(i, j, k));
                }
            }
        }
    }

    Ok(FiniteMetricSpace {
        labels: default_labels(n),
        dist,
        tolerance: slack,
    })
}

/// Symmetrize from the upper triangle and merge distances that chain together
/// within `slack` onto the smallest member of their cluster. Distinct snapped
/// values therefore differ by more than `slack`.
fn snap_distances(mut dist: Vec<Vec<f64>>, slack: f64) -> Vec<Vec<f64>> {
    let n = dist.len();
    let mut values: Vec<f64> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| dist[i][j])
        .collect();
    values.sort_by(f64::total_cmp);

    // One representative per run of values whose consecutive gaps are <= slack.
    let mut reps: Vec<(f64, f64)> = Vec::new(); // (cluster max, representative)
    for v in values {
        match reps.last_mut() {
            Some((hi, _)) if v - *hi <= slack => *hi = v,
            _ => reps.push((v, v)),
        }
    }
    let lookup = |x: f64| -> f64 {
        let idx = reps.partition_point(|&(hi, _)| hi < x);
        reps[idx].1
    };
    for i in 0..n {
        for j in i + 1..n {
            let s = lookup(dist[i][j]);
            dist[i][j] = s;
            dist[j][i] = s;
        }
    }
    dist
}

fn default_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("p{i}")).collect()
}

/// Points in ℝ^k.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Vec<f64>>,
    dim: usize,
}

impl PointCloud {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        for (index, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(MetricError::DimensionMismatch { index, len: p.len(), expected: dim });
            }
        }
        Ok(Self { points, dim })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        euclidean(&self.points[i], &self.points[j])
    }

    /// Vertices of a regular polygon with unit circumradius.
    pub fn regular_polygon(n: usize) -> Self {
        let points = (0..n)
            .map(|k| {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                vec![theta.cos(), theta.sin()]
            })
            .collect();
        Self { points, dim: 2 }
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Euclidean distance matrix of a point cloud.
pub fn cloud_to_metric(cloud: &PointCloud) -> Result<FiniteMetricSpace> {
    let n = cloud.len();
    let mut dist = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = cloud.distance(i, j);
            if d == 0.0 {
                return Err(MetricError::DuplicatePoints(i, j));
            }
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    validate_metric(dist)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    /// `.csv` files are CSV; everything else is JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Json,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceFile {
    labels: Option<Vec<String>>,
    dist: Vec<Vec<f64>>,
}

pub fn parse_json(text: &str) -> Result<FiniteMetricSpace> {
    let file: SpaceFile = serde_json::from_str(text).map_err(|e| MetricError::Parse {
        position: format!("line {}, column {}", e.line(), e.column()),
        reason: e.to_string(),
    })?;
    check_rows(&file.dist, "dist row")?;
    let space = validate_metric(file.dist)?;
    match file.labels {
        Some(labels) => space.with_labels(labels),
        None => Ok(space),
    }
}

pub fn parse_csv(text: &str) -> Result<FiniteMetricSpace> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .enumerate()
            .map(|(col, field)| {
                field.trim().parse::<f64>().map_err(|e| MetricError::Parse {
                    position: format!("line {}, field {}", lineno + 1, col + 1),
                    reason: e.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    check_rows(&rows, "line")?;
    validate_metric(rows)
}

/// Ragged or non-square input is a parse error, not a metric error.
fn check_rows(rows: &[Vec<f64>], what: &str) -> Result<()> {
    if rows.is_empty() {
        return Err(MetricError::Parse {
            position: "start of input".into(),
            reason: "no rows".into(),
        });
    }
    let n = rows.len();
    for (i, r) in rows.iter().enumerate() {
        if r.len() != n {
            return Err(MetricError::Parse {
                position: format!("{what} {}", i + 1),
                reason: format!("expected {n} entries, found {}", r.len()),
            });
        }
    }
    Ok(())
}

pub fn load_space(path: &Path, format: Format) -> Result<FiniteMetricSpace> {
    let text = fs::read_to_string(path).map_err(|e| MetricError::Io(format!("{}: {e}", path.display())))?;
    match format {
        Format::Json => parse_json(&text),
        Format::Csv => parse_csv(&text),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_is_valid() {
        let s = validate_metric(vec![vec![0.0]]).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.min_distance(), None);
    }

    #[test]
    fn two_points_are_valid() {
        let s = validate_metric(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(s.dist(0, 1), 1.0);
        assert_eq!(s.labels(), ["p0", "p1"]);
    }

    #[test]
    fn triangle_violation_is_located() {
        let err = validate_metric(vec![
            vec![0.0, 1.0, 3.0],
            vec![1.0, 0.0, 1.0],
            vec![3.0, 1.0, 0.0],
        ])
        .unwrap_err();
        assert_eq!(err, MetricError::TriangleViolation(0, 1, 2));
    }

    #[test]
    fn axiom_errors() {
        assert_eq!(
            validate_metric(vec![vec![0.0, 1.0], vec![2.0, 0.0]]).unwrap_err(),
            MetricError::NotSymmetric(0, 1)
        );
        assert_eq!(
            validate_metric(vec![vec![0.0, 1.0], vec![1.0, 0.5]]).unwrap_err(),
            MetricError::NonzeroDiagonal(1)
        );
        assert_eq!(
            validate_metric(vec![vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap_err(),
            MetricError::ZeroOffDiagonal(0, 1)
        );
        assert_eq!(
            validate_metric(vec![vec![0.0, -1.0], vec![-1.0, 0.0]]).unwrap_err(),
            MetricError::InvalidEntry(0, 1)
        );
        assert!(matches!(
            validate_metric(vec![vec![0.0, 1.0], vec![1.0]]).unwrap_err(),
            MetricError::NotSquare { row: 1, .. }
        ));
    }

    #[test]
    fn near_equal_distances_are_snapped() {
        let e = 1e-14;
        let s = validate_metric(vec![
            vec![0.0, 1.0, 1.0 + e],
            vec![1.0, 0.0, 1.0 - e],
            vec![1.0 + e, 1.0 - e, 0.0],
        ])
        .unwrap();
        assert_eq!(s.dist(0, 1), s.dist(0, 2));
        assert_eq!(s.dist(0, 1), s.dist(1, 2));
        assert_eq!(s.dist(1, 2), 1.0 - e);
    }

    #[test]
    fn cloud_distances() {
        let c = PointCloud::new(vec![vec![0.0], vec![1.0]]).unwrap();
        assert_eq!(cloud_to_metric(&c).unwrap().matrix(), [vec![0.0, 1.0], vec![1.0, 0.0]]);

        let c = PointCloud::new(vec![vec![0.0, 0.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(cloud_to_metric(&c).unwrap().dist(0, 1), 5.0);

        let h = 3f64.sqrt() / 2.0;
        let c = PointCloud::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, h]]).unwrap();
        let s = cloud_to_metric(&c).unwrap();
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            assert!((s.dist(i, j) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn duplicate_points_rejected() {
        let c = PointCloud::new(vec![vec![0.0, 1.0], vec![2.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(cloud_to_metric(&c).unwrap_err(), MetricError::DuplicatePoints(0, 2));
    }

    #[test]
    fn ragged_cloud_rejected() {
        let err = PointCloud::new(vec![vec![0.0, 1.0], vec![2.0]]).unwrap_err();
        assert!(matches!(err, MetricError::DimensionMismatch { index: 1, .. }));
    }

    #[test]
    fn parse_examples() {
        let s = parse_json(r#"{"labels":["a","b"],"dist":[[0,1],[1,0]]}"#).unwrap();
        assert_eq!(s.labels(), ["a", "b"]);

        let s = parse_csv("0,1\n1,0").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.labels(), ["p0", "p1"]);

        let err = parse_json(r#"{"dist":[[0,1],[1]]}"#).unwrap_err();
        assert!(matches!(err, MetricError::Parse { .. }), "{err:?}");
        let err = parse_csv("0,1\n1").unwrap_err();
        assert!(matches!(err, MetricError::Parse { .. }), "{err:?}");
        let err = parse_csv("0,x\n1,0").unwrap_err();
        assert!(matches!(err, MetricError::Parse { .. }), "{err:?}");
        let err = parse_json("{\"dist\": [[0,1],").unwrap_err();
        assert!(matches!(err, MetricError::Parse { .. }), "{err:?}");
    }

    #[test]
    fn label_count_must_match() {
        let err = parse_json(r#"{"labels":["a"],"dist":[[0,1],[1,0]]}"#).unwrap_err();
        assert_eq!(err, MetricError::LabelCount { labels: 1, points: 2 });
    }

    #[test]
    fn seventeen_digit_serialization() {
        let s = validate_metric(vec![vec![0.0, 0.1], vec![0.1, 0.0]]).unwrap();
        let csv = s.to_csv();
        assert_eq!(csv.lines().next().unwrap(), "0.0000000000000000e0,1.0000000000000001e-1");
        assert_eq!(parse_csv(&csv).unwrap().matrix(), s.matrix());
    }
}
