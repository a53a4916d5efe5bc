//! Finite metric spaces: validated construction, restriction, single-pair
//! perturbation and the JSON document format shared by every tool.
//!
//! Distances are kept as a full row-major `n × n` matrix. Every public
//! constructor runs [`validate`] so a [`FiniteMetricSpace`] value always
//! satisfies symmetry, a zero diagonal, positivity off the diagonal and the
//! triangle inequality (up to [`TOL_METRIC`] relative to the largest distance).

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Relative tolerance of the triangle check for floating-point inputs.
pub const TOL_METRIC: f64 = 1e-12;

/// Integer-valued matrices below this magnitude are checked exactly.
const EXACT_INTEGER_BOUND: f64 = (1u64 << 26) as f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    NonFinite,
    Symmetry,
    Diagonal,
    Positivity,
    Triangle,
    Shape,
    Weight,
    Stochasticity,
    SumCondition,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ViolationKind::NonFinite => "non-finite entry",
            ViolationKind::Symmetry => "asymmetric entry",
            ViolationKind::Diagonal => "nonzero diagonal",
            ViolationKind::Positivity => "non-positive distance",
            ViolationKind::Triangle => "triangle inequality",
            ViolationKind::Shape => "shape",
            ViolationKind::Weight => "weight sign",
            ViolationKind::Stochasticity => "stochasticity",
            ViolationKind::SumCondition => "row/column sum condition",
        };
        f.write_str(s)
    }
}

/// One failed check. `indices` holds the pair or triple involved, and
/// `slack` is signed so that a negative value measures the violation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub indices: Vec<usize>,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn from_violations(violations: Vec<Violation>) -> Self {
        ValidationReport {
            ok: violations.is_empty(),
            violations,
        }
    }

    pub fn first(&self) -> Option<&Violation> {
        self.violations.first()
    }

    pub fn summary(&self) -> String {
        match self.violations.first() {
            None => "ok".to_string(),
            Some(v) => format!(
                "{} at {:?} (slack {:e}){}",
                v.kind,
                v.indices,
                v.slack,
                if self.violations.len() > 1 {
                    format!(" and {} more", self.violations.len() - 1)
                } else {
                    String::new()
                }
            ),
        }
    }
}

/// On-disk form of a metric space.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricDocument {
    pub labels: Vec<String>,
    pub dist: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MetricDocument", into = "MetricDocument")]
pub struct FiniteMetricSpace {
    labels: Vec<String>,
    dist: Vec<f64>,
}

impl TryFrom<MetricDocument> for FiniteMetricSpace {
    type Error = Error;

    fn try_from(doc: MetricDocument) -> Result<Self> {
        FiniteMetricSpace::from_matrix(doc.labels, doc.dist)
    }
}

impl From<FiniteMetricSpace> for MetricDocument {
    fn from(space: FiniteMetricSpace) -> Self {
        let dist = (0..space.len()).map(|i| space.row(i).to_vec()).collect();
        MetricDocument {
            labels: space.labels,
            dist,
        }
    }
}

fn check_labels(labels: &[String]) -> Result<()> {
    let mut seen = HashSet::new();
    for l in labels {
        if !seen.insert(l.as_str()) {
            return Err(Error::DuplicateLabel(l.clone()));
        }
    }
    Ok(())
}

impl FiniteMetricSpace {
    pub fn from_matrix<S: Into<String>>(labels: Vec<S>, matrix: Vec<Vec<f64>>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let n = labels.len();
        if matrix.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} labels but {} rows",
                n,
                matrix.len()
            )));
        }
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "row {} has {} entries, expected {}",
                    i,
                    row.len(),
                    n
                )));
            }
        }
        check_labels(&labels)?;
        let dist: Vec<f64> = matrix.into_iter().flatten().collect();
        let report = validate_matrix(n, &dist);
        if !report.ok {
            return Err(Error::InvalidMetric(report));
        }
        Ok(FiniteMetricSpace { labels, dist })
    }

    /// Distances between points of `ℝ^k`; rejects coincident points.
    pub fn from_euclidean<S: Into<String>>(points: &[Vec<f64>], labels: Vec<S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if points.len() != labels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} points but {} labels",
                points.len(),
                labels.len()
            )));
        }
        if let Some(k) = points.first().map(Vec::len) {
            if let Some(bad) = points.iter().position(|p| p.len() != k) {
                return Err(Error::DimensionMismatch(format!(
                    "point {} has dimension {}, expected {}",
                    bad,
                    points[bad].len(),
                    k
                )));
            }
        }
        let n = points.len();
        let mut matrix = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = points[i]
                    .iter()
                    .zip(&points[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                if d == 0.0 {
                    return Err(Error::DuplicatePoint(i, j));
                }
                matrix[i][j] = d;
                matrix[j][i] = d;
            }
        }
        Self::from_matrix(labels, matrix)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.len() + j]
    }

    #[inline]
    pub fn dist2(&self, i: usize, j: usize) -> f64 {
        let d = self.dist(i, j);
        d * d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.len();
        &self.dist[i * n..(i + 1) * n]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn indices_of<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<usize>> {
        labels.iter().map(|l| self.index_of(l.as_ref())).collect()
    }

    pub fn dist_by_label(&self, p: &str, q: &str) -> Result<f64> {
        Ok(self.dist(self.index_of(p)?, self.index_of(q)?))
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    /// Largest distance among the given indices.
    pub fn diameter_of(&self, idx: &[usize]) -> f64 {
        let mut m: f64 = 0.0;
        for &i in idx {
            for &j in idx {
                m = m.max(self.dist(i, j));
            }
        }
        m
    }

    /// Induced submetric on `subset`, in the order the labels are given.
    pub fn restrict<S: AsRef<str>>(&self, subset: &[S]) -> Result<Self> {
        if subset.is_empty() {
            return Err(Error::InvalidParams("empty subset".into()));
        }
        let idx = self.indices_of(subset)?;
        let labels: Vec<String> = idx.iter().map(|&i| self.labels[i].clone()).collect();
        check_labels(&labels)?;
        let dist = idx
            .iter()
            .flat_map(|&i| idx.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.dist(i, j))
            .collect();
        Ok(FiniteMetricSpace { labels, dist })
    }

    /// Increase `dist(p, q)` by `eps`, leaving every other entry untouched.
    pub fn perturb_pair(&self, p: &str, q: &str, eps: f64) -> Result<Self> {
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(Error::InvalidParams(format!("epsilon must be >= 0, got {eps}")));
        }
        let (i, j) = (self.index_of(p)?, self.index_of(q)?);
        if i == j {
            return Err(Error::InvalidParams("perturbed pair must have distinct points".into()));
        }
        let n = self.len();
        let mut dist = self.dist.clone();
        dist[i * n + j] += eps;
        dist[j * n + i] += eps;
        let report = validate_matrix(n, &dist);
        if !report.ok {
            return Err(Error::InvalidMetric(report));
        }
        Ok(FiniteMetricSpace {
            labels: self.labels.clone(),
            dist,
        })
    }

    /// Copy with every distance multiplied by `lambda > 0`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParams(format!("scale must be positive, got {lambda}")));
        }
        Ok(FiniteMetricSpace {
            labels: self.labels.clone(),
            dist: self.dist.iter().map(|d| d * lambda).collect(),
        })
    }

    pub fn validate(&self) -> ValidationReport {
        validate_matrix(self.len(), &self.dist)
    }

    pub fn to_document(&self) -> MetricDocument {
        self.clone().into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metric space serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    /// SHA-256 of the compact JSON encoding, hex encoded.
    pub fn checksum(&self) -> String {
        let compact = serde_json::to_string(self).expect("metric space serializes");
        hex::encode(Sha256::digest(compact.as_bytes()))
    }
}

/// Check every metric invariant of a row-major `n × n` matrix.
pub fn validate_matrix(n: usize, dist: &[f64]) -> ValidationReport {
    let mut violations = Vec::new();
    if dist.len() != n * n {
        violations.push(Violation {
            kind: ViolationKind::Shape,
            indices: vec![n, dist.len()],
            slack: f64::NAN,
        });
        return ValidationReport::from_violations(violations);
    }
    let d = |i: usize, j: usize| dist[i * n + j];

    for i in 0..n {
        for j in 0..n {
            if !d(i, j).is_finite() {
                violations.push(Violation {
                    kind: ViolationKind::NonFinite,
                    indices: vec![i, j],
                    slack: f64::NAN,
                });
            }
        }
    }
    if !violations.is_empty() {
        return ValidationReport::from_violations(violations);
    }

    for i in 0..n {
        if d(i, i) != 0.0 {
            violations.push(Violation {
                kind: ViolationKind::Diagonal,
                indices: vec![i, i],
                slack: -d(i, i).abs(),
            });
        }
        for j in (i + 1)..n {
            if d(i, j) != d(j, i) {
                violations.push(Violation {
                    kind: ViolationKind::Symmetry,
                    indices: vec![i, j],
                    slack: -(d(i, j) - d(j, i)).abs(),
                });
            }
            for (a, b) in [(i, j), (j, i)] {
                if d(a, b) <= 0.0 {
                    violations.push(Violation {
                        kind: ViolationKind::Positivity,
                        indices: vec![a, b],
                        slack: d(a, b),
                    });
                }
            }
        }
    }

    let max = dist.iter().copied().fold(0.0, f64::max);
    let exact = dist
        .iter()
        .all(|&x| x.fract() == 0.0 && x.abs() < EXACT_INTEGER_BOUND);
    let tol = if exact { 0.0 } else { TOL_METRIC * max };
    for i in 0..n {
        for j in (i + 1)..n {
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                let slack = d(i, k) + d(k, j) - d(i, j);
                if slack < -tol {
                    violations.push(Violation {
                        kind: ViolationKind::Triangle,
                        indices: vec![i, k, j],
                        slack,
                    });
                }
            }
        }
    }
    ValidationReport::from_violations(violations)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri(a: f64, b: f64, c: f64) -> Vec<Vec<f64>> {
        // dist(p,q)=a, dist(q,r)=b, dist(p,r)=c
        vec![vec![0.0, a, c], vec![a, 0.0, b], vec![c, b, 0.0]]
    }

    #[test]
    fn two_point_space() {
        let s = FiniteMetricSpace::from_matrix(vec!["p", "q"], vec![vec![0.0, 1.0], vec![1.0, 0.0]])
            .unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.dist_by_label("p", "q").unwrap(), 1.0);
    }

    #[test]
    fn asymmetric_matrix_rejected() {
        let err = FiniteMetricSpace::from_matrix(vec!["p", "q"], vec![vec![0.0, 1.0], vec![2.0, 0.0]])
            .unwrap_err();
        match err {
            Error::InvalidMetric(r) => {
                assert!(r.violations.iter().any(|v| v.kind == ViolationKind::Symmetry))
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn triangle_violation_reports_slack() {
        let report = validate_matrix(3, &tri(1.0, 1.0, 3.0).concat());
        assert!(!report.ok);
        let v = report
            .violations
            .iter()
            .find(|v| v.kind == ViolationKind::Triangle)
            .unwrap();
        assert_eq!(v.indices, vec![0, 1, 2]);
        assert_eq!(v.slack, -1.0);
    }

    #[test]
    fn dimension_mismatch() {
        let err = FiniteMetricSpace::from_matrix(vec!["p", "q", "r"], tri(1.0, 1.0, 1.0)[..2].to_vec())
            .unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
        let err = FiniteMetricSpace::from_matrix(vec!["p", "p", "r"], tri(1.0, 1.0, 1.0)).unwrap_err();
        assert!(matches!(err, Error::DuplicateLabel(_)));
    }

    #[test]
    fn zero_off_diagonal_is_positivity_violation() {
        let r = validate_matrix(2, &[0.0, 0.0, 0.0, 0.0]);
        assert!(r.violations.iter().any(|v| v.kind == ViolationKind::Positivity));
        let r = validate_matrix(2, &[0.5, 1.0, 1.0, 0.0]);
        assert!(r.violations.iter().any(|v| v.kind == ViolationKind::Diagonal));
        let r = validate_matrix(2, &[0.0, f64::NAN, f64::NAN, 0.0]);
        assert_eq!(r.violations[0].kind, ViolationKind::NonFinite);
    }

    #[test]
    fn unit_square() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]];
        let s = FiniteMetricSpace::from_euclidean(&pts, vec!["a", "b", "c", "d"]).unwrap();
        assert_eq!(s.dist(0, 1), 1.0);
        assert_eq!(s.dist(1, 2), 1.0);
        assert_eq!(s.dist(0, 2), 2f64.sqrt());
        assert_eq!(s.dist(1, 3), 2f64.sqrt());
    }

    #[test]
    fn collinear_points_are_tight() {
        let pts = vec![vec![0.0], vec![1.0], vec![3.0]];
        let s = FiniteMetricSpace::from_euclidean(&pts, vec!["a", "b", "c"]).unwrap();
        assert_eq!(s.dist(0, 2), 3.0);
        assert_eq!(s.dist(0, 1) + s.dist(1, 2), s.dist(0, 2));
        assert!(s.validate().ok);
    }

    #[test]
    fn duplicate_points_rejected() {
        let pts = vec![vec![0.0, 1.0], vec![0.0, 1.0]];
        let err = FiniteMetricSpace::from_euclidean(&pts, vec!["a", "b"]).unwrap_err();
        assert!(matches!(err, Error::DuplicatePoint(0, 1)));
    }

    #[test]
    fn restrict_identity_and_submatrix() {
        let pts: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, (i * i) as f64, 1.0]).collect();
        let labels: Vec<String> = (0..6).map(|i| format!("p{i}")).collect();
        let s = FiniteMetricSpace::from_euclidean(&pts, labels.clone()).unwrap();
        assert_eq!(s.restrict(&labels).unwrap(), s);
        let sub = s.restrict(&["p4", "p0", "p2", "p1", "p5"]).unwrap();
        assert_eq!(sub.labels(), &["p4", "p0", "p2", "p1", "p5"]);
        assert_eq!(sub.dist(0, 1), s.dist(4, 0));
        assert_eq!(sub.dist(2, 4), s.dist(2, 5));
        assert!(matches!(s.restrict(&["zz"]), Err(Error::UnknownLabel(_))));
        assert!(s.restrict::<&str>(&[]).is_err());
    }

    #[test]
    fn perturb_equilateral() {
        let s = FiniteMetricSpace::from_matrix(vec!["p", "q", "r"], tri(1.0, 1.0, 1.0)).unwrap();
        assert_eq!(s.perturb_pair("p", "q", 0.0).unwrap(), s);
        let ok = s.perturb_pair("p", "q", 0.5).unwrap();
        assert_eq!(ok.dist_by_label("p", "q").unwrap(), 1.5);
        match s.perturb_pair("p", "q", 1.5).unwrap_err() {
            Error::InvalidMetric(r) => {
                let v = r.first().unwrap();
                assert_eq!(v.kind, ViolationKind::Triangle);
                assert_eq!(v.slack, -0.5);
            }
            e => panic!("unexpected {e}"),
        }
        assert!(s.perturb_pair("p", "p", 0.1).is_err());
        assert!(s.perturb_pair("p", "q", -0.1).is_err());
    }

    #[test]
    fn json_round_trip_and_checksum() {
        let s = FiniteMetricSpace::from_matrix(vec!["p", "q", "r"], tri(3.0, 4.0, 5.0)).unwrap();
        let back = FiniteMetricSpace::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.checksum(), s.checksum());
        let other = s.perturb_pair("p", "q", 0.25).unwrap();
        assert_ne!(other.checksum(), s.checksum());
        let bad = r#"{"labels":["a","b"],"dist":[[0,1],[2,0]]}"#;
        assert!(FiniteMetricSpace::from_json(bad).is_err());
    }
}
