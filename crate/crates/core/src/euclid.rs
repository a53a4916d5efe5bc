//! Euclidean configurations as Hilbert-space witnesses.
//!
//! In a Hilbert space the barycenter of `Σ p_i δ_{x_i}` is the weighted mean,
//! and the variance inequality, its two-measure form and the thick-geodesic
//! inequality all hold with equality. The residual functions below return
//! RHS − LHS of each inequality, so they vanish up to rounding.
//!
//! [`proof_trace`] evaluates every intermediate inequality of the six-point
//! proof on a concrete configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::FiniteMetricSpace;
use crate::sixpoint::{SixPointParams, SIX_ROLES, X0, X1, Y0, Y1, Z0, Z1};

/// Below this, `a` or `b` counts as zero and the trace uses the reduced
/// two-term inequalities.
pub const DEGENERATE_PARAM: f64 = 1e-12;

pub(crate) fn sq_dist(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn combo(terms: &[(f64, &[f64])]) -> Vec<f64> {
    let k = terms[0].1.len();
    let mut out = vec![0.0; k];
    for (w, p) in terms {
        for (o, x) in out.iter_mut().zip(p.iter()) {
            *o += w * x;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EuclideanConfig {
    pub labels: Vec<String>,
    pub points: Vec<Vec<f64>>,
}

impl EuclideanConfig {
    pub fn new<S: Into<String>>(labels: Vec<S>, points: Vec<Vec<f64>>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() != points.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} points",
                labels.len(),
                points.len()
            )));
        }
        let k = points.first().map_or(1, Vec::len);
        if k == 0 || points.iter().any(|p| p.len() != k) {
            return Err(Error::DimensionMismatch("points must share a dimension k >= 1".into()));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::DuplicateLabel(l.clone()));
            }
        }
        Ok(EuclideanConfig { labels, points })
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, label: &str) -> Result<&[f64]> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.points[i].as_slice())
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Points in role order `x0, x1, y0, y1, z0, z1` looked up by label.
    pub fn role_points<S: AsRef<str>>(&self, labeling: &[S]) -> Result<[&[f64]; 6]> {
        if labeling.len() != 6 {
            return Err(Error::DimensionMismatch("six role labels required".into()));
        }
        let mut out: [&[f64]; 6] = [&[]; 6];
        for (slot, l) in out.iter_mut().zip(labeling) {
            *slot = self.point(l.as_ref())?;
        }
        Ok(out)
    }

    pub fn to_metric(&self) -> Result<FiniteMetricSpace> {
        FiniteMetricSpace::from_euclidean(&self.points, self.labels.clone())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let raw: EuclideanConfig = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        EuclideanConfig::new(raw.labels, raw.points)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedMeasure {
    pub support: Vec<usize>,
    pub weights: Vec<f64>,
}

impl WeightedMeasure {
    pub fn new(support: Vec<usize>, weights: Vec<f64>) -> Result<Self> {
        if support.len() != weights.len() || support.is_empty() {
            return Err(Error::DimensionMismatch("support and weights must align".into()));
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidParams("measure weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParams(format!("weights sum to {total}, not 1")));
        }
        Ok(WeightedMeasure { support, weights })
    }

    pub fn dirac(i: usize) -> Self {
        WeightedMeasure {
            support: vec![i],
            weights: vec![1.0],
        }
    }

    fn check(&self, config: &EuclideanConfig) -> Result<()> {
        match self.support.iter().find(|&&i| i >= config.len()) {
            Some(&i) => Err(Error::InvalidParams(format!(
                "support index {i} out of range for {} points",
                config.len()
            ))),
            None => Ok(()),
        }
    }
}

pub fn barycenter(config: &EuclideanConfig, mu: &WeightedMeasure) -> Result<Vec<f64>> {
    mu.check(config)?;
    let terms: Vec<(f64, &[f64])> = mu
        .support
        .iter()
        .zip(&mu.weights)
        .map(|(&i, &w)| (w, config.points[i].as_slice()))
        .collect();
    Ok(combo(&terms))
}

/// RHS − LHS of the variance inequality at witness point `w`.
pub fn variance_residual(config: &EuclideanConfig, mu: &WeightedMeasure, w: &[f64]) -> Result<f64> {
    if w.len() != config.dim() {
        return Err(Error::DimensionMismatch("witness point dimension".into()));
    }
    let z = barycenter(config, mu)?;
    let mut rhs = 0.0;
    let mut lhs = sq_dist(w, &z);
    for (&i, &p) in mu.support.iter().zip(&mu.weights) {
        rhs += p * sq_dist(w, &config.points[i]);
        lhs += p * sq_dist(&z, &config.points[i]);
    }
    Ok(rhs - lhs)
}

/// RHS − LHS of the two-measure variance inequality.
pub fn double_variance_residual(
    config: &EuclideanConfig,
    mu: &WeightedMeasure,
    nu: &WeightedMeasure,
) -> Result<f64> {
    let bm = barycenter(config, mu)?;
    let bn = barycenter(config, nu)?;
    let mut lhs = sq_dist(&bm, &bn);
    for (&i, &p) in mu.support.iter().zip(&mu.weights) {
        lhs += p * sq_dist(&bm, &config.points[i]);
    }
    for (&j, &q) in nu.support.iter().zip(&nu.weights) {
        lhs += q * sq_dist(&bn, &config.points[j]);
    }
    let mut rhs = 0.0;
    for (&i, &p) in mu.support.iter().zip(&mu.weights) {
        for (&j, &q) in nu.support.iter().zip(&nu.weights) {
            rhs += p * q * sq_dist(&config.points[i], &config.points[j]);
        }
    }
    Ok(rhs - lhs)
}

/// `a·d(y,x_s)² − [s·d(y,x_a)² − (s−a)·d(y,x0)² + sa(s−a)·d(x0,x1)²]`
/// with `x_r = (1−r)·x0 + r·x1`.
pub fn thick_prop_residual(x0: &[f64], x1: &[f64], y: &[f64], a: f64, s: f64) -> Result<f64> {
    if !(0.0 <= a && a <= s && s <= 1.0) {
        return Err(Error::InvalidParams(format!("need 0 <= a <= s <= 1, got a={a}, s={s}")));
    }
    if x0.len() != x1.len() || x0.len() != y.len() {
        return Err(Error::DimensionMismatch("points must share a dimension".into()));
    }
    let xs = combo(&[(1.0 - s, x0), (s, x1)]);
    let xa = combo(&[(1.0 - a, x0), (a, x1)]);
    Ok(a * sq_dist(y, &xs)
        - (s * sq_dist(y, &xa) - (s - a) * sq_dist(y, x0) + s * a * (s - a) * sq_dist(x0, x1)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: String,
    /// RHS − LHS of the step; `None` when the step is skipped.
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProofTrace {
    pub steps: Vec<TraceStep>,
}

impl ProofTrace {
    pub fn residual(&self, step: &str) -> Option<f64> {
        self.steps.iter().find(|s| s.step == step).and_then(|s| s.residual)
    }

    pub fn residuals(&self) -> impl Iterator<Item = f64> + '_ {
        self.steps.iter().filter_map(|s| s.residual)
    }

    pub fn min_residual(&self) -> f64 {
        self.residuals().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_residual(&self) -> f64 {
        self.residuals().fold(0.0, |m, r| m.max(r.abs()))
    }

    /// True when `a` or `b` vanished and the reduced inequalities were used.
    pub fn is_reduced(&self) -> bool {
        self.steps.iter().any(|s| s.step == "a=0" || s.step == "b=0")
    }
}

/// Evaluate every displayed inequality of the six-point proof chain on the
/// given points (role order `x0, x1, y0, y1, z0, z1`).
pub fn proof_trace_points(pts: [&[f64]; 6], params: SixPointParams) -> Result<ProofTrace> {
    let params = SixPointParams::new(params.a, params.b, params.c, params.s, params.t)?;
    let k = pts[0].len();
    if k == 0 || pts.iter().any(|p| p.len() != k) {
        return Err(Error::DimensionMismatch("role points must share a dimension".into()));
    }
    let SixPointParams { a, b, c, s, t } = params;
    let (x0, x1, y0, y1, z0, z1) = (pts[X0], pts[X1], pts[Y0], pts[Y1], pts[Z0], pts[Z1]);
    let d = sq_dist;

    let z = combo(&[(1.0 - c, z0), (c, z1)]);
    let w = combo(&[(1.0 - t, y1), ((1.0 - s) * t, x0), (s * t, x1)]);
    let x = combo(&[(1.0 - s, x0), (s, x1)]);
    let xp = combo(&[(1.0 - a, x0), (a, x1)]);

    let six_rhs = (1.0 - t) * (1.0 - c) * d(y1, z0)
        + (1.0 - s) * t * (1.0 - c) * d(x0, z0)
        + s * t * (1.0 - c) * d(x1, z0)
        + (1.0 - t) * c * d(y1, z1)
        + (1.0 - s) * t * c * d(x0, z1)
        + s * t * c * d(x1, z1);
    let w_side = (1.0 - t) * d(&w, y1) + (1.0 - s) * t * d(&w, x0) + s * t * d(&w, x1);
    let z_side = (1.0 - c) * d(&z, z0) + c * d(&z, z1);

    let mut steps = Vec::with_capacity(11);
    let mut push = |id: &str, r: Option<f64>| {
        steps.push(TraceStep {
            step: id.to_string(),
            residual: r,
        })
    };

    push("step1", Some(six_rhs - (d(&w, &z) + w_side + z_side)));
    push(
        "step2",
        Some(w_side - ((1.0 - t) * t * d(y1, &x) + (1.0 - s) * s * t * d(x0, x1))),
    );
    push("step3", Some(z_side - (1.0 - c) * c * d(z0, z1)));
    push(
        "step4",
        Some(
            six_rhs
                - (d(&w, &z)
                    + (1.0 - t) * t * d(y1, &x)
                    + (1.0 - s) * s * t * d(x0, x1)
                    + (1.0 - c) * c * d(z0, z1)),
        ),
    );

    let a_zero = a < DEGENERATE_PARAM;
    let b_zero = b < DEGENERATE_PARAM;
    if a_zero || b_zero {
        for id in ["step5", "step6", "step7", "step8", "step9", "step10"] {
            push(id, None);
        }
        let k = s * (1.0 - t) * t;
        if a_zero {
            push(
                "a=0",
                Some(k * ((1.0 - b) * d(x0, y0) + b * d(x0, y1) - (1.0 - b) * b * d(y0, y1))),
            );
        }
        if b_zero {
            push(
                "b=0",
                Some(k * ((1.0 - a) * d(x0, y0) + a * d(x1, y0) - (1.0 - a) * a * d(x0, x1))),
            );
        }
        return Ok(ProofTrace { steps });
    }

    push(
        "step5",
        Some(b * d(y1, &xp) - ((1.0 - b) * b * d(y0, y1) - (1.0 - b) * d(y0, &xp))),
    );
    push(
        "step6",
        Some(
            (1.0 - a) * d(y0, x0) + a * d(y0, x1) - (1.0 - a) * a * d(x0, x1) - d(y0, &xp),
        ),
    );
    push(
        "step7",
        Some(
            d(y1, &xp)
                - ((1.0 - b) * d(y0, y1) - (1.0 - a) * (1.0 - b) / b * d(y0, x0)
                    - a * (1.0 - b) / b * d(y0, x1)
                    + (1.0 - a) * a * (1.0 - b) / b * d(x0, x1)),
        ),
    );
    push(
        "step8",
        Some(
            d(y1, &x)
                - (s / a * d(y1, &xp) - (s - a) / a * d(y1, x0) + s * (s - a) * d(x0, x1)),
        ),
    );
    push(
        "step9",
        Some(
            d(y1, &x)
                - (s * ((1.0 - a) * (1.0 - b) + (s - a) * b) / b * d(x0, x1)
                    + s * (1.0 - b) / a * d(y0, y1)
                    - s * (1.0 - a) * (1.0 - b) / (a * b) * d(y0, x0)
                    - s * (1.0 - b) / b * d(y0, x1)
                    - (s - a) / a * d(y1, x0)),
        ),
    );
    let ab = a * b;
    let lhs = ab * d(&w, &z)
        + s * t * a * ((1.0 - t) * (1.0 - a) + (1.0 - s) * t * b) * d(x0, x1)
        + s * (1.0 - t) * t * (1.0 - b) * b * d(y0, y1)
        + ab * (1.0 - c) * c * d(z0, z1);
    let rhs = (1.0 - s) * t * ab * (1.0 - c) * d(x0, z0)
        + s * t * ab * (1.0 - c) * d(x1, z0)
        + (1.0 - t) * ab * (1.0 - c) * d(y1, z0)
        + (1.0 - s) * t * ab * c * d(x0, z1)
        + s * t * ab * c * d(x1, z1)
        + (1.0 - t) * ab * c * d(y1, z1)
        + s * (1.0 - t) * t * (1.0 - a) * (1.0 - b) * d(x0, y0)
        + s * (1.0 - t) * t * a * (1.0 - b) * d(x1, y0)
        + (1.0 - t) * t * (s - a) * b * d(x0, y1);
    push("step10", Some(rhs - lhs));
    Ok(ProofTrace { steps })
}

/// [`proof_trace_points`] on a configuration whose labels include the six
/// role names.
pub fn proof_trace(config: &EuclideanConfig, params: SixPointParams) -> Result<ProofTrace> {
    proof_trace_points(config.role_points(&SIX_ROLES)?, params)
}

/// `a·b·d(w, z)²` for the two barycenters of the proof; the six-point margin
/// equals the final trace residual plus this term.
pub fn barycenter_gap(pts: [&[f64]; 6], params: SixPointParams) -> f64 {
    let SixPointParams { a, b, c, s, t } = params;
    let z = combo(&[(1.0 - c, pts[Z0]), (c, pts[Z1])]);
    let w = combo(&[(1.0 - t, pts[Y1]), ((1.0 - s) * t, pts[X0]), (s * t, pts[X1])]);
    a * b * sq_dist(&w, &z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> EuclideanConfig {
        EuclideanConfig::new(
            vec!["a", "b", "c", "d"],
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]],
        )
        .unwrap()
    }

    #[test]
    fn dirac_barycenter() {
        assert_eq!(barycenter(&square(), &WeightedMeasure::dirac(2)).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn two_point_geodesic() {
        let t = 0.3;
        let mu = WeightedMeasure::new(vec![0, 2], vec![1.0 - t, t]).unwrap();
        let b = barycenter(&square(), &mu).unwrap();
        assert!((b[0] - 0.3).abs() < 1e-15 && (b[1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn uniform_square_center() {
        let mu = WeightedMeasure::new(vec![0, 1, 2, 3], vec![0.25; 4]).unwrap();
        assert_eq!(barycenter(&square(), &mu).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn measure_validation() {
        assert!(WeightedMeasure::new(vec![0, 1], vec![0.5, 0.6]).is_err());
        assert!(WeightedMeasure::new(vec![0, 1], vec![1.0, 0.0]).is_err());
        assert!(WeightedMeasure::new(vec![0], vec![0.5, 0.5]).is_err());
        let mu = WeightedMeasure::dirac(9);
        assert!(barycenter(&square(), &mu).is_err());
    }

    #[test]
    fn variance_residual_trivial_cases() {
        let cfg = square();
        let mu = WeightedMeasure::new(vec![0, 1, 3], vec![0.2, 0.5, 0.3]).unwrap();
        let z = barycenter(&cfg, &mu).unwrap();
        assert!(variance_residual(&cfg, &mu, &z).unwrap().abs() < 1e-15);
        let dirac = WeightedMeasure::dirac(1);
        assert!(variance_residual(&cfg, &dirac, &[7.0, -2.0]).unwrap().abs() < 1e-12);
        assert!(double_variance_residual(&cfg, &WeightedMeasure::dirac(0), &dirac)
            .unwrap()
            .abs()
            < 1e-15);
        assert!(double_variance_residual(&cfg, &mu, &mu).unwrap().abs() < 1e-15);
    }

    #[test]
    fn thick_prop_degenerate() {
        let (x0, x1, y) = ([0.0, 0.0, 1.0], [2.0, 1.0, 0.0], [0.5, -1.0, 3.0]);
        assert!(thick_prop_residual(&x0, &x1, &y, 0.4, 0.4).unwrap().abs() < 1e-14);
        assert_eq!(thick_prop_residual(&x0, &x1, &y, 0.0, 0.0).unwrap(), 0.0);
        assert!(thick_prop_residual(&x0, &x1, &y, 0.5, 0.4).is_err());
    }

    #[test]
    fn degenerate_params_use_reduced_inequalities() {
        let pts: Vec<Vec<f64>> = vec![
            vec![0.0, 0.0, 0.0],
            vec![1.0, 0.2, 0.0],
            vec![0.3, 1.0, 0.1],
            vec![0.9, -0.7, 0.4],
            vec![0.1, 0.5, -1.0],
            vec![0.6, 0.4, 1.2],
        ];
        let cfg = EuclideanConfig::new(SIX_ROLES.to_vec(), pts).unwrap();
        let p = SixPointParams::new(0.0, 0.4, 0.5, 0.6, 0.7).unwrap();
        let tr = proof_trace(&cfg, p).unwrap();
        assert!(tr.is_reduced());
        assert_eq!(tr.residual("step7"), None);
        assert!(tr.residual("a=0").unwrap() >= 0.0);
        let p = SixPointParams::new(0.3, 0.0, 0.5, 0.6, 0.7).unwrap();
        let tr = proof_trace(&cfg, p).unwrap();
        assert!(tr.residual("b=0").unwrap() >= 0.0);
        assert!(tr.residual("a=0").is_none());
        let json = serde_json::to_value(&tr).unwrap();
        assert!(json.is_array());
        assert_eq!(json[0]["step"], "step1");
    }
}
