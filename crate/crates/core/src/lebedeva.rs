//! Six-point configurations in ℝ³ whose segments `(x0,x1)` and `(y0,y1)`
//! cross, with `(z0,z1)` piercing their quadrilateral, and the metrics
//! obtained by stretching the single distance `d(z0,z1)` by `ε`.

use nalgebra::{Matrix2, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::boxtimes::QuadSquares;
use crate::euclid::EuclideanConfig;
use crate::metric::FiniteMetricSpace;
use crate::optim::nelder_mead_box;
use crate::sixpoint::{SixPointParams, SIX_ROLES, X0, X1, Y0, Y1, Z0, Z1};

/// Geometric tolerance on configurations scaled to unit diameter.
pub const TOL_GEOM: f64 = 1e-9;
const MAX_RETRIES: usize = 16;

type P3 = Vector3<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shape {
    /// Angle between the x-line and the y-line, in degrees.
    pub angle_deg: f64,
    /// Length of `[y0, y1]` relative to `|x0 x1| = 1`.
    pub y_span: f64,
    /// Length of `[z0, z1]` relative to `|x0 x1| = 1`.
    pub height: f64,
}

impl Default for Shape {
    fn default() -> Self {
        Shape {
            angle_deg: 60.0,
            y_span: 1.0,
            height: 0.5,
        }
    }
}

impl Shape {
    fn jittered(&self, k: usize) -> Shape {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        Shape {
            angle_deg: (self.angle_deg + sign * 3.7 * k as f64).clamp(5.0, 175.0),
            y_span: self.y_span * (1.0 + 0.05 * k as f64),
            height: self.height,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub holds: bool,
    pub diagnostics: Vec<String>,
    /// Crossing point of `(x0,x1)` and `(y0,y1)`.
    pub xy_crossing: Option<[f64; 3]>,
    /// Point where `(z0,z1)` meets the plane of the quadrilateral.
    pub z_crossing: Option<[f64; 3]>,
}

fn v(p: &[f64; 3]) -> P3 {
    P3::new(p[0], p[1], p[2])
}

fn arr(p: &P3) -> [f64; 3] {
    [p.x, p.y, p.z]
}

fn cross2(a: Vector2<f64>, b: Vector2<f64>) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Signed distance of `q` from the line through `a, b` (positive on the left).
fn side(a: Vector2<f64>, b: Vector2<f64>, q: Vector2<f64>) -> f64 {
    let e = b - a;
    cross2(e, q - a) / e.norm()
}

/// Check the crossing condition on six points given in role order.
pub fn check_condition(points: &[[f64; 3]; 6]) -> ConditionReport {
    let mut report = ConditionReport {
        holds: false,
        diagnostics: Vec::new(),
        xy_crossing: None,
        z_crossing: None,
    };
    let raw: Vec<P3> = points.iter().map(v).collect();
    if raw.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
        report.diagnostics.push("non-finite coordinate".into());
        return report;
    }
    let mut diam: f64 = 0.0;
    for p in &raw {
        for q in &raw {
            diam = diam.max((p - q).norm());
        }
    }
    if diam == 0.0 {
        report.diagnostics.push("all points coincide".into());
        return report;
    }
    let p: Vec<P3> = raw.iter().map(|q| (q - raw[X0]) / diam).collect();
    for i in 0..6 {
        for j in 0..i {
            if (p[i] - p[j]).norm() <= TOL_GEOM {
                report
                    .diagnostics
                    .push(format!("{} and {} coincide", SIX_ROLES[j], SIX_ROLES[i]));
            }
        }
    }
    if !report.diagnostics.is_empty() {
        return report;
    }

    let ex = p[X1] - p[X0];
    let normal = ex.cross(&(p[Y0] - p[X0]));
    if normal.norm() <= TOL_GEOM {
        report.diagnostics.push("x0, x1, y0 are collinear".into());
        return report;
    }
    let nhat = normal.normalize();
    let off = nhat.dot(&(p[Y1] - p[X0]));
    if off.abs() > TOL_GEOM {
        report
            .diagnostics
            .push(format!("x0, x1, y0, y1 are not coplanar (offset {off:.3e})"));
        return report;
    }

    let u = ex.normalize();
    let w = nhat.cross(&u);
    let to2 = |q: &P3| Vector2::new(u.dot(&(q - p[X0])), w.dot(&(q - p[X0])));
    let (qx0, qx1, qy0, qy1) = (to2(&p[X0]), to2(&p[X1]), to2(&p[Y0]), to2(&p[Y1]));
    let dx = qx1 - qx0;
    let dy = qy1 - qy0;
    let det = cross2(dx, dy);
    if det.abs() <= TOL_GEOM * dx.norm() * dy.norm() {
        report.diagnostics.push("segments (x0,x1) and (y0,y1) are parallel".into());
        return report;
    }
    let sol = Matrix2::new(dx.x, -dy.x, dx.y, -dy.y)
        .lu()
        .solve(&(qy0 - qx0))
        .expect("nonsingular 2x2 system");
    let (alpha, beta) = (sol.x, sol.y);
    let interior = |r: f64| r > TOL_GEOM && r < 1.0 - TOL_GEOM;
    if !interior(alpha) || !interior(beta) {
        report.diagnostics.push(format!(
            "open segments (x0,x1) and (y0,y1) do not cross (parameters {alpha:.6}, {beta:.6})"
        ));
        return report;
    }
    let m = p[X0] + alpha * ex;
    report.xy_crossing = Some(arr(&(raw[X0] + m * diam)));

    let h0 = nhat.dot(&(p[Z0] - p[X0]));
    let h1 = nhat.dot(&(p[Z1] - p[X0]));
    if h0.abs() <= TOL_GEOM || h1.abs() <= TOL_GEOM || h0.signum() == h1.signum() {
        report
            .diagnostics
            .push("open segment (z0,z1) does not cross the plane of x0, x1, y0, y1".into());
        return report;
    }
    let lambda = h0 / (h0 - h1);
    let q = p[Z0] + lambda * (p[Z1] - p[Z0]);
    report.z_crossing = Some(arr(&(raw[X0] + q * diam)));

    let q2 = to2(&q);
    let ring = [qx0, qy0, qx1, qy1];
    let orient = side(qx0, qy0, qx1).signum();
    for k in 0..4 {
        let s = orient * side(ring[k], ring[(k + 1) % 4], q2);
        if s <= TOL_GEOM {
            report.diagnostics.push(format!(
                "(z0,z1) meets the plane outside the open quadrilateral (edge {k}, distance {s:.3e})"
            ));
            return report;
        }
    }
    for (a, b, name) in [(qx0, qx1, "(x0,x1)"), (qy0, qy1, "(y0,y1)")] {
        if side(a, b, q2).abs() <= TOL_GEOM {
            report
                .diagnostics
                .push(format!("(z0,z1) meets the diagonal {name}"));
            return report;
        }
    }
    report.holds = true;
    report
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LebedevaDocument", into = "LebedevaDocument")]
pub struct LebedevaConfig {
    /// Role order `x0, x1, y0, y1, z0, z1`.
    pub points: [[f64; 3]; 6],
    pub epsilon: f64,
    /// Parameters of the equality construction, when known.
    pub params: Option<SixPointParams>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LebedevaDocument {
    pub labels: Vec<String>,
    pub points: Vec<[f64; 3]>,
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<SixPointParams>,
}

impl From<LebedevaConfig> for LebedevaDocument {
    fn from(c: LebedevaConfig) -> Self {
        LebedevaDocument {
            labels: SIX_ROLES.iter().map(|s| s.to_string()).collect(),
            points: c.points.to_vec(),
            epsilon: c.epsilon,
            params: c.params,
        }
    }
}

impl TryFrom<LebedevaDocument> for LebedevaConfig {
    type Error = Error;
    fn try_from(doc: LebedevaDocument) -> Result<Self> {
        if doc.points.len() != 6 || doc.labels.len() != 6 {
            return Err(Error::DimensionMismatch("six labeled points required".into()));
        }
        let mut points = [[0.0; 3]; 6];
        for (role, slot) in SIX_ROLES.iter().zip(points.iter_mut()) {
            let i = doc
                .labels
                .iter()
                .position(|l| l == role)
                .ok_or_else(|| Error::UnknownLabel(role.to_string()))?;
            *slot = doc.points[i];
        }
        LebedevaConfig::new(points, doc.epsilon, doc.params)
    }
}

impl LebedevaConfig {
    pub fn new(points: [[f64; 3]; 6], epsilon: f64, params: Option<SixPointParams>) -> Result<Self> {
        let report = check_condition(&points);
        if !report.holds {
            return Err(Error::Geometry(report.diagnostics.join("; ")));
        }
        let cfg = LebedevaConfig {
            points,
            epsilon: 0.0,
            params,
        };
        cfg.with_epsilon(epsilon)
    }

    /// Same points with a different stretch.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        let max = max_metric_epsilon(self);
        if !(epsilon >= 0.0) || epsilon > max * (1.0 + 1e-12) {
            return Err(Error::InvalidParams(format!(
                "epsilon {epsilon} outside [0, {max}]"
            )));
        }
        Ok(LebedevaConfig {
            epsilon,
            ..self.clone()
        })
    }

    pub fn point(&self, role: usize) -> P3 {
        v(&self.points[role])
    }

    /// `‖z0 − z1‖`.
    pub fn z_length(&self) -> f64 {
        (self.point(Z0) - self.point(Z1)).norm()
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..6 {
            for j in 0..i {
                d = d.max((self.point(i) - self.point(j)).norm());
            }
        }
        d
    }

    pub fn euclidean(&self) -> EuclideanConfig {
        EuclideanConfig {
            labels: SIX_ROLES.iter().map(|s| s.to_string()).collect(),
            points: self.points.iter().map(|p| p.to_vec()).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn read(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

fn build(p: SixPointParams, shape: &Shape) -> [[f64; 3]; 6] {
    let SixPointParams { a, b, c, s, t } = p;
    let x0 = P3::zeros();
    let x1 = P3::new(1.0, 0.0, 0.0);
    let m = (1.0 - a) * x0 + a * x1;
    let th = shape.angle_deg.to_radians();
    let e = P3::new(th.cos(), th.sin(), 0.0);
    let y0 = m - b * shape.y_span * e;
    let y1 = m + (1.0 - b) * shape.y_span * e;
    let pt = (1.0 - t) * y1 + t * ((1.0 - s) * x0 + s * x1);
    let e3 = P3::z();
    let z0 = pt - c * shape.height * e3;
    let z1 = pt + (1.0 - c) * shape.height * e3;

    let pts = [x0, x1, y0, y1, z0, z1];
    let mut diam: f64 = 0.0;
    for i in 0..6 {
        for j in 0..i {
            diam = diam.max((pts[i] - pts[j]).norm());
        }
    }
    let mut out = [[0.0; 3]; 6];
    for (o, q) in out.iter_mut().zip(pts.iter()) {
        *o = arr(&(q / diam));
    }
    out
}

fn validate_construction(params: SixPointParams) -> Result<SixPointParams> {
    let SixPointParams { a, b, c, s, t } = params;
    for (name, x) in [("a", a), ("b", b), ("c", c), ("s", s), ("t", t)] {
        if !(x > 0.0 && x < 1.0) {
            return Err(Error::InvalidParams(format!("{name} = {x} must lie in (0,1)")));
        }
    }
    if a >= s {
        return Err(Error::InvalidParams(format!("need a < s, got a={a}, s={s}")));
    }
    SixPointParams::new(a, b, c, s, t)
}

/// The unit-diameter configuration on which the six-point inequality holds
/// with equality at `params`.
pub fn equality_config(params: SixPointParams, shape: Shape) -> Result<LebedevaConfig> {
    let params = validate_construction(params)?;
    if !(shape.y_span > 0.0 && shape.height > 0.0 && shape.angle_deg.to_radians().sin().abs() > 1e-6)
    {
        return Err(Error::InvalidParams("degenerate shape".into()));
    }
    let mut last = String::new();
    for k in 0..=MAX_RETRIES {
        let pts = build(params, &shape.jittered(k));
        let report = check_condition(&pts);
        if report.holds {
            return LebedevaConfig::new(pts, 0.0, Some(params));
        }
        last = report.diagnostics.join("; ");
    }
    Err(Error::Geometry(format!("shape retries exhausted: {last}")))
}

/// Largest stretch of `d(z0,z1)` that keeps every triangle inequality.
pub fn max_metric_epsilon(config: &LebedevaConfig) -> f64 {
    let (z0, z1) = (config.point(Z0), config.point(Z1));
    let d = (z0 - z1).norm();
    [X0, X1, Y0, Y1]
        .iter()
        .map(|&u| {
            let q = config.point(u);
            ((z0 - q).norm() + (q - z1).norm() - d).max(0.0)
        })
        .fold(f64::INFINITY, f64::min)
}

/// `min(0.1 · max_metric_epsilon, 0.01 · diameter)`.
pub fn default_epsilon(config: &LebedevaConfig) -> f64 {
    (0.1 * max_metric_epsilon(config)).min(0.01 * config.diameter())
}

/// Euclidean distances with `d(z0,z1)` increased by the configured ε.
pub fn d_epsilon(config: &LebedevaConfig) -> Result<FiniteMetricSpace> {
    let pts: Vec<Vec<f64>> = config.points.iter().map(|p| p.to_vec()).collect();
    let base = FiniteMetricSpace::from_euclidean(&pts, SIX_ROLES.to_vec())?;
    if config.epsilon == 0.0 {
        return Ok(base);
    }
    let max = max_metric_epsilon(config);
    if config.epsilon > max * (1.0 + 1e-12) {
        return Err(Error::InvalidParams(format!(
            "epsilon {} exceeds the metric bound {max}",
            config.epsilon
        )));
    }
    base.perturb_pair("z0", "z1", config.epsilon)
}

/// Six-point margin of `d_epsilon` at the construction parameters:
/// only the `d(z0,z1)²` term changes, by `2Dε + ε²`.
pub fn predicted_margin(params: SixPointParams, z_length: f64, epsilon: f64) -> f64 {
    let SixPointParams { a, b, c, .. } = params;
    -a * b * (1.0 - c) * c * (2.0 * z_length * epsilon + epsilon * epsilon)
}

/// Smallest ⊠ margin over quadruples with `z0, z1` at opposite corners once
/// `d(z0,z1)` is stretched by `eps`. All other quadruples keep their
/// Euclidean distances, or gain from the stretch, so this decides whether
/// the five-point restrictions still satisfy ⊠.
pub fn stretched_boxtimes_slack(config: &LebedevaConfig, eps: f64) -> f64 {
    let mut sq = [[0.0; 6]; 6];
    for i in 0..6 {
        for j in 0..6 {
            sq[i][j] = (config.point(i) - config.point(j)).norm_squared();
        }
    }
    let d = sq[Z0][Z1].sqrt() + eps;
    sq[Z0][Z1] = d * d;
    sq[Z1][Z0] = d * d;
    // z0, z1 at corners x, z; relabeling the square reaches every other
    // placement of them on a diagonal, and swapping u, w reflects s.
    let mut worst = f64::INFINITY;
    for u in 0..6 {
        for w in u..6 {
            let quad = QuadSquares {
                xy: sq[Z0][u],
                yz: sq[u][Z1],
                zw: sq[Z1][w],
                wx: sq[w][Z0],
                xz: sq[Z0][Z1],
                yw: sq[u][w],
            };
            worst = worst.min(quad.minimize().2);
        }
    }
    worst
}

/// Largest `φ ∈ [0, 1]` (to about 4e-3) such that stretching by
/// `φ · max_metric_epsilon` keeps [`stretched_boxtimes_slack`] nonnegative.
pub fn boxtimes_safe_fraction(config: &LebedevaConfig) -> f64 {
    let max = max_metric_epsilon(config);
    let scale = config.diameter().powi(2);
    let ok = |phi: f64| stretched_boxtimes_slack(config, phi * max) >= -1e-13 * scale;
    if ok(1.0) {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..8 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

const ANGLE_RANGE: (f64, f64) = (5.0, 175.0);
const SPAN_RANGE: (f64, f64) = (1e-4, 20.0);
const HEIGHT_RANGE: (f64, f64) = (1e-5, 5.0);

fn shape_from_unit(x: &[f64]) -> Shape {
    let lerp = |(lo, hi): (f64, f64), u: f64| lo + (hi - lo) * u;
    let loglerp = |(lo, hi): (f64, f64), u: f64| (lo.ln() + (hi.ln() - lo.ln()) * u).exp();
    Shape {
        angle_deg: lerp(ANGLE_RANGE, x[0]),
        y_span: loglerp(SPAN_RANGE, x[1]),
        height: loglerp(HEIGHT_RANGE, x[2]),
    }
}

/// `(safe fraction, six-point margin at ε = eps_fraction · max_metric_epsilon)`
/// for the unit-diameter configuration of a shape, or `None` if the shape
/// breaks the crossing condition.
fn shape_score(params: SixPointParams, shape: &Shape, eps_fraction: f64) -> Option<(f64, f64)> {
    let pts = build(params, shape);
    if !check_condition(&pts).holds {
        return None;
    }
    let config = LebedevaConfig {
        points: pts,
        epsilon: 0.0,
        params: Some(params),
    };
    let eps = eps_fraction * max_metric_epsilon(&config);
    Some((
        boxtimes_safe_fraction(&config),
        predicted_margin(params, config.z_length(), eps),
    ))
}

/// Ratio between the ⊠-safe fraction a fitted shape must reach and the
/// requested stretch fraction.
pub const SHAPE_SAFETY: f64 = 1.5;

/// A shape whose stretched metric at `ε = eps_fraction · max_metric_epsilon`
/// keeps ⊠ on every five-point restriction (with [`SHAPE_SAFETY`] headroom)
/// while making the six-point violation as large as possible. A coarse grid
/// over angle, span and height, then Nelder–Mead. Deterministic.
pub fn fit_shape(params: SixPointParams, eps_fraction: f64) -> Result<Shape> {
    let params = validate_construction(params)?;
    if !(eps_fraction > 0.0 && eps_fraction <= 1.0 / SHAPE_SAFETY) {
        return Err(Error::InvalidParams(format!(
            "stretch fraction {eps_fraction} outside (0, {}]",
            1.0 / SHAPE_SAFETY
        )));
    }
    let need = SHAPE_SAFETY * eps_fraction;
    // Lower is better: violation size when safe, shortfall otherwise.
    let cost = |x: &[f64]| match shape_score(params, &shape_from_unit(x), eps_fraction) {
        None => f64::INFINITY,
        Some((phi, _)) if phi < need => 1e3 + 1e3 * (need - phi),
        Some((_, margin)) => -(-margin).max(1e-300).ln(),
    };
    let axis = |k: usize, n: usize| (k as f64 + 0.5) / n as f64;
    let mut cells: Vec<(f64, [f64; 3])> = Vec::new();
    for i in 0..8 {
        for j in 0..6 {
            for k in 0..6 {
                let x = [axis(i, 8), axis(j, 6), axis(k, 6)];
                cells.push((cost(&x), x));
            }
        }
    }
    cells.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = cells[0];
    for &(_, x0) in cells.iter().take(3) {
        let (x, v) = nelder_mead_box(cost, &x0, 0.06, 80);
        if v < best.0 {
            best = (v, [x[0], x[1], x[2]]);
        }
    }
    if best.0 >= 1e3 {
        return Err(Error::Geometry(format!(
            "no shape keeps the five-point conditions at stretch fraction {eps_fraction}"
        )));
    }
    Ok(shape_from_unit(&best.1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sixpoint::sixpoint_margin;

    fn octahedron() -> [[f64; 3]; 6] {
        [
            [-1.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, -1.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.3, 0.2, -1.0],
            [0.3, 0.2, 1.0],
        ]
    }

    #[test]
    fn octahedron_condition() {
        let r = check_condition(&octahedron());
        assert!(r.holds, "{:?}", r.diagnostics);
        let z = r.z_crossing.unwrap();
        assert!((z[0] - 0.3).abs() < 1e-12 && (z[2]).abs() < 1e-12);
    }

    #[test]
    fn centered_crossing_meets_diagonals() {
        let mut pts = octahedron();
        pts[4] = [0.0, 0.0, -1.0];
        pts[5] = [0.0, 0.0, 1.0];
        assert!(!check_condition(&pts).holds);
    }

    #[test]
    fn z_segment_on_one_side_fails() {
        let mut pts = octahedron();
        pts[4][2] = 0.5;
        let r = check_condition(&pts);
        assert!(!r.holds);
        assert!(r.diagnostics[0].contains("plane"));
    }

    #[test]
    fn parallel_segments_fail() {
        let mut pts = octahedron();
        pts[2] = [-1.0, 1.0, 0.0];
        pts[3] = [1.0, 1.0, 0.0];
        let r = check_condition(&pts);
        assert!(!r.holds);
        assert!(r.diagnostics[0].contains("parallel"));
    }

    #[test]
    fn non_coplanar_fails() {
        let mut pts = octahedron();
        pts[3][2] = 0.1;
        assert!(!check_condition(&pts).holds);
    }

    #[test]
    fn crossing_outside_hull_fails() {
        let mut pts = octahedron();
        pts[4] = [0.9, 0.9, -1.0];
        pts[5] = [0.9, 0.9, 1.0];
        assert!(!check_condition(&pts).holds);
    }

    #[test]
    fn octahedron_bound_uses_nearest_vertex() {
        let cfg = LebedevaConfig::new(octahedron(), 0.0, None).unwrap();
        let (z0, z1) = (cfg.point(Z0), cfg.point(Z1));
        let want = [X0, X1, Y0, Y1]
            .iter()
            .map(|&u| (z0 - cfg.point(u)).norm() + (cfg.point(u) - z1).norm() - 2.0)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(max_metric_epsilon(&cfg), want);
        assert!(want > 0.0);
        let near = (z0 - cfg.point(X1)).norm() * 2.0 - 2.0;
        assert!((want - near).abs() < 1e-15);
    }

    #[test]
    fn equality_and_violation() {
        let p = SixPointParams::new(0.25, 0.5, 0.5, 0.5, 0.5).unwrap();
        let cfg = equality_config(p, Shape::default()).unwrap();
        assert!((cfg.diameter() - 1.0).abs() < 1e-12);
        let sp = d_epsilon(&cfg).unwrap();
        assert!(sixpoint_margin(&sp, &SIX_ROLES, p).unwrap().abs() < 1e-12);

        let eps = 0.1 * max_metric_epsilon(&cfg);
        let cfg = cfg.with_epsilon(eps).unwrap();
        let sp = d_epsilon(&cfg).unwrap();
        let got = sixpoint_margin(&sp, &SIX_ROLES, p).unwrap();
        let want = predicted_margin(p, cfg.z_length(), eps);
        assert!(want < 0.0);
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn rejects_bad_params() {
        let p = SixPointParams::new(0.5, 0.5, 0.5, 0.5, 0.5).unwrap();
        assert!(equality_config(p, Shape::default()).is_err());
        let p = SixPointParams::new(0.0, 0.5, 0.5, 0.5, 0.5).unwrap();
        assert!(equality_config(p, Shape::default()).is_err());
    }

    #[test]
    fn epsilon_bounds() {
        let cfg = LebedevaConfig::new(octahedron(), 0.0, None).unwrap();
        let max = max_metric_epsilon(&cfg);
        assert!(cfg.with_epsilon(max * 1.01).is_err());
        assert!(cfg.with_epsilon(-1.0).is_err());
        let tight = d_epsilon(&cfg.with_epsilon(max).unwrap()).unwrap();
        assert!(tight.validate().ok);
    }

    #[test]
    fn json_roundtrip() {
        let p = SixPointParams::new(0.2, 0.3, 0.4, 0.6, 0.7).unwrap();
        let cfg = equality_config(p, Shape::default()).unwrap();
        let cfg = cfg.with_epsilon(default_epsilon(&cfg)).unwrap();
        let back: LebedevaConfig = serde_json::from_str(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
    }
}
