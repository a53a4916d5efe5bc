//! G-comparison: does a map of graph vertices into a metric space admit
//! Hilbert-space points that shrink edge distances and expand non-edge
//! distances?
//!
//! The search runs Dykstra's alternating projections in the space of
//! squared-distance matrices, between the cone `K` of matrices that are
//! negative semidefinite on `1^⊥` and the box `B` of the linear constraints.
//! `K ∩ B` is exactly the set of feasible squared-distance matrices.
//! Feasible answers carry a Gram matrix and infeasible ones a Farkas
//! certificate; both are re-checked independently before being returned.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::boxtimes::{BoxtimesParams, QuadSquares};
use crate::error::{Error, Result};
use crate::form::{min_eigenvalue, normalized_min_laplacian_eigenvalue, QuadraticForm};
use crate::metric::FiniteMetricSpace;
use crate::sixpoint::{sixpoint_search_with, SearchOptions, SixPointParams, SIX_TERMS};
use crate::witness::WitnessParams;
use crate::{TOL_EIG, TOL_MARGIN};

pub const TOL_FEAS: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 5000;
pub const DEFAULT_TIGHTEN: f64 = 1e-6;
/// Certificate extraction may spend this many projection steps per unit of
/// the iteration budget.
pub const CERT_STEPS_PER_ITER: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphDocument", into = "GraphDocument")]
pub struct ComparisonGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphDocument {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
}

impl From<ComparisonGraph> for GraphDocument {
    fn from(g: ComparisonGraph) -> Self {
        GraphDocument {
            n: g.n,
            edges: g.edges.iter().map(|&(u, v)| [u, v]).collect(),
        }
    }
}

impl TryFrom<GraphDocument> for ComparisonGraph {
    type Error = Error;
    fn try_from(d: GraphDocument) -> Result<Self> {
        ComparisonGraph::new(d.n, d.edges.iter().map(|e| (e[0], e[1])))
    }
}

impl ComparisonGraph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut out = Vec::new();
        for (u, v) in edges {
            if u == v {
                return Err(Error::InvalidGraph(format!("loop at vertex {u}")));
            }
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!("edge ({u},{v}) out of range for n={n}")));
            }
            out.push((u.min(v), u.max(v)));
        }
        out.sort_unstable();
        out.dedup();
        Ok(ComparisonGraph { n, edges: out })
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|v| (0..v).map(move |u| (u, v))).collect();
        ComparisonGraph { n, edges }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn is_edge(&self, u: usize, v: usize) -> bool {
        self.edges.binary_search(&(u.min(v), u.max(v))).is_ok()
    }

    pub fn non_edges(&self) -> Vec<(usize, usize)> {
        (0..self.n)
            .flat_map(|v| (0..v).map(move |u| (u, v)))
            .filter(|&(u, v)| !self.is_edge(u, v))
            .collect()
    }

    pub fn read(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

pub fn graph_cycle(n: usize) -> Result<ComparisonGraph> {
    if n < 4 {
        return Err(Error::InvalidGraph(format!("cycle needs n >= 4, got {n}")));
    }
    ComparisonGraph::new(n, (0..n).map(|i| (i, (i + 1) % n)))
}

/// K₆ minus the matching `{0,1}, {2,3}, {4,5}`; vertices are the roles
/// `x0, x1, y0, y1, z0, z1`.
pub fn graph_octahedron() -> ComparisonGraph {
    let edges = (0..6)
        .flat_map(|v| (0..v).map(move |u| (u, v)))
        .filter(|&(u, v)| u / 2 != v / 2);
    ComparisonGraph::new(6, edges).expect("octahedron is a valid graph")
}

/// Inner products of the embedded points, in the units of the input space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramSolution {
    pub gram: Vec<Vec<f64>>,
}

impl GramSolution {
    fn from_matrix(m: &DMatrix<f64>) -> Self {
        GramSolution {
            gram: (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        let n = self.gram.len();
        if self.gram.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("Gram matrix must be square".into()));
        }
        Ok(DMatrix::from_fn(n, n, |i, j| self.gram[i][j]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairWeight {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

/// Nonnegative weights `y` on edges and `z` on non-edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarkasCertificate {
    pub y: Vec<PairWeight>,
    pub z: Vec<PairWeight>,
}

impl FarkasCertificate {
    /// The signed form `Σ_E y·d² − Σ_N z·d²` on `n` vertices.
    pub fn form(&self, n: usize) -> Result<QuadraticForm> {
        let mut f = QuadraticForm::zero(n);
        for (list, sign) in [(&self.y, 1.0), (&self.z, -1.0)] {
            for w in list {
                if w.u >= n || w.v >= n || w.u == w.v {
                    return Err(Error::InvalidGraph(format!("bad pair ({}, {})", w.u, w.v)));
                }
                f.add_term(w.u, w.v, sign * w.weight);
            }
        }
        Ok(f)
    }

    fn total(&self) -> f64 {
        self.y.iter().chain(&self.z).map(|w| w.weight).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateCheck {
    pub valid: bool,
    /// Signed value with weights summing to 1 on the unit-diameter image.
    pub normalized_value: f64,
    pub normalized_min_eigenvalue: f64,
    pub reasons: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Feasibility {
    Feasible {
        solution: GramSolution,
        iterations: usize,
    },
    CertifiedInfeasible {
        certificate: FarkasCertificate,
        check: CertificateCheck,
    },
    Unknown {
        iterations: usize,
        /// Largest constraint violation of the last iterate, unit-diameter scale.
        residual: f64,
    },
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible { .. })
    }

    pub fn is_certified_infeasible(&self) -> bool {
        matches!(self, Feasibility::CertifiedInfeasible { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Feasibility::Feasible { .. } => "feasible",
            Feasibility::CertifiedInfeasible { .. } => "certified_infeasible",
            Feasibility::Unknown { .. } => "unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityOptions {
    pub max_iter: usize,
    pub tol_feas: f64,
    /// The projections aim at constraints tightened by this much (unit
    /// diameter scale); acceptance is always against the exact constraints.
    pub tighten: f64,
    /// Candidate certificates tried before the projection search.
    pub hints: Vec<FarkasCertificate>,
}

impl Default for FeasibilityOptions {
    fn default() -> Self {
        FeasibilityOptions {
            max_iter: DEFAULT_MAX_ITER,
            tol_feas: TOL_FEAS,
            tighten: DEFAULT_TIGHTEN,
            hints: Vec::new(),
        }
    }
}

/// Target squared distances of a vertex map, scaled to unit diameter.
struct Target {
    n: usize,
    sq: DMatrix<f64>,
    scale: f64,
    edge: Vec<bool>,
}

impl Target {
    fn new(space: &FiniteMetricSpace, graph: &ComparisonGraph, idx: &[usize]) -> Self {
        let n = graph.n();
        let diam = space.diameter_of(idx);
        let scale = if diam > 0.0 { diam * diam } else { 1.0 };
        let sq = DMatrix::from_fn(n, n, |u, v| space.dist2(idx[u], idx[v]) / scale);
        let edge = (0..n * n).map(|k| graph.is_edge(k / n, k % n)).collect();
        Target { n, sq, scale, edge }
    }

    fn is_edge(&self, u: usize, v: usize) -> bool {
        self.edge[u * self.n + v]
    }

    fn project_box(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.project_box_by(x, 0.0)
    }

    fn project_box_by(&self, x: &DMatrix<f64>, delta: f64) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(n, n, |u, v| {
            if u == v {
                return 0.0;
            }
            let val = 0.5 * (x[(u, v)] + x[(v, u)]);
            let t = self.sq[(u, v)];
            if self.is_edge(u, v) {
                val.min((t - delta).max(0.0))
            } else {
                val.max(t + delta)
            }
        })
    }

    /// Largest violation of the comparison constraints by squared distances `d`.
    fn violation(&self, d: impl Fn(usize, usize) -> f64) -> f64 {
        let mut worst: f64 = 0.0;
        for v in 0..self.n {
            for u in 0..v {
                let gap = d(u, v) - self.sq[(u, v)];
                worst = worst.max(if self.is_edge(u, v) { gap } else { -gap });
            }
        }
        worst
    }
}

/// Householder reflection with `Q·1 = −√n·e_n`.
fn householder(n: usize) -> DMatrix<f64> {
    let mut v = DVector::from_element(n, 1.0);
    v[n - 1] += (n as f64).sqrt();
    let vv = v.dot(&v);
    DMatrix::identity(n, n) - (&v * v.transpose()) * (2.0 / vv)
}

struct Cone {
    n: usize,
    q: DMatrix<f64>,
}

impl Cone {
    fn new(n: usize) -> Self {
        Cone {
            n,
            q: householder(n),
        }
    }

    /// Eigen-decomposition of the block of `Q X Q` acting on `1^⊥`.
    fn split(&self, x: &DMatrix<f64>) -> (DMatrix<f64>, SymmetricEigen<f64, nalgebra::Dyn>) {
        let mut a = &self.q * x * &self.q;
        a = (&a + a.transpose()) * 0.5;
        let m = self.n - 1;
        let eig = SymmetricEigen::new(a.view((0, 0), (m, m)).into_owned());
        (a, eig)
    }

    fn rebuild(&self, mut a: DMatrix<f64>, block: DMatrix<f64>) -> DMatrix<f64> {
        let m = self.n - 1;
        a.view_mut((0, 0), (m, m)).copy_from(&block);
        let out = &self.q * a * &self.q;
        (&out + out.transpose()) * 0.5
    }

    fn project(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let (a, eig) = self.split(x);
        let lam = eig.eigenvalues.map(|l| l.min(0.0));
        let block = &eig.eigenvectors * DMatrix::from_diagonal(&lam) * eig.eigenvectors.transpose();
        self.rebuild(a, block)
    }

    /// `x − P_K(x)`: positive semidefinite with zero row sums.
    fn polar_part(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let (_, eig) = self.split(x);
        let lam = eig.eigenvalues.map(|l| l.max(0.0));
        let block = &eig.eigenvectors * DMatrix::from_diagonal(&lam) * eig.eigenvectors.transpose();
        let mut a = DMatrix::zeros(self.n, self.n);
        a.view_mut((0, 0), (self.n - 1, self.n - 1)).copy_from(&block);
        let out = &self.q * a * &self.q;
        (&out + out.transpose()) * 0.5
    }
}

fn centering(n: usize) -> DMatrix<f64> {
    DMatrix::identity(n, n) - DMatrix::from_element(n, n, 1.0 / n as f64)
}

fn psd_clip(g: &DMatrix<f64>) -> DMatrix<f64> {
    let g = (g + g.transpose()) * 0.5;
    let eig = SymmetricEigen::new(g);
    let lam = eig.eigenvalues.map(|l| l.max(0.0));
    let out = &eig.eigenvectors * DMatrix::from_diagonal(&lam) * eig.eigenvectors.transpose();
    (&out + out.transpose()) * 0.5
}

/// Gram matrix `−½ J X J`, clipped to the PSD cone.
fn gram_of(x: &DMatrix<f64>) -> DMatrix<f64> {
    let j = centering(x.nrows());
    psd_clip(&(&j * x * &j * -0.5))
}

fn gram_sq(g: &DMatrix<f64>, u: usize, v: usize) -> f64 {
    g[(u, u)] + g[(v, v)] - 2.0 * g[(u, v)]
}

fn edm_of(g: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(g.nrows(), g.ncols(), |u, v| gram_sq(g, u, v))
}

fn resolve_map<S: AsRef<str>>(
    space: &FiniteMetricSpace,
    graph: &ComparisonGraph,
    map: &[S],
) -> Result<Vec<usize>> {
    if map.len() != graph.n() {
        return Err(Error::InvalidGraph(format!(
            "map covers {} of {} vertices",
            map.len(),
            graph.n()
        )));
    }
    space.indices_of(map)
}

/// Check a Gram matrix against the comparison constraints.
pub fn verify_gram<S: AsRef<str>>(
    gram: &GramSolution,
    space: &FiniteMetricSpace,
    graph: &ComparisonGraph,
    map: &[S],
    tol_feas: f64,
) -> Result<bool> {
    let idx = resolve_map(space, graph, map)?;
    let g = gram.to_matrix()?;
    if g.nrows() != graph.n() {
        return Err(Error::DimensionMismatch("Gram size differs from the vertex count".into()));
    }
    Ok(gram_ok(&g, &Target::new(space, graph, &idx), tol_feas))
}

fn gram_ok(g: &DMatrix<f64>, target: &Target, tol_feas: f64) -> bool {
    if g.iter().any(|x| !x.is_finite()) {
        return false;
    }
    let gn = g / target.scale;
    if (0..gn.nrows()).any(|i| (0..i).any(|j| gn[(i, j)] != gn[(j, i)])) {
        return false;
    }
    if min_eigenvalue(&gn) < -TOL_EIG {
        return false;
    }
    target.violation(|u, v| gram_sq(&gn, u, v)) <= tol_feas
}

/// Check a Farkas certificate: nonnegative weights on the right pair types,
/// a PSD signed Laplacian, and a strictly negative value on the target.
pub fn verify_certificate<S: AsRef<str>>(
    cert: &FarkasCertificate,
    space: &FiniteMetricSpace,
    graph: &ComparisonGraph,
    map: &[S],
) -> Result<CertificateCheck> {
    let idx = resolve_map(space, graph, map)?;
    Ok(check_certificate(cert, graph, &Target::new(space, graph, &idx)))
}

fn check_certificate(cert: &FarkasCertificate, graph: &ComparisonGraph, target: &Target) -> CertificateCheck {
    let mut reasons = Vec::new();
    let n = graph.n();
    for w in cert.y.iter().chain(&cert.z) {
        if !(w.weight >= 0.0) || !w.weight.is_finite() {
            reasons.push(format!("weight on ({}, {}) is not a nonnegative number", w.u, w.v));
        }
        if w.u >= n || w.v >= n || w.u == w.v {
            reasons.push(format!("pair ({}, {}) is not a vertex pair", w.u, w.v));
        }
    }
    if reasons.is_empty() {
        for w in &cert.y {
            if !graph.is_edge(w.u, w.v) {
                reasons.push(format!("y weight on non-edge ({}, {})", w.u, w.v));
            }
        }
        for w in &cert.z {
            if graph.is_edge(w.u, w.v) {
                reasons.push(format!("z weight on edge ({}, {})", w.u, w.v));
            }
        }
    }
    let total = cert.total();
    if !reasons.is_empty() || !(total > 0.0) {
        if total == 0.0 {
            reasons.push("all weights are zero".into());
        }
        return CertificateCheck {
            valid: false,
            normalized_value: 0.0,
            normalized_min_eigenvalue: 0.0,
            reasons,
        };
    }
    let form = cert.form(n).expect("pairs checked above");
    let eig = normalized_min_laplacian_eigenvalue(&form);
    let value = form.evaluate_with(|u, v| target.sq[(u, v)]) / total;
    if eig < -TOL_EIG {
        reasons.push(format!("signed Laplacian has eigenvalue {eig:.3e}"));
    }
    if !(value < -TOL_MARGIN) {
        reasons.push(format!("value {value:.3e} is not below -{TOL_MARGIN:e}"));
    }
    CertificateCheck {
        valid: reasons.is_empty(),
        normalized_value: value,
        normalized_min_eigenvalue: eig,
        reasons,
    }
}

/// The six-point form as a certificate on the octahedron graph: right-hand
/// coefficients on edges, left-hand ones on the three diagonals.
pub fn certificate_from_sixpoint(params: SixPointParams) -> Result<FarkasCertificate> {
    certificate_from_sixpoint_on(params, &[0, 1, 2, 3, 4, 5])
}

fn certificate_from_sixpoint_on(params: SixPointParams, sigma: &[usize; 6]) -> Result<FarkasCertificate> {
    let p = SixPointParams::new(params.a, params.b, params.c, params.s, params.t)?;
    let mut cert = FarkasCertificate { y: Vec::new(), z: Vec::new() };
    for (k, (&(i, j), w)) in SIX_TERMS.iter().zip(p.weights()).enumerate() {
        let pw = PairWeight {
            u: sigma[i].min(sigma[j]),
            v: sigma[i].max(sigma[j]),
            weight: w.abs(),
        };
        if k < 3 {
            cert.z.push(pw);
        } else {
            cert.y.push(pw);
        }
    }
    Ok(cert)
}

/// The ⊠ form as a certificate on the 4-cycle `0-1-2-3`.
pub fn certificate_from_boxtimes(p: BoxtimesParams) -> FarkasCertificate {
    let (s, t) = (p.s, p.t);
    let pw = |u, v, weight| PairWeight { u, v, weight };
    FarkasCertificate {
        y: vec![
            pw(0, 1, (1.0 - s) * (1.0 - t)),
            pw(1, 2, s * (1.0 - t)),
            pw(2, 3, s * t),
            pw(0, 3, (1.0 - s) * t),
        ],
        z: vec![pw(0, 2, s * (1.0 - s)), pw(1, 3, t * (1.0 - t))],
    }
}

/// Decide G-comparison for `graph` with vertex `v` sent to the point labeled `map[v]`.
pub fn feasibility<S: AsRef<str>>(
    space: &FiniteMetricSpace,
    graph: &ComparisonGraph,
    map: &[S],
    opts: &FeasibilityOptions,
) -> Result<Feasibility> {
    let idx = resolve_map(space, graph, map)?;
    Ok(solve(space, graph, &idx, opts))
}

fn solve(space: &FiniteMetricSpace, graph: &ComparisonGraph, idx: &[usize], opts: &FeasibilityOptions) -> Feasibility {
    let target = Target::new(space, graph, idx);
    let n = graph.n();

    for hint in &opts.hints {
        let check = check_certificate(hint, graph, &target);
        if check.valid {
            return Feasibility::CertifiedInfeasible {
                certificate: hint.clone(),
                check,
            };
        }
    }
    if n <= 1 {
        return Feasibility::Feasible {
            solution: GramSolution::from_matrix(&DMatrix::zeros(n, n)),
            iterations: 0,
        };
    }

    let cone = Cone::new(n);
    let mut x = edm_of(&gram_of(&target.sq));
    let mut p = DMatrix::zeros(n, n);
    let mut q = DMatrix::zeros(n, n);
    let mut residual = f64::INFINITY;
    let g = gram_of(&x) * target.scale;
    if gram_ok(&g, &target, opts.tol_feas) {
        return Feasibility::Feasible {
            solution: GramSolution::from_matrix(&g),
            iterations: 0,
        };
    }
    let mut iterations = 0;
    let mut plain = false;
    while iterations < opts.max_iter {
        iterations += 1;
        if iterations == opts.max_iter / 2 {
            p.fill(0.0);
            q.fill(0.0);
            plain = true;
        }
        let y = target.project_box_by(&(&x + &p), opts.tighten);
        let xn = cone.project(&(&y + &q));
        if !plain {
            p = &x + &p - &y;
            q = &y + &q - &xn;
        }
        let moved = (&xn - &x).amax();
        x = xn;

        if iterations % 10 == 0 || iterations == opts.max_iter || moved == 0.0 {
            let g = gram_of(&x);
            residual = target.violation(|u, v| gram_sq(&g, u, v));
            if residual <= 0.5 * opts.tol_feas {
                let g = g * target.scale;
                if gram_ok(&g, &target, opts.tol_feas) {
                    return Feasibility::Feasible {
                        solution: GramSolution::from_matrix(&g),
                        iterations,
                    };
                }
            }
            if moved == 0.0 {
                break;
            }
        }
    }

    for delta in [opts.tighten, 0.0] {
        let g = polish(&target, &gram_of(&x), delta) * target.scale;
        if gram_ok(&g, &target, opts.tol_feas) {
            return Feasibility::Feasible {
                solution: GramSolution::from_matrix(&g),
                iterations,
            };
        }
    }

    if let Some((certificate, check)) = gap_certificate(&target, graph, &cone, x, CERT_STEPS_PER_ITER * opts.max_iter) {
        return Feasibility::CertifiedInfeasible { certificate, check };
    }
    Feasibility::Unknown {
        iterations,
        residual,
    }
}

/// Levenberg–Marquardt on point coordinates, minimizing the squared hinge
/// violations of the constraints tightened by `delta`.
fn polish(target: &Target, gram: &DMatrix<f64>, delta: f64) -> DMatrix<f64> {
    let n = target.n;
    let eig = SymmetricEigen::new(gram.clone());
    let mut pts = DMatrix::from_fn(n, n, |i, k| eig.eigenvectors[(i, k)] * eig.eigenvalues[k].max(0.0).sqrt());
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|v| (0..v).map(move |u| (u, v))).collect();
    let residuals = |pts: &DMatrix<f64>| -> DVector<f64> {
        DVector::from_iterator(
            pairs.len(),
            pairs.iter().map(|&(u, v)| {
                let d = (pts.row(u) - pts.row(v)).norm_squared();
                let t = target.sq[(u, v)];
                if target.is_edge(u, v) {
                    (d - t + delta).max(0.0)
                } else {
                    (t + delta - d).max(0.0)
                }
            }),
        )
    };
    let mut r = residuals(&pts);
    let mut lambda = 1e-3;
    for _ in 0..500 {
        if r.amax() == 0.0 {
            break;
        }
        let mut jac = DMatrix::zeros(pairs.len(), n * n);
        for (row, &(u, v)) in pairs.iter().enumerate() {
            if r[row] == 0.0 {
                continue;
            }
            let sign = if target.is_edge(u, v) { 2.0 } else { -2.0 };
            for k in 0..n {
                let g = sign * (pts[(u, k)] - pts[(v, k)]);
                jac[(row, u * n + k)] = g;
                jac[(row, v * n + k)] = -g;
            }
        }
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let grad = &jt * &r;
        let mut improved = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for i in 0..n * n {
                a[(i, i)] += lambda * (1.0 + jtj[(i, i)]);
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&grad)) else {
                lambda *= 10.0;
                continue;
            };
            let trial = DMatrix::from_fn(n, n, |i, k| pts[(i, k)] - step[i * n + k]);
            let rt = residuals(&trial);
            if rt.norm_squared() < r.norm_squared() {
                pts = trial;
                r = rt;
                lambda = (lambda * 0.3).max(1e-12);
                improved = true;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    let g = &pts * pts.transpose();
    (&g + g.transpose()) * 0.5
}

/// Certificate read off the separating direction between `B` and `K`.
/// Plain alternating projections continue from `x`; at checkpoints spaced
/// by doubling the polar part of the box iterate is turned into weights
/// and checked, until `budget` steps are spent.
fn gap_certificate(
    target: &Target,
    graph: &ComparisonGraph,
    cone: &Cone,
    mut x: DMatrix<f64>,
    budget: usize,
) -> Option<(FarkasCertificate, CertificateCheck)> {
    let mut done = 0;
    let mut chunk = 200;
    while done < budget {
        let steps = chunk.min(budget - done);
        for _ in 0..steps {
            x = cone.project(&target.project_box(&x));
        }
        done += steps;
        chunk *= 2;
        if let Some(cert) = weights_from_gap(target, cone, &x) {
            let check = check_certificate(&cert, graph, target);
            if check.valid {
                return Some((cert, check));
            }
        }
    }
    None
}

fn weights_from_gap(target: &Target, cone: &Cone, x: &DMatrix<f64>) -> Option<FarkasCertificate> {
    let m = cone.polar_part(&target.project_box(x));
    let n = target.n;
    let mut y = Vec::new();
    let mut z = Vec::new();
    for v in 0..n {
        for u in 0..v {
            let w = -m[(u, v)];
            if target.is_edge(u, v) && w > 0.0 {
                y.push(PairWeight { u, v, weight: w });
            } else if !target.is_edge(u, v) && w < 0.0 {
                z.push(PairWeight { u, v, weight: -w });
            }
        }
    }
    if y.is_empty() || z.is_empty() {
        return None;
    }
    let shrink = |theta: f64| FarkasCertificate {
        y: y.clone(),
        z: z.iter().map(|w| PairWeight { weight: w.weight * theta, ..*w }).collect(),
    };
    let psd = |c: &FarkasCertificate| {
        normalized_min_laplacian_eigenvalue(&c.form(n).expect("valid pairs")) >= -0.01 * TOL_EIG
    };
    let full = shrink(1.0);
    if psd(&full) {
        return Some(full);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if psd(&shrink(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo > 0.0).then(|| shrink(lo))
}

/// The 48 automorphisms of the octahedron graph, as maps role → vertex.
fn octahedron_automorphisms() -> Vec<[usize; 6]> {
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut out = Vec::with_capacity(48);
    for perm in PERMS {
        for flips in 0..8usize {
            let mut sigma = [0; 6];
            for k in 0..3 {
                for e in 0..2 {
                    sigma[2 * k + e] = 2 * perm[k] + (e ^ ((flips >> k) & 1));
                }
            }
            out.push(sigma);
        }
    }
    out
}

/// Cycl_n(0): comparison along the cycle `map[0], …, map[n−1]`.
pub fn cycl_check<S: AsRef<str>>(
    space: &FiniteMetricSpace,
    n: usize,
    map: &[S],
    max_iter: usize,
) -> Result<Feasibility> {
    let graph = graph_cycle(n)?;
    let idx = resolve_map(space, &graph, map)?;
    let mut opts = FeasibilityOptions {
        max_iter,
        ..FeasibilityOptions::default()
    };
    if n == 4 {
        let (s, t, _) = QuadSquares::of(space, [idx[0], idx[1], idx[2], idx[3]]).minimize();
        opts.hints.push(certificate_from_boxtimes(BoxtimesParams { s, t }));
    }
    Ok(solve(space, &graph, &idx, &opts))
}

/// O₃-comparison with `map` in role order `x0, x1, y0, y1, z0, z1`.
pub fn o3_check<S: AsRef<str>>(space: &FiniteMetricSpace, map: &[S], max_iter: usize) -> Result<Feasibility> {
    let graph = graph_octahedron();
    let idx = resolve_map(space, &graph, map)?;
    let autos = octahedron_automorphisms();
    let labelings: Vec<[usize; 6]> = autos
        .iter()
        .map(|sigma| std::array::from_fn(|r| idx[sigma[r]]))
        .collect();
    let witness = sixpoint_search_with(space, &labelings, SearchOptions::default());
    let mut opts = FeasibilityOptions {
        max_iter,
        ..FeasibilityOptions::default()
    };
    if let WitnessParams::Sixpoint(params) = witness.params {
        let labels = witness.labels();
        let found = space.indices_of(&labels)?;
        if let Some(k) = labelings.iter().position(|l| l[..] == found[..]) {
            opts.hints.push(certificate_from_sixpoint_on(params, &autos[k])?);
        }
    }
    Ok(solve(space, &graph, &idx, &opts))
}
