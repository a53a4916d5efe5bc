//! The five-parameter six-point inequality family.
//!
//! Roles are `x0, x1, y0, y1, z0, z1` (indices 0..6). The three pairs
//! `{x0,x1}`, `{y0,y1}`, `{z0,z1}` carry negative weight; the nine other
//! weighted pairs are all edges of the octahedron graph on the six roles.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::form::{evaluate_form, QuadraticForm};
use crate::metric::FiniteMetricSpace;
use crate::optim::nelder_mead_box;
use crate::witness::{ViolationWitness, WitnessParams};

pub const SIX_ROLES: [&str; 6] = ["x0", "x1", "y0", "y1", "z0", "z1"];

pub const X0: usize = 0;
pub const X1: usize = 1;
pub const Y0: usize = 2;
pub const Y1: usize = 3;
pub const Z0: usize = 4;
pub const Z1: usize = 5;

/// Role pairs of the twelve terms; the first three are the negative ones.
pub const SIX_TERMS: [(usize, usize); 12] = [
    (X0, X1),
    (Y0, Y1),
    (Z0, Z1),
    (X0, Z0),
    (X1, Z0),
    (Y1, Z0),
    (X0, Z1),
    (X1, Z1),
    (Y1, Z1),
    (X0, Y0),
    (X1, Y0),
    (X0, Y1),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSixPoint")]
pub struct SixPointParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub s: f64,
    pub t: f64,
}

#[derive(Deserialize)]
struct RawSixPoint {
    a: f64,
    b: f64,
    c: f64,
    s: f64,
    t: f64,
}

impl TryFrom<RawSixPoint> for SixPointParams {
    type Error = Error;
    fn try_from(r: RawSixPoint) -> Result<Self> {
        SixPointParams::new(r.a, r.b, r.c, r.s, r.t)
    }
}

impl SixPointParams {
    pub fn new(a: f64, b: f64, c: f64, s: f64, t: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b), ("c", c), ("s", s), ("t", t)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParams(format!("{name} = {v} outside [0,1]")));
            }
        }
        if a > s {
            return Err(Error::InvalidParams(format!("a = {a} exceeds s = {s}")));
        }
        Ok(SixPointParams { a, b, c, s, t })
    }

    /// From the box coordinates `(u, b, c, s, t)` with `a = s·u`.
    pub fn from_unit(x: &[f64]) -> Self {
        let (u, b, c, s, t) = (x[0], x[1], x[2], x[3], x[4]);
        SixPointParams {
            a: (s * u).min(s),
            b,
            c,
            s,
            t,
        }
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.a, self.b, self.c, self.s, self.t]
    }

    /// Signed weights of [`SIX_TERMS`] (negative on the three left-hand pairs).
    pub fn weights(&self) -> [f64; 12] {
        let SixPointParams { a, b, c, s, t } = *self;
        let ab = a * b;
        [
            -s * t * a * ((1.0 - t) * (1.0 - a) + (1.0 - s) * t * b),
            -s * (1.0 - t) * t * (1.0 - b) * b,
            -ab * (1.0 - c) * c,
            (1.0 - s) * t * ab * (1.0 - c),
            s * t * ab * (1.0 - c),
            (1.0 - t) * ab * (1.0 - c),
            (1.0 - s) * t * ab * c,
            s * t * ab * c,
            (1.0 - t) * ab * c,
            s * (1.0 - t) * t * (1.0 - a) * (1.0 - b),
            s * (1.0 - t) * t * a * (1.0 - b),
            (1.0 - t) * t * (s - a) * b,
        ]
    }
}

/// The six-point form: right-hand terms positive, left-hand terms negative.
pub fn sixpoint_form(p: SixPointParams) -> Result<QuadraticForm> {
    let p = SixPointParams::new(p.a, p.b, p.c, p.s, p.t)?;
    let mut f = QuadraticForm::zero(6);
    for (&(i, j), w) in SIX_TERMS.iter().zip(p.weights()) {
        f.add_term(i, j, w);
    }
    Ok(f)
}

pub fn sixpoint_margin<S: AsRef<str>>(
    space: &FiniteMetricSpace,
    labeling: &[S],
    params: SixPointParams,
) -> Result<f64> {
    if labeling.len() != 6 {
        return Err(Error::DimensionMismatch(format!(
            "six roles, {} labels given",
            labeling.len()
        )));
    }
    evaluate_form(&sixpoint_form(params)?, space, labeling)
}

/// Squared distances of the twelve term pairs under a labeling.
#[inline]
fn term_squares(space: &FiniteMetricSpace, lab: &[usize; 6]) -> [f64; 12] {
    let mut sq = [0.0; 12];
    for (k, &(i, j)) in SIX_TERMS.iter().enumerate() {
        sq[k] = space.dist2(lab[i], lab[j]);
    }
    sq
}

/// `(margin, lhs)` where `lhs` is the weighted left-hand side.
#[inline]
fn margin_and_lhs(w: &[f64; 12], sq: &[f64; 12]) -> (f64, f64) {
    let mut m = 0.0;
    for k in 0..12 {
        m += w[k] * sq[k];
    }
    let lhs = -(w[0] * sq[0] + w[1] * sq[1] + w[2] * sq[2]);
    (m, lhs)
}

/// Scale-free objective: `margin / lhs`, negative exactly on violations.
#[inline]
fn ratio(margin: f64, lhs: f64) -> f64 {
    if lhs > 1e-300 {
        margin / lhs
    } else {
        f64::INFINITY
    }
}

/// Classical multidimensional scaling: coordinates from the positive part
/// of `−½ J D² J`, one row per point.
fn classical_embedding(space: &FiniteMetricSpace) -> DMatrix<f64> {
    let n = space.len();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let j = DMatrix::identity(n, n) - DMatrix::from_element(n, n, 1.0 / n as f64);
    let d2 = DMatrix::from_fn(n, n, |i, k| space.dist2(i, k));
    let g = &j * d2 * &j * -0.5;
    let eig = SymmetricEigen::new((&g + g.transpose()) * 0.5);
    let scale = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let mut coords = eig.eigenvectors;
    for (mut col, s) in coords.column_iter_mut().zip(scale.iter()) {
        col *= *s;
    }
    coords
}

/// Parameters at which the equality identities of the embedded labeling
/// hold as nearly as possible: `x_a` closest to `y_b`, and the point
/// `(1−t)·y1 + t·x_s` closest to `z_c`. Returned in box coordinates.
fn geometric_seed(coords: &DMatrix<f64>, lab: &[usize; 6]) -> [f64; 5] {
    let pt = |r: usize| coords.row(lab[r]).transpose();
    let (x0, x1, y0, y1, z0, z1) = (pt(X0), pt(X1), pt(Y0), pt(Y1), pt(Z0), pt(Z1));
    let clamp = |v: f64| if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.5 };
    let lstsq = |cols: &[DVector<f64>], rhs: &DVector<f64>| -> Vec<f64> {
        let k = rhs.len();
        let a = DMatrix::from_fn(k, cols.len(), |i, j| cols[j][i]);
        let ata = a.transpose() * &a;
        let atb = a.transpose() * rhs;
        match ata.clone().cholesky() {
            Some(ch) => ch.solve(&atb).iter().copied().collect(),
            None => vec![0.5; cols.len()],
        }
    };
    // (1−a)x0 + a·x1 = (1−b)y0 + b·y1
    let ab = lstsq(&[&x1 - &x0, &y0 - &y1], &(&y0 - &x0));
    // (1−u−v)·y1 + u·x0 + v·x1 = (1−c)z0 + c·z1 with u = t(1−s), v = ts
    let uvc = lstsq(&[&x0 - &y1, &x1 - &y1, &z0 - &z1], &(&z0 - &y1));
    let (u, v) = (uvc[0].max(0.0), uvc[1].max(0.0));
    let t = clamp(u + v);
    let s = if u + v > 0.0 { clamp(v / (u + v)) } else { 0.5 };
    let a = clamp(ab[0]);
    let unit_a = if s > 0.0 { clamp(a / s) } else { 0.0 };
    [unit_a, clamp(ab[1]), clamp(uvc[2]), s, t]
}

/// Role labelings: injective when the space has at least six points,
/// otherwise all maps (repeated labels).
pub fn all_labelings(n: usize) -> Vec<[usize; 6]> {
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    let injective = n >= 6;
    let mut cur = [0usize; 6];
    fn rec(
        depth: usize,
        n: usize,
        injective: bool,
        cur: &mut [usize; 6],
        out: &mut Vec<[usize; 6]>,
    ) {
        if depth == 6 {
            out.push(*cur);
            return;
        }
        for v in 0..n {
            if injective && cur[..depth].contains(&v) {
                continue;
            }
            cur[depth] = v;
            rec(depth + 1, n, injective, cur, out);
        }
    }
    rec(0, n, injective, &mut cur, &mut out);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    /// Grid points per axis of `(u, b, c, s, t)`.
    pub grid_points: usize,
    /// Number of best grid cells polished by Nelder–Mead.
    pub starts: usize,
    pub iterations: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            grid_points: 9,
            starts: 5,
            iterations: 200,
        }
    }
}

fn witness_for(
    space: &FiniteMetricSpace,
    lab: &[usize; 6],
    params: SixPointParams,
    margin: f64,
) -> ViolationWitness {
    let labels: Vec<&str> = lab.iter().map(|&i| space.labels()[i].as_str()).collect();
    ViolationWitness::new(&SIX_ROLES, &labels, WitnessParams::Sixpoint(params), margin)
}

/// Heuristic minimization of the six-point margin over labelings and
/// parameters: a coarse grid, then Nelder–Mead from the best cells.
pub fn sixpoint_search(space: &FiniteMetricSpace) -> ViolationWitness {
    sixpoint_search_with(space, &all_labelings(space.len()), SearchOptions::default())
}

pub fn sixpoint_search_with(
    space: &FiniteMetricSpace,
    labelings: &[[usize; 6]],
    opts: SearchOptions,
) -> ViolationWitness {
    let g = opts.grid_points.max(2);
    let axis: Vec<f64> = (0..g).map(|i| i as f64 / (g - 1) as f64).collect();
    let mut grid: Vec<([f64; 5], [f64; 12])> = Vec::with_capacity(g.pow(5));
    for &u in &axis {
        for &b in &axis {
            for &c in &axis {
                for &s in &axis {
                    for &t in &axis {
                        let x = [u, b, c, s, t];
                        grid.push((x, SixPointParams::from_unit(&x).weights()));
                    }
                }
            }
        }
    }

    struct Local {
        best_raw: (f64, usize),
        top: Vec<(f64, usize)>,
    }
    let starts = opts.starts;
    let per_labeling: Vec<Local> = labelings
        .par_iter()
        .map(|lab| {
            let sq = term_squares(space, lab);
            let mut best_raw = (f64::INFINITY, 0);
            let mut top: Vec<(f64, usize)> = Vec::with_capacity(starts + 1);
            for (gi, (_, w)) in grid.iter().enumerate() {
                let (m, lhs) = margin_and_lhs(w, &sq);
                if m < best_raw.0 {
                    best_raw = (m, gi);
                }
                let r = ratio(m, lhs);
                if starts > 0 && (top.len() < starts || r < top[top.len() - 1].0) {
                    let pos = top.partition_point(|e| e.0 <= r);
                    top.insert(pos, (r, gi));
                    top.truncate(starts);
                }
            }
            Local { best_raw, top }
        })
        .collect();

    let mut best: Option<(f64, usize, [f64; 5])> = None;
    let mut consider = |m: f64, li: usize, x: [f64; 5]| {
        if best.map_or(true, |b| m < b.0) {
            best = Some((m, li, x));
        }
    };
    let mut cells: Vec<(f64, usize, usize)> = Vec::new();
    for (li, loc) in per_labeling.iter().enumerate() {
        consider(loc.best_raw.0, li, grid[loc.best_raw.1].0);
        cells.extend(loc.top.iter().map(|&(r, gi)| (r, li, gi)));
    }
    cells.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    cells.truncate(starts);

    let step = 0.5 / (g - 1) as f64;
    let embedding = classical_embedding(space);
    let mut starts_at: Vec<(usize, [f64; 5])> =
        cells.iter().map(|&(_, li, gi)| (li, grid[gi].0)).collect();
    starts_at.extend(
        labelings
            .iter()
            .enumerate()
            .map(|(li, lab)| (li, geometric_seed(&embedding, lab))),
    );
    let polished: Vec<(usize, [f64; 5])> = starts_at
        .par_iter()
        .map(|&(li, x0)| {
            let sq = term_squares(space, &labelings[li]);
            let (x, _) = nelder_mead_box(
                |x| {
                    let (m, lhs) = margin_and_lhs(&SixPointParams::from_unit(x).weights(), &sq);
                    ratio(m, lhs)
                },
                &x0,
                step,
                opts.iterations,
            );
            (li, [x[0], x[1], x[2], x[3], x[4]])
        })
        .collect();
    for (li, x) in polished {
        let sq = term_squares(space, &labelings[li]);
        let (m, _) = margin_and_lhs(&SixPointParams::from_unit(&x).weights(), &sq);
        consider(m, li, x);
    }

    match best {
        Some((_, li, x)) => {
            let params = SixPointParams::from_unit(&x);
            let lab = labelings[li];
            let sq = term_squares(space, &lab);
            let (m, _) = margin_and_lhs(&params.weights(), &sq);
            witness_for(space, &lab, params, m)
        }
        None => {
            let params = SixPointParams::from_unit(&[0.0; 5]);
            ViolationWitness::new(&SIX_ROLES, &[], WitnessParams::Sixpoint(params), 0.0)
        }
    }
}

/// Smallest margin over the given labelings at fixed parameters.
pub fn sixpoint_min_over_labelings(
    space: &FiniteMetricSpace,
    labelings: &[[usize; 6]],
    params: SixPointParams,
) -> Result<ViolationWitness> {
    let params = SixPointParams::new(params.a, params.b, params.c, params.s, params.t)?;
    let w = params.weights();
    let best = labelings
        .iter()
        .map(|lab| (margin_and_lhs(&w, &term_squares(space, lab)).0, lab))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or_else(|| Error::InvalidParams("no labelings".into()))?;
    Ok(witness_for(space, best.1, params, best.0))
}
