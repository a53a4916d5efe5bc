//! Andoni–Naor–Neiman certificates: validation, evaluation and sampling.
//!
//! A certificate with `m` blocks on `n` points asserts
//! `Σ_k Σ_{a+b>0} c_k a_ij b_ij / (a_ij + b_ij) · d_ij² ≤ Σ_k Σ_ij c_k p_i q_j d_ij²`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::boxtimes::BoxtimesParams;
use crate::error::{Error, Result};
use crate::metric::{FiniteMetricSpace, ValidationReport, Violation, ViolationKind};
use crate::TOL_CERT;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnCertificate {
    pub m: usize,
    pub n: usize,
    pub c: Vec<f64>,
    pub p: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<Vec<f64>>>,
}

fn violation(kind: ViolationKind, indices: Vec<usize>, slack: f64) -> Violation {
    Violation {
        kind,
        indices,
        slack,
    }
}

/// Check shapes, signs, stochasticity of `p`, `q` and the row/column sum
/// condition for every block. Zero entries of `p`, `q` are accepted.
pub fn ann_validate(cert: &AnnCertificate) -> ValidationReport {
    let (m, n) = (cert.m, cert.n);
    let mut out = Vec::new();
    let square = |mats: &Vec<Vec<Vec<f64>>>| {
        mats.len() == m && mats.iter().all(|a| a.len() == n && a.iter().all(|r| r.len() == n))
    };
    if m == 0
        || n == 0
        || cert.c.len() != m
        || cert.p.len() != m
        || cert.q.len() != m
        || cert.p.iter().chain(&cert.q).any(|v| v.len() != n)
        || !square(&cert.a)
        || !square(&cert.b)
    {
        out.push(violation(ViolationKind::Shape, vec![m, n], f64::NAN));
        return ValidationReport::from_violations(out);
    }

    for k in 0..m {
        if !(cert.c[k] > 0.0) || !cert.c[k].is_finite() {
            out.push(violation(ViolationKind::Weight, vec![k], cert.c[k]));
        }
        for (name, v) in [(0usize, &cert.p[k]), (1, &cert.q[k])] {
            for (i, &x) in v.iter().enumerate() {
                if !(x >= 0.0) || !x.is_finite() {
                    out.push(violation(ViolationKind::Weight, vec![k, name, i], x));
                }
            }
            let sum: f64 = v.iter().sum();
            if (sum - 1.0).abs() > TOL_CERT {
                out.push(violation(ViolationKind::Stochasticity, vec![k, name], -(sum - 1.0).abs()));
            }
        }
        for (name, mat) in [(2usize, &cert.a[k]), (3, &cert.b[k])] {
            for i in 0..n {
                for j in 0..n {
                    let x = mat[i][j];
                    if !(x >= 0.0) || !x.is_finite() {
                        out.push(violation(ViolationKind::Weight, vec![k, name, i, j], x));
                    }
                }
            }
        }
        let rows: Vec<f64> = cert.a[k].iter().map(|r| r.iter().sum()).collect();
        let cols: Vec<f64> = (0..n).map(|j| (0..n).map(|s| cert.b[k][s][j]).sum()).collect();
        for i in 0..n {
            for j in 0..n {
                let gap = rows[i] + cols[j] - cert.p[k][i] - cert.q[k][j];
                if gap.abs() > TOL_CERT {
                    out.push(violation(ViolationKind::SumCondition, vec![k, i, j], -gap.abs()));
                }
            }
        }
    }
    ValidationReport::from_violations(out)
}

/// RHS − LHS with certificate index `i` placed at `space` index `assignment[i]`.
pub fn ann_margin_indices(
    space: &FiniteMetricSpace,
    cert: &AnnCertificate,
    assignment: &[usize],
) -> Result<f64> {
    let report = ann_validate(cert);
    if !report.ok {
        return Err(Error::InvalidCertificate(report));
    }
    if assignment.len() != cert.n {
        return Err(Error::DimensionMismatch(format!(
            "certificate on {} points, {} assigned",
            cert.n,
            assignment.len()
        )));
    }
    if let Some(&bad) = assignment.iter().find(|&&i| i >= space.len()) {
        return Err(Error::UnknownLabel(format!("#{bad}")));
    }
    Ok(ann_margin_unchecked(cert, |i, j| space.dist2(assignment[i], assignment[j])))
}

pub fn ann_margin<S: AsRef<str>>(
    space: &FiniteMetricSpace,
    cert: &AnnCertificate,
    assignment: &[S],
) -> Result<f64> {
    let idx = space.indices_of(assignment)?;
    ann_margin_indices(space, cert, &idx)
}

pub(crate) fn ann_margin_unchecked(cert: &AnnCertificate, sq: impl Fn(usize, usize) -> f64) -> f64 {
    let n = cert.n;
    let mut total = 0.0;
    for k in 0..cert.m {
        let ck = cert.c[k];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let d2 = sq(i, j);
                let a = cert.a[k][i][j];
                let b = cert.b[k][i][j];
                let lhs = if a + b > 0.0 { a * b / (a + b) } else { 0.0 };
                total += ck * (cert.p[k][i] * cert.q[k][j] - lhs) * d2;
            }
        }
    }
    total
}

fn simplex_point(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let sum: f64 = v.iter().sum();
    if sum > 0.0 {
        v.iter_mut().for_each(|x| *x /= sum);
    } else {
        v = vec![1.0 / n as f64; n];
    }
    v
}

/// A random certificate that satisfies the sum condition by construction.
///
/// `p`, `q` are symmetric-Dirichlet(1) draws and `κ` is uniform on
/// `[−min p, min q]`; row `i` of `A` sums to `p_i + κ` and column `j` of `B`
/// sums to `q_j − κ`.
pub fn ann_sample(n: usize, m: usize, seed: u64) -> AnnCertificate {
    assert!(n >= 1 && m >= 1, "ann_sample needs n, m >= 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cert = AnnCertificate {
        m,
        n,
        c: Vec::with_capacity(m),
        p: Vec::with_capacity(m),
        q: Vec::with_capacity(m),
        a: Vec::with_capacity(m),
        b: Vec::with_capacity(m),
    };
    for _ in 0..m {
        let c = 1.0 - rng.random::<f64>();
        let p = simplex_point(&mut rng, n);
        let q = simplex_point(&mut rng, n);
        let lo = -p.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = q.iter().copied().fold(f64::INFINITY, f64::min);
        let kappa = lo + (hi - lo) * rng.random::<f64>();

        let a: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let row_sum = (p[i] + kappa).max(0.0);
                simplex_point(&mut rng, n).into_iter().map(|x| x * row_sum).collect()
            })
            .collect();
        let mut b = vec![vec![0.0; n]; n];
        for j in 0..n {
            let col_sum = (q[j] - kappa).max(0.0);
            for (s, x) in simplex_point(&mut rng, n).into_iter().enumerate() {
                b[s][j] = x * col_sum;
            }
        }
        cert.c.push(c);
        cert.p.push(p);
        cert.q.push(q);
        cert.a.push(a);
        cert.b.push(b);
    }
    cert
}

/// The ⊠-inequality at `(s, t)` on points `(x, y, z, w)` written as a
/// one-block certificate on four points.
pub fn ann_from_boxtimes(params: BoxtimesParams) -> AnnCertificate {
    let (s, t) = (params.s, params.t);
    let w = vec![0.5 * (1.0 - s), 0.5 * (1.0 - t), 0.5 * s, 0.5 * t];
    let mut a = vec![vec![0.0; 4]; 4];
    let mut b = vec![vec![0.0; 4]; 4];
    // x=0, y=1, z=2, w=3; A takes whole rows, B whole columns
    a[0][2] = w[0];
    a[2][0] = w[2];
    a[1][3] = w[1];
    a[3][1] = w[3];
    b[0][2] = w[2];
    b[2][0] = w[0];
    b[1][3] = w[3];
    b[3][1] = w[1];
    AnnCertificate {
        m: 1,
        n: 4,
        c: vec![2.0],
        p: vec![w.clone()],
        q: vec![w],
        a: vec![a],
        b: vec![b],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boxtimes::QuadSquares;

    fn tiny() -> AnnCertificate {
        AnnCertificate {
            m: 1,
            n: 2,
            c: vec![1.0],
            p: vec![vec![0.5, 0.5]],
            q: vec![vec![0.5, 0.5]],
            a: vec![vec![vec![0.25; 2]; 2]],
            b: vec![vec![vec![0.25; 2]; 2]],
        }
    }

    #[test]
    fn uniform_two_point_certificate_is_valid() {
        assert!(ann_validate(&tiny()).ok);
    }

    #[test]
    fn negative_entry_is_invalid() {
        let mut c = tiny();
        c.a[0][0][1] = -0.25;
        let r = ann_validate(&c);
        assert!(!r.ok);
        assert!(r.violations.iter().any(|v| v.kind == ViolationKind::Weight));
    }

    #[test]
    fn broken_sum_and_shape() {
        let mut c = tiny();
        c.b[0][1][1] = 0.5;
        assert!(ann_validate(&c)
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::SumCondition));
        let mut c = tiny();
        c.p[0] = vec![0.5];
        assert_eq!(ann_validate(&c).violations[0].kind, ViolationKind::Shape);
        let mut c = tiny();
        c.p[0] = vec![0.7, 0.7];
        assert!(ann_validate(&c)
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::Stochasticity));
    }

    #[test]
    fn invalid_certificate_refused_by_margin() {
        let mut c = tiny();
        c.c[0] = 0.0;
        let s = FiniteMetricSpace::from_matrix(vec!["p", "q"], vec![vec![0.0, 1.0], vec![1.0, 0.0]])
            .unwrap();
        assert!(matches!(ann_margin(&s, &c, &["p", "q"]), Err(Error::InvalidCertificate(_))));
    }

    #[test]
    fn identical_points_give_zero() {
        let s = FiniteMetricSpace::from_matrix(vec!["p", "q"], vec![vec![0.0, 1.0], vec![1.0, 0.0]])
            .unwrap();
        let cert = ann_sample(5, 2, 3);
        assert_eq!(ann_margin(&s, &cert, &["q"; 5]).unwrap(), 0.0);
    }

    #[test]
    fn samples_are_valid_and_deterministic() {
        for seed in 0..50 {
            let n = 1 + (seed as usize % 7);
            let m = 1 + (seed as usize % 3);
            let c = ann_sample(n, m, seed);
            let r = ann_validate(&c);
            assert!(r.ok, "seed {seed}: {}", r.summary());
            assert_eq!(c, ann_sample(n, m, seed));
        }
        assert_ne!(ann_sample(4, 1, 1), ann_sample(4, 1, 2));
    }

    #[test]
    fn boxtimes_encoding() {
        let s = FiniteMetricSpace::from_matrix(
            vec!["x", "y", "z", "w"],
            vec![
                vec![0.0, 1.0, 1.7, 1.1],
                vec![1.0, 0.0, 0.9, 1.6],
                vec![1.7, 0.9, 0.0, 1.2],
                vec![1.1, 1.6, 1.2, 0.0],
            ],
        )
        .unwrap();
        let q = QuadSquares::of(&s, [0, 1, 2, 3]);
        for (ps, pt) in [(0.5, 0.5), (0.2, 0.9), (0.73, 0.11)] {
            let cert = ann_from_boxtimes(BoxtimesParams::new(ps, pt).unwrap());
            assert!(ann_validate(&cert).ok);
            let m = ann_margin(&s, &cert, &["x", "y", "z", "w"]).unwrap();
            assert!((m - q.value(ps, pt)).abs() < 1e-14, "{m} vs {}", q.value(ps, pt));
        }
    }
}
