//! The ⊠-inequalities on four points and the exact minimization of their
//! margin over `(s, t) ∈ [0,1]²`.
//!
//! For fixed points the margin is a polynomial of degree two in `(s, t)`
//! that is convex in each variable separately, so its minimum over the box is
//! attained at a corner, at a one-dimensional critical point of an edge, or at
//! the interior stationary point. [`boxtimes_min`] evaluates all of them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::form::QuadraticForm;
use crate::metric::FiniteMetricSpace;
use crate::witness::{ViolationWitness, WitnessParams};
use crate::TOL_MARGIN;

pub const BOXTIMES_ROLES: [&str; 4] = ["x", "y", "z", "w"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBoxtimes")]
pub struct BoxtimesParams {
    pub s: f64,
    pub t: f64,
}

#[derive(Deserialize)]
struct RawBoxtimes {
    s: f64,
    t: f64,
}

impl TryFrom<RawBoxtimes> for BoxtimesParams {
    type Error = Error;
    fn try_from(r: RawBoxtimes) -> Result<Self> {
        BoxtimesParams::new(r.s, r.t)
    }
}

impl BoxtimesParams {
    pub fn new(s: f64, t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&s) || !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidParams(format!("(s, t) = ({s}, {t}) outside [0,1]²")));
        }
        Ok(BoxtimesParams { s, t })
    }
}

/// Squared distances of an ordered quadruple `(x, y, z, w)`:
/// sides `xy, yz, zw, wx` then diagonals `xz, yw`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSquares {
    pub xy: f64,
    pub yz: f64,
    pub zw: f64,
    pub wx: f64,
    pub xz: f64,
    pub yw: f64,
}

impl QuadSquares {
    pub fn of(space: &FiniteMetricSpace, [x, y, z, w]: [usize; 4]) -> Self {
        QuadSquares {
            xy: space.dist2(x, y),
            yz: space.dist2(y, z),
            zw: space.dist2(z, w),
            wx: space.dist2(w, x),
            xz: space.dist2(x, z),
            yw: space.dist2(y, w),
        }
    }

    /// Margin of the ⊠-inequality at `(s, t)`.
    pub fn value(&self, s: f64, t: f64) -> f64 {
        (1.0 - s) * (1.0 - t) * self.xy + s * (1.0 - t) * self.yz + s * t * self.zw
            + (1.0 - s) * t * self.wx
            - s * (1.0 - s) * self.xz
            - t * (1.0 - t) * self.yw
    }

    /// Exact minimum over the unit square: `(s, t, margin)`.
    pub fn minimize(&self) -> (f64, f64, f64) {
        // f = A + s·gs + t·gt + st·k + s²·E + t²·F
        let (a, b, c, d, e, f) = (self.xy, self.yz, self.zw, self.wx, self.xz, self.yw);
        let gs = b - a - e;
        let gt = d - a - f;
        let k = a - b + c - d;

        let mut cands: Vec<(f64, f64)> = vec![(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)];
        let inside = |v: f64| v > 0.0 && v < 1.0;
        if e > 0.0 {
            for t in [0.0, 1.0] {
                let s = -(gs + t * k) / (2.0 * e);
                if inside(s) {
                    cands.push((s, t));
                }
            }
        }
        if f > 0.0 {
            for s in [0.0, 1.0] {
                let t = -(gt + s * k) / (2.0 * f);
                if inside(t) {
                    cands.push((s, t));
                }
            }
        }
        let det = 4.0 * e * f - k * k;
        let scale = (4.0 * e * f).abs().max(k * k);
        if scale > 0.0 && det.abs() > 1e-14 * scale {
            let s = (-gs * 2.0 * f + gt * k) / det;
            let t = (-gt * 2.0 * e + gs * k) / det;
            if inside(s) && inside(t) {
                cands.push((s, t));
            }
        }
        cands
            .into_iter()
            .map(|(s, t)| (s, t, self.value(s, t)))
            .fold((0.0, 0.0, f64::INFINITY), |best, c| if c.2 < best.2 { c } else { best })
    }
}

/// The ⊠ form on roles `(x, y, z, w)` with margin orientation.
pub fn boxtimes_form(p: BoxtimesParams) -> QuadraticForm {
    let (s, t) = (p.s, p.t);
    let mut f = QuadraticForm::zero(4);
    f.add_term(0, 1, (1.0 - s) * (1.0 - t));
    f.add_term(1, 2, s * (1.0 - t));
    f.add_term(2, 3, s * t);
    f.add_term(3, 0, (1.0 - s) * t);
    f.add_term(0, 2, -s * (1.0 - s));
    f.add_term(1, 3, -t * (1.0 - t));
    f
}

/// Global minimum of the ⊠ margin over the box for one ordered quadruple.
pub fn boxtimes_min<S: AsRef<str>>(
    space: &FiniteMetricSpace,
    quad: &[S; 4],
) -> Result<(BoxtimesParams, f64)> {
    let idx = space.indices_of(quad)?;
    let (s, t, m) = QuadSquares::of(space, [idx[0], idx[1], idx[2], idx[3]]).minimize();
    Ok((BoxtimesParams { s, t }, m))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum CheckOutcome {
    /// No violation beyond tolerance; `worst` is the smallest margin seen.
    Satisfied { worst: ViolationWitness },
    Violated(ViolationWitness),
}

impl CheckOutcome {
    pub fn worst(&self) -> &ViolationWitness {
        match self {
            CheckOutcome::Satisfied { worst } => worst,
            CheckOutcome::Violated(w) => w,
        }
    }

    pub fn is_satisfied(&self) -> bool {
        matches!(self, CheckOutcome::Satisfied { .. })
    }
}

/// Margin divided by the squared diameter.
pub fn normalized_margin(space: &FiniteMetricSpace, margin: f64) -> f64 {
    let d = space.diameter();
    if d > 0.0 {
        margin / (d * d)
    } else {
        margin
    }
}

/// Minimize over all `n⁴` ordered quadruples (repeats included).
pub fn check_boxtimes(space: &FiniteMetricSpace) -> CheckOutcome {
    let n = space.len();
    let best = (0..n)
        .into_par_iter()
        .map(|x| {
            let mut best = ([x, x, x, x], 0.0, 0.0, f64::INFINITY);
            for y in 0..n {
                for z in 0..n {
                    for w in 0..n {
                        let q = [x, y, z, w];
                        let (s, t, m) = QuadSquares::of(space, q).minimize();
                        if m < best.3 {
                            best = (q, s, t, m);
                        }
                    }
                }
            }
            best
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(None, |acc: Option<([usize; 4], f64, f64, f64)>, c| match acc {
            Some(a) if a.3 <= c.3 => Some(a),
            _ => Some(c),
        });

    let Some((q, s, t, m)) = best else {
        let w = ViolationWitness::new(
            &BOXTIMES_ROLES,
            &[],
            WitnessParams::Boxtimes(BoxtimesParams { s: 0.0, t: 0.0 }),
            0.0,
        );
        return CheckOutcome::Satisfied { worst: w };
    };
    let labels: Vec<&str> = q.iter().map(|&i| space.labels()[i].as_str()).collect();
    let witness = ViolationWitness::new(
        &BOXTIMES_ROLES,
        &labels,
        WitnessParams::Boxtimes(BoxtimesParams { s, t }),
        m,
    );
    if normalized_margin(space, m) >= -TOL_MARGIN {
        CheckOutcome::Satisfied { worst: witness }
    } else {
        CheckOutcome::Violated(witness)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddabilityVerdict {
    pub embeddable: bool,
    pub worst: ViolationWitness,
}

/// Embeddability into some CAT(0) space for spaces of at most five points,
/// decided by the ⊠-inequalities.
pub fn embed5_decide(space: &FiniteMetricSpace) -> Result<EmbeddabilityVerdict> {
    if space.len() > 5 {
        return Err(Error::TooManyPoints {
            got: space.len(),
            max: 5,
        });
    }
    let outcome = check_boxtimes(space);
    Ok(EmbeddabilityVerdict {
        embeddable: outcome.is_satisfied(),
        worst: outcome.worst().clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::form::evaluate_form;

    fn square() -> FiniteMetricSpace {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]];
        FiniteMetricSpace::from_euclidean(&pts, vec!["a", "b", "c", "d"]).unwrap()
    }

    #[test]
    fn form_corners() {
        let f = boxtimes_form(BoxtimesParams::new(0.0, 0.0).unwrap());
        assert_eq!(f.pair_weight(0, 1), 1.0);
        for (i, j) in [(1, 2), (2, 3), (3, 0), (0, 2), (1, 3)] {
            assert_eq!(f.pair_weight(i, j), 0.0);
        }
        let f = boxtimes_form(BoxtimesParams::new(1.0, 0.0).unwrap());
        assert_eq!(f.pair_weight(1, 2), 1.0);
        assert_eq!(f.pair_weight(0, 1), 0.0);
        assert_eq!(f.pair_weight(0, 2), 0.0);
        let f = boxtimes_form(BoxtimesParams::new(0.5, 0.5).unwrap());
        for (i, j) in [(0, 1), (1, 2), (2, 3), (3, 0)] {
            assert_eq!(f.pair_weight(i, j), 0.25);
        }
        assert_eq!(f.pair_weight(0, 2), -0.25);
        assert_eq!(f.pair_weight(1, 3), -0.25);
    }

    #[test]
    fn params_out_of_box() {
        assert!(BoxtimesParams::new(-0.1, 0.5).is_err());
        assert!(BoxtimesParams::new(0.5, 1.5).is_err());
        assert!(serde_json::from_str::<BoxtimesParams>(r#"{"s":2,"t":0}"#).is_err());
    }

    #[test]
    fn identical_labels_zero() {
        let (_, m) = boxtimes_min(&square(), &["a", "a", "a", "a"]).unwrap();
        assert_eq!(m, 0.0);
    }

    #[test]
    fn unit_square_minimum_at_center() {
        let (p, m) = boxtimes_min(&square(), &["a", "b", "c", "d"]).unwrap();
        assert!(m.abs() < 1e-15, "{m}");
        let f = boxtimes_form(BoxtimesParams::new(0.5, 0.5).unwrap());
        let v = evaluate_form(&f, &square(), &["a", "b", "c", "d"]).unwrap();
        assert!(v.abs() < 1e-15);
        assert!(p.s >= 0.0 && p.s <= 1.0);
    }

    #[test]
    fn stretched_square_violates() {
        // unit square with both diagonals at the triangle limit 2
        let d = vec![
            vec![0.0, 1.0, 2.0, 1.0],
            vec![1.0, 0.0, 1.0, 2.0],
            vec![2.0, 1.0, 0.0, 1.0],
            vec![1.0, 2.0, 1.0, 0.0],
        ];
        let s = FiniteMetricSpace::from_matrix(vec!["a", "b", "c", "d"], d).unwrap();
        let (p, m) = boxtimes_min(&s, &["a", "b", "c", "d"]).unwrap();
        // 1 − 4(s(1−s) + t(1−t)) at s = t = 1/2
        assert!((m + 1.0).abs() < 1e-15);
        assert_eq!((p.s, p.t), (0.5, 0.5));
        match check_boxtimes(&s) {
            CheckOutcome::Violated(w) => {
                assert!((w.margin + 1.0).abs() < 1e-15);
                assert!((w.reevaluate(&s).unwrap() - w.margin).abs() < 1e-15);
            }
            o => panic!("expected violation, got {o:?}"),
        }
        let v = embed5_decide(&s).unwrap();
        assert!(!v.embeddable);
    }

    #[test]
    fn triangle_is_embeddable() {
        let d = vec![vec![0.0, 3.0, 5.0], vec![3.0, 0.0, 2.0], vec![5.0, 2.0, 0.0]];
        let s = FiniteMetricSpace::from_matrix(vec!["p", "q", "r"], d).unwrap();
        assert!(embed5_decide(&s).unwrap().embeddable);
    }

    #[test]
    fn too_many_points() {
        let pts: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        let labels: Vec<String> = (0..6).map(|i| i.to_string()).collect();
        let s = FiniteMetricSpace::from_euclidean(&pts, labels).unwrap();
        assert!(matches!(embed5_decide(&s), Err(Error::TooManyPoints { got: 6, max: 5 })));
    }

    #[test]
    fn value_matches_form() {
        let s = square().perturb_pair("a", "c", 0.2).unwrap();
        let q = QuadSquares::of(&s, [0, 1, 2, 3]);
        for (ps, pt) in [(0.1, 0.7), (0.5, 0.5), (0.9, 0.2)] {
            let f = boxtimes_form(BoxtimesParams::new(ps, pt).unwrap());
            let v = evaluate_form(&f, &s, &["a", "b", "c", "d"]).unwrap();
            assert!((v - q.value(ps, pt)).abs() < 1e-14);
        }
    }
}
