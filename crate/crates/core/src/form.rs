//! Quadratic metric inequalities `0 ≤ Σ_ij coeff[i][j] · d(x_i, x_j)²`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::FiniteMetricSpace;
use crate::TOL_EIG;

/// Symmetric coefficient matrix with an exactly zero diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FormDocument", into = "FormDocument")]
pub struct QuadraticForm {
    n: usize,
    coeff: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FormDocument {
    pub n: usize,
    pub coeff: Vec<Vec<f64>>,
}

impl TryFrom<FormDocument> for QuadraticForm {
    type Error = Error;
    fn try_from(doc: FormDocument) -> Result<Self> {
        if doc.coeff.len() != doc.n {
            return Err(Error::DimensionMismatch(format!(
                "form of size {} has {} rows",
                doc.n,
                doc.coeff.len()
            )));
        }
        QuadraticForm::from_matrix(doc.coeff)
    }
}

impl From<QuadraticForm> for FormDocument {
    fn from(f: QuadraticForm) -> Self {
        let coeff = f.coeff.chunks(f.n.max(1)).take(f.n).map(<[f64]>::to_vec).collect();
        FormDocument { n: f.n, coeff }
    }
}

impl QuadraticForm {
    pub fn zero(n: usize) -> Self {
        QuadraticForm {
            n,
            coeff: vec![0.0; n * n],
        }
    }

    pub fn from_matrix(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("coefficient matrix is not square".into()));
        }
        let coeff: Vec<f64> = rows.into_iter().flatten().collect();
        for i in 0..n {
            if coeff[i * n + i] != 0.0 {
                return Err(Error::InvalidParams(format!("nonzero diagonal coefficient at {i}")));
            }
            for j in 0..n {
                if !coeff[i * n + j].is_finite() || coeff[i * n + j] != coeff[j * n + i] {
                    return Err(Error::InvalidParams(format!(
                        "coefficients at ({i},{j}) are not symmetric and finite"
                    )));
                }
            }
        }
        Ok(QuadraticForm { n, coeff })
    }

    /// Add `weight · d(x_i, x_j)²`, split evenly over `(i,j)` and `(j,i)`.
    pub fn add_term(&mut self, i: usize, j: usize, weight: f64) {
        assert!(i != j, "quadratic metric forms have no diagonal terms");
        let half = 0.5 * weight;
        self.coeff[i * self.n + j] += half;
        self.coeff[j * self.n + i] += half;
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        self.coeff[i * self.n + j]
    }

    /// Total weight on the unordered pair `{i, j}`.
    pub fn pair_weight(&self, i: usize, j: usize) -> f64 {
        self.coeff(i, j) + self.coeff(j, i)
    }

    pub fn negated(&self) -> Self {
        QuadraticForm {
            n: self.n,
            coeff: self.coeff.iter().map(|c| -c).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeff.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// `Σ_ij coeff[i][j] · sq(i, j)` for an arbitrary squared-distance oracle.
    pub fn evaluate_with(&self, mut sq: impl FnMut(usize, usize) -> f64) -> f64 {
        let mut total = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                let c = self.coeff[i * self.n + j];
                if c != 0.0 {
                    total += c * sq(i, j);
                }
            }
        }
        total
    }

    /// Evaluate with form index `i` assigned to space index `assignment[i]`.
    pub fn evaluate_indices(&self, space: &FiniteMetricSpace, assignment: &[usize]) -> Result<f64> {
        if assignment.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "form on {} points, {} assigned",
                self.n,
                assignment.len()
            )));
        }
        if let Some(&bad) = assignment.iter().find(|&&i| i >= space.len()) {
            return Err(Error::UnknownLabel(format!("#{bad}")));
        }
        Ok(self.evaluate_with(|i, j| space.dist2(assignment[i], assignment[j])))
    }

    /// Generalized Laplacian `M = diag(row sums) − coeff`; the form evaluated
    /// on vectors `v_i` equals `2 Σ_ij M_ij ⟨v_i, v_j⟩`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                (0..n).filter(|&k| k != i).map(|k| self.coeff(i, k)).sum()
            } else {
                -self.coeff(i, j)
            }
        })
    }
}

/// `Σ_ij coeff[i][j] · d(x_i, x_j)²` with the form's indices assigned to labels.
/// Labels may repeat.
pub fn evaluate_form<S: AsRef<str>>(
    form: &QuadraticForm,
    space: &FiniteMetricSpace,
    assignment: &[S],
) -> Result<f64> {
    let idx = space.indices_of(assignment)?;
    form.evaluate_indices(space, &idx)
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Smallest eigenvalue of the form's Laplacian, divided by the largest
/// absolute coefficient (0 for the zero form).
pub fn normalized_min_laplacian_eigenvalue(form: &QuadraticForm) -> f64 {
    let scale = form.max_abs();
    if scale == 0.0 {
        return 0.0;
    }
    min_eigenvalue(&(form.laplacian() / scale))
}

/// True iff the form is nonnegative on every finite configuration of a
/// Hilbert space, i.e. its Laplacian is positive semidefinite.
pub fn laplacian_psd_check(form: &QuadraticForm) -> bool {
    normalized_min_laplacian_eigenvalue(form) >= -TOL_EIG
}
