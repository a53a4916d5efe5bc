use serde::{Deserialize, Serialize};

use crate::boxtimes::{boxtimes_form, BoxtimesParams, BOXTIMES_ROLES};
use crate::error::{Error, Result};
use crate::form::evaluate_form;
use crate::metric::FiniteMetricSpace;
use crate::sixpoint::{sixpoint_form, SixPointParams, SIX_ROLES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoleAssignment {
    pub role: String,
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum WitnessParams {
    Boxtimes(BoxtimesParams),
    Sixpoint(SixPointParams),
}

/// A role labeling plus parameters, with the resulting margin (RHS − LHS;
/// negative means the inequality fails there).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationWitness {
    pub labeling: Vec<RoleAssignment>,
    pub params: WitnessParams,
    pub margin: f64,
}

impl ViolationWitness {
    pub(crate) fn new(roles: &[&str], labels: &[&str], params: WitnessParams, margin: f64) -> Self {
        let labeling = roles
            .iter()
            .zip(labels)
            .map(|(r, l)| RoleAssignment {
                role: (*r).to_string(),
                label: (*l).to_string(),
            })
            .collect();
        ViolationWitness {
            labeling,
            params,
            margin,
        }
    }

    /// Labels in role order.
    pub fn labels(&self) -> Vec<&str> {
        self.labeling.iter().map(|a| a.label.as_str()).collect()
    }

    /// Margin recomputed from the form on `space`.
    pub fn reevaluate(&self, space: &FiniteMetricSpace) -> Result<f64> {
        let (form, roles): (_, &[&str]) = match self.params {
            WitnessParams::Boxtimes(p) => (boxtimes_form(p), &BOXTIMES_ROLES),
            WitnessParams::Sixpoint(p) => (sixpoint_form(p)?, &SIX_ROLES),
        };
        if self.labeling.len() != roles.len()
            || self.labeling.iter().zip(roles).any(|(a, r)| a.role != *r)
        {
            return Err(Error::InvalidParams("witness roles do not match its family".into()));
        }
        evaluate_form(&form, space, &self.labels())
    }

    pub fn is_violation(&self) -> bool {
        self.margin < 0.0
    }
}

/// A witness bound to the checksum of the space it was computed on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessDocument {
    pub space_checksum: String,
    pub witness: ViolationWitness,
}

impl WitnessDocument {
    pub fn new(space: &FiniteMetricSpace, witness: ViolationWitness) -> Self {
        WitnessDocument {
            space_checksum: space.checksum(),
            witness,
        }
    }

    /// Re-evaluate against `space`, refusing a space other than the one recorded.
    pub fn verify(&self, space: &FiniteMetricSpace) -> Result<f64> {
        let actual = space.checksum();
        if actual != self.space_checksum {
            return Err(Error::StaleReport {
                expected: self.space_checksum.clone(),
                actual,
            });
        }
        self.witness.reevaluate(space)
    }
}
