//! Detail-free mechanisms that only use the prior mean.

use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::mechanism::{principal_payoff, MechanismKind, SingleMechanism};

/// Allocate without checking iff `μ ≥ R`, otherwise check above `R + c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustMechanism {
    pub mu: f64,
    pub reserve: f64,
    pub cost: f64,
    pub kind: MechanismKind,
}

pub fn robust_mechanism(mu: f64, reserve: f64, cost: f64) -> Result<RobustMechanism> {
    if !(cost >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "checking cost must be >= 0, got {cost}"
        )));
    }
    let kind = if mu >= reserve {
        MechanismKind::AllocateAlways
    } else {
        MechanismKind::CheckAboveCutoff { cutoff: reserve + cost }
    };
    Ok(RobustMechanism {
        mu,
        reserve,
        cost,
        kind,
    })
}

impl RobustMechanism {
    pub fn as_single(&self) -> SingleMechanism {
        SingleMechanism {
            kind: self.kind,
            reserve: self.reserve,
            cost: self.cost,
        }
    }

    /// Net payoff when the agent's signal actually follows `g`.
    pub fn payoff_under(&self, g: &Distribution) -> f64 {
        self.as_single().payoff_under(g)
    }
}

/// Payoff of the robust mechanism built from the prior mean, evaluated under the prior.
pub fn robust_payoff(f: &Distribution, reserve: f64, cost: f64) -> Result<f64> {
    Ok(robust_mechanism(f.mean(), reserve, cost)?.payoff_under(f))
}

/// How much the fully informed optimal mechanism beats the robust one under `f`.
pub fn payoff_gap(f: &Distribution, reserve: f64, cost: f64) -> Result<f64> {
    Ok(principal_payoff(f, reserve, cost)? - robust_payoff(f, reserve, cost)?)
}
