//! The optimal single-agent mechanism, its payoff and the agent's winning
//! probability, plus grid-based direct mechanisms with an IC check.
//!
//! Payoffs are net of the reserve: retaining the good is worth zero.

use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::threshold::solve_threshold;

/// Tolerance of [`ic_check`].
pub const IC_TOL: f64 = 1e-9;

/// Slack on the `s* - c ≥ R` comparison so that exact ties survive rounding.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MechanismKind {
    /// Hand over the good without checking.
    AllocateAlways,
    /// Check and allocate iff the report is at least `cutoff` (`= R + c`).
    CheckAboveCutoff { cutoff: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleMechanism {
    pub kind: MechanismKind,
    pub reserve: f64,
    pub cost: f64,
}

/// Result of running a mechanism on one realised signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub assigned: bool,
    pub checked: bool,
    /// `(s - R)·assigned - c·checked`; zero when the good is retained.
    pub principal_gain: f64,
}

impl SingleMechanism {
    pub fn allocate(&self, s: f64) -> Outcome {
        let (assigned, checked) = match self.kind {
            MechanismKind::AllocateAlways => (true, false),
            MechanismKind::CheckAboveCutoff { cutoff } => {
                let hit = s >= cutoff;
                (hit, hit)
            }
        };
        let mut gain = 0.0;
        if assigned {
            gain += s - self.reserve;
        }
        if checked {
            gain -= self.cost;
        }
        Outcome {
            assigned,
            checked,
            principal_gain: gain,
        }
    }

    /// Expected net payoff of this mechanism when signals follow `g`.
    pub fn payoff_under(&self, g: &Distribution) -> f64 {
        match self.kind {
            MechanismKind::AllocateAlways => g.mean() - self.reserve,
            MechanismKind::CheckAboveCutoff { cutoff } => g.upper_partial_expectation(cutoff),
        }
    }

    /// Probability that the agent receives the good when signals follow `g`.
    pub fn win_prob_under(&self, g: &Distribution) -> f64 {
        match self.kind {
            MechanismKind::AllocateAlways => 1.0,
            MechanismKind::CheckAboveCutoff { cutoff } => 1.0 - g.cdf_left(cutoff),
        }
    }

    pub fn to_direct(&self, grid: &[f64]) -> DirectMechanism {
        let (p, q) = grid
            .iter()
            .map(|&s| {
                let o = self.allocate(s);
                (f64::from(u8::from(o.assigned)), f64::from(u8::from(o.checked)))
            })
            .unzip();
        DirectMechanism {
            grid: grid.to_vec(),
            p,
            q,
        }
    }
}

/// The optimal mechanism for signal distribution `g`: allocate without
/// checking iff `s* - c ≥ R`, otherwise check above `R + c`.
pub fn optimal_mechanism(g: &Distribution, reserve: f64, cost: f64) -> Result<SingleMechanism> {
    let th = solve_threshold(g, cost)?;
    let kind = if th.s_star - cost >= reserve - TIE_TOL {
        MechanismKind::AllocateAlways
    } else {
        MechanismKind::CheckAboveCutoff { cutoff: reserve + cost }
    };
    Ok(SingleMechanism { kind, reserve, cost })
}

pub fn principal_payoff(g: &Distribution, reserve: f64, cost: f64) -> Result<f64> {
    Ok(optimal_mechanism(g, reserve, cost)?.payoff_under(g))
}

pub fn agent_win_prob(g: &Distribution, reserve: f64, cost: f64) -> Result<f64> {
    Ok(optimal_mechanism(g, reserve, cost)?.win_prob_under(g))
}

/// Allocation probability `p` and checking probability `q` on a signal grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectMechanism {
    pub grid: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

/// `0 ≤ q ≤ p ≤ 1` and `p(s) ≥ p(s') - q(s')` for every pair of grid points.
pub fn ic_check(dm: &DirectMechanism) -> Result<bool> {
    let n = dm.grid.len();
    if dm.p.len() != n || dm.q.len() != n {
        return Err(Error::Ragged {
            grid: n,
            p: dm.p.len(),
            q: dm.q.len(),
        });
    }
    let bounded =
        dm.p.iter()
            .zip(&dm.q)
            .all(|(&p, &q)| q >= -IC_TOL && q <= p + IC_TOL && p <= 1.0 + IC_TOL);
    if !bounded {
        return Ok(false);
    }
    // The pairwise constraints reduce to min p ≥ max (p - q).
    let min_p = dm.p.iter().copied().fold(f64::INFINITY, f64::min);
    let max_gain =
        dm.p.iter()
            .zip(&dm.q)
            .map(|(p, q)| p - q)
            .fold(f64::NEG_INFINITY, f64::max);
    Ok(n == 0 || min_p >= max_gain - IC_TOL)
}
