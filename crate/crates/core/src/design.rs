//! Information design for one agent: agent-optimal, principal-worst and
//! principal-optimal signal distributions, and predicates recognising them.

use crate::dist::{Distribution, MPC_TOL};
use crate::error::{Error, Result};
use crate::mechanism::{agent_win_prob, principal_payoff};
use crate::poly::bisect;
use crate::threshold::solve_threshold;

/// Tolerance of the classification predicates.
pub const CLASSIFY_TOL: f64 = 1e-9;

fn precondition(msg: impl Into<String>) -> Error {
    Error::Precondition(msg.into())
}

fn require_mpc(g: &Distribution, f: &Distribution) -> Result<()> {
    if g.is_mpc_of(f, MPC_TOL)? {
        Ok(())
    } else {
        Err(Error::NotMpc)
    }
}

/// The cutoff `s†` with `E_F[t | t ≥ s†] = R + c`.
///
/// Requires `μ < R`, `R + c < hi` and a prior whose density is positive on
/// an unbroken support without atoms.
pub fn s_dagger(f: &Distribution, reserve: f64, cost: f64) -> Result<f64> {
    let target = reserve + cost;
    if f.mean() >= reserve {
        return Err(precondition(format!(
            "prior mean {} is not below R = {reserve}",
            f.mean()
        )));
    }
    if f.has_atoms() {
        return Err(precondition("prior must not have atoms"));
    }
    let pieces = f.pieces();
    let contiguous = pieces.first().map(|p| p.a) == Some(f.lo())
        && pieces.last().map(|p| p.b) == Some(f.hi())
        && pieces.windows(2).all(|w| w[0].b == w[1].a);
    if !contiguous || pieces.iter().any(|p| p.density_poly().is_zero()) {
        return Err(precondition("prior density must be positive on its support"));
    }
    if target >= f.hi() {
        return Err(precondition(format!(
            "zero upper mass: R + c = {target} is not below hi = {}",
            f.hi()
        )));
    }
    let gap = |x: f64| f.conditional_mean(x, f.hi()).map_or(f64::INFINITY, |m| m - target);
    bisect(gap, f.lo(), target).ok_or_else(|| precondition("no sign change for the conditional mean"))
}

/// Signal distribution maximising the agent's winning probability.
///
/// With `μ ≥ R` this is null information. Otherwise the prior is kept below
/// `s†` and everything above is pooled into one atom at exactly `R + c`.
pub fn agent_optimal_info(f: &Distribution, reserve: f64, cost: f64) -> Result<Distribution> {
    let mu = f.mean();
    if mu >= reserve {
        return Ok(Distribution::point_mass(mu));
    }
    let sd = s_dagger(f, reserve, cost)?;
    f.pool_range(sd, f.hi(), true, true, Some(reserve + cost))
}

pub fn is_agent_optimal(g: &Distribution, f: &Distribution, reserve: f64, cost: f64) -> Result<bool> {
    require_mpc(g, f)?;
    if f.mean() >= reserve {
        let s_star = solve_threshold(g, cost)?.s_star;
        return Ok(s_star - cost >= reserve - CLASSIFY_TOL);
    }
    let sd = s_dagger(f, reserve, cost)?;
    let k = reserve + cost;
    let atom = g.atom_mass_near(k, CLASSIFY_TOL);
    let below = g.cdf_left(k - CLASSIFY_TOL);
    Ok((atom - (1.0 - f.cdf(sd))).abs() <= CLASSIFY_TOL && (below - f.cdf(sd)).abs() <= CLASSIFY_TOL)
}

/// Null information `δ(μ)`.
pub fn principal_worst_info(f: &Distribution) -> Distribution {
    Distribution::point_mass(f.mean())
}

pub fn is_principal_worst(g: &Distribution, f: &Distribution, reserve: f64, cost: f64) -> Result<bool> {
    require_mpc(g, f)?;
    if f.mean() < reserve {
        Ok(g.cdf(reserve + cost) >= 1.0 - CLASSIFY_TOL)
    } else {
        let s_star = solve_threshold(g, cost)?.s_star;
        Ok(s_star - cost >= reserve - CLASSIFY_TOL)
    }
}

/// Full information: the prior itself.
pub fn principal_optimal_info(f: &Distribution) -> Distribution {
    f.clone()
}

pub fn is_principal_optimal(g: &Distribution, f: &Distribution, reserve: f64, cost: f64) -> Result<bool> {
    require_mpc(g, f)?;
    let t_star = solve_threshold(f, cost)?.s_star;
    if t_star - cost >= reserve - CLASSIFY_TOL {
        return Ok(true);
    }
    let k = reserve + cost;
    let f_upper = f.mass_in(k, f.hi().max(k));
    if f_upper <= 0.0 {
        // Nothing is worth checking under the prior, so every design ties.
        return Ok(true);
    }
    if g.mass_in(k, g.hi().max(k)) <= 0.0 {
        return Ok(false);
    }
    let same_below = (g.cdf_left(k) - f.cdf_left(k)).abs() <= CLASSIFY_TOL;
    let same_mean = (g.conditional_mean(k, g.hi())? - f.conditional_mean(k, f.hi())?).abs() <= CLASSIFY_TOL;
    Ok(same_below && same_mean)
}

/// Summary of one designed distribution against its prior.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignReport {
    pub designed: Distribution,
    pub s_star: f64,
    pub principal_payoff: f64,
    pub agent_win_prob: f64,
    pub agent_optimal: bool,
    pub principal_worst: bool,
    pub principal_optimal: bool,
}

pub fn design_report(g: &Distribution, f: &Distribution, reserve: f64, cost: f64) -> Result<DesignReport> {
    require_mpc(g, f)?;
    Ok(DesignReport {
        designed: g.clone(),
        s_star: solve_threshold(g, cost)?.s_star,
        principal_payoff: principal_payoff(g, reserve, cost)?,
        agent_win_prob: agent_win_prob(g, reserve, cost)?,
        agent_optimal: is_agent_optimal(g, f, reserve, cost)?,
        principal_worst: is_principal_worst(g, f, reserve, cost)?,
        principal_optimal: is_principal_optimal(g, f, reserve, cost)?,
    })
}
