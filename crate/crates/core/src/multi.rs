//! Several agents competing for one good: the favored-agent mechanism, its
//! exact payoff and winning probabilities, and the multi-agent design results.
//!
//! Agents are numbered from 1; index 0 is the principal keeping the good.
//! Payoffs here are gross (retention is worth `R`); use [`net_of_reserve`]
//! to compare with the single-agent modules.
//!
//! Winning probabilities are computed by conditioning on each agent's net
//! value `X_i = s_i - c_i`. On the continuous part the integrand is a product
//! of piecewise polynomials, so Gauss-Legendre quadrature of high enough
//! order on each common smooth interval is exact.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::design::{agent_optimal_info, s_dagger, CLASSIFY_TOL};
use crate::dist::{Distribution, MPC_TOL};
use crate::error::{Error, Result};
use crate::threshold::solve_threshold;

/// Net values closer than this are treated as tied.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TieRule {
    /// Ties (including the choice among equally good favored agents) are
    /// broken uniformly at random.
    #[default]
    #[serde(rename = "equal")]
    EqualSplit,
    /// The lowest index wins every tie.
    #[serde(rename = "lowest")]
    LowestIndex,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub prior: Distribution,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    reserve: f64,
    agents: Vec<Agent>,
    assumptions_hold: bool,
}

impl Scenario {
    /// Builds a scenario. The standing assumptions `lo_i < R < hi_i` and
    /// `R + c_i ≤ hi_i` are recorded, not enforced.
    pub fn new(reserve: f64, agents: Vec<Agent>) -> Result<Self> {
        if !reserve.is_finite() {
            return Err(Error::InvalidArgument(format!("reserve {reserve} is not finite")));
        }
        if agents.is_empty() {
            return Err(Error::InvalidArgument("scenario needs at least one agent".into()));
        }
        if let Some(a) = agents.iter().find(|a| !(a.cost >= 0.0 && a.cost.is_finite())) {
            return Err(Error::InvalidArgument(format!("checking cost {} must be >= 0", a.cost)));
        }
        let assumptions_hold = agents
            .iter()
            .all(|a| a.prior.lo() < reserve && reserve < a.prior.hi() && reserve + a.cost <= a.prior.hi());
        Ok(Scenario {
            reserve,
            agents,
            assumptions_hold,
        })
    }

    /// `n` agents sharing one prior and cost.
    pub fn symmetric(reserve: f64, prior: Distribution, cost: f64, n: usize) -> Result<Self> {
        Scenario::new(reserve, vec![Agent { prior, cost }; n])
    }

    pub fn reserve(&self) -> f64 {
        self.reserve
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn assumptions_hold(&self) -> bool {
        self.assumptions_hold
    }

    pub fn priors(&self) -> Vec<Distribution> {
        self.agents.iter().map(|a| a.prior.clone()).collect()
    }

    pub fn means(&self) -> Vec<f64> {
        self.agents.iter().map(|a| a.prior.mean()).collect()
    }

    /// The checking cost shared by all agents.
    pub fn common_cost(&self) -> Result<f64> {
        let c = self.agents[0].cost;
        match self.agents.iter().find(|a| (a.cost - c).abs() > TIE_TOL) {
            Some(a) => Err(Error::HeterogeneousCost(c, a.cost)),
            None => Ok(c),
        }
    }

    fn check_profile(&self, profile: &[Distribution]) -> Result<()> {
        if profile.len() != self.len() {
            return Err(Error::InvalidArgument(format!(
                "profile has {} distributions for {} agents",
                profile.len(),
                self.len()
            )));
        }
        for (g, a) in profile.iter().zip(&self.agents) {
            if !g.is_mpc_of(&a.prior, MPC_TOL)? {
                return Err(Error::NotMpc);
            }
        }
        Ok(())
    }
}

/// Favored agent `favored` (0 = principal) with threshold `v_star`.
#[derive(Debug, Clone, PartialEq)]
pub struct FavoredAgentMechanism {
    pub favored: usize,
    pub v_star: f64,
    pub tie_rule: TieRule,
    /// Agents whose `s_i* - c_i` attains the maximum; under `EqualSplit` the
    /// favored agent is drawn from these.
    pub candidates: Vec<usize>,
}

/// Realisation of one run of the mechanism.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamOutcome {
    /// Index of the agent receiving the good, 0 if the principal keeps it.
    pub winner: usize,
    pub checked: bool,
    /// Principal's gross payoff given the reported signals.
    pub gross_payoff: f64,
}

pub fn favored_agent_mechanism(
    sc: &Scenario,
    profile: &[Distribution],
    tie_rule: TieRule,
) -> Result<FavoredAgentMechanism> {
    sc.check_profile(profile)?;
    let values = profile
        .iter()
        .zip(sc.agents())
        .map(|(g, a)| Ok(solve_threshold(g, a.cost)?.s_star - a.cost))
        .collect::<Result<Vec<f64>>>()?;
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if best >= sc.reserve() - TIE_TOL {
        let candidates: Vec<usize> = (1..=values.len())
            .filter(|&i| values[i - 1] >= best - TIE_TOL)
            .collect();
        Ok(FavoredAgentMechanism {
            favored: candidates[0],
            v_star: best.max(sc.reserve()),
            tie_rule,
            candidates,
        })
    } else {
        Ok(FavoredAgentMechanism {
            favored: 0,
            v_star: sc.reserve(),
            tie_rule,
            candidates: vec![0],
        })
    }
}

impl FavoredAgentMechanism {
    /// Run on reported signals. Randomness is only drawn under `EqualSplit`.
    pub fn run<R: Rng + ?Sized>(&self, sc: &Scenario, signals: &[f64], rng: &mut R) -> FamOutcome {
        let favored = match self.tie_rule {
            TieRule::EqualSplit if self.candidates.len() > 1 => {
                self.candidates[rng.random_range(0..self.candidates.len())]
            }
            _ => self.favored,
        };
        let nets: Vec<f64> = signals.iter().zip(sc.agents()).map(|(s, a)| s - a.cost).collect();
        let others_low = (1..=nets.len())
            .filter(|&j| j != favored)
            .all(|j| nets[j - 1] < self.v_star - TIE_TOL);
        if others_low {
            return if favored == 0 {
                FamOutcome {
                    winner: 0,
                    checked: false,
                    gross_payoff: sc.reserve(),
                }
            } else {
                FamOutcome {
                    winner: favored,
                    checked: false,
                    gross_payoff: signals[favored - 1],
                }
            };
        }
        let best = nets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let tied: Vec<usize> = (1..=nets.len()).filter(|&i| nets[i - 1] >= best - TIE_TOL).collect();
        let winner = match self.tie_rule {
            TieRule::EqualSplit if tied.len() > 1 => tied[rng.random_range(0..tied.len())],
            _ => tied[0],
        };
        FamOutcome {
            winner,
            checked: true,
            gross_payoff: nets[winner - 1],
        }
    }
}

/// Per-run wrapper matching the mechanism's free-function form.
pub fn run_fam<R: Rng + ?Sized>(m: &FavoredAgentMechanism, sc: &Scenario, signals: &[f64], rng: &mut R) -> FamOutcome {
    m.run(sc, signals, rng)
}

/// Split of the payoff for one choice of favored agent.
#[derive(Debug, Clone, PartialEq)]
pub struct FamBranch {
    pub favored: usize,
    /// Probability that every other agent is below `v*`.
    pub unchecked_prob: f64,
    /// Gross payoff collected on that event.
    pub unchecked_value: f64,
    /// Gross payoff collected when some other agent reaches `v*`.
    pub checked_value: f64,
    pub win_probs: Vec<f64>,
}

/// Exact evaluation of the favored-agent mechanism on a signal profile.
#[derive(Debug, Clone, PartialEq)]
pub struct FamEvaluation {
    pub mechanism: FavoredAgentMechanism,
    /// Index 0 is the principal's retention probability.
    pub win_probs: Vec<f64>,
    pub gross_payoff: f64,
    /// One entry per favored agent the tie rule can pick, equally likely.
    pub branches: Vec<FamBranch>,
}

struct Net<'a> {
    g: &'a Distribution,
    c: f64,
}

impl Net<'_> {
    fn below(&self, x: f64) -> f64 {
        let y = x + self.c;
        let near: f64 = self
            .g
            .atoms()
            .iter()
            .filter(|a| a.loc < y && a.loc >= y - TIE_TOL)
            .map(|a| a.mass)
            .sum();
        self.g.cdf_left(y) - near
    }

    fn equal(&self, x: f64) -> f64 {
        self.g.atom_mass_near(x + self.c, TIE_TOL)
    }
}

/// Probability that agent `i` is selected among the maximisers when its net value is `x`.
fn selection_weight(nets: &[Net], i: usize, x: f64, rule: TieRule) -> f64 {
    match rule {
        TieRule::LowestIndex => nets
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(j, n)| if j < i { n.below(x) } else { n.below(x) + n.equal(x) })
            .product(),
        TieRule::EqualSplit => {
            // ∫_0^1 ∏_j (P(X_j < x) + t P(X_j = x)) dt is the expected share 1/(1 + #ties).
            let mut coeffs = vec![1.0];
            for (j, n) in nets.iter().enumerate() {
                if j == i {
                    continue;
                }
                let (lo, eq) = (n.below(x), n.equal(x));
                let mut next = vec![0.0; coeffs.len() + 1];
                for (k, &a) in coeffs.iter().enumerate() {
                    next[k] += a * lo;
                    next[k + 1] += a * eq;
                }
                coeffs = next;
            }
            coeffs.iter().enumerate().map(|(k, a)| a / (k + 1) as f64).sum()
        }
    }
}

fn evaluate_branch(
    sc: &Scenario,
    nets: &[Net],
    favored: usize,
    v_star: f64,
    rule: TieRule,
    quad: &GaussLegendre,
) -> FamBranch {
    let n = nets.len();
    let unchecked_prob: f64 = (0..n)
        .filter(|&j| j + 1 != favored)
        .map(|j| nets[j].below(v_star))
        .product();
    let mut win_probs = vec![0.0; n + 1];
    let mut checked_value = 0.0;
    let mut shifted: Vec<f64> = Vec::new();
    for (i, net) in nets.iter().enumerate() {
        let offset = if i + 1 == favored { unchecked_prob } else { 0.0 };
        let (mut prob, mut value) = (0.0, 0.0);
        for atom in net.g.atoms() {
            let x = atom.loc - net.c;
            if x >= v_star - TIE_TOL {
                let w = selection_weight(nets, i, x, rule) - offset;
                prob += atom.mass * w;
                value += atom.mass * w * x;
            }
        }
        // Breakpoints of every agent expressed in agent i's signal coordinate.
        // The ends are pushed separately: shifting there and back can round past them.
        let (lo, hi) = ((v_star + net.c).max(net.g.lo()), net.g.hi());
        shifted.clear();
        for other in nets {
            shifted.extend(other.g.breakpoints().into_iter().map(|b| b - other.c + net.c));
        }
        shifted.retain(|&s| s > lo && s < hi);
        shifted.push(lo);
        shifted.push(hi);
        shifted.sort_by(f64::total_cmp);
        shifted.dedup();
        for w in shifted.windows(2) {
            let (a, b) = (w[0], w[1]);
            let density = net.g.density_poly_on(a, b);
            if density.is_zero() {
                continue;
            }
            let integrand = |s: f64| {
                let x = s - net.c;
                let others: f64 = nets
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, o)| o.g.cdf(x + o.c))
                    .product();
                density.eval(s) * (others - offset)
            };
            prob += quad.integrate(a, b, integrand);
            value += quad.integrate(a, b, |s| (s - net.c) * integrand(s));
        }
        win_probs[i + 1] = prob;
        checked_value += value;
    }
    let unchecked_value = if favored == 0 {
        win_probs[0] = unchecked_prob;
        sc.reserve() * unchecked_prob
    } else {
        win_probs[favored] += unchecked_prob;
        nets[favored - 1].g.mean() * unchecked_prob
    };
    FamBranch {
        favored,
        unchecked_prob,
        unchecked_value,
        checked_value,
        win_probs,
    }
}

fn quadrature_for(profile: &[Distribution]) -> GaussLegendre {
    // Integrand degree: one density (≤ 3), the other CDFs (≤ 4 each), one factor of x.
    let degree = 4 + 4 * profile.len().saturating_sub(1);
    let order = degree / 2 + 1;
    GaussLegendre::new(NonZeroUsize::new(order).expect("order is positive"))
}

pub fn evaluate_fam(sc: &Scenario, profile: &[Distribution], tie_rule: TieRule) -> Result<FamEvaluation> {
    let mechanism = favored_agent_mechanism(sc, profile, tie_rule)?;
    let nets: Vec<Net> = profile
        .iter()
        .zip(sc.agents())
        .map(|(g, a)| Net { g, c: a.cost })
        .collect();
    let quad = quadrature_for(profile);
    let favored_choices = match tie_rule {
        TieRule::EqualSplit => mechanism.candidates.clone(),
        TieRule::LowestIndex => vec![mechanism.favored],
    };
    let branches: Vec<FamBranch> = favored_choices
        .iter()
        .map(|&f| evaluate_branch(sc, &nets, f, mechanism.v_star, tie_rule, &quad))
        .collect();
    let share = 1.0 / branches.len() as f64;
    let mut win_probs = vec![0.0; sc.len() + 1];
    let mut gross_payoff = 0.0;
    for b in &branches {
        for (acc, p) in win_probs.iter_mut().zip(&b.win_probs) {
            *acc += share * p;
        }
        gross_payoff += share * (b.unchecked_value + b.checked_value);
    }
    Ok(FamEvaluation {
        mechanism,
        win_probs,
        gross_payoff,
        branches,
    })
}

/// Principal's gross expected payoff under the optimal favored-agent mechanism.
pub fn principal_payoff_multi(sc: &Scenario, profile: &[Distribution], tie_rule: TieRule) -> Result<f64> {
    Ok(evaluate_fam(sc, profile, tie_rule)?.gross_payoff)
}

/// Assignment probabilities; index 0 is retention by the principal.
pub fn win_probabilities(sc: &Scenario, profile: &[Distribution], tie_rule: TieRule) -> Result<Vec<f64>> {
    Ok(evaluate_fam(sc, profile, tie_rule)?.win_probs)
}

/// A profile maximising the total probability that some agent gets the good.
pub fn aggregate_agent_optimal(sc: &Scenario) -> Result<Vec<Distribution>> {
    let cost = sc.common_cost()?;
    let means = sc.means();
    if means.iter().any(|&m| m >= sc.reserve()) {
        return Ok(means.into_iter().map(Distribution::point_mass).collect());
    }
    sc.agents()
        .iter()
        .map(|a| agent_optimal_info(&a.prior, sc.reserve(), cost))
        .collect()
}

pub fn is_aggregate_agent_optimal(sc: &Scenario, profile: &[Distribution]) -> Result<bool> {
    let cost = sc.common_cost()?;
    sc.check_profile(profile)?;
    let r = sc.reserve();
    if sc.means().iter().any(|&m| m >= r) {
        for g in profile {
            if solve_threshold(g, cost)?.s_star - cost >= r - CLASSIFY_TOL {
                return Ok(true);
            }
        }
        return Ok(false);
    }
    let k = r + cost;
    for (g, a) in profile.iter().zip(sc.agents()) {
        let fs = a.prior.cdf(s_dagger(&a.prior, r, cost)?);
        let atom = g.atom_mass_near(k, CLASSIFY_TOL);
        if (atom - (1.0 - fs)).abs() > CLASSIFY_TOL || (g.cdf_left(k - CLASSIFY_TOL) - fs).abs() > CLASSIFY_TOL {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Gross payoff under principal-worst information: `max(R, μ_1, ..., μ_I)`.
pub fn y_m(sc: &Scenario) -> f64 {
    sc.means().into_iter().fold(sc.reserve(), f64::max)
}

/// Robust mechanism: give the good unchecked to the highest mean, ties to
/// the principal first and then to the lowest agent index.
pub fn robust_mechanism_multi(means: &[f64], reserve: f64) -> usize {
    let mut best = (0, reserve);
    for (i, &m) in means.iter().enumerate() {
        if m > best.1 {
            best = (i + 1, m);
        }
    }
    best.0
}

/// Gross payoff of the robust mechanism when signals follow `profile`.
pub fn robust_multi_payoff(means: &[f64], reserve: f64, profile: &[Distribution]) -> f64 {
    match robust_mechanism_multi(means, reserve) {
        0 => reserve,
        i => profile[i - 1].mean(),
    }
}

/// Full information for every agent.
pub fn principal_optimal_info_multi(sc: &Scenario) -> Vec<Distribution> {
    sc.priors()
}

/// Change in agent `agent`'s (1-based) winning probability when it switches
/// to `deviation`, with the mechanism re-optimised for the new profile.
pub fn acquisition_deviation_gain(
    sc: &Scenario,
    profile: &[Distribution],
    agent: usize,
    deviation: &Distribution,
    tie_rule: TieRule,
) -> Result<f64> {
    if agent == 0 || agent > sc.len() {
        return Err(Error::InvalidArgument(format!(
            "agent index {agent} out of range 1..={}",
            sc.len()
        )));
    }
    if !deviation.is_mpc_of(&sc.agents()[agent - 1].prior, MPC_TOL)? {
        return Err(Error::NotMpc);
    }
    let before = win_probabilities(sc, profile, tie_rule)?[agent];
    let mut changed = profile.to_vec();
    changed[agent - 1] = deviation.clone();
    let after = win_probabilities(sc, &changed, tie_rule)?[agent];
    Ok(after - before)
}

/// Gross payoff minus the reserve, the single-agent convention.
pub fn net_of_reserve(gross: f64, reserve: f64) -> f64 {
    gross - reserve
}
