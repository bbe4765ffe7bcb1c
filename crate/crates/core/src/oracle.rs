//! Brute-force checks on finite instances: the mechanism design problem and
//! the information design problems written as linear programs.

use serde::{Deserialize, Serialize};

use crate::dist::DiscreteInstance;
use crate::error::{Error, Result};
use crate::simplex::{LinearProgram, LpStatus, Relation, Row};

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub value: f64,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub status: LpStatus,
}

/// Optimal direct mechanism on a finite instance.
///
/// With `r_k = p_k - q_k` the incentive constraints `p_k ≥ p_j - q_j` become
/// `r_j ≤ φ ≤ p_k` for one extra variable `φ`, which keeps the program to
/// `3n` rows instead of `n²`.
pub fn lp_optimal_mechanism(inst: &DiscreteInstance, reserve: f64, cost: f64) -> LpSolution {
    let n = inst.len();
    let phi = 2 * n;
    let mut objective = vec![0.0; 2 * n + 1];
    for k in 0..n {
        objective[k] = inst.masses[k] * (inst.points[k] - reserve - cost);
        objective[n + k] = inst.masses[k] * cost;
    }
    let mut lp = LinearProgram::new(objective);
    for k in 0..n {
        lp.constrain(vec![(n + k, 1.0), (phi, -1.0)], Relation::Le, 0.0);
        lp.constrain(vec![(phi, 1.0), (k, -1.0)], Relation::Le, 0.0);
        lp.constrain(vec![(k, 1.0)], Relation::Le, 1.0);
    }
    let sol = lp.maximize();
    if sol.status != LpStatus::Optimal {
        return LpSolution {
            value: f64::NAN,
            p: Vec::new(),
            q: Vec::new(),
            status: sol.status,
        };
    }
    let p: Vec<f64> = sol.x[..n].iter().map(|v| v.clamp(0.0, 1.0)).collect();
    let q: Vec<f64> = (0..n).map(|k| (p[k] - sol.x[n + k]).clamp(0.0, p[k])).collect();
    LpSolution {
        value: mechanism_value(inst, reserve, cost, &p, &q),
        p,
        q,
        status: LpStatus::Optimal,
    }
}

/// `Σ m_k (p_k (s_k - R) - q_k c)`.
pub fn mechanism_value(inst: &DiscreteInstance, reserve: f64, cost: f64, p: &[f64], q: &[f64]) -> f64 {
    (0..inst.len())
        .map(|k| inst.masses[k] * (p[k] * (inst.points[k] - reserve) - q[k] * cost))
        .sum()
}

/// Whether `p`, restricted to points with mass that are not exactly at the
/// cutoff `R + c` (where the objective is indifferent), is a step taking at
/// most two levels with the upper one equal to 1.
pub fn has_threshold_structure(inst: &DiscreteInstance, p: &[f64], cutoff: f64, tol: f64) -> bool {
    let levels: Vec<f64> = inst
        .points
        .iter()
        .zip(&inst.masses)
        .zip(p)
        .filter(|((&x, &m), _)| m > 1e-12 && (x - cutoff).abs() > 1e-12)
        .map(|(_, &v)| v)
        .collect();
    let Some(&first) = levels.first() else {
        return true;
    };
    match levels.iter().position(|&v| (v - first).abs() > tol) {
        None => true,
        Some(k) => {
            let high = levels[k];
            high > first && (high - 1.0).abs() <= tol && levels[k..].iter().all(|&v| (v - high).abs() <= tol)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DesignObjective {
    /// Maximise the agent's probability of receiving the good.
    AgentWin,
    /// Minimise the principal's optimal payoff.
    PrincipalMin,
    /// Maximise the principal's optimal payoff.
    PrincipalMax,
}

/// Optimise over signal distributions on the prior's grid (with `R + c`
/// added) that are mean-preserving contractions of it.
///
/// The optimal payoff for a candidate `g` is `max(μ - R, B(g))` with
/// `B(g) = Σ_{x_i ≥ R+c} g_i (x_i - R - c)`, so each objective reduces to one
/// or two linear programs in `g`.
pub fn lp_design(
    inst_f: &DiscreteInstance,
    reserve: f64,
    cost: f64,
    objective: DesignObjective,
) -> Result<(DiscreteInstance, f64)> {
    let k = reserve + cost;
    let grid = inst_f.with_point(k);
    let (x, f) = (&grid.points, &grid.masses);
    let n = x.len();
    let mu = inst_f.mean();
    let mut rows: Vec<Row> = Vec::with_capacity(n + 1);
    for m in 1..n {
        // Integrated step CDF at x_m: Σ_{i<m} mass_i (x_m - x_i).
        let terms: Vec<(usize, f64)> = (0..m).map(|i| (i, x[m] - x[i])).collect();
        let rhs: f64 = (0..m).map(|i| f[i] * (x[m] - x[i])).sum();
        rows.push((terms, Relation::Le, rhs));
    }
    rows.push(((0..n).map(|i| (i, 1.0)).collect(), Relation::Eq, 1.0));
    rows.push(((0..n).map(|i| (i, x[i])).collect(), Relation::Eq, mu));

    let upper: Vec<f64> = x.iter().map(|&xi| if xi > k { xi - k } else { 0.0 }).collect();
    let solve = |weights: Vec<f64>| -> Result<(Vec<f64>, f64)> {
        let mut lp = LinearProgram::new(weights);
        for (terms, rel, rhs) in &rows {
            lp.constrain(terms.clone(), *rel, *rhs);
        }
        let sol = lp.maximize();
        match sol.status {
            LpStatus::Optimal => Ok((sol.x, sol.value)),
            s => Err(Error::Lp(format!("design program ended with status {s:?}"))),
        }
    };
    let (g, value) = match objective {
        DesignObjective::PrincipalMin => {
            let (g, v) = solve(upper.iter().map(|u| -u).collect())?;
            (g, (mu - reserve).max(-v))
        }
        DesignObjective::PrincipalMax => {
            let (g, v) = solve(upper.clone())?;
            (g, (mu - reserve).max(v))
        }
        DesignObjective::AgentWin => {
            let (g, v) = solve(upper.iter().map(|u| -u).collect())?;
            if -v <= mu - reserve + 1e-12 {
                (g, 1.0)
            } else {
                solve(x.iter().map(|&xi| if xi >= k { 1.0 } else { 0.0 }).collect())?
            }
        }
    };
    Ok((to_instance(x, g)?, value))
}

fn to_instance(x: &[f64], g: Vec<f64>) -> Result<DiscreteInstance> {
    let mut g: Vec<f64> = g.into_iter().map(|v| v.max(0.0)).collect();
    let total: f64 = g.iter().sum();
    for v in &mut g {
        *v /= total;
    }
    DiscreteInstance::new(x.to_vec(), g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleObjective {
    Mechanism,
    AgentWin,
    PrincipalMin,
    PrincipalMax,
}

impl OracleObjective {
    pub fn design(self) -> Option<DesignObjective> {
        match self {
            OracleObjective::Mechanism => None,
            OracleObjective::AgentWin => Some(DesignObjective::AgentWin),
            OracleObjective::PrincipalMin => Some(DesignObjective::PrincipalMin),
            OracleObjective::PrincipalMax => Some(DesignObjective::PrincipalMax),
        }
    }
}

/// Serializable record of one oracle run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub objective: OracleObjective,
    pub reserve: f64,
    pub cost: f64,
    pub instance: DiscreteInstance,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub masses: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub q: Option<Vec<f64>>,
}

pub fn oracle_report(
    inst: &DiscreteInstance,
    reserve: f64,
    cost: f64,
    objective: OracleObjective,
) -> Result<OracleReport> {
    let mut report = OracleReport {
        objective,
        reserve,
        cost,
        instance: inst.clone(),
        value: f64::NAN,
        masses: None,
        p: None,
        q: None,
    };
    match objective.design() {
        None => {
            let sol = lp_optimal_mechanism(inst, reserve, cost);
            if sol.status != LpStatus::Optimal {
                return Err(Error::Lp(format!(
                    "mechanism program ended with status {:?}",
                    sol.status
                )));
            }
            report.value = sol.value;
            report.p = Some(sol.p);
            report.q = Some(sol.q);
        }
        Some(design) => {
            let (g, value) = lp_design(inst, reserve, cost, design)?;
            report.value = value;
            report.instance = inst.with_point(reserve + cost);
            report.masses = Some(g.masses);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::Distribution;
    use crate::mechanism::{ic_check, principal_payoff, DirectMechanism};

    /// The IC constraints written out pair by pair.
    fn pairwise_lp(inst: &DiscreteInstance, reserve: f64, cost: f64) -> f64 {
        let n = inst.len();
        let mut objective = vec![0.0; 2 * n];
        for k in 0..n {
            objective[k] = inst.masses[k] * (inst.points[k] - reserve);
            objective[n + k] = -inst.masses[k] * cost;
        }
        let mut lp = LinearProgram::new(objective);
        for k in 0..n {
            lp.constrain(vec![(n + k, 1.0), (k, -1.0)], Relation::Le, 0.0);
            lp.constrain(vec![(k, 1.0)], Relation::Le, 1.0);
            for j in 0..n {
                if j != k {
                    lp.constrain(vec![(j, 1.0), (n + j, -1.0), (k, -1.0)], Relation::Le, 0.0);
                }
            }
        }
        let sol = lp.maximize();
        assert_eq!(sol.status, LpStatus::Optimal);
        sol.value
    }

    #[test]
    fn reduced_program_matches_pairwise_program() {
        let f = Distribution::piecewise_constant(&[0.0, 0.3, 0.7, 1.0], &[2.0, 0.5, 1.5]).unwrap();
        for (n, r, c) in [(12, 0.4, 0.08), (15, 0.6, 0.08), (9, 0.2, 0.3)] {
            let inst = f.discretize(n).unwrap();
            let reduced = lp_optimal_mechanism(&inst, r, c);
            assert!((reduced.value - pairwise_lp(&inst, r, c)).abs() < 1e-10);
        }
    }

    #[test]
    fn single_point_instances() {
        let inst = DiscreteInstance::new(vec![0.5], vec![1.0]).unwrap();
        let sol = lp_optimal_mechanism(&inst, 0.4, 0.08);
        assert!((sol.value - 0.1).abs() < 1e-12);
        assert_eq!((sol.p[0], sol.q[0]), (1.0, 0.0));
        let sol = lp_optimal_mechanism(&inst, 0.6, 0.08);
        assert!(sol.value.abs() < 1e-12);
    }

    #[test]
    fn uniform_mechanism_value() {
        let f = Distribution::uniform(0.0, 1.0).unwrap();
        let inst = f.discretize(100).unwrap();
        let sol = lp_optimal_mechanism(&inst, 0.4, 0.08);
        let exact = principal_payoff(&f, 0.4, 0.08).unwrap();
        assert!((sol.value - exact).abs() < 1e-3, "{} vs {exact}", sol.value);
        let dm = DirectMechanism {
            grid: inst.points.clone(),
            p: sol.p.clone(),
            q: sol.q.clone(),
        };
        assert!(ic_check(&dm).unwrap());
        assert!(has_threshold_structure(&inst, &sol.p, 0.48, 1e-6));
    }

    #[test]
    fn threshold_structure_detector() {
        let inst = DiscreteInstance::new(vec![0.1, 0.2, 0.3, 0.4], vec![0.25; 4]).unwrap();
        assert!(has_threshold_structure(&inst, &[0.3, 0.3, 1.0, 1.0], 0.25, 1e-6));
        assert!(has_threshold_structure(&inst, &[1.0; 4], 0.25, 1e-6));
        assert!(!has_threshold_structure(&inst, &[0.3, 1.0, 0.3, 1.0], 0.25, 1e-6));
        assert!(!has_threshold_structure(&inst, &[0.0, 0.3, 0.6, 1.0], 0.25, 1e-6));
    }

    #[test]
    fn design_targets_on_a_coarse_grid() {
        let f = Distribution::uniform(0.0, 1.0).unwrap();
        let n = 40;
        let inst = f.discretize(n).unwrap();
        let tol = 2.0 / n as f64;
        let (_, worst) = lp_design(&inst, 0.6, 0.08, DesignObjective::PrincipalMin).unwrap();
        assert!(worst.abs() < 1e-9);
        let (g, win) = lp_design(&inst, 0.6, 0.08, DesignObjective::AgentWin).unwrap();
        assert!((win - 0.64).abs() < tol, "{win}");
        assert!((g.mean() - inst.mean()).abs() < 1e-9);
        let (_, best) = lp_design(&inst, 0.6, 0.08, DesignObjective::PrincipalMax).unwrap();
        assert!((best - 0.0512).abs() < tol, "{best}");
        let (_, win) = lp_design(&inst, 0.4, 0.08, DesignObjective::AgentWin).unwrap();
        assert_eq!(win, 1.0);
    }

    #[test]
    fn report_round_trip() {
        let inst = Distribution::uniform(0.0, 1.0).unwrap().discretize(6).unwrap();
        let rep = oracle_report(&inst, 0.6, 0.08, OracleObjective::AgentWin).unwrap();
        let text = serde_json::to_string(&rep).unwrap();
        assert!(text.contains("\"objective\":\"agent-win\""));
        let back: OracleReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, rep);
    }
}
