//! Seeded Monte Carlo estimates of the favored-agent mechanism.
//!
//! Samples are cut into fixed-size blocks; block `b` draws from a ChaCha8
//! stream seeded with `seed` and stream id `b`. Blocks are processed on a
//! thread pool but summed in block order, so estimates do not depend on the
//! number of workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::multi::{favored_agent_mechanism, Scenario, TieRule};

pub const BLOCK_SIZE: u64 = 8192;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationEstimate {
    pub samples: u64,
    /// Index 0 is retention by the principal.
    pub win_prob: Vec<f64>,
    pub win_prob_stderr: Vec<f64>,
    /// Gross payoff.
    pub payoff: f64,
    pub payoff_stderr: f64,
}

#[derive(Clone)]
struct Tally {
    wins: Vec<u64>,
    sum: f64,
    sum_sq: f64,
}

pub fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

/// Estimate winning probabilities and the gross payoff from `samples` draws.
/// `workers = 0` uses rayon's default pool size.
pub fn simulate(
    sc: &Scenario,
    profile: &[Distribution],
    tie_rule: TieRule,
    samples: u64,
    seed: u64,
    workers: usize,
) -> Result<SimulationEstimate> {
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let mechanism = favored_agent_mechanism(sc, profile, tie_rule)?;
    let n_agents = sc.len();
    let blocks = samples.div_ceil(BLOCK_SIZE);
    let run_block = |b: u64| {
        let mut rng = block_rng(seed, b);
        let count = BLOCK_SIZE.min(samples - b * BLOCK_SIZE);
        let mut tally = Tally {
            wins: vec![0; n_agents + 1],
            sum: 0.0,
            sum_sq: 0.0,
        };
        let mut signals = vec![0.0; n_agents];
        for _ in 0..count {
            for (s, g) in signals.iter_mut().zip(profile) {
                *s = g.sample(&mut rng);
            }
            let out = mechanism.run(sc, &signals, &mut rng);
            tally.wins[out.winner] += 1;
            tally.sum += out.gross_payoff;
            tally.sum_sq += out.gross_payoff * out.gross_payoff;
        }
        tally
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let tallies: Vec<Tally> = pool.install(|| (0..blocks).into_par_iter().map(run_block).collect());

    let mut total = Tally {
        wins: vec![0; n_agents + 1],
        sum: 0.0,
        sum_sq: 0.0,
    };
    for t in &tallies {
        for (acc, w) in total.wins.iter_mut().zip(&t.wins) {
            *acc += w;
        }
        total.sum += t.sum;
        total.sum_sq += t.sum_sq;
    }
    let n = samples as f64;
    let win_prob: Vec<f64> = total.wins.iter().map(|&w| w as f64 / n).collect();
    let win_prob_stderr = win_prob.iter().map(|p| (p * (1.0 - p) / n).sqrt()).collect();
    let payoff = total.sum / n;
    let variance = (total.sum_sq / n - payoff * payoff).max(0.0);
    Ok(SimulationEstimate {
        samples,
        win_prob,
        win_prob_stderr,
        payoff,
        payoff_stderr: (variance / n).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multi::evaluate_fam;

    fn u01() -> Distribution {
        Distribution::uniform(0.0, 1.0).unwrap()
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let sc = Scenario::symmetric(0.4, u01(), 0.08, 2).unwrap();
        let profile = sc.priors();
        let one = simulate(&sc, &profile, TieRule::EqualSplit, 50_000, 7, 1).unwrap();
        let four = simulate(&sc, &profile, TieRule::EqualSplit, 50_000, 7, 4).unwrap();
        assert_eq!(one, four);
        let other = simulate(&sc, &profile, TieRule::EqualSplit, 50_000, 8, 4).unwrap();
        assert_ne!(one, other);
    }

    #[test]
    fn null_information_has_no_variance() {
        let sc = Scenario::symmetric(0.4, u01(), 0.08, 1).unwrap();
        let est = simulate(&sc, &[Distribution::point_mass(0.5)], TieRule::EqualSplit, 1000, 1, 2).unwrap();
        assert_eq!(est.win_prob, vec![0.0, 1.0]);
        assert_eq!(est.payoff_stderr, 0.0);
        assert_eq!(est.payoff, 0.5);
    }

    #[test]
    fn agrees_with_exact_evaluation() {
        let sc = Scenario::symmetric(0.4, u01(), 0.08, 2).unwrap();
        let profile = vec![Distribution::point_mass(0.5), u01().pool_interval(0.5, 0.6).unwrap()];
        let exact = evaluate_fam(&sc, &profile, TieRule::EqualSplit).unwrap();
        let est = simulate(&sc, &profile, TieRule::EqualSplit, 200_000, 3, 0).unwrap();
        assert!((est.payoff - exact.gross_payoff).abs() <= 4.0 * est.payoff_stderr);
        for (p, (e, se)) in exact
            .win_probs
            .iter()
            .zip(est.win_prob.iter().zip(&est.win_prob_stderr))
        {
            assert!((p - e).abs() <= 4.0 * se.max(1e-12), "{p} vs {e}");
        }
    }
}
