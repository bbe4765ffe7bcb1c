mod common;

use common::{ks_statistic, random_chain, random_prior};
use costly_alloc::design::{
    agent_optimal_info, is_agent_optimal, is_principal_worst, principal_optimal_info, principal_worst_info,
};
use costly_alloc::dist::{Distribution, MPC_TOL};
use costly_alloc::mechanism::{optimal_mechanism, principal_payoff, MechanismKind};
use costly_alloc::multi::{evaluate_fam, favored_agent_mechanism, principal_payoff_multi, Agent, Scenario, TieRule};
use costly_alloc::robust::robust_mechanism;
use costly_alloc::threshold::solve_threshold;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-9;

fn instance(seed: u64) -> (ChaCha8Rng, Distribution) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = random_prior(&mut rng);
    (rng, f)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cdf_is_monotone_and_integral_cdf_matches_numeric_integral(seed in any::<u64>(), pools in 0usize..4) {
        let (mut rng, f) = instance(seed);
        let g = random_chain(&mut rng, &f, pools).pop().unwrap();
        let (lo, hi) = (g.lo() - 0.1, g.hi() + 0.1);
        let n = 2000;
        let h = (hi - lo) / n as f64;
        let mut prev = 0.0;
        let mut trapezoid = 0.0;
        for i in 0..=n {
            let x = lo + i as f64 * h;
            let fx = g.cdf(x);
            prop_assert!(fx >= prev - 1e-12 && fx <= 1.0 + 1e-12);
            prop_assert!(g.cdf_left(x) <= fx + 1e-12);
            if i > 0 {
                trapezoid += 0.5 * h * (prev + fx);
            }
            prev = fx;
        }
        // An atom costs at most its mass times h in the trapezoid rule.
        prop_assert!((trapezoid - g.integral_cdf(hi)).abs() <= h * (1.0 + g.atoms().len() as f64));
        prop_assert!((g.integral_cdf(hi) - (hi - g.mean())).abs() < 1e-9);
    }

    #[test]
    fn pooling_preserves_mean_and_is_a_contraction(seed in any::<u64>(), pools in 1usize..6) {
        let (mut rng, f) = instance(seed);
        for g in random_chain(&mut rng, &f, pools) {
            prop_assert!((g.mean() - f.mean()).abs() < TOL);
            prop_assert!(g.is_mpc_of(&f, MPC_TOL).unwrap());
        }
    }

    #[test]
    fn quantile_inverts_cdf(seed in any::<u64>(), u in 0.001f64..0.999) {
        let (mut rng, f) = instance(seed);
        let g = random_chain(&mut rng, &f, 2).pop().unwrap();
        let x = g.quantile(u);
        prop_assert!(g.cdf(x) >= u - 1e-9);
        prop_assert!(g.cdf_left(x) <= u + 1e-9);
    }

    #[test]
    fn threshold_solves_its_equation_and_grows_with_cost(seed in any::<u64>(), c in 0.001f64..0.3, dc in 0.001f64..0.2) {
        let (mut rng, f) = instance(seed);
        let g = random_chain(&mut rng, &f, 3).pop().unwrap();
        let s = solve_threshold(&g, c).unwrap().s_star;
        prop_assert!((g.integral_cdf(s) - c).abs() < 1e-9);
        let s2 = solve_threshold(&g, c + dc).unwrap().s_star;
        prop_assert!(s2 > s);
        let t = solve_threshold(&f, c).unwrap().s_star;
        prop_assert!(s >= t - TOL);
        prop_assert!(t - c <= f.mean() + TOL);
    }

    #[test]
    fn low_mean_keeps_threshold_below_reserve(seed in any::<u64>(), c in 0.001f64..0.3, shift in 0.0f64..0.5) {
        let (mut rng, f) = instance(seed);
        let r = f.mean() + shift + 1e-6;
        for g in random_chain(&mut rng, &f, 4) {
            let s = solve_threshold(&g, c).unwrap().s_star;
            prop_assert!(s - c < r + TOL);
        }
    }

    #[test]
    fn agent_optimal_designs_are_principal_worst(seed in any::<u64>(), c in 0.01f64..0.2, frac in 0.0f64..1.0) {
        let (_, f) = instance(seed);
        let r = f.mean() + frac * (f.hi() - c - f.mean());
        prop_assume!(r < f.hi() - c - 1e-6 && r > f.mean() + 1e-9);
        let g = agent_optimal_info(&f, r, c).unwrap();
        prop_assert!(g.is_mpc_of(&f, MPC_TOL).unwrap());
        prop_assert!(is_agent_optimal(&g, &f, r, c).unwrap());
        prop_assert!(is_principal_worst(&g, &f, r, c).unwrap());
        let y_ao = principal_payoff(&g, r, c).unwrap();
        let y_pw = principal_payoff(&principal_worst_info(&f), r, c).unwrap();
        prop_assert!((y_ao - y_pw).abs() < TOL);
        prop_assert!(principal_optimal_info(&f).is_mpc_of(&f, MPC_TOL).unwrap());
    }

    #[test]
    fn chosen_mechanism_dominates_and_is_indifferent_at_the_boundary(seed in any::<u64>(), c in 0.001f64..0.3, pools in 0usize..4) {
        let (mut rng, f) = instance(seed);
        let g = random_chain(&mut rng, &f, pools).pop().unwrap();
        let s = solve_threshold(&g, c).unwrap().s_star;
        let r = rng.random_range(f.lo()..f.hi());
        let always = g.mean() - r;
        let check = g.upper_partial_expectation(r + c);
        match optimal_mechanism(&g, r, c).unwrap().kind {
            MechanismKind::AllocateAlways => prop_assert!(always >= check - TOL),
            MechanismKind::CheckAboveCutoff { .. } => prop_assert!(check >= always - TOL),
        }
        let r0 = s - c;
        prop_assert!((g.mean() - r0 - g.upper_partial_expectation(r0 + c)).abs() < TOL);
    }

    #[test]
    fn robust_mechanism_worst_case_is_null_information(seed in any::<u64>(), c in 0.01f64..0.2, pools in 0usize..4) {
        let (mut rng, f) = instance(seed);
        let r = rng.random_range(f.lo()..f.hi());
        let robust = robust_mechanism(f.mean(), r, c).unwrap();
        let worst = robust.payoff_under(&Distribution::point_mass(f.mean()));
        prop_assert!((worst - (f.mean() - r).max(0.0)).abs() < TOL);
        for g in random_chain(&mut rng, &f, pools) {
            prop_assert!(robust.payoff_under(&g) >= worst - TOL);
            prop_assert!(principal_payoff(&g, r, c).unwrap() >= robust.payoff_under(&g) - TOL);
        }
    }

    #[test]
    fn full_information_beats_pooled_profiles(seed in any::<u64>(), n in 1usize..4, c in 0.01f64..0.2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let agents: Vec<Agent> = (0..n).map(|_| Agent { prior: random_prior(&mut rng), cost: c }).collect();
        let r = rng.random_range(0.0..1.0);
        let sc = Scenario::new(r, agents).unwrap();
        let full = principal_payoff_multi(&sc, &sc.priors(), TieRule::EqualSplit).unwrap();
        let perturbed: Vec<Distribution> =
            sc.priors().iter().map(|f| random_chain(&mut rng, f, 2).pop().unwrap()).collect();
        let pooled = principal_payoff_multi(&sc, &perturbed, TieRule::EqualSplit).unwrap();
        prop_assert!(full >= pooled - TOL, "full {full} < pooled {pooled}");
        let w = evaluate_fam(&sc, &perturbed, TieRule::EqualSplit).unwrap().win_probs;
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

/// Monte Carlo check: conditional on nobody else reaching `v*`, the favored
/// agent's expected value is no higher than the expected best net value on
/// the complementary event.
#[test]
fn favored_value_is_dominated_by_checked_value() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..12 {
        let n = rng.random_range(2..=3);
        let c = rng.random_range(0.01..0.2);
        let agents: Vec<Agent> = (0..n)
            .map(|_| Agent {
                prior: random_prior(&mut rng),
                cost: c,
            })
            .collect();
        let sc = Scenario::new(rng.random_range(0.0..0.8), agents).unwrap();
        let profile: Vec<Distribution> = sc
            .priors()
            .iter()
            .map(|f| random_chain(&mut rng, f, 2).pop().unwrap())
            .collect();
        let m = favored_agent_mechanism(&sc, &profile, TieRule::LowestIndex).unwrap();
        if m.favored == 0 {
            continue;
        }
        let f = m.favored - 1;
        let (mut below_n, mut above, mut above_sq, mut above_n) = (0u64, 0.0, 0.0, 0u64);
        for _ in 0..100_000 {
            let s: Vec<f64> = profile.iter().map(|g| g.sample(&mut rng)).collect();
            let others_above = (0..n).any(|j| j != f && s[j] - c >= m.v_star);
            if others_above {
                let best = s.iter().map(|x| x - c).fold(f64::NEG_INFINITY, f64::max);
                above += best;
                above_sq += best * best;
                above_n += 1;
            } else {
                below_n += 1;
            }
        }
        if below_n == 0 || above_n < 1000 {
            continue;
        }
        // Signals are independent, so conditioning leaves the favored mean unchanged.
        let lhs = profile[f].mean();
        let rhs = above / above_n as f64;
        let sd = ((above_sq / above_n as f64 - rhs * rhs).max(0.0) / above_n as f64).sqrt();
        assert!(lhs <= rhs + 4.0 * sd + 1e-9, "{lhs} > {rhs} (sd {sd})");
    }
}

#[test]
fn samples_follow_the_distribution() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let f = random_prior(&mut rng);
        let g = random_chain(&mut rng, &f, 2).pop().unwrap();
        let xs: Vec<f64> = (0..100_000).map(|_| g.sample(&mut rng)).collect();
        let d = ks_statistic(xs, |x| g.cdf(x), |x| g.cdf_left(x));
        assert!(d < 0.01, "KS statistic {d}");
    }
}

#[test]
fn exact_evaluation_matches_simulation() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for case in 0..16 {
        let n = rng.random_range(1..=4);
        let agents: Vec<Agent> = (0..n)
            .map(|_| Agent {
                prior: random_prior(&mut rng),
                cost: rng.random_range(0.01..0.25),
            })
            .collect();
        let sc = Scenario::new(rng.random_range(0.0..1.0), agents).unwrap();
        let profile: Vec<Distribution> = sc
            .priors()
            .iter()
            .map(|f| random_chain(&mut rng, f, 2).pop().unwrap())
            .collect();
        for rule in [TieRule::EqualSplit, TieRule::LowestIndex] {
            let exact = evaluate_fam(&sc, &profile, rule).unwrap();
            let est = costly_alloc::montecarlo::simulate(&sc, &profile, rule, 200_000, case, 0).unwrap();
            assert!(
                (exact.gross_payoff - est.payoff).abs() <= 5.0 * est.payoff_stderr + 1e-9,
                "case {case}: exact {} vs simulated {} ± {}",
                exact.gross_payoff,
                est.payoff,
                est.payoff_stderr
            );
            for (p, (e, se)) in exact
                .win_probs
                .iter()
                .zip(est.win_prob.iter().zip(&est.win_prob_stderr))
            {
                assert!((p - e).abs() <= 5.0 * se + 1e-3, "case {case}: win {p} vs {e}");
            }
        }
    }
}
