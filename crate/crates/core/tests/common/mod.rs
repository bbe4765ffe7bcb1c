#![allow(dead_code)]

use costly_alloc::dist::Distribution;
use costly_alloc::error::Error;
use rand::Rng;

/// Piecewise-constant prior with 1 to 4 contiguous pieces of positive density.
pub fn random_prior<R: Rng>(rng: &mut R) -> Distribution {
    let k = rng.random_range(1..=4);
    let mut edges = vec![rng.random_range(0.0..0.5)];
    for _ in 0..k {
        let last = *edges.last().unwrap();
        edges.push(last + rng.random_range(0.1..0.6));
    }
    let weights: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..2.0)).collect();
    Distribution::piecewise_constant(&edges, &weights).unwrap()
}

/// `F` followed by up to `len` successive poolings of random intervals.
pub fn random_chain<R: Rng>(rng: &mut R, f: &Distribution, len: usize) -> Vec<Distribution> {
    let mut chain = vec![f.clone()];
    let (lo, hi) = (f.lo(), f.hi());
    for _ in 0..len {
        let u = rng.random_range(lo..hi);
        let v = rng.random_range(lo..hi);
        let (a, b) = if u < v { (u, v) } else { (v, u) };
        match chain.last().unwrap().pool_interval(a, b) {
            Ok(g) => chain.push(g),
            Err(Error::ZeroMass { .. }) => {}
            Err(e) => panic!("pooling ({a}, {b}) failed: {e}"),
        }
    }
    chain
}

/// Two-sided Kolmogorov–Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic(mut samples: Vec<f64>, cdf: impl Fn(f64) -> f64, cdf_left: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let above = (i as f64 + 1.0) / n - cdf(x);
            let below = cdf_left(x) - i as f64 / n;
            above.max(below)
        })
        .fold(0.0, f64::max)
}
