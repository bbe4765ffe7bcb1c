//! The indifference threshold `s*`, the root of `∫_{lo}^{s*} G(s) ds = c`.

use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::poly::{bisect, Poly};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdResult {
    pub s_star: f64,
    /// `|∫ G - c|` at the returned point.
    pub residual: f64,
}

/// Solve for `s*` given a signal distribution and a checking cost.
///
/// The segment holding the root is found from the integrated CDF at the
/// breakpoints. On it the CDF is a polynomial: constant and linear pieces are
/// solved in closed form, anything else by bisection. Past the top of the
/// support the integrated CDF has slope one, so `s*` may exceed `hi`.
///
/// ```
/// use costly_alloc::dist::Distribution;
/// use costly_alloc::threshold::solve_threshold;
///
/// let f = Distribution::uniform(0.0, 1.0).unwrap();
/// assert!((solve_threshold(&f, 0.08).unwrap().s_star - 0.4).abs() < 1e-12);
/// ```
pub fn solve_threshold(g: &Distribution, c: f64) -> Result<ThresholdResult> {
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::InvalidArgument(format!("checking cost must be >= 0, got {c}")));
    }
    if c == 0.0 {
        let s_star = g.min_support();
        return Ok(ThresholdResult {
            s_star,
            residual: g.integral_cdf(s_star),
        });
    }
    let knots = g.breakpoints();
    let at_knots: Vec<f64> = knots.iter().map(|&x| g.integral_cdf(x)).collect();
    let s_star = match at_knots.iter().position(|&v| v >= c) {
        None => g.hi() + (c - g.integral_cdf(g.hi())),
        Some(0) => knots[0],
        Some(k) => solve_on_segment(g, knots[k - 1], knots[k], at_knots[k - 1], c),
    };
    Ok(ThresholdResult {
        s_star,
        residual: (g.integral_cdf(s_star) - c).abs(),
    })
}

fn solve_on_segment(g: &Distribution, x0: f64, x1: f64, base: f64, c: f64) -> f64 {
    let cdf = g.cdf_poly_on(x0, x1);
    let need = c - base;
    let root = match cdf.coeffs() {
        [p0] => x0 + need / p0,
        [_, slope] => {
            // ∫_{x0}^{x0+t} cdf = F0 t + slope t^2 / 2
            let f0 = cdf.eval(x0);
            let disc = (f0 * f0 + 2.0 * slope * need).max(0.0);
            x0 + 2.0 * need / (f0 + disc.sqrt())
        }
        _ => {
            let anti = cdf.antiderivative();
            let shifted = &anti - &Poly::constant(anti.eval(x0) + need);
            bisect(|x| shifted.eval(x), x0, x1).unwrap_or(x1)
        }
    };
    root.clamp(x0, x1)
}

/// `E_G[max(S, t)]`, handy for checking the expectation form of the threshold equation.
pub fn expected_max(g: &Distribution, t: f64) -> f64 {
    g.mean() + g.integral_cdf(t)
}
