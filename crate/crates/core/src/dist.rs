//! Mixed one-dimensional distributions: finitely many atoms plus a
//! piecewise-polynomial density of degree at most three.
//!
//! Every quantity the rest of the crate needs (CDF, left limits, the
//! integrated CDF, conditional means, pooling) is evaluated in closed form
//! from the polynomial pieces. The integrated CDF is computed as
//! `E[(x - S)^+]`, which extends with slope one past the top of the support.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{bisect, Poly};

/// Tolerance on total mass and on `CDF(hi) = 1`.
pub const MASS_TOL: f64 = 1e-12;

/// Default tolerance of the mean-preserving-contraction test.
pub const MPC_TOL: f64 = 1e-9;

/// A point mass of a [`Distribution`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub loc: f64,
    pub mass: f64,
}

/// Polynomial density `c0 + c1 s + c2 s^2 + c3 s^3` on `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub a: f64,
    pub b: f64,
    pub density: [f64; 4],
}

impl Piece {
    pub fn density_poly(&self) -> Poly {
        Poly::new(self.density.to_vec())
    }

    fn clip(&self, x0: f64, x1: f64) -> Option<(f64, f64)> {
        let l = self.a.max(x0);
        let r = self.b.min(x1);
        (l < r).then_some((l, r))
    }

    /// `∫ s^k f(s) ds` over `[x0, x1] ∩ [a, b]`.
    fn moment(&self, k: i32, x0: f64, x1: f64) -> f64 {
        let Some((l, r)) = self.clip(x0, x1) else {
            return 0.0;
        };
        self.density
            .iter()
            .enumerate()
            .map(|(j, &c)| {
                let p = j as i32 + k + 1;
                c * (r.powi(p) - l.powi(p)) / p as f64
            })
            .sum()
    }

    pub fn mass(&self) -> f64 {
        self.moment(0, self.a, self.b)
    }

    fn min_density(&self) -> f64 {
        let poly = self.density_poly();
        let mut lowest = poly.eval(self.a).min(poly.eval(self.b));
        for r in poly.derivative().real_roots_in(self.a, self.b) {
            lowest = lowest.min(poly.eval(r));
        }
        lowest
    }

    /// Smallest `x` in `[a, b]` with `∫_a^x f = target`.
    fn solve_partial_mass(&self, target: f64) -> f64 {
        let [c0, c1, c2, c3] = self.density;
        if c1 == 0.0 && c2 == 0.0 && c3 == 0.0 && c0 > 0.0 {
            return (self.a + target / c0).min(self.b);
        }
        let g = |x: f64| self.moment(0, self.a, x) - target;
        bisect(g, self.a, self.b).unwrap_or(self.b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Segment {
    Atom(Atom),
    Piece(Piece),
}

/// Serialized form: `{lo, hi, atoms: [[loc, mass]], pieces: [[a, b, [c0, c1, c2, c3]]]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionRecord {
    pub lo: f64,
    pub hi: f64,
    #[serde(default)]
    pub atoms: Vec<(f64, f64)>,
    #[serde(default)]
    pub pieces: Vec<(f64, f64, [f64; 4])>,
}

/// An immutable, validated mixed distribution on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistributionRecord", into = "DistributionRecord")]
pub struct Distribution {
    lo: f64,
    hi: f64,
    atoms: Vec<Atom>,
    pieces: Vec<Piece>,
    // Atoms and pieces in location order with the cumulative mass before each.
    segments: Vec<(f64, Segment)>,
}

impl TryFrom<DistributionRecord> for Distribution {
    type Error = Error;
    fn try_from(r: DistributionRecord) -> Result<Self> {
        Distribution::new(r.lo, r.hi, r.atoms, r.pieces)
    }
}

impl From<Distribution> for DistributionRecord {
    fn from(d: Distribution) -> Self {
        DistributionRecord {
            lo: d.lo,
            hi: d.hi,
            atoms: d.atoms.iter().map(|a| (a.loc, a.mass)).collect(),
            pieces: d.pieces.iter().map(|p| (p.a, p.b, p.density)).collect(),
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidDistribution(msg.into())
}

impl Distribution {
    pub fn new(lo: f64, hi: f64, atoms: Vec<(f64, f64)>, pieces: Vec<(f64, f64, [f64; 4])>) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            return Err(invalid(format!("support bounds [{lo}, {hi}]")));
        }
        if lo == hi && !pieces.is_empty() {
            return Err(invalid("degenerate support cannot carry a density"));
        }
        let atoms: Vec<Atom> = atoms.into_iter().map(|(loc, mass)| Atom { loc, mass }).collect();
        for (i, atom) in atoms.iter().enumerate() {
            if !atom.loc.is_finite() || atom.loc < lo || atom.loc > hi {
                return Err(invalid(format!("atom {i} at {} outside [{lo}, {hi}]", atom.loc)));
            }
            if !(atom.mass > 0.0 && atom.mass <= 1.0) {
                return Err(invalid(format!("atom {i} has mass {}", atom.mass)));
            }
            if i > 0 && atoms[i - 1].loc >= atom.loc {
                return Err(invalid("atom locations must be strictly increasing"));
            }
        }
        let pieces: Vec<Piece> = pieces
            .into_iter()
            .map(|(a, b, density)| Piece { a, b, density })
            .collect();
        for (i, piece) in pieces.iter().enumerate() {
            if !(piece.a.is_finite() && piece.b.is_finite()) || piece.a >= piece.b {
                return Err(invalid(format!("piece {i} has bounds [{}, {}]", piece.a, piece.b)));
            }
            if piece.a < lo || piece.b > hi {
                return Err(invalid(format!("piece {i} outside [{lo}, {hi}]")));
            }
            if piece.density.iter().any(|c| !c.is_finite()) {
                return Err(invalid(format!("piece {i} has non-finite coefficients")));
            }
            if i > 0 && pieces[i - 1].b > piece.a {
                return Err(invalid("pieces must be increasing and disjoint"));
            }
            if piece.min_density() < -MASS_TOL {
                return Err(invalid(format!("piece {i} has negative density")));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.mass).sum::<f64>() + pieces.iter().map(Piece::mass).sum::<f64>();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(invalid(format!("total mass {} is not 1", total + 0.0)));
        }
        let segments = build_segments(&atoms, &pieces);
        Ok(Distribution {
            lo,
            hi,
            atoms,
            pieces,
            segments,
        })
    }

    /// Uniform distribution on `[a, b]`.
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        if !(a < b) {
            return Err(Error::InvalidArgument(format!("uniform needs a < b, got [{a}, {b}]")));
        }
        Distribution::new(a, b, vec![], vec![(a, b, [1.0 / (b - a), 0.0, 0.0, 0.0])])
    }

    /// Degenerate distribution at `x` (null information when `x` is a prior mean).
    pub fn point_mass(x: f64) -> Self {
        Distribution::new(x, x, vec![(x, 1.0)], vec![]).expect("finite point mass")
    }

    /// Piecewise-constant density with the given cell edges and weights; the
    /// weights are normalised to total mass one.
    pub fn piecewise_constant(edges: &[f64], weights: &[f64]) -> Result<Self> {
        if edges.len() != weights.len() + 1 || weights.is_empty() {
            return Err(Error::InvalidArgument("need one more edge than weight".into()));
        }
        let total: f64 = weights
            .iter()
            .zip(edges.windows(2))
            .map(|(w, e)| w * (e[1] - e[0]))
            .sum();
        if !(total > 0.0) {
            return Err(Error::InvalidArgument("weights carry no mass".into()));
        }
        let pieces = weights
            .iter()
            .zip(edges.windows(2))
            .map(|(w, e)| (e[0], e[1], [w / total, 0.0, 0.0, 0.0]))
            .collect();
        Distribution::new(edges[0], edges[edges.len() - 1], vec![], pieces)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn record(&self) -> DistributionRecord {
        self.clone().into()
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|a| a.loc * a.mass).sum::<f64>()
            + self.pieces.iter().map(|p| p.moment(1, p.a, p.b)).sum::<f64>()
    }

    /// Smallest point of the support.
    pub fn min_support(&self) -> f64 {
        let atom = self.atoms.first().map(|a| a.loc);
        let piece = self.pieces.iter().find(|p| p.mass() > 0.0).map(|p| p.a);
        match (atom, piece) {
            (Some(x), Some(y)) => x.min(y),
            (Some(x), None) | (None, Some(x)) => x,
            (None, None) => self.lo,
        }
    }

    /// Largest point of the support.
    pub fn max_support(&self) -> f64 {
        let atom = self.atoms.last().map(|a| a.loc);
        let piece = self.pieces.iter().rev().find(|p| p.mass() > 0.0).map(|p| p.b);
        match (atom, piece) {
            (Some(x), Some(y)) => x.max(y),
            (Some(x), None) | (None, Some(x)) => x,
            (None, None) => self.hi,
        }
    }

    pub fn has_atoms(&self) -> bool {
        !self.atoms.is_empty()
    }

    /// Continuous mass on `[x0, x1]`.
    fn continuous_moment(&self, k: i32, x0: f64, x1: f64) -> f64 {
        self.pieces.iter().map(|p| p.moment(k, x0, x1)).sum()
    }

    fn atoms_where(&self, keep: impl Fn(f64) -> bool) -> impl Iterator<Item = &Atom> {
        self.atoms.iter().filter(move |a| keep(a.loc))
    }

    /// Right-continuous CDF `P(S ≤ x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x < self.lo {
            return 0.0;
        }
        if x >= self.hi {
            return 1.0;
        }
        self.continuous_moment(0, self.lo, x) + self.atoms_where(|l| l <= x).map(|a| a.mass).sum::<f64>()
    }

    /// Left limit `P(S < x)`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        if x > self.hi {
            return 1.0;
        }
        self.continuous_moment(0, self.lo, x) + self.atoms_where(|l| l < x).map(|a| a.mass).sum::<f64>()
    }

    /// Mass of the atom located within `tol` of `x` (zero if none).
    pub fn atom_mass_near(&self, x: f64, tol: f64) -> f64 {
        self.atoms_where(|l| (l - x).abs() <= tol).map(|a| a.mass).sum()
    }

    /// Continuous density at `x` (atoms excluded).
    pub fn density(&self, x: f64) -> f64 {
        self.pieces
            .iter()
            .find(|p| p.a <= x && x <= p.b)
            .map_or(0.0, |p| p.density_poly().eval(x))
    }

    /// `∫_{lo}^{x} CDF(s) ds`, equal to `E[(x - S)^+]`.
    pub fn integral_cdf(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        let atoms: f64 = self.atoms_where(|l| l < x).map(|a| a.mass * (x - a.loc)).sum();
        let continuous: f64 = self
            .pieces
            .iter()
            .map(|p| x * p.moment(0, p.a, x) - p.moment(1, p.a, x))
            .sum();
        atoms + continuous
    }

    /// `E[(S - k)^+]`.
    pub fn upper_partial_expectation(&self, k: f64) -> f64 {
        self.mean() - k + self.integral_cdf(k)
    }

    /// `(mass, first moment)` over `[a, b]` with selectable endpoint inclusion for atoms.
    fn mass_and_moment(&self, a: f64, b: f64, incl_a: bool, incl_b: bool) -> (f64, f64) {
        let inside = |l: f64| (l > a || (incl_a && l == a)) && (l < b || (incl_b && l == b));
        let (mut mass, mut moment) = (self.continuous_moment(0, a, b), self.continuous_moment(1, a, b));
        for atom in self.atoms_where(inside) {
            mass += atom.mass;
            moment += atom.mass * atom.loc;
        }
        (mass, moment)
    }

    /// Probability of `[a, b]`, atoms at both ends included.
    pub fn mass_in(&self, a: f64, b: f64) -> f64 {
        self.mass_and_moment(a, b, true, true).0
    }

    /// `E[S | S ∈ [a, b]]`, atoms at both endpoints included.
    pub fn conditional_mean(&self, a: f64, b: f64) -> Result<f64> {
        let (mass, moment) = self.mass_and_moment(a, b, true, true);
        if !(mass > 0.0) {
            return Err(Error::ZeroMass { a, b });
        }
        Ok(moment / mass)
    }

    /// Replace the mass of the open interval `(a, b)` by one atom at its
    /// conditional mean. The result is a mean-preserving contraction.
    pub fn pool_interval(&self, a: f64, b: f64) -> Result<Distribution> {
        if !(a < b) {
            return Err(Error::InvalidArgument(format!("pooling interval ({a}, {b}) is empty")));
        }
        self.pool_range(a, b, false, false, None)
    }

    /// Pool `[a, b]` (endpoints per the flags) into one atom, optionally
    /// pinned to `loc` instead of the computed conditional mean.
    pub(crate) fn pool_range(
        &self,
        a: f64,
        b: f64,
        incl_a: bool,
        incl_b: bool,
        loc: Option<f64>,
    ) -> Result<Distribution> {
        let (mass, moment) = self.mass_and_moment(a, b, incl_a, incl_b);
        if !(mass > 0.0) {
            return Err(Error::ZeroMass { a, b });
        }
        let center = loc.unwrap_or(moment / mass);
        let inside = |l: f64| (l > a || (incl_a && l == a)) && (l < b || (incl_b && l == b));
        let mut atoms: Vec<(f64, f64)> = self
            .atoms
            .iter()
            .filter(|at| !inside(at.loc))
            .map(|at| (at.loc, at.mass))
            .collect();
        match atoms.iter_mut().find(|(l, _)| *l == center) {
            Some(existing) => existing.1 += mass,
            None => atoms.push((center, mass)),
        }
        atoms.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut pieces = Vec::new();
        for p in &self.pieces {
            if p.a < a {
                pieces.push((p.a, p.b.min(a), p.density));
            }
            if p.b > b {
                pieces.push((p.a.max(b), p.b, p.density));
            }
        }
        Distribution::new(self.lo, self.hi, atoms, pieces)
    }

    /// Every location where the CDF or its polynomial representation changes.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts = vec![self.lo, self.hi];
        pts.extend(self.atoms.iter().map(|a| a.loc));
        for p in &self.pieces {
            pts.push(p.a);
            pts.push(p.b);
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// The CDF restricted to an open interval `(x0, x1)` that contains no
    /// breakpoint, as a polynomial in `x`.
    pub(crate) fn cdf_poly_on(&self, x0: f64, x1: f64) -> Poly {
        let mid = 0.5 * (x0 + x1);
        if mid < self.lo {
            return Poly::zero();
        }
        if mid > self.hi {
            return Poly::constant(1.0);
        }
        let base = self.continuous_moment(0, self.lo, x0) + self.atoms_where(|l| l <= x0).map(|a| a.mass).sum::<f64>();
        match self.pieces.iter().find(|p| p.a <= mid && mid <= p.b) {
            Some(p) => {
                let anti = p.density_poly().antiderivative();
                let offset = base - anti.eval(x0);
                &anti + &Poly::constant(offset)
            }
            None => Poly::constant(base),
        }
    }

    /// The density restricted to an open interval without breakpoints.
    pub(crate) fn density_poly_on(&self, x0: f64, x1: f64) -> Poly {
        let mid = 0.5 * (x0 + x1);
        self.pieces
            .iter()
            .find(|p| p.a <= mid && mid <= p.b)
            .map_or_else(Poly::zero, Piece::density_poly)
    }

    /// Generalised inverse `inf {x : CDF(x) > u}` for `u ∈ [0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        let idx = self.segments.partition_point(|(cum, seg)| cum + seg_mass(seg) <= u);
        match self.segments.get(idx) {
            Some((cum, Segment::Atom(a))) => {
                let _ = cum;
                a.loc
            }
            Some((cum, Segment::Piece(p))) => p.solve_partial_mass(u - cum),
            None => self.max_support(),
        }
    }

    /// One inverse-CDF draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }

    /// Finite instance: continuous mass of each of `n` equal cells on
    /// `[lo, hi]` sits at the cell's conditional mean, atoms stay as points.
    pub fn discretize(&self, n: usize) -> Result<DiscreteInstance> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("discretize needs n >= 2, got {n}")));
        }
        let mut pts: Vec<(f64, f64)> = self.atoms.iter().map(|a| (a.loc, a.mass)).collect();
        if !self.pieces.is_empty() {
            let width = (self.hi - self.lo) / n as f64;
            for i in 0..n {
                let x0 = self.lo + width * i as f64;
                let x1 = if i + 1 == n {
                    self.hi
                } else {
                    self.lo + width * (i + 1) as f64
                };
                let mass = self.continuous_moment(0, x0, x1);
                if mass > 0.0 {
                    let center = self.continuous_moment(1, x0, x1) / mass;
                    pts.push((center.clamp(x0, x1), mass));
                }
            }
        }
        pts.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut points: Vec<f64> = Vec::with_capacity(pts.len());
        let mut masses: Vec<f64> = Vec::with_capacity(pts.len());
        for (x, m) in pts {
            if points.last() == Some(&x) {
                *masses.last_mut().unwrap() += m;
            } else {
                points.push(x);
                masses.push(m);
            }
        }
        DiscreteInstance::new(points, masses)
    }

    /// Whether `self` is a mean-preserving contraction of `prior`: the
    /// integrated CDF never exceeds the prior's (up to `tol`) and the two
    /// agree at the top of the common support.
    pub fn is_mpc_of(&self, prior: &Distribution, tol: f64) -> Result<bool> {
        let g_in_f = self.lo >= prior.lo && self.hi <= prior.hi;
        let f_in_g = prior.lo >= self.lo && prior.hi <= self.hi;
        if !g_in_f && !f_in_g {
            return Err(Error::SupportsNotNested(self.lo, self.hi, prior.lo, prior.hi));
        }
        let gap = |x: f64| self.integral_cdf(x) - prior.integral_cdf(x);
        let mut knots = self.breakpoints();
        knots.extend(prior.breakpoints());
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let mut candidates = knots.clone();
        for w in knots.windows(2) {
            let diff = &self.cdf_poly_on(w[0], w[1]) - &prior.cdf_poly_on(w[0], w[1]);
            candidates.extend(diff.real_roots_in(w[0], w[1]));
        }
        if candidates.iter().any(|&x| gap(x) > tol) {
            return Ok(false);
        }
        let top = self.hi.max(prior.hi);
        Ok(gap(top).abs() <= tol)
    }
}

fn seg_mass(seg: &Segment) -> f64 {
    match seg {
        Segment::Atom(a) => a.mass,
        Segment::Piece(p) => p.mass(),
    }
}

fn build_segments(atoms: &[Atom], pieces: &[Piece]) -> Vec<(f64, Segment)> {
    // Split pieces at interior atoms so every segment is ordered by location.
    let mut segs: Vec<(f64, u8, Segment)> = atoms.iter().map(|a| (a.loc, 0, Segment::Atom(*a))).collect();
    for p in pieces {
        let mut cuts = vec![p.a];
        cuts.extend(atoms.iter().map(|a| a.loc).filter(|&l| l > p.a && l < p.b));
        cuts.push(p.b);
        for w in cuts.windows(2) {
            let sub = Piece {
                a: w[0],
                b: w[1],
                density: p.density,
            };
            segs.push((w[0], 1, Segment::Piece(sub)));
        }
    }
    // At equal locations an atom comes before a piece that starts there.
    segs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let mut cum = 0.0;
    segs.into_iter()
        .map(|(_, _, seg)| {
            let start = cum;
            cum += seg_mass(&seg);
            (start, seg)
        })
        .collect()
}

/// A finite type grid with probability masses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteInstance {
    pub points: Vec<f64>,
    pub masses: Vec<f64>,
}

impl DiscreteInstance {
    pub fn new(points: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        if points.len() != masses.len() || points.is_empty() {
            return Err(Error::InvalidInstance(format!(
                "{} points but {} masses",
                points.len(),
                masses.len()
            )));
        }
        if points.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidInstance("points must be strictly increasing".into()));
        }
        if masses.iter().any(|&m| !(m >= 0.0)) {
            return Err(Error::InvalidInstance("masses must be non-negative".into()));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidInstance(format!("masses sum to {total}")));
        }
        Ok(DiscreteInstance { points, masses })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.points.iter().zip(&self.masses).map(|(x, m)| x * m).sum()
    }

    /// Same instance with `x` added as a zero-mass grid point (no-op if present).
    pub fn with_point(&self, x: f64) -> DiscreteInstance {
        if self.points.contains(&x) {
            return self.clone();
        }
        let idx = self.points.partition_point(|&p| p < x);
        let mut points = self.points.clone();
        let mut masses = self.masses.clone();
        points.insert(idx, x);
        masses.insert(idx, 0.0);
        DiscreteInstance { points, masses }
    }

    /// The instance as a purely atomic [`Distribution`].
    pub fn to_distribution(&self) -> Result<Distribution> {
        let atoms = self
            .points
            .iter()
            .zip(&self.masses)
            .filter(|(_, &m)| m > 0.0)
            .map(|(&x, &m)| (x, m))
            .collect();
        Distribution::new(self.points[0], self.points[self.points.len() - 1], atoms, vec![])
    }
}
