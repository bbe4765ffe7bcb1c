//! Dense two-phase tableau simplex for small linear programs.
//!
//! Maximises `c·x` over `x ≥ 0` subject to `≤`, `≥` and `=` rows. Entering
//! columns are chosen by largest reduced cost; after a run of degenerate
//! pivots the rule switches to Bland's smallest-index choice until the
//! objective moves again, which rules out cycling.

const EPS: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;
const STALL_LIMIT: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// The iteration budget ran out (degenerate stalling).
    Degenerate,
}

/// Sparse coefficients, relation and right-hand side of one constraint.
pub type Row = (Vec<(usize, f64)>, Relation, f64);

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    n_vars: usize,
    objective: Vec<f64>,
    rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpResult {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub value: f64,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        LinearProgram {
            n_vars: objective.len(),
            objective,
            rows: Vec::new(),
        }
    }

    /// Add `Σ coeff·x_j (rel) rhs` from sparse `(j, coeff)` terms.
    pub fn constrain(&mut self, terms: Vec<(usize, f64)>, rel: Relation, rhs: f64) {
        debug_assert!(terms.iter().all(|&(j, _)| j < self.n_vars));
        self.rows.push((terms, rel, rhs));
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn maximize(&self) -> LpResult {
        Tableau::build(self).solve(&self.objective)
    }
}

struct Tableau {
    m: usize,
    n_vars: usize,
    n_cols: usize,
    artificial_start: usize,
    width: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Tableau {
        let m = lp.rows.len();
        // Normalise to non-negative right-hand sides.
        let rows: Vec<Row> = lp
            .rows
            .iter()
            .map(|(terms, rel, rhs)| {
                if *rhs < 0.0 {
                    let flipped = match rel {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    (terms.iter().map(|&(j, a)| (j, -a)).collect(), flipped, -rhs)
                } else {
                    (terms.clone(), *rel, *rhs)
                }
            })
            .collect();
        let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let n_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
        let artificial_start = lp.n_vars + n_slack;
        let n_cols = artificial_start + n_art;
        let width = n_cols + 1;
        let mut data = vec![0.0; m * width];
        let mut basis = vec![0; m];
        let (mut slack, mut art) = (lp.n_vars, artificial_start);
        for (i, (terms, rel, rhs)) in rows.iter().enumerate() {
            let row = &mut data[i * width..(i + 1) * width];
            for &(j, a) in terms {
                row[j] += a;
            }
            row[n_cols] = *rhs;
            match rel {
                Relation::Le => {
                    row[slack] = 1.0;
                    basis[i] = slack;
                    slack += 1;
                }
                Relation::Ge => {
                    row[slack] = -1.0;
                    slack += 1;
                    row[art] = 1.0;
                    basis[i] = art;
                    art += 1;
                }
                Relation::Eq => {
                    row[art] = 1.0;
                    basis[i] = art;
                    art += 1;
                }
            }
        }
        Tableau {
            m,
            n_vars: lp.n_vars,
            n_cols,
            artificial_start,
            width,
            data,
            basis,
        }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.n_cols)
    }

    /// Reduced-cost row for column costs `cost`, with the objective value last.
    fn pricing_row(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = vec![0.0; self.width];
        d[..self.n_cols].copy_from_slice(&cost[..self.n_cols]);
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.data[i * self.width..(i + 1) * self.width];
                for (dj, &a) in d.iter_mut().zip(row) {
                    *dj -= cb * a;
                }
            }
        }
        d
    }

    fn pivot(&mut self, r: usize, col: usize, d: &mut [f64]) {
        let w = self.width;
        let inv = 1.0 / self.at(r, col);
        for v in &mut self.data[r * w..(r + 1) * w] {
            *v *= inv;
        }
        self.data[r * w + col] = 1.0;
        let nz: Vec<usize> = (0..w).filter(|&j| self.data[r * w + j] != 0.0).collect();
        let pivot_row: Vec<f64> = nz.iter().map(|&j| self.data[r * w + j]).collect();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let factor = self.data[i * w + col];
            if factor == 0.0 {
                continue;
            }
            let row = &mut self.data[i * w..(i + 1) * w];
            for (&j, &a) in nz.iter().zip(&pivot_row) {
                row[j] -= factor * a;
            }
            row[col] = 0.0;
        }
        let factor = d[col];
        if factor != 0.0 {
            for (&j, &a) in nz.iter().zip(&pivot_row) {
                d[j] -= factor * a;
            }
            d[col] = 0.0;
        }
        self.basis[r] = col;
    }

    /// Run simplex iterations on the columns below `limit`.
    fn optimize(&mut self, d: &mut [f64], limit: usize) -> LpStatus {
        let max_iter = 50 * (self.m + self.n_cols) + 1000;
        let mut stalled = 0;
        for _ in 0..max_iter {
            let bland = stalled >= STALL_LIMIT;
            let entering = if bland {
                (0..limit).find(|&j| d[j] > EPS)
            } else {
                (0..limit)
                    .filter(|&j| d[j] > EPS)
                    .max_by(|&a, &b| d[a].total_cmp(&d[b]).then(b.cmp(&a)))
            };
            let Some(col) = entering else {
                return LpStatus::Optimal;
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let a = self.at(i, col);
                if a > EPS {
                    let ratio = self.rhs(i) / a;
                    let better = match leave {
                        None => true,
                        Some((k, best)) => ratio < best - EPS || (ratio <= best + EPS && self.basis[i] < self.basis[k]),
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, ratio)) = leave else {
                return LpStatus::Unbounded;
            };
            if ratio.abs() <= EPS {
                stalled += 1;
            } else {
                stalled = 0;
            }
            self.pivot(r, col, d);
        }
        LpStatus::Degenerate
    }

    fn solve(mut self, objective: &[f64]) -> LpResult {
        let fail = |status| LpResult {
            status,
            x: Vec::new(),
            value: f64::NAN,
        };
        if self.artificial_start < self.n_cols {
            let mut phase1 = vec![0.0; self.n_cols];
            for c in &mut phase1[self.artificial_start..] {
                *c = -1.0;
            }
            let mut d = self.pricing_row(&phase1);
            match self.optimize(&mut d, self.n_cols) {
                LpStatus::Optimal => {}
                other => return fail(other),
            }
            let infeasibility: f64 = (0..self.m)
                .filter(|&i| self.basis[i] >= self.artificial_start)
                .map(|i| self.rhs(i))
                .sum();
            if infeasibility > FEAS_TOL {
                return fail(LpStatus::Infeasible);
            }
            // Drive zero-level artificials out of the basis where possible.
            for i in 0..self.m {
                if self.basis[i] >= self.artificial_start {
                    if let Some(col) = (0..self.artificial_start).find(|&j| self.at(i, j).abs() > 1e-9) {
                        self.pivot(i, col, &mut d);
                    }
                }
            }
        }
        let mut cost = vec![0.0; self.n_cols];
        cost[..self.n_vars].copy_from_slice(objective);
        let mut d = self.pricing_row(&cost);
        let status = self.optimize(&mut d, self.artificial_start);
        if status != LpStatus::Optimal {
            return fail(status);
        }
        let mut x = vec![0.0; self.n_vars];
        for i in 0..self.m {
            if self.basis[i] < self.n_vars {
                x[self.basis[i]] = self.rhs(i);
            }
        }
        let value = x.iter().zip(objective).map(|(a, b)| a * b).sum();
        LpResult { status, x, value }
    }
}
