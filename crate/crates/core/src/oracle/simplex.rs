//! Dense two-phase simplex over exact rationals.
//!
//! Bland's rule is used for both entering and leaving variables, so the
//! method terminates on degenerate problems. Every row receives an
//! artificial column; those columns start as the identity and therefore hold
//! `B^-1` at the end, which is what dual extraction reads.

use crate::error::{Error, Result};
use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Ge,
    Le,
    Eq,
}

#[derive(Debug, Clone)]
pub struct LinearConstraint {
    pub coeffs: Vec<(usize, Rational)>,
    pub relation: Relation,
    pub rhs: Rational,
}

/// `min c·v` subject to the constraints; `nonneg[j]` marks `v_j >= 0`,
/// otherwise `v_j` is free.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub num_vars: usize,
    pub objective: Vec<Rational>,
    pub constraints: Vec<LinearConstraint>,
    pub nonneg: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub values: Vec<Rational>,
    pub objective: Rational,
    /// One dual value per constraint, for the minimisation convention:
    /// `>=` rows have non-negative duals, `<=` rows non-positive.
    pub duals: Vec<Rational>,
}

impl LpProblem {
    pub fn new(num_vars: usize) -> Self {
        LpProblem {
            num_vars,
            objective: vec![Rational::zero(); num_vars],
            constraints: Vec::new(),
            nonneg: vec![true; num_vars],
        }
    }

    pub fn add(&mut self, coeffs: Vec<(usize, Rational)>, relation: Relation, rhs: Rational) {
        self.constraints.push(LinearConstraint {
            coeffs,
            relation,
            rhs,
        });
    }

    fn check(&self) -> Result<()> {
        if self.objective.len() != self.num_vars || self.nonneg.len() != self.num_vars {
            return Err(Error::Lp("objective or sign vector has the wrong length".into()));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if let Some((j, _)) = c.coeffs.iter().find(|(j, _)| *j >= self.num_vars) {
                return Err(Error::Lp(format!("row {i} references unknown variable {j}")));
            }
        }
        Ok(())
    }

    pub fn solve(&self) -> Result<LpSolution> {
        self.check()?;
        let m = self.constraints.len();

        // Column layout: structural (free vars split), one slack per
        // inequality, one artificial per row, then the rhs.
        let mut struct_cols = Vec::with_capacity(self.num_vars);
        let mut ncols = 0;
        for j in 0..self.num_vars {
            let pos = ncols;
            ncols += 1;
            let neg = if self.nonneg[j] {
                None
            } else {
                ncols += 1;
                Some(pos + 1)
            };
            struct_cols.push((pos, neg));
        }
        let mut slack_col = vec![None; m];
        for (i, c) in self.constraints.iter().enumerate() {
            if c.relation != Relation::Eq {
                slack_col[i] = Some(ncols);
                ncols += 1;
            }
        }
        let art_start = ncols;
        ncols += m;
        let width = ncols + 1;

        let mut rows = vec![vec![Rational::zero(); width]; m];
        let mut flipped = vec![false; m];
        for (i, c) in self.constraints.iter().enumerate() {
            let row = &mut rows[i];
            for (j, a) in &c.coeffs {
                let (pos, neg) = struct_cols[*j];
                row[pos] += a;
                if let Some(neg) = neg {
                    row[neg] -= a;
                }
            }
            if let Some(s) = slack_col[i] {
                row[s] = match c.relation {
                    Relation::Le => Rational::one(),
                    _ => -Rational::one(),
                };
            }
            row[width - 1] = c.rhs.clone();
            if c.rhs.is_negative() {
                flipped[i] = true;
                for v in row.iter_mut() {
                    *v = -&*v;
                }
            }
            row[art_start + i] = Rational::one();
        }

        let mut tab = Tableau {
            rows,
            cost: vec![Rational::zero(); width],
            basis: (art_start..art_start + m).collect(),
        };

        // Phase 1: minimise the sum of artificials.
        for row in &tab.rows {
            for (j, v) in row.iter().enumerate() {
                if j < art_start || j == width - 1 {
                    tab.cost[j] -= v;
                }
            }
        }
        tab.run(|j| j < ncols)?;
        if !tab.cost[width - 1].is_zero() {
            return Err(Error::Lp("infeasible".into()));
        }
        // Drive zero-level artificials out of the basis where possible.
        for r in 0..m {
            if tab.basis[r] >= art_start {
                if let Some(c) = (0..art_start).find(|&c| !tab.rows[r][c].is_zero()) {
                    tab.pivot(r, c);
                }
            }
        }

        // Phase 2 with the real costs.
        let mut costs = vec![Rational::zero(); width];
        for j in 0..self.num_vars {
            let (pos, neg) = struct_cols[j];
            costs[pos] = self.objective[j].clone();
            if let Some(neg) = neg {
                costs[neg] = -&self.objective[j];
            }
        }
        tab.cost = costs.clone();
        for r in 0..m {
            let cb = costs[tab.basis[r]].clone();
            if cb.is_zero() {
                continue;
            }
            for j in 0..width {
                let delta = &cb * &tab.rows[r][j];
                tab.cost[j] -= delta;
            }
        }
        tab.run(|j| j < art_start).map_err(|e| match e {
            Error::Lp(_) => Error::Lp("unbounded".into()),
            other => other,
        })?;

        let mut column_values = vec![Rational::zero(); ncols];
        for (r, &b) in tab.basis.iter().enumerate() {
            column_values[b] = tab.rows[r][width - 1].clone();
        }
        let values: Vec<Rational> = struct_cols
            .iter()
            .map(|&(pos, neg)| match neg {
                Some(neg) => &column_values[pos] - &column_values[neg],
                None => column_values[pos].clone(),
            })
            .collect();
        let objective = values
            .iter()
            .zip(&self.objective)
            .map(|(v, c)| v * c)
            .sum();

        // y = c_B B^-1, where B^-1 sits in the artificial columns.
        let duals = (0..m)
            .map(|i| {
                let y: Rational = tab
                    .basis
                    .iter()
                    .enumerate()
                    .map(|(r, &b)| &costs[b] * &tab.rows[r][art_start + i])
                    .sum();
                if flipped[i] {
                    -y
                } else {
                    y
                }
            })
            .collect();
        Ok(LpSolution {
            values,
            objective,
            duals,
        })
    }
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    /// Reduced costs; the last entry is minus the objective value.
    cost: Vec<Rational>,
    basis: Vec<usize>,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let width = self.cost.len();
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v = &*v / &p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for j in 0..width {
                if !pivot_row[j].is_zero() {
                    let delta = &f * &pivot_row[j];
                    row[j] -= delta;
                }
            }
        }
        if !self.cost[c].is_zero() {
            let f = self.cost[c].clone();
            for j in 0..width {
                if !pivot_row[j].is_zero() {
                    let delta = &f * &pivot_row[j];
                    self.cost[j] -= delta;
                }
            }
        }
        self.basis[r] = c;
    }

    fn run(&mut self, allowed: impl Fn(usize) -> bool) -> Result<()> {
        let width = self.cost.len();
        loop {
            let Some(c) = (0..width - 1).find(|&j| allowed(j) && self.cost[j].is_negative()) else {
                return Ok(());
            };
            let mut best: Option<(Rational, usize, usize)> = None;
            for (r, row) in self.rows.iter().enumerate() {
                if !row[c].is_positive() {
                    continue;
                }
                let ratio = &row[width - 1] / &row[c];
                let better = match &best {
                    None => true,
                    Some((b, _, basis)) => ratio < *b || (ratio == *b && self.basis[r] < *basis),
                };
                if better {
                    best = Some((ratio, r, self.basis[r]));
                }
            }
            let Some((_, r, _)) = best else {
                return Err(Error::Lp("unbounded".into()));
            };
            self.pivot(r, c);
        }
    }
}
