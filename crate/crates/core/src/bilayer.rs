//! Approximate ℓ1 smoothing on two-layer DAGs.
//!
//! In an optimal assignment every parent-side node keeps its target and
//! child-side nodes only move down, by some `d_u ∈ [0, a_u]`. What remains is
//! a covering LP: minimise `Σ d_u` subject to
//! `Σ_{u ∈ C(w)} d_u >= Σ_{u ∈ C(w)} a_u − a_w` for every parent `w`.
//!
//! [`solve_covering_mw`] approximates it with multiplicative weights on the
//! rows. The weights act as dual prices, every iterate yields an exact lower
//! bound by weak duality, and primal candidates are repaired to exact
//! feasibility by filling the most violated row. The loop stops once the best
//! primal is within `1 + eps` of the best bound.

use crate::error::{Error, Result};
use crate::l1_tree::{PushStats, SolveReport};
use crate::model::{objective, Assignment, Instance, NodeId, Norm};
use crate::oracle::simplex::{LpProblem, Relation};
use crate::rational::Rational;

/// Hard stop for the weight loop.
pub const MAX_ITERATIONS: u64 = 5_000_000;

/// Primal candidates are rebuilt every this many iterations.
const REPAIR_PERIOD: u64 = 8;

/// Float values are snapped to multiples of `2^-QUANTUM_BITS` before they
/// enter exact arithmetic, to keep denominators small.
const QUANTUM_BITS: u32 = 30;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoveringRow {
    /// Parent-side node the row came from.
    pub node: NodeId,
    pub demand: Rational,
    /// Column indices.
    pub members: Vec<usize>,
}

/// `min Σ d` s.t. `Σ_{u ∈ row} d_u >= demand` for each row, `0 <= d <= cap`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoveringLP {
    columns: Vec<NodeId>,
    caps: Vec<Rational>,
    rows: Vec<CoveringRow>,
    /// Rows containing each column.
    column_rows: Vec<Vec<usize>>,
}

impl CoveringLP {
    /// Columns are numbered `0..caps.len()` and double as their node ids.
    /// Every row needs a positive demand and at least one member.
    pub fn new(caps: Vec<Rational>, rows: Vec<(Vec<usize>, Rational)>) -> Result<Self> {
        let columns = (0..caps.len()).map(NodeId).collect();
        let rows = rows
            .into_iter()
            .enumerate()
            .map(|(i, (members, demand))| CoveringRow {
                node: NodeId(i),
                demand,
                members,
            })
            .collect();
        Self::build(columns, caps, rows)
    }

    fn build(columns: Vec<NodeId>, caps: Vec<Rational>, mut rows: Vec<CoveringRow>) -> Result<Self> {
        if let Some(c) = caps.iter().find(|c| c.is_negative()) {
            return Err(Error::InvalidArgument(format!("negative cap {c}")));
        }
        let mut column_rows = vec![Vec::new(); caps.len()];
        for (r, row) in rows.iter_mut().enumerate() {
            if !row.demand.is_positive() {
                return Err(Error::InvalidArgument(format!("row {r} has non-positive demand")));
            }
            row.members.sort_unstable();
            row.members.dedup();
            if row.members.is_empty() {
                return Err(Error::InvalidArgument(format!("row {r} has no columns")));
            }
            for &u in &row.members {
                let list = column_rows
                    .get_mut(u)
                    .ok_or_else(|| Error::InvalidArgument(format!("row {r} names unknown column {u}")))?;
                list.push(r);
            }
        }
        Ok(CoveringLP {
            columns,
            caps,
            rows,
            column_rows,
        })
    }

    pub fn num_columns(&self) -> usize {
        self.caps.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Node behind each column.
    pub fn columns(&self) -> &[NodeId] {
        &self.columns
    }

    pub fn caps(&self) -> &[Rational] {
        &self.caps
    }

    pub fn rows(&self) -> &[CoveringRow] {
        &self.rows
    }

    pub fn coverage(&self, row: usize, d: &[Rational]) -> Rational {
        self.rows[row].members.iter().map(|&u| &d[u]).sum()
    }

    /// First row whose caps cannot meet its demand.
    pub fn infeasible_row(&self) -> Option<usize> {
        (0..self.rows.len()).find(|&r| self.coverage(r, &self.caps) < self.rows[r].demand)
    }

    /// Checks boxes and covering rows exactly.
    pub fn check(&self, d: &[Rational]) -> Result<()> {
        if d.len() != self.num_columns() {
            return Err(Error::LengthMismatch {
                expected: self.num_columns(),
                got: d.len(),
            });
        }
        for (u, (value, cap)) in d.iter().zip(&self.caps).enumerate() {
            if value.is_negative() || value > cap {
                return Err(Error::InvalidCovering(format!(
                    "column {u} has d = {value} outside [0, {cap}]"
                )));
            }
        }
        for (r, row) in self.rows.iter().enumerate() {
            let cov = self.coverage(r, d);
            if cov < row.demand {
                return Err(Error::InvalidCovering(format!(
                    "row {r} (node {}) covers {cov} of {}",
                    row.node, row.demand
                )));
            }
        }
        Ok(())
    }

    fn to_lp(&self) -> LpProblem {
        let n = self.num_columns();
        let mut lp = LpProblem::new(n);
        lp.objective = vec![Rational::one(); n];
        for row in &self.rows {
            let coeffs = row.members.iter().map(|&u| (u, Rational::one())).collect();
            lp.add(coeffs, Relation::Ge, row.demand.clone());
        }
        for (u, cap) in self.caps.iter().enumerate() {
            lp.add(vec![(u, Rational::one())], Relation::Le, cap.clone());
        }
        lp
    }
}

/// Child-side nodes (no children) become columns with cap `a_u`, parent-side
/// nodes become rows with demand `Σ_{u ∈ C(w)} a_u − a_w`; rows whose demand
/// is not positive are dropped.
pub fn reduce_bilayer(inst: &Instance) -> Result<CoveringLP> {
    if !inst.is_bilayer() {
        return Err(Error::Shape {
            expected: "bilayer",
            found: inst.kind(),
        });
    }
    let mut column_of = vec![usize::MAX; inst.len()];
    let mut columns = Vec::new();
    let mut caps = Vec::new();
    for v in inst.nodes() {
        if inst.children(v).is_empty() {
            column_of[v.index()] = columns.len();
            columns.push(v);
            caps.push(inst.target(v).clone());
        }
    }
    let mut rows = Vec::new();
    for w in inst.nodes() {
        let children = inst.children(w);
        if children.is_empty() {
            continue;
        }
        let total: Rational = children.iter().map(|&u| inst.target(u)).sum();
        let demand = total - inst.target(w);
        if demand.is_positive() {
            rows.push(CoveringRow {
                node: w,
                demand,
                members: children.iter().map(|&u| column_of[u.index()]).collect(),
            });
        }
    }
    CoveringLP::build(columns, caps, rows)
}

/// Row with the smallest `coverage / demand` among the unsatisfied rows,
/// lowest index on ties. `None` if every row is met.
pub fn most_violated_constraint(lp: &CoveringLP, d: &[Rational]) -> Option<usize> {
    let mut worst: Option<(usize, Rational)> = None;
    for (r, row) in lp.rows.iter().enumerate() {
        let cov = lp.coverage(r, d);
        if cov >= row.demand {
            continue;
        }
        let ratio = &cov / &row.demand;
        if worst.as_ref().is_none_or(|(_, best)| ratio < *best) {
            worst = Some((r, ratio));
        }
    }
    worst.map(|(r, _)| r)
}

/// Exact optimum of the covering LP, by simplex. Meant for checking.
pub fn solve_covering_exact(lp: &CoveringLP) -> Result<(Vec<Rational>, Rational)> {
    if let Some(row) = lp.infeasible_row() {
        return Err(Error::InfeasibleCovering { row });
    }
    let sol = lp.to_lp().solve()?;
    Ok((sol.values, sol.objective))
}

/// Lower bound on the covering optimum from row prices `y >= 0`.
///
/// Weak duality gives `Σ_w b_w y_w − Σ_u cap_u · max(0, Y_u − 1)` with
/// `Y_u = Σ_{w ∋ u} y_w` for every `y`; this returns the best value over all
/// rescalings `s · y`.
pub fn dual_lower_bound(lp: &CoveringLP, y: &[Rational]) -> Result<Rational> {
    if y.len() != lp.num_rows() {
        return Err(Error::LengthMismatch {
            expected: lp.num_rows(),
            got: y.len(),
        });
    }
    if y.iter().any(Rational::is_negative) {
        return Err(Error::InvalidArgument("row prices must be non-negative".into()));
    }
    let load = column_load(lp, y);
    let demand: Rational = lp.rows.iter().zip(y).map(|(row, y)| &row.demand * y).sum();
    if demand.is_zero() {
        return Ok(Rational::zero());
    }
    // The bound is concave and piecewise linear in s with kinks at 1 / Y_u.
    let mut order: Vec<usize> = (0..lp.num_columns()).filter(|&u| load[u].is_positive()).collect();
    order.sort_by(|&p, &q| load[q].cmp(&load[p]));
    let mut slope = demand;
    for u in order {
        slope -= &lp.caps[u] * &load[u];
        if !slope.is_positive() {
            return Ok(scaled_bound(lp, y, &load, &(Rational::one() / &load[u])));
        }
    }
    // Only reachable for an infeasible LP.
    Err(Error::InfeasibleCovering {
        row: lp.infeasible_row().unwrap_or(0),
    })
}

fn column_load(lp: &CoveringLP, y: &[Rational]) -> Vec<Rational> {
    let mut load = vec![Rational::zero(); lp.num_columns()];
    for (row, price) in lp.rows.iter().zip(y) {
        for &u in &row.members {
            load[u] = &load[u] + price;
        }
    }
    load
}

fn scaled_bound(lp: &CoveringLP, y: &[Rational], load: &[Rational], s: &Rational) -> Rational {
    let gain: Rational = lp.rows.iter().zip(y).map(|(row, y)| &row.demand * y).sum();
    let mut value = s * &gain;
    for (cap, l) in lp.caps.iter().zip(load) {
        let excess = s * l - Rational::one();
        if excess.is_positive() {
            value -= cap * &excess;
        }
    }
    value
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoveringSolution {
    /// Exactly feasible covering vector.
    pub d: Vec<Rational>,
    pub cost: Rational,
    /// Certified lower bound on the optimum; `cost <= (1 + eps) · lower_bound`.
    pub lower_bound: Rational,
    pub iterations: u64,
}

/// `d` with every box and covering row satisfied and `Σ d <= (1 + eps) · OPT`.
pub fn solve_covering_mw(lp: &CoveringLP, eps: &Rational) -> Result<Vec<Rational>> {
    approximate_covering(lp, eps).map(|sol| sol.d)
}

/// Multiplicative-weights loop behind [`solve_covering_mw`], with its
/// certificate.
pub fn approximate_covering(lp: &CoveringLP, eps: &Rational) -> Result<CoveringSolution> {
    if !eps.is_positive() || *eps > Rational::one() {
        return Err(Error::InvalidArgument(format!("eps must lie in (0, 1], got {eps}")));
    }
    if let Some(row) = lp.infeasible_row() {
        return Err(Error::InfeasibleCovering { row });
    }
    let n = lp.num_columns();
    let m = lp.num_rows();
    if m == 0 {
        return Ok(CoveringSolution {
            d: vec![Rational::zero(); n],
            cost: Rational::zero(),
            lower_bound: Rational::zero(),
            iterations: 0,
        });
    }
    let factor = Rational::one() + eps;
    let demand: Vec<f64> = lp.rows.iter().map(|r| r.demand.to_f64()).collect();
    let cap: Vec<f64> = lp.caps.iter().map(Rational::to_f64).collect();

    let mut y: Vec<f64> = lp.rows.iter().map(|r| 1.0 / r.members.len() as f64).collect();
    let mut load = vec![0.0; n];
    let mut average = vec![0.0; n];
    let mut average_weight = 0.0;
    let mut best: Option<(Vec<Rational>, Rational)> = None;
    let mut lower = Rational::zero();
    let mut lower_f = 0.0;

    for t in 1..=MAX_ITERATIONS {
        load.iter_mut().for_each(|l| *l = 0.0);
        for (row, &price) in lp.rows.iter().zip(&y) {
            for &u in &row.members {
                load[u] += price;
            }
        }
        let step = 1.0 / (t as f64).sqrt();
        // Cheapest response to the prices: columns priced above 1 go to cap.
        let response: Vec<f64> = (0..n).map(|u| if load[u] > 1.0 { cap[u] } else { 0.0 }).collect();
        for (avg, r) in average.iter_mut().zip(&response) {
            *avg += step * r;
        }
        average_weight += step;

        if t == 1 || t % REPAIR_PERIOD == 0 {
            let mut starts = vec![vec![Rational::zero(); n]];
            starts.push(
                average
                    .iter()
                    .zip(&lp.caps)
                    .map(|(v, c)| Rational::min_of(quantize(v / average_weight), c.clone()))
                    .collect(),
            );
            for start in starts {
                let d = repair(lp, start, &load)?;
                let cost: Rational = d.iter().sum();
                if best.as_ref().is_none_or(|(_, c)| cost < *c) {
                    best = Some((d, cost));
                }
            }
        }

        let (bound_f, kink) = float_bound(lp, &y, &load, &demand, &cap);
        let best_cost = &best.as_ref().expect("a candidate exists after the first iteration").1;
        if bound_f > lower_f && best_cost.to_f64() <= (1.0 + eps.to_f64()) * bound_f * (1.0 + 1e-9) {
            if let Some(u) = kink {
                let exact = exact_bound_at(lp, &y, u);
                if exact > lower {
                    lower = exact;
                }
            }
            lower_f = bound_f;
        }
        if *best_cost <= &factor * &lower {
            let (d, cost) = best.expect("checked above");
            return Ok(CoveringSolution {
                d,
                cost,
                lower_bound: lower,
                iterations: t,
            });
        }

        for (r, row) in lp.rows.iter().enumerate() {
            let covered: f64 = row.members.iter().map(|&u| response[u]).sum();
            let gap = (demand[r] - covered) / demand[r];
            y[r] = (y[r] * (step * gap).max(-30.0).exp()).max(f64::MIN_POSITIVE);
        }
    }
    Err(Error::NotConverged {
        iterations: MAX_ITERATIONS,
    })
}

fn quantize(v: f64) -> Rational {
    let scale = f64::from(1u32 << QUANTUM_BITS);
    Rational::new((v.max(0.0) * scale).ceil() as i64, 1i64 << QUANTUM_BITS)
}

/// Best rescaled dual bound in floats, with the column whose kink attains it.
fn float_bound(lp: &CoveringLP, y: &[f64], load: &[f64], demand: &[f64], cap: &[f64]) -> (f64, Option<usize>) {
    let gain: f64 = demand.iter().zip(y).map(|(b, y)| b * y).sum();
    let mut order: Vec<usize> = (0..lp.num_columns()).filter(|&u| load[u] > 0.0).collect();
    order.sort_by(|&p, &q| load[q].total_cmp(&load[p]));
    let (mut slope, mut value, mut prev) = (gain, 0.0, 0.0);
    let mut best = (0.0, None);
    for u in order {
        let s = 1.0 / load[u];
        value += slope * (s - prev);
        prev = s;
        if value > best.0 {
            best = (value, Some(u));
        }
        slope -= cap[u] * load[u];
        if slope <= 0.0 {
            break;
        }
    }
    best
}

/// Exact bound at the kink of column `u`, from quantised prices.
fn exact_bound_at(lp: &CoveringLP, y: &[f64], u: usize) -> Rational {
    let top = y.iter().copied().fold(0.0, f64::max);
    let prices: Vec<Rational> = y.iter().map(|&p| quantize(p / top)).collect();
    let load = column_load(lp, &prices);
    if !load[u].is_positive() {
        return Rational::zero();
    }
    let s = Rational::one() / &load[u];
    scaled_bound(lp, &prices, &load, &s)
}

/// Clamps `d` into the boxes, fills the most violated row until every row is
/// met, then lowers columns whose rows all have surplus. Columns with a
/// higher price are raised first and lowered last.
fn repair(lp: &CoveringLP, mut d: Vec<Rational>, price: &[f64]) -> Result<Vec<Rational>> {
    let rank = |u: &usize| std::cmp::Reverse(ordered(price[*u]));
    while let Some(r) = most_violated_constraint(lp, &d) {
        let row = &lp.rows[r];
        let mut need = &row.demand - lp.coverage(r, &d);
        let mut members = row.members.clone();
        members.sort_by_key(rank);
        for u in members {
            let room = &lp.caps[u] - &d[u];
            if !room.is_positive() {
                continue;
            }
            let take = Rational::min_of(room, need.clone());
            d[u] = &d[u] + &take;
            need -= take;
            if need.is_zero() {
                break;
            }
        }
        if need.is_positive() {
            return Err(Error::InfeasibleCovering { row: r });
        }
    }

    let mut surplus: Vec<Rational> = (0..lp.num_rows()).map(|r| lp.coverage(r, &d) - &lp.rows[r].demand).collect();
    let mut order: Vec<usize> = (0..lp.num_columns()).collect();
    order.sort_by_key(rank);
    for &u in order.iter().rev() {
        let mut cut = d[u].clone();
        for &r in &lp.column_rows[u] {
            if surplus[r] < cut {
                cut = surplus[r].clone();
            }
        }
        if cut.is_positive() {
            d[u] = &d[u] - &cut;
            for &r in &lp.column_rows[u] {
                surplus[r] = &surplus[r] - &cut;
            }
        }
    }
    Ok(d)
}

/// Total order on finite floats for sorting.
fn ordered(v: f64) -> i64 {
    let bits = v.to_bits() as i64;
    if bits < 0 {
        bits ^ i64::MAX
    } else {
        bits
    }
}

/// `x_u = a_u − d_u` on columns, every other node keeps its target.
pub fn lift_solution(inst: &Instance, d: &[Rational]) -> Result<SolveReport> {
    let lp = reduce_bilayer(inst)?;
    lp.check(d)?;
    let mut x = inst.targets().to_vec();
    for (u, value) in lp.columns.iter().zip(d) {
        x[u.index()] = &x[u.index()] - value;
    }
    let objective_value = objective(inst, &x, Norm::L1, false)?;
    Ok(SolveReport {
        x: Assignment::new(x),
        objective_value,
        stats: PushStats::default(),
    })
}

/// Reduce, approximate, lift.
pub fn solve_bilayer(inst: &Instance, eps: &Rational) -> Result<SolveReport> {
    let lp = reduce_bilayer(inst)?;
    let d = solve_covering_mw(&lp, eps)?;
    lift_solution(inst, &d)
}
