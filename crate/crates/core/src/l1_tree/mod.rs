//! Exact ℓ1 solvers for rooted trees.
//!
//! Nodes are processed in post-order. Each node starts at
//! `max(a_v, Σ children)`, and if that overshoots its target the surplus is
//! pushed down paths of tight nodes into nodes with slack, as long as doing so
//! lowers the objective. Two drivers share that scheme:
//!
//! * [`solve_l1_abstract`] searches for one improving path at a time and
//!   applies it with [`push_path`]. Slow but easy to audit.
//! * [`solve_l1_dfs`] handles all pushes from a node in one depth-first pass
//!   ([`push_search`]), optionally with integer weights.
//!
//! [`expand_weighted`] turns a weighted tree into an unweighted one with the
//! same optimum by replacing each node with a chain.

mod abstract_push;
mod dfs;
mod expand;

pub use abstract_push::{improve_subtree_abstract, solve_l1_abstract, solve_l1_abstract_observed};
pub use dfs::{push_search, solve_l1_dfs, solve_l1_dfs_with, DfsOptions};
pub use expand::{expand_weighted, expand_weighted_with_cap, ChainMap, DEFAULT_EXPANSION_CAP};

use std::fmt::Debug;

use crate::error::{Error, Result};
use crate::model::{Assignment, Instance, NodeId};
use crate::rational::{Bound, Rational};

/// Balance and bottleneck of a path prefix ending at some node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathParams {
    /// Weight of nodes above their target minus weight of the others.
    pub delta: i64,
    /// Largest decrement that keeps every node above its target at or above
    /// it and every node non-negative.
    pub eps: Rational,
}

/// Extends a prefix's parameters by node `i`.
pub fn set_params(x_i: &Rational, a_i: &Rational, w_i: u64, delta_in: i64, eps_in: &Bound) -> PathParams {
    let (delta, eps) = params(x_i, a_i, w_i as i64, delta_in, eps_in.finite());
    PathParams { delta, eps }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PushStats {
    pub pushes: u64,
    pub total_pushed: Rational,
    pub dfs_visits: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveReport {
    pub x: Assignment,
    pub objective_value: Rational,
    pub stats: PushStats,
}

/// One committed push, as seen by a [`PushObserver`].
#[derive(Debug)]
pub struct PushEvent<'a> {
    /// Node whose subtree is being improved.
    pub root: NodeId,
    /// Downward path from `root`; every node on it lost `amount`.
    pub path: &'a [NodeId],
    pub amount: Rational,
    /// Path balance on the values before the push.
    pub delta: i64,
    /// Drop of the (weighted, if enabled) objective over the path.
    pub gain: Rational,
    pub before: &'a [Rational],
    pub after: &'a [Rational],
}

/// Hook for checking solver invariants on every committed push.
pub trait PushObserver {
    fn on_push(&mut self, event: &PushEvent<'_>);
}

/// Moves `eps` down `path`, starting at its first node.
///
/// The first node loses `eps`; every later node loses whatever its parent on
/// the path now lacks to cover its children. Returns the new assignment and
/// the drop of `Σ |x_j − a_j|` over the path.
pub fn push_path(
    inst: &Instance,
    x: &[Rational],
    path: &[NodeId],
    eps: &Rational,
) -> Result<(Assignment, Rational)> {
    if x.len() != inst.len() {
        return Err(Error::LengthMismatch {
            expected: inst.len(),
            got: x.len(),
        });
    }
    if eps.is_negative() {
        return Err(Error::InvalidArgument(format!("negative push amount {eps}")));
    }
    let Some(&first) = path.first() else {
        return Err(Error::InvalidPath("empty path".into()));
    };
    if let Some(&v) = path.iter().find(|v| v.index() >= inst.len()) {
        return Err(Error::UnknownNode { line: None, id: v.0 });
    }
    if let Some(w) = path.windows(2).find(|w| !inst.parents(w[1]).contains(&w[0])) {
        return Err(Error::InvalidPath(format!("{} is not a child of {}", w[1], w[0])));
    }

    let cost = |x: &[Rational]| -> Rational {
        path.iter().map(|&v| x[v.index()].abs_diff(inst.target(v))).sum()
    };
    let old = cost(x);
    let mut y = x.to_vec();
    lower(&mut y, first, eps)?;
    for w in path.windows(2) {
        let deficit = -inst.slack(w[0], &y);
        if deficit.is_positive() {
            lower(&mut y, w[1], &deficit)?;
        }
    }
    let last = *path.last().expect("path is non-empty");
    if inst.slack(last, &y).is_negative() {
        return Err(Error::InvalidPath(format!(
            "node {last} has too little slack to end the push"
        )));
    }
    let gain = &old - &cost(&y);
    Ok((Assignment::new(y), gain))
}

fn lower(x: &mut [Rational], v: NodeId, amount: &Rational) -> Result<()> {
    if x[v.index()] < *amount {
        return Err(Error::NegativeValue {
            node: v.0,
            amount: amount.clone(),
        });
    }
    x[v.index()] -= amount;
    Ok(())
}

/// Value type the solvers run on: exact machine integers when every target
/// is integral, rationals otherwise.
pub(crate) trait Scalar: Clone + Ord + Debug {
    fn zero() -> Self;
    fn plus(&self, other: &Self) -> Self;
    fn minus(&self, other: &Self) -> Self;
    fn to_rational(&self) -> Rational;
}

impl Scalar for i128 {
    fn zero() -> Self {
        0
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn minus(&self, other: &Self) -> Self {
        self - other
    }
    fn to_rational(&self) -> Rational {
        Rational::from_bigint((*self).into())
    }
}

impl Scalar for Rational {
    fn zero() -> Self {
        Rational::zero()
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn minus(&self, other: &Self) -> Self {
        self - other
    }
    fn to_rational(&self) -> Rational {
        self.clone()
    }
}

/// Targets as `i128` if all are integers of at most 64 bits. Sums over a
/// tree of such values cannot overflow.
pub(crate) fn integral_targets(inst: &Instance) -> Option<Vec<i128>> {
    inst.targets().iter().map(|a| a.to_i64().map(i128::from)).collect()
}

pub(crate) fn params<S: Scalar>(x: &S, a: &S, w: i64, delta_in: i64, eps_in: Option<&S>) -> (i64, S) {
    let cap = |v: S| match eps_in {
        Some(e) if *e < v => e.clone(),
        _ => v,
    };
    if x > a {
        (delta_in + w, cap(x.minus(a)))
    } else {
        (delta_in - w, cap(x.clone()))
    }
}

pub(crate) fn require_tree(inst: &Instance) -> Result<NodeId> {
    inst.root().ok_or(Error::Shape {
        expected: "tree",
        found: inst.kind(),
    })
}

/// Weighted or plain `Σ |x_j − a_j|` over `nodes`.
pub(crate) fn path_cost(inst: &Instance, x: &[Rational], nodes: &[NodeId], weighted: bool) -> Rational {
    nodes
        .iter()
        .map(|&v| {
            let d = x[v.index()].abs_diff(inst.target(v));
            if weighted {
                d * Rational::from_integer(inst.weight(v) as i64)
            } else {
                d
            }
        })
        .sum()
}
