use super::{
    integral_targets, params, path_cost, require_tree, PushEvent, PushObserver, PushStats, Scalar,
    SolveReport,
};
use crate::error::{Error, Result};
use crate::model::{objective, post_order, Assignment, Instance, NodeId, Norm};
use crate::rational::{Bound, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DfsOptions {
    /// Minimise `Σ w_i |x_i − a_i|` instead of the plain sum.
    pub weighted: bool,
    /// Skip the children of nodes whose path balance is not positive.
    ///
    /// Every path starting strictly below the node being improved has
    /// non-positive balance once its subtree is optimal, so such a branch can
    /// only return 0. Turning this off is useful for differential testing;
    /// the result is the same, only slower.
    pub prune: bool,
}

impl Default for DfsOptions {
    fn default() -> Self {
        DfsOptions {
            weighted: false,
            prune: true,
        }
    }
}

/// ℓ1 optimum of a tree via depth-first push search.
pub fn solve_l1_dfs(inst: &Instance, weighted: bool) -> Result<SolveReport> {
    solve_l1_dfs_with(
        inst,
        DfsOptions {
            weighted,
            ..DfsOptions::default()
        },
        None,
    )
}

pub fn solve_l1_dfs_with(
    inst: &Instance,
    options: DfsOptions,
    observer: Option<&mut dyn PushObserver>,
) -> Result<SolveReport> {
    let root = require_tree(inst)?;
    let weights = weight_vector(inst, options.weighted)?;
    let (x, stats) = match integral_targets(inst) {
        Some(a) => {
            let mut engine = Engine::new(inst, a, weights, options, observer);
            engine.solve(root)?;
            engine.finish()
        }
        None => {
            let a = inst.targets().to_vec();
            let mut engine = Engine::new(inst, a, weights, options, observer);
            engine.solve(root)?;
            engine.finish()
        }
    };
    let objective_value = objective(inst, x.as_slice(), Norm::L1, options.weighted)?;
    Ok(SolveReport {
        x,
        objective_value,
        stats,
    })
}

/// Runs one push search from `u` on a copy of `x`, with incoming budget
/// `eps` and balance `delta`. Returns the new assignment and the amount by
/// which `x_u` dropped; a caller above `u` would lower itself by the same
/// amount.
pub fn push_search(
    inst: &Instance,
    x: &[Rational],
    u: NodeId,
    eps: &Bound,
    delta: i64,
    weighted: bool,
) -> Result<(Assignment, Rational)> {
    require_tree(inst)?;
    if x.len() != inst.len() {
        return Err(Error::LengthMismatch {
            expected: inst.len(),
            got: x.len(),
        });
    }
    let weights = weight_vector(inst, weighted)?;
    let options = DfsOptions {
        weighted,
        prune: false,
    };
    let mut engine = Engine::new(inst, inst.targets().to_vec(), weights, options, None);
    engine.x = x.to_vec();
    for v in inst.nodes() {
        engine.child_sum[v.index()] = inst.child_sum(v, x);
    }
    let pushed = engine.search(u, eps.finite().cloned(), delta)?;
    Ok((Assignment::new(engine.x), pushed))
}

fn weight_vector(inst: &Instance, weighted: bool) -> Result<Vec<i64>> {
    if !weighted {
        return Ok(vec![1; inst.len()]);
    }
    let w = inst.weights().ok_or(Error::MissingWeights)?;
    Ok(w.iter().map(|&w| w as i64).collect())
}

struct Frame<S> {
    node: NodeId,
    delta_in: i64,
    eps_in: Option<S>,
    delta: i64,
    eps: S,
    /// Amount this node has lost during the current call.
    sum: S,
    /// `sum` when the current scan over the children began.
    scan_start: S,
    next_child: usize,
}

struct Engine<'a, 'o, S> {
    inst: &'a Instance,
    a: Vec<S>,
    w: Vec<i64>,
    x: Vec<S>,
    child_sum: Vec<S>,
    options: DfsOptions,
    stats: PushStats,
    total_pushed: S,
    observer: Option<&'o mut dyn PushObserver>,
    /// Node currently being improved, for observer events.
    active: NodeId,
    /// Smallest path balance at which a node may absorb a push.
    threshold: i64,
}

impl<'a, 'o, S: Scalar> Engine<'a, 'o, S> {
    fn new(
        inst: &'a Instance,
        a: Vec<S>,
        w: Vec<i64>,
        options: DfsOptions,
        observer: Option<&'o mut dyn PushObserver>,
    ) -> Self {
        let n = inst.len();
        Engine {
            inst,
            a,
            w,
            x: vec![S::zero(); n],
            child_sum: vec![S::zero(); n],
            options,
            stats: PushStats::default(),
            total_pushed: S::zero(),
            observer,
            active: NodeId(0),
            threshold: 1,
        }
    }

    fn solve(&mut self, root: NodeId) -> Result<()> {
        for v in post_order(self.inst, root) {
            let i = v.index();
            let start = if self.a[i] > self.child_sum[i] {
                self.a[i].clone()
            } else {
                self.child_sum[i].clone()
            };
            self.x[i] = start;
            if let Some(&p) = self.inst.parents(v).first() {
                self.child_sum[p.index()] = self.child_sum[p.index()].plus(&self.x[i]);
            }
            if self.x[i] <= self.a[i] {
                continue;
            }
            if !self.options.weighted {
                self.search(v, None, 0)?;
                continue;
            }
            // Weighted paths are taken best balance first: a push down a
            // low-balance branch can use up surplus that a better sibling
            // branch needed, and values never move back up.
            loop {
                let best = self.best_balance(v);
                if best <= 0 {
                    break;
                }
                self.threshold = best;
                self.search(v, None, 0)?;
            }
            self.threshold = 1;
        }
        Ok(())
    }

    fn finish(self) -> (Assignment, PushStats) {
        let mut stats = self.stats;
        stats.total_pushed = self.total_pushed.to_rational();
        (
            Assignment::new(self.x.iter().map(Scalar::to_rational).collect()),
            stats,
        )
    }

    fn params(&self, v: NodeId, delta_in: i64, eps_in: Option<&S>) -> (i64, S) {
        let i = v.index();
        params(&self.x[i], &self.a[i], self.w[i], delta_in, eps_in)
    }

    /// Push search from `u` with an explicit stack. Returns how much `x_u`
    /// dropped.
    ///
    /// Whenever a node absorbs an amount into its slack, every node on the
    /// stack above it is lowered by the same amount right away. Each
    /// absorption is therefore one complete path push and the assignment is
    /// feasible between any two of them.
    fn search(&mut self, u: NodeId, eps: Option<S>, delta: i64) -> Result<S> {
        self.active = u;
        let mut stack: Vec<Frame<S>> = Vec::new();
        if !self.enter(&mut stack, u, delta, eps)? {
            return Ok(S::zero());
        }
        loop {
            let top = stack.last_mut().expect("stack is non-empty");
            let children = self.inst.children(top.node);
            // With weights a path can stay improving after one of its nodes
            // reaches its target, so a scan that moved anything is repeated.
            if self.options.weighted
                && top.next_child == children.len()
                && top.sum > top.scan_start
                && top.delta > 0
                && top.eps > S::zero()
            {
                top.next_child = 0;
                top.scan_start = top.sum.clone();
            }
            let exhausted = top.eps == S::zero()
                || top.next_child == children.len()
                || (self.options.prune && top.delta < self.threshold);
            if exhausted {
                let done = stack.pop().expect("stack is non-empty");
                let Some(parent) = stack.last_mut() else {
                    return Ok(done.sum);
                };
                // The parent was lowered eagerly; only its parameters need
                // refreshing.
                let budget = parent.eps_in.as_ref().map(|e| e.minus(&parent.sum));
                let (d, e) = params(
                    &self.x[parent.node.index()],
                    &self.a[parent.node.index()],
                    self.w[parent.node.index()],
                    parent.delta_in,
                    budget.as_ref(),
                );
                parent.delta = d;
                parent.eps = e;
                continue;
            }
            let child = children[top.next_child];
            top.next_child += 1;
            let (delta, eps) = (top.delta, top.eps.clone());
            self.enter(&mut stack, child, delta, Some(eps))?;
        }
    }

    /// Opens a frame for `v`, absorbing into its slack first when that
    /// improves the path. Returns false if nothing can be pushed through `v`.
    fn enter(&mut self, stack: &mut Vec<Frame<S>>, v: NodeId, delta_in: i64, eps_in: Option<S>) -> Result<bool> {
        self.stats.dfs_visits += 1;
        let (delta, eps) = self.params(v, delta_in, eps_in.as_ref());
        if eps == S::zero() {
            return Ok(false);
        }
        let i = v.index();
        let slack = self.x[i].minus(&self.child_sum[i]);
        let absorb = if slack < eps { slack } else { eps.clone() };
        stack.push(Frame {
            node: v,
            delta_in,
            eps_in,
            delta,
            eps,
            sum: S::zero(),
            scan_start: S::zero(),
            next_child: 0,
        });
        if absorb > S::zero() && delta >= self.threshold {
            self.commit(stack, &absorb, delta)?;
            let top = stack.last_mut().expect("frame was just pushed");
            let budget = top.eps_in.as_ref().map(|e| e.minus(&top.sum));
            let (d, e) = params(&self.x[i], &self.a[i], self.w[i], delta_in, budget.as_ref());
            top.delta = d;
            top.eps = e;
        }
        Ok(true)
    }

    /// Largest balance of a path from `v` ending at a node that could absorb
    /// a push, or 0 if there is none.
    fn best_balance(&mut self, v: NodeId) -> i64 {
        let mut best = 0;
        let mut stack = vec![(v, 0i64, None::<S>)];
        while let Some((u, delta_in, eps_in)) = stack.pop() {
            self.stats.dfs_visits += 1;
            let (delta, eps) = self.params(u, delta_in, eps_in.as_ref());
            if eps == S::zero() || (self.options.prune && delta <= best) {
                continue;
            }
            let i = u.index();
            if self.x[i] > self.child_sum[i] {
                best = best.max(delta);
            }
            for &c in self.inst.children(u) {
                stack.push((c, delta, Some(eps.clone())));
            }
        }
        best
    }

    /// Lowers every node on the stack by `amount`.
    fn commit(&mut self, stack: &mut [Frame<S>], amount: &S, delta: i64) -> Result<()> {
        let snapshot = self.observer.is_some().then(|| self.rational_x());
        for frame in stack.iter_mut() {
            let i = frame.node.index();
            if self.x[i] < *amount {
                return Err(Error::InvariantBreach(format!(
                    "push of {:?} would make node {} negative",
                    amount, frame.node
                )));
            }
            self.x[i] = self.x[i].minus(amount);
            frame.sum = frame.sum.plus(amount);
            if let Some(&p) = self.inst.parents(frame.node).first() {
                self.child_sum[p.index()] = self.child_sum[p.index()].minus(amount);
            }
        }
        let last = stack.last().expect("push path is non-empty").node;
        if self.x[last.index()] < self.child_sum[last.index()] {
            return Err(Error::InvariantBreach(format!(
                "node {last} absorbed more than its slack"
            )));
        }
        self.stats.pushes += 1;
        self.total_pushed = self.total_pushed.plus(amount);

        if let Some(before) = snapshot {
            let after = self.rational_x();
            let path: Vec<NodeId> = stack.iter().map(|f| f.node).collect();
            let gain = &path_cost(self.inst, &before, &path, self.options.weighted)
                - &path_cost(self.inst, &after, &path, self.options.weighted);
            let event = PushEvent {
                root: self.active,
                path: &path,
                amount: amount.to_rational(),
                delta,
                gain,
                before: &before,
                after: &after,
            };
            if let Some(obs) = self.observer.as_deref_mut() {
                obs.on_push(&event);
            }
        }
        Ok(())
    }

    fn rational_x(&self) -> Vec<Rational> {
        self.x.iter().map(Scalar::to_rational).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::l1_tree::solve_l1_abstract;
    use crate::model::{is_feasible, parse_instance};

    const FIGURE1: &str = "sbhsp 1\nnodes 4\nnode 0 a=8\nnode 1 a=8\nnode 2 a=5\nnode 3 a=5\nedge 1 0\nedge 2 1\nedge 3 1\n";

    fn r(n: i64) -> Rational {
        Rational::from_integer(n)
    }

    fn ints(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&n| r(n)).collect()
    }

    #[test]
    fn figure1_reaches_two() {
        let inst = parse_instance(FIGURE1).unwrap();
        let report = solve_l1_dfs(&inst, false).unwrap();
        assert_eq!(report.objective_value, r(2));
        assert!(is_feasible(&inst, report.x.as_slice()).unwrap());
        assert!(report.x.is_integral());
    }

    #[test]
    fn push_search_at_figure1_root() {
        let inst = parse_instance(FIGURE1).unwrap();
        let (x, pushed) = push_search(&inst, &ints(&[10, 10, 5, 5]), NodeId(0), &Bound::Unbounded, 0, false).unwrap();
        assert_eq!(pushed, r(2));
        assert_eq!(crate::model::objective(&inst, x.as_slice(), Norm::L1, false).unwrap(), r(2));
    }

    #[test]
    fn push_search_with_no_budget_is_a_no_op() {
        let inst = parse_instance(FIGURE1).unwrap();
        let x = ints(&[10, 10, 5, 5]);
        let (y, pushed) = push_search(&inst, &x, NodeId(1), &Bound::Finite(Rational::zero()), 0, false).unwrap();
        assert!(pushed.is_zero());
        assert_eq!(y.as_slice(), x.as_slice());
    }

    #[test]
    fn push_search_absorbs_root_slack() {
        let inst = parse_instance("sbhsp 1\nnodes 2\nnode 0 a=3\nnode 1 a=7\nedge 1 0\n").unwrap();
        // (7, 7) already costs 4, the optimum, so nothing needs to move.
        let (x, pushed) = push_search(&inst, &ints(&[7, 7]), NodeId(0), &Bound::Unbounded, 0, false).unwrap();
        assert!(pushed.is_zero());
        assert!(is_feasible(&inst, x.as_slice()).unwrap());
        assert_eq!(crate::model::objective(&inst, x.as_slice(), Norm::L1, false).unwrap(), r(4));
    }

    #[test]
    fn push_search_uses_slack_at_the_start_node() {
        let inst = parse_instance("sbhsp 1\nnodes 2\nnode 0 a=8\nnode 1 a=4\nedge 1 0\n").unwrap();
        let (x, pushed) = push_search(&inst, &ints(&[10, 4]), NodeId(0), &Bound::Unbounded, 0, false).unwrap();
        assert_eq!(pushed, r(2));
        assert_eq!(x.as_slice(), ints(&[8, 4]).as_slice());
    }

    #[test]
    fn degenerate_inputs() {
        let zeros = parse_instance("sbhsp 1\nnodes 3\nnode 0 a=0\nnode 1 a=0\nnode 2 a=0\nedge 1 0\nedge 2 0\n").unwrap();
        let report = solve_l1_dfs(&zeros, false).unwrap();
        assert!(report.objective_value.is_zero());
        assert_eq!(report.x.as_slice(), ints(&[0, 0, 0]).as_slice());

        let single = parse_instance("sbhsp 1\nnodes 1\nnode 0 a=5/2\n").unwrap();
        assert_eq!(solve_l1_dfs(&single, false).unwrap().x.as_slice(), &[Rational::new(5, 2)]);

        let dag = parse_instance("sbhsp 1\nnodes 3\nnode 0 a=1\nnode 1 a=1\nnode 2 a=1\nedge 2 0\nedge 2 1\nedge 1 0\n").unwrap();
        assert!(matches!(solve_l1_dfs(&dag, false), Err(Error::Shape { .. })));
        assert!(matches!(solve_l1_dfs(&single, true), Err(Error::MissingWeights)));
    }

    #[test]
    fn fractional_targets_use_the_rational_engine() {
        let inst = parse_instance("sbhsp 1\nnodes 4\nnode 0 a=15/2\nnode 1 a=8\nnode 2 a=5\nnode 3 a=11/2\nedge 1 0\nedge 2 1\nedge 3 1\n").unwrap();
        let dfs = solve_l1_dfs(&inst, false).unwrap();
        let abs = solve_l1_abstract(&inst).unwrap();
        assert_eq!(dfs.objective_value, abs.objective_value);
        assert!(is_feasible(&inst, dfs.x.as_slice()).unwrap());
    }

    #[test]
    fn deep_path_does_not_overflow_the_stack() {
        let n = 100_000;
        let mut text = format!("sbhsp 1\nnodes {n}\n");
        for i in 0..n {
            text.push_str(&format!("node {i} a={}\n", (i * 7919) % 101));
        }
        for i in 1..n {
            text.push_str(&format!("edge {i} {}\n", i - 1));
        }
        let inst = parse_instance(&text).unwrap();
        let report = solve_l1_dfs(&inst, false).unwrap();
        assert!(is_feasible(&inst, report.x.as_slice()).unwrap());
    }
}
