use super::{params, push_path, require_tree, PushEvent, PushObserver, PushStats, SolveReport};
use crate::error::Result;
use crate::model::{objective, post_order, Assignment, Instance, NodeId, Norm};
use crate::rational::Rational;

/// Unweighted ℓ1 optimum of a tree, one push path at a time.
pub fn solve_l1_abstract(inst: &Instance) -> Result<SolveReport> {
    run(inst, None)
}

pub fn solve_l1_abstract_observed(inst: &Instance, observer: &mut dyn PushObserver) -> Result<SolveReport> {
    run(inst, Some(observer))
}

/// Applies improving pushes from `v` until none is left. Assumes the
/// subtrees below `v` are already optimal.
pub fn improve_subtree_abstract(inst: &Instance, x: &[Rational], v: NodeId) -> Result<Assignment> {
    require_tree(inst)?;
    let mut x = x.to_vec();
    improve(inst, &mut x, v, &mut PushStats::default(), None)?;
    Ok(Assignment::new(x))
}

fn run(inst: &Instance, mut observer: Option<&mut dyn PushObserver>) -> Result<SolveReport> {
    let root = require_tree(inst)?;
    let mut x = vec![Rational::zero(); inst.len()];
    let mut stats = PushStats::default();
    for v in post_order(inst, root) {
        x[v.index()] = Rational::max_of(inst.target(v).clone(), inst.child_sum(v, &x));
        improve(inst, &mut x, v, &mut stats, reborrow(&mut observer))?;
    }
    let objective_value = objective(inst, &x, Norm::L1, false)?;
    Ok(SolveReport {
        x: Assignment::new(x),
        objective_value,
        stats,
    })
}

fn reborrow<'s>(o: &'s mut Option<&mut dyn PushObserver>) -> Option<&'s mut dyn PushObserver> {
    match o {
        Some(o) => Some(&mut **o),
        None => None,
    }
}

fn improve(
    inst: &Instance,
    x: &mut Vec<Rational>,
    v: NodeId,
    stats: &mut PushStats,
    mut observer: Option<&mut dyn PushObserver>,
) -> Result<()> {
    if x[v.index()] <= *inst.target(v) {
        return Ok(());
    }
    while let Some(found) = find_path(inst, x, v, stats) {
        let (y, gain) = push_path(inst, x, &found.path, &found.eps)?;
        stats.pushes += 1;
        stats.total_pushed += &found.eps;
        if let Some(obs) = observer.as_deref_mut() {
            obs.on_push(&PushEvent {
                root: v,
                path: &found.path,
                amount: found.eps.clone(),
                delta: found.delta,
                gain,
                before: x,
                after: y.as_slice(),
            });
        }
        *x = y.into_vec();
    }
    Ok(())
}

struct FoundPath {
    path: Vec<NodeId>,
    eps: Rational,
    delta: i64,
}

/// First path from `v` (children in ascending id) that runs through tight
/// nodes and ends at a node with slack and positive balance.
///
/// A slack node with non-positive balance ends the branch: a push continuing
/// past it would be absorbed there first.
fn find_path(inst: &Instance, x: &[Rational], v: NodeId, stats: &mut PushStats) -> Option<FoundPath> {
    let mut path = Vec::new();
    let mut stack: Vec<(NodeId, i64, Option<Rational>, usize)> = vec![(v, 0, None, 0)];
    while let Some((u, delta_in, eps_in, depth)) = stack.pop() {
        stats.dfs_visits += 1;
        path.truncate(depth);
        path.push(u);
        let i = u.index();
        let (delta, eps) = params(&x[i], inst.target(u), 1, delta_in, eps_in.as_ref());
        if eps.is_zero() {
            continue;
        }
        let slack = inst.slack(u, x);
        if slack.is_positive() {
            if delta > 0 {
                return Some(FoundPath {
                    path,
                    eps: Rational::min_of(eps, slack),
                    delta,
                });
            }
            continue;
        }
        for &c in inst.children(u).iter().rev() {
            stack.push((c, delta, Some(eps.clone()), depth + 1));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::l1_tree::path_cost;
    use crate::model::{is_feasible, parse_instance};

    fn uniform_gain(inst: &Instance, before: &[Rational], after: &[Rational], path: &[NodeId]) -> Rational {
        &path_cost(inst, before, path, false) - &path_cost(inst, after, path, false)
    }

    const FIGURE1: &str = "sbhsp 1\nnodes 4\nnode 0 a=8\nnode 1 a=8\nnode 2 a=5\nnode 3 a=5\nedge 1 0\nedge 2 1\nedge 3 1\n";

    fn ints(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&n| Rational::from_integer(n)).collect()
    }

    #[test]
    fn figure1_reaches_two() {
        let inst = parse_instance(FIGURE1).unwrap();
        let report = solve_l1_abstract(&inst).unwrap();
        assert_eq!(report.objective_value, Rational::from_integer(2));
        assert!(is_feasible(&inst, report.x.as_slice()).unwrap());
        assert_eq!(report.stats.pushes, 1);
    }

    #[test]
    fn improve_at_root_applies_one_push() {
        let inst = parse_instance(FIGURE1).unwrap();
        let x = ints(&[10, 10, 5, 5]);
        let y = improve_subtree_abstract(&inst, &x, NodeId(0)).unwrap();
        assert_eq!(y.as_slice(), ints(&[8, 8, 3, 5]).as_slice());
        assert_eq!(uniform_gain(&inst, &x, y.as_slice(), &[NodeId(0), NodeId(1), NodeId(2)]), Rational::from_integer(2));
    }

    #[test]
    fn trivial_improvements_leave_x_alone() {
        let inst = parse_instance(FIGURE1).unwrap();
        // Root already at its target.
        let x = ints(&[8, 8, 5, 3]);
        assert_eq!(improve_subtree_abstract(&inst, &x, NodeId(0)).unwrap().as_slice(), x.as_slice());
        // Leaf: no path below it.
        let x = ints(&[10, 10, 5, 5]);
        assert_eq!(improve_subtree_abstract(&inst, &x, NodeId(2)).unwrap().as_slice(), x.as_slice());
    }

    #[test]
    fn small_known_optima() {
        let chain = parse_instance("sbhsp 1\nnodes 3\nnode 0 a=9\nnode 1 a=4\nnode 2 a=1\nedge 1 0\nedge 2 1\n").unwrap();
        let report = solve_l1_abstract(&chain).unwrap();
        assert_eq!(report.x.as_slice(), chain.targets());
        assert!(report.objective_value.is_zero());

        let pair = parse_instance("sbhsp 1\nnodes 2\nnode 0 a=3\nnode 1 a=7\nedge 1 0\n").unwrap();
        assert_eq!(solve_l1_abstract(&pair).unwrap().objective_value, Rational::from_integer(4));

        let dag = parse_instance("sbhsp 1\nnodes 3\nnode 0 a=1\nnode 1 a=1\nnode 2 a=1\nedge 2 0\nedge 2 1\nedge 1 0\n").unwrap();
        assert!(solve_l1_abstract(&dag).is_err());
    }
}
