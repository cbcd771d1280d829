use hiersmooth::bilayer::{approximate_covering, dual_lower_bound, reduce_bilayer, solve_covering_exact};
use hiersmooth::l1_tree::{push_path, solve_l1_abstract, solve_l1_dfs};
use hiersmooth::linf::{assign_for_threshold, solve_linf};
use hiersmooth::oracle::solve_lp_exact;
use hiersmooth::{
    format_solution, is_feasible, objective, parse_instance, parse_solution, Instance, NodeId, Norm, Rational,
};
use proptest::prelude::*;

fn rational() -> impl Strategy<Value = Rational> {
    prop_oneof![
        3 => (0i64..=12).prop_map(Rational::from_integer),
        1 => (0i64..=40, 1i64..=4).prop_map(|(p, q)| Rational::new(p, q)),
    ]
}

/// Random recursive tree: node i hangs below some node in `0..i`.
fn tree(max_n: usize) -> impl Strategy<Value = Instance> {
    (1..=max_n)
        .prop_flat_map(|n| {
            let parents: Vec<_> = (1..n).map(|i| 0..i).collect();
            (parents, prop::collection::vec(rational(), n))
        })
        .prop_map(|(parents, targets)| {
            let edges = parents.iter().enumerate().map(|(i, &p)| (NodeId(i + 1), NodeId(p))).collect();
            Instance::new(targets, None, edges).unwrap()
        })
}

fn weighted_tree(max_n: usize) -> impl Strategy<Value = Instance> {
    tree(max_n).prop_flat_map(|inst| {
        let n = inst.len();
        prop::collection::vec(1u64..=5, n).prop_map(move |w| {
            let targets = inst.targets().iter().map(|a| Rational::from_integer(a.ceil().to_i64().unwrap())).collect();
            inst.with_values(targets, Some(w)).unwrap()
        })
    })
}

/// Node i may take any subset of `0..i` as parents.
fn dag(max_n: usize) -> impl Strategy<Value = Instance> {
    (1..=max_n)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(prop::collection::vec(any::<bool>(), n), n),
                prop::collection::vec(rational(), n),
            )
        })
        .prop_map(|(adj, targets)| {
            let n = targets.len();
            let mut edges = Vec::new();
            for i in 0..n {
                for j in 0..i {
                    if adj[i][j] {
                        edges.push((NodeId(i), NodeId(j)));
                    }
                }
            }
            Instance::new(targets, None, edges).unwrap()
        })
}

fn bilayer() -> impl Strategy<Value = Instance> {
    (1usize..=6, 1usize..=4)
        .prop_flat_map(|(nu, nw)| {
            (
                prop::collection::vec(prop::collection::vec(any::<bool>(), nw), nu),
                prop::collection::vec(rational(), nu + nw),
            )
        })
        .prop_map(|(adj, targets)| {
            let nu = adj.len();
            let mut edges = Vec::new();
            for (u, row) in adj.iter().enumerate() {
                for (w, &on) in row.iter().enumerate() {
                    if on {
                        edges.push((NodeId(u), NodeId(nu + w)));
                    }
                }
            }
            if edges.is_empty() {
                edges.push((NodeId(0), NodeId(nu)));
            }
            Instance::new(targets, None, edges).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn tree_solvers_reach_the_lp_optimum(inst in tree(10)) {
        let lp = solve_lp_exact(&inst, Norm::L1, false).unwrap();
        let dfs = solve_l1_dfs(&inst, false).unwrap();
        let abs = solve_l1_abstract(&inst).unwrap();
        prop_assert_eq!(&dfs.objective_value, &lp.objective);
        prop_assert_eq!(&abs.objective_value, &lp.objective);
        prop_assert!(is_feasible(&inst, dfs.x.as_slice()).unwrap());
        prop_assert!(is_feasible(&inst, abs.x.as_slice()).unwrap());
        if inst.targets().iter().all(Rational::is_integer) {
            prop_assert!(dfs.x.is_integral());
        }
    }

    #[test]
    fn weighted_solver_reaches_the_lp_optimum(inst in weighted_tree(10)) {
        let lp = solve_lp_exact(&inst, Norm::L1, true).unwrap();
        let dfs = solve_l1_dfs(&inst, true).unwrap();
        prop_assert_eq!(&dfs.objective_value, &lp.objective);
        prop_assert!(is_feasible(&inst, dfs.x.as_slice()).unwrap());
        prop_assert!(dfs.x.is_integral());
    }

    #[test]
    fn root_never_ends_below_its_target_or_the_child_sum(inst in tree(10)) {
        let dfs = solve_l1_dfs(&inst, false).unwrap();
        let root = inst.root().unwrap();
        let x = dfs.x.as_slice();
        // The root has no parent to satisfy, so it sits at max(a, Σ children).
        let expected = Rational::max_of(inst.target(root).clone(), inst.child_sum(root, x));
        prop_assert_eq!(&x[root.index()], &expected);
    }

    #[test]
    fn push_path_keeps_feasibility(inst in tree(8), pick in any::<prop::sample::Index>(), frac in 0i64..=4) {
        // Start from a feasible point with slack everywhere: x = max(a, Σ children) + 1.
        let mut x = vec![Rational::zero(); inst.len()];
        for &v in inst.topo_order() {
            x[v.index()] = Rational::max_of(inst.target(v).clone(), inst.child_sum(v, &x)) + Rational::one();
        }
        let v = NodeId(pick.index(inst.len()));
        let mut path = vec![v];
        while let Some(&c) = inst.children(*path.last().unwrap()).first() {
            path.push(c);
        }
        let eps = Rational::new(frac, 4);
        let (y, _) = push_path(&inst, &x, &path, &eps).unwrap();
        prop_assert!(is_feasible(&inst, y.as_slice()).unwrap());
        for (after, before) in y.as_slice().iter().zip(&x) {
            prop_assert!(after <= before);
        }
        prop_assert_eq!(&(&x[v.index()] - &y[v]), &eps);
    }

    #[test]
    fn linf_matches_lp_and_threshold_is_monotone(inst in dag(8), k in 0i64..=16) {
        let tol = Rational::new(1, 1 << 20);
        let exact = solve_lp_exact(&inst, Norm::Linf, false).unwrap().objective;
        let sol = solve_linf(&inst, &tol).unwrap();
        prop_assert!(sol.t_star >= exact);
        prop_assert!(&sol.t_star - &exact <= tol);
        prop_assert!(is_feasible(&inst, sol.x.as_slice()).unwrap());
        prop_assert!(objective(&inst, sol.x.as_slice(), Norm::Linf, false).unwrap() <= sol.t_star);

        let t = Rational::new(k, 4);
        let lower = assign_for_threshold(&inst, &t).unwrap();
        let higher = assign_for_threshold(&inst, &(&t + &Rational::new(1, 4))).unwrap();
        prop_assert_eq!(lower.feasible_at_t, t >= exact);
        prop_assert!(!lower.feasible_at_t || higher.feasible_at_t);
        for (hi, lo) in higher.x_min.as_slice().iter().zip(lower.x_min.as_slice()) {
            prop_assert!(hi <= lo);
        }
    }

    #[test]
    fn covering_mw_is_certified(inst in bilayer(), eps_num in 1i64..=50) {
        let eps = Rational::new(eps_num, 100);
        let lp = reduce_bilayer(&inst).unwrap();
        let (_, opt) = solve_covering_exact(&lp).unwrap();
        let full = solve_lp_exact(&inst, Norm::L1, false).unwrap().objective;
        prop_assert_eq!(&opt, &full);
        let sol = approximate_covering(&lp, &eps).unwrap();
        lp.check(&sol.d).unwrap();
        prop_assert!(sol.lower_bound <= opt);
        prop_assert!(opt <= sol.cost);
        prop_assert!(sol.cost <= (Rational::one() + &eps) * &sol.lower_bound);
    }

    #[test]
    fn any_row_prices_give_a_lower_bound(inst in bilayer(), prices in prop::collection::vec(0i64..=8, 4)) {
        let lp = reduce_bilayer(&inst).unwrap();
        let y: Vec<Rational> = (0..lp.num_rows()).map(|r| Rational::new(prices[r % prices.len()], 4)).collect();
        let (_, opt) = solve_covering_exact(&lp).unwrap();
        prop_assert!(dual_lower_bound(&lp, &y).unwrap() <= opt);
    }

    #[test]
    fn text_formats_round_trip(inst in weighted_tree(12)) {
        let text = inst.to_text();
        prop_assert_eq!(parse_instance(&text).unwrap().to_text(), text);
        let dfs = solve_l1_dfs(&inst, true).unwrap();
        let (x, obj) = parse_solution(&format_solution(dfs.x.as_slice(), &dfs.objective_value)).unwrap();
        prop_assert_eq!(x, dfs.x);
        prop_assert_eq!(obj, dfs.objective_value);
    }
}
