//! Ground truth for the combinatorial solvers.
//!
//! * [`solve_lp_exact`] builds the ℓ1 or ℓ∞ program for any DAG and solves it
//!   with the exact [`simplex`].
//! * [`extract_dual`] and [`check_certificate`] work with the simplified ℓ1
//!   dual on trees: `max Σ a_i β_i` subject to `|β_i| <= w_i`, `α >= 0` and
//!   `β_i + α_i − α_{p(i)} <= 0`.
//! * [`brute_force_integral`] enumerates integral assignments.

pub mod simplex;

use crate::error::{Error, Result};
use crate::model::{Assignment, Instance, NodeId, Norm};
use crate::rational::Rational;
use simplex::{LpProblem, LpSolution, Relation};

/// Exact optimum of the ℓ1 or ℓ∞ program for an instance.
#[derive(Debug, Clone)]
pub struct ExactSolution {
    pub x: Assignment,
    pub objective: Rational,
    pub norm: Norm,
    pub weighted: bool,
    lp: LpSolution,
}

impl ExactSolution {
    pub fn lp(&self) -> &LpSolution {
        &self.lp
    }
}

/// Dual values for the simplified ℓ1 dual, indexed by node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualCertificate {
    pub alpha: Vec<Rational>,
    pub beta: Vec<Rational>,
}

impl DualCertificate {
    pub fn zeros(n: usize) -> Self {
        DualCertificate {
            alpha: vec![Rational::zero(); n],
            beta: vec![Rational::zero(); n],
        }
    }

    /// `Σ a_i β_i`.
    pub fn objective(&self, inst: &Instance) -> Rational {
        inst.targets().iter().zip(&self.beta).map(|(a, b)| a * b).sum()
    }
}

fn weight_of(inst: &Instance, v: usize, weighted: bool) -> Result<Rational> {
    if weighted {
        let w = inst.weights().ok_or(Error::MissingWeights)?;
        Ok(Rational::from_integer(w[v] as i64))
    } else {
        Ok(Rational::one())
    }
}

/// Builds the ℓ1 program with `x_i = a_i + p_i − q_i`:
///
/// ```text
/// min Σ w_i (p_i + q_i)
///   p_i − q_i − Σ_{c∈C(i)} (p_c − q_c) >= Σ_{c∈C(i)} a_c − a_i   (sum rows)
///   p_i − q_i                           >= −a_i                   (x_i >= 0)
/// ```
///
/// This is the deviation-variable program with `d_i = p_i + q_i`; its matrix
/// is totally unimodular on trees, so basic duals are integral.
fn l1_program(inst: &Instance, weighted: bool) -> Result<LpProblem> {
    let n = inst.len();
    let mut lp = LpProblem::new(2 * n);
    for i in 0..n {
        let w = weight_of(inst, i, weighted)?;
        lp.objective[i] = w.clone();
        lp.objective[n + i] = w;
    }
    let one = Rational::one;
    for v in inst.nodes() {
        let i = v.index();
        let mut coeffs = vec![(i, one()), (n + i, -one())];
        let mut rhs = -inst.target(v);
        for c in inst.children(v) {
            coeffs.push((c.index(), -one()));
            coeffs.push((n + c.index(), one()));
            rhs += inst.target(*c);
        }
        lp.add(coeffs, Relation::Ge, rhs);
    }
    for v in inst.nodes() {
        let i = v.index();
        lp.add(
            vec![(i, one()), (n + i, -one())],
            Relation::Ge,
            -inst.target(v),
        );
    }
    Ok(lp)
}

/// `min t` subject to `|x_i − a_i| <= t` and the sum constraints.
fn linf_program(inst: &Instance) -> LpProblem {
    let n = inst.len();
    let t = n;
    let mut lp = LpProblem::new(n + 1);
    lp.objective[t] = Rational::one();
    let one = Rational::one;
    for v in inst.nodes() {
        let i = v.index();
        lp.add(vec![(i, one()), (t, one())], Relation::Ge, inst.target(v).clone());
        lp.add(vec![(i, one()), (t, -one())], Relation::Le, inst.target(v).clone());
        let mut coeffs = vec![(i, one())];
        coeffs.extend(inst.children(v).iter().map(|c| (c.index(), -one())));
        lp.add(coeffs, Relation::Ge, Rational::zero());
    }
    lp
}

/// Exact optimum of the ℓ1 (optionally weighted) or ℓ∞ program on any DAG.
pub fn solve_lp_exact(inst: &Instance, norm: Norm, weighted: bool) -> Result<ExactSolution> {
    let n = inst.len();
    let (lp, x) = match norm {
        Norm::L1 => {
            let lp = l1_program(inst, weighted)?.solve()?;
            let x = (0..n)
                .map(|i| &(&inst.targets()[i] + &lp.values[i]) - &lp.values[n + i])
                .collect();
            (lp, x)
        }
        Norm::Linf => {
            if weighted {
                return Err(Error::InvalidArgument(
                    "weighted objective is only defined for the l1 norm".into(),
                ));
            }
            let lp = linf_program(inst).solve()?;
            let x = lp.values[..n].to_vec();
            (lp, x)
        }
    };
    Ok(ExactSolution {
        x: Assignment::new(x),
        objective: lp.objective.clone(),
        norm,
        weighted,
        lp,
    })
}

/// Maps the simplex duals of the ℓ1 tree program onto `(α, β)`.
///
/// With `α_i` the dual of node i's sum row and `μ_i` that of its
/// non-negativity row, `β_i = α_{p(i)} − α_i − μ_i`.
pub fn extract_dual(inst: &Instance, sol: &ExactSolution) -> Result<DualCertificate> {
    if sol.norm != Norm::L1 {
        return Err(Error::InvalidArgument("dual extraction needs the l1 program".into()));
    }
    if !inst.is_tree() {
        return Err(Error::Shape {
            expected: "tree",
            found: inst.kind(),
        });
    }
    let n = inst.len();
    let duals = &sol.lp.duals;
    if duals.len() != 2 * n {
        return Err(Error::LengthMismatch {
            expected: 2 * n,
            got: duals.len(),
        });
    }
    let alpha: Vec<Rational> = duals[..n].to_vec();
    let beta = inst
        .nodes()
        .map(|v| {
            let i = v.index();
            let parent_alpha: Rational = inst.parents(v).iter().map(|p| &alpha[p.index()]).sum();
            &(&parent_alpha - &alpha[i]) - &duals[n + i]
        })
        .collect();
    Ok(DualCertificate { alpha, beta })
}

/// Accepts iff `cert` is dual feasible and satisfies complementary slackness
/// with the feasible assignment `x`:
///
/// * C1: `x_i > a_i ⇒ β_i = −w_i`
/// * C2: `x_i < a_i ⇒ β_i = w_i`
/// * C3: `x_i > Σ_{c∈C(i)} x_c ⇒ α_i = 0`
/// * C4: `x_i > 0 ⇒ β_i + α_i − α_{p(i)} = 0`, with `α_{p(root)} = 0`
///
/// `w_i = 1` unless `weighted`.
pub fn check_certificate(
    inst: &Instance,
    x: &[Rational],
    cert: &DualCertificate,
    weighted: bool,
) -> Result<bool> {
    let n = inst.len();
    for len in [x.len(), cert.alpha.len(), cert.beta.len()] {
        if len != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: len,
            });
        }
    }
    for v in inst.nodes() {
        let i = v.index();
        let w = weight_of(inst, i, weighted)?;
        let (alpha, beta) = (&cert.alpha[i], &cert.beta[i]);
        if alpha.is_negative() || *beta > w || *beta < -&w {
            return Ok(false);
        }
        let parent_alpha: Rational = inst.parents(v).iter().map(|p| &cert.alpha[p.index()]).sum();
        let reduced = &(beta + alpha) - &parent_alpha;
        if reduced.is_positive() {
            return Ok(false);
        }
        let a = inst.target(v);
        if x[i] > *a && *beta != -&w {
            return Ok(false);
        }
        if x[i] < *a && *beta != w {
            return Ok(false);
        }
        if inst.slack(v, x).is_positive() && !alpha.is_zero() {
            return Ok(false);
        }
        if x[i].is_positive() && !reduced.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Largest search space [`brute_force_integral`] will enumerate.
pub const BRUTE_FORCE_LIMIT: f64 = 1e8;

/// Exhaustive minimum over integral `x ∈ [0, bound]^n` satisfying the sum
/// constraints. Requires integral targets.
pub fn brute_force_integral(
    inst: &Instance,
    bound: u64,
    weighted: bool,
) -> Result<(Assignment, Rational)> {
    let n = inst.len();
    let points = (bound as f64 + 1.0).powi(n as i32);
    if points > BRUTE_FORCE_LIMIT {
        return Err(Error::SearchSpace {
            points,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let targets = inst
        .targets()
        .iter()
        .map(|a| {
            a.to_i64()
                .ok_or_else(|| Error::InvalidArgument(format!("target {a} is not integral")))
        })
        .collect::<Result<Vec<i64>>>()?;
    let weights: Vec<i64> = (0..n)
        .map(|i| {
            if weighted {
                inst.weights()
                    .map(|w| w[i] as i64)
                    .ok_or(Error::MissingWeights)
            } else {
                Ok(1)
            }
        })
        .collect::<Result<_>>()?;

    let search = BruteForce {
        inst,
        order: inst.topo_order(),
        targets,
        weights,
        bound: bound as i64,
    };
    let mut x = vec![0i64; n];
    let mut best = (i64::MAX, vec![0i64; n]);
    search.descend(0, 0, &mut x, &mut best);
    let (cost, xs) = best;
    Ok((
        Assignment::from_integers(&xs),
        Rational::from_integer(cost),
    ))
}

struct BruteForce<'a> {
    inst: &'a Instance,
    order: &'a [NodeId],
    targets: Vec<i64>,
    weights: Vec<i64>,
    bound: i64,
}

impl BruteForce<'_> {
    // Nodes are fixed children-first, so each node's lower limit is the
    // already-known child sum. Branches that cannot beat the incumbent are cut.
    // A node without parents constrains nothing else, so only its cheapest
    // value in `[lower, bound]` needs visiting.
    fn descend(&self, depth: usize, cost: i64, x: &mut [i64], best: &mut (i64, Vec<i64>)) {
        if cost >= best.0 {
            return;
        }
        if depth == self.order.len() {
            *best = (cost, x.to_vec());
            return;
        }
        let v = self.order[depth];
        let i = v.index();
        let lower: i64 = self.inst.children(v).iter().map(|c| x[c.index()]).sum();
        if lower > self.bound {
            return;
        }
        let range = if self.inst.parents(v).is_empty() {
            let value = self.targets[i].clamp(lower, self.bound);
            value..=value
        } else {
            lower..=self.bound
        };
        for value in range {
            x[i] = value;
            let step = self.weights[i] * (value - self.targets[i]).abs();
            self.descend(depth + 1, cost + step, x, best);
        }
        x[i] = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{is_feasible, objective, parse_instance};

    const FIGURE1: &str = "sbhsp 1\nnodes 4\nnode 0 a=8\nnode 1 a=8\nnode 2 a=5\nnode 3 a=5\nedge 1 0\nedge 2 1\nedge 3 1\n";

    fn chain2(root: i64, child: i64) -> Instance {
        parse_instance(&format!(
            "sbhsp 1\nnodes 2\nnode 0 a={root}\nnode 1 a={child}\nedge 1 0\n"
        ))
        .unwrap()
    }

    fn two_leaf() -> Instance {
        parse_instance("sbhsp 1\nnodes 3\nnode 0 a=0\nnode 1 a=1\nnode 2 a=1\nedge 1 0\nedge 2 0\n")
            .unwrap()
    }

    #[test]
    fn figure1_l1_optimum_is_two() {
        let inst = parse_instance(FIGURE1).unwrap();
        let sol = solve_lp_exact(&inst, Norm::L1, false).unwrap();
        assert_eq!(sol.objective, Rational::from_integer(2));
        assert!(is_feasible(&inst, sol.x.as_slice()).unwrap());
        assert_eq!(
            objective(&inst, sol.x.as_slice(), Norm::L1, false).unwrap(),
            sol.objective
        );
    }

    #[test]
    fn feasible_instance_has_zero_objective() {
        let inst = chain2(9, 4);
        for norm in [Norm::L1, Norm::Linf] {
            let sol = solve_lp_exact(&inst, norm, false).unwrap();
            assert!(sol.objective.is_zero());
            assert_eq!(sol.x.as_slice(), inst.targets());
        }
    }

    #[test]
    fn two_leaf_linf_optimum_is_two_thirds() {
        let sol = solve_lp_exact(&two_leaf(), Norm::Linf, false).unwrap();
        assert_eq!(sol.objective, Rational::new(2, 3));
    }

    #[test]
    fn brute_force_matches_known_values() {
        let fig = parse_instance(FIGURE1).unwrap();
        let (x, obj) = brute_force_integral(&fig, 12, false).unwrap();
        assert_eq!(obj, Rational::from_integer(2));
        assert!(is_feasible(&fig, x.as_slice()).unwrap());

        let single = parse_instance("sbhsp 1\nnodes 1\nnode 0 a=5\n").unwrap();
        let (x, obj) = brute_force_integral(&single, 10, false).unwrap();
        assert_eq!(x.as_slice(), &[Rational::from_integer(5)]);
        assert!(obj.is_zero());

        let (_, obj) = brute_force_integral(&chain2(3, 7), 10, false).unwrap();
        assert_eq!(obj, Rational::from_integer(4));
        let lp = solve_lp_exact(&chain2(3, 7), Norm::L1, false).unwrap();
        assert_eq!(lp.objective, obj);
    }

    #[test]
    fn brute_force_guards() {
        let fig = parse_instance(FIGURE1).unwrap();
        assert!(matches!(
            brute_force_integral(&fig, 100_000, false),
            Err(Error::SearchSpace { .. })
        ));
        let frac = parse_instance("sbhsp 1\nnodes 1\nnode 0 a=1/2\n").unwrap();
        assert!(matches!(
            brute_force_integral(&frac, 3, false),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn figure1_dual_has_zero_gap_and_is_accepted() {
        let inst = parse_instance(FIGURE1).unwrap();
        let sol = solve_lp_exact(&inst, Norm::L1, false).unwrap();
        let cert = extract_dual(&inst, &sol).unwrap();
        assert_eq!(cert.objective(&inst), Rational::from_integer(2));
        assert!(check_certificate(&inst, sol.x.as_slice(), &cert, false).unwrap());
        assert!(cert.beta.iter().all(|b| b.is_integer()));

        // The hand-picked optimum (8,8,5,3) is certified by the same duals.
        let x: Vec<Rational> = [8, 8, 5, 3].iter().map(|&v| Rational::from_integer(v)).collect();
        assert!(check_certificate(&inst, &x, &cert, false).unwrap());
    }

    #[test]
    fn zero_certificate_for_feasible_targets() {
        let inst = chain2(9, 4);
        let cert = DualCertificate::zeros(2);
        assert!(check_certificate(&inst, inst.targets(), &cert, false).unwrap());
        let sol = solve_lp_exact(&inst, Norm::L1, false).unwrap();
        let extracted = extract_dual(&inst, &sol).unwrap();
        assert!(extracted.objective(&inst).is_zero());
        assert!(check_certificate(&inst, inst.targets(), &extracted, false).unwrap());
    }

    #[test]
    fn perturbed_certificates_are_rejected() {
        let inst = parse_instance(FIGURE1).unwrap();
        let sol = solve_lp_exact(&inst, Norm::L1, false).unwrap();
        let cert = extract_dual(&inst, &sol).unwrap();
        let x = sol.x.as_slice();
        // C3: bump α at a node with slack.
        let slack_node = inst
            .nodes()
            .find(|&v| inst.slack(v, x).is_positive())
            .expect("some node has slack");
        let mut bad = cert.clone();
        bad.alpha[slack_node.index()] += Rational::one();
        assert!(!check_certificate(&inst, x, &bad, false).unwrap());
        // Box constraint on β.
        let mut bad = cert.clone();
        bad.beta[0] = Rational::from_integer(2);
        assert!(!check_certificate(&inst, x, &bad, false).unwrap());
        assert!(check_certificate(&inst, &x[..2], &cert, false).is_err());
    }

    #[test]
    fn weighted_program_uses_weights() {
        let inst =
            parse_instance("sbhsp 1\nnodes 2\nnode 0 a=3 w=5\nnode 1 a=7\nedge 1 0\n").unwrap();
        let sol = solve_lp_exact(&inst, Norm::L1, true).unwrap();
        // Moving the child down costs 1 per unit, moving the root up costs 5.
        assert_eq!(sol.objective, Rational::from_integer(4));
        assert_eq!(sol.x[NodeId(0)], Rational::from_integer(3));
        let cert = extract_dual(&inst, &sol).unwrap();
        assert!(check_certificate(&inst, sol.x.as_slice(), &cert, true).unwrap());
        assert_eq!(cert.objective(&inst), sol.objective);
        let (_, brute) = brute_force_integral(&inst, 10, true).unwrap();
        assert_eq!(brute, sol.objective);
    }
}
