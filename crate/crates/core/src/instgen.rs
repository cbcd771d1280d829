//! Deterministic instance generators.
//!
//! All randomness comes from [`SplitMix64`], so a `(seed, parameters)` pair
//! yields the same instance on every platform and in every language that
//! implements the same generator.

use crate::error::{Error, Result};
use crate::model::{Instance, NodeId};
use crate::rational::Rational;

/// SplitMix64 (Steele, Lea and Flood). State advances by the golden-ratio
/// increment `0x9E3779B97F4A7C15`; the output mix uses the multipliers
/// `0xBF58476D1CE4E5B9` and `0x94D049BB133111EB` with shifts 30, 27 and 31.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Value in `[0, bound)` by 128-bit multiply-high. `bound` must be positive.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "empty range");
        ((u128::from(self.next_u64()) * u128::from(bound)) >> 64) as u64
    }

    /// Value in `[lo, hi]`.
    pub fn inclusive(&mut self, lo: u64, hi: u64) -> u64 {
        assert!(lo <= hi, "empty range");
        match (hi - lo).checked_add(1) {
            Some(span) => lo + self.below(span),
            None => self.next_u64(),
        }
    }
}

fn int(v: u64) -> Rational {
    Rational::from_integer(v as i64)
}

fn check_max(name: &str, value: u64) -> Result<()> {
    if value > i64::MAX as u64 {
        return Err(Error::InvalidArgument(format!("{name} is too large")));
    }
    Ok(())
}

/// Random recursive tree: node `i >= 1` hangs below a node drawn uniformly
/// from `[0, i)`, so node 0 is the root. Targets are uniform in
/// `[0, max_a]`, weights (if requested) uniform in `[1, max_w]`.
pub fn gen_random_tree(n: usize, max_a: u64, seed: u64, weighted: bool, max_w: u64) -> Result<Instance> {
    if n == 0 {
        return Err(Error::InvalidArgument("a tree needs at least one node".into()));
    }
    if weighted && max_w == 0 {
        return Err(Error::InvalidArgument("max_w must be at least 1".into()));
    }
    check_max("max_a", max_a)?;
    check_max("max_w", max_w)?;
    let mut rng = SplitMix64::new(seed);
    let mut edges = Vec::with_capacity(n - 1);
    for i in 1..n {
        let parent = rng.below(i as u64) as usize;
        edges.push((NodeId(i), NodeId(parent)));
    }
    let targets = (0..n).map(|_| int(rng.inclusive(0, max_a))).collect();
    let weights = weighted.then(|| (0..n).map(|_| rng.inclusive(1, max_w)).collect());
    Instance::new(targets, weights, edges)
}

/// Bilayer graph with `nu` child-side nodes (ids `0..nu`) and `nw`
/// parent-side nodes (ids `nu..nu + nw`). Each of the `nu · nw` possible
/// edges is present with probability `edge_prob_percent / 100`. If no edge
/// is drawn, the edge `0 → nu` is added so the result is always bilayer.
pub fn gen_random_bilayer(nu: usize, nw: usize, edge_prob_percent: u32, max_a: u64, seed: u64) -> Result<Instance> {
    if nu == 0 || nw == 0 {
        return Err(Error::InvalidArgument("both layers need at least one node".into()));
    }
    if edge_prob_percent > 100 {
        return Err(Error::InvalidArgument("edge probability is a percentage".into()));
    }
    check_max("max_a", max_a)?;
    let mut rng = SplitMix64::new(seed);
    let mut edges = Vec::new();
    for u in 0..nu {
        for w in 0..nw {
            if rng.below(100) < u64::from(edge_prob_percent) {
                edges.push((NodeId(u), NodeId(nu + w)));
            }
        }
    }
    if edges.is_empty() {
        edges.push((NodeId(0), NodeId(nu)));
    }
    let targets = (0..nu + nw).map(|_| int(rng.inclusive(0, max_a))).collect();
    Instance::new(targets, None, edges)
}

/// Chain rooted at node 0 whose targets increase from the root to the leaf.
/// Every node then sits above its target after initialisation and each
/// push search walks most of the chain below it, which makes this a
/// quadratic-time input for the ℓ1 solvers.
pub fn gen_ascending_path(n: usize, seed: u64) -> Result<Instance> {
    if n == 0 {
        return Err(Error::InvalidArgument("a path needs at least one node".into()));
    }
    let mut rng = SplitMix64::new(seed);
    let span = 10 * n as u64;
    let mut values: Vec<u64> = (0..n).map(|_| rng.inclusive(0, span)).collect();
    values.sort_unstable();
    let edges = (1..n).map(|i| (NodeId(i), NodeId(i - 1))).collect();
    Instance::new(values.into_iter().map(int).collect(), None, edges)
}

/// A family of sets whose union is `{0, …, n_elements − 1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetCoverSpec {
    n_elements: usize,
    sets: Vec<Vec<usize>>,
}

impl SetCoverSpec {
    /// Elements are numbered from 0. Duplicate elements inside a set are
    /// ignored.
    pub fn new(n_elements: usize, sets: Vec<Vec<usize>>) -> Result<Self> {
        let mut covered = vec![false; n_elements];
        let mut clean = Vec::with_capacity(sets.len());
        for set in sets {
            let mut set = set;
            set.sort_unstable();
            set.dedup();
            for &e in &set {
                if e >= n_elements {
                    return Err(Error::InvalidArgument(format!("element {e} out of range")));
                }
                covered[e] = true;
            }
            clean.push(set);
        }
        if let Some(e) = covered.iter().position(|c| !c) {
            return Err(Error::InvalidArgument(format!("element {e} is in no set")));
        }
        Ok(SetCoverSpec {
            n_elements,
            sets: clean,
        })
    }

    pub fn m(&self) -> usize {
        self.sets.len()
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }
}

/// Weighted bilayer instance whose integral weighted-ℓ1 optimum is the
/// minimum cover size.
///
/// Set `i` becomes node `i` with `a = 1`, `w = 1`; element `j` becomes node
/// `m + j` with `a = deg(j) − 1`, `w = m`, and every set is a child of each
/// of its elements. Dropping a set to 0 pays 1; an element can absorb that
/// only if some other set still covers it, so raising the element instead
/// would cost `m`.
pub fn gen_setcover_instance(family: &SetCoverSpec) -> Result<Instance> {
    let m = family.m();
    let n = family.n_elements();
    let mut degree = vec![0u64; n];
    let mut edges = Vec::new();
    for (i, set) in family.sets().iter().enumerate() {
        for &e in set {
            degree[e] += 1;
            edges.push((NodeId(i), NodeId(m + e)));
        }
    }
    let mut targets = vec![Rational::one(); m];
    targets.extend(degree.iter().map(|&d| int(d - 1)));
    let mut weights = vec![1u64; m];
    weights.extend(std::iter::repeat_n(m as u64, n));
    Instance::new(targets, Some(weights), edges)
}

/// Four-node instance on which the naive bottom-up assignment scores 4
/// although 2 is optimal: root and middle node at 8, two leaves at 5.
pub fn figure1_instance() -> Instance {
    let targets = [8, 8, 5, 5].iter().map(|&v| Rational::from_integer(v)).collect();
    let edges = vec![(NodeId(1), NodeId(0)), (NodeId(2), NodeId(1)), (NodeId(3), NodeId(1))];
    Instance::new(targets, None, edges).expect("fixture is valid")
}

/// `x_v = max(a_v, Σ children)` in children-first order: the feasible
/// assignment a node-by-node greedy pass produces.
pub fn bottom_up_assignment(inst: &Instance) -> Vec<Rational> {
    let mut x = vec![Rational::zero(); inst.len()];
    for &v in inst.topo_order() {
        x[v.index()] = Rational::max_of(inst.target(v).clone(), inst.child_sum(v, &x));
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{is_feasible, objective, Kind, Norm};

    #[test]
    fn splitmix_reference_values() {
        // First outputs for seed 0 as published with the reference code.
        let mut rng = SplitMix64::new(0);
        assert_eq!(rng.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(rng.next_u64(), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(rng.next_u64(), 0x06C4_5D18_8009_454F);
    }

    #[test]
    fn random_trees_are_deterministic_trees() {
        let a = gen_random_tree(12, 10, 7, false, 1).unwrap();
        let b = gen_random_tree(12, 10, 7, false, 1).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        assert!(a.is_tree());
        assert_eq!(a.root(), Some(NodeId(0)));
        assert!(a.targets().iter().all(|t| *t <= Rational::from_integer(10)));
        assert_ne!(a.to_text(), gen_random_tree(12, 10, 8, false, 1).unwrap().to_text());

        let single = gen_random_tree(1, 5, 1, false, 1).unwrap();
        assert_eq!(single.len(), 1);
        assert!(single.is_tree());

        let w = gen_random_tree(30, 10, 3, true, 4).unwrap();
        assert!(w.weights().unwrap().iter().all(|&x| (1..=4).contains(&x)));
        assert!(gen_random_tree(0, 5, 1, false, 1).is_err());
        assert!(gen_random_tree(3, 5, 1, true, 0).is_err());
    }

    #[test]
    fn random_bilayers_are_bilayer() {
        for seed in 0..20 {
            let inst = gen_random_bilayer(3, 2, 30, 6, seed).unwrap();
            assert_eq!(inst.kind(), Kind::Bilayer);
            assert_eq!(
                inst.to_text(),
                gen_random_bilayer(3, 2, 30, 6, seed).unwrap().to_text()
            );
        }
        assert_eq!(gen_random_bilayer(1, 1, 0, 3, 1).unwrap().kind(), Kind::Bilayer);
        assert!(gen_random_bilayer(0, 1, 50, 3, 1).is_err());
    }

    #[test]
    fn ascending_path_shape() {
        let inst = gen_ascending_path(50, 3).unwrap();
        assert!(inst.is_tree());
        assert!(inst.targets().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn setcover_targets_and_weights() {
        let family = SetCoverSpec::new(3, vec![vec![0, 1], vec![1, 2], vec![2]]).unwrap();
        let inst = gen_setcover_instance(&family).unwrap();
        let ints: Vec<Rational> = [1, 1, 1, 0, 1, 1].iter().map(|&v| Rational::from_integer(v)).collect();
        assert_eq!(inst.targets(), ints.as_slice());
        assert_eq!(inst.weights().unwrap(), &[1, 1, 1, 3, 3, 3]);
        assert_eq!(inst.kind(), Kind::Bilayer);
        assert!(SetCoverSpec::new(3, vec![vec![0, 1]]).is_err());
        assert!(SetCoverSpec::new(2, vec![vec![0, 2]]).is_err());
    }

    #[test]
    fn figure1_fixture() {
        let inst = figure1_instance();
        assert!(!is_feasible(&inst, inst.targets()).unwrap());
        let naive = bottom_up_assignment(&inst);
        assert_eq!(
            naive,
            [10, 10, 5, 5].iter().map(|&v| Rational::from_integer(v)).collect::<Vec<_>>()
        );
        assert_eq!(objective(&inst, &naive, Norm::L1, false).unwrap(), Rational::from_integer(4));
    }
}
