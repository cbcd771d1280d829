use crate::error::{Error, Result};
use crate::model::{Instance, NodeId};
use crate::rational::Rational;

/// Largest expanded tree [`expand_weighted`] builds.
pub const DEFAULT_EXPANSION_CAP: u64 = 1_000_000;

/// Which expanded nodes stand for which original node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainMap {
    /// `chains[i]` lists node i's chain bottom-up: children hang below the
    /// first entry, the last entry links to the parent.
    chains: Vec<Vec<NodeId>>,
    original: Vec<NodeId>,
}

impl ChainMap {
    pub fn chain(&self, v: NodeId) -> &[NodeId] {
        &self.chains[v.index()]
    }

    pub fn original(&self, expanded: NodeId) -> NodeId {
        self.original[expanded.index()]
    }

    pub fn expanded_len(&self) -> usize {
        self.original.len()
    }

    /// Copies each original value onto its whole chain.
    pub fn spread(&self, x: &[Rational]) -> Vec<Rational> {
        self.original.iter().map(|v| x[v.index()].clone()).collect()
    }
}

/// Replaces every node of weight w with a chain of w unit-weight nodes that
/// all carry the node's target.
pub fn expand_weighted(inst: &Instance) -> Result<(Instance, ChainMap)> {
    expand_weighted_with_cap(inst, DEFAULT_EXPANSION_CAP)
}

pub fn expand_weighted_with_cap(inst: &Instance, cap: u64) -> Result<(Instance, ChainMap)> {
    let weights = inst.weights().ok_or(Error::MissingWeights)?;
    let size = weights.iter().try_fold(0u64, |acc, &w| acc.checked_add(w));
    let size = match size {
        Some(s) if s <= cap => s,
        Some(s) => return Err(Error::ExpansionTooLarge { size: s, cap }),
        None => return Err(Error::ExpansionTooLarge { size: u64::MAX, cap }),
    };

    let mut chains = Vec::with_capacity(inst.len());
    let mut original = Vec::with_capacity(size as usize);
    let mut targets = Vec::with_capacity(size as usize);
    let mut edges = Vec::with_capacity(size as usize);
    for v in inst.nodes() {
        let start = original.len();
        let chain: Vec<NodeId> = (start..start + weights[v.index()] as usize).map(NodeId).collect();
        for pair in chain.windows(2) {
            edges.push((pair[0], pair[1]));
        }
        original.extend(std::iter::repeat_n(v, chain.len()));
        targets.extend(std::iter::repeat_n(inst.target(v).clone(), chain.len()));
        chains.push(chain);
    }
    for &(child, parent) in inst.edges() {
        let top = *chains[child.index()].last().expect("weights are positive");
        edges.push((top, chains[parent.index()][0]));
    }
    let expanded = Instance::new(targets, None, edges)?;
    Ok((expanded, ChainMap { chains, original }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_instance;

    #[test]
    fn single_node_becomes_a_chain() {
        let inst = parse_instance("sbhsp 1\nnodes 1\nnode 0 a=5 w=3\n").unwrap();
        let (t, map) = expand_weighted(&inst).unwrap();
        assert_eq!(t.len(), 3);
        assert!(t.is_tree());
        assert!(t.targets().iter().all(|a| *a == Rational::from_integer(5)));
        assert_eq!(map.chain(NodeId(0)), &[NodeId(0), NodeId(1), NodeId(2)]);
        assert_eq!(t.root(), Some(NodeId(2)));
    }

    #[test]
    fn unit_weights_keep_the_shape() {
        let inst = parse_instance(
            "sbhsp 1\nnodes 4\nnode 0 a=8 w=1\nnode 1 a=8 w=1\nnode 2 a=5 w=1\nnode 3 a=5 w=1\nedge 1 0\nedge 2 1\nedge 3 1\n",
        )
        .unwrap();
        let (t, map) = expand_weighted(&inst).unwrap();
        assert_eq!(t.edges(), inst.edges());
        assert_eq!(t.targets(), inst.targets());
        assert_eq!(map.original(NodeId(3)), NodeId(3));
    }

    #[test]
    fn chain_wiring() {
        let inst = parse_instance(
            "sbhsp 1\nnodes 4\nnode 0 a=8 w=1\nnode 1 a=8 w=2\nnode 2 a=5 w=1\nnode 3 a=5 w=1\nedge 1 0\nedge 2 1\nedge 3 1\n",
        )
        .unwrap();
        let (t, map) = expand_weighted(&inst).unwrap();
        assert_eq!(t.len(), 5);
        let chain = map.chain(NodeId(1));
        assert_eq!(t.children(chain[0]).len(), 2);
        assert_eq!(t.parents(chain[1]), map.chain(NodeId(0)));
        assert_eq!(t.children(chain[1]), &[chain[0]]);
    }

    #[test]
    fn cap_and_missing_weights() {
        let inst = parse_instance("sbhsp 1\nnodes 2\nnode 0 a=1 w=600000\nnode 1 a=1 w=600000\nedge 1 0\n").unwrap();
        assert!(matches!(
            expand_weighted(&inst),
            Err(Error::ExpansionTooLarge { size: 1_200_000, .. })
        ));
        let plain = parse_instance("sbhsp 1\nnodes 1\nnode 0 a=1\n").unwrap();
        assert!(matches!(expand_weighted(&plain), Err(Error::MissingWeights)));
    }
}
