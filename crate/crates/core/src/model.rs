//! Instances, assignments and the checks shared by every solver.
//!
//! Edges are stored child -> parent: an edge `(u, w)` states that `u` is one
//! of the children whose values must sum to at most `x_w`.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::ops::Index;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::rational::Rational;

/// Dense node identifier in `[0, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Shape classification of an instance graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    Tree,
    Dag,
    Bilayer,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Tree => "tree",
            Kind::Dag => "dag",
            Kind::Bilayer => "bilayer",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L1,
    Linf,
}

/// A validated smoothing instance: graph, targets and optional weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    edges: Vec<(NodeId, NodeId)>,
    targets: Vec<Rational>,
    weights: Option<Vec<u64>>,
    children: Vec<Vec<NodeId>>,
    parents: Vec<Vec<NodeId>>,
    topo_order: Vec<NodeId>,
    kind: Kind,
}

impl Instance {
    /// Builds an instance, rejecting negative targets, zero weights,
    /// out-of-range or duplicate edges and cycles.
    pub fn new(
        targets: Vec<Rational>,
        weights: Option<Vec<u64>>,
        edges: Vec<(NodeId, NodeId)>,
    ) -> Result<Self> {
        let n = targets.len();
        if let Some((i, value)) = targets.iter().enumerate().find(|(_, a)| a.is_negative()) {
            return Err(Error::NegativeTarget {
                node: i,
                value: value.clone(),
            });
        }
        if let Some(w) = &weights {
            if w.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: w.len(),
                });
            }
            if let Some(i) = w.iter().position(|&wi| wi == 0) {
                return Err(Error::NonPositiveWeight { node: i });
            }
        }
        let mut children = vec![Vec::new(); n];
        let mut parents = vec![Vec::new(); n];
        let mut seen = HashSet::with_capacity(edges.len());
        for &(c, p) in &edges {
            for id in [c, p] {
                if id.0 >= n {
                    return Err(Error::UnknownNode { line: None, id: id.0 });
                }
            }
            if c == p {
                return Err(Error::Cycle { node: c.0 });
            }
            if !seen.insert((c, p)) {
                return Err(Error::DuplicateEdge {
                    child: c.0,
                    parent: p.0,
                });
            }
            children[p.0].push(c);
            parents[c.0].push(p);
        }
        for list in children.iter_mut().chain(parents.iter_mut()) {
            list.sort_unstable();
        }
        let topo_order = topological_order(&children, &parents)?;
        let kind = classify(&children, &parents, edges.len());
        Ok(Instance {
            edges,
            targets,
            weights,
            children,
            parents,
            topo_order,
            kind,
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.len()).map(NodeId)
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn targets(&self) -> &[Rational] {
        &self.targets
    }

    pub fn target(&self, v: NodeId) -> &Rational {
        &self.targets[v.0]
    }

    pub fn weights(&self) -> Option<&[u64]> {
        self.weights.as_deref()
    }

    /// Weight of `v`, 1 when the instance is unweighted.
    pub fn weight(&self, v: NodeId) -> u64 {
        self.weights.as_ref().map_or(1, |w| w[v.0])
    }

    /// Children of `v` in ascending id order.
    pub fn children(&self, v: NodeId) -> &[NodeId] {
        &self.children[v.0]
    }

    pub fn parents(&self, v: NodeId) -> &[NodeId] {
        &self.parents[v.0]
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    /// Every node has at most one parent and exactly one node has none.
    pub fn is_tree(&self) -> bool {
        is_tree(&self.parents)
    }

    /// No node is both a child and a parent.
    pub fn is_bilayer(&self) -> bool {
        (0..self.len()).all(|i| self.children[i].is_empty() || self.parents[i].is_empty())
    }

    /// Children-before-parents order.
    pub fn topo_order(&self) -> &[NodeId] {
        &self.topo_order
    }

    pub fn root(&self) -> Option<NodeId> {
        if self.is_tree() {
            self.parents.iter().position(Vec::is_empty).map(NodeId)
        } else {
            None
        }
    }

    /// Same graph, different targets and weights.
    pub fn with_values(&self, targets: Vec<Rational>, weights: Option<Vec<u64>>) -> Result<Self> {
        Instance::new(targets, weights, self.edges.clone())
    }

    /// Sum of children's values at `v`.
    pub fn child_sum(&self, v: NodeId, x: &[Rational]) -> Rational {
        self.children[v.0].iter().map(|c| &x[c.0]).sum()
    }

    /// `x_v - Σ_{u ∈ C(v)} x_u`; positive means `v` can absorb a decrease.
    pub fn slack(&self, v: NodeId, x: &[Rational]) -> Rational {
        &x[v.0] - self.child_sum(v, x)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("sbhsp 1\n");
        out.push_str(&format!("nodes {}\n", self.len()));
        for (i, a) in self.targets.iter().enumerate() {
            match &self.weights {
                Some(w) => out.push_str(&format!("node {i} a={a} w={}\n", w[i])),
                None => out.push_str(&format!("node {i} a={a}\n")),
            }
        }
        for (c, p) in &self.edges {
            out.push_str(&format!("edge {c} {p}\n"));
        }
        out
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for Instance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_instance(s)
    }
}

fn is_tree(parents: &[Vec<NodeId>]) -> bool {
    parents.iter().all(|p| p.len() <= 1) && parents.iter().filter(|p| p.is_empty()).count() == 1
}

// A star is both a tree and bilayer; any graph with edges that splits into
// two layers is reported as bilayer, and tree-only solvers test `is_tree`.
fn classify(children: &[Vec<NodeId>], parents: &[Vec<NodeId>], edge_count: usize) -> Kind {
    let bilayer = (0..children.len()).all(|i| children[i].is_empty() || parents[i].is_empty());
    if edge_count > 0 && bilayer {
        Kind::Bilayer
    } else if is_tree(parents) {
        Kind::Tree
    } else {
        Kind::Dag
    }
}

fn topological_order(children: &[Vec<NodeId>], parents: &[Vec<NodeId>]) -> Result<Vec<NodeId>> {
    let n = children.len();
    let mut pending: Vec<usize> = children.iter().map(Vec::len).collect();
    let mut ready: BTreeSet<usize> = (0..n).filter(|&i| pending[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop_first() {
        order.push(NodeId(v));
        for p in &parents[v] {
            pending[p.0] -= 1;
            if pending[p.0] == 0 {
                ready.insert(p.0);
            }
        }
    }
    if order.len() < n {
        let node = (0..n).find(|&i| pending[i] > 0).unwrap_or(0);
        return Err(Error::Cycle { node });
    }
    Ok(order)
}

/// Result of [`validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShapeReport {
    pub kind: Kind,
    pub topo_order: Vec<NodeId>,
    /// Present iff the graph is a rooted tree.
    pub post_order: Option<Vec<NodeId>>,
    pub root: Option<NodeId>,
}

pub fn validate(inst: &Instance) -> ShapeReport {
    let root = inst.root();
    ShapeReport {
        kind: inst.kind(),
        topo_order: inst.topo_order().to_vec(),
        post_order: root.map(|r| post_order(inst, r)),
        root,
    }
}

/// Post-order of the subtree at `root`, children visited in ascending id.
pub fn post_order(inst: &Instance, root: NodeId) -> Vec<NodeId> {
    let mut order = Vec::new();
    let mut stack = vec![(root, 0usize)];
    while let Some((v, next)) = stack.pop() {
        let kids = inst.children(v);
        if next < kids.len() {
            stack.push((v, next + 1));
            stack.push((kids[next], 0));
        } else {
            order.push(v);
        }
    }
    order
}

/// Output vector of a solver, indexed by node id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment(Vec<Rational>);

impl Assignment {
    pub fn new(values: Vec<Rational>) -> Self {
        Assignment(values)
    }

    pub fn zeros(n: usize) -> Self {
        Assignment(vec![Rational::zero(); n])
    }

    pub fn from_integers(values: &[i64]) -> Self {
        Assignment(values.iter().map(|&v| Rational::from_integer(v)).collect())
    }

    pub fn as_slice(&self) -> &[Rational] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<Rational> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_integral(&self) -> bool {
        self.0.iter().all(Rational::is_integer)
    }
}

impl Index<NodeId> for Assignment {
    type Output = Rational;
    fn index(&self, v: NodeId) -> &Rational {
        &self.0[v.0]
    }
}

impl From<Vec<Rational>> for Assignment {
    fn from(v: Vec<Rational>) -> Self {
        Assignment(v)
    }
}

fn check_len(inst: &Instance, got: usize) -> Result<()> {
    if got != inst.len() {
        return Err(Error::LengthMismatch {
            expected: inst.len(),
            got,
        });
    }
    Ok(())
}

/// True iff `x >= 0` and every node dominates the sum of its children.
pub fn is_feasible(inst: &Instance, x: &[Rational]) -> Result<bool> {
    check_len(inst, x.len())?;
    Ok(x.iter().all(|v| !v.is_negative())
        && inst.nodes().all(|v| x[v.0] >= inst.child_sum(v, x)))
}

/// Distance from `x` to the targets: Σ|a−x|, Σ w|a−x| or max|a−x|.
pub fn objective(inst: &Instance, x: &[Rational], norm: Norm, weighted: bool) -> Result<Rational> {
    check_len(inst, x.len())?;
    if weighted {
        if norm != Norm::L1 {
            return Err(Error::InvalidArgument(
                "weighted objective is only defined for the l1 norm".into(),
            ));
        }
        let w = inst.weights().ok_or(Error::MissingWeights)?;
        return Ok(inst
            .targets()
            .iter()
            .zip(x)
            .zip(w)
            .map(|((a, xi), &wi)| Rational::from_integer(wi as i64) * a.abs_diff(xi))
            .sum());
    }
    let deviations = inst.targets().iter().zip(x).map(|(a, xi)| a.abs_diff(xi));
    Ok(match norm {
        Norm::L1 => deviations.sum(),
        Norm::Linf => deviations.max().unwrap_or_else(Rational::zero),
    })
}

/// Parses the line-oriented instance format.
///
/// ```text
/// sbhsp 1
/// nodes <N>
/// node <id> a=<rational> [w=<positive-int>]
/// edge <child-id> <parent-id>
/// ```
pub fn parse_instance(text: &str) -> Result<Instance> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let syntax = |line: usize, message: &str| Error::Syntax {
        line,
        message: message.to_string(),
    };

    let (line, header) = lines.next().ok_or_else(|| syntax(1, "empty input"))?;
    if header.split_whitespace().collect::<Vec<_>>() != ["sbhsp", "1"] {
        return Err(syntax(line, "expected header `sbhsp 1`"));
    }
    let (line, nodes_line) = lines
        .next()
        .ok_or_else(|| syntax(line + 1, "expected `nodes <N>`"))?;
    let n: usize = match nodes_line.split_whitespace().collect::<Vec<_>>().as_slice() {
        ["nodes", count] => count
            .parse()
            .map_err(|_| syntax(line, "node count must be a non-negative integer"))?,
        _ => return Err(syntax(line, "expected `nodes <N>`")),
    };

    let mut targets: Vec<Option<Rational>> = vec![None; n];
    let mut weights: Vec<Option<u64>> = vec![None; n];
    let mut edges = Vec::new();
    let mut edge_lines = Vec::new();

    for (line, content) in lines {
        let tokens: Vec<&str> = content.split_whitespace().collect();
        match tokens[0] {
            "node" => {
                if tokens.len() < 3 || tokens.len() > 4 {
                    return Err(syntax(line, "expected `node <id> a=<rational> [w=<int>]`"));
                }
                let id: usize = tokens[1]
                    .parse()
                    .map_err(|_| syntax(line, "node id must be a non-negative integer"))?;
                if id >= n {
                    return Err(Error::UnknownNode {
                        line: Some(line),
                        id,
                    });
                }
                if targets[id].is_some() {
                    return Err(Error::DuplicateNode { line, id });
                }
                let mut a = None;
                let mut w = None;
                for field in &tokens[2..] {
                    match field.split_once('=') {
                        Some(("a", v)) if a.is_none() => {
                            let value: Rational = v
                                .parse()
                                .map_err(|e: crate::rational::ParseRationalError| {
                                    syntax(line, &e.to_string())
                                })?;
                            if value.is_negative() {
                                return Err(Error::NegativeTarget { node: id, value });
                            }
                            a = Some(value);
                        }
                        Some(("w", v)) if w.is_none() => {
                            let value: i128 = v
                                .parse()
                                .map_err(|_| syntax(line, "weight must be an integer literal"))?;
                            if value <= 0 || value > u64::MAX as i128 {
                                return Err(Error::NonPositiveWeight { node: id });
                            }
                            w = Some(value as u64);
                        }
                        _ => return Err(syntax(line, &format!("unexpected field `{field}`"))),
                    }
                }
                targets[id] = Some(a.ok_or_else(|| syntax(line, "missing `a=` field"))?);
                weights[id] = w;
            }
            "edge" => {
                let [_, c, p] = tokens.as_slice() else {
                    return Err(syntax(line, "expected `edge <child-id> <parent-id>`"));
                };
                let parse_id = |t: &str| -> Result<usize> {
                    t.parse()
                        .map_err(|_| syntax(line, "edge endpoint must be a non-negative integer"))
                };
                let (c, p) = (parse_id(c)?, parse_id(p)?);
                for id in [c, p] {
                    if id >= n {
                        return Err(Error::UnknownNode {
                            line: Some(line),
                            id,
                        });
                    }
                }
                edges.push((NodeId(c), NodeId(p)));
                edge_lines.push(line);
            }
            other => return Err(syntax(line, &format!("unknown directive `{other}`"))),
        }
    }

    let targets = targets
        .into_iter()
        .enumerate()
        .map(|(id, a)| a.ok_or(Error::MissingNode { id }))
        .collect::<Result<Vec<_>>>()?;
    let weights = if weights.iter().any(Option::is_some) {
        Some(weights.into_iter().map(|w| w.unwrap_or(1)).collect())
    } else {
        None
    };
    Instance::new(targets, weights, edges)
}

/// `x <id> <rational>` per node, then `objective <rational>`.
pub fn format_solution(x: &[Rational], objective: &Rational) -> String {
    let mut out = String::new();
    for (i, v) in x.iter().enumerate() {
        out.push_str(&format!("x {i} {v}\n"));
    }
    out.push_str(&format!("objective {objective}\n"));
    out
}

/// Inverse of [`format_solution`].
pub fn parse_solution(text: &str) -> Result<(Assignment, Rational)> {
    let mut x = Vec::new();
    let mut objective = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let bad = |m: &str| Error::Syntax {
            line,
            message: m.to_string(),
        };
        match tokens.as_slice() {
            ["x", id, value] => {
                let id: usize = id.parse().map_err(|_| bad("bad node id"))?;
                if id != x.len() {
                    return Err(bad("solution lines must be in id order"));
                }
                x.push(value.parse().map_err(|_| bad("bad rational"))?);
            }
            ["objective", value] => {
                objective = Some(value.parse().map_err(|_| bad("bad rational"))?);
            }
            _ => return Err(bad("expected `x <id> <rational>` or `objective <rational>`")),
        }
    }
    let objective = objective.ok_or(Error::Syntax {
        line: text.lines().count(),
        message: "missing objective line".into(),
    })?;
    Ok((Assignment::new(x), objective))
}
