use crate::model::Kind;
use crate::rational::Rational;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("line {line}: duplicate node id {id}")]
    DuplicateNode { line: usize, id: usize },

    #[error("{}unknown node id {id}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    UnknownNode { line: Option<usize>, id: usize },

    #[error("missing declaration for node {id}")]
    MissingNode { id: usize },

    #[error("duplicate edge {child} -> {parent}")]
    DuplicateEdge { child: usize, parent: usize },

    #[error("node {node}: negative target value {value}")]
    NegativeTarget { node: usize, value: Rational },

    #[error("node {node}: weight must be a positive integer")]
    NonPositiveWeight { node: usize },

    #[error("cycle detected through node {node}")]
    Cycle { node: usize },

    #[error("expected {expected} instance, got {found}")]
    Shape { expected: &'static str, found: Kind },

    #[error("length mismatch: expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("weighted objective requested but the instance carries no weights")]
    MissingWeights,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("push of {amount} would drive node {node} below zero")]
    NegativeValue { node: usize, amount: Rational },

    #[error("invalid push path: {0}")]
    InvalidPath(String),

    #[error("solver invariant violated: {0}")]
    InvariantBreach(String),

    #[error("search space of {points} points exceeds the guard of {limit}")]
    SearchSpace { points: f64, limit: f64 },

    #[error("expansion would create {size} nodes, cap is {cap}")]
    ExpansionTooLarge { size: u64, cap: u64 },

    #[error("covering row {row} is infeasible: caps sum to less than the demand")]
    InfeasibleCovering { row: usize },

    #[error("covering solution rejected: {0}")]
    InvalidCovering(String),

    #[error("approximation not certified after {iterations} iterations")]
    NotConverged { iterations: u64 },

    #[error("linear program: {0}")]
    Lp(String),
}
