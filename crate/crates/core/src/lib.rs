//! Solvers for sum-constrained hierarchical smoothing.
//!
//! Given a rooted tree or DAG with non-negative targets `a`, find a
//! non-negative assignment `x` in which every node is at least the sum of its
//! children while staying as close to `a` as possible.
//!
//! * [`l1_tree`]: exact ℓ1 (optionally weighted) solvers for rooted trees.
//! * [`linf`]: ℓ∞ solver for arbitrary DAGs.
//! * [`bilayer`]: (1+ε)-approximate ℓ1 solver for two-layer DAGs.
//! * [`oracle`]: exact rational LP, brute force and dual certificates.
//! * [`instgen`]: seeded instance generators.

pub mod bilayer;
pub mod error;
pub mod instgen;
pub mod l1_tree;
pub mod linf;
pub mod model;
pub mod oracle;
pub mod rational;

pub use error::{Error, Result};
pub use model::{
    format_solution, is_feasible, objective, parse_instance, parse_solution, validate, Assignment,
    Instance, Kind, NodeId, Norm, ShapeReport,
};
pub use rational::{Bound, Rational};
