//! ℓ∞ smoothing on arbitrary DAGs.
//!
//! For a trial bound t the pointwise smallest feasible assignment with every
//! `x_i >= a_i − t` is built children-first; t is feasible iff that
//! assignment also keeps `x_i <= a_i + t`. Feasibility is monotone in t, so
//! the optimum is found by bisection over `[0, Σ a_i]`.

use crate::error::{Error, Result};
use crate::model::{Assignment, Instance};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThresholdResult {
    pub t: Rational,
    /// `x_i = max(0, Σ children, a_i − t)`, children first.
    pub x_min: Assignment,
    /// Whether `max_i (x_min_i − a_i) <= t`.
    pub feasible_at_t: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinfSolution {
    /// Feasible upper end of the final bisection bracket.
    pub t_star: Rational,
    pub x: Assignment,
    /// Number of threshold evaluations.
    pub probes: u32,
}

pub fn assign_for_threshold(inst: &Instance, t: &Rational) -> Result<ThresholdResult> {
    if t.is_negative() {
        return Err(Error::InvalidArgument(format!("negative threshold {t}")));
    }
    let mut x = vec![Rational::zero(); inst.len()];
    let mut feasible = true;
    for &v in inst.topo_order() {
        let a = inst.target(v);
        let floor = Rational::max_of(inst.child_sum(v, &x), a - t);
        let value = Rational::max_of(Rational::zero(), floor);
        if &(&value - a) > t {
            feasible = false;
        }
        x[v.index()] = value;
    }
    Ok(ThresholdResult {
        t: t.clone(),
        x_min: Assignment::new(x),
        feasible_at_t: feasible,
    })
}

/// `2^-40 · Σ a_i`.
pub fn default_tolerance(inst: &Instance) -> Rational {
    let total: Rational = inst.targets().iter().sum();
    total * Rational::pow2_neg(40)
}

/// Bisection with dyadic midpoints until the bracket is at most `tol` wide.
/// The returned `t_star` is feasible and at most `OPT + tol`.
pub fn solve_linf(inst: &Instance, tol: &Rational) -> Result<LinfSolution> {
    if !tol.is_positive() {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let mut probes = 1;
    let at_zero = assign_for_threshold(inst, &Rational::zero())?;
    if at_zero.feasible_at_t {
        return Ok(LinfSolution {
            t_star: Rational::zero(),
            x: at_zero.x_min,
            probes,
        });
    }
    let mut lo = Rational::zero();
    let mut hi: Rational = inst.targets().iter().sum();
    let mut best = None;
    let half = Rational::new(1, 2);
    while &hi - &lo > *tol {
        let mid = (&lo + &hi) * &half;
        let probe = assign_for_threshold(inst, &mid)?;
        probes += 1;
        if probe.feasible_at_t {
            hi = mid;
            best = Some(probe.x_min);
        } else {
            lo = mid;
        }
    }
    let x = match best {
        Some(x) => x,
        None => {
            probes += 1;
            assign_for_threshold(inst, &hi)?.x_min
        }
    };
    Ok(LinfSolution { t_star: hi, x, probes })
}
