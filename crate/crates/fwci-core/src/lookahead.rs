//! Expected-cost evaluation of candidate batch allocations.
//!
//! A stage action splits the batch `B` as `(b_x, b_y)` with `b_x + b_y = B`.
//! Outcomes follow a product of two binomials at the current point
//! estimates, and the value of a child state is approximated by the
//! cost-to-go: zero once the half-width target is met, otherwise the price
//! of the cost-minimizing two-stage plan from that state. Values for
//! look-ahead depth `l >= 2` recurse, re-minimizing over allocations at
//! every reachable child.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocation::{two_stage_plan, AllocationError};
use crate::stat::{
    half_width_with_z, minimax_estimate, CostModel, SampleState, StatError, TargetSpec,
};

/// A per-stage allocation of the batch across the two populations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    pub b_x: u64,
    pub b_y: u64,
}

impl Allocation {
    pub fn total(&self) -> u64 {
        self.b_x + self.b_y
    }
}

/// Errors from look-ahead evaluation.
#[derive(Debug, Error, PartialEq)]
pub enum LookaheadError {
    /// Enumeration would exceed the configured leaf budget.
    #[error("outcome enumeration needs {needed} leaf evaluations, over the budget of {cap}")]
    BudgetExceeded { needed: u64, cap: u64 },

    /// Look-ahead depth must be at least 1.
    #[error("look-ahead depth must be >= 1")]
    ZeroDepth,

    #[error(transparent)]
    Stat(#[from] StatError),

    #[error(transparent)]
    Allocation(#[from] AllocationError),
}

/// Cap on cost-to-go evaluations per call. `O(B^l)` growth is easy to
/// trip into accidentally, so the cap is explicit rather than silent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationBudget {
    pub leaf_cap: u64,
}

impl Default for EnumerationBudget {
    fn default() -> Self {
        Self {
            leaf_cap: 1_000_000,
        }
    }
}

/// Joint distribution of success pairs `(k_x, k_y)` after an allocation,
/// stored row-major with `k_x` as the row index.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    b_x: u64,
    b_y: u64,
    probs: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn prob(&self, k_x: u64, k_y: u64) -> f64 {
        self.probs[(k_x * (self.b_y + 1) + k_y) as usize]
    }

    /// Iterate `(k_x, k_y, probability)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, u64, f64)> + '_ {
        let width = self.b_y + 1;
        self.probs
            .iter()
            .enumerate()
            .map(move |(i, &p)| (i as u64 / width, i as u64 % width, p))
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }
}

/// Binomial(n, p) pmf over k = 0..=n via the stable multiplicative
/// recurrence; exact at p = 0 and p = 1.
fn binomial_pmf(n: u64, p: f64) -> Vec<f64> {
    let len = (n + 1) as usize;
    let mut pmf = vec![0.0; len];
    if p <= 0.0 {
        pmf[0] = 1.0;
        return pmf;
    }
    if p >= 1.0 {
        pmf[len - 1] = 1.0;
        return pmf;
    }
    let ratio = p / (1.0 - p);
    pmf[0] = (1.0 - p).powi(n as i32);
    for k in 0..n as usize {
        pmf[k + 1] = pmf[k] * ratio * (n as f64 - k as f64) / (k as f64 + 1.0);
    }
    pmf
}

/// Transition law out of `state` under `allocation`: the product of two
/// binomials at the supplied point estimates.
pub fn transition_probs(
    state: &SampleState,
    allocation: Allocation,
    p_x: f64,
    p_y: f64,
) -> OutcomeDistribution {
    let _ = state; // transitions depend on the state only through the estimates
    debug_assert!((0.0..=1.0).contains(&p_x) && (0.0..=1.0).contains(&p_y));
    let pmf_x = binomial_pmf(allocation.b_x, p_x);
    let pmf_y = binomial_pmf(allocation.b_y, p_y);
    let mut probs = Vec::with_capacity(pmf_x.len() * pmf_y.len());
    for &px in &pmf_x {
        for &py in &pmf_y {
            probs.push(px * py);
        }
    }
    OutcomeDistribution {
        b_x: allocation.b_x,
        b_y: allocation.b_y,
        probs,
    }
}

/// Point estimates for planning: raw sample means, with a minimax
/// substitute whenever a mean is degenerate (0 or 1).
pub(crate) fn planning_estimates(state: &SampleState) -> Result<(f64, f64), StatError> {
    let est = |w: u64, m: u64, pop: char| -> Result<f64, StatError> {
        if m == 0 {
            return Err(StatError::EmptySample(pop));
        }
        let mean = w as f64 / m as f64;
        if mean > 0.0 && mean < 1.0 {
            Ok(mean)
        } else {
            minimax_estimate(w, m)
        }
    };
    Ok((
        est(state.w_x, state.m_x, 'X')?,
        est(state.w_y, state.m_y, 'Y')?,
    ))
}

/// Approximate cost of finishing from `state`: zero once `H <= epsilon`,
/// otherwise the price of the cost-minimizing two-stage plan.
pub fn cost_to_go(
    state: &SampleState,
    costs: &CostModel,
    target: &TargetSpec,
) -> Result<f64, LookaheadError> {
    if half_width_with_z(state, target.z())? <= target.epsilon() {
        return Ok(0.0);
    }
    let (p_x, p_y) = planning_estimates(state)?;
    let plan = two_stage_plan(p_x, p_y, state.m_x, state.m_y, costs, target)?;
    Ok(plan.planned_cost)
}

struct Evaluator<'a> {
    costs: &'a CostModel,
    target: &'a TargetSpec,
    cap: u64,
    leaves: u64,
}

impl Evaluator<'_> {
    fn charge(&mut self, n: u64) -> Result<(), LookaheadError> {
        self.leaves += n;
        if self.leaves > self.cap {
            Err(LookaheadError::BudgetExceeded {
                needed: self.leaves,
                cap: self.cap,
            })
        } else {
            Ok(())
        }
    }

    fn stopped(&self, state: &SampleState) -> Result<bool, LookaheadError> {
        Ok(half_width_with_z(state, self.target.z())? <= self.target.epsilon())
    }

    /// Expected cost of taking `alloc` now and acting optimally for
    /// `depth - 1` further stages, with cost-to-go at the horizon.
    fn alloc_value(
        &mut self,
        state: &SampleState,
        alloc: Allocation,
        depth: u64,
    ) -> Result<f64, LookaheadError> {
        let (p_x, p_y) = planning_estimates(state)?;
        let pmf_x = binomial_pmf(alloc.b_x, p_x);
        let pmf_y = binomial_pmf(alloc.b_y, p_y);
        self.charge(pmf_x.len() as u64 * pmf_y.len() as u64)?;
        let stage_cost = alloc.b_x as f64 * self.costs.c_x() + alloc.b_y as f64 * self.costs.c_y();
        let mut expected = 0.0;
        for (k_x, &px) in pmf_x.iter().enumerate() {
            if px == 0.0 {
                continue;
            }
            for (k_y, &py) in pmf_y.iter().enumerate() {
                let pr = px * py;
                if pr == 0.0 {
                    continue;
                }
                let child = SampleState {
                    w_x: state.w_x + k_x as u64,
                    m_x: state.m_x + alloc.b_x,
                    w_y: state.w_y + k_y as u64,
                    m_y: state.m_y + alloc.b_y,
                };
                expected += pr * self.continue_value(&child, depth - 1)?;
            }
        }
        Ok(stage_cost + expected)
    }

    /// Value of `state` with `depth` decision stages remaining: zero when
    /// sampling has stopped, cost-to-go at the horizon, otherwise the
    /// minimum over the batch allocations of the stage.
    fn continue_value(&mut self, state: &SampleState, depth: u64) -> Result<f64, LookaheadError> {
        if self.stopped(state)? {
            return Ok(0.0);
        }
        if depth == 0 {
            let (p_x, p_y) = planning_estimates(state)?;
            let plan = two_stage_plan(p_x, p_y, state.m_x, state.m_y, self.costs, self.target)?;
            return Ok(plan.planned_cost);
        }
        let batch = self.target.batch();
        let mut best = f64::INFINITY;
        for b_x in 0..=batch {
            let v = self.alloc_value(
                state,
                Allocation {
                    b_x,
                    b_y: batch - b_x,
                },
                depth,
            )?;
            if v < best {
                best = v;
            }
        }
        Ok(best)
    }
}

/// Expected cost of `allocation` from `state` over an `depth`-stage
/// look-ahead: the stage's sampling cost plus the probability-weighted
/// value of every child, where children that already meet the half-width
/// target contribute nothing.
pub fn expected_cost(
    state: &SampleState,
    allocation: Allocation,
    costs: &CostModel,
    target: &TargetSpec,
    depth: u64,
    budget: EnumerationBudget,
) -> Result<f64, LookaheadError> {
    if depth == 0 {
        return Err(LookaheadError::ZeroDepth);
    }
    let mut eval = Evaluator {
        costs,
        target,
        cap: budget.leaf_cap,
        leaves: 0,
    };
    eval.alloc_value(state, allocation, depth)
}

/// The allocation `(b, B-b)` minimizing [`expected_cost`]; ties go to the
/// smaller `b_x`.
pub fn best_allocation(
    state: &SampleState,
    batch: u64,
    costs: &CostModel,
    target: &TargetSpec,
    depth: u64,
    budget: EnumerationBudget,
) -> Result<Allocation, LookaheadError> {
    if depth == 0 {
        return Err(LookaheadError::ZeroDepth);
    }
    let mut eval = Evaluator {
        costs,
        target,
        cap: budget.leaf_cap,
        leaves: 0,
    };
    let mut best = Allocation { b_x: 0, b_y: batch };
    let mut best_value = f64::INFINITY;
    for b_x in 0..=batch {
        let alloc = Allocation {
            b_x,
            b_y: batch - b_x,
        };
        let v = eval.alloc_value(state, alloc, depth)?;
        if v < best_value {
            best_value = v;
            best = alloc;
        }
    }
    Ok(best)
}
