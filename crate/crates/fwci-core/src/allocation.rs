//! Closed-form sample-size allocation.
//!
//! The relaxed cost-minimization program
//!
//! ```text
//! min  m_x c_x + m_y c_y   s.t.  tau_x/m_x + tau_y/m_y <= eps^2/z^2
//! ```
//!
//! has the closed-form KKT solution implemented by [`kkt_real_allocation`].
//! [`two_stage_plan`] turns it into an integer plan: ceil the relaxed sizes,
//! clamp to the observations already taken, and when exactly one population
//! is clamped re-solve the remaining single-variable problem exactly.
//! [`min_obs_two_stage_plan`] is the cost-blind counterpart that minimizes
//! the total number of observations.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stat::{tau, CostModel, TargetSpec};

/// Errors from the allocation layer.
#[derive(Debug, Error, PartialEq)]
pub enum AllocationError {
    /// A planning estimate was 0 or 1, so `tau = 0` and the relaxed program
    /// is unbounded in that coordinate. Callers substitute a minimax
    /// estimate before planning.
    #[error("degenerate planning estimate {0}; substitute a minimax estimate first")]
    DegenerateEstimate(f64),

    /// Non-finite input.
    #[error("non-finite planning input {0}")]
    NonFinite(f64),
}

/// An integer sampling plan: cumulative targets per population, the
/// additional draws needed to reach them, and the cost of those draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AllocationPlan {
    pub target_m_x: u64,
    pub target_m_y: u64,
    pub add_x: u64,
    pub add_y: u64,
    pub planned_cost: f64,
}

impl AllocationPlan {
    pub fn is_zero(&self) -> bool {
        self.add_x == 0 && self.add_y == 0
    }
}

fn check_estimate(p: f64) -> Result<f64, AllocationError> {
    if !p.is_finite() {
        return Err(AllocationError::NonFinite(p));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(AllocationError::DegenerateEstimate(p));
    }
    Ok(p)
}

/// Real-valued minimizer of the relaxed cost program.
///
/// With `lambda = ((sqrt(tau_x c_x) + sqrt(tau_y c_y)) z^2 / eps^2)^2` the
/// optimum is `m_x = sqrt(lambda tau_x / c_x)`, `m_y = sqrt(lambda tau_y / c_y)`,
/// and the variance constraint holds with equality.
pub fn kkt_real_allocation(
    tau_x: f64,
    tau_y: f64,
    costs: &CostModel,
    epsilon: f64,
    z: f64,
) -> Result<(f64, f64), AllocationError> {
    for v in [tau_x, tau_y, epsilon, z] {
        if !v.is_finite() {
            return Err(AllocationError::NonFinite(v));
        }
    }
    if tau_x <= 0.0 || tau_y <= 0.0 {
        return Err(AllocationError::DegenerateEstimate(tau_x.min(tau_y)));
    }
    let budget = epsilon * epsilon / (z * z);
    let sqrt_lambda = ((tau_x * costs.c_x()).sqrt() + (tau_y * costs.c_y()).sqrt()) / budget;
    let m_x = sqrt_lambda * (tau_x / costs.c_x()).sqrt();
    let m_y = sqrt_lambda * (tau_y / costs.c_y()).sqrt();
    Ok((m_x, m_y))
}

fn ceil_count(x: f64) -> u64 {
    x.ceil().max(0.0) as u64
}

/// Cost-minimizing two-stage plan from current counts and estimates.
///
/// `p_x`, `p_y` must lie strictly inside `(0,1)`; raw degenerate sample
/// means are replaced by minimax estimates in the procedure layer before
/// this is called. Returns the zero plan when the current counts already
/// satisfy the variance constraint at the planning estimates.
pub fn two_stage_plan(
    p_x: f64,
    p_y: f64,
    m_x1: u64,
    m_y1: u64,
    costs: &CostModel,
    target: &TargetSpec,
) -> Result<AllocationPlan, AllocationError> {
    let tau_x = tau(check_estimate(p_x)?);
    let tau_y = tau(check_estimate(p_y)?);
    let budget = target.variance_budget();
    let (real_x, real_y) = kkt_real_allocation(tau_x, tau_y, costs, target.epsilon(), target.z())?;
    let mut m_x2 = ceil_count(real_x).max(m_x1);
    let mut m_y2 = ceil_count(real_y).max(m_y1);

    if m_x2 == m_x1 && m_y2 == m_y1 {
        // Already satisfied; take no samples.
        m_x2 = m_x1;
        m_y2 = m_y1;
    } else if m_x2 == m_x1 {
        // X is over-sampled relative to the relaxed optimum: hold it fixed
        // and solve the single-variable problem for Y in closed form. The
        // clamp guarantees tau_x/m_x1 < budget, so the denominator is
        // positive.
        let need = tau_y / (budget - tau_x / m_x1 as f64);
        m_y2 = ceil_count(need).max(m_y1);
    } else if m_y2 == m_y1 {
        let need = tau_x / (budget - tau_y / m_y1 as f64);
        m_x2 = ceil_count(need).max(m_x1);
    }

    let add_x = m_x2 - m_x1;
    let add_y = m_y2 - m_y1;
    Ok(AllocationPlan {
        target_m_x: m_x2,
        target_m_y: m_y2,
        add_x,
        add_y,
        planned_cost: costs.price(add_x, add_y),
    })
}

/// Observation-minimizing two-stage plan.
///
/// Splits the total `M* = z^2 (sqrt(tau_x) + sqrt(tau_y))^2 / eps^2` by the
/// fraction `beta* = 1 / (1 + sqrt(tau_y / tau_x))`. Sizes are rounded up;
/// `planned_cost` counts observations (unit costs), since this plan ignores
/// the cost model by construction.
pub fn min_obs_two_stage_plan(
    p_x: f64,
    p_y: f64,
    m_x1: u64,
    m_y1: u64,
    target: &TargetSpec,
) -> Result<AllocationPlan, AllocationError> {
    let tau_x = tau(check_estimate(p_x)?);
    let tau_y = tau(check_estimate(p_y)?);
    let beta = 1.0 / (1.0 + (tau_y / tau_x).sqrt());
    let total = (tau_x.sqrt() + tau_y.sqrt()).powi(2) / target.variance_budget();
    let m_x2 = ceil_count(beta * total).max(m_x1);
    let m_y2 = ceil_count((1.0 - beta) * total).max(m_y1);
    let add_x = m_x2 - m_x1;
    let add_y = m_y2 - m_y1;
    Ok(AllocationPlan {
        target_m_x: m_x2,
        target_m_y: m_y2,
        add_x,
        add_y,
        planned_cost: (add_x + add_y) as f64,
    })
}
