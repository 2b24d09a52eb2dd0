//! The eight end-to-end sampling procedures.
//!
//! Every procedure consumes an [`ObservationSource`], starts from an
//! [`InitialStage`] (counts from a pilot sample, or expert estimates with
//! no data), and produces a [`ProcedureOutcome`]. Sampling targets are
//! cumulative: a procedure that wants `m` observations from a population
//! that already holds `m_1` draws only `m - m_1` new ones, and the final
//! interval pools everything. Costs are accounted over the new draws only.
//!
//! The sequential procedures share one loop: check the half-width, ask the
//! per-procedure policy for a stage allocation, sample it, repeat. The same
//! policy entry point ([`stage_decision`]) drives the interactive advisor,
//! so a replayed transcript makes exactly the decisions of a batch run.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocation::{min_obs_two_stage_plan, two_stage_plan, AllocationError, AllocationPlan};
use crate::lookahead::{best_allocation, EnumerationBudget, LookaheadError};
use crate::stat::{
    half_width_with_z, minimax_estimate, tau, wald_ci, ConfidenceInterval, CostModel, SampleState,
    StatError, TargetSpec,
};

/// Hard cap per population; hitting it is a diagnostic, not a tuning knob.
pub const OBSERVATION_CAP: u64 = 10_000_000;

/// Which population to draw from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Population {
    X,
    Y,
}

/// Supplier of binary outcomes for both populations.
///
/// Implementations must return exactly `n` outcomes per request and, for
/// simulated sources, be deterministic given their construction seed.
pub trait ObservationSource {
    fn draw(&mut self, population: Population, n: u64) -> Vec<bool>;

    /// Number of successes among `n` fresh draws. The default goes through
    /// [`ObservationSource::draw`]; stream-backed sources override it to
    /// skip the allocation while consuming the stream identically.
    fn draw_successes(&mut self, population: Population, n: u64) -> u64 {
        self.draw(population, n).iter().filter(|&&b| b).count() as u64
    }
}

/// Where the preliminary estimates come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InitialStage {
    /// A pilot sample from each population.
    Counts {
        w_x: u64,
        m_x: u64,
        w_y: u64,
        m_y: u64,
    },
    /// Expert estimates with no pilot data; both must lie in (0,1).
    ExpertOpinion { p_x: f64, p_y: f64 },
}

impl InitialStage {
    pub fn validate(&self) -> Result<(), ProcedureError> {
        match *self {
            InitialStage::Counts { w_x, m_x, w_y, m_y } => {
                SampleState::new(w_x, m_x, w_y, m_y)?;
                Ok(())
            }
            InitialStage::ExpertOpinion { p_x, p_y } => {
                for p in [p_x, p_y] {
                    if !(p > 0.0 && p < 1.0) {
                        return Err(ProcedureError::BadExpertEstimate(p));
                    }
                }
                Ok(())
            }
        }
    }

    /// Starting state: the pilot counts, or all zeros for expert opinion.
    pub fn state(&self) -> SampleState {
        match *self {
            InitialStage::Counts { w_x, m_x, w_y, m_y } => SampleState { w_x, m_x, w_y, m_y },
            InitialStage::ExpertOpinion { .. } => SampleState {
                w_x: 0,
                m_x: 0,
                w_y: 0,
                m_y: 0,
            },
        }
    }

    fn expert(&self) -> Option<(f64, f64)> {
        match *self {
            InitialStage::ExpertOpinion { p_x, p_y } => Some((p_x, p_y)),
            InitialStage::Counts { .. } => None,
        }
    }
}

/// One sampled stage of a sequential run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: u32,
    pub b_x: u64,
    pub b_y: u64,
    pub w_x: u64,
    pub m_x: u64,
    pub w_y: u64,
    pub m_y: u64,
    pub half_width: f64,
}

/// Result of a completed procedure run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcedureOutcome {
    pub ci: ConfidenceInterval,
    /// Final cumulative counts, initial stage included.
    pub m_x: u64,
    pub m_y: u64,
    /// Initial-stage counts, kept so cost accounting stays explicit.
    pub initial_m_x: u64,
    pub initial_m_y: u64,
    /// Decision epochs in which sampling occurred.
    pub stage_count: u32,
    /// Cost of the observations taken after the initial stage, priced at
    /// the cost model the procedure ran with.
    pub total_cost: f64,
    /// Whether the final half-width met the target.
    pub achieved: bool,
    pub trace: Option<Vec<StageRecord>>,
}

impl ProcedureOutcome {
    /// Observations taken outside the initial stage.
    pub fn new_obs_x(&self) -> u64 {
        self.m_x - self.initial_m_x
    }

    pub fn new_obs_y(&self) -> u64 {
        self.m_y - self.initial_m_y
    }
}

/// Errors from procedure execution.
#[derive(Debug, Error, PartialEq)]
pub enum ProcedureError {
    /// The hard observation cap tripped; the configuration is degenerate.
    #[error("population {population:?} exceeded the observation cap of {cap}")]
    ObservationCap { population: Population, cap: u64 },

    /// Expert estimates must lie strictly inside (0,1).
    #[error("expert estimate {0} outside (0,1)")]
    BadExpertEstimate(f64),

    /// A procedure needing estimates got an empty population and no
    /// expert opinion.
    #[error("no estimate available for population {0:?}")]
    MissingEstimate(Population),

    #[error(transparent)]
    Stat(#[from] StatError),

    #[error(transparent)]
    Allocation(#[from] AllocationError),

    #[error(transparent)]
    Lookahead(#[from] LookaheadError),
}

/// The procedure families, used by the simulator, the CLI, and the advisor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProcedureKind {
    /// Worst-case sizing at `tau = 1/4`; one stage, width always met.
    Conservative,
    /// One adaptive stage from the KKT plan; width not guaranteed.
    TwoStageMinCost,
    /// One adaptive stage minimizing observation count.
    TwoStageMinObs,
    /// Half the batch to each population until the width is met.
    NaiveSequential,
    /// Per-stage KKT re-plan splitting the batch by remaining needs.
    SeqBatchMinCost,
    /// Per-stage closed-form split minimizing observations.
    SeqBatchMinObs,
    /// One observation per stage to the larger marginal variance reduction.
    FullySeqMinObs,
    /// Batch chosen by one-step expected-cost minimization.
    OneStepLookahead,
}

impl ProcedureKind {
    pub const ALL: [ProcedureKind; 8] = [
        ProcedureKind::Conservative,
        ProcedureKind::TwoStageMinCost,
        ProcedureKind::TwoStageMinObs,
        ProcedureKind::NaiveSequential,
        ProcedureKind::SeqBatchMinCost,
        ProcedureKind::SeqBatchMinObs,
        ProcedureKind::FullySeqMinObs,
        ProcedureKind::OneStepLookahead,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ProcedureKind::Conservative => "conservative",
            ProcedureKind::TwoStageMinCost => "two-stage-min-cost",
            ProcedureKind::TwoStageMinObs => "two-stage-min-obs",
            ProcedureKind::NaiveSequential => "naive-seq",
            ProcedureKind::SeqBatchMinCost => "seq-min-cost",
            ProcedureKind::SeqBatchMinObs => "seq-min-obs",
            ProcedureKind::FullySeqMinObs => "fully-seq-min-obs",
            ProcedureKind::OneStepLookahead => "one-step-lookahead",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Whether the procedure guarantees `H <= epsilon` on termination.
    pub fn guarantees_width(&self) -> bool {
        !matches!(
            self,
            ProcedureKind::TwoStageMinCost | ProcedureKind::TwoStageMinObs
        )
    }

    /// Whether the per-stage decision ignores the cost model.
    pub fn cost_blind(&self) -> bool {
        matches!(
            self,
            ProcedureKind::Conservative
                | ProcedureKind::TwoStageMinObs
                | ProcedureKind::NaiveSequential
                | ProcedureKind::SeqBatchMinObs
                | ProcedureKind::FullySeqMinObs
        )
    }
}

/// Round half away from zero; used for splitting a batch by a fraction.
pub(crate) fn round_half_away(x: f64) -> u64 {
    (x + 0.5).floor().max(0.0) as u64
}

/// Planning estimate for one population: raw mean, minimax-substituted
/// when degenerate, expert opinion when no data exists.
fn estimate(w: u64, m: u64, expert: Option<f64>, pop: Population) -> Result<f64, ProcedureError> {
    if m == 0 {
        return expert.ok_or(ProcedureError::MissingEstimate(pop));
    }
    let mean = w as f64 / m as f64;
    if mean > 0.0 && mean < 1.0 {
        Ok(mean)
    } else {
        Ok(minimax_estimate(w, m)?)
    }
}

fn estimates(
    state: &SampleState,
    expert: Option<(f64, f64)>,
) -> Result<(f64, f64), ProcedureError> {
    Ok((
        estimate(state.w_x, state.m_x, expert.map(|e| e.0), Population::X)?,
        estimate(state.w_y, state.m_y, expert.map(|e| e.1), Population::Y)?,
    ))
}

/// `H <= epsilon` with the current raw means; false while either
/// population is empty.
fn width_met(state: &SampleState, target: &TargetSpec) -> bool {
    if state.m_x == 0 || state.m_y == 0 {
        return false;
    }
    half_width_with_z(state, target.z()).unwrap() <= target.epsilon()
}

/// What a sequential procedure does next from `state`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StageDecision {
    /// The half-width target is met; stop and report the interval.
    Stop,
    /// Draw `b_x` observations from X and `b_y` from Y.
    Sample { b_x: u64, b_y: u64 },
}

/// Next-stage decision for the sequential procedures.
///
/// `stage` is the 1-based index of the stage about to be sampled; the
/// naive procedure uses its parity to place the odd observation when the
/// batch size is odd. The half-width check happens before allocating, so
/// the remaining-need denominators below are positive by construction.
pub fn stage_decision(
    kind: ProcedureKind,
    state: &SampleState,
    expert: Option<(f64, f64)>,
    stage: u32,
    target: &TargetSpec,
    costs: &CostModel,
    lookahead_budget: EnumerationBudget,
) -> Result<StageDecision, ProcedureError> {
    if width_met(state, target) {
        return Ok(StageDecision::Stop);
    }
    let batch = target.batch();
    let (b_x, b_y) = match kind {
        ProcedureKind::NaiveSequential => {
            let extra = if batch % 2 == 1 && stage % 2 == 1 {
                1
            } else {
                0
            };
            let b_x = batch / 2 + extra;
            (b_x, batch - b_x)
        }
        ProcedureKind::SeqBatchMinCost => {
            let (p_x, p_y) = estimates(state, expert)?;
            let plan = two_stage_plan(p_x, p_y, state.m_x, state.m_y, costs, target)?;
            // Remaining needs from the raw (non-re-set) KKT targets.
            let need_x = plan.target_m_x - state.m_x;
            let need_y = plan.target_m_y - state.m_y;
            let gamma = need_x as f64 / (need_x + need_y) as f64;
            let b_x = round_half_away(gamma * batch as f64).min(batch);
            (b_x, batch - b_x)
        }
        ProcedureKind::SeqBatchMinObs => {
            // Closed-form share for X, clamped to [0,1].
            let (m_x, m_y) = (state.m_x as f64, state.m_y as f64);
            let (p_x, p_y) = match (state.mean_x(), state.mean_y()) {
                (Some(a), Some(b)) => (a, b),
                _ => estimates(state, expert)?,
            };
            let (sx, sy) = (tau(p_x).sqrt(), tau(p_y).sqrt());
            let gamma = if sx + sy == 0.0 {
                0.5
            } else {
                ((sx * (m_y + batch as f64) - sy * m_x) / (batch as f64 * (sx + sy)))
                    .clamp(0.0, 1.0)
            };
            let b_x = round_half_away(gamma * batch as f64).min(batch);
            (b_x, batch - b_x)
        }
        ProcedureKind::FullySeqMinObs => {
            // One observation to the larger marginal variance-term
            // reduction tau * (1/m - 1/(m+1)); ties go to X. An empty
            // population is sampled first so the reductions are defined.
            if state.m_x == 0 {
                (1, 0)
            } else if state.m_y == 0 {
                (0, 1)
            } else {
                let gain = |w: u64, m: u64| {
                    let m = m as f64;
                    tau(w as f64 / m) * (1.0 / m - 1.0 / (m + 1.0))
                };
                if gain(state.w_x, state.m_x) >= gain(state.w_y, state.m_y) {
                    (1, 0)
                } else {
                    (0, 1)
                }
            }
        }
        ProcedureKind::OneStepLookahead => {
            let alloc = best_allocation(state, batch, costs, target, 1, lookahead_budget)?;
            (alloc.b_x, alloc.b_y)
        }
        ProcedureKind::Conservative
        | ProcedureKind::TwoStageMinCost
        | ProcedureKind::TwoStageMinObs => {
            // One-shot procedures have no per-stage policy.
            let plan = one_shot_plan(kind, state, expert, target, costs)?;
            return Ok(if plan.is_zero() {
                StageDecision::Stop
            } else {
                StageDecision::Sample {
                    b_x: plan.add_x,
                    b_y: plan.add_y,
                }
            });
        }
    };
    Ok(StageDecision::Sample { b_x, b_y })
}

fn one_shot_plan(
    kind: ProcedureKind,
    state: &SampleState,
    expert: Option<(f64, f64)>,
    target: &TargetSpec,
    costs: &CostModel,
) -> Result<AllocationPlan, ProcedureError> {
    match kind {
        ProcedureKind::Conservative => {
            let m = (target.z() * target.z() / (2.0 * target.epsilon() * target.epsilon())).ceil()
                as u64;
            let target_m_x = m.max(state.m_x);
            let target_m_y = m.max(state.m_y);
            let add_x = target_m_x - state.m_x;
            let add_y = target_m_y - state.m_y;
            Ok(AllocationPlan {
                target_m_x,
                target_m_y,
                add_x,
                add_y,
                planned_cost: costs.price(add_x, add_y),
            })
        }
        ProcedureKind::TwoStageMinCost => {
            let (p_x, p_y) = estimates(state, expert)?;
            Ok(two_stage_plan(
                p_x, p_y, state.m_x, state.m_y, costs, target,
            )?)
        }
        ProcedureKind::TwoStageMinObs => {
            let (p_x, p_y) = estimates(state, expert)?;
            Ok(min_obs_two_stage_plan(
                p_x, p_y, state.m_x, state.m_y, target,
            )?)
        }
        _ => unreachable!("one_shot_plan called for a sequential kind"),
    }
}

struct Run<'a> {
    source: &'a mut dyn ObservationSource,
    state: SampleState,
    initial_m_x: u64,
    initial_m_y: u64,
    stage_count: u32,
    trace: Option<Vec<StageRecord>>,
    target: TargetSpec,
}

impl<'a> Run<'a> {
    fn start(
        source: &'a mut dyn ObservationSource,
        initial: &InitialStage,
        target: &TargetSpec,
        trace: bool,
    ) -> Result<Self, ProcedureError> {
        initial.validate()?;
        let state = initial.state();
        Ok(Self {
            source,
            initial_m_x: state.m_x,
            initial_m_y: state.m_y,
            state,
            stage_count: 0,
            trace: trace.then(Vec::new),
            target: *target,
        })
    }

    fn sample(&mut self, b_x: u64, b_y: u64) -> Result<(), ProcedureError> {
        for (pop, b, m) in [
            (Population::X, b_x, self.state.m_x),
            (Population::Y, b_y, self.state.m_y),
        ] {
            if m + b > OBSERVATION_CAP {
                return Err(ProcedureError::ObservationCap {
                    population: pop,
                    cap: OBSERVATION_CAP,
                });
            }
        }
        if b_x > 0 {
            let s = self.source.draw_successes(Population::X, b_x);
            self.state.record_x(s, b_x);
        }
        if b_y > 0 {
            let s = self.source.draw_successes(Population::Y, b_y);
            self.state.record_y(s, b_y);
        }
        self.stage_count += 1;
        if let Some(t) = self.trace.as_mut() {
            let half_width = if self.state.m_x > 0 && self.state.m_y > 0 {
                half_width_with_z(&self.state, self.target.z()).unwrap()
            } else {
                f64::INFINITY
            };
            t.push(StageRecord {
                stage: self.stage_count,
                b_x,
                b_y,
                w_x: self.state.w_x,
                m_x: self.state.m_x,
                w_y: self.state.w_y,
                m_y: self.state.m_y,
                half_width,
            });
        }
        Ok(())
    }

    fn finish(self, costs: &CostModel) -> Result<ProcedureOutcome, ProcedureError> {
        let ci = wald_ci(&self.state, self.target.alpha())?;
        Ok(ProcedureOutcome {
            achieved: ci.half_width <= self.target.epsilon(),
            total_cost: costs.price(
                self.state.m_x - self.initial_m_x,
                self.state.m_y - self.initial_m_y,
            ),
            m_x: self.state.m_x,
            m_y: self.state.m_y,
            initial_m_x: self.initial_m_x,
            initial_m_y: self.initial_m_y,
            stage_count: self.stage_count,
            ci,
            trace: self.trace,
        })
    }
}

fn run_one_shot(
    kind: ProcedureKind,
    source: &mut dyn ObservationSource,
    target: &TargetSpec,
    costs: &CostModel,
    initial: &InitialStage,
    trace: bool,
) -> Result<ProcedureOutcome, ProcedureError> {
    let mut run = Run::start(source, initial, target, trace)?;
    let plan = one_shot_plan(kind, &run.state, initial.expert(), target, costs)?;
    if !plan.is_zero() {
        run.sample(plan.add_x, plan.add_y)?;
    }
    run.finish(costs)
}

fn run_sequential(
    kind: ProcedureKind,
    source: &mut dyn ObservationSource,
    target: &TargetSpec,
    costs: &CostModel,
    initial: &InitialStage,
    budget: EnumerationBudget,
    trace: bool,
) -> Result<ProcedureOutcome, ProcedureError> {
    let mut run = Run::start(source, initial, target, trace)?;
    let expert = initial.expert();
    loop {
        let decision = stage_decision(
            kind,
            &run.state,
            expert,
            run.stage_count + 1,
            target,
            costs,
            budget,
        )?;
        match decision {
            StageDecision::Stop => break,
            StageDecision::Sample { b_x, b_y } => run.sample(b_x, b_y)?,
        }
    }
    run.finish(costs)
}

/// Worst-case one-stage procedure: `ceil(z^2 / (2 eps^2))` cumulative
/// observations per population; always meets the width target.
pub fn run_conservative(
    source: &mut dyn ObservationSource,
    target: &TargetSpec,
    costs: &CostModel,
    initial: &InitialStage,
) -> Result<ProcedureOutcome, ProcedureError> {
    run_one_shot(
        ProcedureKind::Conservative,
        source,
        target,
        costs,
        initial,
        false,
    )
}

/// Cost-minimizing two-stage procedure; aims at the width target without
/// guaranteeing it.
pub fn run_two_stage_min_cost(
    source: &mut dyn ObservationSource,
    target: &TargetSpec,
    costs: &CostModel,
    initial: &InitialStage,
) -> Result<ProcedureOutcome, ProcedureError> {
    run_one_shot(
        ProcedureKind::TwoStageMinCost,
        source,
        target,
        costs,
        initial,
        false,
    )
}

/// Observation-minimizing two-stage procedure; outcome priced at unit
/// costs since the procedure never consults a cost model.
pub fn run_two_stage_min_obs(
    source: &mut dyn ObservationSource,
    target: &TargetSpec,
    initial: &InitialStage,
) -> Result<ProcedureOutcome, ProcedureError> {
    run_one_shot(
        ProcedureKind::TwoStageMinObs,
        source,
        target,
        &CostModel::unit(),
        initial,
        false,
    )
}

/// Naive sequential batching: half the batch to each population per stage.
pub fn run_naive_sequential(
    source: &mut dyn ObservationSource,
    target: &TargetSpec,
    costs: &CostModel,
    initial: &InitialStage,
) -> Result<ProcedureOutcome, ProcedureError> {
    run_sequential(
        ProcedureKind::NaiveSequential,
        source,
        target,
        costs,
        initial,
        EnumerationBudget::default(),
        false,
    )
}

/// Cost-minimizing sequential batching: the batch is split by the ratio of
/// remaining KKT needs, re-planned each stage.
pub fn run_seq_batch_min_cost(
    source: &mut dyn ObservationSource,
    target: &TargetSpec,
    costs: &CostModel,
    initial: &InitialStage,
) -> Result<ProcedureOutcome, ProcedureError> {
    run_sequential(
        ProcedureKind::SeqBatchMinCost,
        source,
        target,
        costs,
        initial,
        EnumerationBudget::default(),
        false,
    )
}

/// One-step look-ahead: each stage draws the allocation minimizing the
/// expected cost over the enumerated batch outcomes.
pub fn run_one_step_lookahead(
    source: &mut dyn ObservationSource,
    target: &TargetSpec,
    costs: &CostModel,
    initial: &InitialStage,
) -> Result<ProcedureOutcome, ProcedureError> {
    run_sequential(
        ProcedureKind::OneStepLookahead,
        source,
        target,
        costs,
        initial,
        EnumerationBudget::default(),
        false,
    )
}

/// Fully sequential observation-minimizing procedure: one draw per stage.
pub fn run_fully_seq_min_obs(
    source: &mut dyn ObservationSource,
    target: &TargetSpec,
    initial: &InitialStage,
) -> Result<ProcedureOutcome, ProcedureError> {
    run_sequential(
        ProcedureKind::FullySeqMinObs,
        source,
        target,
        &CostModel::unit(),
        initial,
        EnumerationBudget::default(),
        false,
    )
}

/// Batched observation-minimizing procedure with the closed-form split.
pub fn run_batch_seq_min_obs(
    source: &mut dyn ObservationSource,
    target: &TargetSpec,
    initial: &InitialStage,
) -> Result<ProcedureOutcome, ProcedureError> {
    run_sequential(
        ProcedureKind::SeqBatchMinObs,
        source,
        target,
        &CostModel::unit(),
        initial,
        EnumerationBudget::default(),
        false,
    )
}

/// Unified entry point used by the simulator and the CLI. The outcome's
/// `total_cost` is priced at `costs` for every kind, including the
/// cost-blind ones.
pub fn run_procedure(
    kind: ProcedureKind,
    source: &mut dyn ObservationSource,
    target: &TargetSpec,
    costs: &CostModel,
    initial: &InitialStage,
    trace: bool,
) -> Result<ProcedureOutcome, ProcedureError> {
    // Cost-blind procedures make identical decisions under any cost model;
    // running them under `costs` directly also prices the outcome in one go.
    let decision_costs = if kind.cost_blind() {
        CostModel::unit()
    } else {
        *costs
    };
    let mut outcome = match kind {
        ProcedureKind::Conservative
        | ProcedureKind::TwoStageMinCost
        | ProcedureKind::TwoStageMinObs => {
            run_one_shot(kind, source, target, &decision_costs, initial, trace)?
        }
        _ => run_sequential(
            kind,
            source,
            target,
            &decision_costs,
            initial,
            EnumerationBudget::default(),
            trace,
        )?,
    };
    outcome.total_cost = costs.price(outcome.new_obs_x(), outcome.new_obs_y());
    Ok(outcome)
}
