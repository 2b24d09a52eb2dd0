//! Seeded observation sources, scenario definitions, and the Monte Carlo
//! replication engine.
//!
//! Streams are derived per `(master seed, replication, population)` from a
//! counter-based generator, so every procedure in a comparison consumes the
//! same underlying observation sequence for each population (common random
//! numbers) and per-replication cost ratios are properly paired. The
//! initial estimation sample is drawn through the same streams, making it
//! identical across procedures within a replication.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::procedures::{
    run_procedure, InitialStage, ObservationSource, Population, ProcedureError, ProcedureKind,
    ProcedureOutcome,
};
use crate::stat::{CostModel, StatError, TargetSpec};

/// Errors from scenario handling and experiment execution.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario field `{field}`: {reason}")]
    InvalidScenario { field: &'static str, reason: String },

    #[error("scenario file parse error: {0}")]
    ScenarioParse(String),

    #[error("replication {replication} failed: {source}")]
    Replication {
        replication: u64,
        #[source]
        source: ProcedureError,
    },

    #[error(transparent)]
    Stat(#[from] StatError),

    #[error("thread pool construction failed: {0}")]
    ThreadPool(String),
}

/// One experiment configuration: truth, costs, target, and replication count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub id: String,
    pub cost_x: f64,
    pub cost_y: f64,
    pub p_x: f64,
    pub p_y: f64,
    pub epsilon: f64,
    pub alpha: f64,
    pub m_init: u64,
    pub batch: u64,
    pub reps: u64,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        let field_err =
            |field: &'static str, reason: String| SimError::InvalidScenario { field, reason };
        if !(0.0..=1.0).contains(&self.p_x) {
            return Err(field_err("p_x", format!("{} not in [0,1]", self.p_x)));
        }
        if !(0.0..=1.0).contains(&self.p_y) {
            return Err(field_err("p_y", format!("{} not in [0,1]", self.p_y)));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(field_err(
                "epsilon",
                format!("{} not positive", self.epsilon),
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(field_err("alpha", format!("{} not in (0,1)", self.alpha)));
        }
        for (name, c) in [("cost_x", self.cost_x), ("cost_y", self.cost_y)] {
            if !(c > 0.0) || !c.is_finite() {
                return Err(SimError::InvalidScenario {
                    field: if name == "cost_x" { "cost_x" } else { "cost_y" },
                    reason: format!("{c} not positive"),
                });
            }
        }
        if self.batch == 0 {
            return Err(field_err("batch", "must be >= 1".into()));
        }
        if self.reps == 0 {
            return Err(field_err("reps", "must be >= 1".into()));
        }
        Ok(())
    }

    pub fn costs(&self) -> CostModel {
        CostModel::new(self.cost_x, self.cost_y).expect("validated")
    }

    pub fn target(&self) -> Result<TargetSpec, SimError> {
        Ok(TargetSpec::new(self.alpha, self.epsilon, self.batch)?)
    }

    pub fn true_diff(&self) -> f64 {
        self.p_x - self.p_y
    }

    pub fn from_toml_str(text: &str) -> Result<Self, SimError> {
        let spec: ScenarioSpec =
            toml::from_str(text).map_err(|e| SimError::ScenarioParse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }
}

/// One column of an experiment: a procedure, an optional batch override
/// (the batched and fully sequential variants of one procedure differ only
/// here), and whether its decisions should ignore the scenario costs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcedureConfig {
    pub label: String,
    pub kind: ProcedureKind,
    pub batch_override: Option<u64>,
    /// Run the procedure's decisions at unit costs (observation-minimizing
    /// mode); reported costs still use the scenario prices.
    pub unit_decision_costs: bool,
}

impl ProcedureConfig {
    pub fn new(kind: ProcedureKind) -> Self {
        Self {
            label: kind.name().to_string(),
            kind,
            batch_override: None,
            unit_decision_costs: false,
        }
    }

    pub fn labeled(mut self, label: &str) -> Self {
        self.label = label.to_string();
        self
    }

    pub fn with_batch(mut self, batch: u64) -> Self {
        self.batch_override = Some(batch);
        self
    }

    pub fn unit_costs(mut self) -> Self {
        self.unit_decision_costs = true;
        self
    }
}

/// Execution options for an experiment run.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExperimentOptions {
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Measure per-replication wall-clock time.
    pub measure_time: bool,
    /// Keep per-stage traces in the outcomes.
    pub capture_traces: bool,
}

/// Master seed plus the stream-derivation rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngPolicy {
    pub master_seed: u64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngPolicy {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    /// Stream seed for `(replication, population)`. Procedures within a
    /// replication share these, which is what pairs the gap ratios.
    pub fn stream_seed(&self, replication: u64, population: Population) -> u64 {
        let pop = match population {
            Population::X => 1,
            Population::Y => 2,
        };
        splitmix64(splitmix64(splitmix64(self.master_seed) ^ replication) ^ pop)
    }

    /// A fresh paired source for one replication.
    pub fn source(&self, replication: u64, p_x: f64, p_y: f64) -> PairedSource {
        PairedSource {
            x: make_bernoulli_source(p_x, self.stream_seed(replication, Population::X)),
            y: make_bernoulli_source(p_y, self.stream_seed(replication, Population::Y)),
        }
    }
}

/// A deterministic Bernoulli stream: one generator word per observation.
#[derive(Debug, Clone)]
pub struct BernoulliStream {
    rng: ChaCha8Rng,
    threshold: Option<u64>,
    always: bool,
}

/// Build the stream for one population. The draw consumes exactly one
/// 64-bit word per observation, so stream positions depend only on how
/// many observations have been taken, never on who asked.
pub fn make_bernoulli_source(p: f64, stream_seed: u64) -> BernoulliStream {
    let (threshold, always) = if p >= 1.0 {
        (None, true)
    } else if p <= 0.0 {
        (None, false)
    } else {
        // p * 2^64, exact enough for a fixed deterministic threshold
        ((Some((p * 18_446_744_073_709_551_616.0) as u64)), false)
    };
    BernoulliStream {
        rng: ChaCha8Rng::seed_from_u64(stream_seed),
        threshold,
        always,
    }
}

impl BernoulliStream {
    #[inline]
    fn next(&mut self) -> bool {
        let word = self.rng.next_u64();
        match self.threshold {
            Some(t) => word < t,
            None => self.always,
        }
    }

    pub fn draw(&mut self, n: u64) -> Vec<bool> {
        (0..n).map(|_| self.next()).collect()
    }

    pub fn draw_successes(&mut self, n: u64) -> u64 {
        (0..n).filter(|_| self.next()).count() as u64
    }
}

/// Two Bernoulli streams forming a full observation source.
#[derive(Debug, Clone)]
pub struct PairedSource {
    x: BernoulliStream,
    y: BernoulliStream,
}

impl ObservationSource for PairedSource {
    fn draw(&mut self, population: Population, n: u64) -> Vec<bool> {
        match population {
            Population::X => self.x.draw(n),
            Population::Y => self.y.draw(n),
        }
    }

    fn draw_successes(&mut self, population: Population, n: u64) -> u64 {
        match population {
            Population::X => self.x.draw_successes(n),
            Population::Y => self.y.draw_successes(n),
        }
    }
}

/// One procedure's result within a replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcedureRun {
    pub outcome: ProcedureOutcome,
    /// Whether the interval covered the true difference.
    pub covered: bool,
    /// Wall-clock seconds for the run; zero when timing was not requested.
    pub runtime_s: f64,
}

/// All procedure results for one replication, with its seed material.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub replication: u64,
    pub seed_x: u64,
    pub seed_y: u64,
    pub results: Vec<ProcedureRun>,
}

fn run_replication(
    replication: u64,
    scenario: &ScenarioSpec,
    procedures: &[ProcedureConfig],
    policy: &RngPolicy,
    options: ExperimentOptions,
) -> Result<ReplicationRecord, SimError> {
    let costs = scenario.costs();
    let true_diff = scenario.true_diff();
    let mut results = Vec::with_capacity(procedures.len());
    for config in procedures {
        // Fresh source per procedure: identical streams, so each procedure
        // sees the same observation sequence per population.
        let mut source = policy.source(replication, scenario.p_x, scenario.p_y);
        let initial = if scenario.m_init > 0 {
            let w_x = source.draw_successes(Population::X, scenario.m_init);
            let w_y = source.draw_successes(Population::Y, scenario.m_init);
            InitialStage::Counts {
                w_x,
                m_x: scenario.m_init,
                w_y,
                m_y: scenario.m_init,
            }
        } else {
            InitialStage::ExpertOpinion {
                p_x: scenario.p_x,
                p_y: scenario.p_y,
            }
        };
        let target = scenario
            .target()?
            .with_batch(config.batch_override.unwrap_or(scenario.batch))?;
        let decision_costs = if config.unit_decision_costs {
            CostModel::unit()
        } else {
            costs
        };
        let started = options.measure_time.then(std::time::Instant::now);
        let outcome = run_procedure(
            config.kind,
            &mut source,
            &target,
            &decision_costs,
            &initial,
            options.capture_traces,
        )
        .map_err(|source| SimError::Replication {
            replication,
            source,
        })?;
        let runtime_s = started.map_or(0.0, |t| t.elapsed().as_secs_f64());
        results.push(ProcedureRun {
            covered: outcome.ci.covers(true_diff),
            outcome,
            runtime_s,
        });
    }
    Ok(ReplicationRecord {
        replication,
        seed_x: policy.stream_seed(replication, Population::X),
        seed_y: policy.stream_seed(replication, Population::Y),
        results,
    })
}

/// Run every procedure on every replication with common random numbers.
///
/// Replications execute in parallel; records come back ordered by
/// replication index, so summaries are identical for any thread count.
pub fn run_experiment(
    scenario: &ScenarioSpec,
    procedures: &[ProcedureConfig],
    policy: &RngPolicy,
    options: ExperimentOptions,
) -> Result<Vec<ReplicationRecord>, SimError> {
    scenario.validate()?;
    let body = || {
        (0..scenario.reps)
            .into_par_iter()
            .map(|rep| run_replication(rep, scenario, procedures, policy, options))
            .collect::<Result<Vec<_>, _>>()
    };
    match options.threads {
        None => body(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| SimError::ThreadPool(e.to_string()))?
            .install(body),
    }
}

/// Case-study configuration: brand-name drug D maps to population X,
/// generic V to population Y.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseStudyConfig {
    pub c_d: f64,
    pub c_v: f64,
    pub epsilon: f64,
    pub reps: u64,
    pub master_seed: u64,
}

/// Fixed case-study parameters.
pub const CASE_STUDY_P_D: f64 = 0.1;
pub const CASE_STUDY_P_V: f64 = 0.217;
pub const CASE_STUDY_BATCH: u64 = 500;
pub const CASE_STUDY_M_INIT: u64 = 50;
pub const CASE_STUDY_ALPHA: f64 = 0.05;

impl CaseStudyConfig {
    pub fn scenario(&self) -> ScenarioSpec {
        ScenarioSpec {
            id: format!("case-{}-{}-eps{}", self.c_d, self.c_v, self.epsilon),
            cost_x: self.c_d,
            cost_y: self.c_v,
            p_x: CASE_STUDY_P_D,
            p_y: CASE_STUDY_P_V,
            epsilon: self.epsilon,
            alpha: CASE_STUDY_ALPHA,
            m_init: CASE_STUDY_M_INIT,
            batch: CASE_STUDY_BATCH,
            reps: self.reps,
        }
    }

    /// Baseline, observation-minimizing, and cost-minimizing columns.
    pub fn procedures() -> Vec<ProcedureConfig> {
        vec![
            ProcedureConfig::new(ProcedureKind::NaiveSequential).labeled("baseline"),
            ProcedureConfig::new(ProcedureKind::SeqBatchMinCost)
                .labeled("min-observations")
                .unit_costs(),
            ProcedureConfig::new(ProcedureKind::SeqBatchMinCost).labeled("min-costs"),
        ]
    }
}

/// One case-study column summary. Costs are the full study price at the
/// drug prices, initial estimation sample included; months count decision
/// epochs at one batch per month.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseStudyColumn {
    pub label: String,
    pub coverage_pct: f64,
    pub avg_cost: f64,
    pub months_min: u32,
    pub months_max: u32,
    pub months_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseStudySummary {
    pub config: CaseStudyConfig,
    pub columns: Vec<CaseStudyColumn>,
}

/// Run the drug case study for one price configuration.
pub fn run_case_study(
    config: &CaseStudyConfig,
    threads: Option<usize>,
) -> Result<CaseStudySummary, SimError> {
    let scenario = config.scenario();
    let procedures = CaseStudyConfig::procedures();
    let policy = RngPolicy::new(config.master_seed);
    let records = run_experiment(
        &scenario,
        &procedures,
        &policy,
        ExperimentOptions {
            threads,
            ..Default::default()
        },
    )?;
    let costs = scenario.costs();
    let initial_cost = costs.price(scenario.m_init, scenario.m_init);
    let r = records.len() as f64;
    let columns = procedures
        .iter()
        .enumerate()
        .map(|(idx, config)| {
            let mut covered = 0u64;
            let mut cost_sum = 0.0;
            let mut months_min = u32::MAX;
            let mut months_max = 0u32;
            let mut months_sum = 0.0;
            for rec in &records {
                let run = &rec.results[idx];
                if run.covered {
                    covered += 1;
                }
                cost_sum +=
                    initial_cost + costs.price(run.outcome.new_obs_x(), run.outcome.new_obs_y());
                months_min = months_min.min(run.outcome.stage_count);
                months_max = months_max.max(run.outcome.stage_count);
                months_sum += run.outcome.stage_count as f64;
            }
            CaseStudyColumn {
                label: config.label.clone(),
                coverage_pct: 100.0 * covered as f64 / r,
                avg_cost: cost_sum / r,
                months_min,
                months_max,
                months_mean: months_sum / r,
            }
        })
        .collect();
    Ok(CaseStudySummary {
        config: *config,
        columns,
    })
}
