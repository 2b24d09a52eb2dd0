//! The benchmark scenario battery, the standard column sets for each
//! report table, and the published reference values the reproduction
//! harness compares against.
//!
//! Scenarios s1–s9 pair three cost ratios (1, 1/3, 5) with three truth
//! pairs ((0.3, 0.2), (0.5, 0.2), (0.5, 0.5)); every scenario uses
//! `epsilon = 0.05`, `alpha = 0.05`, initial samples of 50 per population,
//! and 1000 replications. The case study compares drug price
//! configurations at `epsilon` of 0.02 and 0.015 with monthly batches of
//! 500 and 10000 replications.

use crate::procedures::ProcedureKind;
use crate::sim::{CaseStudyConfig, ProcedureConfig, ScenarioSpec};

/// Scenario parameters: (id, cost ratio c_x/c_y, p_x, p_y).
pub const SCENARIO_PARAMS: [(&str, f64, f64, f64); 9] = [
    ("s1", 1.0, 0.3, 0.2),
    ("s2", 1.0, 0.5, 0.2),
    ("s3", 1.0, 0.5, 0.5),
    ("s4", 1.0 / 3.0, 0.3, 0.2),
    ("s5", 1.0 / 3.0, 0.5, 0.2),
    ("s6", 1.0 / 3.0, 0.5, 0.5),
    ("s7", 5.0, 0.3, 0.2),
    ("s8", 5.0, 0.5, 0.2),
    ("s9", 5.0, 0.5, 0.5),
];

/// Build a battery scenario by id (`s1`..`s9`).
pub fn scenario(id: &str) -> Option<ScenarioSpec> {
    SCENARIO_PARAMS
        .iter()
        .find(|(name, _, _, _)| *name == id)
        .map(|&(name, ratio, p_x, p_y)| ScenarioSpec {
            id: name.to_string(),
            cost_x: ratio,
            cost_y: 1.0,
            p_x,
            p_y,
            epsilon: 0.05,
            alpha: 0.05,
            m_init: 50,
            batch: 10,
            reps: 1000,
        })
}

pub fn all_scenarios() -> Vec<ScenarioSpec> {
    SCENARIO_PARAMS
        .iter()
        .map(|(id, _, _, _)| scenario(id).unwrap())
        .collect()
}

/// Columns of the two-stage comparison (table 2): conservative baseline,
/// observation-minimizing, cost-minimizing. Batch size is irrelevant for
/// one-shot procedures.
pub fn two_stage_columns() -> Vec<ProcedureConfig> {
    vec![
        ProcedureConfig::new(ProcedureKind::Conservative),
        ProcedureConfig::new(ProcedureKind::TwoStageMinObs),
        ProcedureConfig::new(ProcedureKind::TwoStageMinCost),
    ]
}

/// Columns of the fully sequential comparison (table 3): the naive
/// baseline pairs one draw per population per stage (batch 2); the
/// cost-minimizing procedure runs fully sequentially (batch 1).
pub fn fully_seq_columns() -> Vec<ProcedureConfig> {
    vec![
        ProcedureConfig::new(ProcedureKind::NaiveSequential).with_batch(2),
        ProcedureConfig::new(ProcedureKind::FullySeqMinObs).with_batch(1),
        ProcedureConfig::new(ProcedureKind::SeqBatchMinCost).with_batch(1),
    ]
}

/// Columns of the batched comparison (table 4), all at the scenario batch.
pub fn batched_columns() -> Vec<ProcedureConfig> {
    vec![
        ProcedureConfig::new(ProcedureKind::NaiveSequential),
        ProcedureConfig::new(ProcedureKind::SeqBatchMinObs),
        ProcedureConfig::new(ProcedureKind::SeqBatchMinCost),
    ]
}

/// Columns of the cost-minimization comparison (table 5): two-stage
/// baseline, fully sequential, batched, and one-step look-ahead.
pub fn cost_compare_columns() -> Vec<ProcedureConfig> {
    vec![
        ProcedureConfig::new(ProcedureKind::TwoStageMinCost).labeled("two-stage"),
        ProcedureConfig::new(ProcedureKind::SeqBatchMinCost)
            .labeled("fully-seq")
            .with_batch(1),
        ProcedureConfig::new(ProcedureKind::SeqBatchMinCost).labeled("batches"),
        ProcedureConfig::new(ProcedureKind::OneStepLookahead).labeled("one-step-ahead"),
    ]
}

/// The six case-study configurations of tables 7 and 8.
pub fn case_study_configs(master_seed: u64, reps: u64) -> Vec<CaseStudyConfig> {
    let mut out = Vec::new();
    for epsilon in [0.02, 0.015] {
        for (c_d, c_v) in [(259.0, 14.0), (259.0, 38.0), (280.0, 38.0)] {
            out.push(CaseStudyConfig {
                c_d,
                c_v,
                epsilon,
                reps,
                master_seed,
            });
        }
    }
    out
}

/// Reference row for a three-column comparison table: coverage and
/// half-width per column, paired gap statistics for the two non-baseline
/// columns.
#[derive(Debug, Clone, Copy)]
pub struct ComparisonRef {
    pub scenario: &'static str,
    pub coverage: [f64; 3],
    pub halfwidth: [f64; 3],
    /// (geometric gap %, gap std %) for columns 2 and 3.
    pub gap: [(f64, f64); 2],
}

/// Published values for the two-stage comparison.
pub const TABLE2: [ComparisonRef; 9] = [
    ComparisonRef {
        scenario: "s1",
        coverage: [93.9, 94.7, 93.9],
        halfwidth: [100.0, 43.3, 44.5],
        gap: [(69.1, 9.3), (69.1, 9.3)],
    },
    ComparisonRef {
        scenario: "s2",
        coverage: [94.1, 96.9, 95.6],
        halfwidth: [100.0, 44.3, 45.5],
        gap: [(77.2, 8.1), (77.2, 8.1)],
    },
    ComparisonRef {
        scenario: "s3",
        coverage: [93.9, 95.2, 94.6],
        halfwidth: [100.0, 10.5, 10.2],
        gap: [(97.9, 2.0), (97.9, 2.0)],
    },
    ComparisonRef {
        scenario: "s4",
        coverage: [93.9, 94.7, 94.5],
        halfwidth: [100.0, 43.3, 44.8],
        gap: [(66.3, 10.1), (61.3, 9.5)],
    },
    ComparisonRef {
        scenario: "s5",
        coverage: [94.1, 96.9, 95.2],
        halfwidth: [100.0, 44.3, 48.0],
        gap: [(72.3, 9.8), (66.7, 9.2)],
    },
    ComparisonRef {
        scenario: "s6",
        coverage: [93.9, 95.2, 94.5],
        halfwidth: [100.0, 10.5, 9.3],
        gap: [(97.9, 2.1), (90.9, 2.0)],
    },
    ComparisonRef {
        scenario: "s7",
        coverage: [93.9, 94.7, 94.4],
        halfwidth: [100.0, 43.3, 44.3],
        gap: [(72.6, 8.9), (63.0, 7.7)],
    },
    ComparisonRef {
        scenario: "s8",
        coverage: [94.1, 96.9, 95.2],
        halfwidth: [100.0, 44.3, 39.5],
        gap: [(83.8, 6.0), (49.4, 4.8)],
    },
    ComparisonRef {
        scenario: "s9",
        coverage: [93.9, 95.2, 94.7],
        halfwidth: [100.0, 10.5, 10.8],
        gap: [(97.8, 2.1), (84.5, 1.9)],
    },
];

/// Published values for the fully sequential comparison. Half-width is
/// 100 for every column by construction.
pub const TABLE3: [ComparisonRef; 9] = [
    ComparisonRef {
        scenario: "s1",
        coverage: [94.8, 93.7, 95.1],
        halfwidth: [100.0, 100.0, 100.0],
        gap: [(99.1, 5.4), (99.2, 5.4)],
    },
    ComparisonRef {
        scenario: "s2",
        coverage: [95.2, 95.8, 96.1],
        halfwidth: [100.0, 100.0, 100.0],
        gap: [(98.3, 3.8), (98.3, 3.9)],
    },
    ComparisonRef {
        scenario: "s3",
        coverage: [94.5, 94.0, 95.4],
        halfwidth: [100.0, 100.0, 100.0],
        gap: [(100.0, 0.2), (100.0, 0.2)],
    },
    ComparisonRef {
        scenario: "s4",
        coverage: [94.8, 94.4, 95.1],
        halfwidth: [100.0, 100.0, 100.0],
        gap: [(95.3, 5.7), (88.0, 5.6)],
    },
    ComparisonRef {
        scenario: "s5",
        coverage: [95.2, 95.6, 95.0],
        halfwidth: [100.0, 100.0, 100.0],
        gap: [(92.3, 4.3), (85.1, 4.5)],
    },
    ComparisonRef {
        scenario: "s6",
        coverage: [94.5, 94.3, 94.2],
        halfwidth: [100.0, 100.0, 100.0],
        gap: [(100.0, 0.2), (92.8, 0.2)],
    },
    ComparisonRef {
        scenario: "s7",
        coverage: [94.9, 94.0, 94.6],
        halfwidth: [100.0, 100.0, 100.0],
        gap: [(104.1, 5.3), (90.5, 4.8)],
    },
    ComparisonRef {
        scenario: "s8",
        coverage: [95.4, 95.5, 95.1],
        halfwidth: [100.0, 100.0, 100.0],
        gap: [(106.4, 3.3), (93.0, 2.7)],
    },
    ComparisonRef {
        scenario: "s9",
        coverage: [94.3, 94.6, 95.4],
        halfwidth: [100.0, 100.0, 100.0],
        gap: [(100.0, 0.2), (86.4, 0.2)],
    },
];

/// Published values for the batched comparison (batch 10).
pub const TABLE4: [ComparisonRef; 9] = [
    ComparisonRef {
        scenario: "s1",
        coverage: [96.3, 95.4, 95.1],
        halfwidth: [100.0, 100.0, 100.0],
        gap: [(99.3, 5.2), (99.4, 5.2)],
    },
    ComparisonRef {
        scenario: "s2",
        coverage: [93.0, 94.6, 95.4],
        halfwidth: [100.0, 100.0, 100.0],
        gap: [(98.7, 3.8), (98.6, 3.8)],
    },
    ComparisonRef {
        scenario: "s3",
        coverage: [96.2, 94.8, 94.9],
        halfwidth: [100.0, 100.0, 100.0],
        gap: [(100.0, 0.2), (100.0, 0.2)],
    },
    ComparisonRef {
        scenario: "s4",
        coverage: [94.7, 94.6, 94.5],
        halfwidth: [100.0, 100.0, 100.0],
        gap: [(95.7, 5.7), (88.2, 5.6)],
    },
    ComparisonRef {
        scenario: "s5",
        coverage: [94.9, 95.9, 93.7],
        halfwidth: [100.0, 100.0, 100.0],
        gap: [(92.8, 4.2), (85.5, 4.5)],
    },
    ComparisonRef {
        scenario: "s6",
        coverage: [95.9, 95.0, 94.3],
        halfwidth: [100.0, 100.0, 100.0],
        gap: [(100.0, 0.2), (92.8, 0.2)],
    },
    ComparisonRef {
        scenario: "s7",
        coverage: [94.9, 94.3, 95.3],
        halfwidth: [100.0, 100.0, 100.0],
        gap: [(104.2, 4.9), (90.5, 4.7)],
    },
    ComparisonRef {
        scenario: "s8",
        coverage: [95.4, 95.3, 94.5],
        halfwidth: [100.0, 100.0, 100.0],
        gap: [(106.7, 3.4), (93.1, 2.6)],
    },
    ComparisonRef {
        scenario: "s9",
        coverage: [95.3, 94.8, 93.8],
        halfwidth: [100.0, 100.0, 100.0],
        gap: [(100.0, 0.2), (86.2, 0.2)],
    },
];

/// Reference row for the four-column cost comparison.
#[derive(Debug, Clone, Copy)]
pub struct CostCompareRef {
    pub scenario: &'static str,
    pub coverage: [f64; 4],
    pub halfwidth: [f64; 4],
    /// (geometric gap %, std %) vs the two-stage baseline, columns 2-4.
    pub gap: [(f64, f64); 3],
    pub observations: [f64; 4],
    /// Mean running time in seconds, reported for one scenario per group.
    pub runtime_s: Option<[f64; 4]>,
}

/// Published values for the cost-minimization comparison.
pub const TABLE5: [CostCompareRef; 9] = [
    CostCompareRef {
        scenario: "s1",
        coverage: [93.6, 94.5, 95.5, 94.2],
        halfwidth: [43.0, 100.0, 100.0, 100.0],
        gap: [(102.7, 15.0), (103.0, 14.7), (103.2, 15.0)],
        observations: [1002.5, 1029.6, 1032.5, 1034.8],
        runtime_s: Some([0.00, 0.09, 0.01, 6.42]),
    },
    CostCompareRef {
        scenario: "s2",
        coverage: [93.8, 94.6, 94.4, 92.6],
        halfwidth: [44.7, 100.0, 100.0, 100.0],
        gap: [(102.3, 11.4), (102.5, 11.7), (102.5, 11.6)],
        observations: [1117.0, 1142.3, 1144.8, 1145.1],
        runtime_s: None,
    },
    CostCompareRef {
        scenario: "s3",
        coverage: [93.7, 94.5, 96.7, 95.4],
        halfwidth: [11.3, 100.0, 100.0, 100.0],
        gap: [(101.7, 2.2), (102.3, 2.2), (102.3, 2.2)],
        observations: [1407.7, 1435.2, 1439.7, 1439.8],
        runtime_s: None,
    },
    CostCompareRef {
        scenario: "s4",
        coverage: [92.3, 94.4, 94.5, 94.6],
        halfwidth: [45.1, 100.0, 100.0, 100.0],
        gap: [(102.4, 18.2), (102.9, 18.3), (102.2, 18.2)],
        observations: [1087.0, 1114.6, 1119.6, 1101.4],
        runtime_s: Some([0.00, 0.10, 0.01, 6.84]),
    },
    CostCompareRef {
        scenario: "s5",
        coverage: [94.5, 95.1, 95.6, 93.2],
        halfwidth: [46.3, 100.0, 100.0, 100.0],
        gap: [(102.1, 16.2), (102.3, 16.4), (102.2, 16.2)],
        observations: [1209.7, 1235.7, 1237.8, 1265.8],
        runtime_s: None,
    },
    CostCompareRef {
        scenario: "s6",
        coverage: [94.7, 94.4, 94.5, 94.6],
        halfwidth: [9.8, 100.0, 100.0, 100.0],
        gap: [(101.9, 2.3), (102.3, 2.4), (102.2, 2.4)],
        observations: [1524.1, 1553.5, 1559.1, 1572.0],
        runtime_s: None,
    },
    CostCompareRef {
        scenario: "s7",
        coverage: [93.5, 95.1, 94.5, 95.4],
        halfwidth: [43.3, 100.0, 100.0, 100.0],
        gap: [(102.6, 13.4), (103.0, 13.1), (103.0, 13.5)],
        observations: [1189.1, 1221.0, 1223.8, 1203.8],
        runtime_s: Some([0.00, 0.11, 0.01, 7.54]),
    },
    CostCompareRef {
        scenario: "s8",
        coverage: [93.7, 94.5, 94.8, 95.7],
        halfwidth: [39.6, 100.0, 100.0, 100.0],
        gap: [(102.3, 7.0), (102.6, 7.0), (102.4, 7.0)],
        observations: [1321.6, 1352.6, 1356.3, 1333.9],
        runtime_s: None,
    },
    CostCompareRef {
        scenario: "s9",
        coverage: [94.1, 95.9, 95.4, 94.5],
        halfwidth: [11.2, 100.0, 100.0, 100.0],
        gap: [(102.0, 2.4), (102.1, 2.4), (102.2, 2.4)],
        observations: [1664.8, 1697.6, 1699.7, 1734.0],
        runtime_s: None,
    },
];

/// Reference row for one case-study price configuration: baseline,
/// observation-minimizing, cost-minimizing columns.
#[derive(Debug, Clone, Copy)]
pub struct CaseStudyRef {
    pub c_d: f64,
    pub c_v: f64,
    pub coverage: [f64; 3],
    pub avg_cost: [f64; 3],
    pub months: [(u32, u32); 3],
    pub avg_months: [u32; 3],
}

/// Published case-study values at epsilon = 0.02.
pub const TABLE7: [CaseStudyRef; 3] = [
    CaseStudyRef {
        c_d: 259.0,
        c_v: 14.0,
        coverage: [94.9, 94.9, 94.6],
        avg_cost: [714_550.0, 526_937.0, 407_385.0],
        months: [(9, 11), (9, 11), (13, 19)],
        avg_months: [11, 11, 17],
    },
    CaseStudyRef {
        c_d: 259.0,
        c_v: 38.0,
        coverage: [94.9, 94.6, 94.6],
        avg_cost: [777_368.0, 591_541.0, 545_252.0],
        months: [(9, 11), (9, 11), (11, 14)],
        avg_months: [11, 11, 13],
    },
    CaseStudyRef {
        c_d: 280.0,
        c_v: 38.0,
        coverage: [94.9, 94.6, 94.6],
        avg_cost: [832_333.0, 631_210.0, 573_097.0],
        months: [(9, 11), (9, 11), (13, 19)],
        avg_months: [11, 11, 17],
    },
];

/// Published case-study values at epsilon = 0.015.
pub const TABLE8: [CaseStudyRef; 3] = [
    CaseStudyRef {
        c_d: 259.0,
        c_v: 14.0,
        coverage: [94.6, 94.9, 94.6],
        avg_cost: [1_243_017.0, 975_939.0, 710_368.0],
        months: [(17, 19), (16, 19), (25, 32)],
        avg_months: [19, 18, 29],
    },
    CaseStudyRef {
        c_d: 259.0,
        c_v: 38.0,
        coverage: [94.6, 94.7, 94.6],
        avg_cost: [1_352_293.0, 1_093_770.0, 950_534.0],
        months: [(17, 19), (16, 19), (20, 24)],
        avg_months: [19, 18, 22],
    },
    CaseStudyRef {
        c_d: 280.0,
        c_v: 38.0,
        coverage: [94.9, 94.7, 94.6],
        avg_cost: [1_447_910.0, 1_167_327.0, 1_001_178.0],
        months: [(17, 19), (17, 19), (20, 25)],
        avg_months: [19, 18, 23],
    },
];
