//! Performance measures over replication records and table rendering.
//!
//! Cost gaps are paired per replication against a designated baseline
//! column and reported as the geometric mean of the ratios (computed in
//! log space), with the sample standard deviation, maximum, and minimum of
//! the per-replication percentages. Gap and cost accounting cover only the
//! observations taken outside the initial estimation stage.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::{ProcedureConfig, ReplicationRecord, ScenarioSpec};

#[derive(Debug, Error, PartialEq)]
pub enum ReportError {
    #[error("no replication records")]
    Empty,

    #[error("paired series differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("baseline cost is zero in replication {0}; gap ratio undefined")]
    ZeroBaselineCost(usize),

    #[error("unknown output format `{0}` (expected csv, json, or markdown)")]
    UnknownFormat(String),

    #[error("report parse error: {0}")]
    Parse(String),
}

/// Output formats for rendered summaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    Markdown,
}

impl ReportFormat {
    pub fn parse(name: &str) -> Result<Self, ReportError> {
        match name {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "markdown" | "md" => Ok(Self::Markdown),
            other => Err(ReportError::UnknownFormat(other.to_string())),
        }
    }
}

/// Paired cost-gap statistics versus the baseline, in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapSummary {
    pub geo_pct: f64,
    pub std_pct: f64,
    pub max_pct: f64,
    pub min_pct: f64,
}

/// Summary of one procedure column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcedureSummary {
    pub label: String,
    pub coverage_pct: f64,
    pub coverage_se: f64,
    pub halfwidth_pct: f64,
    /// None for the baseline column itself.
    pub gap: Option<GapSummary>,
    /// Mean cost of post-initial observations at scenario prices.
    pub mean_cost: f64,
    /// Mean post-initial observations taken.
    pub mean_obs: f64,
    pub stages_mean: f64,
    pub stages_min: u32,
    pub stages_max: u32,
    /// Mean wall-clock seconds per replication, when timing was measured.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mean_runtime_s: Option<f64>,
}

/// Summary of one scenario across its procedure columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub scenario: ScenarioSpec,
    pub baseline: Option<String>,
    pub procedures: Vec<ProcedureSummary>,
}

/// Empirical coverage of the true difference by column `proc`, with its
/// binomial standard error.
pub fn coverage(
    records: &[ReplicationRecord],
    proc: usize,
    true_diff: f64,
) -> Result<(f64, f64), ReportError> {
    if records.is_empty() {
        return Err(ReportError::Empty);
    }
    let r = records.len() as f64;
    let covered = records
        .iter()
        .filter(|rec| rec.results[proc].outcome.ci.covers(true_diff))
        .count() as f64;
    let c_hat = covered / r;
    Ok((100.0 * c_hat, (c_hat * (1.0 - c_hat) / r).sqrt()))
}

/// Fraction of replications whose final half-width met `epsilon`, percent.
pub fn halfwidth_achieved(
    records: &[ReplicationRecord],
    proc: usize,
    epsilon: f64,
) -> Result<f64, ReportError> {
    if records.is_empty() {
        return Err(ReportError::Empty);
    }
    let achieved = records
        .iter()
        .filter(|rec| rec.results[proc].outcome.ci.half_width <= epsilon)
        .count();
    Ok(100.0 * achieved as f64 / records.len() as f64)
}

/// Paired cost gap of `proc_costs` against `baseline_costs`.
///
/// `Gap_i = cost_i / baseline_i`; the headline number is the geometric
/// mean of the ratios, accumulated in log space.
pub fn cost_gap(proc_costs: &[f64], baseline_costs: &[f64]) -> Result<GapSummary, ReportError> {
    if proc_costs.is_empty() {
        return Err(ReportError::Empty);
    }
    if proc_costs.len() != baseline_costs.len() {
        return Err(ReportError::LengthMismatch(
            proc_costs.len(),
            baseline_costs.len(),
        ));
    }
    let mut log_sum = 0.0;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut max = f64::NEG_INFINITY;
    let mut min = f64::INFINITY;
    let n = proc_costs.len() as f64;
    for (i, (&c, &b)) in proc_costs.iter().zip(baseline_costs).enumerate() {
        if b <= 0.0 {
            return Err(ReportError::ZeroBaselineCost(i));
        }
        let gap = c / b;
        log_sum += gap.ln();
        sum += gap;
        sum_sq += gap * gap;
        max = max.max(gap);
        min = min.min(gap);
    }
    let geo = (log_sum / n).exp();
    let arith = sum / n;
    // geometric mean of positive ratios can never exceed the arithmetic mean
    assert!(
        geo <= arith * (1.0 + 1e-12),
        "AM-GM violated: {geo} > {arith}"
    );
    let var = if proc_costs.len() > 1 {
        (sum_sq - n * arith * arith).max(0.0) / (n - 1.0)
    } else {
        0.0
    };
    Ok(GapSummary {
        geo_pct: 100.0 * geo,
        std_pct: 100.0 * var.sqrt(),
        max_pct: 100.0 * max,
        min_pct: 100.0 * min,
    })
}

/// Post-initial cost of one column across records, at scenario prices.
pub fn priced_costs(
    records: &[ReplicationRecord],
    proc: usize,
    scenario: &ScenarioSpec,
) -> Vec<f64> {
    let costs = scenario.costs();
    records
        .iter()
        .map(|rec| {
            let o = &rec.results[proc].outcome;
            costs.price(o.new_obs_x(), o.new_obs_y())
        })
        .collect()
}

/// Build the per-procedure summaries for one scenario.
///
/// `baseline` names the column against which gaps are paired; its own gap
/// entry is `None`.
pub fn summarize_experiment(
    scenario: &ScenarioSpec,
    procedures: &[ProcedureConfig],
    records: &[ReplicationRecord],
    baseline: Option<usize>,
    include_timing: bool,
) -> Result<ExperimentSummary, ReportError> {
    if records.is_empty() {
        return Err(ReportError::Empty);
    }
    let baseline_costs = baseline.map(|b| priced_costs(records, b, scenario));
    let r = records.len() as f64;
    let mut out = Vec::with_capacity(procedures.len());
    for (idx, config) in procedures.iter().enumerate() {
        let (coverage_pct, coverage_se) = coverage(records, idx, scenario.true_diff())?;
        let halfwidth_pct = halfwidth_achieved(records, idx, scenario.epsilon)?;
        let costs = priced_costs(records, idx, scenario);
        let gap = match (&baseline_costs, baseline) {
            (Some(base), Some(b)) if b != idx => Some(cost_gap(&costs, base)?),
            _ => None,
        };
        let mean_cost = costs.iter().sum::<f64>() / r;
        let mut obs_sum = 0u64;
        let mut stages_sum = 0u64;
        let mut stages_min = u32::MAX;
        let mut stages_max = 0u32;
        let mut runtime_sum = 0.0;
        for rec in records {
            let run = &rec.results[idx];
            obs_sum += run.outcome.new_obs_x() + run.outcome.new_obs_y();
            stages_sum += run.outcome.stage_count as u64;
            stages_min = stages_min.min(run.outcome.stage_count);
            stages_max = stages_max.max(run.outcome.stage_count);
            runtime_sum += run.runtime_s;
        }
        out.push(ProcedureSummary {
            label: config.label.clone(),
            coverage_pct,
            coverage_se,
            halfwidth_pct,
            gap,
            mean_cost,
            mean_obs: obs_sum as f64 / r,
            stages_mean: stages_sum as f64 / r,
            stages_min,
            stages_max,
            mean_runtime_s: include_timing.then(|| runtime_sum / r),
        });
    }
    Ok(ExperimentSummary {
        scenario: scenario.clone(),
        baseline: baseline.map(|b| procedures[b].label.clone()),
        procedures: out,
    })
}

const CSV_HEADER: &str = "scenario,procedure,coverage_pct,coverage_se,halfwidth_pct,\
gap_geo_pct,gap_std_pct,gap_max_pct,gap_min_pct,mean_cost,mean_obs,\
stages_mean,stages_min,stages_max,mean_runtime_s";

/// Render summaries in the requested format.
pub fn render_table(summaries: &[ExperimentSummary], format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => render_csv(summaries),
        ReportFormat::Json => render_json(summaries),
        ReportFormat::Markdown => render_markdown(summaries),
    }
}

/// CSV with a fixed column order; one row per (scenario, procedure).
/// Floats use Rust's shortest round-trip formatting, so equal runs render
/// byte-identically.
pub fn render_csv(summaries: &[ExperimentSummary]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    for summary in summaries {
        for p in &summary.procedures {
            let gap = p.gap.as_ref();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                summary.scenario.id,
                p.label,
                p.coverage_pct,
                p.coverage_se,
                p.halfwidth_pct,
                opt(gap.map(|g| g.geo_pct)),
                opt(gap.map(|g| g.std_pct)),
                opt(gap.map(|g| g.max_pct)),
                opt(gap.map(|g| g.min_pct)),
                p.mean_cost,
                p.mean_obs,
                p.stages_mean,
                p.stages_min,
                p.stages_max,
                opt(p.mean_runtime_s),
            ));
        }
    }
    out
}

pub fn render_json(summaries: &[ExperimentSummary]) -> String {
    serde_json::to_string_pretty(summaries).expect("summaries serialize")
}

/// Inverse of [`render_json`].
pub fn parse_json(text: &str) -> Result<Vec<ExperimentSummary>, ReportError> {
    serde_json::from_str(text).map_err(|e| ReportError::Parse(e.to_string()))
}

/// Markdown report mirroring the benchmark row layout: coverage,
/// half-width achieved, cost gap, max/min gap, plus means.
pub fn render_markdown(summaries: &[ExperimentSummary]) -> String {
    let mut out = String::new();
    for summary in summaries {
        let s = &summary.scenario;
        out.push_str(&format!(
            "### {} (c_x/c_y = {:.4}, p_x = {}, p_y = {}, eps = {}, alpha = {}, R = {})\n\n",
            s.id,
            s.cost_x / s.cost_y,
            s.p_x,
            s.p_y,
            s.epsilon,
            s.alpha,
            s.reps
        ));
        out.push_str("| measure |");
        for p in &summary.procedures {
            out.push_str(&format!(" {} |", p.label));
        }
        out.push('\n');
        out.push_str("|---|");
        for _ in &summary.procedures {
            out.push_str("---|");
        }
        out.push('\n');
        let row = |name: &str, cells: Vec<String>| {
            let mut line = format!("| {name} |");
            for c in cells {
                line.push_str(&format!(" {c} |"));
            }
            line.push('\n');
            line
        };
        out.push_str(&row(
            "Coverage Probability (%)",
            summary
                .procedures
                .iter()
                .map(|p| format!("{:.1}", p.coverage_pct))
                .collect(),
        ));
        out.push_str(&row(
            "Half-width Achieved (%)",
            summary
                .procedures
                .iter()
                .map(|p| format!("{:.1}", p.halfwidth_pct))
                .collect(),
        ));
        out.push_str(&row(
            "Cost Gap % (std.)",
            summary
                .procedures
                .iter()
                .map(|p| match &p.gap {
                    Some(g) => format!("{:.1} ({:.1})", g.geo_pct, g.std_pct),
                    None => "100 (--)".to_string(),
                })
                .collect(),
        ));
        out.push_str(&row(
            "Max Gap % (Min)",
            summary
                .procedures
                .iter()
                .map(|p| match &p.gap {
                    Some(g) => format!("{:.1} ({:.1})", g.max_pct, g.min_pct),
                    None => "---".to_string(),
                })
                .collect(),
        ));
        out.push_str(&row(
            "Mean Cost",
            summary
                .procedures
                .iter()
                .map(|p| format!("{:.1}", p.mean_cost))
                .collect(),
        ));
        out.push_str(&row(
            "Observations taken",
            summary
                .procedures
                .iter()
                .map(|p| format!("{:.1}", p.mean_obs))
                .collect(),
        ));
        out.push_str(&row(
            "Stages (mean [min,max])",
            summary
                .procedures
                .iter()
                .map(|p| format!("{:.1} [{},{}]", p.stages_mean, p.stages_min, p.stages_max))
                .collect(),
        ));
        if summary
            .procedures
            .iter()
            .any(|p| p.mean_runtime_s.is_some())
        {
            out.push_str(&row(
                "Running Time (s)",
                summary
                    .procedures
                    .iter()
                    .map(|p| match p.mean_runtime_s {
                        Some(t) => format!("{t:.4}"),
                        None => "---".to_string(),
                    })
                    .collect(),
            ));
        }
        out.push('\n');
    }
    out
}

/// Per-replication record export with a fixed, documented header.
pub const RECORDS_CSV_HEADER: &str = "replication,procedure,m_x,m_y,new_obs_x,new_obs_y,\
stage_count,cost,center,half_width,achieved,covered";

pub fn render_records_csv(
    records: &[ReplicationRecord],
    procedures: &[ProcedureConfig],
    scenario: &ScenarioSpec,
) -> String {
    let costs = scenario.costs();
    let mut out = String::from(RECORDS_CSV_HEADER);
    out.push('\n');
    for rec in records {
        for (idx, config) in procedures.iter().enumerate() {
            let run = &rec.results[idx];
            let o = &run.outcome;
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                rec.replication,
                config.label,
                o.m_x,
                o.m_y,
                o.new_obs_x(),
                o.new_obs_y(),
                o.stage_count,
                costs.price(o.new_obs_x(), o.new_obs_y()),
                o.ci.center,
                o.ci.half_width,
                o.achieved,
                run.covered,
            ));
        }
    }
    out
}

/// Line-delimited per-stage trace log header. Requires records produced
/// with trace capture enabled; procedures without a trace emit nothing.
pub const TRACE_LOG_HEADER: &str = "replication,procedure,stage,b_x,b_y,w_x,m_x,w_y,m_y,half_width";

pub fn render_trace_log(records: &[ReplicationRecord], procedures: &[ProcedureConfig]) -> String {
    let mut out = String::from(TRACE_LOG_HEADER);
    out.push('\n');
    for rec in records {
        for (idx, config) in procedures.iter().enumerate() {
            let Some(trace) = rec.results[idx].outcome.trace.as_ref() else {
                continue;
            };
            for r in trace {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{}\n",
                    rec.replication,
                    config.label,
                    r.stage,
                    r.b_x,
                    r.b_y,
                    r.w_x,
                    r.m_x,
                    r.w_y,
                    r.m_y,
                    r.half_width,
                ));
            }
        }
    }
    out
}
