//! Benchmark-table reproduction: rerun the full scenario battery or the
//! case study behind one report table and print computed values beside the
//! published reference values.
//!
//! The z column is a reporting aid: the deviation in units of the
//! reference Monte Carlo standard error (binomial for percentages, gap
//! std over sqrt(R) for gaps). Pass/fail gating lives in the acceptance
//! test suite, not here.

use std::path::PathBuf;

use clap::Args;

use fwci_core::reference::{self, case_study_configs, ComparisonRef, CostCompareRef};
use fwci_core::report::{render_csv, render_json, summarize_experiment, ExperimentSummary};
use fwci_core::sim::{
    run_case_study, run_experiment, CaseStudyConfig, ExperimentOptions, ProcedureConfig, RngPolicy,
};

#[derive(Args)]
pub struct ReproduceArgs {
    /// Table id: 2, 3, 4, 5 (scenario battery) or 7, 8 (case study).
    #[arg(long)]
    table: u32,

    /// Master seed (required: no silent entropy).
    #[arg(long)]
    seed: u64,

    /// Override replication count (default: 1000 for tables 2-5,
    /// 10000 for tables 7-8).
    #[arg(long)]
    reps: Option<u64>,

    /// Worker threads (default: one per core).
    #[arg(long)]
    threads: Option<usize>,

    /// Output directory (default: $FWCI_OUT_DIR or current directory).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn pct_se(ref_pct: f64, reps: u64) -> f64 {
    let p = (ref_pct / 100.0).clamp(0.0, 1.0);
    100.0 * (p * (1.0 - p) / reps as f64).sqrt()
}

fn fmt_z(delta: f64, se: f64) -> String {
    if se <= 0.0 {
        if delta == 0.0 {
            "exact".to_string()
        } else {
            "se=0".to_string()
        }
    } else {
        format!("z={:+.1}", delta / se)
    }
}

fn comparison_line(measure: &str, column: &str, ours: f64, reference: f64, se: f64) {
    println!(
        "  {measure:<26} {column:<20} computed {ours:>8.1}  reference {reference:>8.1}  diff {:+6.1}  {}",
        ours - reference,
        fmt_z(ours - reference, se)
    );
}

fn run_battery(
    columns: Vec<ProcedureConfig>,
    refs: &[ComparisonRef; 9],
    args: &ReproduceArgs,
    measure_time: bool,
) -> anyhow::Result<Vec<ExperimentSummary>> {
    let policy = RngPolicy::new(args.seed);
    let mut summaries = Vec::new();
    for row in refs {
        let mut scenario = reference::scenario(row.scenario).unwrap();
        if let Some(reps) = args.reps {
            scenario.reps = reps;
        }
        let records = run_experiment(
            &scenario,
            &columns,
            &policy,
            ExperimentOptions {
                threads: args.threads,
                measure_time,
                ..Default::default()
            },
        )?;
        let summary = summarize_experiment(&scenario, &columns, &records, Some(0), measure_time)?;
        println!(
            "{} (c_x/c_y = {:.4}, p = ({}, {}))",
            scenario.id,
            scenario.cost_x / scenario.cost_y,
            scenario.p_x,
            scenario.p_y
        );
        for (i, p) in summary.procedures.iter().enumerate() {
            comparison_line(
                "coverage %",
                &p.label,
                p.coverage_pct,
                row.coverage[i],
                pct_se(row.coverage[i], scenario.reps),
            );
        }
        for (i, p) in summary.procedures.iter().enumerate() {
            comparison_line(
                "half-width achieved %",
                &p.label,
                p.halfwidth_pct,
                row.halfwidth[i],
                pct_se(row.halfwidth[i], scenario.reps),
            );
        }
        for (i, p) in summary.procedures.iter().enumerate().skip(1) {
            let (ref_geo, ref_std) = row.gap[i - 1];
            let gap = p.gap.expect("non-baseline column has a gap");
            comparison_line(
                "cost gap % (geom)",
                &p.label,
                gap.geo_pct,
                ref_geo,
                ref_std / (scenario.reps as f64).sqrt(),
            );
        }
        summaries.push(summary);
    }
    Ok(summaries)
}

fn run_cost_compare(
    refs: &[CostCompareRef; 9],
    args: &ReproduceArgs,
) -> anyhow::Result<Vec<ExperimentSummary>> {
    let columns = reference::cost_compare_columns();
    let policy = RngPolicy::new(args.seed);
    let mut summaries = Vec::new();
    for row in refs {
        let mut scenario = reference::scenario(row.scenario).unwrap();
        if let Some(reps) = args.reps {
            scenario.reps = reps;
        }
        let records = run_experiment(
            &scenario,
            &columns,
            &policy,
            ExperimentOptions {
                threads: args.threads,
                measure_time: true,
                ..Default::default()
            },
        )?;
        let summary = summarize_experiment(&scenario, &columns, &records, Some(0), true)?;
        println!(
            "{} (c_x/c_y = {:.4}, p = ({}, {}))",
            scenario.id,
            scenario.cost_x / scenario.cost_y,
            scenario.p_x,
            scenario.p_y
        );
        for (i, p) in summary.procedures.iter().enumerate() {
            comparison_line(
                "coverage %",
                &p.label,
                p.coverage_pct,
                row.coverage[i],
                pct_se(row.coverage[i], scenario.reps),
            );
        }
        for (i, p) in summary.procedures.iter().enumerate() {
            let obs_ref = row.observations[i];
            println!(
                "  {:<26} {:<20} computed {:>8.1}  reference {:>8.1}  diff {:+6.2}%",
                "observations taken",
                p.label,
                p.mean_obs,
                obs_ref,
                100.0 * (p.mean_obs - obs_ref) / obs_ref
            );
        }
        for (i, p) in summary.procedures.iter().enumerate().skip(1) {
            let (ref_geo, ref_std) = row.gap[i - 1];
            let gap = p.gap.expect("non-baseline column has a gap");
            comparison_line(
                "cost gap % (geom)",
                &p.label,
                gap.geo_pct,
                ref_geo,
                ref_std / (scenario.reps as f64).sqrt(),
            );
        }
        if let Some(ref_rt) = row.runtime_s {
            for (i, p) in summary.procedures.iter().enumerate() {
                println!(
                    "  {:<26} {:<20} computed {:>8.4}s reference {:>8.2}s",
                    "running time",
                    p.label,
                    p.mean_runtime_s.unwrap_or(0.0),
                    ref_rt[i]
                );
            }
        }
        let batched = summary.procedures[2].mean_runtime_s.unwrap_or(0.0);
        let lookahead = summary.procedures[3].mean_runtime_s.unwrap_or(0.0);
        if batched > 0.0 {
            println!(
                "  batched vs one-step-ahead runtime ratio: {:.0}x",
                lookahead / batched
            );
        }
        summaries.push(summary);
    }
    Ok(summaries)
}

fn run_case(epsilon: f64, args: &ReproduceArgs) -> anyhow::Result<()> {
    let refs = if epsilon == 0.02 {
        &reference::TABLE7
    } else {
        &reference::TABLE8
    };
    let reps = args.reps.unwrap_or(10_000);
    let configs: Vec<CaseStudyConfig> = case_study_configs(args.seed, reps)
        .into_iter()
        .filter(|c| c.epsilon == epsilon)
        .collect();
    let mut outputs = Vec::new();
    for (config, row) in configs.iter().zip(refs.iter()) {
        let summary = run_case_study(config, args.threads)?;
        println!(
            "prices (c_D, c_V) = ({}, {}), epsilon = {}",
            config.c_d, config.c_v, config.epsilon
        );
        for (i, col) in summary.columns.iter().enumerate() {
            comparison_line(
                "coverage %",
                &col.label,
                col.coverage_pct,
                row.coverage[i],
                pct_se(row.coverage[i], reps),
            );
        }
        for (i, col) in summary.columns.iter().enumerate() {
            println!(
                "  {:<26} {:<20} computed {:>12.0}  reference {:>12.0}  diff {:+6.2}%",
                "average cost",
                col.label,
                col.avg_cost,
                row.avg_cost[i],
                100.0 * (col.avg_cost - row.avg_cost[i]) / row.avg_cost[i]
            );
        }
        for (i, col) in summary.columns.iter().enumerate() {
            println!(
                "  {:<26} {:<20} computed [{},{}] mean {:.2}  reference [{},{}] mean<= {}",
                "months",
                col.label,
                col.months_min,
                col.months_max,
                col.months_mean,
                row.months[i].0,
                row.months[i].1,
                row.avg_months[i]
            );
        }
        outputs.push(summary);
    }
    let dir = crate::out_dir(args.out_dir.clone());
    std::fs::create_dir_all(&dir)?;
    let path = dir.join(format!("reproduce-table{}.json", args.table));
    std::fs::write(&path, serde_json::to_string_pretty(&outputs)?)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

pub fn run(args: ReproduceArgs) -> anyhow::Result<()> {
    let summaries = match args.table {
        2 => run_battery(
            reference::two_stage_columns(),
            &reference::TABLE2,
            &args,
            false,
        )?,
        3 => run_battery(
            reference::fully_seq_columns(),
            &reference::TABLE3,
            &args,
            false,
        )?,
        4 => run_battery(
            reference::batched_columns(),
            &reference::TABLE4,
            &args,
            false,
        )?,
        5 => run_cost_compare(&reference::TABLE5, &args)?,
        7 => return run_case(0.02, &args),
        8 => return run_case(0.015, &args),
        other => {
            return Err(anyhow::anyhow!(
                "usage: table: unknown id {other} (expected 2, 3, 4, 5, 7, or 8)"
            ))
        }
    };
    let dir = crate::out_dir(args.out_dir);
    std::fs::create_dir_all(&dir)?;
    for (ext, body) in [
        ("csv", render_csv(&summaries)),
        ("json", render_json(&summaries)),
    ] {
        let path = dir.join(format!("reproduce-table{}.{ext}", args.table));
        std::fs::write(&path, body)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}
