//! `fwci`: fixed-width confidence intervals for the difference of two
//! Bernoulli proportions under asymmetric observation costs.
//!
//! Subcommands:
//! - `simulate`: run a scenario's Monte Carlo experiment and write reports;
//! - `reproduce`: rerun a benchmark table and compare against the
//!   published reference values;
//! - `plan`: one-shot sample-size planning from estimates or pilot counts;
//! - `advise`: interactive sequential sampling on live, externally
//!   observed data, one batch per turn.

mod advisor;
mod reproduce;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fwci_core::allocation::{min_obs_two_stage_plan, two_stage_plan};
use fwci_core::procedures::ProcedureKind;
use fwci_core::report::{render_records_csv, render_table, summarize_experiment, ReportFormat};
use fwci_core::sim::{run_experiment, ExperimentOptions, ProcedureConfig, RngPolicy, ScenarioSpec};
use fwci_core::stat::{minimax_estimate, CostModel, TargetSpec};

#[derive(Parser)]
#[command(
    name = "fwci",
    version,
    about = "Cost-aware fixed-width confidence intervals for p_x - p_y"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo experiment for one scenario.
    Simulate(SimulateArgs),
    /// Rerun a benchmark table and compare against reference values.
    Reproduce(reproduce::ReproduceArgs),
    /// Compute a one-shot sampling plan.
    Plan(PlanArgs),
    /// Interactive advisor over externally observed batches.
    Advise(advisor::AdviseArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario id (s1..s9) or path to a scenario TOML file.
    #[arg(long)]
    scenario: String,

    /// Comma-separated procedures; the first is the gap baseline.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "conservative,two-stage-min-obs,two-stage-min-cost"
    )]
    procedures: Vec<String>,

    /// Master seed (required: no silent entropy).
    #[arg(long)]
    seed: u64,

    /// Override the scenario's replication count.
    #[arg(long)]
    reps: Option<u64>,

    /// Override the scenario's batch capacity.
    #[arg(long)]
    batch: Option<u64>,

    /// Worker threads (default: one per core).
    #[arg(long)]
    threads: Option<usize>,

    /// Measure per-replication wall-clock time (makes reports
    /// run-dependent; off by default so equal seeds render identically).
    #[arg(long)]
    timing: bool,

    /// Report formats to write (csv, json, markdown).
    #[arg(long, value_delimiter = ',', default_value = "csv")]
    format: Vec<String>,

    /// Output directory (default: $FWCI_OUT_DIR or current directory).
    #[arg(long)]
    out_dir: Option<PathBuf>,

    /// Also export per-replication records as CSV to this path.
    #[arg(long)]
    records: Option<PathBuf>,

    /// Also export per-stage traces as a line-delimited log to this path.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct PlanArgs {
    /// Point estimate for p_x in (0,1); alternative to --wx.
    #[arg(long)]
    px: Option<f64>,

    /// Point estimate for p_y in (0,1); alternative to --wy.
    #[arg(long)]
    py: Option<f64>,

    /// Successes observed from X (used with --mx to form the estimate).
    #[arg(long)]
    wx: Option<u64>,

    /// Successes observed from Y (used with --my to form the estimate).
    #[arg(long)]
    wy: Option<u64>,

    /// Observations already taken from X.
    #[arg(long, default_value_t = 0)]
    mx: u64,

    /// Observations already taken from Y.
    #[arg(long, default_value_t = 0)]
    my: u64,

    /// Cost per X observation.
    #[arg(long)]
    cx: f64,

    /// Cost per Y observation.
    #[arg(long)]
    cy: f64,

    /// Half-width bound.
    #[arg(long)]
    eps: f64,

    /// Coverage tail mass (confidence level is 1 - alpha).
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,

    /// Minimize observations instead of cost.
    #[arg(long)]
    min_obs: bool,
}

fn usage_error(field: &str, reason: &str) -> anyhow::Error {
    anyhow::anyhow!("usage: {field}: {reason}")
}

pub(crate) fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("FWCI_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn load_scenario(arg: &str) -> anyhow::Result<ScenarioSpec> {
    if let Some(builtin) = fwci_core::reference::scenario(arg) {
        return Ok(builtin);
    }
    let path = PathBuf::from(arg);
    if path.exists() {
        let text = std::fs::read_to_string(&path)?;
        return Ok(ScenarioSpec::from_toml_str(&text)?);
    }
    Err(usage_error(
        "scenario",
        &format!("`{arg}` is neither a builtin id (s1..s9) nor a readable file"),
    ))
}

fn parse_procedures(names: &[String]) -> anyhow::Result<Vec<ProcedureConfig>> {
    if names.is_empty() {
        return Err(usage_error("procedures", "at least one procedure required"));
    }
    names
        .iter()
        .map(|name| {
            ProcedureKind::parse(name)
                .map(ProcedureConfig::new)
                .ok_or_else(|| {
                    let known = ProcedureKind::ALL.map(|k| k.name()).join(", ");
                    usage_error("procedures", &format!("unknown `{name}` (known: {known})"))
                })
        })
        .collect()
}

fn cmd_simulate(args: SimulateArgs) -> anyhow::Result<()> {
    let mut scenario = load_scenario(&args.scenario)?;
    if let Some(reps) = args.reps {
        scenario.reps = reps;
    }
    if let Some(batch) = args.batch {
        scenario.batch = batch;
    }
    scenario.validate()?;
    let procedures = parse_procedures(&args.procedures)?;
    let formats = args
        .format
        .iter()
        .map(|f| ReportFormat::parse(f))
        .collect::<Result<Vec<_>, _>>()?;

    let policy = RngPolicy::new(args.seed);
    let records = run_experiment(
        &scenario,
        &procedures,
        &policy,
        ExperimentOptions {
            threads: args.threads,
            measure_time: args.timing,
            capture_traces: args.trace.is_some(),
        },
    )?;
    let summary = summarize_experiment(&scenario, &procedures, &records, Some(0), args.timing)?;
    let summaries = vec![summary];

    print!("{}", fwci_core::report::render_markdown(&summaries));

    let dir = out_dir(args.out_dir);
    std::fs::create_dir_all(&dir)?;
    for format in formats {
        let (ext, body) = match format {
            ReportFormat::Csv => ("csv", render_table(&summaries, format)),
            ReportFormat::Json => ("json", render_table(&summaries, format)),
            ReportFormat::Markdown => ("md", render_table(&summaries, format)),
        };
        let path = dir.join(format!("{}-summary.{ext}", scenario.id));
        std::fs::write(&path, body)?;
        eprintln!("wrote {}", path.display());
    }
    if let Some(path) = args.records {
        std::fs::write(&path, render_records_csv(&records, &procedures, &scenario))?;
        eprintln!("wrote {}", path.display());
    }
    if let Some(path) = args.trace {
        std::fs::write(
            &path,
            fwci_core::report::render_trace_log(&records, &procedures),
        )?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_plan(args: PlanArgs) -> anyhow::Result<()> {
    let costs =
        CostModel::new(args.cx, args.cy).map_err(|e| usage_error("cx/cy", &e.to_string()))?;
    let target = TargetSpec::new(args.alpha, args.eps, 1)
        .map_err(|e| usage_error("eps/alpha", &e.to_string()))?;

    let estimate = |p: Option<f64>, w: Option<u64>, m: u64, pop: &str| -> anyhow::Result<f64> {
        match (p, w) {
            (Some(p), _) => {
                if p > 0.0 && p < 1.0 {
                    Ok(p)
                } else {
                    Err(usage_error(
                        &format!("p{pop}"),
                        "estimate must be strictly inside (0,1); pass counts (--w*, --m*) instead",
                    ))
                }
            }
            (None, Some(w)) => {
                if m == 0 {
                    return Err(usage_error(
                        &format!("m{pop}"),
                        "counts mode needs observations > 0",
                    ));
                }
                let mean = w as f64 / m as f64;
                if mean > 0.0 && mean < 1.0 {
                    Ok(mean)
                } else {
                    // degenerate pilot sample: fall back to the minimax estimate
                    Ok(minimax_estimate(w, m)?)
                }
            }
            (None, None) => Err(usage_error(
                &format!("p{pop}"),
                "provide an estimate --p* or counts --w* with --m*",
            )),
        }
    };
    let p_x = estimate(args.px, args.wx, args.mx, "x")?;
    let p_y = estimate(args.py, args.wy, args.my, "y")?;

    let plan = if args.min_obs {
        min_obs_two_stage_plan(p_x, p_y, args.mx, args.my, &target)?
    } else {
        two_stage_plan(p_x, p_y, args.mx, args.my, &costs, &target)?
    };

    println!(
        "estimates: p_x = {p_x:.6}, p_y = {p_y:.6} (current counts {}, {})",
        args.mx, args.my
    );
    println!(
        "targets:   m_x = {}, m_y = {}",
        plan.target_m_x, plan.target_m_y
    );
    if plan.is_zero() {
        println!("no additional samples required");
    } else {
        let cost = costs.price(plan.add_x, plan.add_y);
        println!(
            "take:      {} from X and {} from Y (planned cost {cost:.2})",
            plan.add_x, plan.add_y
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Reproduce(args) => reproduce::run(args),
        Command::Plan(args) => cmd_plan(args),
        Command::Advise(args) => advisor::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let msg = err.to_string();
            if msg.starts_with("usage:") || msg.starts_with("invalid scenario field") {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
