//! Interactive advisor: drives a sequential procedure on live data.
//!
//! A session holds the cumulative sample state, the target, the costs, and
//! the chosen procedure. Each turn the user reports what was actually
//! observed (successes and attempts per population); the advisor updates
//! the state, persists the transcript, and either recommends the next
//! batch split or declares the target met and prints the interval.

use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use serde::{Deserialize, Serialize};

use fwci_core::lookahead::EnumerationBudget;
use fwci_core::procedures::{stage_decision, ProcedureKind, StageDecision};
use fwci_core::stat::{wald_ci, CostModel, SampleState, TargetSpec};

#[derive(Args)]
pub struct AdviseArgs {
    #[command(subcommand)]
    action: AdviseAction,
}

#[derive(Subcommand)]
enum AdviseAction {
    /// Start a session and print the first recommendation.
    Init(InitArgs),
    /// Enter one observed batch and get the next recommendation.
    Turn(TurnArgs),
    /// Print the session transcript.
    Show {
        #[arg(long)]
        session: PathBuf,
    },
}

#[derive(Args)]
struct InitArgs {
    /// Session file to create.
    #[arg(long)]
    session: PathBuf,

    #[arg(long, default_value_t = 0.05)]
    alpha: f64,

    /// Half-width bound.
    #[arg(long)]
    eps: f64,

    /// Batch capacity per stage.
    #[arg(long)]
    batch: u64,

    /// Cost per X observation.
    #[arg(long, default_value_t = 1.0)]
    cx: f64,

    /// Cost per Y observation.
    #[arg(long, default_value_t = 1.0)]
    cy: f64,

    /// Sequential procedure making the recommendations.
    #[arg(long, default_value = "seq-min-cost")]
    procedure: String,

    /// Leaf-evaluation budget for the look-ahead procedure.
    #[arg(long, default_value_t = 1_000_000)]
    budget: u64,

    /// Pilot successes from X.
    #[arg(long)]
    wx: Option<u64>,

    /// Pilot observations from X.
    #[arg(long)]
    mx: Option<u64>,

    /// Pilot successes from Y.
    #[arg(long)]
    wy: Option<u64>,

    /// Pilot observations from Y.
    #[arg(long)]
    my: Option<u64>,

    /// Expert estimate for p_x (used when no pilot counts exist).
    #[arg(long)]
    px: Option<f64>,

    /// Expert estimate for p_y.
    #[arg(long)]
    py: Option<f64>,
}

#[derive(Args)]
struct TurnArgs {
    #[arg(long)]
    session: PathBuf,

    /// Successes observed from X this turn.
    #[arg(long)]
    sx: u64,

    /// Observations tried on X this turn.
    #[arg(long)]
    tx: u64,

    /// Successes observed from Y this turn.
    #[arg(long)]
    sy: u64,

    /// Observations tried on Y this turn.
    #[arg(long)]
    ty: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct TurnRecord {
    turn: u32,
    s_x: u64,
    t_x: u64,
    s_y: u64,
    t_y: u64,
    half_width: Option<f64>,
    decision: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct Session {
    alpha: f64,
    epsilon: f64,
    batch: u64,
    c_x: f64,
    c_y: f64,
    procedure: ProcedureKind,
    leaf_budget: u64,
    state: SampleState,
    initial_m_x: u64,
    initial_m_y: u64,
    expert: Option<(f64, f64)>,
    turns: Vec<TurnRecord>,
}

impl Session {
    fn target(&self) -> anyhow::Result<TargetSpec> {
        Ok(TargetSpec::new(self.alpha, self.epsilon, self.batch)?)
    }

    fn costs(&self) -> anyhow::Result<CostModel> {
        Ok(CostModel::new(self.c_x, self.c_y)?)
    }

    fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Persist the resumable state and mirror the transcript as a
    /// line-delimited log next to it.
    fn save(&self, path: &Path) -> anyhow::Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        let mut log = String::from("turn,s_x,t_x,s_y,t_y,half_width,decision\n");
        for t in &self.turns {
            log.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                t.turn,
                t.s_x,
                t.t_x,
                t.s_y,
                t.t_y,
                t.half_width.map_or(String::new(), |h| h.to_string()),
                t.decision,
            ));
        }
        std::fs::write(path.with_extension("log"), log)?;
        Ok(())
    }

    /// Decide the next step from the current state; `stage` is 1-based.
    fn decide(&self) -> anyhow::Result<StageDecision> {
        Ok(stage_decision(
            self.procedure,
            &self.state,
            self.expert,
            self.turns.len() as u32 + 1,
            &self.target()?,
            &self.costs()?,
            EnumerationBudget {
                leaf_cap: self.leaf_budget,
            },
        )?)
    }

    fn announce(&self, decision: StageDecision) -> anyhow::Result<()> {
        let s = &self.state;
        if s.m_x > 0 && s.m_y > 0 {
            let ci = wald_ci(s, self.alpha)?;
            println!(
                "state: X {}/{}, Y {}/{}; H = {:.6}",
                s.w_x, s.m_x, s.w_y, s.m_y, ci.half_width
            );
            if let StageDecision::Stop = decision {
                println!(
                    "STOP: target half-width {} met; p_x - p_y in {:.6} +/- {:.6}  [{:.6}, {:.6}]",
                    self.epsilon,
                    ci.center,
                    ci.half_width,
                    ci.lower(),
                    ci.upper()
                );
                return Ok(());
            }
        } else {
            println!("state: X {}/{}, Y {}/{}", s.w_x, s.m_x, s.w_y, s.m_y);
        }
        if let StageDecision::Sample { b_x, b_y } = decision {
            println!("next: sample {b_x} from X and {b_y} from Y");
        }
        Ok(())
    }
}

fn cmd_init(args: InitArgs) -> anyhow::Result<()> {
    let procedure = ProcedureKind::parse(&args.procedure)
        .filter(|kind| {
            matches!(
                kind,
                ProcedureKind::SeqBatchMinCost
                    | ProcedureKind::SeqBatchMinObs
                    | ProcedureKind::OneStepLookahead
            )
        })
        .ok_or_else(|| {
            anyhow::anyhow!(
                "usage: procedure: `{}` is not an advisable sequential procedure \
                 (seq-min-cost, seq-min-obs, one-step-lookahead)",
                args.procedure
            )
        })?;
    let (state, expert) = match (args.wx, args.mx, args.wy, args.my) {
        (Some(w_x), Some(m_x), Some(w_y), Some(m_y)) => {
            (SampleState::new(w_x, m_x, w_y, m_y)?, None)
        }
        (None, None, None, None) => {
            let p_x = args.px.ok_or_else(|| {
                anyhow::anyhow!("usage: px: expert estimates required without pilot counts")
            })?;
            let p_y = args.py.ok_or_else(|| {
                anyhow::anyhow!("usage: py: expert estimates required without pilot counts")
            })?;
            if !(p_x > 0.0 && p_x < 1.0 && p_y > 0.0 && p_y < 1.0) {
                return Err(anyhow::anyhow!("usage: px/py: estimates must be in (0,1)"));
            }
            (
                SampleState {
                    w_x: 0,
                    m_x: 0,
                    w_y: 0,
                    m_y: 0,
                },
                Some((p_x, p_y)),
            )
        }
        _ => {
            return Err(anyhow::anyhow!(
                "usage: wx/mx/wy/my: pilot counts must be given for both populations or neither"
            ))
        }
    };
    let session = Session {
        alpha: args.alpha,
        epsilon: args.eps,
        batch: args.batch,
        c_x: args.cx,
        c_y: args.cy,
        procedure,
        leaf_budget: args.budget,
        initial_m_x: state.m_x,
        initial_m_y: state.m_y,
        state,
        expert,
        turns: Vec::new(),
    };
    session.target()?;
    session.costs()?;
    let decision = session.decide()?;
    session.save(&args.session)?;
    println!("session created: {}", args.session.display());
    session.announce(decision)
}

fn cmd_turn(args: TurnArgs) -> anyhow::Result<()> {
    let mut session = Session::load(&args.session)?;
    if args.sx > args.tx {
        return Err(anyhow::anyhow!(
            "usage: sx: successes {} exceed tried {}; turn rejected, state unchanged",
            args.sx,
            args.tx
        ));
    }
    if args.sy > args.ty {
        return Err(anyhow::anyhow!(
            "usage: sy: successes {} exceed tried {}; turn rejected, state unchanged",
            args.sy,
            args.ty
        ));
    }
    session.state.record_x(args.sx, args.tx);
    session.state.record_y(args.sy, args.ty);
    let decision = session.decide()?;
    let half_width = (session.state.m_x > 0 && session.state.m_y > 0)
        .then(|| wald_ci(&session.state, session.alpha).map(|ci| ci.half_width))
        .transpose()?;
    session.turns.push(TurnRecord {
        turn: session.turns.len() as u32 + 1,
        s_x: args.sx,
        t_x: args.tx,
        s_y: args.sy,
        t_y: args.ty,
        half_width,
        decision: match decision {
            StageDecision::Stop => "stop".to_string(),
            StageDecision::Sample { b_x, b_y } => format!("sample {b_x} {b_y}"),
        },
    });
    session.save(&args.session)?;
    session.announce(decision)
}

fn cmd_show(path: &Path) -> anyhow::Result<()> {
    let session = Session::load(path)?;
    println!(
        "procedure {} | alpha {} | epsilon {} | batch {} | costs ({}, {})",
        session.procedure.name(),
        session.alpha,
        session.epsilon,
        session.batch,
        session.c_x,
        session.c_y
    );
    println!(
        "initial counts: X {}, Y {}",
        session.initial_m_x, session.initial_m_y
    );
    for t in &session.turns {
        println!(
            "turn {:>3}: X {}/{} Y {}/{}  H = {}  -> {}",
            t.turn,
            t.s_x,
            t.t_x,
            t.s_y,
            t.t_y,
            t.half_width
                .map_or("n/a".to_string(), |h| format!("{h:.6}")),
            t.decision
        );
    }
    let decision = session.decide()?;
    session.announce(decision)
}

pub fn run(args: AdviseArgs) -> anyhow::Result<()> {
    match args.action {
        AdviseAction::Init(a) => cmd_init(a),
        AdviseAction::Turn(a) => cmd_turn(a),
        AdviseAction::Show { session } => cmd_show(&session),
    }
}
