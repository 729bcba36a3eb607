//! `spgg`: solve, check, sweep and train the sequential public goods game.
//!
//! Machine output goes to stdout (or `--out`), diagnostics to stderr. Exit
//! codes: 0 success, 1 runtime failure or a check that does not hold, 2 usage
//! or configuration error.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use spgg_core::analysis::export::{render_curve, render_report, render_sweep};
use spgg_core::analysis::{pareto_assess, pareto_grid, sweep};
use spgg_core::rl::{load_checkpoint, save_checkpoint, train, Checkpoint, TrainOptions, CHECKPOINT_VERSION};
use spgg_core::solver::{best_response_curve, solve_spne};
use spgg_core::theory::{
    check_assumptions, comparative_statics, theorem1_conditions, verify_lemma1, verify_theorem1, SweepParam,
};
use thiserror::Error;

use config::{OutputFormat, RunConfig};
use output::{emit, render};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) | CliError::CheckFailed(_) => 1,
        }
    }
}

fn runtime<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "spgg", version, about = "Sequential public goods game laboratory")]
struct Cli {
    /// TOML run configuration; built-in baseline when omitted.
    #[arg(long, global = true, env = "SPGG_CONFIG")]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true, env = "SPGG_SEED")]
    seed: Option<u64>,
    /// Write machine output here instead of stdout.
    #[arg(long, global = true, env = "SPGG_OUT")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, env = "SPGG_FORMAT")]
    format: Option<FormatArg>,
    /// Worker threads; 1 gives bitwise reproducible runs.
    #[arg(long, global = true, env = "SPGG_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CheckKind {
    Assumptions,
    Conditions,
    Theorem1,
    Lemma1,
    Statics,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the equilibrium by backward induction.
    Solve,
    /// Run one of the theory checks.
    Check {
        #[arg(value_enum)]
        kind: CheckKind,
        /// Parameter for the comparative-statics check (gamma, rho, b).
        #[arg(long)]
        param: Option<SweepParam>,
    },
    /// Solve the equilibrium along one parameter.
    Sweep {
        #[arg(long)]
        param: Option<SweepParam>,
        #[arg(long, allow_negative_numbers = true)]
        lo: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        hi: Option<f64>,
        #[arg(long)]
        count: Option<usize>,
    },
    /// Count sampled profiles that Pareto-dominate the equilibrium.
    Pareto {
        #[arg(long)]
        samples: Option<usize>,
        /// Also check a regular grid with this many points per axis.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Best response of one agent across predecessor contributions.
    BestResponse {
        #[arg(long)]
        agent: Option<usize>,
        #[arg(long, allow_negative_numbers = true)]
        s_prev: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Train the per-agent policies with PPO and write the learning curve.
    Train {
        /// Episode budget (overrides trainer.early_stop.t_max).
        #[arg(long)]
        episodes: Option<usize>,
        /// Save the trained policies here.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Continue from a saved checkpoint.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Print the effective configuration as TOML.
    ShowConfig,
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = Some(out.clone());
    }
    if let Some(f) = cli.format {
        cfg.format = match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        };
    }
    if let Some(t) = cli.threads {
        cfg.threads = Some(t);
    }
    match &cli.command {
        Command::Check { param: Some(p), .. } => cfg.check.statics_param = *p,
        Command::Sweep { param, lo, hi, count } => {
            if let Some(p) = param {
                if *p != cfg.sweep.param {
                    // a different parameter keeps its own default range
                    cfg.sweep.lo = None;
                    cfg.sweep.hi = None;
                }
                cfg.sweep.param = *p;
            }
            cfg.sweep.lo = lo.or(cfg.sweep.lo);
            cfg.sweep.hi = hi.or(cfg.sweep.hi);
            cfg.sweep.count = count.unwrap_or(cfg.sweep.count);
        }
        Command::Pareto { samples, grid } => {
            cfg.pareto.samples = samples.unwrap_or(cfg.pareto.samples);
            cfg.pareto.grid = grid.or(cfg.pareto.grid);
        }
        Command::BestResponse { agent, s_prev, points } => {
            cfg.best_response.agent = agent.unwrap_or(cfg.best_response.agent);
            cfg.best_response.s_prev = s_prev.or(cfg.best_response.s_prev);
            cfg.best_response.points = points.unwrap_or(cfg.best_response.points);
        }
        Command::Train {
            episodes: Some(e), ..
        } => cfg.trainer.early_stop.t_max = *e,
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3}")).collect();
    format!("({})", parts.join(", "))
}

fn cmd_solve(cfg: &RunConfig) -> Result<String, CliError> {
    let r = solve_spne(&cfg.game, &cfg.cost, &cfg.solver).map_err(runtime)?;
    eprintln!(
        "profile: {}  utilities: {}  welfare: {:.4}  success: {}",
        fmt_vec(r.profile.as_slice()),
        fmt_vec(&r.utilities),
        r.welfare,
        r.success
    );
    render(&r, cfg.format)
}

fn verdict(ok: bool, what: &str) -> Result<(), CliError> {
    eprintln!("{what}: {}", if ok { "holds" } else { "does not hold" });
    if ok {
        Ok(())
    } else {
        Err(CliError::CheckFailed(what.to_string()))
    }
}

/// Returns the rendered report and whether the check held.
fn cmd_check(cfg: &RunConfig, kind: CheckKind) -> Result<(String, Result<(), CliError>), CliError> {
    let (p, c, s) = (&cfg.game, &cfg.cost, &cfg.solver);
    Ok(match kind {
        CheckKind::Assumptions => {
            let r = check_assumptions(p, c, cfg.check.probe_points);
            for f in &r.failures {
                eprintln!("  {f}");
            }
            (render(&r, cfg.format)?, verdict(r.all_ok, "assumptions"))
        }
        CheckKind::Conditions => {
            let r = theorem1_conditions(p, c).map_err(|e| CliError::CheckFailed(e.to_string()))?;
            (render(&r, cfg.format)?, verdict(r.all_ok, "sufficient conditions"))
        }
        CheckKind::Theorem1 => {
            let r = verify_theorem1(p, c, s).map_err(|e| CliError::CheckFailed(e.to_string()))?;
            eprintln!("max |c_i - c_max| = {:.3e}", r.max_deviation);
            (render(&r, cfg.format)?, verdict(r.passed, "all-c_max equilibrium"))
        }
        CheckKind::Lemma1 => {
            let r = verify_lemma1(p, c, s, cfg.check.lemma_grid).map_err(runtime)?;
            eprintln!("{} curves, {} violations", r.curves.len(), r.violations.len());
            (render(&r, cfg.format)?, verdict(r.passed, "monotone best responses"))
        }
        CheckKind::Statics => {
            let which = cfg.check.statics_param;
            let (lo, hi) = which.default_range();
            let r = comparative_statics(p, c, which, lo, hi, cfg.check.statics_count, s).map_err(runtime)?;
            for v in &r.violations {
                eprintln!(
                    "  {} {:.4} -> {:.4}: welfare {:.4} -> {:.4}",
                    r.parameter, v.values.0, v.values.1, v.welfare.0, v.welfare.1
                );
            }
            let what = format!("welfare {:?} in {}", r.expected, r.parameter);
            (render(&r, cfg.format)?, verdict(r.monotone, &what))
        }
    })
}

fn cmd_sweep(cfg: &RunConfig) -> Result<String, CliError> {
    let which = cfg.sweep.param;
    let (dlo, dhi) = which.default_range();
    let (lo, hi) = (cfg.sweep.lo.unwrap_or(dlo), cfg.sweep.hi.unwrap_or(dhi));
    let rows = sweep(
        &cfg.game,
        &cfg.cost,
        which,
        lo,
        hi,
        cfg.sweep.count,
        cfg.sweep.penalty_rule,
        &cfg.solver,
    )
    .map_err(runtime)?;
    eprintln!("{} rows over {} in [{lo}, {hi}]", rows.len(), which.name());
    render_sweep(&rows, cfg.game.n, cfg.format.into()).map_err(runtime)
}

fn cmd_pareto(cfg: &RunConfig) -> Result<String, CliError> {
    let report = pareto_assess(&cfg.game, &cfg.cost, cfg.pareto.samples, cfg.seed, &cfg.solver).map_err(runtime)?;
    eprintln!("equilibrium: {}", fmt_vec(&report.spne_profile));
    eprintln!("dominating_count: {}", report.dominating_count);
    if let Some(points) = cfg.pareto.grid {
        let profile = solve_spne(&cfg.game, &cfg.cost, &cfg.solver).map_err(runtime)?.profile;
        let grid = pareto_grid(&cfg.game, &cfg.cost, &profile, points).map_err(runtime)?;
        eprintln!(
            "grid_dominating_count: {} ({} points)",
            grid.dominating_count, grid.sample_count
        );
    }
    render_report(&report, cfg.format.into()).map_err(runtime)
}

#[derive(serde::Serialize)]
struct ResponseTable {
    agent: usize,
    s_prev: f64,
    c_prev: Vec<f64>,
    response: Vec<f64>,
}

fn cmd_best_response(cfg: &RunConfig) -> Result<String, CliError> {
    let br = &cfg.best_response;
    let p = &cfg.game;
    if br.points < 2 {
        return Err(CliError::Config("[best_response] points must be at least 2".into()));
    }
    let s_prev = br.s_prev.unwrap_or(br.agent as f64 * p.c_min);
    let c_prev: Vec<f64> = (0..br.points)
        .map(|k| p.c_min + p.range() * k as f64 / (br.points - 1) as f64)
        .collect();
    let curve = best_response_curve(br.agent, &c_prev, s_prev, p, &cfg.cost, &cfg.solver).map_err(runtime)?;
    let table = ResponseTable {
        agent: br.agent,
        s_prev,
        c_prev: curve.iter().map(|q| q.0).collect(),
        response: curve.iter().map(|q| q.1).collect(),
    };
    match cfg.format {
        OutputFormat::Json => render(&table, cfg.format),
        OutputFormat::Csv => {
            let mut out = String::from("agent,s_prev,c_prev,response\n");
            for (c, r) in table.c_prev.iter().zip(&table.response) {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    table.agent,
                    spgg_core::analysis::export::fmt_sig(s_prev),
                    spgg_core::analysis::export::fmt_sig(*c),
                    spgg_core::analysis::export::fmt_sig(*r)
                ));
            }
            Ok(out)
        }
    }
}

fn cmd_train(cfg: &RunConfig, checkpoint: Option<&Path>, resume: Option<&Path>) -> Result<String, CliError> {
    let env = cfg.env.build(&cfg.trainer.game);
    let interrupt = Arc::new(AtomicBool::new(false));
    let flag = interrupt.clone();
    // a second handler registration (tests calling this twice) is harmless
    let _ = ctrlc::set_handler(move || flag.store(true, Ordering::Relaxed));
    let initial_policies = match resume {
        Some(path) => {
            let ck = load_checkpoint(path).map_err(runtime)?;
            eprintln!("resuming from {} ({} episodes)", path.display(), ck.episodes_run);
            Some(ck.policies)
        }
        None => None,
    };
    let options = TrainOptions {
        parallel: cfg.threads != Some(1),
        interrupt: Some(interrupt),
        initial_policies,
    };
    let outcome = train(&env, &cfg.trainer, cfg.seed, &options).map_err(runtime)?;
    if let Some(last) = outcome.curve.last() {
        eprintln!(
            "episodes: {}  mean reward: {:.4}  mean quality: {:.4}  early stop: {}",
            outcome.episodes_run, last.mean_reward, last.mean_quality, outcome.stopped_early
        );
        eprintln!("final scores: {}", fmt_vec(&outcome.final_scores));
        if let Some(stage_cost) = env.stage_cost() {
            if let Ok(r) = solve_spne(&cfg.trainer.game, &stage_cost, &cfg.solver) {
                eprintln!("stage-game equilibrium: {}", fmt_vec(r.profile.as_slice()));
            }
        }
    } else {
        eprintln!("no episodes run");
    }
    if let Some(path) = checkpoint {
        let ck = Checkpoint {
            version: CHECKPOINT_VERSION,
            seed: cfg.seed,
            episodes_run: outcome.episodes_run,
            config: cfg.trainer.clone(),
            env,
            policies: outcome.policies.clone(),
        };
        save_checkpoint(path, &ck).map_err(runtime)?;
    }
    let text = render_curve(&outcome.curve, cfg.format.into()).map_err(runtime)?;
    if outcome.interrupted {
        emit(&text, cfg.out.as_deref())?;
        return Err(CliError::Runtime(format!(
            "interrupted after {} episodes; partial results written",
            outcome.episodes_run
        )));
    }
    Ok(text)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = load_config(cli)?;
    if let Some(threads) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(runtime)?;
    }
    let out = cfg.out.as_deref();
    match &cli.command {
        Command::Solve => emit(&cmd_solve(&cfg)?, out),
        Command::Check { kind, .. } => {
            let (text, held) = cmd_check(&cfg, *kind)?;
            emit(&text, out)?;
            held
        }
        Command::Sweep { .. } => emit(&cmd_sweep(&cfg)?, out),
        Command::Pareto { .. } => emit(&cmd_pareto(&cfg)?, out),
        Command::BestResponse { .. } => emit(&cmd_best_response(&cfg)?, out),
        Command::Train {
            checkpoint, resume, ..
        } => emit(&cmd_train(&cfg, checkpoint.as_deref(), resume.as_deref())?, out),
        Command::ShowConfig => emit(&cfg.to_toml()?, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("spgg: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
