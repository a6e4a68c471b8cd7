//! `sad`: matrix-game solver and tabular experiment, belief demo, Hanabi
//! training, checkpoint evaluation and curve averaging.
//!
//! Exit codes: 0 success, 1 bad configuration or arguments, 2 failure during a run.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use sad_core::{belief, matrix_game};
use sad_harness::curves::write_curve;
use sad_harness::{emit_curves, evaluate_checkpoint, Game, HarnessError, Overrides, RunnerConfig};
use sad_train::Mode;

#[derive(Debug, Parser)]
#[command(name = "sad", version, about = "Simplified action decoder experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Enumerate every deterministic joint policy of the two-step matrix game.
    MatrixSolve {
        /// Payoff file (18 whitespace-separated numbers); defaults to the built-in game.
        #[arg(long)]
        payoff: Option<PathBuf>,
    },
    /// Tabular Q-learning on the matrix game over many seeds.
    MatrixTrain(MatrixArgs),
    /// Posterior sharpness of the matrix-game belief as exploration varies, as CSV.
    BeliefDemo {
        /// Number of epsilon intervals between 0 and 1.
        #[arg(long, default_value_t = 10)]
        steps: usize,
    },
    /// Train Hanabi agents (or the matrix game when the config says so).
    Train(TrainArgs),
    /// Greedy evaluation of a saved checkpoint.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 1000)]
        games: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Average run logs into a `steps,mean,sem` curve.
    Curves {
        #[arg(required = true)]
        logs: Vec<PathBuf>,
        #[arg(long, default_value = "update")]
        axis: String,
        #[arg(long, default_value = "eval_score")]
        value: String,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct MatrixArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    sad: Option<bool>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for curve.csv and summary.toml.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// TOML run configuration layered over the chosen preset.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    sad: Option<bool>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    aux: Option<bool>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..=5))]
    players: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Start from the desktop preset (4 x 16 actors, small network) instead of full scale.
    #[arg(long)]
    desk_scale: bool,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    print_config: bool,
}

fn load_config(path: Option<&PathBuf>, desk: bool) -> Result<RunnerConfig, HarnessError> {
    match path {
        Some(p) => RunnerConfig::load(p, desk),
        None if desk => Ok(RunnerConfig::desk(2)),
        None => Ok(RunnerConfig::full_scale(2)),
    }
}

fn matrix_solve(payoff: Option<PathBuf>) -> Result<()> {
    let tensor = match payoff {
        Some(p) => matrix_game::load_payoff(&p).map_err(|e| HarnessError::Config(e.to_string()))?,
        None => matrix_game::default_payoff(),
    };
    let s = matrix_game::solve_exhaustive(&tensor);
    println!("best_value = {}", s.best_value);
    println!("best_noncomm_value = {}", s.best_noncomm_value);
    println!("optimal_policy_count = {}", s.optimal_policy_count);
    Ok(())
}

fn matrix_train(a: MatrixArgs) -> Result<()> {
    let mut cfg = load_config(a.config.as_ref(), true)?;
    cfg.game = Game::Matrix;
    if let Some(s) = a.seeds {
        cfg.matrix.seeds = s;
    }
    if let Some(e) = a.episodes {
        cfg.matrix.episodes = e;
    }
    cfg.apply(&Overrides {
        sad: a.sad,
        seed: a.seed,
        out_dir: a.out,
        ..Default::default()
    })?;
    report_matrix(&cfg)
}

fn report_matrix(cfg: &RunnerConfig) -> Result<()> {
    let r = sad_harness::run_matrix(cfg)?;
    println!(
        "{} over {} seeds: final evaluation {:.4} +- {:.4}",
        if cfg.matrix.sad { "SAD" } else { "IQL" },
        r.per_seed.len(),
        r.mean,
        r.sem
    );
    Ok(())
}

fn belief_demo(steps: usize) -> Result<()> {
    if steps == 0 {
        return Err(HarnessError::Config("--steps must be positive".into()).into());
    }
    let mut out = std::io::stdout().lock();
    writeln!(out, "epsilon,unfiltered_mass,blur_tv,true_card_posterior")?;
    for r in belief::matrix_game_sweep(steps) {
        writeln!(
            out,
            "{},{},{},{}",
            r.epsilon, r.unfiltered_mass, r.blur_tv, r.true_card_posterior
        )?;
    }
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let mut cfg = load_config(a.config.as_ref(), a.desk_scale)?;
    cfg.apply(&Overrides {
        mode: a.mode,
        sad: a.sad,
        aux: a.aux,
        players: a.players.map(|p| p as usize),
        seed: a.seed,
        duration_secs: a.duration,
        out_dir: a.out,
    })?;
    if a.print_config {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    if cfg.game == Game::Matrix {
        return report_matrix(&cfg);
    }
    println!("update,env_steps,episodes,elapsed_secs,td_loss,aux_loss,buffer_size,eval_score,eval_sem");
    let show = |o: Option<f64>| o.map(|v| format!("{v:.5}")).unwrap_or_default();
    let report = sad_harness::runner::run_with(&cfg, &|row| {
        println!(
            "{},{},{},{:.1},{},{},{},{},{}",
            row.update,
            row.env_steps,
            row.episodes,
            row.elapsed_secs,
            show(row.td_loss),
            show(row.aux_loss),
            row.buffer_size.map(|b| b.to_string()).unwrap_or_default(),
            show(row.eval_score),
            show(row.eval_sem)
        );
    })?;
    let m = &report.metrics;
    eprintln!(
        "stopped ({:?}) after {} updates, {} env steps in {:.0}s ({:.0} steps/s, {:.2} updates/s)",
        report.stop, m.updates, m.env_steps, m.elapsed_secs, m.env_steps_per_sec, m.updates_per_sec
    );
    eprintln!(
        "final evaluation {:.3} +- {:.3}; random play {:.3} +- {:.3}",
        m.eval_mean, m.eval_sem, report.baseline_mean, report.baseline_sem
    );
    Ok(())
}

fn eval(checkpoint: PathBuf, games: usize, seed: u64) -> Result<()> {
    let e = evaluate_checkpoint(&checkpoint, games, seed)
        .with_context(|| format!("evaluating {}", checkpoint.display()))?;
    println!("games = {games}");
    println!("mean = {:.4}", e.mean);
    println!("sem = {:.4}", e.sem);
    println!("win_rate = {:.4}", e.win_rate);
    let hist: Vec<String> = e.histogram.iter().map(u64::to_string).collect();
    println!("histogram = [{}]", hist.join(", "));
    Ok(())
}

fn curves(logs: Vec<PathBuf>, axis: String, value: String, out: Option<PathBuf>) -> Result<()> {
    let points = emit_curves(&logs, &axis, &value)?;
    match out {
        Some(path) => {
            let f = std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            write_curve(&points, f)?;
        }
        None => write_curve(&points, std::io::stdout().lock())?,
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<HarnessError>() {
        Some(e) if e.is_config() => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::MatrixSolve { payoff } => matrix_solve(payoff),
        Command::MatrixTrain(a) => matrix_train(a),
        Command::BeliefDemo { steps } => belief_demo(steps),
        Command::Train(a) => train(a),
        Command::Eval { checkpoint, games, seed } => eval(checkpoint, games, seed),
        Command::Curves { logs, axis, value, out } => curves(logs, axis, value, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
