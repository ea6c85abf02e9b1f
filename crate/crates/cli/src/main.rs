//! Command-line driver for the spinetrot balance experiments.
//!
//! Exit codes:
//! - `0` — success (including `--help` / `--version`)
//! - `1` — usage errors, invalid configs, or model-domain errors
//! - `2` — the balance solver found no root (no sign change) or failed to
//!   converge; the printed bracket values say which way the model leans
//! - `3` — spine controller parameter errors (e.g. a solved balance target
//!   the configured amplitude cannot reach)
//! - `4` — file I/O failures

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

use spinetrot::config::{Config, ConfigError};
use spinetrot::experiment::{
    run_single, run_sweep, solve_warp_target, summarize, write_records, ExperimentError,
    SweepSummary, SUMMARY_FILE_NAME,
};
use spinetrot::gait::GaitError;
use spinetrot::solver::SolveError;
use spinetrot::spine::{ControllerKind, SpineError};
use spinetrot::trace::{write_json, TraceError};

#[derive(Parser)]
#[command(
    name = "spinetrot",
    version,
    about = "Balance experiments for a planar trotting-quadruped model with a flexing spine",
    arg_required_else_help = true
)]
struct Cli {
    /// JSON config file; omitted means the built-in defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory; defaults to the config's `output_dir`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads for sweeps; defaults to one per CPU core.
    #[arg(long, global = true, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    jobs: Option<u64>,

    /// Overrides the config's RNG seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the mid-stance balance flexion R' for the configured gait.
    Solve,
    /// Run one trace with a single controller and write it out.
    Simulate {
        /// Spine controller to drive the run.
        #[arg(long, value_enum, default_value_t = ControllerChoice::BalanceSpine)]
        controller: ControllerChoice,
    },
    /// Run the full frequency sweep with all three controllers and write
    /// every trace plus summary.json.
    Sweep,
    /// Run the sweep in memory and print a per-frequency controller
    /// comparison (writes summary.json only when --out is given).
    Compare,
    /// Print the built-in default configuration as JSON.
    PrintDefaultConfig,
}

/// CLI-facing controller names (match the on-disk trace prefixes).
#[derive(Clone, Copy, Debug, ValueEnum)]
enum ControllerChoice {
    NonSpine,
    Spine,
    BalanceSpine,
}

impl From<ControllerChoice> for ControllerKind {
    fn from(choice: ControllerChoice) -> Self {
        match choice {
            ControllerChoice::NonSpine => ControllerKind::NonSpine,
            ControllerChoice::Spine => ControllerKind::Spine,
            ControllerChoice::BalanceSpine => ControllerKind::BalanceSpine,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are successes; clap's own exit code
            // for usage errors (2) would collide with the solver code.
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    if matches!(cli.command, Command::PrintDefaultConfig) {
        print!("{}", Config::default().to_json_pretty());
        return Ok(());
    }
    let config = load_config(cli)?;
    match &cli.command {
        Command::Solve => cmd_solve(&config),
        Command::Simulate { controller } => cmd_simulate(&config, (*controller).into(), cli),
        Command::Sweep => cmd_sweep(&config, cli),
        Command::Compare => cmd_compare(&config, cli),
        Command::PrintDefaultConfig => unreachable!("handled above"),
    }
}

/// Loads the config file (or the defaults), applies `--seed`, validates.
fn load_config(cli: &Cli) -> Result<Config> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            Config::from_json_str(&text)
                .with_context(|| format!("parsing config {}", path.display()))?
        }
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    config.validate()?;
    Ok(config)
}

fn output_dir(config: &Config, cli: &Cli) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| config.output_dir.clone())
}

fn jobs(cli: &Cli) -> Option<usize> {
    cli.jobs.map(|n| n as usize)
}

/// A zero spine amplitude makes the warped controller a no-op; say so
/// rather than silently producing three identical traces.
fn warn_if_degenerate(config: &Config, kinds: &[ControllerKind]) {
    if config.spine.amplitude == 0.0 && kinds.contains(&ControllerKind::BalanceSpine) {
        eprintln!(
            "warning: spine amplitude is 0, so the balance-spine controller \
             degenerates to non-spine"
        );
    }
}

fn cmd_solve(config: &Config) -> Result<()> {
    let gait = config.gait_params_at(config.gait.frequency_hz)?;
    let outcome = solve_warp_target(config, &gait)?;
    if !outcome.probe.strictly_monotone {
        eprintln!(
            "warning: the balance measure is not strictly monotone over the \
             search range; the reported root may not be the only one"
        );
    }
    let report = serde_json::json!({
        "R_prime": outcome.root,
        "residual": outcome.residual,
        "iterations": outcome.iterations,
        "monotone": outcome.probe.strictly_monotone,
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn cmd_simulate(config: &Config, kind: ControllerKind, cli: &Cli) -> Result<()> {
    warn_if_degenerate(config, &[kind]);
    let record = run_single(config, kind)?;
    let dir = output_dir(config, cli);
    let paths = write_records(std::slice::from_ref(&record), &dir)?;
    for path in &paths {
        eprintln!(
            "wrote {} and {}",
            path.display(),
            path.with_extension("json").display()
        );
    }
    println!("{}", serde_json::to_string_pretty(&record.metrics)?);
    Ok(())
}

fn cmd_sweep(config: &Config, cli: &Cli) -> Result<()> {
    let kinds = ControllerKind::all();
    warn_if_degenerate(config, &kinds);
    let records = run_sweep(config, &kinds, jobs(cli))?;
    let dir = output_dir(config, cli);
    let paths = write_records(&records, &dir)?;
    let summary = summarize(&records);
    let summary_path = dir.join(SUMMARY_FILE_NAME);
    write_json(&summary_path, &summary)?;
    eprintln!("wrote {} trace pairs to {}", paths.len(), dir.display());
    println!("{}", summary_path.display());
    Ok(())
}

fn cmd_compare(config: &Config, cli: &Cli) -> Result<()> {
    let kinds = ControllerKind::all();
    warn_if_degenerate(config, &kinds);
    let records = run_sweep(config, &kinds, jobs(cli))?;
    let summary = summarize(&records);
    print_comparison(&summary);
    if let Some(out) = &cli.out {
        fs::create_dir_all(out)
            .with_context(|| format!("creating output directory {}", out.display()))?;
        let path = out.join(SUMMARY_FILE_NAME);
        write_json(&path, &summary)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

/// Prints one row per (frequency, controller) plus ordering tallies.
fn print_comparison(summary: &SweepSummary) {
    let mut rows: Vec<_> = summary.frequencies.values().collect();
    rows.sort_by(|a, b| a.frequency_hz.total_cmp(&b.frequency_hz));

    println!(
        "{:>8}  {:<14} {:>12} {:>12} {:>12} {:>12}",
        "freq Hz", "controller", "mean |roll|", "mean |pitch|", "|area|", "roll@switch"
    );
    for freq in &rows {
        for kind in ControllerKind::all() {
            let Some(stats) = freq.controllers.get(kind.as_str()) else {
                continue;
            };
            println!(
                "{:>8.3}  {:<14} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}",
                freq.frequency_hz,
                kind.as_str(),
                stats.mean_abs_roll.mean,
                stats.mean_abs_pitch.mean,
                stats.half_stride_abs_area.mean,
                stats.roll_at_switch.mean,
            );
        }
    }

    // Tally how often the expected orderings hold.
    let mut roll_ordered = 0usize;
    let mut pitch_ordered = 0usize;
    let mut counted = 0usize;
    for freq in &rows {
        let mean_of = |kind: ControllerKind| {
            freq.controllers
                .get(kind.as_str())
                .map(|s| (s.mean_abs_roll.mean, s.mean_abs_pitch.mean))
        };
        let (Some(rigid), Some(uniform), Some(warped)) = (
            mean_of(ControllerKind::NonSpine),
            mean_of(ControllerKind::Spine),
            mean_of(ControllerKind::BalanceSpine),
        ) else {
            continue;
        };
        counted += 1;
        if warped.0 < uniform.0 && uniform.0 < rigid.0 {
            roll_ordered += 1;
        }
        if warped.1 < rigid.1 && uniform.1 < rigid.1 {
            pitch_ordered += 1;
        }
    }
    if counted > 0 {
        println!();
        println!(
            "mean |roll| ordering balance-spine < spine < non-spine holds at \
             {roll_ordered}/{counted} frequencies"
        );
        println!(
            "mean |pitch| of both spine controllers below non-spine at \
             {pitch_ordered}/{counted} frequencies"
        );
    }
}

/// Maps an error chain to the documented exit codes.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<ExperimentError>() {
            return experiment_code(e);
        }
        if let Some(e) = cause.downcast_ref::<SolveError>() {
            return solve_code(e);
        }
        if cause.downcast_ref::<SpineError>().is_some() {
            return 3;
        }
        if cause.downcast_ref::<TraceError>().is_some()
            || cause.downcast_ref::<std::io::Error>().is_some()
        {
            return 4;
        }
        if cause.downcast_ref::<ConfigError>().is_some()
            || cause.downcast_ref::<GaitError>().is_some()
        {
            return 1;
        }
    }
    1
}

fn experiment_code(err: &ExperimentError) -> u8 {
    match err {
        ExperimentError::Solve(e) => solve_code(e),
        ExperimentError::Spine(_) => 3,
        ExperimentError::Trace(_) => 4,
        _ => 1,
    }
}

fn solve_code(err: &SolveError) -> u8 {
    match err {
        SolveError::NoSignChange { .. } | SolveError::ResidualNotConverged { .. } => 2,
        _ => 1,
    }
}
