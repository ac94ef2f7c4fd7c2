//! `risx`: runs one experiment scenario and writes long-format CSV, grouped
//! plot data and run metadata.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use ris_maxmin::experiment::{
    aggregate, emit_csv, emit_metadata, emit_plotdata, run_experiment, ExperimentConfig,
    ResultTable, Scenario,
};

/// Default output directory when neither --out nor the config sets one.
const OUT_DIR_ENV: &str = "RISX_OUT_DIR";
/// Runs fail when more than this fraction of trials fail.
const MAX_FAILURE_FRACTION: f64 = 0.10;

#[derive(Debug, Parser)]
#[command(
    name = "risx",
    version,
    about = "Monte-Carlo experiments for RIS-assisted max-min SINR downlinks"
)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    /// TOML configuration layered over the scenario defaults.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Trials per grid point.
    #[arg(long, global = true)]
    trials: Option<usize>,

    /// Output directory [default: config `out`, then $RISX_OUT_DIR, then ./results].
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Scenario id, as an alternative to the subcommand.
    #[arg(long, global = true)]
    scenario: Option<String>,

    /// Print the resolved configuration and exit.
    #[arg(long, global = true)]
    dry_run: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Single user: optimal RIS phases vs HD/FD relays.
    SingleUser,
    /// Rank-one BS-RIS link: K·τ*, closed form and bound vs K.
    RankoneMultiuser,
    /// Several rank-one RISs: min SINR vs number of surfaces.
    MultiRis,
    /// Full-rank link: simulated τ*, p* against the deterministic equivalents.
    FullrankValidate,
    /// Gradient phase design vs CoM phases and multi-user relays.
    OptimizePhases,
    /// Stand-alone relay baselines.
    RelayCompare,
}

impl From<Command> for Scenario {
    fn from(c: Command) -> Self {
        match c {
            Command::SingleUser => Scenario::SingleUser,
            Command::RankoneMultiuser => Scenario::RankoneMultiuser,
            Command::MultiRis => Scenario::MultiRis,
            Command::FullrankValidate => Scenario::FullrankValidate,
            Command::OptimizePhases => Scenario::OptimizePhases,
            Command::RelayCompare => Scenario::RelayCompare,
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<ExperimentConfig> {
    let from_flag = cli
        .scenario
        .as_deref()
        .map(str::parse::<Scenario>)
        .transpose()?;
    let from_cmd = cli.command.map(Scenario::from);
    let requested = match (from_cmd, from_flag) {
        (Some(a), Some(b)) if a != b => bail!("subcommand '{a}' conflicts with --scenario '{b}'"),
        (a, b) => a.or(b),
    };
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path, requested)?,
        None => match requested {
            Some(s) => ExperimentConfig::default_for(s),
            None => bail!("give a scenario subcommand, --scenario, or a config naming one"),
        },
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = cli.trials {
        cfg.trials = trials;
    }
    cfg.out = Some(
        cli.out
            .clone()
            .or(cfg.out.take())
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("results")),
    );
    cfg.validate()?;
    Ok(cfg)
}

fn write_outputs(table: &ResultTable, dir: &Path) -> Result<[PathBuf; 3]> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let id = table.scenario.id();
    let paths = [
        dir.join(format!("{id}.csv")),
        dir.join(format!("{id}_plot.csv")),
        dir.join(format!("{id}_meta.toml")),
    ];
    emit_csv(table, &paths[0])?;
    emit_plotdata(table, &paths[1])?;
    emit_metadata(table, &paths[2])?;
    Ok(paths)
}

fn print_summary(table: &ResultTable) {
    println!(
        "{:>12}  {:<20} {:>14} {:>12}",
        table.sweep_name, "metric", "mean", "std_error"
    );
    for a in aggregate(table) {
        println!(
            "{:>12}  {:<20} {:>14.6e} {:>12.3e}",
            a.sweep_value, a.metric, a.mean, a.std_error
        );
    }
}

fn run(cli: &Cli) -> Result<ExitCode> {
    let cfg = resolve_config(cli)?;
    if cli.dry_run {
        print!("{}", cfg.to_toml_string()?);
        return Ok(ExitCode::SUCCESS);
    }
    log::info!(
        "{}: {} grid points x {} trials, seed {}",
        cfg.scenario,
        cfg.sweep.values.len(),
        cfg.trials,
        cfg.seed
    );
    let table = run_experiment(&cfg)?;
    let dir = cfg.out.clone().expect("output directory resolved");
    let paths = write_outputs(&table, &dir)?;
    print_summary(&table);
    for p in &paths {
        log::info!("wrote {}", p.display());
    }
    let frac = table.failure_fraction();
    if frac > MAX_FAILURE_FRACTION {
        eprintln!(
            "error: {} of {} trials failed ({:.1}%), see {}",
            table.failures.len(),
            table.trials_run,
            100.0 * frac,
            paths[2].display()
        );
        return Ok(ExitCode::from(2));
    }
    if !table.failures.is_empty() {
        log::warn!(
            "{} of {} trials failed",
            table.failures.len(),
            table.trials_run
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
