//! `ccekit` — run the selection experiments from a JSON config and emit CSV
//! (and optionally SVG) files.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use ccekit::montecarlo::{self, ExperimentSpec, RateConfig, SweepSpec};

#[derive(Parser)]
#[command(name = "ccekit", version, about = "Cross-section average selection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Average selected cardinality over a grid of (N, T, tau) cells.
    Table(RunArgs),
    /// Misselection shares along a tau grid.
    Sweep(RunArgs),
    /// Empirical convergence-rate checks.
    Rate(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Override the replication count.
    #[arg(long)]
    reps: Option<usize>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Also write an SVG line chart (sweep only).
    #[arg(long)]
    svg: bool,
}

enum CliError {
    /// Exit code 2.
    Config(String),
    /// Exit code 3.
    Runtime(String),
}

impl From<ccekit::Error> for CliError {
    fn from(e: ccekit::Error) -> Self {
        match e {
            ccekit::Error::Config(_) => CliError::Config(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Table(args) => run_table(&args),
        Command::Sweep(args) => run_sweep(&args),
        Command::Rate(args) => run_rate(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("runtime failure: {msg}");
            ExitCode::from(3)
        }
    }
}

struct LoadedConfig {
    cfg: config::RunConfig,
    sha256: String,
    reps: usize,
    master_seed: u64,
    threads: usize,
}

fn load(args: &RunArgs) -> Result<LoadedConfig, CliError> {
    let bytes = std::fs::read(&args.config).map_err(|e| {
        CliError::Config(format!("cannot read {}: {e}", args.config.display()))
    })?;
    let sha256 = hex_digest(&bytes);
    let text = String::from_utf8(bytes)
        .map_err(|_| CliError::Config("config file is not valid UTF-8".into()))?;
    let cfg = config::parse(&text).map_err(CliError::Config)?;
    let reps = args.reps.unwrap_or(cfg.reps);
    if reps == 0 {
        return Err(CliError::Config("reps must be at least 1".into()));
    }
    let master_seed = args.seed.unwrap_or(cfg.master_seed);
    let threads = args.threads.unwrap_or(0);
    eprintln!(
        "ccekit: seed={master_seed} reps={reps} threads={}",
        if threads == 0 { "auto".to_string() } else { threads.to_string() }
    );
    Ok(LoadedConfig { cfg, sha256, reps, master_seed, threads })
}

fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    eprintln!("ccekit: wrote {}", path.display());
    Ok(())
}

fn run_table(args: &RunArgs) -> Result<(), CliError> {
    let loaded = load(args)?;
    let section = loaded
        .cfg
        .table
        .as_ref()
        .ok_or_else(|| CliError::Config("config has no \"table\" section".into()))?;
    if section.cells.is_empty() || section.criteria.is_empty() {
        return Err(CliError::Config("table section needs cells and criteria".into()));
    }
    let template = loaded.cfg.dgp.panel_template();
    for cell in &section.cells {
        template.with_cell(cell.n, cell.t, cell.tau).validate()?;
    }
    let spec = ExperimentSpec {
        cells: section.cells.clone(),
        dgp: template,
        criteria: section.criteria.clone(),
        reps: loaded.reps,
        master_seed: loaded.master_seed,
        parallelism: loaded.threads,
    };
    let results = montecarlo::run_experiment(&spec)?;
    let rows = montecarlo::aggregate(&results, &spec);
    let header = output::provenance(&loaded.sha256, loaded.master_seed, loaded.reps);
    write_file(&args.out, "table.csv", &output::table_csv(&rows, &header))
}

fn run_sweep(args: &RunArgs) -> Result<(), CliError> {
    let loaded = load(args)?;
    let section = loaded
        .cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("config has no \"sweep\" section".into()))?;
    if section.tau_grid.is_empty() || section.criteria.is_empty() {
        return Err(CliError::Config("sweep section needs tau_grid and criteria".into()));
    }
    let template = loaded.cfg.dgp.panel_template();
    for &tau in &section.tau_grid {
        template.with_cell(section.n, section.t, tau).validate()?;
    }
    let spec = SweepSpec {
        n: section.n,
        t: section.t,
        tau_grid: section.tau_grid.clone(),
        dgp: template,
        criteria: section.criteria.clone(),
        error_modes: section
            .error_modes
            .iter()
            .map(|&mode| loaded.cfg.dgp.error_config(mode))
            .collect(),
        reps: loaded.reps,
        master_seed: loaded.master_seed,
        parallelism: loaded.threads,
    };
    let rows = montecarlo::tau_sweep(&spec)?;
    let header = output::provenance(&loaded.sha256, loaded.master_seed, loaded.reps);
    write_file(&args.out, "sweep.csv", &output::sweep_csv(&rows, &header))?;
    if args.svg {
        write_file(&args.out, "sweep.svg", &output::sweep_svg(&rows))?;
    }
    Ok(())
}

fn run_rate(args: &RunArgs) -> Result<(), CliError> {
    let loaded = load(args)?;
    let section = loaded
        .cfg
        .rate
        .as_ref()
        .ok_or_else(|| CliError::Config("config has no \"rate\" section".into()))?;
    if section.statistics.is_empty() {
        return Err(CliError::Config("rate section needs at least one statistic".into()));
    }
    let reps = args.reps.unwrap_or(section.reps);
    let rate_cfg = RateConfig {
        n_fixed: section.n_fixed,
        t_grid: section.t_grid.clone(),
        tau: section.tau,
        reps,
        master_seed: loaded.master_seed,
        dgp: loaded.cfg.dgp.panel_template(),
        parallelism: loaded.threads,
    };
    let mut results = Vec::new();
    for &stat in &section.statistics {
        results.push(montecarlo::rate_check(stat, &rate_cfg)?);
    }
    let header = output::provenance(&loaded.sha256, loaded.master_seed, reps);
    write_file(&args.out, "rate.csv", &output::rate_csv(&results, &header))
}
