use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use crackfem::app;
use crackfem::config::RunConfig;

/// Crack-tip fields of a strain-limiting, transversely isotropic plate.
///
/// Config keys can be overridden with `CRACKFEM_<SECTION>__<KEY>`
/// environment variables, e.g. `CRACKFEM_MATERIAL__BETA=2`.
#[derive(Debug, Parser)]
#[command(name = "crackfem", version)]
struct Cli {
    /// Overrides `output_dir` from the config.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Seed for randomized utilities; recorded, unused by the solve path.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Runs the configured case (and sweep) and writes all artifacts.
    Run { config: PathBuf },
    /// Compares uniform, slope and sine loads at several load levels.
    CompareLoads { config: PathBuf },
    /// Prints statistics of the configured mesh.
    MeshInfo { config: PathBuf },
}

fn load_config(path: &PathBuf, cli: &Cli) -> Result<RunConfig> {
    let mut cfg = RunConfig::from_file(path).with_context(|| format!("reading config {}", path.display()))?;
    if let Some(dir) = &cli.output_dir {
        cfg.output_dir = dir.clone();
    }
    for note in &cfg.notes {
        eprintln!("note: {note}");
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match real_main(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main(cli: &Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring thread pool")?;
    }
    if let Some(seed) = cli.seed {
        eprintln!("seed = {seed}");
    }
    match &cli.command {
        Command::Run { config } => {
            let cfg = load_config(config, cli)?;
            let summary = app::run(&cfg)?;
            print!("{}", summary.describe());
            println!("manifest: {}", cfg.output_dir.join(app::MANIFEST).display());
            Ok(summary.success())
        }
        Command::CompareLoads { config } => {
            let cfg = load_config(config, cli)?;
            let summary = app::compare_loads(&cfg)?;
            print!("{}", summary.summary_csv());
            Ok(summary.success())
        }
        Command::MeshInfo { config } => {
            let cfg = load_config(config, cli)?;
            print!("{}", app::mesh_info(&cfg)?);
            Ok(true)
        }
    }
}
