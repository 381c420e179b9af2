//! `meshloop`: supervision rendering, mesh refinement, texture fusion,
//! evaluation and scene placement driven by one TOML config.

mod commands;
mod config;
mod error;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::PipelineConfig;
use crate::error::{CliError, CliResult};
use crate::run::RunDir;

#[derive(Parser)]
#[command(name = "meshloop", version, about = "Normal-supervised mesh refinement pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Pipeline config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to all cores. Outputs do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the output root from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Render oracle supervision (normals, masks, colors) for the reference.
    Supervise(Common),
    /// Refine the coarse initial mesh against the supervision.
    Refine(Common),
    /// Color a mesh by multi-view texture fusion.
    Texture {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mesh: PathBuf,
    },
    /// Compare a mesh against the reference.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mesh: PathBuf,
    },
    /// Place the asset in the configured scene and composite frames.
    Place(Common),
    /// Supervise, refine, texture, evaluate and place in one run.
    Pipeline(Common),
    /// Geometry metrics after every refinement iteration.
    Ablate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 30)]
        max_iter: usize,
    },
}

impl Command {
    fn parts(&self) -> (&'static str, &Common) {
        match self {
            Command::Supervise(c) => ("supervise", c),
            Command::Refine(c) => ("refine", c),
            Command::Texture { common, .. } => ("texture", common),
            Command::Eval { common, .. } => ("eval", common),
            Command::Place(c) => ("place", c),
            Command::Pipeline(c) => ("pipeline", c),
            Command::Ablate { common, .. } => ("ablate", common),
        }
    }
}

fn run(cli: Cli) -> CliResult<PathBuf> {
    let (name, common) = cli.command.parts();
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot start {n} worker threads: {e}")))?;
    }
    let config = PipelineConfig::load(&common.config, common.seed, common.out.as_deref())?;
    let run = RunDir::create(&config, name)?;
    let start = std::time::Instant::now();
    match &cli.command {
        Command::Supervise(_) => commands::cmd_supervise(&config, &run)?,
        Command::Refine(_) => commands::cmd_refine(&config, &run)?,
        Command::Texture { mesh, .. } => commands::cmd_texture(&config, mesh, &run)?,
        Command::Eval { mesh, .. } => commands::cmd_eval(&config, mesh, &run)?,
        Command::Place(_) => commands::cmd_place(&config, &run)?,
        Command::Pipeline(_) => commands::cmd_pipeline(&config, &run)?,
        Command::Ablate { max_iter, .. } => commands::cmd_ablate(&config, *max_iter, &run)?,
    }
    log::info!("{name} finished in {:.1?}", start.elapsed());
    Ok(run.path)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
