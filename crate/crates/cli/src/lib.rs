//! `optpop` command-line front end.

pub mod commands;
pub mod config;
pub mod report;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use optpop_core::landscapes::LandscapeCatalog;
use optpop_core::optimizers::OptimizerRegistry;

pub use config::{ExperimentConfig, OutputFormat};
pub use report::ReportTable;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    pub fn from_core(e: optpop_core::Error) -> Self {
        use optpop_core::Error as E;
        match e {
            E::Config(m) => CliError::Config(m),
            e @ (E::Unknown { .. } | E::Json(_)) => CliError::Config(e.to_string()),
            e => CliError::Runtime(e.to_string()),
        }
    }
}

/// Writes `bytes` to `path`, creating parent directories.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

#[derive(Debug, Parser)]
#[command(name = "optpop", version, about = "Compare optimizers by the distribution of models they produce")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Basin histogram of trajectory endpoints on a 2-D landscape.
    Stationary(Common),
    /// SetA (lowest loss) vs SetB (highest metric) populations per optimizer.
    Population(Common),
    /// Pairwise Mann-Whitney tests between optimizers' SetA populations.
    Compare(Common),
    /// Smoothed learning curves of one trajectory per optimizer.
    Curves(Common),
    /// Finite-difference check of every analytic gradient.
    Gradcheck(Common),
    /// Recompute the minima of a landscape from a dense grid of starts.
    RefineMinima(Common),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Stationary(_) => "stationary",
            Command::Population(_) => "population",
            Command::Compare(_) => "compare",
            Command::Curves(_) => "curves",
            Command::Gradcheck(_) => "gradcheck",
            Command::RefineMinima(_) => "refine-minima",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Stationary(c)
            | Command::Population(c)
            | Command::Compare(c)
            | Command::Curves(c)
            | Command::Gradcheck(c)
            | Command::RefineMinima(c) => c,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON experiment description.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Table file format; overrides the config.
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
}

impl Common {
    pub fn load(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_path(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(d) = &self.out_dir {
            cfg.out_dir = d.clone();
        }
        if let Some(f) = self.format {
            cfg.format = f;
        }
        Ok(cfg)
    }
}

/// Strategy registries a run draws from.
pub struct Context {
    pub catalog: LandscapeCatalog,
    pub registry: OptimizerRegistry,
}

impl Default for Context {
    fn default() -> Self {
        Self {
            catalog: LandscapeCatalog::builtin(),
            registry: OptimizerRegistry::builtin(),
        }
    }
}

/// Tables produced by a command, and whether it found a failure that
/// should turn into a non-zero exit (gradient checks).
#[derive(Debug, Default)]
pub struct Outcome {
    pub tables: Vec<ReportTable>,
    pub failed: bool,
}

pub fn execute(ctx: &Context, command: &str, cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    cfg.check_command(command)?;
    match command {
        "stationary" => commands::stationary(ctx, cfg),
        "population" => commands::population(ctx, cfg),
        "compare" => commands::compare(ctx, cfg),
        "curves" => commands::curves(ctx, cfg),
        "gradcheck" => commands::gradcheck(ctx, cfg),
        "refine-minima" => commands::refine_minima(ctx, cfg),
        other => Err(CliError::Config(format!("unknown command `{other}`"))),
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = cli
        .command
        .common()
        .load()
        .and_then(|cfg| execute(&Context::default(), cli.command.name(), &cfg));
    match result {
        Ok(out) => {
            for t in &out.tables {
                println!("{}", t.render_text());
            }
            if out.failed {
                1
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
