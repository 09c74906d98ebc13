use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fgcf::ErrorKind;

mod commands;
mod files;
mod manifest;
mod settings;

use settings::Settings;

#[derive(Parser)]
#[command(name = "fgcf", version, about = "Factor-graph collaborative filtering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// TOML file with default settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    settings: Settings,
}

#[derive(Subcommand)]
enum Command {
    /// Map a raw ratings CSV with arbitrary ids onto a 0-based dataset.
    Ingest(RunArgs),
    /// Draw a synthetic dataset from a model.
    Sample(RunArgs),
    /// Build an initial model (VDVQ clustering or uniform).
    Init(RunArgs),
    /// Train IMP or EM and write posteriors and a convergence trace.
    Train(RunArgs),
    /// Train, then predict ratings for query pairs.
    Predict(RunArgs),
    /// Evaluate the generalization bound.
    Bound(RunArgs),
    /// Density evolution by population dynamics.
    De(RunArgs),
    /// Cold-start sweep over densities, algorithms and seeds.
    Sweep(RunArgs),
    /// Rerun a command from its manifest and compare outputs.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        /// Directory for the rerun (default: `replay` next to the manifest).
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Lib(fgcf::Error),
    Mismatch(String),
}

impl From<fgcf::Error> for CliError {
    fn from(e: fgcf::Error) -> Self {
        CliError::Lib(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Mismatch(m) => write!(f, "replay mismatch: {m}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Lib(e) => match e.kind() {
                ErrorKind::Config => 2,
                ErrorKind::Data => 3,
                ErrorKind::Numeric => 4,
            },
            CliError::Mismatch(_) => 1,
        }
    }
}

fn configure_threads(threads: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot start thread pool: {e}")))?;
    }
    Ok(())
}

fn resolve(args: RunArgs) -> Result<Settings, CliError> {
    let base = match &args.config {
        Some(path) => Settings::from_toml(path)?,
        None => Settings::default(),
    };
    Ok(args.settings.over(base))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (name, args) = match cli.command {
        Command::Replay {
            manifest,
            out_dir,
            threads,
        } => {
            configure_threads(threads)?;
            return commands::replay(&manifest, out_dir);
        }
        Command::Ingest(a) => ("ingest", a),
        Command::Sample(a) => ("sample", a),
        Command::Init(a) => ("init", a),
        Command::Train(a) => ("train", a),
        Command::Predict(a) => ("predict", a),
        Command::Bound(a) => ("bound", a),
        Command::De(a) => ("de", a),
        Command::Sweep(a) => ("sweep", a),
    };
    let settings = resolve(args)?;
    configure_threads(settings.threads)?;
    commands::execute(name, &settings).map(|_| ())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fgcf: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
