use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod svg;

use config::Format;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}", config_message(*.line, .message))]
    Config { line: usize, message: String },
    #[error(transparent)]
    Lib(#[from] rdsat::Error),
    /// The run finished but a check it reports on did not pass.
    #[error("{0}")]
    Failed(String),
}

fn config_message(line: usize, message: &str) -> String {
    if line == 0 {
        format!("config: {message}")
    } else {
        format!("config line {line}: {message}")
    }
}

impl CliError {
    pub fn config(line: usize, message: impl Into<String>) -> Self {
        CliError::Config {
            line,
            message: message.into(),
        }
    }

    /// 0 success, 1 failed check, 2 parse, 3 solver budget, 4 precondition.
    pub fn exit_code(&self) -> u8 {
        use rdsat::Error as E;
        match self {
            CliError::Config { .. } => 2,
            CliError::Failed(_) => 1,
            CliError::Lib(e) => match e {
                E::Parse(_) | E::InvalidInput(_) | E::Dimension(_) | E::IncompatibleGrid { .. } | E::Io(_) => 2,
                E::InfeasibleWithinBudget { .. } => 3,
                E::NotStabilizable(_)
                | E::Precondition(_)
                | E::ExtendTruncation { .. }
                | E::Resolution { .. }
                | E::AnalyticUnavailable
                | E::NotPositiveDefinite { .. } => 4,
                E::Numeric(_) => 1,
            },
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "rdsat",
    version,
    about = "Region-of-attraction certificates for saturated reaction-diffusion control"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides [output] dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write only this kind of artifact.
    #[arg(long, global = true, value_parser = parse_format)]
    format: Option<Format>,
    /// Worker threads for the sweep.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

fn parse_format(s: &str) -> Result<Format, String> {
    Format::parse(s)
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Eigenvalues, number of unstable modes and tail margin.
    Eig,
    /// Stabilizability test and pole placement.
    Design,
    /// Ellipsoidal region-of-attraction certificate.
    Certify,
    /// Re-check a stored certificate against the configured plant.
    Verify {
        #[arg(long)]
        certificate: PathBuf,
    },
    /// Grid sweep of initial conditions with an SVG figure.
    Sweep,
    /// Galerkin simulation from the configured initial state.
    Simulate,
    /// Boundary-control plant, certificate and simulation.
    Boundary,
    /// Pointwise-saturation level and simulation.
    Pointwise,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::config(0, "--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Failed(format!("cannot start thread pool: {e}")))?;
    }
    let path = cli
        .config
        .ok_or_else(|| CliError::config(0, "--config PATH is required"))?;
    let mut cfg = config::RunConfig::load(&path)?;
    if let Some(dir) = cli.out {
        cfg.output.dir = dir;
    }
    if let Some(f) = cli.format {
        cfg.output.formats = vec![f];
    }
    let ctx = commands::Context::new(cfg);
    match cli.command {
        Command::Eig => commands::eig(&ctx),
        Command::Design => commands::design(&ctx),
        Command::Certify => commands::certify(&ctx),
        Command::Verify { certificate } => commands::verify(&ctx, &certificate),
        Command::Sweep => commands::sweep(&ctx),
        Command::Simulate => commands::simulate(&ctx),
        Command::Boundary => commands::boundary(&ctx),
        Command::Pointwise => commands::pointwise(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
