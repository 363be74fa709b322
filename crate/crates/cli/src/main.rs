use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

mod commands;
mod config;
mod output;

use output::Format;

/// Resonant pumping through dynamical tunneling: forward model, spectra,
/// parameter extraction and ray escape statistics.
#[derive(Debug, Parser)]
#[command(name = "tunnelpump", version)]
struct Args {
    /// JSON run configuration; its "command" key selects what to run.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing). Default: the config's "out" or ./out.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed for the stochastic commands.
    #[arg(long, env = "CAVITY_SEED")]
    seed: Option<u64>,
    /// Format of tabular outputs.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad or inconsistent configuration: exit status 2.
    Config(String),
    /// The computation itself failed: exit status 3.
    Compute(String),
}

impl CliError {
    pub fn config(e: impl ToString) -> Self {
        CliError::Config(e.to_string())
    }

    pub fn compute(e: impl ToString) -> Self {
        CliError::Compute(e.to_string())
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Compute(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Compute(m) => write!(f, "computation failed: {m}"),
        }
    }
}

fn run(args: Args) -> Result<Vec<PathBuf>, CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::config(format!("{}: {e}", args.config.display())))?;
    let (command, common) = config::parse(&text)?;

    if let Some(n) = args.threads {
        if n == 0 {
            return Err(CliError::config("--threads must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(CliError::config)?;
    }

    let ctx = commands::Context {
        format: args.format.or(common.format),
        seed: args.seed.or(common.seed),
    };
    log::info!("running {}", command.name());
    let artifacts = commands::run(&command, &ctx)?;

    let out = args
        .out
        .or(common.out.map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out).map_err(|e| CliError::config(format!("{}: {e}", out.display())))?;
    artifacts
        .iter()
        .map(|a| {
            let path = out.join(&a.name);
            std::fs::write(&path, &a.bytes).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
            Ok(path)
        })
        .collect()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Args::parse()) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
