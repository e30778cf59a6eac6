//! `mvlevy`: stationary distributions of Lévy-driven McKean–Vlasov SDEs from a JSON
//! experiment file.
//!
//! Exit codes: 0 success, 2 validation error, 3 numerical failure, 4 failed condition
//! check under `--strict`.

mod commands;
mod config;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
    Strict(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Strict(_) => 4,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "validation",
            CliError::Numerical(_) => "numerical",
            CliError::Strict(_) => "condition_check",
            CliError::Io(_) => "io",
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Numerical(m) | CliError::Strict(m) | CliError::Io(m) => m,
        }
    }
}

impl From<mvlevy::Error> for CliError {
    fn from(e: mvlevy::Error) -> Self {
        match e {
            mvlevy::Error::NoiseFloorExceedsTol { .. } => CliError::Validation(e.to_string()),
            e if e.is_numerical() => CliError::Numerical(e.to_string()),
            e => CliError::Validation(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "mvlevy", version, about = "Stationary distributions of Levy-driven McKean-Vlasov SDEs")]
struct Cli {
    /// JSON experiment file.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(short, long, global = true)]
    output_dir: Option<PathBuf>,
    /// Config override `path.to.field=value` (value parsed as JSON when possible).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Exit with code 4 when a condition check fails.
    #[arg(long, global = true)]
    strict: bool,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Noise increments and characteristic-function diagnostics.
    Sample,
    /// Frozen-measure chains or the coupled particle system.
    Simulate,
    /// Fixed-point iteration of the stationary map.
    Fixpoint,
    /// Fixed points from several seeds with the separation test.
    Multiplicity,
    /// Sufficient conditions for existence and multiplicity.
    Check,
    /// Root counts of the scalar self-consistency equation.
    Selfconsistent {
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        /// Inclusive scan `a:b:step`.
        #[arg(long)]
        beta_scan: Option<String>,
    },
    /// Contraction constants of the ergodicity estimate.
    Constants,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Io(e.to_string()))?;
    }
    let mut cfg = config::load(cli.config.as_deref(), &cli.overrides)?;
    if let Some(d) = cli.output_dir {
        cfg.output_dir = Some(d);
    }
    let out = cfg
        .output_dir
        .clone()
        .or_else(|| std::env::var_os(config::OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("mvlevy-out"));
    std::fs::create_dir_all(&out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let ctx = commands::Ctx { cfg, out, strict: cli.strict };
    ctx_write_resolved(&ctx)?;
    match cli.command {
        Command::Sample => commands::sample(&ctx),
        Command::Simulate => commands::simulate(&ctx),
        Command::Fixpoint => commands::fixpoint(&ctx),
        Command::Multiplicity => commands::multiplicity(&ctx),
        Command::Check => commands::check(&ctx),
        Command::Selfconsistent { gamma, beta, beta_scan } => commands::selfconsistent(&ctx, gamma, beta, beta_scan.as_deref()),
        Command::Constants => commands::constants(&ctx),
    }
}

fn ctx_write_resolved(ctx: &commands::Ctx) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(&ctx.cfg).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    let path = ctx.out.join("resolved_config.json");
    std::fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let diag = serde_json::json!({ "error": e.kind(), "message": e.message(), "exit_code": e.code() });
            eprintln!("{diag}");
            ExitCode::from(e.code())
        }
    }
}
