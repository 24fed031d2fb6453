//! Command-line front end for the band-structure and positivity tools.

pub mod commands;
pub mod config;
pub mod error;

use std::io::Read;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde_json::Value;

use crate::commands::Context;
use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "bloch", version, about = "Bloch bands, momentum positivity and oracle checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Configuration file (TOML or JSON); stdin when absent or `-`.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps and grid loops.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Verify invariants and cross-checks; violations exit with status 5.
    #[arg(long, global = true)]
    pub self_check: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Band energies and gauge-fixed coefficients on the quasi-momentum grid.
    Bands {
        /// Band file path; overrides `output.bands_file`.
        #[arg(long)]
        bands_out: Option<PathBuf>,
    },
    /// Λ(z) for one band, for the configured potential or an alpha sweep.
    Lambda,
    /// sup P₊ over single-band packets for a cosine alpha sweep.
    SuppSweep,
    /// P₊(t) for the configured packet.
    Ppos,
    /// Direct position-space evaluation of P₊ at `oracle.t`.
    OracleCheck,
    /// Compare tables at M and 2M.
    Convergence,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Bands { .. } => "bands",
            Command::Lambda => "lambda",
            Command::SuppSweep => "supp-sweep",
            Command::Ppos => "ppos",
            Command::OracleCheck => "oracle-check",
            Command::Convergence => "convergence",
        }
    }
}

pub fn load_config(path: Option<&PathBuf>) -> Result<RunConfig, CliError> {
    match path {
        Some(p) if p.as_os_str() != "-" => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            RunConfig::parse_guess(&text, Some(p))
        }
        _ => {
            let mut text = String::new();
            std::io::stdin().read_to_string(&mut text)?;
            RunConfig::parse_guess(&text, None)
        }
    }
}

/// Runs one subcommand and returns its JSON summary.
pub fn run(cli: &Cli) -> Result<Value, CliError> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(CliError::Config("--workers must be at least 1".into()));
        }
        // Fails only when a pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let cfg = load_config(cli.config.as_ref())?;
    let mut ctx = Context::new(cfg, cli.command.name());
    if let Some(out) = &cli.out {
        ctx.out_dir = out.clone();
    }
    ctx.self_check = cli.self_check;
    let summary = match cli.command {
        Command::Bands { ref bands_out } => {
            ctx.bands_out = bands_out.clone();
            to_json(&commands::cmd_bands(&ctx)?)
        }
        Command::Lambda => {
            let out = commands::cmd_lambda(&ctx)?;
            serde_json::json!({
                "path": out.path,
                "scans": out.curves.iter().map(|c| serde_json::json!({
                    "alpha": c.alpha,
                    "half_width": c.half_width,
                    "scan": c.scan,
                })).collect::<Vec<_>>(),
            })
        }
        Command::SuppSweep => to_json(&commands::cmd_supp(&ctx)?),
        Command::Ppos => {
            let out = commands::cmd_ppos(&ctx)?;
            let mut v = to_json(&out);
            // The per-time series is already in the CSV.
            v["report"].as_object_mut().map(|o| o.remove("samples"));
            v
        }
        Command::OracleCheck => to_json(&commands::cmd_oracle(&ctx)?),
        Command::Convergence => to_json(&commands::cmd_convergence(&ctx)?),
    };
    Ok(serde_json::json!({ "meta": ctx.metadata(), "summary": summary }))
}

fn to_json(v: &impl serde::Serialize) -> Value {
    serde_json::to_value(v).expect("summary serializes")
}
