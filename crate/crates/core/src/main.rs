use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use bergman_toeplitz::commands::{run, Command, VERSION};
use bergman_toeplitz::config::{Format, JobConfig, Overrides};
use bergman_toeplitz::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "bergman-toeplitz", version = VERSION, about = "Toeplitz operators on weighted Bergman spaces")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// JSON job config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; stdout when absent (and not set in the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// Worker threads; all cores by default.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Points per axis for Gauss-Jacobi quadrature.
    #[arg(long, global = true)]
    quad_order: Option<usize>,
    /// Sample count for Monte Carlo quadrature and the MC oracle.
    #[arg(long, global = true)]
    mc_samples: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// γ(α) table for every symbol.
    Gamma,
    /// Coordinate-list matrix of the single configured symbol.
    Operator,
    /// Pairwise relative commutator norms.
    Commutator,
    /// Fusion defect of the first symbol against the remaining factors.
    Fusion,
    /// Closed forms against the independent oracle.
    OracleCompare,
    /// Torus invariance, factorization and moment-map checks.
    Geometry,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum FormatArg {
    Csv,
    Json,
}

fn execute(cli: Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::Validation("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    let path = cli.config.ok_or_else(|| Error::Config("--config PATH is required".into()))?;
    let mut cfg = JobConfig::load(&path)?;
    cfg.apply(&Overrides {
        seed: cli.seed,
        quad_order: cli.quad_order,
        mc_samples: cli.mc_samples,
        format: cli.format.map(|f| match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }),
        out: cli.out,
    });
    let out = cfg.output.path.clone();
    let cmd = match cli.command {
        Cmd::Gamma => Command::Gamma,
        Cmd::Operator => Command::Operator,
        Cmd::Commutator => Command::Commutator,
        Cmd::Fusion => Command::Fusion,
        Cmd::OracleCompare => Command::OracleCompare,
        Cmd::Geometry => Command::Geometry,
    };
    let text = run(cmd, cfg)?;
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
