use std::path::PathBuf;
use std::process::ExitCode;

use aqlab_cli::{stages_for, CliError, Experiment, ExperimentConfig, Overrides};
use clap::{Args, Parser, Subcommand};

/// Numerical laboratory for the stability of additive-quadratic mappings.
#[derive(Parser)]
#[command(name = "aqlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the F-norm axioms and homogeneity of both spaces.
    Axioms(Common),
    /// Evaluate the four stability series at every sample point.
    Series(Common),
    /// Run the direct-method extraction routes.
    Extract(Common),
    /// Run the fixed-point iterations.
    Fixpoint(Common),
    /// Extract the approximant and check the stability bounds.
    Bound(Common),
    /// Audit the configured corollaries and structural identities.
    Audit(Common),
    /// Sweep the control exponent over `sweep.r_values`.
    Sweep(Common),
    /// Full pipeline.
    Run(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `output.dir`, then `AQLAB_OUT`, then `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `samples.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `tolerances.extraction`.
    #[arg(long)]
    tol: Option<f64>,
}

impl Command {
    fn parts(&self) -> (&'static str, &Common) {
        match self {
            Command::Axioms(c) => ("axioms", c),
            Command::Series(c) => ("series", c),
            Command::Extract(c) => ("extract", c),
            Command::Fixpoint(c) => ("fixpoint", c),
            Command::Bound(c) => ("bound", c),
            Command::Audit(c) => ("audit", c),
            Command::Sweep(c) => ("sweep", c),
            Command::Run(c) => ("run", c),
        }
    }
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    let (name, args) = cli.command.parts();
    let cfg = ExperimentConfig::load(&args.config)?;
    let out_dir = args
        .out
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .or_else(|| std::env::var_os("AQLAB_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let exp = Experiment::new(
        cfg,
        Overrides {
            seed: args.seed,
            tol: args.tol,
        },
    )?;
    let outcome = exp.run(stages_for(name))?;
    outcome.write(&out_dir)?;
    let s = outcome.report.summary();
    eprintln!(
        "{name}: {} pass, {} fail, {} flagged, {} refused -> {}",
        s.pass,
        s.fail,
        s.flagged,
        s.refused,
        out_dir.display()
    );
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("aqlab: {e}");
            CliError::EXIT_CODE
        }
    };
    ExitCode::from(code as u8)
}
