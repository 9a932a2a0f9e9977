use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ensemble_cli::{load_config, run_scenario, write_output, CliError, Overrides};

#[derive(Parser)]
#[command(name = "ensemble-lab", version, about = "Expected-loss curves of averaged ensembles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Expected loss of the K-member mean for K = 1..kmax.
    Curve(Flags),
    /// Fourth-order delta expansion against the exact curve.
    Delta(Flags),
    /// Exact sample-mean tails with their Petrov asymptotes.
    Tails(Flags),
    /// 0/1 error of a score model with its assumption report.
    Margins(Flags),
    /// Condorcet, mass-restored, Lévy and Cauchy sequences.
    Counterexamples(Flags),
    /// Averaged curves of items split by asymptotic correctness.
    SyntheticSplit(Flags),
}

#[derive(Args)]
struct Flags {
    /// JSON scenario; the built-in default when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo replicates.
    #[arg(long)]
    reps: Option<u64>,
    /// Largest K (or n for tail sequences).
    #[arg(long)]
    kmax: Option<usize>,
    /// Output directory [default: out/<command>].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write plot.svg.
    #[arg(long)]
    svg: bool,
}

fn run(command: &str, f: Flags) -> Result<(), CliError> {
    let overrides = Overrides {
        seed: f.seed,
        reps: f.reps,
        kmax: f.kmax,
        out: f.out,
        svg: f.svg,
    };
    let config = load_config(command, f.config.as_deref(), &overrides)?;
    let output = run_scenario(&config)?;
    let dir = config
        .out()
        .cloned()
        .unwrap_or_else(|| PathBuf::from("out").join(command));
    for path in write_output(&dir, &output)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, flags) = match cli.command {
        Command::Curve(f) => ("curve", f),
        Command::Delta(f) => ("delta", f),
        Command::Tails(f) => ("tails", f),
        Command::Margins(f) => ("margins", f),
        Command::Counterexamples(f) => ("counterexamples", f),
        Command::SyntheticSplit(f) => ("synthetic-split", f),
    };
    match run(name, flags) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
