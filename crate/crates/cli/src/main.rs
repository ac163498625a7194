//! `phasefield` command line tool.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use phasefield::{Error, ErrorKind};

#[derive(Debug, Parser)]
#[command(name = "phasefield", version, about = "Phase-field branched transport toolkit")]
struct Cli {
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Truncation and search tolerance of the reduced cost; slack of the dominance check.
    #[arg(long, global = true, default_value_t = phasefield::reduced::DEFAULT_TOL)]
    tol: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate the reduced cost f(m) into cost_table.csv.
    CostTable(CostTableArgs),
    /// Solve one transition problem and write profile.csv.
    Profile(ProfileArgs),
    /// Run the alternating minimization of a scenario.
    Minimize(ScenarioArgs),
    /// Build the recovery pair of the scenario's measure.
    RecoveryCheck(ScenarioArgs),
    /// Compare limit, recovery and recovery-seeded optimized energies.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PrefactorArg {
    DOmega,
    DMinusOneOmega,
}

#[derive(Debug, Args)]
struct CostArgs {
    /// Codimension.
    #[arg(long, default_value_t = 1)]
    d: usize,
    /// Gradient exponent.
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, value_enum, default_value = "d-omega")]
    prefactor: PrefactorArg,
}

#[derive(Debug, Args)]
struct CostTableArgs {
    #[command(flatten)]
    cost: CostArgs,
    /// Barrier coefficients, one table block per value.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "1")]
    a: Vec<f64>,
    /// Masses, ascending.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "0,0.25,0.5,1,2,4")]
    m: Vec<f64>,
}

#[derive(Debug, Args)]
struct ProfileArgs {
    #[command(flatten)]
    cost: CostArgs,
    /// Value at the inner radius.
    #[arg(long, default_value_t = 0.0)]
    xi: f64,
    #[arg(long)]
    r1: f64,
    #[arg(long)]
    r2: f64,
    /// Cells of the radial mesh.
    #[arg(long, default_value_t = 2000)]
    resolution: usize,
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    /// Scenario JSON file.
    scenario: PathBuf,
}

#[derive(Debug, Args)]
struct CompareArgs {
    scenario: PathBuf,
    /// Additional runs at eps/2, eps/4, ...
    #[arg(long, default_value_t = 0)]
    halvings: usize,
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Validation => 2,
        ErrorKind::Solver => 3,
        ErrorKind::Io => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    if let Err(e) = std::fs::create_dir_all(&cli.out) {
        eprintln!("error: {e}");
        return ExitCode::from(4);
    }
    let result = match &cli.command {
        Command::CostTable(a) => commands::cost_table(&cli, a),
        Command::Profile(a) => commands::profile(&cli, a),
        Command::Minimize(a) => commands::minimize(&cli, a),
        Command::RecoveryCheck(a) => commands::recovery_check(&cli, a),
        Command::Compare(a) => commands::compare(&cli, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
