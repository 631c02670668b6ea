//! `nfisac`: scenario-driven covariance designs, tradeoff sweeps, beampattern
//! grids and an oracle validation suite.
//!
//! Exit codes: 0 success, 1 configuration or input error, 2 infeasible SINR
//! requirements, 3 solver numerical limit.

mod beampattern;
mod design;
mod failure;
mod manifest;
mod preset;
mod scenario;
mod tradeoff;
mod validate;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use failure::Failure;

#[derive(Parser)]
#[command(name = "nfisac", version, about = "Near-field ISAC transmit covariance design")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one covariance design and write the solution JSON.
    Design(design::DesignArgs),
    /// Sweep the SINR requirement, or the collocated target/user offset.
    Tradeoff(tradeoff::TradeoffArgs),
    /// Sample the transmit beampattern of a solution on a plane.
    Beampattern(beampattern::BeampatternArgs),
    /// Run the oracle checks on a scenario.
    Validate(validate::ValidateArgs),
    /// List or export the built-in scenarios.
    #[command(subcommand)]
    Preset(preset::PresetCommand),
}

fn init_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("NFISAC_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Config(format!("NFISAC_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Config(format!("cannot size thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(failure::EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    let argv: Vec<String> = std::env::args().collect();
    let result = init_threads().and_then(|()| match cli.command {
        Command::Design(a) => design::run(a, &argv),
        Command::Tradeoff(a) => tradeoff::run(a, &argv),
        Command::Beampattern(a) => beampattern::run(a, &argv),
        Command::Validate(a) => validate::run(a),
        Command::Preset(c) => preset::run(c, &argv),
    });
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("nfisac: {f}");
            f.exit_code()
        }
    }
}
