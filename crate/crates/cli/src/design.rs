use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, ValueEnum};
use nfisac_core::metrics::{Geometry, SolutionFile};
use nfisac_core::scenario::ArrayFile;
use nfisac_core::{build_channel_set, designs, SolveStatus};

use crate::failure::{Failure, EXIT_NUMERICAL};
use crate::manifest::Run;
use crate::scenario::{Objective, ScenarioArgs, SolverArgs};

/// Largest array written in full form under `--form auto`.
const AUTO_FULL_MAX: usize = 256;

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Form {
    Auto,
    Full,
    Factored,
}

#[derive(Args, Debug)]
pub struct DesignArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, value_enum)]
    pub objective: Objective,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Covariance storage: full N×N matrices, or basis and reduced blocks.
    /// `auto` picks factored above 256 transmit antennas.
    #[arg(long, value_enum, default_value = "auto")]
    pub form: Form,
    #[arg(long, default_value = "solution.json")]
    pub out: PathBuf,
}

pub fn run(args: DesignArgs, argv: &[String]) -> Result<ExitCode, Failure> {
    let mut loaded = args.scenario.load()?;
    let opts = args.solver.options(&mut loaded.overrides)?;
    let cfg = &loaded.cfg;
    let ch = build_channel_set(cfg)?;
    let mut run = Run::start(argv, Some(loaded.source.clone()), loaded.overrides.clone());

    let probe = designs::feasibility_probe(&ch, cfg, &opts.settings)?;
    if !probe.feasible {
        return Err(Failure::Infeasible(probe.to_string()));
    }
    let mut sol = designs::solve_by_kind(&ch, cfg, args.objective.kind(), &opts)?;
    run.set_diagnostics(&sol.diagnostics);
    // Timing lives in the manifest so that the solution file is reproducible.
    sol.diagnostics.wall_time_s = 0.0;
    let geometry = Geometry { carrier_hz: cfg.carrier_hz, tx: ArrayFile::from_spec(&cfg.tx) };
    let factored = match args.form {
        Form::Auto => ch.num_tx() > AUTO_FULL_MAX,
        Form::Full => false,
        Form::Factored => true,
    };
    let file = SolutionFile::new(&sol, &ch, geometry, cfg.echo_power_exponent, factored);
    run.write(&args.out, file.to_json().as_bytes())?;
    run.finish()?;

    println!(
        "{:?}: {:?} = {:e} ({} iterations)",
        sol.status, sol.achieved.kind, sol.achieved.value, sol.diagnostics.iterations
    );
    Ok(match sol.status {
        SolveStatus::Optimal => ExitCode::SUCCESS,
        _ => ExitCode::from(EXIT_NUMERICAL),
    })
}
