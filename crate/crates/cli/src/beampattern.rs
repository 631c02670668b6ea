use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Args;
use nfisac_core::metrics::{beampattern_grid, GridRange, SolutionFile};
use nfisac_core::scenario::SPEED_OF_LIGHT;
use nfisac_core::Axis;

use crate::failure::Failure;
use crate::manifest::Run;

#[derive(Args, Debug)]
pub struct BeampatternArgs {
    /// Solution JSON written by `nfisac design`.
    #[arg(long)]
    pub solution: PathBuf,
    /// Sampling plane as `axis=value`, e.g. `x=0`.
    #[arg(long, default_value = "x=0")]
    pub plane: String,
    /// `min:max:steps` along x.
    #[arg(long, allow_hyphen_values = true)]
    pub range_x: Option<String>,
    /// `min:max:steps` along y.
    #[arg(long, allow_hyphen_values = true)]
    pub range_y: Option<String>,
    /// `min:max:steps` along z.
    #[arg(long, allow_hyphen_values = true)]
    pub range_z: Option<String>,
    #[arg(long, default_value = "beampattern.csv")]
    pub out: PathBuf,
}

fn parse_plane(s: &str) -> Result<(Axis, f64), Failure> {
    let bad = || Failure::Config(format!("plane {s:?} is not axis=value"));
    let (axis, value) = s.split_once('=').ok_or_else(bad)?;
    let axis = match axis.trim() {
        "x" => Axis::X,
        "y" => Axis::Y,
        "z" => Axis::Z,
        _ => return Err(bad()),
    };
    Ok((axis, value.trim().parse().map_err(|_| bad())?))
}

pub fn run(args: BeampatternArgs, argv: &[String]) -> Result<ExitCode, Failure> {
    let (axis, value) = parse_plane(&args.plane)?;
    let ranges = [&args.range_x, &args.range_y, &args.range_z];
    let names = ["x", "y", "z"];
    let mut free = Vec::new();
    for (i, r) in ranges.iter().enumerate() {
        match (i == axis.index(), r) {
            (true, Some(_)) => {
                return Err(Failure::Config(format!("--range-{} given for the fixed axis", names[i])));
            }
            (false, None) => return Err(Failure::Config(format!("--range-{} is required", names[i]))),
            (false, Some(s)) => free.push(GridRange::parse(s)?),
            (true, None) => {}
        }
    }

    let file = SolutionFile::load(&args.solution)?;
    let lambda = SPEED_OF_LIGHT / file.geometry.carrier_hz;
    let tx = file.geometry.tx.clone().into_spec().positions(lambda);
    let factor = file.rx_factor()?;
    if factor.nrows() != tx.len() {
        return Err(Failure::Config(format!(
            "solution covariance has order {} but the array has {} antennas",
            factor.nrows(),
            tx.len()
        )));
    }
    let grid = beampattern_grid(&tx, lambda, &factor, axis, value, free[0], free[1]);

    let mut overrides = BTreeMap::new();
    overrides.insert("plane".into(), args.plane.clone());
    let mut run = Run::start(argv, Some(args.solution.display().to_string()), overrides);
    run.write(&args.out, grid.to_csv().as_bytes())?;
    run.finish()?;
    Ok(ExitCode::SUCCESS)
}
