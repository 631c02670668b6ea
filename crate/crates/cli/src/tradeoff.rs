use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Args;
use nfisac_core::metrics::GridRange;
use nfisac_core::scenario::{db_to_linear, linear_to_db};
use nfisac_core::tradeoff::{self, PointStatus};
use nfisac_core::{build_channel_set, designs, MetricKind, ScenarioConfig};
use serde::Serialize;

use crate::failure::{Failure, EXIT_INFEASIBLE, EXIT_NUMERICAL};
use crate::manifest::Run;
use crate::scenario::{Objective, ScenarioArgs, SolverArgs};

/// Default upper end of the sweep, relative to the largest feasible requirement.
const TOP_FRACTION: f64 = 0.9;
/// Default lower end of the sweep, relative to the upper end.
const BOTTOM_FRACTION: f64 = 1e-3;

#[derive(Args, Debug)]
pub struct TradeoffArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, value_enum, default_value = "crb")]
    pub objective: Objective,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Number of SINR requirements, log-spaced.
    #[arg(long, default_value_t = 20)]
    pub points: usize,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma_min_db: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma_max_db: Option<f64>,
    /// Sweep the collocated target/user y offset over `min:max:steps` metres instead.
    #[arg(long, allow_hyphen_values = true)]
    pub distance: Option<String>,
    #[arg(long, default_value = "tradeoff.csv")]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct SinglePair {
    gamma_s_db: f64,
    crb_s: f64,
    gamma_c_db: f64,
    crb_c: f64,
    gamma_s_prime_db: f64,
    crb_s_prime: f64,
}

#[derive(Serialize)]
struct EndpointsFile {
    objective: MetricKind,
    gamma_min_db: f64,
    gamma_max_db: f64,
    max_uniform_sinr_db: f64,
    single_pair: Option<SinglePair>,
}

pub fn endpoints_path(out: &Path) -> PathBuf {
    out.with_extension("endpoints.json")
}

pub fn run(args: TradeoffArgs, argv: &[String]) -> Result<ExitCode, Failure> {
    let mut loaded = args.scenario.load()?;
    let opts = args.solver.options(&mut loaded.overrides)?;
    if let Some(spec) = &args.distance {
        loaded.overrides.insert("distance".into(), spec.clone());
        let range = GridRange::parse(spec)?;
        let mut run = Run::start(argv, Some(loaded.source), loaded.overrides);
        let code = distance_sweep(&loaded.cfg, range, &opts, &args.out, &mut run)?;
        run.finish()?;
        return Ok(code);
    }

    let cfg = &loaded.cfg;
    let ch = build_channel_set(cfg)?;
    if cfg.users.is_empty() {
        return Err(Failure::Config("an SINR sweep needs at least one user".into()));
    }
    if args.points == 0 {
        return Err(Failure::Config("--points must be positive".into()));
    }
    let single_pair = if cfg.targets.len() == 1 && cfg.users.len() == 1 {
        let e = tradeoff::endpoints(&ch, cfg, &opts)?;
        Some(SinglePair {
            gamma_s_db: linear_to_db(e.gamma_s),
            crb_s: e.crb_s,
            gamma_c_db: linear_to_db(e.gamma_c),
            crb_c: e.crb_c,
            gamma_s_prime_db: linear_to_db(e.gamma_s_prime),
            crb_s_prime: e.crb_s_prime,
        })
    } else {
        None
    };
    let top = designs::max_uniform_sinr(&ch, cfg, &opts.settings)?;
    let hi = args.gamma_max_db.map_or(TOP_FRACTION * top, db_to_linear);
    let lo = match (args.gamma_min_db, &single_pair) {
        (Some(db), _) => db_to_linear(db),
        // Without a tradeoff the sensing optimum already reaches the top.
        (None, Some(p)) => db_to_linear(p.gamma_s_db).max(BOTTOM_FRACTION * hi).min(hi),
        (None, None) => BOTTOM_FRACTION * hi,
    };
    if !(lo > 0.0 && hi >= lo) {
        return Err(Failure::Config(format!("empty SINR range [{lo:e}, {hi:e}]")));
    }
    loaded.overrides.insert("points".into(), args.points.to_string());

    let curve = tradeoff::sweep(&ch, cfg, args.objective.kind(), &tradeoff::log_grid(lo, hi, args.points), &opts);
    let endpoints = EndpointsFile {
        objective: args.objective.kind(),
        gamma_min_db: linear_to_db(lo),
        gamma_max_db: linear_to_db(hi),
        max_uniform_sinr_db: linear_to_db(top),
        single_pair,
    };
    let mut endpoints_json = serde_json::to_string_pretty(&endpoints).map_err(|e| Failure::Config(e.to_string()))?;
    endpoints_json.push('\n');

    let mut run = Run::start(argv, Some(loaded.source), loaded.overrides);
    let statuses: Vec<&str> = curve.points.iter().map(|p| p.status.as_str()).collect();
    run.set_diagnostics(&statuses);
    run.write(&args.out, curve.to_csv().as_bytes())?;
    run.write(&endpoints_path(&args.out), endpoints_json.as_bytes())?;
    run.finish()?;

    for p in curve.points.iter().filter(|p| p.status != PointStatus::Optimal) {
        eprintln!(
            "gamma {:.3} dB: {} {}",
            linear_to_db(p.gamma),
            p.status.as_str(),
            p.message.as_deref().unwrap_or("")
        );
    }
    let any = |s: PointStatus| curve.points.iter().any(|p| p.status == s);
    Ok(if any(PointStatus::NumericalLimit) || any(PointStatus::Failed) {
        ExitCode::from(EXIT_NUMERICAL)
    } else if any(PointStatus::Infeasible) {
        ExitCode::from(EXIT_INFEASIBLE)
    } else {
        ExitCode::SUCCESS
    })
}

/// Moves the single target and user to `y = d`, keeping their x and z.
fn distance_sweep(cfg: &ScenarioConfig, range: GridRange, opts: &designs::DesignOptions, out: &Path, run: &mut Run) -> Result<ExitCode, Failure> {
    if cfg.targets.len() != 1 || cfg.users.len() != 1 {
        return Err(Failure::Config("a distance sweep needs exactly one target and one user".into()));
    }
    let template = |d: f64| {
        let mut c = cfg.clone();
        c.targets[0].position.y = d;
        c.users[0].position.y = d;
        c
    };
    let rows = tradeoff::collocated_distance_sweep(template, &range.values(), opts)?;
    run.write(out, tradeoff::distance_csv(&rows).as_bytes())?;
    Ok(ExitCode::SUCCESS)
}
