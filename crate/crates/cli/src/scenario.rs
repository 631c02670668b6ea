use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use nfisac_core::scenario::db_to_linear;
use nfisac_core::{presets, DesignOptions, MetricKind, ScenarioConfig, SubspaceMode};

use crate::failure::Failure;

#[derive(Args, Debug, Clone)]
pub struct ScenarioArgs {
    /// Scenario JSON file.
    #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
    pub scenario: Option<PathBuf>,
    /// Built-in scenario (see `nfisac preset list`).
    #[arg(long)]
    pub preset: Option<String>,
    /// Uniform SINR requirement for every user, in dB.
    #[arg(long, allow_hyphen_values = true)]
    pub sinr_db: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    /// Solve with full N×N variables instead of the reduced subspace.
    #[arg(long)]
    pub direct: bool,
    /// Solver stopping tolerance, absolute and relative.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Keep the relaxed solution without rank-one beam extraction.
    #[arg(long)]
    pub no_extract: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Crb,
    Illum,
    Echo,
}

impl Objective {
    pub fn kind(self) -> MetricKind {
        match self {
            Objective::Crb => MetricKind::SumCrb,
            Objective::Illum => MetricKind::MinIllumination,
            Objective::Echo => MetricKind::MinEcho,
        }
    }
}

pub struct Loaded {
    pub cfg: ScenarioConfig,
    pub source: String,
    pub overrides: BTreeMap<String, String>,
}

impl ScenarioArgs {
    pub fn load(&self) -> Result<Loaded, Failure> {
        let (mut cfg, source) = match (&self.scenario, &self.preset) {
            (Some(path), _) => (ScenarioConfig::load(path)?, path.display().to_string()),
            (None, Some(name)) => (
                presets::by_name(name).ok_or_else(|| {
                    Failure::Config(format!("unknown preset {name:?}; known: {}", presets::NAMES.join(", ")))
                })?,
                format!("preset:{name}"),
            ),
            (None, None) => return Err(Failure::Config("one of --scenario and --preset is required".into())),
        };
        let mut overrides = BTreeMap::new();
        if let Some(db) = self.sinr_db {
            cfg = cfg.with_uniform_sinr(db_to_linear(db));
            overrides.insert("sinr_db".into(), db.to_string());
        }
        cfg.check()?;
        Ok(Loaded { cfg, source, overrides })
    }
}

impl SolverArgs {
    pub fn options(&self, overrides: &mut BTreeMap<String, String>) -> Result<DesignOptions, Failure> {
        let mut opts = DesignOptions::default();
        if self.direct {
            opts.mode = SubspaceMode::Direct;
            overrides.insert("mode".into(), "direct".into());
        }
        if let Some(tol) = self.tol {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(Failure::Config(format!("--tol must be positive, got {tol}")));
            }
            opts.settings.abs_tol = tol;
            opts.settings.rel_tol = tol;
            overrides.insert("tol".into(), tol.to_string());
        }
        if self.no_extract {
            opts.extract_rank_one = false;
            overrides.insert("extract_rank_one".into(), "false".into());
        }
        Ok(opts)
    }
}
