use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Subcommand;
use nfisac_core::scenario::ScenarioFile;
use nfisac_core::{presets, SensingNoise};

use crate::failure::Failure;
use crate::manifest::Run;

#[derive(Subcommand, Debug)]
pub enum PresetCommand {
    /// Print the preset names.
    List,
    /// Write a preset as a scenario JSON file, or to stdout without `--out`.
    Dump {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub fn run(cmd: PresetCommand, argv: &[String]) -> Result<ExitCode, Failure> {
    match cmd {
        PresetCommand::List => {
            for name in presets::NAMES {
                println!("{name}");
            }
        }
        PresetCommand::Dump { name, out } => {
            let cfg = presets::by_name(&name).ok_or_else(|| {
                Failure::Config(format!("unknown preset {name:?}; known: {}", presets::NAMES.join(", ")))
            })?;
            debug_assert!(matches!(cfg.sensing_noise, SensingNoise::Scalar(_)));
            let text = ScenarioFile::from_config(&cfg, None).to_json();
            match out {
                None => print!("{text}"),
                Some(path) => {
                    let mut run = Run::start(argv, Some(format!("preset:{name}")), BTreeMap::new());
                    run.write(&path, text.as_bytes())?;
                    run.finish()?;
                }
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
