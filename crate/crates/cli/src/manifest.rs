use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nfisac_core::io::write_atomic;
use serde::Serialize;

use crate::failure::Failure;

pub const GIT_DESCRIBE: &str = env!("NFISAC_GIT_DESCRIBE");

/// Provenance record written next to every output file as `<output>.manifest.json`.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub scenario: Option<String>,
    pub overrides: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub wall_time_s: f64,
    pub diagnostics: serde_json::Value,
    pub build: String,
    pub version: &'static str,
}

pub struct Run {
    start: Instant,
    manifest: RunManifest,
}

impl Run {
    pub fn start(argv: &[String], scenario: Option<String>, overrides: BTreeMap<String, String>) -> Self {
        Self {
            start: Instant::now(),
            manifest: RunManifest {
                command: argv.to_vec(),
                scenario,
                overrides,
                outputs: Vec::new(),
                wall_time_s: 0.0,
                diagnostics: serde_json::Value::Null,
                build: GIT_DESCRIBE.to_string(),
                version: env!("CARGO_PKG_VERSION"),
            },
        }
    }

    pub fn set_diagnostics(&mut self, d: impl Serialize) {
        self.manifest.diagnostics = serde_json::to_value(d).unwrap_or(serde_json::Value::Null);
    }

    /// Writes `bytes` to `path` atomically and records it as an output.
    pub fn write(&mut self, path: &Path, bytes: &[u8]) -> Result<(), Failure> {
        write_atomic(path, bytes)?;
        self.manifest.outputs.push(path.display().to_string());
        Ok(())
    }

    /// Writes one manifest per recorded output.
    pub fn finish(mut self) -> Result<(), Failure> {
        self.manifest.wall_time_s = self.start.elapsed().as_secs_f64();
        let mut text = serde_json::to_string_pretty(&self.manifest).map_err(|e| Failure::Config(e.to_string()))?;
        text.push('\n');
        for out in &self.manifest.outputs {
            write_atomic(&manifest_path(Path::new(out)), text.as_bytes())?;
        }
        Ok(())
    }
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}
