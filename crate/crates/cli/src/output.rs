//! CSV rows, run manifests and where they go.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

use crate::config::{ExperimentConfig, Format};

/// Bumped whenever a command's CSV columns change.
pub const CSV_SCHEMA: u32 = 1;

/// CSV text with a versioned comment line and a column header.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(command: &str, columns: &[&str]) -> Self {
        let mut text = String::new();
        let _ = writeln!(
            text,
            "# stepwalk {} {command} schema={CSV_SCHEMA}",
            env!("CARGO_PKG_VERSION")
        );
        text.push_str(&columns.join(","));
        text.push('\n');
        Self { text }
    }

    pub fn row(&mut self, fields: &[&dyn std::fmt::Display]) {
        for (i, f) in fields.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            let _ = write!(self.text, "{f}");
        }
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub artifact: &'static str,
    pub version: &'static str,
    pub csv_schema: u32,
    pub command: String,
    pub config: ExperimentConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_secs: Option<f64>,
    pub replicate_seeds: Vec<u64>,
    pub checks_passed: bool,
    pub aggregates: Value,
}

/// Everything a command produced.
pub struct Outcome {
    pub csv: Option<Csv>,
    pub aggregates: Value,
    pub replicate_seeds: Vec<u64>,
    /// `false` if any check the command makes failed.
    pub pass: bool,
}

/// `x.csv` -> `x.manifest.json`.
fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

fn write_text(target: Option<&Path>, text: &str) -> Result<()> {
    match target {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

/// CSV format: rows to `--out` (or stdout) and, with `--out`, the manifest
/// next to them. JSON format: the manifest alone.
pub fn emit(
    command: &str,
    config: &ExperimentConfig,
    outcome: Outcome,
    wall_time: Option<f64>,
) -> Result<()> {
    let manifest = RunManifest {
        artifact: "stepwalk",
        version: env!("CARGO_PKG_VERSION"),
        csv_schema: CSV_SCHEMA,
        command: command.to_string(),
        config: config.clone(),
        wall_time_secs: wall_time,
        replicate_seeds: outcome.replicate_seeds,
        checks_passed: outcome.pass,
        aggregates: outcome.aggregates,
    };
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    let out = config.output.as_deref();
    match (config.format, outcome.csv) {
        (Format::Csv, Some(csv)) => {
            write_text(out, &csv.into_string())?;
            if let Some(path) = out {
                write_text(Some(&manifest_path(path)), &json)?;
            }
        }
        _ => write_text(out, &json)?,
    }
    Ok(())
}
