use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportCheck {
    pub name: String,
    pub pass: bool,
    /// A failed gating check turns the exit code to 1.
    pub gating: bool,
    pub detail: String,
}

/// Everything one command writes. Wall-clock timing goes to stderr so that
/// reruns stay byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub version: String,
    pub seed: u64,
    /// The effective configuration, after `--seed`.
    pub config: RunConfig,
    /// The config file as read.
    pub config_text: String,
    pub result: serde_json::Value,
    pub checks: Vec<ReportCheck>,
    pub warnings: Vec<String>,
}

impl RunReport {
    pub fn new(command: &str, config: &RunConfig, config_text: &str) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.run.seed(),
            config: config.clone(),
            config_text: config_text.to_string(),
            result: serde_json::Value::Null,
            checks: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn check(&mut self, name: impl Into<String>, pass: bool, gating: bool, detail: impl Into<String>) {
        self.checks.push(ReportCheck {
            name: name.into(),
            pass,
            gating,
            detail: detail.into(),
        });
    }

    pub fn warn(&mut self, w: impl Into<String>) {
        self.warnings.push(w.into());
    }

    pub fn set_result<T: Serialize>(&mut self, value: &T) {
        self.result = serde_json::to_value(value).expect("result serializes");
    }

    pub fn gating_failures(&self) -> impl Iterator<Item = &ReportCheck> {
        self.checks.iter().filter(|c| c.gating && !c.pass)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Both,
}

impl Format {
    fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }

    fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }
}

/// Writes `<command>-<label>.json` and `.csv` and returns the paths.
pub fn write_outputs(dir: &Path, label: &str, report: &RunReport, csv: &str, format: Format) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir)?;
    let stem = format!("{}-{}", report.command, label);
    let mut out = Vec::new();
    if format.json() {
        let p = dir.join(format!("{stem}.json"));
        std::fs::write(&p, report.to_json())?;
        out.push(p);
    }
    if format.csv() {
        let p = dir.join(format!("{stem}.csv"));
        std::fs::write(&p, csv)?;
        out.push(p);
    }
    Ok(out)
}
