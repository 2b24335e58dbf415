//! JSON reports and TSV sidecars.
//!
//! Reports carry no timestamps or host details, so identical inputs give
//! identical bytes.

use std::fmt::Display;
use std::path::Path;

use serde::Serialize;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StageState {
    Ok,
    Failed,
    Skipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageStatus {
    pub name: String,
    pub state: StageState,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// Ordered log of stage outcomes.
#[derive(Debug, Clone, Default, Serialize)]
#[serde(transparent)]
pub struct Stages(pub Vec<StageStatus>);

impl Stages {
    pub fn ok(&mut self, name: impl Into<String>) {
        self.push(name, StageState::Ok, None);
    }

    pub fn failed(&mut self, name: impl Into<String>, detail: impl Display) {
        self.push(name, StageState::Failed, Some(detail.to_string()));
    }

    pub fn skipped(&mut self, name: impl Into<String>, detail: impl Display) {
        self.push(name, StageState::Skipped, Some(detail.to_string()));
    }

    pub fn any_failed(&self) -> bool {
        self.0.iter().any(|s| s.state == StageState::Failed)
    }

    fn push(&mut self, name: impl Into<String>, state: StageState, detail: Option<String>) {
        self.0.push(StageStatus {
            name: name.into(),
            state,
            detail,
        });
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report<T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    /// The configuration exactly as resolved for this run.
    pub config: serde_json::Value,
    pub stages: Stages,
    pub result: T,
}

impl<T: Serialize> Report<T> {
    pub fn new(command: impl Into<String>, config: &impl Serialize, stages: Stages, result: T) -> Result<Self> {
        Ok(Self {
            tool: "halluprobe",
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            config: serde_json::to_value(config).map_err(|e| CliError::Config(e.to_string()))?,
            stages,
            result,
        })
    }
}

fn write_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Write {
        path: path.to_path_buf(),
        source,
    }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(write_err(dir))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    std::fs::write(path, text).map_err(write_err(path))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Core(e.into()))?;
    write_text(path, &(text + "\n"))
}

/// Renders a header plus rows as tab-separated text.
pub fn tsv<R, C>(header: &[&str], rows: R) -> String
where
    R: IntoIterator<Item = C>,
    C: IntoIterator,
    C::Item: Display,
{
    let mut out = header.join("\t");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(|c| c.to_string()).collect();
        out.push_str(&cells.join("\t"));
        out.push('\n');
    }
    out
}

/// Formats an optional float with full round-trip precision, `-` when absent.
pub fn opt_f64(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:?}"))
}
