//! Study configuration files.
//!
//! One TOML document per study, selected by its `study` key. Relative
//! paths resolve against the directory holding the config file. Any key
//! can be overridden from the command line with `--set dotted.key=value`.

use std::path::{Path, PathBuf};

use halluprobe_core::hpdetect::HpThresholds;
use halluprobe_core::nhestimate::{DEFAULT_EPSILON, DEFAULT_NGRAM, DEFAULT_THRESHOLD};
use halluprobe_core::noiseforge::{NoisePattern, DEFAULT_REPEATS, DEFAULT_UNIT_COUNT};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "study", rename_all = "lowercase")]
pub enum StudyConfig {
    Hp(HpStudyConfig),
    Nh(NhStudyConfig),
    Amplification(AmplificationStudyConfig),
}

impl StudyConfig {
    pub fn name(&self) -> &'static str {
        match self {
            StudyConfig::Hp(_) => "hp",
            StudyConfig::Nh(_) => "nh",
            StudyConfig::Amplification(_) => "amplification",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TokenConfig {
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default = "default_token_count")]
    pub count: usize,
    pub seed: u64,
}

fn default_top_k() -> usize {
    100
}

fn default_token_count() -> usize {
    30
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    /// `manifest:FILE` or `cmd:"PROGRAM ARGS"`.
    pub spec: String,
    #[serde(default = "default_max_inflight")]
    pub max_inflight: usize,
    #[serde(default)]
    pub env_passthrough: Vec<String>,
    /// Sampling decoders; perturbation studies refuse them.
    #[serde(default)]
    pub nondeterministic: bool,
}

fn default_max_inflight() -> usize {
    16
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HpStudyConfig {
    /// Directory with `src.txt` and `tgt.txt`, one line per sample ID.
    pub corpus: PathBuf,
    /// Run manifest directory.
    pub manifest: PathBuf,
    pub backend: BackendConfig,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<String>,
    /// Metric used for the sweeps; defaults to BLEU when listed, else the first metric.
    #[serde(default)]
    pub sweep_metric: Option<String>,
    #[serde(default)]
    pub lowercase: bool,
    pub k: usize,
    pub set_seed: u64,
    #[serde(default = "default_min_exclusions")]
    pub min_exclusions: usize,
    /// Lower bound on memorization values for the random set; unset means no bound.
    #[serde(default)]
    pub floor: Option<f64>,
    pub tokens: TokenConfig,
    #[serde(default)]
    pub thresholds: HpThresholds,
    #[serde(default = "default_floor_sweep")]
    pub floor_sweep: Vec<f64>,
    #[serde(default = "default_exclusion_sweep")]
    pub exclusion_sweep: Vec<usize>,
    /// Directory of `.attn` files.
    #[serde(default)]
    pub attention: Option<PathBuf>,
    #[serde(default = "default_log_base")]
    pub log_base: String,
}

fn default_metrics() -> Vec<String> {
    vec!["chrf".into(), "bleu".into(), "accuracy".into()]
}

fn default_min_exclusions() -> usize {
    halluprobe_core::memorization::DEFAULT_MIN_EXCLUSIONS
}

pub fn default_floor_sweep() -> Vec<f64> {
    (0..10).map(|i| f64::from(i) / 10.0).collect()
}

fn default_exclusion_sweep() -> Vec<usize> {
    vec![2, 3, 4]
}

fn default_log_base() -> String {
    "e".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NhStudyConfig {
    /// Clean training corpus directory (`src.txt`, `tgt.txt`).
    pub clean: PathBuf,
    /// Invalid-reference set directory.
    pub irs: PathBuf,
    /// Donor corpus for unrelated sentences; defaults to the clean corpus.
    #[serde(default)]
    pub donor: Option<PathBuf>,
    #[serde(default = "default_patterns")]
    pub patterns: Vec<NoisePattern>,
    #[serde(default = "default_unit_count")]
    pub unit_count: usize,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    pub seed: u64,
    pub shuffle_seed: u64,
    /// Model translations laid out as `DIR/<pattern>/{irs,vrs,test}.{src,hyp,ref}`.
    #[serde(default)]
    pub translations: Option<PathBuf>,
    #[serde(default)]
    pub annotations: Option<PathBuf>,
    #[serde(default = "default_top_bigrams")]
    pub top_bigrams: usize,
}

fn default_patterns() -> Vec<NoisePattern> {
    NoisePattern::ALL.to_vec()
}

fn default_unit_count() -> usize {
    DEFAULT_UNIT_COUNT
}

fn default_repeats() -> usize {
    DEFAULT_REPEATS
}

fn default_top_bigrams() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplificationRun {
    pub name: String,
    /// `source<TAB>translation` or `source<TAB>translation<TAB>score` lines.
    pub pairs: PathBuf,
    #[serde(default)]
    pub scores: Option<PathBuf>,
    #[serde(default)]
    pub baseline: bool,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub t: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplificationStudyConfig {
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_ngram")]
    pub n: usize,
    #[serde(default = "default_threshold")]
    pub t: usize,
    pub runs: Vec<AmplificationRun>,
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

fn default_ngram() -> usize {
    DEFAULT_NGRAM
}

fn default_threshold() -> usize {
    DEFAULT_THRESHOLD
}

/// Applies `key=value` overrides to a parsed document. Values are read as
/// TOML literals when they parse as such, otherwise as plain strings.
pub fn apply_overrides(doc: &mut toml::Table, overrides: &[String]) -> Result<()> {
    for ov in overrides {
        let (key, raw) = ov
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("override `{ov}` is not of the form key=value")))?;
        let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(raw.to_string()));
        let parts: Vec<&str> = key.trim().split('.').collect();
        let mut table = &mut *doc;
        for part in &parts[..parts.len() - 1] {
            let entry = table
                .entry(part.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            table = entry
                .as_table_mut()
                .ok_or_else(|| CliError::Config(format!("`{part}` in `{key}` is not a table")))?;
        }
        table.insert(parts[parts.len() - 1].to_string(), value);
    }
    Ok(())
}

pub fn parse_config(text: &str, overrides: &[String]) -> Result<StudyConfig> {
    let mut doc: toml::Table = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    apply_overrides(&mut doc, overrides)?;
    toml::Value::Table(doc)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))
}

/// Reads a config file. Returns the config as written (after overrides)
/// and a copy with paths resolved against the file's directory.
pub fn load_config(path: &Path, overrides: &[String]) -> Result<(StudyConfig, StudyConfig)> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::ConfigFile {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })?;
    let cfg = parse_config(&text, overrides)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let resolved = resolve_paths(cfg.clone(), base);
    Ok((cfg, resolved))
}

fn join(base: &Path, p: PathBuf) -> PathBuf {
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

pub fn resolve_paths(cfg: StudyConfig, base: &Path) -> StudyConfig {
    let j = |p: PathBuf| join(base, p);
    match cfg {
        StudyConfig::Hp(mut c) => {
            c.corpus = j(c.corpus);
            c.manifest = j(c.manifest);
            c.attention = c.attention.map(j);
            if let Some(path) = c.backend.spec.strip_prefix("manifest:") {
                c.backend.spec = format!("manifest:{}", j(PathBuf::from(path)).display());
            }
            StudyConfig::Hp(c)
        }
        StudyConfig::Nh(mut c) => {
            c.clean = j(c.clean);
            c.irs = j(c.irs);
            c.donor = c.donor.map(j);
            c.translations = c.translations.map(j);
            c.annotations = c.annotations.map(j);
            StudyConfig::Nh(c)
        }
        StudyConfig::Amplification(mut c) => {
            for r in &mut c.runs {
                r.pairs = j(std::mem::take(&mut r.pairs));
                r.scores = r.scores.take().map(j);
            }
            StudyConfig::Amplification(c)
        }
    }
}
