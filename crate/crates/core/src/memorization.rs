//! Leave-out memorization values over a family of models trained on random
//! subsets of one corpus.
//!
//! For sample `i`, the memorization value is the mean metric score of the
//! models whose training subset contained `i`, minus the mean score of the
//! models whose subset excluded it. Models are trained elsewhere; this
//! module consumes a [`RunManifest`] describing subset membership and each
//! model's outputs on the corpus.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{read_lines, write_lines};
use crate::error::{Error, Result};
use crate::metrics::Metric;

pub const DEFAULT_MIN_EXCLUSIONS: usize = 2;

/// `t x n` table: row `k` marks the samples model `k` was trained on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Membership {
    n: usize,
    rows: Vec<Vec<bool>>,
}

impl Membership {
    /// Builds a table from per-model lists of sample IDs.
    pub fn from_id_lists(n: usize, lists: &[Vec<usize>]) -> Result<Self> {
        let mut rows = Vec::with_capacity(lists.len());
        for (k, ids) in lists.iter().enumerate() {
            let mut row = vec![false; n];
            for &id in ids {
                if id >= n {
                    return Err(Error::InvalidArgument(format!(
                        "model {k}: sample id {id} out of range for corpus of {n}"
                    )));
                }
                if std::mem::replace(&mut row[id], true) {
                    return Err(Error::InvalidArgument(format!(
                        "model {k}: sample id {id} listed twice"
                    )));
                }
            }
            rows.push(row);
        }
        Ok(Self { n, rows })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t(&self) -> usize {
        self.rows.len()
    }

    pub fn contains(&self, model: usize, sample: usize) -> bool {
        self.rows[model][sample]
    }

    pub fn row(&self, model: usize) -> &[bool] {
        &self.rows[model]
    }

    pub fn row_ids(&self, model: usize) -> Vec<usize> {
        self.rows[model]
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    pub fn subset_size(&self, model: usize) -> usize {
        self.rows[model].iter().filter(|&&b| b).count()
    }

    /// Number of models that excluded each sample.
    pub fn exclusion_counts(&self) -> Vec<usize> {
        (0..self.n)
            .map(|i| self.rows.iter().filter(|r| !r[i]).count())
            .collect()
    }
}

/// Draws `t` independent uniform subsets of size `m` from `0..n`.
pub fn plan_subsets(n: usize, t: usize, m: usize, seed: u64) -> Result<Membership> {
    if t < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 trials, got {t}")));
    }
    if m == 0 || m >= n {
        return Err(Error::InvalidArgument(format!(
            "subset size must satisfy 0 < m < n, got m={m}, n={n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..t)
        .map(|_| {
            let mut row = vec![false; n];
            for i in index::sample(&mut rng, n, m) {
                row[i] = true;
            }
            row
        })
        .collect();
    Ok(Membership { n, rows })
}

/// Per-model outputs on the corpus, indexed by sample ID. `None` marks a
/// sample the model was not evaluated on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelOutputs {
    Hypotheses(Vec<Option<String>>),
    Scores(Vec<Option<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub n: usize,
    pub t: usize,
    pub m: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<String>,
    #[serde(default = "default_membership_file")]
    pub membership: String,
    #[serde(default = "default_index_file")]
    pub index: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub references: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub models: Vec<ModelFiles>,
}

fn default_membership_file() -> String {
    "membership.txt".into()
}

fn default_index_file() -> String {
    "index.txt".into()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFiles {
    Hypotheses(String),
    Scores(String),
}

/// Subset membership plus every model's outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub header: ManifestHeader,
    pub membership: Membership,
    pub outputs: Vec<ModelOutputs>,
    /// Target sentences by sample ID, when the manifest ships them.
    pub references: Option<Vec<String>>,
}

impl RunManifest {
    pub fn new(header: ManifestHeader, membership: Membership, outputs: Vec<ModelOutputs>) -> Result<Self> {
        let m = Self {
            header,
            membership,
            outputs,
            references: None,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.header.n
    }

    pub fn t(&self) -> usize {
        self.header.t
    }

    pub fn validate(&self) -> Result<()> {
        let h = &self.header;
        if h.t < 2 {
            return Err(Error::Invariant(format!("manifest declares t={} (< 2)", h.t)));
        }
        if self.membership.n() != h.n || self.membership.t() != h.t {
            return Err(Error::Invariant(format!(
                "membership table is {}x{}, header says t={} n={}",
                self.membership.t(),
                self.membership.n(),
                h.t,
                h.n
            )));
        }
        for k in 0..h.t {
            let size = self.membership.subset_size(k);
            if size != h.m {
                return Err(Error::Invariant(format!(
                    "model {k} trained on {size} samples, header says m={}",
                    h.m
                )));
            }
        }
        if self.outputs.len() != h.t {
            return Err(Error::Invariant(format!(
                "{} model output sets for t={}",
                self.outputs.len(),
                h.t
            )));
        }
        for (k, out) in self.outputs.iter().enumerate() {
            let len = match out {
                ModelOutputs::Hypotheses(v) => v.len(),
                ModelOutputs::Scores(v) => {
                    if let Some(bad) = v.iter().flatten().find(|s| !s.is_finite()) {
                        return Err(Error::Invariant(format!("model {k}: non-finite score {bad}")));
                    }
                    v.len()
                }
            };
            if len != h.n {
                return Err(Error::Invariant(format!(
                    "model {k}: outputs cover {len} samples, n={}",
                    h.n
                )));
            }
        }
        if let Some(refs) = &self.references {
            if refs.len() != h.n {
                return Err(Error::Invariant(format!("{} references for n={}", refs.len(), h.n)));
            }
        }
        Ok(())
    }

    /// Scores every (model, sample) cell. Hypotheses are scored against
    /// `refs` with `metric`; score-bearing models are taken as-is.
    pub fn score_matrix(&self, refs: Option<&[String]>, metric: &Metric) -> Result<Vec<Vec<Option<f64>>>> {
        let refs = refs.or(self.references.as_deref());
        self.outputs
            .iter()
            .enumerate()
            .map(|(k, out)| match out {
                ModelOutputs::Scores(s) => Ok(s.clone()),
                ModelOutputs::Hypotheses(hyps) => {
                    let refs = refs.ok_or_else(|| {
                        Error::InvalidArgument(format!("model {k} carries hypotheses but no references were given"))
                    })?;
                    if refs.len() != self.n() {
                        return Err(Error::InvalidArgument(format!(
                            "{} references for a corpus of {}",
                            refs.len(),
                            self.n()
                        )));
                    }
                    Ok(hyps
                        .par_iter()
                        .zip(refs.par_iter())
                        .map(|(h, r)| h.as_ref().map(|h| metric.score(h, r)))
                        .collect())
                }
            })
            .collect()
    }

    /// Loads `manifest.json` and the files it names from `dir`.
    pub fn load(dir: &Path) -> Result<Self> {
        let header_path = dir.join("manifest.json");
        let text = std::fs::read_to_string(&header_path).map_err(|e| Error::io(&header_path, e))?;
        let mut header: ManifestHeader = serde_json::from_str(&text)?;

        let membership_path = dir.join(&header.membership);
        let lists = read_lines(&membership_path)?
            .iter()
            .enumerate()
            .map(|(i, line)| parse_ids(line).map_err(|msg| Error::parse(&membership_path, i + 1, msg)))
            .collect::<Result<Vec<_>>>()?;
        if lists.len() != header.t {
            return Err(Error::parse(
                &membership_path,
                lists.len(),
                format!("{} membership rows, header says t={}", lists.len(), header.t),
            ));
        }
        let membership = Membership::from_id_lists(header.n, &lists)?;

        let index_path = dir.join(&header.index);
        let index = read_lines(&index_path)?
            .iter()
            .enumerate()
            .map(|(i, l)| {
                l.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::parse(&index_path, i + 1, e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut seen = HashSet::new();
        for (i, &id) in index.iter().enumerate() {
            if id >= header.n || !seen.insert(id) {
                return Err(Error::parse(
                    &index_path,
                    i + 1,
                    format!("bad or repeated sample id {id}"),
                ));
            }
        }

        if header.models.is_empty() {
            header.models = (0..header.t)
                .map(|k| discover_model_files(dir, k))
                .collect::<Result<_>>()?;
        }
        let outputs = header
            .models
            .iter()
            .map(|files| load_outputs(dir, files, &index, header.n))
            .collect::<Result<Vec<_>>>()?;

        let references = match &header.references {
            Some(name) => Some(read_lines(&dir.join(name))?),
            None => None,
        };

        let manifest = Self {
            header,
            membership,
            outputs,
            references,
        };
        manifest.validate()?;
        Ok(manifest)
    }

    /// Writes the manifest with every model evaluated on all `n` samples.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut header = self.header.clone();
        header.models = self
            .outputs
            .iter()
            .enumerate()
            .map(|(k, o)| match o {
                ModelOutputs::Hypotheses(_) => ModelFiles::Hypotheses(format!("model{k}.hyp")),
                ModelOutputs::Scores(_) => ModelFiles::Scores(format!("model{k}.scores")),
            })
            .collect();
        if self.references.is_some() && header.references.is_none() {
            header.references = Some("refs.txt".into());
        }

        write_lines(
            &dir.join(&header.membership),
            (0..self.t()).map(|k| {
                self.membership
                    .row_ids(k)
                    .iter()
                    .map(usize::to_string)
                    .collect::<Vec<_>>()
                    .join(" ")
            }),
        )?;
        write_lines(&dir.join(&header.index), (0..self.n()).map(|i| i.to_string()))?;
        for (files, out) in header.models.iter().zip(&self.outputs) {
            match (files, out) {
                (ModelFiles::Hypotheses(name), ModelOutputs::Hypotheses(h)) => {
                    write_lines(&dir.join(name), h.iter().map(|x| x.as_deref().unwrap_or("")))?
                }
                (ModelFiles::Scores(name), ModelOutputs::Scores(s)) => write_lines(
                    &dir.join(name),
                    s.iter()
                        .map(|x| x.map(|v| format!("{v:?}")).unwrap_or_else(|| "nan".into())),
                )?,
                _ => unreachable!(),
            }
        }
        if let (Some(name), Some(refs)) = (&header.references, &self.references) {
            write_lines(&dir.join(name), refs)?;
        }
        let path = dir.join("manifest.json");
        let json = serde_json::to_string_pretty(&header)?;
        std::fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))
    }
}

fn parse_ids(line: &str) -> std::result::Result<Vec<usize>, String> {
    line.split_whitespace()
        .map(|tok| tok.parse::<usize>().map_err(|e| format!("bad sample id `{tok}`: {e}")))
        .collect()
}

fn discover_model_files(dir: &Path, k: usize) -> Result<ModelFiles> {
    let hyp = format!("model{k}.hyp");
    let scores = format!("model{k}.scores");
    if dir.join(&hyp).exists() {
        Ok(ModelFiles::Hypotheses(hyp))
    } else if dir.join(&scores).exists() {
        Ok(ModelFiles::Scores(scores))
    } else {
        Err(Error::InvalidArgument(format!(
            "no outputs for model {k} in {} (expected {hyp} or {scores})",
            dir.display()
        )))
    }
}

fn load_outputs(dir: &Path, files: &ModelFiles, index: &[usize], n: usize) -> Result<ModelOutputs> {
    let (name, is_hyp) = match files {
        ModelFiles::Hypotheses(f) => (f, true),
        ModelFiles::Scores(f) => (f, false),
    };
    let path: PathBuf = dir.join(name);
    let lines = read_lines(&path)?;
    if lines.len() != index.len() {
        return Err(Error::parse(
            &path,
            lines.len(),
            format!("{} lines but the index lists {} samples", lines.len(), index.len()),
        ));
    }
    if is_hyp {
        let mut out = vec![None; n];
        for (&id, line) in index.iter().zip(lines) {
            out[id] = Some(line);
        }
        Ok(ModelOutputs::Hypotheses(out))
    } else {
        let mut out = vec![None; n];
        for (i, (&id, line)) in index.iter().zip(&lines).enumerate() {
            let v: f64 = line
                .trim()
                .parse()
                .map_err(|e| Error::parse(&path, i + 1, format!("bad score: {e}")))?;
            out[id] = v.is_finite().then_some(v);
        }
        Ok(ModelOutputs::Scores(out))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemRecord {
    pub sample_id: usize,
    /// `None` unless the sample was both included and excluded at least once.
    pub mem_value: Option<f64>,
    pub n_included: usize,
    pub n_excluded: usize,
    pub eligible: bool,
}

impl MemRecord {
    pub fn is_eligible(&self, min_exclusions: usize) -> bool {
        self.mem_value.is_some() && self.n_excluded >= min_exclusions
    }
}

/// Memorization values from an explicit `t x n` score matrix.
pub fn mem_values_from_scores(
    membership: &Membership,
    scores: &[Vec<Option<f64>>],
    min_exclusions: usize,
) -> Result<Vec<MemRecord>> {
    if min_exclusions == 0 {
        return Err(Error::InvalidArgument("min_exclusions must be at least 1".into()));
    }
    if scores.len() != membership.t() || scores.iter().any(|r| r.len() != membership.n()) {
        return Err(Error::Invariant("score matrix shape does not match membership".into()));
    }
    let records = (0..membership.n())
        .into_par_iter()
        .map(|i| {
            let (mut inc_sum, mut inc_n, mut exc_sum, mut exc_n) = (0.0, 0usize, 0.0, 0usize);
            for (k, row) in scores.iter().enumerate() {
                let Some(s) = row[i] else { continue };
                if membership.contains(k, i) {
                    inc_sum += s;
                    inc_n += 1;
                } else {
                    exc_sum += s;
                    exc_n += 1;
                }
            }
            let mem_value = (inc_n > 0 && exc_n > 0).then(|| inc_sum / inc_n as f64 - exc_sum / exc_n as f64);
            MemRecord {
                sample_id: i,
                mem_value,
                n_included: inc_n,
                n_excluded: exc_n,
                eligible: mem_value.is_some() && exc_n >= min_exclusions,
            }
        })
        .collect();
    Ok(records)
}

pub fn compute_mem_values(
    manifest: &RunManifest,
    refs: Option<&[String]>,
    metric: &Metric,
    min_exclusions: usize,
) -> Result<Vec<MemRecord>> {
    manifest.validate()?;
    let scores = manifest.score_matrix(refs, metric)?;
    mem_values_from_scores(&manifest.membership, &scores, min_exclusions)
}

/// Recomputes eligibility for a different exclusion threshold.
pub fn reflag(records: &[MemRecord], min_exclusions: usize) -> Vec<MemRecord> {
    records
        .iter()
        .map(|r| MemRecord {
            eligible: r.is_eligible(min_exclusions),
            ..r.clone()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSets {
    pub memorized: Vec<usize>,
    pub random: Vec<usize>,
    pub k: usize,
}

/// Top-`k` eligible samples by memorization value (lower ID wins ties) and
/// a uniform sample of `k` from the remaining eligible samples whose value
/// is at least `floor`.
pub fn select_sets(records: &[MemRecord], k: usize, seed: u64, floor: f64) -> Result<ComparisonSets> {
    if k == 0 {
        return Err(Error::InvalidArgument("set size k must be positive".into()));
    }
    let mut eligible: Vec<(usize, f64)> = records
        .iter()
        .filter(|r| r.eligible)
        .filter_map(|r| r.mem_value.map(|v| (r.sample_id, v)))
        .collect();
    if eligible.len() < 2 * k {
        return Err(Error::Insufficient(format!(
            "{} eligible samples, need at least {} for two sets of {k}",
            eligible.len(),
            2 * k
        )));
    }
    eligible.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let memorized: Vec<usize> = eligible[..k].iter().map(|&(id, _)| id).collect();

    let mut pool: Vec<usize> = eligible[k..]
        .iter()
        .filter(|&&(_, v)| v >= floor)
        .map(|&(id, _)| id)
        .collect();
    pool.sort_unstable();
    if pool.len() < k {
        return Err(Error::Insufficient(format!(
            "only {} samples remain with memorization value >= {floor}, need {k}",
            pool.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut random: Vec<usize> = index::sample(&mut rng, pool.len(), k)
        .into_iter()
        .map(|i| pool[i])
        .collect();
    random.sort_unstable();
    Ok(ComparisonSets { memorized, random, k })
}
