//! Natural-hallucination evaluation over translations of the invalid
//! reference set (IRS), the valid reference set (VRS) and a test set.
//!
//! Human NH/OH judgments are ingested from annotation files. Where none
//! exist, the summary falls back to automated proxies and labels every
//! such cell as a proxy.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use crate::corpus::{normalize_ws, read_lines};
use crate::error::{Error, Result};
use crate::metrics::{corpus_bleu_str, words};
use crate::ngram::ngram_counts;

pub const DEFAULT_OSCILLATION_N: usize = 4;
pub const DEFAULT_OSCILLATION_MIN_COUNT: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SetTag {
    Irs,
    Vrs,
    Test,
    Other,
}

impl SetTag {
    fn file_stem(self) -> &'static str {
        match self {
            SetTag::Irs => "irs",
            SetTag::Vrs => "vrs",
            SetTag::Test => "test",
            SetTag::Other => "other",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationEntry {
    pub source: String,
    pub translation: String,
    pub reference: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationSet {
    pub tag: SetTag,
    pub entries: Vec<TranslationEntry>,
}

impl TranslationSet {
    pub fn new(tag: SetTag, entries: Vec<TranslationEntry>) -> Self {
        Self { tag, entries }
    }

    /// Builds a set from aligned columns; `references` may be absent.
    pub fn from_columns(
        tag: SetTag,
        sources: Vec<String>,
        translations: Vec<String>,
        references: Option<Vec<String>>,
    ) -> Result<Self> {
        if sources.len() != translations.len() || references.as_ref().is_some_and(|r| r.len() != sources.len()) {
            return Err(Error::InvalidArgument(format!(
                "{tag:?} set columns have different lengths"
            )));
        }
        let mut refs = references.map(|r| r.into_iter());
        let entries = sources
            .into_iter()
            .zip(translations)
            .map(|(source, translation)| TranslationEntry {
                source,
                translation,
                reference: refs.as_mut().and_then(|r| r.next()),
            })
            .collect();
        Ok(Self { tag, entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn has_references(&self) -> bool {
        !self.entries.is_empty() && self.entries.iter().all(|e| e.reference.is_some())
    }

    /// Corpus BLEU on a 0-100 scale, if every entry has a reference.
    pub fn bleu(&self) -> Option<f64> {
        if !self.has_references() {
            return None;
        }
        let hyps: Vec<&str> = self.entries.iter().map(|e| e.translation.as_str()).collect();
        let refs: Vec<&str> = self.entries.iter().map(|e| e.reference.as_deref().unwrap()).collect();
        corpus_bleu_str(&hyps, &refs).ok().map(|b| 100.0 * b)
    }
}

/// Whitespace-normalized training targets for exact-match lookups.
#[derive(Debug, Clone, Default)]
pub struct TargetIndex {
    targets: HashSet<String>,
}

impl TargetIndex {
    pub fn new<I, S>(targets: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            targets: targets.into_iter().map(|t| normalize_ws(t.as_ref())).collect(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(Self::new(read_lines(path)?))
    }

    pub fn contains(&self, sentence: &str) -> bool {
        self.targets.contains(&normalize_ws(sentence))
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

/// Percentage of translations that exactly copy some training target.
pub fn irs_repeats(translations: &TranslationSet, training_targets: &TargetIndex) -> f64 {
    if translations.is_empty() {
        return 0.0;
    }
    let hits = translations
        .entries
        .iter()
        .filter(|e| training_targets.contains(&e.translation))
        .count();
    100.0 * hits as f64 / translations.len() as f64
}

/// Distinct bigrams over the `L - 1` bigram slots; sentences under two tokens score 1.
pub fn sentence_unique_bigram_fraction(sentence: &str) -> f64 {
    let toks = words(sentence);
    if toks.len() < 2 {
        return 1.0;
    }
    ngram_counts(&toks, 2).len() as f64 / (toks.len() - 1) as f64
}

pub fn unique_bigram_fraction(translations: &TranslationSet) -> Result<f64> {
    if translations.is_empty() {
        return Err(Error::Insufficient("unique-bigram fraction of an empty set".into()));
    }
    let sum: f64 = translations
        .entries
        .par_iter()
        .map(|e| sentence_unique_bigram_fraction(&e.translation))
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    Ok(sum / translations.len() as f64)
}

/// Most frequent word `n`-grams pooled over the set; ties sort lexicographically.
pub fn top_ngram_counts(translations: &TranslationSet, n: usize, k: usize) -> Vec<(String, usize)> {
    let mut pooled: HashMap<String, usize> = HashMap::new();
    for e in &translations.entries {
        let toks = words(&e.translation);
        for (g, c) in ngram_counts(&toks, n) {
            *pooled.entry(g.join(" ")).or_insert(0) += c;
        }
    }
    let mut ranked: Vec<(String, usize)> = pooled.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(k);
    ranked
}

/// True iff some word `n`-gram occurs at least `min_count` times.
pub fn oscillation_flag(translation: &str, n: usize, min_count: usize) -> bool {
    let toks = words(translation);
    ngram_counts(&toks, n).values().any(|&c| c >= min_count)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryLabels {
    pub nh: bool,
    pub oh: bool,
    pub dh: bool,
}

impl EntryLabels {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.oh && !self.nh {
            return Err("OH without NH".into());
        }
        if self.dh && !self.nh {
            return Err("DH without NH".into());
        }
        Ok(())
    }
}

/// Human labels keyed by pattern name, then entry index within the IRS.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Annotations {
    pub by_pattern: BTreeMap<String, BTreeMap<usize, EntryLabels>>,
}

impl Annotations {
    /// Parses `pattern<TAB>entry_index<TAB>labels` lines where labels is a
    /// comma-separated subset of `NH,OH,DH` or `-`. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut out = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(Error::parse(origin, i + 1, "expected pattern, entry index and labels"));
            }
            let idx: usize = cols[1]
                .trim()
                .parse()
                .map_err(|e| Error::parse(origin, i + 1, format!("bad entry index: {e}")))?;
            let mut labels = EntryLabels::default();
            for l in cols[2].split(',').map(str::trim).filter(|l| !l.is_empty() && *l != "-") {
                match l.to_ascii_uppercase().as_str() {
                    "NH" => labels.nh = true,
                    "OH" => labels.oh = true,
                    "DH" => labels.dh = true,
                    other => return Err(Error::parse(origin, i + 1, format!("unknown label `{other}`"))),
                }
            }
            labels
                .validate()
                .map_err(|m| Error::Invariant(format!("{}:{}: {m}", origin.display(), i + 1)))?;
            let pattern = cols[0].trim().to_ascii_lowercase();
            if out.by_pattern.entry(pattern).or_default().insert(idx, labels).is_some() {
                return Err(Error::parse(origin, i + 1, format!("entry {idx} annotated twice")));
            }
        }
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn for_pattern(&self, pattern: &str) -> Option<&BTreeMap<usize, EntryLabels>> {
        self.by_pattern
            .get(&pattern.to_ascii_lowercase())
            .filter(|m| !m.is_empty())
    }
}

/// A table cell: a computed value, a value from an automated proxy, or missing input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Value(f64),
    Proxy(f64),
    Missing,
}

impl Cell {
    pub fn value(&self) -> Option<f64> {
        match *self {
            Cell::Value(v) | Cell::Proxy(v) => Some(v),
            Cell::Missing => None,
        }
    }

    pub fn is_proxy(&self) -> bool {
        matches!(self, Cell::Proxy(_))
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Value(v) => write!(f, "{v:.2}"),
            Cell::Proxy(v) => write!(f, "{v:.2} (PROXY)"),
            Cell::Missing => f.write_str("-"),
        }
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            Cell::Value(v) => s.serialize_f64(v),
            Cell::Proxy(v) => {
                let mut m = s.serialize_map(Some(2))?;
                m.serialize_entry("value", &v)?;
                m.serialize_entry("source", "PROXY")?;
                m.end()
            }
            Cell::Missing => s.serialize_str("-"),
        }
    }
}

/// Translations produced by one noise-trained model.
#[derive(Debug, Clone, Default)]
pub struct PatternTranslations {
    pub pattern: String,
    pub irs: Option<TranslationSet>,
    pub vrs: Option<TranslationSet>,
    pub test: Option<TranslationSet>,
    /// Targets of the corpus this model was trained on.
    pub training_targets: Option<TargetIndex>,
}

impl PatternTranslations {
    /// Reads `<set>.src`, `<set>.hyp` and optional `<set>.ref` for each of
    /// irs/vrs/test, plus an optional `train.tgt`. Missing sets stay `None`.
    pub fn load_dir(pattern: &str, dir: &Path) -> Result<Self> {
        let load = |tag: SetTag| -> Result<Option<TranslationSet>> {
            let stem = tag.file_stem();
            let src = dir.join(format!("{stem}.src"));
            let hyp = dir.join(format!("{stem}.hyp"));
            if !hyp.exists() {
                return Ok(None);
            }
            let translations = read_lines(&hyp)?;
            let sources = if src.exists() {
                read_lines(&src)?
            } else {
                return Err(Error::InvalidArgument(format!(
                    "{} has no matching {}",
                    hyp.display(),
                    src.display()
                )));
            };
            let ref_path = dir.join(format!("{stem}.ref"));
            let refs = if ref_path.exists() {
                Some(read_lines(&ref_path)?)
            } else {
                None
            };
            TranslationSet::from_columns(tag, sources, translations, refs).map(Some)
        };
        let train = dir.join("train.tgt");
        Ok(Self {
            pattern: pattern.to_string(),
            irs: load(SetTag::Irs)?,
            vrs: load(SetTag::Vrs)?,
            test: load(SetTag::Test)?,
            training_targets: if train.exists() {
                Some(TargetIndex::load(&train)?)
            } else {
                None
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub pattern: String,
    pub irs_bleu: Cell,
    pub vrs_bleu: Cell,
    pub test_bleu: Cell,
    pub irs_nh: Cell,
    pub irs_oh: Cell,
    pub irs_repeats: Cell,
    pub irs_unique_bigrams: Cell,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProxyParams {
    pub oscillation_n: usize,
    pub oscillation_min_count: usize,
}

impl Default for ProxyParams {
    fn default() -> Self {
        Self {
            oscillation_n: DEFAULT_OSCILLATION_N,
            oscillation_min_count: DEFAULT_OSCILLATION_MIN_COUNT,
        }
    }
}

fn percent(hits: usize, total: usize) -> f64 {
    100.0 * hits as f64 / total as f64
}

/// One row per noise pattern, in input order.
///
/// NH/OH cells come from annotations when the pattern has any; otherwise
/// OH is the share of oscillating translations and NH the share that
/// oscillate or copy a training target, both marked as proxies.
pub fn summarize(
    inputs: &[PatternTranslations],
    annotations: Option<&Annotations>,
    default_targets: Option<&TargetIndex>,
    proxy: ProxyParams,
) -> Result<Vec<SummaryRow>> {
    inputs
        .iter()
        .map(|p| {
            let bleu = |s: &Option<TranslationSet>| {
                s.as_ref()
                    .and_then(TranslationSet::bleu)
                    .map_or(Cell::Missing, Cell::Value)
            };
            let targets = p.training_targets.as_ref().or(default_targets);
            let irs = p.irs.as_ref().filter(|s| !s.is_empty());

            let irs_repeats = match (irs, targets) {
                (Some(s), Some(t)) => Cell::Value(irs_repeats(s, t)),
                _ => Cell::Missing,
            };
            let irs_unique_bigrams = match irs {
                Some(s) => Cell::Value(unique_bigram_fraction(s)?),
                None => Cell::Missing,
            };

            let labels = annotations.and_then(|a| a.for_pattern(&p.pattern));
            let (irs_nh, irs_oh) = match (irs, labels) {
                (None, _) => (Cell::Missing, Cell::Missing),
                (Some(s), Some(labels)) => {
                    if let Some(&bad) = labels.keys().find(|&&i| i >= s.len()) {
                        return Err(Error::InvalidArgument(format!(
                            "annotation for {} entry {bad}, but the IRS has {} entries",
                            p.pattern,
                            s.len()
                        )));
                    }
                    let nh = labels.values().filter(|l| l.nh).count();
                    let oh = labels.values().filter(|l| l.oh).count();
                    (Cell::Value(percent(nh, s.len())), Cell::Value(percent(oh, s.len())))
                }
                (Some(s), None) => {
                    let osc: Vec<bool> = s
                        .entries
                        .iter()
                        .map(|e| oscillation_flag(&e.translation, proxy.oscillation_n, proxy.oscillation_min_count))
                        .collect();
                    let nh = s
                        .entries
                        .iter()
                        .zip(&osc)
                        .filter(|(e, &o)| o || targets.is_some_and(|t| t.contains(&e.translation)))
                        .count();
                    let oh = osc.iter().filter(|&&o| o).count();
                    (Cell::Proxy(percent(nh, s.len())), Cell::Proxy(percent(oh, s.len())))
                }
            };

            Ok(SummaryRow {
                pattern: p.pattern.clone(),
                irs_bleu: bleu(&p.irs),
                vrs_bleu: bleu(&p.vrs),
                test_bleu: bleu(&p.test),
                irs_nh,
                irs_oh,
                irs_repeats,
                irs_unique_bigrams,
            })
        })
        .collect()
}

/// Top-`k` IRS bigrams per pattern as `(ngram, count, pattern)` rows.
pub fn bigram_plot_rows(inputs: &[PatternTranslations], k: usize) -> Vec<(String, usize, String)> {
    inputs
        .iter()
        .filter_map(|p| p.irs.as_ref().map(|s| (p, s)))
        .flat_map(|(p, s)| {
            top_ngram_counts(s, 2, k)
                .into_iter()
                .map(move |(g, c)| (g, c, p.pattern.clone()))
        })
        .collect()
}

pub fn render_summary_tsv(rows: &[SummaryRow]) -> String {
    let mut out =
        String::from("noise\tirs_bleu\tvrs_bleu\ttest_bleu\tirs_nh\tirs_oh\tirs_repeats\tirs_unique_bigrams\n");
    for r in rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            r.pattern, r.irs_bleu, r.vrs_bleu, r.test_bleu, r.irs_nh, r.irs_oh, r.irs_repeats, r.irs_unique_bigrams
        ));
    }
    out
}
