//! Reference-free corpus-level natural-hallucination estimator.
//!
//! Entries are flagged when their translation oscillates more than the
//! source (F1) or when one translation is shared by several distinct
//! sources (F2). Only flags falling inside the bottom-ε slice of
//! cross-lingual similarity scores count towards ANH.

use std::hash::{DefaultHasher, Hash, Hasher};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::words;
use crate::ngram::max_ngram_count;

pub const DEFAULT_EPSILON: f64 = 1.0;
pub const DEFAULT_NGRAM: usize = 4;
pub const DEFAULT_THRESHOLD: usize = 2;

/// Read access to aligned (source, translation) pairs.
pub trait PairView: Sync {
    fn len(&self) -> usize;
    fn source(&self, i: usize) -> &str;
    fn translation(&self, i: usize) -> &str;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredEntry {
    pub source: String,
    pub translation: String,
    pub similarity: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoredCorpus {
    pub entries: Vec<ScoredEntry>,
}

impl ScoredCorpus {
    pub fn new(entries: Vec<ScoredEntry>) -> Result<Self> {
        check_scores(entries.iter().map(|e| e.similarity))?;
        Ok(Self { entries })
    }

    pub fn from_parts<S: Into<String>, T: Into<String>>(rows: impl IntoIterator<Item = (S, T, f64)>) -> Result<Self> {
        Self::new(
            rows.into_iter()
                .map(|(s, t, x)| ScoredEntry {
                    source: s.into(),
                    translation: t.into(),
                    similarity: x,
                })
                .collect(),
        )
    }

    pub fn scores(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.similarity).collect()
    }
}

impl PairView for ScoredCorpus {
    fn len(&self) -> usize {
        self.entries.len()
    }

    fn source(&self, i: usize) -> &str {
        &self.entries[i].source
    }

    fn translation(&self, i: usize) -> &str {
        &self.entries[i].translation
    }
}

fn check_scores(scores: impl Iterator<Item = f64>) -> Result<()> {
    for (i, x) in scores.enumerate() {
        if !x.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "similarity score of entry {i} is not finite: {x}"
            )));
        }
    }
    Ok(())
}

/// A pair file held as one buffer plus per-line offsets.
///
/// Avoids one allocation per string so that million-line corpora stay
/// small in memory.
#[derive(Debug, Clone)]
pub struct LineCorpus {
    buf: String,
    // (line start, tab position, end of translation)
    spans: Vec<(usize, usize, usize)>,
    scores: Vec<f64>,
}

impl LineCorpus {
    /// Parses `source<TAB>translation<TAB>score` lines, or two-column
    /// lines when `scores` is given separately.
    pub fn parse(buf: String, scores: Option<Vec<f64>>, origin: &Path) -> Result<Self> {
        let three_col = scores.is_none();
        let mut spans = Vec::new();
        let mut inline_scores = Vec::new();
        let mut start = 0;
        for (i, line) in buf.split_inclusive('\n').enumerate() {
            let body = line.strip_suffix('\n').unwrap_or(line);
            let body = body.strip_suffix('\r').unwrap_or(body);
            let tab = body
                .find('\t')
                .ok_or_else(|| Error::parse(origin, i + 1, "expected tab-separated source and translation"))?;
            let rest = &body[tab + 1..];
            let end = if three_col {
                let (_, score) = rest
                    .rsplit_once('\t')
                    .ok_or_else(|| Error::parse(origin, i + 1, "expected a third column with the similarity score"))?;
                let x: f64 = score
                    .trim()
                    .parse()
                    .map_err(|e| Error::parse(origin, i + 1, format!("bad score `{score}`: {e}")))?;
                inline_scores.push(x);
                start + body.len() - score.len() - 1
            } else {
                if rest.contains('\t') {
                    return Err(Error::parse(
                        origin,
                        i + 1,
                        "expected exactly two columns when scores come from a separate file",
                    ));
                }
                start + body.len()
            };
            spans.push((start, start + tab, end));
            start += line.len();
        }
        let scores = match scores {
            Some(s) if s.len() != spans.len() => {
                return Err(Error::InvalidArgument(format!(
                    "{} has {} pairs but {} scores were given",
                    origin.display(),
                    spans.len(),
                    s.len()
                )))
            }
            Some(s) => s,
            None => inline_scores,
        };
        check_scores(scores.iter().copied())?;
        Ok(Self { buf, spans, scores })
    }

    pub fn load(pairs: &Path, scores: Option<&Path>) -> Result<Self> {
        let buf = std::fs::read_to_string(pairs).map_err(|e| Error::io(pairs, e))?;
        let scores = scores.map(read_scores).transpose()?;
        Self::parse(buf, scores, pairs)
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }
}

impl PairView for LineCorpus {
    fn len(&self) -> usize {
        self.spans.len()
    }

    fn source(&self, i: usize) -> &str {
        let (s, tab, _) = self.spans[i];
        &self.buf[s..tab]
    }

    fn translation(&self, i: usize) -> &str {
        let (_, tab, e) = self.spans[i];
        &self.buf[tab + 1..e]
    }
}

/// One real per line; blank lines are rejected.
pub fn read_scores(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .map(|(i, l)| {
            l.trim()
                .parse::<f64>()
                .map_err(|e| Error::parse(path, i + 1, format!("bad score `{l}`: {e}")))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnhParams {
    /// Percentage of lowest-similarity entries kept, in (0, 100].
    pub epsilon: f64,
    pub n: usize,
    pub t: usize,
}

impl Default for AnhParams {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            n: DEFAULT_NGRAM,
            t: DEFAULT_THRESHOLD,
        }
    }
}

impl AnhParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 100.0) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must lie in (0, 100], got {}",
                self.epsilon
            )));
        }
        if self.n == 0 || self.t == 0 {
            return Err(Error::InvalidArgument("n and t must be at least 1".into()));
        }
        Ok(())
    }
}

/// Top translation `n`-gram count minus top source `n`-gram count.
pub fn f1_margin(source: &str, translation: &str, n: usize) -> i64 {
    max_ngram_count(&words(translation), n) as i64 - max_ngram_count(&words(source), n) as i64
}

pub fn f1_select<V: PairView + ?Sized>(corpus: &V, n: usize, t: usize) -> Vec<usize> {
    (0..corpus.len())
        .into_par_iter()
        .filter(|&i| f1_margin(corpus.source(i), corpus.translation(i), n) >= t as i64)
        .collect()
}

fn ws_hash(text: &str) -> u64 {
    let mut h = DefaultHasher::new();
    for tok in text.split_whitespace() {
        tok.hash(&mut h);
    }
    h.finish()
}

fn ws_eq(a: &str, b: &str) -> bool {
    a.split_whitespace().eq(b.split_whitespace())
}

/// Every entry whose translation is shared with an entry having a different source.
///
/// Translations are bucketed by hash first; only colliding buckets are
/// compared as strings.
pub fn f2_select<V: PairView + ?Sized>(corpus: &V) -> Vec<usize> {
    let mut keyed: Vec<(u64, u32)> = (0..corpus.len())
        .into_par_iter()
        .map(|i| (ws_hash(corpus.translation(i)), i as u32))
        .collect();
    keyed.par_sort_unstable();

    let mut selected = Vec::new();
    for run in keyed.chunk_by(|a, b| a.0 == b.0).filter(|r| r.len() > 1) {
        // split a hash bucket into true translation groups
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for &(_, i) in run {
            let i = i as usize;
            match groups
                .iter_mut()
                .find(|g| ws_eq(corpus.translation(g[0]), corpus.translation(i)))
            {
                Some(g) => g.push(i),
                None => groups.push(vec![i]),
            }
        }
        for g in groups.into_iter().filter(|g| g.len() > 1) {
            let first = corpus.source(g[0]);
            if g.iter().any(|&i| !ws_eq(corpus.source(i), first)) {
                selected.extend(g);
            }
        }
    }
    selected.sort_unstable();
    selected
}

/// Number of entries in the bottom-ε slice of a corpus of size `n`.
pub fn epsilon_count(n: usize, epsilon: f64) -> usize {
    ((epsilon * n as f64) / 100.0 + 1e-9).floor() as usize
}

/// Indices of the `floor(ε/100 · N)` lowest scores, ties broken by index, in ascending index order.
pub fn bottom_epsilon(scores: &[f64], epsilon: f64) -> Result<Vec<usize>> {
    if scores.is_empty() {
        return Err(Error::Insufficient(
            "bottom-epsilon selection over an empty corpus".into(),
        ));
    }
    if !(epsilon > 0.0 && epsilon <= 100.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must lie in (0, 100], got {epsilon}"
        )));
    }
    let k = epsilon_count(scores.len(), epsilon);
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    let cmp = |a: &usize, b: &usize| scores[*a].total_cmp(&scores[*b]).then(a.cmp(b));
    if k > 0 && k < idx.len() {
        idx.select_nth_unstable_by(k - 1, cmp);
    }
    idx.truncate(k);
    idx.sort_unstable();
    Ok(idx)
}

fn intersect(a: &[usize], b: &[usize]) -> Vec<usize> {
    let (mut i, mut j, mut out) = (0, 0, Vec::new());
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

fn union(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = a.iter().chain(b).copied().collect();
    out.sort_unstable();
    out.dedup();
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnhCounts {
    pub f1: usize,
    pub f2: usize,
    pub s_eps: usize,
    pub s_eps_f1: usize,
    pub s_eps_f2: usize,
    pub anh: usize,
}

/// Entry IDs are 0-based positions in the input corpus, sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnhReport {
    pub params: AnhParams,
    pub n_entries: usize,
    pub f1: Vec<usize>,
    pub f2: Vec<usize>,
    pub s_eps: Vec<usize>,
    pub s_eps_f1: Vec<usize>,
    pub s_eps_f2: Vec<usize>,
    pub anh: Vec<usize>,
}

impl AnhReport {
    pub fn counts(&self) -> AnhCounts {
        AnhCounts {
            f1: self.f1.len(),
            f2: self.f2.len(),
            s_eps: self.s_eps.len(),
            s_eps_f1: self.s_eps_f1.len(),
            s_eps_f2: self.s_eps_f2.len(),
            anh: self.anh.len(),
        }
    }

    pub fn check_invariants(&self) -> Result<()> {
        let expected = epsilon_count(self.n_entries, self.params.epsilon);
        if self.s_eps.len() != expected {
            return Err(Error::Invariant(format!(
                "|S_eps| = {} but expected {expected}",
                self.s_eps.len()
            )));
        }
        if intersect(&self.anh, &self.s_eps).len() != self.anh.len() {
            return Err(Error::Invariant("ANH is not contained in S_eps".into()));
        }
        if self.anh != union(&self.s_eps_f1, &self.s_eps_f2) {
            return Err(Error::Invariant(
                "ANH differs from the union of the filtered slices".into(),
            ));
        }
        Ok(())
    }
}

pub fn estimate_anh_with<V: PairView + ?Sized>(corpus: &V, scores: &[f64], params: AnhParams) -> Result<AnhReport> {
    params.validate()?;
    if scores.len() != corpus.len() {
        return Err(Error::InvalidArgument(format!(
            "{} scores for {} entries",
            scores.len(),
            corpus.len()
        )));
    }
    let s_eps = bottom_epsilon(scores, params.epsilon)?;
    let (f1, f2) = rayon::join(|| f1_select(corpus, params.n, params.t), || f2_select(corpus));
    let s_eps_f1 = intersect(&s_eps, &f1);
    let s_eps_f2 = intersect(&s_eps, &f2);
    let anh = union(&s_eps_f1, &s_eps_f2);
    let report = AnhReport {
        params,
        n_entries: corpus.len(),
        f1,
        f2,
        s_eps,
        s_eps_f1,
        s_eps_f2,
        anh,
    };
    report.check_invariants()?;
    Ok(report)
}

pub fn estimate_anh(corpus: &ScoredCorpus, params: AnhParams) -> Result<AnhReport> {
    estimate_anh_with(corpus, &corpus.scores(), params)
}

/// Loads a pair file (plus optional aligned score file) and runs the estimator.
pub fn estimate_anh_file(pairs: &Path, scores: Option<&Path>, params: AnhParams) -> Result<AnhReport> {
    let corpus = LineCorpus::load(pairs, scores)?;
    estimate_anh_with(&corpus, corpus.scores(), params)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplificationRow {
    pub name: String,
    pub counts: AnhCounts,
    /// `None` when the baseline has no ANH entries but this row does.
    pub anh_ratio: Option<f64>,
    pub amplified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplificationTable {
    pub params: AnhParams,
    pub baseline: AmplificationRow,
    pub derived: Vec<AmplificationRow>,
}

impl AmplificationTable {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("run\tf1\tf2\ts_eps_f1\ts_eps_f2\tanh\tanh_ratio\tamplified\n");
        for r in std::iter::once(&self.baseline).chain(&self.derived) {
            let c = r.counts;
            let ratio = r.anh_ratio.map_or("-".to_string(), |x| format!("{x:.4}"));
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{ratio}\t{}\n",
                r.name, c.f1, c.f2, c.s_eps_f1, c.s_eps_f2, c.anh, r.amplified
            ));
        }
        out
    }
}

pub fn amplification_report(
    baseline: (&str, &AnhReport),
    derived: &[(&str, &AnhReport)],
) -> Result<AmplificationTable> {
    let params = baseline.1.params;
    if let Some((name, r)) = derived.iter().find(|(_, r)| r.params != params) {
        return Err(Error::InvalidArgument(format!(
            "run `{name}` used {:?}, baseline used {params:?}",
            r.params
        )));
    }
    let base_anh = baseline.1.anh.len();
    let row = |name: &str, r: &AnhReport| {
        let anh = r.anh.len();
        let anh_ratio = match (base_anh, anh) {
            (0, 0) => Some(1.0),
            (0, _) => None,
            (b, a) => Some(a as f64 / b as f64),
        };
        AmplificationRow {
            name: name.to_string(),
            counts: r.counts(),
            anh_ratio,
            amplified: anh > base_anh,
        }
    };
    Ok(AmplificationTable {
        params,
        baseline: row(baseline.0, baseline.1),
        derived: derived.iter().map(|(n, r)| row(n, r)).collect(),
    })
}
