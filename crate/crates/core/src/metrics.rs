//! Sentence- and corpus-level overlap metrics.
//!
//! All scores are on a 0–1 scale. chrF follows the character n-gram
//! F-score: precision and recall are averaged arithmetically over the
//! n-gram orders both sides actually have, then combined with weight
//! `beta` on recall. BLEU is the usual clipped n-gram precision with a
//! geometric mean and brevity penalty; an order for which the hypothesis
//! has no n-grams at all contributes a neutral precision of 1.
//!
//! Inputs are expected to be lowercased already. [`Metric`] can lowercase
//! on request, never implicitly.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::normalize_ws;
use crate::error::{Error, Result};
use crate::ngram::{clipped_matches, ngram_counts};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Word,
    Char,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSeq {
    pub tokens: Vec<String>,
    pub granularity: Granularity,
}

impl TokenSeq {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn as_strs(&self) -> Vec<&str> {
        self.tokens.iter().map(String::as_str).collect()
    }
}

/// Word granularity splits on whitespace runs; char granularity keeps every
/// non-whitespace character in order.
pub fn tokenize(text: &str, granularity: Granularity) -> TokenSeq {
    let tokens = match granularity {
        Granularity::Word => text.split_whitespace().map(str::to_string).collect(),
        Granularity::Char => text.chars().filter(|c| !c.is_whitespace()).map(String::from).collect(),
    };
    TokenSeq { tokens, granularity }
}

pub(crate) fn words(text: &str) -> Vec<&str> {
    text.split_whitespace().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothing {
    None,
    /// Add one to matched and total counts for orders n >= 2.
    AddOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BleuParams {
    pub max_n: usize,
    pub smoothing: Smoothing,
}

impl Default for BleuParams {
    fn default() -> Self {
        Self {
            max_n: 4,
            smoothing: Smoothing::AddOne,
        }
    }
}

pub const DEFAULT_CHRF_ORDER: usize = 6;
pub const DEFAULT_CHRF_BETA: f64 = 2.0;

/// Character n-gram F-score. Whitespace is ignored.
///
/// Both inputs empty scores 1.0; exactly one empty scores 0.0.
pub fn sentence_chrf(hyp: &str, reference: &str, char_n: usize, beta: f64) -> f64 {
    assert!(char_n >= 1, "chrF order must be at least 1");
    let h: Vec<char> = hyp.chars().filter(|c| !c.is_whitespace()).collect();
    let r: Vec<char> = reference.chars().filter(|c| !c.is_whitespace()).collect();
    if h.is_empty() && r.is_empty() {
        return 1.0;
    }
    if h.is_empty() || r.is_empty() {
        return 0.0;
    }

    let mut prec_sum = 0.0;
    let mut rec_sum = 0.0;
    let mut orders = 0usize;
    for n in 1..=char_n {
        if h.len() < n || r.len() < n {
            break;
        }
        let hc = ngram_counts(&h, n);
        let rc = ngram_counts(&r, n);
        let matched = clipped_matches(&hc, &rc) as f64;
        prec_sum += matched / (h.len() - n + 1) as f64;
        rec_sum += matched / (r.len() - n + 1) as f64;
        orders += 1;
    }
    let p = prec_sum / orders as f64;
    let rc = rec_sum / orders as f64;
    f_beta(p, rc, beta)
}

fn f_beta(precision: f64, recall: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    let denom = b2 * precision + recall;
    if denom <= 0.0 {
        0.0
    } else {
        (1.0 + b2) * precision * recall / denom
    }
}

/// Matched and total hypothesis n-gram counts for orders `1..=max_n`.
fn bleu_stats<T: Eq + std::hash::Hash>(hyp: &[T], reference: &[T], max_n: usize) -> Vec<(usize, usize)> {
    (1..=max_n)
        .map(|n| {
            let hc = ngram_counts(hyp, n);
            let rc = ngram_counts(reference, n);
            let total = if hyp.len() >= n { hyp.len() - n + 1 } else { 0 };
            (clipped_matches(&hc, &rc), total)
        })
        .collect()
}

fn combine_bleu(stats: &[(usize, usize)], hyp_len: usize, ref_len: usize, smoothing: Smoothing) -> f64 {
    if hyp_len == 0 {
        return 0.0;
    }
    let max_n = stats.len();
    let mut log_sum = 0.0;
    for (i, &(matched, total)) in stats.iter().enumerate() {
        let order = i + 1;
        if total == 0 {
            continue;
        }
        let p = match smoothing {
            Smoothing::AddOne if order >= 2 => (matched as f64 + 1.0) / (total as f64 + 1.0),
            _ => matched as f64 / total as f64,
        };
        if p == 0.0 {
            return 0.0;
        }
        log_sum += p.ln();
    }
    let bp = if hyp_len >= ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    };
    (bp * (log_sum / max_n as f64).exp()).clamp(0.0, 1.0)
}

/// Sentence-level BLEU over pre-tokenized sequences.
pub fn sentence_bleu(hyp: &TokenSeq, reference: &TokenSeq, max_n: usize, smoothing: Smoothing) -> f64 {
    assert!(max_n >= 1, "BLEU order must be at least 1");
    let stats = bleu_stats(&hyp.tokens, &reference.tokens, max_n);
    combine_bleu(&stats, hyp.len(), reference.len(), smoothing)
}

fn sentence_bleu_words(hyp: &str, reference: &str, params: BleuParams) -> f64 {
    let h = words(hyp);
    let r = words(reference);
    let stats = bleu_stats(&h, &r, params.max_n);
    combine_bleu(&stats, h.len(), r.len(), params.smoothing)
}

/// Smoothed sentence BLEU on word tokens (add-one for n >= 2, max order 4).
/// This is the gate metric of the perturbation detector.
pub fn adjusted_bleu(hyp: &str, reference: &str) -> f64 {
    adjusted_bleu_with(hyp, reference, BleuParams::default())
}

pub fn adjusted_bleu_with(hyp: &str, reference: &str, params: BleuParams) -> f64 {
    sentence_bleu_words(hyp, reference, params)
}

/// 1.0 iff the whitespace-normalized strings are equal.
pub fn exact_accuracy(hyp: &str, reference: &str) -> f64 {
    if hyp.split_whitespace().eq(reference.split_whitespace()) {
        1.0
    } else {
        0.0
    }
}

/// Unsmoothed BLEU with n-gram statistics pooled over the whole corpus.
pub fn corpus_bleu(hyps: &[TokenSeq], refs: &[TokenSeq], max_n: usize) -> Result<f64> {
    if hyps.len() != refs.len() {
        return Err(Error::InvalidArgument(format!(
            "corpus BLEU needs aligned inputs, got {} hypotheses and {} references",
            hyps.len(),
            refs.len()
        )));
    }
    if hyps.is_empty() {
        return Err(Error::Insufficient("corpus BLEU over an empty corpus".into()));
    }
    if max_n == 0 {
        return Err(Error::InvalidArgument("BLEU order must be at least 1".into()));
    }
    let mut pooled = vec![(0usize, 0usize); max_n];
    let (mut hyp_len, mut ref_len) = (0, 0);
    for (h, r) in hyps.iter().zip(refs) {
        for (acc, s) in pooled.iter_mut().zip(bleu_stats(&h.tokens, &r.tokens, max_n)) {
            acc.0 += s.0;
            acc.1 += s.1;
        }
        hyp_len += h.len();
        ref_len += r.len();
    }
    Ok(combine_bleu(&pooled, hyp_len, ref_len, Smoothing::None))
}

/// Convenience wrapper: word-tokenizes both sides of every pair.
pub fn corpus_bleu_str<H, R>(hyps: &[H], refs: &[R]) -> Result<f64>
where
    H: AsRef<str>,
    R: AsRef<str>,
{
    let h: Vec<TokenSeq> = hyps.iter().map(|s| tokenize(s.as_ref(), Granularity::Word)).collect();
    let r: Vec<TokenSeq> = refs.iter().map(|s| tokenize(s.as_ref(), Granularity::Word)).collect();
    corpus_bleu(&h, &r, 4)
}

/// The metric `M`: maps (hypothesis, reference) to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetricKind {
    Chrf { char_n: usize, beta: f64 },
    Bleu { max_n: usize, smoothing: Smoothing },
    AdjustedBleu { max_n: usize, smoothing: Smoothing },
    Accuracy,
}

impl MetricKind {
    pub fn chrf() -> Self {
        MetricKind::Chrf {
            char_n: DEFAULT_CHRF_ORDER,
            beta: DEFAULT_CHRF_BETA,
        }
    }

    pub fn bleu() -> Self {
        MetricKind::Bleu {
            max_n: 4,
            smoothing: Smoothing::AddOne,
        }
    }

    pub fn adjusted_bleu() -> Self {
        let p = BleuParams::default();
        MetricKind::AdjustedBleu {
            max_n: p.max_n,
            smoothing: p.smoothing,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MetricKind::Chrf { .. } => "chrf",
            MetricKind::Bleu { .. } => "bleu",
            MetricKind::AdjustedBleu { .. } => "adjusted_bleu",
            MetricKind::Accuracy => "accuracy",
        }
    }

    pub fn score(&self, hyp: &str, reference: &str) -> f64 {
        match *self {
            MetricKind::Chrf { char_n, beta } => sentence_chrf(hyp, reference, char_n, beta),
            MetricKind::Bleu { max_n, smoothing } | MetricKind::AdjustedBleu { max_n, smoothing } => {
                sentence_bleu_words(hyp, reference, BleuParams { max_n, smoothing })
            }
            MetricKind::Accuracy => exact_accuracy(hyp, reference),
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "chrf" => Ok(Self::chrf()),
            "bleu" => Ok(Self::bleu()),
            "adjusted_bleu" => Ok(Self::adjusted_bleu()),
            "accuracy" | "acc" => Ok(MetricKind::Accuracy),
            other => Err(Error::InvalidArgument(format!("unknown metric `{other}`"))),
        }
    }
}

/// A metric plus the optional lowercasing step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub kind: MetricKind,
    #[serde(default)]
    pub lowercase: bool,
}

impl Metric {
    pub fn new(kind: MetricKind) -> Self {
        Self { kind, lowercase: false }
    }

    pub fn score(&self, hyp: &str, reference: &str) -> f64 {
        if self.lowercase {
            self.kind.score(&hyp.to_lowercase(), &reference.to_lowercase())
        } else {
            self.kind.score(hyp, reference)
        }
    }
}

/// Pairs whose chrF is defined by convention (both sides empty).
pub fn both_empty(hyp: &str, reference: &str) -> bool {
    normalize_ws(hyp).is_empty() && normalize_ws(reference).is_empty()
}
