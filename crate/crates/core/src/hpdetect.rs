//! Hallucination under perturbation.
//!
//! A sample is probed only if the model's unperturbed output is adequate
//! (`adjusted_bleu(y', y) > base`). Each perturbation token is then put in
//! front of the source; the sample hallucinates for that token when the new
//! output shares almost nothing with the old one
//! (`adjusted_bleu(y~, y') < inner`). A sample can hallucinate once per
//! token, so both distinct samples and total events are counted.

use std::collections::{BTreeSet, HashMap};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::attnstats::{stats, AttentionStats, AttentionStore, LogBase, BASE_VARIANT, PERTURBED_VARIANT};
use crate::backend::Translate;
use crate::error::{Error, Result};
use crate::metrics::{adjusted_bleu_with, BleuParams};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerturbationTokenSet {
    pub tokens: Vec<String>,
    /// The `top_k` most frequent corpus tokens, most frequent first.
    pub source_pool: Vec<String>,
    pub seed: u64,
}

/// Samples `s` tokens uniformly from the `top_k` most frequent word tokens.
/// Frequency ties rank lexicographically.
pub fn build_token_set<'a, I>(corpus_sources: I, top_k: usize, s: usize, seed: u64) -> Result<PerturbationTokenSet>
where
    I: IntoIterator<Item = &'a str>,
{
    if s == 0 || s > top_k {
        return Err(Error::InvalidArgument(format!(
            "need 0 < s <= top_k, got s={s}, top_k={top_k}"
        )));
    }
    let mut freq: HashMap<&str, usize> = HashMap::new();
    let mut any = false;
    for line in corpus_sources {
        any = true;
        for tok in line.split_whitespace() {
            *freq.entry(tok).or_insert(0) += 1;
        }
    }
    if !any {
        return Err(Error::Insufficient("empty corpus".into()));
    }
    if freq.len() < top_k {
        return Err(Error::Insufficient(format!(
            "vocabulary has {} tokens, fewer than top_k={top_k}",
            freq.len()
        )));
    }
    let mut ranked: Vec<(&str, usize)> = freq.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let source_pool: Vec<String> = ranked[..top_k].iter().map(|(t, _)| t.to_string()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, top_k, s).into_vec();
    picked.sort_unstable();
    Ok(PerturbationTokenSet {
        tokens: picked.into_iter().map(|i| source_pool[i].clone()).collect(),
        source_pool,
        seed,
    })
}

/// Inserts `token` as the first word of `x`.
pub fn perturb(x: &str, token: &str) -> String {
    if x.trim().is_empty() {
        token.to_string()
    } else {
        format!("{token} {x}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HpThresholds {
    /// The unperturbed output must score strictly above this against the reference.
    pub base: f64,
    /// A perturbed output scoring strictly below this against the unperturbed output is a hallucination.
    pub inner: f64,
}

impl Default for HpThresholds {
    fn default() -> Self {
        Self {
            base: 0.09,
            inner: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct HpConfig {
    pub thresholds: HpThresholds,
    pub bleu: BleuParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HpSample {
    pub id: usize,
    pub source: String,
    pub reference: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HpRecord {
    pub sample_id: usize,
    pub token: String,
    pub base_hyp: String,
    pub perturbed_hyp: String,
    /// `adjusted_bleu(base_hyp, reference)`
    pub base_score: f64,
    /// `adjusted_bleu(perturbed_hyp, base_hyp)`
    pub delta_score: f64,
}

impl HpRecord {
    /// Re-checks both membership conditions from the stored hypotheses.
    pub fn verify(&self, reference: &str, cfg: &HpConfig) -> bool {
        let base = adjusted_bleu_with(&self.base_hyp, reference, cfg.bleu);
        let delta = adjusted_bleu_with(&self.perturbed_hyp, &self.base_hyp, cfg.bleu);
        base == self.base_score
            && delta == self.delta_score
            && base > cfg.thresholds.base
            && delta < cfg.thresholds.inner
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Untranslated {
    pub sample_id: usize,
    /// `None` when the unperturbed source failed.
    pub token: Option<String>,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HpOutcome {
    pub records: Vec<HpRecord>,
    pub unique_hp: usize,
    pub total_hp: usize,
    pub samples: usize,
    /// Samples whose unperturbed output passed the adequacy gate.
    pub gated: usize,
    pub untranslated: Vec<Untranslated>,
}

pub fn detect_hp(
    samples: &[HpSample],
    backend: &dyn Translate,
    tokens: &PerturbationTokenSet,
    cfg: &HpConfig,
) -> Result<HpOutcome> {
    if !backend.is_deterministic() {
        return Err(Error::InvalidArgument(format!(
            "perturbation detection needs a deterministic backend, `{}` is not",
            backend.describe()
        )));
    }
    let mut untranslated = Vec::new();

    let base_sources: Vec<String> = samples.iter().map(|s| s.source.clone()).collect();
    let base_out = backend.translate_batch(&base_sources);

    let mut gated: Vec<(&HpSample, String, f64)> = Vec::new();
    for (sample, res) in samples.iter().zip(base_out) {
        match res {
            Ok(hyp) => {
                let score = adjusted_bleu_with(&hyp, &sample.reference, cfg.bleu);
                if score > cfg.thresholds.base {
                    gated.push((sample, hyp, score));
                }
            }
            Err(e) => untranslated.push(Untranslated {
                sample_id: sample.id,
                token: None,
                error: e.to_string(),
            }),
        }
    }

    let perturbed: Vec<String> = gated
        .iter()
        .flat_map(|(s, _, _)| tokens.tokens.iter().map(|t| perturb(&s.source, t)))
        .collect();
    let mut perturbed_out = backend.translate_batch(&perturbed).into_iter();

    let mut records = Vec::new();
    for (sample, base_hyp, base_score) in &gated {
        for token in &tokens.tokens {
            match perturbed_out.next().expect("one result per request") {
                Ok(hyp) => {
                    let delta = adjusted_bleu_with(&hyp, base_hyp, cfg.bleu);
                    if delta < cfg.thresholds.inner {
                        records.push(HpRecord {
                            sample_id: sample.id,
                            token: token.clone(),
                            base_hyp: base_hyp.clone(),
                            perturbed_hyp: hyp,
                            base_score: *base_score,
                            delta_score: delta,
                        });
                    }
                }
                Err(e) => untranslated.push(Untranslated {
                    sample_id: sample.id,
                    token: Some(token.clone()),
                    error: e.to_string(),
                }),
            }
        }
    }

    let unique_hp = records.iter().map(|r| r.sample_id).collect::<BTreeSet<_>>().len();
    Ok(HpOutcome {
        total_hp: records.len(),
        unique_hp,
        records,
        samples: samples.len(),
        gated: gated.len(),
        untranslated,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedRecord {
    pub record: HpRecord,
    pub base_attention: Option<AttentionStats>,
    pub perturbed_attention: Option<AttentionStats>,
}

impl AnnotatedRecord {
    pub fn is_missing(&self) -> bool {
        self.base_attention.is_none() || self.perturbed_attention.is_none()
    }
}

/// Joins records to their unperturbed and perturbed attention maps.
/// Returns the annotated records and the number with a missing map.
pub fn attach_attention(records: &[HpRecord], store: &AttentionStore, base: LogBase) -> (Vec<AnnotatedRecord>, usize) {
    let annotated: Vec<AnnotatedRecord> = records
        .iter()
        .map(|r| AnnotatedRecord {
            record: r.clone(),
            base_attention: store.get(r.sample_id, BASE_VARIANT).map(|m| stats(m, base)),
            perturbed_attention: store.get(r.sample_id, PERTURBED_VARIANT).map(|m| stats(m, base)),
        })
        .collect();
    let missing = annotated.iter().filter(|a| a.is_missing()).count();
    (annotated, missing)
}
