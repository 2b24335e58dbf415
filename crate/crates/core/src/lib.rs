//! Detection and accounting of hallucination pathologies in machine
//! translation: perturbation-induced hallucinations of memorized samples,
//! natural hallucinations caused by corpus-level noise, and their
//! amplification through data-generation pipelines.
//!
//! The crate is model-agnostic. Translations come from a [`backend`] (a
//! static manifest or an external line-protocol process) or from
//! precomputed output files; cross-lingual similarity scores and attention
//! maps are ingested, never computed here.

pub mod attnstats;
pub mod backend;
pub mod corpus;
pub mod error;
pub mod hpdetect;
pub mod memorization;
pub mod metrics;
mod ngram;
pub mod nhestimate;
pub mod nheval;
pub mod noiseforge;

pub use backend::{BackendError, CommandBackend, FnBackend, ManifestBackend, Translate};
pub use corpus::{normalize_ws, ParallelCorpus, SentencePair};
pub use error::{Error, Result};
pub use metrics::{Granularity, MetricKind, Smoothing, TokenSeq};
