//! Synthetic inputs for the benchmarks.

use halluprobe_core::nhestimate::{ScoredCorpus, ScoredEntry};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn sentence(rng: &mut impl Rng, vocab: usize, len: usize) -> String {
    (0..len)
        .map(|_| format!("w{}", rng.gen_range(0..vocab)))
        .collect::<Vec<_>>()
        .join(" ")
}

/// `n` hypothesis/reference pairs of 10 to 30 words over a 2000-word vocabulary.
pub fn sentence_pairs(n: usize, seed: u64) -> Vec<(String, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let len = rng.gen_range(10..=30);
            (sentence(&mut rng, 2000, len), sentence(&mut rng, 2000, len))
        })
        .collect()
}

/// Scored corpus where about one entry in a hundred repeats a shared
/// translation or oscillates.
pub fn scored_corpus(n: usize, seed: u64) -> ScoredCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries = (0..n)
        .map(|i| {
            let source = format!("{i} {}", sentence(&mut rng, 5000, 12));
            let translation = match rng.gen_range(0..200) {
                0 => "shared output".to_string(),
                1 => format!("{i} a b a b a b a b a b"),
                _ => format!("{i} {}", sentence(&mut rng, 5000, 12)),
            };
            ScoredEntry {
                source,
                translation,
                similarity: rng.gen_range(0.0..1.0),
            }
        })
        .collect();
    ScoredCorpus::new(entries).expect("finite scores")
}

/// The same corpus as tab-separated `source, translation, score` lines.
pub fn pair_file_text(corpus: &ScoredCorpus) -> String {
    corpus
        .entries
        .iter()
        .map(|e| format!("{}\t{}\t{}\n", e.source, e.translation, e.similarity))
        .collect()
}
