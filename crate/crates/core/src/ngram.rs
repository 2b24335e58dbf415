use std::collections::HashMap;
use std::hash::Hash;

/// Multiset of contiguous `n`-grams, keyed by slices of the input.
pub(crate) fn ngram_counts<T: Eq + Hash>(tokens: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    if n == 0 || tokens.len() < n {
        return counts;
    }
    for w in tokens.windows(n) {
        *counts.entry(w).or_insert(0) += 1;
    }
    counts
}

/// Count of the most frequent `n`-gram; 0 when the sequence is shorter than `n`.
pub(crate) fn max_ngram_count<T: Eq + Hash>(tokens: &[T], n: usize) -> usize {
    ngram_counts(tokens, n).into_values().max().unwrap_or(0)
}

/// Sum over shared n-grams of the smaller count.
pub(crate) fn clipped_matches<T: Eq + Hash>(hyp: &HashMap<&[T], usize>, reference: &HashMap<&[T], usize>) -> usize {
    hyp.iter()
        .filter_map(|(g, &c)| reference.get(g).map(|&r| c.min(r)))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_max() {
        let toks = ["x", "y", "x", "y", "x", "y"];
        assert_eq!(max_ngram_count(&toks, 2), 3);
        assert_eq!(max_ngram_count(&toks, 7), 0);
        assert_eq!(ngram_counts(&toks, 3).len(), 2);
    }
}
