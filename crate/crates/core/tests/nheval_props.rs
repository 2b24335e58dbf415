mod common;

use halluprobe_core::nheval::{
    irs_repeats, oscillation_flag, sentence_unique_bigram_fraction, top_ngram_counts, unique_bigram_fraction, SetTag,
    TargetIndex, TranslationEntry, TranslationSet,
};
use proptest::prelude::*;

fn sentence(vocab: usize, max_len: usize) -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec((0..vocab).prop_map(|i| format!("v{i}")), 0..=max_len)
}

fn set(hyps: &[String]) -> TranslationSet {
    TranslationSet::new(
        SetTag::Irs,
        hyps.iter()
            .enumerate()
            .map(|(i, h)| TranslationEntry {
                source: format!("s{i}"),
                translation: h.clone(),
                reference: None,
            })
            .collect(),
    )
}

proptest! {
    #[test]
    fn oscillation_matches_oracle(toks in sentence(4, 14), n in 1usize..5, c in 1usize..5) {
        let s = toks.join(" ");
        prop_assert_eq!(oscillation_flag(&s, n, c), common::max_count(&toks, n) >= c);
    }

    #[test]
    fn oscillation_is_monotone(toks in sentence(4, 14), n in 1usize..5, c in 2usize..5) {
        let s = toks.join(" ");
        if oscillation_flag(&s, n, c) {
            prop_assert!(oscillation_flag(&s, n, c - 1));
        }
        if oscillation_flag(&s, n + 1, c) {
            prop_assert!(oscillation_flag(&s, n, c));
        }
    }

    #[test]
    fn unique_bigrams_match_oracle(toks in sentence(5, 14)) {
        let want = if toks.len() < 2 { 1.0 } else { common::distinct(&toks, 2) as f64 / (toks.len() - 1) as f64 };
        prop_assert!((sentence_unique_bigram_fraction(&toks.join(" ")) - want).abs() < 1e-12);
    }

    #[test]
    fn repeating_a_bigram_lowers_the_fraction(toks in prop::collection::vec(0usize..1000, 3..12)) {
        // all-distinct tokens, then overwrite the tail with a copy of the first bigram
        let mut uniq: Vec<String> = Vec::new();
        for t in toks {
            let w = format!("u{t}");
            if !uniq.contains(&w) {
                uniq.push(w);
            }
        }
        prop_assume!(uniq.len() >= 3);
        let before = sentence_unique_bigram_fraction(&uniq.join(" "));
        prop_assert_eq!(before, 1.0);
        let mut dup = uniq.clone();
        dup.push(uniq[0].clone());
        dup.push(uniq[1].clone());
        prop_assert!(sentence_unique_bigram_fraction(&dup.join(" ")) < before);
    }

    #[test]
    fn pooled_counts_are_sums(sents in prop::collection::vec(sentence(3, 8), 1..6), n in 1usize..4) {
        let hyps: Vec<String> = sents.iter().map(|t| t.join(" ")).collect();
        for (gram, count) in top_ngram_counts(&set(&hyps), n, usize::MAX) {
            let g: Vec<String> = gram.split(' ').map(str::to_string).collect();
            let want: usize = sents.iter().map(|t| common::occurrences(t, &g)).sum();
            prop_assert_eq!(count, want);
        }
    }

    #[test]
    fn repeats_ignore_order(hyps in prop::collection::vec(sentence(3, 3), 1..10), targets in prop::collection::vec(sentence(3, 3), 0..10)) {
        let hyps: Vec<String> = hyps.iter().map(|t| t.join(" ")).collect();
        let targets: Vec<String> = targets.iter().map(|t| t.join(" ")).collect();
        let a = irs_repeats(&set(&hyps), &TargetIndex::new(&targets));
        let mut h2 = hyps.clone();
        h2.reverse();
        let mut t2 = targets.clone();
        t2.rotate_left(targets.len() / 2);
        prop_assert_eq!(a, irs_repeats(&set(&h2), &TargetIndex::new(&t2)));
        let want = 100.0 * hyps.iter().filter(|h| targets.contains(h)).count() as f64 / hyps.len() as f64;
        prop_assert!((a - want).abs() < 1e-9);
    }
}

#[test]
fn planted_and_disjoint_repeats() {
    let hyps: Vec<String> = (0..21).map(|i| format!("planted target {i}")).collect();
    assert_eq!(irs_repeats(&set(&hyps), &TargetIndex::new(&hyps)), 100.0);
    assert_eq!(irs_repeats(&set(&hyps), &TargetIndex::new(["nothing here"])), 0.0);
    assert_eq!(unique_bigram_fraction(&set(&["a b a b a".to_string()])).unwrap(), 0.5);
}
