use halluprobe_core::corpus::{ParallelCorpus, SentencePair};
use halluprobe_core::noiseforge::{
    emit_training_corpus, generate, verify_overlap_contract, write_training_corpus, Donor, Irs, NoisePattern, NoiseSet,
    NoiseSpec,
};
use proptest::prelude::*;

fn donor_corpus(n: usize) -> ParallelCorpus {
    ParallelCorpus::new(
        (0..n)
            .map(|i| SentencePair::new(format!("quelle satz {i}"), format!("target sentence {i}")))
            .collect(),
    )
}

fn irs(n: usize) -> Irs {
    Irs::new(
        (0..n)
            .map(|i| SentencePair::new(format!("irs quelle {i}"), format!("irs detached {}", (i + 1) % n)))
            .collect(),
    )
    .unwrap()
}

fn spec(pattern: NoisePattern, unit_count: usize, repeats: usize, seed: u64) -> NoiseSpec {
    NoiseSpec {
        unit_count,
        repeats,
        ..NoiseSpec::new(pattern, seed)
    }
}

fn count_src(noise: &NoiseSet, s: &str) -> usize {
    noise.pairs.iter().filter(|p| p.source == s).count()
}

fn count_tgt(noise: &NoiseSet, t: &str) -> usize {
    noise.pairs.iter().filter(|p| p.target == t).count()
}

/// Exhaustive nested-loop join of the noise set against the IRS.
fn shares(noise: &NoiseSet, irs: &Irs) -> (usize, usize, usize) {
    let mut src = 0;
    let mut tgt = 0;
    let mut pairs = 0;
    for p in &irs.pairs {
        src += usize::from(noise.pairs.iter().any(|q| q.source == p.source));
        tgt += usize::from(noise.pairs.iter().any(|q| q.target == p.target));
        pairs += usize::from(noise.pairs.iter().any(|q| q == p));
    }
    (src, tgt, pairs)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn overlap_contract_by_join(seed: u64, units in 2usize..12, repeats in 1usize..6) {
        let irs = irs(units);
        let donor = Donor::new(&donor_corpus(200)).excluding(&irs);
        let n = irs.len();
        for pattern in NoisePattern::ALL {
            let s = spec(pattern, units, repeats, seed);
            let noise = generate(&s, &irs, &donor).unwrap();
            prop_assert_eq!(noise.len(), units * repeats);
            let want = match pattern {
                NoisePattern::Rr => (n, n, n),
                NoisePattern::Ru => (n, 0, 0),
                NoisePattern::Ur => (0, n, 0),
                NoisePattern::Uu => (0, 0, 0),
            };
            prop_assert_eq!(shares(&noise, &irs), want, "{}", pattern);
            prop_assert!(verify_overlap_contract(&noise, &irs).is_ok());
            for p in &noise.pairs {
                match pattern {
                    NoisePattern::Rr => prop_assert_eq!(noise.pairs.iter().filter(|q| *q == p).count(), repeats),
                    NoisePattern::Ru => {
                        prop_assert_eq!(count_src(&noise, &p.source), repeats);
                        prop_assert_eq!(count_tgt(&noise, &p.target), 1);
                    }
                    NoisePattern::Ur => {
                        prop_assert_eq!(count_src(&noise, &p.source), 1);
                        prop_assert_eq!(count_tgt(&noise, &p.target), repeats);
                    }
                    NoisePattern::Uu => {
                        prop_assert_eq!(count_src(&noise, &p.source), 1);
                        prop_assert_eq!(count_tgt(&noise, &p.target), 1);
                        prop_assert!(!donor.is_related(&p.source, &p.target));
                    }
                }
            }
        }
    }

    #[test]
    fn generation_is_seed_deterministic(seed: u64) {
        let irs = irs(5);
        let donor = Donor::new(&donor_corpus(60)).excluding(&irs);
        for pattern in NoisePattern::ALL {
            let s = spec(pattern, 5, 3, seed);
            prop_assert_eq!(generate(&s, &irs, &donor).unwrap(), generate(&s, &irs, &donor).unwrap());
        }
    }
}

#[test]
fn training_corpus_regenerates_byte_identically() {
    let irs = irs(21);
    let donor_raw = donor_corpus(1000);
    let donor = Donor::new(&donor_raw).excluding(&irs);
    let clean = donor_corpus(300);
    for pattern in NoisePattern::ALL {
        let s = spec(pattern, 21, 10, 17);
        let dirs: Vec<_> = (0..2)
            .map(|_| {
                let dir = tempfile::tempdir().unwrap();
                let noise = generate(&s, &irs, &donor).unwrap();
                let train = emit_training_corpus(&clean, &noise, 99);
                assert_eq!(train.noise_count(), 210);
                write_training_corpus(dir.path(), &train, &s, 99).unwrap();
                dir
            })
            .collect();
        for f in [
            "src.txt",
            "tgt.txt",
            "provenance.txt",
            "provenance.json",
            "noise_spec.json",
        ] {
            let a = std::fs::read(dirs[0].path().join(f)).unwrap();
            let b = std::fs::read(dirs[1].path().join(f)).unwrap();
            assert_eq!(a, b, "{pattern} {f}");
        }
    }
}

#[test]
fn irs_must_not_appear_in_donor_pools() {
    let irs = irs(4);
    let mut pairs = donor_corpus(20).pairs;
    pairs.push(irs.pairs[0].clone());
    let donor = Donor::new(&ParallelCorpus::new(pairs)).excluding(&irs);
    assert!(!donor.source_pool().contains(&irs.pairs[0].source));
    assert!(!donor.target_pool().contains(&irs.pairs[0].target));
}
