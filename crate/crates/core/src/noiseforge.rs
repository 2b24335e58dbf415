//! Corpus-level noise construction.
//!
//! Four patterns combine an invalid reference set (IRS) with a large donor
//! corpus. Sources and targets are each either repeated (drawn from the
//! IRS) or unique (drawn from the donor without replacement):
//!
//! | pattern | sources              | targets              |
//! |---------|----------------------|----------------------|
//! | UU      | unique donor         | unique donor         |
//! | RR      | IRS                  | IRS (pairs kept)     |
//! | RU      | IRS, repeated        | unique donor         |
//! | UR      | unique donor         | IRS, repeated        |
//!
//! Donor pools never contain IRS sentences, so the overlap between the
//! IRS and each noise set is exactly what the pattern prescribes. No
//! generated pair is an aligned donor pair or has identical sides.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{write_lines, ParallelCorpus, SentencePair};
use crate::error::{Error, Result};

pub const DEFAULT_UNIT_COUNT: usize = 21;
pub const DEFAULT_REPEATS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoisePattern {
    #[serde(alias = "UU")]
    Uu,
    #[serde(alias = "RR")]
    Rr,
    #[serde(alias = "RU")]
    Ru,
    #[serde(alias = "UR")]
    Ur,
}

impl NoisePattern {
    pub const ALL: [NoisePattern; 4] = [NoisePattern::Uu, NoisePattern::Rr, NoisePattern::Ru, NoisePattern::Ur];

    pub fn as_str(self) -> &'static str {
        match self {
            NoisePattern::Uu => "uu",
            NoisePattern::Rr => "rr",
            NoisePattern::Ru => "ru",
            NoisePattern::Ur => "ur",
        }
    }
}

impl fmt::Display for NoisePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.as_str().to_uppercase())
    }
}

impl FromStr for NoisePattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "").as_str() {
            "uu" => Ok(NoisePattern::Uu),
            "rr" => Ok(NoisePattern::Rr),
            "ru" => Ok(NoisePattern::Ru),
            "ur" => Ok(NoisePattern::Ur),
            _ => Err(Error::InvalidArgument(format!("unknown noise pattern `{s}`"))),
        }
    }
}

/// Detached source/target pairs with pairwise-distinct sources and targets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Irs {
    pub pairs: Vec<SentencePair>,
}

impl Irs {
    pub fn new(pairs: Vec<SentencePair>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidArgument("IRS is empty".into()));
        }
        let mut srcs = HashSet::new();
        let mut tgts = HashSet::new();
        for p in &pairs {
            if !srcs.insert(p.source.as_str()) {
                return Err(Error::Invariant(format!("IRS source repeated: {:?}", p.source)));
            }
            if !tgts.insert(p.target.as_str()) {
                return Err(Error::Invariant(format!("IRS target repeated: {:?}", p.target)));
            }
        }
        Ok(Self { pairs })
    }

    pub fn read_dir(dir: &Path) -> Result<Self> {
        Self::new(ParallelCorpus::read_dir(dir)?.pairs)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn sources(&self) -> Vec<String> {
        self.pairs.iter().map(|p| p.source.clone()).collect()
    }

    pub fn targets(&self) -> Vec<String> {
        self.pairs.iter().map(|p| p.target.clone()).collect()
    }

    /// Errors if any IRS pair also occurs in `clean`.
    pub fn check_disjoint_from(&self, clean: &ParallelCorpus) -> Result<()> {
        let clean: HashSet<&SentencePair> = clean.pairs.iter().collect();
        match self.pairs.iter().find(|p| clean.contains(p)) {
            Some(p) => Err(Error::Invariant(format!(
                "IRS pair ({:?}, {:?}) appears in the clean corpus",
                p.source, p.target
            ))),
            None => Ok(()),
        }
    }
}

/// The IRS sources paired with their correct references.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vrs {
    pub pairs: Vec<SentencePair>,
}

impl Vrs {
    pub fn new(pairs: Vec<SentencePair>, irs: &Irs) -> Result<Self> {
        let irs_sources: HashSet<&str> = irs.pairs.iter().map(|p| p.source.as_str()).collect();
        let vrs_sources: HashSet<&str> = pairs.iter().map(|p| p.source.as_str()).collect();
        if irs_sources != vrs_sources || pairs.len() != irs.len() {
            return Err(Error::Invariant("VRS sources must be exactly the IRS sources".into()));
        }
        let irs_pairs: HashSet<&SentencePair> = irs.pairs.iter().collect();
        if let Some(p) = pairs.iter().find(|p| irs_pairs.contains(p)) {
            return Err(Error::Invariant(format!(
                "VRS reuses the invalid reference for {:?}",
                p.source
            )));
        }
        Ok(Self { pairs })
    }
}

/// Deduplicated donor corpus with IRS sentences removed from its pools.
#[derive(Debug, Clone)]
pub struct Donor {
    sources: Vec<String>,
    targets: Vec<String>,
    aligned: HashSet<(String, String)>,
}

impl Donor {
    pub fn new(corpus: &ParallelCorpus) -> Self {
        let aligned = corpus
            .pairs
            .iter()
            .map(|p| (p.source.clone(), p.target.clone()))
            .collect();
        Self {
            sources: dedup(corpus.sources()),
            targets: dedup(corpus.targets()),
            aligned,
        }
    }

    /// Removes every IRS source and target from the donor pools.
    pub fn excluding(mut self, irs: &Irs) -> Self {
        let srcs: HashSet<&str> = irs.pairs.iter().map(|p| p.source.as_str()).collect();
        let tgts: HashSet<&str> = irs.pairs.iter().map(|p| p.target.as_str()).collect();
        self.sources.retain(|s| !srcs.contains(s.as_str()));
        self.targets.retain(|t| !tgts.contains(t.as_str()));
        self
    }

    pub fn source_pool(&self) -> &[String] {
        &self.sources
    }

    pub fn target_pool(&self) -> &[String] {
        &self.targets
    }

    /// True if the pair occurs aligned in the donor or has identical sides.
    pub fn is_related(&self, source: &str, target: &str) -> bool {
        source == target || self.aligned.contains(&(source.to_string(), target.to_string()))
    }
}

fn dedup<'a>(lines: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut seen = HashSet::new();
    lines.filter(|l| seen.insert(*l)).map(str::to_string).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub pattern: NoisePattern,
    pub unit_count: usize,
    pub repeats: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub donor: Option<String>,
}

impl NoiseSpec {
    pub fn new(pattern: NoisePattern, seed: u64) -> Self {
        Self {
            pattern,
            unit_count: DEFAULT_UNIT_COUNT,
            repeats: DEFAULT_REPEATS,
            seed,
            donor: None,
        }
    }

    pub fn materialized_size(&self) -> usize {
        self.unit_count * self.repeats
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSet {
    pub pattern: NoisePattern,
    pub pairs: Vec<SentencePair>,
}

impl NoiseSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

fn draw<'a>(pool: &'a [String], count: usize, what: &str, rng: &mut ChaCha8Rng) -> Result<Vec<&'a String>> {
    if pool.len() < count {
        return Err(Error::Insufficient(format!(
            "donor has {} usable {what}, need {count}",
            pool.len()
        )));
    }
    Ok(index::sample(rng, pool.len(), count)
        .into_iter()
        .map(|i| &pool[i])
        .collect())
}

/// Unique donor sources paired with unique donor targets, no pair related.
pub fn gen_uu(donor: &Donor, count: usize, seed: u64) -> Result<NoiseSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sources = draw(&donor.sources, count, "sources", &mut rng)?;
    let mut targets = draw(&donor.targets, count, "targets", &mut rng)?;
    targets.shuffle(&mut rng);

    // repair related pairs by swapping targets until none remain
    for i in 0..count {
        if !donor.is_related(sources[i], targets[i]) {
            continue;
        }
        let start = rng.gen_range(0..count);
        let swap = (0..count).map(|o| (start + o) % count).find(|&j| {
            j != i && !donor.is_related(sources[i], targets[j]) && !donor.is_related(sources[j], targets[i])
        });
        match swap {
            Some(j) => targets.swap(i, j),
            None => {
                return Err(Error::Insufficient(format!(
                    "cannot pair {count} donor sentences without reproducing an aligned pair"
                )))
            }
        }
    }

    Ok(NoiseSet {
        pattern: NoisePattern::Uu,
        pairs: sources
            .into_iter()
            .zip(targets)
            .map(|(s, t)| SentencePair::new(s.clone(), t.clone()))
            .collect(),
    })
}

/// Every IRS pair repeated `repeats` times.
pub fn gen_rr(irs: &Irs, repeats: usize) -> Result<NoiseSet> {
    if repeats == 0 {
        return Err(Error::InvalidArgument("repeats must be at least 1".into()));
    }
    let mut pairs = Vec::with_capacity(irs.len() * repeats);
    for _ in 0..repeats {
        pairs.extend(irs.pairs.iter().cloned());
    }
    Ok(NoiseSet {
        pattern: NoisePattern::Rr,
        pairs,
    })
}

/// Draws `fixed.len() * repeats` distinct partners from `pool` and pairs
/// each occurrence of a fixed sentence with one of them.
fn gen_repeated(
    fixed: &[String],
    pool: &[String],
    repeats: usize,
    seed: u64,
    what: &str,
    related: impl Fn(&str, &str) -> bool,
) -> Result<Vec<(String, String)>> {
    if repeats == 0 {
        return Err(Error::InvalidArgument("repeats must be at least 1".into()));
    }
    let need = fixed.len() * repeats;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // oversample so that related partners can be skipped without re-drawing
    let usable: Vec<&String> = {
        let order = index::sample(&mut rng, pool.len(), pool.len());
        order.into_iter().map(|i| &pool[i]).collect()
    };
    let mut it = usable.into_iter();
    let mut out = Vec::with_capacity(need);
    for _ in 0..repeats {
        for f in fixed {
            let partner = it.by_ref().find(|p| !related(f, p)).ok_or_else(|| {
                Error::Insufficient(format!(
                    "donor exhausted: need {need} distinct {what}, pool has {}",
                    pool.len()
                ))
            })?;
            out.push((f.clone(), partner.clone()));
        }
    }
    Ok(out)
}

/// IRS sources, each repeated and paired with distinct donor targets.
pub fn gen_ru(irs_sources: &[String], donor: &Donor, repeats: usize, seed: u64) -> Result<NoiseSet> {
    let pairs = gen_repeated(irs_sources, &donor.targets, repeats, seed, "targets", |s, t| {
        donor.is_related(s, t)
    })?;
    Ok(NoiseSet {
        pattern: NoisePattern::Ru,
        pairs: pairs.into_iter().map(|(s, t)| SentencePair::new(s, t)).collect(),
    })
}

/// IRS targets, each repeated and paired with distinct donor sources.
pub fn gen_ur(irs_targets: &[String], donor: &Donor, repeats: usize, seed: u64) -> Result<NoiseSet> {
    let pairs = gen_repeated(irs_targets, &donor.sources, repeats, seed, "sources", |t, s| {
        donor.is_related(s, t)
    })?;
    Ok(NoiseSet {
        pattern: NoisePattern::Ur,
        pairs: pairs.into_iter().map(|(t, s)| SentencePair::new(s, t)).collect(),
    })
}

/// Materializes a spec. `unit_count` IRS pairs (or `unit_count * repeats`
/// donor pairs for UU) are used.
pub fn generate(spec: &NoiseSpec, irs: &Irs, donor: &Donor) -> Result<NoiseSet> {
    if spec.unit_count == 0 || (spec.unit_count > irs.len() && spec.pattern != NoisePattern::Uu) {
        return Err(Error::InvalidArgument(format!(
            "unit_count {} does not fit an IRS of {}",
            spec.unit_count,
            irs.len()
        )));
    }
    let units = Irs {
        pairs: irs.pairs.iter().take(spec.unit_count).cloned().collect(),
    };
    match spec.pattern {
        NoisePattern::Uu => gen_uu(donor, spec.materialized_size(), spec.seed),
        NoisePattern::Rr => gen_rr(&units, spec.repeats),
        NoisePattern::Ru => gen_ru(&units.sources(), donor, spec.repeats, spec.seed),
        NoisePattern::Ur => gen_ur(&units.targets(), donor, spec.repeats, spec.seed),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Clean,
    Noise,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingCorpus {
    pub corpus: ParallelCorpus,
    pub provenance: Vec<Provenance>,
}

impl TrainingCorpus {
    pub fn noise_count(&self) -> usize {
        self.provenance.iter().filter(|p| **p == Provenance::Noise).count()
    }

    pub fn noise_fraction(&self) -> f64 {
        if self.provenance.is_empty() {
            0.0
        } else {
            self.noise_count() as f64 / self.provenance.len() as f64
        }
    }
}

/// Concatenates clean and noise pairs and shuffles them with `seed`.
pub fn emit_training_corpus(clean: &ParallelCorpus, noise: &NoiseSet, seed: u64) -> TrainingCorpus {
    let mut lines: Vec<(SentencePair, Provenance)> = clean
        .pairs
        .iter()
        .map(|p| (p.clone(), Provenance::Clean))
        .chain(noise.pairs.iter().map(|p| (p.clone(), Provenance::Noise)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    lines.shuffle(&mut rng);
    let (pairs, provenance) = lines.into_iter().unzip();
    TrainingCorpus {
        corpus: ParallelCorpus::new(pairs),
        provenance,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceSummary {
    pub lines: usize,
    pub clean: usize,
    pub noise: usize,
    pub noise_fraction: f64,
    /// How noise was merged into the clean corpus.
    pub merge: String,
    pub shuffle_seed: u64,
}

/// Writes `src.txt`, `tgt.txt`, `provenance.txt`, `provenance.json` and `noise_spec.json`.
pub fn write_training_corpus(dir: &Path, train: &TrainingCorpus, spec: &NoiseSpec, shuffle_seed: u64) -> Result<()> {
    train.corpus.write_dir(dir)?;
    write_lines(
        &dir.join("provenance.txt"),
        train.provenance.iter().map(|p| match p {
            Provenance::Clean => "clean",
            Provenance::Noise => "noise",
        }),
    )?;
    let summary = ProvenanceSummary {
        lines: train.provenance.len(),
        clean: train.provenance.len() - train.noise_count(),
        noise: train.noise_count(),
        noise_fraction: train.noise_fraction(),
        merge: "shuffle".into(),
        shuffle_seed,
    };
    write_json(&dir.join("provenance.json"), &summary)?;
    write_json(&dir.join("noise_spec.json"), spec)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Checks the IRS overlap each pattern prescribes by exhaustive join.
pub fn verify_overlap_contract(noise: &NoiseSet, irs: &Irs) -> Result<()> {
    let srcs: HashSet<&str> = noise.pairs.iter().map(|p| p.source.as_str()).collect();
    let tgts: HashSet<&str> = noise.pairs.iter().map(|p| p.target.as_str()).collect();
    let pairs: HashSet<&SentencePair> = noise.pairs.iter().collect();
    let irs_src_in = irs.pairs.iter().filter(|p| srcs.contains(p.source.as_str())).count();
    let irs_tgt_in = irs.pairs.iter().filter(|p| tgts.contains(p.target.as_str())).count();
    let irs_pairs_in = irs.pairs.iter().filter(|p| pairs.contains(p)).count();
    let n = irs.len();

    let (want_src, want_tgt, want_pairs) = match noise.pattern {
        NoisePattern::Rr => (n, n, n),
        NoisePattern::Ru => (n, 0, 0),
        NoisePattern::Ur => (0, n, 0),
        NoisePattern::Uu => (0, 0, 0),
    };
    if (irs_src_in, irs_tgt_in, irs_pairs_in) != (want_src, want_tgt, want_pairs) {
        return Err(Error::Invariant(format!(
            "{} set shares {irs_src_in} sources, {irs_tgt_in} targets, {irs_pairs_in} pairs with the IRS \
             (expected {want_src}, {want_tgt}, {want_pairs})",
            noise.pattern
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn donor_corpus(n: usize) -> ParallelCorpus {
        ParallelCorpus::new(
            (0..n)
                .map(|i| SentencePair::new(format!("quelle {i}"), format!("target {i}")))
                .collect(),
        )
    }

    fn irs(n: usize) -> Irs {
        Irs::new(
            (0..n)
                .map(|i| SentencePair::new(format!("irs src {i}"), format!("irs tgt {}", (i + 1) % n)))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn uu_forced_derangement() {
        let donor = Donor::new(&donor_corpus(2));
        for seed in 0..20 {
            let set = gen_uu(&donor, 2, seed).unwrap();
            for p in &set.pairs {
                assert!(!donor.is_related(&p.source, &p.target));
            }
            let srcs: HashSet<_> = set.pairs.iter().map(|p| p.source.as_str()).collect();
            assert_eq!(srcs, HashSet::from(["quelle 0", "quelle 1"]));
        }
        assert!(gen_uu(&Donor::new(&donor_corpus(1)), 1, 0).is_err());
        assert!(gen_uu(&donor, 3, 0).is_err());
    }

    #[test]
    fn uu_no_aligned_pairs_and_unique() {
        let donor = Donor::new(&donor_corpus(500));
        let set = gen_uu(&donor, 300, 11).unwrap();
        let aligned: HashSet<(String, String)> = donor_corpus(500)
            .pairs
            .into_iter()
            .map(|p| (p.source, p.target))
            .collect();
        assert!(set
            .pairs
            .iter()
            .all(|p| !aligned.contains(&(p.source.clone(), p.target.clone()))));
        assert_eq!(set.pairs.iter().map(|p| &p.source).collect::<HashSet<_>>().len(), 300);
        assert_eq!(set.pairs.iter().map(|p| &p.target).collect::<HashSet<_>>().len(), 300);
    }

    #[test]
    fn rr_multiplicities() {
        let i = irs(3);
        assert_eq!(gen_rr(&i, 1).unwrap().pairs, i.pairs);
        let set = gen_rr(&i, 4).unwrap();
        assert_eq!(set.len(), 12);
        let mut hist: HashMap<&SentencePair, usize> = HashMap::new();
        for p in &set.pairs {
            *hist.entry(p).or_default() += 1;
        }
        assert_eq!(hist.len(), 3);
        assert!(hist.values().all(|&c| c == 4));
    }

    #[test]
    fn ru_and_ur_small() {
        let donor = Donor::new(&donor_corpus(10));
        let ru = gen_ru(&["s".to_string()], &donor, 2, 0).unwrap();
        assert_eq!(ru.len(), 2);
        assert!(ru.pairs.iter().all(|p| p.source == "s"));
        assert_ne!(ru.pairs[0].target, ru.pairs[1].target);

        let ur = gen_ur(&["t".to_string()], &donor, 2, 0).unwrap();
        assert!(ur.pairs.iter().all(|p| p.target == "t"));
        assert_ne!(ur.pairs[0].source, ur.pairs[1].source);

        assert!(gen_ru(&["s".to_string()], &donor, 11, 0).is_err());
        assert!(gen_ur(&["a".to_string(), "b".to_string()], &donor, 6, 0).is_err());
    }

    #[test]
    fn donor_dedup_and_exclusion() {
        let mut c = donor_corpus(3);
        c.pairs.push(SentencePair::new("quelle 0", "target 9"));
        c.pairs.push(SentencePair::new("irs src 0", "irs tgt 1"));
        let i = irs(2);
        let d = Donor::new(&c).excluding(&i);
        assert_eq!(d.source_pool().len(), 3);
        assert!(!d.source_pool().iter().any(|s| s.starts_with("irs")));
        assert!(!d.target_pool().iter().any(|s| s.starts_with("irs")));
        assert!(d.is_related("quelle 0", "target 9"));
    }

    #[test]
    fn overlap_contract_all_patterns() {
        let i = irs(5);
        let donor = Donor::new(&donor_corpus(200)).excluding(&i);
        for pattern in NoisePattern::ALL {
            let spec = NoiseSpec {
                pattern,
                unit_count: 5,
                repeats: 3,
                seed: 4,
                donor: None,
            };
            let set = generate(&spec, &i, &donor).unwrap();
            assert_eq!(set.len(), 15);
            verify_overlap_contract(&set, &i).unwrap();
        }
        let rr = gen_rr(&i, 2).unwrap();
        let mislabeled = NoiseSet {
            pattern: NoisePattern::Uu,
            pairs: rr.pairs,
        };
        assert!(verify_overlap_contract(&mislabeled, &i).is_err());
    }

    #[test]
    fn irs_and_vrs_validation() {
        assert!(Irs::new(vec![SentencePair::new("a", "x"), SentencePair::new("a", "y")]).is_err());
        assert!(Irs::new(vec![SentencePair::new("a", "x"), SentencePair::new("b", "x")]).is_err());
        let i = Irs::new(vec![SentencePair::new("a", "x"), SentencePair::new("b", "y")]).unwrap();
        assert!(Vrs::new(
            vec![SentencePair::new("a", "good a"), SentencePair::new("b", "good b")],
            &i
        )
        .is_ok());
        assert!(Vrs::new(vec![SentencePair::new("a", "x"), SentencePair::new("b", "good b")], &i).is_err());
        assert!(Vrs::new(vec![SentencePair::new("a", "good a")], &i).is_err());
        let clean = ParallelCorpus::new(vec![SentencePair::new("b", "y")]);
        assert!(i.check_disjoint_from(&clean).is_err());
    }

    #[test]
    fn training_corpus_emission() {
        let clean = donor_corpus(160);
        let noise = gen_rr(&irs(21), 1).unwrap();
        let t = emit_training_corpus(&clean, &noise, 5);
        assert_eq!(t.corpus.len(), 181);
        assert_eq!(t.noise_count(), 21);
        assert!((t.noise_fraction() - 21.0 / 181.0).abs() < 1e-12);
        for (p, prov) in t.corpus.pairs.iter().zip(&t.provenance) {
            assert_eq!(*prov == Provenance::Noise, p.source.starts_with("irs"));
        }

        let empty = NoiseSet {
            pattern: NoisePattern::Uu,
            pairs: vec![],
        };
        let t = emit_training_corpus(&clean, &empty, 5);
        let mut a = t.corpus.pairs.clone();
        let mut b = clean.pairs.clone();
        a.sort_by(|x, y| x.source.cmp(&y.source));
        b.sort_by(|x, y| x.source.cmp(&y.source));
        assert_eq!(a, b);
    }
}
