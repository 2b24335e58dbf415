//! Synthetic study fixtures shared by the CLI tests and the acceptance run.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use halluprobe_core::attnstats::{write_attention_file, AttentionFile, AttentionMatrix};
use halluprobe_core::corpus::{write_lines, ParallelCorpus, SentencePair};
use halluprobe_core::memorization::{plan_subsets, ManifestHeader, ModelOutputs, RunManifest};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_halluprobe")
}

pub fn translator_bin() -> &'static str {
    env!("CARGO_BIN_EXE_halluprobe-dict-translator")
}

pub fn halluprobe(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("spawn halluprobe")
}

pub fn source_word(j: usize) -> String {
    format!("s{j}")
}

pub fn target_word(j: usize) -> String {
    format!("t{j}")
}

/// Source sentences over `vocab` words and their word-by-word references.
pub fn dictionary_corpus(n: usize, vocab: usize, seed: u64) -> ParallelCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = (0..n)
        .map(|i| {
            let len = rng.gen_range(5..=12);
            let words: Vec<usize> = (0..len).map(|_| rng.gen_range(0..vocab)).collect();
            let mut source: Vec<String> = words.iter().map(|&j| source_word(j)).collect();
            // keeps every source distinct
            source.push(format!("id{i}"));
            let mut target: Vec<String> = words.iter().map(|&j| target_word(j)).collect();
            target.push(format!("id{i}"));
            SentencePair {
                source: source.join(" "),
                target: target.join(" "),
            }
        })
        .collect();
    ParallelCorpus { pairs }
}

/// Hypotheses for t models: training members are reproduced with a few
/// words dropped, non-members lose most of their words.
pub fn synthetic_manifest(corpus: &ParallelCorpus, t: usize, m: usize, seed: u64) -> RunManifest {
    let n = corpus.len();
    let membership = plan_subsets(n, t, m, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let strength: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
    let outputs = (0..t)
        .map(|k| {
            let hyps = corpus
                .pairs
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let keep = if membership.contains(k, i) {
                        0.5 + 0.5 * strength[i]
                    } else {
                        0.4
                    };
                    let words: Vec<&str> = p.target.split_whitespace().filter(|_| rng.gen_bool(keep)).collect();
                    Some(words.join(" "))
                })
                .collect();
            ModelOutputs::Hypotheses(hyps)
        })
        .collect();
    let header = ManifestHeader {
        n,
        t,
        m,
        seed,
        metric: None,
        membership: "membership.txt".into(),
        index: "index.txt".into(),
        references: None,
        models: Vec::new(),
    };
    let mut manifest = RunManifest::new(header, membership, outputs).unwrap();
    manifest.references = Some(corpus.targets().map(str::to_string).collect());
    manifest
}

/// Softmax rows over random logits with a bump near the diagonal.
pub fn random_attention(id: usize, variant: &str, rows: usize, cols: usize, rng: &mut impl Rng) -> AttentionMatrix {
    let data: Vec<Vec<f64>> = (0..rows)
        .map(|i| {
            let centre = (i as f64 + 0.5) * cols as f64 / rows as f64;
            let logits: Vec<f64> = (0..cols)
                .map(|j| rng.gen_range(0.0..1.0) - 0.5 * (j as f64 + 0.5 - centre).abs())
                .collect();
            let z: f64 = logits.iter().map(|l| l.exp()).sum();
            logits.iter().map(|l| l.exp() / z).collect()
        })
        .collect();
    AttentionMatrix::from_rows(id, variant, &data).unwrap()
}

pub struct HpFixture {
    pub config: PathBuf,
}

/// Writes corpus, dictionary, manifest and an `hp` study config under `dir`.
pub fn hp_fixture(dir: &Path, n: usize, seed: u64) -> HpFixture {
    let vocab = 300;
    let corpus = dictionary_corpus(n, vocab, seed);
    corpus.write_dir(&dir.join("corpus")).unwrap();
    let dict: Vec<String> = (0..vocab)
        .map(|j| format!("{}\t{}", source_word(j), target_word(j)))
        .collect();
    write_lines(&dir.join("dict.tsv"), &dict).unwrap();
    synthetic_manifest(&corpus, 10, n / 2, seed)
        .write(&dir.join("manifest"))
        .unwrap();
    let attn = dir.join("attention");
    std::fs::create_dir_all(&attn).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa77);
    for (i, p) in corpus.pairs.iter().enumerate() {
        let (s, t) = (p.source.split_whitespace().count(), p.target.split_whitespace().count());
        let m = random_attention(i, "base", t, s, &mut rng);
        write_attention_file(&attn.join(format!("{i}.base.attn")), &AttentionFile::from_matrix(&m)).unwrap();
    }

    let spec = format!(
        "cmd:\"{} --dict {} --hallucinate-rate 0.05 --seed 7\"",
        translator_bin(),
        dir.join("dict.tsv").display()
    );
    let config = format!(
        r#"study = "hp"
corpus = "corpus"
manifest = "manifest"
attention = "attention"
k = {k}
set_seed = 11
metrics = ["chrf", "bleu", "accuracy"]
exclusion_sweep = [2, 3, 4]

[backend]
spec = '{spec}'
max_inflight = 32

[tokens]
top_k = 100
count = 30
seed = 5
"#,
        k = (n / 10).max(1),
    );
    let path = dir.join("study.toml");
    std::fs::write(&path, config).unwrap();
    HpFixture { config: path }
}

/// Reads every regular file under `dir` into a sorted list of (relative path, bytes).
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}
