//! Subcommand arguments and their implementations.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use halluprobe_core::attnstats::{stats, AttentionAggregate, AttentionStats, AttentionStore};
use halluprobe_core::corpus::{read_lines, read_tsv_pairs, write_lines, ParallelCorpus};
use halluprobe_core::hpdetect::{
    attach_attention, build_token_set, detect_hp, HpConfig, HpOutcome, HpSample, HpThresholds,
};
use halluprobe_core::memorization::{compute_mem_values, plan_subsets, select_sets, ComparisonSets, RunManifest};
use halluprobe_core::metrics::{corpus_bleu_str, BleuParams, Metric, MetricKind, Smoothing};
use halluprobe_core::nhestimate::{estimate_anh_file, AnhParams, AnhReport};
use halluprobe_core::nheval::{Annotations, TargetIndex};
use halluprobe_core::noiseforge::{
    emit_training_corpus, generate, verify_overlap_contract, write_training_corpus, Donor, Irs, NoisePattern,
    NoiseSpec, ProvenanceSummary,
};
use serde::Serialize;

use crate::config::{load_config, StudyConfig};
use crate::error::{CliError, Result};
use crate::report::{opt_f64, tsv, write_json, write_text, Report, Stages};
use crate::study::{
    evaluate_translations, open_backend_from, parse_log_base, parse_metric, run_amplification_study, run_hp_study,
    run_nh_study, write_nh_outputs, NhEvaluation,
};

#[derive(Debug, Parser)]
#[command(
    name = "halluprobe",
    version,
    about = "Hallucination diagnostics for neural machine translation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score hypotheses against references.
    Metrics(MetricsArgs),
    /// Memorization values and comparison sets from a run manifest.
    Mve(MveArgs),
    /// Draw t random training subsets of size m out of n samples.
    MvePlan(MvePlanArgs),
    /// Hallucinations under source perturbation.
    HpDetect(HpDetectArgs),
    /// Build a noised training corpus.
    NoiseForge(NoiseForgeArgs),
    /// Natural-hallucination evaluation of model translations.
    NhEval(NhEvalArgs),
    /// Reference-free natural-hallucination estimate for a translated corpus.
    NhEstimate(NhEstimateArgs),
    /// Cross-attention statistics.
    AttnStats(AttnStatsArgs),
    /// Run a whole study from a config file.
    Study(StudyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmoothingArg {
    None,
    AddOne,
}

#[derive(Debug, Args, Serialize)]
pub struct MetricsArgs {
    /// `hypothesis<TAB>reference` per line.
    #[arg(long, required_unless_present = "hyp", conflicts_with = "hyp")]
    pub pairs: Option<PathBuf>,
    #[arg(long, requires = "reference")]
    pub hyp: Option<PathBuf>,
    #[arg(long = "ref", requires = "hyp")]
    pub reference: Option<PathBuf>,
    /// chrf, bleu, adjusted_bleu or accuracy.
    #[arg(long, default_value = "chrf")]
    pub metric: String,
    #[arg(long)]
    pub char_n: Option<usize>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub max_n: Option<usize>,
    #[arg(long, value_enum)]
    pub smoothing: Option<SmoothingArg>,
    #[arg(long)]
    pub lowercase: bool,
    /// One score per line; `-` for stdout.
    #[arg(long)]
    pub per_sentence: Option<PathBuf>,
    /// Summary report; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct MvePlanArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub t: usize,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub seed: u64,
    /// Membership file: one line of space-separated sample IDs per model.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct MveArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// References by sample ID; defaults to the manifest's own.
    #[arg(long = "refs")]
    pub references: Option<PathBuf>,
    #[arg(long, default_value = "chrf")]
    pub metric: String,
    #[arg(long)]
    pub lowercase: bool,
    #[arg(long, default_value_t = 2)]
    pub min_exclusions: usize,
    /// Size k of the memorized and random sets; sets are skipped when absent.
    #[arg(long = "top", visible_alias = "k")]
    pub top: Option<usize>,
    #[arg(long, requires = "top")]
    pub seed: Option<u64>,
    #[arg(long, allow_hyphen_values = true)]
    pub floor: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct HpDetectArgs {
    /// Directory with `src.txt` and `tgt.txt`.
    #[arg(long)]
    pub corpus: PathBuf,
    /// `manifest:FILE` or `cmd:"PROG ARGS"`.
    #[arg(long)]
    pub backend: String,
    #[arg(long)]
    pub nondeterministic: bool,
    /// Sample IDs to test, one per line or as the last column of a TSV; all samples when absent.
    #[arg(long = "set", visible_alias = "ids")]
    pub set: Option<PathBuf>,
    #[arg(long, visible_alias = "topk", default_value_t = 100)]
    pub top_k: usize,
    #[arg(long, default_value_t = 30)]
    pub tokens: usize,
    #[arg(long, visible_alias = "seed")]
    pub token_seed: u64,
    /// Base-translation gate and perturbed-output ceiling, as `BASE,INNER`.
    #[arg(long, value_delimiter = ',', num_args = 1, default_value = "0.09,0.01")]
    pub thresholds: Vec<f64>,
    #[arg(long, default_value_t = 16)]
    pub max_inflight: usize,
    #[arg(long)]
    pub attention: Option<PathBuf>,
    #[arg(long, default_value = "e")]
    pub log_base: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct NoiseForgeArgs {
    /// Clean training corpus to merge the noise into; only noise is written when absent.
    #[arg(long, required_unless_present = "donor")]
    pub clean: Option<PathBuf>,
    #[arg(long)]
    pub irs: PathBuf,
    /// Donor pool for unrelated sides; defaults to the clean corpus.
    #[arg(long)]
    pub donor: Option<PathBuf>,
    #[arg(long)]
    pub pattern: NoisePattern,
    #[arg(long, default_value_t = halluprobe_core::noiseforge::DEFAULT_UNIT_COUNT)]
    pub unit_count: usize,
    #[arg(long, default_value_t = halluprobe_core::noiseforge::DEFAULT_REPEATS)]
    pub repeats: usize,
    #[arg(long)]
    pub seed: u64,
    /// Seed of the merge shuffle; defaults to `--seed`.
    #[arg(long)]
    pub shuffle_seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct NhEvalArgs {
    /// `DIR/<pattern>/{irs,vrs,test}.{src,hyp,ref}`, optional `train.tgt` per pattern.
    #[arg(long)]
    pub translations: PathBuf,
    /// Training targets used when a pattern directory has no `train.tgt`.
    #[arg(long)]
    pub train_targets: Option<PathBuf>,
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub top_bigrams: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct NhEstimateArgs {
    /// `source<TAB>translation`, or with a third score column when `--scores` is absent.
    #[arg(long)]
    pub pairs: PathBuf,
    /// One similarity score per line, aligned with `--pairs`.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    #[arg(long, default_value_t = halluprobe_core::nhestimate::DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long, default_value_t = halluprobe_core::nhestimate::DEFAULT_NGRAM)]
    pub ngram: usize,
    #[arg(long, default_value_t = halluprobe_core::nhestimate::DEFAULT_THRESHOLD)]
    pub threshold: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct AttnStatsArgs {
    /// Directory of `.attn` files.
    #[arg(long)]
    pub dir: PathBuf,
    /// Named sample set as `NAME=FILE`; repeatable.
    #[arg(long = "set", value_name = "NAME=FILE")]
    pub named_sets: Vec<String>,
    /// Comma-separated set files, each named after its file stem.
    #[arg(long, value_delimiter = ',')]
    pub sets: Vec<PathBuf>,
    #[arg(long, default_value = "base")]
    pub variant: String,
    #[arg(long, default_value = "e")]
    pub log_base: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct StudyArgs {
    /// Expected study kind; checked against the config when given.
    pub kind: Option<String>,
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Override a config key, e.g. `--set k=20` or `--set tokens.seed=3`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Metrics(a) => metrics(&a),
        Command::Mve(a) => mve_compute(&a),
        Command::MvePlan(a) => mve_plan(&a),
        Command::HpDetect(a) => hp_detect(&a),
        Command::NoiseForge(a) => noise_forge(&a),
        Command::NhEval(a) => nh_eval(&a),
        Command::NhEstimate(a) => nh_estimate(&a),
        Command::AttnStats(a) => attn_stats(&a),
        Command::Study(a) => study(&a),
    }
}

fn warn_failed(stages: &Stages) {
    for s in stages.0.iter().filter(|s| s.state == crate::report::StageState::Failed) {
        eprintln!(
            "warning: stage `{}` failed: {}",
            s.name,
            s.detail.as_deref().unwrap_or("")
        );
    }
}

fn metric_kind(a: &MetricsArgs) -> Result<MetricKind> {
    let smoothing = a.smoothing.map(|s| match s {
        SmoothingArg::None => Smoothing::None,
        SmoothingArg::AddOne => Smoothing::AddOne,
    });
    Ok(match parse_metric(&a.metric)? {
        MetricKind::Chrf { char_n, beta } => MetricKind::Chrf {
            char_n: a.char_n.unwrap_or(char_n),
            beta: a.beta.unwrap_or(beta),
        },
        MetricKind::Bleu { max_n, smoothing: s } => MetricKind::Bleu {
            max_n: a.max_n.unwrap_or(max_n),
            smoothing: smoothing.unwrap_or(s),
        },
        MetricKind::AdjustedBleu { max_n, smoothing: s } => MetricKind::AdjustedBleu {
            max_n: a.max_n.unwrap_or(max_n),
            smoothing: smoothing.unwrap_or(s),
        },
        MetricKind::Accuracy => MetricKind::Accuracy,
    })
}

#[derive(Debug, Serialize)]
pub struct MetricsResult {
    pub metric: MetricKind,
    pub sentences: usize,
    pub mean: f64,
    /// Pooled 4-gram BLEU, for the BLEU family only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus_bleu: Option<f64>,
}

fn metrics(a: &MetricsArgs) -> Result<()> {
    let kind = metric_kind(a)?;
    if let MetricKind::Chrf { char_n: 0, .. }
    | MetricKind::Bleu { max_n: 0, .. }
    | MetricKind::AdjustedBleu { max_n: 0, .. } = kind
    {
        return Err(CliError::Config("n-gram order must be at least 1".into()));
    }
    let (hyps, refs) = match (&a.pairs, &a.hyp, &a.reference) {
        (Some(p), _, _) => read_tsv_pairs(p)?.into_iter().unzip(),
        (None, Some(h), Some(r)) => (read_lines(h)?, read_lines(r)?),
        _ => return Err(CliError::Config("give --pairs or both --hyp and --ref".into())),
    };
    let to_stdout = a.per_sentence.as_deref() == Some(Path::new("-"));
    if to_stdout && a.out.is_none() {
        return Err(CliError::Config("--per-sentence - needs --out for the summary".into()));
    }
    if hyps.len() != refs.len() {
        return Err(CliError::Config(format!(
            "{} hypotheses but {} references",
            hyps.len(),
            refs.len()
        )));
    }
    let metric = Metric {
        kind,
        lowercase: a.lowercase,
    };
    let scores: Vec<f64> = hyps.iter().zip(&refs).map(|(h, r)| metric.score(h, r)).collect();
    let per_line: String = scores.iter().map(|s| format!("{s:?}\n")).collect();
    match &a.per_sentence {
        Some(_) if to_stdout => print!("{per_line}"),
        Some(p) => write_text(p, &per_line)?,
        None => {}
    }
    let corpus_bleu = match kind {
        MetricKind::Bleu { .. } | MetricKind::AdjustedBleu { .. } if !hyps.is_empty() => {
            let (h, r): (Vec<String>, Vec<String>) = if a.lowercase {
                (
                    hyps.iter().map(|s| s.to_lowercase()).collect(),
                    refs.iter().map(|s| s.to_lowercase()).collect(),
                )
            } else {
                (hyps.clone(), refs.clone())
            };
            Some(corpus_bleu_str(&h, &r)?)
        }
        _ => None,
    };
    let result = MetricsResult {
        metric: kind,
        sentences: scores.len(),
        mean: if scores.is_empty() {
            0.0
        } else {
            scores.iter().sum::<f64>() / scores.len() as f64
        },
        corpus_bleu,
    };
    let mut stages = Stages::default();
    stages.ok("score");
    emit(a.out.as_deref(), &Report::new("metrics", a, stages, result)?)
}

fn emit(out: Option<&Path>, report: &impl Serialize) -> Result<()> {
    match out {
        Some(p) => write_json(p, report),
        None => {
            let text = serde_json::to_string_pretty(report).map_err(|e| CliError::Core(e.into()))?;
            println!("{text}");
            Ok(())
        }
    }
}

fn mve_plan(a: &MvePlanArgs) -> Result<()> {
    let plan = plan_subsets(a.n, a.t, a.m, a.seed).map_err(CliError::stage("plan subsets"))?;
    let lines = (0..plan.t()).map(|k| {
        plan.row_ids(k)
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(" ")
    });
    write_lines(&a.out, lines).map_err(CliError::stage("plan subsets"))
}

#[derive(Debug, Serialize)]
pub struct MveResult {
    pub metric: MetricKind,
    pub samples: usize,
    pub defined: usize,
    pub eligible: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sets: Option<ComparisonSets>,
}

fn mve_compute(a: &MveArgs) -> Result<()> {
    let kind = parse_metric(&a.metric)?;
    let manifest = RunManifest::load(&a.manifest).map_err(CliError::stage("load manifest"))?;
    let refs = a.references.as_deref().map(read_lines).transpose()?;
    let metric = Metric {
        kind,
        lowercase: a.lowercase,
    };
    let records = compute_mem_values(&manifest, refs.as_deref(), &metric, a.min_exclusions)
        .map_err(CliError::stage("memorization values"))?;
    let mut stages = Stages::default();
    stages.ok("memorization values");
    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            vec![
                r.sample_id.to_string(),
                opt_f64(r.mem_value),
                r.n_included.to_string(),
                r.n_excluded.to_string(),
                r.eligible.to_string(),
            ]
        })
        .collect();
    write_text(
        &a.out.join("mem_values.tsv"),
        &tsv(
            &["sample_id", "mem_value", "n_included", "n_excluded", "eligible"],
            rows,
        ),
    )?;
    let sets = match a.top {
        Some(k) => {
            let seed = a
                .seed
                .ok_or_else(|| CliError::Config("--top needs an explicit --seed".into()))?;
            let sets = select_sets(&records, k, seed, a.floor.unwrap_or(f64::NEG_INFINITY))
                .map_err(CliError::stage("comparison sets"))?;
            let rows = sets
                .memorized
                .iter()
                .map(|id| vec!["memorized".to_string(), id.to_string()])
                .chain(sets.random.iter().map(|id| vec!["random".to_string(), id.to_string()]));
            write_text(&a.out.join("sets.tsv"), &tsv(&["set", "sample_id"], rows))?;
            stages.ok("comparison sets");
            Some(sets)
        }
        None => {
            stages.skipped("comparison sets", "no --top given");
            None
        }
    };
    let result = MveResult {
        metric: kind,
        samples: records.len(),
        defined: records.iter().filter(|r| r.mem_value.is_some()).count(),
        eligible: records.iter().filter(|r| r.eligible).count(),
        sets,
    };
    write_json(&a.out.join("report.json"), &Report::new("mve", a, stages, result)?)
}

#[derive(Debug, Serialize)]
pub struct HpDetectResult {
    pub backend: String,
    pub tokens: Vec<String>,
    pub outcome: HpOutcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attention: Option<HpAttention>,
}

#[derive(Debug, Serialize)]
pub struct HpAttention {
    pub annotated: usize,
    pub missing: usize,
    pub base: Option<AttentionAggregate>,
    pub perturbed: Option<AttentionAggregate>,
}

fn read_ids(path: &Path) -> Result<Vec<usize>> {
    let mut ids = Vec::new();
    for (i, line) in read_lines(path)?.iter().enumerate() {
        let field = line.rsplit('\t').next().unwrap_or("").trim();
        if field.is_empty() {
            continue;
        }
        match field.parse() {
            Ok(id) => ids.push(id),
            // header row of a sets table
            Err(_) if i == 0 => {}
            Err(e) => {
                return Err(CliError::Core(halluprobe_core::Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    msg: format!("bad sample id `{field}`: {e}"),
                }))
            }
        }
    }
    Ok(ids)
}

fn hp_detect(a: &HpDetectArgs) -> Result<()> {
    let log_base = parse_log_base(&a.log_base)?;
    let corpus = ParallelCorpus::read_dir(&a.corpus).map_err(CliError::stage("load corpus"))?;
    let [base, inner] = a.thresholds[..] else {
        return Err(CliError::Config(format!(
            "--thresholds takes BASE,INNER, got {:?}",
            a.thresholds
        )));
    };
    let ids = match &a.set {
        Some(p) => read_ids(p)?,
        None => (0..corpus.len()).collect(),
    };
    if let Some(bad) = ids.iter().find(|&&i| i >= corpus.len()) {
        return Err(CliError::Config(format!(
            "sample id {bad} outside a corpus of {}",
            corpus.len()
        )));
    }
    let tokens = build_token_set(corpus.sources(), a.top_k, a.tokens, a.token_seed)
        .map_err(CliError::stage("perturbation tokens"))?;
    let backend = open_backend_from(&a.backend, a.max_inflight, &[], a.nondeterministic)?;
    let samples: Vec<HpSample> = ids
        .iter()
        .map(|&id| HpSample {
            id,
            source: corpus.pairs[id].source.clone(),
            reference: corpus.pairs[id].target.clone(),
        })
        .collect();
    let cfg = HpConfig {
        thresholds: HpThresholds { base, inner },
        bleu: BleuParams::default(),
    };
    let outcome = detect_hp(&samples, backend.as_ref(), &tokens, &cfg).map_err(CliError::stage("hp detection"))?;
    let requests = samples.len() + outcome.gated * tokens.tokens.len();
    if requests > 0 && outcome.untranslated.len() == requests {
        return Err(CliError::BackendDown {
            stage: "hp detection".into(),
            detail: outcome.untranslated[0].error.clone(),
        });
    }
    let mut stages = Stages::default();
    stages.ok("hp detection");

    let rows: Vec<Vec<String>> = outcome
        .records
        .iter()
        .map(|r| {
            vec![
                r.sample_id.to_string(),
                r.token.clone(),
                format!("{:?}", r.base_score),
                format!("{:?}", r.delta_score),
                r.base_hyp.clone(),
                r.perturbed_hyp.clone(),
            ]
        })
        .collect();
    write_text(
        &a.out.join("hp_records.tsv"),
        &tsv(
            &[
                "sample_id",
                "token",
                "base_score",
                "delta_score",
                "base_hyp",
                "perturbed_hyp",
            ],
            rows,
        ),
    )?;
    let failed: Vec<Vec<String>> = outcome
        .untranslated
        .iter()
        .map(|u| {
            vec![
                u.sample_id.to_string(),
                u.token.clone().unwrap_or_else(|| "-".into()),
                u.error.clone(),
            ]
        })
        .collect();
    write_text(
        &a.out.join("untranslated.tsv"),
        &tsv(&["sample_id", "token", "error"], failed),
    )?;

    let attention = match &a.attention {
        None => None,
        Some(dir) => {
            let store = AttentionStore::load_dir(dir).map_err(CliError::stage("attention"))?;
            let (annotated, missing) = attach_attention(&outcome.records, &store, log_base);
            let mean = |pick: fn(&halluprobe_core::hpdetect::AnnotatedRecord) -> Option<AttentionStats>| {
                let s: Vec<AttentionStats> = annotated.iter().filter_map(pick).collect();
                mean_stats(&s, log_base)
            };
            stages.ok("attention");
            Some(HpAttention {
                annotated: annotated.len() - missing,
                missing,
                base: mean(|r| r.base_attention),
                perturbed: mean(|r| r.perturbed_attention),
            })
        }
    };
    let result = HpDetectResult {
        backend: backend.describe(),
        tokens: tokens.tokens.clone(),
        outcome,
        attention,
    };
    write_json(
        &a.out.join("report.json"),
        &Report::new("hp-detect", a, stages, result)?,
    )
}

fn mean_stats(s: &[AttentionStats], log_base: halluprobe_core::attnstats::LogBase) -> Option<AttentionAggregate> {
    if s.is_empty() {
        return None;
    }
    let n = s.len() as f64;
    Some(AttentionAggregate {
        count: s.len(),
        row_entropy: s.iter().map(|x| x.row_entropy).sum::<f64>() / n,
        diagonal_entropy: s.iter().map(|x| x.diagonal_entropy).sum::<f64>() / n,
        diagonal_mass: s.iter().map(|x| x.diagonal_mass).sum::<f64>() / n,
        last_token_attention: s.iter().map(|x| x.last_token_attention).sum::<f64>() / n,
        zero_diagonal: s.iter().filter(|x| x.zero_diagonal).count(),
        log_base,
    })
}

#[derive(Debug, Serialize)]
pub struct NoiseForgeResult {
    pub spec: NoiseSpec,
    pub noise_pairs: usize,
    pub overlap_contract: &'static str,
    pub provenance: ProvenanceSummary,
}

fn noise_forge(a: &NoiseForgeArgs) -> Result<()> {
    let clean = match &a.clean {
        Some(dir) => ParallelCorpus::read_dir(dir).map_err(CliError::stage("load clean corpus"))?,
        None => ParallelCorpus::default(),
    };
    let irs = Irs::read_dir(&a.irs).map_err(CliError::stage("load IRS"))?;
    irs.check_disjoint_from(&clean).map_err(CliError::stage("load IRS"))?;
    let donor_corpus = match &a.donor {
        Some(d) => ParallelCorpus::read_dir(d).map_err(CliError::stage("load donor"))?,
        None => clean.clone(),
    };
    let shuffle_seed = a.shuffle_seed.unwrap_or(a.seed);
    let donor = Donor::new(&donor_corpus).excluding(&irs);
    let spec = NoiseSpec {
        pattern: a.pattern,
        unit_count: a.unit_count,
        repeats: a.repeats,
        seed: a.seed,
        donor: a.donor.as_ref().map(|d| d.display().to_string()),
    };
    let noise = generate(&spec, &irs, &donor).map_err(CliError::stage("noise forge"))?;
    verify_overlap_contract(&noise, &irs).map_err(CliError::stage("overlap contract"))?;
    let train = emit_training_corpus(&clean, &noise, shuffle_seed);
    write_training_corpus(&a.out, &train, &spec, shuffle_seed).map_err(CliError::stage("write corpus"))?;
    let mut stages = Stages::default();
    stages.ok("noise forge");
    stages.ok("overlap contract");
    let clean_lines = train.corpus.len() - train.noise_count();
    let result = NoiseForgeResult {
        noise_pairs: noise.len(),
        overlap_contract: "verified",
        provenance: ProvenanceSummary {
            lines: train.corpus.len(),
            clean: clean_lines,
            noise: train.noise_count(),
            noise_fraction: train.noise_fraction(),
            merge: "shuffle".into(),
            shuffle_seed,
        },
        spec,
    };
    write_json(
        &a.out.join("report.json"),
        &Report::new("noise-forge", a, stages, result)?,
    )
}

fn nh_eval(a: &NhEvalArgs) -> Result<()> {
    let annotations = a
        .annotations
        .as_deref()
        .map(Annotations::load)
        .transpose()
        .map_err(CliError::stage("load annotations"))?;
    let default_targets = a
        .train_targets
        .as_deref()
        .map(TargetIndex::load)
        .transpose()
        .map_err(CliError::stage("load training targets"))?;
    let (eval, bigrams): (NhEvaluation, _) = evaluate_translations(
        &a.translations,
        annotations.as_ref(),
        |_| Ok(default_targets.clone()),
        a.top_bigrams,
    )?;
    write_nh_outputs(&a.out, &eval, &bigrams)?;
    let mut stages = Stages::default();
    stages.ok("nh evaluation");
    write_json(&a.out, &Report::new("nh-eval", a, stages, eval)?)
}

#[derive(Debug, Serialize)]
pub struct NhEstimateResult {
    pub counts: halluprobe_core::nhestimate::AnhCounts,
    #[serde(flatten)]
    pub report: AnhReport,
}

fn nh_estimate(a: &NhEstimateArgs) -> Result<()> {
    let params = AnhParams {
        epsilon: a.epsilon,
        n: a.ngram,
        t: a.threshold,
    };
    let report = estimate_anh_file(&a.pairs, a.scores.as_deref(), params).map_err(CliError::stage("nh estimate"))?;
    let mut stages = Stages::default();
    stages.ok("nh estimate");
    let result = NhEstimateResult {
        counts: report.counts(),
        report,
    };
    write_json(&a.out, &Report::new("nh-estimate", a, stages, result)?)
}

#[derive(Debug, Serialize)]
pub struct AttnSetRow {
    pub set: String,
    pub aggregate: Option<AttentionAggregate>,
    pub missing: Vec<usize>,
}

fn attn_stats(a: &AttnStatsArgs) -> Result<()> {
    let base = parse_log_base(&a.log_base)?;
    let store = AttentionStore::load_dir(&a.dir).map_err(CliError::stage("load attention"))?;
    let mut sets: Vec<(String, Vec<usize>)> = Vec::new();
    for s in &a.named_sets {
        let (name, file) = s
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set expects NAME=FILE, got `{s}`")))?;
        sets.push((name.to_string(), read_ids(Path::new(file))?));
    }
    for file in &a.sets {
        let name = file
            .file_stem()
            .map_or_else(|| file.display().to_string(), |s| s.to_string_lossy().into_owned());
        sets.push((name, read_ids(file)?));
    }
    let ids_with_variant: Vec<usize> = store
        .sample_ids()
        .into_iter()
        .filter(|(_, variants)| variants.contains(&a.variant))
        .map(|(id, _)| id)
        .collect();
    if sets.is_empty() {
        sets.push(("all".into(), ids_with_variant.clone()));
    }

    let per_sample: Vec<Vec<String>> = ids_with_variant
        .iter()
        .filter_map(|&id| store.get(id, &a.variant).map(|m| (id, stats(m, base))))
        .map(|(id, s)| {
            vec![
                id.to_string(),
                format!("{:?}", s.row_entropy),
                format!("{:?}", s.diagonal_entropy),
                format!("{:?}", s.diagonal_mass),
                format!("{:?}", s.last_token_attention),
            ]
        })
        .collect();
    write_text(
        &a.out.with_extension("tsv"),
        &tsv(
            &[
                "sample_id",
                "row_entropy",
                "diagonal_entropy",
                "diagonal_mass",
                "last_token_attention",
            ],
            per_sample,
        ),
    )?;

    let mut stages = Stages::default();
    let rows: Vec<AttnSetRow> = sets
        .into_iter()
        .map(|(name, ids)| {
            let (agg, missing) = store.aggregate_set(&ids, &a.variant, base);
            match &agg {
                Ok(_) => stages.ok(format!("aggregate {name}")),
                Err(e) => stages.failed(format!("aggregate {name}"), e),
            }
            AttnSetRow {
                set: name,
                aggregate: agg.ok(),
                missing,
            }
        })
        .collect();
    warn_failed(&stages);
    write_json(&a.out, &Report::new("attn-stats", a, stages, rows)?)
}

fn study(a: &StudyArgs) -> Result<()> {
    let (written, resolved) = load_config(&a.config, &a.overrides)?;
    if let Some(kind) = &a.kind {
        if kind != resolved.name() {
            return Err(CliError::Config(format!(
                "asked for a `{kind}` study but {} configures `{}`",
                a.config.display(),
                resolved.name()
            )));
        }
    }
    let path = a.out.join("report.json");
    match &resolved {
        StudyConfig::Hp(c) => {
            let r = run_hp_study(&written, c, &a.out)?;
            warn_failed(&r.stages);
            write_json(&path, &r)
        }
        StudyConfig::Nh(c) => {
            let r = run_nh_study(&written, c, &a.out)?;
            warn_failed(&r.stages);
            write_json(&path, &r)
        }
        StudyConfig::Amplification(c) => {
            let r = run_amplification_study(&written, c, &a.out)?;
            warn_failed(&r.stages);
            write_json(&path, &r)
        }
    }
}
