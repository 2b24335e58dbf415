//! End-to-end studies: perturbation hallucinations vs memorization,
//! corpus-noise natural hallucinations, and hallucination amplification.

use std::path::{Path, PathBuf};

use halluprobe_core::attnstats::{AttentionAggregate, AttentionStore, LogBase, BASE_VARIANT};
use halluprobe_core::backend::{open_backend, BackendOptions, BackendSpec, Translate};
use halluprobe_core::corpus::ParallelCorpus;
use halluprobe_core::hpdetect::{build_token_set, detect_hp, HpConfig, HpOutcome, HpSample, PerturbationTokenSet};
use halluprobe_core::memorization::{compute_mem_values, reflag, select_sets, ComparisonSets, MemRecord, RunManifest};
use halluprobe_core::metrics::{Metric, MetricKind};
use halluprobe_core::nhestimate::{amplification_report, estimate_anh_file, AmplificationTable, AnhCounts, AnhParams};
use halluprobe_core::nheval::{
    bigram_plot_rows, render_summary_tsv, summarize, Annotations, PatternTranslations, ProxyParams, SummaryRow,
    TargetIndex,
};
use halluprobe_core::noiseforge::{
    emit_training_corpus, generate, verify_overlap_contract, write_training_corpus, Donor, Irs, NoisePattern, NoiseSpec,
};
use serde::Serialize;

use crate::config::{AmplificationStudyConfig, HpStudyConfig, NhStudyConfig, StudyConfig};
use crate::error::{CliError, Result};
use crate::report::{opt_f64, tsv, write_json, write_text, Report, Stages};

pub fn parse_log_base(s: &str) -> Result<LogBase> {
    match s {
        "e" | "ln" | "natural" => Ok(LogBase::Natural),
        "2" | "bits" => Ok(LogBase::Two),
        other => Err(CliError::Config(format!("log base must be `e` or `2`, got `{other}`"))),
    }
}

pub fn parse_metric(name: &str) -> Result<MetricKind> {
    name.parse()
        .map_err(|e: halluprobe_core::Error| CliError::Config(e.to_string()))
}

pub fn open_backend_from(
    spec: &str,
    max_inflight: usize,
    env_passthrough: &[String],
    nondeterministic: bool,
) -> Result<Box<dyn Translate>> {
    let parsed: BackendSpec = spec
        .parse()
        .map_err(|e: halluprobe_core::BackendError| CliError::Config(e.to_string()))?;
    let opts = BackendOptions {
        nondeterministic,
        max_inflight,
        env_passthrough: (!env_passthrough.is_empty()).then(|| env_passthrough.to_vec()),
    };
    open_backend(&parsed, &opts).map_err(CliError::stage("backend"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SetHp {
    pub set: String,
    pub unique_hp: usize,
    pub total_hp: usize,
    pub samples: usize,
    pub gated: usize,
    pub untranslated: usize,
}

impl SetHp {
    fn new(set: &str, o: &HpOutcome) -> Self {
        Self {
            set: set.to_string(),
            unique_hp: o.unique_hp,
            total_hp: o.total_hp,
            samples: o.samples,
            gated: o.gated,
            untranslated: o.untranslated.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub lower: f64,
    pub width: f64,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemDistribution {
    pub defined: usize,
    pub eligible: usize,
    pub mean: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub histogram: Histogram,
}

fn distribution(records: &[MemRecord]) -> MemDistribution {
    let vals: Vec<f64> = records
        .iter()
        .filter(|r| r.eligible)
        .filter_map(|r| r.mem_value)
        .collect();
    let (lower, width, bins) = (-1.0, 0.1, 20);
    let mut counts = vec![0; bins];
    for v in &vals {
        let b = (((v - lower) / width).floor() as isize).clamp(0, bins as isize - 1);
        counts[b as usize] += 1;
    }
    MemDistribution {
        defined: records.iter().filter(|r| r.mem_value.is_some()).count(),
        eligible: vals.len(),
        mean: (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64),
        min: vals.iter().copied().reduce(f64::min),
        max: vals.iter().copied().reduce(f64::max),
        histogram: Histogram { lower, width, counts },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSummary {
    pub metric: MetricKind,
    pub distribution: MemDistribution,
    pub sets: ComparisonSets,
    /// Memorized then random, as in the comparison tables.
    pub table: Vec<SetHp>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FloorPoint {
    pub floor: f64,
    pub random: Option<SetHp>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExclusionPoint {
    pub min_exclusions: usize,
    pub eligible: usize,
    pub table: Vec<SetHp>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttentionRow {
    pub set: String,
    pub aggregate: Option<AttentionAggregate>,
    pub missing: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HpStudyResult {
    pub samples: usize,
    pub backend: String,
    pub tokens: PerturbationTokenSet,
    pub metrics: Vec<MetricSummary>,
    pub sweep_metric: MetricKind,
    pub floor_sweep: Vec<FloorPoint>,
    pub exclusion_sweep: Vec<ExclusionPoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attention: Option<Vec<AttentionRow>>,
}

struct HpContext<'a> {
    corpus: &'a ParallelCorpus,
    backend: &'a dyn Translate,
    tokens: &'a PerturbationTokenSet,
    cfg: HpConfig,
}

impl HpContext<'_> {
    fn run(&self, stage: &str, ids: &[usize]) -> Result<HpOutcome> {
        let samples: Vec<HpSample> = ids
            .iter()
            .map(|&id| HpSample {
                id,
                source: self.corpus.pairs[id].source.clone(),
                reference: self.corpus.pairs[id].target.clone(),
            })
            .collect();
        let out = detect_hp(&samples, self.backend, self.tokens, &self.cfg).map_err(CliError::stage(stage))?;
        let requests = samples.len() + out.gated * self.tokens.tokens.len();
        if requests > 0 && out.untranslated.len() == requests {
            return Err(CliError::BackendDown {
                stage: stage.to_string(),
                detail: out.untranslated[0].error.clone(),
            });
        }
        Ok(out)
    }
}

struct HpSidecars {
    mem_values: Vec<Vec<String>>,
    sets: Vec<Vec<String>>,
    records: Vec<Vec<String>>,
}

pub fn run_hp_study(written: &StudyConfig, cfg: &HpStudyConfig, out: &Path) -> Result<Report<HpStudyResult>> {
    let mut stages = Stages::default();
    let log_base = parse_log_base(&cfg.log_base)?;
    let kinds: Vec<MetricKind> = cfg.metrics.iter().map(|m| parse_metric(m)).collect::<Result<_>>()?;
    if kinds.is_empty() {
        return Err(CliError::Config("at least one metric is required".into()));
    }
    let sweep_metric = match &cfg.sweep_metric {
        Some(m) => parse_metric(m)?,
        None => kinds
            .iter()
            .copied()
            .find(|k| matches!(k, MetricKind::Bleu { .. }))
            .unwrap_or(kinds[0]),
    };
    let floor = cfg.floor.unwrap_or(f64::NEG_INFINITY);

    let corpus = ParallelCorpus::read_dir(&cfg.corpus).map_err(CliError::stage("load corpus"))?;
    let manifest = RunManifest::load(&cfg.manifest).map_err(CliError::stage("load manifest"))?;
    if manifest.n() != corpus.len() {
        return Err(CliError::Stage {
            stage: "load manifest".into(),
            source: halluprobe_core::Error::Invariant(format!(
                "manifest covers {} samples, corpus has {}",
                manifest.n(),
                corpus.len()
            )),
        });
    }
    let refs: Vec<String> = corpus.targets().map(str::to_string).collect();
    stages.ok("load");

    let tokens = build_token_set(corpus.sources(), cfg.tokens.top_k, cfg.tokens.count, cfg.tokens.seed)
        .map_err(CliError::stage("perturbation tokens"))?;
    let backend = open_backend_from(
        &cfg.backend.spec,
        cfg.backend.max_inflight,
        &cfg.backend.env_passthrough,
        cfg.backend.nondeterministic,
    )?;
    let ctx = HpContext {
        corpus: &corpus,
        backend: backend.as_ref(),
        tokens: &tokens,
        cfg: HpConfig {
            thresholds: cfg.thresholds,
            ..HpConfig::default()
        },
    };
    stages.ok("perturbation tokens");

    let mut side = HpSidecars {
        mem_values: Vec::new(),
        sets: Vec::new(),
        records: Vec::new(),
    };
    let mut summaries = Vec::new();
    let mut sweep_records = None;
    for kind in kinds
        .iter()
        .chain((!kinds.contains(&sweep_metric)).then_some(&sweep_metric))
    {
        let metric = Metric {
            kind: *kind,
            lowercase: cfg.lowercase,
        };
        let stage = format!("memorization values ({})", kind.name());
        let records =
            compute_mem_values(&manifest, Some(&refs), &metric, cfg.min_exclusions).map_err(CliError::stage(&stage))?;
        stages.ok(stage);
        if *kind == sweep_metric {
            sweep_records = Some(records.clone());
        }
        if !kinds.contains(kind) {
            continue;
        }
        for r in &records {
            side.mem_values.push(vec![
                kind.name().to_string(),
                r.sample_id.to_string(),
                opt_f64(r.mem_value),
                r.n_included.to_string(),
                r.n_excluded.to_string(),
                r.eligible.to_string(),
            ]);
        }
        let stage = format!("comparison sets ({})", kind.name());
        let sets = select_sets(&records, cfg.k, cfg.set_seed, floor).map_err(CliError::stage(&stage))?;
        stages.ok(stage);

        let mut table = Vec::new();
        for (name, ids) in [("memorized", &sets.memorized), ("random", &sets.random)] {
            let stage = format!("hp detection ({}, {name})", kind.name());
            let outcome = ctx.run(&stage, ids)?;
            stages.ok(stage);
            for id in ids.iter() {
                side.sets
                    .push(vec![kind.name().to_string(), name.to_string(), id.to_string()]);
            }
            for r in &outcome.records {
                side.records.push(vec![
                    kind.name().to_string(),
                    name.to_string(),
                    r.sample_id.to_string(),
                    r.token.clone(),
                    format!("{:?}", r.base_score),
                    format!("{:?}", r.delta_score),
                    r.base_hyp.clone(),
                    r.perturbed_hyp.clone(),
                ]);
            }
            table.push(SetHp::new(name, &outcome));
        }
        summaries.push(MetricSummary {
            metric: *kind,
            distribution: distribution(&records),
            sets,
            table,
        });
    }
    let sweep_records = sweep_records.expect("sweep metric was scored");

    let mut floor_sweep = Vec::new();
    for &f in &cfg.floor_sweep {
        let point = match select_sets(&sweep_records, cfg.k, cfg.set_seed, f) {
            Ok(sets) => FloorPoint {
                floor: f,
                random: Some(SetHp::new("random", &ctx.run("floor sweep", &sets.random)?)),
                error: None,
            },
            Err(e) => FloorPoint {
                floor: f,
                random: None,
                error: Some(e.to_string()),
            },
        };
        if let Some(e) = &point.error {
            stages.failed(format!("floor sweep {f}"), e);
        }
        floor_sweep.push(point);
    }
    if !cfg.floor_sweep.is_empty() && floor_sweep.iter().all(|p| p.error.is_none()) {
        stages.ok("floor sweep");
    }

    let mut exclusion_sweep = Vec::new();
    for &c in &cfg.exclusion_sweep {
        let flagged = reflag(&sweep_records, c.max(1));
        let eligible = flagged.iter().filter(|r| r.eligible).count();
        let point = match select_sets(&flagged, cfg.k, cfg.set_seed, floor) {
            Ok(sets) => ExclusionPoint {
                min_exclusions: c,
                eligible,
                table: vec![
                    SetHp::new("memorized", &ctx.run("exclusion sweep", &sets.memorized)?),
                    SetHp::new("random", &ctx.run("exclusion sweep", &sets.random)?),
                ],
                error: None,
            },
            Err(e) => ExclusionPoint {
                min_exclusions: c,
                eligible,
                table: Vec::new(),
                error: Some(e.to_string()),
            },
        };
        if let Some(e) = &point.error {
            stages.failed(format!("exclusion sweep {c}"), e);
        }
        exclusion_sweep.push(point);
    }
    if !cfg.exclusion_sweep.is_empty() && exclusion_sweep.iter().all(|p| p.error.is_none()) {
        stages.ok("exclusion sweep");
    }

    let attention = match &cfg.attention {
        None => {
            stages.skipped("attention statistics", "no attention directory configured");
            None
        }
        Some(dir) => {
            let store = AttentionStore::load_dir(dir).map_err(CliError::stage("attention statistics"))?;
            let sets = summaries
                .iter()
                .find(|s| s.metric == sweep_metric)
                .map(|s| s.sets.clone())
                .map_or_else(|| select_sets(&sweep_records, cfg.k, cfg.set_seed, floor), Ok)
                .map_err(CliError::stage("attention statistics"))?;
            let rows: Vec<AttentionRow> = [("memorized", &sets.memorized), ("random", &sets.random)]
                .into_iter()
                .map(|(name, ids)| {
                    let (agg, missing) = store.aggregate_set(ids, BASE_VARIANT, log_base);
                    AttentionRow {
                        set: name.to_string(),
                        aggregate: agg.ok(),
                        missing,
                    }
                })
                .collect();
            if rows.iter().any(|r| r.aggregate.is_none()) {
                stages.failed("attention statistics", "a comparison set has no attention maps");
            } else {
                stages.ok("attention statistics");
            }
            Some(rows)
        }
    };

    let result = HpStudyResult {
        samples: corpus.len(),
        backend: backend.describe(),
        tokens,
        metrics: summaries,
        sweep_metric,
        floor_sweep,
        exclusion_sweep,
        attention,
    };
    write_hp_outputs(out, &result, &side)?;
    Report::new("study hp", written, stages, result)
}

fn write_hp_outputs(out: &Path, r: &HpStudyResult, side: &HpSidecars) -> Result<()> {
    write_text(
        &out.join("mem_values.tsv"),
        &tsv(
            &[
                "metric",
                "sample_id",
                "mem_value",
                "n_included",
                "n_excluded",
                "eligible",
            ],
            &side.mem_values,
        ),
    )?;
    write_text(&out.join("sets.tsv"), &tsv(&["metric", "set", "sample_id"], &side.sets))?;
    write_text(
        &out.join("hp_records.tsv"),
        &tsv(
            &[
                "metric",
                "set",
                "sample_id",
                "token",
                "base_score",
                "delta_score",
                "base_hyp",
                "perturbed_hyp",
            ],
            &side.records,
        ),
    )?;
    let table: Vec<Vec<String>> = r
        .metrics
        .iter()
        .flat_map(|m| {
            m.table.iter().map(move |row| {
                vec![
                    m.metric.name().to_string(),
                    row.set.clone(),
                    row.unique_hp.to_string(),
                    row.total_hp.to_string(),
                ]
            })
        })
        .collect();
    write_text(
        &out.join("hp_table.tsv"),
        &tsv(&["metric", "set", "unique_hp", "total_hp"], table),
    )?;
    let top: Vec<Vec<String>> = r
        .floor_sweep
        .iter()
        .map(|p| {
            let (u, t) = p.random.as_ref().map_or(("-".into(), "-".into()), |s| {
                (s.unique_hp.to_string(), s.total_hp.to_string())
            });
            vec![format!("{:.1}", p.floor), u, t]
        })
        .collect();
    write_text(
        &out.join("floor_sweep.tsv"),
        &tsv(&["floor", "unique_hp", "total_hp"], top),
    )?;
    let bottom: Vec<Vec<String>> = r
        .exclusion_sweep
        .iter()
        .flat_map(|p| {
            p.table.iter().map(move |s| {
                vec![
                    p.min_exclusions.to_string(),
                    s.set.clone(),
                    s.unique_hp.to_string(),
                    s.total_hp.to_string(),
                ]
            })
        })
        .collect();
    write_text(
        &out.join("exclusion_sweep.tsv"),
        &tsv(&["min_exclusions", "set", "unique_hp", "total_hp"], bottom),
    )?;
    if let Some(rows) = &r.attention {
        let lines: Vec<Vec<String>> = rows
            .iter()
            .map(|row| match &row.aggregate {
                Some(a) => vec![
                    row.set.clone(),
                    a.count.to_string(),
                    format!("{:.4}", a.row_entropy),
                    format!("{:.4}", a.diagonal_entropy),
                    format!("{:.4}", a.last_token_attention),
                    format!("{:.4}", a.diagonal_mass),
                ],
                None => vec![
                    row.set.clone(),
                    "0".into(),
                    "-".into(),
                    "-".into(),
                    "-".into(),
                    "-".into(),
                ],
            })
            .collect();
        write_text(
            &out.join("attention_table.tsv"),
            &tsv(
                &[
                    "set",
                    "count",
                    "row_entropy",
                    "diagonal_entropy",
                    "last_token_attention",
                    "diagonal_mass",
                ],
                lines,
            ),
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmittedCorpus {
    pub pattern: NoisePattern,
    pub noise_pairs: usize,
    pub lines: usize,
    pub noise_fraction: f64,
    pub overlap_contract: &'static str,
    pub dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NhEvaluation {
    pub rows: Vec<SummaryRow>,
    pub proxy: ProxyParams,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NhStudyResult {
    pub corpora: Vec<EmittedCorpus>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evaluation: Option<NhEvaluation>,
}

fn pattern_rank(name: &str) -> (usize, String) {
    let r = match name {
        "none" => 0,
        "uu" => 1,
        "ur" => 2,
        "ru" => 3,
        "rr" => 4,
        _ => 5,
    };
    (r, name.to_string())
}

/// Pattern subdirectories of a translations directory, lowercased, in table order.
pub fn pattern_dirs(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let entries = std::fs::read_dir(dir).map_err(|e| {
        CliError::Core(halluprobe_core::Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })
    })?;
    let mut out: Vec<(String, PathBuf)> = entries
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .map(|e| (e.file_name().to_string_lossy().to_ascii_lowercase(), e.path()))
        .collect();
    out.sort_by_key(|(n, _)| pattern_rank(n));
    Ok(out)
}

pub const DH_NOTE: &str = "detached hallucinations need a fluency judgment and are not computed";

/// (n-gram, count, pattern) for the top-bigram plot.
pub type BigramRow = (String, usize, String);

/// Evaluates every pattern directory; `targets_for` supplies training targets when a directory has no `train.tgt`.
pub fn evaluate_translations(
    dir: &Path,
    annotations: Option<&Annotations>,
    targets_for: impl Fn(&str) -> Result<Option<TargetIndex>>,
    top_bigrams: usize,
) -> Result<(NhEvaluation, Vec<BigramRow>)> {
    let mut inputs = Vec::new();
    for (name, path) in pattern_dirs(dir)? {
        let mut p = PatternTranslations::load_dir(&name, &path)
            .map_err(CliError::stage(format!("load translations ({name})")))?;
        if p.training_targets.is_none() {
            p.training_targets = targets_for(&name)?;
        }
        inputs.push(p);
    }
    if inputs.is_empty() {
        return Err(CliError::Config(format!(
            "{} has no pattern subdirectories",
            dir.display()
        )));
    }
    let proxy = ProxyParams::default();
    let rows = summarize(&inputs, annotations, None, proxy).map_err(CliError::stage("nh evaluation"))?;
    let mut notes = vec![DH_NOTE.to_string()];
    if rows.iter().any(|r| r.irs_nh.is_proxy()) {
        notes.push(format!(
            "PROXY cells: OH = share with a {}-gram repeated at least {} times; NH = OH or an exact training-target copy",
            proxy.oscillation_n, proxy.oscillation_min_count
        ));
    }
    let bigrams = bigram_plot_rows(&inputs, top_bigrams);
    Ok((NhEvaluation { rows, proxy, notes }, bigrams))
}

pub fn write_nh_outputs(out_json: &Path, eval: &NhEvaluation, bigrams: &[BigramRow]) -> Result<()> {
    write_text(&out_json.with_extension("tsv"), &render_summary_tsv(&eval.rows))?;
    let rows: Vec<Vec<String>> = bigrams
        .iter()
        .map(|(g, c, p)| vec![g.clone(), c.to_string(), p.clone()])
        .collect();
    let fig = out_json.with_file_name(format!(
        "{}_bigrams.tsv",
        out_json
            .file_stem()
            .map_or("report".into(), |s| s.to_string_lossy().into_owned())
    ));
    write_text(&fig, &tsv(&["ngram", "count", "pattern"], rows))
}

pub fn run_nh_study(written: &StudyConfig, cfg: &NhStudyConfig, out: &Path) -> Result<Report<NhStudyResult>> {
    let mut stages = Stages::default();
    let clean = ParallelCorpus::read_dir(&cfg.clean).map_err(CliError::stage("load clean corpus"))?;
    let irs = Irs::read_dir(&cfg.irs).map_err(CliError::stage("load IRS"))?;
    irs.check_disjoint_from(&clean).map_err(CliError::stage("load IRS"))?;
    let donor_corpus = match &cfg.donor {
        Some(d) => ParallelCorpus::read_dir(d).map_err(CliError::stage("load donor"))?,
        None => clean.clone(),
    };
    let donor = Donor::new(&donor_corpus).excluding(&irs);
    stages.ok("load");

    let mut corpora = Vec::new();
    for &pattern in &cfg.patterns {
        let spec = NoiseSpec {
            pattern,
            unit_count: cfg.unit_count,
            repeats: cfg.repeats,
            seed: cfg.seed,
            donor: cfg.donor.as_ref().map(|d| d.display().to_string()),
        };
        let stage = format!("noise forge ({pattern})");
        let noise = generate(&spec, &irs, &donor).map_err(CliError::stage(&stage))?;
        verify_overlap_contract(&noise, &irs).map_err(CliError::stage(&stage))?;
        let train = emit_training_corpus(&clean, &noise, cfg.shuffle_seed);
        let dir = out.join("corpora").join(pattern.as_str());
        write_training_corpus(&dir, &train, &spec, cfg.shuffle_seed).map_err(CliError::stage(&stage))?;
        stages.ok(stage);
        corpora.push(EmittedCorpus {
            pattern,
            noise_pairs: noise.len(),
            lines: train.corpus.len(),
            noise_fraction: train.noise_fraction(),
            overlap_contract: "verified",
            dir: PathBuf::from("corpora").join(pattern.as_str()),
        });
    }

    let evaluation = match &cfg.translations {
        None => {
            stages.skipped("nh evaluation", "no translations directory configured");
            None
        }
        Some(dir) => {
            let annotations = cfg
                .annotations
                .as_deref()
                .map(Annotations::load)
                .transpose()
                .map_err(CliError::stage("load annotations"))?;
            let clean_targets = TargetIndex::new(clean.targets());
            let targets_for = |name: &str| -> Result<Option<TargetIndex>> {
                if name == "none" {
                    return Ok(Some(clean_targets.clone()));
                }
                let tgt = out.join("corpora").join(name).join("tgt.txt");
                if tgt.exists() {
                    TargetIndex::load(&tgt)
                        .map(Some)
                        .map_err(CliError::stage("nh evaluation"))
                } else {
                    Ok(None)
                }
            };
            let (eval, bigrams) = evaluate_translations(dir, annotations.as_ref(), targets_for, cfg.top_bigrams)?;
            write_nh_outputs(&out.join("nh_table.json"), &eval, &bigrams)?;
            stages.ok("nh evaluation");
            Some(eval)
        }
    };

    Report::new("study nh", written, stages, NhStudyResult { corpora, evaluation })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmplificationRunSummary {
    pub name: String,
    pub entries: usize,
    pub params: AnhParams,
    pub counts: AnhCounts,
    pub report: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmplificationResult {
    pub runs: Vec<AmplificationRunSummary>,
    pub table: AmplificationTable,
}

pub fn run_amplification_study(
    written: &StudyConfig,
    cfg: &AmplificationStudyConfig,
    out: &Path,
) -> Result<Report<AmplificationResult>> {
    let mut stages = Stages::default();
    let baselines: Vec<usize> = cfg
        .runs
        .iter()
        .enumerate()
        .filter(|(_, r)| r.baseline)
        .map(|(i, _)| i)
        .collect();
    let base_idx = match baselines.as_slice() {
        [] if !cfg.runs.is_empty() => 0,
        [i] => *i,
        [] => return Err(CliError::Config("no runs configured".into())),
        _ => return Err(CliError::Config("more than one run is marked as baseline".into())),
    };

    let mut reports = Vec::new();
    let mut runs = Vec::new();
    for run in &cfg.runs {
        let params = AnhParams {
            epsilon: run.epsilon.unwrap_or(cfg.epsilon),
            n: run.n.unwrap_or(cfg.n),
            t: run.t.unwrap_or(cfg.t),
        };
        let stage = format!("nh estimate ({})", run.name);
        let report = estimate_anh_file(&run.pairs, run.scores.as_deref(), params).map_err(CliError::stage(&stage))?;
        let rel = PathBuf::from("runs").join(format!("{}.json", run.name));
        write_json(&out.join(&rel), &report)?;
        stages.ok(stage);
        runs.push(AmplificationRunSummary {
            name: run.name.clone(),
            entries: report.n_entries,
            params,
            counts: report.counts(),
            report: rel,
        });
        reports.push(report);
    }

    let derived: Vec<(&str, &_)> = cfg
        .runs
        .iter()
        .zip(&reports)
        .enumerate()
        .filter(|(i, _)| *i != base_idx)
        .map(|(_, (r, rep))| (r.name.as_str(), rep))
        .collect();
    let table = amplification_report((&cfg.runs[base_idx].name, &reports[base_idx]), &derived)
        .map_err(|e| CliError::Config(e.to_string()))?;
    write_text(&out.join("amplification.tsv"), &table.to_tsv())?;
    stages.ok("amplification table");

    Report::new(
        "study amplification",
        written,
        stages,
        AmplificationResult { runs, table },
    )
}
