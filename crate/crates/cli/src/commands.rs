//! Subcommand implementations. Every command resolves its configuration,
//! runs one pipeline stage, and writes a manifest next to its outputs. All
//! randomness fans out from the `--seed` flag through fixed component
//! labels, so partial pipeline reruns stay reproducible.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use serde::Serialize;

use uco_core::curation::{self, CurationConfig};
use uco_core::datamodel::{self, EvalSplit, GradedPair};
use uco_core::encoder::{self, EmbeddingModel, FeaturizerConfig};
use uco_core::metrics::{self, MetricConfig};
use uco_core::retrieval;
use uco_core::synthgen::{self, GenConfig};
use uco_core::trainer::{self, LossKind, QuerySet, ThresholdMode, TrainConfig, TrainOutcome};
use uco_core::{seed, Error, Result};

use crate::manifest;

// --- gen ---------------------------------------------------------------

#[derive(Debug, Args, Serialize)]
pub struct GenArgs {
    /// Master seed for the generator
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of queries
    #[arg(long, default_value_t = 100)]
    pub queries: usize,
    /// Titles per query (at least one positive and one negative)
    #[arg(long, default_value_t = 6)]
    pub titles: usize,
    /// Fraction of queries whose text appears in both title classes
    #[arg(long = "common-str", default_value_t = 0.3)]
    pub common_str: f64,
    /// Fraction of queries that are single model-code tokens
    #[arg(long, default_value_t = 0.2)]
    pub alphanum: f64,
    /// Comma-separated accessory words for hard negatives
    #[arg(long, value_delimiter = ',')]
    pub noise_words: Vec<String>,
    /// Output pairs file
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run_gen(args: &GenArgs) -> Result<()> {
    let started = Instant::now();
    let cfg = GenConfig {
        n_queries: args.queries,
        titles_per_query: args.titles,
        frac_common_str: args.common_str,
        frac_alphanum: args.alphanum,
        noise_word_pool: if args.noise_words.is_empty() {
            synthgen::default_noise_words()
        } else {
            args.noise_words.clone()
        },
        rng_seed: args.seed,
    };
    let pairs = synthgen::generate(&cfg)?;
    datamodel::save_pairs(&pairs, &args.out)?;
    println!(
        "wrote {} pairs for {} queries to {}",
        pairs.len(),
        args.queries,
        args.out.display()
    );
    manifest::write(
        &manifest_sibling(&args.out),
        "gen",
        args,
        &[],
        &[args.out.clone()],
        started,
    )
}

// --- curate ------------------------------------------------------------

#[derive(Debug, Args, Serialize)]
pub struct CurateArgs {
    /// Input pairs file
    #[arg(long)]
    pub pairs: PathBuf,
    /// Directory receiving one subdirectory per split
    #[arg(long = "out-dir")]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "dev-fraction", default_value_t = 0.8)]
    pub dev_fraction: f64,
    #[arg(long = "positive-threshold", default_value_t = 3)]
    pub positive_threshold: u8,
    #[arg(long = "negative-threshold", default_value_t = 3)]
    pub negative_threshold: u8,
    /// Disable the printable-ASCII language heuristic
    #[arg(long = "no-english-filter", default_value_t = false)]
    pub no_english_filter: bool,
    /// Splits to build (cq is always built first as the base)
    #[arg(long, value_delimiter = ',', default_values_t = vec![
        "cq".to_string(), "balanced".to_string(), "common-str".to_string(), "alphanum".to_string(),
    ])]
    pub splits: Vec<String>,
}

pub fn run_curate(args: &CurateArgs) -> Result<()> {
    let started = Instant::now();
    for name in &args.splits {
        if !matches!(name.as_str(), "cq" | "balanced" | "common-str" | "alphanum") {
            return Err(Error::invalid(format!(
                "unknown split {name:?} (cq|balanced|common-str|alphanum)"
            )));
        }
    }
    let pairs = datamodel::load_pairs(&args.pairs)?;
    let cfg = CurationConfig {
        positive_threshold: args.positive_threshold,
        negative_threshold: args.negative_threshold,
        dev_fraction: args.dev_fraction,
        rng_seed: args.seed,
        english_filter: !args.no_english_filter,
    };
    let (pearson, kendall, spearman) = curation::correlation_stats(&pairs)?;
    std::fs::create_dir_all(&args.out_dir).map_err(|e| Error::io(&args.out_dir, e))?;
    let correlations_path = args.out_dir.join("correlations.txt");
    std::fs::write(
        &correlations_path,
        curation::format_correlations(pearson, kendall, spearman),
    )
    .map_err(|e| Error::io(&correlations_path, e))?;
    println!("correlations: pearson {pearson:.4} kendall {kendall:.4} spearman {spearman:.4}");

    let filtered = curation::filter_pairs(&pairs, &cfg)?;
    let cq = curation::build_cq(&filtered, &cfg)?;
    let mut outputs = vec![correlations_path];
    let mut emit = |split: &EvalSplit| -> Result<()> {
        let dir = args.out_dir.join(&split.name);
        datamodel::save_split(split, &dir)?;
        println!(
            "split {}: corpus {} dev {} test {}",
            split.name,
            split.corpus.len(),
            split.dev_queries.len(),
            split.test_queries.len()
        );
        for file in ["corpus.tsv", "dev-queries.tsv", "test-queries.tsv", "qrels.tsv"] {
            outputs.push(dir.join(file));
        }
        Ok(())
    };
    for name in &args.splits {
        match name.as_str() {
            "cq" => emit(&cq)?,
            "balanced" => emit(&curation::build_cq_balanced(&cq, args.seed)?)?,
            "common-str" => emit(&curation::build_cq_common_str(&cq)?)?,
            "alphanum" => emit(&curation::build_cq_alphanum(&cq)?)?,
            _ => unreachable!("validated above"),
        }
    }
    manifest::write(
        &args.out_dir.join("manifest.json"),
        "curate",
        args,
        &[args.pairs.clone()],
        &outputs,
        started,
    )
}

// --- train -------------------------------------------------------------

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    /// Training pairs file
    #[arg(long)]
    pub pairs: PathBuf,
    /// Split directory providing the dev evaluators
    #[arg(long = "dev-split")]
    pub dev_split: PathBuf,
    /// Output checkpoint path
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
    #[arg(long, default_value_t = 2e-5)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.01)]
    pub wd: f64,
    #[arg(long, default_value_t = 0.5)]
    pub margin: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "no-in-batch-negatives", default_value_t = false)]
    pub no_in_batch_negatives: bool,
    /// mnrl, ocl, or dual
    #[arg(long, default_value = "dual")]
    pub loss: String,
    /// "auto" or a fixed cosine threshold for the centrality evaluator
    #[arg(long, default_value = "auto")]
    pub threshold: String,
    /// "dev" trains only on the dev split's queries; "all" uses every pair
    #[arg(long = "train-queries", default_value = "dev")]
    pub train_queries: String,
    #[arg(long, default_value_t = 64)]
    pub dim: usize,
    #[arg(long, default_value_t = 1 << 18)]
    pub buckets: usize,
    #[arg(long = "ngram-min", default_value_t = 3)]
    pub ngram_min: usize,
    #[arg(long = "ngram-max", default_value_t = 5)]
    pub ngram_max: usize,
    #[arg(long = "hash-seed", default_value_t = 0)]
    pub hash_seed: u64,
    /// History TSV path (default: history.tsv next to the checkpoint)
    #[arg(long)]
    pub history: Option<PathBuf>,
}

fn parse_threshold(raw: &str) -> Result<ThresholdMode> {
    if raw == "auto" {
        return Ok(ThresholdMode::Auto);
    }
    let value: f64 = raw
        .parse()
        .map_err(|_| Error::invalid(format!("threshold must be \"auto\" or a number, got {raw:?}")))?;
    if !(-1.0..=1.0).contains(&value) {
        return Err(Error::invalid("fixed threshold must lie in [-1, 1]"));
    }
    Ok(ThresholdMode::Fixed(value))
}

/// Keeps only pairs whose query belongs to the split's dev set.
fn restrict_to_dev(pairs: Vec<GradedPair>, split: &EvalSplit) -> Result<Vec<GradedPair>> {
    let dev: HashSet<&str> = split.dev_queries.iter().map(|(q, _)| q.as_str()).collect();
    let kept: Vec<GradedPair> = pairs
        .into_iter()
        .filter(|p| dev.contains(p.query_id.as_str()))
        .collect();
    if kept.is_empty() {
        return Err(Error::invalid(
            "no training pair matches the dev split's queries; pass --train-queries all to use every pair",
        ));
    }
    Ok(kept)
}

fn train_once(
    pairs: &[GradedPair],
    split: &EvalSplit,
    cfg: &TrainConfig,
    featurizer: FeaturizerConfig,
    dim: usize,
    init_seed: u64,
) -> Result<TrainOutcome> {
    let model = EmbeddingModel::init(dim, featurizer, seed::derive(init_seed, "model-init"))?;
    trainer::train(model, pairs, split, cfg)
}

pub fn run_train(args: &TrainArgs) -> Result<()> {
    let started = Instant::now();
    let pairs = datamodel::load_pairs(&args.pairs)?;
    let split = datamodel::load_split(&args.dev_split)?;
    let pairs = match args.train_queries.as_str() {
        "dev" => restrict_to_dev(pairs, &split)?,
        "all" => pairs,
        other => {
            return Err(Error::invalid(format!(
                "unknown --train-queries {other:?} (dev|all)"
            )))
        }
    };
    let cfg = TrainConfig {
        batch_size: args.batch,
        learning_rate: args.lr,
        weight_decay: args.wd,
        max_epochs: args.epochs,
        margin: args.margin,
        centrality_threshold: parse_threshold(&args.threshold)?,
        rng_seed: args.seed,
        in_batch_negatives: !args.no_in_batch_negatives,
        loss: args.loss.parse()?,
        loss_options: Default::default(),
    };
    let featurizer = FeaturizerConfig {
        ngram_min: args.ngram_min,
        ngram_max: args.ngram_max,
        include_whole_tokens: true,
        n_buckets: args.buckets,
        hash_seed: args.hash_seed,
    };
    let outcome = train_once(&pairs, &split, &cfg, featurizer, args.dim, args.seed)?;
    for h in &outcome.history {
        println!(
            "epoch {}: loss {:.6} acc {:.4} f1 {:.4} threshold {:.2} dev ndcg@10 {:.4}",
            h.epoch,
            h.mean_batch_loss,
            h.centrality.accuracy,
            h.centrality.f1,
            h.centrality.threshold,
            h.retrieval.ndcg_at(10).unwrap_or(0.0),
        );
    }
    println!("best epoch: {}", outcome.best_epoch);
    encoder::save_model(&outcome.model, &args.out)?;
    let history_path = args
        .history
        .clone()
        .unwrap_or_else(|| sibling_path(&args.out, "history.tsv"));
    std::fs::write(&history_path, trainer::format_history_tsv(&outcome.history))
        .map_err(|e| Error::io(&history_path, e))?;
    manifest::write(
        &manifest_sibling(&args.out),
        "train",
        args,
        &[args.pairs.clone(), args.dev_split.clone()],
        &[args.out.clone(), history_path],
        started,
    )
}

// --- eval --------------------------------------------------------------

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    /// Model checkpoint
    #[arg(long)]
    pub ckpt: PathBuf,
    /// Split directory
    #[arg(long)]
    pub split: PathBuf,
    /// Which query set to rank: dev or test
    #[arg(long, default_value = "test")]
    pub queries: String,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Output run file (query_id, rank, title_id, score)
    #[arg(long)]
    pub out: PathBuf,
    /// Metrics TSV (default: report.tsv next to the run file)
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Query block size for the scoring loop
    #[arg(long, default_value_t = retrieval::DEFAULT_BLOCK)]
    pub block: usize,
}

pub fn run_eval(args: &EvalArgs) -> Result<()> {
    let started = Instant::now();
    let model = encoder::load_model(&args.ckpt)?;
    let split = datamodel::load_split(&args.split)?;
    let which: QuerySet = args.queries.parse()?;
    let query_set = match which {
        QuerySet::Dev => &split.dev_queries,
        QuerySet::Test => &split.test_queries,
    };
    if query_set.is_empty() {
        return Err(Error::invalid(format!(
            "split {} has no {} queries",
            split.name, args.queries
        )));
    }
    let index = retrieval::build_index(&split.corpus, &model)?;
    let encoded: Vec<(String, Vec<f32>)> = query_set
        .iter()
        .map(|(qid, qtext)| {
            encoder::encode(qtext, &model)
                .map(|v| (qid.clone(), v.iter().map(|&x| x as f32).collect()))
        })
        .collect::<Result<_>>()?;
    let metric_cfg = MetricConfig::default();
    let k = args.k.max(metric_cfg.mrr_depth);
    let run = retrieval::batch_search_blocked(&index, &encoded, k, args.block)?;
    run.save(&args.out)?;
    let report = metrics::aggregate(&run, &split.qrels, &metric_cfg)?;
    if report.queries_skipped > 0 {
        eprintln!(
            "warning: {} queries had no relevant title and were excluded",
            report.queries_skipped
        );
    }
    let report_path = args
        .report
        .clone()
        .unwrap_or_else(|| sibling_path(&args.out, "report.tsv"));
    let tsv = metrics::format_report_tsv(&report);
    std::fs::write(&report_path, &tsv).map_err(|e| Error::io(&report_path, e))?;
    print!("{tsv}");
    manifest::write(
        &manifest_sibling(&args.out),
        "eval",
        args,
        &[args.ckpt.clone(), args.split.clone()],
        &[args.out.clone(), report_path],
        started,
    )
}

// --- ablate ------------------------------------------------------------

#[derive(Debug, Args, Serialize)]
pub struct AblateArgs {
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long)]
    pub split: PathBuf,
    #[arg(long = "out-dir")]
    pub out_dir: PathBuf,
    /// Seeds whose median makes the reported figure
    #[arg(long, value_delimiter = ',', default_values_t = vec![1u64, 2, 3])]
    pub seeds: Vec<u64>,
    /// Candidate margins; more than one triggers a dev-split sweep per loss
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.5f64])]
    pub margins: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
    #[arg(long, default_value_t = 2e-5)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.01)]
    pub wd: f64,
    #[arg(long = "train-queries", default_value = "dev")]
    pub train_queries: String,
    #[arg(long, default_value_t = 64)]
    pub dim: usize,
    #[arg(long, default_value_t = 1 << 16)]
    pub buckets: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct AblationRun {
    pub loss: String,
    pub seed: u64,
    pub margin: f64,
    pub ndcg5: f64,
    pub mrr10: f64,
}

#[derive(Debug, Clone)]
pub struct AblationReport {
    /// Per-seed detail rows.
    pub runs: Vec<AblationRun>,
    /// One row per loss: (label, median margin, median ndcg@5, median mrr@10).
    pub summary: Vec<(String, f64, f64, f64)>,
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    values[values.len() / 2]
}

/// Trains the three loss variants plus the untrained baseline with identical
/// seeds and configuration, evaluating each on the split's test queries.
pub fn ablate(
    pairs: &[GradedPair],
    split: &EvalSplit,
    args: &AblateArgs,
) -> Result<AblationReport> {
    if args.seeds.is_empty() || args.margins.is_empty() {
        return Err(Error::invalid("need at least one seed and one margin"));
    }
    let metric_cfg = MetricConfig::default();
    let featurizer = FeaturizerConfig {
        n_buckets: args.buckets,
        ..FeaturizerConfig::default()
    };
    let variants: [(&str, Option<LossKind>); 4] = [
        ("baseline", None),
        ("MNRL", Some(LossKind::Mnrl)),
        ("OCL", Some(LossKind::Ocl)),
        ("MNRL+OCL", Some(LossKind::Dual)),
    ];
    let mut runs = Vec::new();
    let mut summary = Vec::new();
    for (label, kind) in variants {
        for &run_seed in &args.seeds {
            let (model, margin) = match kind {
                None => (
                    EmbeddingModel::init(
                        args.dim,
                        featurizer.clone(),
                        seed::derive(run_seed, "model-init"),
                    )?,
                    f64::NAN,
                ),
                Some(kind) => {
                    // dev-split sweep: train at each margin, keep the dev
                    // NDCG@10 winner
                    let mut best: Option<(f64, f64, TrainOutcome)> = None;
                    for &margin in &args.margins {
                        let cfg = TrainConfig {
                            batch_size: args.batch,
                            learning_rate: args.lr,
                            weight_decay: args.wd,
                            max_epochs: args.epochs,
                            margin,
                            centrality_threshold: ThresholdMode::Auto,
                            rng_seed: run_seed,
                            in_batch_negatives: true,
                            loss: kind,
                            loss_options: Default::default(),
                        };
                        let outcome =
                            train_once(pairs, split, &cfg, featurizer.clone(), args.dim, run_seed)?;
                        let dev_ndcg = outcome.history[outcome.best_epoch - 1]
                            .retrieval
                            .ndcg_at(10)
                            .expect("default cutoffs include 10");
                        if best.as_ref().map_or(true, |(b, _, _)| dev_ndcg > *b) {
                            best = Some((dev_ndcg, margin, outcome));
                        }
                    }
                    let (_, margin, outcome) = best.expect("at least one margin");
                    (outcome.model, margin)
                }
            };
            let (report, _) = trainer::eval_retrieval(&model, split, QuerySet::Test, &metric_cfg)?;
            runs.push(AblationRun {
                loss: label.to_string(),
                seed: run_seed,
                margin,
                ndcg5: report.ndcg_at(5).expect("default cutoffs include 5"),
                mrr10: report.mrr,
            });
        }
        let of = |f: fn(&AblationRun) -> f64| {
            median(runs.iter().filter(|r| r.loss == label).map(f).collect())
        };
        summary.push((label.to_string(), of(|r| r.margin), of(|r| r.ndcg5), of(|r| r.mrr10)));
    }
    Ok(AblationReport { runs, summary })
}

pub fn format_ablation_tsv(report: &AblationReport) -> String {
    let mut out = String::from("loss\tmargin\tNDCG@5\tMRR@10\n");
    for (label, margin, ndcg5, mrr10) in &report.summary {
        let margin = if margin.is_nan() {
            "-".to_string()
        } else {
            format!("{margin:.2}")
        };
        out.push_str(&format!("{label}\t{margin}\t{ndcg5:.4}\t{mrr10:.4}\n"));
    }
    out
}

pub fn run_ablate(args: &AblateArgs) -> Result<()> {
    let started = Instant::now();
    let pairs = datamodel::load_pairs(&args.pairs)?;
    let split = datamodel::load_split(&args.split)?;
    let pairs = match args.train_queries.as_str() {
        "dev" => restrict_to_dev(pairs, &split)?,
        "all" => pairs,
        other => {
            return Err(Error::invalid(format!(
                "unknown --train-queries {other:?} (dev|all)"
            )))
        }
    };
    let report = ablate(&pairs, &split, args)?;
    std::fs::create_dir_all(&args.out_dir).map_err(|e| Error::io(&args.out_dir, e))?;
    let table_path = args.out_dir.join("ablation.tsv");
    let table = format_ablation_tsv(&report);
    std::fs::write(&table_path, &table).map_err(|e| Error::io(&table_path, e))?;
    print!("{table}");
    let detail_path = args.out_dir.join("ablation-runs.tsv");
    let mut detail = String::from("loss\tseed\tmargin\tNDCG@5\tMRR@10\n");
    for r in &report.runs {
        detail.push_str(&format!(
            "{}\t{}\t{}\t{:.4}\t{:.4}\n",
            r.loss,
            r.seed,
            if r.margin.is_nan() { "-".to_string() } else { format!("{:.2}", r.margin) },
            r.ndcg5,
            r.mrr10
        ));
    }
    std::fs::write(&detail_path, detail).map_err(|e| Error::io(&detail_path, e))?;
    manifest::write(
        &args.out_dir.join("manifest.json"),
        "ablate",
        args,
        &[args.pairs.clone(), args.split.clone()],
        &[table_path, detail_path],
        started,
    )
}

// --- report ------------------------------------------------------------

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    /// Baseline evaluation reports, as NAME=path/to/report.tsv
    #[arg(long = "base")]
    pub base: Vec<String>,
    /// Optimized-model evaluation reports, as NAME=path/to/report.tsv
    #[arg(long = "uco")]
    pub uco: Vec<String>,
    /// Output summary TSV
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_entry(entry: &str) -> Result<(String, PathBuf)> {
    match entry.split_once('=') {
        Some((name, path)) if !name.is_empty() && !path.is_empty() => {
            Ok((name.to_string(), PathBuf::from(path)))
        }
        _ => Err(Error::invalid(format!(
            "expected NAME=PATH, got {entry:?}"
        ))),
    }
}

fn load_report(path: &Path) -> Result<(Vec<String>, Vec<f64>)> {
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    metrics::parse_report_tsv(&content, &path.display().to_string())
}

pub fn run_report(args: &ReportArgs) -> Result<()> {
    let started = Instant::now();
    if args.base.is_empty() {
        return Err(Error::invalid("need at least one --base NAME=PATH entry"));
    }
    let mut inputs = Vec::new();
    let mut header: Option<Vec<String>> = None;
    let mut rows: Vec<(String, String, Vec<f64>)> = Vec::new();
    let mut bases: Vec<(String, Vec<f64>)> = Vec::new();
    let mut ucos: Vec<(String, Vec<f64>)> = Vec::new();
    for (entries, kind, sink) in [
        (&args.base, "base", &mut bases),
        (&args.uco, "uco", &mut ucos),
    ] {
        let _ = kind;
        for entry in entries {
            let (name, path) = parse_entry(entry)?;
            let (cols, values) = load_report(&path)?;
            match &header {
                None => header = Some(cols),
                Some(h) if *h != cols => {
                    return Err(Error::invalid(format!(
                        "{}: column set differs from earlier reports",
                        path.display()
                    )))
                }
                _ => {}
            }
            inputs.push(path);
            sink.push((name, values));
        }
    }
    let header = header.expect("at least one base entry");
    for (name, values) in &bases {
        rows.push((name.clone(), "baseline".to_string(), values.clone()));
        if let Some((_, uco_values)) = ucos.iter().find(|(n, _)| n == name) {
            rows.push((name.clone(), "uco".to_string(), uco_values.clone()));
            let delta: Vec<f64> = uco_values
                .iter()
                .zip(values)
                .map(|(u, b)| u - b)
                .collect();
            rows.push((name.clone(), "delta".to_string(), delta));
        }
    }
    for (name, _) in &ucos {
        if !bases.iter().any(|(n, _)| n == name) {
            return Err(Error::invalid(format!(
                "--uco entry {name:?} has no matching --base entry"
            )));
        }
    }

    let mut out = String::from("split\trow\t");
    out.push_str(&header.join("\t"));
    out.push('\n');
    for (name, row_kind, values) in &rows {
        out.push_str(&format!("{name}\t{row_kind}"));
        for v in values {
            if row_kind == "delta" {
                out.push_str(&format!("\t{v:+.4}"));
            } else {
                out.push_str(&format!("\t{v:.4}"));
            }
        }
        out.push('\n');
    }
    std::fs::write(&args.out, &out).map_err(|e| Error::io(&args.out, e))?;
    print!("{out}");
    manifest::write(
        &manifest_sibling(&args.out),
        "report",
        args,
        &inputs,
        &[args.out.clone()],
        started,
    )
}

// --- shared helpers ------------------------------------------------------

fn sibling_path(reference: &Path, name: &str) -> PathBuf {
    reference
        .parent()
        .map(|p| p.join(name))
        .unwrap_or_else(|| PathBuf::from(name))
}

fn manifest_sibling(output: &Path) -> PathBuf {
    let mut name = output
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "output".to_string());
    name.push_str(".manifest.json");
    sibling_path(output, &name)
}
