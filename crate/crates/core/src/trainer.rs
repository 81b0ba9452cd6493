//! Fine-tuning loop: Adam over the embedding table under the dual loss,
//! with two sequential dev evaluators per epoch.
//!
//! Evaluator one classifies pair centrality by thresholded cosine (the
//! threshold can be auto-tuned on dev each epoch; it is logged and never
//! drives checkpoint selection). Evaluator two ranks the split corpus per
//! dev query; the checkpoint with the best dev NDCG@10 is kept.
//!
//! Everything is deterministic under a fixed seed: batch composition comes
//! from a seeded shuffle per epoch, gradient accumulation and Adam updates
//! run in canonical row order, and evaluation parallelism merges in query
//! order.

use std::collections::{BTreeMap, HashMap};

use crate::datamodel::{EvalSplit, GradedPair, RankedRun};
use crate::encoder::{self, EmbeddingModel, TableGrads};
use crate::losses::{self, AnchorPairs, LossBatch, LossOptions, LossOutput};
use crate::metrics::{self, MetricConfig, MetricReport};
use crate::retrieval;
use crate::{seed, Error, Result};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LossKind {
    Mnrl,
    Ocl,
    #[default]
    Dual,
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LossKind::Mnrl => write!(f, "mnrl"),
            LossKind::Ocl => write!(f, "ocl"),
            LossKind::Dual => write!(f, "dual"),
        }
    }
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mnrl" => Ok(LossKind::Mnrl),
            "ocl" => Ok(LossKind::Ocl),
            "dual" => Ok(LossKind::Dual),
            other => Err(Error::invalid(format!("unknown loss {other:?} (mnrl|ocl|dual)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdMode {
    /// Sweep 101 evenly spaced thresholds in [-1, 1], keep the F1 maximizer.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    pub margin: f64,
    pub centrality_threshold: ThresholdMode,
    pub rng_seed: u64,
    pub in_batch_negatives: bool,
    pub loss: LossKind,
    pub loss_options: LossOptions,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 32,
            learning_rate: 2e-5,
            weight_decay: 0.01,
            max_epochs: 10,
            margin: 0.5,
            centrality_threshold: ThresholdMode::Auto,
            rng_seed: 0,
            in_batch_negatives: true,
            loss: LossKind::Dual,
            loss_options: LossOptions::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 2 {
            return Err(Error::invalid("batch_size must be >= 2"));
        }
        if self.learning_rate <= 0.0 {
            return Err(Error::invalid("learning_rate must be > 0"));
        }
        if self.max_epochs < 1 {
            return Err(Error::invalid("max_epochs must be >= 1"));
        }
        if self.margin <= 0.0 {
            return Err(Error::invalid("margin must be > 0"));
        }
        Ok(())
    }
}

/// One anchor's training texts: the query plus its labeled titles.
#[derive(Debug, Clone)]
pub struct TrainAnchor {
    pub query_id: String,
    pub query_text: String,
    /// (title text, centrality label), relevance > 3.
    pub positives: Vec<(String, u8)>,
    /// (title text, label); annotated negatives plus in-batch extras.
    pub negatives: Vec<(String, u8)>,
}

#[derive(Debug, Clone)]
pub struct TrainBatch {
    pub anchors: Vec<TrainAnchor>,
}

/// Groups pairs by query, drops queries lacking either class, shuffles query
/// order with a seed derived from (rng_seed, epoch), and chunks into batches.
/// With in-batch negatives on, every other anchor's positives join each
/// anchor's negative list with label 0.
pub fn make_batches(
    pairs: &[GradedPair],
    cfg: &TrainConfig,
    epoch: usize,
) -> Result<Vec<TrainBatch>> {
    cfg.validate()?;
    let mut grouped: BTreeMap<&str, TrainAnchor> = BTreeMap::new();
    for pair in pairs {
        let anchor = grouped
            .entry(pair.query_id.as_str())
            .or_insert_with(|| TrainAnchor {
                query_id: pair.query_id.clone(),
                query_text: pair.query_text.clone(),
                positives: Vec::new(),
                negatives: Vec::new(),
            });
        if pair.is_positive() {
            anchor.positives.push((pair.title_text.clone(), pair.centrality));
        } else if pair.is_negative() {
            anchor.negatives.push((pair.title_text.clone(), pair.centrality));
        }
    }
    let mut anchors: Vec<TrainAnchor> = grouped
        .into_values()
        .filter(|a| !a.positives.is_empty() && !a.negatives.is_empty())
        .collect();
    if anchors.is_empty() {
        return Err(Error::invalid("no trainable query (need both classes per query)"));
    }
    let mut rng =
        ChaCha8Rng::seed_from_u64(seed::derive_indexed(cfg.rng_seed, "batches", epoch as u64));
    anchors.shuffle(&mut rng);

    let mut batches = Vec::new();
    for chunk in anchors.chunks(cfg.batch_size) {
        let mut batch_anchors: Vec<TrainAnchor> = chunk.to_vec();
        if cfg.in_batch_negatives {
            for i in 0..batch_anchors.len() {
                let extras: Vec<(String, u8)> = chunk
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .flat_map(|(_, other)| other.positives.iter())
                    .map(|(text, _)| (text.clone(), 0u8))
                    .collect();
                batch_anchors[i].negatives.extend(extras);
            }
        }
        batches.push(TrainBatch {
            anchors: batch_anchors,
        });
    }
    Ok(batches)
}

/// Encodes the batch texts (each unique text once) and lays them out as a
/// [`LossBatch`]. Returns the unique texts aligned with the batch vectors so
/// gradients map back to the encoder.
pub fn build_loss_batch(
    batch: &TrainBatch,
    model: &EmbeddingModel,
    margin: f64,
) -> Result<(LossBatch, Vec<String>)> {
    let mut texts: Vec<String> = Vec::new();
    let mut index_of: HashMap<String, usize> = HashMap::new();
    let mut intern = |text: &str| -> usize {
        if let Some(&i) = index_of.get(text) {
            return i;
        }
        let i = texts.len();
        texts.push(text.to_string());
        index_of.insert(text.to_string(), i);
        i
    };
    let mut anchors = Vec::with_capacity(batch.anchors.len());
    for a in &batch.anchors {
        let query = intern(&a.query_text);
        let positives = a.positives.iter().map(|(t, l)| (intern(t), *l)).collect();
        let negatives = a.negatives.iter().map(|(t, l)| (intern(t), *l)).collect();
        anchors.push(AnchorPairs {
            query,
            positives,
            negatives,
        });
    }
    let vectors: Vec<Vec<f64>> = texts
        .iter()
        .map(|t| encoder::encode(t, model))
        .collect::<Result<_>>()?;
    Ok((
        LossBatch {
            vectors,
            anchors,
            margin,
        },
        texts,
    ))
}

fn compute_loss(batch: &LossBatch, kind: LossKind, opts: &LossOptions) -> Result<LossOutput> {
    match kind {
        LossKind::Mnrl => losses::mnrl(batch, opts),
        LossKind::Ocl => losses::ocl(batch, opts),
        LossKind::Dual => losses::dual_loss(batch, opts),
    }
}

/// First/second Adam moments for touched rows only, plus the step counter.
#[derive(Debug, Clone, Default)]
pub struct AdamState {
    pub step: u64,
    first: HashMap<u32, Vec<f64>>,
    second: HashMap<u32, Vec<f64>>,
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

/// Bias-corrected Adam update on the touched rows, with decoupled weight
/// decay (`row *= 1 - lr*wd`) applied to the same rows before the gradient
/// step. Rows are visited in ascending id order.
pub fn adam_step(
    model: &mut EmbeddingModel,
    grads: &TableGrads,
    state: &mut AdamState,
    cfg: &TrainConfig,
) -> Result<()> {
    for (row, g) in grads {
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "gradient for table row {row} at step {}",
                state.step + 1
            )));
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let bias1 = 1.0 - ADAM_BETA1.powi(t);
    let bias2 = 1.0 - ADAM_BETA2.powi(t);
    let decay = 1.0 - cfg.learning_rate * cfg.weight_decay;
    let dim = model.dim;
    for (&row, g) in grads {
        let offset = row as usize * dim;
        let slice = &mut model.table[offset..offset + dim];
        if cfg.weight_decay != 0.0 {
            for w in slice.iter_mut() {
                *w *= decay;
            }
        }
        let m = state.first.entry(row).or_insert_with(|| vec![0.0; dim]);
        let v = state.second.entry(row).or_insert_with(|| vec![0.0; dim]);
        for i in 0..dim {
            m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g[i];
            v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
            let m_hat = m[i] / bias1;
            let v_hat = v[i] / bias2;
            slice[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
        }
    }
    Ok(())
}

/// Evaluator one's verdict on a dev pair set.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralityEval {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub threshold: f64,
}

fn confusion_at(cosines: &[(f64, u8)], threshold: f64) -> CentralityEval {
    let (mut tp, mut fp, mut tn, mut fnn) = (0usize, 0usize, 0usize, 0usize);
    for &(cos, label) in cosines {
        let predicted = cos > threshold;
        match (predicted, label == 1) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fnn += 1,
        }
    }
    let precision = if tp + fp > 0 { tp as f64 / (tp + fp) as f64 } else { 0.0 };
    let recall = if tp + fnn > 0 { tp as f64 / (tp + fnn) as f64 } else { 0.0 };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    CentralityEval {
        accuracy: (tp + tn) as f64 / cosines.len() as f64,
        precision,
        recall,
        f1,
        threshold,
    }
}

/// Classifies each pair central iff `cos(q, t) > threshold`. Auto mode
/// sweeps 101 evenly spaced thresholds in [-1, 1] and keeps the first F1
/// maximizer.
pub fn eval_centrality(
    model: &EmbeddingModel,
    dev_pairs: &[GradedPair],
    mode: ThresholdMode,
) -> Result<CentralityEval> {
    if dev_pairs.is_empty() {
        return Err(Error::invalid("empty dev pair set"));
    }
    let mut cache: HashMap<&str, Vec<f64>> = HashMap::new();
    let mut cosines = Vec::with_capacity(dev_pairs.len());
    for pair in dev_pairs {
        for text in [pair.query_text.as_str(), pair.title_text.as_str()] {
            if !cache.contains_key(text) {
                cache.insert(text, encoder::encode(text, model)?);
            }
        }
        let cos = encoder::cosine(&cache[pair.query_text.as_str()], &cache[pair.title_text.as_str()])?;
        cosines.push((cos, pair.centrality));
    }
    match mode {
        ThresholdMode::Fixed(t) => Ok(confusion_at(&cosines, t)),
        ThresholdMode::Auto => {
            let mut best: Option<CentralityEval> = None;
            for i in 0..=100 {
                let t = -1.0 + i as f64 * 0.02;
                let eval = confusion_at(&cosines, t);
                if best.as_ref().map_or(true, |b| eval.f1 > b.f1) {
                    best = Some(eval);
                }
            }
            Ok(best.expect("at least one threshold evaluated"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuerySet {
    Dev,
    Test,
}

impl std::str::FromStr for QuerySet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dev" => Ok(QuerySet::Dev),
            "test" => Ok(QuerySet::Test),
            other => Err(Error::invalid(format!("unknown query set {other:?} (dev|test)"))),
        }
    }
}

/// Evaluator two: encodes the corpus once, retrieves top-k per query, and
/// aggregates ranking metrics. Returns the run alongside the report.
pub fn eval_retrieval(
    model: &EmbeddingModel,
    split: &EvalSplit,
    which: QuerySet,
    metric_cfg: &MetricConfig,
) -> Result<(MetricReport, RankedRun)> {
    metric_cfg.validate()?;
    let queries = match which {
        QuerySet::Dev => &split.dev_queries,
        QuerySet::Test => &split.test_queries,
    };
    if queries.is_empty() {
        return Err(Error::invalid(format!(
            "split {} has no {} queries",
            split.name,
            if which == QuerySet::Dev { "dev" } else { "test" }
        )));
    }
    let index = retrieval::build_index(&split.corpus, model)?;
    let k = metric_cfg
        .cutoffs
        .last()
        .copied()
        .unwrap_or(10)
        .max(metric_cfg.mrr_depth);
    let encoded: Vec<(String, Vec<f32>)> = queries
        .iter()
        .map(|(qid, qtext)| {
            encoder::encode(qtext, model)
                .map(|v| (qid.clone(), v.iter().map(|&x| x as f32).collect()))
        })
        .collect::<Result<_>>()?;
    let run = retrieval::batch_search(&index, &encoded, k)?;
    let report = metrics::aggregate(&run, &split.qrels, metric_cfg)?;
    Ok((report, run))
}

/// One epoch's record in the training history.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_batch_loss: f64,
    pub centrality: CentralityEval,
    pub retrieval: MetricReport,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// The checkpoint that maximized dev NDCG@10 (last maximum wins).
    pub model: EmbeddingModel,
    pub best_epoch: usize,
    pub history: Vec<EpochStats>,
}

/// Full fine-tuning loop. Runs `max_epochs` epochs of batched updates, both
/// dev evaluators after each epoch, and returns the best checkpoint by dev
/// NDCG@10 plus the per-epoch history.
pub fn train(
    model: EmbeddingModel,
    train_pairs: &[GradedPair],
    dev_split: &EvalSplit,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let metric_cfg = MetricConfig::default();
    let dev_pairs = dev_split.pairs_for(&dev_split.dev_queries);
    let mut model = model;
    let mut state = AdamState::default();
    let mut history = Vec::with_capacity(cfg.max_epochs);
    let mut best: Option<(f64, usize, EmbeddingModel)> = None;
    for epoch in 1..=cfg.max_epochs {
        let batches = make_batches(train_pairs, cfg, epoch)?;
        let mut loss_sum = 0.0;
        for (bi, batch) in batches.iter().enumerate() {
            let (loss_batch, texts) = build_loss_batch(batch, &model, cfg.margin)?;
            let out = compute_loss(&loss_batch, cfg.loss, &cfg.loss_options)?;
            if !out.loss.is_finite() {
                return Err(Error::NonFinite(format!("loss in epoch {epoch}, batch {bi}")));
            }
            loss_sum += out.loss;
            let mut table_grads = TableGrads::new();
            for (text, grad) in texts.iter().zip(&out.grads) {
                if grad.iter().any(|&g| g != 0.0) {
                    encoder::encode_backward(text, &model, grad, &mut table_grads)?;
                }
            }
            adam_step(&mut model, &table_grads, &mut state, cfg)?;
        }
        let centrality = eval_centrality(&model, &dev_pairs, cfg.centrality_threshold)?;
        let (retrieval_report, _) = eval_retrieval(&model, dev_split, QuerySet::Dev, &metric_cfg)?;
        let ndcg10 = retrieval_report
            .ndcg_at(10)
            .expect("default cutoffs include 10");
        // argmax with ties resolved toward the latest epoch: when dev
        // saturates, the most-trained checkpoint ships
        if best.as_ref().map_or(true, |(b, _, _)| ndcg10 >= *b) {
            best = Some((ndcg10, epoch, model.clone()));
        }
        history.push(EpochStats {
            epoch,
            mean_batch_loss: loss_sum / batches.len() as f64,
            centrality,
            retrieval: retrieval_report,
        });
    }
    let (_, best_epoch, best_model) = best.expect("max_epochs >= 1");
    Ok(TrainOutcome {
        model: best_model,
        best_epoch,
        history,
    })
}

/// `history.tsv`: epoch, loss, acc, f1, P/R/NDCG at each cutoff, MRR.
pub fn format_history_tsv(history: &[EpochStats]) -> String {
    let mut out = String::new();
    let cutoffs = history
        .first()
        .map(|h| h.retrieval.cutoffs.clone())
        .unwrap_or_default();
    out.push_str("epoch\tloss\tacc\tf1");
    for &k in &cutoffs {
        out.push_str(&format!("\tP@{k}"));
    }
    for &k in &cutoffs {
        out.push_str(&format!("\tR@{k}"));
    }
    for &k in &cutoffs {
        out.push_str(&format!("\tNDCG@{k}"));
    }
    out.push_str(&format!(
        "\tMRR@{}\n",
        history.first().map(|h| h.retrieval.mrr_depth).unwrap_or(10)
    ));
    for h in history {
        out.push_str(&format!(
            "{}\t{:.6}\t{:.4}\t{:.4}",
            h.epoch, h.mean_batch_loss, h.centrality.accuracy, h.centrality.f1
        ));
        for v in h.retrieval.precision.iter().chain(&h.retrieval.recall).chain(&h.retrieval.ndcg) {
            out.push_str(&format!("\t{v:.4}"));
        }
        out.push_str(&format!("\t{:.4}\n", h.retrieval.mrr));
    }
    out
}
