//! Evaluation-split construction from graded pairs.
//!
//! The base split keeps queries that have both a positive (relevance > 3)
//! and a negative (relevance < 3) title; grade-3 pairs are neither and are
//! dropped at filter time. Three derived splits stress specific failure
//! modes: class-balanced judgments, queries whose exact text appears in both
//! positive and negative titles, and queries carrying an alphanumeric model
//! code. Derived splits inherit dev/test membership from the base split so a
//! query never changes role.
//!
//! All construction is deterministic: queries and titles are canonically
//! sorted and every random choice flows from the config seed, so the same
//! seed yields byte-identical split files.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::datamodel::{EvalSplit, GradedPair, QrelEntry};
use crate::{seed, Error, Result};

pub const CQ: &str = "CQ";
pub const CQ_BALANCED: &str = "CQ-balanced";
pub const CQ_COMMON_STR: &str = "CQ-common-str";
pub const CQ_ALPHANUM: &str = "CQ-alphanum";

#[derive(Debug, Clone)]
pub struct CurationConfig {
    /// Relevance strictly greater counts as positive.
    pub positive_threshold: u8,
    /// Relevance strictly less counts as negative.
    pub negative_threshold: u8,
    /// Fraction of queries assigned to dev; the rest are test.
    pub dev_fraction: f64,
    pub rng_seed: u64,
    /// ASCII-ratio heuristic standing in for a language classifier.
    pub english_filter: bool,
}

impl Default for CurationConfig {
    fn default() -> Self {
        CurationConfig {
            positive_threshold: 3,
            negative_threshold: 3,
            dev_fraction: 0.8,
            rng_seed: 0,
            english_filter: true,
        }
    }
}

impl CurationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.negative_threshold > self.positive_threshold {
            return Err(Error::invalid(
                "negative_threshold must be <= positive_threshold",
            ));
        }
        if !(self.dev_fraction > 0.0 && self.dev_fraction < 1.0) {
            return Err(Error::invalid("dev_fraction must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Fraction of characters in the printable ASCII range.
fn ascii_printable_ratio(text: &str) -> f64 {
    let total = text.chars().count();
    if total == 0 {
        return 0.0;
    }
    let printable = text.chars().filter(|c| (' '..='~').contains(c)).count();
    printable as f64 / total as f64
}

/// Drops pairs that are neither positive nor negative under the thresholds,
/// applies the English heuristic when enabled (query or title below 90%
/// printable ASCII), and deduplicates on (query_id, title_id), keeping the
/// first occurrence.
pub fn filter_pairs(pairs: &[GradedPair], cfg: &CurationConfig) -> Result<Vec<GradedPair>> {
    cfg.validate()?;
    let mut seen: HashSet<(&str, &str)> = HashSet::new();
    let mut out = Vec::new();
    for pair in pairs {
        let positive = pair.relevance > cfg.positive_threshold;
        let negative = pair.relevance < cfg.negative_threshold;
        if !positive && !negative {
            continue;
        }
        if cfg.english_filter
            && (ascii_printable_ratio(&pair.query_text) < 0.9
                || ascii_printable_ratio(&pair.title_text) < 0.9)
        {
            continue;
        }
        if seen.insert((&pair.query_id, &pair.title_id)) {
            out.push(pair.clone());
        }
    }
    Ok(out)
}

struct QueryGroup {
    query_text: String,
    entries: Vec<(String, String, u8, u8)>, // title_id, title_text, relevance, centrality
}

fn group_by_query(pairs: &[GradedPair]) -> Result<BTreeMap<String, QueryGroup>> {
    let mut groups: BTreeMap<String, QueryGroup> = BTreeMap::new();
    for pair in pairs {
        let group = groups.entry(pair.query_id.clone()).or_insert_with(|| QueryGroup {
            query_text: pair.query_text.clone(),
            entries: Vec::new(),
        });
        if group.query_text != pair.query_text {
            return Err(Error::invalid(format!(
                "query {} has conflicting texts {:?} and {:?}",
                pair.query_id, group.query_text, pair.query_text
            )));
        }
        group.entries.push((
            pair.title_id.clone(),
            pair.title_text.clone(),
            pair.relevance,
            pair.centrality,
        ));
    }
    Ok(groups)
}

fn corpus_from_qrels(
    qrels: &BTreeMap<String, BTreeSet<QrelEntry>>,
    texts: &HashMap<String, String>,
) -> Vec<(String, String)> {
    let ids: BTreeSet<&str> = qrels
        .values()
        .flatten()
        .map(|e| e.title_id.as_str())
        .collect();
    ids.into_iter()
        .map(|id| (id.to_string(), texts[id].clone()))
        .collect()
}

/// Builds the base split from filtered pairs: queries with at least one
/// positive and one negative title, partitioned dev/test by seeded shuffle.
pub fn build_cq(pairs: &[GradedPair], cfg: &CurationConfig) -> Result<EvalSplit> {
    cfg.validate()?;
    let groups = group_by_query(pairs)?;
    let mut title_texts: HashMap<String, String> = HashMap::new();
    let mut qrels: BTreeMap<String, BTreeSet<QrelEntry>> = BTreeMap::new();
    let mut kept_queries: Vec<(String, String)> = Vec::new();
    for (qid, group) in &groups {
        let has_pos = group.entries.iter().any(|e| e.2 > cfg.positive_threshold);
        let has_neg = group.entries.iter().any(|e| e.2 < cfg.negative_threshold);
        if !has_pos || !has_neg {
            continue;
        }
        let entry_set = qrels.entry(qid.clone()).or_default();
        for (tid, text, rel, cen) in &group.entries {
            if let Some(existing) = title_texts.get(tid) {
                if existing != text {
                    return Err(Error::invalid(format!(
                        "title {tid} has conflicting texts {existing:?} and {text:?}"
                    )));
                }
            } else {
                title_texts.insert(tid.clone(), text.clone());
            }
            entry_set.insert(QrelEntry {
                title_id: tid.clone(),
                relevance: *rel,
                centrality: *cen,
            });
        }
        kept_queries.push((qid.clone(), group.query_text.clone()));
    }
    if kept_queries.is_empty() {
        return Err(Error::NoQualifyingQuery(CQ.to_string()));
    }

    // queries arrive sorted by id (BTreeMap); a seeded shuffle then fixes
    // the dev/test partition
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(cfg.rng_seed, "dev-test-partition"));
    kept_queries.shuffle(&mut rng);
    let n_dev = ((kept_queries.len() as f64) * cfg.dev_fraction).round() as usize;
    let n_dev = n_dev.min(kept_queries.len());
    let mut dev_queries: Vec<(String, String)> = kept_queries[..n_dev].to_vec();
    let mut test_queries: Vec<(String, String)> = kept_queries[n_dev..].to_vec();
    dev_queries.sort();
    test_queries.sort();

    let split = EvalSplit {
        name: CQ.to_string(),
        corpus: corpus_from_qrels(&qrels, &title_texts),
        dev_queries,
        test_queries,
        qrels,
    };
    split.validate()?;
    Ok(split)
}

/// Per query, downsamples the majority relevance class uniformly at random
/// to the minority count. Query sets are unchanged; the corpus shrinks to
/// the titles still referenced.
pub fn build_cq_balanced(split: &EvalSplit, rng_seed: u64) -> Result<EvalSplit> {
    let texts: HashMap<String, String> = split.corpus.iter().cloned().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(rng_seed, "balance"));
    let mut qrels: BTreeMap<String, BTreeSet<QrelEntry>> = BTreeMap::new();
    for (qid, entries) in &split.qrels {
        let mut positives: Vec<&QrelEntry> = Vec::new();
        let mut negatives: Vec<&QrelEntry> = Vec::new();
        let mut neither: Vec<&QrelEntry> = Vec::new();
        for e in entries {
            if e.relevance > 3 {
                positives.push(e);
            } else if e.relevance < 3 {
                negatives.push(e);
            } else {
                neither.push(e);
            }
        }
        let target = positives.len().min(negatives.len());
        for class in [&mut positives, &mut negatives] {
            if class.len() > target {
                class.shuffle(&mut rng);
                class.truncate(target);
            }
        }
        let kept: BTreeSet<QrelEntry> = positives
            .into_iter()
            .chain(negatives)
            .chain(neither)
            .cloned()
            .collect();
        qrels.insert(qid.clone(), kept);
    }
    let split = EvalSplit {
        name: CQ_BALANCED.to_string(),
        corpus: corpus_from_qrels(&qrels, &texts),
        dev_queries: split.dev_queries.clone(),
        test_queries: split.test_queries.clone(),
        qrels,
    };
    split.validate()?;
    Ok(split)
}

/// Lowercases and collapses whitespace runs; the form used for exact-string
/// containment checks.
fn normalize_for_match(text: &str) -> String {
    text.to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Keeps queries whose full text occurs (case-insensitive, whitespace
/// normalized) inside at least one positive and one negative title.
pub fn build_cq_common_str(split: &EvalSplit) -> Result<EvalSplit> {
    let texts: HashMap<String, String> = split.corpus.iter().cloned().collect();
    let kept: BTreeSet<&str> = split
        .all_queries()
        .filter(|(qid, qtext)| {
            let needle = normalize_for_match(qtext);
            let entries = match split.qrels.get(qid) {
                Some(e) => e,
                None => return false,
            };
            let contains = |e: &QrelEntry| normalize_for_match(&texts[&e.title_id]).contains(&needle);
            let pos_hit = entries.iter().any(|e| e.relevance > 3 && contains(e));
            let neg_hit = entries.iter().any(|e| e.relevance < 3 && contains(e));
            pos_hit && neg_hit
        })
        .map(|(qid, _)| qid.as_str())
        .collect();
    restrict_split(split, &kept, CQ_COMMON_STR)
}

/// True when some whitespace token mixes at least one letter with at least
/// one decimal digit (model codes like "s2716dg" or "i5").
fn has_alphanumeric_token(text: &str) -> bool {
    text.split_whitespace().any(|token| {
        token.chars().any(|c| c.is_alphabetic()) && token.chars().any(|c| c.is_ascii_digit())
    })
}

/// Keeps queries containing an alphanumeric model-code token.
pub fn build_cq_alphanum(split: &EvalSplit) -> Result<EvalSplit> {
    let kept: BTreeSet<&str> = split
        .all_queries()
        .filter(|(_, qtext)| has_alphanumeric_token(qtext))
        .map(|(qid, _)| qid.as_str())
        .collect();
    restrict_split(split, &kept, CQ_ALPHANUM)
}

/// Restricts a split to a subset of its queries: qrels and corpus shrink to
/// the kept queries' titles, dev/test membership is inherited.
fn restrict_split(split: &EvalSplit, kept: &BTreeSet<&str>, name: &str) -> Result<EvalSplit> {
    if kept.is_empty() {
        return Err(Error::NoQualifyingQuery(name.to_string()));
    }
    let texts: HashMap<String, String> = split.corpus.iter().cloned().collect();
    let qrels: BTreeMap<String, BTreeSet<QrelEntry>> = split
        .qrels
        .iter()
        .filter(|(qid, _)| kept.contains(qid.as_str()))
        .map(|(qid, entries)| (qid.clone(), entries.clone()))
        .collect();
    let filter_queries = |queries: &[(String, String)]| {
        queries
            .iter()
            .filter(|(qid, _)| kept.contains(qid.as_str()))
            .cloned()
            .collect::<Vec<_>>()
    };
    let out = EvalSplit {
        name: name.to_string(),
        corpus: corpus_from_qrels(&qrels, &texts),
        dev_queries: filter_queries(&split.dev_queries),
        test_queries: filter_queries(&split.test_queries),
        qrels,
    };
    out.validate()?;
    Ok(out)
}

// --- correlation statistics -------------------------------------------------
//
// Relevance and centrality are small integers, so every sufficient statistic
// is computed exactly in i128. When the numerator squared equals the product
// of the variance terms the correlation is exactly +/-1, which keeps
// perfectly aligned series at 1.0 without floating-point shortfall.

fn exact_ratio(numerator: i128, var_x: i128, var_y: i128) -> f64 {
    if numerator * numerator == var_x * var_y {
        return if numerator >= 0 { 1.0 } else { -1.0 };
    }
    numerator as f64 / ((var_x as f64).sqrt() * (var_y as f64).sqrt())
}

/// Pearson correlation of two integer series.
pub fn pearson(xs: &[i64], ys: &[i64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::invalid("correlation needs two series of equal length >= 2"));
    }
    let n = xs.len() as i128;
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0i128, 0i128, 0i128, 0i128, 0i128);
    for (&x, &y) in xs.iter().zip(ys) {
        let (x, y) = (x as i128, y as i128);
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
    }
    let var_x = n * sxx - sx * sx;
    let var_y = n * syy - sy * sy;
    if var_x == 0 {
        return Err(Error::ConstantSeries("first"));
    }
    if var_y == 0 {
        return Err(Error::ConstantSeries("second"));
    }
    Ok(exact_ratio(n * sxy - sx * sy, var_x, var_y))
}

/// Average ranks doubled so ties stay integral (tied runs average to
/// half-integers).
fn doubled_average_ranks(values: &[i64]) -> Vec<i64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by_key(|&i| values[i]);
    let mut ranks = vec![0i64; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && values[order[end + 1]] == values[order[start]] {
            end += 1;
        }
        // positions are 1-based; doubled average of start+1 ..= end+1
        let doubled = (start + 1 + end + 1) as i64;
        for &i in &order[start..=end] {
            ranks[i] = doubled;
        }
        start = end + 1;
    }
    ranks
}

/// Spearman rank correlation with average-tie handling.
pub fn spearman(xs: &[i64], ys: &[i64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::invalid("correlation needs two series of equal length >= 2"));
    }
    pearson(&doubled_average_ranks(xs), &doubled_average_ranks(ys))
}

/// Kendall tau-b with tie corrections.
pub fn kendall_tau_b(xs: &[i64], ys: &[i64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::invalid("correlation needs two series of equal length >= 2"));
    }
    let n = xs.len();
    let (mut concordant, mut discordant) = (0i128, 0i128);
    let (mut ties_x, mut ties_y) = (0i128, 0i128);
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = xs[i].cmp(&xs[j]);
            let dy = ys[i].cmp(&ys[j]);
            use std::cmp::Ordering::Equal;
            match (dx, dy) {
                (Equal, Equal) => {
                    ties_x += 1;
                    ties_y += 1;
                }
                (Equal, _) => ties_x += 1,
                (_, Equal) => ties_y += 1,
                (a, b) if a == b => concordant += 1,
                _ => discordant += 1,
            }
        }
    }
    let n0 = (n as i128) * (n as i128 - 1) / 2;
    let denom_x = n0 - ties_x;
    let denom_y = n0 - ties_y;
    if denom_x == 0 {
        return Err(Error::ConstantSeries("first"));
    }
    if denom_y == 0 {
        return Err(Error::ConstantSeries("second"));
    }
    Ok(exact_ratio(concordant - discordant, denom_x, denom_y))
}

/// Pearson, Kendall tau-b, and Spearman correlations between relevance and
/// centrality.
pub fn correlation_stats(pairs: &[GradedPair]) -> Result<(f64, f64, f64)> {
    let xs: Vec<i64> = pairs.iter().map(|p| p.relevance as i64).collect();
    let ys: Vec<i64> = pairs.iter().map(|p| p.centrality as i64).collect();
    Ok((
        pearson(&xs, &ys)?,
        kendall_tau_b(&xs, &ys)?,
        spearman(&xs, &ys)?,
    ))
}

/// `correlations.txt` body: one coefficient per line, 4 decimal places.
pub fn format_correlations(pearson: f64, kendall: f64, spearman: f64) -> String {
    format!("pearson\t{pearson:.4}\nkendall\t{kendall:.4}\nspearman\t{spearman:.4}\n")
}
