//! Ranking-quality metrics: P@k, R@k, NDCG@k, MRR, macro-averaged across
//! queries.
//!
//! "Relevant" means relevance strictly greater than 3 (the binary gain
//! default); graded mode uses `2^rel - 1` gains for NDCG while positives for
//! precision/recall stay binary. Queries with no relevant title are excluded
//! from macro averages (IDCG is undefined there) and counted in the report.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::datamodel::{QrelEntry, RankedRun, POSITIVE_THRESHOLD};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GainMode {
    /// Gain 1 iff relevance > 3.
    #[default]
    Binary,
    /// Gain `2^rel - 1`.
    Graded,
}

#[derive(Debug, Clone)]
pub struct MetricConfig {
    /// Cutoffs for P@k, R@k, NDCG@k; positive and sorted ascending.
    pub cutoffs: Vec<usize>,
    pub mrr_depth: usize,
    pub gain_mode: GainMode,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            cutoffs: vec![3, 5, 10],
            mrr_depth: 10,
            gain_mode: GainMode::Binary,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cutoffs.is_empty()
            || self.cutoffs.iter().any(|&k| k == 0)
            || self.cutoffs.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::invalid("cutoffs must be positive and strictly ascending"));
        }
        if self.mrr_depth == 0 {
            return Err(Error::invalid("mrr_depth must be >= 1"));
        }
        Ok(())
    }
}

/// `|top-k intersect relevant| / k`; the denominator stays k even when fewer
/// than k titles were retrieved.
pub fn precision_at_k(ranking: &[&str], relevant: &HashSet<&str>, k: usize) -> f64 {
    let hits = ranking
        .iter()
        .take(k)
        .filter(|id| relevant.contains(**id))
        .count();
    hits as f64 / k as f64
}

/// `|top-k intersect relevant| / |relevant|`; callers exclude queries with an
/// empty relevant set upstream.
pub fn recall_at_k(ranking: &[&str], relevant: &HashSet<&str>, k: usize) -> f64 {
    debug_assert!(!relevant.is_empty());
    let hits = ranking
        .iter()
        .take(k)
        .filter(|id| relevant.contains(**id))
        .count();
    hits as f64 / relevant.len() as f64
}

fn gain(relevance: u8, mode: GainMode) -> f64 {
    match mode {
        GainMode::Binary => {
            if relevance > POSITIVE_THRESHOLD {
                1.0
            } else {
                0.0
            }
        }
        GainMode::Graded => (1u32 << relevance) as f64 - 1.0,
    }
}

/// DCG with `gain(r)/log2(r+1)` discounts against the ideal reordering of
/// the query's judgments. Requires at least one relevant title (IDCG > 0).
pub fn ndcg_at_k(
    ranking: &[&str],
    qrels: &BTreeSet<QrelEntry>,
    k: usize,
    mode: GainMode,
) -> f64 {
    let by_title: BTreeMap<&str, u8> = qrels
        .iter()
        .map(|e| (e.title_id.as_str(), e.relevance))
        .collect();
    let mut dcg = 0.0;
    for (rank, id) in ranking.iter().take(k).enumerate() {
        if let Some(&rel) = by_title.get(*id) {
            dcg += gain(rel, mode) / ((rank + 2) as f64).log2();
        }
    }
    let mut ideal: Vec<f64> = qrels.iter().map(|e| gain(e.relevance, mode)).collect();
    ideal.sort_by(|a, b| b.partial_cmp(a).expect("gains are finite"));
    let mut idcg = 0.0;
    for (rank, g) in ideal.iter().take(k).enumerate() {
        idcg += g / ((rank + 2) as f64).log2();
    }
    debug_assert!(idcg > 0.0, "caller must exclude queries with zero relevant titles");
    dcg / idcg
}

/// Reciprocal rank of the first relevant title within `depth`, else 0.
pub fn reciprocal_rank(ranking: &[&str], relevant: &HashSet<&str>, depth: usize) -> f64 {
    for (rank, id) in ranking.iter().take(depth).enumerate() {
        if relevant.contains(*id) {
            return 1.0 / (rank + 1) as f64;
        }
    }
    0.0
}

/// Mean reciprocal rank over the run's queries. Queries without relevant
/// titles in qrels contribute 0; [`aggregate`] excludes them instead.
pub fn mrr(run: &RankedRun, qrels: &BTreeMap<String, BTreeSet<QrelEntry>>, depth: usize) -> f64 {
    if run.by_query.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for (qid, list) in &run.by_query {
        let relevant: HashSet<&str> = qrels
            .get(qid)
            .map(|entries| {
                entries
                    .iter()
                    .filter(|e| e.relevance > POSITIVE_THRESHOLD)
                    .map(|e| e.title_id.as_str())
                    .collect()
            })
            .unwrap_or_default();
        let ids: Vec<&str> = list.iter().map(|(id, _)| id.as_str()).collect();
        total += reciprocal_rank(&ids, &relevant, depth);
    }
    total / run.by_query.len() as f64
}

/// Macro-averaged metric report over one query set.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub cutoffs: Vec<usize>,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub ndcg: Vec<f64>,
    pub mrr: f64,
    pub mrr_depth: usize,
    /// Queries that entered the averages.
    pub queries_evaluated: usize,
    /// Queries excluded for having no relevant title in qrels.
    pub queries_skipped: usize,
}

impl MetricReport {
    fn value_at(&self, series: &[f64], k: usize) -> Option<f64> {
        self.cutoffs
            .iter()
            .position(|&c| c == k)
            .map(|i| series[i])
    }

    pub fn precision_at(&self, k: usize) -> Option<f64> {
        self.value_at(&self.precision, k)
    }

    pub fn recall_at(&self, k: usize) -> Option<f64> {
        self.value_at(&self.recall, k)
    }

    pub fn ndcg_at(&self, k: usize) -> Option<f64> {
        self.value_at(&self.ndcg, k)
    }
}

/// Macro-averages every metric over the run's queries. Errors when a run
/// query is missing from qrels; queries whose qrels contain no relevant
/// title are skipped and counted.
pub fn aggregate(
    run: &RankedRun,
    qrels: &BTreeMap<String, BTreeSet<QrelEntry>>,
    cfg: &MetricConfig,
) -> Result<MetricReport> {
    cfg.validate()?;
    let n_cuts = cfg.cutoffs.len();
    let mut precision = vec![0.0; n_cuts];
    let mut recall = vec![0.0; n_cuts];
    let mut ndcg = vec![0.0; n_cuts];
    let mut rr = 0.0;
    let mut evaluated = 0usize;
    let mut skipped = 0usize;
    for (qid, list) in &run.by_query {
        let entries = qrels
            .get(qid)
            .ok_or_else(|| Error::invalid(format!("query {qid} missing from qrels")))?;
        let relevant: HashSet<&str> = entries
            .iter()
            .filter(|e| e.relevance > POSITIVE_THRESHOLD)
            .map(|e| e.title_id.as_str())
            .collect();
        if relevant.is_empty() {
            skipped += 1;
            continue;
        }
        evaluated += 1;
        let ids: Vec<&str> = list.iter().map(|(id, _)| id.as_str()).collect();
        for (i, &k) in cfg.cutoffs.iter().enumerate() {
            precision[i] += precision_at_k(&ids, &relevant, k);
            recall[i] += recall_at_k(&ids, &relevant, k);
            ndcg[i] += ndcg_at_k(&ids, entries, k, cfg.gain_mode);
        }
        rr += reciprocal_rank(&ids, &relevant, cfg.mrr_depth);
    }
    if evaluated == 0 {
        return Err(Error::invalid("no evaluable query (all lacked relevant titles)"));
    }
    let n = evaluated as f64;
    for series in [&mut precision, &mut recall, &mut ndcg] {
        for v in series.iter_mut() {
            *v /= n;
        }
    }
    Ok(MetricReport {
        cutoffs: cfg.cutoffs.clone(),
        precision,
        recall,
        ndcg,
        mrr: rr / n,
        mrr_depth: cfg.mrr_depth,
        queries_evaluated: evaluated,
        queries_skipped: skipped,
    })
}

/// Report rows as TSV: precision/recall in percent to 2 decimals, NDCG and
/// MRR as 4-decimal fractions.
pub fn format_report_tsv(report: &MetricReport) -> String {
    let mut header = String::new();
    let mut row = String::new();
    for &k in &report.cutoffs {
        header.push_str(&format!("P@{k}\t"));
    }
    for &k in &report.cutoffs {
        header.push_str(&format!("R@{k}\t"));
    }
    for &k in &report.cutoffs {
        header.push_str(&format!("NDCG@{k}\t"));
    }
    header.push_str(&format!("MRR@{}\n", report.mrr_depth));
    for v in &report.precision {
        row.push_str(&format!("{:.2}\t", v * 100.0));
    }
    for v in &report.recall {
        row.push_str(&format!("{:.2}\t", v * 100.0));
    }
    for v in &report.ndcg {
        row.push_str(&format!("{v:.4}\t"));
    }
    row.push_str(&format!("{:.4}\n", report.mrr));
    header + &row
}

/// Parses a TSV produced by [`format_report_tsv`] back into (header, values).
pub fn parse_report_tsv(content: &str, path_hint: &str) -> Result<(Vec<String>, Vec<f64>)> {
    let mut lines = content.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::parse(path_hint, 1, "empty report"))?
        .split('\t')
        .map(str::to_owned)
        .collect();
    let values_line = lines
        .next()
        .ok_or_else(|| Error::parse(path_hint, 2, "missing values row"))?;
    let values: Vec<f64> = values_line
        .split('\t')
        .enumerate()
        .map(|(i, v)| {
            v.parse::<f64>()
                .map_err(|_| Error::parse(path_hint, 2, format!("field {}: not a number: {v:?}", i + 1)))
        })
        .collect::<Result<_>>()?;
    if values.len() != header.len() {
        return Err(Error::parse(path_hint, 2, "column count differs from header"));
    }
    Ok((header, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qrels_from(entries: &[(&str, u8)]) -> BTreeSet<QrelEntry> {
        entries
            .iter()
            .map(|&(id, rel)| QrelEntry {
                title_id: id.into(),
                relevance: rel,
                centrality: u8::from(rel > POSITIVE_THRESHOLD),
            })
            .collect()
    }

    #[test]
    fn precision_basics() {
        let relevant: HashSet<&str> = ["a", "b"].into();
        assert_eq!(precision_at_k(&["a", "x", "b", "y", "z"], &relevant, 5), 0.4);
        assert_eq!(precision_at_k(&["x", "y"], &relevant, 2), 0.0);
        assert_eq!(precision_at_k(&["a", "b"], &relevant, 2), 1.0);
        // fewer retrieved than k still divides by k
        assert_eq!(precision_at_k(&["a"], &relevant, 5), 0.2);
    }

    #[test]
    fn recall_basics() {
        let relevant: HashSet<&str> = ["a", "b", "c", "d"].into();
        assert_eq!(recall_at_k(&["a", "b", "x", "c"], &relevant, 10), 0.75);
        assert_eq!(recall_at_k(&["a", "b", "c", "d"], &relevant, 4), 1.0);
        assert_eq!(recall_at_k(&["x", "y"], &relevant, 2), 0.0);
    }

    #[test]
    fn ndcg_hand_computed_case() {
        // ranking [relevant, non, relevant], 2 relevant total, binary gains:
        // DCG = 1 + 1/log2(4) = 1.5, IDCG = 1 + 1/log2(3)
        let qrels = qrels_from(&[("a", 5), ("b", 1), ("c", 4)]);
        let got = ndcg_at_k(&["a", "b", "c"], &qrels, 3, GainMode::Binary);
        let expected = 1.5 / (1.0 + 1.0 / 3f64.log2());
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 0.9197).abs() < 1e-4);
    }

    #[test]
    fn ndcg_ideal_is_one_and_miss_is_zero() {
        let qrels = qrels_from(&[("a", 5), ("b", 4), ("c", 1)]);
        assert_eq!(ndcg_at_k(&["a", "b", "c"], &qrels, 3, GainMode::Binary), 1.0);
        assert_eq!(ndcg_at_k(&["c", "x", "y"], &qrels, 3, GainMode::Binary), 0.0);
    }

    #[test]
    fn ndcg_graded_prefers_higher_grade_first() {
        let qrels = qrels_from(&[("a", 5), ("b", 4)]);
        let best = ndcg_at_k(&["a", "b"], &qrels, 2, GainMode::Graded);
        let worse = ndcg_at_k(&["b", "a"], &qrels, 2, GainMode::Graded);
        assert_eq!(best, 1.0);
        assert!(worse < 1.0);
    }

    #[test]
    fn reciprocal_rank_basics() {
        let relevant: HashSet<&str> = ["r"].into();
        assert_eq!(reciprocal_rank(&["r", "x"], &relevant, 10), 1.0);
        assert_eq!(reciprocal_rank(&["x", "y", "r"], &relevant, 10), 1.0 / 3.0);
        assert_eq!(reciprocal_rank(&["x", "y", "r"], &relevant, 2), 0.0);
    }

    fn run_of(entries: &[(&str, &[&str])]) -> RankedRun {
        let mut run = RankedRun::new(10);
        for (qid, ids) in entries {
            run.by_query.insert(
                qid.to_string(),
                ids.iter()
                    .enumerate()
                    .map(|(i, id)| (id.to_string(), 1.0 - i as f32 * 0.01))
                    .collect(),
            );
        }
        run
    }

    #[test]
    fn aggregate_macro_averages() {
        let mut qrels = BTreeMap::new();
        qrels.insert("q1".to_string(), qrels_from(&[("a", 5), ("b", 1)]));
        qrels.insert("q2".to_string(), qrels_from(&[("c", 4), ("d", 2)]));
        let run = run_of(&[("q1", &["a", "b"]), ("q2", &["d", "c"])]);
        let report = aggregate(&run, &qrels, &MetricConfig::default()).unwrap();
        // q1 rr = 1.0, q2 rr = 0.5
        assert!((report.mrr - 0.75).abs() < 1e-12);
        assert_eq!(report.queries_evaluated, 2);
        assert_eq!(report.queries_skipped, 0);
    }

    #[test]
    fn aggregate_single_query_equals_per_query() {
        let mut qrels = BTreeMap::new();
        qrels.insert("q1".to_string(), qrels_from(&[("a", 5), ("b", 1)]));
        let run = run_of(&[("q1", &["b", "a"])]);
        let report = aggregate(&run, &qrels, &MetricConfig::default()).unwrap();
        assert!((report.mrr - 0.5).abs() < 1e-12);
        assert!((report.precision_at(3).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!((report.recall_at(3).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn aggregate_skips_queries_without_relevant_titles() {
        let mut qrels = BTreeMap::new();
        qrels.insert("q1".to_string(), qrels_from(&[("a", 5), ("b", 1)]));
        qrels.insert("q2".to_string(), qrels_from(&[("c", 2), ("d", 1)]));
        let run = run_of(&[("q1", &["a"]), ("q2", &["c"])]);
        let report = aggregate(&run, &qrels, &MetricConfig::default()).unwrap();
        assert_eq!(report.queries_evaluated, 1);
        assert_eq!(report.queries_skipped, 1);
        assert_eq!(report.mrr, 1.0);
    }

    #[test]
    fn aggregate_rejects_unknown_query() {
        let qrels = BTreeMap::new();
        let run = run_of(&[("mystery", &["a"])]);
        assert!(aggregate(&run, &qrels, &MetricConfig::default()).is_err());
    }

    #[test]
    fn permuting_irrelevant_tail_keeps_ndcg() {
        let qrels = qrels_from(&[("a", 5), ("x", 1), ("y", 2), ("z", 1)]);
        let base = ndcg_at_k(&["a", "x", "y", "z"], &qrels, 4, GainMode::Binary);
        let permuted = ndcg_at_k(&["a", "z", "x", "y"], &qrels, 4, GainMode::Binary);
        assert_eq!(base, permuted);
    }

    #[test]
    fn promoting_a_relevant_title_never_hurts() {
        let qrels = qrels_from(&[("a", 5), ("b", 4), ("x", 1)]);
        let before = ndcg_at_k(&["x", "a", "b"], &qrels, 3, GainMode::Binary);
        let after = ndcg_at_k(&["a", "x", "b"], &qrels, 3, GainMode::Binary);
        assert!(after >= before);
        let relevant: HashSet<&str> = ["a", "b"].into();
        assert!(
            reciprocal_rank(&["a", "x", "b"], &relevant, 10)
                >= reciprocal_rank(&["x", "a", "b"], &relevant, 10)
        );
    }

    #[test]
    fn report_tsv_formats_percent_and_fraction() {
        let report = MetricReport {
            cutoffs: vec![3, 5, 10],
            precision: vec![0.164, 0.1303, 0.0893],
            recall: vec![0.1131, 0.1441, 0.1883],
            ndcg: vec![0.1912, 0.1818, 0.1833],
            mrr: 0.2771,
            mrr_depth: 10,
            queries_evaluated: 2,
            queries_skipped: 0,
        };
        let tsv = format_report_tsv(&report);
        let mut lines = tsv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "P@3\tP@5\tP@10\tR@3\tR@5\tR@10\tNDCG@3\tNDCG@5\tNDCG@10\tMRR@10"
        );
        assert_eq!(
            lines.next().unwrap(),
            "16.40\t13.03\t8.93\t11.31\t14.41\t18.83\t0.1912\t0.1818\t0.1833\t0.2771"
        );
        let (header, values) = parse_report_tsv(&tsv, "report.tsv").unwrap();
        assert_eq!(header.len(), 10);
        assert_eq!(values.len(), 10);
        assert!((values[9] - 0.2771).abs() < 1e-12);
    }
}
