//! Canonical record types and line-delimited file I/O.
//!
//! Four file kinds, all UTF-8 with Unix newlines and tab separators:
//!
//! - `pairs.tsv` - `query_id  query_text  title_id  title_text  relevance  centrality`
//! - `corpus.tsv` - `title_id  title_text`
//! - `*-queries.tsv` - `query_id  query_text`
//! - `qrels.tsv` - `query_id  title_id  relevance  centrality`
//!
//! Tabs and newlines inside text fields are rejected rather than escaped;
//! search text never legitimately contains them. IDs are opaque strings.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::{Error, Result};

/// Relevance grades above this are positive, below negative; grade 3 itself
/// is neither.
pub const POSITIVE_THRESHOLD: u8 = 3;
pub const NEGATIVE_THRESHOLD: u8 = 3;

/// One annotated (query, title) record with a 1-5 relevance grade and a
/// binary centrality label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradedPair {
    pub query_id: String,
    pub query_text: String,
    pub title_id: String,
    pub title_text: String,
    pub relevance: u8,
    pub centrality: u8,
}

impl GradedPair {
    pub fn new(
        query_id: impl Into<String>,
        query_text: impl Into<String>,
        title_id: impl Into<String>,
        title_text: impl Into<String>,
        relevance: u8,
        centrality: u8,
    ) -> Result<Self> {
        let pair = GradedPair {
            query_id: query_id.into(),
            query_text: query_text.into(),
            title_id: title_id.into(),
            title_text: title_text.into(),
            relevance,
            centrality,
        };
        pair.validate()?;
        Ok(pair)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=5).contains(&self.relevance) {
            return Err(Error::invalid(format!(
                "grade out of range: {} (expected 1..=5)",
                self.relevance
            )));
        }
        if self.centrality > 1 {
            return Err(Error::invalid(format!(
                "centrality out of range: {} (expected 0 or 1)",
                self.centrality
            )));
        }
        for (name, value) in [
            ("query_id", &self.query_id),
            ("query_text", &self.query_text),
            ("title_id", &self.title_id),
            ("title_text", &self.title_text),
        ] {
            if value.trim().is_empty() {
                return Err(Error::invalid(format!("{name} is empty")));
            }
            if value.contains('\t') || value.contains('\n') || value.contains('\r') {
                return Err(Error::invalid(format!(
                    "{name} contains a tab or newline: {value:?}"
                )));
            }
        }
        Ok(())
    }

    /// Relevance strictly above the positive threshold.
    pub fn is_positive(&self) -> bool {
        self.relevance > POSITIVE_THRESHOLD
    }

    /// Relevance strictly below the negative threshold.
    pub fn is_negative(&self) -> bool {
        self.relevance < NEGATIVE_THRESHOLD
    }
}

/// One relevance judgment inside an [`EvalSplit`]. Ordered by title id so
/// qrels serialize canonically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct QrelEntry {
    pub title_id: String,
    pub relevance: u8,
    pub centrality: u8,
}

/// A retrieval corpus plus dev/test query sets with relevance judgments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalSplit {
    pub name: String,
    /// (title_id, title_text), unique by id.
    pub corpus: Vec<(String, String)>,
    /// (query_id, query_text).
    pub dev_queries: Vec<(String, String)>,
    pub test_queries: Vec<(String, String)>,
    pub qrels: BTreeMap<String, BTreeSet<QrelEntry>>,
}

impl EvalSplit {
    /// Checks every structural invariant; called before save and after load.
    pub fn validate(&self) -> Result<()> {
        if self.corpus.is_empty() {
            return Err(Error::invalid(format!("split {}: corpus is empty", self.name)));
        }
        let mut corpus_ids = HashSet::with_capacity(self.corpus.len());
        for (id, text) in &self.corpus {
            if !corpus_ids.insert(id.as_str()) {
                return Err(Error::invalid(format!(
                    "split {}: duplicate corpus title_id {id}",
                    self.name
                )));
            }
            if text.trim().is_empty() {
                return Err(Error::invalid(format!(
                    "split {}: empty title_text for {id}",
                    self.name
                )));
            }
        }
        for (qid, entries) in &self.qrels {
            for e in entries {
                if !corpus_ids.contains(e.title_id.as_str()) {
                    return Err(Error::invalid(format!(
                        "split {}: qrels title {} for query {qid} missing from corpus",
                        self.name, e.title_id
                    )));
                }
            }
        }
        let dev: HashSet<&str> = self.dev_queries.iter().map(|(id, _)| id.as_str()).collect();
        let test: HashSet<&str> = self.test_queries.iter().map(|(id, _)| id.as_str()).collect();
        if dev.len() != self.dev_queries.len() || test.len() != self.test_queries.len() {
            return Err(Error::invalid(format!(
                "split {}: duplicate query id within a query set",
                self.name
            )));
        }
        if let Some(id) = dev.intersection(&test).next() {
            return Err(Error::invalid(format!(
                "split {}: query {id} appears in both dev and test",
                self.name
            )));
        }
        for (qid, _) in self.dev_queries.iter().chain(&self.test_queries) {
            let entries = self.qrels.get(qid).ok_or_else(|| {
                Error::invalid(format!("split {}: query {qid} has no qrels", self.name))
            })?;
            let has_pos = entries.iter().any(|e| e.relevance > POSITIVE_THRESHOLD);
            let has_neg = entries.iter().any(|e| e.relevance < NEGATIVE_THRESHOLD);
            if !has_pos || !has_neg {
                return Err(Error::invalid(format!(
                    "split {}: query {qid} lacks a positive or negative title",
                    self.name
                )));
            }
        }
        Ok(())
    }

    /// All queries, dev then test.
    pub fn all_queries(&self) -> impl Iterator<Item = &(String, String)> {
        self.dev_queries.iter().chain(self.test_queries.iter())
    }

    /// Reconstructs graded pairs for the given query set, in canonical
    /// (query_id, title_id) order. Used to derive training/evaluator pairs
    /// from a split.
    pub fn pairs_for(&self, queries: &[(String, String)]) -> Vec<GradedPair> {
        let texts: HashMap<&str, &str> = self
            .corpus
            .iter()
            .map(|(id, text)| (id.as_str(), text.as_str()))
            .collect();
        let mut out = Vec::new();
        let mut sorted: Vec<&(String, String)> = queries.iter().collect();
        sorted.sort_by(|a, b| a.0.cmp(&b.0));
        for (qid, qtext) in sorted {
            if let Some(entries) = self.qrels.get(qid) {
                for e in entries {
                    out.push(GradedPair {
                        query_id: qid.clone(),
                        query_text: qtext.clone(),
                        title_id: e.title_id.clone(),
                        title_text: texts
                            .get(e.title_id.as_str())
                            .expect("validated qrels reference corpus")
                            .to_string(),
                        relevance: e.relevance,
                        centrality: e.centrality,
                    });
                }
            }
        }
        out
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(content.lines().map(str::to_owned).collect())
}

/// Loads a 6-column `pairs.tsv`. Rejects the whole file on any malformed
/// line, reporting the 1-based line number.
pub fn load_pairs(path: impl AsRef<Path>) -> Result<Vec<GradedPair>> {
    let path = path.as_ref();
    let mut pairs = Vec::new();
    let mut seen: HashSet<(String, String)> = HashSet::new();
    for (idx, line) in read_lines(path)?.iter().enumerate() {
        let lineno = idx + 1;
        if line.is_empty() {
            return Err(Error::parse(path, lineno, "empty line"));
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 6 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected 6 tab-separated fields, found {}", fields.len()),
            ));
        }
        let relevance: u8 = fields[4]
            .parse()
            .map_err(|_| Error::parse(path, lineno, format!("non-integer grade {:?}", fields[4])))?;
        let centrality: u8 = fields[5].parse().map_err(|_| {
            Error::parse(path, lineno, format!("non-integer centrality {:?}", fields[5]))
        })?;
        let pair = GradedPair::new(fields[0], fields[1], fields[2], fields[3], relevance, centrality)
            .map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        if !seen.insert((pair.query_id.clone(), pair.title_id.clone())) {
            return Err(Error::parse(
                path,
                lineno,
                format!("duplicate pair ({}, {})", pair.query_id, pair.title_id),
            ));
        }
        pairs.push(pair);
    }
    Ok(pairs)
}

/// Writes pairs in input order; inverse of [`load_pairs`].
pub fn save_pairs(pairs: &[GradedPair], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut seen: HashSet<(&str, &str)> = HashSet::new();
    let mut out = String::new();
    for pair in pairs {
        pair.validate()?;
        if !seen.insert((&pair.query_id, &pair.title_id)) {
            return Err(Error::invalid(format!(
                "duplicate pair ({}, {})",
                pair.query_id, pair.title_id
            )));
        }
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            pair.query_id, pair.query_text, pair.title_id, pair.title_text, pair.relevance,
            pair.centrality
        )
        .expect("write to string");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

const CORPUS_FILE: &str = "corpus.tsv";
const DEV_QUERIES_FILE: &str = "dev-queries.tsv";
const TEST_QUERIES_FILE: &str = "test-queries.tsv";
const QRELS_FILE: &str = "qrels.tsv";

fn write_two_col(rows: &[(String, String)], path: &Path) -> Result<()> {
    let mut out = String::new();
    for (a, b) in rows {
        writeln!(out, "{a}\t{b}").expect("write to string");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn read_two_col(path: &Path) -> Result<Vec<(String, String)>> {
    let mut rows = Vec::new();
    for (idx, line) in read_lines(path)?.iter().enumerate() {
        let mut it = line.split('\t');
        match (it.next(), it.next(), it.next()) {
            (Some(a), Some(b), None) if !a.is_empty() && !b.trim().is_empty() => {
                rows.push((a.to_owned(), b.to_owned()));
            }
            _ => {
                return Err(Error::parse(path, idx + 1, "expected 2 tab-separated fields"));
            }
        }
    }
    Ok(rows)
}

/// Writes the four split files into `dir` (created if missing). The split
/// name is the directory basename, so `load_split(dir)` round-trips.
pub fn save_split(split: &EvalSplit, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    split.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_two_col(&split.corpus, &dir.join(CORPUS_FILE))?;
    write_two_col(&split.dev_queries, &dir.join(DEV_QUERIES_FILE))?;
    write_two_col(&split.test_queries, &dir.join(TEST_QUERIES_FILE))?;
    let mut out = String::new();
    for (qid, entries) in &split.qrels {
        for e in entries {
            writeln!(out, "{qid}\t{}\t{}\t{}", e.title_id, e.relevance, e.centrality)
                .expect("write to string");
        }
    }
    let qrels_path = dir.join(QRELS_FILE);
    fs::write(&qrels_path, out).map_err(|e| Error::io(qrels_path, e))
}

/// Loads a split directory written by [`save_split`]; the directory basename
/// becomes the split name.
pub fn load_split(dir: impl AsRef<Path>) -> Result<EvalSplit> {
    let dir = dir.as_ref();
    let name = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let corpus = read_two_col(&dir.join(CORPUS_FILE))?;
    let dev_queries = read_two_col(&dir.join(DEV_QUERIES_FILE))?;
    let test_queries = read_two_col(&dir.join(TEST_QUERIES_FILE))?;
    let qrels_path = dir.join(QRELS_FILE);
    let mut qrels: BTreeMap<String, BTreeSet<QrelEntry>> = BTreeMap::new();
    for (idx, line) in read_lines(&qrels_path)?.iter().enumerate() {
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(Error::parse(&qrels_path, lineno, "expected 4 tab-separated fields"));
        }
        let relevance: u8 = fields[2]
            .parse()
            .map_err(|_| Error::parse(&qrels_path, lineno, format!("non-integer grade {:?}", fields[2])))?;
        let centrality: u8 = fields[3].parse().map_err(|_| {
            Error::parse(&qrels_path, lineno, format!("non-integer centrality {:?}", fields[3]))
        })?;
        if !(1..=5).contains(&relevance) || centrality > 1 {
            return Err(Error::parse(&qrels_path, lineno, "grade out of range"));
        }
        let inserted = qrels.entry(fields[0].to_owned()).or_default().insert(QrelEntry {
            title_id: fields[1].to_owned(),
            relevance,
            centrality,
        });
        if !inserted {
            return Err(Error::parse(
                &qrels_path,
                lineno,
                format!("duplicate qrel ({}, {})", fields[0], fields[1]),
            ));
        }
    }
    let split = EvalSplit {
        name,
        corpus,
        dev_queries,
        test_queries,
        qrels,
    };
    split.validate()?;
    Ok(split)
}

/// Per-query ranked lists of (title_id, score), the unit consumed by all
/// metrics. Scores are non-increasing down each list.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedRun {
    pub by_query: BTreeMap<String, Vec<(String, f32)>>,
    pub k_max: usize,
}

impl RankedRun {
    pub fn new(k_max: usize) -> Self {
        RankedRun {
            by_query: BTreeMap::new(),
            k_max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (qid, list) in &self.by_query {
            if list.len() > self.k_max {
                return Err(Error::invalid(format!(
                    "query {qid}: ranked list longer than k_max {}",
                    self.k_max
                )));
            }
            let mut seen = HashSet::with_capacity(list.len());
            for window in list.windows(2) {
                if window[1].1 > window[0].1 {
                    return Err(Error::invalid(format!("query {qid}: scores increase down the list")));
                }
            }
            for (tid, _) in list {
                if !seen.insert(tid.as_str()) {
                    return Err(Error::invalid(format!("query {qid}: duplicate title {tid}")));
                }
            }
        }
        Ok(())
    }

    /// Writes `query_id  rank  title_id  score` rows, queries in id order.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        for (qid, list) in &self.by_query {
            for (rank, (tid, score)) in list.iter().enumerate() {
                writeln!(out, "{qid}\t{}\t{tid}\t{score:.6}", rank + 1).expect("write to string");
            }
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn pair(q: &str, t: &str, rel: u8, cen: u8) -> GradedPair {
        GradedPair::new(q, format!("text of {q}"), t, format!("title {t}"), rel, cen).unwrap()
    }

    fn tiny_split() -> EvalSplit {
        let mut qrels: BTreeMap<String, BTreeSet<QrelEntry>> = BTreeMap::new();
        for (q, t, rel, cen) in [
            ("q1", "t1", 5, 1),
            ("q1", "t2", 1, 0),
            ("q2", "t3", 4, 1),
            ("q2", "t4", 2, 0),
        ] {
            qrels.entry(q.into()).or_default().insert(QrelEntry {
                title_id: t.into(),
                relevance: rel,
                centrality: cen,
            });
        }
        EvalSplit {
            name: "toy".into(),
            corpus: vec![
                ("t1".into(), "apple iphone 13 128gb".into()),
                ("t2".into(), "iphone 13 cover".into()),
                ("t3".into(), "dell monitor s2716dg".into()),
                ("t4".into(), "monitor stand".into()),
            ],
            dev_queries: vec![("q1".into(), "iphone 13".into())],
            test_queries: vec![("q2".into(), "s2716dg".into())],
            qrels,
        }
    }

    #[test]
    fn load_pairs_maps_fields() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pairs.tsv");
        std::fs::write(&path, "q1\tiphone 13\tt1\tApple iPhone 13 128GB\t5\t1\n").unwrap();
        let pairs = load_pairs(&path).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].relevance, 5);
        assert_eq!(pairs[0].centrality, 1);
        assert_eq!(pairs[0].title_text, "Apple iPhone 13 128GB");
    }

    #[test]
    fn load_pairs_rejects_out_of_range_grade() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pairs.tsv");
        std::fs::write(&path, "q1\ta\tt1\tb\t5\t1\nq2\tc\tt2\td\t6\t0\n").unwrap();
        let err = load_pairs(&path).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("grade out of range"), "{msg}");
        assert!(msg.contains(":2:"), "line number missing: {msg}");
    }

    #[test]
    fn load_pairs_rejects_duplicate_key() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pairs.tsv");
        std::fs::write(
            &path,
            "q1\ta\tt1\tb\t5\t1\nq1\ta\tt2\tc\t4\t1\nq1\ta\tt1\tb again\t2\t0\n",
        )
        .unwrap();
        let msg = load_pairs(&path).unwrap_err().to_string();
        assert!(msg.contains("duplicate pair (q1, t1)"), "{msg}");
    }

    #[test]
    fn load_pairs_rejects_wrong_field_count() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pairs.tsv");
        std::fs::write(&path, "q1\ta\tt1\tb\t5\n").unwrap();
        let msg = load_pairs(&path).unwrap_err().to_string();
        assert!(msg.contains("expected 6"), "{msg}");
    }

    #[test]
    fn load_pairs_missing_file() {
        assert!(load_pairs("/nonexistent/pairs.tsv").is_err());
    }

    #[test]
    fn pairs_roundtrip_preserves_order() {
        let pairs = vec![pair("qb", "t1", 5, 1), pair("qa", "t2", 1, 0), pair("qb", "t3", 2, 0)];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pairs.tsv");
        save_pairs(&pairs, &path).unwrap();
        assert_eq!(load_pairs(&path).unwrap(), pairs);
    }

    #[test]
    fn pair_rejects_embedded_tab() {
        assert!(GradedPair::new("q1", "a\tb", "t1", "c", 5, 1).is_err());
        assert!(GradedPair::new("q1", "a", "t1", "c\nd", 5, 1).is_err());
    }

    #[test]
    fn split_roundtrip() {
        let split = tiny_split();
        let dir = tempfile::tempdir().unwrap();
        let split_dir = dir.path().join("toy");
        save_split(&split, &split_dir).unwrap();
        let loaded = load_split(&split_dir).unwrap();
        assert_eq!(loaded, split);
    }

    #[test]
    fn save_split_rejects_qrels_outside_corpus() {
        let mut split = tiny_split();
        split.corpus.retain(|(id, _)| id != "t4");
        let dir = tempfile::tempdir().unwrap();
        let err = save_split(&split, dir.path().join("bad")).unwrap_err();
        assert!(err.to_string().contains("missing from corpus"));
    }

    #[test]
    fn save_split_rejects_empty_corpus() {
        let mut split = tiny_split();
        split.corpus.clear();
        let dir = tempfile::tempdir().unwrap();
        let err = save_split(&split, dir.path().join("bad")).unwrap_err();
        assert!(err.to_string().contains("corpus is empty"));
    }

    #[test]
    fn split_rejects_dev_test_overlap() {
        let mut split = tiny_split();
        split.test_queries = split.dev_queries.clone();
        assert!(split.validate().is_err());
    }

    #[test]
    fn ranked_run_validation() {
        let mut run = RankedRun::new(3);
        run.by_query
            .insert("q1".into(), vec![("t1".into(), 0.9), ("t2".into(), 0.5)]);
        run.validate().unwrap();
        run.by_query
            .insert("q2".into(), vec![("t1".into(), 0.2), ("t1".into(), 0.1)]);
        assert!(run.validate().is_err());
    }
}
