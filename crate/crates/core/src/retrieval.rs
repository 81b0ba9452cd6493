//! Exact brute-force cosine top-k over the corpus embedding matrix.
//!
//! No approximation: `top_k` returns exactly the first k rows of the fully
//! sorted score list, scores descending with ties broken by ascending
//! title_id. Scoring runs on f32 rows with f64 dot-product accumulation.
//! `batch_search` processes queries in blocks so one streaming pass over the
//! corpus serves a whole block; results are bit-identical for every block
//! size because the per-pair scores and the selection order are total.

use std::collections::HashSet;

use rayon::prelude::*;

use crate::datamodel::RankedRun;
use crate::encoder::{encode, EmbeddingModel};
use crate::{Error, Result};

pub const DEFAULT_BLOCK: usize = 128;

/// Immutable corpus embedding matrix; row order equals corpus order.
#[derive(Debug, Clone)]
pub struct Index {
    /// Row-major `len x dim`, unit-norm rows.
    matrix: Vec<f32>,
    ids: Vec<String>,
    dim: usize,
}

impl Index {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.matrix[i * self.dim..(i + 1) * self.dim]
    }

    /// Index from precomputed unit vectors; rows must already be normalized.
    pub fn from_rows(ids: Vec<String>, rows: Vec<f32>, dim: usize) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::invalid("index needs at least one row"));
        }
        if rows.len() != ids.len() * dim {
            return Err(Error::invalid(format!(
                "matrix size {} does not match {} rows x dim {dim}",
                rows.len(),
                ids.len()
            )));
        }
        let mut seen = HashSet::with_capacity(ids.len());
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::invalid(format!("duplicate title_id {id}")));
            }
        }
        Ok(Index {
            matrix: rows,
            ids,
            dim,
        })
    }
}

/// Encodes every corpus title once, in input order.
pub fn build_index(corpus: &[(String, String)], model: &EmbeddingModel) -> Result<Index> {
    if corpus.is_empty() {
        return Err(Error::invalid("index needs at least one row"));
    }
    let rows: Vec<Vec<f32>> = corpus
        .par_iter()
        .map(|(id, text)| {
            encode(text, model)
                .map(|v| v.iter().map(|&x| x as f32).collect())
                .map_err(|e| Error::invalid(format!("title {id}: {e}")))
        })
        .collect::<Result<_>>()?;
    let mut matrix = Vec::with_capacity(corpus.len() * model.dim);
    for row in rows {
        matrix.extend_from_slice(&row);
    }
    Index::from_rows(
        corpus.iter().map(|(id, _)| id.clone()).collect(),
        matrix,
        model.dim,
    )
}

fn score(query: &[f32], row: &[f32]) -> f32 {
    let mut acc = 0.0f64;
    for (q, r) in query.iter().zip(row) {
        acc += *q as f64 * *r as f64;
    }
    (acc as f32).clamp(-1.0, 1.0)
}

/// True when candidate (score_a, id_a) outranks (score_b, id_b): higher
/// score first, ties by ascending title_id.
fn outranks(score_a: f32, id_a: &str, score_b: f32, id_b: &str) -> bool {
    match score_a.total_cmp(&score_b) {
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Less => false,
        std::cmp::Ordering::Equal => id_a < id_b,
    }
}

/// Bounded selection of the k best (score, row) candidates under the
/// documented total order. Insertion order never changes the result.
struct TopSelector {
    k: usize,
    entries: Vec<(f32, usize)>,
}

impl TopSelector {
    fn new(k: usize) -> Self {
        TopSelector {
            k,
            entries: Vec::with_capacity(k + 1),
        }
    }

    fn offer(&mut self, score: f32, row: usize, ids: &[String]) {
        if self.entries.len() == self.k {
            // compare against the current worst (kept sorted, worst last)
            let (ws, wr) = *self.entries.last().expect("k > 0");
            if !outranks(score, &ids[row], ws, &ids[wr]) {
                return;
            }
            self.entries.pop();
        }
        let pos = self
            .entries
            .partition_point(|&(s, r)| outranks(s, &ids[r], score, &ids[row]));
        self.entries.insert(pos, (score, row));
    }

    fn finish(self, ids: &[String]) -> Vec<(String, f32)> {
        self.entries
            .into_iter()
            .map(|(s, r)| (ids[r].clone(), s))
            .collect()
    }
}

/// The k highest-cosine titles for one query, exactly.
pub fn top_k(index: &Index, query: &[f32], k: usize) -> Result<Vec<(String, f32)>> {
    if index.is_empty() {
        return Err(Error::invalid("empty index"));
    }
    if k == 0 {
        return Err(Error::invalid("k must be >= 1"));
    }
    if query.len() != index.dim {
        return Err(Error::invalid(format!(
            "query dim {} does not match index dim {}",
            query.len(),
            index.dim
        )));
    }
    let mut selector = TopSelector::new(k.min(index.len()));
    for row in 0..index.len() {
        selector.offer(score(query, index.row(row)), row, &index.ids);
    }
    Ok(selector.finish(&index.ids))
}

/// Maps [`top_k`] over queries with blocked scoring: each corpus pass serves
/// `block` queries. Output is independent of the block size.
pub fn batch_search_blocked(
    index: &Index,
    queries: &[(String, Vec<f32>)],
    k: usize,
    block: usize,
) -> Result<RankedRun> {
    if index.is_empty() {
        return Err(Error::invalid("empty index"));
    }
    if k == 0 || block == 0 {
        return Err(Error::invalid("k and block must be >= 1"));
    }
    for (qid, v) in queries {
        if v.len() != index.dim {
            return Err(Error::invalid(format!(
                "query {qid}: dim {} does not match index dim {}",
                v.len(),
                index.dim
            )));
        }
    }
    let capped = k.min(index.len());
    let block_results: Vec<Vec<(String, Vec<(String, f32)>)>> = queries
        .par_chunks(block)
        .map(|chunk| {
            let mut selectors: Vec<TopSelector> =
                chunk.iter().map(|_| TopSelector::new(capped)).collect();
            for row in 0..index.len() {
                let row_data = index.row(row);
                for (sel, (_, qvec)) in selectors.iter_mut().zip(chunk) {
                    sel.offer(score(qvec, row_data), row, &index.ids);
                }
            }
            selectors
                .into_iter()
                .zip(chunk)
                .map(|(sel, (qid, _))| (qid.clone(), sel.finish(&index.ids)))
                .collect()
        })
        .collect();
    let mut run = RankedRun::new(k);
    for (qid, list) in block_results.into_iter().flatten() {
        if run.by_query.insert(qid.clone(), list).is_some() {
            return Err(Error::invalid(format!("duplicate query id {qid}")));
        }
    }
    Ok(run)
}

/// Blocked batch search with the default block size.
pub fn batch_search(index: &Index, queries: &[(String, Vec<f32>)], k: usize) -> Result<RankedRun> {
    batch_search_blocked(index, queries, k, DEFAULT_BLOCK)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::FeaturizerConfig;

    fn toy_model() -> EmbeddingModel {
        EmbeddingModel::init(
            16,
            FeaturizerConfig {
                n_buckets: 1 << 10,
                ..FeaturizerConfig::default()
            },
            42,
        )
        .unwrap()
    }

    fn toy_corpus() -> Vec<(String, String)> {
        [
            ("t1", "apple iphone 13 128gb"),
            ("t2", "iphone 13 silicone cover"),
            ("t3", "dell monitor s2716dg"),
        ]
        .iter()
        .map(|(id, text)| (id.to_string(), text.to_string()))
        .collect()
    }

    #[test]
    fn build_index_keeps_input_order() {
        let index = build_index(&toy_corpus(), &toy_model()).unwrap();
        assert_eq!(index.len(), 3);
        assert_eq!(index.ids(), &["t1", "t2", "t3"]);
        let rebuilt = build_index(&toy_corpus(), &toy_model()).unwrap();
        assert_eq!(index.matrix, rebuilt.matrix);
    }

    #[test]
    fn build_index_rejects_duplicate_ids() {
        let mut corpus = toy_corpus();
        corpus.push(("t1".to_string(), "another".to_string()));
        assert!(build_index(&corpus, &toy_model()).is_err());
    }

    #[test]
    fn self_match_ranks_first_with_unit_score() {
        let model = toy_model();
        let index = build_index(&toy_corpus(), &model).unwrap();
        let q: Vec<f32> = encode("apple iphone 13 128gb", &model)
            .unwrap()
            .iter()
            .map(|&x| x as f32)
            .collect();
        let hits = top_k(&index, &q, 2).unwrap();
        assert_eq!(hits[0].0, "t1");
        assert!((hits[0].1 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn k_larger_than_corpus_returns_everything_sorted() {
        let model = toy_model();
        let index = build_index(&toy_corpus(), &model).unwrap();
        let q: Vec<f32> = encode("iphone", &model).unwrap().iter().map(|&x| x as f32).collect();
        let hits = top_k(&index, &q, 100).unwrap();
        assert_eq!(hits.len(), 3);
        for w in hits.windows(2) {
            assert!(w[0].1 >= w[1].1);
        }
    }

    #[test]
    fn ties_break_by_ascending_title_id() {
        // duplicate rows guarantee exact score ties
        let dim = 4;
        let rows: Vec<f32> = vec![
            1.0, 0.0, 0.0, 0.0, // zz
            1.0, 0.0, 0.0, 0.0, // aa
            0.0, 1.0, 0.0, 0.0, // mm
        ];
        let index = Index::from_rows(
            vec!["zz".into(), "aa".into(), "mm".into()],
            rows,
            dim,
        )
        .unwrap();
        let hits = top_k(&index, &[1.0, 0.0, 0.0, 0.0], 3).unwrap();
        assert_eq!(hits[0].0, "aa");
        assert_eq!(hits[1].0, "zz");
        assert_eq!(hits[2].0, "mm");
    }

    #[test]
    fn matches_full_sort_oracle() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let dim = 8;
        let n = 64;
        let mut rows = Vec::with_capacity(n * dim);
        let mut ids = Vec::with_capacity(n);
        for i in 0..n {
            let mut v: Vec<f32> = (0..dim).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
            let norm: f32 = v.iter().map(|x| x * x).sum::<f32>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            rows.extend_from_slice(&v);
            ids.push(format!("t{i:03}"));
        }
        let index = Index::from_rows(ids, rows, dim).unwrap();
        for _ in 0..20 {
            let mut q: Vec<f32> = (0..dim).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
            let norm: f32 = q.iter().map(|x| x * x).sum::<f32>().sqrt();
            q.iter_mut().for_each(|x| *x /= norm);
            let got = top_k(&index, &q, 10).unwrap();
            // oracle: score everything, full sort under the same tie-break
            let mut all: Vec<(String, f32)> = (0..index.len())
                .map(|r| (index.ids()[r].clone(), score(&q, index.row(r))))
                .collect();
            all.sort_by(|a, b| {
                b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0))
            });
            assert_eq!(got, all[..10].to_vec());
        }
    }

    #[test]
    fn block_size_does_not_change_results() {
        let model = toy_model();
        let index = build_index(&toy_corpus(), &model).unwrap();
        let queries: Vec<(String, Vec<f32>)> = ["iphone 13", "monitor", "cover", "s2716dg"]
            .iter()
            .enumerate()
            .map(|(i, text)| {
                (
                    format!("q{i}"),
                    encode(text, &model).unwrap().iter().map(|&x| x as f32).collect(),
                )
            })
            .collect();
        let a = batch_search_blocked(&index, &queries, 3, 1).unwrap();
        let b = batch_search_blocked(&index, &queries, 3, 256).unwrap();
        let c = batch_search(&index, &queries, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        // consistency with single-query top_k
        for (qid, qvec) in &queries {
            assert_eq!(&a.by_query[qid], &top_k(&index, qvec, 3).unwrap());
        }
        a.validate().unwrap();
    }

    #[test]
    fn empty_index_errors() {
        assert!(Index::from_rows(vec![], vec![], 4).is_err());
    }
}
