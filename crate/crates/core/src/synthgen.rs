//! Deterministic generator of labeled query-title datasets.
//!
//! Stands in for proprietary annotated search logs. Every query gets central
//! positive titles (the product itself plus variants) and hard negative
//! titles (accessories and near-miss model codes that share most of the
//! query's surface form). Three query kinds cover the classic retrieval
//! pathologies:
//!
//! - *common-str*: the full query string is embedded in both positive and
//!   negative titles ("3d printer" -> printer vs. filament).
//! - *alphanum*: the query is a single model code; one character of the code
//!   flips a title from central to non-central ("s2716dg" vs. "s2716dp").
//! - *plain*: ambiguous product queries whose negatives share tokens but not
//!   the contiguous query string.
//!
//! Labels are assigned by construction (positives are relevance 5 /
//! centrality 1, negatives relevance 1 / centrality 0), so generated data is
//! exact ground truth: relevance is a deterministic function of centrality
//! and all three relevance-centrality correlations are exactly 1.
//!
//! Brand and product pools are intentionally small so distinct queries share
//! most of their surface form; sibling products pollute each other's recall
//! sets, which is what makes the benchmark non-trivial for a lexical
//! baseline.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::datamodel::GradedPair;
use crate::{seed, Error, Result};

const BRANDS: &[&str] = &[
    "acme", "zenix", "orbit", "novara", "vertex", "lumen", "kestrel", "talon", "quasar", "ridge",
    "solara", "pinnex",
];

const NOUNS: &[&str] = &[
    "phone", "monitor", "laptop", "camera", "drone", "doll", "printer", "keyboard", "headphones",
    "watch", "speaker", "router", "tablet", "console",
];

const SPECS: &[&str] = &[
    "128gb", "256gb", "black", "silver", "white", "pro", "plus", "bundle", "sealed", "rgb",
    "wireless", "4k", "27in", "edition", "premium", "refurbished",
];

const CODE_LETTERS: &[char] = &['d', 'g', 'k', 'm', 'p', 'r', 's', 't', 'x', 'z'];

/// Accessory terms for hard-negative titles when the caller supplies none.
pub fn default_noise_words() -> Vec<String> {
    [
        "cover", "case", "stand", "charger", "cable", "strap", "filament", "shoes", "sticker",
        "mount", "adapter", "holder", "bag", "skin", "dock", "remote",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

#[derive(Debug, Clone)]
pub struct GenConfig {
    pub n_queries: usize,
    pub titles_per_query: usize,
    /// Fraction of queries whose full text appears in both title classes.
    pub frac_common_str: f64,
    /// Fraction of queries that are single model-code tokens.
    pub frac_alphanum: f64,
    pub noise_word_pool: Vec<String>,
    pub rng_seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            n_queries: 100,
            titles_per_query: 6,
            frac_common_str: 0.3,
            frac_alphanum: 0.2,
            noise_word_pool: default_noise_words(),
            rng_seed: 0,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_queries < 1 {
            return Err(Error::invalid("n_queries must be >= 1"));
        }
        if self.titles_per_query < 2 {
            return Err(Error::invalid("titles_per_query must be >= 2"));
        }
        for (name, f) in [
            ("frac_common_str", self.frac_common_str),
            ("frac_alphanum", self.frac_alphanum),
        ] {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::invalid(format!("{name} must lie in [0, 1]")));
            }
        }
        if self.frac_common_str + self.frac_alphanum > 1.0 {
            return Err(Error::invalid("frac_common_str + frac_alphanum must be <= 1"));
        }
        if self.noise_word_pool.is_empty() {
            return Err(Error::invalid("noise_word_pool must not be empty"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum QueryKind {
    CommonStr,
    Alphanum,
    Plain,
}

fn kind_for(index: usize, n_common: usize, n_alpha: usize) -> QueryKind {
    if index < n_common {
        QueryKind::CommonStr
    } else if index < n_common + n_alpha {
        QueryKind::Alphanum
    } else {
        QueryKind::Plain
    }
}

/// Single-token model code mixing letters and digits, unique per query.
fn alphanum_code(index: usize, rng: &mut ChaCha8Rng) -> String {
    let a = CODE_LETTERS[rng.gen_range(0..CODE_LETTERS.len())];
    let b = CODE_LETTERS[rng.gen_range(0..CODE_LETTERS.len())];
    let c = CODE_LETTERS[rng.gen_range(0..CODE_LETTERS.len())];
    format!("{a}{b}{}{c}g", 1000 + index)
}

/// Changes the final letter, flipping the code to a sibling product.
fn mutate_code(code: &str) -> String {
    let mut chars: Vec<char> = code.chars().collect();
    let last = *chars.last().expect("codes are non-empty");
    let replacement = CODE_LETTERS
        .iter()
        .copied()
        .find(|&c| c != last)
        .expect("letter pool has more than one entry");
    *chars.last_mut().expect("non-empty") = replacement;
    chars.into_iter().collect()
}

fn pick<'a>(words: &'a [String], rng: &mut ChaCha8Rng) -> &'a str {
    words.choose(rng).expect("pool validated non-empty").as_str()
}

fn pick_spec(rng: &mut ChaCha8Rng) -> &'static str {
    SPECS.choose(rng).expect("static pool")
}

/// Generates the full labeled dataset for a config. Same config (including
/// seed) always produces byte-identical output.
pub fn generate(cfg: &GenConfig) -> Result<Vec<GradedPair>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(cfg.rng_seed, "synthgen"));
    let n = cfg.n_queries;
    let n_common = ((n as f64) * cfg.frac_common_str).round() as usize;
    let n_alpha = (((n as f64) * cfg.frac_alphanum).round() as usize).min(n - n_common);

    let mut pairs = Vec::with_capacity(n * cfg.titles_per_query);
    for i in 0..n {
        let kind = kind_for(i, n_common, n_alpha);
        let brand = BRANDS[i % BRANDS.len()];
        let noun = NOUNS[(i / BRANDS.len()) % NOUNS.len()];
        let numeric_code = format!("{}", 1000 + i);
        let (query_text, code) = match kind {
            QueryKind::Alphanum => {
                let code = alphanum_code(i, &mut rng);
                (code.clone(), code)
            }
            _ => (format!("{brand} {noun} {numeric_code}"), numeric_code),
        };

        let query_id = format!("q{i:05}");
        let n_pos = cfg.titles_per_query.div_ceil(2);
        let n_neg = cfg.titles_per_query - n_pos;
        let mut titles: Vec<(String, u8, u8)> = Vec::with_capacity(cfg.titles_per_query);

        for p in 0..n_pos {
            let s1 = pick_spec(&mut rng);
            let s2 = pick_spec(&mut rng);
            let s3 = pick_spec(&mut rng);
            // positives carry full listing noise (variant specs), so at
            // initialization the terse accessory negatives sit closer to the
            // query; training has to undo that, like real hard negatives
            let text = match kind {
                QueryKind::CommonStr | QueryKind::Plain => {
                    if p == 0 {
                        format!("{query_text} {s1} {s2}")
                    } else {
                        format!("{query_text} {s1} {s2} {s3}")
                    }
                }
                QueryKind::Alphanum => format!("{brand} {noun} {code} {s1} {s2} {s3}"),
            };
            titles.push((text, 5, 1));
        }
        for ng in 0..n_neg {
            let accessory = pick(&cfg.noise_word_pool, &mut rng);
            let text = match kind {
                // accessory that still contains the full query string
                QueryKind::CommonStr => format!("{query_text} {accessory}"),
                // shares brand and code but never the contiguous query string
                QueryKind::Plain => {
                    if ng % 2 == 0 {
                        format!("{brand} {code} {accessory}")
                    } else {
                        format!("{accessory} for {brand} {code}")
                    }
                }
                // near-miss model code: one character away, different product
                QueryKind::Alphanum => {
                    let near = mutate_code(&code);
                    if ng % 2 == 0 {
                        format!("{near} {noun} {accessory}")
                    } else {
                        format!("{near} {accessory} for {noun}")
                    }
                }
            };
            titles.push((text, 1, 0));
        }

        for (t, (text, relevance, centrality)) in titles.into_iter().enumerate() {
            pairs.push(GradedPair::new(
                query_id.clone(),
                query_text.clone(),
                format!("{query_id}_t{t:02}"),
                text,
                relevance,
                centrality,
            )?);
        }
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curation::{self, CurationConfig};

    fn cfg(n: usize, common: f64, alpha: f64, seed: u64) -> GenConfig {
        GenConfig {
            n_queries: n,
            titles_per_query: 6,
            frac_common_str: common,
            frac_alphanum: alpha,
            rng_seed: seed,
            ..GenConfig::default()
        }
    }

    #[test]
    fn every_query_has_both_classes() {
        let pairs = generate(&cfg(40, 0.4, 0.3, 1)).unwrap();
        let mut by_query: std::collections::BTreeMap<&str, (usize, usize)> = Default::default();
        for p in &pairs {
            let slot = by_query.entry(&p.query_id).or_default();
            if p.centrality == 1 {
                slot.0 += 1;
            } else {
                slot.1 += 1;
            }
        }
        assert_eq!(by_query.len(), 40);
        for (q, (pos, neg)) in by_query {
            assert!(pos >= 1 && neg >= 1, "query {q}: {pos} pos / {neg} neg");
        }
    }

    #[test]
    fn same_seed_is_byte_identical() {
        let a = generate(&cfg(25, 0.5, 0.2, 77)).unwrap();
        let b = generate(&cfg(25, 0.5, 0.2, 77)).unwrap();
        assert_eq!(a, b);
        let c = generate(&cfg(25, 0.5, 0.2, 78)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn full_common_str_fraction_is_fully_retained() {
        let pairs = generate(&cfg(30, 1.0, 0.0, 3)).unwrap();
        let ccfg = CurationConfig::default();
        let filtered = curation::filter_pairs(&pairs, &ccfg).unwrap();
        let cq = curation::build_cq(&filtered, &ccfg).unwrap();
        let common = curation::build_cq_common_str(&cq).unwrap();
        assert_eq!(common.qrels.len(), cq.qrels.len());
    }

    #[test]
    fn centrality_is_relevance_above_three_and_correlations_are_exact() {
        let pairs = generate(&cfg(50, 0.3, 0.3, 9)).unwrap();
        for p in &pairs {
            assert_eq!(p.centrality == 1, p.relevance > 3);
        }
        let (pearson, kendall, spearman) = curation::correlation_stats(&pairs).unwrap();
        assert_eq!(pearson, 1.0);
        assert_eq!(kendall, 1.0);
        assert_eq!(spearman, 1.0);
    }

    #[test]
    fn common_str_negatives_embed_the_query() {
        let pairs = generate(&cfg(20, 1.0, 0.0, 11)).unwrap();
        for p in pairs.iter().filter(|p| p.centrality == 0) {
            assert!(
                p.title_text.contains(&p.query_text),
                "negative {:?} lacks query {:?}",
                p.title_text,
                p.query_text
            );
        }
    }

    #[test]
    fn alphanum_queries_are_single_mixed_tokens() {
        let pairs = generate(&cfg(30, 0.0, 1.0, 13)).unwrap();
        for p in &pairs {
            assert!(!p.query_text.contains(' '));
            assert!(p.query_text.chars().any(|c| c.is_alphabetic()));
            assert!(p.query_text.chars().any(|c| c.is_ascii_digit()));
            if p.centrality == 1 {
                assert!(p.title_text.contains(&p.query_text));
            } else {
                // one-character mutation removes the exact code
                assert!(!p.title_text.contains(&p.query_text));
            }
        }
    }

    #[test]
    fn fraction_rounding_respects_totals() {
        let pairs = generate(&cfg(10, 0.5, 0.5, 17)).unwrap();
        let queries: std::collections::BTreeSet<&str> =
            pairs.iter().map(|p| p.query_id.as_str()).collect();
        assert_eq!(queries.len(), 10);
        let alphanum = pairs
            .iter()
            .map(|p| (p.query_id.as_str(), !p.query_text.contains(' ')))
            .collect::<std::collections::BTreeMap<_, _>>()
            .values()
            .filter(|&&a| a)
            .count();
        assert_eq!(alphanum, 5);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(generate(&cfg(0, 0.0, 0.0, 1)).is_err());
        assert!(generate(&GenConfig {
            titles_per_query: 1,
            ..GenConfig::default()
        })
        .is_err());
        assert!(generate(&cfg(5, 0.7, 0.7, 1)).is_err());
    }
}
