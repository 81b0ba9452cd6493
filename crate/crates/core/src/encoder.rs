//! Trainable text-to-unit-vector embedding model.
//!
//! Text is lowercased, whitespace-collapsed, and expanded per token into
//! boundary-marked character n-grams plus (optionally) the whole token; each
//! feature hashes into a fixed-size embedding table. Encoding is the mean of
//! the hit table rows followed by L2 normalization, so cosine scores are
//! plain dot products and scale is independent of text length.
//!
//! `encode_backward` propagates an upstream gradient on the unit vector
//! through the normalization Jacobian `(I - y y^T)/|x|` and distributes it
//! equally (1/|features|) over the contributing rows, which is what the
//! trainer feeds into Adam.

use std::collections::BTreeMap;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Norms below this are treated as degenerate; `encode` falls back to the
/// first standard basis vector and the gradient there is defined as zero.
pub const DEGENERATE_NORM: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeaturizerConfig {
    pub ngram_min: usize,
    pub ngram_max: usize,
    pub include_whole_tokens: bool,
    /// Power of two; feature ids live in `[0, n_buckets)`.
    pub n_buckets: usize,
    pub hash_seed: u64,
}

impl Default for FeaturizerConfig {
    fn default() -> Self {
        FeaturizerConfig {
            ngram_min: 3,
            ngram_max: 5,
            include_whole_tokens: true,
            n_buckets: 1 << 18,
            hash_seed: 0,
        }
    }
}

impl FeaturizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ngram_min < 1 || self.ngram_min > self.ngram_max {
            return Err(Error::invalid(format!(
                "ngram range {}..={} is invalid",
                self.ngram_min, self.ngram_max
            )));
        }
        if self.n_buckets < 2 || !self.n_buckets.is_power_of_two() {
            return Err(Error::invalid(format!(
                "n_buckets {} must be a power of two >= 2",
                self.n_buckets
            )));
        }
        Ok(())
    }
}

/// Seeded FNV-1a; stable across runs and platforms.
fn hash_feature(bytes: &[u8], seed: u64) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ seed;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Expands text into a multiset of hashed feature ids. Deterministic:
/// feature order follows token order, then n-gram position and length.
pub fn featurize(text: &str, cfg: &FeaturizerConfig) -> Result<Vec<u32>> {
    cfg.validate()?;
    let mask = (cfg.n_buckets - 1) as u64;
    let lowered = text.to_lowercase();
    let mut features = Vec::new();
    let mut marked = String::new();
    for token in lowered.split_whitespace() {
        marked.clear();
        marked.push('<');
        marked.push_str(token);
        marked.push('>');
        let chars: Vec<char> = marked.chars().collect();
        let mut gram = String::new();
        for start in 0..chars.len() {
            for len in cfg.ngram_min..=cfg.ngram_max {
                if start + len > chars.len() {
                    break;
                }
                gram.clear();
                gram.extend(&chars[start..start + len]);
                features.push((hash_feature(gram.as_bytes(), cfg.hash_seed) & mask) as u32);
            }
        }
        if cfg.include_whole_tokens {
            features.push((hash_feature(marked.as_bytes(), cfg.hash_seed) & mask) as u32);
        }
    }
    if features.is_empty() {
        return Err(Error::invalid(format!(
            "text {text:?} is empty after normalization"
        )));
    }
    Ok(features)
}

/// Hashed-feature embedding table plus pooling config. The table is kept in
/// f64 so analytic gradients survive finite-difference checks; checkpoints
/// store it as f32.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    pub dim: usize,
    pub featurizer: FeaturizerConfig,
    /// Row-major `n_buckets x dim`.
    pub table: Vec<f64>,
}

impl EmbeddingModel {
    /// Fresh model with i.i.d. uniform entries in `[-0.5/dim, 0.5/dim]`;
    /// small norms keep initial cosines near zero.
    pub fn init(dim: usize, featurizer: FeaturizerConfig, rng_seed: u64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::invalid(format!("dim {dim} must be >= 2")));
        }
        featurizer.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let half = 0.5 / dim as f64;
        let dist = Uniform::new_inclusive(-half, half);
        let table = (0..featurizer.n_buckets * dim)
            .map(|_| dist.sample(&mut rng))
            .collect();
        Ok(EmbeddingModel {
            dim,
            featurizer,
            table,
        })
    }

    pub fn row(&self, feature: u32) -> &[f64] {
        let start = feature as usize * self.dim;
        &self.table[start..start + self.dim]
    }

    fn pooled(&self, features: &[u32]) -> Vec<f64> {
        let mut acc = vec![0.0; self.dim];
        for &f in features {
            let row = self.row(f);
            for (a, r) in acc.iter_mut().zip(row) {
                *a += r;
            }
        }
        let inv = 1.0 / features.len() as f64;
        for a in &mut acc {
            *a *= inv;
        }
        acc
    }
}

/// Mean-pools the feature rows and L2-normalizes. Returns a unit vector, or
/// the first standard basis vector when the pooled norm is degenerate.
pub fn encode(text: &str, model: &EmbeddingModel) -> Result<Vec<f64>> {
    let features = featurize(text, &model.featurizer)?;
    Ok(encode_features(&features, model))
}

/// Pooling + normalization for a precomputed feature multiset.
pub fn encode_features(features: &[u32], model: &EmbeddingModel) -> Vec<f64> {
    let mut x = model.pooled(features);
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm < DEGENERATE_NORM {
        let mut basis = vec![0.0; model.dim];
        basis[0] = 1.0;
        return basis;
    }
    for v in &mut x {
        *v /= norm;
    }
    x
}

/// Dot product of unit vectors, clamped to `[-1, 1]`.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::invalid(format!(
            "dimension mismatch: {} vs {}",
            u.len(),
            v.len()
        )));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    Ok(dot.clamp(-1.0, 1.0))
}

/// Sparse gradient on table rows: feature id -> dim-length gradient.
pub type TableGrads = BTreeMap<u32, Vec<f64>>;

/// Backpropagates `upstream_grad` (gradient on the unit output) to the table
/// rows touched by `text`. Accumulates into `grads`; duplicate features
/// contribute once per occurrence. Zero gradient for degenerate-norm texts.
pub fn encode_backward(
    text: &str,
    model: &EmbeddingModel,
    upstream_grad: &[f64],
    grads: &mut TableGrads,
) -> Result<()> {
    if upstream_grad.len() != model.dim {
        return Err(Error::invalid(format!(
            "upstream gradient has dim {}, model dim {}",
            upstream_grad.len(),
            model.dim
        )));
    }
    let features = featurize(text, &model.featurizer)?;
    let x = model.pooled(&features);
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm < DEGENERATE_NORM {
        return Ok(());
    }
    // d(x/|x|)/dx = (I - y y^T)/|x|, then d(mean)/d(row) = 1/m per occurrence.
    let y: Vec<f64> = x.iter().map(|v| v / norm).collect();
    let gy: f64 = y.iter().zip(upstream_grad).map(|(a, b)| a * b).sum();
    let scale = 1.0 / (norm * features.len() as f64);
    let row_grad: Vec<f64> = upstream_grad
        .iter()
        .zip(&y)
        .map(|(g, yi)| (g - gy * yi) * scale)
        .collect();
    for &f in &features {
        let entry = grads.entry(f).or_insert_with(|| vec![0.0; model.dim]);
        for (e, g) in entry.iter_mut().zip(&row_grad) {
            *e += g;
        }
    }
    Ok(())
}

const CHECKPOINT_MAGIC: &[u8; 4] = b"UCO1";

/// Writes the checkpoint: magic, header (dim, n_buckets, featurizer config,
/// hash seed), then the table as row-major little-endian f32.
pub fn save_model(model: &EmbeddingModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);
    w.write_all(CHECKPOINT_MAGIC).map_err(io_err)?;
    w.write_all(&(model.dim as u32).to_le_bytes()).map_err(io_err)?;
    w.write_all(&(model.featurizer.n_buckets as u64).to_le_bytes())
        .map_err(io_err)?;
    w.write_all(&(model.featurizer.ngram_min as u32).to_le_bytes())
        .map_err(io_err)?;
    w.write_all(&(model.featurizer.ngram_max as u32).to_le_bytes())
        .map_err(io_err)?;
    w.write_all(&[model.featurizer.include_whole_tokens as u8])
        .map_err(io_err)?;
    w.write_all(&model.featurizer.hash_seed.to_le_bytes()).map_err(io_err)?;
    for &v in &model.table {
        w.write_all(&(v as f32).to_le_bytes()).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<EmbeddingModel> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let bad = |msg: &str| Error::invalid(format!("{}: {msg}", path.display()));
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|e| Error::io(path, e))?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(bad("not a model checkpoint (bad magic)"));
    }
    let mut u32buf = [0u8; 4];
    let mut u64buf = [0u8; 8];
    let mut u8buf = [0u8; 1];
    r.read_exact(&mut u32buf).map_err(|e| Error::io(path, e))?;
    let dim = u32::from_le_bytes(u32buf) as usize;
    r.read_exact(&mut u64buf).map_err(|e| Error::io(path, e))?;
    let n_buckets = u64::from_le_bytes(u64buf) as usize;
    r.read_exact(&mut u32buf).map_err(|e| Error::io(path, e))?;
    let ngram_min = u32::from_le_bytes(u32buf) as usize;
    r.read_exact(&mut u32buf).map_err(|e| Error::io(path, e))?;
    let ngram_max = u32::from_le_bytes(u32buf) as usize;
    r.read_exact(&mut u8buf).map_err(|e| Error::io(path, e))?;
    let include_whole_tokens = u8buf[0] != 0;
    r.read_exact(&mut u64buf).map_err(|e| Error::io(path, e))?;
    let hash_seed = u64::from_le_bytes(u64buf);
    let featurizer = FeaturizerConfig {
        ngram_min,
        ngram_max,
        include_whole_tokens,
        n_buckets,
        hash_seed,
    };
    featurizer.validate()?;
    if dim < 2 {
        return Err(bad("dim out of range"));
    }
    let mut table = vec![0.0f64; n_buckets * dim];
    let mut f32buf = [0u8; 4];
    for slot in table.iter_mut() {
        r.read_exact(&mut f32buf).map_err(|e| Error::io(path, e))?;
        let v = f32::from_le_bytes(f32buf);
        if !v.is_finite() {
            return Err(bad("non-finite table entry"));
        }
        *slot = v as f64;
    }
    if r.read(&mut u8buf).map_err(|e| Error::io(path, e))? != 0 {
        return Err(bad("trailing bytes after table"));
    }
    Ok(EmbeddingModel {
        dim,
        featurizer,
        table,
    })
}
