//! Ranking and contrastive losses over batched unit embeddings.
//!
//! Both losses read the scoring function as cosine *distance* `d = 1 - cos`:
//! minimizing pulls positives toward the query and pushes negatives away,
//! which is the geometry the margin describes (central titles inside the
//! margin radius, non-central outside).
//!
//! - `mnrl` - hinge over every (positive, negative) distance gap per anchor:
//!   `sum max(0, d(q,p_i) - d(q,n_j) + margin)`. A softmax form of the same
//!   ranking objective is available behind [`MnrlForm::Softmax`].
//! - `ocl` - contrastive loss computed only on batch-mined hard cases:
//!   per anchor, positive pairs farther than the closest negative and
//!   negative pairs closer than the farthest positive. Selected pairs
//!   contribute `Y*D + (1-Y)*max(margin-D, 0)^2`.
//! - `dual_loss` - unweighted sum of both.
//!
//! Gradients are analytic with respect to the raw embedding vectors
//! (`dd(u,v)/du = -v`); propagation through L2 normalization belongs to
//! [`crate::encoder::encode_backward`]. At hinge kinks the subgradient is 0.

use crate::{Error, Result};

/// Pairs of one anchor: vector indices into [`LossBatch::vectors`] plus the
/// binary centrality label used by the contrastive branch.
#[derive(Debug, Clone, Default)]
pub struct AnchorPairs {
    pub query: usize,
    /// (vector index, label); annotated positives, label normally 1.
    pub positives: Vec<(usize, u8)>,
    /// (vector index, label); annotated plus in-batch negatives, label 0.
    pub negatives: Vec<(usize, u8)>,
}

/// Per-batch anchors, title vectors, and labels, the input to both losses.
/// Vectors are stored once and referenced by index so that gradients for a
/// text reused across anchors accumulate in one slot.
#[derive(Debug, Clone)]
pub struct LossBatch {
    /// Unit vectors (queries and titles), deduplicated by the builder.
    pub vectors: Vec<Vec<f64>>,
    pub anchors: Vec<AnchorPairs>,
    pub margin: f64,
}

impl LossBatch {
    pub fn validate(&self) -> Result<()> {
        if self.margin <= 0.0 {
            return Err(Error::invalid(format!("margin {} must be > 0", self.margin)));
        }
        let dim = self.vectors.first().map(Vec::len).unwrap_or(0);
        for (i, v) in self.vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::invalid(format!(
                    "vector {i} has dim {}, expected {dim}",
                    v.len()
                )));
            }
            let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-6 {
                return Err(Error::invalid(format!("vector {i} is not unit-norm ({norm})")));
            }
        }
        for (a, anchor) in self.anchors.iter().enumerate() {
            for &(idx, label) in std::iter::once(&(anchor.query, 1u8))
                .chain(&anchor.positives)
                .chain(&anchor.negatives)
            {
                if idx >= self.vectors.len() {
                    return Err(Error::invalid(format!("anchor {a}: vector index {idx} out of range")));
                }
                if label > 1 {
                    return Err(Error::invalid(format!("anchor {a}: label {label} not in {{0,1}}")));
                }
            }
        }
        Ok(())
    }
}

/// Which algebraic form of the ranking loss to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MnrlForm {
    /// Hinge sum over (positive, negative) distance gaps.
    #[default]
    Hinge,
    /// Per positive, `log(1 + sum_j exp(cos(q,n_j) - cos(q,p_i)))`.
    Softmax,
}

/// Which form the contrastive positive term takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OclPositive {
    /// `Y * D` as printed.
    #[default]
    Linear,
    /// `Y * D^2`, the classical contrastive form.
    Squared,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LossOptions {
    pub mnrl_form: MnrlForm,
    pub ocl_positive: OclPositive,
}

/// Loss value plus gradients aligned with [`LossBatch::vectors`].
#[derive(Debug, Clone)]
pub struct LossOutput {
    pub loss: f64,
    pub grads: Vec<Vec<f64>>,
    /// Hard positive pairs selected by OCL mining (0 for MNRL).
    pub mined_positives: usize,
    /// Hard negative pairs selected by OCL mining (0 for MNRL).
    pub mined_negatives: usize,
    /// Set when the batch contained only one label class, which leaves OCL
    /// mining undefined; the loss is 0 in that case.
    pub single_class_warning: bool,
}

impl LossOutput {
    fn zeros(batch: &LossBatch) -> Self {
        LossOutput {
            loss: 0.0,
            grads: batch.vectors.iter().map(|v| vec![0.0; v.len()]).collect(),
            mined_positives: 0,
            mined_negatives: 0,
            single_class_warning: false,
        }
    }
}

/// Cosine distance `1 - cos(u, v)`, in `[0, 2]` for unit vectors.
pub fn distance(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::invalid(format!(
            "dimension mismatch: {} vs {}",
            u.len(),
            v.len()
        )));
    }
    Ok(1.0 - u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>())
}

fn dist_by_index(batch: &LossBatch, a: usize, b: usize) -> f64 {
    1.0 - batch.vectors[a]
        .iter()
        .zip(&batch.vectors[b])
        .map(|(x, y)| x * y)
        .sum::<f64>()
}

/// Adds `coeff * dD/d(each side)` for the pair (a, b): `dD/da = -b`.
fn add_pair_grad(grads: &mut [Vec<f64>], batch: &LossBatch, a: usize, b: usize, coeff: f64) {
    for (g, v) in grads[a].iter_mut().zip(&batch.vectors[b]) {
        *g -= coeff * v;
    }
    for (g, v) in grads[b].iter_mut().zip(&batch.vectors[a]) {
        *g -= coeff * v;
    }
}

/// Multiple negatives ranking loss over all (positive, negative) pairs of
/// every anchor. Errors if any anchor lacks positives or negatives.
pub fn mnrl(batch: &LossBatch, opts: &LossOptions) -> Result<LossOutput> {
    batch.validate()?;
    let mut out = LossOutput::zeros(batch);
    for (ai, anchor) in batch.anchors.iter().enumerate() {
        if anchor.positives.is_empty() || anchor.negatives.is_empty() {
            return Err(Error::invalid(format!(
                "anchor {ai}: ranking loss needs at least one positive and one negative"
            )));
        }
        match opts.mnrl_form {
            MnrlForm::Hinge => hinge_mnrl_anchor(batch, anchor, &mut out),
            MnrlForm::Softmax => softmax_mnrl_anchor(batch, anchor, &mut out),
        }
    }
    Ok(out)
}

fn hinge_mnrl_anchor(batch: &LossBatch, anchor: &AnchorPairs, out: &mut LossOutput) {
    let q = anchor.query;
    let pos_d: Vec<f64> = anchor.positives.iter().map(|&(p, _)| dist_by_index(batch, q, p)).collect();
    let neg_d: Vec<f64> = anchor.negatives.iter().map(|&(n, _)| dist_by_index(batch, q, n)).collect();
    for (i, &(p, _)) in anchor.positives.iter().enumerate() {
        for (j, &(n, _)) in anchor.negatives.iter().enumerate() {
            let arg = pos_d[i] - neg_d[j] + batch.margin;
            if arg > 0.0 {
                out.loss += arg;
                add_pair_grad(&mut out.grads, batch, q, p, 1.0);
                add_pair_grad(&mut out.grads, batch, q, n, -1.0);
            }
        }
    }
}

fn softmax_mnrl_anchor(batch: &LossBatch, anchor: &AnchorPairs, out: &mut LossOutput) {
    let q = anchor.query;
    // work on similarities s = 1 - d; exp arguments stay in [-2, 2]
    let pos_s: Vec<f64> = anchor.positives.iter().map(|&(p, _)| 1.0 - dist_by_index(batch, q, p)).collect();
    let neg_s: Vec<f64> = anchor.negatives.iter().map(|&(n, _)| 1.0 - dist_by_index(batch, q, n)).collect();
    for (i, &(p, _)) in anchor.positives.iter().enumerate() {
        let exps: Vec<f64> = neg_s.iter().map(|s| (s - pos_s[i]).exp()).collect();
        let z: f64 = 1.0 + exps.iter().sum::<f64>();
        out.loss += z.ln();
        // dL/ds_p = -(z-1)/z, dL/ds_n_j = e_j/z; ds/du = v so reuse the
        // distance helper with flipped sign.
        add_pair_grad(&mut out.grads, batch, q, p, (z - 1.0) / z);
        for (j, &(n, _)) in anchor.negatives.iter().enumerate() {
            add_pair_grad(&mut out.grads, batch, q, n, -exps[j] / z);
        }
    }
}

/// Online contrastive loss with per-anchor hard mining: hard positives are
/// label-1 pairs farther than that anchor's closest label-0 pair, hard
/// negatives are label-0 pairs closer than its farthest label-1 pair.
/// Anchors missing a class are skipped; a batch with only one class yields
/// zero loss and `single_class_warning`.
pub fn ocl(batch: &LossBatch, opts: &LossOptions) -> Result<LossOutput> {
    batch.validate()?;
    let mut out = LossOutput::zeros(batch);
    let mut saw_label = [false, false];
    for anchor in &batch.anchors {
        // classes come from the labels, not from list membership
        let pairs: Vec<(usize, u8, f64)> = anchor
            .positives
            .iter()
            .chain(&anchor.negatives)
            .map(|&(t, label)| (t, label, dist_by_index(batch, anchor.query, t)))
            .collect();
        for &(_, label, _) in &pairs {
            saw_label[label as usize] = true;
        }
        let min_neg = pairs
            .iter()
            .filter(|(_, l, _)| *l == 0)
            .map(|&(_, _, d)| d)
            .fold(f64::INFINITY, f64::min);
        let max_pos = pairs
            .iter()
            .filter(|(_, l, _)| *l == 1)
            .map(|&(_, _, d)| d)
            .fold(f64::NEG_INFINITY, f64::max);
        if !min_neg.is_finite() || !max_pos.is_finite() {
            continue; // anchor has only one class
        }
        for &(t, label, d) in &pairs {
            if label == 1 && d > min_neg {
                out.mined_positives += 1;
                match opts.ocl_positive {
                    OclPositive::Linear => {
                        out.loss += d;
                        add_pair_grad(&mut out.grads, batch, anchor.query, t, 1.0);
                    }
                    OclPositive::Squared => {
                        out.loss += d * d;
                        add_pair_grad(&mut out.grads, batch, anchor.query, t, 2.0 * d);
                    }
                }
            } else if label == 0 && d < max_pos {
                out.mined_negatives += 1;
                let slack = batch.margin - d;
                if slack > 0.0 {
                    out.loss += slack * slack;
                    add_pair_grad(&mut out.grads, batch, anchor.query, t, -2.0 * slack);
                }
            }
        }
    }
    if !(saw_label[0] && saw_label[1]) {
        out = LossOutput::zeros(batch);
        out.single_class_warning = true;
    }
    Ok(out)
}

/// Unweighted sum of [`mnrl`] and [`ocl`], gradients summed element-wise.
pub fn dual_loss(batch: &LossBatch, opts: &LossOptions) -> Result<LossOutput> {
    let a = mnrl(batch, opts)?;
    let b = ocl(batch, opts)?;
    let mut grads = a.grads;
    for (g, h) in grads.iter_mut().zip(&b.grads) {
        for (x, y) in g.iter_mut().zip(h) {
            *x += y;
        }
    }
    Ok(LossOutput {
        loss: a.loss + b.loss,
        grads,
        mined_positives: b.mined_positives,
        mined_negatives: b.mined_negatives,
        single_class_warning: b.single_class_warning,
    })
}

/// Builds a unit vector at exactly the given cosine distance from `anchor`,
/// steering the orthogonal component along `direction_hint`. Returns `None`
/// when the hint is (numerically) parallel to the anchor. Test and benchmark
/// helper.
pub fn place_at_distance(anchor: &[f64], direction_hint: &[f64], dist: f64) -> Option<Vec<f64>> {
    assert!(
        (0.0..=2.0).contains(&dist),
        "cosine distance must lie in [0, 2]"
    );
    let dot: f64 = anchor.iter().zip(direction_hint).map(|(a, b)| a * b).sum();
    let mut ortho: Vec<f64> = direction_hint
        .iter()
        .zip(anchor)
        .map(|(h, a)| h - dot * a)
        .collect();
    let norm: f64 = ortho.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm < 1e-9 {
        return None;
    }
    ortho.iter_mut().for_each(|v| *v /= norm);
    let cos = 1.0 - dist;
    let sin = (1.0 - cos * cos).max(0.0).sqrt();
    Some(
        anchor
            .iter()
            .zip(&ortho)
            .map(|(a, o)| cos * a + sin * o)
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Anchor at e1, companions placed at exact dyadic distances in the
    /// (e1, e_k) planes so hinge arguments are exact in f64.
    fn batch_with(pos_d: &[f64], neg_d: &[f64], margin: f64) -> LossBatch {
        let dim = 2 + pos_d.len() + neg_d.len();
        let mut e1 = vec![0.0; dim];
        e1[0] = 1.0;
        let mut vectors = vec![e1.clone()];
        let mut positives = Vec::new();
        let mut negatives = Vec::new();
        for (k, &d) in pos_d.iter().enumerate() {
            let mut hint = vec![0.0; dim];
            hint[1 + k] = 1.0;
            vectors.push(place_at_distance(&e1, &hint, d).unwrap());
            positives.push((vectors.len() - 1, 1u8));
        }
        for (k, &d) in neg_d.iter().enumerate() {
            let mut hint = vec![0.0; dim];
            hint[1 + pos_d.len() + k] = 1.0;
            vectors.push(place_at_distance(&e1, &hint, d).unwrap());
            negatives.push((vectors.len() - 1, 0u8));
        }
        LossBatch {
            vectors,
            anchors: vec![AnchorPairs {
                query: 0,
                positives,
                negatives,
            }],
            margin,
        }
    }

    fn grad_norm(out: &LossOutput) -> f64 {
        out.grads
            .iter()
            .flat_map(|g| g.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn distance_identities() {
        let u = vec![1.0, 0.0];
        let v = vec![0.0, 1.0];
        let w = vec![-1.0, 0.0];
        assert_eq!(distance(&u, &u).unwrap(), 0.0);
        assert_eq!(distance(&u, &v).unwrap(), 1.0);
        assert_eq!(distance(&u, &w).unwrap(), 2.0);
        assert!(distance(&u, &[1.0]).is_err());
    }

    #[test]
    fn place_at_distance_is_exact_for_dyadic_distances() {
        let e1 = vec![1.0, 0.0, 0.0];
        let hint = vec![0.0, 1.0, 0.0];
        let v = place_at_distance(&e1, &hint, 0.25).unwrap();
        assert_eq!(distance(&e1, &v).unwrap(), 0.25);
    }

    #[test]
    fn mnrl_hinge_inactive_term_is_zero() {
        let batch = batch_with(&[0.1], &[0.9], 0.5);
        let out = mnrl(&batch, &LossOptions::default()).unwrap();
        assert_eq!(out.loss, 0.0);
        assert_eq!(grad_norm(&out), 0.0);
    }

    #[test]
    fn mnrl_hinge_active_term_hand_value() {
        let batch = batch_with(&[0.6], &[0.4], 0.5);
        let out = mnrl(&batch, &LossOptions::default()).unwrap();
        assert!((out.loss - 0.7).abs() < 1e-12, "loss {}", out.loss);
        assert!(grad_norm(&out) > 0.0);
    }

    #[test]
    fn mnrl_matches_scalar_recomputation() {
        let batch = batch_with(&[0.6, 0.8], &[0.3, 0.45], 0.5);
        let out = mnrl(&batch, &LossOptions::default()).unwrap();
        // independent scalar route over the same distances
        let q = &batch.vectors[0];
        let mut expected = 0.0;
        for &(p, _) in &batch.anchors[0].positives {
            for &(n, _) in &batch.anchors[0].negatives {
                let term = distance(q, &batch.vectors[p]).unwrap()
                    - distance(q, &batch.vectors[n]).unwrap()
                    + 0.5;
                expected += term.max(0.0);
            }
        }
        assert!((out.loss - expected).abs() < 1e-12);
        assert!(out.loss > 0.0);
    }

    #[test]
    fn mnrl_requires_both_classes() {
        let mut batch = batch_with(&[0.5], &[0.9], 0.5);
        batch.anchors[0].negatives.clear();
        assert!(mnrl(&batch, &LossOptions::default()).is_err());
    }

    #[test]
    fn mnrl_kink_uses_zero_subgradient() {
        // arg = 0.25 - 0.75 + 0.5 == 0 exactly
        let batch = batch_with(&[0.25], &[0.75], 0.5);
        let out = mnrl(&batch, &LossOptions::default()).unwrap();
        assert_eq!(out.loss, 0.0);
        assert_eq!(grad_norm(&out), 0.0);
    }

    #[test]
    fn ocl_branch_values() {
        // pos at 0.3 with a closer negative at 0.1: pos is mined, contributes 0.3;
        // the negative at 0.1 is mined too (0.1 < 0.3) and contributes (0.5-0.1)^2.
        let batch = batch_with(&[0.3], &[0.1], 0.5);
        let out = ocl(&batch, &LossOptions::default()).unwrap();
        assert_eq!(out.mined_positives, 1);
        assert_eq!(out.mined_negatives, 1);
        assert!((out.loss - (0.3 + 0.4 * 0.4)).abs() < 1e-12, "loss {}", out.loss);
    }

    #[test]
    fn ocl_mined_negative_outside_margin_contributes_zero() {
        // negative at 0.7 < max_pos 0.9 is mined but outside margin 0.5
        let batch = batch_with(&[0.9], &[0.7], 0.5);
        let out = ocl(&batch, &LossOptions::default()).unwrap();
        assert_eq!(out.mined_negatives, 1);
        // mined positive at 0.9 > min_neg 0.7 contributes linearly
        assert!((out.loss - 0.9).abs() < 1e-12);
    }

    #[test]
    fn ocl_mined_negative_inside_margin() {
        let batch = batch_with(&[0.9], &[0.2], 0.5);
        let out = ocl(&batch, &LossOptions::default()).unwrap();
        // positive 0.9 > 0.2 mined (0.9), negative 0.2 < 0.9 mined ((0.5-0.2)^2)
        assert!((out.loss - (0.9 + 0.09)).abs() < 1e-12, "loss {}", out.loss);
    }

    #[test]
    fn ocl_mining_rule_hand_case() {
        let batch = batch_with(&[0.2, 0.6], &[0.4, 0.9], 0.5);
        let out = ocl(&batch, &LossOptions::default()).unwrap();
        // hard positives: d > min_neg (0.4) -> only 0.6
        // hard negatives: d < max_pos (0.6) -> only 0.4
        assert_eq!(out.mined_positives, 1);
        assert_eq!(out.mined_negatives, 1);
        let expected = 0.6 + (0.5f64 - 0.4).powi(2);
        assert!((out.loss - expected).abs() < 1e-12, "loss {}", out.loss);
    }

    #[test]
    fn ocl_single_class_batch_warns() {
        let mut batch = batch_with(&[0.3, 0.4], &[0.8], 0.5);
        // relabel the negative as positive: only label 1 remains
        batch.anchors[0].negatives[0].1 = 1;
        let out = ocl(&batch, &LossOptions::default()).unwrap();
        assert!(out.single_class_warning);
        assert_eq!(out.loss, 0.0);
        assert_eq!(grad_norm(&out), 0.0);
    }

    #[test]
    fn ocl_label_flip_swaps_branches() {
        // scalar oracle over (distance, label) pairs with per-anchor mining
        fn oracle(pairs: &[(f64, u8)], margin: f64) -> f64 {
            let min_neg = pairs
                .iter()
                .filter(|(_, l)| *l == 0)
                .map(|&(d, _)| d)
                .fold(f64::INFINITY, f64::min);
            let max_pos = pairs
                .iter()
                .filter(|(_, l)| *l == 1)
                .map(|&(d, _)| d)
                .fold(f64::NEG_INFINITY, f64::max);
            if !min_neg.is_finite() || !max_pos.is_finite() {
                return 0.0;
            }
            pairs
                .iter()
                .map(|&(d, l)| {
                    if l == 1 && d > min_neg {
                        d
                    } else if l == 0 && d < max_pos {
                        (margin - d).max(0.0).powi(2)
                    } else {
                        0.0
                    }
                })
                .sum()
        }

        let ds = [0.125, 0.375, 0.625, 0.875];
        let labels = [1u8, 0, 1, 0];
        let mut batch = batch_with(&[ds[0], ds[2]], &[ds[1], ds[3]], 0.5);
        let pairs: Vec<(f64, u8)> = ds.iter().copied().zip([1, 1, 0, 0]).collect();
        // reorder into the batch layout: positives carry ds[0], ds[2]
        let layout: Vec<(f64, u8)> = vec![(ds[0], labels[0]), (ds[2], labels[2]), (ds[1], labels[1]), (ds[3], labels[3])];
        let _ = pairs;
        batch.anchors[0].positives[0].1 = labels[0];
        batch.anchors[0].positives[1].1 = labels[2];
        batch.anchors[0].negatives[0].1 = labels[1];
        batch.anchors[0].negatives[1].1 = labels[3];
        let out = ocl(&batch, &LossOptions::default()).unwrap();
        assert!((out.loss - oracle(&layout, 0.5)).abs() < 1e-12);

        // flip every label: branch assignment swaps exactly
        let anchor = &mut batch.anchors[0];
        for slot in anchor.positives.iter_mut().chain(anchor.negatives.iter_mut()) {
            slot.1 = 1 - slot.1;
        }
        let flipped_layout: Vec<(f64, u8)> = layout.iter().map(|&(d, l)| (d, 1 - l)).collect();
        let out2 = ocl(&batch, &LossOptions::default()).unwrap();
        assert!((out2.loss - oracle(&flipped_layout, 0.5)).abs() < 1e-12);
    }

    #[test]
    fn dual_is_exact_sum_of_parts() {
        let batch = batch_with(&[0.55, 0.35], &[0.25, 0.95], 0.5);
        let opts = LossOptions::default();
        let a = mnrl(&batch, &opts).unwrap();
        let b = ocl(&batch, &opts).unwrap();
        let d = dual_loss(&batch, &opts).unwrap();
        assert!((d.loss - (a.loss + b.loss)).abs() < 1e-12);
        for i in 0..batch.vectors.len() {
            for k in 0..batch.vectors[i].len() {
                assert!((d.grads[i][k] - (a.grads[i][k] + b.grads[i][k])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dual_reduces_to_mnrl_when_ocl_is_quiet() {
        // positives all closer than negatives: nothing mined by OCL
        let batch = batch_with(&[0.1, 0.2], &[0.9, 1.1], 0.5);
        let opts = LossOptions::default();
        let m = mnrl(&batch, &opts).unwrap();
        let d = dual_loss(&batch, &opts).unwrap();
        assert_eq!(d.loss, m.loss);
        assert_eq!(d.mined_positives, 0);
        assert_eq!(d.mined_negatives, 0);
    }

    #[test]
    fn margin_geometry_silences_both_losses() {
        // every positive < every negative - margin, negatives >= margin
        let batch = batch_with(&[0.05, 0.3], &[0.9, 1.6], 0.5);
        let opts = LossOptions::default();
        let m = mnrl(&batch, &opts).unwrap();
        assert_eq!(m.loss, 0.0);
        assert_eq!(grad_norm(&m), 0.0);
        let o = ocl(&batch, &opts).unwrap();
        assert_eq!(o.mined_positives + o.mined_negatives, 0);
        assert_eq!(o.loss, 0.0);
    }

    #[test]
    fn losses_are_nonnegative_on_random_batches() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..50 {
            let margin = rng.gen_range(0.1..1.0);
            let pos: Vec<f64> = (0..rng.gen_range(1..4)).map(|_| rng.gen_range(0.0..2.0)).collect();
            let neg: Vec<f64> = (0..rng.gen_range(1..4)).map(|_| rng.gen_range(0.0..2.0)).collect();
            let batch = batch_with(&pos, &neg, margin);
            let opts = LossOptions::default();
            assert!(mnrl(&batch, &opts).unwrap().loss >= 0.0);
            assert!(ocl(&batch, &opts).unwrap().loss >= 0.0);
            assert!(dual_loss(&batch, &opts).unwrap().loss >= 0.0);
        }
    }

    #[test]
    fn softmax_form_decreases_with_better_separation() {
        let opts = LossOptions {
            mnrl_form: MnrlForm::Softmax,
            ..LossOptions::default()
        };
        let worse = mnrl(&batch_with(&[0.9], &[0.2], 0.5), &opts).unwrap();
        let better = mnrl(&batch_with(&[0.1], &[1.2], 0.5), &opts).unwrap();
        assert!(better.loss < worse.loss);
        assert!(better.loss > 0.0);
    }
}
