//! Continuous bag-of-words embeddings trained with negative sampling.
//!
//! Each token of a sentence takes a turn as the prediction target while the
//! other tokens form the context. The hidden state is the mean of the
//! context tokens' input vectors; the target plus a handful of noise tokens
//! are scored against it with logistic loss. Noise tokens follow the
//! unigram distribution raised to the 3/4 power.

use rand::distributions::WeightedIndex;
use serde::{Deserialize, Serialize};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::models::{EmbeddingSet, ModelKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CbowParams {
    pub dims: usize,
    pub epochs: usize,
    /// Noise tokens per prediction.
    pub negatives: usize,
    /// Initial learning rate; decays linearly to 1% of itself.
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for CbowParams {
    fn default() -> Self {
        CbowParams {
            dims: 300,
            epochs: 50,
            negatives: 5,
            learning_rate: 0.025,
            seed: 0,
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn hidden(w_in: &Matrix, context: &[usize]) -> Vec<f64> {
    let mut h = vec![0.0; w_in.cols()];
    for &c in context {
        for (hk, vk) in h.iter_mut().zip(w_in.row(c)) {
            *hk += vk;
        }
    }
    let inv = 1.0 / context.len() as f64;
    for hk in &mut h {
        *hk *= inv;
    }
    h
}

/// Loss of a single prediction:
/// `-ln sigma(v_center . h) - sum_k ln sigma(-v_neg_k . h)`.
/// The reference for the finite-difference gradient check.
fn step_loss(w_in: &Matrix, w_out: &Matrix, center: usize, context: &[usize], negatives: &[usize]) -> f64 {
    let h = hidden(w_in, context);
    let mut loss = softplus(-dot(&h, w_out.row(center)));
    for &neg in negatives {
        loss += softplus(dot(&h, w_out.row(neg)));
    }
    loss
}

/// One gradient step on the loss above; returns the pre-update loss.
///
/// All scores and the error vector are computed against the current
/// parameters before anything moves, so the update is the exact gradient
/// even when a noise token is drawn more than once.
fn step_train(
    w_in: &mut Matrix,
    w_out: &mut Matrix,
    center: usize,
    context: &[usize],
    negatives: &[usize],
    lr: f64,
) -> f64 {
    let dims = w_in.cols();
    let h = hidden(w_in, context);

    let pos_score = dot(&h, w_out.row(center));
    let neg_scores: Vec<f64> = negatives.iter().map(|&n| dot(&h, w_out.row(n))).collect();
    let loss = softplus(-pos_score) + neg_scores.iter().map(|&s| softplus(s)).sum::<f64>();

    let g_pos = sigmoid(pos_score) - 1.0;
    let g_neg: Vec<f64> = neg_scores.iter().map(|&s| sigmoid(s)).collect();

    let mut e = vec![0.0; dims];
    for (ek, vk) in e.iter_mut().zip(w_out.row(center)) {
        *ek += g_pos * vk;
    }
    for (&neg, &g) in negatives.iter().zip(&g_neg) {
        for (ek, vk) in e.iter_mut().zip(w_out.row(neg)) {
            *ek += g * vk;
        }
    }

    for (vk, hk) in w_out.row_mut(center).iter_mut().zip(&h) {
        *vk -= lr * g_pos * hk;
    }
    for (&neg, &g) in negatives.iter().zip(&g_neg) {
        for (vk, hk) in w_out.row_mut(neg).iter_mut().zip(&h) {
            *vk -= lr * g * hk;
        }
    }
    let scale = lr / context.len() as f64;
    for &c in context {
        for (vk, ek) in w_in.row_mut(c).iter_mut().zip(&e) {
            *vk -= scale * ek;
        }
    }
    loss
}

/// Numerical self-check of the training update: compare the analytic
/// gradient (recovered exactly from one update, since the step is
/// `-lr * gradient` at the pre-update parameters) against a central
/// finite difference of the prediction loss, on a small random instance
/// with a repeated noise token. Returns the largest relative
/// disagreement over every parameter; healthy values sit many orders of
/// magnitude below any sensible tolerance.
pub fn gradient_check(seed: u64) -> f64 {
    let (vocab, dims) = (6, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w_in0 = Matrix::zeros(vocab, dims);
    let mut w_out0 = Matrix::zeros(vocab, dims);
    for i in 0..vocab {
        for v in w_in0.row_mut(i) {
            *v = rng.gen_range(-0.8..0.8);
        }
        for v in w_out0.row_mut(i) {
            *v = rng.gen_range(-0.8..0.8);
        }
    }
    let center = 0;
    let context = [1usize, 2];
    let negatives = [3usize, 3, 4];

    let lr = 1e-3;
    let mut w_in1 = w_in0.clone();
    let mut w_out1 = w_out0.clone();
    step_train(&mut w_in1, &mut w_out1, center, &context, &negatives, lr);

    let h = 1e-6;
    let mut worst: f64 = 0.0;
    let mut check = |analytic: f64, fd: f64| {
        let rel = (analytic - fd).abs() / analytic.abs().max(fd.abs()).max(1e-3);
        worst = worst.max(rel);
    };
    for row in 0..vocab {
        for k in 0..dims {
            let analytic = (w_in0[(row, k)] - w_in1[(row, k)]) / lr;
            let mut plus = w_in0.clone();
            plus[(row, k)] += h;
            let mut minus = w_in0.clone();
            minus[(row, k)] -= h;
            let fd = (step_loss(&plus, &w_out0, center, &context, &negatives)
                - step_loss(&minus, &w_out0, center, &context, &negatives))
                / (2.0 * h);
            check(analytic, fd);

            let analytic = (w_out0[(row, k)] - w_out1[(row, k)]) / lr;
            let mut plus = w_out0.clone();
            plus[(row, k)] += h;
            let mut minus = w_out0.clone();
            minus[(row, k)] -= h;
            let fd = (step_loss(&w_in0, &plus, center, &context, &negatives)
                - step_loss(&w_in0, &minus, center, &context, &negatives))
                / (2.0 * h);
            check(analytic, fd);
        }
    }
    worst
}

/// Train CBOW embeddings on a corpus; the returned vectors are the
/// input-side weights.
pub fn train_cbow(corpus: &Corpus, params: &CbowParams) -> Result<EmbeddingSet> {
    if corpus.sentences.is_empty() {
        return Err(Error::invalid_argument("empty corpus"));
    }
    if params.dims == 0 || params.epochs == 0 {
        return Err(Error::invalid_argument("dims and epochs must be positive"));
    }
    if params.learning_rate <= 0.0 {
        return Err(Error::invalid_argument("learning rate must be positive"));
    }
    let vocab = corpus.vocabulary.clone();
    let index = |token: &str| -> Result<usize> {
        vocab
            .binary_search_by(|t| t.as_str().cmp(token))
            .map_err(|_| Error::invalid_state(format!("token '{token}' missing from vocabulary")))
    };
    let sentences: Vec<[usize; 3]> = corpus
        .sentences
        .iter()
        .map(|s| {
            Ok([
                index(&s.subject)?,
                index(s.relation.token())?,
                index(&s.object)?,
            ])
        })
        .collect::<Result<_>>()?;

    let mut counts = vec![0.0f64; vocab.len()];
    for ids in &sentences {
        for &t in ids {
            counts[t] += 1.0;
        }
    }
    let noise_weights: Vec<f64> = counts.iter().map(|c| c.powf(0.75)).collect();
    let noise = WeightedIndex::new(&noise_weights)
        .map_err(|e| Error::invalid_state(format!("bad noise weights: {e}")))?;

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut w_in = Matrix::zeros(vocab.len(), params.dims);
    for i in 0..vocab.len() {
        for v in w_in.row_mut(i) {
            *v = (rng.gen::<f64>() - 0.5) / params.dims as f64;
        }
    }
    let mut w_out = Matrix::zeros(vocab.len(), params.dims);

    let total_updates = (params.epochs * sentences.len() * 3) as f64;
    let lr_final = params.learning_rate / 100.0;
    let mut update = 0.0f64;
    let mut negatives = vec![0usize; params.negatives];
    let mut loss_trace = Vec::with_capacity(params.epochs);

    for _epoch in 0..params.epochs {
        let mut epoch_loss = 0.0;
        for ids in &sentences {
            for center_pos in 0..3 {
                let center = ids[center_pos];
                let context = match center_pos {
                    0 => [ids[1], ids[2]],
                    1 => [ids[0], ids[2]],
                    _ => [ids[0], ids[1]],
                };
                for slot in negatives.iter_mut() {
                    let mut attempts = 0;
                    *slot = loop {
                        let k = noise.sample(&mut rng);
                        if k != center {
                            break k;
                        }
                        attempts += 1;
                        if attempts > 10_000 {
                            return Err(Error::invalid_state("noise sampling cannot avoid the target token"));
                        }
                    };
                }
                let lr = params.learning_rate
                    + (lr_final - params.learning_rate) * (update / total_updates);
                update += 1.0;
                epoch_loss += step_train(&mut w_in, &mut w_out, center, &context, &negatives, lr);
            }
        }
        loss_trace.push(epoch_loss / (sentences.len() * 3) as f64);
    }

    Ok(EmbeddingSet {
        tokens: vocab,
        vectors: w_in,
        model: ModelKind::Cbow,
        loss_trace,
    })
}
