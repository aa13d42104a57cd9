//! GloVe embeddings: weighted least squares on log co-occurrence counts,
//! optimized with AdaGrad.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::models::cooc::Cooccurrence;
use crate::models::{EmbeddingSet, ModelKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GloveParams {
    pub dims: usize,
    pub epochs: usize,
    /// Co-occurrence count beyond which a pair gets full weight.
    pub x_max: f64,
    /// Exponent of the weighting function below `x_max`.
    pub alpha: f64,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for GloveParams {
    fn default() -> Self {
        GloveParams {
            dims: 50,
            epochs: 15,
            x_max: 100.0,
            alpha: 0.75,
            learning_rate: 0.05,
            seed: 0,
        }
    }
}

fn weight(x: f64, x_max: f64, alpha: f64) -> f64 {
    if x < x_max {
        (x / x_max).powf(alpha)
    } else {
        1.0
    }
}

/// Cost of one pair: `f(x) * (w_i . w~_j + b_i + b~_j - ln x)^2`.
fn pair_cost(wi: &[f64], wj: &[f64], bi: f64, bj: f64, x: f64, x_max: f64, alpha: f64) -> f64 {
    let e = dot(wi, wj) + bi + bj - x.ln();
    weight(x, x_max, alpha) * e * e
}

/// Analytic gradients of `pair_cost` with respect to all four parameters.
fn pair_grads(
    wi: &[f64],
    wj: &[f64],
    bi: f64,
    bj: f64,
    x: f64,
    x_max: f64,
    alpha: f64,
) -> (Vec<f64>, Vec<f64>, f64, f64) {
    let e = dot(wi, wj) + bi + bj - x.ln();
    let d = 2.0 * weight(x, x_max, alpha) * e;
    let gwi = wj.iter().map(|&v| d * v).collect();
    let gwj = wi.iter().map(|&v| d * v).collect();
    (gwi, gwj, d, d)
}

/// Numerical self-check of the pair-cost gradients: compare the analytic
/// gradients against central finite differences on random parameters,
/// probing both branches of the weighting function. Returns the largest
/// relative disagreement over every coordinate; healthy values sit many
/// orders of magnitude below any sensible tolerance.
pub fn gradient_check(seed: u64) -> f64 {
    let dims = 5;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-0.6..0.6)).collect() };
    let wi = draw(dims);
    let wj = draw(dims);
    let (bi, bj) = (0.3, -0.2);
    let (x_max, alpha) = (10.0, 0.75);
    let h = 1e-6;

    let mut worst: f64 = 0.0;
    let mut check = |analytic: f64, fd: f64| {
        let rel = (analytic - fd).abs() / analytic.abs().max(fd.abs()).max(1e-3);
        worst = worst.max(rel);
    };
    // One count below the weighting knee, one above it.
    for &x in &[3.7, 50.0] {
        let (gwi, gwj, gbi, gbj) = pair_grads(&wi, &wj, bi, bj, x, x_max, alpha);
        for k in 0..dims {
            let mut plus = wi.clone();
            plus[k] += h;
            let mut minus = wi.clone();
            minus[k] -= h;
            let fd = (pair_cost(&plus, &wj, bi, bj, x, x_max, alpha)
                - pair_cost(&minus, &wj, bi, bj, x, x_max, alpha))
                / (2.0 * h);
            check(gwi[k], fd);

            let mut plus = wj.clone();
            plus[k] += h;
            let mut minus = wj.clone();
            minus[k] -= h;
            let fd = (pair_cost(&wi, &plus, bi, bj, x, x_max, alpha)
                - pair_cost(&wi, &minus, bi, bj, x, x_max, alpha))
                / (2.0 * h);
            check(gwj[k], fd);
        }
        let fd = (pair_cost(&wi, &wj, bi + h, bj, x, x_max, alpha)
            - pair_cost(&wi, &wj, bi - h, bj, x, x_max, alpha))
            / (2.0 * h);
        check(gbi, fd);
        let fd = (pair_cost(&wi, &wj, bi, bj + h, x, x_max, alpha)
            - pair_cost(&wi, &wj, bi, bj - h, x, x_max, alpha))
            / (2.0 * h);
        check(gbj, fd);
    }
    worst
}

/// Train GloVe on co-occurrence counts. The final embedding of a token is
/// the sum of its word and context vectors.
pub fn train_glove(cooc: &Cooccurrence, params: &GloveParams) -> Result<EmbeddingSet> {
    if params.dims == 0 || params.epochs == 0 {
        return Err(Error::invalid_argument("dims and epochs must be positive"));
    }
    if params.learning_rate <= 0.0 || params.x_max <= 0.0 {
        return Err(Error::invalid_argument("learning rate and x_max must be positive"));
    }
    let n = cooc.vocab.len();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && cooc.counts[(i, j)] > 0.0 {
                pairs.push((i, j));
            }
        }
    }
    if pairs.is_empty() {
        return Err(Error::invalid_argument("no co-occurring token pairs"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let scale = 1.0 / (params.dims as f64 + 1.0);
    let mut init = |m: &mut Matrix| {
        for i in 0..m.rows() {
            for v in m.row_mut(i) {
                *v = (rng.gen::<f64>() - 0.5) * scale;
            }
        }
    };
    let mut w = Matrix::zeros(n, params.dims);
    let mut wt = Matrix::zeros(n, params.dims);
    init(&mut w);
    init(&mut wt);
    let mut b: Vec<f64> = (0..n).map(|_| (rng.gen::<f64>() - 0.5) * scale).collect();
    let mut bt: Vec<f64> = (0..n).map(|_| (rng.gen::<f64>() - 0.5) * scale).collect();

    let mut acc_w = Matrix::zeros(n, params.dims);
    let mut acc_wt = Matrix::zeros(n, params.dims);
    for i in 0..n {
        acc_w.row_mut(i).fill(1.0);
        acc_wt.row_mut(i).fill(1.0);
    }
    let mut acc_b = vec![1.0f64; n];
    let mut acc_bt = vec![1.0f64; n];

    pairs.shuffle(&mut rng);

    let lr = params.learning_rate;
    let mut loss_trace = Vec::with_capacity(params.epochs);
    let mut wi_old = vec![0.0; params.dims];
    for _epoch in 0..params.epochs {
        let mut cost = 0.0;
        for &(i, j) in &pairs {
            let x = cooc.counts[(i, j)];
            wi_old.copy_from_slice(w.row(i));
            let (gwi, gwj, gbi, gbj) = pair_grads(
                &wi_old,
                wt.row(j),
                b[i],
                bt[j],
                x,
                params.x_max,
                params.alpha,
            );
            cost += pair_cost(&wi_old, wt.row(j), b[i], bt[j], x, params.x_max, params.alpha);

            for ((v, g), a) in w.row_mut(i).iter_mut().zip(&gwi).zip(acc_w.row_mut(i)) {
                *a += g * g;
                *v -= lr * g / a.sqrt();
            }
            for ((v, g), a) in wt.row_mut(j).iter_mut().zip(&gwj).zip(acc_wt.row_mut(j)) {
                *a += g * g;
                *v -= lr * g / a.sqrt();
            }
            acc_b[i] += gbi * gbi;
            b[i] -= lr * gbi / acc_b[i].sqrt();
            acc_bt[j] += gbj * gbj;
            bt[j] -= lr * gbj / acc_bt[j].sqrt();
        }
        loss_trace.push(cost / pairs.len() as f64);
    }

    let mut vectors = Matrix::zeros(n, params.dims);
    for i in 0..n {
        for (k, (a, c)) in w.row(i).iter().zip(wt.row(i)).enumerate() {
            vectors[(i, k)] = a + c;
        }
    }
    Ok(EmbeddingSet {
        tokens: cooc.vocab.clone(),
        vectors,
        model: ModelKind::Glove,
        loss_trace,
    })
}
