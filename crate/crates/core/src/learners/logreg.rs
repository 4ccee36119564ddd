//! Multinomial (softmax) logistic regression trained by mini-batch gradient
//! descent on mean cross-entropy plus an L2 penalty on the weights.

use std::borrow::Borrow;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::LogRegParams;
use crate::features::SparseVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub n_labels: usize,
    pub dim: usize,
    /// Row-major `n_labels x dim`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LogRegModel {
    pub fn zeros(n_labels: usize, dim: usize) -> Self {
        LogRegModel {
            n_labels,
            dim,
            weights: vec![0.0; n_labels * dim],
            bias: vec![0.0; n_labels],
        }
    }

    fn row(&self, label: usize) -> &[f64] {
        &self.weights[label * self.dim..(label + 1) * self.dim]
    }

    pub fn logits(&self, x: &SparseVector) -> Vec<f64> {
        (0..self.n_labels)
            .map(|l| self.bias[l] + x.dot(self.row(l)))
            .collect()
    }

    pub fn probabilities(&self, x: &SparseVector) -> Vec<f64> {
        softmax(&self.logits(x))
    }
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Mean cross-entropy over the examples plus `lambda / 2 * ||W||^2`.
pub fn objective(m: &LogRegModel, xs: &[SparseVector], y: &[usize], lambda: f64) -> f64 {
    let ce: f64 = xs
        .iter()
        .zip(y)
        .map(|(x, &l)| {
            let z = m.logits(x);
            let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            lse - z[l]
        })
        .sum();
    let reg: f64 = m.weights.iter().map(|w| w * w).sum();
    ce / xs.len() as f64 + 0.5 * lambda * reg
}

/// Analytic gradient of [`objective`], as (weights, bias).
pub fn gradient<X: Borrow<SparseVector>>(
    m: &LogRegModel,
    xs: &[X],
    y: &[usize],
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let mut gw: Vec<f64> = m.weights.iter().map(|w| lambda * w).collect();
    let mut gb = vec![0.0; m.n_labels];
    let scale = 1.0 / xs.len() as f64;
    for (x, &l) in xs.iter().zip(y) {
        let x = x.borrow();
        let p = m.probabilities(x);
        for (k, pk) in p.into_iter().enumerate() {
            let r = (pk - if k == l { 1.0 } else { 0.0 }) * scale;
            gb[k] += r;
            x.add_scaled_to(&mut gw[k * m.dim..(k + 1) * m.dim], r);
        }
    }
    (gw, gb)
}

pub(crate) fn fit(
    xs: &[SparseVector],
    y: &[usize],
    n_labels: usize,
    dim: usize,
    params: &LogRegParams,
    seed: u64,
) -> LogRegModel {
    let mut m = LogRegModel::zeros(n_labels, dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let epochs = params.epochs.max(1) as f64;
    let mut batch_x = Vec::with_capacity(params.batch_size);
    let mut batch_y = Vec::with_capacity(params.batch_size);

    for epoch in 0..params.epochs {
        let eta = params.eta0 / (1.0 + epoch as f64 / epochs);
        order.shuffle(&mut rng);
        for chunk in order.chunks(params.batch_size) {
            batch_x.clear();
            batch_y.clear();
            for &i in chunk {
                batch_x.push(&xs[i]);
                batch_y.push(y[i]);
            }
            let (gw, gb) = gradient(&m, &batch_x, &batch_y, params.lambda);
            for (w, g) in m.weights.iter_mut().zip(gw) {
                *w -= eta * g;
            }
            for (b, g) in m.bias.iter_mut().zip(gb) {
                *b -= eta * g;
            }
        }
    }
    m
}
