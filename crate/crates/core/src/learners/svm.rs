//! One-vs-rest linear SVMs trained by stochastic subgradient descent on the
//! L2-regularized hinge objective, with step size `1 / (lambda * t)` and
//! projection onto the ball of radius `1 / sqrt(lambda)`.
//!
//! The bias is carried as the weight of a constant unit feature, so it is
//! regularized together with the other weights. At the end of every epoch
//! the current iterate is scored on the full objective and kept only if it
//! beats the best iterate so far.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SvmParams;
use crate::features::SparseVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub n_labels: usize,
    pub dim: usize,
    /// Row-major `n_labels x dim`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl SvmModel {
    /// Decision value `w . x + b` per label.
    pub fn scores(&self, x: &SparseVector) -> Vec<f64> {
        (0..self.n_labels)
            .map(|l| x.dot(&self.weights[l * self.dim..(l + 1) * self.dim]) + self.bias[l])
            .collect()
    }
}

/// Objective values recorded at the end of each epoch for one binary problem.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EpochTrace {
    /// Objective of the iterate reached at the end of the epoch.
    pub candidate: Vec<f64>,
    /// Objective of the iterate retained after the epoch.
    pub retained: Vec<f64>,
}

/// `lambda / 2 * ||w||^2 + mean(max(0, 1 - y (w . x + b)))`, bias included in `w`.
pub fn binary_objective(w: &[f64], b: f64, xs: &[SparseVector], signs: &[f64], lambda: f64) -> f64 {
    let hinge: f64 = xs
        .iter()
        .zip(signs)
        .map(|(x, &s)| (1.0 - s * (x.dot(w) + b)).max(0.0))
        .sum();
    let norm_sq = w.iter().map(|v| v * v).sum::<f64>() + b * b;
    0.5 * lambda * norm_sq + hinge / xs.len() as f64
}

/// Weight vector stored as `scale * v`, the last entry of `v` being the bias.
struct ScaledWeights {
    v: Vec<f64>,
    scale: f64,
    norm_sq: f64,
}

impl ScaledWeights {
    fn new(dim: usize) -> Self {
        ScaledWeights {
            v: vec![0.0; dim + 1],
            scale: 1.0,
            norm_sq: 0.0,
        }
    }

    fn bias_index(&self) -> usize {
        self.v.len() - 1
    }

    fn decision(&self, x: &SparseVector) -> f64 {
        self.scale * (x.dot(&self.v) + self.v[self.bias_index()])
    }

    fn shrink(&mut self, factor: f64) {
        if factor <= 0.0 {
            self.v.iter_mut().for_each(|x| *x = 0.0);
            self.scale = 1.0;
            self.norm_sq = 0.0;
        } else {
            self.scale *= factor;
            if self.scale < 1e-9 {
                self.fold_scale();
            }
        }
    }

    fn fold_scale(&mut self) {
        let s = self.scale;
        self.v.iter_mut().for_each(|x| *x *= s);
        self.norm_sq *= s * s;
        self.scale = 1.0;
    }

    /// `w += step * x` (with the constant bias feature).
    fn add(&mut self, x: &SparseVector, step: f64) {
        let c = step / self.scale;
        let bias = self.bias_index();
        for (i, xi) in x.pairs().chain(std::iter::once((bias, 1.0))) {
            let old = self.v[i];
            let new = old + c * xi;
            self.norm_sq += new * new - old * old;
            self.v[i] = new;
        }
    }

    fn norm(&self) -> f64 {
        self.scale * self.norm_sq.max(0.0).sqrt()
    }

    fn materialize(&self) -> (Vec<f64>, f64) {
        let bias = self.bias_index();
        let w = self.v[..bias].iter().map(|x| x * self.scale).collect();
        (w, self.v[bias] * self.scale)
    }
}

fn fit_binary(
    xs: &[SparseVector],
    signs: &[f64],
    dim: usize,
    params: &SvmParams,
    rng: &mut ChaCha8Rng,
) -> (Vec<f64>, f64, EpochTrace) {
    let lambda = params.lambda;
    let radius = 1.0 / lambda.sqrt();
    let mut state = ScaledWeights::new(dim);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut t = 0u64;

    let mut best_w = vec![0.0; dim];
    let mut best_b = 0.0;
    let mut best_obj = binary_objective(&best_w, best_b, xs, signs, lambda);
    let mut trace = EpochTrace::default();

    for _ in 0..params.epochs {
        order.shuffle(rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let margin = signs[i] * state.decision(&xs[i]);
            state.shrink(1.0 - eta * lambda);
            if margin < 1.0 {
                state.add(&xs[i], eta * signs[i]);
            }
            let norm = state.norm();
            if norm > radius {
                state.shrink(radius / norm);
            }
        }
        let (w, b) = state.materialize();
        let obj = binary_objective(&w, b, xs, signs, lambda);
        trace.candidate.push(obj);
        if obj < best_obj {
            best_obj = obj;
            best_w = w;
            best_b = b;
        }
        trace.retained.push(best_obj);
    }
    (best_w, best_b, trace)
}

/// Trains one binary problem per label; returns the model and per-label traces.
pub(crate) fn fit(
    xs: &[SparseVector],
    y: &[usize],
    n_labels: usize,
    dim: usize,
    params: &SvmParams,
    seed: u64,
) -> (SvmModel, Vec<EpochTrace>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = Vec::with_capacity(n_labels * dim);
    let mut bias = Vec::with_capacity(n_labels);
    let mut traces = Vec::with_capacity(n_labels);
    for label in 0..n_labels {
        let signs: Vec<f64> = y
            .iter()
            .map(|&l| if l == label { 1.0 } else { -1.0 })
            .collect();
        let (w, b, trace) = fit_binary(xs, &signs, dim, params, &mut rng);
        weights.extend(w);
        bias.push(b);
        traces.push(trace);
    }
    (
        SvmModel {
            n_labels,
            dim,
            weights,
            bias,
        },
        traces,
    )
}

/// Like [`super::train_svm`] but also returns the per-label epoch traces.
pub fn train_with_trace<S: AsRef<str>>(
    xs: &[SparseVector],
    y: &[S],
    h: &super::Hyperparams,
) -> crate::Result<(super::TrainedLearner, Vec<EpochTrace>)> {
    let dim = super::check_inputs(xs, y)?;
    let (labels, idx) = super::encode_labels(y);
    super::require_two_labels(&labels, "SVM")?;
    let (m, traces) = fit(xs, &idx, labels.len(), dim, &h.svm, h.seed);
    Ok((super::finish(labels, dim, super::Model::Svm(m), h), traces))
}

#[cfg(test)]
mod tests {
    use super::super::{train_svm, Hyperparams};
    use super::*;
    use rand::Rng;

    fn disjoint_toy() -> (Vec<SparseVector>, Vec<&'static str>) {
        let mut xs = Vec::new();
        let mut y = Vec::new();
        for i in 0..6 {
            let mut d = [0.0; 6];
            let off = if i % 2 == 0 { 0 } else { 3 };
            d[off + i % 3] = 1.0;
            d[off + (i + 1) % 3] = 2.0;
            let n = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            xs.push(SparseVector::from_dense(&d.iter().map(|v| v / n).collect::<Vec<_>>()));
            y.push(if off == 0 { "a" } else { "b" });
        }
        (xs, y)
    }

    #[test]
    fn separable_toy_is_fit_exactly() {
        let (xs, y) = disjoint_toy();
        let m = train_svm(&xs, &y, &Hyperparams::default()).unwrap();
        for (x, gold) in xs.iter().zip(&y) {
            assert_eq!(m.predict(x).unwrap().label, *gold);
        }
    }

    #[test]
    fn retained_objective_never_increases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<_> = (0..40)
            .map(|_| SparseVector::from_dense(&(0..5).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<_>>()))
            .collect();
        let y: Vec<_> = (0..40).map(|_| ["a", "b", "c"][rng.gen_range(0..3)]).collect();
        let (_, traces) = train_with_trace(&xs, &y, &Hyperparams::default()).unwrap();
        for trace in traces {
            assert_eq!(trace.retained.len(), 50);
            for w in trace.retained.windows(2) {
                assert!(w[1] <= w[0] + 1e-6);
            }
        }
    }

    #[test]
    fn duplicated_training_set_keeps_decisions() {
        let (xs, y) = disjoint_toy();
        let h = Hyperparams::default();
        let single = train_svm(&xs, &y, &h).unwrap();
        let xs2: Vec<_> = xs.iter().chain(&xs).cloned().collect();
        let y2: Vec<_> = y.iter().chain(&y).copied().collect();
        let double = train_svm(&xs2, &y2, &h).unwrap();
        for x in &xs {
            let a = single.predict(x).unwrap();
            let b = double.predict(x).unwrap();
            assert_eq!(a.label, b.label);
            for (sa, sb) in a.scores.iter().zip(&b.scores) {
                assert_eq!(sa.signum(), sb.signum());
            }
        }
    }

    #[test]
    fn scaled_weights_match_dense_update() {
        let mut s = ScaledWeights::new(3);
        let x = SparseVector::from_dense(&[1.0, 0.0, 2.0]);
        s.add(&x, 0.5);
        s.shrink(0.5);
        s.add(&x, 1.0);
        let (w, b) = s.materialize();
        assert_eq!(w, [1.25, 0.0, 2.5]);
        assert_eq!(b, 1.25);
        let expected = (1.25f64 * 1.25 + 2.5 * 2.5 + 1.25 * 1.25).sqrt();
        assert!((s.norm() - expected).abs() < 1e-12);
    }
}
