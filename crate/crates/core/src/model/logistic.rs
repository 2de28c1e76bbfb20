//! L2-regularised logistic regression trained by full-batch gradient descent.
//!
//! Features are standardised by training-set mean and standard deviation
//! before optimisation; a zero-variance feature gets scale 0, dropping it to
//! a constant. Weights start at zero, so training is deterministic.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub learning_rate: f64,
    pub iterations: usize,
    /// L2 penalty strength on the weights (never the bias).
    pub l2: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams {
            learning_rate: 0.5,
            iterations: 300,
            l2: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LogisticModel<T: Scalar> {
    pub weights: Vec<T>,
    pub bias: T,
    /// Per-feature training means.
    pub means: Vec<T>,
    /// Per-feature `1 / std`; zero for constant features.
    pub scales: Vec<T>,
}

pub fn sigmoid<T: Scalar>(z: T) -> T {
    T::one() / (T::one() + (-z).exp())
}

impl<T: Scalar> LogisticModel<T> {
    pub fn fit(rows: &[Vec<T>], labels: &[bool], params: &LogisticParams) -> Self {
        assert_eq!(rows.len(), labels.len());
        assert!(!rows.is_empty(), "cannot fit on zero rows");
        let n_features = rows[0].len();
        let (means, scales) = standardisation(rows, n_features);
        let standardised: Vec<Vec<T>> = rows
            .iter()
            .map(|row| {
                row.iter()
                    .zip(means.iter().zip(&scales))
                    .map(|(&x, (&m, &s))| (x - m) * s)
                    .collect()
            })
            .collect();

        let lr = T::from_f64_lossy(params.learning_rate);
        let l2 = T::from_f64_lossy(params.l2);
        let mut weights = vec![T::zero(); n_features];
        let mut bias = T::zero();
        for _ in 0..params.iterations {
            let (grad_w, grad_b) = gradient(&standardised, labels, &weights, bias, l2);
            for (w, g) in weights.iter_mut().zip(&grad_w) {
                *w = *w - lr * *g;
            }
            bias = bias - lr * grad_b;
        }
        LogisticModel {
            weights,
            bias,
            means,
            scales,
        }
    }

    /// Probability of the positive class for a raw (unstandardised) row.
    pub fn predict_proba(&self, row: &[T]) -> T {
        let z = row
            .iter()
            .zip(self.means.iter().zip(&self.scales))
            .zip(&self.weights)
            .fold(self.bias, |acc, ((&x, (&m, &s)), &w)| acc + w * (x - m) * s);
        sigmoid(z)
    }
}

fn standardisation<T: Scalar>(rows: &[Vec<T>], n_features: usize) -> (Vec<T>, Vec<T>) {
    let n = T::from_usize_lossy(rows.len());
    let mut means = vec![T::zero(); n_features];
    for row in rows {
        for (m, &x) in means.iter_mut().zip(row) {
            *m = *m + x;
        }
    }
    for m in &mut means {
        *m = *m / n;
    }
    let mut variances = vec![T::zero(); n_features];
    for row in rows {
        for ((v, &x), &m) in variances.iter_mut().zip(row).zip(&means) {
            let d = x - m;
            *v = *v + d * d;
        }
    }
    let scales = variances
        .into_iter()
        .map(|v| {
            let std = (v / n).sqrt();
            if std > T::zero() {
                T::one() / std
            } else {
                T::zero()
            }
        })
        .collect();
    (means, scales)
}

/// Mean cross-entropy plus `0.5 * l2 * ||w||²` over standardised rows.
pub fn loss<T: Scalar>(rows: &[Vec<T>], labels: &[bool], weights: &[T], bias: T, l2: T) -> T {
    let eps = T::from_f64_lossy(1e-12);
    let one = T::one();
    let mut total = T::zero();
    for (row, &label) in rows.iter().zip(labels) {
        let z = row
            .iter()
            .zip(weights)
            .fold(bias, |acc, (&x, &w)| acc + w * x);
        let p = sigmoid(z).max(eps).min(one - eps);
        total = total - if label { p.ln() } else { (one - p).ln() };
    }
    let penalty = weights.iter().map(|&w| w * w).sum::<T>()
        * T::from_f64_lossy(0.5)
        * l2;
    total / T::from_usize_lossy(rows.len()) + penalty
}

/// Analytic gradient of [`loss`] at (`weights`, `bias`).
pub fn gradient<T: Scalar>(
    rows: &[Vec<T>],
    labels: &[bool],
    weights: &[T],
    bias: T,
    l2: T,
) -> (Vec<T>, T) {
    let n = T::from_usize_lossy(rows.len());
    let mut grad_w = vec![T::zero(); weights.len()];
    let mut grad_b = T::zero();
    for (row, &label) in rows.iter().zip(labels) {
        let z = row
            .iter()
            .zip(weights)
            .fold(bias, |acc, (&x, &w)| acc + w * x);
        let err = sigmoid(z) - if label { T::one() } else { T::zero() };
        for (g, &x) in grad_w.iter_mut().zip(row) {
            *g = *g + err * x;
        }
        grad_b = grad_b + err;
    }
    for (g, &w) in grad_w.iter_mut().zip(weights) {
        *g = *g / n + l2 * w;
    }
    (grad_w, grad_b / n)
}
