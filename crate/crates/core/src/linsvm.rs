//! Linear soft-margin SVM trained with Pegasos (stochastic subgradient
//! descent on the primal) over z-scored features.
//!
//! The bias is treated as the weight of a constant input and is regularized
//! together with `w`. Scores are raw margins `w·z + b`; the hard decision
//! threshold is tuned elsewhere.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::trajdata::Label;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    /// Regularization strength of `lambda/2 * |w|^2`.
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            lambda: 0.01,
            epochs: 20,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub mean: Vec<f64>,
    /// Training standard deviations; constant columns get 1 and weight 0.
    pub scale: Vec<f64>,
}

impl SvmModel {
    pub fn standardize(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((x, m), s)| (x - m) / s)
            .collect()
    }

    pub fn score(&self, row: &[f64]) -> f64 {
        let z = row
            .iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .zip(&self.weights)
            .map(|(((x, m), s), w)| w * ((x - m) / s))
            .sum::<f64>();
        z + self.bias
    }
}

fn signed(y: Label) -> f64 {
    if y.is_positive() {
        1.0
    } else {
        -1.0
    }
}

/// Column means and population standard deviations.
fn column_stats(x: &Matrix) -> (Vec<f64>, Vec<f64>) {
    let n = x.n_rows() as f64;
    let mut mean = vec![0.0; x.n_cols()];
    for row in x.rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; x.n_cols()];
    for row in x.rows() {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let scale = var
        .into_iter()
        .map(|s| {
            let sd = (s / n).sqrt();
            if sd > 1e-12 {
                sd
            } else {
                1.0
            }
        })
        .collect();
    (mean, scale)
}

/// `lambda/2 (|w|^2 + b^2) + mean hinge loss` on standardized rows.
pub fn objective(model: &SvmModel, x: &Matrix, y: &[Label], lambda: f64) -> f64 {
    let reg = model.weights.iter().map(|w| w * w).sum::<f64>() + model.bias * model.bias;
    let hinge: f64 = x
        .rows()
        .zip(y)
        .map(|(row, &l)| (1.0 - signed(l) * model.score(row)).max(0.0))
        .sum();
    0.5 * lambda * reg + hinge / x.n_rows() as f64
}

/// Subgradient of the single-example objective at augmented weights
/// `w_aug = (w, b)` and augmented input `x_aug = (z, 1)`.
pub fn subgradient(w_aug: &[f64], x_aug: &[f64], y: f64, lambda: f64) -> Vec<f64> {
    let margin = y * w_aug.iter().zip(x_aug).map(|(w, x)| w * x).sum::<f64>();
    w_aug
        .iter()
        .zip(x_aug)
        .map(|(w, x)| if margin < 1.0 { lambda * w - y * x } else { lambda * w })
        .collect()
}

pub fn fit_pegasos(x: &Matrix, y: &[Label], params: &SvmParams) -> Result<SvmModel> {
    if x.n_rows() != y.len() {
        return Err(Error::LengthMismatch(x.n_rows(), y.len()));
    }
    if !y.iter().any(|l| l.is_positive()) || y.iter().all(|l| l.is_positive()) {
        return Err(Error::DegenerateLabels("SVM needs both classes".into()));
    }
    if !(params.lambda > 0.0) || params.epochs == 0 {
        return Err(Error::Config("svm lambda must be > 0 and epochs >= 1".into()));
    }
    let (mean, scale) = column_stats(x);
    let d = x.n_cols();
    let constant: Vec<bool> = scale
        .iter()
        .zip(0..d)
        .map(|(&s, j)| s == 1.0 && (0..x.n_rows()).all(|i| x.get(i, j) == mean[j]))
        .collect();
    let z: Vec<Vec<f64>> = x
        .rows()
        .map(|row| {
            let mut v: Vec<f64> = row
                .iter()
                .zip(&mean)
                .zip(&scale)
                .map(|((x, m), s)| (x - m) / s)
                .collect();
            v.push(1.0);
            v
        })
        .collect();
    let ys: Vec<f64> = y.iter().map(|&l| signed(l)).collect();

    let lambda = params.lambda;
    let radius = 1.0 / lambda.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut w = vec![0.0; d + 1];
    let mut avg = vec![0.0; d + 1];
    let mut order: Vec<usize> = (0..z.len()).collect();
    let mut t = 0usize;
    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let margin = ys[i] * w.iter().zip(&z[i]).map(|(a, b)| a * b).sum::<f64>();
            let shrink = 1.0 - eta * lambda;
            if margin < 1.0 {
                for (wj, zj) in w.iter_mut().zip(&z[i]) {
                    *wj = shrink * *wj + eta * ys[i] * zj;
                }
            } else {
                w.iter_mut().for_each(|wj| *wj *= shrink);
            }
            let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > radius {
                let f = radius / norm;
                w.iter_mut().for_each(|v| *v *= f);
            }
            // running mean of the iterates
            let k = 1.0 / t as f64;
            for (a, v) in avg.iter_mut().zip(&w) {
                *a += (v - *a) * k;
            }
        }
    }
    let bias = avg[d];
    let mut weights = avg;
    weights.truncate(d);
    for (wj, &c) in weights.iter_mut().zip(&constant) {
        if c {
            *wj = 0.0;
        }
    }
    Ok(SvmModel {
        weights,
        bias,
        mean,
        scale,
    })
}
