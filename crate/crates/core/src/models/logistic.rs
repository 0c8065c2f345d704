//! L2-regularized logistic regression fitted by maximum likelihood.
//!
//! Two classes use a single sigmoid output; more classes use one
//! multinomial softmax layer. The objective minimized is
//! `mean cross-entropy + ||W||^2 / (2 C n)` (intercepts unpenalized),
//! which is the usual `C`-weighted formulation divided by `C n`.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::TrainSet;
use crate::error::{Error, Result};
use crate::scores::{sigmoid, softmax_rows};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    /// Inverse regularization strength.
    pub c: f64,
    /// Initial (and largest) gradient step; backtracking shrinks it.
    pub learning_rate: f64,
    pub max_iter: usize,
    /// Stop once the gradient norm falls below this.
    pub tol: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            learning_rate: 1.0,
            max_iter: 5000,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    /// One row per output: a single row for two classes, else one per class.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl LogisticModel {
    pub fn is_binary(&self) -> bool {
        self.weights.nrows() == 1
    }

    /// Linear outputs `W x + b`, one row per sample.
    pub fn decision_function(&self, rows: ArrayView2<'_, f64>) -> Array2<f64> {
        rows.dot(&self.weights.t()) + &self.bias
    }

    pub(crate) fn scores(&self, rows: ArrayView2<'_, f64>) -> Array2<f64> {
        let z = self.decision_function(rows);
        if self.is_binary() {
            let mut out = Array2::zeros((rows.nrows(), 2));
            for (i, &zi) in z.column(0).iter().enumerate() {
                let p = sigmoid(zi);
                out[[i, 0]] = 1.0 - p;
                out[[i, 1]] = p;
            }
            out
        } else {
            let mut out = z;
            softmax_rows(&mut out);
            out
        }
    }

    pub fn weight_norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

struct Objective<'a> {
    data: TrainSet<'a>,
    penalty: f64,
    binary: bool,
}

impl Objective<'_> {
    fn value(&self, w: &Array2<f64>, b: &Array1<f64>) -> f64 {
        let n = self.data.n_rows() as f64;
        let z = self.data.x.dot(&w.t()) + b;
        let ce: f64 = if self.binary {
            z.column(0)
                .iter()
                .zip(self.data.y)
                .map(|(&zi, &yi)| softplus(zi) - if yi == 1 { zi } else { 0.0 })
                .sum()
        } else {
            z.axis_iter(Axis(0))
                .zip(self.data.y)
                .map(|(row, &yi)| {
                    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
                    lse - row[yi]
                })
                .sum()
        };
        ce / n + 0.5 * self.penalty * w.iter().map(|v| v * v).sum::<f64>()
    }

    fn gradient(&self, w: &Array2<f64>, b: &Array1<f64>) -> (Array2<f64>, Array1<f64>) {
        let n = self.data.n_rows() as f64;
        let mut resid = self.data.x.dot(&w.t()) + b;
        if self.binary {
            for (r, &yi) in resid.column_mut(0).iter_mut().zip(self.data.y) {
                *r = sigmoid(*r) - if yi == 1 { 1.0 } else { 0.0 };
            }
        } else {
            softmax_rows(&mut resid);
            for (mut row, &yi) in resid.axis_iter_mut(Axis(0)).zip(self.data.y) {
                row[yi] -= 1.0;
            }
        }
        resid /= n;
        let gw = resid.t().dot(&self.data.x) + &(w * self.penalty);
        let gb = resid.sum_axis(Axis(0));
        (gw, gb)
    }
}

pub fn train_logistic(data: &TrainSet<'_>, params: &LogisticParams) -> Result<LogisticModel> {
    if !(params.c > 0.0) || !(params.learning_rate > 0.0) {
        return Err(Error::Config(
            "logistic regression needs C > 0 and learning_rate > 0".into(),
        ));
    }
    let binary = data.class_count == 2;
    let outputs = if binary { 1 } else { data.class_count };
    let d = data.n_features();
    let obj = Objective {
        data: *data,
        penalty: 1.0 / (params.c * data.n_rows() as f64),
        binary,
    };

    let mut w = Array2::<f64>::zeros((outputs, d));
    let mut b = Array1::<f64>::zeros(outputs);
    let mut step = params.learning_rate;
    let mut value = obj.value(&w, &b);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < params.max_iter {
        if !value.is_finite() {
            return Err(Error::Divergence(format!(
                "logistic loss became non-finite (learning rate {})",
                params.learning_rate
            )));
        }
        let (gw, gb) = obj.gradient(&w, &b);
        let sq_norm = gw.iter().chain(gb.iter()).map(|g| g * g).sum::<f64>();
        if sq_norm.sqrt() < params.tol {
            converged = true;
            break;
        }
        iterations += 1;
        // Armijo backtracking.
        loop {
            let w_next = &w - &(&gw * step);
            let b_next = &b - &(&gb * step);
            let next = obj.value(&w_next, &b_next);
            if next.is_finite() && next <= value - 0.5 * step * sq_norm {
                w = w_next;
                b = b_next;
                value = next;
                break;
            }
            step *= 0.5;
            if step < 1e-18 {
                // No descent possible at machine precision.
                converged = true;
                break;
            }
        }
        if converged {
            break;
        }
        step = (step * 2.0).min(params.learning_rate);
    }
    if !converged {
        log::debug!("logistic regression stopped at the {} iteration cap", params.max_iter);
    }
    Ok(LogisticModel {
        weights: w,
        bias: b,
        iterations,
        converged,
    })
}
