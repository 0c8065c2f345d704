//! Discrete AdaBoost over decision stumps for two classes.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::TrainSet;
use crate::error::{Error, Result};
use crate::scores::softmax_in_place;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostParams {
    pub n_estimators: usize,
    /// Multiplier on every stump's say.
    pub learning_rate: f64,
}

impl Default for AdaBoostParams {
    fn default() -> Self {
        Self {
            n_estimators: 200,
            learning_rate: 0.01,
        }
    }
}

/// A depth-one rule. `feature: None` predicts `above` everywhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature: Option<usize>,
    pub threshold: f64,
    /// Class for `x > threshold`; the other class is predicted otherwise.
    pub above: usize,
}

impl Stump {
    pub fn predict(&self, x: ArrayView1<'_, f64>) -> usize {
        match self.feature {
            None => self.above,
            Some(f) if x[f] > self.threshold => self.above,
            Some(_) => 1 - self.above,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoost {
    pub stumps: Vec<Stump>,
    /// Say of each stump.
    pub alphas: Vec<f64>,
    /// Weighted training error of each stump when it was chosen.
    pub errors: Vec<f64>,
}

impl AdaBoost {
    /// Per-class totals of the stumps' say.
    pub fn votes(&self, x: ArrayView1<'_, f64>) -> [f64; 2] {
        let mut v = [0.0; 2];
        for (s, &a) in self.stumps.iter().zip(&self.alphas) {
            v[s.predict(x)] += a;
        }
        v
    }

    /// Softmax of the vote totals.
    pub(crate) fn scores(&self, rows: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut out = Array2::zeros((rows.nrows(), 2));
        for (i, x) in rows.axis_iter(Axis(0)).enumerate() {
            let mut v = self.votes(x);
            softmax_in_place(&mut v);
            out[[i, 0]] = v[0];
            out[[i, 1]] = v[1];
        }
        out
    }

    /// Ensemble built from the first `rounds` stumps.
    pub fn truncated(&self, rounds: usize) -> AdaBoost {
        let r = rounds.min(self.stumps.len());
        AdaBoost {
            stumps: self.stumps[..r].to_vec(),
            alphas: self.alphas[..r].to_vec(),
            errors: self.errors[..r].to_vec(),
        }
    }
}

/// Largest single-stump say before the learning rate, used when a stump
/// makes no weighted error.
const PERFECT_SAY: f64 = 1e10;

pub fn train_adaboost(data: &TrainSet<'_>, params: &AdaBoostParams) -> Result<AdaBoost> {
    if data.class_count != 2 {
        return Err(Error::Config("AdaBoost is only configured for the binary task".into()));
    }
    if !(params.learning_rate > 0.0) {
        return Err(Error::Config("AdaBoost learning_rate must be > 0".into()));
    }
    let n = data.n_rows();
    let sorted: Vec<Vec<usize>> = (0..data.n_features())
        .map(|f| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| data.x[[a, f]].total_cmp(&data.x[[b, f]]));
            idx
        })
        .collect();

    let mut weights = vec![1.0 / n as f64; n];
    let mut model = AdaBoost {
        stumps: Vec::new(),
        alphas: Vec::new(),
        errors: Vec::new(),
    };
    for round in 0..params.n_estimators {
        let (stump, eps) = best_stump(data, &sorted, &weights);
        if eps >= 0.5 {
            log::debug!("adaboost stopped at round {round}: weighted error {eps:.4}");
            break;
        }
        let alpha = if eps <= 0.0 {
            params.learning_rate * 0.5 * PERFECT_SAY.ln()
        } else {
            params.learning_rate * 0.5 * ((1.0 - eps) / eps).ln()
        };
        for (i, w) in weights.iter_mut().enumerate() {
            let wrong = stump.predict(data.x.row(i)) != data.y[i];
            *w *= if wrong { alpha.exp() } else { (-alpha).exp() };
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        model.stumps.push(stump);
        model.alphas.push(alpha);
        model.errors.push(eps);
    }
    Ok(model)
}

/// Minimum weighted-error stump over every midpoint of every feature, both
/// orientations, and the two constant rules. Earlier candidates win ties.
fn best_stump(data: &TrainSet<'_>, sorted: &[Vec<usize>], weights: &[f64]) -> (Stump, f64) {
    let total_pos: f64 = data
        .y
        .iter()
        .zip(weights)
        .filter(|(&y, _)| y == 1)
        .map(|(_, w)| w)
        .sum();
    let total: f64 = weights.iter().sum();
    let total_neg = total - total_pos;

    let mut best = (
        Stump {
            feature: None,
            threshold: 0.0,
            above: usize::from(total_pos > total_neg),
        },
        total_pos.min(total_neg),
    );
    for (f, idx) in sorted.iter().enumerate() {
        // Weight of positives / negatives at or below the current cut.
        let (mut pos_below, mut neg_below) = (0.0, 0.0);
        for p in 0..idx.len() - 1 {
            let r = idx[p];
            if data.y[r] == 1 {
                pos_below += weights[r];
            } else {
                neg_below += weights[r];
            }
            let (lo, hi) = (data.x[[r, f]], data.x[[idx[p + 1], f]]);
            if lo == hi {
                continue;
            }
            // above = 1: errors are positives below and negatives above.
            let err_up = pos_below + (total_neg - neg_below);
            let err_down = total - err_up;
            let (above, err) = if err_up <= err_down { (1, err_up) } else { (0, err_down) };
            if err < best.1 {
                let mid = lo + (hi - lo) / 2.0;
                best = (
                    Stump {
                        feature: Some(f),
                        threshold: if mid < hi { mid } else { lo },
                        above,
                    },
                    err,
                );
            }
        }
    }
    (best.0, (best.1 / total).max(0.0))
}
