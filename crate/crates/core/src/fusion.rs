//! Weighted score-level fusion of two classifiers.
//!
//! `D_f = w1 * D_1 + w2 * D_2` with `w1 + w2 = 1`, the weights picked from a
//! fixed 19-point grid by accuracy of the fused argmax decision.

use ndarray::{Array2, ArrayView1, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::ModelKind;
use crate::scores::ScoreMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionWeights {
    pub w1: f64,
    pub w2: f64,
}

impl FusionWeights {
    /// `w2` is set to `1 - w1`.
    pub fn new(w1: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&w1) {
            return Err(Error::Fusion(format!("weight {w1} outside [0, 1]")));
        }
        Ok(Self { w1, w2: 1.0 - w1 })
    }

    pub fn swapped(self) -> Self {
        Self {
            w1: self.w2,
            w2: self.w1,
        }
    }
}

/// Ordered candidate weights; earlier entries win ties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightGrid {
    entries: Vec<FusionWeights>,
}

impl WeightGrid {
    /// `w1 = 0.95, 0.90, ..., 0.05`.
    pub fn standard() -> Self {
        Self {
            entries: (0..19)
                .map(|i| {
                    let w1 = f64::from(95 - 5 * i) / 100.0;
                    FusionWeights { w1, w2: 1.0 - w1 }
                })
                .collect(),
        }
    }

    pub fn new(entries: Vec<FusionWeights>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Fusion("weight grid is empty".into()));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[FusionWeights] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl Default for WeightGrid {
    fn default() -> Self {
        Self::standard()
    }
}

/// Elementwise convex blend. Each entry is clamped to the interval spanned
/// by its two inputs so rounding never leaves it.
pub fn fuse(d1: &ScoreMatrix, d2: &ScoreMatrix, w: FusionWeights) -> Result<ScoreMatrix> {
    let (a, b) = (d1.as_array(), d2.as_array());
    if a.dim() != b.dim() {
        return Err(Error::Fusion(format!(
            "score shapes differ: {:?} vs {:?}",
            a.dim(),
            b.dim()
        )));
    }
    let mut out = Array2::zeros(a.dim());
    Zip::from(&mut out).and(a).and(b).for_each(|o, &x, &y| {
        *o = (w.w1 * x + w.w2 * y).clamp(x.min(y), x.max(y));
    });
    Ok(ScoreMatrix::from_trusted(out))
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(row: ArrayView1<'_, f64>) -> usize {
    let mut best = 0;
    for (k, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = k;
        }
    }
    best
}

/// Per-row predicted class.
pub fn decide(scores: &ScoreMatrix) -> Vec<usize> {
    (0..scores.n_rows()).map(|i| argmax(scores.row(i))).collect()
}

fn correct(pred: &[usize], truth: &[usize]) -> usize {
    pred.iter().zip(truth).filter(|(p, t)| p == t).count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub weights: FusionWeights,
    /// Fraction of rows classified correctly.
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearch {
    pub best: FusionWeights,
    pub best_accuracy: f64,
    pub sweep: Vec<SweepPoint>,
}

/// Evaluates every grid point and keeps the most accurate; ties go to the
/// earliest entry.
pub fn grid_search(
    d1: &ScoreMatrix,
    d2: &ScoreMatrix,
    truth: &[usize],
    grid: &WeightGrid,
) -> Result<(GridSearch, ScoreMatrix)> {
    if truth.len() != d1.n_rows() {
        return Err(Error::Fusion(format!(
            "{} labels for {} score rows",
            truth.len(),
            d1.n_rows()
        )));
    }
    if truth.is_empty() {
        return Err(Error::Fusion("cannot search weights on zero rows".into()));
    }
    let mut sweep = Vec::with_capacity(grid.len());
    let mut best: Option<(usize, usize, ScoreMatrix)> = None;
    for (i, &w) in grid.entries().iter().enumerate() {
        let fused = fuse(d1, d2, w)?;
        let hits = correct(&decide(&fused), truth);
        sweep.push(SweepPoint {
            weights: w,
            accuracy: hits as f64 / truth.len() as f64,
        });
        if best.as_ref().map_or(true, |(_, h, _)| hits > *h) {
            best = Some((i, hits, fused));
        }
    }
    let (i, _, fused) = best.expect("grid is non-empty");
    Ok((
        GridSearch {
            best: grid.entries()[i],
            best_accuracy: sweep[i].accuracy,
            sweep,
        },
        fused,
    ))
}

/// Fused scores with their provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedScores {
    pub members: (ModelKind, ModelKind),
    pub weights: FusionWeights,
    pub scores: ScoreMatrix,
}
