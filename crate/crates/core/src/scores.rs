use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on row sums of a decision-score matrix.
pub const ROW_SUM_TOL: f64 = 1e-9;

/// Per-sample probability vectors over classes; every row sums to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScoreMatrix(Array2<f64>);

impl ScoreMatrix {
    /// Validates that entries lie in `[0, 1]` and rows sum to 1.
    pub fn new(scores: Array2<f64>) -> Result<Self> {
        for (i, row) in scores.axis_iter(Axis(0)).enumerate() {
            if row.iter().any(|&p| !(-1e-12..=1.0 + 1e-12).contains(&p)) {
                return Err(Error::Shape(format!("row {i} has an entry outside [0, 1]")));
            }
            let sum = row.sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::Shape(format!("row {i} sums to {sum}")));
            }
        }
        Ok(Self(scores))
    }

    /// Divides each row by its sum. All-zero rows become uniform.
    pub fn normalized(mut raw: Array2<f64>) -> Self {
        let k = raw.ncols().max(1) as f64;
        for mut row in raw.axis_iter_mut(Axis(0)) {
            let sum = row.sum();
            if sum > 0.0 && sum.is_finite() {
                row.mapv_inplace(|p| p / sum);
            } else {
                row.fill(1.0 / k);
            }
        }
        Self(raw)
    }

    pub(crate) fn from_trusted(scores: Array2<f64>) -> Self {
        Self(scores)
    }

    pub fn n_rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn class_count(&self) -> usize {
        self.0.ncols()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.0.row(i)
    }

    pub fn column(&self, k: usize) -> ArrayView1<'_, f64> {
        self.0.column(k)
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_array(self) -> Array2<f64> {
        self.0
    }
}

/// Numerically stable softmax of one row, in place.
pub(crate) fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

/// Row-wise softmax regardless of memory layout.
pub(crate) fn softmax_rows(m: &mut Array2<f64>) {
    let mut buf = Vec::with_capacity(m.ncols());
    for mut row in m.axis_iter_mut(ndarray::Axis(0)) {
        buf.clear();
        buf.extend(row.iter().copied());
        softmax_in_place(&mut buf);
        row.iter_mut().zip(&buf).for_each(|(v, &b)| *v = b);
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn rejects_unnormalized_rows() {
        assert!(ScoreMatrix::new(array![[0.6, 0.6]]).is_err());
        assert!(ScoreMatrix::new(array![[1.2, -0.2]]).is_err());
        assert!(ScoreMatrix::new(array![[0.25, 0.75]]).is_ok());
    }

    #[test]
    fn normalized_handles_zero_rows() {
        let s = ScoreMatrix::normalized(array![[0.0, 0.0], [1.0, 3.0]]);
        assert_eq!(s.row(0).to_vec(), vec![0.5, 0.5]);
        assert_eq!(s.row(1).to_vec(), vec![0.25, 0.75]);
    }

    #[test]
    fn softmax_is_stable_for_large_inputs() {
        let mut r = [1000.0, 1000.0];
        softmax_in_place(&mut r);
        assert_eq!(r, [0.5, 0.5]);
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
    }
}
