use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalerKind {
    /// `(x - mean) / std`, population std.
    ZScore,
    /// `(x - min) / (max - min)`.
    MinMax,
}

/// Fitted per-column statistics. For z-score `offset` is the mean and
/// `spread` the std; for min-max they are the min and `max - min`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub kind: ScalerKind,
    pub offset: Vec<f64>,
    pub spread: Vec<f64>,
    /// Columns with zero spread; they map to 0.
    pub degenerate: Vec<bool>,
}

impl ScalerParams {
    pub fn width(&self) -> usize {
        self.offset.len()
    }
}

pub fn fit_scaler(train: &Array2<f64>, kind: ScalerKind) -> Result<ScalerParams> {
    if train.nrows() == 0 {
        return Err(Error::Usage("cannot fit a scaler on zero rows".into()));
    }
    let (offset, spread): (Vec<f64>, Vec<f64>) = train
        .axis_iter(Axis(1))
        .map(|col| match kind {
            ScalerKind::ZScore => {
                let n = col.len() as f64;
                let mean = col.sum() / n;
                let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                (mean, var.sqrt())
            }
            ScalerKind::MinMax => {
                let min = col.iter().copied().fold(f64::INFINITY, f64::min);
                let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (min, max - min)
            }
        })
        .unzip();
    let degenerate = spread.iter().map(|&s| s == 0.0).collect();
    Ok(ScalerParams {
        kind,
        offset,
        spread,
        degenerate,
    })
}

pub fn apply_scaler(params: &ScalerParams, rows: &Array2<f64>) -> Result<Array2<f64>> {
    if rows.ncols() != params.width() {
        return Err(Error::Shape(format!(
            "scaler fitted on {} columns, got {}",
            params.width(),
            rows.ncols()
        )));
    }
    let mut out = rows.clone();
    for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
        if params.degenerate[j] {
            col.fill(0.0);
        } else {
            let (o, s) = (params.offset[j], params.spread[j]);
            col.mapv_inplace(|x| (x - o) / s);
        }
    }
    Ok(out)
}

/// Stateful wrapper; transforming before fitting is a usage error.
#[derive(Debug, Clone)]
pub struct Scaler {
    kind: ScalerKind,
    params: Option<ScalerParams>,
}

impl Scaler {
    pub fn new(kind: ScalerKind) -> Self {
        Self { kind, params: None }
    }

    pub fn fit(&mut self, train: &Array2<f64>) -> Result<&ScalerParams> {
        Ok(self.params.insert(fit_scaler(train, self.kind)?))
    }

    pub fn transform(&self, rows: &Array2<f64>) -> Result<Array2<f64>> {
        let params = self
            .params
            .as_ref()
            .ok_or_else(|| Error::Usage("scaler applied before fit".into()))?;
        apply_scaler(params, rows)
    }

    pub fn params(&self) -> Option<&ScalerParams> {
        self.params.as_ref()
    }
}
