//! One-hidden-layer perceptron: sigmoid hidden units, softmax output,
//! cross-entropy plus an L2 weight penalty, trained by mini-batch SGD.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::TrainSet;
use crate::error::{Error, Result};
use crate::scores::{sigmoid, softmax_rows};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    /// Plain mini-batch stochastic gradient descent.
    Sgd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub hidden_units: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    pub batch_size: usize,
    pub epochs: usize,
    /// Coefficient of `sum w^2` over both weight matrices (biases excluded).
    pub l2: f64,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self {
            hidden_units: 8,
            learning_rate: 0.01,
            optimizer: Optimizer::Sgd,
            batch_size: 10,
            epochs: 15,
            l2: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    /// `hidden x inputs`.
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    /// `classes x hidden`.
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    pub l2: f64,
}

/// Parameter gradients, same shapes as the network.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradient {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

impl Mlp {
    /// Weights uniform in `(-0.5, 0.5) / sqrt(fan_in)`, biases zero.
    pub fn init(inputs: usize, hidden: usize, classes: usize, l2: f64, seed: u64) -> Self {
        let mut rng = seed::rng(seed);
        let mut draw = |rows: usize, fan_in: usize| {
            let scale = 1.0 / (fan_in as f64).sqrt();
            Array2::from_shape_simple_fn((rows, fan_in), || (rng.gen::<f64>() - 0.5) * scale)
        };
        let w1 = draw(hidden, inputs);
        let w2 = draw(classes, hidden);
        Self {
            w1,
            b1: Array1::zeros(hidden),
            w2,
            b2: Array1::zeros(classes),
            l2,
        }
    }

    fn hidden(&self, rows: ArrayView2<'_, f64>) -> Array2<f64> {
        (rows.dot(&self.w1.t()) + &self.b1).mapv(sigmoid)
    }

    fn output(&self, hidden: &Array2<f64>) -> Array2<f64> {
        let mut out = hidden.dot(&self.w2.t()) + &self.b2;
        softmax_rows(&mut out);
        out
    }

    pub(crate) fn scores(&self, rows: ArrayView2<'_, f64>) -> Array2<f64> {
        self.output(&self.hidden(rows))
    }

    /// Mean cross-entropy over the rows plus the L2 penalty.
    pub fn loss(&self, rows: ArrayView2<'_, f64>, y: &[usize]) -> f64 {
        let p = self.scores(rows);
        let ce: f64 = y
            .iter()
            .enumerate()
            .map(|(i, &l)| -p[[i, l]].max(f64::MIN_POSITIVE).ln())
            .sum();
        ce / y.len() as f64 + self.penalty()
    }

    fn penalty(&self) -> f64 {
        self.l2 * (self.w1.iter().chain(self.w2.iter()).map(|w| w * w).sum::<f64>())
    }

    /// Backpropagated gradient of [`Mlp::loss`].
    pub fn gradient(&self, rows: ArrayView2<'_, f64>, y: &[usize]) -> MlpGradient {
        let n = y.len() as f64;
        let h = self.hidden(rows);
        let mut delta2 = self.output(&h);
        for (mut row, &l) in delta2.axis_iter_mut(Axis(0)).zip(y) {
            row[l] -= 1.0;
        }
        delta2 /= n;
        let gw2 = delta2.t().dot(&h) + &(&self.w2 * (2.0 * self.l2));
        let gb2 = delta2.sum_axis(Axis(0));
        let delta1 = delta2.dot(&self.w2) * &h.mapv(|a| a * (1.0 - a));
        let gw1 = delta1.t().dot(&rows) + &(&self.w1 * (2.0 * self.l2));
        let gb1 = delta1.sum_axis(Axis(0));
        MlpGradient {
            w1: gw1,
            b1: gb1,
            w2: gw2,
            b2: gb2,
        }
    }

    /// All parameters flattened in the order `w1, b1, w2, b2`.
    pub fn parameters(&self) -> Vec<f64> {
        self.w1
            .iter()
            .chain(self.b1.iter())
            .chain(self.w2.iter())
            .chain(self.b2.iter())
            .copied()
            .collect()
    }

    /// Inverse of [`Mlp::parameters`].
    pub fn set_parameters(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.parameters().len(), "parameter count mismatch");
        let mut it = flat.iter().copied();
        for v in self
            .w1
            .iter_mut()
            .chain(self.b1.iter_mut())
            .chain(self.w2.iter_mut())
            .chain(self.b2.iter_mut())
        {
            *v = it.next().expect("length checked");
        }
    }

    fn step(&mut self, g: &MlpGradient, lr: f64) {
        self.w1.scaled_add(-lr, &g.w1);
        self.b1.scaled_add(-lr, &g.b1);
        self.w2.scaled_add(-lr, &g.w2);
        self.b2.scaled_add(-lr, &g.b2);
    }
}

impl MlpGradient {
    pub fn flatten(&self) -> Vec<f64> {
        self.w1
            .iter()
            .chain(self.b1.iter())
            .chain(self.w2.iter())
            .chain(self.b2.iter())
            .copied()
            .collect()
    }
}

/// Initialization and the per-epoch shuffles use separate streams derived
/// from `seed`.
pub fn train_mlp(data: &TrainSet<'_>, params: &MlpParams, seed: u64) -> Result<Mlp> {
    if params.batch_size == 0 || params.hidden_units == 0 {
        return Err(Error::Config("ANN batch_size and hidden_units must be >= 1".into()));
    }
    let mut net = Mlp::init(
        data.n_features(),
        params.hidden_units,
        data.class_count,
        params.l2,
        seed::derive_seed(seed, "mlp", "init"),
    );
    let mut rng = seed::rng(seed::derive_seed(seed, "mlp", "shuffle"));
    let mut order: Vec<usize> = (0..data.n_rows()).collect();
    for epoch in 0..params.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(params.batch_size) {
            let x = data.x.select(Axis(0), batch);
            let y: Vec<usize> = batch.iter().map(|&r| data.y[r]).collect();
            let g = net.gradient(x.view(), &y);
            net.step(&g, params.learning_rate);
        }
        let loss = net.loss(data.x, data.y);
        if !loss.is_finite() {
            return Err(Error::Divergence(format!(
                "ANN loss became non-finite in epoch {} (learning rate {})",
                epoch + 1,
                params.learning_rate
            )));
        }
        log::trace!("ann epoch {} loss {loss:.6}", epoch + 1);
    }
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n: usize, d: usize, k: usize) -> (Array2<f64>, Vec<usize>) {
        let x = Array2::from_shape_fn((n, d), |(i, j)| ((i * 7 + j * 3) % 11) as f64 / 10.0);
        let y = (0..n).map(|i| (i * 5 + 1) % k).collect();
        (x, y)
    }

    #[test]
    fn gradient_matches_central_differences() {
        let (x, y) = toy(5, 13, 5);
        let net = Mlp::init(13, 8, 5, 0.01, 21);
        let analytic = net.gradient(x.view(), &y).flatten();
        let theta = net.parameters();
        let h = 1e-5;
        let mut probe = net.clone();
        for (j, &a) in analytic.iter().enumerate() {
            let mut p = theta.clone();
            p[j] = theta[j] + h;
            probe.set_parameters(&p);
            let up = probe.loss(x.view(), &y);
            p[j] = theta[j] - h;
            probe.set_parameters(&p);
            let down = probe.loss(x.view(), &y);
            let numeric = (up - down) / (2.0 * h);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            assert!(rel < 1e-4, "param {j}: analytic {a} numeric {numeric}");
        }
    }

    #[test]
    fn zero_epochs_returns_initialized_network() {
        let (x, y) = toy(12, 4, 2);
        let data = TrainSet::new(&x, &y, 2).unwrap();
        let params = MlpParams {
            epochs: 0,
            ..Default::default()
        };
        let trained = train_mlp(&data, &params, 8).unwrap();
        let init = Mlp::init(4, 8, 2, params.l2, seed::derive_seed(8, "mlp", "init"));
        assert_eq!(trained.scores(x.view()), init.scores(x.view()));
    }

    #[test]
    fn rows_sum_to_one() {
        let net = Mlp::init(3, 8, 5, 0.0, 1);
        let x = Array2::from_shape_fn((20, 3), |(i, j)| (i as f64 - 10.0) * (j as f64 + 1.0) * 50.0);
        for row in net.scores(x.view()).axis_iter(Axis(0)) {
            assert!((row.sum() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn init_scale_bounds() {
        let net = Mlp::init(16, 8, 2, 0.0, 3);
        assert!(net.w1.iter().all(|w| w.abs() <= 0.5 / 4.0));
        assert!(net.b1.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn training_reduces_loss() {
        let (x, _) = toy(40, 2, 2);
        let y: Vec<usize> = x.axis_iter(Axis(0)).map(|r| usize::from(r[0] > 0.5)).collect();
        let data = TrainSet::new(&x, &y, 2).unwrap();
        let params = MlpParams {
            learning_rate: 0.5,
            epochs: 200,
            batch_size: 4,
            l2: 0.0,
            ..Default::default()
        };
        let init = Mlp::init(2, 8, 2, 0.0, seed::derive_seed(2, "mlp", "init"));
        let trained = train_mlp(&data, &params, 2).unwrap();
        assert!(trained.loss(x.view(), &y) < init.loss(x.view(), &y));
    }

    #[test]
    fn huge_learning_rate_diverges() {
        let (x, y) = toy(20, 3, 2);
        let x = x * 1e200;
        let data = TrainSet::new(&x, &y, 2).unwrap();
        let params = MlpParams {
            learning_rate: 1e300,
            ..Default::default()
        };
        assert!(matches!(train_mlp(&data, &params, 0), Err(Error::Divergence(_))));
    }

    #[test]
    fn same_seed_same_weights() {
        let (x, y) = toy(30, 5, 3);
        let data = TrainSet::new(&x, &y, 3).unwrap();
        let p = MlpParams::default();
        assert_eq!(train_mlp(&data, &p, 4).unwrap(), train_mlp(&data, &p, 4).unwrap());
    }
}
