//! Soft-margin support vector machine.
//!
//! The dual problem is solved by sequential minimal optimization with
//! second-order working-set selection. Decision values are turned into
//! probabilities with a Platt sigmoid fitted on the training decision values.
//! Two classes use a single machine; more classes train one machine per
//! class against the rest and normalize the calibrated outputs.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::TrainSet;
use crate::error::{Error, Result};
use crate::scores::sigmoid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
        match *self {
            Kernel::Linear => a.dot(&b),
            Kernel::Rbf { gamma } => {
                let sq: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * sq).exp()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    pub kernel: Kernel,
    /// KKT violation tolerance.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            kernel: Kernel::Rbf { gamma: 0.1 },
            tol: 1e-3,
            max_iter: 1_000_000,
        }
    }
}

/// `P(positive | f) = 1 / (1 + exp(a f + b))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlattSigmoid {
    pub a: f64,
    pub b: f64,
}

impl PlattSigmoid {
    pub fn probability(&self, decision: f64) -> f64 {
        sigmoid(-(self.a * decision + self.b))
    }
}

/// One two-class machine: `f(x) = sum_i coef_i K(sv_i, x) - rho`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BinaryMachine {
    Kernel {
        support_vectors: Array2<f64>,
        /// `alpha_i * y_i` for each support vector.
        coef: Array1<f64>,
        rho: f64,
        platt: PlattSigmoid,
    },
    /// Primal weights for the linear kernel.
    Linear {
        w: Array1<f64>,
        rho: f64,
        platt: PlattSigmoid,
    },
    /// Training data held one class only.
    Constant { positive: bool },
}

impl BinaryMachine {
    pub fn decision(&self, kernel: &Kernel, x: ArrayView1<'_, f64>) -> f64 {
        match self {
            BinaryMachine::Kernel {
                support_vectors,
                coef,
                rho,
                ..
            } => {
                support_vectors
                    .axis_iter(Axis(0))
                    .zip(coef)
                    .map(|(sv, &c)| c * kernel.eval(sv, x))
                    .sum::<f64>()
                    - rho
            }
            BinaryMachine::Linear { w, rho, .. } => w.dot(&x) - rho,
            BinaryMachine::Constant { positive } => {
                if *positive {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }

    pub fn probability(&self, kernel: &Kernel, x: ArrayView1<'_, f64>) -> f64 {
        match self {
            BinaryMachine::Kernel { platt, .. } | BinaryMachine::Linear { platt, .. } => {
                platt.probability(self.decision(kernel, x))
            }
            BinaryMachine::Constant { positive } => f64::from(u8::from(*positive)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: Kernel,
    pub class_count: usize,
    /// One machine for two classes (positive = class 1); otherwise one per
    /// class, one-vs-rest.
    pub machines: Vec<BinaryMachine>,
}

impl SvmModel {
    pub fn decision_function(&self, rows: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut out = Array2::zeros((rows.nrows(), self.machines.len()));
        for (i, x) in rows.axis_iter(Axis(0)).enumerate() {
            for (k, m) in self.machines.iter().enumerate() {
                out[[i, k]] = m.decision(&self.kernel, x);
            }
        }
        out
    }

    pub(crate) fn scores(&self, rows: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut out = Array2::zeros((rows.nrows(), self.class_count));
        for (i, x) in rows.axis_iter(Axis(0)).enumerate() {
            if self.class_count == 2 {
                let p = self.machines[0].probability(&self.kernel, x);
                out[[i, 0]] = 1.0 - p;
                out[[i, 1]] = p;
            } else {
                let mut row: Vec<f64> = self.machines.iter().map(|m| m.probability(&self.kernel, x)).collect();
                let sum: f64 = row.iter().sum();
                if sum > 0.0 {
                    row.iter_mut().for_each(|p| *p /= sum);
                } else {
                    row.fill(1.0 / self.class_count as f64);
                }
                out.row_mut(i).assign(&ArrayView1::from(&row));
            }
        }
        out
    }
}

pub fn train_svm(data: &TrainSet<'_>, params: &SvmParams) -> Result<SvmModel> {
    if !(params.c > 0.0) {
        return Err(Error::Config("SVM needs C > 0".into()));
    }
    let gram = gram_matrix(&params.kernel, data.x);
    let machines = if data.class_count == 2 {
        let y: Vec<f64> = data.y.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
        vec![fit_machine(data.x, &gram, &y, params)]
    } else {
        (0..data.class_count)
            .map(|k| {
                let y: Vec<f64> = data.y.iter().map(|&l| if l == k { 1.0 } else { -1.0 }).collect();
                fit_machine(data.x, &gram, &y, params)
            })
            .collect()
    };
    Ok(SvmModel {
        kernel: params.kernel,
        class_count: data.class_count,
        machines,
    })
}

fn gram_matrix(kernel: &Kernel, x: ArrayView2<'_, f64>) -> Array2<f64> {
    match kernel {
        Kernel::Linear => x.dot(&x.t()),
        Kernel::Rbf { .. } => {
            let n = x.nrows();
            let mut k = Array2::zeros((n, n));
            for i in 0..n {
                for j in 0..=i {
                    let v = kernel.eval(x.row(i), x.row(j));
                    k[[i, j]] = v;
                    k[[j, i]] = v;
                }
            }
            k
        }
    }
}

fn fit_machine(x: ArrayView2<'_, f64>, gram: &Array2<f64>, y: &[f64], params: &SvmParams) -> BinaryMachine {
    let positives = y.iter().filter(|&&v| v > 0.0).count();
    if positives == 0 || positives == y.len() {
        return BinaryMachine::Constant {
            positive: positives > 0,
        };
    }
    let solution = smo(gram, y, params.c, params.tol, params.max_iter);
    if !solution.converged {
        log::warn!(
            "SMO did not reach KKT tolerance {} within {} iterations; using best iterate",
            params.tol,
            params.max_iter
        );
    }
    let decisions: Vec<f64> = (0..y.len())
        .map(|i| {
            (0..y.len())
                .filter(|&j| solution.alpha[j] > 0.0)
                .map(|j| solution.alpha[j] * y[j] * gram[[j, i]])
                .sum::<f64>()
                - solution.rho
        })
        .collect();
    let platt = fit_platt(&decisions, y);

    match params.kernel {
        Kernel::Linear => {
            let mut w = Array1::zeros(x.ncols());
            for (i, row) in x.axis_iter(Axis(0)).enumerate() {
                if solution.alpha[i] > 0.0 {
                    w.scaled_add(solution.alpha[i] * y[i], &row);
                }
            }
            BinaryMachine::Linear {
                w,
                rho: solution.rho,
                platt,
            }
        }
        Kernel::Rbf { .. } => {
            let sv: Vec<usize> = (0..y.len()).filter(|&i| solution.alpha[i] > 0.0).collect();
            BinaryMachine::Kernel {
                support_vectors: x.select(Axis(0), &sv),
                coef: sv.iter().map(|&i| solution.alpha[i] * y[i]).collect(),
                rho: solution.rho,
                platt,
            }
        }
    }
}

pub(crate) struct DualSolution {
    pub alpha: Vec<f64>,
    pub rho: f64,
    pub converged: bool,
}

const TAU: f64 = 1e-12;

/// Solves `min 1/2 a'Qa - e'a` s.t. `0 <= a <= c`, `y'a = 0`, with
/// `Q_ij = y_i y_j K_ij`.
pub(crate) fn smo(gram: &Array2<f64>, y: &[f64], c: f64, tol: f64, max_iter: usize) -> DualSolution {
    let n = y.len();
    let q = |i: usize, j: usize| y[i] * y[j] * gram[[i, j]];
    let qd: Vec<f64> = (0..n).map(|i| gram[[i, i]]).collect();
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut converged = false;

    for _ in 0..max_iter {
        // First index: maximal violation among the "up" set.
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            let up = if y[t] > 0.0 { alpha[t] < c } else { alpha[t] > 0.0 };
            if up && -y[t] * grad[t] >= gmax {
                gmax = -y[t] * grad[t];
                i_sel = Some(t);
            }
        }
        let Some(i) = i_sel else {
            converged = true;
            break;
        };
        // Second index: largest objective decrease among the "low" set.
        let mut gmax2 = f64::NEG_INFINITY;
        let mut obj_min = f64::INFINITY;
        let mut j_sel = None;
        for t in 0..n {
            let low = if y[t] > 0.0 { alpha[t] > 0.0 } else { alpha[t] < c };
            if !low {
                continue;
            }
            let yg = y[t] * grad[t];
            gmax2 = gmax2.max(yg);
            let diff = gmax + yg;
            if diff > 0.0 {
                let quad = qd[i] + qd[t] - 2.0 * gram[[i, t]];
                let obj = -(diff * diff) / if quad > 0.0 { quad } else { TAU };
                if obj <= obj_min {
                    obj_min = obj;
                    j_sel = Some(t);
                }
            }
        }
        let Some(j) = j_sel.filter(|_| gmax + gmax2 >= tol) else {
            converged = true;
            break;
        };

        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = (qd[i] + qd[j] + 2.0 * q(i, j)).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (qd[i] + qd[j] - 2.0 * q(i, j)).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q(t, i) * di + q(t, j) * dj;
        }
    }

    DualSolution {
        rho: intercept(&alpha, &grad, y, c),
        alpha,
        converged,
    }
}

fn intercept(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum_free) = (0usize, 0.0);
    for t in 0..y.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    if free > 0 {
        sum_free / free as f64
    } else {
        (ub + lb) / 2.0
    }
}

/// Platt scaling with the regularized targets and Newton iteration of
/// Lin, Lin and Weng.
pub fn fit_platt(decisions: &[f64], y: &[f64]) -> PlattSigmoid {
    let prior1 = y.iter().filter(|&&v| v > 0.0).count() as f64;
    let prior0 = y.len() as f64 - prior1;
    let hi = (prior1 + 1.0) / (prior1 + 2.0);
    let lo = 1.0 / (prior0 + 2.0);
    let t: Vec<f64> = y.iter().map(|&v| if v > 0.0 { hi } else { lo }).collect();

    let objective = |a: f64, b: f64| -> f64 {
        decisions
            .iter()
            .zip(&t)
            .map(|(&f, &ti)| {
                let fa = f * a + b;
                if fa >= 0.0 {
                    ti * fa + (-fa).exp().ln_1p()
                } else {
                    (ti - 1.0) * fa + fa.exp().ln_1p()
                }
            })
            .sum()
    };

    let (min_step, sigma, eps) = (1e-10, 1e-12, 1e-5);
    let mut a = 0.0;
    let mut b = ((prior0 + 1.0) / (prior1 + 1.0)).ln();
    let mut fval = objective(a, b);
    for _ in 0..100 {
        let (mut h11, mut h22, mut h21, mut g1, mut g2) = (sigma, sigma, 0.0, 0.0, 0.0);
        for (&f, &ti) in decisions.iter().zip(&t) {
            let fa = f * a + b;
            let (p, q) = if fa >= 0.0 {
                let e = (-fa).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = fa.exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += f * f * d2;
            h22 += d2;
            h21 += f * d2;
            let d1 = ti - p;
            g1 += f * d1;
            g2 += d1;
        }
        if g1.abs() < eps && g2.abs() < eps {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        while step >= min_step {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = objective(na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
        }
        if step < min_step {
            break;
        }
    }
    PlattSigmoid { a, b }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn fit(x: &Array2<f64>, y: &[usize], k: usize, params: SvmParams) -> SvmModel {
        train_svm(&TrainSet::new(x, y, k).unwrap(), &params).unwrap()
    }

    fn labels(m: &SvmModel, x: &Array2<f64>) -> Vec<usize> {
        crate::fusion::decide(&crate::scores::ScoreMatrix::new(m.scores(x.view())).unwrap())
    }

    #[test]
    fn separable_linear_margins_at_least_one() {
        let x = array![[0.0, 0.0], [1.0, 0.5], [0.5, 1.0], [3.0, 3.0], [4.0, 2.5], [2.5, 4.0]];
        let y = [0, 0, 0, 1, 1, 1];
        let m = fit(
            &x,
            &y,
            2,
            SvmParams {
                c: 1e6,
                kernel: Kernel::Linear,
                tol: 1e-10,
                ..Default::default()
            },
        );
        let f = m.decision_function(x.view());
        for (i, &l) in y.iter().enumerate() {
            let yi = if l == 1 { 1.0 } else { -1.0 };
            assert!(yi * f[[i, 0]] >= 1.0 - 1e-6, "margin {} at {i}", yi * f[[i, 0]]);
        }
    }

    #[test]
    fn rbf_solves_xor() {
        let x = array![[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]];
        let y = [0, 0, 1, 1];
        let m = fit(
            &x,
            &y,
            2,
            SvmParams {
                c: 10.0,
                kernel: Kernel::Rbf { gamma: 1.0 },
                ..Default::default()
            },
        );
        let f = m.decision_function(x.view());
        for (i, &l) in y.iter().enumerate() {
            assert_eq!(f[[i, 0]] > 0.0, l == 1);
        }
    }

    #[test]
    fn identical_single_class_points_score_one_hot() {
        let x = array![[1.0, 2.0], [1.0, 2.0], [1.0, 2.0]];
        let m = fit(&x, &[0, 0, 0], 2, SvmParams::default());
        assert_eq!(m.scores(x.view()).row(0).to_vec(), vec![1.0, 0.0]);
    }

    #[test]
    fn dual_solution_is_feasible() {
        let x = array![[0.0], [0.4], [1.0], [1.2], [0.6], [2.0]];
        let y = [-1.0, -1.0, 1.0, 1.0, -1.0, 1.0];
        let gram = gram_matrix(&Kernel::Rbf { gamma: 0.5 }, x.view());
        let s = smo(&gram, &y, 2.0, 1e-6, 100_000);
        assert!(s.converged);
        let balance: f64 = s.alpha.iter().zip(&y).map(|(a, y)| a * y).sum();
        assert!(balance.abs() < 1e-9);
        assert!(s.alpha.iter().all(|&a| (0.0..=2.0).contains(&a)));
    }

    #[test]
    fn platt_is_monotone_in_decision_value() {
        let f = [-2.0, -1.0, -0.5, 0.3, 1.0, 2.0];
        let y = [-1.0, -1.0, 1.0, -1.0, 1.0, 1.0];
        let p = fit_platt(&f, &y);
        assert!(p.a < 0.0);
        assert!(p.probability(2.0) > p.probability(-2.0));
    }

    #[test]
    fn one_vs_rest_rows_normalize() {
        let x = array![[0.0, 0.0], [0.1, 0.2], [3.0, 0.0], [3.2, 0.1], [0.0, 3.0], [0.2, 3.1]];
        let y = [0, 0, 1, 1, 2, 2];
        let m = fit(
            &x,
            &y,
            3,
            SvmParams {
                c: 10.0,
                kernel: Kernel::Linear,
                ..Default::default()
            },
        );
        let s = m.scores(x.view());
        for row in s.axis_iter(Axis(0)) {
            assert!((row.sum() - 1.0).abs() < 1e-12);
        }
        assert_eq!(labels(&m, &x), y.to_vec());
    }
}
