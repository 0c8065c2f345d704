//! Confusion matrices, averaged precision/recall/F1, and ROC analysis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::decide;
use crate::preprocess::TaskKind;
use crate::scores::ScoreMatrix;

/// `counts[i][j]`: samples of true class `i` predicted as class `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_labels(truth: &[usize], pred: &[usize], k: usize) -> Result<Self> {
        if truth.len() != pred.len() {
            return Err(Error::Metric(format!(
                "{} labels vs {} predictions",
                truth.len(),
                pred.len()
            )));
        }
        let mut counts = vec![vec![0; k]; k];
        for (&t, &p) in truth.iter().zip(pred) {
            if t >= k || p >= k {
                return Err(Error::Metric(format!("label {} outside 0..{k}", t.max(p))));
            }
            counts[t][p] += 1;
        }
        Ok(Self { counts })
    }

    /// Two-class matrix from its cells, class 1 being positive.
    pub fn from_binary_cells(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        Self {
            counts: vec![vec![tn, fp], vec![fn_, tp]],
        }
    }

    pub fn class_count(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.class_count()).map(|i| self.counts[i][i]).sum()
    }

    /// `(tp, fp, fn, tn)` for two classes with class 1 positive.
    pub fn binary_cells(&self) -> Option<(u64, u64, u64, u64)> {
        (self.class_count() == 2).then(|| {
            let c = &self.counts;
            (c[1][1], c[0][1], c[1][0], c[0][0])
        })
    }

    fn support(&self, k: usize) -> u64 {
        self.counts[k].iter().sum()
    }

    fn predicted(&self, k: usize) -> u64 {
        self.counts.iter().map(|row| row[k]).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    /// Unweighted mean over classes.
    Macro,
    /// Mean weighted by true-class support.
    Weighted,
}

impl Averaging {
    pub fn for_task(task: TaskKind) -> Self {
        match task {
            TaskKind::Binary => Averaging::Macro,
            TaskKind::Multiclass => Averaging::Weighted,
        }
    }
}

/// Percentages in `[0, 100]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn scalar_metrics(cm: &ConfusionMatrix, mode: Averaging) -> Result<ScalarMetrics> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Metric("confusion matrix is empty".into()));
    }
    let k = cm.class_count();
    let (mut p_sum, mut r_sum, mut f_sum, mut w_sum) = (0.0, 0.0, 0.0, 0.0);
    for c in 0..k {
        let tp = cm.counts[c][c];
        let p = ratio(tp, cm.predicted(c));
        let r = ratio(tp, cm.support(c));
        let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        let w = match mode {
            Averaging::Macro => 1.0,
            Averaging::Weighted => cm.support(c) as f64,
        };
        p_sum += w * p;
        r_sum += w * r;
        f_sum += w * f;
        w_sum += w;
    }
    Ok(ScalarMetrics {
        accuracy: 100.0 * ratio(cm.trace(), total),
        precision: 100.0 * p_sum / w_sum,
        recall: 100.0 * r_sum / w_sum,
        f1: 100.0 * f_sum / w_sum,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Scores at or above this count as positive.
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// The class treated as positive.
    pub class: usize,
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

/// Exact ROC curve with tied scores stepped together, and its trapezoidal
/// area. `None` when either class is missing.
pub fn roc_curve(positive: &[bool], scores: &[f64]) -> Option<(Vec<RocPoint>, f64)> {
    assert_eq!(positive.len(), scores.len());
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let top = scores[order[0]];
    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: top + 1.0,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auc = 0.0;
    let mut i = 0;
    while i < order.len() {
        let t = scores[order[i]];
        while i < order.len() && scores[order[i]] == t {
            if positive[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let prev = *points.last().expect("non-empty");
        let p = RocPoint {
            fpr: fp as f64 / n_neg as f64,
            tpr: tp as f64 / n_pos as f64,
            threshold: t,
        };
        auc += (p.fpr - prev.fpr) * (p.tpr + prev.tpr) / 2.0;
        points.push(p);
    }
    Some((points, auc))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocSummary {
    /// Binary: the class-1 curve's area. Multiclass: one-vs-rest macro mean
    /// over classes present in the truth. `None` if no curve is defined.
    pub auc: Option<f64>,
    pub curves: Vec<RocCurve>,
}

pub fn roc_auc(truth: &[usize], scores: &ScoreMatrix) -> Result<RocSummary> {
    if truth.len() != scores.n_rows() {
        return Err(Error::Metric(format!(
            "{} labels for {} score rows",
            truth.len(),
            scores.n_rows()
        )));
    }
    let k = scores.class_count();
    let classes: Vec<usize> = if k == 2 { vec![1] } else { (0..k).collect() };
    let mut curves = Vec::new();
    for c in classes {
        let positive: Vec<bool> = truth.iter().map(|&t| t == c).collect();
        let col = scores.column(c).to_vec();
        match roc_curve(&positive, &col) {
            Some((points, auc)) => curves.push(RocCurve { class: c, points, auc }),
            None => log::warn!("ROC-AUC undefined for class {c}: one side of the split is empty"),
        }
    }
    let auc = (!curves.is_empty()).then(|| curves.iter().map(|c| c.auc).sum::<f64>() / curves.len() as f64);
    Ok(RocSummary { auc, curves })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub confusion: ConfusionMatrix,
    pub averaging: Averaging,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub roc_auc: Option<f64>,
    pub roc: Vec<RocCurve>,
}

pub fn evaluate(truth: &[usize], scores: &ScoreMatrix, mode: Averaging) -> Result<EvaluationReport> {
    let pred = decide(scores);
    let confusion = ConfusionMatrix::from_labels(truth, &pred, scores.class_count())?;
    let m = scalar_metrics(&confusion, mode)?;
    let roc = roc_auc(truth, scores)?;
    Ok(EvaluationReport {
        confusion,
        averaging: mode,
        accuracy: m.accuracy,
        precision: m.precision,
        recall: m.recall,
        f1: m.f1,
        roc_auc: roc.auc,
        roc: roc.curves,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn hand_enumerated_cells() {
        let cm = ConfusionMatrix::from_labels(&[1, 1, 0], &[1, 0, 0], 2).unwrap();
        assert_eq!(cm.binary_cells(), Some((1, 0, 1, 1)));
    }

    #[test]
    fn perfect_prediction_is_diagonal() {
        let y = [0, 2, 1, 4, 3, 2];
        let cm = ConfusionMatrix::from_labels(&y, &y, 5).unwrap();
        assert_eq!(cm.trace(), cm.total());
        for mode in [Averaging::Macro, Averaging::Weighted] {
            let m = scalar_metrics(&cm, mode).unwrap();
            assert_eq!((m.accuracy, m.f1), (100.0, 100.0));
        }
    }

    #[test]
    fn identity_binary_macro_f1() {
        let m = scalar_metrics(&ConfusionMatrix::from_binary_cells(3, 0, 0, 4), Averaging::Macro).unwrap();
        assert_eq!((m.accuracy, m.precision, m.recall, m.f1), (100.0, 100.0, 100.0, 100.0));
    }

    #[test]
    fn table_cells_reproduce_accuracy() {
        let cm = ConfusionMatrix::from_binary_cells(35, 2, 1, 23);
        assert_eq!(cm.total(), 61);
        let m = scalar_metrics(&cm, Averaging::Macro).unwrap();
        assert_eq!(format!("{:.2}", m.accuracy), "95.08");
        let m = scalar_metrics(&ConfusionMatrix::from_binary_cells(48, 2, 4, 37), Averaging::Macro).unwrap();
        assert_eq!(format!("{:.2}", m.accuracy), "93.41");
    }

    #[test]
    fn out_of_range_label_is_metric_error() {
        assert!(matches!(
            ConfusionMatrix::from_labels(&[0, 2], &[0, 1], 2),
            Err(Error::Metric(_))
        ));
    }

    #[test]
    fn unpredicted_class_scores_zero() {
        // Class 1 never predicted: its precision is 0 rather than NaN.
        let cm = ConfusionMatrix::from_labels(&[0, 1, 1], &[0, 0, 0], 2).unwrap();
        let m = scalar_metrics(&cm, Averaging::Macro).unwrap();
        assert!(m.precision.is_finite());
        assert!((m.precision - 100.0 * (1.0 / 3.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn equal_support_makes_averages_coincide() {
        let cm = ConfusionMatrix::from_labels(&[0, 0, 1, 1, 2, 2], &[0, 1, 1, 2, 2, 0], 3).unwrap();
        assert_eq!(
            scalar_metrics(&cm, Averaging::Macro).unwrap(),
            scalar_metrics(&cm, Averaging::Weighted).unwrap()
        );
    }

    #[test]
    fn auc_examples() {
        let (_, auc) = roc_curve(&[true, false, true, false], &[0.9, 0.8, 0.7, 0.1]).unwrap();
        assert_eq!(auc, 0.75);
        let (_, auc) = roc_curve(&[true, true, false], &[0.9, 0.8, 0.1]).unwrap();
        assert_eq!(auc, 1.0);
        let (pts, auc) = roc_curve(&[true, false, true, false], &[0.3; 4]).unwrap();
        assert_eq!(auc, 0.5);
        assert_eq!(pts.len(), 2);
        assert!(roc_curve(&[true, true], &[0.1, 0.2]).is_none());
    }

    #[test]
    fn roc_endpoints() {
        let (pts, _) = roc_curve(&[true, false, false, true, true], &[0.2, 0.4, 0.4, 0.9, 0.1]).unwrap();
        let (first, last) = (pts[0], *pts.last().unwrap());
        assert_eq!((first.fpr, first.tpr), (0.0, 0.0));
        assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        assert!(first.threshold.is_finite());
    }

    #[test]
    fn multiclass_skips_absent_classes() {
        let s = ScoreMatrix::new(array![[0.7, 0.2, 0.1], [0.1, 0.8, 0.1], [0.5, 0.4, 0.1]]).unwrap();
        let r = roc_auc(&[0, 1, 0], &s).unwrap();
        assert_eq!(r.curves.iter().map(|c| c.class).collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(r.auc, Some(1.0));
    }

    #[test]
    fn evaluate_binary_report() {
        let s = ScoreMatrix::new(array![[0.9, 0.1], [0.2, 0.8], [0.4, 0.6], [0.6, 0.4]]).unwrap();
        let r = evaluate(&[0, 1, 0, 1], &s, Averaging::Macro).unwrap();
        assert_eq!(r.accuracy, 50.0);
        assert_eq!(r.confusion.binary_cells(), Some((1, 1, 1, 1)));
        assert_eq!(r.roc_auc, Some(0.75));
    }
}
