//! Six probabilistic classifiers behind one scoring contract.
//!
//! Every fitted model maps rows to a [`ScoreMatrix`] whose rows are
//! probability vectors over `class_count` classes. A [`Classifier`] only
//! exists once training has finished, so scoring an unfitted model is not
//! representable.

pub mod adaboost;
pub mod forest;
pub mod logistic;
pub mod mlp;
pub mod svm;
pub mod tree;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::{ScalerKind, TaskKind};
use crate::scores::ScoreMatrix;

pub use adaboost::{AdaBoost, AdaBoostParams};
pub use forest::{ForestParams, RandomForest};
pub use logistic::{LogisticModel, LogisticParams};
pub use mlp::{Mlp, MlpParams};
pub use svm::{Kernel, SvmModel, SvmParams};
pub use tree::{Criterion, DecisionTree, Splitter, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lr,
    Svm,
    Dt,
    Rf,
    Ann,
    Ada,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::Lr,
        ModelKind::Svm,
        ModelKind::Dt,
        ModelKind::Rf,
        ModelKind::Ann,
        ModelKind::Ada,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ModelKind::Lr => "lr",
            ModelKind::Svm => "svm",
            ModelKind::Dt => "dt",
            ModelKind::Rf => "rf",
            ModelKind::Ann => "ann",
            ModelKind::Ada => "ada",
        }
    }

    /// Feature scaling applied before this learner. Trees see raw values.
    pub fn scaling(self) -> Option<ScalerKind> {
        match self {
            ModelKind::Lr | ModelKind::Svm | ModelKind::Ada => Some(ScalerKind::ZScore),
            ModelKind::Ann => Some(ScalerKind::MinMax),
            ModelKind::Dt | ModelKind::Rf => None,
        }
    }

    /// Learners offered in the fusion menus of a task. DT and ADA have no
    /// multiclass configuration.
    pub fn fusable_for(self, task: TaskKind) -> bool {
        match task {
            TaskKind::Binary => true,
            TaskKind::Multiclass => !matches!(self, ModelKind::Dt | ModelKind::Ada),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag().to_ascii_uppercase())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lr" => Ok(ModelKind::Lr),
            "svm" => Ok(ModelKind::Svm),
            "dt" => Ok(ModelKind::Dt),
            "rf" => Ok(ModelKind::Rf),
            "ann" | "mlp" => Ok(ModelKind::Ann),
            "ada" | "adaboost" => Ok(ModelKind::Ada),
            other => Err(format!("unknown model `{other}` (lr|svm|dt|rf|ann|ada)")),
        }
    }
}

/// Per-algorithm settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub lr: LogisticParams,
    pub svm: SvmParams,
    pub dt: TreeParams,
    pub rf: ForestParams,
    pub ann: MlpParams,
    pub ada: AdaBoostParams,
}

impl Hyperparams {
    /// Tuned settings per task and split ratio. Fractions up to 0.25 use the
    /// 80:20 column, larger ones the 70:30 column.
    pub fn tuned(task: TaskKind, test_fraction: f64) -> Self {
        let eighty = test_fraction <= 0.25;
        let mut hp = Hyperparams {
            lr: LogisticParams::default(),
            svm: SvmParams::default(),
            dt: TreeParams::tuned(),
            rf: ForestParams::default(),
            ann: MlpParams::default(),
            ada: AdaBoostParams::default(),
        };
        match task {
            TaskKind::Binary => {
                hp.lr.c = 1.0;
                hp.svm.c = 1.0;
                hp.svm.kernel = Kernel::Rbf {
                    gamma: if eighty { 0.01 } else { 0.1 },
                };
                hp.rf.n_estimators = 100;
                hp.ann.batch_size = 10;
                hp.ann.epochs = 15;
                hp.ada.n_estimators = if eighty { 200 } else { 250 };
            }
            TaskKind::Multiclass => {
                hp.lr.c = if eighty { 0.001 } else { 0.1 };
                hp.svm.c = if eighty { 100.0 } else { 0.01 };
                hp.svm.kernel = Kernel::Linear;
                hp.rf.n_estimators = if eighty { 200 } else { 100 };
                hp.ann.batch_size = 5;
                hp.ann.epochs = 20;
            }
        }
        hp
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(what.to_string()));
        if !(self.lr.c > 0.0) || !(self.svm.c > 0.0) {
            return bad("C must be > 0");
        }
        if !(self.lr.learning_rate > 0.0) || !(self.ann.learning_rate > 0.0) || !(self.ada.learning_rate > 0.0) {
            return bad("learning_rate must be > 0");
        }
        if self.rf.n_estimators == 0 || self.ada.n_estimators == 0 {
            return bad("n_estimators must be >= 1");
        }
        for tree in [&self.dt, &self.rf.tree] {
            if tree.max_depth == Some(0) {
                return bad("max_depth must be >= 1");
            }
            if tree.min_samples_leaf == 0 {
                return bad("min_samples_leaf must be >= 1");
            }
        }
        if self.ann.batch_size == 0 || self.ann.hidden_units == 0 {
            return bad("ANN batch_size and hidden_units must be >= 1");
        }
        if let Kernel::Rbf { gamma } = self.svm.kernel {
            if !(gamma > 0.0) {
                return bad("gamma must be > 0");
            }
        }
        Ok(())
    }
}

/// Fitted parameters of one learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "lowercase")]
pub enum Fitted {
    Lr(LogisticModel),
    Svm(SvmModel),
    Dt(DecisionTree),
    Rf(RandomForest),
    Ann(Mlp),
    Ada(AdaBoost),
}

/// A trained model. Immutable; safe to share across threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classifier {
    pub class_count: usize,
    pub n_features: usize,
    pub model: Fitted,
}

impl Classifier {
    pub fn kind(&self) -> ModelKind {
        match self.model {
            Fitted::Lr(_) => ModelKind::Lr,
            Fitted::Svm(_) => ModelKind::Svm,
            Fitted::Dt(_) => ModelKind::Dt,
            Fitted::Rf(_) => ModelKind::Rf,
            Fitted::Ann(_) => ModelKind::Ann,
            Fitted::Ada(_) => ModelKind::Ada,
        }
    }

    /// One probability vector per row.
    pub fn predict_proba(&self, rows: ArrayView2<'_, f64>) -> Result<ScoreMatrix> {
        if rows.ncols() != self.n_features {
            return Err(Error::Shape(format!(
                "model trained on {} features, got {}",
                self.n_features,
                rows.ncols()
            )));
        }
        let raw = match &self.model {
            Fitted::Lr(m) => m.scores(rows),
            Fitted::Svm(m) => m.scores(rows),
            Fitted::Dt(m) => m.scores(rows),
            Fitted::Rf(m) => m.scores(rows),
            Fitted::Ann(m) => m.scores(rows),
            Fitted::Ada(m) => m.scores(rows),
        };
        Ok(ScoreMatrix::from_trusted(raw))
    }

    pub fn predict(&self, rows: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        Ok(crate::fusion::decide(&self.predict_proba(rows)?))
    }
}

/// Training inputs shared by every learner: features, labels in
/// `0..class_count`.
#[derive(Debug, Clone, Copy)]
pub struct TrainSet<'a> {
    pub x: ArrayView2<'a, f64>,
    pub y: &'a [usize],
    pub class_count: usize,
}

impl<'a> TrainSet<'a> {
    pub fn new(x: &'a Array2<f64>, y: &'a [usize], class_count: usize) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::Shape(format!("{} rows but {} labels", x.nrows(), y.len())));
        }
        if x.nrows() == 0 {
            return Err(Error::Usage("empty training set".into()));
        }
        if class_count < 2 {
            return Err(Error::Usage("class_count must be >= 2".into()));
        }
        if let Some(&bad) = y.iter().find(|&&l| l >= class_count) {
            return Err(Error::Usage(format!("label {bad} outside 0..{class_count}")));
        }
        Ok(Self {
            x: x.view(),
            y,
            class_count,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.class_count];
        for &l in self.y {
            c[l] += 1;
        }
        c
    }
}

/// Trains the requested learner. `seed` drives every random choice.
pub fn train(kind: ModelKind, data: &TrainSet<'_>, hp: &Hyperparams, seed: u64) -> Result<Classifier> {
    let model = match kind {
        ModelKind::Lr => Fitted::Lr(logistic::train_logistic(data, &hp.lr)?),
        ModelKind::Svm => Fitted::Svm(svm::train_svm(data, &hp.svm)?),
        ModelKind::Dt => Fitted::Dt(tree::train_tree(data, &hp.dt, seed)?),
        ModelKind::Rf => Fitted::Rf(forest::train_forest(data, &hp.rf, seed)?),
        ModelKind::Ann => Fitted::Ann(mlp::train_mlp(data, &hp.ann, seed)?),
        ModelKind::Ada => Fitted::Ada(adaboost::train_adaboost(data, &hp.ada)?),
    };
    Ok(Classifier {
        class_count: data.class_count,
        n_features: data.n_features(),
        model,
    })
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Serialized form of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format_version: u32,
    pub hyperparams: Hyperparams,
    pub classifier: Classifier,
}

impl ModelDocument {
    pub fn new(classifier: Classifier, hyperparams: Hyperparams) -> Self {
        Self {
            format_version: MODEL_FORMAT_VERSION,
            hyperparams,
            classifier,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if doc.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported model format version {}",
                doc.format_version
            )));
        }
        Ok(doc)
    }
}
