//! End-to-end experiment: load, clean, split, train, fuse, evaluate, report.

mod config;
mod reference;
mod report;

use std::collections::BTreeMap;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{FusionPair, RunConfig, WeightEval};
pub use reference::{published_accuracy, validate_against_published, ReferenceCheck};
pub use report::{
    check_consistency, emit_repeat, emit_report, load_report, render_csv, render_markdown, render_repeat_markdown,
};

use crate::dataset::{self, DataTable, LoadOptions, Schema};
use crate::error::{Error, Result, StageExt};
use crate::fusion::{self, GridSearch, WeightGrid};
use crate::metrics::{self, Averaging, EvaluationReport};
use crate::models::{self, Classifier, Hyperparams, ModelKind, TrainSet};
use crate::preprocess::{self, ScalerParams, SplitSpec, TaskKind};
use crate::scores::ScoreMatrix;
use crate::seed;

pub const REPORT_FORMAT_VERSION: u32 = 1;

/// Child seeds of one run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedPlan {
    pub master: u64,
    pub split: u64,
    pub validation: u64,
    pub oversample: u64,
    pub models: BTreeMap<String, u64>,
}

impl SeedPlan {
    pub fn new(master: u64) -> Self {
        Self {
            master,
            split: seed::derive_seed(master, "split", ""),
            validation: seed::derive_seed(master, "validation", ""),
            oversample: seed::derive_seed(master, "oversample", ""),
            models: ModelKind::ALL
                .iter()
                .map(|k| (k.tag().to_string(), seed::derive_seed(master, "train", k.tag())))
                .collect(),
        }
    }

    pub fn model(&self, kind: ModelKind) -> u64 {
        self.models[kind.tag()]
    }
}

/// Partitions ready for training.
#[derive(Debug, Clone)]
pub struct PreparedData {
    /// The cleaned table with task labels, before splitting.
    pub full: DataTable,
    /// Training partition as split, before any resampling.
    pub train: DataTable,
    /// Rows the learners are fitted on: the training partition minus any
    /// validation slice, oversampled for the multiclass task.
    pub fit: DataTable,
    pub validation: Option<DataTable>,
    pub test: DataTable,
    pub missing_cells: usize,
}

/// Loads and cleans the data and produces every partition.
pub fn prepare_data(config: &RunConfig) -> Result<PreparedData> {
    let seeds = SeedPlan::new(config.master_seed);
    let schema = match &config.schema_path {
        Some(p) => Schema::from_json_file(p).stage("load")?,
        None => Schema::cleveland(),
    };
    let options = LoadOptions {
        has_header: config.has_header,
        ..LoadOptions::default()
    };
    let raw = dataset::load_csv(&config.data_path, &schema, &options).stage("load")?;
    let missing_cells = raw.missing_count();
    let imputed = preprocess::impute_most_frequent(&raw).stage("impute")?;
    let (encoded, _) = preprocess::encode_labels(&imputed);
    let full = preprocess::derive_task(&encoded, config.task);

    let k = config.task.class_count();
    let counts = full.class_counts(k);
    if counts.len() > k {
        return Err(Error::Data(format!(
            "labels exceed the {} classes of the {} task",
            k,
            config.task.name()
        )))
        .stage("task");
    }
    if let Some(absent) = counts.iter().position(|&c| c == 0) {
        return Err(Error::Data(format!(
            "class {absent} never occurs; the {} task needs all {k} classes",
            config.task.name()
        )))
        .stage("task");
    }

    let spec = SplitSpec {
        test_fraction: config.test_fraction,
        seed: seeds.split,
        stratified: config.stratified,
    };
    let (train, test) = preprocess::split(&full, &spec).stage("split")?;
    let (fit, validation) = match config.weight_eval {
        WeightEval::Test => (train.clone(), None),
        WeightEval::Validation => {
            let spec = SplitSpec {
                test_fraction: config.validation_fraction,
                seed: seeds.validation,
                stratified: config.stratified,
            };
            let (fit, val) = preprocess::split(&train, &spec).stage("validation split")?;
            (fit, Some(val))
        }
    };
    let fit = match config.task {
        TaskKind::Multiclass => preprocess::random_oversample(&fit, seeds.oversample).stage("oversample")?,
        TaskKind::Binary => fit,
    };
    Ok(PreparedData {
        full,
        train,
        fit,
        validation,
        test,
        missing_cells,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSummary {
    pub rows: usize,
    pub missing_cells: usize,
    pub train_rows: usize,
    pub fit_rows: usize,
    pub validation_rows: usize,
    pub test_rows: usize,
    pub train_class_counts: Vec<usize>,
    pub fit_class_counts: Vec<usize>,
    pub test_class_counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberReport {
    pub kind: ModelKind,
    /// Scaler statistics fitted on the training rows, if the learner scales.
    pub scaler: Option<ScalerParams>,
    pub evaluation: EvaluationReport,
    /// Test-partition scores, kept so fused results can be re-derived.
    pub test_scores: ScoreMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionReport {
    pub pair: FusionPair,
    pub weight_eval: WeightEval,
    /// Chosen weights and the accuracy of every grid point on the
    /// weight-selection split.
    pub search: GridSearch,
    pub evaluation: EvaluationReport,
    pub best_member_accuracy: f64,
}

impl FusionReport {
    pub fn improved(&self) -> bool {
        self.evaluation.accuracy > self.best_member_accuracy
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub format_version: u32,
    pub tool_version: String,
    pub config: RunConfig,
    /// FNV-1a of the serialized config, hex.
    pub config_hash: String,
    pub seeds: SeedPlan,
    pub hyperparams: Hyperparams,
    pub data: DataSummary,
    pub test_labels: Vec<usize>,
    pub members: Vec<MemberReport>,
    pub fusions: Vec<FusionReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_unix_secs: Option<u64>,
}

impl RunReport {
    pub fn task(&self) -> TaskKind {
        self.config.task
    }

    pub fn member(&self, kind: ModelKind) -> Option<&MemberReport> {
        self.members.iter().find(|m| m.kind == kind)
    }

    pub fn fusion(&self, pair: FusionPair) -> Option<&FusionReport> {
        self.fusions.iter().find(|f| f.pair == pair)
    }
}

pub fn config_hash(config: &RunConfig) -> Result<String> {
    Ok(format!(
        "{:016x}",
        seed::fnv1a(serde_json::to_string(config)?.as_bytes())
    ))
}

struct Trained {
    kind: ModelKind,
    scaler: Option<ScalerParams>,
    classifier: Classifier,
}

impl Trained {
    fn scores(&self, rows: &Array2<f64>) -> Result<ScoreMatrix> {
        match &self.scaler {
            Some(p) => self.classifier.predict_proba(preprocess::apply_scaler(p, rows)?.view()),
            None => self.classifier.predict_proba(rows.view()),
        }
    }
}

fn train_member(kind: ModelKind, fit: &DataTable, task: TaskKind, hp: &Hyperparams, seed: u64) -> Result<Trained> {
    let scaler = kind
        .scaling()
        .map(|s| preprocess::fit_scaler(&fit.features, s))
        .transpose()?;
    let x = match &scaler {
        Some(p) => preprocess::apply_scaler(p, &fit.features)?,
        None => fit.features.clone(),
    };
    let data = TrainSet::new(&x, &fit.labels, task.class_count())?;
    let classifier = models::train(kind, &data, hp, seed)?;
    Ok(Trained {
        kind,
        scaler,
        classifier,
    })
}

/// Runs one experiment. Nothing is written; see [`emit_report`].
pub fn run_experiment(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let hp = config.resolved_hyperparams()?;
    let seeds = SeedPlan::new(config.master_seed);
    let prepared = prepare_data(config)?;
    let task = config.task;
    let k = task.class_count();
    let averaging = Averaging::for_task(task);

    let trained: Vec<Trained> = config
        .members()
        .into_par_iter()
        .map(|kind| train_member(kind, &prepared.fit, task, &hp, seeds.model(kind)))
        .collect::<Result<_>>()
        .stage("train")?;

    let truth = &prepared.test.labels;
    let mut test_scores = BTreeMap::new();
    let mut eval_scores = BTreeMap::new();
    let mut members = Vec::new();
    for t in &trained {
        let scores = t.scores(&prepared.test.features).stage("score")?;
        let evaluation = metrics::evaluate(truth, &scores, averaging).stage("evaluate")?;
        if let Some(val) = &prepared.validation {
            eval_scores.insert(t.kind, t.scores(&val.features).stage("score")?);
        }
        members.push(MemberReport {
            kind: t.kind,
            scaler: t.scaler.clone(),
            evaluation,
            test_scores: scores.clone(),
        });
        test_scores.insert(t.kind, scores);
    }

    let grid = WeightGrid::standard();
    let mut fusions = Vec::new();
    for pair in config.pairs() {
        let (d1, d2) = (&test_scores[&pair.0], &test_scores[&pair.1]);
        let search = match &prepared.validation {
            None => fusion::grid_search(d1, d2, truth, &grid)?.0,
            Some(val) => fusion::grid_search(&eval_scores[&pair.0], &eval_scores[&pair.1], &val.labels, &grid)?.0,
        };
        let fused = fusion::fuse(d1, d2, search.best).stage("fuse")?;
        let evaluation = metrics::evaluate(truth, &fused, averaging).stage("evaluate")?;
        let best_member_accuracy = members
            .iter()
            .filter(|m| m.kind == pair.0 || m.kind == pair.1)
            .map(|m| m.evaluation.accuracy)
            .fold(f64::NEG_INFINITY, f64::max);
        fusions.push(FusionReport {
            pair,
            weight_eval: config.weight_eval,
            search,
            evaluation,
            best_member_accuracy,
        });
    }

    let data = DataSummary {
        rows: prepared.full.n_rows(),
        missing_cells: prepared.missing_cells,
        train_rows: prepared.train.n_rows(),
        fit_rows: prepared.fit.n_rows(),
        validation_rows: prepared.validation.as_ref().map_or(0, DataTable::n_rows),
        test_rows: prepared.test.n_rows(),
        train_class_counts: prepared.train.class_counts(k),
        fit_class_counts: prepared.fit.class_counts(k),
        test_class_counts: prepared.test.class_counts(k),
    };
    let generated_unix_secs = config.include_timestamp.then(|| {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs())
    });
    Ok(RunReport {
        format_version: REPORT_FORMAT_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: config_hash(config)?,
        config: config.clone(),
        seeds,
        hyperparams: hp,
        data,
        test_labels: truth.clone(),
        members,
        fusions,
        generated_unix_secs,
    })
}

/// Mean and population std of one accuracy across seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyStats {
    pub name: String,
    pub accuracies: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

impl AccuracyStats {
    fn new(name: String, accuracies: Vec<f64>) -> Self {
        let n = accuracies.len() as f64;
        let mean = accuracies.iter().sum::<f64>() / n;
        let std = (accuracies.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n).sqrt();
        Self {
            name,
            accuracies,
            mean,
            std,
        }
    }

    pub fn max(&self) -> f64 {
        self.accuracies.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatReport {
    pub seeds: Vec<u64>,
    pub members: Vec<AccuracyStats>,
    pub fusions: Vec<AccuracyStats>,
}

/// Runs `repeats` experiments with master seeds `master_seed..master_seed + repeats`.
pub fn run_repeated(config: &RunConfig, repeats: usize) -> Result<(Vec<RunReport>, RepeatReport)> {
    if repeats == 0 {
        return Err(Error::Usage("repeat count must be >= 1".into()));
    }
    let seeds: Vec<u64> = (0..repeats as u64)
        .map(|i| config.master_seed.wrapping_add(i))
        .collect();
    let runs = seeds
        .iter()
        .map(|&s| {
            let mut c = config.clone();
            c.master_seed = s;
            run_experiment(&c)
        })
        .collect::<Result<Vec<_>>>()?;
    let first = &runs[0];
    let members = first
        .members
        .iter()
        .map(|m| {
            let acc = runs
                .iter()
                .map(|r| r.member(m.kind).expect("same config").evaluation.accuracy);
            AccuracyStats::new(m.kind.to_string(), acc.collect())
        })
        .collect();
    let fusions = first
        .fusions
        .iter()
        .map(|f| {
            let acc = runs
                .iter()
                .map(|r| r.fusion(f.pair).expect("same config").evaluation.accuracy);
            AccuracyStats::new(f.pair.to_string(), acc.collect())
        })
        .collect();
    Ok((
        runs,
        RepeatReport {
            seeds,
            members,
            fusions,
        },
    ))
}
