//! Run configuration.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::models::{Hyperparams, ModelKind};
use crate::preprocess::TaskKind;

/// Two learners fused in the given order: weights `(w1, w2)` apply to
/// `(first, second)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct FusionPair(pub ModelKind, pub ModelKind);

impl FusionPair {
    /// Lower-case file-name form, e.g. `ann_rf`.
    pub fn slug(self) -> String {
        format!("{}_{}", self.0.tag(), self.1.tag())
    }

    pub fn same_members(self, other: FusionPair) -> bool {
        (self.0, self.1) == (other.0, other.1) || (self.0, self.1) == (other.1, other.0)
    }

    /// The fusion menus used for each task.
    pub fn defaults(task: TaskKind) -> Vec<FusionPair> {
        use ModelKind::*;
        match task {
            TaskKind::Binary => vec![FusionPair(Ann, Rf), FusionPair(Svm, Lr), FusionPair(Ada, Dt)],
            TaskKind::Multiclass => vec![FusionPair(Lr, Rf), FusionPair(Svm, Ann), FusionPair(Ann, Lr)],
        }
    }

    /// Parses a comma-separated list such as `ann+rf,svm+lr`.
    pub fn parse_list(s: &str) -> Result<Vec<FusionPair>> {
        s.split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(|p| p.parse().map_err(Error::Usage))
            .collect()
    }
}

impl fmt::Display for FusionPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}", self.0, self.1)
    }
}

impl FromStr for FusionPair {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s
            .split_once('+')
            .ok_or_else(|| format!("fusion pair `{s}` must look like `ann+rf`"))?;
        Ok(FusionPair(a.parse()?, b.parse()?))
    }
}

impl TryFrom<String> for FusionPair {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<FusionPair> for String {
    fn from(p: FusionPair) -> String {
        p.to_string().to_ascii_lowercase()
    }
}

/// Where fusion weights are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightEval {
    /// On the test partition itself, as in the original experiments.
    #[default]
    Test,
    /// On a stratified slice of the training partition, leaving the test
    /// partition untouched.
    Validation,
}

impl FromStr for WeightEval {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "test" => Ok(WeightEval::Test),
            "validation" | "val" => Ok(WeightEval::Validation),
            other => Err(format!("unknown weight evaluation split `{other}` (test|validation)")),
        }
    }
}

fn default_task() -> TaskKind {
    TaskKind::Binary
}

fn default_fraction() -> f64 {
    0.2
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data_path: PathBuf,
    #[serde(default)]
    pub has_header: bool,
    /// JSON schema file; the built-in Cleveland schema when absent.
    #[serde(default)]
    pub schema_path: Option<PathBuf>,
    #[serde(default = "default_task")]
    pub task: TaskKind,
    #[serde(default = "default_fraction")]
    pub test_fraction: f64,
    #[serde(default)]
    pub master_seed: u64,
    /// The task's default menu when absent.
    #[serde(default)]
    pub fusion_pairs: Option<Vec<FusionPair>>,
    /// Partial overrides merged over the tuned defaults for the task and
    /// split, e.g. `{"rf": {"n_estimators": 50}}`.
    #[serde(default)]
    pub hyperparams: Option<Value>,
    #[serde(default)]
    pub report_dir: Option<PathBuf>,
    #[serde(default)]
    pub weight_eval: WeightEval,
    /// Share of the training partition held out when `weight_eval` is
    /// `validation`.
    #[serde(default = "default_fraction")]
    pub validation_fraction: f64,
    #[serde(default = "yes")]
    pub stratified: bool,
    /// Stamp reports with the wall-clock time. Off by default so that
    /// repeated runs produce identical files.
    #[serde(default)]
    pub include_timestamp: bool,
}

impl RunConfig {
    pub fn new(data_path: impl Into<PathBuf>, task: TaskKind) -> Self {
        Self {
            data_path: data_path.into(),
            has_header: false,
            schema_path: None,
            task,
            test_fraction: default_fraction(),
            master_seed: 0,
            fusion_pairs: None,
            hyperparams: None,
            report_dir: None,
            weight_eval: WeightEval::Test,
            validation_fraction: default_fraction(),
            stratified: true,
            include_timestamp: false,
        }
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.as_ref().display())))
    }

    pub fn pairs(&self) -> Vec<FusionPair> {
        self.fusion_pairs
            .clone()
            .unwrap_or_else(|| FusionPair::defaults(self.task))
    }

    /// Learners needed by the fusion pairs, in canonical order. An empty
    /// pair list evaluates every learner of the task on its own.
    pub fn members(&self) -> Vec<ModelKind> {
        let pairs = self.pairs();
        ModelKind::ALL
            .into_iter()
            .filter(|k| {
                if pairs.is_empty() {
                    k.fusable_for(self.task)
                } else {
                    pairs.iter().any(|p| p.0 == *k || p.1 == *k)
                }
            })
            .collect()
    }

    /// Tuned defaults for the task and split with any overrides applied.
    pub fn resolved_hyperparams(&self) -> Result<Hyperparams> {
        let base = Hyperparams::tuned(self.task, self.test_fraction);
        let Some(overrides) = &self.hyperparams else {
            return Ok(base);
        };
        let mut merged = serde_json::to_value(&base)?;
        merge(&mut merged, overrides, "hyperparams")?;
        let hp: Hyperparams = serde_json::from_value(merged).map_err(|e| Error::Config(format!("hyperparams: {e}")))?;
        hp.validate()?;
        Ok(hp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Config(format!(
                "test_fraction {} outside (0, 1)",
                self.test_fraction
            )));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::Config(format!(
                "validation_fraction {} outside (0, 1)",
                self.validation_fraction
            )));
        }
        for p in self.pairs() {
            if p.0 == p.1 {
                return Err(Error::Config(format!("fusion pair {p} repeats one learner")));
            }
            for k in [p.0, p.1] {
                if !k.fusable_for(self.task) {
                    return Err(Error::Config(format!(
                        "{k} has no {} configuration and cannot be fused",
                        self.task.name()
                    )));
                }
            }
        }
        self.resolved_hyperparams()?.validate()
    }
}

/// Recursive object merge; unknown keys are rejected. An object carrying a
/// `type` tag replaces its target whole, since it selects another variant.
fn merge(base: &mut Value, overrides: &Value, path: &str) -> Result<()> {
    match (base, overrides) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                let here = format!("{path}.{k}");
                let slot = b
                    .get_mut(k)
                    .ok_or_else(|| Error::Config(format!("unknown setting `{here}`")))?;
                if slot.is_object() && v.is_object() && v.get("type").is_none() {
                    merge(slot, v, &here)?;
                } else {
                    *slot = v.clone();
                }
            }
            Ok(())
        }
        _ => Err(Error::Config(format!("`{path}` must be an object"))),
    }
}
