//! Imputation, categorical encoding, scaling, task derivation, splitting and
//! oversampling.

mod encode;
mod impute;
mod resample;
mod scale;
mod split;

use serde::{Deserialize, Serialize};

pub use encode::{encode_labels, CodeMap};
pub use impute::{column_modes, impute_most_frequent};
pub use resample::random_oversample;
pub use scale::{apply_scaler, fit_scaler, Scaler, ScalerKind, ScalerParams};
pub use split::{split, split_indices, test_size, SplitSpec};

use crate::dataset::DataTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    /// Absence (0) vs presence (1..=4 collapsed to 1).
    Binary,
    /// The five severity labels 0..=4.
    Multiclass,
}

impl TaskKind {
    pub fn class_count(self) -> usize {
        match self {
            TaskKind::Binary => 2,
            TaskKind::Multiclass => 5,
        }
    }

    pub fn map_label(self, label: usize) -> usize {
        match self {
            TaskKind::Binary => usize::from(label > 0),
            TaskKind::Multiclass => label,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Binary => "binary",
            TaskKind::Multiclass => "multiclass",
        }
    }
}

impl std::str::FromStr for TaskKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "binary" => Ok(TaskKind::Binary),
            "multiclass" | "multi" => Ok(TaskKind::Multiclass),
            other => Err(format!("unknown task `{other}` (binary|multiclass)")),
        }
    }
}

pub fn derive_task(table: &DataTable, task: TaskKind) -> DataTable {
    let mut out = table.clone();
    for l in &mut out.labels {
        *l = task.map_label(*l);
    }
    out
}
