use serde::{Deserialize, Serialize};

use crate::dataset::DataTable;

/// Original code for each encoded value of one categorical column:
/// `codes[k]` is the raw value that was mapped to `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeMap {
    pub column: String,
    pub codes: Vec<f64>,
}

impl CodeMap {
    pub fn encode(&self, raw: f64) -> Option<usize> {
        self.codes.iter().position(|&c| c == raw)
    }

    pub fn decode(&self, encoded: usize) -> Option<f64> {
        self.codes.get(encoded).copied()
    }
}

/// Maps each categorical column's distinct observed values to `0..k` in
/// ascending order of the original code. Continuous columns pass through.
pub fn encode_labels(table: &DataTable) -> (DataTable, Vec<CodeMap>) {
    let mut out = table.clone();
    let mut maps = Vec::new();
    for (j, attr) in table.schema.attributes.iter().enumerate() {
        if !attr.is_categorical() {
            continue;
        }
        let mut codes: Vec<f64> = table
            .features
            .column(j)
            .iter()
            .zip(table.missing.column(j))
            .filter(|(_, &m)| !m)
            .map(|(&v, _)| v)
            .collect();
        codes.sort_by(f64::total_cmp);
        codes.dedup();
        let map = CodeMap {
            column: attr.name.clone(),
            codes,
        };
        for (cell, &missing) in out.features.column_mut(j).iter_mut().zip(table.missing.column(j)) {
            if !missing {
                *cell = map.encode(*cell).expect("code collected above") as f64;
            }
        }
        out.schema.attributes[j].allowed_values = Some((0..map.codes.len()).map(|k| k as f64).collect());
        maps.push(map);
    }
    (out, maps)
}
