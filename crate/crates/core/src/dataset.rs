//! Loading and validating the Cleveland heart-disease table.
//!
//! The canonical input is the 13-attribute "processed" UCI format: one record
//! per line, 13 comma-separated feature values followed by the label, with
//! `?` marking a missing cell. Missing cells are stored as `NaN` in the
//! feature matrix and flagged in [`DataTable::missing`]; the mask is the
//! authority, later stages never test for `NaN` directly.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Highest label code accepted on load (0 = no disease, 1..=4 severity).
pub const MAX_LABEL: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    Continuous,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub name: String,
    pub kind: AttributeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allowed_values: Option<Vec<f64>>,
    #[serde(default)]
    pub description: String,
}

impl AttributeSpec {
    pub fn continuous(name: &str, description: &str) -> Self {
        Self {
            name: name.to_string(),
            kind: AttributeKind::Continuous,
            allowed_values: None,
            description: description.to_string(),
        }
    }

    pub fn categorical(name: &str, codes: &[f64], description: &str) -> Self {
        Self {
            name: name.to_string(),
            kind: AttributeKind::Categorical,
            allowed_values: Some(codes.to_vec()),
            description: description.to_string(),
        }
    }

    pub fn is_categorical(&self) -> bool {
        self.kind == AttributeKind::Categorical
    }

    fn allows(&self, value: f64) -> bool {
        match &self.allowed_values {
            Some(codes) => codes.contains(&value),
            None => true,
        }
    }
}

/// Ordered list of feature attributes. The label column is implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub attributes: Vec<AttributeSpec>,
}

impl Schema {
    pub fn new(attributes: Vec<AttributeSpec>) -> Result<Self> {
        let schema = Self { attributes };
        schema.validate()?;
        Ok(schema)
    }

    /// The 13 attributes of the processed Cleveland file.
    pub fn cleveland() -> Self {
        use AttributeSpec as A;
        Self {
            attributes: vec![
                A::continuous("Age", "age in years"),
                A::categorical("Sex", &[0.0, 1.0], "1 = male, 0 = female"),
                A::categorical(
                    "Cpt",
                    &[1.0, 2.0, 3.0, 4.0],
                    "chest pain type: 1 typical angina, 2 atypical angina, 3 non-anginal, 4 asymptomatic",
                ),
                A::continuous("Thstbps", "resting blood pressure (mm Hg)"),
                A::continuous("S_chol", "serum cholesterol (mg/dl)"),
                A::categorical("FBS", &[0.0, 1.0], "fasting blood sugar > 120 mg/dl"),
                A::categorical(
                    "Restelect",
                    &[0.0, 1.0, 2.0],
                    "resting ECG: 0 normal, 1 ST-T abnormality, 2 left ventricular hypertrophy",
                ),
                A::continuous("thlach", "maximum heart rate achieved"),
                A::categorical("Exng", &[0.0, 1.0], "exercise induced angina"),
                A::continuous("Oldpeak", "ST depression induced by exercise relative to rest"),
                A::categorical("Slp", &[1.0, 2.0, 3.0], "slope of the peak exercise ST segment"),
                A::categorical(
                    "Ca",
                    &[0.0, 1.0, 2.0, 3.0],
                    "number of major vessels colored by fluoroscopy",
                ),
                A::categorical(
                    "Thal",
                    &[3.0, 6.0, 7.0],
                    "3 normal, 6 fixed defect, 7 reversible defect",
                ),
            ],
        }
    }

    /// Reads a JSON schema document (`{"attributes": [...]}`).
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let schema: Schema = serde_json::from_str(&text)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        if self.attributes.is_empty() {
            return Err(Error::InvalidSchema("no attributes".into()));
        }
        let mut seen = HashSet::new();
        for attr in &self.attributes {
            if !seen.insert(attr.name.as_str()) {
                return Err(Error::InvalidSchema(format!(
                    "duplicate attribute name `{}`",
                    attr.name
                )));
            }
            if attr.is_categorical() && attr.allowed_values.as_ref().map_or(true, Vec::is_empty) {
                return Err(Error::InvalidSchema(format!(
                    "categorical attribute `{}` has no allowed values",
                    attr.name
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.attributes.iter().map(|a| a.name.as_str()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }
}

/// Rectangular feature matrix with integer labels and a per-cell missing mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataTable {
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
    pub schema: Schema,
    pub missing: Array2<bool>,
}

impl DataTable {
    pub fn new(features: Array2<f64>, labels: Vec<usize>, schema: Schema) -> Result<Self> {
        let missing = features.mapv(f64::is_nan);
        Self::with_mask(features, labels, schema, missing)
    }

    pub fn with_mask(features: Array2<f64>, labels: Vec<usize>, schema: Schema, missing: Array2<bool>) -> Result<Self> {
        if features.ncols() != schema.len() {
            return Err(Error::Shape(format!(
                "{} feature columns but schema has {} attributes",
                features.ncols(),
                schema.len()
            )));
        }
        if features.nrows() != labels.len() {
            return Err(Error::Shape(format!(
                "{} rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if missing.dim() != features.dim() {
            return Err(Error::Shape("missing mask shape differs from features".into()));
        }
        Ok(Self {
            features,
            labels,
            schema,
            missing,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.features.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.n_rows() == 0
    }

    pub fn missing_count(&self) -> usize {
        self.missing.iter().filter(|&&m| m).count()
    }

    /// Number of classes implied by the labels (max label + 1).
    pub fn class_span(&self) -> usize {
        self.labels.iter().max().map_or(0, |&m| m + 1)
    }

    pub fn class_counts(&self, class_count: usize) -> Vec<usize> {
        let mut counts = vec![0; class_count.max(self.class_span())];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// New table holding the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> DataTable {
        DataTable {
            features: self.features.select(Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            schema: self.schema.clone(),
            missing: self.missing.select(Axis(0), indices),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub missing_token: String,
    pub has_header: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            missing_token: "?".to_string(),
            has_header: false,
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: &Schema, options: &LoadOptions) -> Result<DataTable> {
    let text = fs::read_to_string(path)?;
    parse_csv(&text, schema, options)
}

/// Parses processed-Cleveland text. Line numbers in errors are 1-based.
pub fn parse_csv(text: &str, schema: &Schema, options: &LoadOptions) -> Result<DataTable> {
    schema.validate()?;
    let width = schema.len();
    let mut values = Vec::new();
    let mut mask = Vec::new();
    let mut labels = Vec::new();

    let mut lines = text.lines().enumerate();
    if options.has_header {
        lines.next();
    }
    for (idx, raw) in lines {
        let line = idx + 1;
        let record = raw.trim();
        if record.is_empty() {
            continue;
        }
        let fields: Vec<&str> = record.split(',').map(str::trim).collect();
        if fields.len() != width + 1 {
            return Err(Error::Parse {
                line,
                column: None,
                message: format!("expected {} fields, found {}", width + 1, fields.len()),
            });
        }
        for (col, (field, attr)) in fields.iter().zip(&schema.attributes).enumerate() {
            if *field == options.missing_token {
                values.push(f64::NAN);
                mask.push(true);
                continue;
            }
            let value: f64 = field.parse().map_err(|_| Error::Parse {
                line,
                column: Some(col + 1),
                message: format!("`{field}` is not numeric"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    line,
                    column: Some(col + 1),
                    message: format!("`{field}` is not finite"),
                });
            }
            if !attr.allows(value) {
                return Err(Error::Schema {
                    line,
                    column: attr.name.clone(),
                    message: format!("unknown category code {value}"),
                });
            }
            values.push(value);
            mask.push(false);
        }
        labels.push(parse_label(fields[width], line, width + 1)?);
    }

    let rows = labels.len();
    let features = Array2::from_shape_vec((rows, width), values).map_err(|e| Error::Shape(e.to_string()))?;
    let missing = Array2::from_shape_vec((rows, width), mask).map_err(|e| Error::Shape(e.to_string()))?;
    DataTable::with_mask(features, labels, schema.clone(), missing)
}

// Some mirrors store labels as "1.0"; parse as float and truncate.
fn parse_label(field: &str, line: usize, column: usize) -> Result<usize> {
    let value: f64 = field.parse().map_err(|_| Error::Parse {
        line,
        column: Some(column),
        message: format!("label `{field}` is not numeric"),
    })?;
    let code = value.trunc();
    if !(0.0..=MAX_LABEL as f64).contains(&code) {
        return Err(Error::Schema {
            line,
            column: "label".into(),
            message: format!("label {value} outside 0..={MAX_LABEL}"),
        });
    }
    Ok(code as usize)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub name: String,
    pub kind: AttributeKind,
    pub observed: usize,
    pub mean: f64,
    /// Population standard deviation (divides by n).
    pub std: f64,
    /// `(code, percentage of observed cells)`, ascending by code. Empty for
    /// continuous columns.
    pub frequencies: Vec<(f64, f64)>,
}

/// Per-column mean, population std and (for categorical columns) code
/// percentages over the non-missing cells.
pub fn summarize(table: &DataTable) -> Result<Vec<ColumnSummary>> {
    if table.is_empty() {
        return Err(Error::Usage("cannot summarize an empty table".into()));
    }
    table
        .schema
        .attributes
        .iter()
        .enumerate()
        .map(|(j, attr)| {
            let observed: Vec<f64> = table
                .features
                .column(j)
                .iter()
                .zip(table.missing.column(j))
                .filter(|(_, &m)| !m)
                .map(|(&v, _)| v)
                .collect();
            if observed.is_empty() {
                return Err(Error::Summary(attr.name.clone()));
            }
            let n = observed.len() as f64;
            let mean = observed.iter().sum::<f64>() / n;
            let var = observed.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let frequencies = if attr.is_categorical() {
                let mut sorted = observed.clone();
                sorted.sort_by(f64::total_cmp);
                let mut out: Vec<(f64, f64)> = Vec::new();
                for v in sorted {
                    match out.last_mut() {
                        Some((code, count)) if *code == v => *count += 1.0,
                        _ => out.push((v, 1.0)),
                    }
                }
                out.into_iter().map(|(c, k)| (c, 100.0 * k / n)).collect()
            } else {
                Vec::new()
            };
            Ok(ColumnSummary {
                name: attr.name.clone(),
                kind: attr.kind,
                observed: observed.len(),
                mean,
                std: var.sqrt(),
                frequencies,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cleveland(text: &str) -> Result<DataTable> {
        parse_csv(text, &Schema::cleveland(), &LoadOptions::default())
    }

    #[test]
    fn single_row_has_no_missing_cells() {
        let t = cleveland("63.0,1.0,1.0,145.0,233.0,1.0,2.0,150.0,0.0,2.3,3.0,0.0,6.0,0\n").unwrap();
        assert_eq!(t.n_rows(), 1);
        assert_eq!(t.n_cols(), 13);
        assert_eq!(t.missing_count(), 0);
        assert_eq!(t.labels, vec![0]);
    }

    #[test]
    fn question_mark_flags_exactly_the_ca_cell() {
        let t = cleveland("63.0,1.0,1.0,145.0,233.0,1.0,2.0,150.0,0.0,2.3,3.0,?,6.0,0").unwrap();
        let flagged: Vec<usize> = (0..13).filter(|&j| t.missing[[0, j]]).collect();
        assert_eq!(flagged, vec![Schema::cleveland().index_of("Ca").unwrap()]);
        assert!(t.features[[0, 11]].is_nan());
    }

    #[test]
    fn wrong_field_count_reports_line() {
        let text = "63,1,1,145,233,1,2,150,0,2.3,3,0,6,0\n63,1,1,145,233,1,2,150,0,2.3,3,0,6\n";
        match cleveland(text) {
            Err(Error::Parse { line, column: None, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_numeric_field_reports_line_and_column() {
        match cleveland("63,1,1,abc,233,1,2,150,0,2.3,3,0,6,0") {
            Err(Error::Parse {
                line: 1,
                column: Some(4),
                ..
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_category_is_a_schema_violation() {
        match cleveland("63,1,1,145,233,1,2,150,0,2.3,3,0,5,0") {
            Err(Error::Schema { column, .. }) => assert_eq!(column, "Thal"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn float_labels_truncate() {
        let t = cleveland("63,1,1,145,233,1,2,150,0,2.3,3,0,6,2.0").unwrap();
        assert_eq!(t.labels, vec![2]);
        assert!(cleveland("63,1,1,145,233,1,2,150,0,2.3,3,0,6,7").is_err());
    }

    #[test]
    fn header_is_skipped_on_request() {
        let opts = LoadOptions {
            has_header: true,
            ..Default::default()
        };
        let text = "age,sex,cp,trestbps,chol,fbs,restecg,thalach,exang,oldpeak,slope,ca,thal,num\n\
                    63,1,1,145,233,1,2,150,0,2.3,3,0,6,0\n";
        let t = parse_csv(text, &Schema::cleveland(), &opts).unwrap();
        assert_eq!(t.n_rows(), 1);
    }

    #[test]
    fn schema_rejects_duplicates_and_empty_categories() {
        let dup = vec![AttributeSpec::continuous("a", ""), AttributeSpec::continuous("a", "")];
        assert!(Schema::new(dup).is_err());
        let empty = vec![AttributeSpec::categorical("c", &[], "")];
        assert!(Schema::new(empty).is_err());
    }

    fn one_column(values: &[f64]) -> DataTable {
        let schema = Schema::new(vec![AttributeSpec::continuous("x", "")]).unwrap();
        let features = Array2::from_shape_vec((values.len(), 1), values.to_vec()).unwrap();
        DataTable::new(features, vec![0; values.len()], schema).unwrap()
    }

    #[test]
    fn summary_mean_of_one_two_three() {
        let s = summarize(&one_column(&[1.0, 2.0, 3.0])).unwrap();
        assert!((s[0].mean - 2.0).abs() < 1e-12);
        assert!((s[0].std - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn single_row_summary_has_zero_std() {
        let t = cleveland("63.0,1.0,1.0,145.0,233.0,1.0,2.0,150.0,0.0,2.3,3.0,0.0,6.0,0").unwrap();
        for col in summarize(&t).unwrap() {
            assert_eq!(col.std, 0.0, "{}", col.name);
        }
    }

    #[test]
    fn fully_missing_column_cannot_be_summarized() {
        match summarize(&one_column(&[f64::NAN, f64::NAN])) {
            Err(Error::Summary(name)) => assert_eq!(name, "x"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn categorical_frequencies_are_percentages() {
        let t = cleveland("63,1,1,145,233,1,2,150,0,2.3,3,0,6,0\n67,0,4,160,286,0,2,108,1,1.5,2,3,3,2\n").unwrap();
        let s = summarize(&t).unwrap();
        assert_eq!(s[1].frequencies, vec![(0.0, 50.0), (1.0, 50.0)]);
        assert!(s[0].frequencies.is_empty());
    }
}
