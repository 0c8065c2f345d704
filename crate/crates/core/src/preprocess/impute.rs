use crate::dataset::DataTable;
use crate::error::{Error, Result};

/// Modal observed value per column; ties go to the smallest value.
pub fn column_modes(table: &DataTable) -> Result<Vec<f64>> {
    (0..table.n_cols())
        .map(|j| {
            let mut observed: Vec<f64> = table
                .features
                .column(j)
                .iter()
                .zip(table.missing.column(j))
                .filter(|(_, &m)| !m)
                .map(|(&v, _)| v)
                .collect();
            if observed.is_empty() {
                return Err(Error::Imputation(table.schema.attributes[j].name.clone()));
            }
            observed.sort_by(f64::total_cmp);
            // Ascending scan with a strict `>` keeps the first (smallest) of tied runs.
            let (mut best, mut best_len) = (observed[0], 0usize);
            let mut start = 0;
            while start < observed.len() {
                let v = observed[start];
                let end = start + observed[start..].iter().take_while(|&&x| x == v).count();
                if end - start > best_len {
                    best = v;
                    best_len = end - start;
                }
                start = end;
            }
            Ok(best)
        })
        .collect()
}

/// Replaces every missing cell with its column's most frequent value and
/// clears the missing mask.
pub fn impute_most_frequent(table: &DataTable) -> Result<DataTable> {
    let modes = column_modes(table)?;
    let mut out = table.clone();
    for ((i, j), missing) in table.missing.indexed_iter() {
        if *missing {
            out.features[[i, j]] = modes[j];
        }
    }
    out.missing.fill(false);
    Ok(out)
}
