use rand::Rng as _;

use crate::dataset::DataTable;
use crate::error::{Error, Result};
use crate::seed;

/// Random oversampling: appends copies of randomly chosen (with replacement)
/// rows of every minority class until each class matches the majority count.
/// The original rows come first, in their original order.
///
/// Intended for training partitions only.
pub fn random_oversample(train: &DataTable, seed: u64) -> Result<DataTable> {
    if train.is_empty() {
        return Err(Error::Resample("empty training table".into()));
    }
    let span = train.class_span();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); span];
    for (i, &l) in train.labels.iter().enumerate() {
        members[l].push(i);
    }
    if let Some(c) = members.iter().position(Vec::is_empty) {
        return Err(Error::Resample(format!("class {c} has no training rows")));
    }
    let target = members.iter().map(Vec::len).max().unwrap_or(0);

    let mut rng = seed::rng(seed);
    let mut rows: Vec<usize> = (0..train.n_rows()).collect();
    for class_rows in &members {
        for _ in class_rows.len()..target {
            rows.push(class_rows[rng.gen_range(0..class_rows.len())]);
        }
    }
    Ok(train.select_rows(&rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{AttributeSpec, Schema};
    use ndarray::Array2;

    fn table(counts: &[usize]) -> DataTable {
        let labels: Vec<usize> = counts
            .iter()
            .enumerate()
            .flat_map(|(c, &k)| std::iter::repeat(c).take(k))
            .collect();
        let n = labels.len();
        let schema = Schema::new(vec![AttributeSpec::continuous("id", "")]).unwrap();
        let f = Array2::from_shape_fn((n, 1), |(i, _)| i as f64);
        DataTable::new(f, labels, schema).unwrap()
    }

    fn counts(t: &DataTable) -> Vec<usize> {
        t.class_counts(t.class_span())
    }

    #[test]
    fn all_classes_reach_majority() {
        let out = random_oversample(&table(&[100, 40, 25, 25, 10]), 5).unwrap();
        assert_eq!(counts(&out), vec![100; 5]);
        assert_eq!(out.n_rows(), 500);
    }

    #[test]
    fn balanced_input_unchanged() {
        let t = table(&[5, 5]);
        assert_eq!(random_oversample(&t, 1).unwrap(), t);
    }

    #[test]
    fn added_rows_are_copies_of_same_class() {
        let t = table(&[6, 2, 3]);
        let out = random_oversample(&t, 11).unwrap();
        assert_eq!(out.select_rows(&(0..t.n_rows()).collect::<Vec<_>>()), t);
        for i in t.n_rows()..out.n_rows() {
            let src = out.features[[i, 0]] as usize;
            assert_eq!(t.labels[src], out.labels[i]);
        }
        assert_eq!(out, random_oversample(&t, 11).unwrap());
    }

    #[test]
    fn empty_class_is_an_error() {
        let mut t = table(&[3, 3]);
        t.labels[0] = 2;
        t.labels[1] = 2;
        t.labels[2] = 2;
        assert!(matches!(random_oversample(&t, 0), Err(Error::Resample(_))));
    }
}
