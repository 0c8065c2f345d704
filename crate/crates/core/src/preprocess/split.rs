use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::DataTable;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl SplitSpec {
    pub fn new(test_fraction: f64, seed: u64) -> Self {
        Self {
            test_fraction,
            seed,
            stratified: true,
        }
    }
}

/// Test-partition size: `ceil(n * fraction)`, kept inside `1..n` when n ≥ 2.
pub fn test_size(n: usize, fraction: f64) -> usize {
    let raw = (n as f64 * fraction - 1e-9).ceil().max(0.0) as usize;
    if n < 2 {
        raw.min(n)
    } else {
        raw.clamp(1, n - 1)
    }
}

/// Row indices `(train, test)`, each ascending.
pub fn split_indices(labels: &[usize], spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    let n = labels.len();
    if n == 0 {
        return Err(Error::Usage("cannot split an empty table".into()));
    }
    if !(spec.test_fraction > 0.0 && spec.test_fraction < 1.0) {
        return Err(Error::Config(format!(
            "test fraction {} outside (0, 1)",
            spec.test_fraction
        )));
    }
    let n_test = test_size(n, spec.test_fraction);
    let mut rng = seed::rng(spec.seed);

    let class_span = labels.iter().max().map_or(0, |&m| m + 1);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); class_span];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let populated: Vec<&Vec<usize>> = by_class.iter().filter(|c| !c.is_empty()).collect();
    let mut stratified = spec.stratified;
    if stratified && populated.iter().any(|c| c.len() < 2) {
        log::warn!("a class has fewer than 2 samples; falling back to an unstratified split");
        stratified = false;
    }

    let mut test = Vec::with_capacity(n_test);
    if stratified {
        let quotas = stratum_quotas(&populated.iter().map(|c| c.len()).collect::<Vec<_>>(), n, n_test);
        for (members, quota) in populated.into_iter().zip(quotas) {
            let mut shuffled = members.clone();
            shuffled.shuffle(&mut rng);
            test.extend_from_slice(&shuffled[..quota]);
        }
    } else {
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(&mut rng);
        test.extend_from_slice(&all[..n_test]);
    }
    test.sort_unstable();
    let mut in_test = vec![false; n];
    for &i in &test {
        in_test[i] = true;
    }
    let train = (0..n).filter(|&i| !in_test[i]).collect();
    Ok((train, test))
}

// Largest-remainder apportionment of `n_test` across strata.
fn stratum_quotas(sizes: &[usize], n: usize, n_test: usize) -> Vec<usize> {
    let exact: Vec<f64> = sizes.iter().map(|&s| s as f64 * n_test as f64 / n as f64).collect();
    let mut quotas: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut left = n_test - quotas.iter().sum::<usize>();
    for &k in order.iter().cycle() {
        if left == 0 {
            break;
        }
        if quotas[k] < sizes[k] {
            quotas[k] += 1;
            left -= 1;
        }
    }
    quotas
}

pub fn split(table: &DataTable, spec: &SplitSpec) -> Result<(DataTable, DataTable)> {
    let (train, test) = split_indices(&table.labels, spec)?;
    Ok((table.select_rows(&train), table.select_rows(&test)))
}
