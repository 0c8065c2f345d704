#![allow(dead_code)]

use std::path::{Path, PathBuf};

use scorefusion::pipeline::RunConfig;
use scorefusion::preprocess::TaskKind;

pub fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// The shipped 303-row file (labels 0 = absence, 1 = presence).
pub fn presence_data() -> PathBuf {
    workspace_root().join("data/cleveland-presence.data")
}

/// The canonical five-grade file, from `CLEVELAND_DATA` or
/// `data/processed.cleveland.data`.
pub fn graded_data() -> Option<PathBuf> {
    std::env::var_os("CLEVELAND_DATA")
        .map(PathBuf::from)
        .into_iter()
        .chain([workspace_root().join("data/processed.cleveland.data")])
        .find(|p| p.is_file())
}

/// Writes a five-grade file built from the presence file: positive rows get
/// grades 1..=4 in rotation. Only for exercising multiclass code paths.
pub fn synthetic_graded(dir: &Path) -> PathBuf {
    let text = std::fs::read_to_string(presence_data()).unwrap();
    let mut out = String::new();
    let mut k = 0;
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let (features, label) = line.rsplit_once(',').unwrap();
        let label = if label.trim() == "0" {
            0
        } else {
            k += 1;
            (k - 1) % 4 + 1
        };
        out.push_str(&format!("{features},{label}\n"));
    }
    let path = dir.join("graded.data");
    std::fs::write(&path, out).unwrap();
    path
}

pub fn binary_config(seed: u64) -> RunConfig {
    let mut c = RunConfig::new(presence_data(), TaskKind::Binary);
    c.master_seed = seed;
    c
}
