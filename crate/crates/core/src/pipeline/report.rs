//! Report files: JSON, a markdown summary, a CSV summary and ROC points.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{validate_against_published, RepeatReport, RunReport, REPORT_FORMAT_VERSION};
use crate::error::{Error, Result};
use crate::fusion;
use crate::metrics::{self, ConfusionMatrix, EvaluationReport, RocCurve};
use crate::preprocess::TaskKind;

pub const REPORT_JSON: &str = "report.json";

fn pct(v: f64) -> String {
    format!("{v:.2}")
}

fn auc_pct(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |a| pct(100.0 * a))
}

fn split_label(test_fraction: f64) -> String {
    let test = (test_fraction * 100.0).round() as u32;
    format!("{}:{}", 100 - test, test)
}

fn table_row(out: &mut String, name: &str, e: &EvaluationReport, binary: bool) {
    let mut cells = vec![name.to_string()];
    if binary {
        let (tp, fp, fn_, tn) = e.confusion.binary_cells().expect("binary confusion matrix");
        cells.extend([tp, fp, fn_, tn].map(|c| c.to_string()));
    }
    cells.extend([
        pct(e.accuracy),
        pct(e.precision),
        pct(e.recall),
        pct(e.f1),
        auc_pct(e.roc_auc),
    ]);
    let _ = writeln!(out, "| {} |", cells.join(" | "));
}

/// Summary tables in the layout of the published result tables.
pub fn render_markdown(report: &RunReport) -> String {
    let c = &report.config;
    let binary = c.task == TaskKind::Binary;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# {} classification, {} split, seed {}\n",
        c.task.name(),
        split_label(c.test_fraction),
        c.master_seed
    );
    let header: &[&str] = if binary {
        &[
            "Model", "Tp", "Fp", "Fn", "Tn", "Acc", "Prc", "Recall", "F1-score", "Roc-Auc",
        ]
    } else {
        &["Model", "Acc", "Prc", "Recall", "F1-score", "Roc-Auc"]
    };
    let _ = writeln!(out, "| {} |", header.join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(header.len()));
    for m in &report.members {
        table_row(&mut out, &m.kind.to_string(), &m.evaluation, binary);
    }
    for f in &report.fusions {
        let name = format!("{} ({:.2}/{:.2})", f.pair, f.search.best.w1, f.search.best.w2);
        table_row(&mut out, &name, &f.evaluation, binary);
    }
    let averaging = if binary { "macro" } else { "weighted" };
    let _ = writeln!(
        out,
        "\nPrecision, recall and F1 are {averaging} averages; all values are percentages."
    );

    for f in &report.fusions {
        let _ = writeln!(
            out,
            "\n## {} weight sweep ({} split)\n\n| w1 | w2 | Acc |\n|---|---|---|",
            f.pair,
            match f.weight_eval {
                super::WeightEval::Test => "test",
                super::WeightEval::Validation => "validation",
            }
        );
        for p in &f.search.sweep {
            let _ = writeln!(
                out,
                "| {:.2} | {:.2} | {} |",
                p.weights.w1,
                p.weights.w2,
                pct(100.0 * p.accuracy)
            );
        }
    }

    let checks = validate_against_published(report);
    if !checks.is_empty() {
        let _ = writeln!(out, "\n## Reference comparison\n\n```");
        for ch in &checks {
            let _ = writeln!(out, "{ch}");
        }
        let _ = writeln!(out, "```");
    }

    let d = &report.data;
    let _ = writeln!(
        out,
        "\n## Run\n\n- rows: {} ({} missing cells imputed)\n- train / fit / validation / test rows: {} / {} / {} / {}\n- class counts train {:?}, fit {:?}, test {:?}\n- seeds: split {}, oversample {}, validation {}\n- config hash: {}",
        d.rows,
        d.missing_cells,
        d.train_rows,
        d.fit_rows,
        d.validation_rows,
        d.test_rows,
        d.train_class_counts,
        d.fit_class_counts,
        d.test_class_counts,
        report.seeds.split,
        report.seeds.oversample,
        report.seeds.validation,
        report.config_hash
    );
    out
}

/// One row per member and per fusion.
pub fn render_csv(report: &RunReport) -> String {
    let mut out = String::from("name,kind,split,w1,w2,tp,fp,fn,tn,accuracy,precision,recall,f1,roc_auc\n");
    let split = split_label(report.config.test_fraction);
    let mut row = |name: String, kind: &str, w: Option<(f64, f64)>, e: &EvaluationReport| {
        let (w1, w2) = w.map_or((String::new(), String::new()), |(a, b)| (a.to_string(), b.to_string()));
        let cells = e
            .confusion
            .binary_cells()
            .map_or([""; 4].map(String::from), |(a, b, c, d)| {
                [a, b, c, d].map(|v| v.to_string())
            });
        let _ = writeln!(
            out,
            "{name},{kind},{split},{w1},{w2},{},{},{},{},{},{},{},{},{}",
            cells[0],
            cells[1],
            cells[2],
            cells[3],
            e.accuracy,
            e.precision,
            e.recall,
            e.f1,
            e.roc_auc.map_or_else(String::new, |a| a.to_string())
        );
    };
    for m in &report.members {
        row(m.kind.to_string(), "model", None, &m.evaluation);
    }
    for f in &report.fusions {
        row(
            f.pair.to_string(),
            "fusion",
            Some((f.search.best.w1, f.search.best.w2)),
            &f.evaluation,
        );
    }
    out
}

fn roc_csv(curve: &RocCurve) -> String {
    let mut out = String::from("fpr,tpr,threshold\n");
    for p in &curve.points {
        let _ = writeln!(out, "{},{},{}", p.fpr, p.tpr, p.threshold);
    }
    out
}

/// Every file of a report as `(relative path, contents)`.
fn render_all(report: &RunReport) -> Result<Vec<(PathBuf, String)>> {
    let mut files = vec![
        (PathBuf::from(REPORT_JSON), serde_json::to_string_pretty(report)? + "\n"),
        (PathBuf::from("summary.md"), render_markdown(report)),
        (PathBuf::from("summary.csv"), render_csv(report)),
    ];
    let curves = report
        .members
        .iter()
        .map(|m| (m.kind.tag().to_string(), &m.evaluation))
        .chain(report.fusions.iter().map(|f| (f.pair.slug(), &f.evaluation)));
    for (name, e) in curves {
        for c in &e.roc {
            files.push((
                PathBuf::from("roc").join(format!("{name}_class{}.csv", c.class)),
                roc_csv(c),
            ));
        }
    }
    Ok(files)
}

/// Writes the report under `dir`, rendering everything before touching the
/// file system. Returns the written paths.
pub fn emit_report(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let files = render_all(report)?;
    fs::create_dir_all(dir.join("roc"))?;
    let mut written = Vec::with_capacity(files.len());
    for (rel, text) in files {
        let path = dir.join(rel);
        fs::write(&path, text)?;
        written.push(path);
    }
    Ok(written)
}

pub fn render_repeat_markdown(repeat: &RepeatReport) -> String {
    let mut out = format!(
        "# Accuracy over {} seeds ({:?})\n\n| Model | Mean | Std | Max |\n|---|---|---|---|\n",
        repeat.seeds.len(),
        repeat.seeds
    );
    for s in repeat.members.iter().chain(&repeat.fusions) {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} |",
            s.name,
            pct(s.mean),
            pct(s.std),
            pct(s.max())
        );
    }
    out
}

/// Writes each run under `dir/seed-<n>/` plus `repeat.json` and `repeat.md`.
pub fn emit_repeat(runs: &[RunReport], repeat: &RepeatReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for r in runs {
        written.extend(emit_report(r, &dir.join(format!("seed-{}", r.config.master_seed)))?);
    }
    let json = dir.join("repeat.json");
    fs::write(&json, serde_json::to_string_pretty(repeat)? + "\n")?;
    let md = dir.join("repeat.md");
    fs::write(&md, render_repeat_markdown(repeat))?;
    written.extend([json, md]);
    Ok(written)
}

/// Reads `report.json` from a report directory (or the file itself).
pub fn load_report(path: &Path) -> Result<RunReport> {
    let file = if path.is_dir() {
        path.join(REPORT_JSON)
    } else {
        path.to_path_buf()
    };
    let report: RunReport = serde_json::from_str(&fs::read_to_string(&file)?)?;
    if report.format_version != REPORT_FORMAT_VERSION {
        return Err(Error::Config(format!(
            "unsupported report format version {}",
            report.format_version
        )));
    }
    Ok(report)
}

/// Re-derives every fused accuracy from the stored member scores and
/// recorded weights.
pub fn check_consistency(report: &RunReport) -> Result<()> {
    let truth = &report.test_labels;
    for f in &report.fusions {
        let member = |k| {
            report
                .member(k)
                .map(|m| &m.test_scores)
                .ok_or_else(|| Error::Config(format!("fusion {} references missing member {k}", f.pair)))
        };
        let fused = fusion::fuse(member(f.pair.0)?, member(f.pair.1)?, f.search.best)?;
        let cm = ConfusionMatrix::from_labels(truth, &fusion::decide(&fused), fused.class_count())?;
        let acc = metrics::scalar_metrics(&cm, f.evaluation.averaging)?.accuracy;
        if acc != f.evaluation.accuracy {
            return Err(Error::Config(format!(
                "fusion {} records accuracy {} but its scores give {acc}",
                f.pair, f.evaluation.accuracy
            )));
        }
    }
    Ok(())
}
