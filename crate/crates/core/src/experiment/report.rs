use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::manifest::{RunManifest, MANIFEST_FILE};
use crate::metrics::{sensitivity, specificity, RocAxes};

use super::runner::{ExperimentOutput, Quartiles};

pub const METRICS_FILE: &str = "metrics.csv";
pub const CONFUSION_FILE: &str = "confusion_total.csv";
pub const ROC_FILE: &str = "roc_aggregate.csv";
pub const IMPORTANCE_FILE: &str = "importance.csv";
pub const SELECTED_FILE: &str = "selected_predictors.csv";
pub const SUMMARY_FILE: &str = "summary.csv";

fn writer(dir: &Path, name: &str) -> Result<(csv::Writer<std::fs::File>, PathBuf)> {
    let path = dir.join(name);
    let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    Ok((csv::Writer::from_writer(file), path))
}

fn finish(mut w: csv::Writer<std::fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes the report files and the run manifest into `dir` (created if
/// absent). Returns the file names written.
///
/// * `metrics.csv`: `rep,model,metric,value`, one row per repetition,
///   model and metric (`error_rate`, `brier`, `auc`, `n_scored`, `n_masked`).
/// * `confusion_total.csv`: confusion counts summed over repetitions.
/// * `roc_aggregate.csv`: `model` plus the two axis columns.
/// * `importance.csv`: split-variable frequencies per tree model.
/// * `selected_predictors.csv`: `rep,model,predictor,role`.
/// * `summary.csv`: mean, median and quartiles per model and metric.
pub fn write_reports(
    output: &ExperimentOutput,
    dir: impl AsRef<Path>,
    axes: RocAxes,
    manifest: Option<RunManifest>,
) -> Result<Vec<String>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let (mut w, path) = writer(dir, METRICS_FILE)?;
    w.write_record(["rep", "model", "metric", "value"])?;
    for r in &output.results {
        for m in &r.models {
            let Some(x) = &m.metrics else { continue };
            let rep = r.rep.to_string();
            let model = m.model.to_string();
            let mut row = |metric: &str, value: String| w.write_record([rep.as_str(), &model, metric, &value]);
            row("error_rate", x.error_rate.to_string())?;
            row("brier", x.brier.to_string())?;
            if let Some(a) = x.auc {
                row("auc", a.to_string())?;
            }
            row("n_scored", x.n_scored.to_string())?;
            row("n_masked", x.n_masked.to_string())?;
        }
    }
    finish(w, &path)?;

    let (mut w, path) = writer(dir, CONFUSION_FILE)?;
    w.write_record(["model", "tn", "fp", "fn", "tp", "n", "error_rate", "sensitivity", "specificity"])?;
    for s in &output.summary.models {
        let c = &s.confusion_total;
        let err = if c.n() > 0 { Some(crate::metrics::error_rate(c)) } else { None };
        w.write_record([
            s.model.to_string(),
            c.tn.to_string(),
            c.fp.to_string(),
            c.fn_.to_string(),
            c.tp.to_string(),
            c.n().to_string(),
            opt(err),
            opt(sensitivity(c)),
            opt(specificity(c)),
        ])?;
    }
    finish(w, &path)?;

    let (mut w, path) = writer(dir, ROC_FILE)?;
    match axes {
        RocAxes::FprTpr => w.write_record(["model", "fpr", "tpr"])?,
        RocAxes::SpecificitySensitivity => w.write_record(["model", "specificity", "sensitivity"])?,
    }
    for s in &output.summary.models {
        let Some(roc) = &s.roc else { continue };
        for p in &roc.points {
            let x = match axes {
                RocAxes::FprTpr => p.fpr,
                RocAxes::SpecificitySensitivity => 1.0 - p.fpr,
            };
            w.write_record([s.model.to_string(), x.to_string(), p.tpr.to_string()])?;
        }
    }
    finish(w, &path)?;

    let (mut w, path) = writer(dir, IMPORTANCE_FILE)?;
    w.write_record(["model", "variable", "split_count", "first", "second", "third"])?;
    for (model, rows) in &output.summary.importance {
        for r in rows {
            w.write_record([
                model.to_string(),
                r.variable.clone(),
                r.split_count.to_string(),
                r.first.to_string(),
                r.second.to_string(),
                r.third.to_string(),
            ])?;
        }
    }
    finish(w, &path)?;

    let (mut w, path) = writer(dir, SELECTED_FILE)?;
    w.write_record(["rep", "model", "predictor", "role"])?;
    for r in &output.results {
        for m in r.models.iter().filter(|m| !m.model.is_tree()) {
            let rep = r.rep.to_string();
            let model = m.model.to_string();
            if m.fallback {
                w.write_record([rep.as_str(), &model, "", "intercept-only"])?;
            }
            for p in &m.selected_predictors {
                w.write_record([rep.as_str(), &model, p, "fixed"])?;
            }
            for p in &m.slope_candidates {
                w.write_record([rep.as_str(), &model, p, "slope-candidate"])?;
            }
        }
    }
    finish(w, &path)?;

    let (mut w, path) = writer(dir, SUMMARY_FILE)?;
    w.write_record(["model", "metric", "n", "mean", "median", "q1", "q3", "failures"])?;
    for s in &output.summary.models {
        for (metric, q) in [("error_rate", s.error_rate), ("brier", s.brier), ("auc", s.auc)] {
            let Some(Quartiles { n, mean, median, q1, q3 }) = q else { continue };
            w.write_record([
                s.model.to_string(),
                metric.to_string(),
                n.to_string(),
                mean.to_string(),
                median.to_string(),
                q1.to_string(),
                q3.to_string(),
                s.failures.to_string(),
            ])?;
        }
    }
    finish(w, &path)?;

    let mut files: Vec<String> = [METRICS_FILE, CONFUSION_FILE, ROC_FILE, IMPORTANCE_FILE, SELECTED_FILE, SUMMARY_FILE]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut manifest = match manifest {
        Some(m) => m,
        None => RunManifest::new("experiment", &output.config, output.config.master_seed)?,
    };
    manifest.outputs.extend(files.iter().cloned());
    manifest.details = serde_json::json!({
        "n_rows": output.n_rows,
        "train_size": output.train_size,
        "test_size": output.test_size,
        "repetition_seeds": output.results.iter().map(|r| r.seed).collect::<Vec<_>>(),
        "failures": output.results.iter().flat_map(|r| r.models.iter().filter_map(move |m| {
            m.failure.as_ref().map(|f| serde_json::json!({"rep": r.rep, "model": m.model.to_string(), "reason": f}))
        })).collect::<Vec<_>>(),
    });
    manifest.write(dir)?;
    files.push(MANIFEST_FILE.to_string());
    Ok(files)
}
