//! Report directory layout.
//!
//! - `per_seed.csv`: `seed,status,target_accuracy,final_source_loss,final_regularizer,error`
//! - `summary.csv`: `regularizer,seeds,succeeded,mean_accuracy,std_accuracy`
//! - `trace_seed<k>.csv`: `epoch,source_loss,regularizer_total,regularizer_layer<l>...,target_accuracy`
//!   with one `regularizer_layer<l>` column per matched hidden layer `l`
//! - `config_snapshot.toml`: the resolved experiment config
//!
//! Floats are written as the shortest decimal that parses back exactly.
//! Failed seeds get an empty accuracy and the error text; their trace file
//! has only the header.

use std::path::Path;

use crate::csvio::exact;
use crate::error::{io_err, HarnessError, Result};
use crate::experiment::{ExperimentReport, SweepPoint};

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> HarnessError + '_ {
    move |e| HarnessError::CsvFile { path: path.to_path_buf(), reason: e.to_string() }
}

fn write_rows(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(header).map_err(csv_err(path))?;
    for row in rows {
        w.write_record(row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn regularizer_name(report: &ExperimentReport) -> String {
    serde_json::to_value(report.experiment.train.regularizer)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

pub fn write_report(report: &ExperimentReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;

    let mut per_seed = Vec::new();
    for s in &report.seeds {
        per_seed.push(match &s.outcome {
            Ok(run) => vec![
                s.seed.to_string(),
                "ok".into(),
                exact(run.target_accuracy),
                run.history.source_loss.last().map_or(String::new(), |v| exact(*v)),
                match run.history.regularizer.last() {
                    Some(r) if !r.is_empty() => exact(r.iter().sum()),
                    _ => String::new(),
                },
                String::new(),
            ],
            Err(e) => vec![s.seed.to_string(), "failed".into(), String::new(), String::new(), String::new(), e.clone()],
        });
    }
    write_rows(
        &dir.join("per_seed.csv"),
        &strings(&["seed", "status", "target_accuracy", "final_source_loss", "final_regularizer", "error"]),
        &per_seed,
    )?;

    let ok = report.accuracies().len();
    write_rows(
        &dir.join("summary.csv"),
        &strings(&["regularizer", "seeds", "succeeded", "mean_accuracy", "std_accuracy"]),
        &[vec![
            regularizer_name(report),
            report.seeds.len().to_string(),
            ok.to_string(),
            exact(report.mean_accuracy),
            exact(report.std_accuracy),
        ]],
    )?;

    let layers = &report.experiment.network.matched_layers;
    let mut header = strings(&["epoch", "source_loss", "regularizer_total"]);
    header.extend(layers.iter().map(|l| format!("regularizer_layer{l}")));
    header.push("target_accuracy".into());
    for s in &report.seeds {
        let mut rows = Vec::new();
        if let Ok(run) = &s.outcome {
            let h = &run.history;
            for (e, loss) in h.source_loss.iter().enumerate() {
                let reg = h.regularizer.get(e).cloned().unwrap_or_default();
                let mut row = vec![(e + 1).to_string(), exact(*loss)];
                if reg.is_empty() {
                    row.extend(std::iter::repeat_n(String::new(), layers.len() + 1));
                } else {
                    row.push(exact(reg.iter().sum()));
                    row.extend(reg.iter().map(|v| exact(*v)));
                }
                row.push(h.target_accuracy.get(e).map_or(String::new(), |v| exact(*v)));
                rows.push(row);
            }
        }
        write_rows(&dir.join(format!("trace_seed{}.csv", s.seed)), &header, &rows)?;
    }

    let snapshot = dir.join("config_snapshot.toml");
    std::fs::write(&snapshot, report.experiment.to_toml()).map_err(io_err(&snapshot))
}

/// `sweep.csv` (`parameter,value,succeeded,mean_accuracy,std_accuracy`) plus
/// one report directory `<parameter>_<value>` per point.
pub fn write_sweep(points: &[SweepPoint], parameter: &str, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut rows = Vec::new();
    for p in points {
        write_report(&p.report, &dir.join(format!("{parameter}_{}", exact(p.value))))?;
        rows.push(vec![
            parameter.to_string(),
            exact(p.value),
            p.report.accuracies().len().to_string(),
            exact(p.report.mean_accuracy),
            exact(p.report.std_accuracy),
        ]);
    }
    write_rows(
        &dir.join("sweep.csv"),
        &strings(&["parameter", "value", "succeeded", "mean_accuracy", "std_accuracy"]),
        &rows,
    )
}
