//! Aggregation of per-cell records and plot-ready CSV emission.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use modeqaoa_core::bo::Method;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};
use crate::harness::{write_atomic, Record, SweepPoint};

/// Metrics aggregated per sweep point and method, in output order.
pub const METRICS: [&str; 12] = [
    "final_mode_accuracy",
    "final_expectation_accuracy",
    "final_best_sample_accuracy",
    "total_shots",
    "optimization_shots",
    "final_eval_shots",
    "stage2_shots",
    "shots_to_threshold",
    "reached_threshold",
    "trials",
    "avg_point_shots",
    "avg_distinct",
];

/// Value of `metric` for one record. `shots_to_threshold` is missing for runs
/// that never reach the threshold.
pub fn metric_value(r: &Record, metric: &str) -> Option<f64> {
    Some(match metric {
        "final_mode_accuracy" => r.final_mode_accuracy,
        "final_expectation_accuracy" => r.final_expectation_accuracy,
        "final_best_sample_accuracy" => r.final_best_sample_accuracy,
        "total_shots" => r.total_shots as f64,
        "optimization_shots" => r.optimization_shots as f64,
        "final_eval_shots" => r.final_eval_shots as f64,
        "stage2_shots" => r.stage2_shots as f64,
        "shots_to_threshold" => r.shots_to_threshold? as f64,
        "reached_threshold" => f64::from(u8::from(r.shots_to_threshold.is_some())),
        "trials" => r.trials as f64,
        "avg_point_shots" => r.avg_point_shots,
        "avg_distinct" => r.avg_distinct,
        _ => return None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub sweep_key: String,
    pub method: Method,
    pub metric: String,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub count: usize,
}

/// Mean and sample standard deviation; the deviation of a single value is 0.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Some((mean, 0.0));
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    Some((mean, (ss / (n - 1.0)).sqrt()))
}

/// Groups records by (sweep point, method) in first-appearance order and
/// summarizes every metric.
pub fn aggregate(records: &[Record]) -> Vec<AggregateRow> {
    let mut groups: Vec<((String, Method), Vec<&Record>)> = Vec::new();
    for r in records {
        let key = (r.point().key(), r.method);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    let mut rows = Vec::new();
    for ((sweep_key, method), members) in groups {
        for metric in METRICS {
            let values: Vec<f64> = members
                .iter()
                .filter_map(|r| metric_value(r, metric))
                .collect();
            let ms = mean_std(&values);
            rows.push(AggregateRow {
                sweep_key: sweep_key.clone(),
                method,
                metric: metric.to_string(),
                mean: ms.map(|m| m.0),
                std: ms.map(|m| m.1),
                count: values.len(),
            });
        }
    }
    rows
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| BenchError::Data(e.to_string()))?;
    write_atomic(path, &bytes)
}

pub fn write_aggregate(path: &Path, rows: &[AggregateRow]) -> Result<()> {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.sweep_key.clone(),
                r.method.name().to_string(),
                r.metric.clone(),
                fmt_opt(r.mean),
                fmt_opt(r.std),
                r.count.to_string(),
            ]
        })
        .collect();
    write_csv(
        path,
        &["sweep_key", "method", "metric", "mean", "std", "count"],
        &body,
    )
}

pub fn read_aggregate(path: &Path) -> Result<Vec<AggregateRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let get = |i: usize| {
            rec.get(i)
                .ok_or_else(|| BenchError::Data(format!("short row in {}", path.display())))
        };
        let opt = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse()
                    .map(Some)
                    .map_err(|_| BenchError::Data(format!("bad number `{s}`")))
            }
        };
        rows.push(AggregateRow {
            sweep_key: get(0)?.to_string(),
            method: get(1)?.parse()?,
            metric: get(2)?.to_string(),
            mean: opt(get(3)?)?,
            std: opt(get(4)?)?,
            count: get(5)?
                .parse()
                .map_err(|_| BenchError::Data("bad count".into()))?,
        });
    }
    Ok(rows)
}

type Table<'a> = BTreeMap<(usize, Method), (SweepPoint, BTreeMap<&'a str, &'a AggregateRow>)>;

/// Indexes rows by (first-appearance order of the sweep key, method).
fn index(rows: &[AggregateRow]) -> Result<Table<'_>> {
    let mut order: Vec<&str> = Vec::new();
    let mut table: Table<'_> = BTreeMap::new();
    for row in rows {
        let pos = match order.iter().position(|k| *k == row.sweep_key) {
            Some(p) => p,
            None => {
                order.push(&row.sweep_key);
                order.len() - 1
            }
        };
        let point = SweepPoint::parse_key(&row.sweep_key)?;
        table
            .entry((pos, row.method))
            .or_insert_with(|| (point, BTreeMap::new()))
            .1
            .insert(row.metric.as_str(), row);
    }
    Ok(table)
}

fn mean_of(metrics: &BTreeMap<&str, &AggregateRow>, name: &str) -> Option<f64> {
    metrics.get(name).and_then(|r| r.mean)
}

fn std_of(metrics: &BTreeMap<&str, &AggregateRow>, name: &str) -> Option<f64> {
    metrics.get(name).and_then(|r| r.std)
}

/// Relative saving of `shots_map` against `shots_baseline`; positive when
/// the adaptive method uses fewer shots.
pub fn saving_rate(shots_map: f64, shots_baseline: f64) -> f64 {
    1.0 - shots_map / shots_baseline
}

pub const PLOT_FILES: [&str; 8] = [
    "threshold_shots.csv",
    "saving_rate.csv",
    "pareto.csv",
    "pareto_noise.csv",
    "qubit_curves.csv",
    "depth_panels.csv",
    "noise_panels.csv",
    "summary.csv",
];

/// Writes one CSV per figure into `dir`. Empty input yields header-only
/// files.
pub fn emit_plot_data(rows: &[AggregateRow], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    let table = index(rows)?;

    let mut threshold = Vec::new();
    let mut pareto = Vec::new();
    let mut pareto_noise = Vec::new();
    let mut qubit = Vec::new();
    let mut depth = Vec::new();
    let mut noise = Vec::new();
    let mut summary = Vec::new();
    for ((_, method), (pt, m)) in &table {
        let name = method.name().to_string();
        let (n, p, l) = (pt.n.to_string(), pt.p.to_string(), pt.lambda.to_string());
        let acc = fmt_opt(mean_of(m, "final_mode_accuracy"));
        let acc_sd = fmt_opt(std_of(m, "final_mode_accuracy"));
        let shots = fmt_opt(mean_of(m, "total_shots"));
        let shots_sd = fmt_opt(std_of(m, "total_shots"));
        let stt = m.get("shots_to_threshold");
        threshold.push(vec![
            pt.key(),
            name.clone(),
            n.clone(),
            p.clone(),
            l.clone(),
            fmt_opt(stt.and_then(|r| r.mean)),
            fmt_opt(stt.and_then(|r| r.std)),
            stt.map(|r| r.count).unwrap_or(0).to_string(),
            fmt_opt(mean_of(m, "reached_threshold")),
        ]);
        pareto.push(vec![name.clone(), n.clone(), shots.clone(), acc.clone()]);
        pareto_noise.push(vec![name.clone(), l.clone(), shots.clone(), acc.clone()]);
        let curve = |axis: &String| {
            vec![
                name.clone(),
                axis.clone(),
                acc.clone(),
                acc_sd.clone(),
                shots.clone(),
                shots_sd.clone(),
            ]
        };
        qubit.push(curve(&n));
        depth.push(curve(&p));
        noise.push(curve(&l));
        summary.push(vec![
            pt.key(),
            name.clone(),
            acc.clone(),
            fmt_opt(mean_of(m, "final_expectation_accuracy")),
            fmt_opt(mean_of(m, "final_best_sample_accuracy")),
            shots.clone(),
            fmt_opt(mean_of(m, "optimization_shots")),
            fmt_opt(mean_of(m, "avg_point_shots")),
            fmt_opt(mean_of(m, "avg_distinct")),
        ]);
    }

    let mut saving = Vec::new();
    for ((pos, method), (pt, m)) in &table {
        if *method != Method::MapBo {
            continue;
        }
        let Some((_, base)) = table.get(&(*pos, Method::ExpBo)) else {
            continue;
        };
        for basis in ["shots_to_threshold", "optimization_shots"] {
            if let (Some(a), Some(b)) = (mean_of(m, basis), mean_of(base, basis)) {
                saving.push(vec![
                    pt.key(),
                    pt.n.to_string(),
                    pt.p.to_string(),
                    pt.lambda.to_string(),
                    basis.to_string(),
                    a.to_string(),
                    b.to_string(),
                    saving_rate(a, b).to_string(),
                ]);
            }
        }
    }

    let curve_header = |axis: &'static str| {
        [
            "method",
            axis,
            "final_mode_accuracy",
            "final_mode_accuracy_std",
            "total_shots",
            "total_shots_std",
        ]
    };
    write_csv(
        &dir.join("threshold_shots.csv"),
        &[
            "sweep_key",
            "method",
            "n",
            "p",
            "lambda",
            "mean",
            "std",
            "count",
            "reached_fraction",
        ],
        &threshold,
    )?;
    write_csv(
        &dir.join("saving_rate.csv"),
        &[
            "sweep_key",
            "n",
            "p",
            "lambda",
            "basis",
            "shots_map",
            "shots_expbo",
            "saving_rate",
        ],
        &saving,
    )?;
    write_csv(
        &dir.join("pareto.csv"),
        &["method", "n", "total_shots", "final_mode_accuracy"],
        &pareto,
    )?;
    write_csv(
        &dir.join("pareto_noise.csv"),
        &["method", "lambda", "total_shots", "final_mode_accuracy"],
        &pareto_noise,
    )?;
    write_csv(&dir.join("qubit_curves.csv"), &curve_header("n"), &qubit)?;
    write_csv(&dir.join("depth_panels.csv"), &curve_header("p"), &depth)?;
    write_csv(
        &dir.join("noise_panels.csv"),
        &curve_header("lambda"),
        &noise,
    )?;
    write_csv(
        &dir.join("summary.csv"),
        &[
            "sweep_key",
            "method",
            "final_mode_accuracy",
            "final_expectation_accuracy",
            "final_best_sample_accuracy",
            "total_shots",
            "optimization_shots",
            "avg_point_shots",
            "avg_distinct",
        ],
        &summary,
    )?;
    Ok(())
}
