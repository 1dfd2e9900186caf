//! Sweep expansion, per-cell execution and result files.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use modeqaoa_core::bo::{Method, RunResult, StopReason, TrialRecord};
use modeqaoa_core::graph::{random_regular, MaxCutInstance};
use modeqaoa_core::resources::metrics;
use modeqaoa_core::rng::derive_seed;
use modeqaoa_core::simulator::{NoiseSpec, QaoaSimulator};
use modeqaoa_core::stage2::amplify;
use modeqaoa_core::{optimize_exp_bo, optimize_exp_gd, optimize_map_bo};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{BenchError, Result};
use crate::report::{aggregate, emit_plot_data, write_aggregate, AggregateRow};

const INSTANCE_TAG: u64 = 0x1157;
const RUN_TAG: u64 = 0x52_55_4e;
const STAGE2_TAG: u64 = 0x5732;

pub const RECORDS_FILE: &str = "records.jsonl";
pub const TRIALS_FILE: &str = "trials.jsonl";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const METADATA_FILE: &str = "metadata.json";
pub const CONFIG_FILE: &str = "config.toml";
pub const PLOTS_DIR: &str = "plots";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub n: usize,
    pub p: usize,
    pub lambda: f64,
}

impl SweepPoint {
    /// Stable text key, `n=10;p=2;lambda=0.005`.
    pub fn key(&self) -> String {
        format!("n={};p={};lambda={}", self.n, self.p, self.lambda)
    }

    pub fn parse_key(key: &str) -> Result<Self> {
        let bad = || BenchError::Data(format!("bad sweep key `{key}`"));
        let mut n = None;
        let mut p = None;
        let mut lambda = None;
        for part in key.split(';') {
            let (k, v) = part.split_once('=').ok_or_else(bad)?;
            match k {
                "n" => n = Some(v.parse().map_err(|_| bad())?),
                "p" => p = Some(v.parse().map_err(|_| bad())?),
                "lambda" => lambda = Some(v.parse().map_err(|_| bad())?),
                _ => return Err(bad()),
            }
        }
        Ok(SweepPoint {
            n: n.ok_or_else(bad)?,
            p: p.ok_or_else(bad)?,
            lambda: lambda.ok_or_else(bad)?,
        })
    }
}

/// Sweep points in config order: n outermost, then p, then λ.
pub fn sweep_points(cfg: &ExperimentConfig) -> Vec<SweepPoint> {
    let e = &cfg.experiment;
    let mut points = Vec::new();
    for &n in &e.n_values {
        for &p in &e.p_values {
            for &lambda in &e.lambdas {
                points.push(SweepPoint { n, p, lambda });
            }
        }
    }
    points
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub point_index: usize,
    pub point: SweepPoint,
    pub instance_index: usize,
    pub method: Method,
}

pub fn cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    let mut out = Vec::new();
    for (point_index, point) in sweep_points(cfg).into_iter().enumerate() {
        for instance_index in 0..cfg.experiment.instances_per_point {
            for &method in &cfg.experiment.methods {
                out.push(Cell {
                    point_index,
                    point,
                    instance_index,
                    method,
                });
            }
        }
    }
    out
}

pub fn instance_seed(master: u64, point: &SweepPoint, index: usize) -> u64 {
    derive_seed(
        master,
        &[
            INSTANCE_TAG,
            point.n as u64,
            point.p as u64,
            point.lambda.to_bits(),
            index as u64,
        ],
    )
}

pub fn run_seed(instance_seed: u64, method: Method) -> u64 {
    let idx = Method::ALL
        .iter()
        .position(|m| *m == method)
        .expect("known method");
    derive_seed(instance_seed, &[RUN_TAG, idx as u64])
}

/// Random regular graph with the configured weights.
pub fn build_instance(cfg: &ExperimentConfig, n: usize, seed: u64) -> Result<MaxCutInstance> {
    let g = random_regular(n, cfg.experiment.degree, seed)?;
    Ok(g.assign_weights(cfg.experiment.weights, derive_seed(seed, &[1])))
}

pub fn run_method(
    cfg: &ExperimentConfig,
    method: Method,
    instance: &MaxCutInstance,
    depth: usize,
    noise: &NoiseSpec,
    seed: u64,
) -> Result<RunResult> {
    let search = cfg.search_config(depth);
    let run = match method {
        Method::MapBo => optimize_map_bo(instance, &search, &cfg.adaptive, noise, seed)?,
        Method::ExpBo => optimize_exp_bo(instance, &search, cfg.search.n_fix, noise, seed)?,
        Method::ExpGd => optimize_exp_gd(instance, &search, &cfg.gd_config(), noise, seed)?,
    };
    Ok(run)
}

/// One JSONL line per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub method: Method,
    pub n: usize,
    pub p: usize,
    pub lambda: f64,
    pub instance_seed: u64,
    pub run_seed: u64,
    pub final_mode_accuracy: f64,
    pub final_expectation_accuracy: f64,
    pub final_best_sample_accuracy: f64,
    pub total_shots: u64,
    pub optimization_shots: u64,
    pub final_eval_shots: u64,
    pub shots_to_threshold: Option<u64>,
    pub trials: usize,
    pub stop_reason: StopReason,
    pub avg_point_shots: f64,
    pub avg_distinct: f64,
    pub stage2_shots: u64,
    pub stage2_initial_probability: Option<f64>,
    pub stage2_final_probability: Option<f64>,
    pub instance_index: usize,
    pub master_seed: u64,
    pub config_hash: String,
}

impl Record {
    pub fn point(&self) -> SweepPoint {
        SweepPoint {
            n: self.n,
            p: self.p,
            lambda: self.lambda,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialLine {
    pub method: Method,
    pub n: usize,
    pub p: usize,
    pub lambda: f64,
    pub instance_seed: u64,
    pub run_seed: u64,
    #[serde(flatten)]
    pub trial: TrialRecord,
}

#[derive(Debug, Clone)]
pub struct CellOutput {
    pub cell: Cell,
    pub instance: MaxCutInstance,
    pub run: RunResult,
    pub record: Record,
}

impl CellOutput {
    pub fn trial_lines(&self) -> Vec<TrialLine> {
        let r = &self.record;
        self.run
            .trial_records()
            .into_iter()
            .map(|trial| TrialLine {
                method: r.method,
                n: r.n,
                p: r.p,
                lambda: r.lambda,
                instance_seed: r.instance_seed,
                run_seed: r.run_seed,
                trial,
            })
            .collect()
    }
}

pub fn run_cell(cfg: &ExperimentConfig, cell: &Cell, config_hash: &str) -> Result<CellOutput> {
    let SweepPoint { n, p, lambda } = cell.point;
    let inst_seed = instance_seed(cfg.experiment.master_seed, &cell.point, cell.instance_index);
    let seed = run_seed(inst_seed, cell.method);
    let instance = build_instance(cfg, n, inst_seed)?;
    let noise = NoiseSpec::for_circuit(lambda, &instance, p)?;
    let mut run = run_method(cfg, cell.method, &instance, p, &noise, seed)?;

    let mut stage2 = (None, None);
    if cfg.experiment.stage2 {
        let sim = QaoaSimulator::new(&instance)?;
        let out = amplify(
            &sim,
            &run.best_params,
            &run.final_eval.mode,
            &cfg.amplify_config(),
            &noise,
            derive_seed(seed, &[STAGE2_TAG]),
            &mut run.ledger,
        )?;
        stage2 = (out.trace.first().copied(), out.trace.last().copied());
    }

    let m = metrics(&instance, &run, cfg.experiment.threshold)?;
    let record = Record {
        method: cell.method,
        n,
        p,
        lambda,
        instance_seed: inst_seed,
        run_seed: seed,
        final_mode_accuracy: m.final_mode_accuracy,
        final_expectation_accuracy: m.final_expectation_accuracy,
        final_best_sample_accuracy: m.final_best_sample_accuracy,
        total_shots: m.total_shots,
        optimization_shots: m.optimization_shots,
        final_eval_shots: m.final_eval_shots,
        shots_to_threshold: m.shots_to_threshold,
        trials: run.trials.len(),
        stop_reason: run.stop_reason,
        avg_point_shots: run.ledger.mean_point_shots().unwrap_or(0.0),
        avg_distinct: run.ledger.mean_distinct().unwrap_or(0.0),
        stage2_shots: m.stage2_shots,
        stage2_initial_probability: stage2.0,
        stage2_final_probability: stage2.1,
        instance_index: cell.instance_index,
        master_seed: cfg.experiment.master_seed,
        config_hash: config_hash.to_string(),
    };
    Ok(CellOutput {
        cell: *cell,
        instance,
        run,
        record,
    })
}

/// Runs every cell in parallel and returns them in cell order.
pub fn run_cells(cfg: &ExperimentConfig) -> Result<Vec<CellOutput>> {
    cfg.validate()?;
    let hash = cfg.hash();
    let cells = cells(cfg);
    cells.par_iter().map(|c| run_cell(cfg, c, &hash)).collect()
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub cells: Vec<CellOutput>,
    pub aggregates: Vec<AggregateRow>,
}

impl ExperimentOutput {
    pub fn records(&self) -> Vec<&Record> {
        self.cells.iter().map(|c| &c.record).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
struct Metadata<'a> {
    created_unix_seconds: u64,
    wall_seconds: f64,
    experiment: &'a str,
    config_hash: &'a str,
    master_seed: u64,
    records: usize,
    version: &'a str,
}

/// Runs the sweep and writes config, records, per-trial traces, aggregates,
/// plot data and a metadata file into the configured output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let dir = cfg.experiment.output_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| BenchError::io(&dir, e))?;
    let start = Instant::now();
    let cells = run_cells(cfg)?;
    let wall = start.elapsed().as_secs_f64();

    cfg.save(&dir.join(CONFIG_FILE))?;
    let records: Vec<Record> = cells.iter().map(|c| c.record.clone()).collect();
    write_jsonl(&dir.join(RECORDS_FILE), &records)?;
    let trials: Vec<TrialLine> = cells.iter().flat_map(|c| c.trial_lines()).collect();
    write_jsonl(&dir.join(TRIALS_FILE), &trials)?;

    let aggregates = aggregate(&records);
    write_aggregate(&dir.join(AGGREGATE_FILE), &aggregates)?;
    emit_plot_data(&aggregates, &dir.join(PLOTS_DIR))?;

    let hash = cfg.hash();
    let created = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let meta = Metadata {
        created_unix_seconds: created,
        wall_seconds: wall,
        experiment: cfg.experiment.kind.name(),
        config_hash: &hash,
        master_seed: cfg.experiment.master_seed,
        records: records.len(),
        version: env!("CARGO_PKG_VERSION"),
    };
    write_atomic(
        &dir.join(METADATA_FILE),
        serde_json::to_string_pretty(&meta)?.as_bytes(),
    )?;
    Ok(ExperimentOutput { cells, aggregates })
}

pub fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut buf = Vec::new();
    for row in rows {
        serde_json::to_writer(&mut buf, row)?;
        buf.push(b'\n');
    }
    write_atomic(path, &buf)
}

pub fn read_records(path: &Path) -> Result<Vec<Record>> {
    let text = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(BenchError::from))
        .collect()
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp).map_err(|e| BenchError::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| BenchError::io(&tmp, e))?;
    f.sync_all().map_err(|e| BenchError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| BenchError::io(path, e))
}
