use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use modeqaoa_bench::config::{ExperimentConfig, ExperimentKind};
use modeqaoa_bench::harness::{
    self, read_records, write_jsonl, AGGREGATE_FILE, PLOTS_DIR, RECORDS_FILE,
};
use modeqaoa_bench::report::{aggregate, emit_plot_data, write_aggregate};
use modeqaoa_bench::{BenchError, Result};
use modeqaoa_core::bo::Method;
use modeqaoa_core::graph::{MaxCutInstance, WeightScheme};
use modeqaoa_core::resources::metrics;
use modeqaoa_core::simulator::NoiseSpec;

#[derive(Parser)]
#[command(
    name = "modeqaoa",
    version,
    about = "Mode-targeted QAOA experiments for weighted MaxCut"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write seeded random regular instances as JSON files.
    Gen(GenArgs),
    /// Run one method on one instance and print its metrics as JSON.
    Run(RunArgs),
    /// Run a full sweep and write records, aggregates and plot data.
    Bench(BenchArgs),
    /// Recompute aggregates and plot data from an existing records file.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    degree: usize,
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, default_value = "unit")]
    weights: WeightScheme,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value = "instances")]
    out: PathBuf,
}

/// Overrides applied on top of a config file or preset.
#[derive(Args)]
struct Overrides {
    /// Config file; created with every default enumerated if missing.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    experiment: Option<ExperimentKind>,
    #[arg(long, value_delimiter = ',')]
    n_values: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    p_values: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    lambdas: Option<Vec<f64>>,
    #[arg(long)]
    instances_per_point: Option<usize>,
    #[arg(long)]
    weights: Option<WeightScheme>,
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    t_max: Option<usize>,
    #[arg(long)]
    n_fix: Option<u64>,
    #[arg(long)]
    n_final: Option<u64>,
    #[arg(long)]
    gd_iterations: Option<usize>,
    /// Enable Stage-2 amplification after each run.
    #[arg(long)]
    stage2: bool,
    /// Disable early stopping on stagnation.
    #[arg(long)]
    no_stagnation: bool,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    method: Method,
    /// Instance JSON file; otherwise a random regular instance is generated.
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long, default_value_t = 6)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    instance_seed: u64,
    #[arg(long, default_value_t = 2)]
    p: usize,
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-trial JSONL output.
    #[arg(long)]
    trials: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct BenchArgs {
    /// Master seed.
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct ReportArgs {
    /// Results directory containing records.jsonl.
    #[arg(long)]
    input: PathBuf,
    /// Output directory; defaults to the input directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn resolve(o: &Overrides) -> Result<ExperimentConfig> {
    let mut cfg = match &o.config {
        Some(path) if path.exists() => ExperimentConfig::load(path)?,
        _ => ExperimentConfig::preset(o.experiment.unwrap_or(ExperimentKind::QubitSweep)),
    };
    if let Some(path) = &o.config {
        if !path.exists() {
            cfg.save(path)?;
            eprintln!("wrote default config to {}", path.display());
        }
    }
    let e = &mut cfg.experiment;
    if let Some(k) = o.experiment {
        e.kind = k;
    }
    if let Some(v) = &o.n_values {
        e.n_values = v.clone();
    }
    if let Some(v) = &o.p_values {
        e.p_values = v.clone();
    }
    if let Some(v) = &o.lambdas {
        e.lambdas = v.clone();
    }
    if let Some(v) = o.instances_per_point {
        e.instances_per_point = v;
    }
    if let Some(v) = o.weights {
        e.weights = v;
    }
    if let Some(v) = &o.methods {
        e.methods = v.clone();
    }
    if let Some(v) = o.threshold {
        e.threshold = v;
    }
    if o.stage2 {
        e.stage2 = true;
    }
    if let Some(v) = o.t_max {
        cfg.search.t_max = v;
    }
    if let Some(v) = o.n_fix {
        cfg.search.n_fix = v;
    }
    if let Some(v) = o.n_final {
        cfg.search.n_final = v;
    }
    if let Some(v) = o.gd_iterations {
        cfg.gd.iterations = v;
    }
    if o.no_stagnation {
        cfg.stagnation.enabled = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn gen(args: GenArgs) -> Result<()> {
    fs::create_dir_all(&args.out).map_err(|e| BenchError::io(&args.out, e))?;
    let mut cfg = ExperimentConfig::preset(ExperimentKind::Single);
    cfg.experiment.degree = args.degree;
    cfg.experiment.weights = args.weights;
    for i in 0..args.count {
        let seed = modeqaoa_core::rng::derive_seed(args.seed, &[i as u64]);
        let g = harness::build_instance(&cfg, args.n, seed)?.with_seed(seed);
        let path = args
            .out
            .join(format!("n{}_d{}_{i:03}.json", args.n, args.degree));
        harness::write_atomic(&path, g.to_json().as_bytes())?;
        println!("{}", path.display());
    }
    Ok(())
}

fn run(args: RunArgs) -> Result<()> {
    let cfg = resolve(&args.overrides)?;
    let instance = match &args.instance {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
            MaxCutInstance::from_json(&text)?
        }
        None => harness::build_instance(&cfg, args.n, args.instance_seed)?,
    };
    let noise = NoiseSpec::for_circuit(args.lambda, &instance, args.p)?;
    let result = harness::run_method(&cfg, args.method, &instance, args.p, &noise, args.seed)?;
    let report = metrics(&instance, &result, cfg.experiment.threshold)?;
    if let Some(path) = &args.trials {
        write_jsonl(path, &result.trial_records())?;
    }
    let out = serde_json::json!({
        "method": args.method,
        "n": instance.n(),
        "p": args.p,
        "lambda": args.lambda,
        "seed": args.seed,
        "best_bitstring": result.best_bitstring,
        "best_objective": result.best_objective,
        "best_theta": result.best_params.theta(),
        "final": result.final_eval,
        "stop_reason": result.stop_reason,
        "trials": result.trials.len(),
        "metrics": report,
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn bench(args: BenchArgs) -> Result<()> {
    let mut cfg = resolve(&args.overrides)?;
    cfg.experiment.master_seed = args.seed;
    if let Some(out) = args.out {
        cfg.experiment.output_dir = out;
    }
    let output = harness::run_experiment(&cfg)?;
    eprintln!(
        "{} records written to {}",
        output.cells.len(),
        cfg.experiment.output_dir.join(RECORDS_FILE).display()
    );
    Ok(())
}

fn report(args: ReportArgs) -> Result<()> {
    let records = read_records(&args.input.join(RECORDS_FILE))?;
    let out = args.out.unwrap_or(args.input);
    fs::create_dir_all(&out).map_err(|e| BenchError::io(&out, e))?;
    let rows = aggregate(&records);
    write_aggregate(&out.join(AGGREGATE_FILE), &rows)?;
    emit_plot_data(&rows, &out.join(PLOTS_DIR))?;
    eprintln!(
        "{} aggregate rows from {} records",
        rows.len(),
        records.len()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Run(a) => run(a),
        Command::Bench(a) => bench(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
