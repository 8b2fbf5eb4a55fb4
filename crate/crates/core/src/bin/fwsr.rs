use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use fwsr::baselines::{k_medoids, random_select, rrqr_select};
use fwsr::bench::{run_bench, BenchConfig};
use fwsr::experiments::{
    run_experiment, Exp1Config, Exp2Config, ExperimentConfig, ExperimentReport, FwsrSettings,
    Method, Sweep, DEFAULT_ALPHA_GRID, DEFAULT_NOISE_LEVELS,
};
use fwsr::io::{
    class_partition, load_matrix, ClassSelection, InputFormat, InputSpec, LabelColumn,
    Orientation, ResultDocument, SCHEMA_VERSION,
};
use fwsr::{solve, Centering, DenseMatrix, GapThreshold, KernelSpec, NormKind, SolverConfig, Status};

#[derive(Parser, Debug)]
#[command(name = "fwsr", version, about = "Exemplar selection with greedy Frank-Wolfe")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Select exemplars from a dataset.
    Select(SelectArgs),
    /// Run a synthetic recovery sweep.
    Experiment {
        #[command(subcommand)]
        which: ExperimentCommand,
    },
    /// Time solver iterations across dataset sizes.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    F64le,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OrientationArg {
    #[value(name = "points-as-rows", alias = "rows")]
    PointsAsRows,
    #[value(name = "points-as-cols", alias = "cols")]
    PointsAsCols,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum QArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    #[value(name = "inf")]
    Inf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KernelArg {
    Linear,
    Rbf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CenterArg {
    None,
    Datapoint,
    Feature,
}

#[derive(Clone, Copy, Debug, PartialEq, ValueEnum)]
enum MethodArg {
    Fwsr,
    Random,
    Kmedoids,
    Rrqr,
}

#[derive(Args, Debug)]
struct SelectArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    #[arg(long, value_enum, default_value = "points-as-rows")]
    orientation: OrientationArg,
    /// The first CSV row is a header.
    #[arg(long)]
    header: bool,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 10.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    eta: f64,
    #[arg(long, value_enum, default_value = "2")]
    q: QArg,
    /// Absolute gap threshold; defaults to 1e-7 times the first gap.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, value_enum, default_value = "linear")]
    kernel: KernelArg,
    #[arg(long, default_value_t = 1.0)]
    rbf_width: f64,
    #[arg(long, value_enum, default_value = "datapoint")]
    center: CenterArg,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Label column (name or zero-based index); enables per-class selection.
    #[arg(long)]
    labels: Option<String>,
    #[arg(long, value_enum, default_value = "fwsr")]
    method: MethodArg,
    #[arg(long, default_value_t = 100)]
    kmedoids_max_sweeps: usize,
    /// Output path; the document is printed to stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Comma-separated methods.
    #[arg(long, value_delimiter = ',', default_value = "fwsr,random,kmedoids,rrqr")]
    methods: Vec<MethodArg>,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "results")]
    output_dir: PathBuf,
    /// FWSR alpha values; more than one tunes per sweep point.
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.0)]
    eta: f64,
    #[arg(long, value_enum, default_value = "datapoint")]
    center: CenterArg,
    #[arg(long, default_value_t = 100)]
    kmedoids_max_sweeps: usize,
}

#[derive(Subcommand, Debug)]
enum ExperimentCommand {
    /// Recover generating exemplars of random convex mixtures.
    Exp1 {
        #[arg(long, value_delimiter = ',')]
        noise_levels: Option<Vec<f64>>,
        #[arg(long, default_value_t = 30)]
        n_exemplars: usize,
        #[arg(long, default_value_t = 200)]
        dim: usize,
        #[arg(long, default_value_t = 120)]
        n_mixtures: usize,
        #[arg(long, default_value_t = 3)]
        mixture_support: usize,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Hit every cluster of isotropic Gaussian blobs.
    Exp2 {
        #[arg(long, value_delimiter = ',', default_value = "5,10,15,20")]
        clusters: Vec<usize>,
        #[arg(long, default_value_t = 1000)]
        n_points: usize,
        #[arg(long, default_value_t = 1500)]
        dim: usize,
        #[arg(long, default_value_t = 20.0)]
        sigma: f64,
        #[arg(long, default_value_t = 100.0)]
        center_half_width: f64,
        #[command(flatten)]
        sweep: SweepArgs,
    },
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "500,1000")]
    n_list: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    d: usize,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 3)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 40)]
    iterations: usize,
    #[arg(long, default_value_t = 10.0)]
    alpha: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

impl From<CenterArg> for Centering {
    fn from(c: CenterArg) -> Self {
        match c {
            CenterArg::None => Centering::None,
            CenterArg::Datapoint => Centering::PerDatapoint,
            CenterArg::Feature => Centering::PerFeature,
        }
    }
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Fwsr => Method::Fwsr,
            MethodArg::Random => Method::Random,
            MethodArg::Kmedoids => Method::Kmedoids,
            MethodArg::Rrqr => Method::Rrqr,
        }
    }
}

/// Failures that should exit with status 1.
#[derive(Debug)]
struct Failure(anyhow::Error);

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
        Command::Select(args) => cmd_select(&args),
        Command::Experiment { which } => cmd_experiment(&which).map(|_| 0),
        Command::Bench(args) => cmd_bench(&args).map(|_| 0),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn fail<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure(e.into())
}

struct Selection {
    indices: Vec<usize>,
    status: Status,
    iterations: usize,
    objective_trace: Vec<f64>,
    gap_trace: Vec<f64>,
}

fn solver_config(args: &SelectArgs, k: usize) -> SolverConfig {
    let mut cfg = SolverConfig::new(k);
    cfg.alpha = args.alpha;
    cfg.eta = args.eta;
    cfg.q = match args.q {
        QArg::One => NormKind::One,
        QArg::Two => NormKind::Two,
        QArg::Inf => NormKind::Infinity,
    };
    if let Some(d) = args.delta {
        cfg.delta = GapThreshold::Absolute(d);
    }
    cfg.kernel = match args.kernel {
        KernelArg::Linear => KernelSpec::Linear,
        KernelArg::Rbf => KernelSpec::Rbf { width: args.rbf_width },
    };
    cfg.centering = args.center.into();
    cfg.max_iter = args.max_iter;
    cfg
}

fn run_selector(args: &SelectArgs, a: &DenseMatrix) -> Result<Selection> {
    let k = args.k;
    let baseline = |indices: Vec<usize>| Selection {
        indices,
        status: Status::KReached,
        iterations: 0,
        objective_trace: vec![],
        gap_trace: vec![],
    };
    Ok(match args.method {
        MethodArg::Fwsr => {
            let res = solve(a, &solver_config(args, k))?;
            Selection {
                indices: res.exemplar_indices,
                status: res.status,
                iterations: res.iterations,
                objective_trace: res.objective_trace,
                gap_trace: res.gap_trace,
            }
        }
        MethodArg::Random => baseline(random_select(a.cols(), k, args.seed)?),
        MethodArg::Kmedoids => baseline(k_medoids(a, k, args.seed, args.kmedoids_max_sweeps)?.medoids),
        MethodArg::Rrqr => baseline(rrqr_select(a, k)?),
    })
}

fn worst_status(statuses: impl Iterator<Item = Status>) -> Status {
    let rank = |s: Status| match s {
        Status::KReached => 0,
        Status::GapConverged => 1,
        Status::MaxIter => 2,
        Status::Stalled => 3,
    };
    statuses.max_by_key(|&s| rank(s)).unwrap_or(Status::KReached)
}

fn cmd_select(args: &SelectArgs) -> std::result::Result<u8, Failure> {
    let start = Instant::now();
    let spec = InputSpec {
        path: args.input.clone(),
        format: match args.format {
            FormatArg::Csv => InputFormat::Csv,
            FormatArg::F64le => InputFormat::F64le,
        },
        orientation: match args.orientation {
            OrientationArg::PointsAsRows => Orientation::PointsAsRows,
            OrientationArg::PointsAsCols => Orientation::PointsAsCols,
        },
        has_header: args.header,
        label_column: args.labels.as_ref().map(|l| match l.parse::<usize>() {
            Ok(i) if !args.header => LabelColumn::Index(i),
            _ => LabelColumn::Name(l.clone()),
        }),
    };
    let data = load_matrix(&spec).map_err(fail)?;
    let a = &data.matrix;

    let mut config = json!({
        "input": spec,
        "k": args.k,
        "method": format!("{:?}", args.method).to_lowercase(),
        "seed": args.seed,
        "n": a.cols(),
        "d": a.rows(),
    });
    if args.method == MethodArg::Fwsr {
        let cfg = solver_config(args, args.k);
        config["solver"] = serde_json::to_value(&cfg).map_err(fail)?;
        config["solver"]["max_iter"] = json!(cfg.effective_max_iter());
        config["solver"]["beta"] = json!(cfg.beta(a.cols()));
    } else if args.method == MethodArg::Kmedoids {
        config["kmedoids_max_sweeps"] = json!(args.kmedoids_max_sweeps);
    }

    let mut doc = ResultDocument {
        schema_version: SCHEMA_VERSION.into(),
        command: std::env::args().collect(),
        config,
        exemplar_indices: None,
        classes: None,
        status: Status::KReached,
        iterations: 0,
        objective_trace: vec![],
        gap_trace: vec![],
        elapsed_ms: 0.0,
        seed: args.seed,
    };

    match &data.labels {
        None => {
            let sel = run_selector(args, a).map_err(fail)?;
            doc.exemplar_indices = Some(sel.indices);
            doc.status = sel.status;
            doc.iterations = sel.iterations;
            doc.objective_trace = sel.objective_trace;
            doc.gap_trace = sel.gap_trace;
        }
        Some(labels) => {
            let parts = class_partition(labels);
            if let Some((name, members)) = parts.iter().find(|(_, m)| m.len() < args.k) {
                return Err(fail(anyhow::anyhow!(
                    "class {name:?} has {} points, fewer than k = {}",
                    members.len(),
                    args.k
                )));
            }
            let mut classes = BTreeMap::new();
            for (name, members) in &parts {
                let sub = a.select_columns(members);
                let sel = run_selector(args, &sub)
                    .with_context(|| format!("selecting exemplars for class {name:?}"))
                    .map_err(fail)?;
                classes.insert(
                    name.clone(),
                    ClassSelection {
                        exemplar_indices: sel.indices.iter().map(|&i| members[i]).collect(),
                        status: sel.status,
                        iterations: sel.iterations,
                        objective_trace: sel.objective_trace,
                        gap_trace: sel.gap_trace,
                    },
                );
            }
            doc.status = worst_status(classes.values().map(|c| c.status));
            doc.iterations = classes.values().map(|c| c.iterations).sum();
            doc.classes = Some(classes);
        }
    }
    doc.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;

    let text = doc.to_json().map_err(fail)?;
    match &args.output {
        Some(p) => fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display())).map_err(fail)?,
        None => println!("{text}"),
    }
    Ok(if doc.status.is_success() { 0 } else { 2 })
}

fn write_sweep_csv(path: &Path, report: &ExperimentReport) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
    w.write_record(["sweep_value", "method", "mean_recovery", "std_recovery", "mean_time_ms", "mean_iterations"])?;
    for r in &report.rows {
        w.write_record([
            r.sweep_value.to_string(),
            r.method.name().to_string(),
            r.mean_recovery.to_string(),
            r.std_recovery.to_string(),
            format!("{:.6}", r.mean_time_ms),
            r.mean_iterations.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_experiment(which: &ExperimentCommand) -> std::result::Result<(), Failure> {
    let (name, sweep, args) = match which {
        ExperimentCommand::Exp1 { noise_levels, n_exemplars, dim, n_mixtures, mixture_support, sweep } => {
            let base = Exp1Config {
                n_exemplars: *n_exemplars,
                ambient_dim: *dim,
                n_mixtures: *n_mixtures,
                mixture_support: *mixture_support,
                trials: sweep.trials,
                seed: sweep.seed,
                ..Exp1Config::default()
            };
            let levels = noise_levels.clone().unwrap_or_else(|| DEFAULT_NOISE_LEVELS.to_vec());
            ("exp1", Sweep::Exp1 { base, noise_levels: levels }, sweep)
        }
        ExperimentCommand::Exp2 { clusters, n_points, dim, sigma, center_half_width, sweep } => {
            let base = Exp2Config {
                n_points: *n_points,
                ambient_dim: *dim,
                cluster_sigma: *sigma,
                center_half_width: *center_half_width,
                trials: sweep.trials,
                seed: sweep.seed,
                ..Exp2Config::default()
            };
            ("exp2", Sweep::Exp2 { base, clusters: clusters.clone() }, sweep)
        }
    };
    let alphas = args.alpha.clone().unwrap_or_else(|| match name {
        "exp1" => DEFAULT_ALPHA_GRID.to_vec(),
        _ => vec![10.0],
    });
    let mut fwsr = FwsrSettings::fixed(10.0, args.eta);
    fwsr.alphas = alphas;
    fwsr.centering = args.center.into();
    let mut methods: Vec<Method> = args.methods.iter().map(|&m| m.into()).collect();
    methods.dedup();
    let cfg = ExperimentConfig {
        sweep,
        methods,
        fwsr,
        trials: args.trials,
        seed: args.seed,
        kmedoids_max_sweeps: args.kmedoids_max_sweeps,
    };
    let report = run_experiment(&cfg).map_err(fail)?;

    let dir = &args.output_dir;
    let trial_dir = dir.join(format!("{name}_trials"));
    fs::create_dir_all(&trial_dir).with_context(|| format!("creating {}", trial_dir.display())).map_err(fail)?;
    let csv_path = dir.join(format!("{name}_sweep.csv"));
    write_sweep_csv(&csv_path, &report).with_context(|| format!("writing {}", csv_path.display())).map_err(fail)?;
    for t in &report.trials {
        let p = trial_dir.join(format!("{}_{}_{:03}.json", t.method.name(), t.sweep_value, t.trial));
        let doc = json!({ "schema_version": SCHEMA_VERSION, "experiment": name, "trial": t });
        fs::write(&p, serde_json::to_string_pretty(&doc).map_err(fail)? + "\n").map_err(fail)?;
    }
    let meta = json!({
        "schema_version": SCHEMA_VERSION,
        "experiment": name,
        "command": std::env::args().collect::<Vec<_>>(),
        "config": cfg,
        "rows": report.rows,
        "notes": "exemplar/center distributions and noise levels are generator defaults, not measured values",
    });
    let meta_path = dir.join(format!("{name}_summary.json"));
    fs::write(&meta_path, serde_json::to_string_pretty(&meta).map_err(fail)? + "\n").map_err(fail)?;

    for r in &report.rows {
        eprintln!(
            "{name} sweep={} method={} recovery={:.3}±{:.3} alpha={}",
            r.sweep_value,
            r.method.name(),
            r.mean_recovery,
            r.std_recovery,
            r.alpha.map_or("-".to_string(), |a| a.to_string())
        );
    }
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> std::result::Result<(), Failure> {
    let cfg = BenchConfig {
        n_list: args.n_list.clone(),
        d: args.d,
        k: args.k,
        trials: args.trials,
        seed: args.seed,
        iterations: args.iterations,
        alpha: args.alpha,
        ..BenchConfig::default()
    };
    if cfg.n_list.is_empty() {
        return Err(fail(anyhow::anyhow!("--n-list must not be empty")));
    }
    let rows = run_bench(&cfg).map_err(fail)?;
    let mut out: Box<dyn Write> = match &args.output {
        Some(p) => Box::new(fs::File::create(p).with_context(|| format!("creating {}", p.display())).map_err(fail)?),
        None => Box::new(std::io::stdout()),
    };
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut out);
    let res: Result<()> = (|| {
        w.write_record(["n", "d", "k", "median_iter_ms", "k_dagger", "time_ratio", "gram_ms"])?;
        for r in &rows {
            w.write_record([
                r.n.to_string(),
                r.d.to_string(),
                r.k.to_string(),
                format!("{:.6}", r.median_iter_ms),
                r.median_k_dagger.map_or(String::new(), |k| k.to_string()),
                format!("{:.4}", r.time_ratio),
                format!("{:.3}", r.gram_ms),
            ])?;
        }
        w.flush()?;
        Ok(())
    })();
    res.map_err(Failure)
}
