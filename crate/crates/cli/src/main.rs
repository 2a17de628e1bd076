//! `crowdforge`: simulate crowds, aggregate labels, run experiments, size expert budgets.
//!
//! Exit status: 0 on success, 2 for usage, I/O and parse errors, 3 for math-domain and
//! numeric errors.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use crowdforge::baselines::{DawidSkeneParams, KargerParams};
use crowdforge::bound::{self, BoundInputs};
use crowdforge::elice2::Elice2Params;
use crowdforge::elice3::Elice3Params;
use crowdforge::experiment::{
    self, DatasetSource, ExperimentConfig, ExpertSelection, RunOptions, SelectionMode,
};
use crowdforge::sampling::KMeansInit;
use crowdforge::simulator::{self, Bands, CrowdSpec};
use crowdforge::{
    io, method, AbilityVector, ComparisonMode, DifficultyVector, Error, ExpertLabels, Method,
    MethodKind, ResultParams,
};
use serde::Serialize;

const THREADS_ENV: &str = "CROWDFORGE_THREADS";

#[derive(Parser)]
#[command(
    name = "crowdforge",
    version,
    about = "Expert-anchored crowd-label aggregation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate ground truth and crowd labels from good, random and malicious labelers.
    Simulate(SimulateArgs),
    /// Aggregate a label matrix into one label per instance.
    Aggregate(AggregateArgs),
    /// Run a multi-run experiment or bad-fraction sweep from a JSON config.
    Bench(BenchArgs),
    /// Minimum number of expert labels for a crowd quality c and dataset ease d.
    Bound(BoundArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Number of instances.
    #[arg(long)]
    n: usize,
    /// Number of labelers.
    #[arg(long)]
    m: usize,
    /// Fraction of good labelers (mistake rate in [0, 0.35)).
    #[arg(long)]
    good: f64,
    /// Fraction of random labelers (mistake rate in [0.35, 0.65)).
    #[arg(long)]
    random: f64,
    /// Fraction of malicious labelers (mistake rate in [0.65, 1]).
    #[arg(long)]
    malicious: f64,
    /// Fraction of +1 instances in the truth.
    #[arg(long, default_value_t = 0.5)]
    positive_fraction: f64,
    /// Seed for every random draw.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Label matrix CSV to write.
    #[arg(long)]
    out_labels: PathBuf,
    /// Truth CSV to write.
    #[arg(long)]
    out_truth: PathBuf,
    /// Also write 2-D Gaussian instance features (class means ±(2, 2)).
    #[arg(long)]
    out_features: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SelectionArg {
    Uniform,
    Cluster,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Pairwise,
    Circular,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Majority,
    DawidSkene,
    Karger,
    Elice1,
    Elice2,
    Elice3,
}

impl From<MethodArg> for MethodKind {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Majority => MethodKind::Majority,
            MethodArg::DawidSkene => MethodKind::DawidSkene,
            MethodArg::Karger => MethodKind::Karger,
            MethodArg::Elice1 => MethodKind::Elice1,
            MethodArg::Elice2 => MethodKind::Elice2,
            MethodArg::Elice3 => MethodKind::Elice3,
        }
    }
}

#[derive(Args)]
struct AggregateArgs {
    /// Aggregation method.
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Label matrix CSV: one row per instance, -1/1/0 (0 = missing).
    #[arg(long)]
    labels: PathBuf,
    /// Expert labels CSV: `instance_index,label` per line.
    #[arg(long, conflicts_with = "expert_selection")]
    expert: Option<PathBuf>,
    /// Pick the expert subset instead of reading it; labels come from --truth.
    #[arg(long, value_enum, requires = "truth")]
    expert_selection: Option<SelectionArg>,
    /// Size of the selected expert subset.
    #[arg(long, default_value_t = 20)]
    n: usize,
    /// Cluster count for --expert-selection cluster.
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Instance features CSV for --expert-selection cluster.
    #[arg(long)]
    features: Option<PathBuf>,
    /// Truth CSV; when given, accuracy is printed.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Scale c of the flip-aware vote (ELICE 2 default 3, ELICE 3 default 100).
    #[arg(long)]
    scale_c: Option<f64>,
    /// ELICE 3 comparison design (default: pairwise up to 2000 instances, else circular).
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// ELICE 3 ridge term for labelers.
    #[arg(long, default_value_t = crowdforge::elice3::DEFAULT_RIDGE)]
    mu: f64,
    /// ELICE 3 ridge term for instances.
    #[arg(long, default_value_t = crowdforge::elice3::DEFAULT_RIDGE)]
    nu: f64,
    /// Iterations for Karger (default 10) or the EM cap for Dawid-Skene (default 100).
    #[arg(long)]
    iterations: Option<usize>,
    /// Dawid-Skene convergence tolerance on the log-likelihood.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Seed for Karger's initial messages and for expert selection.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Overwrite the output on expert instances with the expert labels.
    #[arg(long)]
    clamp_expert: bool,
    /// Result JSON to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Experiment config JSON.
    #[arg(long)]
    config: PathBuf,
    /// Report JSON to write.
    #[arg(long)]
    out: PathBuf,
    /// Flat CSV (`method,bad_fraction,mean_acc,sd,runs`) to write.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Record wall time per cell (makes the report machine-dependent).
    #[arg(long)]
    timings: bool,
}

#[derive(Args)]
struct BoundArgs {
    /// Crowd quality c in (0, 1).
    #[arg(
        long,
        required_unless_present = "labels",
        requires = "d",
        conflicts_with = "labels"
    )]
    c: Option<f64>,
    /// Dataset ease d in (0, 1).
    #[arg(long, requires = "c")]
    d: Option<f64>,
    /// Label matrix CSV to estimate c and d from.
    #[arg(long, requires = "expert")]
    labels: Option<PathBuf>,
    /// Expert labels CSV to estimate c and d from.
    #[arg(long, requires = "labels")]
    expert: Option<PathBuf>,
    /// Confidence parameter δ in (0, 1).
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
}

#[derive(Serialize)]
struct ResultFile<'a> {
    schema_version: u32,
    method: MethodKind,
    params: &'a ResultParams,
    labels: &'a [i8],
    #[serde(skip_serializing_if = "Option::is_none")]
    abilities: Option<&'a [f64]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    difficulties: Option<&'a [f64]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    accuracy: Option<f64>,
    #[serde(skip_serializing_if = "<[usize]>::is_empty")]
    unscored_labelers: &'a [usize],
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    expert_clamped: bool,
}

fn write_atomic(
    path: &Path,
    contents: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
) -> Result<(), Error> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    contents(&mut tmp).map_err(io_err)?;
    tmp.flush().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<(), Error> {
    let spec = CrowdSpec {
        n_instances: args.n,
        n_labelers: args.m,
        fractions: [args.good, args.random, args.malicious],
        bands: Bands::default(),
        positive_fraction: args.positive_fraction,
        seed: args.seed,
    };
    let data = simulator::simulate(&spec, args.out_features.is_some())?;
    write_atomic(&args.out_labels, |w| io::write_labels(w, &data.labels))?;
    write_atomic(&args.out_truth, |w| io::write_truth(w, &data.truth))?;
    if let (Some(path), Some(features)) = (&args.out_features, &data.features) {
        write_atomic(path, |w| io::write_features(w, features))?;
    }
    let counts = simulator::category_counts(spec.fractions, spec.n_labelers);
    println!(
        "simulated {} instances, {} labelers (good {}, random {}, malicious {})",
        args.n, args.m, counts[0], counts[1], counts[2]
    );
    Ok(())
}

fn build_method(args: &AggregateArgs) -> Method {
    match MethodKind::from(args.method) {
        MethodKind::Majority => Method::Majority,
        MethodKind::DawidSkene => Method::DawidSkene(DawidSkeneParams {
            max_iter: args
                .iterations
                .unwrap_or(DawidSkeneParams::default().max_iter),
            tol: args.tol,
        }),
        MethodKind::Karger => Method::Karger(KargerParams {
            iterations: args
                .iterations
                .unwrap_or(KargerParams::default().iterations),
            seed: args.seed,
        }),
        MethodKind::Elice1 => Method::Elice1,
        MethodKind::Elice2 => Method::Elice2(Elice2Params {
            scale_c: args.scale_c.unwrap_or(Elice2Params::default().scale_c),
        }),
        MethodKind::Elice3 => {
            let d = Elice3Params::default();
            Method::Elice3(Elice3Params {
                mode: args.mode.map(|m| match m {
                    ModeArg::Pairwise => ComparisonMode::Pairwise,
                    ModeArg::Circular => ComparisonMode::Circular,
                }),
                mu: args.mu,
                nu: args.nu,
                score_scale: d.score_scale,
                aggregation_scale: args.scale_c.unwrap_or(d.aggregation_scale),
            })
        }
    }
}

fn aggregate(args: AggregateArgs) -> Result<(), Error> {
    let labels = io::read_labels(&args.labels)?;
    let truth = args.truth.as_ref().map(io::read_truth).transpose()?;
    if let Some(t) = &truth {
        if t.len() != labels.n_instances() {
            return Err(Error::Shape(format!(
                "{} truth labels for {} instances",
                t.len(),
                labels.n_instances()
            )));
        }
    }
    let expert = match (&args.expert, args.expert_selection) {
        (Some(path), _) => Some(io::read_expert(path, labels.n_instances())?),
        (None, Some(mode)) => {
            let features = args.features.as_ref().map(io::read_features).transpose()?;
            let selection = ExpertSelection {
                n: args.n,
                mode: match mode {
                    SelectionArg::Uniform => SelectionMode::Uniform,
                    SelectionArg::Cluster => SelectionMode::Cluster,
                },
                k: args.k,
                init: KMeansInit::PlusPlus,
            };
            let idx = selection.select(labels.n_instances(), features.as_ref(), args.seed)?;
            let truth = truth.as_ref().expect("clap requires --truth");
            Some(ExpertLabels::from_truth(&idx, truth)?)
        }
        (None, None) => None,
    };

    let m = build_method(&args);
    let mut result = m.run(&labels, expert.as_ref())?;
    let clamped = match (&expert, args.clamp_expert) {
        (Some(e), true) => {
            method::clamp_to_expert(&mut result, e);
            true
        }
        _ => false,
    };
    let accuracy = truth
        .as_ref()
        .map(|t| crowdforge::accuracy(&result.labels, t))
        .transpose()?;

    let file = ResultFile {
        schema_version: 1,
        method: result.method,
        params: &result.params,
        labels: &result.labels,
        abilities: result.abilities.as_ref().map(AbilityVector::values),
        difficulties: result.difficulties.as_ref().map(DifficultyVector::values),
        accuracy,
        unscored_labelers: &result.unscored_labelers,
        expert_clamped: clamped,
    };
    let mut json = serde_json::to_string_pretty(&file)?;
    json.push('\n');
    write_atomic(&args.out, |w| w.write_all(json.as_bytes()))?;
    if !result.unscored_labelers.is_empty() {
        eprintln!(
            "warning: labelers {:?} labeled no expert instance; their ability is 0",
            result.unscored_labelers
        );
    }
    if let Some(a) = accuracy {
        println!("accuracy: {a:.6}");
    }
    Ok(())
}

fn threads_from_env() -> Result<Option<usize>, Error> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n >= 1)
            .map(Some)
            .ok_or_else(|| {
                Error::Invalid(format!("{THREADS_ENV}={v:?} is not a positive integer"))
            }),
        Err(_) => Ok(None),
    }
}

fn bench(args: BenchArgs) -> Result<(), Error> {
    let text = std::fs::read_to_string(&args.config).map_err(|source| Error::Io {
        path: args.config.clone(),
        source,
    })?;
    let mut config = ExperimentConfig::from_json(&text).map_err(|e| match e {
        Error::Json(j) => Error::Parse {
            path: args.config.clone(),
            line: j.line() as u64,
            message: j.to_string(),
        },
        other => other,
    })?;
    // relative data paths are taken from the config's directory
    if let (DatasetSource::Files(files), Some(dir)) = (&mut config.dataset, args.config.parent()) {
        for path in [
            Some(&mut files.labels),
            Some(&mut files.truth),
            files.features.as_mut(),
        ]
        .into_iter()
        .flatten()
        {
            if path.is_relative() {
                *path = dir.join(&*path);
            }
        }
    }
    let options = RunOptions {
        threads: threads_from_env()?,
        timings: args.timings,
    };
    let report = if config.sweep.is_some() {
        experiment::phase_sweep(&config, &options)?
    } else {
        experiment::run_experiment(&config, &options)?
    };
    let json = report.to_json()?;
    write_atomic(&args.out, |w| w.write_all(json.as_bytes()))?;
    if let Some(path) = &args.csv {
        let mut buf = Vec::new();
        report.write_csv(&mut buf)?;
        write_atomic(path, |w| w.write_all(&buf))?;
    }
    for cell in &report.cells {
        let mean = cell
            .mean_accuracy
            .map_or_else(|| "n/a".to_string(), |m| format!("{m:.4}"));
        let bad = cell
            .bad_fraction
            .map_or_else(String::new, |b| format!(" bad={b:.2}"));
        println!(
            "{}{bad}: mean accuracy {mean} over {} runs",
            cell.method, cell.runs
        );
    }
    if let Some(ts) = &report.transitions {
        for t in ts {
            match t.transition_point {
                Some(p) => println!(
                    "{}: transition at bad fraction {p:.2} (threshold {})",
                    t.method, t.threshold
                ),
                None => println!(
                    "{}: below threshold {} from the first point",
                    t.method, t.threshold
                ),
            }
        }
    }
    Ok(())
}

fn bound_cmd(args: BoundArgs) -> Result<(), Error> {
    let (c, d) = match (args.c, args.d, &args.labels, &args.expert) {
        (Some(c), Some(d), _, _) => (c, d),
        (_, _, Some(labels), Some(expert)) => {
            let labels = io::read_labels(labels)?;
            let expert = io::read_expert(expert, labels.n_instances())?;
            let (c, d) = bound::estimate_cd(&labels, &expert)?;
            println!(
                "estimated c={c:.6} d={d:.6} (clamped to [{}, 1-{}])",
                bound::CLAMP,
                bound::CLAMP
            );
            (c, d)
        }
        _ => unreachable!("clap enforces --c/--d or --labels/--expert"),
    };
    let report = bound::evaluate(&BoundInputs::new(c, d, args.delta)?)?;
    println!("e={:.6}", report.e);
    println!("epsilon={:.6}", report.epsilon);
    println!("n={}", report.n);
    Ok(())
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Domain(_) | Error::Numeric { .. } => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Aggregate(a) => aggregate(a),
        Command::Bench(a) => bench(a),
        Command::Bound(a) => bound_cmd(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
