//! Seeded multi-run accuracy experiments and bad-fraction sweeps.
//!
//! Every `(sweep point, run)` pair is an independent job. Its seed is derived from the base
//! seed, so the report does not depend on how many workers ran the jobs or in which order.
//! All methods of one job see the same label matrix and expert subset; each cell records a
//! SHA-256 digest of the inputs its methods received so this can be checked afterwards.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io;
use crate::method::MethodSpec;
use crate::metrics::{accuracy, mean_sd};
use crate::sampling::{kmeans_fit, sample_stratified, sample_uniform, FeatureMatrix, KMeansInit};
use crate::seed::{child_rng, derive_seed};
use crate::simulator::{self, Bands, CrowdSpec};
use crate::types::{ExpertLabels, LabelMatrix};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_THRESHOLD: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    Simulate(SimulationSource),
    Files(FileSource),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSource {
    pub n_instances: usize,
    pub n_labelers: usize,
    #[serde(default = "half")]
    pub positive_fraction: f64,
    #[serde(default)]
    pub bands: Bands,
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileSource {
    pub labels: PathBuf,
    pub truth: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<PathBuf>,
}

/// Crowd composition of a simulated point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Composition {
    /// `(good, random, malicious)` fractions.
    Fixed([f64; 3]),
    /// Per run, a bad-labeler count drawn uniformly from `min_bad..=max_bad`, split between
    /// random and malicious with expected share `random_share` random.
    BadBand {
        min_bad: usize,
        max_bad: usize,
        #[serde(default = "half")]
        random_share: f64,
    },
}

impl Composition {
    /// Bad counts `b` with `lo < b/M <= hi`, plus `b = 0` when `lo` is 0.
    pub fn bad_band(lo: f64, hi: f64, n_labelers: usize, random_share: f64) -> Result<Self> {
        let m = n_labelers as f64;
        let counts: Vec<usize> = (0..=n_labelers)
            .filter(|&b| {
                let f = b as f64 / m;
                (lo < f && f <= hi + 1e-12) || (lo == 0.0 && b == 0)
            })
            .collect();
        match (counts.first(), counts.last()) {
            (Some(&min_bad), Some(&max_bad)) => Ok(Composition::BadBand {
                min_bad,
                max_bad,
                random_share,
            }),
            _ => Err(Error::invalid(format!(
                "no bad-labeler count of {n_labelers} falls in ({lo}, {hi}]"
            ))),
        }
    }

    fn validate(&self, n_labelers: usize) -> Result<()> {
        match *self {
            Composition::Fixed(f) => check_triple(f),
            Composition::BadBand {
                min_bad,
                max_bad,
                random_share,
            } => {
                if min_bad > max_bad || max_bad > n_labelers {
                    return Err(Error::invalid(format!(
                        "bad band {min_bad}..={max_bad} does not fit {n_labelers} labelers"
                    )));
                }
                if !(0.0..=1.0).contains(&random_share) {
                    return Err(Error::invalid("random_share must lie in [0, 1]"));
                }
                Ok(())
            }
        }
    }

    /// Labeler counts `(good, random, malicious)` for one run.
    fn counts(&self, n_labelers: usize, run_seed: u64) -> [usize; 3] {
        match *self {
            Composition::Fixed(f) => simulator::category_counts(f, n_labelers),
            Composition::BadBand {
                min_bad,
                max_bad,
                random_share,
            } => {
                let mut rng = child_rng(run_seed, "composition", 0);
                let bad = rng.random_range(min_bad..=max_bad);
                let expected = bad as f64 * random_share;
                let mut random = expected.floor() as usize;
                if rng.random::<f64>() < expected - expected.floor() {
                    random += 1;
                }
                [n_labelers - bad, random, bad - random]
            }
        }
    }
}

fn check_triple(f: [f64; 3]) -> Result<()> {
    if f.iter().any(|v| !(*v >= 0.0)) || (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "fractions {f:?} must be non-negative and sum to 1"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMode {
    #[default]
    Uniform,
    Cluster,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpertSelection {
    pub n: usize,
    #[serde(default)]
    pub mode: SelectionMode,
    #[serde(default = "two")]
    pub k: usize,
    #[serde(default)]
    pub init: KMeansInit,
}

fn two() -> usize {
    2
}

const KMEANS_MAX_ITER: usize = 100;

impl ExpertSelection {
    pub fn uniform(n: usize) -> Self {
        Self {
            n,
            mode: SelectionMode::Uniform,
            k: 2,
            init: KMeansInit::PlusPlus,
        }
    }

    /// Indices chosen for expert labeling.
    pub fn select(
        &self,
        n_instances: usize,
        features: Option<&FeatureMatrix>,
        seed: u64,
    ) -> Result<Vec<usize>> {
        match self.mode {
            SelectionMode::Uniform => sample_uniform(self.n, n_instances, seed),
            SelectionMode::Cluster => {
                let features = features.ok_or_else(|| {
                    Error::invalid("cluster expert selection needs instance features")
                })?;
                if features.n_rows() != n_instances {
                    return Err(Error::shape(format!(
                        "{} feature rows for {n_instances} instances",
                        features.n_rows()
                    )));
                }
                let model = kmeans_fit(
                    features,
                    self.k,
                    derive_seed(seed, "kmeans", 0),
                    self.init,
                    KMEANS_MAX_ITER,
                )?;
                sample_stratified(&model, self.n, derive_seed(seed, "stratified", 0))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub methods: Vec<MethodSpec>,
    pub expert: ExpertSelection,
    pub runs: usize,
    pub seed: u64,
    /// Used for a simulated dataset without a sweep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub composition: Option<Composition>,
    /// `(good, random, malicious)` per point, in non-decreasing bad fraction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Vec<[f64; 3]>>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

/// `steps + 1` points from all-good to all-bad, bad labelers split `random_share` random.
pub fn linear_sweep(steps: usize, random_share: f64) -> Vec<[f64; 3]> {
    (0..=steps)
        .map(|s| {
            let bad = s as f64 / steps as f64;
            [1.0 - bad, bad * random_share, bad * (1.0 - random_share)]
        })
        .collect()
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::invalid("runs must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(Error::invalid("no methods configured"));
        }
        let mut labels = Vec::new();
        for m in &self.methods {
            m.build(0)?;
            let label = m.label()?;
            if labels.contains(&label) {
                return Err(Error::invalid(format!(
                    "method label {label} appears twice"
                )));
            }
            labels.push(label);
        }
        if self.expert.n == 0 {
            return Err(Error::invalid("expert subset size must be at least 1"));
        }
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(Error::invalid("threshold must lie in (0, 1]"));
        }
        match (&self.dataset, &self.composition, &self.sweep) {
            (DatasetSource::Files(_), None, None) => Ok(()),
            (DatasetSource::Files(_), _, _) => Err(Error::invalid(
                "composition and sweep apply to simulated datasets only",
            )),
            (DatasetSource::Simulate(s), Some(c), None) => c.validate(s.n_labelers),
            (DatasetSource::Simulate(_), None, Some(sweep)) => {
                if sweep.is_empty() {
                    return Err(Error::invalid("sweep is empty"));
                }
                for t in sweep {
                    check_triple(*t)?;
                }
                let bad: Vec<f64> = sweep.iter().map(|t| t[1] + t[2]).collect();
                if bad.windows(2).any(|w| w[1] < w[0] - 1e-12) {
                    return Err(Error::invalid("sweep must not decrease in bad fraction"));
                }
                Ok(())
            }
            (DatasetSource::Simulate(_), None, None) => Err(Error::invalid(
                "a simulated dataset needs a composition or a sweep",
            )),
            (DatasetSource::Simulate(_), Some(_), Some(_)) => Err(Error::invalid(
                "give either a composition or a sweep, not both",
            )),
        }
    }

    fn compositions(&self) -> Vec<Option<Composition>> {
        match (&self.sweep, self.composition) {
            (Some(sweep), _) => sweep.iter().map(|t| Some(Composition::Fixed(*t))).collect(),
            (None, c) => vec![c],
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Worker-pool size; `None` uses rayon's global pool.
    pub threads: Option<usize>,
    /// Record wall time per cell. Off by default so reports are byte-reproducible.
    pub timings: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    /// `(good, random, malicious)` labeler counts; absent for file datasets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<[usize; 3]>,
    pub input_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointReport {
    pub index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub composition: Option<Composition>,
    /// Mean realized fraction of random plus malicious labelers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bad_fraction: Option<f64>,
    pub runs: Vec<RunRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub run: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub method: String,
    pub point: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bad_fraction: Option<f64>,
    /// `None` when every run failed.
    pub mean_accuracy: Option<f64>,
    pub sd: Option<f64>,
    /// Number of successful runs the mean is taken over.
    pub runs: usize,
    pub accuracies: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<RunFailure>,
    /// Digest over the per-run input digests this cell's method received.
    pub inputs_sha256: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub method: String,
    pub threshold: f64,
    /// Last bad fraction of the leading stretch of points at or above the threshold.
    pub transition_point: Option<f64>,
    /// Index of that point in the sweep.
    pub point: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub points: Vec<PointReport>,
    pub cells: Vec<CellReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transitions: Option<Vec<Transition>>,
}

impl ExperimentReport {
    pub fn cell(&self, method: &str, point: usize) -> Option<&CellReport> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.point == point)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// `method,bad_fraction,mean_acc,sd,runs`, one row per cell.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let csv_err = |e: csv::Error| Error::invalid(format!("writing csv: {e}"));
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["method", "bad_fraction", "mean_acc", "sd", "runs"])
            .map_err(csv_err)?;
        let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for c in &self.cells {
            w.write_record([
                c.method.clone(),
                fmt(c.bad_fraction),
                fmt(c.mean_accuracy),
                fmt(c.sd),
                c.runs.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()
            .map_err(|e| Error::invalid(format!("writing csv: {e}")))?;
        Ok(())
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// SHA-256 over the label matrix and the expert subset.
pub fn input_digest(labels: &LabelMatrix, expert: &ExpertLabels) -> String {
    let mut h = Sha256::new();
    h.update((labels.n_instances() as u64).to_le_bytes());
    h.update((labels.n_labelers() as u64).to_le_bytes());
    h.update(
        labels
            .entries()
            .iter()
            .map(|&v| v as u8)
            .collect::<Vec<_>>(),
    );
    for &(i, l) in expert.pairs() {
        h.update((i as u64).to_le_bytes());
        h.update([l as u8]);
    }
    hex(&h.finalize())
}

struct LoadedFiles {
    labels: LabelMatrix,
    truth: Vec<i8>,
    features: Option<FeatureMatrix>,
}

struct MethodOutcome {
    accuracy: Result<f64>,
    digest: String,
    seconds: f64,
}

struct JobOutcome {
    record: RunRecord,
    bad_fraction: Option<f64>,
    methods: Vec<MethodOutcome>,
}

fn run_job(
    config: &ExperimentConfig,
    files: Option<&LoadedFiles>,
    composition: Option<Composition>,
    point: usize,
    run: usize,
) -> Result<JobOutcome> {
    let seed = derive_seed(
        derive_seed(config.seed, "point", point as u64),
        "run",
        run as u64,
    );
    let (labels, truth, features, counts);
    let simulated;
    match (&config.dataset, files) {
        (DatasetSource::Simulate(s), _) => {
            let composition = composition.expect("validated: simulated points have a composition");
            let c = composition.counts(s.n_labelers, seed);
            let m = s.n_labelers as f64;
            let spec = CrowdSpec {
                n_instances: s.n_instances,
                n_labelers: s.n_labelers,
                fractions: c.map(|k| k as f64 / m),
                bands: s.bands,
                positive_fraction: s.positive_fraction,
                seed: derive_seed(seed, "data", 0),
            };
            let with_features = config.expert.mode == SelectionMode::Cluster;
            simulated = simulator::simulate(&spec, with_features)?;
            labels = &simulated.labels;
            truth = &simulated.truth[..];
            features = simulated.features.as_ref();
            counts = Some(c);
        }
        (DatasetSource::Files(_), Some(f)) => {
            labels = &f.labels;
            truth = &f.truth[..];
            features = f.features.as_ref();
            counts = None;
        }
        (DatasetSource::Files(_), None) => unreachable!("files are loaded before jobs start"),
    }

    let chosen = config.expert.select(
        labels.n_instances(),
        features,
        derive_seed(seed, "expert", 0),
    )?;
    let expert = ExpertLabels::from_truth(&chosen, truth)?;
    let digest = input_digest(labels, &expert);

    let methods = config
        .methods
        .iter()
        .enumerate()
        .map(|(k, spec)| {
            let start = Instant::now();
            let seen = input_digest(labels, &expert);
            debug_assert_eq!(seen, digest);
            let accuracy = spec
                .build(derive_seed(seed, "method", k as u64))
                .and_then(|m| m.run(labels, Some(&expert)))
                .and_then(|r| accuracy(&r.labels, truth));
            MethodOutcome {
                accuracy,
                digest: seen,
                seconds: start.elapsed().as_secs_f64(),
            }
        })
        .collect();

    let bad_fraction = counts.map(|c| (c[1] + c[2]) as f64 / labels.n_labelers() as f64);
    Ok(JobOutcome {
        record: RunRecord {
            run,
            seed,
            counts,
            input_sha256: digest,
        },
        bad_fraction,
        methods,
    })
}

fn load_files(config: &ExperimentConfig) -> Result<Option<LoadedFiles>> {
    let DatasetSource::Files(f) = &config.dataset else {
        return Ok(None);
    };
    let labels = io::read_labels(&f.labels)?;
    let truth = io::read_truth(&f.truth)?;
    if truth.len() != labels.n_instances() {
        return Err(Error::shape(format!(
            "{} truth labels for {} instances",
            truth.len(),
            labels.n_instances()
        )));
    }
    let features = f.features.as_ref().map(io::read_features).transpose()?;
    Ok(Some(LoadedFiles {
        labels,
        truth,
        features,
    }))
}

/// Runs every method on every `(point, run)` job and aggregates accuracy per cell.
pub fn run_experiment(config: &ExperimentConfig, options: &RunOptions) -> Result<ExperimentReport> {
    config.validate()?;
    let files = load_files(config)?;
    let compositions = config.compositions();
    let jobs: Vec<(usize, usize)> = (0..compositions.len())
        .flat_map(|p| (0..config.runs).map(move |r| (p, r)))
        .collect();

    let execute = || {
        jobs.par_iter()
            .map(|&(p, r)| run_job(config, files.as_ref(), compositions[p], p, r))
            .collect::<Result<Vec<_>>>()
    };
    let outcomes = match options.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?
            .install(execute)?,
        None => execute()?,
    };

    let mut points = Vec::with_capacity(compositions.len());
    let mut cells = Vec::new();
    for (p, chunk) in outcomes.chunks(config.runs).enumerate() {
        let fractions: Vec<f64> = chunk.iter().filter_map(|o| o.bad_fraction).collect();
        let bad_fraction = (!fractions.is_empty()).then(|| mean_sd(&fractions).0);
        for (k, spec) in config.methods.iter().enumerate() {
            let mut accuracies = Vec::new();
            let mut failures = Vec::new();
            let mut digest = Sha256::new();
            let mut seconds = 0.0;
            for o in chunk {
                let m = &o.methods[k];
                digest.update(m.digest.as_bytes());
                seconds += m.seconds;
                match &m.accuracy {
                    Ok(a) => accuracies.push(*a),
                    Err(e) => failures.push(RunFailure {
                        run: o.record.run,
                        message: e.to_string(),
                    }),
                }
            }
            let (mean, sd) = mean_sd(&accuracies);
            let any = !accuracies.is_empty();
            cells.push(CellReport {
                method: spec.label()?,
                point: p,
                bad_fraction,
                mean_accuracy: any.then_some(mean),
                sd: any.then_some(sd),
                runs: accuracies.len(),
                accuracies,
                failures,
                inputs_sha256: hex(&digest.finalize()),
                wall_time_s: options.timings.then_some(seconds),
            });
        }
        points.push(PointReport {
            index: p,
            composition: compositions[p],
            bad_fraction,
            runs: chunk.iter().map(|o| o.record.clone()).collect(),
        });
    }
    Ok(ExperimentReport {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        points,
        cells,
        transitions: None,
    })
}

/// Per method, the last bad fraction of the leading stretch of sweep points whose mean
/// accuracy is at least `threshold`; `None` if the first point already falls short.
pub fn transitions(report: &ExperimentReport, threshold: f64) -> Result<Vec<Transition>> {
    report
        .config
        .methods
        .iter()
        .map(|spec| {
            let method = spec.label()?;
            let mut last = None;
            for point in &report.points {
                let ok = report
                    .cell(&method, point.index)
                    .and_then(|c| c.mean_accuracy)
                    .is_some_and(|a| a >= threshold);
                if !ok {
                    break;
                }
                last = Some(point);
            }
            Ok(Transition {
                method,
                threshold,
                transition_point: last.and_then(|p| p.bad_fraction),
                point: last.map(|p| p.index),
            })
        })
        .collect()
}

/// [`run_experiment`] over a sweep plus the transition summary.
pub fn phase_sweep(config: &ExperimentConfig, options: &RunOptions) -> Result<ExperimentReport> {
    if config.sweep.is_none() {
        return Err(Error::invalid("phase sweep needs a `sweep` list"));
    }
    let mut report = run_experiment(config, options)?;
    report.transitions = Some(transitions(&report, config.threshold)?);
    Ok(report)
}
