//! End-to-end experiment runner: generate or ingest an observation
//! stream, track it online, solve the hindsight comparators, measure
//! regret and its bound, and write a self-describing artifact directory.
//!
//! Artifacts land atomically: everything is written to a staging
//! directory that is renamed into place only after the run succeeds, so a
//! failed run leaves no partial output. Identical configs (same seed)
//! produce byte-identical artifacts.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::chart::{self, ChartConfig, Series};
use crate::error::{Error, Result};
use crate::hindsight::{self, ComparatorTrace, SolveOptions};
use crate::io::{self, TraceRow};
use crate::metrics::{self, RegretReport, ReportBundle};
use crate::model::{
    generate_dataset, GeneratorConfig, GroundTruth, ObservationBatch, TopologySnapshot,
};
use crate::rng;
use crate::tracker::{AlgoConfig, NodeMoments, Tracker};

/// Step size: fixed by the caller or resolved to 1/L_f by a dry pass over
/// the full stream (only possible when the data is available up front).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaChoice {
    Auto,
    Fixed(f64),
}

impl Serialize for AlphaChoice {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            AlphaChoice::Auto => s.serialize_str("auto"),
            AlphaChoice::Fixed(x) => s.serialize_f64(*x),
        }
    }
}

impl<'de> Deserialize<'de> for AlphaChoice {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(AlphaChoice::Fixed(x)),
            Repr::Text(s) if s == "auto" => Ok(AlphaChoice::Auto),
            Repr::Text(s) => Err(D::Error::custom(format!("alpha must be 'auto' or a number, got '{s}'"))),
        }
    }
}

impl FromStr for AlphaChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(AlphaChoice::Auto);
        }
        let x: f64 = s
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("alpha must be 'auto' or a number, got '{s}'")))?;
        Ok(AlphaChoice::Fixed(x))
    }
}

impl fmt::Display for AlphaChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlphaChoice::Auto => write!(f, "auto"),
            AlphaChoice::Fixed(x) => write!(f, "{x}"),
        }
    }
}

/// Where an ingested stream lives: a directory of per-step Y CSV files
/// (read in lexicographic order) and one X file of the same shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSource {
    pub y_dir: PathBuf,
    pub x_file: PathBuf,
}

fn default_stride() -> usize {
    1
}

fn default_repeat() -> usize {
    1
}

/// Everything one experiment needs. Exactly one of `generator` / `data_in`
/// must be set; auto-alpha needs the generator (a two-pass resolve over an
/// external stream would still work, but the stream is the caller's to
/// replay, so a fixed alpha must be supplied).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub generator: Option<GeneratorConfig>,
    #[serde(default)]
    pub data_in: Option<DataSource>,
    pub lambda: f64,
    pub gamma: f64,
    pub alpha: AlphaChoice,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub emit_svg: bool,
    #[serde(default = "default_stride")]
    pub stride_eig: usize,
    #[serde(default = "default_repeat")]
    pub repeat: usize,
    #[serde(default)]
    pub force: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        match (&self.generator, &self.data_in) {
            (Some(g), None) => g.validate()?,
            (None, Some(_)) => {
                if matches!(self.alpha, AlphaChoice::Auto) {
                    return Err(Error::InvalidConfig(
                        "auto-alpha needs the generator; pass a fixed --alpha with ingested data"
                            .into(),
                    ));
                }
            }
            (Some(_), Some(_)) => {
                return Err(Error::InvalidConfig(
                    "exactly one of generator/data_in may drive observations, got both".into(),
                ))
            }
            (None, None) => {
                return Err(Error::InvalidConfig(
                    "one of generator/data_in must drive observations".into(),
                ))
            }
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidConfig(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::InvalidConfig(format!("gamma must lie in (0,1], got {}", self.gamma)));
        }
        if let AlphaChoice::Fixed(a) = self.alpha {
            if !(a > 0.0) || !a.is_finite() {
                return Err(Error::InvalidConfig(format!("alpha must be > 0, got {a}")));
            }
        }
        if self.stride_eig < 1 {
            return Err(Error::InvalidConfig("stride_eig must be >= 1".into()));
        }
        if self.repeat < 1 {
            return Err(Error::InvalidConfig("repeat must be >= 1".into()));
        }
        if self.output_dir.as_os_str().is_empty() {
            return Err(Error::InvalidConfig("output_dir must not be empty".into()));
        }
        Ok(())
    }
}

/// Everything recorded while the tracker consumes a stream.
#[derive(Debug, Clone)]
pub struct RunRecord {
    /// `estimates[t-1][i]` is the vector the tracker committed for time t
    /// (before seeing batch t).
    pub estimates: Vec<Vec<DVector<f64>>>,
    /// Same estimates assembled into topology snapshots.
    pub estimate_snapshots: Vec<TopologySnapshot>,
    /// One-step-ahead prediction after the last batch, i.e. `v[T+1]`.
    pub final_prediction: Vec<DVector<f64>>,
    /// `moments[t-1][i]` holds node i's (Phi, r, c) after absorbing batch t.
    pub moments: Vec<Vec<NodeMoments>>,
    /// Objective value at the committed estimate, per step and node.
    pub h_estimate: Vec<Vec<f64>>,
    /// Final tracker state.
    pub tracker: Tracker,
}

/// Drive the tracker over a full stream, recording estimates, moments and
/// objective values along the way.
pub fn run_tracker(
    batches: &[ObservationBatch],
    x: &DMatrix<f64>,
    algo: AlgoConfig,
) -> Result<RunRecord> {
    let n = x.nrows();
    let c = x.ncols();
    let mut tracker = Tracker::new(n, c, algo, x.clone())?;
    let horizon = batches.len();
    let mut estimates = Vec::with_capacity(horizon);
    let mut estimate_snapshots = Vec::with_capacity(horizon);
    let mut moments = Vec::with_capacity(horizon);
    let mut h_estimate = Vec::with_capacity(horizon);
    for batch in batches {
        let committed: Vec<DVector<f64>> = tracker.nodes.iter().map(|nd| nd.v.clone()).collect();
        let step = tracker.step(&batch.y)?;
        estimate_snapshots.push(step.estimate);
        moments.push(tracker.nodes.iter().map(|nd| nd.moments.clone()).collect());
        h_estimate.push(
            tracker
                .nodes
                .iter()
                .zip(&committed)
                .map(|(node, v)| node.evaluate_objective(v, algo.lambda))
                .collect(),
        );
        estimates.push(committed);
    }
    let final_prediction = tracker.nodes.iter().map(|nd| nd.v.clone()).collect();
    Ok(RunRecord { estimates, estimate_snapshots, final_prediction, moments, h_estimate, tracker })
}

/// Two-pass step-size resolution: a dry forward pass over the moment
/// recursion alone, returning `1/L_f` with `L_f` the largest moment
/// eigenvalue seen anywhere.
pub fn resolve_alpha(batches: &[ObservationBatch], gamma: f64) -> Result<f64> {
    let Some(first) = batches.first() else {
        return Err(Error::DegenerateData);
    };
    let n = first.y.nrows();
    let mut phis: Vec<DMatrix<f64>> = vec![DMatrix::zeros(n, n); n];
    let mut l_f: f64 = 0.0;
    for batch in batches {
        for (i, phi) in phis.iter_mut().enumerate() {
            let z = crate::tracker::build_regressor(&batch.y, &batch.x, i);
            *phi *= gamma;
            phi.gemm(1.0, &z, &z.transpose(), 1.0);
            let (_, hi) = crate::linalg::sym_eig_bounds(phi);
            l_f = l_f.max(hi);
        }
    }
    if l_f <= 0.0 {
        return Err(Error::DegenerateData);
    }
    Ok(1.0 / l_f)
}

/// A fully analyzed run, before any files are written.
#[derive(Debug, Clone)]
pub struct RunAnalysis {
    pub alpha: f64,
    pub record: RunRecord,
    pub trace: ComparatorTrace,
    pub h_comparator: Vec<Vec<f64>>,
    pub bundle: ReportBundle,
    pub mse_trace: Option<Vec<f64>>,
}

/// Track, solve comparators, and measure everything on an in-memory stream.
pub fn analyze(
    batches: &[ObservationBatch],
    x: &DMatrix<f64>,
    truth: Option<&GroundTruth>,
    lambda: f64,
    gamma: f64,
    alpha: AlphaChoice,
    stride_eig: usize,
    solve_opts: &SolveOptions,
) -> Result<RunAnalysis> {
    let alpha = match alpha {
        AlphaChoice::Auto => resolve_alpha(batches, gamma)?,
        AlphaChoice::Fixed(a) => a,
    };
    let algo = AlgoConfig::new(gamma, lambda, alpha)?;
    let record = run_tracker(batches, x, algo)?;
    let trace = hindsight::comparator_trace(&record.moments, lambda, solve_opts);
    let h_comparator: Vec<Vec<f64>> = record
        .moments
        .iter()
        .enumerate()
        .map(|(k, slot)| {
            slot.iter()
                .enumerate()
                .map(|(i, m)| m.objective(&trace.v_star[i][k], lambda))
                .collect()
        })
        .collect();
    let constants = metrics::empirical_constants(
        batches,
        &record.moments,
        &trace,
        gamma,
        alpha,
        stride_eig,
        None,
    );
    let bundle = metrics::build_report(
        constants,
        &record.h_estimate,
        &h_comparator,
        &record.estimates,
        &trace,
        lambda,
        alpha,
        gamma,
        x.ncols(),
    );
    let mse_trace = truth.map(|t| metrics::mse(&record.estimates, t));
    Ok(RunAnalysis { alpha, record, trace, h_comparator, bundle, mse_trace })
}

/// What a finished run hands back: where it landed and the headline
/// numbers, with the full report for anything deeper.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub out_dir: PathBuf,
    pub alpha: f64,
    pub report: RegretReport,
    pub regret_trace: Vec<f64>,
    pub bound_trace: Option<Vec<f64>>,
    pub mse_trace: Option<Vec<f64>>,
    /// Relative artifact path -> SHA-256, as recorded in metadata.json.
    pub artifacts: BTreeMap<String, String>,
}

#[derive(Serialize)]
struct Metadata<'a> {
    mode: &'a str,
    prng: Option<&'a str>,
    generator: Option<&'a GeneratorConfig>,
    lambda: f64,
    gamma: f64,
    alpha: String,
    alpha_used: String,
    stride_eig: usize,
    artifacts: &'a BTreeMap<String, String>,
}

/// Render the standard pair of trace charts into `dir`. Series without
/// points are skipped with a warning rather than failing the run.
pub fn emit_plots(
    dir: &Path,
    mse_series: &[Series],
    regret_series: &[Series],
) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let jobs: [(&str, &[Series], &str, &str); 2] = [
        ("mse.svg", mse_series, "MSE vs t", "mean-square error"),
        ("regret.svg", regret_series, "dynamic regret vs t", "cumulative dynamic regret"),
    ];
    for (name, series, title, y_label) in jobs {
        if series.iter().all(|s| s.points.is_empty()) {
            eprintln!("warning: no data for {name}, skipping");
            continue;
        }
        let cfg = ChartConfig::new(title, "t", y_label).with_log_y(true);
        let path = dir.join(name);
        fs::write(&path, chart::line_chart(&cfg, series))?;
        written.push(path);
    }
    Ok(written)
}

fn read_ingested(source: &DataSource) -> Result<(Vec<ObservationBatch>, DMatrix<f64>)> {
    let x = io::read_matrix_csv(&source.x_file)?;
    let mut files: Vec<PathBuf> = fs::read_dir(&source.y_dir)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "csv"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "no .csv observation files in {}",
            source.y_dir.display()
        )));
    }
    let mut batches = Vec::with_capacity(files.len());
    for (k, file) in files.iter().enumerate() {
        let y = io::read_matrix_csv(file)?;
        batches.push(ObservationBatch::new(k + 1, y, x.clone())?);
    }
    Ok((batches, x))
}

fn hash_into(
    root: &Path,
    rel: &str,
    artifacts: &mut BTreeMap<String, String>,
) -> Result<()> {
    artifacts.insert(rel.to_string(), io::sha256_file(&root.join(rel))?);
    Ok(())
}

fn write_run_artifacts(
    staging: &Path,
    config: &ExperimentConfig,
    dataset: Option<&crate::model::Dataset>,
    batches: &[ObservationBatch],
    x: &DMatrix<f64>,
    analysis: &RunAnalysis,
) -> Result<BTreeMap<String, String>> {
    let mut artifacts = BTreeMap::new();

    if let Some(ds) = dataset {
        io::write_topology_csv(&staging.join("ground_truth.csv"), &ds.truth.snapshots)?;
        hash_into(staging, "ground_truth.csv", &mut artifacts)?;
    }

    // x.csv must not live inside observations/: ingest treats every .csv
    // there as one batch.
    io::write_matrix_csv(&staging.join("x.csv"), x)?;
    hash_into(staging, "x.csv", &mut artifacts)?;
    let obs_dir = staging.join("observations");
    fs::create_dir_all(&obs_dir)?;
    for batch in batches {
        let rel = format!("observations/y_{:05}.csv", batch.t);
        io::write_matrix_csv(&staging.join(&rel), &batch.y)?;
        hash_into(staging, &rel, &mut artifacts)?;
    }

    io::write_topology_csv(&staging.join("estimates.csv"), &analysis.record.estimate_snapshots)?;
    hash_into(staging, "estimates.csv", &mut artifacts)?;

    io::write_comparators_csv(&staging.join("comparators.csv"), &analysis.trace)?;
    hash_into(staging, "comparators.csv", &mut artifacts)?;

    io::write_json(&staging.join("report.json"), &analysis.bundle.report)?;
    hash_into(staging, "report.json", &mut artifacts)?;

    let horizon = analysis.bundle.regret.trace.len();
    let rows: Vec<TraceRow> = (0..horizon)
        .map(|k| TraceRow {
            t: k + 1,
            regret_cumulative: analysis.bundle.regret.trace[k],
            bound_cumulative: analysis.bundle.bound_trace.as_ref().map(|b| b[k]),
            mse: analysis.mse_trace.as_ref().map(|m| m[k]),
        })
        .collect();
    io::write_traces_csv(&staging.join("traces.csv"), &rows)?;
    hash_into(staging, "traces.csv", &mut artifacts)?;

    if config.emit_svg {
        let regime_label = dataset
            .map(|ds| ds.config.regime.to_string())
            .unwrap_or_else(|| "ingested".to_string());
        let mse_series: Vec<Series> = analysis
            .mse_trace
            .as_ref()
            .map(|m| {
                vec![Series::new(
                    regime_label.clone(),
                    m.iter().enumerate().map(|(k, &v)| ((k + 1) as f64, v)).collect(),
                )]
            })
            .unwrap_or_default();
        let mut regret_series = vec![Series::new(
            format!("regret ({regime_label})"),
            analysis
                .bundle
                .regret
                .trace
                .iter()
                .enumerate()
                .map(|(k, &v)| ((k + 1) as f64, v))
                .collect(),
        )];
        if let Some(bound) = &analysis.bundle.bound_trace {
            regret_series.push(Series::new(
                "bound",
                bound.iter().enumerate().map(|(k, &v)| ((k + 1) as f64, v)).collect(),
            ));
        }
        for path in emit_plots(staging, &mse_series, &regret_series)? {
            let rel = path.file_name().unwrap().to_string_lossy().into_owned();
            hash_into(staging, &rel, &mut artifacts)?;
        }
    }

    let metadata = Metadata {
        mode: if dataset.is_some() { "generator" } else { "ingested" },
        prng: dataset.is_some().then_some(rng::PRNG_ALGORITHM),
        generator: dataset.map(|ds| &ds.config),
        lambda: config.lambda,
        gamma: config.gamma,
        alpha: config.alpha.to_string(),
        alpha_used: io::fmt_f64(analysis.alpha),
        stride_eig: config.stride_eig,
        artifacts: &artifacts,
    };
    io::write_json(&staging.join("metadata.json"), &metadata)?;
    Ok(artifacts)
}

fn staging_path(target: &Path) -> PathBuf {
    let name = target.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    target.with_file_name(format!(".{name}.staging-{}", std::process::id()))
}

/// Swap a finished staging directory into place.
fn promote(staging: &Path, target: &Path, force: bool) -> Result<()> {
    if target.exists() {
        if !force {
            let _ = fs::remove_dir_all(staging);
            return Err(Error::InvalidConfig(format!(
                "output dir {} already exists (enable force to replace it)",
                target.display()
            )));
        }
        fs::remove_dir_all(target)?;
    }
    fs::rename(staging, target)?;
    Ok(())
}

fn run_single(config: &ExperimentConfig, target: &Path) -> Result<RunOutput> {
    let dataset = config.generator.as_ref().map(generate_dataset).transpose()?;
    let (batches, x) = match (&dataset, &config.data_in) {
        (Some(ds), _) => (ds.batches.clone(), ds.x.clone()),
        (None, Some(source)) => read_ingested(source)?,
        _ => unreachable!("validated config"),
    };
    let analysis = analyze(
        &batches,
        &x,
        dataset.as_ref().map(|ds| &ds.truth),
        config.lambda,
        config.gamma,
        config.alpha,
        config.stride_eig,
        &SolveOptions::default(),
    )?;

    if let Some(parent) = target.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let staging = staging_path(target);
    if staging.exists() {
        fs::remove_dir_all(&staging)?;
    }
    fs::create_dir_all(&staging)?;
    let artifacts =
        match write_run_artifacts(&staging, config, dataset.as_ref(), &batches, &x, &analysis) {
            Ok(a) => a,
            Err(e) => {
                let _ = fs::remove_dir_all(&staging);
                return Err(e);
            }
        };
    promote(&staging, target, config.force)?;

    Ok(RunOutput {
        out_dir: target.to_path_buf(),
        alpha: analysis.alpha,
        report: analysis.bundle.report,
        regret_trace: analysis.bundle.regret.trace,
        bound_trace: analysis.bundle.bound_trace,
        mse_trace: analysis.mse_trace,
        artifacts,
    })
}

/// Run one experiment into `config.output_dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    if config.repeat != 1 {
        return Err(Error::InvalidConfig(
            "run_experiment handles a single run; use run_repeated for repeat > 1".into(),
        ));
    }
    run_single(config, &config.output_dir.clone())
}

#[derive(Serialize)]
struct RepeatMetadata<'a> {
    repeat: usize,
    seeds: Vec<u64>,
    runs: Vec<String>,
    artifacts: &'a BTreeMap<String, String>,
}

/// Run `config.repeat` copies with consecutive seeds into
/// `run_0000/ ... run_NNNN/` under the output directory, plus a
/// seed-averaged MSE trace at the top level. With `repeat == 1` this is
/// exactly [`run_experiment`].
pub fn run_repeated(config: &ExperimentConfig) -> Result<Vec<RunOutput>> {
    config.validate()?;
    if config.repeat == 1 {
        return Ok(vec![run_single(config, &config.output_dir.clone())?]);
    }
    let Some(generator) = &config.generator else {
        return Err(Error::InvalidConfig("repeat > 1 needs the generator (seed sweep)".into()));
    };

    let target = config.output_dir.clone();
    if let Some(parent) = target.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let staging = staging_path(&target);
    if staging.exists() {
        fs::remove_dir_all(&staging)?;
    }
    fs::create_dir_all(&staging)?;

    let result = (|| -> Result<Vec<RunOutput>> {
        let mut outputs = Vec::with_capacity(config.repeat);
        let mut seeds = Vec::with_capacity(config.repeat);
        for k in 0..config.repeat {
            let mut sub = config.clone();
            let mut gen_cfg = generator.clone();
            gen_cfg.seed = generator.seed.wrapping_add(k as u64);
            seeds.push(gen_cfg.seed);
            sub.generator = Some(gen_cfg);
            sub.repeat = 1;
            sub.force = false;
            let run_dir = staging.join(format!("run_{k:04}"));
            sub.output_dir = run_dir.clone();
            outputs.push(run_single(&sub, &run_dir)?);
        }

        let mut artifacts = BTreeMap::new();
        // Seed-averaged MSE, when every run produced one.
        if outputs.iter().all(|o| o.mse_trace.is_some()) {
            let horizon = outputs[0].mse_trace.as_ref().unwrap().len();
            let mean: Vec<f64> = (0..horizon)
                .map(|k| {
                    outputs.iter().map(|o| o.mse_trace.as_ref().unwrap()[k]).sum::<f64>()
                        / outputs.len() as f64
                })
                .collect();
            let mut w = csv::Writer::from_path(staging.join("mse_mean.csv"))?;
            w.write_record(["t", "mse_mean"])?;
            for (k, v) in mean.iter().enumerate() {
                w.write_record([(k + 1).to_string(), io::fmt_f64(*v)])?;
            }
            w.flush()?;
            hash_into(&staging, "mse_mean.csv", &mut artifacts)?;
            if config.emit_svg {
                let series = vec![Series::new(
                    format!("mean over {} seeds", outputs.len()),
                    mean.iter().enumerate().map(|(k, &v)| ((k + 1) as f64, v)).collect(),
                )];
                let cfg = ChartConfig::new("MSE vs t (seed average)", "t", "mean-square error")
                    .with_log_y(true);
                fs::write(staging.join("mse.svg"), chart::line_chart(&cfg, &series))?;
                hash_into(&staging, "mse.svg", &mut artifacts)?;
            }
        }
        let runs: Vec<String> = (0..config.repeat).map(|k| format!("run_{k:04}")).collect();
        let meta =
            RepeatMetadata { repeat: config.repeat, seeds, runs, artifacts: &artifacts };
        io::write_json(&staging.join("metadata.json"), &meta)?;
        Ok(outputs)
    })();

    match result {
        Ok(mut outputs) => {
            promote(&staging, &target, config.force)?;
            for (k, out) in outputs.iter_mut().enumerate() {
                out.out_dir = target.join(format!("run_{k:04}"));
            }
            Ok(outputs)
        }
        Err(e) => {
            let _ = fs::remove_dir_all(&staging);
            Err(e)
        }
    }
}
