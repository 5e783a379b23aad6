//! The `tnale` command line: `generate`, `search`, `landscape` and `report`.
//!
//! Every subcommand accepts `--config run.json`, a JSON object whose keys
//! are long flag names (with `-` or `_`); flags given on the command line
//! override it. Exit codes are 0 on success, 1 on runtime failure and 2 on
//! usage errors.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::datagen::{generate, success, template_for_dims, GenSpec, Generated, TopologyKind, TopologyTemplate};
use crate::error::Error;
use crate::landscape::{ale_min_entry, build_landscape, min_entry_brute, unfolding_spectra};
use crate::objective::{read_trace_csv, write_trace_csv, Evaluator, ObjectiveConfig, TensorEvaluator};
use crate::scalar::Scalar;
use crate::search::{brute_force, grid_cap_from_env, tnale, tnls, BruteForceConfig, SearchTrace, TnaleConfig, TnlsConfig};
use crate::solver::SolverConfig;
use crate::structure::{efficiency, fnv1a, TnStructure};
use crate::tensor::{io, Tensor};

#[derive(Debug, Parser)]
#[command(name = "tnale", version, about = "Tensor-network structure search", args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a synthetic target with a hidden structure.
    Generate(GenerateArgs),
    /// Search for a structure of a target tensor.
    Search(SearchArgs),
    /// Build and analyze the landscape tensor around a structure.
    Landscape(LandscapeArgs),
    /// Merge search traces into plot-ready tables.
    Report(ReportArgs),
}

fn parse_kind(s: &str) -> Result<TopologyKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenerateArgs {
    #[arg(long, value_parser = parse_kind)]
    pub template: TopologyKind,
    #[arg(long)]
    pub order: usize,
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    #[arg(long, default_value_t = 1)]
    pub rank_lo: usize,
    #[arg(long, default_value_t = 4)]
    pub rank_hi: usize,
    #[arg(long)]
    pub permute: bool,
    #[arg(long, default_value_t = 1.0)]
    pub core_std: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

/// Inner-solver flags shared by `search` and `landscape`.
#[derive(Debug, Clone, Args, Serialize)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 200.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 10_000)]
    pub iters_per_eval: usize,
    #[arg(long, default_value_t = 0.1)]
    pub init_std: f64,
    #[arg(long, default_value_t = 1e-7)]
    pub early_stop: f64,
    #[arg(long, default_value_t = 200)]
    pub patience: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub patience_tol: f64,
}

impl SolverArgs {
    fn objective(&self, seed: u64) -> ObjectiveConfig {
        let solver = SolverConfig {
            learning_rate: self.lr,
            max_iters: self.iters_per_eval,
            init_std: self.init_std,
            seed: substream(seed, "solver"),
            early_stop_rse: self.early_stop,
            patience: self.patience,
            patience_rel_tol: self.patience_tol,
            ..SolverConfig::default()
        };
        ObjectiveConfig { lambda: self.lambda, solver, iters_per_eval: self.iters_per_eval }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Tnale,
    Tnls,
    Brute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F64,
    F32,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SearchArgs {
    #[arg(long, value_enum, default_value_t = Algo::Tnale)]
    pub algo: Algo,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_parser = parse_kind)]
    pub template: TopologyKind,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value_t = 2)]
    pub r1: usize,
    #[arg(long, default_value_t = 1)]
    pub r2: usize,
    #[arg(long, default_value_t = 2)]
    pub l0: usize,
    #[arg(long, default_value_t = 30)]
    pub l: usize,
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    #[arg(long, default_value_t = 5)]
    pub restart_patience: usize,
    #[arg(long)]
    pub no_estimation: bool,
    #[arg(long)]
    pub permutation_search: bool,
    #[arg(long, default_value_t = 1)]
    pub rank_lo: usize,
    #[arg(long, default_value_t = 7)]
    pub rank_hi: usize,
    /// TNLS samples per iteration.
    #[arg(long, default_value_t = 60)]
    pub samples: usize,
    /// TNLS iterations.
    #[arg(long, default_value_t = 30)]
    pub tnls_iters: usize,
    #[arg(long, default_value_t = 2.0)]
    pub tnls_radius: f64,
    #[arg(long, default_value_t = 0.9)]
    pub tnls_decay: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Hard cap on explicit evaluations.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub budget: Option<u64>,
    /// Ground-truth structure JSON for Eff/success scoring.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Initial structure JSON.
    #[arg(long)]
    pub start: Option<PathBuf>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: u64,
    #[arg(long, value_enum, default_value_t = Precision::F64)]
    pub precision: Precision,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LandscapeArgs {
    /// Target tensor; required unless --tensor is given.
    #[arg(long, required_unless_present = "tensor")]
    pub input: Option<PathBuf>,
    /// Analyze an existing landscape tensor instead of building one.
    #[arg(long, conflicts_with_all = ["input", "center", "ranks"])]
    pub tensor: Option<PathBuf>,
    #[arg(long, value_parser = parse_kind, default_value = "tr")]
    pub template: TopologyKind,
    /// Center structure JSON.
    #[arg(long, conflicts_with = "ranks")]
    pub center: Option<PathBuf>,
    /// Center ranks in canonical edge order.
    #[arg(long, value_delimiter = ',')]
    pub ranks: Option<Vec<usize>>,
    #[arg(long, default_value_t = 1)]
    pub radius: usize,
    #[arg(long, default_value_t = 1)]
    pub rank_lo: usize,
    #[arg(long, default_value_t = 7)]
    pub rank_hi: usize,
    #[arg(long)]
    pub graph_mode: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value_t = 1)]
    pub round_trips: usize,
    #[arg(long, default_value_t = 20)]
    pub spot_checks: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReportArgs {
    /// Run directories, directories of runs, or trace.csv files.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

/// Failure of a command, split by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Runtime(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            Self::Runtime(_) => 1,
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Runtime(e.into())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Independent seed for the named consumer of randomness.
pub fn substream(seed: u64, name: &str) -> u64 {
    let mut z = seed ^ fnv1a(name.as_bytes());
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Splices the flags of `--config FILE` in right after the subcommand so
/// that explicit flags, parsed later, take precedence.
pub fn expand_config(args: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let pos = args.iter().position(|a| a == "--config" || a.to_string_lossy().starts_with("--config="));
    let Some(pos) = pos else { return Ok(args) };
    let path = match args[pos].to_string_lossy().strip_prefix("--config=") {
        Some(p) => PathBuf::from(p),
        None => PathBuf::from(args.get(pos + 1).ok_or_else(|| CliError::Usage("--config needs a file".into()))?),
    };
    let text = fs::read_to_string(&path).map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let map: BTreeMap<String, Value> =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config {} is not a JSON object: {e}", path.display())))?;
    let mut extra: Vec<OsString> = Vec::new();
    for (key, value) in map {
        let flag = format!("--{}", key.replace('_', "-"));
        match value {
            Value::Null | Value::Bool(false) => {}
            Value::Bool(true) => extra.push(flag.into()),
            Value::String(s) => extra.extend([flag.into(), s.into()]),
            Value::Number(n) => extra.extend([flag.into(), n.to_string().into()]),
            Value::Array(items) => {
                let joined = items.iter().map(|v| v.as_str().map_or_else(|| v.to_string(), str::to_string)).collect::<Vec<_>>().join(",");
                extra.extend([flag.into(), joined.into()]);
            }
            Value::Object(_) => return Err(CliError::Usage(format!("config key {key:?} must not be an object"))),
        }
    }
    let mut out = args;
    if out.len() < 2 {
        return Err(CliError::Usage("a subcommand must precede --config".into()));
    }
    out.splice(2..2, extra);
    Ok(out)
}

/// Parses and runs; returns the process exit code.
pub fn run_from_args(args: Vec<OsString>) -> i32 {
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Generate(a) => cmd_generate(&a),
        Command::Search(a) => cmd_search(&a),
        Command::Landscape(a) => cmd_landscape(&a),
        Command::Report(a) => cmd_report(&a),
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub details: Value,
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), Error> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    std::io::Write::write_all(&mut w, b"\n")?;
    Ok(())
}

fn write_manifest(out: &Path, command: &str, args: &impl Serialize, seed: Option<u64>, start: Instant, outputs: &[&str], details: Value) -> Result<(), Error> {
    let m = RunManifest {
        command: command.into(),
        config: serde_json::to_value(args)?,
        seed,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        wall_time_s: start.elapsed().as_secs_f64(),
        outputs: outputs.iter().map(|s| s.to_string()).collect(),
        details,
    };
    write_json(&out.join("manifest.json"), &m)
}

fn read_structure(path: &Path) -> Result<TnStructure, Error> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn cmd_generate(a: &GenerateArgs) -> CliResult<()> {
    let start = Instant::now();
    let spec = GenSpec {
        template: TopologyTemplate::new(a.template, a.order),
        phys_dim: a.dim,
        rank_range: (a.rank_lo, a.rank_hi),
        permute: a.permute,
        core_std: a.core_std,
        seed: substream(a.seed, "generation"),
    };
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let g: Generated<f64> = generate(&spec)?;
    fs::create_dir_all(&a.out).map_err(Error::from)?;
    io::save(a.out.join("target.tnsr"), &g.target)?;
    write_json(&a.out.join("truth.json"), &g.truth)?;
    let details = json!({
        "spec": spec,
        "truth_ranks": g.truth.ranks(),
        "permutation": g.truth_perm,
        "param_count": g.truth.param_count(),
    });
    write_manifest(&a.out, "generate", a, Some(a.seed), start, &["target.tnsr", "truth.json"], details)?;
    Ok(())
}

fn cast<T: Scalar>(t: &Tensor<f64>) -> Result<Tensor<T>, Error> {
    Tensor::new(t.dims().to_vec(), t.values().iter().map(|&v| T::of(v)).collect())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SearchResult {
    pub algo: String,
    pub structure: TnStructure,
    pub ranks: Vec<usize>,
    pub objective: f64,
    pub rse: f64,
    pub compression_ratio: f64,
    pub param_count: usize,
    pub n_eval: usize,
    pub final_eval_index: usize,
    pub restarts: usize,
    pub budget_exhausted: bool,
    #[serde(default)]
    pub eff: Option<f64>,
    #[serde(default)]
    pub success: Option<bool>,
    #[serde(default)]
    pub first_success_eval: Option<usize>,
}

fn run_search<T: Scalar>(a: &SearchArgs, target: &Tensor<f64>, template: &TnStructure) -> Result<(SearchTrace, usize), Error> {
    let target = cast::<T>(target)?;
    let mut ev = TensorEvaluator::new(target, a.solver.objective(a.seed))?
        .with_budget(a.budget.map(|b| b as usize))
        .with_workers(a.workers as usize);
    let start = a.start.as_deref().map(read_structure).transpose()?;
    let bounds = (a.rank_lo, a.rank_hi);
    let trace = match a.algo {
        Algo::Tnale => {
            let cfg = TnaleConfig {
                r1: a.r1,
                r2: a.r2,
                init_iters: a.l0,
                search_iters: a.l,
                round_trips: a.d,
                rank_bounds: bounds,
                use_estimation: !a.no_estimation,
                permutation_search: a.permutation_search,
                restart_patience: a.restart_patience,
                seed: substream(a.seed, "search"),
                start,
                ..TnaleConfig::default()
            };
            tnale(&mut ev, template, &cfg)?
        }
        Algo::Tnls => {
            let cfg = TnlsConfig {
                samples_per_iter: a.samples,
                max_iters: a.tnls_iters,
                initial_radius: a.tnls_radius,
                decay: a.tnls_decay,
                rank_bounds: bounds,
                permutation_search: a.permutation_search,
                seed: substream(a.seed, "search"),
                start,
            };
            tnls(&mut ev, template, &cfg)?
        }
        Algo::Brute => {
            let cfg = BruteForceConfig { rank_bounds: bounds, permutations: Vec::new(), grid_cap: grid_cap_from_env() };
            brute_force(&mut ev, template, &cfg).map_err(|e| match e {
                Error::GridTooLarge { size, cap } => Error::InvalidConfig(format!(
                    "brute force would score {size} structures, above the cap of {cap}; narrow the rank bounds or raise {}",
                    crate::search::GRID_CAP_ENV
                )),
                e => e,
            })?
        }
    };
    Ok((trace, ev.explicit_count()))
}

fn cmd_search(a: &SearchArgs) -> CliResult<()> {
    let start = Instant::now();
    if a.rank_lo == 0 || a.rank_lo > a.rank_hi {
        return Err(CliError::Usage(format!("rank bounds [{}, {}] must satisfy 1 <= lo <= hi", a.rank_lo, a.rank_hi)));
    }
    let target = io::load(&a.input)?;
    let template = template_for_dims(a.template, target.dims())?;
    let truth = a.truth.as_deref().map(read_structure).transpose()?;
    let (trace, n_eval) = match a.precision {
        Precision::F64 => run_search::<f64>(a, &target, &template)?,
        Precision::F32 => run_search::<f32>(a, &target, &template)?,
    };
    fs::create_dir_all(&a.out).map_err(Error::from)?;
    write_trace_csv(BufWriter::new(File::create(a.out.join("trace.csv")).map_err(Error::from)?), &trace.records)?;
    let f = &trace.final_record;
    let result = SearchResult {
        algo: serde_json::to_value(a.algo)?.as_str().unwrap_or_default().to_string(),
        structure: f.structure.clone(),
        ranks: f.structure.ranks(),
        objective: f.objective,
        rse: f.rse,
        compression_ratio: f.compression_ratio,
        param_count: f.structure.param_count(),
        n_eval,
        final_eval_index: f.eval_index,
        restarts: trace.restarts,
        budget_exhausted: trace.budget_exhausted,
        eff: truth.as_ref().and_then(|t| efficiency(&f.structure, t).ok()),
        success: truth.as_ref().map(|t| success(f, t)),
        first_success_eval: truth.as_ref().and_then(|t| trace.first_explicit(|r| success(r, t))),
    };
    write_json(&a.out.join("result.json"), &result)?;
    write_manifest(&a.out, "search", a, Some(a.seed), start, &["trace.csv", "result.json"], Value::Null)?;
    Ok(())
}

fn cmd_landscape(a: &LandscapeArgs) -> CliResult<()> {
    let start = Instant::now();
    fs::create_dir_all(&a.out).map_err(Error::from)?;
    let mut details = serde_json::Map::new();
    let (tensor, start_index) = if let Some(path) = &a.tensor {
        let t = io::load(path)?;
        let zeros = vec![0; t.order()];
        (t, zeros)
    } else {
        let input = a.input.as_ref().ok_or_else(|| CliError::Usage("--input or --tensor is required".into()))?;
        let target = io::load(input)?;
        let template = template_for_dims(a.template, target.dims())?;
        let center = match (&a.center, &a.ranks) {
            (Some(p), _) => read_structure(p)?,
            (None, Some(r)) => template.with_ranks(r).map_err(|e| CliError::Usage(e.to_string()))?,
            (None, None) => return Err(CliError::Usage("--center or --ranks is required with --input".into())),
        };
        let mut ev = TensorEvaluator::new(target, a.solver.objective(a.seed))?;
        let l = build_landscape(&mut ev, &center, a.radius, (a.rank_lo, a.rank_hi), a.graph_mode, grid_cap_from_env())?;
        // reciprocal spot check on random indices
        let mut rng = ChaCha8Rng::seed_from_u64(substream(a.seed, "spot-check"));
        let mut max_rel = 0.0f64;
        for _ in 0..a.spot_checks {
            let idx: Vec<usize> = l.tensor.dims().iter().map(|&d| rng.random_range(0..d)).collect();
            let f = ev.evaluate(&l.decode(&idx)?, Some(&center))?.objective;
            max_rel = max_rel.max(((1.0 / l.tensor.get(&idx)) - f).abs() / f.abs());
        }
        details.insert(
            "reciprocal_check".into(),
            json!({ "checked": a.spot_checks, "max_rel_err": max_rel, "pass": max_rel <= 1e-12 }),
        );
        details.insert("center".into(), serde_json::to_value(&center)?);
        details.insert("rank_candidates".into(), serde_json::to_value(&l.rank_candidates)?);
        details.insert("center_index".into(), serde_json::to_value(&l.center_index)?);
        details.insert("graph_mode_labels".into(), serde_json::to_value(&l.graph_mode_labels)?);
        details.insert("explicit_evaluations".into(), json!(ev.explicit_count()));
        (l.tensor, l.center_index)
    };
    io::save(a.out.join("landscape.tnsr"), &tensor)?;
    let spectra = unfolding_spectra(&tensor)?;
    write_json(&a.out.join("spectra.json"), &json!({ "dims": tensor.dims(), "modes": spectra }))?;
    let (bi, bv) = min_entry_brute(&tensor);
    let ale = ale_min_entry(|i| Ok(tensor.get(i)), tensor.dims(), a.round_trips, &start_index)?;
    details.insert(
        "min_entry".into(),
        json!({
            "brute_index": bi,
            "brute_value": bv,
            "ale_index": ale.index,
            "ale_value": ale.value,
            "entry_reads": ale.reads,
            "read_bound": a.round_trips * tensor.dims().iter().sum::<usize>(),
            "agree": ale.index == bi,
        }),
    );
    let details = Value::Object(details);
    write_json(&a.out.join("report.json"), &details)?;
    write_manifest(&a.out, "landscape", a, Some(a.seed), start, &["landscape.tnsr", "spectra.json", "report.json"], Value::Null)?;
    Ok(())
}

/// A trace with its label and (when present) its result file.
struct RunInput {
    label: String,
    trace: PathBuf,
    result: Option<SearchResult>,
}

fn collect_runs(inputs: &[PathBuf]) -> CliResult<Vec<RunInput>> {
    let mut traces: Vec<PathBuf> = Vec::new();
    for p in inputs {
        if p.is_file() {
            traces.push(p.clone());
        } else if p.join("trace.csv").is_file() {
            traces.push(p.join("trace.csv"));
        } else if p.is_dir() {
            let mut sub: Vec<PathBuf> = fs::read_dir(p)
                .map_err(Error::from)?
                .filter_map(|e| e.ok().map(|e| e.path().join("trace.csv")))
                .filter(|t| t.is_file())
                .collect();
            sub.sort();
            traces.extend(sub);
        } else {
            return Err(CliError::Usage(format!("{} does not exist", p.display())));
        }
    }
    if traces.is_empty() {
        return Err(CliError::Usage("no trace.csv found in the inputs".into()));
    }
    traces
        .into_iter()
        .map(|trace| {
            let dir = trace.parent().map(Path::to_path_buf).unwrap_or_default();
            let label = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| trace.display().to_string());
            let result = match fs::read_to_string(dir.join("result.json")) {
                Ok(text) => Some(serde_json::from_str(&text).map_err(Error::from)?),
                Err(_) => None,
            };
            Ok(RunInput { label, trace, result })
        })
        .collect()
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64;
    (m, v.sqrt())
}

#[derive(Debug, Serialize)]
struct SummaryRow {
    algo: String,
    runs: usize,
    mean_n_eval: f64,
    std_n_eval: f64,
    mean_eval_to_success: f64,
    success_rate: f64,
    mean_eff: f64,
    std_eff: f64,
}

fn cmd_report(a: &ReportArgs) -> CliResult<()> {
    let start = Instant::now();
    let runs = collect_runs(&a.inputs)?;
    fs::create_dir_all(&a.out).map_err(Error::from)?;
    let mut merged = csv::Writer::from_path(a.out.join("merged.csv")).map_err(Error::from)?;
    merged.write_record(["series", "algo", "eval_index", "best_objective", "log10_best_objective"]).map_err(Error::from)?;
    let mut by_algo: BTreeMap<String, Vec<&RunInput>> = BTreeMap::new();
    for run in &runs {
        let rows = read_trace_csv(File::open(&run.trace).map_err(Error::from)?)?;
        let algo = run.result.as_ref().map_or("unknown".to_string(), |r| r.algo.clone());
        let mut best = f64::INFINITY;
        for row in rows.iter().filter(|r| !r.estimated) {
            best = best.min(row.objective);
            merged
                .write_record([
                    run.label.clone(),
                    algo.clone(),
                    row.eval_index.to_string(),
                    format!("{best:e}"),
                    format!("{:e}", best.log10()),
                ])
                .map_err(Error::from)?;
        }
        by_algo.entry(algo).or_default().push(run);
    }
    merged.flush().map_err(Error::from)?;
    let mut summary = Vec::new();
    for (algo, rs) in &by_algo {
        let results: Vec<&SearchResult> = rs.iter().filter_map(|r| r.result.as_ref()).collect();
        let n_eval: Vec<f64> = results.iter().map(|r| r.n_eval as f64).collect();
        let to_success: Vec<f64> = results.iter().filter_map(|r| r.first_success_eval.map(|x| x as f64)).collect();
        let effs: Vec<f64> = results.iter().filter_map(|r| r.eff).collect();
        let scored: Vec<bool> = results.iter().filter_map(|r| r.success).collect();
        let (mean_n_eval, std_n_eval) = mean_std(&n_eval);
        let (mean_eff, std_eff) = mean_std(&effs);
        summary.push(SummaryRow {
            algo: algo.clone(),
            runs: rs.len(),
            mean_n_eval,
            std_n_eval,
            mean_eval_to_success: mean_std(&to_success).0,
            success_rate: if scored.is_empty() { f64::NAN } else { scored.iter().filter(|&&s| s).count() as f64 / scored.len() as f64 },
            mean_eff,
            std_eff,
        });
    }
    let mut w = csv::Writer::from_path(a.out.join("summary.csv")).map_err(Error::from)?;
    for row in &summary {
        w.serialize(row).map_err(Error::from)?;
    }
    w.flush().map_err(Error::from)?;
    let series: Vec<&str> = runs.iter().map(|r| r.label.as_str()).collect();
    write_manifest(&a.out, "report", a, None, start, &["merged.csv", "summary.csv"], json!({ "series": series }))?;
    Ok(())
}
