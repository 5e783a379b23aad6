//! The structure-level objective `1/compression_ratio + λ·RSE`, evaluation
//! bookkeeping, caching and the interpolation estimate for rank sweeps.
//!
//! An *explicit* evaluation runs one inner fit and is the unit of cost that
//! every search reports. Cache hits and interpolated estimates are free.

use std::collections::HashMap;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::solver::{init_cores, minimize_rse, warm_start, Cores, SolverConfig};
use crate::structure::{rank_candidates, TnStructure};
use crate::tensor::Tensor;

/// Domain in which rank-sweep estimates are interpolated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    #[default]
    Raw,
    Log,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObjectiveConfig {
    /// Weight of the RSE term.
    pub lambda: f64,
    pub solver: SolverConfig,
    /// Adam iterations allowed per explicit evaluation; overrides
    /// `solver.max_iters`.
    pub iters_per_eval: usize,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        let solver = SolverConfig::default();
        Self { lambda: 200.0, iters_per_eval: solver.max_iters, solver }
    }
}

impl ObjectiveConfig {
    /// Settings used for the desk-scale experiments: a larger Adam step than
    /// the library default and an early stop far below the success RSE, so
    /// that structures fitting the data exactly are ranked by size alone.
    pub fn desk_scale() -> Self {
        let solver = SolverConfig {
            learning_rate: 0.01,
            max_iters: 10_000,
            early_stop_rse: 1e-7,
            patience: 200,
            patience_rel_tol: 1e-3,
            ..SolverConfig::default()
        };
        Self { lambda: 200.0, iters_per_eval: solver.max_iters, solver }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) {
            return Err(Error::InvalidConfig("lambda must be >= 0".into()));
        }
        if self.iters_per_eval == 0 {
            return Err(Error::InvalidConfig("iters_per_eval must be >= 1".into()));
        }
        self.solver.validate()
    }

    pub fn objective(&self, compression_ratio: f64, rse: f64) -> f64 {
        1.0 / compression_ratio + self.lambda * rse
    }
}

/// One scored structure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub structure: TnStructure,
    pub rse: f64,
    pub compression_ratio: f64,
    pub objective: f64,
    /// Explicit evaluations performed so far, this one included.
    pub eval_index: usize,
    /// Interpolated rather than solved.
    pub estimated: bool,
    pub solver_iters: usize,
}

/// Anything that scores structures with caching and evaluation counting.
///
/// Implementations must return the cached record for a structure already
/// seen, and must count only evaluations that actually ran.
pub trait Evaluator {
    fn evaluate(&mut self, s: &TnStructure, warm_from: Option<&TnStructure>) -> Result<EvaluationRecord>;

    /// Scores several structures; results line up with `items`. The default
    /// runs them one at a time.
    fn evaluate_batch(&mut self, items: &[(TnStructure, Option<TnStructure>)]) -> Vec<Result<EvaluationRecord>> {
        items.iter().map(|(s, w)| self.evaluate(s, w.as_ref())).collect()
    }

    fn lookup(&self, s: &TnStructure) -> Option<&EvaluationRecord>;

    /// Number of explicit evaluations so far.
    fn explicit_count(&self) -> usize;

    /// Explicit records in evaluation order.
    fn history(&self) -> &[EvaluationRecord];

    /// Whether `s` can be scored at all (e.g. its physical dims match the data).
    fn is_feasible(&self, _s: &TnStructure) -> bool {
        true
    }
}

struct CacheEntry<T> {
    record: EvaluationRecord,
    cores: Option<Cores<T>>,
}

/// Records (and optionally fitted cores) keyed by canonical structure.
pub struct EvaluationCache<T> {
    entries: HashMap<String, CacheEntry<T>>,
    history: Vec<EvaluationRecord>,
}

impl<T> Default for EvaluationCache<T> {
    fn default() -> Self {
        Self { entries: HashMap::new(), history: Vec::new() }
    }
}

impl<T> EvaluationCache<T> {
    pub fn get(&self, s: &TnStructure) -> Option<&EvaluationRecord> {
        self.entries.get(&s.canonical_key()).map(|e| &e.record)
    }

    pub fn cores(&self, s: &TnStructure) -> Option<&Cores<T>> {
        self.entries.get(&s.canonical_key()).and_then(|e| e.cores.as_ref())
    }

    pub fn len(&self) -> usize {
        self.history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }

    pub fn history(&self) -> &[EvaluationRecord] {
        &self.history
    }

    /// Stores a freshly solved record and assigns its evaluation index.
    fn insert(&mut self, mut record: EvaluationRecord, cores: Option<Cores<T>>) -> EvaluationRecord {
        record.eval_index = self.history.len() + 1;
        record.estimated = false;
        self.history.push(record.clone());
        self.entries.insert(record.structure.canonical_key(), CacheEntry { record: record.clone(), cores });
        record
    }
}

/// Solver stream for one structure, independent of evaluation order.
pub fn solve_seed(seed: u64, s: &TnStructure) -> u64 {
    let mut z = seed ^ s.structure_hash();
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Scores structures by fitting them to a target tensor.
pub struct TensorEvaluator<T: Scalar> {
    target: Tensor<T>,
    cfg: ObjectiveConfig,
    cache: EvaluationCache<T>,
    budget: Option<usize>,
    workers: usize,
    keep_cores: bool,
}

impl<T: Scalar> TensorEvaluator<T> {
    pub fn new(target: Tensor<T>, cfg: ObjectiveConfig) -> Result<Self> {
        cfg.validate()?;
        if target.norm_sq() <= T::zero() {
            return Err(Error::ZeroNorm);
        }
        Ok(Self { target, cfg, cache: EvaluationCache::default(), budget: None, workers: 1, keep_cores: true })
    }

    /// Hard cap on explicit evaluations; further misses fail with
    /// [`Error::BudgetExhausted`].
    pub fn with_budget(mut self, budget: Option<usize>) -> Self {
        self.budget = budget;
        self
    }

    /// Number of concurrent inner fits in [`Evaluator::evaluate_batch`].
    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }

    pub fn target(&self) -> &Tensor<T> {
        &self.target
    }

    pub fn config(&self) -> &ObjectiveConfig {
        &self.cfg
    }

    pub fn cache(&self) -> &EvaluationCache<T> {
        &self.cache
    }

    fn check_dims(&self, s: &TnStructure) -> Result<()> {
        if s.output_dims().as_slice() != self.target.dims() {
            return Err(Error::DimensionMismatch(format!(
                "structure output {:?} vs target {:?}",
                s.output_dims(),
                self.target.dims()
            )));
        }
        Ok(())
    }

    fn solver_config(&self) -> SolverConfig {
        SolverConfig { max_iters: self.cfg.iters_per_eval, ..self.cfg.solver.clone() }
    }

    /// Builds the initial cores for `s`, warm-started when possible.
    fn initial_cores(&self, s: &TnStructure, warm_from: Option<&TnStructure>) -> Result<Cores<T>> {
        let solver = self.solver_config();
        let mut rng = ChaCha8Rng::seed_from_u64(solve_seed(solver.seed, s));
        if let Some(w) = warm_from.filter(|w| w.same_frame(s)) {
            if let Some(old) = self.cache.cores(w) {
                return warm_start(old, w, s, &solver, &mut rng);
            }
        }
        Ok(init_cores(s, &solver, &mut rng))
    }

    fn solve(&self, s: &TnStructure, init: Cores<T>) -> Result<(EvaluationRecord, Cores<T>)> {
        let fit = minimize_rse(&self.target, s, init, &self.solver_config()).map_err(|e| Error::Evaluation {
            structure: s.canonical_key(),
            source: Box::new(e),
        })?;
        let cr = s.compression_ratio();
        let record = EvaluationRecord {
            structure: s.clone(),
            rse: fit.rse,
            compression_ratio: cr,
            objective: self.cfg.objective(cr, fit.rse),
            eval_index: 0,
            estimated: false,
            solver_iters: fit.iters,
        };
        Ok((record, fit.cores))
    }

    fn budget_left(&self) -> usize {
        self.budget.map_or(usize::MAX, |b| b.saturating_sub(self.cache.len()))
    }

    fn store(&mut self, record: EvaluationRecord, cores: Cores<T>) -> EvaluationRecord {
        let cores = self.keep_cores.then_some(cores);
        self.cache.insert(record, cores)
    }
}

impl<T: Scalar> Evaluator for TensorEvaluator<T> {
    fn evaluate(&mut self, s: &TnStructure, warm_from: Option<&TnStructure>) -> Result<EvaluationRecord> {
        if let Some(r) = self.cache.get(s) {
            return Ok(r.clone());
        }
        self.check_dims(s)?;
        if self.budget_left() == 0 {
            return Err(Error::BudgetExhausted(self.budget.unwrap_or(0)));
        }
        let init = self.initial_cores(s, warm_from)?;
        let (record, cores) = self.solve(s, init)?;
        Ok(self.store(record, cores))
    }

    /// Warm starts are taken from the cache as it stood when the batch began,
    /// so results do not depend on the worker count.
    fn evaluate_batch(&mut self, items: &[(TnStructure, Option<TnStructure>)]) -> Vec<Result<EvaluationRecord>> {
        // Distinct uncached structures, in item order, up to the budget.
        let mut pending: Vec<usize> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (i, (s, _)) in items.iter().enumerate() {
            if self.cache.get(s).is_none() && self.check_dims(s).is_ok() && seen.insert(s.canonical_key()) {
                pending.push(i);
            }
        }
        pending.truncate(self.budget_left());
        let prepared: Vec<(usize, Result<Cores<T>>)> = pending
            .iter()
            .map(|&i| (i, self.initial_cores(&items[i].0, items[i].1.as_ref())))
            .collect();
        let solve = |(i, init): (usize, Result<Cores<T>>)| (i, init.and_then(|c| self.solve(&items[i].0, c)));
        let solved: Vec<(usize, Result<(EvaluationRecord, Cores<T>)>)> = if self.workers <= 1 || prepared.len() <= 1 {
            prepared.into_iter().map(solve).collect()
        } else {
            match rayon::ThreadPoolBuilder::new().num_threads(self.workers).build() {
                Ok(pool) => pool.install(|| prepared.into_par_iter().map(solve).collect()),
                Err(_) => prepared.into_iter().map(solve).collect(),
            }
        };
        let mut failures: HashMap<usize, Error> = HashMap::new();
        for (i, res) in solved {
            match res {
                Ok((record, cores)) => {
                    self.store(record, cores);
                }
                Err(e) => {
                    failures.insert(i, e);
                }
            }
        }
        items
            .iter()
            .enumerate()
            .map(|(i, (s, w))| match failures.remove(&i) {
                Some(e) => Err(e),
                None => self.evaluate(s, w.as_ref()),
            })
            .collect()
    }

    fn lookup(&self, s: &TnStructure) -> Option<&EvaluationRecord> {
        self.cache.get(s)
    }

    fn explicit_count(&self) -> usize {
        self.cache.len()
    }

    fn history(&self) -> &[EvaluationRecord] {
        self.cache.history()
    }

    fn is_feasible(&self, s: &TnStructure) -> bool {
        self.check_dims(s).is_ok()
    }
}

/// Scores structures with an arbitrary function; the RSE is reported as NaN.
/// Handy for toy landscapes and for exercising the search logic.
pub struct FnEvaluator<F> {
    f: F,
    cache: EvaluationCache<()>,
    budget: Option<usize>,
}

impl<F: FnMut(&TnStructure) -> Result<f64>> FnEvaluator<F> {
    pub fn new(f: F) -> Self {
        Self { f, cache: EvaluationCache::default(), budget: None }
    }

    pub fn with_budget(mut self, budget: Option<usize>) -> Self {
        self.budget = budget;
        self
    }
}

impl<F: FnMut(&TnStructure) -> Result<f64>> Evaluator for FnEvaluator<F> {
    fn evaluate(&mut self, s: &TnStructure, _warm_from: Option<&TnStructure>) -> Result<EvaluationRecord> {
        if let Some(r) = self.cache.get(s) {
            return Ok(r.clone());
        }
        if self.budget.is_some_and(|b| self.cache.len() >= b) {
            return Err(Error::BudgetExhausted(self.budget.unwrap_or(0)));
        }
        let objective = (self.f)(s).map_err(|e| Error::Evaluation { structure: s.canonical_key(), source: Box::new(e) })?;
        let record = EvaluationRecord {
            structure: s.clone(),
            rse: f64::NAN,
            compression_ratio: s.compression_ratio(),
            objective,
            eval_index: 0,
            estimated: false,
            solver_iters: 0,
        };
        Ok(self.cache.insert(record, None))
    }

    fn lookup(&self, s: &TnStructure) -> Option<&EvaluationRecord> {
        self.cache.get(s)
    }

    fn explicit_count(&self) -> usize {
        self.cache.len()
    }

    fn history(&self) -> &[EvaluationRecord] {
        self.cache.history()
    }
}

/// One entry of an interpolated rank sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepPoint {
    pub rank: usize,
    pub objective: f64,
    pub estimated: bool,
}

fn interpolate(mode: Interpolation, (x0, y0): (usize, f64), (x1, y1): (usize, f64), x: usize) -> f64 {
    let t = (x as f64 - x0 as f64) / (x1 as f64 - x0 as f64);
    match mode {
        Interpolation::Raw => y0 + t * (y1 - y0),
        Interpolation::Log => (y0.ln() + t * (y1.ln() - y0.ln())).exp(),
    }
}

/// Scores every rank in `[center − b, center + b] ∩ [lo, hi]` from at most
/// three explicit anchors (`center − b`, `center`, `center + b`, clamped);
/// ranks strictly between two anchors are linearly interpolated.
pub fn estimate_rank_sweep(
    center: usize,
    radius: usize,
    (lo, hi): (usize, usize),
    mode: Interpolation,
    mut anchor: impl FnMut(usize) -> Result<f64>,
) -> Result<Vec<SweepPoint>> {
    let ranks = rank_candidates(center, radius, lo, hi)?;
    let (first, last) = (ranks[0], *ranks.last().expect("center present"));
    let mut anchors: Vec<(usize, f64)> = Vec::with_capacity(3);
    for r in [first, center, last] {
        if anchors.iter().all(|&(a, _)| a != r) {
            anchors.push((r, anchor(r)?));
        }
    }
    let value = |r: usize| anchors.iter().find(|&&(a, _)| a == r).map(|&(_, v)| v);
    let centre_val = value(center).expect("center evaluated");
    Ok(ranks
        .iter()
        .map(|&r| match value(r) {
            Some(v) => SweepPoint { rank: r, objective: v, estimated: false },
            None => {
                let far = if r > center { (last, value(last).expect("anchor")) } else { (first, value(first).expect("anchor")) };
                SweepPoint { rank: r, objective: interpolate(mode, (center, centre_val), far, r), estimated: true }
            }
        })
        .collect())
}

/// Writes records as CSV: `eval_index,objective,rse,compression_ratio,estimated,structure_id`.
pub fn write_trace_csv<W: Write>(w: W, records: &[EvaluationRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["eval_index", "objective", "rse", "compression_ratio", "estimated", "structure_id"])?;
    for r in records {
        out.write_record([
            r.eval_index.to_string(),
            format!("{:e}", r.objective),
            format!("{:e}", r.rse),
            format!("{:e}", r.compression_ratio),
            r.estimated.to_string(),
            r.structure.structure_id(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// A row of a trace CSV.
#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct TraceRow {
    pub eval_index: usize,
    pub objective: f64,
    pub rse: f64,
    pub compression_ratio: f64,
    pub estimated: bool,
    pub structure_id: String,
}

pub fn read_trace_csv<R: std::io::Read>(r: R) -> Result<Vec<TraceRow>> {
    let mut reader = csv::Reader::from_reader(r);
    let headers = reader.headers()?.clone();
    let expected = ["eval_index", "objective", "rse", "compression_ratio", "estimated", "structure_id"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Format(format!("unexpected trace header {headers:?}")));
    }
    reader.deserialize().map(|row| row.map_err(Error::from)).collect()
}
