//! Structure search drivers.
//!
//! [`ale_sweep`] is one alternating local enumeration pass around a center,
//! [`tnale`] chains sweeps with restarts, [`tnls`] is a sampling baseline and
//! [`brute_force`] scores a whole grid.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::{estimate_rank_sweep, EvaluationRecord, Evaluator, Interpolation};
use crate::structure::{rank_candidates, TnStructure, VertexPermutation};

/// Grid size above which [`brute_force`] refuses to run.
pub const DEFAULT_GRID_CAP: u128 = 100_000;

/// Environment variable overriding [`DEFAULT_GRID_CAP`].
pub const GRID_CAP_ENV: &str = "TNALE_GRID_CAP";

pub fn grid_cap_from_env() -> u128 {
    std::env::var(GRID_CAP_ENV).ok().and_then(|v| v.trim().parse().ok()).unwrap_or(DEFAULT_GRID_CAP)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AleConfig {
    pub radius: usize,
    pub round_trips: usize,
    pub rank_bounds: (usize, usize),
    pub use_estimation: bool,
    pub permutation_search: bool,
    pub interpolation: Interpolation,
}

impl Default for AleConfig {
    fn default() -> Self {
        Self {
            radius: 1,
            round_trips: 1,
            rank_bounds: (1, 7),
            use_estimation: false,
            permutation_search: false,
            interpolation: Interpolation::Raw,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TnaleConfig {
    /// Radius of the initialization sweeps.
    pub r1: usize,
    /// Radius of the search sweeps.
    pub r2: usize,
    /// Number of initialization sweeps.
    pub init_iters: usize,
    /// Number of search sweeps.
    pub search_iters: usize,
    pub round_trips: usize,
    pub rank_bounds: (usize, usize),
    pub use_estimation: bool,
    pub permutation_search: bool,
    pub interpolation: Interpolation,
    /// Unchanged sweeps before jumping to a new random center.
    pub restart_patience: usize,
    pub seed: u64,
    /// Initial center; random when absent.
    pub start: Option<TnStructure>,
}

impl Default for TnaleConfig {
    fn default() -> Self {
        Self {
            r1: 2,
            r2: 1,
            init_iters: 2,
            search_iters: 30,
            round_trips: 1,
            rank_bounds: (1, 7),
            use_estimation: true,
            permutation_search: false,
            interpolation: Interpolation::Raw,
            restart_patience: 5,
            seed: 0,
            start: None,
        }
    }
}

impl TnaleConfig {
    pub fn validate(&self) -> Result<()> {
        check_bounds(self.rank_bounds)?;
        if self.round_trips == 0 {
            return Err(Error::InvalidConfig("round_trips must be >= 1".into()));
        }
        if self.restart_patience == 0 {
            return Err(Error::InvalidConfig("restart_patience must be >= 1".into()));
        }
        Ok(())
    }

    fn ale(&self, radius: usize, use_estimation: bool) -> AleConfig {
        AleConfig {
            radius,
            round_trips: self.round_trips,
            rank_bounds: self.rank_bounds,
            use_estimation,
            permutation_search: self.permutation_search,
            interpolation: self.interpolation,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TnlsConfig {
    pub samples_per_iter: usize,
    pub max_iters: usize,
    pub initial_radius: f64,
    /// Per-iteration radius factor; the radius never drops below 1.
    pub decay: f64,
    pub rank_bounds: (usize, usize),
    pub permutation_search: bool,
    pub seed: u64,
    pub start: Option<TnStructure>,
}

impl Default for TnlsConfig {
    fn default() -> Self {
        Self {
            samples_per_iter: 60,
            max_iters: 30,
            initial_radius: 2.0,
            decay: 0.9,
            rank_bounds: (1, 7),
            permutation_search: false,
            seed: 0,
            start: None,
        }
    }
}

impl TnlsConfig {
    pub fn validate(&self) -> Result<()> {
        check_bounds(self.rank_bounds)?;
        if self.samples_per_iter == 0 {
            return Err(Error::InvalidConfig("samples_per_iter must be >= 1".into()));
        }
        if !(self.initial_radius >= 1.0) || !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(Error::InvalidConfig("need initial_radius >= 1 and decay in (0, 1]".into()));
        }
        Ok(())
    }

    pub fn radius_at(&self, iter: usize) -> usize {
        ((self.initial_radius * self.decay.powi(iter as i32)).round() as usize).max(1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BruteForceConfig {
    pub rank_bounds: (usize, usize),
    /// Relabelings applied to the template; empty means the identity only.
    pub permutations: Vec<VertexPermutation>,
    pub grid_cap: u128,
}

impl Default for BruteForceConfig {
    fn default() -> Self {
        Self { rank_bounds: (1, 7), permutations: Vec::new(), grid_cap: DEFAULT_GRID_CAP }
    }
}

fn check_bounds((lo, hi): (usize, usize)) -> Result<()> {
    if lo == 0 || lo > hi {
        return Err(Error::InvalidConfig(format!("rank bounds [{lo}, {hi}] must satisfy 1 <= lo <= hi")));
    }
    Ok(())
}

/// Everything a search produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    /// Explicit and estimated records in the order they were produced.
    pub records: Vec<EvaluationRecord>,
    /// `(eval_index, best explicit objective so far)` after each explicit evaluation.
    pub best_curve: Vec<(usize, f64)>,
    /// Best explicitly evaluated record.
    pub final_record: EvaluationRecord,
    pub restarts: usize,
    pub sweeps: usize,
    pub budget_exhausted: bool,
}

impl SearchTrace {
    pub fn explicit_evaluations(&self) -> usize {
        self.records.iter().filter(|r| !r.estimated).count()
    }

    /// Eval index of the first explicit record satisfying `pred`.
    pub fn first_explicit(&self, mut pred: impl FnMut(&EvaluationRecord) -> bool) -> Option<usize> {
        self.records.iter().filter(|r| !r.estimated).find(|r| pred(r)).map(|r| r.eval_index)
    }
}

/// Bookkeeping shared by the drivers.
struct Run<'a> {
    ev: &'a mut dyn Evaluator,
    records: Vec<EvaluationRecord>,
    best_curve: Vec<(usize, f64)>,
    best: Option<EvaluationRecord>,
    seen: usize,
}

impl<'a> Run<'a> {
    fn new(ev: &'a mut dyn Evaluator) -> Self {
        let seen = ev.explicit_count();
        Self { ev, records: Vec::new(), best_curve: Vec::new(), best: None, seen }
    }

    fn offer(&mut self, r: &EvaluationRecord) {
        if self.best.as_ref().is_none_or(|b| r.objective < b.objective) {
            self.best = Some(r.clone());
        }
    }

    /// Pulls explicit evaluations made since the last call into the trace.
    fn sync(&mut self) {
        let fresh: Vec<EvaluationRecord> = self.ev.history()[self.seen..].to_vec();
        self.seen += fresh.len();
        for r in fresh {
            self.offer(&r);
            let best = self.best.as_ref().map_or(r.objective, |b| b.objective);
            self.best_curve.push((r.eval_index, best));
            self.records.push(r);
        }
    }

    fn eval(&mut self, s: &TnStructure, warm: Option<&TnStructure>) -> Result<EvaluationRecord> {
        let out = self.ev.evaluate(s, warm);
        self.sync();
        let r = out?;
        self.offer(&r);
        Ok(r)
    }

    fn batch(&mut self, items: &[(TnStructure, Option<TnStructure>)]) -> Result<Vec<EvaluationRecord>> {
        let out = self.ev.evaluate_batch(items);
        self.sync();
        let out: Vec<EvaluationRecord> = out.into_iter().collect::<Result<_>>()?;
        for r in &out {
            self.offer(r);
        }
        Ok(out)
    }

    fn estimated(&mut self, structure: TnStructure, objective: f64) {
        self.records.push(EvaluationRecord {
            compression_ratio: structure.compression_ratio(),
            structure,
            rse: f64::NAN,
            objective,
            eval_index: self.ev.explicit_count(),
            estimated: true,
            solver_iters: 0,
        });
    }

    fn finish(self, restarts: usize, sweeps: usize, budget_exhausted: bool) -> Result<SearchTrace> {
        let final_record = self.best.ok_or(Error::BudgetExhausted(0))?;
        Ok(SearchTrace { records: self.records, best_curve: self.best_curve, final_record, restarts, sweeps, budget_exhausted })
    }
}

fn with_bond(s: &TnStructure, (i, j): (usize, usize), r: usize) -> Result<TnStructure> {
    let mut out = s.clone();
    out.set_bond(i, j, r)?;
    Ok(out)
}

/// Enumerates the rank of searchable edge `k` of `cur.structure`.
fn enumerate_edge(run: &mut Run, cur: EvaluationRecord, k: usize, cfg: &AleConfig) -> Result<EvaluationRecord> {
    let (lo, hi) = cfg.rank_bounds;
    let edge = cur.structure.edge_order().edges[k];
    let r0 = cur.structure.bond(edge.0, edge.1);
    let base = cur.structure.clone();
    if cfg.use_estimation && cfg.radius >= 2 {
        let points = estimate_rank_sweep(r0, cfg.radius, (lo, hi), cfg.interpolation, |r| {
            Ok(run.eval(&with_bond(&base, edge, r)?, Some(&base))?.objective)
        })?;
        let mut pick = points.iter().find(|p| p.rank == r0).copied().expect("center among candidates");
        for p in &points {
            if p.estimated {
                run.estimated(with_bond(&base, edge, p.rank)?, p.objective);
            }
            if p.objective < pick.objective {
                pick = *p;
            }
        }
        let rec = run.eval(&with_bond(&base, edge, pick.rank)?, Some(&base))?;
        // An optimistic estimate that does not hold up leaves the center in place.
        return Ok(if rec.objective < cur.objective || pick.rank == r0 { rec } else { cur });
    }
    let items: Vec<(TnStructure, Option<TnStructure>)> = rank_candidates(r0, cfg.radius, lo, hi)?
        .into_iter()
        .map(|r| Ok((with_bond(&base, edge, r)?, Some(base.clone()))))
        .collect::<Result<_>>()?;
    let mut best = cur;
    for rec in run.batch(&items)? {
        if rec.objective < best.objective {
            best = rec;
        }
    }
    Ok(best)
}

fn graph_step(run: &mut Run, cur: EvaluationRecord) -> Result<EvaluationRecord> {
    let items: Vec<(TnStructure, Option<TnStructure>)> = cur
        .structure
        .graph_neighborhood()
        .into_iter()
        .filter(|s| run.ev.is_feasible(s))
        .map(|s| (s, None))
        .collect();
    let mut best = cur;
    for rec in run.batch(&items)? {
        if rec.objective < best.objective {
            best = rec;
        }
    }
    Ok(best)
}

fn sweep(run: &mut Run, center: EvaluationRecord, cfg: &AleConfig) -> Result<EvaluationRecord> {
    let k_edges = center.structure.edge_order().len();
    let mut cur = center;
    for _ in 0..cfg.round_trips {
        for k in 0..k_edges {
            cur = enumerate_edge(run, cur, k, cfg)?;
        }
        if cfg.permutation_search {
            cur = graph_step(run, cur)?;
        }
        for k in (1..k_edges).rev() {
            cur = enumerate_edge(run, cur, k, cfg)?;
        }
    }
    Ok(cur)
}

fn check_center(s: &TnStructure, (lo, hi): (usize, usize)) -> Result<()> {
    if let Some(r) = s.ranks().into_iter().find(|&r| r < lo || r > hi) {
        return Err(Error::InvalidConfig(format!("center rank {r} outside bounds [{lo}, {hi}]")));
    }
    Ok(())
}

/// Result of a single [`ale_sweep`].
#[derive(Clone, Debug, PartialEq)]
pub struct SweepOutcome {
    /// Explicit record of the new center.
    pub record: EvaluationRecord,
    /// Every record the sweep produced, estimated ones included.
    pub records: Vec<EvaluationRecord>,
}

/// `round_trips` passes of alternating enumeration around `center`: edges in
/// canonical order, then (optionally) the graph neighborhood, then the edges
/// back down to the second. Each step keeps the current structure unless a
/// candidate is strictly better; among equally good candidates the smaller
/// rank wins.
pub fn ale_sweep(ev: &mut dyn Evaluator, center: &TnStructure, cfg: &AleConfig) -> Result<SweepOutcome> {
    check_bounds(cfg.rank_bounds)?;
    check_center(center, cfg.rank_bounds)?;
    let mut run = Run::new(ev);
    let start = run.eval(center, None)?;
    let record = sweep(&mut run, start, cfg)?;
    Ok(SweepOutcome { record, records: run.records })
}

fn random_center(template: &TnStructure, bounds: (usize, usize), permute: bool, rng: &mut ChaCha8Rng) -> Result<TnStructure> {
    let k = template.edge_order().len();
    let ranks: Vec<usize> = (0..k).map(|_| rng.random_range(bounds.0..=bounds.1)).collect();
    let s = template.with_ranks(&ranks)?;
    if !permute {
        return Ok(s);
    }
    let mut perm: Vec<usize> = (0..s.n_vertices()).collect();
    perm.shuffle(rng);
    s.apply_permutation(&VertexPermutation::new(perm)?)
}

fn draw_center(ev: &dyn Evaluator, template: &TnStructure, bounds: (usize, usize), permute: bool, rng: &mut ChaCha8Rng) -> Result<TnStructure> {
    for _ in 0..100 {
        let s = random_center(template, bounds, permute, rng)?;
        if ev.is_feasible(&s) {
            return Ok(s);
        }
    }
    random_center(template, bounds, false, rng)
}

/// Alternating local enumeration with an estimated initialization phase and
/// random restarts. Stops after `init_iters + search_iters` sweeps or when
/// the evaluator's budget runs out; the best explicit record wins.
pub fn tnale(ev: &mut dyn Evaluator, template: &TnStructure, cfg: &TnaleConfig) -> Result<SearchTrace> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let first = match &cfg.start {
        Some(s) => {
            check_center(s, cfg.rank_bounds)?;
            s.clone()
        }
        None => draw_center(ev, template, cfg.rank_bounds, cfg.permutation_search, &mut rng)?,
    };
    let mut run = Run::new(ev);
    let mut center = run.eval(&first, None)?;
    let total = cfg.init_iters + cfg.search_iters;
    let (mut sweeps, mut restarts, mut stagnant) = (0, 0, 0);
    let mut exhausted = false;
    while sweeps < total {
        let ale = if sweeps < cfg.init_iters {
            cfg.ale(cfg.r1, cfg.use_estimation)
        } else {
            cfg.ale(cfg.r2, false)
        };
        let next = match sweep(&mut run, center.clone(), &ale) {
            Ok(r) => r,
            Err(Error::BudgetExhausted(_)) => {
                exhausted = true;
                break;
            }
            Err(e) => return Err(e),
        };
        sweeps += 1;
        stagnant = if next.structure == center.structure { stagnant + 1 } else { 0 };
        center = next;
        if stagnant >= cfg.restart_patience && sweeps < total {
            let s = draw_center(run.ev, template, cfg.rank_bounds, cfg.permutation_search, &mut rng)?;
            match run.eval(&s, None) {
                Ok(r) => center = r,
                Err(Error::BudgetExhausted(_)) => {
                    exhausted = true;
                    break;
                }
                Err(e) => return Err(e),
            }
            restarts += 1;
            stagnant = 0;
        }
    }
    run.finish(restarts, sweeps, exhausted)
}

/// Sampling baseline: each iteration scores `samples_per_iter` structures
/// drawn uniformly from the rank box around the center (and, with
/// permutation search, from the center's graph neighborhood), then moves to
/// the best sample if it improves on the center.
pub fn tnls(ev: &mut dyn Evaluator, template: &TnStructure, cfg: &TnlsConfig) -> Result<SearchTrace> {
    cfg.validate()?;
    let (lo, hi) = cfg.rank_bounds;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let first = match &cfg.start {
        Some(s) => {
            check_center(s, cfg.rank_bounds)?;
            s.clone()
        }
        None => draw_center(ev, template, cfg.rank_bounds, cfg.permutation_search, &mut rng)?,
    };
    let mut run = Run::new(ev);
    let mut center = run.eval(&first, None)?;
    let mut exhausted = false;
    let mut iters = 0;
    while iters < cfg.max_iters {
        let radius = cfg.radius_at(iters);
        let ranks = center.structure.ranks();
        let n = center.structure.n_vertices();
        let items: Vec<(TnStructure, Option<TnStructure>)> = (0..cfg.samples_per_iter)
            .map(|_| {
                let r: Vec<usize> = ranks
                    .iter()
                    .map(|&c| rng.random_range(c.saturating_sub(radius).max(lo)..=(c + radius).min(hi)))
                    .collect();
                let mut s = center.structure.with_ranks(&r)?;
                if cfg.permutation_search && n > 1 {
                    let m = n * (n - 1) / 2;
                    let pick = rng.random_range(0..=m);
                    if pick > 0 {
                        let (a, b) = pair_at(n, pick - 1);
                        s = s.apply_permutation(&VertexPermutation::transposition(n, a, b))?;
                    }
                }
                Ok((s, Some(center.structure.clone())))
            })
            .filter(|it: &Result<(TnStructure, Option<TnStructure>)>| it.as_ref().map_or(true, |(s, _)| run.ev.is_feasible(s)))
            .collect::<Result<_>>()?;
        let out = match run.batch(&items) {
            Ok(out) => out,
            Err(Error::BudgetExhausted(_)) => {
                exhausted = true;
                break;
            }
            Err(e) => return Err(e),
        };
        iters += 1;
        for rec in out {
            if rec.objective < center.objective {
                center = rec;
            }
        }
    }
    run.finish(0, iters, exhausted)
}

/// `idx`-th pair `(a, b)`, `a < b`, in canonical order.
fn pair_at(n: usize, mut idx: usize) -> (usize, usize) {
    for a in 0..n {
        let row = n - a - 1;
        if idx < row {
            return (a, a + 1 + idx);
        }
        idx -= row;
    }
    unreachable!("pair index out of range")
}

/// Number of structures [`brute_force`] would score.
pub fn grid_size(template: &TnStructure, cfg: &BruteForceConfig) -> u128 {
    let (lo, hi) = cfg.rank_bounds;
    let per_edge = (hi.saturating_sub(lo) + 1) as u128;
    let k = template.edge_order().len() as u32;
    per_edge.saturating_pow(k).saturating_mul(cfg.permutations.len().max(1) as u128)
}

/// Scores every rank vector in the bounds box (times every listed
/// relabeling). The winner has the lowest objective; ties go to the smaller
/// parameter count, then the lexicographically smaller rank vector.
pub fn brute_force(ev: &mut dyn Evaluator, template: &TnStructure, cfg: &BruteForceConfig) -> Result<SearchTrace> {
    check_bounds(cfg.rank_bounds)?;
    let size = grid_size(template, cfg);
    if size > cfg.grid_cap {
        return Err(Error::GridTooLarge { size, cap: cfg.grid_cap });
    }
    let (lo, hi) = cfg.rank_bounds;
    let k = template.edge_order().len();
    let perms = if cfg.permutations.is_empty() {
        vec![VertexPermutation::identity(template.n_vertices())]
    } else {
        cfg.permutations.clone()
    };
    let mut run = Run::new(ev);
    let mut best: Option<(EvaluationRecord, Vec<usize>)> = None;
    let mut ranks = vec![lo; k];
    let mut exhausted = false;
    'grid: loop {
        let base = template.with_ranks(&ranks)?;
        let items: Vec<(TnStructure, Option<TnStructure>)> = perms
            .iter()
            .map(|p| base.apply_permutation(p))
            .filter(|s| s.as_ref().map_or(true, |s| run.ev.is_feasible(s)))
            .map(|s| s.map(|s| (s, None)))
            .collect::<Result<_>>()?;
        match run.batch(&items) {
            Ok(out) => {
                for rec in out {
                    let better = match &best {
                        None => true,
                        Some((b, br)) => {
                            rec.objective < b.objective
                                || (rec.objective == b.objective
                                    && (rec.structure.param_count(), &ranks) < (b.structure.param_count(), br))
                        }
                    };
                    if better {
                        best = Some((rec, ranks.clone()));
                    }
                }
            }
            Err(Error::BudgetExhausted(_)) => {
                exhausted = true;
                break 'grid;
            }
            Err(e) => return Err(e),
        }
        // odometer, last edge fastest
        let mut pos = k;
        loop {
            if pos == 0 {
                break 'grid;
            }
            pos -= 1;
            if ranks[pos] < hi {
                ranks[pos] += 1;
                break;
            }
            ranks[pos] = lo;
        }
    }
    let mut trace = run.finish(0, 0, exhausted)?;
    if let Some((b, _)) = best {
        trace.final_record = b;
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::FnEvaluator;

    /// Two searchable edges (0,1) and (1,2) carrying ranks `a` and `b`.
    fn path3() -> TnStructure {
        TnStructure::with_template(vec![2, 2, 2], &[(0, 1), (1, 2)]).unwrap()
    }

    fn toy(s: &TnStructure) -> Result<f64> {
        let r = s.ranks();
        Ok((r[0] as f64 - 3.0).powi(2) + (r[1] as f64 - 5.0).powi(2) + 1.0)
    }

    #[test]
    fn toy_sweep_reaches_global_minimum() {
        let center = path3().with_ranks(&[1, 1]).unwrap();
        let cfg = AleConfig { radius: 2, round_trips: 1, rank_bounds: (1, 7), ..Default::default() };
        let mut ev = FnEvaluator::new(toy);
        let out = ale_sweep(&mut ev, &center, &cfg).unwrap();
        // forward: a -> 3, b -> 3; backward revisits b only: b -> 5
        assert_eq!(out.record.structure.ranks(), vec![3, 5]);
        let path: Vec<Vec<usize>> = ev.history().iter().map(|r| r.structure.ranks()).collect();
        assert!(path.contains(&vec![3, 3]));
        assert!(!path.contains(&vec![1, 5]));
        let again = ale_sweep(&mut ev, &out.record.structure, &AleConfig { round_trips: 2, ..cfg }).unwrap();
        assert_eq!(again.record.structure.ranks(), vec![3, 5]);
    }

    #[test]
    fn sweep_never_gets_worse_and_respects_eval_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let w: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let f = move |s: &TnStructure| -> Result<f64> {
                let r = s.ranks();
                Ok(10.0 + (r[0] as f64 * w[0]).sin() + (r[1] as f64 * w[1]).cos() + w[2] * (r[0] * r[1]) as f64 / 10.0)
            };
            let mut ev = FnEvaluator::new(f);
            let center = path3().with_ranks(&[rng.random_range(1..=7), rng.random_range(1..=7)]).unwrap();
            let r = rng.random_range(1..=3);
            let cfg = AleConfig { radius: r, permutation_search: true, ..Default::default() };
            let before = ev.evaluate(&center, None).unwrap().objective;
            let out = ale_sweep(&mut ev, &center, &cfg).unwrap();
            assert!(out.record.objective <= before);
            let k = 2;
            assert!(ev.explicit_count() <= 1 + 2 * k * (2 * r + 1) + 3);
        }
    }

    #[test]
    fn estimated_sweep_uses_fewer_evaluations() {
        let center = path3().with_ranks(&[4, 4]).unwrap();
        let count = |est: bool| {
            let mut ev = FnEvaluator::new(toy);
            let cfg = AleConfig { radius: 3, use_estimation: est, ..Default::default() };
            let out = ale_sweep(&mut ev, &center, &cfg).unwrap();
            (ev.explicit_count(), out.records.iter().filter(|r| r.estimated).count())
        };
        let (with, n_est) = count(true);
        let (without, none) = count(false);
        assert!(with < without, "{with} vs {without}");
        assert!(n_est > 0);
        assert_eq!(none, 0);
    }

    #[test]
    fn tnale_finds_toy_minimum_and_is_deterministic() {
        let cfg = TnaleConfig { seed: 3, search_iters: 10, ..Default::default() };
        let run = || {
            let mut ev = FnEvaluator::new(toy);
            tnale(&mut ev, &path3(), &cfg).unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.final_record.structure.ranks(), vec![3, 5]);
        assert_eq!(a.final_record.structure, b.final_record.structure);
        assert_eq!(a.final_record.eval_index, b.final_record.eval_index);
        assert_eq!(a.best_curve, b.best_curve);
        assert!(a.best_curve.windows(2).all(|w| w[1].1 <= w[0].1));
        assert!(!a.final_record.estimated);
    }

    #[test]
    fn tnale_stops_on_budget() {
        let cfg = TnaleConfig { seed: 1, ..Default::default() };
        let mut ev = FnEvaluator::new(toy).with_budget(Some(4));
        let t = tnale(&mut ev, &path3(), &cfg).unwrap();
        assert!(t.budget_exhausted);
        assert_eq!(t.explicit_evaluations(), 4);
    }

    #[test]
    fn tnls_improves_on_toy() {
        let cfg = TnlsConfig { samples_per_iter: 20, max_iters: 10, seed: 2, ..Default::default() };
        let mut ev = FnEvaluator::new(toy);
        let t = tnls(&mut ev, &path3(), &cfg).unwrap();
        assert_eq!(t.final_record.structure.ranks(), vec![3, 5]);
        assert_eq!(cfg.radius_at(0), 2);
        assert_eq!(cfg.radius_at(100), 1);
    }

    #[test]
    fn brute_force_grid_and_ties() {
        let mut ev = FnEvaluator::new(toy);
        let cfg = BruteForceConfig { rank_bounds: (1, 7), ..Default::default() };
        let t = brute_force(&mut ev, &path3(), &cfg).unwrap();
        assert_eq!(t.final_record.structure.ranks(), vec![3, 5]);
        assert_eq!(ev.explicit_count(), 49);
        // constant objective: the smallest structure wins
        let mut flat = FnEvaluator::new(|_: &TnStructure| Ok(1.0));
        let t = brute_force(&mut flat, &path3(), &cfg).unwrap();
        assert_eq!(t.final_record.structure.ranks(), vec![1, 1]);
        let tiny = BruteForceConfig { grid_cap: 48, ..cfg };
        assert!(matches!(brute_force(&mut flat, &path3(), &tiny), Err(Error::GridTooLarge { size: 49, cap: 48 })));
    }

    #[test]
    fn pair_order_matches_neighborhood() {
        let s = TnStructure::new(vec![2, 3, 4, 5]).unwrap();
        let nb = s.graph_neighborhood();
        for (idx, t) in nb.iter().enumerate() {
            let (a, b) = pair_at(4, idx);
            assert_eq!(&s.apply_permutation(&VertexPermutation::transposition(4, a, b)).unwrap(), t);
        }
    }

    #[test]
    fn rejects_center_outside_bounds() {
        let mut ev = FnEvaluator::new(toy);
        let center = path3().with_ranks(&[9, 1]).unwrap();
        assert!(ale_sweep(&mut ev, &center, &AleConfig::default()).is_err());
    }
}
