//! The neighborhood landscape tensor `B = 1/f` and the fiber searches run on it.
//!
//! A landscape indexes the ranks of a center's searchable edges (one mode
//! per edge) and, optionally, its graph neighborhood (one extra mode). Rank
//! enumeration in an ALE sweep is a fiber scan of this tensor.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::Evaluator;
use crate::structure::{rank_candidates, TnStructure, VertexPermutation};
use crate::tensor::{singular_values, Tensor};

#[derive(Clone, Debug, PartialEq)]
pub struct LandscapeTensor {
    /// Entry `i` is `1 / f` of the structure decoded from `i`.
    pub tensor: Tensor<f64>,
    pub center: TnStructure,
    pub radius: usize,
    /// One-based index of the center in an unclamped rank mode.
    pub index_offset: usize,
    /// Realized rank candidates of each searchable edge.
    pub rank_candidates: Vec<Vec<usize>>,
    /// Zero-based index of the center in every mode.
    pub center_index: Vec<usize>,
    /// Relabelings indexed by the graph mode; the identity comes first.
    pub graph_mode_labels: Option<Vec<VertexPermutation>>,
}

impl LandscapeTensor {
    /// Structure addressed by a multi-index.
    pub fn decode(&self, idx: &[usize]) -> Result<TnStructure> {
        decode(&self.center, &self.rank_candidates, self.graph_mode_labels.as_deref(), idx)
    }
}

fn decode(center: &TnStructure, cands: &[Vec<usize>], graph: Option<&[VertexPermutation]>, idx: &[usize]) -> Result<TnStructure> {
    let ranks: Vec<usize> = cands.iter().zip(idx).map(|(c, &i)| c[i]).collect();
    let s = center.with_ranks(&ranks)?;
    match graph {
        Some(labels) => s.apply_permutation(&labels[idx[cands.len()]]),
        None => Ok(s),
    }
}

fn odometer(idx: &mut [usize], sizes: &[usize]) -> bool {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < sizes[k] {
            return true;
        }
        idx[k] = 0;
    }
    false
}

/// Scores every structure of the neighborhood of `center`: ranks within
/// `radius` of the current ones (clamped to `bounds`) and, when
/// `include_graph_mode` is set, the center graph plus every feasible
/// single transposition.
pub fn build_landscape(
    ev: &mut dyn Evaluator,
    center: &TnStructure,
    radius: usize,
    bounds: (usize, usize),
    include_graph_mode: bool,
    cap: u128,
) -> Result<LandscapeTensor> {
    let ranks = center.ranks();
    let cands: Vec<Vec<usize>> = ranks.iter().map(|&r| rank_candidates(r, radius, bounds.0, bounds.1)).collect::<Result<_>>()?;
    let mut center_index: Vec<usize> = cands.iter().zip(&ranks).map(|(c, r)| c.iter().position(|x| x == r).expect("center present")).collect();
    let labels = include_graph_mode.then(|| {
        let n = center.n_vertices();
        let mut l = vec![VertexPermutation::identity(n)];
        for a in 0..n {
            for b in (a + 1)..n {
                let t = VertexPermutation::transposition(n, a, b);
                if center.apply_permutation(&t).is_ok_and(|s| ev.is_feasible(&s)) {
                    l.push(t);
                }
            }
        }
        l
    });
    let mut sizes: Vec<usize> = cands.iter().map(Vec::len).collect();
    if let Some(l) = &labels {
        sizes.push(l.len());
        center_index.push(0);
    }
    let size: u128 = sizes.iter().map(|&s| s as u128).product();
    if size > cap {
        return Err(Error::GridTooLarge { size, cap });
    }
    let mut values = Vec::with_capacity(size as usize);
    let mut idx = vec![0; sizes.len()];
    loop {
        let s = decode(center, &cands, labels.as_deref(), &idx)?;
        let f = ev.evaluate(&s, Some(center))?.objective;
        if !(f > 0.0) {
            return Err(Error::NonPositiveObjective(f));
        }
        values.push(1.0 / f);
        if !odometer(&mut idx, &sizes) {
            break;
        }
    }
    let dims = if sizes.is_empty() { vec![1] } else { sizes };
    Ok(LandscapeTensor {
        tensor: Tensor::new(dims, values)?,
        center: center.clone(),
        radius,
        index_offset: radius + 1,
        rank_candidates: cands,
        center_index,
        graph_mode_labels: labels,
    })
}

/// Largest entry by linear scan; ties go to the lexicographically smallest index.
pub fn min_entry_brute(b: &Tensor<f64>) -> (Vec<usize>, f64) {
    let mut best = 0;
    for (i, &v) in b.values().iter().enumerate() {
        if v > b.values()[best] {
            best = i;
        }
    }
    let mut idx = vec![0; b.order()];
    let mut rest = best;
    for k in (0..b.order()).rev() {
        idx[k] = rest % b.dims()[k];
        rest /= b.dims()[k];
    }
    (idx, b.values()[best])
}

#[derive(Clone, Debug, PartialEq)]
pub struct FiberSearch {
    pub index: Vec<usize>,
    pub value: f64,
    /// Distinct entries read.
    pub reads: usize,
}

/// Visits `schedule` modes in turn; each visit reads the fiber through the
/// current index along that mode and moves to its largest entry. The current
/// index is kept on ties; otherwise the smallest tying index wins.
pub fn fiber_search(mut entry: impl FnMut(&[usize]) -> Result<f64>, sizes: &[usize], schedule: &[usize], start: &[usize]) -> Result<FiberSearch> {
    if sizes.iter().any(|&s| s == 0) {
        return Err(Error::InvalidTensor("mode sizes must be >= 1".into()));
    }
    if start.len() != sizes.len() || start.iter().zip(sizes).any(|(&i, &s)| i >= s) {
        return Err(Error::InvalidConfig(format!("start {start:?} outside sizes {sizes:?}")));
    }
    if let Some(&m) = schedule.iter().find(|&&m| m >= sizes.len()) {
        return Err(Error::ModeOutOfRange { mode: m, order: sizes.len() });
    }
    let mut seen: HashMap<Vec<usize>, f64> = HashMap::new();
    let mut read = |idx: &[usize]| -> Result<f64> {
        if let Some(&v) = seen.get(idx) {
            return Ok(v);
        }
        let v = entry(idx)?;
        seen.insert(idx.to_vec(), v);
        Ok(v)
    };
    let mut cur = start.to_vec();
    let mut value = read(&cur)?;
    for &mode in schedule {
        let mut probe = cur.clone();
        let mut best = (cur[mode], value);
        for i in 0..sizes[mode] {
            probe[mode] = i;
            let v = read(&probe)?;
            if v > best.1 {
                best = (i, v);
            }
        }
        cur[mode] = best.0;
        value = best.1;
    }
    drop(read);
    Ok(FiberSearch { index: cur, value, reads: seen.len() })
}

/// Mode order of an ALE sweep over `k` rank modes: forward over the ranks,
/// the graph mode (index `k`) if present, then the ranks back down to the
/// second, repeated `round_trips` times.
pub fn ale_schedule(k: usize, round_trips: usize, graph_mode: bool) -> Vec<usize> {
    let mut one: Vec<usize> = (0..k).collect();
    if graph_mode {
        one.push(k);
    }
    one.extend((1..k).rev());
    one.repeat(round_trips)
}

/// Passes alternating in direction, each visiting every mode once; the mode
/// at which a pass turns around is not rescanned.
pub fn pass_schedule(order: usize, passes: usize) -> Vec<usize> {
    let mut out = Vec::new();
    for p in 0..passes {
        let modes: Vec<usize> = if p % 2 == 0 { (0..order).collect() } else { (0..order).rev().collect() };
        out.extend(modes.into_iter().skip(usize::from(p > 0)));
    }
    out
}

/// Fiber-alternating search for the largest entry. Each round trip is one
/// pass over all modes, alternating direction, so it reads at most
/// `Σ_k sizes[k]` entries.
pub fn ale_min_entry(entry: impl FnMut(&[usize]) -> Result<f64>, sizes: &[usize], round_trips: usize, start: &[usize]) -> Result<FiberSearch> {
    fiber_search(entry, sizes, &pass_schedule(sizes.len(), round_trips), start)
}

/// `f(x + e_i) − f(x)` for every coordinate `i`.
pub fn finite_gradient(mut f: impl FnMut(&[u64]) -> Result<f64>, x: &[u64]) -> Result<Vec<f64>> {
    let fx = f(x)?;
    let mut probe = x.to_vec();
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        probe[i] = x[i].checked_add(1).ok_or_else(|| Error::InvalidConfig(format!("coordinate {i} overflows")))?;
        out.push(f(&probe)? - fx);
        probe[i] = x[i];
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeSpectrum {
    pub mode: usize,
    pub singular_values: Vec<f64>,
    /// Smallest rank whose truncation has relative error at most 0.1.
    pub rank_at_10pct: usize,
}

/// Smallest `r` with `sqrt(Σ_{i≥r} σ_i²) ≤ tol · sqrt(Σ σ_i²)`.
pub fn truncation_rank(sv: &[f64], tol: f64) -> usize {
    let total: f64 = sv.iter().map(|s| s * s).sum();
    let mut tail = total;
    for (r, s) in sv.iter().enumerate() {
        if tail <= tol * tol * total {
            return r;
        }
        tail -= s * s;
    }
    sv.len()
}

/// Singular values of every unfolding.
pub fn unfolding_spectra(b: &Tensor<f64>) -> Result<Vec<ModeSpectrum>> {
    (0..b.order())
        .map(|mode| {
            let sv = singular_values(&b.unfold(mode)?)?;
            Ok(ModeSpectrum { mode, rank_at_10pct: truncation_rank(&sv, 0.1), singular_values: sv })
        })
        .collect()
}

/// Number of entries a landscape around `center` would have.
pub fn landscape_size(center: &TnStructure, radius: usize, bounds: (usize, usize), include_graph_mode: bool) -> Result<u128> {
    let mut size: u128 = 1;
    for r in center.ranks() {
        size *= rank_candidates(r, radius, bounds.0, bounds.1)?.len() as u128;
    }
    if include_graph_mode {
        let n = center.n_vertices() as u128;
        size *= 1 + n * (n - 1) / 2;
    }
    Ok(size)
}
