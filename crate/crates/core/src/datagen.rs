//! Synthetic targets with a hidden ground-truth structure.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::EvaluationRecord;
use crate::scalar::Scalar;
use crate::solver::{init_cores, Cores, SolverConfig};
use crate::structure::{efficiency, TnStructure, VertexPermutation};
use crate::tensor::{contract_network, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopologyKind {
    /// Ring.
    Tr,
    /// Ring plus a latent hub joined to every site.
    Tw,
    /// Rectangular grid.
    Peps,
    /// Balanced binary tree with latent internal nodes.
    Ht,
    /// Two-layer disentangler/isometry network.
    Mera,
    /// Every pair joined.
    Fc,
}

impl FromStr for TopologyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "tr" => Self::Tr,
            "tw" => Self::Tw,
            "peps" => Self::Peps,
            "ht" => Self::Ht,
            "mera" => Self::Mera,
            "fc" => Self::Fc,
            other => return Err(Error::UnsupportedTemplate(format!("unknown template kind {other:?}"))),
        })
    }
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Tr => "tr",
            Self::Tw => "tw",
            Self::Peps => "peps",
            Self::Ht => "ht",
            Self::Mera => "mera",
            Self::Fc => "fc",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologyTemplate {
    pub kind: TopologyKind,
    /// Number of physical vertices.
    pub order: usize,
}

impl TopologyTemplate {
    pub fn new(kind: TopologyKind, order: usize) -> Self {
        Self { kind, order }
    }
}

/// Vertex roles and edges of a template; `physical[v]` is false for latent vertices.
struct Layout {
    physical: Vec<bool>,
    edges: Vec<(usize, usize)>,
}

fn unsupported(t: &TopologyTemplate, why: &str) -> Error {
    Error::UnsupportedTemplate(format!("{} of order {}: {why}", t.kind, t.order))
}

fn ring(n: usize) -> Vec<(usize, usize)> {
    if n == 2 {
        return vec![(0, 1)];
    }
    (0..n).map(|i| (i, (i + 1) % n)).collect()
}

/// Most square `rows x cols` factorization with `rows <= cols` and `rows >= 2`.
fn grid_shape(n: usize) -> Option<(usize, usize)> {
    (2..=n).take_while(|r| r * r <= n).filter(|r| n % r == 0).last().map(|r| (r, n / r))
}

/// Post-order numbering so that ascending merges follow the tree.
fn tree(leaves: usize, physical: &mut Vec<bool>, edges: &mut Vec<(usize, usize)>) -> usize {
    if leaves == 1 {
        physical.push(true);
        return physical.len() - 1;
    }
    let left = tree(leaves / 2, physical, edges);
    let right = tree(leaves - leaves / 2, physical, edges);
    physical.push(false);
    let me = physical.len() - 1;
    edges.push((left, me));
    edges.push((right, me));
    me
}

fn mera8() -> Layout {
    // sites s0..s7; disentanglers d0..d2 on (s1,s2),(s3,s4),(s5,s6);
    // isometries w0..w3 on (s0,s1)..(s6,s7); second layer e0 on (w1,w2),
    // v0 on (w0,w1), v1 on (w2,w3); top joins v0 and v1.
    let names = [
        "s0", "s1", "w0", "s2", "d0", "s3", "w1", "v0", "s4", "d1", "s5", "w2", "e0", "s6", "d2", "s7", "w3", "v1", "top",
    ];
    let id = |n: &str| names.iter().position(|&x| x == n).expect("known vertex");
    let pairs = [
        ("d0", "s1"),
        ("d0", "s2"),
        ("d1", "s3"),
        ("d1", "s4"),
        ("d2", "s5"),
        ("d2", "s6"),
        ("w0", "s0"),
        ("w0", "s1"),
        ("w1", "s2"),
        ("w1", "s3"),
        ("w2", "s4"),
        ("w2", "s5"),
        ("w3", "s6"),
        ("w3", "s7"),
        ("e0", "w1"),
        ("e0", "w2"),
        ("v0", "w0"),
        ("v0", "w1"),
        ("v1", "w2"),
        ("v1", "w3"),
        ("top", "v0"),
        ("top", "v1"),
    ];
    Layout {
        physical: names.iter().map(|n| n.starts_with('s')).collect(),
        edges: pairs.iter().map(|&(a, b)| (id(a), id(b))).collect(),
    }
}

fn layout(t: &TopologyTemplate) -> Result<Layout> {
    let n = t.order;
    if n < 2 {
        return Err(unsupported(t, "need at least two physical vertices"));
    }
    Ok(match t.kind {
        TopologyKind::Tr => Layout { physical: vec![true; n], edges: ring(n) },
        TopologyKind::Tw => {
            if n < 3 {
                return Err(unsupported(t, "a wheel needs at least three sites"));
            }
            let mut edges = ring(n);
            edges.extend((0..n).map(|i| (i, n)));
            let mut physical = vec![true; n];
            physical.push(false);
            Layout { physical, edges }
        }
        TopologyKind::Peps => {
            let (rows, cols) = grid_shape(n).ok_or_else(|| unsupported(t, "order has no grid factorization"))?;
            let mut edges = Vec::new();
            for r in 0..rows {
                for c in 0..cols {
                    let v = r * cols + c;
                    if c + 1 < cols {
                        edges.push((v, v + 1));
                    }
                    if r + 1 < rows {
                        edges.push((v, v + cols));
                    }
                }
            }
            Layout { physical: vec![true; n], edges }
        }
        TopologyKind::Ht => {
            let (mut physical, mut edges) = (Vec::new(), Vec::new());
            tree(n, &mut physical, &mut edges);
            Layout { physical, edges }
        }
        TopologyKind::Mera => {
            if n != 8 {
                return Err(unsupported(t, "only the order-8 layout is defined"));
            }
            mera8()
        }
        TopologyKind::Fc => Layout {
            physical: vec![true; n],
            edges: (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect(),
        },
    })
}

/// Template structure with every bond 1. Physical vertices get `phys_dim`,
/// latent ones 1.
pub fn template_adjacency(t: &TopologyTemplate, phys_dim: usize) -> Result<TnStructure> {
    if phys_dim < 2 {
        return Err(Error::InvalidConfig("physical dimension must be >= 2".into()));
    }
    let l = layout(t)?;
    let dims = l.physical.iter().map(|&p| if p { phys_dim } else { 1 }).collect();
    TnStructure::with_template(dims, &l.edges)
}

/// Template whose physical vertices carry `dims` in order; `dims.len()`
/// sets the order.
pub fn template_for_dims(kind: TopologyKind, dims: &[usize]) -> Result<TnStructure> {
    if dims.iter().any(|&d| d < 2) {
        return Err(Error::InvalidConfig(format!("physical dimensions must be >= 2, got {dims:?}")));
    }
    let l = layout(&TopologyTemplate::new(kind, dims.len()))?;
    let mut next = dims.iter();
    let phys = l.physical.iter().map(|&p| if p { *next.next().expect("one dim per site") } else { 1 }).collect();
    TnStructure::with_template(phys, &l.edges)
}

/// Physical vertices of `s`, ascending.
pub fn physical_vertices(s: &TnStructure) -> Vec<usize> {
    (0..s.n_vertices()).filter(|&v| s.phys_dims()[v] != 1).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub template: TopologyTemplate,
    #[serde(default = "default_phys_dim")]
    pub phys_dim: usize,
    pub rank_range: (usize, usize),
    #[serde(default)]
    pub permute: bool,
    #[serde(default = "default_core_std")]
    pub core_std: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_phys_dim() -> usize {
    3
}

fn default_core_std() -> f64 {
    1.0
}

impl GenSpec {
    pub fn new(kind: TopologyKind, order: usize, rank_range: (usize, usize), seed: u64) -> Self {
        Self {
            template: TopologyTemplate::new(kind, order),
            phys_dim: default_phys_dim(),
            rank_range,
            permute: false,
            core_std: default_core_std(),
            seed,
        }
    }

    pub fn permuted(mut self, permute: bool) -> Self {
        self.permute = permute;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.rank_range;
        if lo == 0 || lo > hi {
            return Err(Error::InvalidConfig(format!("rank range [{lo}, {hi}] must satisfy 1 <= lo <= hi")));
        }
        if !(self.core_std > 0.0 && self.core_std.is_finite()) {
            return Err(Error::InvalidConfig("core_std must be positive".into()));
        }
        Ok(())
    }
}

/// A generated instance.
#[derive(Clone, Debug)]
pub struct Generated<T> {
    pub target: Tensor<T>,
    /// Structure that reproduces `target` exactly with `cores`.
    pub truth: TnStructure,
    /// Relabeling applied to the unpermuted template (identity when not permuting).
    pub truth_perm: VertexPermutation,
    pub cores: Cores<T>,
}

/// Cores for `s.apply_permutation(perm)` that contract to the same network:
/// each core moves to its new vertex with its bond modes reordered.
pub fn permute_cores<T: Scalar>(s: &TnStructure, cores: &Cores<T>, perm: &VertexPermutation) -> Result<Cores<T>> {
    let n = s.n_vertices();
    if perm.len() != n || cores.len() != n {
        return Err(Error::InvalidPermutation("permutation, cores and structure sizes differ".into()));
    }
    let inv = perm.inverse();
    let mut out = Vec::with_capacity(n);
    for new_v in 0..n {
        let old_v = inv.apply(new_v);
        // Old core modes: phys, then bonds to old neighbours ascending. In the
        // new frame the neighbours are perm(old) and must be ascending.
        let old_others: Vec<usize> = (0..n).filter(|&u| u != old_v).collect();
        let mut order: Vec<usize> = (0..old_others.len()).collect();
        order.sort_by_key(|&k| perm.apply(old_others[k]));
        let axes: Vec<usize> = std::iter::once(0).chain(order.iter().map(|&k| k + 1)).collect();
        out.push(cores[old_v].permute_axes(&axes)?);
    }
    Ok(Cores(out))
}

/// Axis permutation turning the target of `s` into the target of
/// `s.apply_permutation(perm)`, where `perm` maps physical vertices to
/// physical vertices.
fn target_axes(s: &TnStructure, perm: &VertexPermutation) -> Vec<usize> {
    let phys = physical_vertices(s);
    let pos = |v: usize| phys.iter().position(|&p| p == v).expect("physical vertex");
    let mut axes = vec![0; phys.len()];
    for &v in &phys {
        axes[pos(perm.apply(v))] = pos(v);
    }
    axes
}

/// Draws ranks, cores and (optionally) a relabeling of the physical vertices.
pub fn generate<T: Scalar>(spec: &GenSpec) -> Result<Generated<T>> {
    spec.validate()?;
    let base = template_adjacency(&spec.template, spec.phys_dim)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (lo, hi) = spec.rank_range;
    let ranks: Vec<usize> = (0..base.edge_order().len()).map(|_| rng.random_range(lo..=hi)).collect();
    let base = base.with_ranks(&ranks)?;
    let init = SolverConfig { init_std: spec.core_std, ..SolverConfig::default() };
    let cores: Cores<T> = init_cores(&base, &init, &mut rng);
    let n = base.n_vertices();
    let perm = if spec.permute {
        let phys = physical_vertices(&base);
        let mut shuffled = phys.clone();
        shuffled.shuffle(&mut rng);
        let mut p: Vec<usize> = (0..n).collect();
        for (&from, &to) in phys.iter().zip(&shuffled) {
            p[from] = to;
        }
        VertexPermutation::new(p)?
    } else {
        VertexPermutation::identity(n)
    };
    let target = contract_network(&base, &cores)?.permute_axes(&target_axes(&base, &perm))?;
    let truth = base.apply_permutation(&perm)?;
    let cores = permute_cores(&base, &cores, &perm)?;
    Ok(Generated { target, truth, truth_perm: perm, cores })
}

/// RSE within 1e-4 and no more parameters than the truth.
pub fn success(found: &EvaluationRecord, truth: &TnStructure) -> bool {
    found.rse <= 1e-4 && efficiency(&found.structure, truth).is_ok_and(|e| e >= 1.0)
}
