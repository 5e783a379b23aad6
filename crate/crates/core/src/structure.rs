//! Tensor-network structures as weighted adjacency matrices.
//!
//! A structure fixes the graph and the bond dimension of every vertex pair.
//! Pairs are never removed: a bond of dimension 1 is a trivial edge. When a
//! template is present only template edges are searchable and every other
//! pair stays at 1; without a template every pair is searchable (the
//! fully-connected case, which is how topology search is expressed).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Canonical (row-major upper-triangle) ordering of searchable edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeOrder {
    pub edges: Vec<(usize, usize)>,
}

impl EdgeOrder {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

/// Bijection on vertex labels.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct VertexPermutation {
    perm: Vec<usize>,
}

impl TryFrom<Vec<usize>> for VertexPermutation {
    type Error = Error;

    fn try_from(perm: Vec<usize>) -> Result<Self> {
        Self::new(perm)
    }
}

impl From<VertexPermutation> for Vec<usize> {
    fn from(p: VertexPermutation) -> Self {
        p.perm
    }
}

impl VertexPermutation {
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let n = perm.len();
        let mut seen = vec![false; n];
        for &p in &perm {
            if p >= n || seen[p] {
                return Err(Error::InvalidPermutation(format!("{perm:?} is not a bijection")));
            }
            seen[p] = true;
        }
        Ok(Self { perm })
    }

    pub fn identity(n: usize) -> Self {
        Self { perm: (0..n).collect() }
    }

    pub fn transposition(n: usize, a: usize, b: usize) -> Self {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.swap(a, b);
        Self { perm }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn apply(&self, v: usize) -> usize {
        self.perm[v]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.perm
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.perm.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            inv[p] = i;
        }
        Self { perm: inv }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        Self { perm: other.perm.iter().map(|&p| self.perm[p]).collect() }
    }
}

/// Graph, bond dimensions and physical dimensions of a tensor network.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TnStructure {
    n: usize,
    bond: Vec<usize>,
    phys_dims: Vec<usize>,
    template: Option<Vec<(usize, usize)>>,
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl TnStructure {
    /// Fully-connected structure with every bond trivial.
    pub fn new(phys_dims: Vec<usize>) -> Result<Self> {
        let n = phys_dims.len();
        if n == 0 {
            return Err(Error::InvalidStructure("structure needs at least one vertex".into()));
        }
        if phys_dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidStructure(format!("zero physical dimension in {phys_dims:?}")));
        }
        let mut bond = vec![1; n * n];
        for v in 0..n {
            bond[v * n + v] = 0;
        }
        Ok(Self { n, bond, phys_dims, template: None })
    }

    /// Structure restricted to `edges`, all bonds trivial.
    pub fn with_template(phys_dims: Vec<usize>, edges: &[(usize, usize)]) -> Result<Self> {
        let mut s = Self::new(phys_dims)?;
        let mut t: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a == b || a >= s.n || b >= s.n {
                return Err(Error::InvalidStructure(format!("bad template edge ({a}, {b})")));
            }
            t.push(ordered(a, b));
        }
        t.sort_unstable();
        t.dedup();
        s.template = Some(t);
        Ok(s)
    }

    /// Builds a structure from a full bond matrix (diagonal ignored).
    pub fn from_bond_matrix(phys_dims: Vec<usize>, bond: &[Vec<usize>], template: Option<&[(usize, usize)]>) -> Result<Self> {
        let mut s = match template {
            Some(t) => Self::with_template(phys_dims, t)?,
            None => Self::new(phys_dims)?,
        };
        if bond.len() != s.n || bond.iter().any(|row| row.len() != s.n) {
            return Err(Error::InvalidStructure(format!("bond matrix must be {0}x{0}", s.n)));
        }
        for i in 0..s.n {
            for j in (i + 1)..s.n {
                if bond[i][j] != bond[j][i] {
                    return Err(Error::InvalidStructure(format!("bond matrix asymmetric at ({i}, {j})")));
                }
                s.set_bond_unchecked(i, j, bond[i][j].max(1));
            }
        }
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for i in 0..self.n {
            if self.bond[i * self.n + i] != 0 {
                return Err(Error::InvalidStructure("nonzero diagonal".into()));
            }
            for j in (i + 1)..self.n {
                let b = self.bond(i, j);
                if b == 0 || b != self.bond(j, i) {
                    return Err(Error::InvalidStructure(format!("bad bond at ({i}, {j})")));
                }
                if b != 1 && !self.is_searchable(i, j) {
                    return Err(Error::InvalidStructure(format!(
                        "non-template pair ({i}, {j}) carries bond {b}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn phys_dims(&self) -> &[usize] {
        &self.phys_dims
    }

    pub fn template_edges(&self) -> Option<&[(usize, usize)]> {
        self.template.as_deref()
    }

    pub fn bond(&self, i: usize, j: usize) -> usize {
        self.bond[i * self.n + j]
    }

    fn set_bond_unchecked(&mut self, i: usize, j: usize, d: usize) {
        self.bond[i * self.n + j] = d;
        self.bond[j * self.n + i] = d;
    }

    pub fn is_searchable(&self, i: usize, j: usize) -> bool {
        i != j
            && match &self.template {
                Some(t) => t.binary_search(&ordered(i, j)).is_ok(),
                None => true,
            }
    }

    /// Sets the bond of a searchable pair.
    pub fn set_bond(&mut self, i: usize, j: usize, d: usize) -> Result<()> {
        if i >= self.n || j >= self.n || !self.is_searchable(i, j) {
            return Err(Error::InvalidStructure(format!("pair ({i}, {j}) is not searchable")));
        }
        if d == 0 {
            return Err(Error::InvalidStructure("bond dimension must be >= 1".into()));
        }
        self.set_bond_unchecked(i, j, d);
        Ok(())
    }

    pub fn edge_order(&self) -> EdgeOrder {
        let edges = match &self.template {
            Some(t) => t.clone(),
            None => (0..self.n).flat_map(|i| ((i + 1)..self.n).map(move |j| (i, j))).collect(),
        };
        EdgeOrder { edges }
    }

    /// Bond dimensions of the searchable edges in canonical order.
    pub fn ranks(&self) -> Vec<usize> {
        self.edge_order().edges.iter().map(|&(i, j)| self.bond(i, j)).collect()
    }

    /// Copy with searchable edges set to `ranks` (canonical order).
    pub fn with_ranks(&self, ranks: &[usize]) -> Result<Self> {
        let edges = self.edge_order().edges;
        if edges.len() != ranks.len() {
            return Err(Error::InvalidStructure(format!(
                "{} ranks for {} searchable edges",
                ranks.len(),
                edges.len()
            )));
        }
        let mut s = self.clone();
        for (&(i, j), &r) in edges.iter().zip(ranks) {
            s.set_bond(i, j, r)?;
        }
        Ok(s)
    }

    /// Shape of core `v`: physical dim, then bonds to every other vertex in
    /// ascending order (trivial ones included).
    pub fn core_shape(&self, v: usize) -> Vec<usize> {
        std::iter::once(self.phys_dims[v])
            .chain((0..self.n).filter(|&u| u != v).map(|u| self.bond(v, u)))
            .collect()
    }

    pub fn core_size(&self, v: usize) -> usize {
        self.core_shape(v).iter().product()
    }

    /// Total number of core entries.
    pub fn param_count(&self) -> usize {
        (0..self.n).map(|v| self.core_size(v)).sum()
    }

    /// Number of entries of the represented tensor.
    pub fn tensor_size(&self) -> usize {
        self.phys_dims.iter().product()
    }

    /// Represented-tensor size over parameter count.
    pub fn compression_ratio(&self) -> f64 {
        self.tensor_size() as f64 / self.param_count() as f64
    }

    /// Physical dimensions with latent (size-1) vertices removed.
    pub fn output_dims(&self) -> Vec<usize> {
        let d: Vec<usize> = self.phys_dims.iter().copied().filter(|&d| d != 1).collect();
        if d.is_empty() {
            vec![1]
        } else {
            d
        }
    }

    /// Bond values over the whole upper triangle, zero on non-searchable pairs.
    pub fn ranks_to_padded_vector(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.n * (self.n - 1) / 2);
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                out.push(if self.is_searchable(i, j) { self.bond(i, j) } else { 0 });
            }
        }
        out
    }

    pub fn upper_triangle(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.n * (self.n - 1) / 2);
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                out.push(self.bond(i, j));
            }
        }
        out
    }

    /// Relabels vertices: old vertex `i` becomes `perm(i)`.
    pub fn apply_permutation(&self, perm: &VertexPermutation) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::InvalidPermutation(format!(
                "permutation of {} vertices applied to {}-vertex structure",
                perm.len(),
                self.n
            )));
        }
        let n = self.n;
        let mut bond = vec![0; n * n];
        let mut phys_dims = vec![0; n];
        for i in 0..n {
            phys_dims[perm.apply(i)] = self.phys_dims[i];
            for j in 0..n {
                bond[perm.apply(i) * n + perm.apply(j)] = self.bond(i, j);
            }
        }
        let template = self.template.as_ref().map(|t| {
            let mut m: Vec<(usize, usize)> = t.iter().map(|&(a, b)| ordered(perm.apply(a), perm.apply(b))).collect();
            m.sort_unstable();
            m
        });
        Ok(Self { n, bond, phys_dims, template })
    }

    /// Every single-transposition relabeling, pairs in canonical order.
    pub fn graph_neighborhood(&self) -> Vec<TnStructure> {
        let mut out = Vec::with_capacity(self.n * (self.n - 1) / 2);
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let t = VertexPermutation::transposition(self.n, i, j);
                out.push(self.apply_permutation(&t).expect("matching size"));
            }
        }
        out
    }

    /// Stable textual key of the structure, used for caching and seeding.
    pub fn canonical_key(&self) -> String {
        let join = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let template = match &self.template {
            Some(t) => t.iter().map(|(a, b)| format!("{a}-{b}")).collect::<Vec<_>>().join(","),
            None => "*".into(),
        };
        format!(
            "n={};p={};b={};t={}",
            self.n,
            join(&self.phys_dims),
            join(&self.upper_triangle()),
            template
        )
    }

    /// 64-bit FNV-1a hash of [`TnStructure::canonical_key`].
    pub fn structure_hash(&self) -> u64 {
        fnv1a(self.canonical_key().as_bytes())
    }

    pub fn structure_id(&self) -> String {
        format!("{:016x}", self.structure_hash())
    }

    /// Same vertex count, physical dims and template as `other`.
    pub fn same_frame(&self, other: &Self) -> bool {
        self.n == other.n && self.phys_dims == other.phys_dims && self.template == other.template
    }

    pub fn to_json(&self) -> StructureJson {
        StructureJson {
            n: self.n,
            phys_dims: self.phys_dims.clone(),
            bond: self.upper_triangle(),
            template_edges: self.template.clone(),
        }
    }

    pub fn from_json(j: &StructureJson) -> Result<Self> {
        let mut s = match &j.template_edges {
            Some(t) => Self::with_template(j.phys_dims.clone(), t)?,
            None => Self::new(j.phys_dims.clone())?,
        };
        if s.n != j.n {
            return Err(Error::InvalidStructure(format!("n = {} but {} physical dims", j.n, s.n)));
        }
        if j.bond.len() != s.n * (s.n - 1) / 2 {
            return Err(Error::InvalidStructure(format!(
                "upper triangle of length {} for n = {}",
                j.bond.len(),
                s.n
            )));
        }
        let mut it = j.bond.iter();
        for a in 0..s.n {
            for b in (a + 1)..s.n {
                let d = *it.next().expect("length checked");
                if d == 0 {
                    return Err(Error::InvalidStructure(format!("zero bond at ({a}, {b})")));
                }
                s.set_bond_unchecked(a, b, d);
            }
        }
        s.validate()?;
        Ok(s)
    }
}

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// On-disk form of a structure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureJson {
    pub n: usize,
    pub phys_dims: Vec<usize>,
    /// Upper triangle, row-major.
    pub bond: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template_edges: Option<Vec<(usize, usize)>>,
}

impl Serialize for TnStructure {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TnStructure {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let j = StructureJson::deserialize(deserializer)?;
        Self::from_json(&j).map_err(serde::de::Error::custom)
    }
}

/// Ascending integers within `radius` of `center`, clipped to `[lo, hi]`.
pub fn rank_candidates(center: usize, radius: usize, lo: usize, hi: usize) -> Result<Vec<usize>> {
    if lo > hi || center < lo || center > hi {
        return Err(Error::EmptyRange { center, radius, lo, hi });
    }
    let from = center.saturating_sub(radius).max(lo);
    let to = center.saturating_add(radius).min(hi);
    Ok((from..=to).collect())
}

/// Parameter-count ratio `truth / found`; at least 1 when `found` is as
/// compact as the generating structure.
pub fn efficiency(found: &TnStructure, truth: &TnStructure) -> Result<f64> {
    let mut a = found.output_dims();
    let mut b = truth.output_dims();
    a.sort_unstable();
    b.sort_unstable();
    if a != b {
        return Err(Error::DimensionMismatch(format!(
            "physical dims {:?} vs {:?}",
            found.output_dims(),
            truth.output_dims()
        )));
    }
    Ok(truth.param_count() as f64 / found.param_count() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ring(n: usize) -> Vec<(usize, usize)> {
        (0..n).map(|i| (i, (i + 1) % n)).collect()
    }

    fn tr4(ranks: [usize; 4]) -> TnStructure {
        // ring edges in canonical order: (0,1) (0,3) (1,2) (2,3)
        let s = TnStructure::with_template(vec![3; 4], &ring(4)).unwrap();
        let mut s = s;
        s.set_bond(0, 1, ranks[0]).unwrap();
        s.set_bond(1, 2, ranks[1]).unwrap();
        s.set_bond(2, 3, ranks[2]).unwrap();
        s.set_bond(3, 0, ranks[3]).unwrap();
        s
    }

    fn a1() -> TnStructure {
        // upper triangle of the first adjacency display
        let b = vec![vec![0, 0, 2, 3], vec![0, 0, 4, 5], vec![2, 4, 0, 0], vec![3, 5, 0, 0]];
        TnStructure::from_bond_matrix(vec![3; 4], &b, Some(&[(0, 2), (0, 3), (1, 2), (1, 3)])).unwrap()
    }

    fn a2() -> TnStructure {
        let b = vec![vec![0, 2, 0, 5], vec![2, 0, 3, 0], vec![0, 3, 0, 4], vec![5, 0, 4, 0]];
        TnStructure::from_bond_matrix(vec![3; 4], &b, Some(&ring(4))).unwrap()
    }

    #[test]
    fn padded_vectors_of_both_adjacencies() {
        assert_eq!(a1().ranks_to_padded_vector(), vec![0, 2, 3, 4, 5, 0]);
        assert_eq!(a1().ranks(), vec![2, 3, 4, 5]);
        assert_eq!(a2().ranks_to_padded_vector(), vec![2, 0, 5, 3, 0, 4]);
    }

    #[test]
    fn padded_vector_of_fully_connected_is_upper_triangle() {
        let s = TnStructure::new(vec![2; 4]).unwrap().with_ranks(&[1, 2, 3, 4, 5, 6]).unwrap();
        assert_eq!(s.ranks_to_padded_vector(), vec![1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn swapping_two_ring_vertices_yields_the_other_adjacency_pattern() {
        let swapped = a2().apply_permutation(&VertexPermutation::transposition(4, 1, 2)).unwrap();
        assert_eq!(swapped.template_edges(), a1().template_edges());
        let ring = TnStructure::with_template(vec![3; 4], &ring(4)).unwrap();
        let r = ring.apply_permutation(&VertexPermutation::transposition(4, 1, 2)).unwrap();
        assert_eq!(r.template_edges().unwrap(), &[(0, 2), (0, 3), (1, 2), (1, 3)]);
    }

    #[test]
    fn identity_and_inverse_permutations() {
        let s = tr4([2, 3, 4, 5]);
        assert_eq!(s.apply_permutation(&VertexPermutation::identity(4)).unwrap(), s);
        let p = VertexPermutation::new(vec![2, 0, 3, 1]).unwrap();
        let back = s.apply_permutation(&p).unwrap().apply_permutation(&p.inverse()).unwrap();
        assert_eq!(back, s);
        assert!(VertexPermutation::new(vec![0, 0, 1]).is_err());
        assert!(s.apply_permutation(&VertexPermutation::identity(3)).is_err());
    }

    #[test]
    fn neighborhood_sizes() {
        for n in 2..=8 {
            let s = TnStructure::with_template(vec![3; n], &ring(n)).unwrap();
            assert_eq!(s.graph_neighborhood().len(), n * (n - 1) / 2);
        }
        let two = TnStructure::new(vec![3, 3]).unwrap().with_ranks(&[2]).unwrap();
        assert_eq!(two.graph_neighborhood(), vec![two.clone()]);
    }

    #[test]
    fn rank_candidate_clamping() {
        assert_eq!(rank_candidates(3, 1, 1, 7).unwrap(), vec![2, 3, 4]);
        assert_eq!(rank_candidates(1, 2, 1, 7).unwrap(), vec![1, 2, 3]);
        assert_eq!(rank_candidates(7, 2, 1, 7).unwrap(), vec![5, 6, 7]);
        assert_eq!(rank_candidates(4, 0, 1, 7).unwrap(), vec![4]);
        assert!(matches!(rank_candidates(9, 1, 1, 7), Err(Error::EmptyRange { .. })));
        assert!(rank_candidates(1, 1, 3, 2).is_err());
    }

    #[test]
    fn param_count_and_compression() {
        let s = tr4([2, 3, 4, 5]);
        assert_eq!(s.param_count(), 144);
        assert_eq!(s.compression_ratio(), 0.5625);
        let ones = tr4([1, 1, 1, 1]);
        assert_eq!(ones.param_count(), 12);
        assert_eq!(ones.compression_ratio(), 6.75);
        let single = TnStructure::new(vec![81]).unwrap();
        assert_eq!(single.param_count(), 81);
        assert_eq!(single.compression_ratio(), 1.0);
    }

    #[test]
    fn efficiency_examples() {
        let s = tr4([2, 3, 4, 5]);
        assert_eq!(efficiency(&s, &s).unwrap(), 1.0);
        // found with 72 parameters against a 144-parameter truth
        let found = tr4([2, 2, 2, 2]);
        assert_eq!(found.param_count(), 48);
        let found = tr4([1, 2, 3, 4]);
        assert_eq!(found.param_count(), 3 * (4 + 2 + 6 + 12));
        assert_eq!(efficiency(&found, &s).unwrap(), 2.0);
        let other = TnStructure::new(vec![2; 4]).unwrap();
        assert!(efficiency(&other, &s).is_err());

        let mut ring8 = TnStructure::with_template(vec![3; 8], &ring(8)).unwrap();
        for (k, r) in [3, 4, 2, 3, 1, 3, 4, 2].into_iter().enumerate() {
            ring8.set_bond(k, (k + 1) % 8, r).unwrap();
        }
        assert_eq!(efficiency(&ring8, &ring8).unwrap(), 1.0);
    }

    #[test]
    fn non_template_edges_cannot_grow() {
        let mut s = tr4([1, 1, 1, 1]);
        assert!(s.set_bond(0, 2, 2).is_err());
        assert!(s.set_bond(0, 1, 0).is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = a1();
        let text = serde_json::to_string(&s).unwrap();
        let back: TnStructure = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        let fc = TnStructure::new(vec![2, 3, 1]).unwrap().with_ranks(&[2, 1, 3]).unwrap();
        let back: TnStructure = serde_json::from_str(&serde_json::to_string(&fc).unwrap()).unwrap();
        assert_eq!(back, fc);
        assert!(serde_json::from_str::<TnStructure>(r#"{"n":2,"phys_dims":[2,2],"bond":[0]}"#).is_err());
    }

    fn arb_ring_structure() -> impl Strategy<Value = (TnStructure, VertexPermutation)> {
        (3usize..7).prop_flat_map(|n| {
            (
                prop::collection::vec(1usize..5, n),
                prop::collection::vec(1usize..4, n),
                Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
            )
                .prop_map(move |(ranks, dims, perm)| {
                    let mut s = TnStructure::with_template(dims, &ring(n)).unwrap();
                    for (k, r) in ranks.into_iter().enumerate() {
                        s.set_bond(k, (k + 1) % n, r).unwrap();
                    }
                    (s, VertexPermutation::new(perm).unwrap())
                })
        })
    }

    proptest! {
        #[test]
        fn permutation_preserves_cost((s, p) in arb_ring_structure()) {
            let q = s.apply_permutation(&p).unwrap();
            prop_assert_eq!(q.param_count(), s.param_count());
            prop_assert_eq!(q.compression_ratio(), s.compression_ratio());
            prop_assert!(q.validate().is_ok());
        }

        #[test]
        fn neighbors_are_single_involutive_transpositions((s, _) in arb_ring_structure()) {
            let n = s.n_vertices();
            let mut k = 0;
            for i in 0..n {
                for j in (i + 1)..n {
                    let t = VertexPermutation::transposition(n, i, j);
                    let nb = &s.graph_neighborhood()[k];
                    prop_assert_eq!(nb, &s.apply_permutation(&t).unwrap());
                    prop_assert_eq!(&nb.apply_permutation(&t).unwrap(), &s);
                    k += 1;
                }
            }
        }

        #[test]
        fn padded_vector_is_injective(a in prop::collection::vec(1usize..6, 4), b in prop::collection::vec(1usize..6, 4)) {
            let base = TnStructure::with_template(vec![3; 4], &ring(4)).unwrap();
            let sa = base.with_ranks(&a).unwrap();
            let sb = base.with_ranks(&b).unwrap();
            prop_assert_eq!(a == b, sa.ranks_to_padded_vector() == sb.ranks_to_padded_vector());
        }

        #[test]
        fn coordinatewise_candidates_enumerate_the_box(center in prop::collection::vec(1usize..8, 3), radius in 0usize..3) {
            let (lo, hi) = (1, 7);
            let lists: Vec<Vec<usize>> = center.iter().map(|&c| rank_candidates(c, radius, lo, hi).unwrap()).collect();
            let mut grid = 0;
            for a in &lists[0] { for b in &lists[1] { for c in &lists[2] {
                let x = [*a, *b, *c];
                prop_assert!(x.iter().zip(&center).all(|(&v, &c)| v.abs_diff(c) <= radius && (lo..=hi).contains(&v)));
                grid += 1;
            }}}
            let expected: usize = center.iter().map(|&c| (lo..=hi).filter(|v| v.abs_diff(c) <= radius).count()).product();
            prop_assert_eq!(grid, expected);
        }
    }
}
