//! Pairwise contraction of labeled tensors and the sequential network merge.
//!
//! Unit-sized modes (trivial bonds, latent physical modes) are stripped before
//! any arithmetic, so a fully-connected core with mostly trivial bonds costs
//! the same as the equivalent sparse network.

use std::borrow::Cow;

use super::{numel, permute_values, Tensor};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::solver::Cores;
use crate::structure::TnStructure;

/// Index label of a network mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Phys(usize),
    /// Bond between vertices `(i, j)` with `i < j`.
    Bond(usize, usize),
}

impl Label {
    pub fn bond(a: usize, b: usize) -> Self {
        if a < b {
            Label::Bond(a, b)
        } else {
            Label::Bond(b, a)
        }
    }
}

/// A dense tensor whose modes carry labels. May be a scalar (no modes).
#[derive(Clone, Debug)]
pub struct LabeledTensor<T> {
    pub labels: Vec<Label>,
    pub dims: Vec<usize>,
    pub data: Vec<T>,
}

impl<T: Scalar> LabeledTensor<T> {
    pub fn new(labels: Vec<Label>, dims: Vec<usize>, data: Vec<T>) -> Result<Self> {
        if labels.len() != dims.len() || numel(&dims) != data.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels, dims {:?}, {} values",
                labels.len(),
                dims,
                data.len()
            )));
        }
        Ok(Self { labels, dims, data })
    }

    fn position(&self, l: Label) -> Option<usize> {
        self.labels.iter().position(|&x| x == l)
    }

    /// Drops unit-sized modes; the row-major data is unaffected.
    pub fn strip_unit_modes(mut self) -> Self {
        let keep: Vec<bool> = self.dims.iter().map(|&d| d != 1).collect();
        let mut k = keep.iter();
        self.labels.retain(|_| *k.next().unwrap());
        self.dims.retain(|&d| d != 1);
        self
    }

    /// Data reordered to the given label order (no copy if already ordered).
    pub fn data_in_order(&self, order: &[Label]) -> Cow<'_, [T]> {
        let perm: Vec<usize> = order
            .iter()
            .map(|&l| self.position(l).expect("label present"))
            .collect();
        if perm.iter().enumerate().all(|(i, &p)| i == p) {
            Cow::Borrowed(&self.data)
        } else {
            Cow::Owned(permute_values(&self.data, &self.dims, &perm))
        }
    }

    fn dim_of(&self, l: Label) -> usize {
        self.dims[self.position(l).expect("label present")]
    }

    /// Contracts every label shared with `other`. Result modes are this
    /// tensor's free labels followed by `other`'s free labels.
    pub fn contract(&self, other: &Self) -> Self {
        let shared: Vec<Label> = self.labels.iter().copied().filter(|l| other.labels.contains(l)).collect();
        let a_free: Vec<Label> = self.labels.iter().copied().filter(|l| !shared.contains(l)).collect();
        let b_free: Vec<Label> = other.labels.iter().copied().filter(|l| !shared.contains(l)).collect();

        let a_order: Vec<Label> = a_free.iter().chain(&shared).copied().collect();
        let b_order: Vec<Label> = shared.iter().chain(&b_free).copied().collect();
        let a = self.data_in_order(&a_order);
        let b = other.data_in_order(&b_order);

        let m: usize = a_free.iter().map(|&l| self.dim_of(l)).product();
        let k: usize = shared.iter().map(|&l| self.dim_of(l)).product();
        let n: usize = b_free.iter().map(|&l| other.dim_of(l)).product();
        let mut data = vec![T::zero(); m * n];
        T::gemm(m, k, n, &a, &b, &mut data);

        let dims = a_free
            .iter()
            .map(|&l| self.dim_of(l))
            .chain(b_free.iter().map(|&l| other.dim_of(l)))
            .collect();
        let labels = a_free.into_iter().chain(b_free).collect();
        Self { labels, dims, data }
    }
}

/// Labeled, unit-stripped view of core `v`.
fn labeled_core<T: Scalar>(s: &TnStructure, v: usize, core: &Tensor<T>) -> LabeledTensor<T> {
    let labels = std::iter::once(Label::Phys(v))
        .chain((0..s.n_vertices()).filter(|&u| u != v).map(|u| Label::bond(v, u)))
        .collect();
    LabeledTensor { labels, dims: core.dims().to_vec(), data: core.values().to_vec() }.strip_unit_modes()
}

fn check_conformance<T: Scalar>(s: &TnStructure, cores: &Cores<T>) -> Result<()> {
    if cores.len() != s.n_vertices() {
        return Err(Error::Conformance(format!(
            "{} cores for {} vertices",
            cores.len(),
            s.n_vertices()
        )));
    }
    for (v, core) in cores.iter().enumerate() {
        let expected = s.core_shape(v);
        if core.dims() != expected.as_slice() {
            return Err(Error::Conformance(format!(
                "core {v} has shape {:?}, structure requires {:?}",
                core.dims(),
                expected
            )));
        }
    }
    Ok(())
}

/// Recorded forward pass of the vertex-ascending merge, reusable for
/// reverse-mode accumulation of per-core environments.
pub struct NetworkTape<T> {
    cores: Vec<LabeledTensor<T>>,
    core_shapes: Vec<Vec<usize>>,
    /// `merged[k]` is the contraction of cores `0..=k`.
    merged: Vec<LabeledTensor<T>>,
    out_labels: Vec<Label>,
    out_dims: Vec<usize>,
}

impl<T: Scalar> NetworkTape<T> {
    pub fn forward(s: &TnStructure, cores: &Cores<T>) -> Result<(Self, Tensor<T>)> {
        check_conformance(s, cores)?;
        let labeled: Vec<LabeledTensor<T>> =
            cores.iter().enumerate().map(|(v, c)| labeled_core(s, v, c)).collect();
        let mut merged: Vec<LabeledTensor<T>> = Vec::with_capacity(labeled.len());
        merged.push(labeled[0].clone());
        for core in &labeled[1..] {
            let next = merged.last().expect("nonempty").contract(core);
            merged.push(next);
        }
        let out_labels: Vec<Label> = (0..s.n_vertices())
            .filter(|&v| s.phys_dims()[v] != 1)
            .map(Label::Phys)
            .collect();
        let mut out_dims: Vec<usize> = out_labels
            .iter()
            .map(|l| match l {
                Label::Phys(v) => s.phys_dims()[*v],
                Label::Bond(..) => unreachable!(),
            })
            .collect();
        let last = merged.last().expect("nonempty");
        debug_assert_eq!(last.labels.len(), out_labels.len());
        let values = last.data_in_order(&out_labels).into_owned();
        if out_dims.is_empty() {
            out_dims.push(1);
        }
        let out = Tensor::from_parts_unchecked(out_dims.clone(), values);
        let core_shapes = cores.iter().map(|c| c.dims().to_vec()).collect();
        Ok((Self { cores: labeled, core_shapes, merged, out_labels, out_dims }, out))
    }

    /// Given `∂L/∂Z` (shape of the network output), returns `∂L/∂core_v`
    /// for every vertex, each in that core's full shape.
    pub fn backward(&self, grad_out: &Tensor<T>) -> Result<Vec<Tensor<T>>> {
        if grad_out.dims() != self.out_dims.as_slice() {
            return Err(Error::DimensionMismatch(format!(
                "output gradient {:?} vs network output {:?}",
                grad_out.dims(),
                self.out_dims
            )));
        }
        let n = self.cores.len();
        let top = self.merged.last().expect("nonempty");
        let out_view = LabeledTensor {
            labels: self.out_labels.clone(),
            dims: self.out_labels.iter().map(|&l| top.dim_of(l)).collect(),
            data: grad_out.values().to_vec(),
        };
        let mut grad = LabeledTensor {
            labels: top.labels.clone(),
            dims: top.dims.clone(),
            data: out_view.data_in_order(&top.labels).into_owned(),
        };
        let mut grads: Vec<Option<Tensor<T>>> = vec![None; n];
        for k in (1..n).rev() {
            let core = &self.cores[k];
            let prev = &self.merged[k - 1];
            let d_core = grad.contract(prev);
            grads[k] = Some(self.to_core_shape(k, &d_core));
            let d_prev = grad.contract(core);
            grad = LabeledTensor {
                labels: prev.labels.clone(),
                dims: prev.dims.clone(),
                data: d_prev.data_in_order(&prev.labels).into_owned(),
            };
        }
        grads[0] = Some(self.to_core_shape(0, &grad));
        Ok(grads.into_iter().map(|g| g.expect("all cores visited")).collect())
    }

    fn to_core_shape(&self, v: usize, g: &LabeledTensor<T>) -> Tensor<T> {
        let data = g.data_in_order(&self.cores[v].labels).into_owned();
        Tensor::from_parts_unchecked(self.core_shapes[v].clone(), data)
    }
}

/// Full tensor represented by `cores` on structure `s`: one mode per
/// non-latent vertex, in vertex order.
pub fn contract_network<T: Scalar>(s: &TnStructure, cores: &Cores<T>) -> Result<Tensor<T>> {
    NetworkTape::forward(s, cores).map(|(_, out)| out)
}
