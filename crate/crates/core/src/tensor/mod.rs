//! Dense tensors, unfoldings, spectra and network contraction.
//!
//! Storage is row-major (last index fastest) throughout.

mod contract;
pub mod io;
mod svd;

pub use contract::{contract_network, LabeledTensor, Label, NetworkTape};
pub use svd::singular_values;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Arbitrary-order real tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T> {
    dims: Vec<usize>,
    values: Vec<T>,
}

/// Row-major dense matrix, mostly used as an unfolding target.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<T>,
}

pub(crate) fn numel(dims: &[usize]) -> usize {
    dims.iter().product()
}

pub(crate) fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

impl<T: Scalar> Tensor<T> {
    pub fn new(dims: Vec<usize>, values: Vec<T>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidTensor("tensor must have at least one mode".into()));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidTensor(format!("zero-sized mode in {dims:?}")));
        }
        if numel(&dims) != values.len() {
            return Err(Error::InvalidTensor(format!(
                "dims {:?} need {} values, got {}",
                dims,
                numel(&dims),
                values.len()
            )));
        }
        Ok(Self { dims, values })
    }

    pub fn zeros(dims: Vec<usize>) -> Result<Self> {
        let n = numel(&dims);
        Self::new(dims, vec![T::zero(); n])
    }

    pub fn from_fn(dims: Vec<usize>, mut f: impl FnMut(&[usize]) -> T) -> Result<Self> {
        let n = numel(&dims);
        let mut idx = vec![0usize; dims.len()];
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            values.push(f(&idx));
            for k in (0..dims.len()).rev() {
                idx[k] += 1;
                if idx[k] < dims[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        Self::new(dims, values)
    }

    pub(crate) fn from_parts_unchecked(dims: Vec<usize>, values: Vec<T>) -> Self {
        debug_assert_eq!(numel(&dims), values.len());
        Self { dims, values }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn get(&self, idx: &[usize]) -> T {
        self.values[self.offset(idx)]
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        idx.iter().zip(&self.dims).fold(0, |acc, (&i, &d)| {
            debug_assert!(i < d);
            acc * d + i
        })
    }

    pub fn norm_sq(&self) -> T {
        self.values.iter().map(|&x| x * x).sum()
    }

    pub fn norm(&self) -> T {
        self.norm_sq().sqrt()
    }

    pub fn scaled(&self, alpha: T) -> Self {
        Self::from_parts_unchecked(self.dims.clone(), self.values.iter().map(|&x| x * alpha).collect())
    }

    pub fn reshape(self, dims: Vec<usize>) -> Result<Self> {
        Self::new(dims, self.values)
    }

    /// Drops every mode of size 1, keeping at least one mode.
    pub fn squeeze(self) -> Self {
        let mut dims: Vec<usize> = self.dims.iter().copied().filter(|&d| d != 1).collect();
        if dims.is_empty() {
            dims.push(1);
        }
        Self::from_parts_unchecked(dims, self.values)
    }

    /// Reorders modes so that output mode `i` is input mode `perm[i]`.
    pub fn permute_axes(&self, perm: &[usize]) -> Result<Self> {
        let n = self.order();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidPermutation(format!("{perm:?} for order {n}")));
        }
        let dims: Vec<usize> = perm.iter().map(|&p| self.dims[p]).collect();
        let values = permute_values(&self.values, &self.dims, perm);
        Ok(Self::from_parts_unchecked(dims, values))
    }

    /// Mode-`mode` unfolding: rows follow `mode`, columns run over the
    /// remaining modes in ascending order, row-major.
    pub fn unfold(&self, mode: usize) -> Result<Matrix<T>> {
        if mode >= self.order() {
            return Err(Error::ModeOutOfRange { mode, order: self.order() });
        }
        let perm: Vec<usize> = std::iter::once(mode).chain((0..self.order()).filter(|&k| k != mode)).collect();
        let rows = self.dims[mode];
        let cols = self.len() / rows;
        let values = permute_values(&self.values, &self.dims, &perm);
        Ok(Matrix { rows, cols, values })
    }

    /// Inverse of [`Tensor::unfold`].
    pub fn refold(m: &Matrix<T>, mode: usize, dims: &[usize]) -> Result<Self> {
        if mode >= dims.len() {
            return Err(Error::ModeOutOfRange { mode, order: dims.len() });
        }
        if m.rows != dims[mode] || m.rows * m.cols != numel(dims) {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix cannot refold into {:?} along mode {}",
                m.rows, m.cols, dims, mode
            )));
        }
        let perm: Vec<usize> = std::iter::once(mode).chain((0..dims.len()).filter(|&k| k != mode)).collect();
        let unfolded_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
        let mut inverse = vec![0; perm.len()];
        for (i, &p) in perm.iter().enumerate() {
            inverse[p] = i;
        }
        let values = permute_values(&m.values, &unfolded_dims, &inverse);
        Self::new(dims.to_vec(), values)
    }
}

/// Gathers `values` (shape `dims`) into the layout whose mode `i` is input mode `perm[i]`.
pub(crate) fn permute_values<T: Copy>(values: &[T], dims: &[usize], perm: &[usize]) -> Vec<T> {
    let n = dims.len();
    if perm.iter().enumerate().all(|(i, &p)| i == p) {
        return values.to_vec();
    }
    let in_strides = strides(dims);
    let out_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let src_strides: Vec<usize> = perm.iter().map(|&p| in_strides[p]).collect();
    let total = values.len();
    let mut out = Vec::with_capacity(total);
    if total == 0 {
        return out;
    }
    let last = n - 1;
    let inner_len = out_dims[last];
    let inner_stride = src_strides[last];
    let mut idx = vec![0usize; n];
    let mut base = 0usize;
    while out.len() < total {
        if inner_stride == 1 {
            out.extend_from_slice(&values[base..base + inner_len]);
        } else {
            let mut off = base;
            for _ in 0..inner_len {
                out.push(values[off]);
                off += inner_stride;
            }
        }
        // odometer over all but the last output mode
        let mut k = last;
        while k > 0 {
            k -= 1;
            idx[k] += 1;
            base += src_strides[k];
            if idx[k] < out_dims[k] {
                break;
            }
            base -= src_strides[k] * out_dims[k];
            idx[k] = 0;
        }
        if last == 0 {
            break;
        }
    }
    out
}

impl<T: Scalar> Matrix<T> {
    pub fn new(rows: usize, cols: usize, values: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 || rows * cols != values.len() {
            return Err(Error::InvalidTensor(format!(
                "{rows}x{cols} matrix with {} values",
                values.len()
            )));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn identity(n: usize) -> Self {
        let mut values = vec![T::zero(); n * n];
        for i in 0..n {
            values[i * n + i] = T::one();
        }
        Self { rows: n, cols: n, values }
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.values[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let values = permute_values(&self.values, &[self.rows, self.cols], &[1, 0]);
        Self { rows: self.cols, cols: self.rows, values }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut values = vec![T::zero(); self.rows * other.cols];
        T::gemm(self.rows, self.cols, other.cols, &self.values, &other.values, &mut values);
        Ok(Self { rows: self.rows, cols: other.cols, values })
    }

    pub fn norm_sq(&self) -> T {
        self.values.iter().map(|&x| x * x).sum()
    }
}

/// Relative squared error `‖x − z‖² / ‖x‖²`.
pub fn rse<T: Scalar>(x: &Tensor<T>, z: &Tensor<T>) -> Result<T> {
    if x.dims() != z.dims() {
        return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", x.dims(), z.dims())));
    }
    let denom = x.norm_sq();
    if denom <= T::zero() {
        return Err(Error::ZeroNorm);
    }
    let num: T = x.values().iter().zip(z.values()).map(|(&a, &b)| (a - b) * (a - b)).sum();
    Ok(num / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iota(dims: Vec<usize>) -> Tensor<f64> {
        let n = numel(&dims);
        Tensor::new(dims, (0..n).map(|i| i as f64).collect()).unwrap()
    }

    #[test]
    fn constructor_rejects_bad_shapes() {
        assert!(Tensor::<f64>::new(vec![], vec![]).is_err());
        assert!(Tensor::<f64>::new(vec![2, 0], vec![]).is_err());
        assert!(Tensor::<f64>::new(vec![2, 2], vec![1.0; 3]).is_err());
    }

    #[test]
    fn rse_examples() {
        let x = Tensor::new(vec![2], vec![1.0, 0.0]).unwrap();
        let z = Tensor::new(vec![2], vec![0.0, 1.0]).unwrap();
        assert_eq!(rse(&x, &x).unwrap(), 0.0);
        assert_eq!(rse(&x, &Tensor::zeros(vec![2]).unwrap()).unwrap(), 1.0);
        assert_eq!(rse(&x, &z).unwrap(), 2.0);
        assert!(matches!(rse(&Tensor::zeros(vec![2]).unwrap(), &x), Err(Error::ZeroNorm)));
        assert!(matches!(
            rse(&x, &Tensor::zeros(vec![3]).unwrap()),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn unfold_mode0_of_matrix_is_identity_layout() {
        let t = iota(vec![2, 3]);
        let m = t.unfold(0).unwrap();
        assert_eq!((m.rows, m.cols), (2, 3));
        assert_eq!(m.values, t.values());
    }

    #[test]
    fn unfold_mode1_of_cube() {
        let m = iota(vec![2, 2, 2]).unfold(1).unwrap();
        assert_eq!(m.row(0), &[0.0, 1.0, 4.0, 5.0]);
        assert_eq!(m.row(1), &[2.0, 3.0, 6.0, 7.0]);
    }

    #[test]
    fn unfold_rejects_bad_mode() {
        assert!(matches!(iota(vec![2, 2]).unfold(2), Err(Error::ModeOutOfRange { .. })));
    }

    #[test]
    fn permute_axes_matches_index_arithmetic() {
        let t = iota(vec![2, 3, 4]);
        let p = t.permute_axes(&[2, 0, 1]).unwrap();
        assert_eq!(p.dims(), &[4, 2, 3]);
        for a in 0..2 {
            for b in 0..3 {
                for c in 0..4 {
                    assert_eq!(p.get(&[c, a, b]), t.get(&[a, b, c]));
                }
            }
        }
        assert!(t.permute_axes(&[0, 0, 1]).is_err());
    }

    #[test]
    fn squeeze_drops_unit_modes() {
        let t = iota(vec![1, 3, 1, 2]).squeeze();
        assert_eq!(t.dims(), &[3, 2]);
        let s = iota(vec![1, 1]).squeeze();
        assert_eq!(s.dims(), &[1]);
    }

    fn arb_tensor() -> impl Strategy<Value = Tensor<f64>> {
        prop::collection::vec(1usize..4, 1..5).prop_flat_map(|dims| {
            let n = numel(&dims);
            prop::collection::vec(-10.0f64..10.0, n).prop_map(move |v| Tensor::new(dims.clone(), v).unwrap())
        })
    }

    proptest! {
        #[test]
        fn unfold_refold_round_trip_and_energy(t in arb_tensor()) {
            for mode in 0..t.order() {
                let m = t.unfold(mode).unwrap();
                // same multiset of entries, so the energy is identical
                let mut a = m.values.clone();
                let mut b = t.values().to_vec();
                a.sort_by(f64::total_cmp);
                b.sort_by(f64::total_cmp);
                prop_assert_eq!(a, b);
                prop_assert!((m.norm_sq() - t.norm_sq()).abs() <= 1e-12 * t.norm_sq().max(1.0));
                let back = Tensor::refold(&m, mode, t.dims()).unwrap();
                prop_assert_eq!(&back, &t);
            }
        }
    }
}
