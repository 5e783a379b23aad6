use super::Matrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAX_SWEEPS: usize = 60;

/// Singular values of `m` in descending order, by one-sided Jacobi rotations.
pub fn singular_values<T: Scalar>(m: &Matrix<T>) -> Result<Vec<T>> {
    if m.values.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    // Rotate the columns of the tall orientation; store columns contiguously.
    let tall = if m.rows >= m.cols { m.clone() } else { m.transpose() };
    let (rows, cols) = (tall.rows, tall.cols);
    let mut colmajor: Vec<Vec<T>> = (0..cols)
        .map(|c| (0..rows).map(|r| tall.values[r * cols + c]).collect())
        .collect();

    let tol = if T::epsilon() < T::of(1e-10) { T::of(1e-12) } else { T::epsilon() * T::of(10.0) };
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let (alpha, beta, gamma) = {
                    let (a, b) = (&colmajor[p], &colmajor[q]);
                    let mut alpha = T::zero();
                    let mut beta = T::zero();
                    let mut gamma = T::zero();
                    for (&x, &y) in a.iter().zip(b) {
                        alpha += x * x;
                        beta += y * y;
                        gamma += x * y;
                    }
                    (alpha, beta, gamma)
                };
                if gamma == T::zero() || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::of(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                let (left, right) = colmajor.split_at_mut(q);
                for (x, y) in left[p].iter_mut().zip(right[0].iter_mut()) {
                    let (xv, yv) = (*x, *y);
                    *x = c * xv - s * yv;
                    *y = s * xv + c * yv;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<T> = colmajor.iter().map(|c| c.iter().map(|&x| x * x).sum::<T>().sqrt()).collect();
    sv.sort_by(|a, b| b.partial_cmp(a).expect("finite singular values"));
    Ok(sv)
}
