//! Fitting the cores of a fixed structure to a target tensor.
//!
//! The loss is the relative squared error; its gradient with respect to every
//! core is the residual contracted with all the other cores, accumulated in
//! one reverse sweep over the recorded merge (see [`NetworkTape`]). Updates
//! use Adam. The best iterate seen is what gets returned.

use std::ops::{Deref, DerefMut};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::structure::TnStructure;
use crate::tensor::{NetworkTape, Tensor};

/// One core tensor per vertex, shaped by [`TnStructure::core_shape`].
#[derive(Clone, Debug, PartialEq)]
pub struct Cores<T>(pub Vec<Tensor<T>>);

impl<T> Deref for Cores<T> {
    type Target = Vec<Tensor<T>>;

    fn deref(&self) -> &Self::Target {
        &self.0
    }
}

impl<T> DerefMut for Cores<T> {
    fn deref_mut(&mut self) -> &mut Self::Target {
        &mut self.0
    }
}

impl<T: Scalar> Cores<T> {
    pub fn conforms_to(&self, s: &TnStructure) -> bool {
        self.len() == s.n_vertices() && self.iter().enumerate().all(|(v, c)| c.dims() == s.core_shape(v).as_slice())
    }

    pub fn param_count(&self) -> usize {
        self.iter().map(|c| c.len()).sum()
    }

    fn check(&self, s: &TnStructure) -> Result<()> {
        if self.conforms_to(s) {
            Ok(())
        } else {
            Err(Error::Conformance(format!(
                "core shapes {:?} do not match structure {}",
                self.iter().map(|c| c.dims().to_vec()).collect::<Vec<_>>(),
                s.canonical_key()
            )))
        }
    }
}

/// Hyperparameters of the inner fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub learning_rate: f64,
    pub max_iters: usize,
    pub init_std: f64,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Stop as soon as the RSE drops to this level.
    pub early_stop_rse: f64,
    /// Stop once the best RSE has not improved (relatively, by
    /// `patience_rel_tol`) for this many iterations.
    pub patience: usize,
    pub patience_rel_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            max_iters: 10_000,
            init_std: 0.1,
            seed: 0,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            early_stop_rse: 1e-4,
            patience: 200,
            patience_rel_tol: 1e-6,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig("learning_rate must be > 0".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be >= 1".into()));
        }
        if !(self.init_std > 0.0) {
            return Err(Error::InvalidConfig("init_std must be > 0".into()));
        }
        Ok(())
    }
}

/// Outcome of [`minimize_rse`].
#[derive(Clone, Debug)]
pub struct Fit<T> {
    pub cores: Cores<T>,
    pub rse: f64,
    /// Adam steps taken.
    pub iters: usize,
}

fn normal<T: Scalar, R: Rng + ?Sized>(rng: &mut R, std: f64) -> T {
    let z: f64 = rng.sample(StandardNormal);
    T::of(z * std)
}

/// I.i.d. `N(0, init_std²)` cores for `s`, drawn in vertex order.
pub fn init_cores<T: Scalar, R: Rng + ?Sized>(s: &TnStructure, cfg: &SolverConfig, rng: &mut R) -> Cores<T> {
    Cores(
        (0..s.n_vertices())
            .map(|v| {
                let dims = s.core_shape(v);
                let n = dims.iter().product();
                let values = (0..n).map(|_| normal(rng, cfg.init_std)).collect();
                Tensor::new(dims, values).expect("core shape is valid")
            })
            .collect(),
    )
}

fn check_target<T: Scalar>(target: &Tensor<T>, s: &TnStructure) -> Result<T> {
    if target.dims() != s.output_dims().as_slice() {
        return Err(Error::DimensionMismatch(format!(
            "target {:?} vs structure output {:?}",
            target.dims(),
            s.output_dims()
        )));
    }
    let norm_sq = target.norm_sq();
    if norm_sq <= T::zero() {
        return Err(Error::ZeroNorm);
    }
    Ok(norm_sq)
}

/// RSE of the network and its gradient with respect to every core.
pub fn rse_and_gradient<T: Scalar>(target: &Tensor<T>, s: &TnStructure, cores: &Cores<T>) -> Result<(T, Cores<T>)> {
    let norm_sq = check_target(target, s)?;
    cores.check(s)?;
    let (tape, z) = NetworkTape::forward(s, cores)?;
    let scale = T::of(2.0) / norm_sq;
    let mut loss = T::zero();
    let residual: Vec<T> = z
        .values()
        .iter()
        .zip(target.values())
        .map(|(&a, &b)| {
            let r = a - b;
            loss += r * r;
            r * scale
        })
        .collect();
    let grad_out = Tensor::from_parts_unchecked(z.dims().to_vec(), residual);
    let grads = tape.backward(&grad_out)?;
    Ok((loss / norm_sq, Cores(grads)))
}

/// Exact gradient of `rse(target, contract_network(s, cores))`.
pub fn gradient_rse<T: Scalar>(target: &Tensor<T>, s: &TnStructure, cores: &Cores<T>) -> Result<Cores<T>> {
    rse_and_gradient(target, s, cores).map(|(_, g)| g)
}

struct Adam<T> {
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
    beta1: T,
    beta2: T,
    eps: T,
    lr: T,
    t: i32,
}

impl<T: Scalar> Adam<T> {
    fn new(cores: &Cores<T>, cfg: &SolverConfig) -> Self {
        Self {
            m: cores.iter().map(|c| vec![T::zero(); c.len()]).collect(),
            v: cores.iter().map(|c| vec![T::zero(); c.len()]).collect(),
            beta1: T::of(cfg.adam_beta1),
            beta2: T::of(cfg.adam_beta2),
            eps: T::of(cfg.adam_eps),
            lr: T::of(cfg.learning_rate),
            t: 0,
        }
    }

    fn step(&mut self, cores: &mut Cores<T>, grads: &Cores<T>) {
        self.t += 1;
        let one = T::one();
        let bc1 = one - self.beta1.powi(self.t);
        let bc2 = one - self.beta2.powi(self.t);
        let step = self.lr * bc2.sqrt() / bc1;
        let eps = self.eps * bc2.sqrt();
        for (((core, grad), m), v) in cores.iter_mut().zip(grads.iter()).zip(&mut self.m).zip(&mut self.v) {
            for (((x, &g), m), v) in core.values_mut().iter_mut().zip(grad.values()).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = self.beta1 * *m + (one - self.beta1) * g;
                *v = self.beta2 * *v + (one - self.beta2) * g * g;
                *x -= step * *m / (v.sqrt() + eps);
            }
        }
    }
}

/// Adam descent on the RSE from `init`, returning the best iterate.
pub fn minimize_rse<T: Scalar>(target: &Tensor<T>, s: &TnStructure, init: Cores<T>, cfg: &SolverConfig) -> Result<Fit<T>> {
    cfg.validate()?;
    check_target(target, s)?;
    init.check(s)?;
    let mut cores = init;
    let mut adam = Adam::new(&cores, cfg);
    let mut best_rse = f64::INFINITY;
    let mut best_cores = cores.clone();
    let mut last_improvement = 0usize;
    let mut iters = 0usize;
    loop {
        let (loss, grads) = rse_and_gradient(target, s, &cores)?;
        let loss = loss.to_f64_lossy();
        if !loss.is_finite() || grads.iter().any(|g| g.values().iter().any(|x| !x.is_finite())) {
            return Err(Error::Divergence { iteration: iters });
        }
        if loss < best_rse {
            if loss < best_rse * (1.0 - cfg.patience_rel_tol) {
                last_improvement = iters;
            }
            best_rse = loss;
            best_cores.clone_from(&cores);
        }
        if best_rse <= cfg.early_stop_rse || iters >= cfg.max_iters || iters - last_improvement >= cfg.patience {
            break;
        }
        adam.step(&mut cores, &grads);
        iters += 1;
    }
    Ok(Fit { cores: best_cores, rse: best_rse, iters })
}

/// Embeds `old` (fitted on `old_s`) into the shapes of `new_s`: shared index
/// ranges are copied, grown slices are drawn from `pad`, shrunk bonds keep
/// their leading slices.
pub fn warm_start_with<T: Scalar>(
    old: &Cores<T>,
    old_s: &TnStructure,
    new_s: &TnStructure,
    mut pad: impl FnMut() -> T,
) -> Result<Cores<T>> {
    if !old_s.same_frame(new_s) {
        return Err(Error::InvalidStructure(format!(
            "warm start across different frames: {} -> {}",
            old_s.canonical_key(),
            new_s.canonical_key()
        )));
    }
    old.check(old_s)?;
    let mut cores = Vec::with_capacity(old.len());
    for (v, src) in old.iter().enumerate() {
        let dims = new_s.core_shape(v);
        if dims.as_slice() == src.dims() {
            cores.push(src.clone());
            continue;
        }
        let src_dims = src.dims();
        let t = Tensor::from_fn(dims, |idx| {
            if idx.iter().zip(src_dims).all(|(&i, &d)| i < d) {
                src.get(idx)
            } else {
                pad()
            }
        })?;
        cores.push(t);
    }
    Ok(Cores(cores))
}

/// [`warm_start_with`] using `N(0, (init_std / 10)²)` padding.
pub fn warm_start<T: Scalar, R: Rng + ?Sized>(
    old: &Cores<T>,
    old_s: &TnStructure,
    new_s: &TnStructure,
    cfg: &SolverConfig,
    rng: &mut R,
) -> Result<Cores<T>> {
    let std = cfg.init_std * 0.1;
    warm_start_with(old, old_s, new_s, || normal(rng, std))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{contract_network, rse};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ring(n: usize) -> Vec<(usize, usize)> {
        (0..n).map(|i| (i, (i + 1) % n)).collect()
    }

    fn tr4() -> TnStructure {
        let mut s = TnStructure::with_template(vec![3; 4], &ring(4)).unwrap();
        for (k, r) in [2, 3, 4, 5].into_iter().enumerate() {
            s.set_bond(k, (k + 1) % 4, r).unwrap();
        }
        s
    }

    #[test]
    fn init_is_seed_deterministic_and_conforms() {
        let s = tr4();
        let cfg = SolverConfig::default();
        let a: Cores<f64> = init_cores(&s, &cfg, &mut ChaCha8Rng::seed_from_u64(3));
        let b: Cores<f64> = init_cores(&s, &cfg, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
        assert!(a.conforms_to(&s));
        // vertex 1 sits between bonds (0,1)=2 and (1,2)=3
        assert_eq!(a[1].dims(), &[3, 2, 3, 1]);
        assert_eq!(a[0].dims(), &[3, 2, 1, 5]);
    }

    #[test]
    fn init_sample_std() {
        let s = TnStructure::new(vec![10_000]).unwrap();
        let cfg = SolverConfig::default();
        let c: Cores<f64> = init_cores(&s, &cfg, &mut ChaCha8Rng::seed_from_u64(1));
        let v = c[0].values();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
        assert!((0.09..=0.11).contains(&var.sqrt()), "{}", var.sqrt());
    }

    #[test]
    fn zero_residual_gives_zero_gradient() {
        let s = tr4();
        let cfg = SolverConfig::default();
        let cores: Cores<f64> = init_cores(&s, &cfg, &mut ChaCha8Rng::seed_from_u64(5));
        let target = contract_network(&s, &cores).unwrap();
        let g = gradient_rse(&target, &s, &cores).unwrap();
        assert!(g.iter().all(|c| c.values().iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn matrix_case_gradient_formula() {
        // Z = A Bᵀ on a single bond of size k.
        let (m, n, k) = (3, 4, 2);
        let mut s = TnStructure::new(vec![m, n]).unwrap();
        s.set_bond(0, 1, k).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cfg = SolverConfig { init_std: 1.0, ..Default::default() };
        let cores: Cores<f64> = init_cores(&s, &cfg, &mut rng);
        let x: Vec<f64> = (0..m * n).map(|i| (i as f64).sin()).collect();
        let target = Tensor::new(vec![m, n], x.clone()).unwrap();
        let g = gradient_rse(&target, &s, &cores).unwrap();
        let a = cores[0].values();
        let b = cores[1].values();
        let nx: f64 = x.iter().map(|v| v * v).sum();
        for i in 0..m {
            for r in 0..k {
                let mut expect = 0.0;
                for j in 0..n {
                    let z: f64 = (0..k).map(|q| a[i * k + q] * b[j * k + q]).sum();
                    expect += (z - x[i * n + j]) * b[j * k + r];
                }
                expect *= 2.0 / nx;
                assert!((g[0].values()[i * k + r] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn solve_from_true_cores_stops_immediately() {
        let s = tr4();
        let cfg = SolverConfig::default();
        let cores: Cores<f64> = init_cores(&s, &SolverConfig { init_std: 1.0, ..cfg.clone() }, &mut ChaCha8Rng::seed_from_u64(2));
        let target = contract_network(&s, &cores).unwrap();
        let fit = minimize_rse(&target, &s, cores.clone(), &cfg).unwrap();
        assert_eq!(fit.iters, 0);
        assert_eq!(fit.rse, 0.0);
        assert_eq!(fit.cores, cores);
    }

    #[test]
    fn solve_is_deterministic_and_reduces_rse() {
        let s = tr4();
        let gen = SolverConfig { init_std: 1.0, ..Default::default() };
        let truth: Cores<f64> = init_cores(&s, &gen, &mut ChaCha8Rng::seed_from_u64(4));
        let target = contract_network(&s, &truth).unwrap();
        let cfg = SolverConfig { max_iters: 300, learning_rate: 0.01, ..Default::default() };
        let init: Cores<f64> = init_cores(&s, &cfg, &mut ChaCha8Rng::seed_from_u64(8));
        let start = rse(&target, &contract_network(&s, &init).unwrap()).unwrap();
        let a = minimize_rse(&target, &s, init.clone(), &cfg).unwrap();
        let b = minimize_rse(&target, &s, init, &cfg).unwrap();
        assert_eq!(a.rse, b.rse);
        assert_eq!(a.cores, b.cores);
        assert!(a.rse < start);
        let check = rse(&target, &contract_network(&s, &a.cores).unwrap()).unwrap();
        assert!((check - a.rse).abs() <= 1e-12 * a.rse.max(1e-300));
    }

    #[test]
    fn divergence_is_reported_with_iteration() {
        let s = tr4();
        let target = Tensor::from_fn(vec![3; 4], |i| i.iter().sum::<usize>() as f64 + 1.0).unwrap();
        let cfg = SolverConfig { learning_rate: 1e300, max_iters: 50, ..Default::default() };
        let init: Cores<f64> = init_cores(&s, &cfg, &mut ChaCha8Rng::seed_from_u64(1));
        match minimize_rse(&target, &s, init, &cfg) {
            Err(Error::Divergence { iteration }) => assert!(iteration >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn mismatched_inputs_are_rejected() {
        let s = tr4();
        let cfg = SolverConfig::default();
        let init: Cores<f64> = init_cores(&s, &cfg, &mut ChaCha8Rng::seed_from_u64(1));
        let wrong = Tensor::<f64>::zeros(vec![3; 3]).unwrap();
        assert!(matches!(minimize_rse(&wrong, &s, init.clone(), &cfg), Err(Error::DimensionMismatch(_))));
        let zero = Tensor::<f64>::zeros(vec![3; 4]).unwrap();
        assert!(matches!(minimize_rse(&zero, &s, init.clone(), &cfg), Err(Error::ZeroNorm)));
        let other = s.with_ranks(&[1, 1, 1, 1]).unwrap();
        let target = Tensor::from_fn(vec![3; 4], |_| 1.0).unwrap();
        assert!(matches!(minimize_rse(&target, &other, init, &cfg), Err(Error::Conformance(_))));
    }

    #[test]
    fn warm_start_identity_and_embedding() {
        let s = tr4();
        let cfg = SolverConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let old: Cores<f64> = init_cores(&s, &cfg, &mut rng);
        assert_eq!(warm_start(&old, &s, &s, &cfg, &mut rng).unwrap(), old);

        let mut grown = s.clone();
        grown.set_bond(0, 1, 3).unwrap();
        let padded = warm_start_with(&old, &s, &grown, || 0.0).unwrap();
        assert!(padded.conforms_to(&grown));
        let a = contract_network(&s, &old).unwrap();
        let b = contract_network(&grown, &padded).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() <= 1e-14 * x.abs().max(1e-300));
        }

        let shrunk = s.with_ranks(&[1, 1, 1, 1]).unwrap();
        let t = warm_start(&old, &s, &shrunk, &cfg, &mut rng).unwrap();
        assert!(t.conforms_to(&shrunk));
        assert_eq!(t[0].get(&[2, 0, 0, 0]), old[0].get(&[2, 0, 0, 0]));

        let other_frame = TnStructure::with_template(vec![2; 4], &ring(4)).unwrap();
        assert!(warm_start(&old, &s, &other_frame, &cfg, &mut rng).is_err());
    }
}
