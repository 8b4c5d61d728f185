//! Brute-force references by explicit path enumeration.
//!
//! Nothing here calls the recursions in [`crate::hmc`], [`crate::efb`] or
//! [`crate::memm`]; only parameter tables are shared. Used by tests and the
//! acceptance suite, never on a decoding path.

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;

use crate::error::{Error, Result};
use crate::hmc::HmcParams;
use crate::lattice::PosteriorLattice;
use crate::scalar::Scalar;

/// Largest number of label paths an oracle will enumerate.
pub const MAX_PATHS: u64 = 10_000_000;

/// Above this `T·N`, path weights are accumulated in log space.
pub const RAW_PRODUCT_BOUND: usize = 200;

fn path_count(n: usize, len: usize) -> Result<u64> {
    let mut total: u64 = 1;
    for _ in 0..len {
        total = total.saturating_mul(n as u64);
        if total > MAX_PATHS {
            return Err(Error::invalid(format!("{n}^{len} paths exceed the enumeration guard")));
        }
    }
    Ok(total)
}

/// Decode path number `k` into labels (mixed radix, position 0 fastest).
fn path_labels(mut k: u64, n: usize, out: &mut [usize]) {
    for slot in out.iter_mut() {
        *slot = (k % n as u64) as usize;
        k /= n as u64;
    }
}

/// Literal HMC factorization `p(x_1) Π p(x_t|x_t-1) Π p(y_t|x_t)`.
pub fn joint_probability<T: Scalar>(params: &HmcParams<T>, labels: &[usize], obs: &[usize]) -> Result<T> {
    if labels.len() != obs.len() || labels.is_empty() {
        return Err(Error::invalid("labels and observations must be equally long and non-empty"));
    }
    let mut p = params.pi()[labels[0]];
    for t in 1..labels.len() {
        p *= params.trans()[[labels[t - 1], labels[t]]];
    }
    for (&x, &y) in labels.iter().zip(obs) {
        p *= params.emit()[[x, y]];
    }
    Ok(p)
}

fn log_joint<T: Scalar>(params: &HmcParams<T>, labels: &[usize], obs: &[usize]) -> T {
    let mut lp = params.pi()[labels[0]].ln();
    for t in 1..labels.len() {
        lp += params.trans()[[labels[t - 1], labels[t]]].ln();
    }
    for (&x, &y) in labels.iter().zip(obs) {
        lp += params.emit()[[x, y]].ln();
    }
    lp
}

fn log_add<T: Scalar>(a: T, b: T) -> T {
    if a == T::neg_infinity() {
        return b;
    }
    if b == T::neg_infinity() {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `p(y_1:T)` summed over every label path.
pub fn total_probability<T: Scalar>(params: &HmcParams<T>, obs: &[usize]) -> Result<T> {
    let n = params.n_states();
    let paths = path_count(n, obs.len())?;
    let mut labels = vec![0; obs.len()];
    let mut total = T::zero();
    for k in 0..paths {
        path_labels(k, n, &mut labels);
        total += joint_probability(params, &labels, obs)?;
    }
    Ok(total)
}

/// Posterior marginals by marginalizing the joint over all `N^T` paths.
pub fn posterior_bruteforce<T: Scalar>(params: &HmcParams<T>, obs: &[usize]) -> Result<PosteriorLattice<T>> {
    let n = params.n_states();
    let len = obs.len();
    if len == 0 {
        return Err(Error::invalid("empty observation sequence"));
    }
    if let Some(&bad) = obs.iter().find(|&&y| y >= params.n_symbols()) {
        return Err(Error::invalid(format!("observation {bad} out of range")));
    }
    let paths = path_count(n, len)?;
    let use_logs = len * n > RAW_PRODUCT_BOUND;
    let mut labels = vec![0; len];
    let mut acc = Array2::from_elem((len, n), if use_logs { T::neg_infinity() } else { T::zero() });
    for k in 0..paths {
        path_labels(k, n, &mut labels);
        if use_logs {
            let lp = log_joint(params, &labels, obs);
            for (t, &x) in labels.iter().enumerate() {
                acc[[t, x]] = log_add(acc[[t, x]], lp);
            }
        } else {
            let p = joint_probability(params, &labels, obs)?;
            for (t, &x) in labels.iter().enumerate() {
                acc[[t, x]] += p;
            }
        }
    }
    for mut row in acc.rows_mut() {
        if use_logs {
            let m = row.iter().copied().fold(T::neg_infinity(), T::max);
            row.mapv_inplace(|v| (v - m).exp());
        }
        let z: T = row.iter().copied().sum();
        if !(z > T::zero()) {
            return Err(Error::invalid("observation sequence has zero probability"));
        }
        row.mapv_inplace(|v| v / z);
    }
    PosteriorLattice::new(acc)
}

/// `p(x_t | y_1:t)` under the MEMM factorization, by enumerating label
/// prefixes. `steps[t-1][j][i] = P(X_t = i | X_t-1 = j, y_t)`.
pub fn memm_posterior_bruteforce<T: Scalar>(initial: ArrayView1<'_, T>, steps: &[Array2<T>]) -> Result<Array2<T>> {
    let n = initial.len();
    let len = steps.len() + 1;
    path_count(n, len)?;
    let mut out = Array2::zeros((len, n));
    let mut labels = vec![0; len];
    for t in 0..len {
        let prefixes = path_count(n, t + 1)?;
        for k in 0..prefixes {
            path_labels(k, n, &mut labels[..t + 1]);
            let mut p = initial[labels[0]];
            for s in 1..=t {
                p *= steps[s - 1][[labels[s - 1], labels[s]]];
            }
            out[[t, labels[t]]] += p;
        }
    }
    Ok(out)
}

/// Stationary distribution of a row-stochastic matrix with positive entries,
/// by power iteration.
pub fn stationary_distribution(trans: &Array2<f64>) -> Array1<f64> {
    let n = trans.nrows();
    let mut pi = Array1::from_elem(n, 1.0 / n as f64);
    let mut best = f64::INFINITY;
    let mut stalled = 0;
    for _ in 0..100_000 {
        let next = pi.dot(trans);
        let next = &next / next.sum();
        let delta = (&next - &pi).mapv(f64::abs).sum();
        pi = next;
        // Stop at rounding level, or once the change has not shrunk for a while.
        if delta == 0.0 {
            break;
        }
        if delta < best {
            best = delta;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= 20 && best <= 1e-14 {
                break;
            }
        }
    }
    pi
}

/// `L_y(i) = π_i b_i(y) / Σ_j π_j b_j(y)` for every position.
pub fn exact_label_posteriors<T: Scalar>(pi: &Array1<T>, emit: &Array2<T>, obs: &[usize]) -> Array2<T> {
    let n = pi.len();
    let mut l = Array2::zeros((obs.len(), n));
    for (t, &y) in obs.iter().enumerate() {
        let mut z = T::zero();
        for i in 0..n {
            l[[t, i]] = pi[i] * emit[[i, y]];
            z += l[[t, i]];
        }
        for i in 0..n {
            l[[t, i]] /= z;
        }
    }
    l
}

fn random_distribution<R: Rng>(rng: &mut R, len: usize) -> Array1<f64> {
    let v = Array1::from_shape_fn(len, |_| rng.gen_range(0.05..1.0));
    let z = v.sum();
    v / z
}

/// A random stationary HMC instance: `π` is the stationary law of `a`.
#[derive(Debug, Clone)]
pub struct SyntheticInstance {
    pub params: HmcParams<f64>,
    pub obs: Vec<usize>,
}

pub fn random_stationary_instance<R: Rng>(
    rng: &mut R,
    n_states: usize,
    n_symbols: usize,
    len: usize,
) -> SyntheticInstance {
    let mut trans = Array2::zeros((n_states, n_states));
    let mut emit = Array2::zeros((n_states, n_symbols));
    for i in 0..n_states {
        trans.row_mut(i).assign(&random_distribution(rng, n_states));
        emit.row_mut(i).assign(&random_distribution(rng, n_symbols));
    }
    let pi = stationary_distribution(&trans);
    let obs = (0..len).map(|_| rng.gen_range(0..n_symbols)).collect();
    SyntheticInstance {
        params: HmcParams::new(pi, trans, emit).expect("valid synthetic parameters"),
        obs,
    }
}
