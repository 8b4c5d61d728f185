//! Entropic forward-backward: posterior marginals of a stationary HMC computed
//! from a discriminative `L_{y_t}(i) = P(X_t = i | y_t)` and the prior `π`,
//! without ever forming the emission `b_i(y)`.
//!
//! The unscaled recursions are
//!
//! ```text
//! αE_1(i)   = L_1(i)
//! αE_t+1(i) = L_t+1(i) / π_i · Σ_j αE_t(j) a_ji
//! βE_T(i)   = 1
//! βE_t(i)   = Σ_j L_t+1(j) / π_j · βE_t+1(j) a_ij
//! ```
//!
//! and `P(X_t = i | y_1:T) ∝ αE_t(i) βE_t(i)`. They differ from the classic
//! quantities only by the per-position factor `p(y_t)`, which cancels in the
//! normalization. Rows are normalized at every step, as in [`crate::hmc`].

use ndarray::{Array1, Array2, ArrayView2};

use crate::discrim::{predict, LogisticModel};
use crate::error::{Error, Result};
use crate::features::{FeatureVector, FeaturePipeline};
use crate::hmc::{check_chain, normalize_step, HmcParams, ScaleDirection, ScaledTable};
use crate::lattice::{mpm_from_lattice, PosteriorLattice};
use crate::scalar::Scalar;

/// Prior and transitions of the chain driving the entropic recursions.
#[derive(Debug, Clone, PartialEq)]
pub struct EfbParams<T> {
    pi: Array1<T>,
    trans: Array2<T>,
}

impl<T: Scalar> EfbParams<T> {
    /// Every `π_i` must be strictly positive.
    pub fn new(pi: Array1<T>, trans: Array2<T>) -> Result<Self> {
        check_chain(&pi, &trans)?;
        if let Some(state) = pi.iter().position(|&p| !(p > T::zero())) {
            return Err(Error::invalid(format!("pi[{state}] is zero; L/pi is undefined")));
        }
        Ok(EfbParams { pi, trans })
    }

    pub fn from_hmc(params: &HmcParams<T>) -> Result<Self> {
        Self::new(params.pi().clone(), params.trans().clone())
    }

    pub fn n_states(&self) -> usize {
        self.pi.len()
    }

    pub fn pi(&self) -> &Array1<T> {
        &self.pi
    }

    pub fn trans(&self) -> &Array2<T> {
        &self.trans
    }
}

/// Source of `L_{y_t}(·)`, the label distribution given a token's features.
pub trait LabelPosterior<T> {
    fn n_labels(&self) -> usize;
    fn label_posterior(&self, features: &FeatureVector, position: usize) -> Result<Array1<T>>;
}

impl<T: Scalar> LabelPosterior<T> for LogisticModel<T> {
    fn n_labels(&self) -> usize {
        LogisticModel::n_labels(self)
    }

    fn label_posterior(&self, features: &FeatureVector, _position: usize) -> Result<Array1<T>> {
        predict(self, features, None)
    }
}

/// `T × N` table of `L_{y_t}` for a sentence.
pub fn l_table<T: Scalar, P: LabelPosterior<T> + ?Sized>(
    provider: &P,
    features: &[FeatureVector],
) -> Result<Array2<T>> {
    let n = provider.n_labels();
    let mut table = Array2::zeros((features.len(), n));
    for (t, fv) in features.iter().enumerate() {
        let row = provider.label_posterior(fv, t)?;
        if row.len() != n {
            return Err(Error::invalid(format!("provider returned {} values, expected {n}", row.len())));
        }
        table.row_mut(t).assign(&row);
    }
    Ok(table)
}

/// `L / π` with entries floored at [`Scalar::probability_floor`].
fn likelihood_ratios<T: Scalar>(params: &EfbParams<T>, l: ArrayView2<'_, T>) -> Result<Array2<T>> {
    let (len, n) = l.dim();
    if len == 0 {
        return Err(Error::invalid("empty observation sequence"));
    }
    if n != params.n_states() {
        return Err(Error::invalid(format!("L has {n} columns for {} states", params.n_states())));
    }
    let floor = T::probability_floor();
    let mut out = Array2::zeros((len, n));
    for t in 0..len {
        for i in 0..n {
            let v = l[[t, i]];
            if v.is_nan() || v.is_infinite() {
                return Err(Error::invalid(format!("L[{t}][{i}] is {v}")));
            }
            out[[t, i]] = v.max(floor) / params.pi[i];
        }
    }
    Ok(out)
}

/// Entropic forward table.
pub fn entropic_forward<T: Scalar>(params: &EfbParams<T>, l: ArrayView2<'_, T>) -> Result<ScaledTable<T>> {
    let ratio = likelihood_ratios(params, l)?;
    let (len, n) = ratio.dim();
    let floor = T::probability_floor();
    let mut rows = Array2::zeros((len, n));
    let mut scales = Vec::with_capacity(len);
    for i in 0..n {
        rows[[0, i]] = l[[0, i]].max(floor);
    }
    scales.push(normalize_step(rows.row_mut(0), 0, "entropic forward")?);
    for t in 1..len {
        for i in 0..n {
            let mut acc = T::zero();
            for j in 0..n {
                acc += rows[[t - 1, j]] * params.trans[[j, i]];
            }
            rows[[t, i]] = ratio[[t, i]] * acc;
        }
        scales.push(normalize_step(rows.row_mut(t), t, "entropic forward")?);
    }
    Ok(ScaledTable {
        rows,
        scales,
        direction: ScaleDirection::Prefix,
    })
}

/// Entropic backward table.
pub fn entropic_backward<T: Scalar>(params: &EfbParams<T>, l: ArrayView2<'_, T>) -> Result<ScaledTable<T>> {
    let ratio = likelihood_ratios(params, l)?;
    let (len, n) = ratio.dim();
    let mut rows = Array2::zeros((len, n));
    let mut scales = vec![T::zero(); len];
    rows.row_mut(len - 1).fill(T::one());
    scales[len - 1] = normalize_step(rows.row_mut(len - 1), len - 1, "entropic backward")?;
    for t in (0..len - 1).rev() {
        for i in 0..n {
            let mut acc = T::zero();
            for j in 0..n {
                acc += ratio[[t + 1, j]] * rows[[t + 1, j]] * params.trans[[i, j]];
            }
            rows[[t, i]] = acc;
        }
        scales[t] = normalize_step(rows.row_mut(t), t, "entropic backward")?;
    }
    Ok(ScaledTable {
        rows,
        scales,
        direction: ScaleDirection::Suffix,
    })
}

/// Posterior marginals from the entropic recursions.
pub fn posterior_efb<T: Scalar>(params: &EfbParams<T>, l: ArrayView2<'_, T>) -> Result<PosteriorLattice<T>> {
    let fwd = entropic_forward(params, l)?;
    let bwd = entropic_backward(params, l)?;
    PosteriorLattice::from_weights(&fwd.rows * &bwd.rows)
}

/// Features → `L` → posterior marginals → MPM labels.
pub fn decode_efb<T, P, S>(
    params: &EfbParams<T>,
    provider: &P,
    tokens: &[S],
    pipeline: &FeaturePipeline,
) -> Result<Vec<usize>>
where
    T: Scalar,
    P: LabelPosterior<T> + ?Sized,
    S: AsRef<str>,
{
    let features = pipeline.encode(tokens)?;
    let l = l_table(provider, &features)?;
    mpm_from_lattice(&posterior_efb(params, l.view())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hmc::posterior_fb;
    use approx::assert_relative_eq;
    use ndarray::array;
    use proptest::prelude::*;

    fn worked() -> (EfbParams<f64>, Array2<f64>) {
        let p = EfbParams::new(array![4.0 / 7.0, 3.0 / 7.0], array![[0.7, 0.3], [0.4, 0.6]]).unwrap();
        let l = array![[6.0 / 7.0, 1.0 / 7.0], [6.0 / 7.0, 1.0 / 7.0]];
        (p, l)
    }

    #[test]
    fn worked_example_values() {
        let (p, l) = worked();
        let f = entropic_forward(&p, l.view()).unwrap();
        assert_relative_eq!(f.unscaled(0)[0], 6.0 / 7.0, epsilon = 1e-12);
        assert_relative_eq!(f.unscaled(1)[0], 6.9 / 7.0, epsilon = 1e-12);
        assert_relative_eq!(f.unscaled(1)[1], 0.8 / 7.0, epsilon = 1e-12);
        let b = entropic_backward(&p, l.view()).unwrap();
        assert_relative_eq!(b.unscaled(0)[0], 1.15, epsilon = 1e-12);
        assert_relative_eq!(b.unscaled(0)[1], 0.8, epsilon = 1e-12);
        let post = posterior_efb(&p, l.view()).unwrap();
        assert_relative_eq!(post.row(0)[0], 6.9 / 7.7, epsilon = 1e-12);
        assert_relative_eq!(post.row(0)[1], 0.8 / 7.7, epsilon = 1e-12);
        assert_eq!(mpm_from_lattice(&post).unwrap(), vec![0, 0]);

        let hmc = HmcParams::new(p.pi().clone(), p.trans().clone(), array![[0.9, 0.1], [0.2, 0.8]]).unwrap();
        let fb = posterior_fb(&hmc, &[0, 0]).unwrap();
        for (a, b) in fb.values().iter().zip(post.values()) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_position() {
        let (p, _) = worked();
        let l = array![[0.3, 0.7]];
        let f = entropic_forward(&p, l.view()).unwrap();
        assert_relative_eq!(f.unscaled(0)[1], 0.7, epsilon = 1e-15);
        let b = entropic_backward(&p, l.view()).unwrap();
        assert_eq!(b.unscaled(0).to_vec(), vec![1.0, 1.0]);
        let post = posterior_efb(&p, l.view()).unwrap();
        assert_relative_eq!(post.row(0)[1], 0.7, epsilon = 1e-15);
    }

    #[test]
    fn uninformative_observations_follow_the_prior() {
        let (p, _) = worked();
        let l = Array2::from_shape_fn((5, 2), |(_, i)| p.pi()[i]);
        let f = entropic_forward(&p, l.view()).unwrap();
        let b = entropic_backward(&p, l.view()).unwrap();
        for t in 0..5 {
            assert_relative_eq!(f.unscaled(t)[0], 4.0 / 7.0, epsilon = 1e-12);
            assert_relative_eq!(b.unscaled(t)[0], 1.0, epsilon = 1e-12);
            assert_relative_eq!(b.unscaled(t)[1], 1.0, epsilon = 1e-12);
        }
        let post = posterior_efb(&p, l.view()).unwrap();
        for row in post.values().rows() {
            assert_relative_eq!(row[0], 4.0 / 7.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_prior_rejected_and_zero_l_clamped() {
        let err = EfbParams::new(array![1.0, 0.0], array![[1.0, 0.0], [0.0, 1.0]]).unwrap_err();
        assert!(err.to_string().contains("pi[1]"));
        let (p, _) = worked();
        let post = posterior_efb(&p, array![[1.0, 0.0], [0.0, 1.0]].view()).unwrap();
        assert!(post.values().iter().all(|v| v.is_finite()));
        assert!(posterior_efb(&p, Array2::zeros((0, 2)).view()).is_err());
        assert!(posterior_efb(&p, Array2::zeros((1, 3)).view()).is_err());
    }

    #[test]
    fn works_in_f32() {
        let p = EfbParams::<f32>::new(array![4.0 / 7.0, 3.0 / 7.0], array![[0.7, 0.3], [0.4, 0.6]]).unwrap();
        let l = array![[6.0f32 / 7.0, 1.0 / 7.0], [6.0 / 7.0, 1.0 / 7.0]];
        let post = posterior_efb(&p, l.view()).unwrap();
        assert!((post.row(0)[0] - 6.9 / 7.7).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn scale_invariance(
            l in prop::collection::vec(0.01f64..1.0, 3 * 6),
            c in prop::collection::vec(0.001f64..1000.0, 6),
            len in 1usize..6,
        ) {
            let p = EfbParams::new(
                array![0.2, 0.5, 0.3],
                array![[0.5, 0.25, 0.25], [0.1, 0.8, 0.1], [0.3, 0.3, 0.4]],
            ).unwrap();
            let base = Array2::from_shape_vec((6, 3), l).unwrap().slice(ndarray::s![..len, ..]).to_owned();
            let mut scaled = base.clone();
            for (t, mut row) in scaled.rows_mut().into_iter().enumerate() { row *= c[t]; }
            let a = posterior_efb(&p, base.view()).unwrap();
            let b = posterior_efb(&p, scaled.view()).unwrap();
            for (x, y) in a.values().iter().zip(b.values()) { prop_assert!((x - y).abs() < 1e-12); }
            for row in a.values().rows() { prop_assert!((row.sum() - 1.0).abs() < 1e-9); }
        }
    }
}
