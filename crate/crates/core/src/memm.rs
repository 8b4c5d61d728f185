//! Maximum-entropy Markov model baseline: forward-only posterior recursion.

use ndarray::{Array1, Array2, ArrayView1};

use crate::discrim::{predict, LogisticModel};
use crate::error::{Error, Result};
use crate::features::{FeaturePipeline, FeatureVector};
use crate::lattice::argmax;
use crate::scalar::Scalar;

/// `l0` gives `P(X_1 | y_1)`; `l1` gives `P(X_t+1 | X_t, y_t+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MemmModel<T> {
    l0: LogisticModel<T>,
    l1: LogisticModel<T>,
}

impl<T: Scalar> MemmModel<T> {
    pub fn new(l0: LogisticModel<T>, l1: LogisticModel<T>) -> Result<Self> {
        if l0.conditions_on_prev() || !l1.conditions_on_prev() {
            return Err(Error::invalid("MEMM needs an unconditioned l0 and a previous-label l1"));
        }
        if l0.n_labels() != l1.n_labels() {
            return Err(Error::invalid("l0 and l1 disagree on the label count"));
        }
        Ok(MemmModel { l0, l1 })
    }

    pub fn l0(&self) -> &LogisticModel<T> {
        &self.l0
    }

    pub fn l1(&self) -> &LogisticModel<T> {
        &self.l1
    }

    pub fn n_labels(&self) -> usize {
        self.l0.n_labels()
    }

    /// Explicit tables for a sentence: `L_{y_1}` and, for each later
    /// position, a matrix whose row `j` is `P(X_t = · | X_t-1 = j, y_t)`.
    pub fn tables(&self, features: &[FeatureVector]) -> Result<(Array1<T>, Vec<Array2<T>>)> {
        let first = features
            .first()
            .ok_or_else(|| Error::invalid("empty observation sequence"))?;
        let initial = predict(&self.l0, first, None)?;
        let n = self.n_labels();
        let steps = features[1..]
            .iter()
            .map(|fv| {
                let mut m = Array2::zeros((n, n));
                for j in 0..n {
                    m.row_mut(j).assign(&predict(&self.l1, fv, Some(j))?);
                }
                Ok(m)
            })
            .collect::<Result<_>>()?;
        Ok((initial, steps))
    }
}

/// `α_1 = L_{y_1}`, `α_t+1(i) = Σ_j α_t(j) · step_t[j][i]`.
///
/// Rows are mixtures of distributions and are never renormalized.
pub fn memm_forward<T: Scalar>(initial: ArrayView1<'_, T>, steps: &[Array2<T>]) -> Result<Array2<T>> {
    let n = initial.len();
    if n == 0 {
        return Err(Error::invalid("no labels"));
    }
    let mut alpha = Array2::zeros((steps.len() + 1, n));
    alpha.row_mut(0).assign(&initial);
    for (t, step) in steps.iter().enumerate() {
        if step.dim() != (n, n) {
            return Err(Error::invalid(format!("step {} is {:?}, expected ({n}, {n})", t + 1, step.dim())));
        }
        for i in 0..n {
            let mut acc = T::zero();
            for j in 0..n {
                acc += alpha[[t, j]] * step[[j, i]];
            }
            alpha[[t + 1, i]] = acc;
        }
    }
    Ok(alpha)
}

/// Per-position argmax of the MEMM forward marginals.
pub fn decode_memm<T: Scalar, S: AsRef<str>>(
    model: &MemmModel<T>,
    tokens: &[S],
    pipeline: &FeaturePipeline,
) -> Result<Vec<usize>> {
    let features = pipeline.encode(tokens)?;
    let (initial, steps) = model.tables(&features)?;
    let alpha = memm_forward(initial.view(), &steps)?;
    Ok(alpha
        .rows()
        .into_iter()
        .map(|row| argmax(row.iter().copied()).expect("non-empty"))
        .collect())
}
