//! Multinomial logistic regression over sparse feature ids, trained by
//! mini-batch SGD. Serves both `P(X_t | y_t)` and, with a previous-label
//! input block, `P(X_{t+1} | X_t, y_{t+1})`.

use std::collections::HashMap;

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::scalar::Scalar;

/// Weight table with one row per input (feature ids, then the optional
/// previous-label one-hot block, then the bias) and one column per label.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel<T> {
    n_features: usize,
    n_labels: usize,
    conditions_on_prev: bool,
    weights: Array2<T>,
}

/// One training instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub features: FeatureVector,
    pub prev: Option<usize>,
    pub target: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdConfig {
    pub learning_rate: f64,
    /// Epoch `e` uses `learning_rate / (1 + decay * e)`.
    pub decay: f64,
    pub epochs: usize,
    pub l2: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        SgdConfig {
            learning_rate: 0.1,
            decay: 0.05,
            epochs: 20,
            l2: 1e-5,
            batch_size: 32,
            seed: 42,
        }
    }
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        if !(self.decay >= 0.0) || !(self.l2 >= 0.0) {
            return Err(Error::invalid("decay and l2 must be non-negative"));
        }
        Ok(())
    }
}

impl<T: Scalar> LogisticModel<T> {
    pub fn zeros(n_features: usize, n_labels: usize, conditions_on_prev: bool) -> Result<Self> {
        if n_labels == 0 {
            return Err(Error::invalid("logistic model needs at least one label"));
        }
        let rows = Self::input_rows(n_features, n_labels, conditions_on_prev);
        Ok(LogisticModel {
            n_features,
            n_labels,
            conditions_on_prev,
            weights: Array2::zeros((rows, n_labels)),
        })
    }

    pub fn from_weights(
        n_features: usize,
        n_labels: usize,
        conditions_on_prev: bool,
        weights: Array2<T>,
    ) -> Result<Self> {
        let mut model = Self::zeros(n_features, n_labels, conditions_on_prev)?;
        if weights.dim() != model.weights.dim() {
            return Err(Error::invalid(format!(
                "weight table is {:?}, expected {:?}",
                weights.dim(),
                model.weights.dim()
            )));
        }
        model.weights = weights;
        Ok(model)
    }

    fn input_rows(n_features: usize, n_labels: usize, prev: bool) -> usize {
        n_features + if prev { n_labels } else { 0 } + 1
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    pub fn conditions_on_prev(&self) -> bool {
        self.conditions_on_prev
    }

    pub fn weights(&self) -> &Array2<T> {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut Array2<T> {
        &mut self.weights
    }

    fn bias_row(&self) -> usize {
        self.weights.nrows() - 1
    }

    /// Active input rows for one prediction, bias included.
    fn active_rows(&self, fv: &FeatureVector, prev: Option<usize>) -> Result<Vec<usize>> {
        match (self.conditions_on_prev, prev) {
            (true, None) => return Err(Error::invalid("model needs a previous label")),
            (false, Some(_)) => return Err(Error::invalid("model does not take a previous label")),
            _ => {}
        }
        let mut rows = Vec::with_capacity(fv.active.len() + 2);
        for id in fv.ids() {
            if id as usize >= self.n_features {
                return Err(Error::invalid(format!(
                    "feature id {id} outside {} inputs",
                    self.n_features
                )));
            }
            rows.push(id as usize);
        }
        if let Some(p) = prev {
            if p >= self.n_labels {
                return Err(Error::invalid(format!("previous label {p} out of range")));
            }
            rows.push(self.n_features + p);
        }
        rows.push(self.bias_row());
        Ok(rows)
    }

    fn scores(&self, rows: &[usize], scale: T) -> Array1<T> {
        let mut s = Array1::zeros(self.n_labels);
        for &r in rows {
            s += &self.weights.row(r);
        }
        if scale != T::one() {
            s.mapv_inplace(|v| v * scale);
        }
        s
    }
}

/// In-place softmax with max shift.
pub(crate) fn softmax<T: Scalar>(scores: &mut Array1<T>) {
    let max = scores.iter().copied().fold(T::neg_infinity(), T::max);
    scores.mapv_inplace(|v| (v - max).exp());
    let sum: T = scores.iter().copied().sum();
    scores.mapv_inplace(|v| v / sum);
}

/// Softmax distribution over labels.
pub fn predict<T: Scalar>(
    model: &LogisticModel<T>,
    fv: &FeatureVector,
    prev: Option<usize>,
) -> Result<Array1<T>> {
    let rows = model.active_rows(fv, prev)?;
    let mut s = model.scores(&rows, T::one());
    softmax(&mut s);
    Ok(s)
}

/// Average negative log-likelihood plus `l2/2 · ‖W‖²`, and its gradient.
pub fn loss_and_gradient<T: Scalar>(
    model: &LogisticModel<T>,
    batch: &[Example],
    l2: T,
) -> Result<(T, Array2<T>)> {
    let mut grad = Array2::zeros(model.weights.dim());
    let mut nll = T::zero();
    if !batch.is_empty() {
        let inv = T::one() / T::lit(batch.len() as f64);
        for ex in batch {
            let rows = model.active_rows(&ex.features, ex.prev)?;
            if ex.target >= model.n_labels {
                return Err(Error::invalid(format!("target {} out of range", ex.target)));
            }
            let mut p = model.scores(&rows, T::one());
            softmax(&mut p);
            nll -= p[ex.target].ln();
            p[ex.target] -= T::one();
            for &r in &rows {
                let mut g = grad.row_mut(r);
                g.scaled_add(inv, &p);
            }
        }
        nll /= T::lit(batch.len() as f64);
    }
    let sq: T = model.weights.iter().map(|&w| w * w).sum();
    grad.scaled_add(l2, &model.weights);
    Ok((nll + l2 * sq / T::lit(2.0), grad))
}

/// Mean negative log-likelihood without the regularizer.
pub fn average_loss<T: Scalar>(model: &LogisticModel<T>, data: &[Example]) -> Result<T> {
    loss_and_gradient(model, data, T::zero()).map(|(l, _)| l)
}

/// Train with default progress reporting disabled.
pub fn train<T: Scalar>(
    dataset: &[Example],
    n_features: usize,
    n_labels: usize,
    conditions_on_prev: bool,
    config: &SgdConfig,
) -> Result<LogisticModel<T>> {
    train_with_progress(dataset, n_features, n_labels, conditions_on_prev, config, |_, _| {})
}

/// Mini-batch SGD on the L2-regularized NLL.
///
/// Weights are kept as `scale · V` so the L2 shrink is O(1) per batch and
/// only rows active in the batch are touched. `on_epoch(epoch, mean_nll)`
/// receives the mean per-example NLL seen during each epoch.
pub fn train_with_progress<T: Scalar>(
    dataset: &[Example],
    n_features: usize,
    n_labels: usize,
    conditions_on_prev: bool,
    config: &SgdConfig,
    mut on_epoch: impl FnMut(usize, T),
) -> Result<LogisticModel<T>> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::invalid("empty training set"));
    }
    let mut model = LogisticModel::zeros(n_features, n_labels, conditions_on_prev)?;
    let active: Vec<Vec<usize>> = dataset
        .iter()
        .map(|ex| {
            if ex.target >= n_labels {
                return Err(Error::invalid(format!("target {} out of range", ex.target)));
            }
            model.active_rows(&ex.features, ex.prev)
        })
        .collect::<Result<_>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut scale = T::one();
    let l2 = T::lit(config.l2);
    let mut pending: HashMap<usize, Array1<T>> = HashMap::new();

    for epoch in 0..config.epochs {
        let rate = T::lit(config.learning_rate / (1.0 + config.decay * epoch as f64));
        order.shuffle(&mut rng);
        let mut epoch_nll = T::zero();
        for batch in order.chunks(config.batch_size) {
            pending.clear();
            for &k in batch {
                let rows = &active[k];
                let mut p = model.scores(rows, scale);
                softmax(&mut p);
                let target = dataset[k].target;
                epoch_nll -= p[target].max(T::min_positive_value()).ln();
                p[target] -= T::one();
                for &r in rows {
                    pending
                        .entry(r)
                        .and_modify(|g| *g += &p)
                        .or_insert_with(|| p.clone());
                }
            }
            let shrink = T::one() - rate * l2;
            if !(shrink > T::zero()) {
                return Err(Error::invalid("learning rate times l2 must stay below 1"));
            }
            scale *= shrink;
            let step = rate / (T::lit(batch.len() as f64) * scale);
            for (&r, g) in &pending {
                model.weights.row_mut(r).scaled_add(-step, g);
            }
            if scale < T::lit(1e-6) {
                model.weights.mapv_inplace(|w| w * scale);
                scale = T::one();
            }
        }
        on_epoch(epoch, epoch_nll / T::lit(dataset.len() as f64));
    }
    if scale != T::one() {
        model.weights.mapv_inplace(|w| w * scale);
    }
    Ok(model)
}
