//! Generative hidden Markov chain: supervised estimation, scaled
//! forward/backward recursions and posterior marginals.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::features::{Family, FeatureIndex, FeatureVector};
use crate::index::{TagSet, Vocabulary};
use crate::lattice::PosteriorLattice;
use crate::scalar::{row_sum, Scalar};
use crate::sentence::LabeledSentence;

/// Default additive smoothing for all count tables.
pub const DEFAULT_DELTA: f64 = 1e-6;

/// Stationary HMC parameters: prior `pi`, transitions `trans[i][j] = P(j | i)`,
/// emissions `emit[i][y] = P(y | i)`.
///
/// Tables built by [`estimate_params`] carry the unknown-word slot as the last
/// emission column.
#[derive(Debug, Clone, PartialEq)]
pub struct HmcParams<T> {
    pi: Array1<T>,
    trans: Array2<T>,
    emit: Array2<T>,
}

pub(crate) fn check_distribution<T: Scalar>(row: ArrayView1<'_, T>, what: &str) -> Result<()> {
    if row.iter().any(|&v| !(v >= T::zero()) || !v.is_finite()) {
        return Err(Error::invalid(format!("{what} has a negative or non-finite entry")));
    }
    let sum = row_sum(row.iter().copied());
    if (sum - T::one()).abs() > T::normalization_tol(row.len()) {
        return Err(Error::invalid(format!("{what} sums to {sum}, not 1")));
    }
    Ok(())
}

pub(crate) fn check_chain<T: Scalar>(pi: &Array1<T>, trans: &Array2<T>) -> Result<()> {
    let n = pi.len();
    if n == 0 {
        return Err(Error::invalid("chain has no states"));
    }
    if trans.dim() != (n, n) {
        return Err(Error::invalid(format!(
            "transition table is {:?}, expected ({n}, {n})",
            trans.dim()
        )));
    }
    check_distribution(pi.view(), "pi")?;
    for (i, row) in trans.rows().into_iter().enumerate() {
        check_distribution(row, &format!("transition row {i}"))?;
    }
    Ok(())
}

impl<T: Scalar> HmcParams<T> {
    pub fn new(pi: Array1<T>, trans: Array2<T>, emit: Array2<T>) -> Result<Self> {
        check_chain(&pi, &trans)?;
        if emit.nrows() != pi.len() || emit.ncols() == 0 {
            return Err(Error::invalid(format!(
                "emission table is {:?} for {} states",
                emit.dim(),
                pi.len()
            )));
        }
        for (i, row) in emit.rows().into_iter().enumerate() {
            check_distribution(row, &format!("emission row {i}"))?;
        }
        Ok(HmcParams { pi, trans, emit })
    }

    pub fn n_states(&self) -> usize {
        self.pi.len()
    }

    /// Number of emission columns (trained words plus unknown slot, when estimated).
    pub fn n_symbols(&self) -> usize {
        self.emit.ncols()
    }

    pub fn pi(&self) -> &Array1<T> {
        &self.pi
    }

    pub fn trans(&self) -> &Array2<T> {
        &self.trans
    }

    pub fn emit(&self) -> &Array2<T> {
        &self.emit
    }

    /// `T × N` table of `b_i(y_t)`.
    pub fn emissions_for(&self, obs: &[usize]) -> Result<Array2<T>> {
        let mut table = Array2::zeros((obs.len(), self.n_states()));
        for (t, &y) in obs.iter().enumerate() {
            if y >= self.n_symbols() {
                return Err(Error::invalid(format!(
                    "observation {y} at position {t} outside {} symbols",
                    self.n_symbols()
                )));
            }
            table.row_mut(t).assign(&self.emit.column(y));
        }
        Ok(table)
    }
}

fn smoothed_ratio<T: Scalar>(count: u64, total: u64, delta: f64, cells: usize) -> T {
    T::lit((count as f64 + delta) / (total as f64 + delta * cells as f64))
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::invalid(format!("smoothing must be positive, got {delta}")));
    }
    Ok(())
}

/// Smoothed prior (label frequency over all positions) and transitions
/// (adjacent pairs within sentences).
pub fn estimate_chain<'a, T: Scalar>(
    label_sequences: impl IntoIterator<Item = &'a [usize]>,
    n_labels: usize,
    delta: f64,
) -> Result<(Array1<T>, Array2<T>)> {
    check_delta(delta)?;
    if n_labels == 0 {
        return Err(Error::invalid("no labels"));
    }
    let mut unigram = vec![0u64; n_labels];
    let mut bigram = vec![0u64; n_labels * n_labels];
    let mut any = false;
    for labels in label_sequences {
        any = true;
        for &l in labels {
            if l >= n_labels {
                return Err(Error::invalid(format!("label id {l} out of range")));
            }
            unigram[l] += 1;
        }
        for w in labels.windows(2) {
            bigram[w[0] * n_labels + w[1]] += 1;
        }
    }
    if !any {
        return Err(Error::invalid("empty corpus"));
    }
    let total: u64 = unigram.iter().sum();
    let pi = Array1::from_iter(
        unigram
            .iter()
            .map(|&c| smoothed_ratio(c, total, delta, n_labels)),
    );
    let mut trans = Array2::zeros((n_labels, n_labels));
    for i in 0..n_labels {
        let row = &bigram[i * n_labels..(i + 1) * n_labels];
        let row_total: u64 = row.iter().sum();
        for j in 0..n_labels {
            trans[[i, j]] = smoothed_ratio(row[j], row_total, delta, n_labels);
        }
    }
    Ok((pi, trans))
}

/// Supervised frequency estimate with additive smoothing `delta`.
///
/// Emission columns follow `vocab` ids, plus one unknown-word column at
/// `vocab.unknown_id()`. Counts never cross sentence boundaries.
pub fn estimate_params<T: Scalar>(
    corpus: &[LabeledSentence],
    tags: &TagSet,
    vocab: &Vocabulary,
    delta: f64,
) -> Result<HmcParams<T>> {
    if corpus.is_empty() {
        return Err(Error::invalid("empty corpus"));
    }
    let (pi, trans) = estimate_chain(corpus.iter().map(|s| s.labels()), tags.len(), delta)?;
    let n = tags.len();
    let m = vocab.len() + 1;
    let mut counts = vec![0u64; n * m];
    let mut per_label = vec![0u64; n];
    for s in corpus {
        for (tok, &l) in s.tokens().iter().zip(s.labels()) {
            counts[l * m + vocab.id_or_unknown(tok)] += 1;
            per_label[l] += 1;
        }
    }
    let emit = Array2::from_shape_fn((n, m), |(i, y)| {
        smoothed_ratio(counts[i * m + y], per_label[i], delta, m)
    });
    HmcParams::new(pi, trans, emit)
}

/// Direction in which a [`ScaledTable`]'s normalizers accumulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleDirection {
    /// `value_t = row_t · Π_{s ≤ t} scale_s` (forward recursions).
    Prefix,
    /// `value_t = row_t · Π_{s ≥ t} scale_s` (backward recursions).
    Suffix,
}

/// Recursion output stored as per-step normalized rows plus the normalizers.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledTable<T> {
    pub rows: Array2<T>,
    pub scales: Vec<T>,
    pub direction: ScaleDirection,
}

impl<T: Scalar> ScaledTable<T> {
    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }

    /// Natural log of the factor that turns row `t` back into raw values.
    pub fn log_factor(&self, t: usize) -> T {
        let range = match self.direction {
            ScaleDirection::Prefix => 0..t + 1,
            ScaleDirection::Suffix => t..self.scales.len(),
        };
        self.scales[range].iter().map(|s| s.ln()).sum()
    }

    /// Raw (unnormalized) recursion values at `t`. May under/overflow on long chains.
    pub fn unscaled(&self, t: usize) -> Array1<T> {
        let factor = self.log_factor(t).exp();
        self.rows.row(t).mapv(|v| v * factor)
    }

    /// `Σ_t ln scale_t`; for a forward table this is `ln p(y_{1:T})`.
    pub fn log_total(&self) -> T {
        self.scales.iter().map(|s| s.ln()).sum()
    }
}

pub(crate) fn normalize_step<T: Scalar>(
    mut row: ndarray::ArrayViewMut1<'_, T>,
    t: usize,
    what: &str,
) -> Result<T> {
    let sum = row_sum(row.iter().copied());
    if !(sum > T::zero()) || !sum.is_finite() {
        return Err(Error::degenerate(t, format!("{what} normalizer is {sum}")));
    }
    row.mapv_inplace(|v| v / sum);
    Ok(sum)
}

/// Forward recursion over an explicit `T × N` emission table.
pub fn forward_with_emissions<T: Scalar>(
    pi: &Array1<T>,
    trans: &Array2<T>,
    emissions: ArrayView2<'_, T>,
) -> Result<ScaledTable<T>> {
    let (len, n) = emissions.dim();
    if len == 0 {
        return Err(Error::invalid("empty observation sequence"));
    }
    let mut rows = Array2::zeros((len, n));
    let mut scales = Vec::with_capacity(len);
    for i in 0..n {
        rows[[0, i]] = pi[i] * emissions[[0, i]];
    }
    scales.push(normalize_step(rows.row_mut(0), 0, "forward")?);
    for t in 1..len {
        for i in 0..n {
            let mut acc = T::zero();
            for j in 0..n {
                acc += rows[[t - 1, j]] * trans[[j, i]];
            }
            rows[[t, i]] = emissions[[t, i]] * acc;
        }
        scales.push(normalize_step(rows.row_mut(t), t, "forward")?);
    }
    Ok(ScaledTable {
        rows,
        scales,
        direction: ScaleDirection::Prefix,
    })
}

/// Backward recursion over an explicit `T × N` emission table.
pub fn backward_with_emissions<T: Scalar>(
    trans: &Array2<T>,
    emissions: ArrayView2<'_, T>,
) -> Result<ScaledTable<T>> {
    let (len, n) = emissions.dim();
    if len == 0 {
        return Err(Error::invalid("empty observation sequence"));
    }
    let mut rows = Array2::zeros((len, n));
    let mut scales = vec![T::zero(); len];
    rows.row_mut(len - 1).fill(T::one());
    scales[len - 1] = normalize_step(rows.row_mut(len - 1), len - 1, "backward")?;
    for t in (0..len - 1).rev() {
        for i in 0..n {
            let mut acc = T::zero();
            for j in 0..n {
                acc += rows[[t + 1, j]] * trans[[i, j]] * emissions[[t + 1, j]];
            }
            rows[[t, i]] = acc;
        }
        scales[t] = normalize_step(rows.row_mut(t), t, "backward")?;
    }
    Ok(ScaledTable {
        rows,
        scales,
        direction: ScaleDirection::Suffix,
    })
}

/// Combine forward and backward rows into normalized marginals.
pub(crate) fn combine<T: Scalar>(
    fwd: &ScaledTable<T>,
    bwd: &ScaledTable<T>,
) -> Result<PosteriorLattice<T>> {
    PosteriorLattice::from_weights(&fwd.rows * &bwd.rows)
}

pub fn forward<T: Scalar>(params: &HmcParams<T>, obs: &[usize]) -> Result<ScaledTable<T>> {
    let e = params.emissions_for(obs)?;
    forward_with_emissions(&params.pi, &params.trans, e.view())
}

pub fn backward<T: Scalar>(params: &HmcParams<T>, obs: &[usize]) -> Result<ScaledTable<T>> {
    let e = params.emissions_for(obs)?;
    backward_with_emissions(&params.trans, e.view())
}

pub fn posterior_with_emissions<T: Scalar>(
    pi: &Array1<T>,
    trans: &Array2<T>,
    emissions: ArrayView2<'_, T>,
) -> Result<PosteriorLattice<T>> {
    let fwd = forward_with_emissions(pi, trans, emissions)?;
    let bwd = backward_with_emissions(trans, emissions)?;
    combine(&fwd, &bwd)
}

/// Classic forward-backward posterior marginals.
pub fn posterior_fb<T: Scalar>(params: &HmcParams<T>, obs: &[usize]) -> Result<PosteriorLattice<T>> {
    let e = params.emissions_for(obs)?;
    posterior_with_emissions(&params.pi, &params.trans, e.view())
}

/// Emission built from per-family conditionals assumed independent given the
/// label: `b_i(y) = Π_k P(Y^k = y^k | X = i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NaiveFeatureEmission<T> {
    /// Per family: its first feature id and an `N × (values + 1)` table whose
    /// column 0 is the unknown slot.
    tables: Vec<(Family, u32, Array2<T>)>,
}

impl<T: Scalar> NaiveFeatureEmission<T> {
    pub fn new(tables: Vec<(Family, u32, Array2<T>)>) -> Result<Self> {
        for (family, _, table) in &tables {
            for (i, row) in table.rows().into_iter().enumerate() {
                check_distribution(row, &format!("{family} emission row {i}"))?;
            }
        }
        Ok(NaiveFeatureEmission { tables })
    }

    /// Count `(label, feature value)` pairs per family with smoothing `delta`.
    pub fn estimate(
        index: &FeatureIndex,
        examples: &[(FeatureVector, usize)],
        n_labels: usize,
        delta: f64,
    ) -> Result<Self> {
        check_delta(delta)?;
        if examples.is_empty() {
            return Err(Error::invalid("empty corpus"));
        }
        let mut tables = Vec::new();
        for family in index.families() {
            let (start, end) = index.family_range(family).expect("listed family");
            let width = (end - start) as usize;
            let mut counts = Array2::<f64>::zeros((n_labels, width));
            for (fv, label) in examples {
                if *label >= n_labels {
                    return Err(Error::invalid(format!("label id {label} out of range")));
                }
                for &(f, id) in &fv.active {
                    if f == family {
                        counts[[*label, (id - start) as usize]] += 1.0;
                    }
                }
            }
            let totals = counts.sum_axis(Axis(1));
            let table = Array2::from_shape_fn((n_labels, width), |(i, k)| {
                T::lit((counts[[i, k]] + delta) / (totals[i] + delta * width as f64))
            });
            tables.push((family, start, table));
        }
        NaiveFeatureEmission::new(tables)
    }

    pub fn tables(&self) -> &[(Family, u32, Array2<T>)] {
        &self.tables
    }

    pub fn n_labels(&self) -> usize {
        self.tables.first().map_or(0, |(_, _, t)| t.nrows())
    }

    /// `(family, P(value | label) for all labels)`.
    fn family_column(&self, family: Family, id: u32) -> Result<ArrayView1<'_, T>> {
        let (_, start, table) = self
            .tables
            .iter()
            .find(|(f, _, _)| *f == family)
            .ok_or_else(|| Error::invalid(format!("feature family {family} not seen at training")))?;
        let col = id.checked_sub(*start).map(|c| c as usize);
        match col {
            Some(c) if c < table.ncols() => Ok(table.column(c)),
            _ => Ok(table.column(0)),
        }
    }

    /// `T × N` emission table for a sentence.
    pub fn emissions(&self, features: &[FeatureVector]) -> Result<Array2<T>> {
        let n = self.n_labels();
        let mut out = Array2::from_elem((features.len(), n), T::one());
        for (t, fv) in features.iter().enumerate() {
            for &(family, id) in &fv.active {
                let col = self.family_column(family, id)?;
                let mut row = out.row_mut(t);
                row *= &col;
            }
        }
        Ok(out)
    }
}

/// Product of the per-family conditionals for one token and label.
pub fn emission_naive_features<T: Scalar>(
    model: &NaiveFeatureEmission<T>,
    features: &FeatureVector,
    label: usize,
) -> Result<T> {
    if label >= model.n_labels() {
        return Err(Error::invalid(format!("label id {label} out of range")));
    }
    features.active.iter().try_fold(T::one(), |acc, &(family, id)| {
        Ok(acc * model.family_column(family, id)?[label])
    })
}
