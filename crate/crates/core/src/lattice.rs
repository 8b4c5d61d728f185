//! Per-position posterior marginals and the maximum-posterior-mode rule.

use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::scalar::{row_sum, Scalar};

/// `T × N` table of `P(X_t = i | y_{1:T})`. Every row is a distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorLattice<T> {
    values: Array2<T>,
}

impl<T: Scalar> PosteriorLattice<T> {
    /// Validates entries in `[0, 1]` and rows summing to 1 (1e-9 for `f64`).
    pub fn new(values: Array2<T>) -> Result<Self> {
        let tol = T::normalization_tol(values.ncols()).max(T::lit(1e-9));
        for (t, row) in values.rows().into_iter().enumerate() {
            if row.iter().any(|&v| !(v >= T::zero() && v <= T::one() + tol)) {
                return Err(Error::invalid(format!("lattice row {t} has entries outside [0,1]")));
            }
            let sum = row_sum(row.iter().copied());
            if (sum - T::one()).abs() > tol {
                return Err(Error::invalid(format!("lattice row {t} sums to {sum}")));
            }
        }
        Ok(PosteriorLattice { values })
    }

    /// Normalize each row of non-negative weights. A row with zero or non-finite
    /// mass is reported as a degeneracy at that position.
    pub(crate) fn from_weights(mut weights: Array2<T>) -> Result<Self> {
        for (t, mut row) in weights.rows_mut().into_iter().enumerate() {
            let sum = row_sum(row.iter().copied());
            if !(sum > T::zero()) || !sum.is_finite() {
                return Err(Error::degenerate(t, format!("posterior denominator is {sum}")));
            }
            row.mapv_inplace(|v| v / sum);
        }
        Ok(PosteriorLattice { values: weights })
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn n_labels(&self) -> usize {
        self.values.ncols()
    }

    pub fn row(&self, t: usize) -> ArrayView1<'_, T> {
        self.values.row(t)
    }

    pub fn values(&self) -> &Array2<T> {
        &self.values
    }

    pub fn into_values(self) -> Array2<T> {
        self.values
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax<T: Scalar>(row: impl IntoIterator<Item = T>) -> Option<usize> {
    let mut best: Option<(usize, T)> = None;
    for (i, v) in row.into_iter().enumerate() {
        match best {
            Some((_, b)) if !(v > b) => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

/// Maximum posterior mode: per-position argmax of the marginals.
pub fn mpm_from_lattice<T: Scalar>(lattice: &PosteriorLattice<T>) -> Result<Vec<usize>> {
    if lattice.is_empty() || lattice.n_labels() == 0 {
        return Err(Error::invalid("empty lattice"));
    }
    Ok(lattice
        .values
        .rows()
        .into_iter()
        .map(|row| argmax(row.iter().copied()).expect("non-empty row"))
        .collect())
}
