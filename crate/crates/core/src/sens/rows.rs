use super::vector::l2_norm;
use super::{SensError, SensScalar, SensVector, VecMetric};
use crate::model::{ExtReal, Metric, SensEnv, SourceId};

/// A table of records where one unit of distance in a tagged source adds or
/// removes one row.
#[derive(Clone, Debug, PartialEq)]
pub struct SensRows<T> {
    rows: Vec<T>,
    senv: SensEnv,
}

impl<T> SensRows<T> {
    /// Rows read from `source`.
    pub fn lift(rows: Vec<T>, source: SourceId) -> SensRows<T> {
        SensRows {
            rows,
            senv: SensEnv::singleton(source, ExtReal::ONE),
        }
    }

    pub fn senv(&self) -> &SensEnv {
        &self.senv
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Number of rows; moves by one per added or removed row.
    pub fn count(&self) -> SensScalar {
        SensScalar::new(self.rows.len() as f64, self.senv.clone(), Metric::Diff)
    }

    /// Number of rows satisfying `pred`.
    pub fn count_where(&self, pred: impl Fn(&T) -> bool) -> SensScalar {
        let n = self.rows.iter().filter(|r| pred(r)).count();
        SensScalar::new(n as f64, self.senv.clone(), Metric::Diff)
    }

    /// Maps every row to a vector, clips each to the L2 ball of radius
    /// `bound` and sums them. Adding or removing a row moves the sum by at
    /// most `bound` in L2.
    pub fn clipped_sum_l2(
        &self,
        dim: usize,
        bound: f64,
        f: impl Fn(&T) -> Vec<f64>,
    ) -> Result<SensVector, SensError> {
        if !(bound > 0.0 && bound.is_finite()) {
            return Err(SensError::NonPositiveBound(bound));
        }
        let mut total = vec![0.0; dim];
        for row in &self.rows {
            let g = f(row);
            assert_eq!(g.len(), dim, "row function returned a vector of the wrong length");
            let n = l2_norm(&g);
            let k = if n > bound { bound / n } else { 1.0 };
            for (t, x) in total.iter_mut().zip(g) {
                *t += x * k;
            }
        }
        Ok(SensVector::clipped(total, self.senv.clone(), VecMetric::L2(Metric::Diff), bound))
    }
}
