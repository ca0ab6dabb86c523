use std::fmt;

use super::{SensError, SensScalar, VecMetric};
use crate::model::{ExtReal, Metric, SensEnv, SourceId};

/// A dense vector of reals tagged as a whole.
///
/// Under `LInf` each element moves by at most `Σ'·senv` when the sources
/// move by `Σ'`. After clipping to a norm ball of radius `b` the vector is
/// read under the add/remove-one-record view: one unit of distance in a
/// source moves it by at most `b·senv` in the clipping norm.
#[derive(Clone, Debug, PartialEq)]
pub struct SensVector {
    pub values: Vec<f64>,
    pub senv: SensEnv,
    pub metric: VecMetric,
    clip_bound: Option<f64>,
}

impl SensVector {
    pub fn new(values: Vec<f64>, senv: SensEnv) -> SensVector {
        SensVector {
            values,
            senv,
            metric: VecMetric::LInf,
            clip_bound: None,
        }
    }

    /// A vector read from `source`, each element 1-sensitive.
    pub fn lift(values: Vec<f64>, source: SourceId) -> SensVector {
        SensVector::new(values, SensEnv::singleton(source, ExtReal::ONE))
    }

    pub(crate) fn clipped(values: Vec<f64>, senv: SensEnv, metric: VecMetric, bound: f64) -> SensVector {
        SensVector {
            values,
            senv,
            metric,
            clip_bound: Some(bound),
        }
    }

    /// Radius of the norm ball the vector was clipped to, if any.
    pub fn clip_bound(&self) -> Option<f64> {
        self.clip_bound
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest per-source distance the vector can move, in its own norm.
    pub fn norm_sensitivity(&self) -> ExtReal {
        let scale = self.clip_bound.map_or(ExtReal::ONE, ExtReal::abs_of);
        scale * self.senv.max_sensitivity()
    }
}

impl fmt::Display for SensVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}@{}#{}", self.values, self.senv, self.metric)
    }
}

fn check_bound(bound: f64) -> Result<(), SensError> {
    if bound > 0.0 && bound.is_finite() {
        Ok(())
    } else {
        Err(SensError::NonPositiveBound(bound))
    }
}

fn clip(
    v: &SensVector,
    bound: f64,
    metric: VecMetric,
    name: &'static str,
    norm: fn(&[f64]) -> f64,
) -> Result<SensVector, SensError> {
    check_bound(bound)?;
    let bound = match (v.metric, v.clip_bound) {
        (VecMetric::LInf, _) => bound,
        (m, Some(b)) if m == metric => b.min(bound),
        (got, _) => return Err(SensError::IncompatibleMetric { expected: name, got }),
    };
    let n = norm(&v.values);
    let values = if n > bound {
        let k = bound / n;
        v.values.iter().map(|x| x * k).collect()
    } else {
        v.values.clone()
    };
    Ok(SensVector::clipped(values, v.senv.clone(), metric, bound))
}

pub(crate) fn l1_norm(values: &[f64]) -> f64 {
    values.iter().map(|x| x.abs()).sum()
}

pub(crate) fn l2_norm(values: &[f64]) -> f64 {
    values.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Rescales into the L2 ball of radius `bound`.
pub fn clip_l2(v: &SensVector, bound: f64) -> Result<SensVector, SensError> {
    clip(v, bound, VecMetric::L2(Metric::Diff), "LInf or L2", l2_norm)
}

/// Rescales into the L1 ball of radius `bound`.
pub fn clip_l1(v: &SensVector, bound: f64) -> Result<SensVector, SensError> {
    clip(v, bound, VecMetric::L1(Metric::Diff), "LInf or L1", l1_norm)
}

/// Applies `f` to every element.
///
/// The scaling factor of `f` is measured by running it on inputs tagged with
/// a fresh probe source and reading the probe's coefficient in the result.
/// Sensitive data that `f` captures from elsewhere is kept in the output.
pub fn s_map<F>(mut f: F, v: &SensVector) -> Result<SensVector, SensError>
where
    F: FnMut(SensScalar) -> Result<SensScalar, SensError>,
{
    if v.metric != VecMetric::LInf {
        return Err(SensError::IncompatibleMetric {
            expected: "LInf",
            got: v.metric,
        });
    }
    let probe = SourceId::fresh_probe();
    let mut k = ExtReal::ZERO;
    let mut captured = SensEnv::zero();
    let mut values = Vec::with_capacity(v.len());
    for &x in &v.values {
        let input = SensScalar::lift(x, probe.clone(), Metric::Diff);
        let mut out = f(input)?;
        if !out.metric.leq(Metric::Diff) {
            return Err(SensError::MapMetric(out.metric));
        }
        k = k.max(out.senv.remove(&probe));
        if out.senv.sources().any(SourceId::is_probe) {
            return Err(SensError::ProbeEscape);
        }
        captured = captured.join_max(&out.senv);
        values.push(out.value);
    }
    Ok(SensVector::new(values, v.senv.scale(k).add(&captured)))
}

/// Sum of the elements of a clipped vector.
///
/// An L1-clipped vector gives a scalar usable by every mechanism. For an
/// L2-clipped vector the scalar is bounded through Cauchy-Schwarz and marked
/// L2-calibrated, so only the Gaussian mechanisms accept it.
pub fn vec_sum(v: &SensVector) -> Result<SensScalar, SensError> {
    let total = v.values.iter().sum();
    match (v.metric, v.clip_bound) {
        (VecMetric::L1(m), Some(b)) => Ok(SensScalar::new(total, v.senv.scale(ExtReal::abs_of(b)), m)),
        (VecMetric::L2(m), Some(b)) => {
            let k = ExtReal::abs_of(b * (v.len() as f64).sqrt());
            Ok(SensScalar::new(total, v.senv.scale(k), m).with_l2_calibration())
        }
        _ => Err(SensError::UnboundedSum),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sens::{s_add, s_if0, s_mul};

    fn d() -> SourceId {
        SourceId::new("d").unwrap()
    }

    fn one_sensitive(values: Vec<f64>) -> SensVector {
        SensVector::lift(values, d())
    }

    #[test]
    fn clip_l2_examples() {
        let at = clip_l2(&one_sensitive(vec![3.0, 4.0]), 5.0).unwrap();
        assert_eq!(at.values, vec![3.0, 4.0]);
        assert_eq!(at.metric, VecMetric::L2(Metric::Diff));
        assert_eq!(at.senv, one_sensitive(vec![]).senv);

        let over = clip_l2(&one_sensitive(vec![6.0, 8.0]), 5.0).unwrap();
        assert_eq!(over.values, vec![3.0, 4.0]);

        let zero = clip_l2(&one_sensitive(vec![0.0, 0.0]), 5.0).unwrap();
        assert_eq!(zero.values, vec![0.0, 0.0]);
    }

    #[test]
    fn clip_l1_scales_into_ball() {
        let v = clip_l1(&one_sensitive(vec![2.0, -2.0]), 1.0).unwrap();
        assert_eq!(v.values, vec![0.5, -0.5]);
        assert_eq!(v.metric, VecMetric::L1(Metric::Diff));
        assert_eq!(v.clip_bound(), Some(1.0));
    }

    #[test]
    fn clip_rejects_bad_bounds_and_metrics() {
        let v = one_sensitive(vec![1.0]);
        for b in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(clip_l2(&v, b), Err(SensError::NonPositiveBound(_))));
        }
        let l1 = clip_l1(&v, 1.0).unwrap();
        assert!(matches!(clip_l2(&l1, 1.0), Err(SensError::IncompatibleMetric { .. })));
        assert_eq!(clip_l1(&l1, 0.5).unwrap().clip_bound(), Some(0.5));
    }

    #[test]
    fn map_measures_scaling() {
        let v = one_sensitive(vec![1.0, 2.0, 3.0]);
        let id = s_map(Ok, &v).unwrap();
        assert_eq!(id.senv, v.senv);
        assert_eq!(id.values, v.values);

        let doubled = s_map(|x| Ok(s_add(&x, &x)), &v).unwrap();
        assert_eq!(doubled.senv, v.senv.scale(ExtReal::new(2.0).unwrap()));
        assert_eq!(doubled.values, vec![2.0, 4.0, 6.0]);

        let constant = s_map(|_| Ok(SensScalar::constant(3.0)), &v).unwrap();
        assert!(constant.senv.is_zero());
        assert_eq!(constant.values, vec![3.0; 3]);
    }

    #[test]
    fn map_keeps_captured_sources_and_guards() {
        let v = one_sensitive(vec![1.0, 2.0]);
        let other = SensScalar::lift(10.0, SourceId::new("other").unwrap(), Metric::Diff);
        let shifted = s_map(|x| Ok(s_add(&x, &other)), &v).unwrap();
        assert_eq!(shifted.senv.get(&d()), ExtReal::ONE);
        assert_eq!(shifted.senv.get(&SourceId::new("other").unwrap()), ExtReal::ONE);

        let branching = s_map(
            |x| {
                if s_if0(&x)? {
                    Ok(x)
                } else {
                    Ok(SensScalar::constant(0.0))
                }
            },
            &v,
        );
        assert!(matches!(branching, Err(SensError::SensitiveGuard { .. })));

        let squared = s_map(|x| Ok(s_mul(&x, &x)), &v).unwrap();
        assert_eq!(squared.senv.get(&d()), ExtReal::INFINITY);
    }

    #[test]
    fn map_detects_escaped_probes() {
        let v = one_sensitive(vec![1.0, 2.0]);
        let mut leaked = None;
        s_map(
            |x| {
                leaked = Some(x.clone());
                Ok(x)
            },
            &v,
        )
        .unwrap();
        let leaked = leaked.unwrap();
        let err = s_map(|x| Ok(s_add(&x, &leaked)), &v).unwrap_err();
        assert_eq!(err, SensError::ProbeEscape);
    }

    #[test]
    fn map_requires_elementwise_metric() {
        let v = clip_l2(&one_sensitive(vec![1.0]), 1.0).unwrap();
        assert!(matches!(s_map(Ok, &v), Err(SensError::IncompatibleMetric { .. })));
    }

    #[test]
    fn sums() {
        let l1 = clip_l1(&one_sensitive(vec![0.25, 0.5]), 1.0).unwrap();
        let s = vec_sum(&l1).unwrap();
        assert_eq!(s.value, 0.75);
        assert_eq!(s.senv, l1.senv);
        assert!(!s.is_l2_calibrated());

        let l2 = clip_l2(&one_sensitive(vec![3.0, 4.0, 0.0, 0.0]), 5.0).unwrap();
        let s = vec_sum(&l2).unwrap();
        assert_eq!(s.senv.get(&d()).get(), 10.0);
        assert!(s.is_l2_calibrated());

        assert_eq!(vec_sum(&one_sensitive(vec![1.0])), Err(SensError::UnboundedSum));
    }
}
