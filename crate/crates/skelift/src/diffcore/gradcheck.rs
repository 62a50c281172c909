//! Central finite-difference verification of analytic gradients.

use crate::error::{Error, Result};

use super::params::ParamStore;

/// A scalar-valued function of a parameter store that can report its own
/// analytic gradient. The finite-difference side of the check only ever calls
/// [`value`](DifferentiableScalar::value), so the two routes stay independent.
pub trait DifferentiableScalar {
    fn value(&self, params: &ParamStore) -> Result<f64>;
    fn value_and_grad(&self, params: &ParamStore) -> Result<(f64, ParamStore)>;
}

/// Worst observed disagreement for one parameter tensor.
#[derive(Debug, Clone)]
pub struct ParamGradStat {
    pub name: String,
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

/// Result of a full gradient check.
#[derive(Debug, Clone)]
pub struct GradReport {
    pub per_param: Vec<ParamGradStat>,
    pub max_rel_error: f64,
    pub worst_param: String,
}

impl GradReport {
    pub fn passes(&self, threshold: f64) -> bool {
        self.max_rel_error < threshold
    }
}

/// Relative error between analytic and numeric derivatives.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / f64::max(1e-8, analytic.abs() + numeric.abs())
}

/// Compares the analytic gradient of `f` against central finite differences
/// for every entry of every parameter.
pub fn grad_check(
    f: &dyn DifferentiableScalar,
    params: &ParamStore,
    epsilon: f64,
) -> Result<GradReport> {
    if !(epsilon > 0.0 && epsilon <= 1e-2) {
        return Err(Error::Validation(format!(
            "epsilon must be in (0, 1e-2], got {epsilon}"
        )));
    }
    let (loss, analytic) = f.value_and_grad(params)?;
    if !loss.is_finite() {
        return Err(Error::Evaluation("non-finite loss in grad_check".into()));
    }
    analytic.check_same_layout(params)?;

    let mut per_param = Vec::with_capacity(params.len());
    let mut work = params.clone();
    let names: Vec<String> = params.names().cloned().collect();
    for name in &names {
        let numel = params.get(name).expect("name from params").numel();
        let mut stat = ParamGradStat {
            name: name.clone(),
            max_rel_error: 0.0,
            worst_index: 0,
            analytic: 0.0,
            numeric: 0.0,
        };
        for idx in 0..numel {
            let orig = work.get(name).expect("layout checked").data()[idx];

            work.get_mut(name).expect("layout checked").data_mut()[idx] = orig + epsilon;
            let plus = f.value(&work)?;
            work.get_mut(name).expect("layout checked").data_mut()[idx] = orig - epsilon;
            let minus = f.value(&work)?;
            work.get_mut(name).expect("layout checked").data_mut()[idx] = orig;

            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::Evaluation(format!(
                    "non-finite loss while perturbing '{name}'[{idx}]"
                )));
            }
            let numeric = (plus - minus) / (2.0 * epsilon);
            let a = analytic.get(name).expect("layout checked").data()[idx];
            let err = relative_error(a, numeric);
            if err > stat.max_rel_error {
                stat.max_rel_error = err;
                stat.worst_index = idx;
                stat.analytic = a;
                stat.numeric = numeric;
            }
        }
        per_param.push(stat);
    }

    let worst = per_param
        .iter()
        .max_by(|a, b| a.max_rel_error.total_cmp(&b.max_rel_error))
        .expect("at least one parameter");
    Ok(GradReport {
        max_rel_error: worst.max_rel_error,
        worst_param: worst.name.clone(),
        per_param,
    })
}
