//! The feature sets. Each module exposes `names(control)` with the set's
//! canonical feature order (without costs unless the set reports costs per
//! approach) and a compute function producing values in that order.

use std::time::Instant;

use crate::control::Control;
use crate::error::Result;
use crate::feature::{FeatureSet, FeatureValue, FeatureVector};

pub mod cm;
pub mod disp;
pub mod ela_conv;
pub mod ela_curv;
pub mod ela_distr;
pub mod ela_level;
pub mod ela_local;
pub mod ela_meta;
pub mod gcm;
pub mod ic;
pub mod misc;
pub mod nbc;

/// Feature names of `set` in output order, excluding the trailing costs of
/// sets that report a single pair of cost entries.
pub fn names(set: FeatureSet, control: &Control) -> Result<Vec<String>> {
    Ok(match set {
        FeatureSet::ElaConv => ela_conv::names(),
        FeatureSet::ElaCurv => ela_curv::names(),
        FeatureSet::ElaDistr => ela_distr::names(),
        FeatureSet::ElaLevel => ela_level::names(control)?,
        FeatureSet::ElaLocal => ela_local::names(),
        FeatureSet::ElaMeta => ela_meta::names(),
        FeatureSet::CmAngle => cm::angle_names(),
        FeatureSet::CmGrad => cm::grad_names(),
        FeatureSet::CmConv => cm::conv_names(),
        FeatureSet::Gcm => gcm::gcm_names(control)?,
        FeatureSet::Bt => gcm::bt_names(control)?,
        FeatureSet::Nbc => nbc::names(),
        FeatureSet::Disp => disp::names(control)?,
        FeatureSet::Ic => ic::names(),
        FeatureSet::Basic => misc::basic_names(),
        FeatureSet::Limo => misc::limo_names(),
        FeatureSet::Pca => misc::pca_names(),
    })
}

pub(crate) fn prefixed(prefix: &str, suffixes: &[&str]) -> Vec<String> {
    suffixes.iter().map(|s| format!("{}.{}", prefix, s)).collect()
}

/// Zips names and values and appends the cost entries.
pub(crate) fn assemble(
    prefix: &str,
    names: Vec<String>,
    values: Vec<FeatureValue>,
    fun_evals: u64,
    started: Instant,
) -> FeatureVector {
    debug_assert_eq!(names.len(), values.len(), "{}", prefix);
    let mut fv = FeatureVector::new();
    for (n, v) in names.into_iter().zip(values) {
        fv.push(n, v);
    }
    fv.push_costs(prefix, fun_evals, started);
    fv
}

/// Percent label of a quantile, zero padded to two digits (`0.05` -> `05`).
pub(crate) fn percent_label(q: f64) -> String {
    format!("{:02}", (q * 100.0).round() as i64)
}

pub(crate) fn opts(v: Vec<Option<f64>>) -> impl Iterator<Item = FeatureValue> {
    v.into_iter().map(FeatureValue::opt)
}

/// `a / b`, missing when either side is missing or `b` is zero.
pub(crate) fn ratio(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(a), Some(b)) if b != 0.0 => Some(a / b),
        _ => None,
    }
}
