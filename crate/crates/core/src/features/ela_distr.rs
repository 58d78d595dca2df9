//! Distribution of the objective values: skewness, kurtosis and the number
//! of peaks of their kernel density estimate.

use std::time::Instant;

use super::{assemble, prefixed};
use crate::error::{invalid, Result};
use crate::feature::{FeatureValue, FeatureVector};
use crate::numkit::kde::kde_peak_count;
use crate::object::FeatureObject;

const PREFIX: &str = "ela_distr";

pub fn names() -> Vec<String> {
    prefixed(PREFIX, &["skewness", "kurtosis", "number_of_peaks"])
}

pub fn compute(fo: &FeatureObject) -> Result<FeatureVector> {
    let started = Instant::now();
    if fo.n_obs() < 4 {
        return Err(invalid("ela_distr needs at least 4 observations"));
    }
    let k = kde_peak_count(fo.y(), None);
    let values = vec![
        FeatureValue::opt(k.skewness),
        FeatureValue::opt(k.kurtosis),
        FeatureValue::from(k.peaks),
    ];
    Ok(assemble(PREFIX, names(), values, 0, started))
}
