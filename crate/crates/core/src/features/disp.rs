//! Dispersion features: how the pairwise distances among the best points
//! compare with those of the whole sample.

use std::time::Instant;

use super::{assemble, percent_label};
use crate::control::Control;
use crate::error::{invalid, Error, Result};
use crate::feature::{FeatureValue, FeatureVector};
use crate::numkit::stats::{euclidean, manhattan, mean, median, quantile};
use crate::object::FeatureObject;

const PREFIX: &str = "disp";
const KINDS: [&str; 4] = ["ratio_mean", "ratio_median", "diff_mean", "diff_median"];

pub fn quantiles(control: &Control) -> Result<Vec<f64>> {
    let q = control.f64_list_or("disp.quantiles", &[0.02, 0.05, 0.1, 0.25])?;
    if q.iter().any(|&v| !(v > 0.0 && v <= 1.0)) {
        return Err(Error::InvalidControl {
            key: "disp.quantiles".to_string(),
            reason: "quantiles must lie in (0, 1]".to_string(),
        });
    }
    Ok(q)
}

pub fn names(control: &Control) -> Result<Vec<String>> {
    let q = quantiles(control)?;
    Ok(KINDS
        .iter()
        .flat_map(|k| {
            q.iter()
                .map(move |&v| format!("{}.{}_{}", PREFIX, k, percent_label(v)))
        })
        .collect())
}

fn metric(control: &Control) -> Result<fn(&[f64], &[f64]) -> f64> {
    match control.str_or("disp.dist_method", "euclidean") {
        "euclidean" => Ok(euclidean),
        "manhattan" => Ok(manhattan),
        other => Err(Error::InvalidControl {
            key: "disp.dist_method".to_string(),
            reason: format!("`{}` is not one of euclidean, manhattan", other),
        }),
    }
}

fn pairwise(points: &[&[f64]], dist: fn(&[f64], &[f64]) -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(points.len() * points.len().saturating_sub(1) / 2);
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            out.push(dist(points[i], points[j]));
        }
    }
    out
}

pub fn compute(fo: &FeatureObject, control: &Control) -> Result<FeatureVector> {
    let started = Instant::now();
    if fo.n_obs() < 10 {
        return Err(invalid("disp needs at least 10 observations"));
    }
    let qs = quantiles(control)?;
    let dist = metric(control)?;
    let y = fo.y();
    let all: Vec<&[f64]> = fo.points().iter().map(Vec::as_slice).collect();
    let full = pairwise(&all, dist);
    let (full_mean, full_median) = (mean(&full).unwrap(), median(&full).unwrap());

    // per quantile: [ratio_mean, ratio_median, diff_mean, diff_median]
    let per_q: Vec<[Option<f64>; 4]> = qs
        .iter()
        .map(|&q| {
            let cut = quantile(y, q).unwrap();
            let sub: Vec<&[f64]> = (0..y.len()).filter(|&i| y[i] <= cut).map(|i| all[i]).collect();
            if sub.len() < 2 {
                return [None; 4];
            }
            let d = pairwise(&sub, dist);
            let (m, md) = (mean(&d).unwrap(), median(&d).unwrap());
            [
                (full_mean > 0.0).then(|| m / full_mean),
                (full_median > 0.0).then(|| md / full_median),
                Some(m - full_mean),
                Some(md - full_median),
            ]
        })
        .collect();
    let values: Vec<FeatureValue> = (0..KINDS.len())
        .flat_map(|k| per_q.iter().map(move |v| FeatureValue::opt(v[k])))
        .collect();
    Ok(assemble(PREFIX, names(control)?, values, 0, started))
}
