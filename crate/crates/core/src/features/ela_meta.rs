//! Meta model: quality of linear and quadratic regression fits of the
//! objective on the decision variables.

use std::time::Instant;

use super::{assemble, opts, prefixed};
use crate::error::Result;
use crate::feature::FeatureVector;
use crate::numkit::linalg::{fit_least_squares, LinearFit};
use crate::object::FeatureObject;

const PREFIX: &str = "ela_meta";

pub fn names() -> Vec<String> {
    prefixed(
        PREFIX,
        &[
            "lin_simple.adj_r2",
            "lin_simple.intercept",
            "lin_simple.coef.min",
            "lin_simple.coef.max",
            "lin_simple.coef.max_by_min",
            "lin_w_interact.adj_r2",
            "quad_simple.adj_r2",
            "quad_simple.cond",
            "quad_w_interact.adj_r2",
        ],
    )
}

/// Design rows: intercept, linear terms, then optional squares and
/// pairwise interactions.
pub fn design(points: &[Vec<f64>], squares: bool, interactions: bool) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|x| {
            let d = x.len();
            let mut row = Vec::with_capacity(1 + 2 * d + d * d / 2);
            row.push(1.0);
            row.extend_from_slice(x);
            if squares {
                row.extend(x.iter().map(|v| v * v));
            }
            if interactions {
                for i in 0..d {
                    for j in i + 1..d {
                        row.push(x[i] * x[j]);
                    }
                }
            }
            row
        })
        .collect()
}

fn fit(fo: &FeatureObject, squares: bool, interactions: bool) -> Option<LinearFit> {
    fit_least_squares(&design(fo.points(), squares, interactions), fo.y()).ok()
}

/// max |c| / min |c| over the given coefficient positions.
fn abs_range(f: &LinearFit, cols: std::ops::Range<usize>) -> Option<(f64, f64)> {
    if cols.clone().any(|j| f.dropped[j]) || cols.is_empty() {
        return None;
    }
    let a: Vec<f64> = cols.map(|j| f.coefficients[j].abs()).collect();
    let lo = a.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = a.iter().copied().fold(0.0, f64::max);
    Some((lo, hi))
}

pub fn compute(fo: &FeatureObject) -> Result<FeatureVector> {
    let started = Instant::now();
    let d = fo.dim();
    let lin = fit(fo, false, false);
    let lin_i = fit(fo, false, true);
    let quad = fit(fo, true, false);
    let quad_i = fit(fo, true, true);
    let adj = |f: &Option<LinearFit>| f.as_ref().and_then(|f| f.adjusted_r_squared);
    let lin_range = lin.as_ref().and_then(|f| abs_range(f, 1..d + 1));
    let quad_range = quad.as_ref().and_then(|f| abs_range(f, d + 1..2 * d + 1));
    let values = vec![
        adj(&lin),
        lin.as_ref().filter(|f| !f.dropped[0]).map(|f| f.coefficients[0]),
        lin_range.map(|r| r.0),
        lin_range.map(|r| r.1),
        lin_range.and_then(|(lo, hi)| (lo > 0.0).then(|| hi / lo)),
        adj(&lin_i),
        adj(&quad),
        quad_range.and_then(|(lo, hi)| (lo > 0.0).then(|| hi / lo)),
        adj(&quad_i),
    ];
    Ok(assemble(PREFIX, names(), opts(values).collect(), 0, started))
}
