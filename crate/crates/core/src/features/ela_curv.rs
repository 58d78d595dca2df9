//! Curvature: gradient lengths, gradient scale ratios and Hessian condition
//! numbers estimated by finite differences at a subsample of the design.

use std::time::Instant;

use rand::seq::index::sample;

use super::{assemble, opts};
use crate::control::Control;
use crate::error::{invalid, Error, Result};
use crate::feature::FeatureVector;
use crate::numkit::finite_diff::fd_gradient_hessian;
use crate::numkit::linalg::sym_eigen;
use crate::numkit::stats::{aggregate, EIGHT};
use crate::object::FeatureObject;
use crate::rng;

const PREFIX: &str = "ela_curv";
const QUANTITIES: [&str; 3] = ["grad_norm", "grad_scale", "hessian_cond"];

pub fn names() -> Vec<String> {
    QUANTITIES
        .iter()
        .flat_map(|q| EIGHT.iter().map(move |s| format!("{}.{}.{}", PREFIX, q, s.suffix())))
        .collect()
}

/// Per-point curvature quantities; `None` marks a value that cannot be
/// told apart from zero division.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCurvature {
    pub index: usize,
    pub grad_norm: Option<f64>,
    pub grad_scale: Option<f64>,
    pub hessian_cond: Option<f64>,
}

pub fn point_values(
    fo: &FeatureObject,
    sample_size: usize,
    step: f64,
    seed: u64,
) -> Result<(Vec<PointCurvature>, u64)> {
    let ev = fo
        .evaluator()
        .ok_or_else(|| Error::RequiresFunction(PREFIX.to_string()))?;
    let n = fo.n_obs();
    let m = sample_size.min(n);
    let mut r = rng::stream(seed, PREFIX);
    let mut idx = sample(&mut r, n, m).into_vec();
    idx.sort_unstable();
    let f = |x: &[f64]| ev.eval(x);
    let mut out = Vec::with_capacity(m);
    for i in idx {
        let est = fd_gradient_hessian(&f, fo.point(i), fo.lower(), fo.upper(), step);
        // magnitudes below rounding noise of the difference quotients count as zero
        let noise = 1e3 * f64::EPSILON * est.f0.abs().max(1.0);
        let h = est.steps.iter().copied().fold(f64::INFINITY, f64::min);
        let (tol_g, tol_h) = (noise / h, noise / (h * h));
        let g = &est.gradient;
        let grad_ok = g.iter().all(|v| v.is_finite());
        let grad_norm = grad_ok.then(|| g.iter().map(|v| v * v).sum::<f64>().sqrt());
        let grad_scale = if grad_ok {
            let lo = g.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
            let hi = g.iter().map(|v| v.abs()).fold(0.0, f64::max);
            (lo > tol_g).then(|| hi / lo)
        } else {
            None
        };
        let hessian_cond = if est.hessian.iter().all(|v| v.is_finite()) {
            sym_eigen(&est.hessian).ok().and_then(|e| {
                let lo = e.values.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
                let hi = e.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
                (lo > tol_h).then(|| hi / lo)
            })
        } else {
            None
        };
        out.push(PointCurvature {
            index: i,
            grad_norm,
            grad_scale,
            hessian_cond,
        });
    }
    Ok((out, ev.count()))
}

pub fn compute(fo: &FeatureObject, control: &Control, seed: u64) -> Result<FeatureVector> {
    let started = Instant::now();
    let size = control.usize_or("ela_curv.sample_size", 100 * fo.dim())?;
    let step = control.f64_or("ela_curv.step", 1e-4)?;
    if size == 0 || step <= 0.0 {
        return Err(invalid("ela_curv needs a positive sample size and step"));
    }
    let (pts, evals) = point_values(fo, size, step, seed)?;
    let mut values = Vec::new();
    for get in [
        |p: &PointCurvature| p.grad_norm,
        |p: &PointCurvature| p.grad_scale,
        |p: &PointCurvature| p.hessian_cond,
    ] {
        let v: Vec<Option<f64>> = pts.iter().map(get).collect();
        values.extend(opts(aggregate(&v, &EIGHT)));
    }
    Ok(assemble(PREFIX, names(), values, evals, started))
}
