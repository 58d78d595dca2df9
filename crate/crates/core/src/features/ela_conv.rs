//! Convexity: compares objective values at convex combinations of sample
//! pairs with the matching combination of their objective values.

use std::time::Instant;

use rand::Rng;

use super::{assemble, prefixed};
use crate::control::Control;
use crate::error::{invalid, Error, Result};
use crate::feature::{FeatureValue, FeatureVector};
use crate::object::FeatureObject;
use crate::rng;

const PREFIX: &str = "ela_conv";

pub fn names() -> Vec<String> {
    prefixed(PREFIX, &["conv_prob", "lin_prob", "lin_dev.orig", "lin_dev.abs"])
}

/// Differences `f(w a + (1-w) b) - (w y_a + (1-w) y_b)` for random pairs.
pub fn differences(fo: &FeatureObject, nsample: usize, seed: u64) -> Result<(Vec<f64>, u64)> {
    let ev = fo
        .evaluator()
        .ok_or_else(|| Error::RequiresFunction(PREFIX.to_string()))?;
    let n = fo.n_obs();
    if n < 2 {
        return Err(invalid("convexity needs at least two observations"));
    }
    let mut r = rng::stream(seed, PREFIX);
    let y = fo.y();
    let mut out = Vec::with_capacity(nsample);
    for _ in 0..nsample {
        let a = r.random_range(0..n);
        let mut b = r.random_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        let w: f64 = r.random();
        let x: Vec<f64> = fo
            .point(a)
            .iter()
            .zip(fo.point(b))
            .map(|(p, q)| w * p + (1.0 - w) * q)
            .collect();
        let fx = ev.eval(&x);
        out.push(fx - (w * y[a] + (1.0 - w) * y[b]));
    }
    Ok((out, ev.count()))
}

pub fn compute(fo: &FeatureObject, control: &Control, seed: u64) -> Result<FeatureVector> {
    let started = Instant::now();
    let nsample = control.usize_or("ela_conv.nsample", 1000)?;
    let tau = control.f64_or("ela_conv.threshold", 1e-10)?;
    if nsample == 0 {
        return Err(invalid("ela_conv.nsample must be positive"));
    }
    let (diffs, evals) = differences(fo, nsample, seed)?;
    let m = diffs.len() as f64;
    let frac = |p: &dyn Fn(f64) -> bool| diffs.iter().filter(|&&v| p(v)).count() as f64 / m;
    let values = vec![
        FeatureValue::real(frac(&|v| v < -tau)),
        FeatureValue::real(frac(&|v| v.abs() <= tau)),
        FeatureValue::real(diffs.iter().sum::<f64>() / m),
        FeatureValue::real(diffs.iter().map(|v| v.abs()).sum::<f64>() / m),
    ];
    Ok(assemble(PREFIX, names(), values, evals, started))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::testutil::*;

    #[test]
    fn sphere_is_convex() {
        let fo = with_function(uniform(100, 2, -5.0, 5.0, 1), -5.0, 5.0, None, sphere);
        let fv = compute(&fo, &Control::new(), 1).unwrap();
        assert_eq!(fv.value("ela_conv.conv_prob"), Some(1.0));
        assert_eq!(fv.value("ela_conv.lin_prob"), Some(0.0));
        assert_eq!(fv.value("ela_conv.costs_fun_evals"), Some(1000.0));
        assert_eq!(fo.eval_counter(), 1000);
        assert_eq!(fv.len(), 6);
    }

    #[test]
    fn linear_is_linear() {
        let fo = with_function(uniform(50, 2, -5.0, 5.0, 2), -5.0, 5.0, None, |x: &[f64]| {
            2.0 * x[0] + 1.0
        });
        let fv = compute(&fo, &Control::new(), 1).unwrap();
        assert_eq!(fv.value("ela_conv.lin_prob"), Some(1.0));
        assert!(fv.value("ela_conv.lin_dev.orig").unwrap().abs() < 1e-12);
    }

    #[test]
    fn concave_mirror() {
        let fo = with_function(uniform(50, 2, -5.0, 5.0, 3), -5.0, 5.0, None, |x: &[f64]| {
            -sphere(x)
        });
        let fv = compute(&fo, &Control::new(), 1).unwrap();
        assert_eq!(fv.value("ela_conv.conv_prob"), Some(0.0));
        assert!(fv.value("ela_conv.lin_dev.orig").unwrap() > 0.0);
    }

    #[test]
    fn pair_count_follows_control() {
        let fo = with_function(uniform(30, 2, 0.0, 1.0, 4), 0.0, 1.0, None, sphere);
        let c = Control::new().with("ela_conv.nsample", "37").unwrap();
        let fv = compute(&fo, &c, 1).unwrap();
        assert_eq!(fv.value("ela_conv.costs_fun_evals"), Some(37.0));
    }
}
