//! Levelset: how well discriminant classifiers separate the observations
//! below an objective quantile from the rest.

use std::time::Instant;

use super::{assemble, opts, percent_label, ratio};
use crate::control::Control;
use crate::error::{invalid, Result};
use crate::feature::FeatureVector;
use crate::numkit::discriminant::{cross_validated_mmce, ClassifierKind};
use crate::numkit::stats::quantile;
use crate::object::FeatureObject;
use crate::rng::derive_seed;

const PREFIX: &str = "ela_level";

struct Settings {
    quantiles: Vec<f64>,
    classifiers: Vec<ClassifierKind>,
    folds: usize,
}

fn settings(control: &Control) -> Result<Settings> {
    let quantiles = control.f64_list_or("ela_level.quantiles", &[0.1, 0.25, 0.5])?;
    if quantiles.iter().any(|q| !(0.0..=1.0).contains(q)) {
        return Err(invalid("ela_level.quantiles must lie in [0, 1]"));
    }
    let classifiers = control
        .list_or("ela_level.classifiers", &["lda", "qda", "gmda"])
        .iter()
        .map(|s| s.parse())
        .collect::<Result<Vec<ClassifierKind>>>()?;
    let folds = control.usize_or("ela_level.folds", 10)?;
    if folds < 2 {
        return Err(invalid("ela_level.folds must be at least 2"));
    }
    Ok(Settings {
        quantiles,
        classifiers,
        folds,
    })
}

fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

pub fn names(control: &Control) -> Result<Vec<String>> {
    let s = settings(control)?;
    let mut out = Vec::new();
    for c in &s.classifiers {
        for q in &s.quantiles {
            out.push(format!("{}.mmce_{}_{}", PREFIX, c.id(), percent_label(*q)));
        }
    }
    for (a, b) in pairs(s.classifiers.len()) {
        for q in &s.quantiles {
            out.push(format!(
                "{}.{}_{}_{}",
                PREFIX,
                s.classifiers[a].id(),
                s.classifiers[b].id(),
                percent_label(*q)
            ));
        }
    }
    Ok(out)
}

pub fn compute(fo: &FeatureObject, control: &Control, seed: u64) -> Result<FeatureVector> {
    let started = Instant::now();
    let s = settings(control)?;
    if fo.n_obs() < 20 || fo.n_obs() < s.folds {
        return Err(invalid("ela_level needs at least 20 observations"));
    }
    let y = fo.y();
    // mmce[classifier][quantile]
    let mut mmce = vec![vec![None; s.quantiles.len()]; s.classifiers.len()];
    for (qi, &q) in s.quantiles.iter().enumerate() {
        let thr = quantile(y, q).unwrap_or(f64::NAN);
        let labels: Vec<usize> = y.iter().map(|&v| usize::from(v <= thr)).collect();
        let ones = labels.iter().sum::<usize>();
        if ones == 0 || ones == labels.len() {
            continue;
        }
        let cv_seed = derive_seed(seed, PREFIX, qi as u64);
        for (ci, &kind) in s.classifiers.iter().enumerate() {
            mmce[ci][qi] = cross_validated_mmce(fo.points(), &labels, kind, s.folds, cv_seed).ok();
        }
    }
    let mut values: Vec<Option<f64>> = mmce.iter().flatten().copied().collect();
    for (a, b) in pairs(s.classifiers.len()) {
        for qi in 0..s.quantiles.len() {
            values.push(ratio(mmce[a][qi], mmce[b][qi]));
        }
    }
    Ok(assemble(PREFIX, names(control)?, opts(values).collect(), 0, started))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::testutil::uniform;
    use crate::object::FeatureObject;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn linear_boundary() {
        let x = uniform(400, 2, 0.0, 1.0, 1);
        let y = x.iter().map(|p| p[0]).collect();
        let fo = FeatureObject::builder(x, y).build().unwrap();
        let fv = compute(&fo, &Control::new(), 1).unwrap();
        assert_eq!(fv.len(), 20);
        assert!(fv.value("ela_level.mmce_lda_50").unwrap() <= 0.05);
        assert_eq!(fv.value("ela_level.costs_fun_evals"), Some(0.0));
    }

    #[test]
    fn ratios_are_elementwise_divisions() {
        let x = uniform(300, 2, -5.0, 5.0, 2);
        let y = x.iter().map(|p| p[0] * p[0] + p[1].sin()).collect();
        let fo = FeatureObject::builder(x, y).build().unwrap();
        let fv = compute(&fo, &Control::new(), 3).unwrap();
        for q in ["10", "25", "50"] {
            for (a, b) in [("lda", "qda"), ("lda", "gmda"), ("qda", "gmda")] {
                let num = fv.value(&format!("ela_level.mmce_{}_{}", a, q));
                let den = fv.value(&format!("ela_level.mmce_{}_{}", b, q));
                let r = fv.value(&format!("ela_level.{}_{}_{}", a, b, q));
                assert_eq!(r, ratio(num, den));
            }
        }
    }

    #[test]
    fn noise_gives_ratios_near_one() {
        let mut r = ChaCha8Rng::seed_from_u64(9);
        let x = uniform(1000, 2, 0.0, 1.0, 9);
        let y = x.iter().map(|_| r.random::<f64>()).collect();
        let fo = FeatureObject::builder(x, y).build().unwrap();
        let c = Control::new().with("ela_level.quantiles", "0.5").unwrap();
        let fv = compute(&fo, &c, 4).unwrap();
        for name in ["ela_level.lda_qda_50", "ela_level.lda_gmda_50", "ela_level.qda_gmda_50"] {
            let v = fv.value(name).unwrap();
            assert!((v - 1.0).abs() <= 0.3, "{} {}", name, v);
        }
    }

    #[test]
    fn degenerate_quantile_is_missing() {
        let x = uniform(30, 1, 0.0, 1.0, 5);
        let fo = FeatureObject::builder(x, vec![1.0; 30]).build().unwrap();
        let fv = compute(&fo, &Control::new(), 1).unwrap();
        assert!(fv.get("ela_level.mmce_lda_10").unwrap().is_missing());
    }
}
