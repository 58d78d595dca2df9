//! Basic design information (`basic`), linear models per cell (`limo`) and
//! principal components (`pca`).

use std::time::Instant;

use nalgebra::DMatrix;

use super::{assemble, prefixed};
use crate::control::Control;
use crate::error::{invalid, Error, Result};
use crate::feature::{FeatureValue, FeatureVector};
use crate::numkit::linalg::{covariance, fit_least_squares, sym_eigen};
use crate::numkit::stats::{cor, mean, norm, sd};
use crate::object::FeatureObject;

pub fn basic_names() -> Vec<String> {
    prefixed(
        "basic",
        &[
            "dim",
            "observations",
            "lower_min",
            "lower_max",
            "upper_min",
            "upper_max",
            "objective_min",
            "objective_max",
            "blocks_min",
            "blocks_max",
            "cells_filled",
            "cells_total",
            "minimize_fun",
            "cells_filled_ratio",
        ],
    )
}

fn min_max(v: &[f64]) -> (FeatureValue, FeatureValue) {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (FeatureValue::Real(lo), FeatureValue::Real(hi))
}

pub fn basic(fo: &FeatureObject) -> Result<FeatureVector> {
    let started = Instant::now();
    let mut values = vec![FeatureValue::from(fo.dim()), FeatureValue::from(fo.n_obs())];
    for v in [fo.lower(), fo.upper(), fo.objectives()] {
        let (a, b) = min_max(v);
        values.push(a);
        values.push(b);
    }
    match fo.grid() {
        Some(g) => {
            values.push(FeatureValue::from(*g.blocks().iter().min().unwrap()));
            values.push(FeatureValue::from(*g.blocks().iter().max().unwrap()));
            values.push(FeatureValue::from(g.non_empty_cells()));
            values.push(FeatureValue::from(g.total_cells()));
        }
        None => values.extend([FeatureValue::Missing; 4]),
    }
    values.push(FeatureValue::from(fo.minimize()));
    values.push(FeatureValue::opt(
        fo.grid()
            .map(|g| g.non_empty_cells() as f64 / g.total_cells() as f64),
    ));
    Ok(assemble("basic", basic_names(), values, 0, started))
}

pub fn limo_names() -> Vec<String> {
    prefixed(
        "limo",
        &[
            "avg_length",
            "avg_length_norm",
            "length_mean",
            "length_sd",
            "cor",
            "cor_norm",
            "ratio_mean",
            "ratio_sd",
            "sd_ratio",
            "sd_ratio_norm",
            "sd_mean",
            "sd_mean_norm",
        ],
    )
}

/// Slope vectors of per-cell least-squares fits `y ~ 1 + x`, for cells with
/// at least `d + 2` points and a full-rank design.
pub fn cell_coefficients(fo: &FeatureObject) -> Result<Vec<Vec<f64>>> {
    let g = fo.grid().ok_or_else(|| Error::RequiresBlocks("limo".to_string()))?;
    let d = fo.dim();
    let y = fo.y();
    let mut out = Vec::new();
    for (_, members) in g.cells() {
        if members.len() < d + 2 {
            continue;
        }
        let design: Vec<Vec<f64>> = members
            .iter()
            .map(|&i| std::iter::once(1.0).chain(fo.point(i).iter().copied()).collect())
            .collect();
        let resp: Vec<f64> = members.iter().map(|&i| y[i]).collect();
        let Ok(fit) = fit_least_squares(&design, &resp) else {
            continue;
        };
        if !fit.is_rank_deficient() {
            out.push(fit.coefficients[1..].to_vec());
        }
    }
    Ok(out)
}

fn average_length(vs: &[Vec<f64>]) -> Option<f64> {
    let d = vs.first()?.len();
    let avg: Vec<f64> = (0..d)
        .map(|j| vs.iter().map(|v| v[j]).sum::<f64>() / vs.len() as f64)
        .collect();
    Some(norm(&avg))
}

fn mean_pairwise_cor(vs: &[Vec<f64>]) -> Option<f64> {
    let mut c = Vec::new();
    for i in 0..vs.len() {
        for j in i + 1..vs.len() {
            if let Some(r) = cor(&vs[i], &vs[j]) {
                c.push(r);
            }
        }
    }
    mean(&c)
}

/// (max/min, mean) of the per-coordinate standard deviations across cells.
fn coefficient_spread(vs: &[Vec<f64>]) -> (Option<f64>, Option<f64>) {
    if vs.len() < 2 {
        return (None, None);
    }
    let d = vs[0].len();
    let sds: Vec<f64> = (0..d)
        .map(|j| sd(&vs.iter().map(|v| v[j]).collect::<Vec<_>>()).unwrap())
        .collect();
    let scale = vs.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    let lo = sds.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = sds.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ratio = (lo > 1e-12 * scale).then(|| hi / lo);
    (ratio, mean(&sds))
}

pub fn limo(fo: &FeatureObject) -> Result<FeatureVector> {
    let started = Instant::now();
    let vs = cell_coefficients(fo)?;
    let normed: Vec<Vec<f64>> = vs
        .iter()
        .filter(|v| norm(v) > 0.0)
        .map(|v| {
            let l = norm(v);
            v.iter().map(|x| x / l).collect()
        })
        .collect();
    let lengths: Vec<f64> = vs.iter().map(|v| norm(v)).collect();
    let ratios: Vec<f64> = vs
        .iter()
        .filter_map(|v| {
            let lo = v.iter().fold(f64::INFINITY, |a, x| a.min(x.abs()));
            let hi = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            (lo > 0.0).then(|| hi / lo)
        })
        .collect();
    let (sd_ratio, sd_mean) = coefficient_spread(&vs);
    let (sd_ratio_n, sd_mean_n) = coefficient_spread(&normed);
    let values = [
        average_length(&vs),
        average_length(&normed),
        mean(&lengths),
        sd(&lengths),
        mean_pairwise_cor(&vs),
        mean_pairwise_cor(&normed),
        mean(&ratios),
        sd(&ratios),
        sd_ratio,
        sd_ratio_n,
        sd_mean,
        sd_mean_n,
    ]
    .into_iter()
    .map(FeatureValue::opt)
    .collect();
    Ok(assemble("limo", limo_names(), values, 0, started))
}

const PCA_VARIANTS: [&str; 4] = ["cov_x", "cor_x", "cov_init", "cor_init"];

pub fn pca_names() -> Vec<String> {
    ["expl_var", "expl_var_PC1"]
        .iter()
        .flat_map(|k| PCA_VARIANTS.iter().map(move |v| format!("pca.{}.{}", k, v)))
        .collect()
}

/// Share of components needed to reach `threshold` of the total variance,
/// and the share of variance on the first component.
pub fn explained_variance(m: &DMatrix<f64>, threshold: f64) -> Result<(f64, f64)> {
    let ev: Vec<f64> = sym_eigen(m)?.values.into_iter().map(|v| v.max(0.0)).collect();
    let total: f64 = ev.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Numerical("zero total variance".to_string()));
    }
    let mut cum = 0.0;
    let mut k = ev.len();
    for (i, v) in ev.iter().enumerate() {
        cum += v;
        if cum / total >= threshold - 1e-12 {
            k = i + 1;
            break;
        }
    }
    Ok((k as f64 / ev.len() as f64, ev[0] / total))
}

fn correlation(c: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let s: Vec<f64> = c.diagonal().iter().map(|v| v.sqrt()).collect();
    let scale = s.iter().copied().fold(0.0, f64::max);
    if s.iter().any(|&v| !(v > 1e-12 * scale)) {
        return None;
    }
    Some(DMatrix::from_fn(c.nrows(), c.ncols(), |i, j| {
        if i == j {
            1.0
        } else {
            c[(i, j)] / (s[i] * s[j])
        }
    }))
}

pub fn pca(fo: &FeatureObject, control: &Control) -> Result<FeatureVector> {
    let started = Instant::now();
    let d = fo.dim();
    if fo.n_obs() <= d + 1 {
        return Err(invalid("pca needs more than d + 1 observations"));
    }
    let thresholds: Vec<f64> = PCA_VARIANTS
        .iter()
        .map(|v| {
            let key = format!("pca.{}", v);
            let t = control.f64_or(&key, 0.9)?;
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::InvalidControl {
                    key,
                    reason: "threshold must lie in (0, 1]".to_string(),
                });
            }
            Ok(t)
        })
        .collect::<Result<_>>()?;
    let x = covariance(fo.points());
    let with_y: Vec<Vec<f64>> = fo
        .points()
        .iter()
        .zip(fo.y())
        .map(|(p, &y)| p.iter().copied().chain(std::iter::once(y)).collect())
        .collect();
    let init = covariance(&with_y);
    let mats = [Some(x.clone()), correlation(&x), Some(init.clone()), correlation(&init)];
    let res: Vec<Option<(f64, f64)>> = mats
        .iter()
        .zip(&thresholds)
        .map(|(m, &t)| m.as_ref().and_then(|m| explained_variance(m, t).ok()))
        .collect();
    let values = res
        .iter()
        .map(|r| r.map(|v| v.0))
        .chain(res.iter().map(|r| r.map(|v| v.1)))
        .map(FeatureValue::opt)
        .collect();
    Ok(assemble("pca", pca_names(), values, 0, started))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::testutil::{sphere, uniform, with_function};

    fn object(x: Vec<Vec<f64>>, y: Vec<f64>, blocks: Option<Vec<usize>>) -> FeatureObject {
        let d = x[0].len();
        FeatureObject::builder(x, y)
            .bounds(vec![-5.0; d], vec![5.0; d])
            .maybe_blocks(blocks)
            .build()
            .unwrap()
    }

    #[test]
    fn basic_on_full_grid() {
        let x = uniform(800, 2, -5.0, 5.0, 1);
        let fo = with_function(x, -5.0, 5.0, Some(vec![8, 5]), sphere);
        let fv = basic(&fo).unwrap();
        assert_eq!(fv.len(), 16);
        assert_eq!(fv.value("basic.dim"), Some(2.0));
        assert_eq!(fv.value("basic.observations"), Some(800.0));
        assert_eq!(fv.value("basic.cells_total"), Some(40.0));
        assert_eq!(fv.value("basic.cells_filled"), Some(40.0));
        assert_eq!(fv.value("basic.cells_filled_ratio"), Some(1.0));
        assert_eq!(fv.value("basic.minimize_fun"), Some(1.0));
        assert_eq!(fv.value("basic.blocks_min"), Some(5.0));
        assert_eq!(fv.value("basic.lower_min"), Some(-5.0));
    }

    #[test]
    fn basic_without_blocks() {
        let x = uniform(30, 3, -5.0, 5.0, 1);
        let y = x.iter().map(|p| sphere(p)).collect();
        let fv = basic(&object(x, y, None)).unwrap();
        assert_eq!(fv.value("basic.dim"), Some(3.0));
        assert_eq!(fv.value("basic.cells_total"), None);
        assert_eq!(fv.value("basic.cells_filled_ratio"), None);
    }

    #[test]
    fn limo_on_linear_function() {
        let x = uniform(600, 2, -5.0, 5.0, 2);
        let y = x.iter().map(|p| 3.0 * p[0] + 4.0 * p[1]).collect();
        let fv = limo(&object(x, y, Some(vec![3, 3]))).unwrap();
        assert!((fv.value("limo.avg_length").unwrap() - 5.0).abs() < 1e-9);
        assert!((fv.value("limo.cor").unwrap() - 1.0).abs() < 1e-12);
        assert!(fv.value("limo.length_sd").unwrap() < 1e-9);
        assert!(fv.value("limo.sd_mean").unwrap() < 1e-9);
        assert_eq!(fv.value("limo.sd_ratio"), None);
        assert!((fv.value("limo.ratio_mean").unwrap() - 4.0 / 3.0).abs() < 1e-9);
        assert!((fv.value("limo.avg_length_norm").unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn limo_on_centered_sphere() {
        let x = uniform(4000, 2, -5.0, 5.0, 3);
        let y = x.iter().map(|p| sphere(p)).collect::<Vec<_>>();
        let fo = object(x, y, Some(vec![4, 4]));
        let vs = cell_coefficients(&fo).unwrap();
        assert_eq!(vs.len(), 16);
        // each cell's slope points away from the origin
        let g = fo.grid().unwrap();
        for ((cell, _), v) in g.cells().zip(&vs) {
            let c = g.center(cell);
            assert!(c[0] * v[0] + c[1] * v[1] > 0.0);
        }
        let fv = limo(&fo).unwrap();
        let length = fv.value("limo.length_mean").unwrap();
        assert!(fv.value("limo.avg_length").unwrap() < 0.1 * length);
    }

    #[test]
    fn limo_single_cell() {
        let x = uniform(50, 2, -5.0, 5.0, 4);
        let y = x.iter().map(|p| p[0] - p[1] * 2.0).collect();
        let fv = limo(&object(x, y, Some(vec![1, 1]))).unwrap();
        assert_eq!(fv.value("limo.cor"), None);
        assert_eq!(fv.value("limo.sd_mean"), None);
        assert!((fv.value("limo.avg_length").unwrap() - 5f64.sqrt()).abs() < 1e-9);
        let nb = object(uniform(50, 2, -5.0, 5.0, 4), vec![0.0; 50], None);
        assert!(limo(&nb).is_err());
    }

    #[test]
    fn pca_rank_one() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 * 0.1, i as f64 * 0.2]).collect();
        let y = (0..20).map(|i| ((i * 7) % 5) as f64).collect();
        let fv = pca(&object(x, y, None), &Control::default()).unwrap();
        assert!((fv.value("pca.expl_var_PC1.cov_x").unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(fv.value("pca.expl_var.cov_x"), Some(0.5));
        assert_eq!(fv.len(), 10);
    }

    #[test]
    fn pca_isotropic_sample() {
        let x = uniform(2000, 2, -1.0, 1.0, 5);
        let y = x.iter().map(|p| sphere(p)).collect();
        let fo = object(x, y, None);
        let fv = pca(&fo, &Control::default()).unwrap();
        // eigen oracle: 2x2 correlation matrix has eigenvalues 1 ± |r|
        let a: Vec<f64> = fo.points().iter().map(|p| p[0]).collect();
        let b: Vec<f64> = fo.points().iter().map(|p| p[1]).collect();
        let r = cor(&a, &b).unwrap();
        let pc1 = fv.value("pca.expl_var_PC1.cor_x").unwrap();
        assert!((pc1 - (1.0 + r.abs()) / 2.0).abs() < 1e-10);
        assert!((pc1 - 0.5).abs() < 0.05);
    }

    #[test]
    fn pca_constant_objective() {
        let x = uniform(100, 2, -1.0, 1.0, 6);
        let fo = object(x, vec![1.0; 100], None);
        let fv = pca(&fo, &Control::default()).unwrap();
        assert_eq!(fv.value("pca.expl_var.cor_init"), None);
        assert_eq!(fv.value("pca.expl_var_PC1.cor_init"), None);
        assert!(fv.value("pca.expl_var.cor_x").is_some());
    }

    #[test]
    fn pca_correlation_ignores_rescaling() {
        let x = uniform(300, 3, -1.0, 1.0, 7);
        let y: Vec<f64> = x.iter().map(|p| p[0] + p[1] * p[2]).collect();
        let scaled: Vec<Vec<f64>> = x.iter().map(|p| vec![p[0] * 40.0 - 3.0, p[1] * 0.01, p[2] * 7.0 + 1.0]).collect();
        let a = pca(&object(x, y.clone(), None), &Control::default()).unwrap();
        let b = FeatureObject::builder(scaled, y).build().unwrap();
        let b = pca(&b, &Control::default()).unwrap();
        for k in ["cor_x", "cor_init"] {
            let n = format!("pca.expl_var_PC1.{}", k);
            assert!((a.value(&n).unwrap() - b.value(&n).unwrap()).abs() < 1e-10);
        }
    }
}
