//! Nearest-better clustering features: distances to the nearest neighbour
//! versus distances to the nearest better neighbour.

use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::{assemble, prefixed, ratio};
use crate::control::Control;
use crate::error::{invalid, Error, Result};
use crate::feature::{FeatureValue, FeatureVector};
use crate::numkit::stats::{cor, euclidean, mean, sd};
use crate::object::FeatureObject;
use crate::rng;

const PREFIX: &str = "nbc";

pub fn names() -> Vec<String> {
    prefixed(
        PREFIX,
        &[
            "nn_nb.sd_ratio",
            "nn_nb.mean_ratio",
            "nn_nb.cor",
            "dist_ratio.coeff_var",
            "nb_fitness.cor",
        ],
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct NearestBetterStats {
    pub nn: Vec<f64>,
    /// `None` for the best point.
    pub nb: Vec<Option<f64>>,
    pub nb_index: Vec<Option<usize>>,
    pub indegree: Vec<usize>,
}

/// Rank of each point under "better": smaller y first, ties by `tie_order`.
fn ranks(y: &[f64], tie_order: &[usize]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..y.len()).collect();
    idx.sort_by(|&a, &b| y[a].total_cmp(&y[b]).then(tie_order[a].cmp(&tie_order[b])));
    let mut rank = vec![0; y.len()];
    for (r, &i) in idx.iter().enumerate() {
        rank[i] = r;
    }
    rank
}

pub fn nearest_better(points: &[Vec<f64>], y: &[f64], tie_order: &[usize]) -> NearestBetterStats {
    let n = points.len();
    let rank = ranks(y, tie_order);
    let per: Vec<(f64, Option<(usize, f64)>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut nn = f64::INFINITY;
            let mut nb: Option<(usize, f64)> = None;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let dist = euclidean(&points[i], &points[j]);
                nn = nn.min(dist);
                if rank[j] < rank[i] && nb.is_none_or(|(_, b)| dist < b) {
                    nb = Some((j, dist));
                }
            }
            (nn, nb)
        })
        .collect();
    let mut indegree = vec![0; n];
    for (_, nb) in &per {
        if let Some((j, _)) = nb {
            indegree[*j] += 1;
        }
    }
    NearestBetterStats {
        nn: per.iter().map(|p| p.0).collect(),
        nb: per.iter().map(|p| p.1.map(|e| e.1)).collect(),
        nb_index: per.iter().map(|p| p.1.map(|e| e.0)).collect(),
        indegree,
    }
}

pub fn features_from(stats: &NearestBetterStats, y: &[f64]) -> Vec<Option<f64>> {
    let nb: Vec<f64> = stats.nb.iter().flatten().copied().collect();
    let (nn_paired, nb_paired): (Vec<f64>, Vec<f64>) = stats
        .nn
        .iter()
        .zip(&stats.nb)
        .filter_map(|(&a, b)| b.map(|b| (a, b)))
        .unzip();
    let ratios: Vec<f64> = nn_paired
        .iter()
        .zip(&nb_paired)
        .filter(|(_, &b)| b > 0.0)
        .map(|(a, b)| a / b)
        .collect();
    let sd_nn = sd(&stats.nn).filter(|&s| s > 0.0);
    let sd_nb = sd(&nb).filter(|&s| s > 0.0);
    let indeg: Vec<f64> = stats.indegree.iter().map(|&d| d as f64).collect();
    vec![
        sd_nn.and_then(|a| sd_nb.map(|b| a / b)),
        ratio(mean(&stats.nn), mean(&nb)),
        cor(&nn_paired, &nb_paired),
        ratio(sd(&ratios), mean(&ratios)),
        cor(y, &indeg),
    ]
}

pub fn compute(fo: &FeatureObject, control: &Control, seed: u64) -> Result<FeatureVector> {
    let started = Instant::now();
    let n = fo.n_obs();
    if n < 5 {
        return Err(invalid("nbc needs at least 5 observations"));
    }
    let mut tie_order: Vec<usize> = (0..n).collect();
    match control.str_or("nbc.tie_breaking", "index") {
        "index" => {}
        "random" => tie_order.shuffle(&mut rng::stream(seed, "nbc")),
        other => {
            return Err(Error::InvalidControl {
                key: "nbc.tie_breaking".to_string(),
                reason: format!("`{}` is not one of index, random", other),
            })
        }
    }
    let stats = nearest_better(fo.points(), fo.y(), &tie_order);
    let values = features_from(&stats, fo.y())
        .into_iter()
        .map(FeatureValue::opt)
        .collect();
    Ok(assemble(PREFIX, names(), values, 0, started))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::testutil::uniform;
    use proptest::prelude::*;

    fn object(x: Vec<Vec<f64>>, y: Vec<f64>) -> FeatureObject {
        FeatureObject::builder(x, y).build().unwrap()
    }

    /// Quadratic scan written independently of the module: the better set is
    /// formed explicitly per point.
    fn oracle(x: &[Vec<f64>], y: &[f64]) -> Vec<Option<f64>> {
        let n = x.len();
        let d = |a: usize, b: usize| -> f64 {
            x[a].iter().zip(&x[b]).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt()
        };
        let better = |j: usize, i: usize| y[j] < y[i] || (y[j] == y[i] && j < i);
        let mut nn = Vec::new();
        let mut nb = Vec::new();
        let mut nn_paired = Vec::new();
        let mut indeg = vec![0.0; n];
        for i in 0..n {
            let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            let m = others.iter().map(|&j| d(i, j)).fold(f64::INFINITY, f64::min);
            nn.push(m);
            let cands: Vec<usize> = others.into_iter().filter(|&j| better(j, i)).collect();
            if cands.is_empty() {
                continue;
            }
            let mut best = cands[0];
            for &j in &cands {
                if d(i, j) < d(i, best) {
                    best = j;
                }
            }
            indeg[best] += 1.0;
            nb.push(d(i, best));
            nn_paired.push(m);
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let sd = |v: &[f64]| {
            let m = mean(v);
            (v.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
        };
        let pearson = |a: &[f64], b: &[f64]| {
            let (ma, mb) = (mean(a), mean(b));
            let num: f64 = a.iter().zip(b).map(|(p, q)| (p - ma) * (q - mb)).sum();
            let da: f64 = a.iter().map(|p| (p - ma).powi(2)).sum::<f64>().sqrt();
            let db: f64 = b.iter().map(|q| (q - mb).powi(2)).sum::<f64>().sqrt();
            num / (da * db)
        };
        let ratios: Vec<f64> = nn_paired.iter().zip(&nb).map(|(a, b)| a / b).collect();
        vec![
            Some(sd(&nn) / sd(&nb)),
            Some(mean(&nn) / mean(&nb)),
            Some(pearson(&nn_paired, &nb)),
            Some(sd(&ratios) / mean(&ratios)),
            Some(pearson(y, &indeg)),
        ]
    }

    fn close(a: &[Option<f64>], b: &[Option<f64>], tol: f64) -> bool {
        a.iter().zip(b).all(|(p, q)| match (p, q) {
            (Some(p), Some(q)) => (p - q).abs() <= tol * q.abs().max(1.0),
            (None, None) => true,
            _ => false,
        })
    }

    #[test]
    fn matches_oracle_on_random_instance() {
        let x = uniform(20, 3, -1.0, 1.0, 4);
        let y: Vec<f64> = x.iter().map(|p| p[0].sin() + p[1] * p[2]).collect();
        let stats = nearest_better(&x, &y, &(0..20).collect::<Vec<_>>());
        assert_eq!(stats.indegree.iter().sum::<usize>(), 19);
        assert!(close(&features_from(&stats, &y), &oracle(&x, &y), 1e-12));
    }

    #[test]
    fn monotone_line_has_unit_mean_ratio() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let fv = compute(&object(x, y), &Control::default(), 1).unwrap();
        assert_eq!(fv.value("nbc.nn_nb.mean_ratio"), Some(1.0));
        assert_eq!(fv.value("nbc.costs_fun_evals"), Some(0.0));
        assert_eq!(fv.len(), 7);
    }

    #[test]
    fn ties_are_broken_by_index() {
        let x: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        let stats = nearest_better(&x, &[1.0; 6], &(0..6).collect::<Vec<_>>());
        assert_eq!(stats.nb[0], None);
        assert_eq!(stats.nb_index[3], Some(2));
        assert_eq!(stats.indegree.iter().sum::<usize>(), 5);
    }

    #[test]
    fn random_tie_breaking_is_seeded() {
        let x = uniform(30, 2, 0.0, 1.0, 8);
        let fo = object(x, vec![0.0; 30]);
        let c = Control::default().with("nbc.tie_breaking", "random").unwrap();
        let a = compute(&fo, &c, 5).unwrap();
        let b = compute(&fo, &c, 5).unwrap();
        assert_eq!(a.value("nbc.nn_nb.cor"), b.value("nbc.nn_nb.cor"));
        let bad = Control::default().with("nbc.tie_breaking", "coin").unwrap();
        assert!(compute(&fo, &bad, 5).is_err());
    }

    #[test]
    fn too_few_points() {
        let fo = object(vec![vec![0.0], vec![1.0], vec![2.0]], vec![0.0, 1.0, 2.0]);
        assert!(compute(&fo, &Control::default(), 1).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn oracle_and_rigid_motion(
            pts in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 8..60),
            angle in 0.0f64..std::f64::consts::TAU,
            shift in (-3.0f64..3.0, -3.0f64..3.0),
        ) {
            let x: Vec<Vec<f64>> = pts.iter().map(|&(a, b)| vec![a, b]).collect();
            let y: Vec<f64> = x.iter().map(|p| (p[0] * 1.3).cos() + p[1] * p[1]).collect();
            let order: Vec<usize> = (0..x.len()).collect();
            let base = features_from(&nearest_better(&x, &y, &order), &y);
            prop_assert!(close(&base, &oracle(&x, &y), 1e-9));
            let (c, s) = (angle.cos(), angle.sin());
            let moved: Vec<Vec<f64>> = x
                .iter()
                .map(|p| vec![c * p[0] - s * p[1] + shift.0, s * p[0] + c * p[1] + shift.1])
                .collect();
            let rot = features_from(&nearest_better(&moved, &y, &order), &y);
            prop_assert!(close(&base, &rot, 1e-9));
        }
    }
}
