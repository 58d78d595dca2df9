//! Local search: runs bounded local searches from sample points and
//! clusters the optima they reach into basins.

use std::time::Instant;

use rand::seq::index::sample;
use rayon::prelude::*;

use super::{assemble, opts, prefixed};
use crate::control::Control;
use crate::error::{invalid, Error, Result};
use crate::feature::{FeatureValue, FeatureVector};
use crate::numkit::cluster::single_linkage_clusters;
use crate::numkit::local_search::{local_search, LocalOptimum};
use crate::numkit::stats::{aggregate_all, mean, SEVEN};
use crate::object::FeatureObject;
use crate::rng;

const PREFIX: &str = "ela_local";

pub fn names() -> Vec<String> {
    let mut n = prefixed(
        PREFIX,
        &[
            "n_loc_opt.abs",
            "n_loc_opt.rel",
            "best2mean_contr.orig",
            "basin_sizes.avg_best",
            "basin_sizes.avg_non_best",
            "basin_sizes.avg_worst",
        ],
    );
    n.extend(SEVEN.iter().map(|s| format!("{}.fun_evals.{}", PREFIX, s.suffix())));
    n
}

/// Basin of found optima: its best objective and the number of searches
/// that ended in it.
#[derive(Debug, Clone, PartialEq)]
pub struct Basin {
    pub objective: f64,
    pub size: usize,
}

pub fn searches(
    fo: &FeatureObject,
    n_starts: usize,
    budget: usize,
    seed: u64,
) -> Result<(Vec<LocalOptimum>, u64)> {
    let ev = fo
        .evaluator()
        .ok_or_else(|| Error::RequiresFunction(PREFIX.to_string()))?;
    let n = fo.n_obs();
    let mut r = rng::stream(seed, PREFIX);
    let starts = sample(&mut r, n, n_starts.min(n)).into_vec();
    let f = |x: &[f64]| ev.eval(x);
    let runs = starts
        .par_iter()
        .map(|&i| local_search(&f, fo.point(i), fo.lower(), fo.upper(), budget))
        .collect::<Result<Vec<_>>>()?;
    Ok((runs, ev.count()))
}

/// Clusters optima and returns basins in order of first appearance.
pub fn basins(runs: &[LocalOptimum], cut: f64) -> Vec<Basin> {
    let xs: Vec<Vec<f64>> = runs.iter().map(|r| r.x.clone()).collect();
    let labels = single_linkage_clusters(&xs, cut);
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut out = vec![
        Basin {
            objective: f64::INFINITY,
            size: 0,
        };
        k
    ];
    for (r, &l) in runs.iter().zip(&labels) {
        out[l].objective = out[l].objective.min(r.f);
        out[l].size += 1;
    }
    out
}

pub fn compute(fo: &FeatureObject, control: &Control, seed: u64) -> Result<FeatureVector> {
    let started = Instant::now();
    let d = fo.dim();
    let n_starts = control.usize_or("ela_local.n_starts", 50 * d)?;
    let budget = control.usize_or("ela_local.budget", 500 * d)?;
    let clust_cut = control.f64_or("ela_local.clust_cut", 0.1)?;
    if n_starts == 0 || clust_cut <= 0.0 {
        return Err(invalid("ela_local needs positive n_starts and clust_cut"));
    }
    let (runs, evals) = searches(fo, n_starts, budget, seed)?;
    let cut = (clust_cut * fo.domain_diagonal()).max(f64::MIN_POSITIVE);
    let b = basins(&runs, cut);
    let objs: Vec<f64> = b.iter().map(|b| b.objective).collect();
    let best = objs.iter().copied().fold(f64::INFINITY, f64::min);
    let worst = objs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean_obj = mean(&objs).filter(|m| *m != 0.0);
    let avg_size = |keep: &dyn Fn(&Basin) -> bool| {
        let s: Vec<f64> = b.iter().filter(|x| keep(x)).map(|x| x.size as f64).collect();
        mean(&s)
    };
    let mut values = vec![
        FeatureValue::from(b.len()),
        FeatureValue::real(b.len() as f64 / runs.len() as f64),
        FeatureValue::opt(mean_obj.map(|m| best / m)),
        FeatureValue::opt(avg_size(&|x| x.objective == best)),
        FeatureValue::opt(avg_size(&|x| x.objective != best)),
        FeatureValue::opt(avg_size(&|x| x.objective == worst)),
    ];
    let counts: Vec<f64> = runs.iter().map(|r| r.evals as f64).collect();
    values.extend(opts(aggregate_all(&counts, &SEVEN)));
    Ok(assemble(PREFIX, names(), values, evals, started))
}
