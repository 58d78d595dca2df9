//! Generalized cell mapping (`gcm`) and barrier-tree (`bt`) features. Both
//! sets are computed once per representation approach and report their costs
//! per approach.

use std::time::Instant;

use rayon::prelude::*;

use super::opts;
use crate::control::Control;
use crate::error::Result;
use crate::feature::{FeatureValue, FeatureVector};
use crate::numkit::stats::{aggregate, aggregate_all, Stat, FIVE};
use crate::object::FeatureObject;

pub mod model;
pub mod tree;

pub use model::{representatives, Approach, CellClass, TransitionModel, Weighting, PROB_TOL};
pub use tree::{build_barrier_tree, BarrierTree, NodeRole, TreeNode};

const SIX: [Stat; 6] = [Stat::Min, Stat::Mean, Stat::Median, Stat::Max, Stat::Sd, Stat::Sum];

pub fn approaches(control: &Control, key: &str) -> Result<Vec<Approach>> {
    control
        .list_or(key, &["min", "mean", "near"])
        .iter()
        .map(|s| s.parse())
        .collect()
}

pub fn weighting(control: &Control) -> Result<Weighting> {
    control.str_or("gcm.weighting", "improvement").parse()
}

fn suffixed(prefix: &str, stem: &str, stats: &[Stat]) -> Vec<String> {
    stats
        .iter()
        .map(|s| format!("{}.{}.{}", prefix, stem, s.suffix()))
        .collect()
}

fn gcm_approach_names(a: Approach) -> Vec<String> {
    let p = format!("gcm.{}", a.id());
    let mut out: Vec<String> = ["attractors", "pcells", "tcells", "uncertain"]
        .iter()
        .map(|s| format!("{}.{}", p, s))
        .collect();
    out.extend(suffixed(&p, "basin_prob", &FIVE));
    out.extend(suffixed(&p, "basin_certain", &SIX));
    out.extend(suffixed(&p, "basin_uncertain", &SIX));
    out.push(format!("{}.best_attr.prob", p));
    out.push(format!("{}.best_attr.no", p));
    out.push(format!("{}.costs_fun_evals", p));
    out.push(format!("{}.costs_runtime", p));
    out
}

fn bt_approach_names(a: Approach) -> Vec<String> {
    let p = format!("bt.{}", a.id());
    let mut out: Vec<String> = ["leaves", "levels", "depth", "depth_levels_ratio", "levels_nodes_ratio"]
        .iter()
        .map(|s| format!("{}.{}", p, s))
        .collect();
    out.extend(suffixed(&p, "diffs", &FIVE));
    out.extend(suffixed(&p, "level_diffs", &FIVE));
    for b in ["certain", "uncertain", "most_likely"] {
        out.push(format!("{}.basin_ratio.{}", p, b));
    }
    out.extend(suffixed(&p, "basin_intersection", &FIVE));
    out.extend(suffixed(&p, "basin_proportion", &FIVE));
    out.push(format!("{}.basin_range", p));
    out.push(format!("{}.costs_fun_evals", p));
    out.push(format!("{}.costs_runtime", p));
    out
}

/// Names including the per-approach costs.
pub fn gcm_names(control: &Control) -> Result<Vec<String>> {
    Ok(approaches(control, "gcm.approaches")?
        .into_iter()
        .flat_map(gcm_approach_names)
        .collect())
}

pub fn bt_names(control: &Control) -> Result<Vec<String>> {
    Ok(approaches(control, "bt.approaches")?
        .into_iter()
        .flat_map(bt_approach_names)
        .collect())
}

fn finish(names: Vec<String>, mut values: Vec<FeatureValue>, started: Instant) -> FeatureVector {
    values.push(FeatureValue::Int(0));
    values.push(FeatureValue::Real(started.elapsed().as_secs_f64()));
    let mut fv = FeatureVector::new();
    for (n, v) in names.into_iter().zip(values) {
        fv.push(n, v);
    }
    fv
}

fn per_approach<N, F>(
    fo: &FeatureObject,
    list: Vec<Approach>,
    weighting: Weighting,
    names: N,
    f: F,
) -> Result<FeatureVector>
where
    N: Fn(Approach) -> Vec<String>,
    F: Fn(&TransitionModel) -> Result<Vec<FeatureValue>> + Sync,
{
    let parts: Vec<Result<(Vec<FeatureValue>, Instant)>> = list
        .par_iter()
        .map(|&a| {
            let started = Instant::now();
            let m = TransitionModel::build(fo, a, weighting)?;
            Ok((f(&m)?, started))
        })
        .collect();
    let mut fv = FeatureVector::new();
    for (a, part) in list.into_iter().zip(parts) {
        let (values, started) = part?;
        fv.extend(finish(names(a), values, started));
    }
    Ok(fv)
}

pub fn gcm_features(fo: &FeatureObject, control: &Control) -> Result<FeatureVector> {
    let list = approaches(control, "gcm.approaches")?;
    per_approach(fo, list, weighting(control)?, gcm_approach_names, |m| Ok(gcm_values(m)))
}

pub fn bt_features(fo: &FeatureObject, control: &Control) -> Result<FeatureVector> {
    let list = approaches(control, "bt.approaches")?;
    per_approach(fo, list, weighting(control)?, bt_approach_names, bt_values)
}

/// Basin sizes per attractor: cells absorbed only by it, and cells reaching
/// it at all (attractors count toward their own basin).
pub fn basin_sizes(m: &TransitionModel) -> (Vec<usize>, Vec<usize>) {
    let k = m.attractors.len();
    let mut certain = vec![0usize; k];
    let mut reach = vec![0usize; k];
    for s in 0..m.n_states() {
        let r: Vec<usize> = m.reached(s).collect();
        if r.len() == 1 {
            certain[r[0]] += 1;
        }
        for a in r {
            reach[a] += 1;
        }
    }
    (certain, reach)
}

pub fn gcm_values(m: &TransitionModel) -> Vec<FeatureValue> {
    let n = m.n_states() as f64;
    let k = m.attractors.len();
    let uncertain = (0..m.n_states())
        .filter(|&s| m.class(s) == CellClass::Uncertain)
        .count() as f64;
    let mut prob = vec![0.0; k];
    for row in &m.absorption {
        for &(a, p) in row {
            prob[a] += p;
        }
    }
    for p in &mut prob {
        *p /= n;
    }
    let (certain, reach) = basin_sizes(m);
    let as_f = |v: &[usize]| v.iter().map(|&x| x as f64).collect::<Vec<_>>();

    let best = m
        .attractors
        .iter()
        .map(|&s| m.values[s])
        .fold(f64::INFINITY, f64::min);
    let best_set: Vec<usize> = (0..k).filter(|&a| m.values[m.attractors[a]] == best).collect();
    let best_prob: f64 = best_set.iter().map(|&a| prob[a]).sum();
    let best_no = (0..m.n_states())
        .filter(|&s| m.reached(s).any(|a| best_set.contains(&a)))
        .count();

    let mut out = vec![
        FeatureValue::from(k),
        FeatureValue::real(k as f64 / n),
        FeatureValue::real((n - k as f64) / n),
        FeatureValue::real(uncertain / n),
    ];
    out.extend(opts(aggregate_all(&prob, &FIVE)));
    out.extend(opts(aggregate_all(&as_f(&certain), &SIX)));
    out.extend(opts(aggregate_all(&as_f(&reach), &SIX)));
    out.push(FeatureValue::real(best_prob));
    out.push(FeatureValue::from(best_no));
    out
}

fn size_ratio(sizes: &[usize]) -> Option<f64> {
    let max = *sizes.iter().max()?;
    let min = *sizes.iter().min()?;
    (min > 0).then(|| max as f64 / min as f64)
}

/// Basins of the tree leaves under the three definitions, as state sets:
/// certain cells only, every cell reaching the leaf, and certain cells plus
/// uncertain cells assigned to their most likely attractor.
pub struct LeafBasins {
    pub leaves: Vec<usize>,
    pub certain: Vec<Vec<usize>>,
    pub uncertain: Vec<Vec<usize>>,
    pub most_likely: Vec<Vec<usize>>,
}

pub fn leaf_basins(m: &TransitionModel, t: &BarrierTree) -> LeafBasins {
    let mut leaves: Vec<usize> = t.leaves().iter().filter_map(|&l| t.nodes[l].state).collect();
    leaves.sort_unstable();
    let pos: Vec<usize> = leaves
        .iter()
        .map(|s| m.attractors.binary_search(s).expect("leaf is an attractor"))
        .collect();
    let mut certain = vec![Vec::new(); leaves.len()];
    let mut uncertain = vec![Vec::new(); leaves.len()];
    let mut most_likely = vec![Vec::new(); leaves.len()];
    for s in 0..m.n_states() {
        let r: Vec<usize> = m.reached(s).collect();
        let top = m.absorption[s]
            .iter()
            .fold(None::<(usize, f64)>, |acc, &(a, p)| match acc {
                Some((_, q)) if q >= p => acc,
                _ => Some((a, p)),
            })
            .map(|e| e.0);
        for (i, &a) in pos.iter().enumerate() {
            if r.contains(&a) {
                uncertain[i].push(s);
                if r.len() == 1 {
                    certain[i].push(s);
                }
            }
            if top == Some(a) {
                most_likely[i].push(s);
            }
        }
    }
    LeafBasins {
        leaves,
        certain,
        uncertain,
        most_likely,
    }
}

pub fn bt_values(m: &TransitionModel) -> Result<Vec<FeatureValue>> {
    let t = build_barrier_tree(m)?;
    let leaves = t.leaves().len();
    let levels = t.levels();
    let depth = t.depth();
    let multi = leaves >= 2;
    let mut out = vec![
        FeatureValue::from(leaves),
        FeatureValue::from(levels),
        FeatureValue::real(depth),
    ];
    let non_root = t.nodes.len() - 1;
    out.push(FeatureValue::opt(if multi && levels > 0 {
        Some(depth / levels as f64)
    } else {
        None
    }));
    out.push(FeatureValue::opt(if multi && non_root > 0 {
        Some(levels as f64 / non_root as f64)
    } else {
        None
    }));

    let edges = t.edges();
    let diffs: Vec<f64> = edges.iter().map(|e| e.1).collect();
    let mut level_means = Vec::new();
    for level in 1..=levels {
        let at: Vec<f64> = edges.iter().filter(|e| e.0 == level).map(|e| e.1).collect();
        if !at.is_empty() {
            level_means.push(at.iter().sum::<f64>() / at.len() as f64);
        }
    }
    out.extend(opts(aggregate_all(&diffs, &FIVE)));
    out.extend(opts(aggregate_all(&level_means, &FIVE)));

    let b = leaf_basins(m, &t);
    let lens = |v: &[Vec<usize>]| v.iter().map(Vec::len).collect::<Vec<_>>();
    for sets in [&b.certain, &b.uncertain, &b.most_likely] {
        out.push(FeatureValue::opt(if multi { size_ratio(&lens(sets)) } else { None }));
    }

    // best leaf: lowest height, ties to the lower state
    let best = (0..b.leaves.len())
        .min_by(|&i, &j| m.values[b.leaves[i]].total_cmp(&m.values[b.leaves[j]]).then(i.cmp(&j)));
    let mut inter = Vec::new();
    let mut prop = Vec::new();
    if let Some(bi) = best {
        let star = &b.uncertain[bi];
        let star_ml = b.most_likely[bi].len() as f64;
        for i in (0..b.leaves.len()).filter(|&i| i != bi) {
            let common = b.uncertain[i].iter().filter(|s| star.contains(s)).count();
            inter.push(Some(common as f64 / star.len() as f64));
            prop.push(if star_ml > 0.0 {
                Some(b.most_likely[i].len() as f64 / star_ml)
            } else {
                None
            });
        }
    }
    out.extend(opts(aggregate(&inter, &FIVE)));
    out.extend(opts(aggregate(&prop, &FIVE)));

    let range = b
        .leaves
        .iter()
        .zip(&b.uncertain)
        .map(|(&l, basin)| {
            basin.iter().map(|&s| m.values[s]).fold(f64::NEG_INFINITY, f64::max) - m.values[l]
        })
        .fold(f64::NEG_INFINITY, f64::max);
    out.push(FeatureValue::real(range));
    Ok(out)
}
