//! Cell mapping features computed from per-cell summaries of the grid:
//! angles between best and worst points, gradient homogeneity and
//! convexity along lines of three successive cells.

use std::time::Instant;

use super::{assemble, opts, prefixed};
use crate::error::{invalid, Error, Result};
use crate::feature::{FeatureValue, FeatureVector};
use crate::grid::{moore_offsets, CellGrid};
use crate::numkit::stats::{aggregate_all, euclidean, Stat};
use crate::object::FeatureObject;

const MEAN_SD: [Stat; 2] = [Stat::Mean, Stat::Sd];

fn grid<'a>(fo: &'a FeatureObject, set: &str) -> Result<&'a CellGrid> {
    fo.grid().ok_or_else(|| Error::RequiresBlocks(set.to_string()))
}

/// Per-cell extremes and the member closest to the cell center.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub cell: usize,
    pub members: Vec<usize>,
    pub best: usize,
    pub worst: usize,
    pub nearest_center: usize,
}

/// Summaries of all non-empty cells in ascending cell order. Ties go to the
/// lower sample index.
pub fn cell_summaries(fo: &FeatureObject, g: &CellGrid) -> Vec<CellSummary> {
    let y = fo.y();
    g.cells()
        .map(|(cell, members)| {
            let center = g.center(cell);
            let pick = |better: &dyn Fn(usize, usize) -> bool| {
                members.iter().copied().fold(members[0], |b, i| if better(i, b) { i } else { b })
            };
            let dist = |i: usize| euclidean(fo.point(i), &center);
            CellSummary {
                cell,
                members: members.to_vec(),
                best: pick(&|i, b| y[i] < y[b]),
                worst: pick(&|i, b| y[i] > y[b]),
                nearest_center: pick(&|i, b| dist(i) < dist(b)),
            }
        })
        .collect()
}

pub fn angle_names() -> Vec<String> {
    let mut out = Vec::new();
    for q in ["dist_ctr2best", "dist_ctr2worst", "angle", "y_ratio_best2worst"] {
        for s in MEAN_SD {
            out.push(format!("cm_angle.{}.{}", q, s.suffix()));
        }
    }
    out
}

/// Per qualifying cell: distances from the center to the best and worst
/// member, the angle between those directions in degrees and the objective
/// gap relative to the global objective span.
pub fn angle_cells(fo: &FeatureObject, g: &CellGrid) -> Vec<[Option<f64>; 4]> {
    let y = fo.y();
    let span = y.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - y.iter().copied().fold(f64::INFINITY, f64::min);
    cell_summaries(fo, g)
        .into_iter()
        .filter(|c| c.members.len() >= 2 && c.best != c.worst)
        .map(|c| {
            let ctr = g.center(c.cell);
            let vb: Vec<f64> = fo.point(c.best).iter().zip(&ctr).map(|(p, q)| p - q).collect();
            let vw: Vec<f64> = fo.point(c.worst).iter().zip(&ctr).map(|(p, q)| p - q).collect();
            let nb = vb.iter().map(|v| v * v).sum::<f64>().sqrt();
            let nw = vw.iter().map(|v| v * v).sum::<f64>().sqrt();
            let angle = (nb > 0.0 && nw > 0.0).then(|| {
                let cos = vb.iter().zip(&vw).map(|(a, b)| a * b).sum::<f64>() / (nb * nw);
                cos.clamp(-1.0, 1.0).acos().to_degrees()
            });
            let yr = (span > 0.0).then(|| (y[c.worst] - y[c.best]) / span);
            [Some(nb), Some(nw), angle, yr]
        })
        .collect()
}

pub fn angle(fo: &FeatureObject) -> Result<FeatureVector> {
    let started = Instant::now();
    let g = grid(fo, "cm_angle")?;
    let cells = angle_cells(fo, g);
    let mut values = Vec::new();
    for k in 0..4 {
        let v: Vec<f64> = cells.iter().filter_map(|c| c[k]).collect();
        values.extend(opts(aggregate_all(&v, &MEAN_SD)));
    }
    Ok(assemble("cm_angle", angle_names(), values, 0, started))
}

pub fn grad_names() -> Vec<String> {
    prefixed("cm_grad", &["mean", "sd"])
}

/// Gradient homogeneity of one cell: length of the sum of unit vectors from
/// each member to its nearest member, oriented toward the better point,
/// divided by the number of contributing members.
pub fn grad_cell(fo: &FeatureObject, members: &[usize]) -> Option<f64> {
    let y = fo.y();
    let d = fo.dim();
    let mut sum = vec![0.0; d];
    let mut used = 0usize;
    for &i in members {
        let mut nn: Option<(usize, f64)> = None;
        for &j in members {
            let dist = euclidean(fo.point(i), fo.point(j));
            if j != i && dist > 0.0 && nn.is_none_or(|(_, b)| dist < b) {
                nn = Some((j, dist));
            }
        }
        let Some((j, dist)) = nn else { continue };
        // toward the better point; equal objectives point to the lower index
        let toward_j = y[j] < y[i] || (y[j] == y[i] && j < i);
        let s = if toward_j { 1.0 } else { -1.0 };
        for (k, acc) in sum.iter_mut().enumerate() {
            *acc += s * (fo.point(j)[k] - fo.point(i)[k]) / dist;
        }
        used += 1;
    }
    (used >= 2).then(|| (sum.iter().map(|v| v * v).sum::<f64>().sqrt() / used as f64).min(1.0))
}

pub fn grad(fo: &FeatureObject) -> Result<FeatureVector> {
    let started = Instant::now();
    let g = grid(fo, "cm_grad")?;
    let v: Vec<f64> = g.cells().filter_map(|(_, m)| grad_cell(fo, m)).collect();
    let values = opts(aggregate_all(&v, &MEAN_SD)).collect();
    Ok(assemble("cm_grad", grad_names(), values, 0, started))
}

pub fn conv_names() -> Vec<String> {
    prefixed("cm_conv", &["convex.hard", "concave.hard", "convex.soft", "concave.soft"])
}

/// Counts over all triples of successive non-empty cells:
/// (triples, hard convex, hard concave, soft convex, soft concave).
pub fn conv_counts(g: &CellGrid, value: &dyn Fn(usize) -> Option<f64>) -> [usize; 5] {
    let dirs: Vec<Vec<i64>> = moore_offsets(g.dim())
        .into_iter()
        .filter(|v| v.iter().find(|&&c| c != 0) == Some(&1))
        .collect();
    let mut c = [0usize; 5];
    for mid in 0..g.total_cells() {
        let Some(ym) = value(mid) else { continue };
        let coords = g.coords(mid);
        for v in &dirs {
            let back: Vec<i64> = v.iter().map(|x| -x).collect();
            let (Some(a), Some(b)) = (g.offset(&coords, &back), g.offset(&coords, v)) else {
                continue;
            };
            let (Some(ya), Some(yb)) = (value(a), value(b)) else { continue };
            c[0] += 1;
            let avg = 0.5 * (ya + yb);
            c[1] += usize::from(ym < ya.min(yb));
            c[2] += usize::from(ym > ya.max(yb));
            c[3] += usize::from(ym < avg);
            c[4] += usize::from(ym > avg);
        }
    }
    c
}

pub fn conv(fo: &FeatureObject) -> Result<FeatureVector> {
    let started = Instant::now();
    let g = grid(fo, "cm_conv")?;
    if g.blocks().iter().any(|&b| b < 3) {
        return Err(invalid("cm_conv requires at least three blocks per dimension"));
    }
    let y = fo.y();
    let mut rep = vec![None; g.total_cells()];
    for s in cell_summaries(fo, g) {
        rep[s.cell] = Some(y[s.nearest_center]);
    }
    let c = conv_counts(g, &|cell| rep[cell]);
    let values = [c[1], c[2], c[3], c[4]]
        .iter()
        .map(|&k| {
            if c[0] == 0 {
                FeatureValue::Missing
            } else {
                FeatureValue::real(k as f64 / c[0] as f64)
            }
        })
        .collect();
    Ok(assemble("cm_conv", conv_names(), values, 0, started))
}
