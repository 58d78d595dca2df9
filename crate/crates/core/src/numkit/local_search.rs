//! Box-constrained Nelder-Mead.

use std::cell::Cell;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LocalOptimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
}

const TOL: f64 = 1e-8;

fn initial_step(lo: f64, hi: f64, x: f64) -> f64 {
    let r = hi - lo;
    if r.is_finite() {
        0.05 * r
    } else {
        0.05 * x.abs().max(1.0)
    }
}

fn clamp(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, &lo), &hi) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.clamp(lo, hi);
    }
}

/// Minimizes `f` from `x0`, never evaluating outside `[lower, upper]` and
/// never exceeding `budget` evaluations.
pub fn local_search(
    f: &dyn Fn(&[f64]) -> f64,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    budget: usize,
) -> Result<LocalOptimum> {
    let d = x0.len();
    if budget < d + 1 {
        return Err(invalid(format!(
            "local search budget {} is below d + 1 = {}",
            budget,
            d + 1
        )));
    }
    if x0.iter().zip(lower).zip(upper).any(|((x, lo), hi)| x < lo || x > hi) {
        return Err(invalid("local search start lies outside the bounds"));
    }
    let counter = Cell::new(0usize);
    let evals = || counter.get();
    let eval = |x: &[f64]| {
        counter.set(counter.get() + 1);
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for i in 0..d {
        let mut x = x0.to_vec();
        let h = initial_step(lower[i], upper[i], x0[i]);
        x[i] = if x0[i] + h <= upper[i] { x0[i] + h } else { x0[i] - h };
        clamp(&mut x, lower, upper);
        let fx = eval(&x);
        simplex.push((x, fx));
    }

    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].0.clone();
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| super::stats::euclidean(x, &best))
            .fold(0.0, f64::max);
        if diameter < TOL || evals() >= budget {
            break;
        }
        let centroid: Vec<f64> = (0..d)
            .map(|j| simplex[..d].iter().map(|(x, _)| x[j]).sum::<f64>() / d as f64)
            .collect();
        let worst = simplex[d].clone();
        let along = |t: f64| -> Vec<f64> {
            let mut x: Vec<f64> = centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + t * (c - w))
                .collect();
            clamp(&mut x, lower, upper);
            x
        };
        let xr = along(1.0);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            if evals() < budget {
                let xe = along(2.0);
                let fe = eval(&xe);
                simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else {
                simplex[d] = (xr, fr);
            }
            continue;
        }
        if fr < simplex[d - 1].1 {
            simplex[d] = (xr, fr);
            continue;
        }
        if evals() >= budget {
            if fr < worst.1 {
                simplex[d] = (xr, fr);
            }
            continue;
        }
        let (xc, fc) = if fr < worst.1 {
            let x = along(0.5);
            let v = eval(&x);
            (x, v)
        } else {
            let x = along(-0.5);
            let v = eval(&x);
            (x, v)
        };
        if fc < worst.1.min(fr) {
            simplex[d] = (xc, fc);
            continue;
        }
        // shrink toward the best vertex
        for k in 1..=d {
            if evals() >= budget {
                break;
            }
            let x: Vec<f64> = best
                .iter()
                .zip(&simplex[k].0)
                .map(|(b, v)| b + 0.5 * (v - b))
                .collect();
            let v = eval(&x);
            simplex[k] = (x, v);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, fx) = simplex.swap_remove(0);
    Ok(LocalOptimum {
        x,
        f: fx,
        evals: evals(),
    })
}
