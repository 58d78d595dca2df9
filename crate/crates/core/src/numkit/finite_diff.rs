//! Gradient and Hessian by finite differences that stay inside the box.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

#[derive(Debug, Clone)]
pub struct FdEstimate {
    pub f0: f64,
    /// NaN where the coordinate has no room for a stencil.
    pub gradient: Vec<f64>,
    pub hessian: DMatrix<f64>,
    pub steps: Vec<f64>,
    pub evals: usize,
}

/// Stencil on one coordinate, as multiples of its step.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Stencil {
    Central,
    Forward,
    Backward,
    None,
}

fn stencil(x: f64, h: f64, lo: f64, hi: f64) -> Stencil {
    if !(h > 0.0) {
        Stencil::None
    } else if x - h >= lo && x + h <= hi {
        Stencil::Central
    } else if x + 3.0 * h <= hi {
        Stencil::Forward
    } else if x - 3.0 * h >= lo {
        Stencil::Backward
    } else {
        Stencil::None
    }
}

/// Per-coordinate step `step * (upper - lower)`, or `step * max(1, |x|)` on
/// axes with an infinite bound.
pub fn steps(x: &[f64], lower: &[f64], upper: &[f64], step: f64) -> Vec<f64> {
    x.iter()
        .zip(lower.iter().zip(upper))
        .map(|(&xi, (&lo, &hi))| {
            let r = hi - lo;
            if r.is_finite() {
                step * r
            } else {
                step * xi.abs().max(1.0)
            }
        })
        .collect()
}

pub fn fd_gradient_hessian(
    f: &dyn Fn(&[f64]) -> f64,
    x: &[f64],
    lower: &[f64],
    upper: &[f64],
    step: f64,
) -> FdEstimate {
    let d = x.len();
    let h = steps(x, lower, upper, step);
    let kinds: Vec<Stencil> = (0..d).map(|i| stencil(x[i], h[i], lower[i], upper[i])).collect();
    let mut cache: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
    let mut eval = |off: &[i64]| -> f64 {
        if let Some(&v) = cache.get(off) {
            return v;
        }
        let p: Vec<f64> = (0..d)
            .map(|i| (x[i] + off[i] as f64 * h[i]).clamp(lower[i], upper[i]))
            .collect();
        let v = f(&p);
        cache.insert(off.to_vec(), v);
        v
    };
    let unit = |i: usize, k: i64| -> Vec<i64> {
        let mut o = vec![0i64; d];
        o[i] = k;
        o
    };
    let zero = vec![0i64; d];
    let f0 = eval(&zero);

    let mut gradient = vec![f64::NAN; d];
    let mut hessian = DMatrix::from_element(d, d, f64::NAN);
    for i in 0..d {
        let hi = h[i];
        match kinds[i] {
            Stencil::Central => {
                let fp = eval(&unit(i, 1));
                let fm = eval(&unit(i, -1));
                gradient[i] = (fp - fm) / (2.0 * hi);
                hessian[(i, i)] = (fp - 2.0 * f0 + fm) / (hi * hi);
            }
            Stencil::Forward | Stencil::Backward => {
                let s: i64 = if kinds[i] == Stencil::Forward { 1 } else { -1 };
                let f1 = eval(&unit(i, s));
                let f2 = eval(&unit(i, 2 * s));
                let f3 = eval(&unit(i, 3 * s));
                gradient[i] = s as f64 * (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * hi);
                hessian[(i, i)] = (2.0 * f0 - 5.0 * f1 + 4.0 * f2 - f3) / (hi * hi);
            }
            Stencil::None => {}
        }
    }
    // offsets (a, b) with b > a per coordinate for the mixed terms
    let pair = |k: Stencil| -> Option<(i64, i64)> {
        match k {
            Stencil::Central => Some((-1, 1)),
            Stencil::Forward => Some((0, 1)),
            Stencil::Backward => Some((-1, 0)),
            Stencil::None => None,
        }
    };
    for i in 0..d {
        for j in i + 1..d {
            let (Some((ai, bi)), Some((aj, bj))) = (pair(kinds[i]), pair(kinds[j])) else {
                continue;
            };
            let at = |oi: i64, oj: i64| {
                let mut o = vec![0i64; d];
                o[i] = oi;
                o[j] = oj;
                o
            };
            let v = (eval(&at(bi, bj)) - eval(&at(bi, aj)) - eval(&at(ai, bj))
                + eval(&at(ai, aj)))
                / ((bi - ai) as f64 * h[i] * (bj - aj) as f64 * h[j]);
            hessian[(i, j)] = v;
            hessian[(j, i)] = v;
        }
    }
    let evals = cache.len();
    FdEstimate {
        f0,
        gradient,
        hessian,
        steps: h,
        evals,
    }
}
