//! Information content of the fitness sequence along a tour through the
//! sample. Each step's slope is turned into a symbol from {-1, 0, 1} under a
//! sensitivity threshold ε; entropy and partial information of the symbol
//! sequence are then traced over a grid of ε values.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{assemble, prefixed};
use crate::control::Control;
use crate::error::{invalid, Error, Result};
use crate::feature::{FeatureValue, FeatureVector};
use crate::numkit::stats::euclidean;
use crate::object::FeatureObject;
use crate::rng;

const PREFIX: &str = "ic";

pub fn names() -> Vec<String> {
    prefixed(PREFIX, &["h.max", "eps.s", "eps.max", "eps.ratio", "m0"])
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolSequence {
    /// Visiting order of all sample indices.
    pub tour: Vec<usize>,
    /// Slope of every step between consecutive distinct tour points.
    pub slopes: Vec<f64>,
}

impl SymbolSequence {
    /// Slopes along an explicit walk; points equal to their predecessor are
    /// skipped.
    pub fn from_tour(points: &[Vec<f64>], y: &[f64], tour: Vec<usize>) -> Self {
        let mut slopes = Vec::with_capacity(tour.len().saturating_sub(1));
        let mut prev = tour.first().copied();
        for &i in tour.iter().skip(1) {
            let p = prev.unwrap();
            let step = euclidean(&points[p], &points[i]);
            if step == 0.0 {
                continue;
            }
            slopes.push((y[i] - y[p]) / step);
            prev = Some(i);
        }
        SymbolSequence { tour, slopes }
    }

    pub fn symbols(&self, eps: f64) -> Vec<i8> {
        symbols(&self.slopes, eps)
    }
}

pub fn symbols(slopes: &[f64], eps: f64) -> Vec<i8> {
    slopes
        .iter()
        .map(|&s| {
            if s > eps {
                1
            } else if s < -eps {
                -1
            } else {
                0
            }
        })
        .collect()
}

/// Greedy nearest-neighbour tour from `start`; distance ties go to the lower
/// index.
pub fn nearest_neighbor_tour(points: &[Vec<f64>], start: usize) -> Vec<usize> {
    let n = points.len();
    let mut visited = vec![false; n];
    let mut tour = Vec::with_capacity(n);
    let mut cur = start;
    visited[cur] = true;
    tour.push(cur);
    for _ in 1..n {
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        for j in 0..n {
            if !visited[j] {
                let d = euclidean(&points[cur], &points[j]);
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
        }
        visited[best] = true;
        tour.push(best);
        cur = best;
    }
    tour
}

pub fn build_symbol_sequence(fo: &FeatureObject, seed: u64) -> Result<SymbolSequence> {
    let n = fo.n_obs();
    if n < 3 {
        return Err(invalid("ic needs at least 3 observations"));
    }
    let start = rng::stream(seed, "ic").random_range(0..n);
    let tour = nearest_neighbor_tour(fo.points(), start);
    Ok(SymbolSequence::from_tour(fo.points(), fo.y(), tour))
}

/// Entropy of the blocks `ab` with `a != b`, in base 6.
pub fn entropy(sym: &[i8]) -> f64 {
    if sym.len() < 2 {
        return 0.0;
    }
    let mut counts = [[0usize; 3]; 3];
    for w in sym.windows(2) {
        counts[(w[0] + 1) as usize][(w[1] + 1) as usize] += 1;
    }
    let total = (sym.len() - 1) as f64;
    let mut h = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            if a != b && counts[a][b] > 0 {
                let p = counts[a][b] as f64 / total;
                h -= p * p.log(6.0);
            }
        }
    }
    h
}

/// Length of the sequence with zeros removed and repeats collapsed, relative
/// to the sequence length.
pub fn partial_information(sym: &[i8]) -> f64 {
    if sym.is_empty() {
        return 0.0;
    }
    let mut last = 0i8;
    let mut len = 0usize;
    for &s in sym {
        if s != 0 && s != last {
            len += 1;
            last = s;
        }
    }
    len as f64 / sym.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub eps_min: f64,
    pub eps_max: f64,
    pub steps: usize,
    pub settling: f64,
    pub partial_ratio: f64,
}

impl Settings {
    pub fn from_control(control: &Control) -> Result<Self> {
        let s = Settings {
            eps_min: control.f64_or("ic.epsilon_min", 1e-5)?,
            eps_max: control.f64_or("ic.epsilon_max", 1e15)?,
            steps: control.usize_or("ic.epsilon_steps", 1000)?,
            settling: control.f64_or("ic.settling_threshold", 0.05)?,
            partial_ratio: control.f64_or("ic.partial_ratio", 0.5)?,
        };
        let bad = |key: &str, reason: &str| Error::InvalidControl {
            key: key.to_string(),
            reason: reason.to_string(),
        };
        if !(s.eps_min > 0.0 && s.eps_max > s.eps_min) {
            return Err(bad("ic.epsilon_min", "need 0 < epsilon_min < epsilon_max"));
        }
        if s.steps < 2 {
            return Err(bad("ic.epsilon_steps", "need at least 2 steps"));
        }
        Ok(s)
    }

    /// `0` followed by `steps` log-spaced values.
    pub fn grid(&self) -> Vec<f64> {
        let (a, b) = (self.eps_min.log10(), self.eps_max.log10());
        let k = (self.steps - 1) as f64;
        std::iter::once(0.0)
            .chain((0..self.steps).map(|i| 10f64.powf(a + (b - a) * i as f64 / k)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ICCurves {
    pub eps: Vec<f64>,
    pub h: Vec<f64>,
    pub m: Vec<f64>,
    pub h_max: f64,
    /// log10 of the settling sensitivity.
    pub eps_s: Option<f64>,
    /// ε at which H peaks first.
    pub eps_max: f64,
    /// log10 of the partial information sensitivity.
    pub eps_ratio: Option<f64>,
    pub m0: f64,
}

pub fn curves_from(seq: &SymbolSequence, settings: &Settings) -> ICCurves {
    let eps = settings.grid();
    let hm: Vec<(f64, f64)> = eps
        .par_iter()
        .map(|&e| {
            let s = seq.symbols(e);
            (entropy(&s), partial_information(&s))
        })
        .collect();
    let (h, m): (Vec<f64>, Vec<f64>) = hm.into_iter().unzip();
    let mut arg = 0;
    for i in 1..h.len() {
        if h[i] > h[arg] {
            arg = i;
        }
    }
    let m0 = m[0];
    let positive_log = |e: f64| (e > 0.0).then(|| e.log10());
    let eps_s = (0..eps.len())
        .find(|&i| h[i] < settings.settling)
        .and_then(|i| positive_log(eps[i]));
    let eps_ratio = (0..eps.len())
        .rev()
        .find(|&i| m[i] > settings.partial_ratio * m0)
        .and_then(|i| positive_log(eps[i]));
    ICCurves {
        h_max: h[arg],
        eps_max: eps[arg],
        eps_s,
        eps_ratio,
        m0,
        eps,
        h,
        m,
    }
}

pub fn ic_curves(fo: &FeatureObject, control: &Control, seed: u64) -> Result<ICCurves> {
    let settings = Settings::from_control(control)?;
    let seed = control.u64_or("ic.seed", seed)?;
    let seq = build_symbol_sequence(fo, seed)?;
    Ok(curves_from(&seq, &settings))
}

pub fn compute(fo: &FeatureObject, control: &Control, seed: u64) -> Result<FeatureVector> {
    let started = Instant::now();
    let c = ic_curves(fo, control, seed)?;
    let values = vec![
        FeatureValue::real(c.h_max),
        FeatureValue::opt(c.eps_s),
        FeatureValue::real(c.eps_max),
        FeatureValue::opt(c.eps_ratio),
        FeatureValue::real(c.m0),
    ];
    Ok(assemble(PREFIX, names(), values, 0, started))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::testutil::uniform;
    use proptest::prelude::*;
    use std::collections::HashMap;

    fn line(y: &[f64]) -> SymbolSequence {
        let x: Vec<Vec<f64>> = (0..y.len()).map(|i| vec![i as f64]).collect();
        SymbolSequence::from_tour(&x, y, (0..y.len()).collect())
    }

    #[test]
    fn hand_sequence() {
        let seq = line(&[0.0, 1.0, 0.0, 1.0]);
        let s = seq.symbols(0.0);
        assert_eq!(s, vec![1, -1, 1]);
        assert!((entropy(&s) - 2f64.ln() / 6f64.ln()).abs() < 1e-15);
        assert_eq!(partial_information(&s), 1.0);
        let s2 = seq.symbols(2.0);
        assert_eq!(entropy(&s2), 0.0);
        assert_eq!(partial_information(&s2), 0.0);
        let c = curves_from(&seq, &Settings::from_control(&Control::default()).unwrap());
        assert_eq!(c.h[0], entropy(&s));
        assert_eq!(c.m0, 1.0);
    }

    #[test]
    fn constant_function() {
        let x = uniform(50, 2, 0.0, 1.0, 1);
        let fo = FeatureObject::builder(x, vec![2.0; 50]).build().unwrap();
        let c = ic_curves(&fo, &Control::default(), 3).unwrap();
        assert!(c.h.iter().all(|&v| v == 0.0));
        assert!(c.m.iter().all(|&v| v == 0.0));
        assert_eq!(c.eps_s, None);
        assert_eq!(c.eps_ratio, None);
        let fv = compute(&fo, &Control::default(), 3).unwrap();
        assert_eq!(fv.value("ic.h.max"), Some(0.0));
        assert_eq!(fv.value("ic.m0"), Some(0.0));
        assert_eq!(fv.len(), 7);
    }

    #[test]
    fn sorted_line_tour() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 * 0.5]).collect();
        assert_eq!(nearest_neighbor_tour(&x, 0), (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn duplicates_are_skipped() {
        let x = vec![vec![0.0], vec![0.0], vec![1.0], vec![2.0]];
        let seq = SymbolSequence::from_tour(&x, &[0.0, 5.0, 1.0, 0.0], vec![0, 1, 2, 3]);
        assert_eq!(seq.slopes, vec![1.0, -1.0]);
    }

    #[test]
    fn entropy_is_not_monotone_in_eps() {
        // rising ε turns the middle step into a 0 and creates new blocks
        let s = vec![5.0, 0.5, 5.0];
        assert_eq!(entropy(&symbols(&s, 0.0)), 0.0);
        assert!(entropy(&symbols(&s, 1.0)) > 0.0);
    }

    #[test]
    fn features_match_curve_markers() {
        let x = uniform(200, 2, -5.0, 5.0, 6);
        let y: Vec<f64> = x.iter().map(|p| (p[0] * 2.0).sin() * 10.0 + p[1] * p[1]).collect();
        let fo = FeatureObject::builder(x, y).build().unwrap();
        let c = ic_curves(&fo, &Control::default(), 11).unwrap();
        let fv = compute(&fo, &Control::default(), 11).unwrap();
        assert_eq!(fv.value("ic.h.max"), Some(c.h_max));
        assert_eq!(fv.value("ic.eps.s"), c.eps_s);
        assert_eq!(fv.value("ic.eps.max"), Some(c.eps_max));
        assert_eq!(fv.value("ic.eps.ratio"), c.eps_ratio);
        assert_eq!(fv.value("ic.m0"), Some(c.m0));
        assert_eq!(c.eps.len(), 1001);
        let tour = build_symbol_sequence(&fo, 11).unwrap().tour;
        let mut sorted = tour.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..200).collect::<Vec<_>>());
    }

    fn entropy_oracle(sym: &[i8]) -> f64 {
        let blocks: Vec<(i8, i8)> = sym.windows(2).map(|w| (w[0], w[1])).collect();
        let mut freq: HashMap<(i8, i8), usize> = HashMap::new();
        for b in &blocks {
            *freq.entry(*b).or_default() += 1;
        }
        -freq
            .iter()
            .filter(|(b, _)| b.0 != b.1)
            .map(|(_, &c)| {
                let p = c as f64 / blocks.len() as f64;
                p * p.ln() / 6f64.ln()
            })
            .sum::<f64>()
    }

    proptest! {
        #[test]
        fn entropy_matches_oracle(sym in prop::collection::vec(-1i8..=1, 2..50)) {
            let h = entropy(&sym);
            prop_assert!((h - entropy_oracle(&sym)).abs() < 1e-12);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&h));
            let m = partial_information(&sym);
            prop_assert!((0.0..=1.0).contains(&m));
        }

        #[test]
        fn partial_information_is_monotone(
            slopes in prop::collection::vec(-100.0f64..100.0, 2..60),
            mut eps in prop::collection::vec(0.0f64..150.0, 2..10),
        ) {
            eps.sort_by(f64::total_cmp);
            let m: Vec<f64> = eps.iter().map(|&e| partial_information(&symbols(&slopes, e))).collect();
            for w in m.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-15);
            }
        }

        #[test]
        fn objective_scaling_shifts_eps(
            ys in prop::collection::vec(-10.0f64..10.0, 5..40),
            c in 0.1f64..100.0,
            e in 0.001f64..20.0,
        ) {
            let a = line(&ys);
            let scaled: Vec<f64> = ys.iter().map(|v| v * c).collect();
            let b = line(&scaled);
            // symbols agree away from the exact threshold
            prop_assume!(a.slopes.iter().all(|s| ((s.abs() - e) / e).abs() > 1e-9));
            prop_assert_eq!(entropy(&b.symbols(e * c)), entropy(&a.symbols(e)));
            prop_assert_eq!(partial_information(&b.symbols(0.0)), partial_information(&a.symbols(0.0)));
        }
    }
}
