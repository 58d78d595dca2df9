//! Gaussian discriminant classifiers and cross-validated error rates.
//!
//! `gmda` models each class by a two-component Gaussian mixture fitted with
//! EM; classes too small for a mixture fall back to a single Gaussian.

use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;

use crate::error::{invalid, Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassifierKind {
    Lda,
    Qda,
    Gmda,
}

impl ClassifierKind {
    pub fn id(self) -> &'static str {
        match self {
            ClassifierKind::Lda => "lda",
            ClassifierKind::Qda => "qda",
            ClassifierKind::Gmda => "gmda",
        }
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lda" => Ok(ClassifierKind::Lda),
            "qda" => Ok(ClassifierKind::Qda),
            "gmda" | "mda" => Ok(ClassifierKind::Gmda),
            _ => Err(invalid(format!("unknown classifier `{}`", s))),
        }
    }
}

const EM_ITERATIONS: usize = 50;
const EM_RIDGE: f64 = 1e-6;

/// A Gaussian with precomputed Cholesky factor. Log densities omit the
/// common `d/2 log 2π` term.
#[derive(Debug, Clone)]
struct Gaussian {
    mean: DVector<f64>,
    chol_l: DMatrix<f64>,
    log_det: f64,
}

fn regularized(cov: &DMatrix<f64>) -> DMatrix<f64> {
    let d = cov.nrows();
    let tr = cov.trace();
    let eps = if tr > 0.0 && tr.is_finite() { 1e-8 * tr / d as f64 } else { 1e-8 };
    cov + DMatrix::identity(d, d) * eps
}

impl Gaussian {
    fn new(mean: DVector<f64>, cov: &DMatrix<f64>) -> Option<Self> {
        let chol = regularized(cov).cholesky()?;
        let l = chol.l();
        let log_det = 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        if !log_det.is_finite() {
            return None;
        }
        Some(Gaussian {
            mean,
            chol_l: l,
            log_det,
        })
    }

    fn identity(mean: DVector<f64>) -> Self {
        let d = mean.len();
        Gaussian {
            mean,
            chol_l: DMatrix::identity(d, d),
            log_det: 0.0,
        }
    }

    fn log_density(&self, x: &DVector<f64>) -> f64 {
        let diff = x - &self.mean;
        let z = self
            .chol_l
            .solve_lower_triangular(&diff)
            .unwrap_or_else(|| diff.clone());
        -0.5 * (z.norm_squared() + self.log_det)
    }
}

fn mean_of(rows: &[&DVector<f64>], d: usize) -> DVector<f64> {
    let mut m = DVector::zeros(d);
    for r in rows {
        m += *r;
    }
    m / rows.len().max(1) as f64
}

fn scatter(rows: &[&DVector<f64>], mean: &DVector<f64>) -> DMatrix<f64> {
    let d = mean.len();
    let mut s = DMatrix::zeros(d, d);
    for r in rows {
        let diff = *r - mean;
        s += &diff * diff.transpose();
    }
    s
}

#[derive(Debug, Clone)]
struct ClassModel {
    label: usize,
    log_prior: f64,
    /// (log weight, component)
    components: Vec<(f64, Gaussian)>,
}

impl ClassModel {
    fn score(&self, x: &DVector<f64>) -> f64 {
        let logs: Vec<f64> = self
            .components
            .iter()
            .map(|(w, g)| w + g.log_density(x))
            .collect();
        let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.log_prior + m + logs.iter().map(|l| (l - m).exp()).sum::<f64>().ln()
    }
}

/// A fitted discriminant classifier.
#[derive(Debug, Clone)]
pub struct Classifier {
    pub kind: ClassifierKind,
    classes: Vec<ClassModel>,
}

impl Classifier {
    pub fn fit(x: &[Vec<f64>], labels: &[usize], kind: ClassifierKind) -> Result<Self> {
        if x.is_empty() || x.len() != labels.len() {
            return Err(invalid("classifier needs matching, non-empty data and labels"));
        }
        let d = x[0].len();
        let rows: Vec<DVector<f64>> = x.iter().map(|r| DVector::from_column_slice(r)).collect();
        let mut classes: Vec<usize> = labels.to_vec();
        classes.sort_unstable();
        classes.dedup();
        let n = x.len() as f64;

        let members: Vec<Vec<&DVector<f64>>> = classes
            .iter()
            .map(|&c| {
                rows.iter()
                    .zip(labels)
                    .filter(|(_, &l)| l == c)
                    .map(|(r, _)| r)
                    .collect()
            })
            .collect();
        let means: Vec<DVector<f64>> = members.iter().map(|m| mean_of(m, d)).collect();
        let dof = x.len() as i64 - classes.len() as i64;
        let pooled = if dof > 0 {
            let mut s = DMatrix::zeros(d, d);
            for (m, mu) in members.iter().zip(&means) {
                s += scatter(m, mu);
            }
            Some(s / dof as f64)
        } else {
            None
        };
        let pooled_gaussian = |mean: DVector<f64>| -> Gaussian {
            pooled
                .as_ref()
                .and_then(|p| Gaussian::new(mean.clone(), p))
                .unwrap_or_else(|| Gaussian::identity(mean))
        };

        let mut models = Vec::with_capacity(classes.len());
        for ((&c, m), mu) in classes.iter().zip(&members).zip(&means) {
            let single = |mu: &DVector<f64>| -> Gaussian {
                if m.len() >= 2 {
                    let cov = scatter(m, mu) / (m.len() - 1) as f64;
                    if let Some(g) = Gaussian::new(mu.clone(), &cov) {
                        return g;
                    }
                }
                pooled_gaussian(mu.clone())
            };
            let components = match kind {
                ClassifierKind::Lda => vec![(0.0, pooled_gaussian(mu.clone()))],
                ClassifierKind::Qda => vec![(0.0, single(mu))],
                ClassifierKind::Gmda => {
                    fit_mixture(m, d).unwrap_or_else(|| vec![(0.0, single(mu))])
                }
            };
            models.push(ClassModel {
                label: c,
                log_prior: (m.len() as f64 / n).ln(),
                components,
            });
        }
        Ok(Classifier {
            kind,
            classes: models,
        })
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        let v = DVector::from_column_slice(x);
        let mut best = (self.classes[0].label, f64::NEG_INFINITY);
        for m in &self.classes {
            let s = m.score(&v);
            if s > best.1 {
                best = (m.label, s);
            }
        }
        best.0
    }

    /// Class priors in ascending label order.
    pub fn priors(&self) -> Vec<f64> {
        self.classes.iter().map(|m| m.log_prior.exp()).collect()
    }
}

/// Two-component EM with farthest-point initialization. `None` when the
/// class is too small or a component collapses.
fn fit_mixture(rows: &[&DVector<f64>], d: usize) -> Option<Vec<(f64, Gaussian)>> {
    let n = rows.len();
    if n < 2 * (d + 1) {
        return None;
    }
    let mu = mean_of(rows, d);
    let far = |from: &DVector<f64>| -> usize {
        let mut best = (0, -1.0);
        for (i, r) in rows.iter().enumerate() {
            let dist = (*r - from).norm_squared();
            if dist > best.1 {
                best = (i, dist);
            }
        }
        best.0
    };
    let a = far(&mu);
    let b = far(rows[a]);
    if a == b {
        return None;
    }
    let mut resp: Vec<[f64; 2]> = rows
        .iter()
        .map(|r| {
            if (*r - rows[a]).norm_squared() <= (*r - rows[b]).norm_squared() {
                [1.0, 0.0]
            } else {
                [0.0, 1.0]
            }
        })
        .collect();
    let mut comps: Vec<(f64, Gaussian)> = Vec::new();
    for _ in 0..EM_ITERATIONS {
        comps.clear();
        for k in 0..2 {
            let nk: f64 = resp.iter().map(|r| r[k]).sum();
            if nk < 1.0 {
                return None;
            }
            let mut mean = DVector::zeros(d);
            for (r, w) in rows.iter().zip(&resp) {
                mean += *r * w[k];
            }
            mean /= nk;
            let mut cov = DMatrix::zeros(d, d);
            for (r, w) in rows.iter().zip(&resp) {
                let diff = *r - &mean;
                cov += &diff * diff.transpose() * w[k];
            }
            cov /= nk;
            cov += DMatrix::identity(d, d) * EM_RIDGE;
            comps.push(((nk / n as f64).ln(), Gaussian::new(mean, &cov)?));
        }
        for (r, w) in rows.iter().zip(resp.iter_mut()) {
            let l0 = comps[0].0 + comps[0].1.log_density(r);
            let l1 = comps[1].0 + comps[1].1.log_density(r);
            let m = l0.max(l1);
            let (e0, e1) = ((l0 - m).exp(), (l1 - m).exp());
            *w = [e0 / (e0 + e1), e1 / (e0 + e1)];
        }
    }
    Some(comps)
}

/// Stratified fold ids in `0..folds`, shuffled within each class. Rows are
/// put in canonical order first so the assignment follows the data, not its
/// row order.
pub fn stratified_folds(x: &[Vec<f64>], labels: &[usize], folds: usize, seed: u64) -> Vec<usize> {
    let mut r = rng::stream(seed, "cv_folds");
    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let mut out = vec![0; labels.len()];
    let mut next = 0usize;
    for c in classes {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        idx.sort_by(|&a, &b| {
            x[a].iter()
                .zip(&x[b])
                .map(|(p, q)| p.total_cmp(q))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        idx.shuffle(&mut r);
        for i in idx {
            out[i] = next % folds;
            next += 1;
        }
    }
    out
}

/// Mean misclassification error over stratified cross-validation folds.
pub fn cross_validated_mmce(
    x: &[Vec<f64>],
    labels: &[usize],
    kind: ClassifierKind,
    folds: usize,
    seed: u64,
) -> Result<f64> {
    let n = x.len();
    if n != labels.len() {
        return Err(invalid("data and labels differ in length"));
    }
    let mut distinct = labels.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(invalid("cross-validation needs at least two classes"));
    }
    if folds < 2 || n < folds {
        return Err(invalid(format!("cannot split {} observations into {} folds", n, folds)));
    }
    let fold = stratified_folds(x, labels, folds, seed);
    let mut errors = Vec::with_capacity(folds);
    for k in 0..folds {
        let (mut tx, mut ty, mut vx, mut vy) = (vec![], vec![], vec![], vec![]);
        for i in 0..n {
            if fold[i] == k {
                vx.push(x[i].clone());
                vy.push(labels[i]);
            } else {
                tx.push(x[i].clone());
                ty.push(labels[i]);
            }
        }
        if vx.is_empty() {
            continue;
        }
        let model = Classifier::fit(&tx, &ty, kind)?;
        let wrong = vx.iter().zip(&vy).filter(|(p, &l)| model.predict(p) != l).count();
        errors.push(wrong as f64 / vx.len() as f64);
    }
    Ok(errors.iter().sum::<f64>() / errors.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn blobs(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let c = i % 2;
            let shift = if c == 0 { -5.0 } else { 5.0 };
            let a: f64 = StandardNormal.sample(&mut r);
            let b: f64 = StandardNormal.sample(&mut r);
            x.push(vec![a + shift, b]);
            y.push(c);
        }
        (x, y)
    }

    #[test]
    fn separated_blobs() {
        let (x, y) = blobs(200, 1);
        let e = cross_validated_mmce(&x, &y, ClassifierKind::Lda, 10, 1).unwrap();
        assert!(e <= 0.02);
        // the fitted rule applied directly to the training data
        let m = Classifier::fit(&x, &y, ClassifierKind::Lda).unwrap();
        let wrong = x.iter().zip(&y).filter(|(p, &l)| m.predict(p) != l).count();
        assert!(wrong as f64 / 200.0 <= 0.02);
        assert!((m.priors().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_labels_are_near_chance() {
        let mut r = ChaCha8Rng::seed_from_u64(4);
        let x: Vec<Vec<f64>> = (0..400).map(|_| vec![r.random(), r.random()]).collect();
        let y: Vec<usize> = (0..400).map(|_| r.random_range(0..2)).collect();
        for k in [ClassifierKind::Lda, ClassifierKind::Qda, ClassifierKind::Gmda] {
            let e = cross_validated_mmce(&x, &y, k, 10, 2).unwrap();
            assert!((e - 0.5).abs() <= 0.1, "{:?} {}", k, e);
        }
    }

    #[test]
    fn xor_favours_quadratic_boundaries() {
        let mut r = ChaCha8Rng::seed_from_u64(8);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for _ in 0..400 {
            let a: f64 = r.random_range(-1.0..1.0);
            let b: f64 = r.random_range(-1.0..1.0);
            x.push(vec![a, b]);
            y.push(usize::from(a * b > 0.0));
        }
        let lda = cross_validated_mmce(&x, &y, ClassifierKind::Lda, 10, 3).unwrap();
        let qda = cross_validated_mmce(&x, &y, ClassifierKind::Qda, 10, 3).unwrap();
        let gmda = cross_validated_mmce(&x, &y, ClassifierKind::Gmda, 10, 3).unwrap();
        assert!(lda > qda, "lda {} qda {}", lda, qda);
        assert!(gmda < lda);
    }

    #[test]
    fn row_permutation_invariance() {
        let (x, y) = blobs(60, 3);
        let mut x2 = Vec::new();
        let mut y2 = Vec::new();
        let perm: Vec<usize> = (0..60).rev().collect();
        for &i in &perm {
            x2.push(x[i].clone());
            y2.push(y[i]);
        }
        for k in [ClassifierKind::Lda, ClassifierKind::Qda, ClassifierKind::Gmda] {
            let a = cross_validated_mmce(&x, &y, k, 10, 7).unwrap();
            let b = cross_validated_mmce(&x2, &y2, k, 10, 7).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn fold_losing_a_class_does_not_abort() {
        let x: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let mut y = vec![0; 12];
        y[11] = 1;
        let e = cross_validated_mmce(&x, &y, ClassifierKind::Qda, 10, 1).unwrap();
        assert!((0.0..=1.0).contains(&e));
    }

    #[test]
    fn strata_are_balanced() {
        let y: Vec<usize> = (0..100).map(|i| usize::from(i < 30)).collect();
        let x: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64]).collect();
        let f = stratified_folds(&x, &y, 10, 5);
        for k in 0..10 {
            let ones = (0..100).filter(|&i| f[i] == k && y[i] == 1).count();
            assert_eq!(ones, 3);
        }
    }
}
