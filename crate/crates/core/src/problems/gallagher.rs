//! Seeded multi-peak landscape in the style of Gallagher's Gaussian peaks:
//! 101 rotated, ill-conditioned Gaussian peaks, one global and 100 local,
//! turned into a minimization problem with an oscillating transformation.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::rng;

pub const PEAKS: usize = 101;

#[derive(Debug, Clone)]
pub struct Gallagher {
    pub dim: usize,
    pub seed: u64,
    rotation: DMatrix<f64>,
    /// Peak centres; the first one is global.
    pub centers: Vec<DVector<f64>>,
    pub weights: Vec<f64>,
    /// Diagonal scalings per peak, applied in the rotated frame.
    scales: Vec<DVector<f64>>,
}

fn random_rotation(d: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Monotone oscillation applied to the raw value.
fn t_osz(v: f64) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    let h = v.abs().ln();
    let (c1, c2) = if v > 0.0 { (10.0, 7.9) } else { (5.5, 3.1) };
    v.signum() * (h + 0.049 * ((c1 * h).sin() + (c2 * h).sin())).exp()
}

impl Gallagher {
    pub fn new(dim: usize, seed: u64) -> Self {
        let mut r = rng::stream(seed, "gallagher101");
        let rotation = random_rotation(dim, &mut r);
        let mut conds: Vec<f64> = (0..PEAKS - 1)
            .map(|j| 1000f64.powf(2.0 * j as f64 / (PEAKS - 2) as f64))
            .collect();
        conds.shuffle(&mut r);
        conds.insert(0, 1000.0);
        let mut centers = Vec::with_capacity(PEAKS);
        let mut weights = Vec::with_capacity(PEAKS);
        let mut scales = Vec::with_capacity(PEAKS);
        for (i, &alpha) in conds.iter().enumerate() {
            let span = if i == 0 { 4.0 } else { 4.9 };
            centers.push(DVector::from_fn(dim, |_, _| r.random_range(-span..span)));
            weights.push(if i == 0 {
                10.0
            } else {
                1.1 + 8.0 * (i - 1) as f64 / (PEAKS - 2) as f64
            });
            let mut diag: Vec<f64> = (0..dim)
                .map(|k| {
                    let e = if dim > 1 { k as f64 / (dim - 1) as f64 } else { 0.0 };
                    alpha.powf(0.5 * e) / alpha.powf(0.25)
                })
                .collect();
            diag.shuffle(&mut r);
            scales.push(DVector::from_vec(diag));
        }
        Gallagher {
            dim,
            seed,
            rotation,
            centers,
            weights,
            scales,
        }
    }

    pub fn optimum(&self) -> Vec<f64> {
        self.centers[0].iter().copied().collect()
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let x = DVector::from_column_slice(x);
        let mut best = 0.0f64;
        for ((c, w), s) in self.centers.iter().zip(&self.weights).zip(&self.scales) {
            let z = &self.rotation * (&x - c);
            let q: f64 = z.iter().zip(s.iter()).map(|(a, b)| b * a * a).sum();
            best = best.max(w * (-q / (2.0 * self.dim as f64)).exp());
        }
        let pen: f64 = x.iter().map(|v| (v.abs() - 5.0).max(0.0).powi(2)).sum();
        t_osz(10.0 - best).powi(2) + pen
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let a = Gallagher::new(2, 2);
        let b = Gallagher::new(2, 2);
        let c = Gallagher::new(2, 3);
        let x = [0.3, -1.7];
        assert_eq!(a.evaluate(&x), b.evaluate(&x));
        assert_ne!(a.evaluate(&x), c.evaluate(&x));
        assert_eq!(a.centers.len(), PEAKS);
    }

    #[test]
    fn global_peak_is_optimal() {
        let g = Gallagher::new(3, 5);
        let opt = g.optimum();
        assert!(g.evaluate(&opt).abs() < 1e-12);
        assert!(opt.iter().all(|v| v.abs() <= 4.0));
        for c in g.centers.iter().skip(1) {
            let v: Vec<f64> = c.iter().copied().collect();
            assert!(g.evaluate(&v) > 0.0);
        }
    }

    #[test]
    fn rotation_is_orthogonal() {
        let mut r = rng::stream(1, "t");
        let q = random_rotation(4, &mut r);
        let e = &q.transpose() * &q - DMatrix::identity(4, 4);
        assert!(e.amax() < 1e-12);
    }

    #[test]
    fn oscillation_keeps_order_and_sign() {
        assert_eq!(t_osz(0.0), 0.0);
        assert_eq!(t_osz(1.0), 1.0);
        assert!(t_osz(-2.0) < 0.0);
        let v: Vec<f64> = (1..200).map(|i| t_osz(i as f64 * 0.05)).collect();
        assert!(v.windows(2).all(|w| w[1] > w[0]));
    }
}
