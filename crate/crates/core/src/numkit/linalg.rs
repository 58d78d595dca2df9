//! Least squares via column-pivoted Householder QR, and symmetric
//! eigendecomposition.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    /// One coefficient per design column; zero for dropped columns.
    pub coefficients: Vec<f64>,
    /// Columns found linearly dependent on earlier pivots.
    pub dropped: Vec<bool>,
    pub rank: usize,
    pub residuals: Vec<f64>,
    pub r_squared: f64,
    /// `None` when no residual degrees of freedom remain and the fit is not exact.
    pub adjusted_r_squared: Option<f64>,
}

impl LinearFit {
    pub fn is_rank_deficient(&self) -> bool {
        self.dropped.iter().any(|&d| d)
    }
}

/// Relative pivot threshold below which a column counts as dependent.
const RANK_TOL: f64 = 1e-10;

/// Ordinary least squares on a row-major design (`rows` x `cols`). The first
/// column is assumed to be the intercept when computing R².
pub fn fit_least_squares(design: &[Vec<f64>], y: &[f64]) -> Result<LinearFit> {
    let m = design.len();
    if m != y.len() {
        return Err(invalid("design rows and response length differ"));
    }
    let n = design.first().map_or(0, Vec::len);
    if n == 0 {
        return Err(invalid("design has no columns"));
    }
    if m < n {
        return Err(invalid(format!(
            "least squares needs at least as many rows ({}) as columns ({})",
            m, n
        )));
    }
    let mut a = DMatrix::from_fn(m, n, |i, j| design[i][j]);
    let mut b: Vec<f64> = y.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut norms: Vec<f64> = (0..n).map(|j| a.column(j).norm_squared()).collect();
    let mut rank = 0;
    let mut r00 = 0.0;

    for k in 0..n {
        // pivot: remaining column with the largest residual norm
        let (p, _) = (k..n)
            .map(|j| (j, norms[j]))
            .fold((k, -1.0), |acc, c| if c.1 > acc.1 { c } else { acc });
        if p != k {
            a.swap_columns(k, p);
            norms.swap(k, p);
            perm.swap(k, p);
        }
        let alpha_norm = (k..m).map(|i| a[(i, k)] * a[(i, k)]).sum::<f64>().sqrt();
        if k == 0 {
            r00 = alpha_norm;
        }
        if alpha_norm <= RANK_TOL * r00.max(f64::MIN_POSITIVE) || alpha_norm == 0.0 {
            break;
        }
        let alpha = if a[(k, k)] > 0.0 { -alpha_norm } else { alpha_norm };
        let mut v: Vec<f64> = (k..m).map(|i| a[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            for j in k..n {
                let dot: f64 = (k..m).map(|i| v[i - k] * a[(i, j)]).sum();
                let s = 2.0 * dot / vnorm2;
                for i in k..m {
                    a[(i, j)] -= s * v[i - k];
                }
            }
            let dot: f64 = (k..m).map(|i| v[i - k] * b[i]).sum();
            let s = 2.0 * dot / vnorm2;
            for i in k..m {
                b[i] -= s * v[i - k];
            }
        }
        rank += 1;
        for j in k + 1..n {
            norms[j] = (k + 1..m).map(|i| a[(i, j)] * a[(i, j)]).sum();
        }
    }

    // back substitution on the leading rank x rank block
    let mut z = vec![0.0; n];
    for k in (0..rank).rev() {
        let s: f64 = (k + 1..rank).map(|j| a[(k, j)] * z[j]).sum();
        z[k] = (b[k] - s) / a[(k, k)];
    }
    let mut coefficients = vec![0.0; n];
    let mut dropped = vec![false; n];
    for k in 0..n {
        coefficients[perm[k]] = z[k];
        dropped[perm[k]] = k >= rank;
    }

    let fitted: Vec<f64> = design
        .iter()
        .map(|row| row.iter().zip(&coefficients).map(|(x, c)| x * c).sum())
        .collect();
    let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let mean = y.iter().sum::<f64>() / m as f64;
    let sst: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    let sse: f64 = residuals.iter().map(|r| r * r).sum();
    let scale = y.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
    let (r_squared, adjusted_r_squared) = if sst <= (1e-14 * scale).powi(2) * m as f64 {
        (0.0, Some(0.0))
    } else {
        let r2 = (1.0 - sse / sst).min(1.0);
        let dof = m as f64 - rank as f64;
        let adj = if dof > 0.0 {
            Some(1.0 - (1.0 - r2) * (m as f64 - 1.0) / dof)
        } else if sse <= 1e-20 * sst {
            Some(1.0)
        } else {
            None
        };
        (r2, adj)
    };
    Ok(LinearFit {
        coefficients,
        dropped,
        rank,
        residuals,
        r_squared,
        adjusted_r_squared,
    })
}

/// Eigenvalues in descending order with matching eigenvector columns.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

pub fn sym_eigen(a: &DMatrix<f64>) -> Result<Eigen> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(invalid("eigendecomposition needs a square matrix"));
    }
    let scale = a.amax().max(1.0);
    for i in 0..n {
        for j in i + 1..n {
            if (a[(i, j)] - a[(j, i)]).abs() > 1e-9 * scale {
                return Err(invalid(format!(
                    "matrix is not symmetric at ({}, {})",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("matrix has non-finite entries".to_string()));
    }
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(Eigen { values, vectors })
}

/// Sample covariance matrix (divisor n - 1) of row observations.
pub fn covariance(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    let d = rows.first().map_or(0, Vec::len);
    let mean: Vec<f64> = (0..d)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();
    let mut c = DMatrix::zeros(d, d);
    for r in rows {
        for i in 0..d {
            let di = r[i] - mean[i];
            for j in i..d {
                c[(i, j)] += di * (r[j] - mean[j]);
            }
        }
    }
    let denom = if n > 1 { (n - 1) as f64 } else { 1.0 };
    for i in 0..d {
        for j in i..d {
            c[(i, j)] /= denom;
            c[(j, i)] = c[(i, j)];
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn with_intercept(x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        x.iter()
            .map(|r| std::iter::once(1.0).chain(r.iter().copied()).collect())
            .collect()
    }

    #[test]
    fn exact_linear_data() {
        let x: Vec<Vec<f64>> = (0..10)
            .map(|i| vec![i as f64 * 0.3, ((i * 7) % 5) as f64])
            .collect();
        let y: Vec<f64> = x.iter().map(|r| 2.0 + 3.0 * r[0] + 4.0 * r[1]).collect();
        let fit = fit_least_squares(&with_intercept(&x), &y).unwrap();
        for (c, e) in fit.coefficients.iter().zip([2.0, 3.0, 4.0]) {
            assert!((c - e).abs() < 1e-10, "{:?}", fit.coefficients);
        }
        assert!((fit.adjusted_r_squared.unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn constant_response() {
        let x: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64]).collect();
        let fit = fit_least_squares(&with_intercept(&x), &[5.0; 8]).unwrap();
        assert!(fit.coefficients[1].abs() < 1e-12);
        assert_eq!(fit.adjusted_r_squared, Some(0.0));
    }

    #[test]
    fn residual_orthogonal_to_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..3).map(|_| rng.random::<f64>()).collect())
            .collect();
        let y: Vec<f64> = (0..50).map(|_| rng.random::<f64>()).collect();
        let fit = fit_least_squares(&x, &y).unwrap();
        for j in 0..3 {
            let dot: f64 = x.iter().zip(&fit.residuals).map(|(r, e)| r[j] * e).sum();
            assert!(dot.abs() < 1e-8);
        }
        assert!(fit.adjusted_r_squared.unwrap() <= 1.0);
    }

    #[test]
    fn rank_deficiency_is_flagged() {
        let x: Vec<Vec<f64>> = (0..6).map(|i| vec![1.0, i as f64, 2.0 * i as f64]).collect();
        let y: Vec<f64> = (0..6).map(|i| 1.0 + i as f64).collect();
        let fit = fit_least_squares(&x, &y).unwrap();
        assert_eq!(fit.rank, 2);
        assert_eq!(fit.dropped.iter().filter(|&&d| d).count(), 1);
        assert!(fit.residuals.iter().all(|r| r.abs() < 1e-10));
    }

    #[test]
    fn too_few_rows() {
        assert!(fit_least_squares(&[vec![1.0, 2.0]], &[1.0]).is_err());
    }

    #[test]
    fn eigen_small_cases() {
        let e = sym_eigen(&DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 10.0])).unwrap();
        assert_eq!(e.values, vec![10.0, 1.0]);
        let e = sym_eigen(&DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0])).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-12 && (e.values[1] - 1.0).abs() < 1e-12);
        assert!(sym_eigen(&DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0])).is_err());
    }

    #[test]
    fn eigen_reconstruction_and_orthonormality() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let b = DMatrix::from_fn(5, 5, |_, _| rng.random::<f64>() * 2.0 - 1.0);
            let a = &b + b.transpose();
            let e = sym_eigen(&a).unwrap();
            let lambda = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(e.values.clone()));
            let rec = &e.vectors * lambda * e.vectors.transpose();
            assert!((rec - &a).amax() < 1e-8);
            let id = e.vectors.transpose() * &e.vectors;
            assert!((id - DMatrix::identity(5, 5)).amax() < 1e-8);
            assert!((e.values.iter().sum::<f64>() - a.trace()).abs() < 1e-8);
            assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        }
    }
}
