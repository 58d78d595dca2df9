//! Gaussian kernel density estimate of a sample and its peak count.

use super::stats;

pub const GRID_POINTS: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub struct KdeSummary {
    pub peaks: usize,
    pub skewness: Option<f64>,
    pub kurtosis: Option<f64>,
    pub bandwidth: f64,
}

/// Silverman's rule of thumb, 0.9 min(sd, IQR/1.34) n^(-1/5), with the
/// usual fallbacks when the spread estimate vanishes.
pub fn silverman_bandwidth(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let sd = stats::sd(values).unwrap_or(0.0);
    let iqr = stats::quantile(values, 0.75).unwrap_or(0.0) - stats::quantile(values, 0.25).unwrap_or(0.0);
    let mut lo = sd.min(iqr / 1.34);
    if lo <= 0.0 {
        lo = sd;
    }
    if lo <= 0.0 {
        lo = values.first().map_or(1.0, |v| v.abs());
    }
    if lo <= 0.0 {
        lo = 1.0;
    }
    0.9 * lo * n.powf(-0.2)
}

/// Density values on the evaluation grid spanning [min - 3h, max + 3h].
pub fn density_grid(values: &[f64], h: f64) -> (Vec<f64>, Vec<f64>) {
    let lo = stats::min(values).unwrap_or(0.0) - 3.0 * h;
    let hi = stats::max(values).unwrap_or(0.0) + 3.0 * h;
    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    let norm = 1.0 / (values.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    let xs: Vec<f64> = (0..GRID_POINTS).map(|i| lo + i as f64 * step).collect();
    let dens = xs
        .iter()
        .map(|&g| {
            values
                .iter()
                .map(|&v| {
                    let z = (g - v) / h;
                    (-0.5 * z * z).exp()
                })
                .sum::<f64>()
                * norm
        })
        .collect();
    (xs, dens)
}

/// Modes whose probability mass exceeds this count as peaks.
pub const MIN_MODE_MASS: f64 = 0.1;

/// Splits the density at its interior local minima and counts the segments
/// carrying more than [`MIN_MODE_MASS`].
fn count_peaks(dens: &[f64], step: f64) -> usize {
    let mut cuts = vec![0];
    for i in 1..dens.len() - 1 {
        if dens[i - 1] > dens[i] && dens[i] < dens[i + 1] {
            cuts.push(i);
        }
    }
    cuts.push(dens.len() - 1);
    cuts.windows(2)
        .filter(|w| dens[w[0]..=w[1]].iter().sum::<f64>() * step > MIN_MODE_MASS)
        .count()
}

pub fn kde_peak_count(values: &[f64], bandwidth: Option<f64>) -> KdeSummary {
    let skewness = stats::skewness(values);
    let kurtosis = stats::kurtosis(values);
    let constant = values.windows(2).all(|w| w[0] == w[1]);
    let h = bandwidth.unwrap_or_else(|| silverman_bandwidth(values));
    if constant || values.len() < 2 {
        return KdeSummary {
            peaks: 1,
            skewness: None,
            kurtosis: None,
            bandwidth: h,
        };
    }
    let (xs, dens) = density_grid(values, h);
    KdeSummary {
        peaks: count_peaks(&dens, xs[1] - xs[0]).max(1),
        skewness,
        kurtosis,
        bandwidth: h,
    }
}
