//! Descriptive statistics. Sample standard deviations use the n - 1 divisor;
//! quantiles are type 7 (linear interpolation between order statistics).

pub fn mean(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        None
    } else {
        Some(v.iter().sum::<f64>() / v.len() as f64)
    }
}

pub fn var(v: &[f64]) -> Option<f64> {
    if v.len() < 2 {
        return None;
    }
    let m = mean(v)?;
    Some(v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64)
}

pub fn sd(v: &[f64]) -> Option<f64> {
    var(v).map(f64::sqrt)
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

fn quantile_sorted(s: &[f64], p: f64) -> f64 {
    let h = (s.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    s[lo] + (h - lo as f64) * (s[hi] - s[lo])
}

pub fn quantile(v: &[f64], p: f64) -> Option<f64> {
    if v.is_empty() || !(0.0..=1.0).contains(&p) {
        return None;
    }
    Some(quantile_sorted(&sorted(v), p))
}

pub fn median(v: &[f64]) -> Option<f64> {
    quantile(v, 0.5)
}

pub fn min(v: &[f64]) -> Option<f64> {
    v.iter().copied().reduce(f64::min)
}

pub fn max(v: &[f64]) -> Option<f64> {
    v.iter().copied().reduce(f64::max)
}

/// Pearson correlation; `None` when either side has zero variance.
pub fn cor(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let ma = mean(a)?;
    let mb = mean(b)?;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return None;
    }
    Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

fn central_moment(v: &[f64], m: f64, k: i32) -> f64 {
    v.iter().map(|x| (x - m).powi(k)).sum::<f64>() / v.len() as f64
}

/// Moment skewness m3 / m2^1.5.
pub fn skewness(v: &[f64]) -> Option<f64> {
    let m = mean(v)?;
    let m2 = central_moment(v, m, 2);
    if m2 <= 0.0 {
        return None;
    }
    Some(central_moment(v, m, 3) / m2.powf(1.5))
}

/// Excess kurtosis m4 / m2² - 3.
pub fn kurtosis(v: &[f64]) -> Option<f64> {
    let m = mean(v)?;
    let m2 = central_moment(v, m, 2);
    if m2 <= 0.0 {
        return None;
    }
    Some(central_moment(v, m, 4) / (m2 * m2) - 3.0)
}

/// Summary statistics used to aggregate per-item values into features.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stat {
    Min,
    Lq,
    Mean,
    Median,
    Uq,
    Max,
    Sd,
    Sum,
    NaCount,
}

impl Stat {
    pub fn suffix(self) -> &'static str {
        match self {
            Stat::Min => "min",
            Stat::Lq => "lq",
            Stat::Mean => "mean",
            Stat::Median => "median",
            Stat::Uq => "uq",
            Stat::Max => "max",
            Stat::Sd => "sd",
            Stat::Sum => "sum",
            Stat::NaCount => "nas",
        }
    }
}

/// {min, mean, median, max, sd}
pub const FIVE: [Stat; 5] = [Stat::Min, Stat::Mean, Stat::Median, Stat::Max, Stat::Sd];
/// {min, lq, mean, median, uq, max, sd}
pub const SEVEN: [Stat; 7] = [
    Stat::Min,
    Stat::Lq,
    Stat::Mean,
    Stat::Median,
    Stat::Uq,
    Stat::Max,
    Stat::Sd,
];
/// SEVEN plus the number of missing values.
pub const EIGHT: [Stat; 8] = [
    Stat::Min,
    Stat::Lq,
    Stat::Mean,
    Stat::Median,
    Stat::Uq,
    Stat::Max,
    Stat::Sd,
    Stat::NaCount,
];

/// Aggregates values where `None` marks a missing item. Statistics other
/// than the missing count ignore missing items.
pub fn aggregate(values: &[Option<f64>], stats: &[Stat]) -> Vec<Option<f64>> {
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    let s = sorted(&present);
    stats
        .iter()
        .map(|st| match st {
            Stat::NaCount => Some((values.len() - present.len()) as f64),
            _ if s.is_empty() => None,
            Stat::Min => Some(s[0]),
            Stat::Max => Some(s[s.len() - 1]),
            Stat::Lq => Some(quantile_sorted(&s, 0.25)),
            Stat::Median => Some(quantile_sorted(&s, 0.5)),
            Stat::Uq => Some(quantile_sorted(&s, 0.75)),
            Stat::Mean => mean(&present),
            Stat::Sd => sd(&present),
            Stat::Sum => Some(present.iter().sum()),
        })
        .collect()
}

pub fn aggregate_all(values: &[f64], stats: &[Stat]) -> Vec<Option<f64>> {
    let v: Vec<Option<f64>> = values.iter().map(|&x| Some(x)).collect();
    aggregate(&v, stats)
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn manhattan(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type7_quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.25), Some(1.75));
        assert_eq!(quantile(&v, 0.5), Some(2.5));
        assert_eq!(quantile(&v, 1.0), Some(4.0));
        assert_eq!(quantile(&[3.0, 1.0, 2.0], 0.1), Some(1.2));
    }

    #[test]
    fn moments() {
        let v = [1.0, 2.0, 3.0, 4.0, 10.0];
        assert!(skewness(&v).unwrap() > 0.0);
        assert_eq!(skewness(&[2.0; 4]), None);
        assert_eq!(sd(&[1.0, 3.0]), Some(2f64.sqrt()));
        assert_eq!(sd(&[1.0]), None);
    }

    #[test]
    fn correlation() {
        let a = [1.0, 2.0, 3.0];
        assert!((cor(&a, &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((cor(&a, &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(cor(&a, &[1.0, 1.0, 1.0]), None);
    }

    #[test]
    fn aggregation_counts_missing() {
        let v = [Some(1.0), None, Some(3.0)];
        let out = aggregate(&v, &EIGHT);
        assert_eq!(out[0], Some(1.0));
        assert_eq!(out[2], Some(2.0));
        assert_eq!(out[7], Some(1.0));
        let none = aggregate(&[None, None], &EIGHT);
        assert_eq!(none[0], None);
        assert_eq!(none[7], Some(2.0));
    }
}
