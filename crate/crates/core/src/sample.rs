//! Initial designs and the CSV design format (`x1,...,xd,y`).

use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SampleMethod {
    #[default]
    Uniform,
    Lhs,
}

impl std::str::FromStr for SampleMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" | "random" => Ok(SampleMethod::Uniform),
            "lhs" => Ok(SampleMethod::Lhs),
            other => Err(invalid(format!("unknown sample method `{}` (uniform, lhs)", other))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub n_obs: usize,
    pub dim: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub method: SampleMethod,
    pub seed: u64,
}

impl SampleSpec {
    pub fn uniform(n_obs: usize, dim: usize, lower: Vec<f64>, upper: Vec<f64>, seed: u64) -> Self {
        SampleSpec {
            n_obs,
            dim,
            lower,
            upper,
            method: SampleMethod::Uniform,
            seed,
        }
    }

    pub fn lhs(n_obs: usize, dim: usize, lower: Vec<f64>, upper: Vec<f64>, seed: u64) -> Self {
        SampleSpec {
            method: SampleMethod::Lhs,
            ..Self::uniform(n_obs, dim, lower, upper, seed)
        }
    }
}

/// Number of coordinate-swap proposals in the maximin improvement step.
const MAXIMIN_PROPOSALS: usize = 100;

pub fn create_initial_sample(spec: &SampleSpec) -> Result<Vec<Vec<f64>>> {
    let d = spec.dim;
    if spec.n_obs == 0 || d == 0 {
        return Err(invalid("sample size and dimension must be positive"));
    }
    if spec.lower.len() != d || spec.upper.len() != d {
        return Err(invalid(format!("bounds must have {} entries", d)));
    }
    if spec
        .lower
        .iter()
        .chain(&spec.upper)
        .any(|v| !v.is_finite())
    {
        return Err(Error::UnboundedDomain);
    }
    if spec.lower.iter().zip(&spec.upper).any(|(l, u)| l >= u) {
        return Err(invalid("lower bounds must be strictly below upper bounds"));
    }

    let mut rng = rng::stream(spec.seed, "init_sample");
    let n = spec.n_obs;
    let unit: Vec<Vec<f64>> = match spec.method {
        SampleMethod::Uniform => (0..n)
            .map(|_| (0..d).map(|_| rng.random::<f64>()).collect())
            .collect(),
        SampleMethod::Lhs => {
            let mut pts = vec![vec![0.0; d]; n];
            for a in 0..d {
                let mut strata: Vec<usize> = (0..n).collect();
                strata.shuffle(&mut rng);
                for (p, s) in pts.iter_mut().zip(strata) {
                    p[a] = (s as f64 + rng.random::<f64>()) / n as f64;
                }
            }
            improve_maximin(&mut pts, &mut rng);
            pts
        }
    };
    Ok(unit
        .into_iter()
        .map(|p| {
            p.iter()
                .enumerate()
                .map(|(a, u)| {
                    let v = spec.lower[a] + u * (spec.upper[a] - spec.lower[a]);
                    v.min(spec.upper[a])
                })
                .collect()
        })
        .collect())
}

pub(crate) fn min_pairwise_distance(pts: &[Vec<f64>]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d2: f64 = pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            best = best.min(d2);
        }
    }
    best.sqrt()
}

/// Swaps one coordinate between two random rows and keeps the swap when the
/// minimum pairwise distance grows. Swaps preserve the Latin property.
fn improve_maximin<R: Rng>(pts: &mut [Vec<f64>], rng: &mut R) {
    let n = pts.len();
    if n < 3 {
        return;
    }
    let d = pts[0].len();
    let mut current = min_pairwise_distance(pts);
    for _ in 0..MAXIMIN_PROPOSALS {
        let a = rng.random_range(0..d);
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let (vi, vj) = (pts[i][a], pts[j][a]);
        pts[i][a] = vj;
        pts[j][a] = vi;
        let proposed = min_pairwise_distance(pts);
        if proposed > current {
            current = proposed;
        } else {
            pts[i][a] = vi;
            pts[j][a] = vj;
        }
    }
}

/// A design read from CSV: points and objective values.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub points: Vec<Vec<f64>>,
    pub objectives: Vec<f64>,
}

/// Reads `x1,...,xd,y` CSV. The last column is the objective.
pub fn read_design_csv<R: Read>(reader: R) -> Result<Design> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let cols = headers.len();
    if cols < 2 {
        return Err(invalid("design CSV needs at least one x column and a y column"));
    }
    if headers.get(cols - 1) != Some("y") {
        return Err(invalid("the last design column must be named `y`"));
    }
    let mut points = Vec::new();
    let mut objectives = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != cols {
            return Err(invalid(format!("row {}: expected {} fields", row + 1, cols)));
        }
        let vals: Vec<f64> = rec
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| invalid(format!("row {}: {}", row + 1, e)))?;
        objectives.push(vals[cols - 1]);
        points.push(vals[..cols - 1].to_vec());
    }
    Ok(Design { points, objectives })
}

pub fn write_design_csv<W: Write>(writer: W, points: &[Vec<f64>], y: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let d = points.first().map_or(0, Vec::len);
    let mut header: Vec<String> = (1..=d).map(|i| format!("x{}", i)).collect();
    header.push("y".to_string());
    w.write_record(&header)?;
    for (p, v) in points.iter().zip(y) {
        let mut rec: Vec<String> = p.iter().map(|x| x.to_string()).collect();
        rec.push(v.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_reference_example() {
        let spec = SampleSpec::uniform(800, 2, vec![-5.0; 2], vec![5.0; 2], 1);
        let x = create_initial_sample(&spec).unwrap();
        assert_eq!(x.len(), 800);
        assert!(x.iter().flatten().all(|v| (-5.0..=5.0).contains(v)));
        assert_eq!(x, create_initial_sample(&spec).unwrap());
    }

    #[test]
    fn lhs_stratifies() {
        let spec = SampleSpec::lhs(4, 1, vec![0.0], vec![1.0], 7);
        let x = create_initial_sample(&spec).unwrap();
        let mut strata: Vec<usize> = x.iter().map(|p| (p[0] * 4.0).floor() as usize).collect();
        strata.sort();
        assert_eq!(strata, vec![0, 1, 2, 3]);
    }

    #[test]
    fn lhs_keeps_one_point_per_stratum_after_improvement() {
        let spec = SampleSpec::lhs(50, 3, vec![0.0; 3], vec![1.0; 3], 11);
        let x = create_initial_sample(&spec).unwrap();
        for a in 0..3 {
            let mut s: Vec<usize> = x.iter().map(|p| (p[a] * 50.0).floor() as usize).collect();
            s.sort();
            assert_eq!(s, (0..50).collect::<Vec<_>>());
        }
    }

    #[test]
    fn lhs_spreads_better_than_uniform() {
        let mut lhs = 0.0;
        let mut uni = 0.0;
        for seed in 0..20 {
            let l = create_initial_sample(&SampleSpec::lhs(100, 2, vec![0.0; 2], vec![1.0; 2], seed))
                .unwrap();
            let u = create_initial_sample(&SampleSpec::uniform(
                100,
                2,
                vec![0.0; 2],
                vec![1.0; 2],
                seed,
            ))
            .unwrap();
            lhs += min_pairwise_distance(&l);
            uni += min_pairwise_distance(&u);
        }
        assert!(lhs >= uni, "lhs {} < uniform {}", lhs / 20.0, uni / 20.0);
    }

    #[test]
    fn unbounded_domain_rejected() {
        let spec = SampleSpec::uniform(10, 1, vec![f64::NEG_INFINITY], vec![1.0], 1);
        assert!(matches!(create_initial_sample(&spec), Err(Error::UnboundedDomain)));
    }

    #[test]
    fn design_csv_round_trip() {
        let pts = vec![vec![0.5, -1.25], vec![2.0, 3.0]];
        let y = vec![1.5, -2.0];
        let mut buf = Vec::new();
        write_design_csv(&mut buf, &pts, &y).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("x1,x2,y\n"));
        let d = read_design_csv(buf.as_slice()).unwrap();
        assert_eq!(d.points, pts);
        assert_eq!(d.objectives, y);
    }
}
