//! The feature object: an evaluated initial design plus everything the
//! feature sets need to know about the problem.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::grid::CellGrid;

/// A black-box objective `x -> y`.
pub trait Objective: Send + Sync {
    fn evaluate(&self, x: &[f64]) -> f64;

    fn label(&self) -> String {
        "user-defined function".to_string()
    }
}

impl<F> Objective for F
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn evaluate(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

pub struct FeatureObject {
    points: Vec<Vec<f64>>,
    objectives: Vec<f64>,
    /// Objectives in minimization orientation (negated when maximizing).
    oriented: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    minimize: bool,
    grid: Option<CellGrid>,
    function: Option<Arc<dyn Objective>>,
    eval_counter: AtomicU64,
}

impl fmt::Debug for FeatureObject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FeatureObject")
            .field("n_obs", &self.n_obs())
            .field("dim", &self.dim())
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .field("minimize", &self.minimize)
            .field("blocks", &self.grid.as_ref().map(|g| g.blocks().to_vec()))
            .field("has_function", &self.function.is_some())
            .finish()
    }
}

#[derive(Default)]
pub struct FeatureObjectBuilder {
    points: Vec<Vec<f64>>,
    objectives: Vec<f64>,
    lower: Option<Vec<f64>>,
    upper: Option<Vec<f64>>,
    blocks: Option<Vec<usize>>,
    function: Option<Arc<dyn Objective>>,
    minimize: bool,
}

impl FeatureObjectBuilder {
    pub fn bounds(mut self, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        self.lower = Some(lower);
        self.upper = Some(upper);
        self
    }

    pub fn lower(mut self, lower: Vec<f64>) -> Self {
        self.lower = Some(lower);
        self
    }

    pub fn upper(mut self, upper: Vec<f64>) -> Self {
        self.upper = Some(upper);
        self
    }

    pub fn blocks(mut self, blocks: Vec<usize>) -> Self {
        self.blocks = Some(blocks);
        self
    }

    pub fn maybe_blocks(mut self, blocks: Option<Vec<usize>>) -> Self {
        self.blocks = blocks;
        self
    }

    pub fn function(mut self, f: Arc<dyn Objective>) -> Self {
        self.function = Some(f);
        self
    }

    pub fn maybe_function(mut self, f: Option<Arc<dyn Objective>>) -> Self {
        self.function = f;
        self
    }

    pub fn minimize(mut self, minimize: bool) -> Self {
        self.minimize = minimize;
        self
    }

    pub fn build(self) -> Result<FeatureObject> {
        let n = self.points.len();
        if n != self.objectives.len() {
            return Err(invalid(format!(
                "{} points but {} objective values",
                n,
                self.objectives.len()
            )));
        }
        if n == 0 {
            return Err(invalid("the initial design is empty"));
        }
        let d = self.points[0].len();
        if d == 0 {
            return Err(invalid("points must have at least one coordinate"));
        }
        if let Some((i, p)) = self.points.iter().enumerate().find(|(_, p)| p.len() != d) {
            return Err(invalid(format!(
                "point {} has {} coordinates, expected {}",
                i + 1,
                p.len(),
                d
            )));
        }
        if n < d + 2 {
            return Err(invalid(format!(
                "need at least dim + 2 = {} observations, got {}",
                d + 2,
                n
            )));
        }
        if let Some((i, p)) = self
            .points
            .iter()
            .enumerate()
            .find(|(_, p)| p.iter().any(|v| !v.is_finite()))
        {
            return Err(invalid(format!("point {} has a non-finite coordinate: {:?}", i + 1, p)));
        }
        if let Some(i) = self.objectives.iter().position(|y| !y.is_finite()) {
            return Err(invalid(format!(
                "objective value {} is not finite ({})",
                i + 1,
                self.objectives[i]
            )));
        }

        let col_min = |a: usize| self.points.iter().map(|p| p[a]).fold(f64::INFINITY, f64::min);
        let col_max = |a: usize| self.points.iter().map(|p| p[a]).fold(f64::NEG_INFINITY, f64::max);
        let lower = self.lower.unwrap_or_else(|| (0..d).map(col_min).collect());
        let upper = self.upper.unwrap_or_else(|| (0..d).map(col_max).collect());
        if lower.len() != d || upper.len() != d {
            return Err(invalid(format!("bounds must have {} entries", d)));
        }
        for a in 0..d {
            if lower[a].is_nan() || upper[a].is_nan() || lower[a] > upper[a] {
                return Err(invalid(format!(
                    "invalid bounds in dimension {}: [{}, {}]",
                    a + 1,
                    lower[a],
                    upper[a]
                )));
            }
        }
        for (i, p) in self.points.iter().enumerate() {
            for a in 0..d {
                if p[a] < lower[a] || p[a] > upper[a] {
                    return Err(invalid(format!(
                        "point {} lies outside the bounds in dimension {} ({} not in [{}, {}])",
                        i + 1,
                        a + 1,
                        p[a],
                        lower[a],
                        upper[a]
                    )));
                }
            }
        }

        let grid = match &self.blocks {
            Some(b) => Some(CellGrid::new(b, &lower, &upper, &self.points)?),
            None => None,
        };
        let oriented = if self.minimize {
            self.objectives.clone()
        } else {
            self.objectives.iter().map(|y| -y).collect()
        };
        Ok(FeatureObject {
            points: self.points,
            objectives: self.objectives,
            oriented,
            lower,
            upper,
            minimize: self.minimize,
            grid,
            function: self.function,
            eval_counter: AtomicU64::new(0),
        })
    }
}

/// Functional form of [`FeatureObject::builder`]; bounds default to the
/// column-wise extremes of `points`.
pub fn create_feature_object(
    points: Vec<Vec<f64>>,
    objectives: Vec<f64>,
    lower: Option<Vec<f64>>,
    upper: Option<Vec<f64>>,
    blocks: Option<Vec<usize>>,
    function: Option<Arc<dyn Objective>>,
    minimize: Option<bool>,
) -> Result<FeatureObject> {
    let mut b = FeatureObject::builder(points, objectives)
        .maybe_blocks(blocks)
        .maybe_function(function)
        .minimize(minimize.unwrap_or(true));
    if let Some(l) = lower {
        b = b.lower(l);
    }
    if let Some(u) = upper {
        b = b.upper(u);
    }
    b.build()
}

impl FeatureObject {
    pub fn builder(points: Vec<Vec<f64>>, objectives: Vec<f64>) -> FeatureObjectBuilder {
        FeatureObjectBuilder {
            points,
            objectives,
            minimize: true,
            ..Default::default()
        }
    }

    pub fn n_obs(&self) -> usize {
        self.points.len()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    /// Objective values as given.
    pub fn objectives(&self) -> &[f64] {
        &self.objectives
    }

    /// Objective values oriented for minimization; all feature sets except
    /// `basic` work on these.
    pub fn y(&self) -> &[f64] {
        &self.oriented
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn minimize(&self) -> bool {
        self.minimize
    }

    pub fn grid(&self) -> Option<&CellGrid> {
        self.grid.as_ref()
    }

    pub fn blocks(&self) -> Option<&[usize]> {
        self.grid.as_ref().map(|g| g.blocks())
    }

    pub fn function(&self) -> Option<&Arc<dyn Objective>> {
        self.function.as_ref()
    }

    pub fn has_function(&self) -> bool {
        self.function.is_some()
    }

    pub fn eval_counter(&self) -> u64 {
        self.eval_counter.load(Ordering::Relaxed)
    }

    pub fn track_evaluations(&self, k: u64) -> u64 {
        self.eval_counter.fetch_add(k, Ordering::Relaxed) + k
    }

    /// Counting evaluator for one feature-set computation, or `None` when
    /// the object carries no function.
    pub fn evaluator(&self) -> Option<Evaluator<'_>> {
        self.function.as_deref().map(|f| Evaluator {
            fo: self,
            f,
            count: AtomicU64::new(0),
        })
    }

    /// Euclidean length of the bounding box diagonal, falling back to the
    /// sample's extent along axes with infinite bounds.
    pub fn domain_diagonal(&self) -> f64 {
        (0..self.dim())
            .map(|a| {
                let r = self.upper[a] - self.lower[a];
                if r.is_finite() {
                    r
                } else {
                    let lo = self.points.iter().map(|p| p[a]).fold(f64::INFINITY, f64::min);
                    let hi = self.points.iter().map(|p| p[a]).fold(f64::NEG_INFINITY, f64::max);
                    hi - lo
                }
            })
            .map(|r| r * r)
            .sum::<f64>()
            .sqrt()
    }

    pub fn summarize(&self) -> Summary {
        let cells = self.grid.as_ref().map(|g| {
            let total = g.total_cells();
            let non_empty = g.non_empty_cells();
            CellSummary {
                blocks: g.blocks().to_vec(),
                cell_widths: g.cell_widths().to_vec(),
                total,
                non_empty,
                empty: total - non_empty,
                avg_obs_per_cell: self.n_obs() as f64 / total as f64,
                avg_obs_per_non_empty_cell: self.n_obs() as f64 / non_empty as f64,
            }
        });
        Summary {
            n_obs: self.n_obs(),
            dim: self.dim(),
            lower: self.lower.clone(),
            upper: self.upper.clone(),
            minimize: self.minimize,
            function: self.function.as_ref().map(|f| f.label()),
            cells,
        }
    }
}

/// Evaluates the object's function, oriented for minimization, counting
/// calls both locally and on the object.
pub struct Evaluator<'a> {
    fo: &'a FeatureObject,
    f: &'a dyn Objective,
    count: AtomicU64,
}

impl Evaluator<'_> {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.count.fetch_add(1, Ordering::Relaxed);
        self.fo.track_evaluations(1);
        let v = self.f.evaluate(x);
        if self.fo.minimize {
            v
        } else {
            -v
        }
    }

    pub fn count(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }
}

#[derive(Debug, Clone, Serialize, serde::Deserialize, PartialEq)]
pub struct CellSummary {
    pub blocks: Vec<usize>,
    pub cell_widths: Vec<f64>,
    pub total: usize,
    pub non_empty: usize,
    pub empty: usize,
    pub avg_obs_per_cell: f64,
    pub avg_obs_per_non_empty_cell: f64,
}

#[derive(Debug, Clone, Serialize, serde::Deserialize, PartialEq)]
pub struct Summary {
    pub n_obs: usize,
    pub dim: usize,
    #[serde(with = "crate::feature::nonfinite_vec")]
    pub lower: Vec<f64>,
    #[serde(with = "crate::feature::nonfinite_vec")]
    pub upper: Vec<f64>,
    pub minimize: bool,
    pub function: Option<String>,
    pub cells: Option<CellSummary>,
}

fn join_sci(v: &[f64]) -> String {
    v.iter().map(|x| format!("{:.2e}", x)).collect::<Vec<_>>().join(", ")
}

fn join_fixed(v: &[f64]) -> String {
    v.iter().map(|x| format!("{:.2}", x)).collect::<Vec<_>>().join(", ")
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Feature Object:")?;
        writeln!(f, "- Number of Observations: {}", self.n_obs)?;
        writeln!(f, "- Number of Variables: {}", self.dim)?;
        writeln!(f, "- Lower Boundaries: {}", join_sci(&self.lower))?;
        writeln!(f, "- Upper Boundaries: {}", join_sci(&self.upper))?;
        let names: Vec<String> = (1..=self.dim).map(|i| format!("x{}", i)).collect();
        writeln!(f, "- Name of Variables: {}", names.join(", "))?;
        writeln!(
            f,
            "- Optimization Problem: {} y",
            if self.minimize { "minimize" } else { "maximize" }
        )?;
        if let Some(label) = &self.function {
            writeln!(f, "- Function to be Optimized: {}", label)?;
        }
        if let Some(c) = &self.cells {
            let blocks: Vec<String> = c.blocks.iter().map(|b| b.to_string()).collect();
            writeln!(f, "- Number of Cells per Dimension: {}", blocks.join(", "))?;
            writeln!(f, "- Size of Cells per Dimension: {}", join_fixed(&c.cell_widths))?;
            writeln!(f, "- Number of Cells:")?;
            writeln!(f, "  - total: {}", c.total)?;
            writeln!(
                f,
                "  - non-empty: {} ({:.2}%)",
                c.non_empty,
                100.0 * c.non_empty as f64 / c.total as f64
            )?;
            writeln!(
                f,
                "  - empty: {} ({:.2}%)",
                c.empty,
                100.0 * c.empty as f64 / c.total as f64
            )?;
            writeln!(f, "- Average Number of Observations per Cell:")?;
            writeln!(f, "  - total: {:.2}", c.avg_obs_per_cell)?;
            writeln!(f, "  - non-empty: {:.2}", c.avg_obs_per_non_empty_cell)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let x: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
        let y = (0..n).map(|i| i as f64).collect();
        (x, y)
    }

    #[test]
    fn bounds_default_to_sample_extent() {
        let x = vec![vec![1.0, -2.0], vec![3.0, 4.0], vec![2.0, 0.0], vec![0.5, 1.0]];
        let fo = FeatureObject::builder(x, vec![1.0, 2.0, 3.0, 4.0]).build().unwrap();
        assert_eq!(fo.lower(), &[0.5, -2.0]);
        assert_eq!(fo.upper(), &[3.0, 4.0]);
        assert_eq!(fo.eval_counter(), 0);
    }

    #[test]
    fn rejects_invalid_input() {
        let (x, mut y) = line(5);
        assert!(FeatureObject::builder(x.clone(), y[..4].to_vec()).build().is_err());
        y[2] = f64::NAN;
        assert!(FeatureObject::builder(x.clone(), y).build().is_err());
        let (_, y) = line(5);
        let err = FeatureObject::builder(x, y)
            .bounds(vec![0.0], vec![3.0])
            .build()
            .unwrap_err();
        assert!(err.to_string().contains("outside the bounds"));
    }

    #[test]
    fn infinite_bounds_accept_everything() {
        let (x, y) = line(5);
        let fo = FeatureObject::builder(x, y)
            .bounds(vec![f64::NEG_INFINITY], vec![f64::INFINITY])
            .build()
            .unwrap();
        assert!(fo.domain_diagonal() > 0.0);
    }

    #[test]
    fn summary_counts_cells() {
        let x = vec![vec![0.1], vec![0.2], vec![0.6]];
        let fo = FeatureObject::builder(x, vec![1.0, 2.0, 3.0])
            .bounds(vec![0.0], vec![1.0])
            .blocks(vec![4])
            .build()
            .unwrap();
        let s = fo.summarize();
        let c = s.cells.as_ref().unwrap();
        assert_eq!((c.total, c.non_empty, c.empty), (4, 2, 2));
        let text = s.to_string();
        assert!(text.contains("non-empty: 2 (50.00%)"));

        let (x, y) = line(5);
        let fo = FeatureObject::builder(x, y).build().unwrap();
        assert!(!fo.summarize().to_string().contains("Number of Cells"));
    }

    #[test]
    fn evaluation_tracking_is_additive() {
        let (x, y) = line(5);
        let fo = FeatureObject::builder(x, y)
            .function(Arc::new(|x: &[f64]| x[0]))
            .build()
            .unwrap();
        let a = fo.evaluator().unwrap();
        for _ in 0..3 {
            a.eval(&[1.0]);
        }
        let b = fo.evaluator().unwrap();
        for _ in 0..4 {
            b.eval(&[1.0]);
        }
        assert_eq!(a.count() + b.count(), fo.eval_counter());
        assert_eq!(fo.track_evaluations(0), 7);
    }

    #[test]
    fn maximization_negates() {
        let (x, y) = line(5);
        let fo = FeatureObject::builder(x, y)
            .minimize(false)
            .function(Arc::new(|x: &[f64]| x[0]))
            .build()
            .unwrap();
        assert_eq!(fo.y()[3], -3.0);
        assert_eq!(fo.objectives()[3], 3.0);
        assert_eq!(fo.evaluator().unwrap().eval(&[2.0]), -2.0);
    }
}
