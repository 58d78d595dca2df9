//! Built-in test problems and user-defined expression problems.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::object::Objective;

pub mod expr;
pub mod gallagher;

pub use expr::{parse_expression, Expression};
pub use gallagher::Gallagher;

pub const PROBLEM_NAMES: [&str; 5] = ["sphere", "rastrigin", "rosenbrock", "linear_slope", "gallagher101"];

#[derive(Debug, Clone)]
enum Kind {
    Sphere,
    Rastrigin,
    Rosenbrock,
    LinearSlope,
    Gallagher(Arc<Gallagher>),
    Expression(Arc<Expression>),
}

#[derive(Debug, Clone, Serialize)]
pub struct ProblemInfo {
    pub name: String,
    pub dim: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub optimum: Option<Vec<f64>>,
    pub optimum_value: Option<f64>,
    pub seed: Option<u64>,
    pub expression: Option<String>,
}

#[derive(Clone)]
pub struct Problem {
    info: ProblemInfo,
    kind: Kind,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.info.fmt(f)
    }
}

/// Summary of a named problem for listings.
#[derive(Debug, Clone, Serialize)]
pub struct ProblemDescription {
    pub name: &'static str,
    pub description: &'static str,
    pub seeded: bool,
}

pub fn list_problems() -> Vec<ProblemDescription> {
    let d = |name, description, seeded| ProblemDescription {
        name,
        description,
        seeded,
    };
    vec![
        d("sphere", "sum of squares, optimum 0 at the origin", false),
        d("rastrigin", "10d + sum(x^2 - 10 cos(2 pi x)), optimum 0 at the origin", false),
        d("rosenbrock", "banana valley, optimum 0 at (1, ..., 1); needs d >= 2", false),
        d("linear_slope", "sum(s_i (5 - x_i)) with s_i = 10^((i-1)/(d-1)), optimum 0 at (5, ..., 5)", false),
        d("gallagher101", "101 seeded Gaussian peaks, weak global structure", true),
    ]
}

fn slope(i: usize, d: usize) -> f64 {
    if d == 1 {
        1.0
    } else {
        10f64.powf(i as f64 / (d - 1) as f64)
    }
}

/// Named problem on `[-5, 5]^dim`. `seed` only affects seeded generators
/// (default 1).
pub fn make_problem(name: &str, dim: usize, seed: Option<u64>) -> Result<Problem> {
    if dim == 0 {
        return Err(invalid("dimension must be >= 1"));
    }
    let (kind, optimum) = match name {
        "sphere" => (Kind::Sphere, vec![0.0; dim]),
        "rastrigin" => (Kind::Rastrigin, vec![0.0; dim]),
        "rosenbrock" => {
            if dim < 2 {
                return Err(invalid("rosenbrock needs at least 2 dimensions"));
            }
            (Kind::Rosenbrock, vec![1.0; dim])
        }
        "linear_slope" => (Kind::LinearSlope, vec![5.0; dim]),
        "gallagher101" => {
            let g = Gallagher::new(dim, seed.unwrap_or(1));
            let opt = g.optimum();
            (Kind::Gallagher(Arc::new(g)), opt)
        }
        _ => {
            return Err(Error::UnknownProblem {
                name: name.to_string(),
                available: PROBLEM_NAMES.join(", "),
            })
        }
    };
    let seeded = matches!(kind, Kind::Gallagher(_));
    Ok(Problem {
        info: ProblemInfo {
            name: name.to_string(),
            dim,
            lower: vec![-5.0; dim],
            upper: vec![5.0; dim],
            optimum: Some(optimum),
            optimum_value: Some(0.0),
            seed: seeded.then(|| seed.unwrap_or(1)),
            expression: None,
        },
        kind,
    })
}

impl Problem {
    /// User-defined problem from an expression such as `sum(x^2)`.
    pub fn from_expression(text: &str, dim: usize, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != dim || upper.len() != dim {
            return Err(invalid("bounds must have one entry per dimension"));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u)) {
            return Err(invalid("every lower bound must be below its upper bound"));
        }
        let e = parse_expression(text, dim)?;
        Ok(Problem {
            info: ProblemInfo {
                name: text.to_string(),
                dim,
                lower,
                upper,
                optimum: None,
                optimum_value: None,
                seed: None,
                expression: Some(e.to_string()),
            },
            kind: Kind::Expression(Arc::new(e)),
        })
    }

    pub fn info(&self) -> &ProblemInfo {
        &self.info
    }

    pub fn name(&self) -> &str {
        &self.info.name
    }

    pub fn dim(&self) -> usize {
        self.info.dim
    }

    pub fn lower(&self) -> &[f64] {
        &self.info.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.info.upper
    }

    pub fn try_evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::Eval(format!(
                "expected {} coordinates, got {}",
                self.dim(),
                x.len()
            )));
        }
        Ok(match &self.kind {
            Kind::Sphere => x.iter().map(|v| v * v).sum(),
            Kind::Rastrigin => {
                10.0 * x.len() as f64
                    + x.iter()
                        .map(|v| v * v - 10.0 * (2.0 * std::f64::consts::PI * v).cos())
                        .sum::<f64>()
            }
            Kind::Rosenbrock => x
                .windows(2)
                .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
                .sum(),
            Kind::LinearSlope => x
                .iter()
                .enumerate()
                .map(|(i, v)| slope(i, x.len()) * (5.0 - v))
                .sum(),
            Kind::Gallagher(g) => g.evaluate(x),
            Kind::Expression(e) => e.eval(x)?,
        })
    }
}

impl Objective for Problem {
    /// Evaluation errors of expressions surface as NaN.
    fn evaluate(&self, x: &[f64]) -> f64 {
        self.try_evaluate(x).unwrap_or(f64::NAN)
    }

    fn label(&self) -> String {
        self.info.name.clone()
    }
}
