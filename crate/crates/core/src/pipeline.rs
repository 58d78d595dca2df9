//! Building feature objects from declarative specs, and batch computation
//! over problem instances with replications.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::Control;
use crate::error::{invalid, Error, Result};
use crate::feature::{calculate_features, feature_names, FeatureSet, FeatureValue, FeatureVector};
use crate::object::{FeatureObject, Objective};
use crate::problems::{make_problem, Problem};
use crate::rng;
use crate::sample::{create_initial_sample, read_design_csv, SampleMethod, SampleSpec};

/// Default sample size per dimension.
pub const N_PER_DIM: usize = 50;

/// What to build a feature object from. Exactly one of `problem`,
/// `expression` and `design` must be set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub problem: Option<String>,
    /// Instance seed of a seeded problem.
    pub instance: Option<u64>,
    pub expression: Option<String>,
    /// Design CSV text with columns `x1,...,xd,y`.
    pub design: Option<String>,
    pub dim: Option<usize>,
    pub n: Option<usize>,
    #[serde(default)]
    pub sample: SampleMethod,
    /// Sample seed.
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Blocks per dimension; a single value applies to every dimension.
    pub blocks: Option<Vec<usize>>,
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
    pub minimize: Option<bool>,
}

fn default_seed() -> u64 {
    1
}

/// A built object together with the problem backing it, if any.
#[derive(Debug, Clone)]
pub struct Built {
    pub object: Arc<FeatureObject>,
    pub problem: Option<Problem>,
}

fn broadcast(v: Vec<f64>, d: usize, what: &str) -> Result<Vec<f64>> {
    match v.len() {
        1 => Ok(vec![v[0]; d]),
        n if n == d => Ok(v),
        n => Err(invalid(format!("{} has {} entries, expected 1 or {}", what, n, d))),
    }
}

impl ObjectSpec {
    pub fn problem(name: &str, dim: usize, n: usize, seed: u64) -> Self {
        ObjectSpec {
            problem: Some(name.to_string()),
            dim: Some(dim),
            n: Some(n),
            seed,
            ..Default::default()
        }
    }

    pub fn with_blocks(mut self, blocks: Vec<usize>) -> Self {
        self.blocks = Some(blocks);
        self
    }

    fn resolved_blocks(&self, d: usize) -> Result<Option<Vec<usize>>> {
        match &self.blocks {
            None => Ok(None),
            Some(b) if b.len() == 1 => Ok(Some(vec![b[0]; d])),
            Some(b) if b.len() == d => Ok(Some(b.clone())),
            Some(b) => Err(invalid(format!("blocks has {} entries, expected 1 or {}", b.len(), d))),
        }
    }

    pub fn build(&self) -> Result<Built> {
        let sources = [self.problem.is_some(), self.expression.is_some(), self.design.is_some()];
        if sources.iter().filter(|&&s| s).count() != 1 {
            return Err(invalid("specify exactly one of problem, expression or design"));
        }
        if let Some(text) = &self.design {
            let design = read_design_csv(text.as_bytes())?;
            let d = design.points.first().map_or(0, Vec::len);
            if let Some(dim) = self.dim {
                if dim != d {
                    return Err(invalid(format!("design has {} columns, dim is {}", d, dim)));
                }
            }
            let mut b = FeatureObject::builder(design.points, design.objectives)
                .maybe_blocks(self.resolved_blocks(d)?)
                .minimize(self.minimize.unwrap_or(true));
            if let Some(l) = &self.lower {
                b = b.lower(broadcast(l.clone(), d, "lower")?);
            }
            if let Some(u) = &self.upper {
                b = b.upper(broadcast(u.clone(), d, "upper")?);
            }
            return Ok(Built {
                object: Arc::new(b.build()?),
                problem: None,
            });
        }
        let d = self.dim.ok_or_else(|| invalid("dim is required"))?;
        if d == 0 {
            return Err(invalid("dim must be ≥ 1"));
        }
        let problem = match (&self.problem, &self.expression) {
            (Some(name), _) => make_problem(name, d, self.instance)?,
            (_, Some(text)) => {
                let lower = broadcast(self.lower.clone().unwrap_or(vec![-5.0]), d, "lower")?;
                let upper = broadcast(self.upper.clone().unwrap_or(vec![5.0]), d, "upper")?;
                Problem::from_expression(text, d, lower, upper)?
            }
            _ => unreachable!(),
        };
        let lower = match &self.lower {
            Some(l) => broadcast(l.clone(), d, "lower")?,
            None => problem.lower().to_vec(),
        };
        let upper = match &self.upper {
            Some(u) => broadcast(u.clone(), d, "upper")?,
            None => problem.upper().to_vec(),
        };
        let n = self.n.unwrap_or(N_PER_DIM * d);
        let spec = SampleSpec {
            n_obs: n,
            dim: d,
            lower: lower.clone(),
            upper: upper.clone(),
            method: self.sample,
            seed: self.seed,
        };
        let x = create_initial_sample(&spec)?;
        let y = x
            .iter()
            .map(|p| problem.try_evaluate(p))
            .collect::<Result<Vec<f64>>>()?;
        let f: Arc<dyn Objective> = Arc::new(problem.clone());
        let object = FeatureObject::builder(x, y)
            .bounds(lower, upper)
            .maybe_blocks(self.resolved_blocks(d)?)
            .function(f)
            .minimize(self.minimize.unwrap_or(true))
            .build()?;
        Ok(Built {
            object: Arc::new(object),
            problem: Some(problem),
        })
    }
}

/// One problem instance of a batch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub problem: String,
    pub seed: Option<u64>,
    pub dim: usize,
}

/// A rejected input row, numbered from 1 after the header.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RowError {
    pub row: usize,
    pub message: String,
}

/// Reads instances from CSV with columns `problem,seed,dim`, or `dim` alone
/// in which case every row uses `default_problem` and the row number as its
/// seed. Malformed rows are returned separately.
pub fn parse_instances_csv(text: &str, default_problem: &str) -> Result<(Vec<Instance>, Vec<RowError>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_lowercase).collect();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let dim_col = col("dim").ok_or_else(|| invalid("instance CSV needs a `dim` column"))?;
    let problem_col = col("problem");
    let seed_col = col("seed");
    let mut instances = Vec::new();
    let mut errors = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 1;
        let parsed = rec.map_err(|e| e.to_string()).and_then(|rec| {
            let field = |c: usize| rec.get(c).filter(|s| !s.is_empty());
            let dim: usize = field(dim_col)
                .ok_or("missing dim")?
                .parse()
                .map_err(|_| "dim is not a positive integer".to_string())?;
            if dim == 0 {
                return Err("dim must be ≥ 1".to_string());
            }
            let problem = problem_col
                .and_then(field)
                .unwrap_or(default_problem)
                .to_string();
            let seed = match seed_col.and_then(field) {
                Some(s) => Some(s.parse().map_err(|_| format!("bad seed `{}`", s))?),
                None if problem_col.is_none() => Some(row as u64),
                None => None,
            };
            Ok(Instance { problem, seed, dim })
        });
        match parsed {
            Ok(i) => instances.push(i),
            Err(message) => errors.push(RowError { row, message }),
        }
    }
    Ok((instances, errors))
}

/// Settings shared by every row of a batch.
#[derive(Debug, Clone)]
pub struct BatchConfig {
    pub sets: Vec<FeatureSet>,
    pub reps: usize,
    /// Sample size; defaults to `N_PER_DIM · dim`.
    pub n: Option<usize>,
    pub sample: SampleMethod,
    pub blocks: Option<Vec<usize>>,
    pub control: Control,
    /// Master seed from which every sample seed is derived.
    pub seed: u64,
}

impl Default for BatchConfig {
    fn default() -> Self {
        BatchConfig {
            sets: FeatureSet::ALL.to_vec(),
            reps: 1,
            n: None,
            sample: SampleMethod::Uniform,
            blocks: None,
            control: Control::default(),
            seed: 1,
        }
    }
}

/// One instance × replication.
#[derive(Debug)]
pub struct BatchRow {
    pub instance: Instance,
    pub replication: usize,
    pub sample_seed: u64,
    pub results: Vec<(FeatureSet, Result<FeatureVector>)>,
}

impl BatchRow {
    pub fn failed_sets(&self) -> usize {
        self.results.iter().filter(|r| r.1.is_err()).count()
    }
}

/// Sample seed of replication `rep` of instance number `index`.
pub fn sample_seed(master: u64, index: usize, rep: usize) -> u64 {
    rng::derive_seed(master, &format!("batch/{}", index), rep as u64)
}

/// Computes one row: builds the object and runs every requested set.
pub fn compute_row(spec: &ObjectSpec, sets: &[FeatureSet], control: &Control) -> Vec<(FeatureSet, Result<FeatureVector>)> {
    match spec.build() {
        Ok(built) => calculate_features(&built.object, sets, control, spec.seed),
        Err(e) => {
            let msg = e.to_string();
            sets.iter().map(|&s| (s, Err(Error::InvalidInput(msg.clone())))).collect()
        }
    }
}

/// Runs all instances × replications on the current rayon pool. Rows come
/// back in input order, replications innermost. `progress` is called once
/// per finished row.
pub fn run_batch(instances: &[Instance], config: &BatchConfig, progress: &(dyn Fn() + Sync)) -> Vec<BatchRow> {
    let jobs: Vec<(usize, usize)> = (0..instances.len())
        .flat_map(|i| (0..config.reps).map(move |r| (i, r)))
        .collect();
    jobs.par_iter()
        .map(|&(i, r)| {
            let inst = &instances[i];
            let seed = sample_seed(config.seed, i, r);
            let spec = ObjectSpec {
                problem: Some(inst.problem.clone()),
                instance: inst.seed,
                dim: Some(inst.dim),
                n: config.n,
                sample: config.sample,
                seed,
                blocks: config.blocks.clone(),
                ..Default::default()
            };
            let results = compute_row(&spec, &config.sets, &config.control);
            progress();
            BatchRow {
                instance: inst.clone(),
                replication: r + 1,
                sample_seed: seed,
                results,
            }
        })
        .collect()
}

pub const META_COLUMNS: [&str; 5] = ["problem", "seed", "dim", "replication", "sample_seed"];

/// Canonical column names of `sets`.
pub fn columns(sets: &[FeatureSet], control: &Control) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for &s in sets {
        out.extend(feature_names(s, control)?);
    }
    Ok(out)
}

/// Values of one row under `columns`; absent or errored values are `Missing`.
pub fn row_values(results: &[(FeatureSet, Result<FeatureVector>)], columns: &[String]) -> Vec<FeatureValue> {
    columns
        .iter()
        .map(|c| {
            results
                .iter()
                .filter_map(|(_, r)| r.as_ref().ok())
                .find_map(|v| v.get(c))
                .unwrap_or(FeatureValue::Missing)
        })
        .collect()
}

/// `set: message` for every failed set, joined by `; `.
pub fn row_errors(results: &[(FeatureSet, Result<FeatureVector>)]) -> String {
    results
        .iter()
        .filter_map(|(s, r)| r.as_ref().err().map(|e| format!("{}: {}", s, e)))
        .collect::<Vec<_>>()
        .join("; ")
}

fn cell(v: FeatureValue) -> String {
    match v {
        FeatureValue::Missing => String::new(),
        other => other.to_string(),
    }
}

/// Writes batch rows as CSV: metadata, canonical feature columns, errors.
pub fn write_batch_csv<W: Write>(w: W, rows: &[BatchRow], sets: &[FeatureSet], control: &Control) -> Result<()> {
    let cols = columns(sets, control)?;
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<String> = META_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend(cols.iter().cloned());
    header.push("errors".to_string());
    out.write_record(&header)?;
    for row in rows {
        let mut rec = vec![
            row.instance.problem.clone(),
            row.instance.seed.map(|s| s.to_string()).unwrap_or_default(),
            row.instance.dim.to_string(),
            row.replication.to_string(),
            row.sample_seed.to_string(),
        ];
        rec.extend(row_values(&row.results, &cols).into_iter().map(cell));
        rec.push(row_errors(&row.results));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// Feature values of one row as an ordered JSON object.
pub fn row_json(results: &[(FeatureSet, Result<FeatureVector>)], columns: &[String]) -> serde_json::Value {
    let values = row_values(results, columns);
    let map: serde_json::Map<String, serde_json::Value> = columns
        .iter()
        .cloned()
        .zip(values.into_iter().map(|v| serde_json::to_value(v).unwrap_or(serde_json::Value::Null)))
        .collect();
    serde_json::Value::Object(map)
}
