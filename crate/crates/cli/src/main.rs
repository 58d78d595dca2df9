//! `lkit`: compute landscape features from the command line.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use lkit::features::gcm::Approach;
use lkit::numkit::stats::quantile;
use lkit::pipeline::{
    columns, parse_instances_csv, row_errors, row_json, row_values, run_batch, write_batch_csv, BatchConfig,
    ObjectSpec,
};
use lkit::problems::list_problems;
use lkit::vizdata::{self, TreeMode};
use lkit::{compute_set, Control, Error, FeatureSet, FeatureValue, SampleMethod};

#[derive(Parser)]
#[command(name = "lkit", version, about = "Landscape features for continuous black-box optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the available feature sets.
    ListSets {
        /// Exclude sets that need additional function evaluations.
        #[arg(long)]
        no_eval: bool,
        /// Exclude sets that need a cell grid.
        #[arg(long)]
        no_cellmapping: bool,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// List the built-in problems.
    ListProblems,
    /// Compute features for one problem, expression or design.
    Compute(ComputeArgs),
    /// Compute features for every instance of a CSV file, with replications.
    Batch(BatchArgs),
    /// Time every feature set over repeated runs.
    Bench(BenchArgs),
    /// Export plot data as JSON.
    Plot(PlotArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Sampling {
    Uniform,
    Lhs,
}

impl From<Sampling> for SampleMethod {
    fn from(s: Sampling) -> Self {
        match s {
            Sampling::Uniform => SampleMethod::Uniform,
            Sampling::Lhs => SampleMethod::Lhs,
        }
    }
}

#[derive(Args)]
struct Source {
    /// Built-in problem name.
    #[arg(long, group = "source")]
    problem: Option<String>,
    /// Instance seed of a seeded problem.
    #[arg(long)]
    instance: Option<u64>,
    /// Objective expression in x1, ..., xd.
    #[arg(long, group = "source")]
    expression: Option<String>,
    /// Design CSV with columns x1,...,xd,y.
    #[arg(long, group = "source")]
    design: Option<PathBuf>,
    #[arg(long)]
    dim: Option<usize>,
    /// Sample size (default 50 per dimension).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_enum, default_value_t = Sampling::Uniform)]
    sample: Sampling,
    /// Blocks per dimension, comma separated; one value applies to all.
    #[arg(long, value_delimiter = ',')]
    blocks: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    lower: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    upper: Option<Vec<f64>>,
    /// Maximize instead of minimize.
    #[arg(long)]
    maximize: bool,
}

impl Source {
    fn spec(&self, seed: u64) -> Result<ObjectSpec, Error> {
        let design = match &self.design {
            Some(p) => Some(fs::read_to_string(p)?),
            None => None,
        };
        Ok(ObjectSpec {
            problem: self.problem.clone(),
            instance: self.instance,
            expression: self.expression.clone(),
            design,
            dim: self.dim,
            n: self.n,
            sample: self.sample.into(),
            seed,
            blocks: self.blocks.clone(),
            lower: self.lower.clone(),
            upper: self.upper.clone(),
            minimize: Some(!self.maximize),
        })
    }
}

#[derive(Args)]
struct ComputeArgs {
    #[command(flatten)]
    source: Source,
    /// Comma separated set ids, or `all`.
    #[arg(long, default_value = "all")]
    sets: String,
    /// Control override `key=value`; repeatable.
    #[arg(long = "control")]
    control: Vec<String>,
    /// Seed of replication 1; replication r uses seed + r - 1.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct BatchArgs {
    /// CSV with columns problem,seed,dim or dim alone.
    #[arg(long)]
    instances: PathBuf,
    /// Problem used by rows without a problem column.
    #[arg(long, default_value = "gallagher101")]
    suite: String,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    #[arg(long, default_value = "all")]
    sets: String,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_enum, default_value_t = Sampling::Uniform)]
    sample: Sampling,
    #[arg(long, value_delimiter = ',')]
    blocks: Option<Vec<usize>>,
    #[arg(long = "control")]
    control: Vec<String>,
    /// Master seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, default_value = "all")]
    sets: String,
    #[arg(long = "control")]
    control: Vec<String>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlotKind {
    Cellmapping,
    Barriertree2d,
    Barriertree3d,
    Infocontent,
    Function,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long, value_enum)]
    kind: PlotKind,
    #[command(flatten)]
    source: Source,
    /// Representative approach for cell mapping and barrier trees.
    #[arg(long, default_value = "min")]
    approach: String,
    /// Points per axis of a function plot.
    #[arg(long, default_value_t = 100)]
    resolution: usize,
    #[arg(long = "control")]
    control: Vec<String>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn output(path: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(fs::File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn cell(v: FeatureValue) -> String {
    match v {
        FeatureValue::Missing => String::new(),
        other => other.to_string(),
    }
}

enum Outcome {
    Ok,
    Partial,
}

fn list_sets(no_eval: bool, no_cellmapping: bool, format: Format) -> Result<Outcome, Error> {
    let sets: Vec<FeatureSet> = FeatureSet::ALL
        .into_iter()
        .filter(|s| !(no_eval && s.requires_function()) && !(no_cellmapping && s.requires_blocks()))
        .collect();
    let mut out = io::stdout().lock();
    match format {
        Format::Json => {
            #[derive(Serialize)]
            struct Row {
                id: &'static str,
                requires_function: bool,
                requires_blocks: bool,
                stochastic: bool,
                description: &'static str,
            }
            let rows: Vec<Row> = sets
                .iter()
                .map(|s| Row {
                    id: s.id(),
                    requires_function: s.requires_function(),
                    requires_blocks: s.requires_blocks(),
                    stochastic: s.stochastic(),
                    description: s.description(),
                })
                .collect();
            serde_json::to_writer_pretty(&mut out, &rows)?;
            writeln!(out)?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["id", "requires_function", "requires_blocks", "stochastic", "description"])?;
            for s in sets {
                w.write_record([
                    s.id(),
                    &s.requires_function().to_string(),
                    &s.requires_blocks().to_string(),
                    &s.stochastic().to_string(),
                    s.description(),
                ])?;
            }
            w.flush()?;
        }
    }
    Ok(Outcome::Ok)
}

fn compute(a: &ComputeArgs) -> Result<Outcome, Error> {
    let sets = FeatureSet::parse_list(&a.sets)?;
    let control = Control::from_pairs(&a.control)?;
    let cols = columns(&sets, &control)?;
    let mut rows = Vec::with_capacity(a.reps);
    for r in 0..a.reps.max(1) {
        let seed = a.seed + r as u64;
        let built = a.source.spec(seed)?.build()?;
        let results = lkit::calculate_features(&built.object, &sets, &control, seed);
        rows.push((r + 1, seed, results));
    }
    let mut partial = false;
    for (_, _, results) in &rows {
        for (set, res) in results {
            if let Err(e) = res {
                eprintln!("{}: {}", set, e);
                partial = true;
            }
        }
    }
    let mut out = output(&a.out)?;
    match a.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            let mut header = vec!["replication".to_string(), "seed".to_string()];
            header.extend(cols.iter().cloned());
            header.push("errors".to_string());
            w.write_record(&header)?;
            for (rep, seed, results) in &rows {
                let mut rec = vec![rep.to_string(), seed.to_string()];
                rec.extend(row_values(results, &cols).into_iter().map(cell));
                rec.push(row_errors(results));
                w.write_record(&rec)?;
            }
            w.flush()?;
        }
        Format::Json => {
            let json: Vec<serde_json::Value> = rows
                .iter()
                .map(|(rep, seed, results)| {
                    serde_json::json!({
                        "replication": rep,
                        "seed": seed,
                        "features": row_json(results, &cols),
                        "errors": results
                            .iter()
                            .filter_map(|(s, r)| r.as_ref().err().map(|e| serde_json::json!({"set": s.id(), "message": e.to_string()})))
                            .collect::<Vec<_>>(),
                    })
                })
                .collect();
            serde_json::to_writer_pretty(&mut out, &json)?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(if partial { Outcome::Partial } else { Outcome::Ok })
}

fn batch(a: &BatchArgs) -> Result<Outcome, Error> {
    let sets = FeatureSet::parse_list(&a.sets)?;
    let control = Control::from_pairs(&a.control)?;
    let text = fs::read_to_string(&a.instances)?;
    let (instances, bad) = parse_instances_csv(&text, &a.suite)?;
    for e in &bad {
        eprintln!("row {} skipped: {}", e.row, e.message);
    }
    let config = BatchConfig {
        sets: sets.clone(),
        reps: a.reps,
        n: a.n,
        sample: a.sample.into(),
        blocks: a.blocks.clone(),
        control: control.clone(),
        seed: a.seed,
    };
    let rows = run_batch(&instances, &config, &|| {});
    let mut partial = !bad.is_empty();
    for row in &rows {
        if row.failed_sets() > 0 {
            eprintln!(
                "{} (seed {:?}, dim {}, replication {}): {}",
                row.instance.problem,
                row.instance.seed,
                row.instance.dim,
                row.replication,
                row_errors(&row.results)
            );
            partial = true;
        }
    }
    let mut out = output(&a.out)?;
    write_batch_csv(&mut out, &rows, &sets, &control)?;
    out.flush()?;
    Ok(if partial { Outcome::Partial } else { Outcome::Ok })
}

#[derive(Serialize)]
struct SetTiming {
    set: &'static str,
    median: f64,
    q1: f64,
    q3: f64,
    runs: Vec<f64>,
    error: Option<String>,
}

#[derive(Serialize)]
struct BenchReport {
    n_obs: usize,
    dim: usize,
    reps: usize,
    /// Wall-clock seconds per run.
    sets: Vec<SetTiming>,
}

fn bench(a: &BenchArgs) -> Result<Outcome, Error> {
    let sets = FeatureSet::parse_list(&a.sets)?;
    let control = Control::from_pairs(&a.control)?;
    let built = a.source.spec(a.seed)?.build()?;
    let fo = &built.object;
    let reps = a.reps.max(1);
    let mut partial = false;
    let timings = sets
        .iter()
        .map(|&set| {
            let mut runs = Vec::with_capacity(reps);
            let mut error = None;
            for _ in 0..reps {
                let t = Instant::now();
                let res = compute_set(fo, set, &control, a.seed);
                runs.push(t.elapsed().as_secs_f64());
                if let Err(e) = res {
                    error = Some(e.to_string());
                    partial = true;
                    break;
                }
            }
            SetTiming {
                set: set.id(),
                median: quantile(&runs, 0.5).unwrap_or(f64::NAN),
                q1: quantile(&runs, 0.25).unwrap_or(f64::NAN),
                q3: quantile(&runs, 0.75).unwrap_or(f64::NAN),
                runs,
                error,
            }
        })
        .collect();
    let report = BenchReport {
        n_obs: fo.n_obs(),
        dim: fo.dim(),
        reps,
        sets: timings,
    };
    let mut out = output(&a.out)?;
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    out.flush()?;
    Ok(if partial { Outcome::Partial } else { Outcome::Ok })
}

fn plot(a: &PlotArgs) -> Result<Outcome, Error> {
    let control = Control::from_pairs(&a.control)?;
    let approach: Approach = a.approach.parse()?;
    let built = a.source.spec(a.seed)?.build()?;
    let fo = &built.object;
    let json = match a.kind {
        PlotKind::Cellmapping => serde_json::to_value(vizdata::cell_mapping_plot_data(fo, approach, &control)?)?,
        PlotKind::Barriertree2d => {
            serde_json::to_value(vizdata::barrier_tree_plot_data(fo, approach, TreeMode::TwoD, &control)?)?
        }
        PlotKind::Barriertree3d => {
            serde_json::to_value(vizdata::barrier_tree_plot_data(fo, approach, TreeMode::ThreeD, &control)?)?
        }
        PlotKind::Infocontent => serde_json::to_value(vizdata::info_content_plot_data(fo, &control, a.seed)?)?,
        PlotKind::Function => {
            let p = built
                .problem
                .as_ref()
                .ok_or_else(|| Error::RequiresFunction("function plot".to_string()))?;
            serde_json::to_value(vizdata::objective_grid(p, fo.lower(), fo.upper(), a.resolution)?)?
        }
    };
    let mut out = output(&a.out)?;
    serde_json::to_writer_pretty(&mut out, &json)?;
    writeln!(out)?;
    out.flush()?;
    Ok(Outcome::Ok)
}

fn configure_threads() {
    if let Some(n) = std::env::var("LKIT_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    let result = match &cli.command {
        Command::ListSets {
            no_eval,
            no_cellmapping,
            format,
        } => list_sets(*no_eval, *no_cellmapping, *format),
        Command::ListProblems => (|| {
            let mut out = io::stdout().lock();
            serde_json::to_writer_pretty(&mut out, &list_problems())?;
            writeln!(out)?;
            Ok(Outcome::Ok)
        })(),
        Command::Compute(a) => compute(a),
        Command::Batch(a) => batch(a),
        Command::Bench(a) => bench(a),
        Command::Plot(a) => plot(a),
    };
    match result {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Partial) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(1)
        }
    }
}
