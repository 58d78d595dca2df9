//! Plot data for cell mappings, barrier trees, information content curves,
//! feature importance and function surfaces. Every structure is plain,
//! serializable geometry with category labels; styling is left to the
//! renderer.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::control::Control;
use crate::error::{invalid, Error, Result};
use crate::features::gcm::{
    build_barrier_tree, representatives, weighting, Approach, CellClass, NodeRole, TransitionModel,
};
use crate::features::ic::{ic_curves, Settings};
use crate::grid::CellGrid;
use crate::object::{FeatureObject, Objective};
use crate::problems::Problem;

pub const SCHEMA_VERSION: u32 = 1;

fn require_2d<'a>(fo: &'a FeatureObject, what: &str) -> Result<&'a CellGrid> {
    if fo.dim() != 2 {
        return Err(Error::Unsupported(format!("{} requires 2 dimensions", what)));
    }
    fo.grid().ok_or_else(|| Error::RequiresBlocks(what.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arrow {
    pub target_cell: usize,
    /// Unit direction toward the target cell's center.
    pub direction: Vec<f64>,
    /// Absorption probability; the drawn length is proportional to it.
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellPlot {
    pub id: usize,
    pub coords: Vec<usize>,
    pub center: Vec<f64>,
    pub value: f64,
    pub class: CellClass,
    /// Attractor cell the basin belongs to; `None` for uncertain cells.
    pub basin: Option<usize>,
    pub arrows: Vec<Arrow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellMappingPlot {
    pub schema_version: u32,
    pub approach: Approach,
    pub blocks: Vec<usize>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub cell_widths: Vec<f64>,
    pub cells: Vec<CellPlot>,
}

pub fn cell_mapping_plot_data(
    fo: &FeatureObject,
    approach: Approach,
    control: &Control,
) -> Result<CellMappingPlot> {
    let g = require_2d(fo, "cell mapping plot")?;
    let m = TransitionModel::build(fo, approach, weighting(control)?)?;
    Ok(cell_mapping_from_model(g, &m, approach, fo.lower(), fo.upper()))
}

pub fn cell_mapping_from_model(
    g: &CellGrid,
    m: &TransitionModel,
    approach: Approach,
    lower: &[f64],
    upper: &[f64],
) -> CellMappingPlot {
    let cells = (0..m.n_states())
        .map(|s| {
            let cell = m.cells[s];
            let center = g.center(cell);
            let class = m.class(s);
            let arrows = if class == CellClass::Attractor {
                Vec::new()
            } else {
                m.absorption[s]
                    .iter()
                    .filter(|e| e.1 > 0.0)
                    .map(|&(a, p)| {
                        let target = m.cells[m.attractors[a]];
                        let tc = g.center(target);
                        let v: Vec<f64> = tc.iter().zip(&center).map(|(t, c)| t - c).collect();
                        let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                        Arrow {
                            target_cell: target,
                            direction: v.iter().map(|x| x / len).collect(),
                            length: p,
                        }
                    })
                    .collect()
            };
            let basin = match class {
                CellClass::Uncertain => None,
                _ => m.reached(s).next().map(|a| m.cells[m.attractors[a]]),
            };
            CellPlot {
                id: cell,
                coords: g.coords(cell),
                center,
                value: m.values[s],
                class,
                basin,
                arrows,
            }
        })
        .collect();
    CellMappingPlot {
        schema_version: SCHEMA_VERSION,
        approach,
        blocks: g.blocks().to_vec(),
        lower: lower.to_vec(),
        upper: upper.to_vec(),
        cell_widths: g.cell_widths().to_vec(),
        cells,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeMode {
    #[serde(rename = "2d")]
    TwoD,
    #[serde(rename = "3d")]
    ThreeD,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNodePlot {
    pub id: usize,
    /// `leaf` or `saddle`.
    pub role: String,
    pub root: bool,
    /// Grid cell id; `None` for a synthetic root joining separate regions.
    pub cell: Option<usize>,
    pub center: Option<Vec<f64>>,
    pub height: f64,
    pub level: usize,
    pub parent: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surface {
    /// Cell-center coordinates along the two axes.
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// `values[i][j]` at (x[i], y[j]); `None` for empty cells.
    pub values: Vec<Vec<Option<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierTreePlot {
    pub schema_version: u32,
    pub approach: Approach,
    pub mode: TreeMode,
    pub nodes: Vec<TreeNodePlot>,
    pub surface: Option<Surface>,
}

pub fn barrier_tree_plot_data(
    fo: &FeatureObject,
    approach: Approach,
    mode: TreeMode,
    control: &Control,
) -> Result<BarrierTreePlot> {
    let g = require_2d(fo, "barrier tree plot")?;
    let m = TransitionModel::build(fo, approach, weighting(control)?)?;
    let mut plot = barrier_tree_from_model(g, &m, approach, mode)?;
    if mode == TreeMode::ThreeD {
        let reps = representatives(fo, approach)?;
        let b = g.blocks();
        let axis = |a: usize| -> Vec<f64> {
            (0..b[a])
                .map(|k| fo.lower()[a] + (k as f64 + 0.5) * g.cell_widths()[a])
                .collect()
        };
        plot.surface = Some(Surface {
            x: axis(0),
            y: axis(1),
            values: (0..b[0])
                .map(|i| (0..b[1]).map(|j| reps[g.linearize(&[i, j])]).collect())
                .collect(),
        });
    }
    Ok(plot)
}

pub fn barrier_tree_from_model(
    g: &CellGrid,
    m: &TransitionModel,
    approach: Approach,
    mode: TreeMode,
) -> Result<BarrierTreePlot> {
    let t = build_barrier_tree(m)?;
    let nodes = t
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let cell = n.state.map(|s| m.cells[s]);
            TreeNodePlot {
                id: i,
                role: match n.role {
                    NodeRole::Leaf => "leaf",
                    NodeRole::Saddle => "saddle",
                }
                .to_string(),
                root: i == t.root,
                cell,
                center: cell.map(|c| g.center(c)),
                height: n.height,
                level: n.level,
                parent: n.parent,
            }
        })
        .collect();
    Ok(BarrierTreePlot {
        schema_version: SCHEMA_VERSION,
        approach,
        mode,
        nodes,
        surface: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marker {
    /// One of `M0`, `H_max`, `eps_r`, `eps_s`.
    pub label: String,
    /// log10 of ε; `None` places the marker at ε = 0 (left edge).
    pub log10_eps: Option<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoContentPlot {
    pub schema_version: u32,
    pub eps: Vec<f64>,
    /// log10 of each ε; `None` for ε = 0.
    pub log10_eps: Vec<Option<f64>>,
    pub h: Vec<f64>,
    pub m: Vec<f64>,
    pub markers: Vec<Marker>,
}

pub fn info_content_plot_data(fo: &FeatureObject, control: &Control, seed: u64) -> Result<InfoContentPlot> {
    let settings = Settings::from_control(control)?;
    let c = ic_curves(fo, control, seed)?;
    let lg = |e: f64| (e > 0.0).then(|| e.log10());
    let mut markers = vec![
        Marker {
            label: "M0".to_string(),
            log10_eps: None,
            value: c.m0,
        },
        Marker {
            label: "H_max".to_string(),
            log10_eps: lg(c.eps_max),
            value: c.h_max,
        },
    ];
    if let Some(r) = c.eps_ratio {
        markers.push(Marker {
            label: "eps_r".to_string(),
            log10_eps: Some(r),
            value: settings.partial_ratio * c.m0,
        });
    }
    if let Some(s) = c.eps_s {
        markers.push(Marker {
            label: "eps_s".to_string(),
            log10_eps: Some(s),
            value: settings.settling,
        });
    }
    Ok(InfoContentPlot {
        schema_version: SCHEMA_VERSION,
        log10_eps: c.eps.iter().map(|&e| lg(e)).collect(),
        eps: c.eps,
        h: c.h,
        m: c.m,
        markers,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub name: String,
    pub count: usize,
    pub frequency: f64,
    pub important: bool,
    /// Selection per fold.
    pub selected: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportancePlot {
    pub schema_version: u32,
    pub folds: usize,
    pub threshold: f64,
    pub features: Vec<FeatureImportance>,
}

/// Selection frequencies of features chosen per cross-validation fold.
pub fn feature_importance_plot_data(selections: &[Vec<String>], threshold: f64) -> Result<FeatureImportancePlot> {
    if selections.is_empty() {
        return Err(invalid("feature importance needs at least one fold"));
    }
    let folds = selections.len();
    let mut chosen: BTreeMap<&str, Vec<bool>> = BTreeMap::new();
    for (k, fold) in selections.iter().enumerate() {
        for name in fold {
            chosen.entry(name.as_str()).or_insert_with(|| vec![false; folds])[k] = true;
        }
    }
    let mut features: Vec<FeatureImportance> = chosen
        .into_iter()
        .map(|(name, selected)| {
            let count = selected.iter().filter(|&&s| s).count();
            let frequency = count as f64 / folds as f64;
            FeatureImportance {
                name: name.to_string(),
                count,
                frequency,
                important: frequency >= threshold,
                selected,
            }
        })
        .collect();
    features.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.name.cmp(&b.name)));
    Ok(FeatureImportancePlot {
        schema_version: SCHEMA_VERSION,
        folds,
        threshold,
        features,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionGrid {
    pub schema_version: u32,
    pub dim: usize,
    pub resolution: usize,
    /// Grid coordinates per axis.
    pub axes: Vec<Vec<f64>>,
    /// Row-major values, last axis fastest; `None` where evaluation failed.
    pub values: Vec<Option<f64>>,
}

pub fn objective_grid(
    f: &dyn Objective,
    lower: &[f64],
    upper: &[f64],
    resolution: usize,
) -> Result<FunctionGrid> {
    let d = lower.len();
    if !(1..=2).contains(&d) {
        return Err(Error::Unsupported("function plot requires 1 or 2 dimensions".to_string()));
    }
    if resolution < 2 {
        return Err(invalid("resolution must be ≥ 2"));
    }
    if lower.iter().chain(upper).any(|v| !v.is_finite()) {
        return Err(Error::UnboundedDomain);
    }
    let axes: Vec<Vec<f64>> = (0..d)
        .map(|a| {
            (0..resolution)
                .map(|k| lower[a] + (upper[a] - lower[a]) * k as f64 / (resolution - 1) as f64)
                .collect()
        })
        .collect();
    let mut values = Vec::with_capacity(resolution.pow(d as u32));
    if d == 1 {
        for &x in &axes[0] {
            values.push(Some(f.evaluate(&[x])).filter(|v| v.is_finite()));
        }
    } else {
        for &x in &axes[0] {
            for &y in &axes[1] {
                values.push(Some(f.evaluate(&[x, y])).filter(|v| v.is_finite()));
            }
        }
    }
    Ok(FunctionGrid {
        schema_version: SCHEMA_VERSION,
        dim: d,
        resolution,
        axes,
        values,
    })
}

pub fn function_grid(problem: &Problem, resolution: usize) -> Result<FunctionGrid> {
    objective_grid(problem, problem.lower(), problem.upper(), resolution)
}
