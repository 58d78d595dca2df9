//! The cell grid as an absorbing Markov chain.
//!
//! States are the non-empty cells. A cell moves to each Moore neighbour with
//! a strictly smaller representative value; cells without such a neighbour
//! absorb. Since every move goes strictly downhill the chain is acyclic and
//! absorption probabilities follow from one pass in ascending value order.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::moore_offsets;
use crate::numkit::stats::euclidean;
use crate::object::FeatureObject;

/// Probabilities at or below this count as zero when classifying cells.
pub const PROB_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Approach {
    Min,
    Mean,
    Near,
}

impl Approach {
    pub const ALL: [Approach; 3] = [Approach::Min, Approach::Mean, Approach::Near];

    pub fn id(self) -> &'static str {
        match self {
            Approach::Min => "min",
            Approach::Mean => "mean",
            Approach::Near => "near",
        }
    }
}

impl FromStr for Approach {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Approach::ALL
            .iter()
            .copied()
            .find(|a| a.id() == s)
            .ok_or_else(|| Error::UnknownApproach(s.to_string()))
    }
}

impl fmt::Display for Approach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    /// Proportional to the decrease in representative value.
    Improvement,
    Uniform,
}

impl FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "improvement" => Ok(Weighting::Improvement),
            "uniform" => Ok(Weighting::Uniform),
            _ => Err(Error::InvalidControl {
                key: "gcm.weighting".to_string(),
                reason: format!("`{}` is not one of improvement, uniform", s),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellClass {
    Attractor,
    Uncertain,
    Certain,
}

/// Representative objective value per cell id; `None` for empty cells.
pub fn representatives(fo: &FeatureObject, approach: Approach) -> Result<Vec<Option<f64>>> {
    let g = fo.grid().ok_or_else(|| Error::RequiresBlocks("gcm".to_string()))?;
    let y = fo.y();
    let mut out = vec![None; g.total_cells()];
    for (cell, members) in g.cells() {
        out[cell] = Some(match approach {
            Approach::Min => members.iter().map(|&i| y[i]).fold(f64::INFINITY, f64::min),
            Approach::Mean => members.iter().map(|&i| y[i]).sum::<f64>() / members.len() as f64,
            Approach::Near => {
                let c = g.center(cell);
                let mut best = members[0];
                for &i in members {
                    if euclidean(fo.point(i), &c) < euclidean(fo.point(best), &c) {
                        best = i;
                    }
                }
                y[best]
            }
        });
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct TransitionModel {
    pub blocks: Vec<usize>,
    /// Cell id of each state, ascending.
    pub cells: Vec<usize>,
    pub values: Vec<f64>,
    /// Outgoing probabilities per state; attractors hold a self loop.
    pub transitions: Vec<Vec<(usize, f64)>>,
    /// Attractor states, ascending.
    pub attractors: Vec<usize>,
    /// Per state: (position in `attractors`, probability), ascending.
    pub absorption: Vec<Vec<(usize, f64)>>,
    state_of: Vec<Option<usize>>,
}

fn coords(blocks: &[usize], mut id: usize) -> Vec<usize> {
    let mut out = vec![0; blocks.len()];
    for a in (0..blocks.len()).rev() {
        out[a] = id % blocks[a];
        id /= blocks[a];
    }
    out
}

fn linearize(blocks: &[usize], c: &[i64]) -> Option<usize> {
    let mut id = 0usize;
    for (&v, &b) in c.iter().zip(blocks) {
        if v < 0 || v >= b as i64 {
            return None;
        }
        id = id * b + v as usize;
    }
    Some(id)
}

impl TransitionModel {
    pub fn build(fo: &FeatureObject, approach: Approach, weighting: Weighting) -> Result<Self> {
        let reps = representatives(fo, approach)?;
        let blocks = fo.blocks().map(<[usize]>::to_vec).unwrap_or_default();
        Self::from_representatives(&blocks, &reps, weighting)
    }

    /// Builds the chain from one value per cell of a grid with `blocks`
    /// (row-major ids, last axis fastest); `None` marks an empty cell.
    pub fn from_representatives(
        blocks: &[usize],
        reps: &[Option<f64>],
        weighting: Weighting,
    ) -> Result<Self> {
        let total: usize = blocks.iter().product();
        if blocks.is_empty() || blocks.contains(&0) || reps.len() != total {
            return Err(invalid("representatives do not match the grid"));
        }
        if reps.iter().flatten().any(|v| !v.is_finite()) {
            return Err(invalid("representative values must be finite"));
        }
        let mut state_of = vec![None; total];
        let mut cells = Vec::new();
        let mut values = Vec::new();
        for (cell, v) in reps.iter().enumerate() {
            if let Some(v) = v {
                state_of[cell] = Some(cells.len());
                cells.push(cell);
                values.push(*v);
            }
        }
        if cells.is_empty() {
            return Err(invalid("grid has no non-empty cell"));
        }
        let offsets = moore_offsets(blocks.len());
        let mut transitions = Vec::with_capacity(cells.len());
        let mut attractors = Vec::new();
        for (s, &cell) in cells.iter().enumerate() {
            let c = coords(blocks, cell);
            let mut out: Vec<(usize, f64)> = Vec::new();
            for off in &offsets {
                let moved: Vec<i64> = c.iter().zip(off).map(|(&a, &o)| a as i64 + o).collect();
                let Some(t) = linearize(blocks, &moved).and_then(|n| state_of[n]) else {
                    continue;
                };
                let gain = values[s] - values[t];
                if gain > 0.0 {
                    let w = match weighting {
                        Weighting::Improvement => gain,
                        Weighting::Uniform => 1.0,
                    };
                    out.push((t, w));
                }
            }
            if out.is_empty() {
                attractors.push(s);
                out.push((s, 1.0));
            } else {
                let sum: f64 = out.iter().map(|e| e.1).sum();
                for e in &mut out {
                    e.1 /= sum;
                }
                out.sort_by_key(|e| e.0);
            }
            transitions.push(out);
        }
        let mut model = TransitionModel {
            blocks: blocks.to_vec(),
            cells,
            values,
            transitions,
            attractors,
            absorption: Vec::new(),
            state_of,
        };
        model.absorption = model.absorb();
        Ok(model)
    }

    fn absorb(&self) -> Vec<Vec<(usize, f64)>> {
        let n = self.n_states();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| self.values[a].total_cmp(&self.values[b]).then(a.cmp(&b)));
        let pos: BTreeMap<usize, usize> =
            self.attractors.iter().enumerate().map(|(k, &s)| (s, k)).collect();
        let mut out: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for s in order {
            if let Some(&k) = pos.get(&s) {
                out[s] = vec![(k, 1.0)];
                continue;
            }
            let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
            for &(t, p) in &self.transitions[s] {
                for &(k, q) in &out[t] {
                    *acc.entry(k).or_insert(0.0) += p * q;
                }
            }
            out[s] = acc.into_iter().collect();
        }
        out
    }

    pub fn n_states(&self) -> usize {
        self.cells.len()
    }

    pub fn state_of_cell(&self, cell: usize) -> Option<usize> {
        self.state_of.get(cell).copied().flatten()
    }

    pub fn is_attractor(&self, s: usize) -> bool {
        self.attractors.binary_search(&s).is_ok()
    }

    /// Attractor positions reached from `s` with non-negligible probability.
    pub fn reached(&self, s: usize) -> impl Iterator<Item = usize> + '_ {
        self.absorption[s]
            .iter()
            .filter(|e| e.1 > PROB_TOL)
            .map(|e| e.0)
    }

    pub fn class(&self, s: usize) -> CellClass {
        if self.is_attractor(s) {
            CellClass::Attractor
        } else if self.reached(s).count() >= 2 {
            CellClass::Uncertain
        } else {
            CellClass::Certain
        }
    }

    /// Non-empty Moore neighbours of a state.
    pub fn neighbors(&self, s: usize) -> Vec<usize> {
        let c = coords(&self.blocks, self.cells[s]);
        moore_offsets(self.blocks.len())
            .iter()
            .filter_map(|off| {
                let moved: Vec<i64> = c.iter().zip(off).map(|(&a, &o)| a as i64 + o).collect();
                linearize(&self.blocks, &moved).and_then(|n| self.state_of[n])
            })
            .collect()
    }

    pub fn cell_coords(&self, s: usize) -> Vec<usize> {
        coords(&self.blocks, self.cells[s])
    }

    /// Dense `(states x attractors)` absorption matrix.
    pub fn absorption_matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n_states(), self.attractors.len());
        for (s, row) in self.absorption.iter().enumerate() {
            for &(k, p) in row {
                m[(s, k)] = p;
            }
        }
        m
    }

    pub fn transition_matrix(&self) -> DMatrix<f64> {
        let n = self.n_states();
        let mut m = DMatrix::zeros(n, n);
        for (s, row) in self.transitions.iter().enumerate() {
            for &(t, p) in row {
                m[(s, t)] = p;
            }
        }
        m
    }
}
