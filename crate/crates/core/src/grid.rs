//! Block discretization of the decision space.
//!
//! Cells are half-open `[lo, hi)` along every axis except the last block,
//! which is closed at the upper domain boundary. Cell ids are row-major: the
//! last dimension varies fastest.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Serialize)]
pub struct CellGrid {
    blocks: Vec<usize>,
    lower: Vec<f64>,
    widths: Vec<f64>,
    total: usize,
    cell_of_point: Vec<usize>,
    /// Non-empty cells only, keyed by cell id; members in sample order.
    cells: BTreeMap<usize, Vec<usize>>,
}

impl CellGrid {
    pub fn new(blocks: &[usize], lower: &[f64], upper: &[f64], points: &[Vec<f64>]) -> Result<Self> {
        let d = blocks.len();
        if lower.len() != d || upper.len() != d {
            return Err(invalid(format!(
                "blocks has {} entries but the problem has {} dimensions",
                d,
                lower.len()
            )));
        }
        if blocks.contains(&0) {
            return Err(invalid("every entry of blocks must be >= 1"));
        }
        let mut total: usize = 1;
        for &b in blocks {
            total = total
                .checked_mul(b)
                .ok_or_else(|| invalid("total number of cells overflows"))?;
        }
        let mut widths = Vec::with_capacity(d);
        for i in 0..d {
            if !lower[i].is_finite() || !upper[i].is_finite() {
                return Err(invalid("a cell grid requires finite bounds"));
            }
            if upper[i] <= lower[i] {
                return Err(invalid(format!("dimension {} has an empty range", i + 1)));
            }
            widths.push((upper[i] - lower[i]) / blocks[i] as f64);
        }
        let mut grid = CellGrid {
            blocks: blocks.to_vec(),
            lower: lower.to_vec(),
            widths,
            total,
            cell_of_point: Vec::with_capacity(points.len()),
            cells: BTreeMap::new(),
        };
        for (i, p) in points.iter().enumerate() {
            let id = grid.cell_of(p);
            grid.cell_of_point.push(id);
            grid.cells.entry(id).or_default().push(i);
        }
        Ok(grid)
    }

    pub fn dim(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn cell_widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn total_cells(&self) -> usize {
        self.total
    }

    pub fn non_empty_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn cell_of_point(&self) -> &[usize] {
        &self.cell_of_point
    }

    /// Non-empty cells in ascending id order with their member indices.
    pub fn cells(&self) -> impl Iterator<Item = (usize, &[usize])> {
        self.cells.iter().map(|(&id, m)| (id, m.as_slice()))
    }

    pub fn members(&self, cell: usize) -> &[usize] {
        self.cells.get(&cell).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn is_empty_cell(&self, cell: usize) -> bool {
        !self.cells.contains_key(&cell)
    }

    fn axis_index(&self, axis: usize, x: f64) -> usize {
        let b = self.blocks[axis];
        let k = ((x - self.lower[axis]) / self.widths[axis]).floor();
        if k < 0.0 {
            0
        } else {
            (k as usize).min(b - 1)
        }
    }

    pub fn cell_of(&self, x: &[f64]) -> usize {
        let coords: Vec<usize> = (0..self.dim()).map(|a| self.axis_index(a, x[a])).collect();
        self.linearize(&coords)
    }

    pub fn linearize(&self, coords: &[usize]) -> usize {
        coords
            .iter()
            .zip(&self.blocks)
            .fold(0, |acc, (&c, &b)| acc * b + c)
    }

    pub fn coords(&self, mut id: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for a in (0..self.dim()).rev() {
            out[a] = id % self.blocks[a];
            id /= self.blocks[a];
        }
        out
    }

    pub fn center(&self, id: usize) -> Vec<f64> {
        self.coords(id)
            .iter()
            .enumerate()
            .map(|(a, &c)| self.lower[a] + (c as f64 + 0.5) * self.widths[a])
            .collect()
    }

    /// Cell reached from `coords` by the integer offset, if inside the grid.
    pub fn offset(&self, coords: &[usize], delta: &[i64]) -> Option<usize> {
        let mut moved = Vec::with_capacity(coords.len());
        for ((&c, &dlt), &b) in coords.iter().zip(delta).zip(&self.blocks) {
            let v = c as i64 + dlt;
            if v < 0 || v >= b as i64 {
                return None;
            }
            moved.push(v as usize);
        }
        Some(self.linearize(&moved))
    }

    /// Moore neighbours (up to 3^d - 1) of a cell, empty or not.
    pub fn moore_neighbors(&self, id: usize) -> Vec<usize> {
        let coords = self.coords(id);
        moore_offsets(self.dim())
            .iter()
            .filter_map(|off| self.offset(&coords, off))
            .collect()
    }
}

/// All offsets in {-1, 0, 1}^d except the zero vector.
pub fn moore_offsets(d: usize) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|v: Vec<i64>| {
                [-1i64, 0, 1].into_iter().map(move |s| {
                    let mut w = v.clone();
                    w.push(s);
                    w
                })
            })
            .collect();
    }
    out.retain(|v| v.iter().any(|&s| s != 0));
    out
}
