//! Barrier trees over the transition model's cell graph.
//!
//! Cells are added in ascending order of their representative value. A cell
//! without an already added neighbour starts a new valley (leaf); a cell that
//! touches two or more valleys merges them and becomes a saddle. Valleys still
//! separate at the end hang below a synthetic root at the highest value.

use serde::Serialize;

use super::model::TransitionModel;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeRole {
    Leaf,
    Saddle,
}

#[derive(Debug, Clone, Serialize)]
pub struct TreeNode {
    /// Model state; `None` for a synthetic root.
    pub state: Option<usize>,
    pub height: f64,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Distance from the root.
    pub level: usize,
    pub role: NodeRole,
}

#[derive(Debug, Clone, Serialize)]
pub struct BarrierTree {
    pub nodes: Vec<TreeNode>,
    pub root: usize,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut a: usize) -> usize {
        while self.0[a] != a {
            self.0[a] = self.0[self.0[a]];
            a = self.0[a];
        }
        a
    }
}

pub fn build_barrier_tree(model: &TransitionModel) -> Result<BarrierTree> {
    let n = model.n_states();
    if n < 2 {
        return Err(invalid("a barrier tree needs at least two non-empty cells"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| model.values[a].total_cmp(&model.values[b]).then(a.cmp(&b)));

    let mut uf = UnionFind((0..n).collect());
    let mut added = vec![false; n];
    // tree node currently on top of each component, keyed by its uf root
    let mut top = vec![usize::MAX; n];
    let mut nodes: Vec<TreeNode> = Vec::new();
    let new_node = |nodes: &mut Vec<TreeNode>, state: Option<usize>, height: f64, role| {
        nodes.push(TreeNode {
            state,
            height,
            parent: None,
            children: Vec::new(),
            level: 0,
            role,
        });
        nodes.len() - 1
    };

    for &s in &order {
        let mut comps: Vec<usize> = model
            .neighbors(s)
            .into_iter()
            .filter(|&t| added[t])
            .map(|t| uf.find(t))
            .collect();
        comps.sort_unstable();
        comps.dedup();
        added[s] = true;
        match comps.len() {
            0 => {
                top[s] = new_node(&mut nodes, Some(s), model.values[s], NodeRole::Leaf);
            }
            1 => {
                let r = comps[0];
                uf.0[s] = r;
            }
            _ => {
                let saddle = new_node(&mut nodes, Some(s), model.values[s], NodeRole::Saddle);
                for &r in &comps {
                    let child = top[r];
                    nodes[child].parent = Some(saddle);
                    nodes[saddle].children.push(child);
                    uf.0[r] = s;
                }
                top[s] = saddle;
            }
        }
    }

    let mut roots: Vec<usize> = (0..n).filter(|&s| uf.find(s) == s).map(|s| top[s]).collect();
    roots.sort_unstable();
    let root = if roots.len() == 1 {
        roots[0]
    } else {
        let h = model.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let r = new_node(&mut nodes, None, h, NodeRole::Saddle);
        for &c in &roots {
            nodes[c].parent = Some(r);
            nodes[r].children.push(c);
        }
        r
    };
    let mut stack = vec![root];
    while let Some(v) = stack.pop() {
        let level = nodes[v].level + 1;
        for c in nodes[v].children.clone() {
            nodes[c].level = level;
            stack.push(c);
        }
    }
    Ok(BarrierTree { nodes, root })
}

impl BarrierTree {
    pub fn leaves(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| self.nodes[i].role == NodeRole::Leaf)
            .collect()
    }

    pub fn saddles(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| self.nodes[i].role == NodeRole::Saddle)
            .collect()
    }

    pub fn levels(&self) -> usize {
        self.nodes.iter().map(|n| n.level).max().unwrap_or(0)
    }

    /// Root height minus the lowest leaf height.
    pub fn depth(&self) -> f64 {
        let lowest = self
            .leaves()
            .iter()
            .map(|&l| self.nodes[l].height)
            .fold(f64::INFINITY, f64::min);
        self.nodes[self.root].height - lowest
    }

    /// Parent height minus child height for every edge, with the child level.
    pub fn edges(&self) -> Vec<(usize, f64)> {
        self.nodes
            .iter()
            .filter_map(|n| n.parent.map(|p| (n.level, self.nodes[p].height - n.height)))
            .collect()
    }
}
