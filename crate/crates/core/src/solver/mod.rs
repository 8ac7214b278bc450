//! Global joint association: per-joint-type maximum-weight matching between
//! proposals and joint nodes, pose construction, and the greedy baselines it
//! is measured against.

mod baselines;
mod lap;
mod oracle;

use std::collections::BTreeMap;

use crate::error::{invalid, Result};
use crate::graph::PersonJointGraph;
use crate::grouping::{weighted_center, ProposalId};
use crate::joints::JOINT_COUNT;
use crate::pose::{Keypoint, Pose};

pub use baselines::{bbox_nms_baseline, greedy_baseline, greedy_selection, pose_dedup_baseline, pose_similarity};
pub use oracle::{brute_force_oracle, ORACLE_MAX_DIM};

/// Sparse non-negative weight matrix in row-major (CSR) layout. Absent
/// entries are unmatchable; zero weights are dropped since they can never
/// increase a matching's total.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseWeights {
    rows: usize,
    cols: usize,
    row_start: Vec<usize>,
    col_index: Vec<usize>,
    values: Vec<f64>,
}

impl SparseWeights {
    pub fn new(rows: usize, cols: usize, mut entries: Vec<(usize, usize, f64)>) -> Result<Self> {
        for &(r, c, w) in &entries {
            if r >= rows || c >= cols {
                return Err(invalid(format!("entry ({r}, {c}) outside a {rows}x{cols} matrix")));
            }
            if w.is_nan() || w < 0.0 || w.is_infinite() {
                return Err(invalid(format!("weight at ({r}, {c}) must be finite and non-negative, got {w}")));
            }
        }
        entries.retain(|e| e.2 > 0.0);
        entries.sort_by_key(|&(r, c, _)| (r, c));
        if let Some(w) = entries.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(invalid(format!("duplicate entry at ({}, {})", w[0].0, w[0].1)));
        }
        let mut row_start = vec![0; rows + 1];
        for &(r, _, _) in &entries {
            row_start[r + 1] += 1;
        }
        for r in 0..rows {
            row_start[r + 1] += row_start[r];
        }
        Ok(Self {
            rows,
            cols,
            row_start,
            col_index: entries.iter().map(|e| e.1).collect(),
            values: entries.iter().map(|e| e.2).collect(),
        })
    }

    /// Dense constructor; `None` marks an absent pair.
    pub fn from_dense(dense: &[Vec<Option<f64>>]) -> Result<Self> {
        let rows = dense.len();
        let cols = dense.first().map_or(0, Vec::len);
        if dense.iter().any(|r| r.len() != cols) {
            return Err(invalid("ragged dense matrix"));
        }
        let entries = dense
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().enumerate().filter_map(move |(c, w)| w.map(|w| (r, c, w))))
            .collect();
        Self::new(rows, cols, entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(col, weight)` of a row, columns ascending.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_start[r]..self.row_start[r + 1];
        self.col_index[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> Option<f64> {
        self.row(r).find(|&(col, _)| col == c).map(|(_, w)| w)
    }

    pub fn max_weight(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(invalid(format!("scale factor must be positive, got {factor}")));
        }
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= factor);
        Ok(out)
    }
}

/// A partial matching given as `(row, col)` pairs in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    pub pairs: Vec<(usize, usize)>,
    /// Sum of the selected weights, accumulated in pair order.
    pub total_weight: f64,
}

impl Matching {
    pub(crate) fn from_pairs(weights: &SparseWeights, pairs: Vec<(usize, usize)>) -> Self {
        let total_weight = pairs
            .iter()
            .map(|&(r, c)| weights.get(r, c).expect("matched pair is an entry"))
            .sum();
        Self { pairs, total_weight }
    }

    pub fn is_valid_for(&self, weights: &SparseWeights) -> bool {
        let mut rows = std::collections::HashSet::new();
        let mut cols = std::collections::HashSet::new();
        self.pairs
            .iter()
            .all(|&(r, c)| rows.insert(r) && cols.insert(c) && weights.get(r, c).is_some())
    }
}

/// Maximum-weight matching of one joint-type subgraph. Rows and columns may
/// stay unmatched; among optima the lexicographically smallest pair list wins.
pub fn solve_subgraph(weights: &SparseWeights) -> Result<Matching> {
    let assignment = lap::max_weight_matching(weights);
    let pairs = assignment
        .into_iter()
        .enumerate()
        .filter_map(|(r, c)| c.map(|c| (r, c)))
        .collect();
    Ok(Matching::from_pairs(weights, pairs))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectedEdge {
    pub joint_type: usize,
    pub proposal: ProposalId,
    pub node: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Assignment {
    /// Ordered by joint type, then proposal row.
    pub selected: Vec<SelectedEdge>,
    /// Optimum of each joint type's subgraph.
    pub subtotals: [f64; JOINT_COUNT],
    /// Sum of `subtotals` in ascending joint-type order.
    pub total_weight: f64,
}

impl Assignment {
    /// Whether no proposal holds two joints of one type and no node serves two proposals.
    pub fn satisfies_constraints(&self) -> bool {
        let mut by_person = std::collections::HashSet::new();
        let mut by_node = std::collections::HashSet::new();
        self.selected
            .iter()
            .all(|s| by_person.insert((s.joint_type, s.proposal)) && by_node.insert((s.joint_type, s.node)))
    }
}

/// Solves every joint type independently and merges the results.
pub fn solve_graph(graph: &PersonJointGraph) -> Result<Assignment> {
    let mut out = Assignment::default();
    for k in 0..JOINT_COUNT {
        let sub = graph.subgraph(k);
        if sub.weights.nnz() == 0 {
            continue;
        }
        let m = solve_subgraph(&sub.weights)?;
        out.selected.extend(m.pairs.iter().map(|&(r, c)| SelectedEdge {
            joint_type: k,
            proposal: graph.persons[r].proposal_id,
            node: sub.node_ids[c],
            weight: sub.weights.get(r, c).expect("matched pair is an edge"),
        }));
        out.subtotals[k] = m.total_weight;
    }
    out.total_weight = out.subtotals.iter().sum();
    Ok(out)
}

/// Turns selected edges into poses: each selected node contributes its
/// weighted center. Proposals without any selected joint produce no pose.
pub fn poses_from_selection(selected: &[SelectedEdge], graph: &PersonJointGraph) -> Vec<Pose> {
    let mut slots: BTreeMap<usize, [Option<Keypoint>; JOINT_COUNT]> = BTreeMap::new();
    for s in selected {
        let Some(row) = graph.row_of(s.proposal) else { continue };
        let Some(node) = graph.node(s.node) else { continue };
        let (location, score) = weighted_center(node);
        slots.entry(row).or_insert([None; JOINT_COUNT])[s.joint_type] = Some(Keypoint { location, score });
    }
    slots
        .into_iter()
        .filter_map(|(row, kps)| Pose::from_keypoints(graph.persons[row].proposal_id, kps))
        .collect()
}

pub fn build_poses(assignment: &Assignment, graph: &PersonJointGraph) -> Vec<Pose> {
    poses_from_selection(&assignment.selected, graph)
}
