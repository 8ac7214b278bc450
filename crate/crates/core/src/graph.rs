//! Person-joint graph: proposals on one side, joint nodes on the other, edges
//! weighted by heatmap response.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::error::{invalid, Error, Result};
use crate::geometry::BBox;
use crate::grouping::{JointNode, ProposalId};
use crate::joints::JOINT_COUNT;
use crate::solver::SparseWeights;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PersonProposal {
    pub proposal_id: ProposalId,
    pub bbox: BBox,
    pub detection_score: f64,
}

impl PersonProposal {
    pub fn new(proposal_id: ProposalId, bbox: BBox, detection_score: f64) -> Result<Self> {
        if !bbox.is_valid() {
            return Err(invalid(format!(
                "proposal {proposal_id} has a degenerate box {:?}",
                bbox
            )));
        }
        if !(0.0..=1.0).contains(&detection_score) {
            return Err(invalid(format!(
                "proposal {proposal_id} score {detection_score} outside [0, 1]"
            )));
        }
        Ok(Self {
            proposal_id,
            bbox,
            detection_score,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub proposal: ProposalId,
    pub node: usize,
    pub joint_type: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PersonJointGraph {
    /// Sorted by `proposal_id`; a proposal's position here is its row in every subgraph.
    pub persons: Vec<PersonProposal>,
    pub nodes: Vec<JointNode>,
    /// Sorted by `(joint_type, node, proposal row)`.
    pub edges: Vec<Edge>,
    row_of: HashMap<ProposalId, usize>,
    node_pos: HashMap<usize, usize>,
}

/// One joint type's slice of the graph, ready for the matching solver.
#[derive(Debug, Clone)]
pub struct Subgraph {
    pub joint_type: usize,
    /// `node_ids[col]` is the joint node behind solver column `col`.
    pub node_ids: Vec<usize>,
    pub weights: SparseWeights,
}

pub fn build_graph(proposals: &[PersonProposal], nodes: &[JointNode]) -> Result<PersonJointGraph> {
    let mut persons = proposals.to_vec();
    persons.sort_by_key(|p| p.proposal_id);
    if let Some(w) = persons.windows(2).find(|w| w[0].proposal_id == w[1].proposal_id) {
        return Err(Error::Integrity(format!("duplicate proposal id {}", w[0].proposal_id)));
    }
    let row_of: HashMap<ProposalId, usize> =
        persons.iter().enumerate().map(|(r, p)| (p.proposal_id, r)).collect();

    let mut node_pos = HashMap::with_capacity(nodes.len());
    let mut edges = Vec::new();
    for (pos, node) in nodes.iter().enumerate() {
        if node_pos.insert(node.node_id, pos).is_some() {
            return Err(Error::Integrity(format!("duplicate node id {}", node.node_id)));
        }
        if node.members.is_empty() {
            return Err(Error::Integrity(format!("node {} has no members", node.node_id)));
        }
        if node.joint_type >= JOINT_COUNT {
            return Err(Error::Integrity(format!("node {} has joint type {}", node.node_id, node.joint_type)));
        }
        let mut best: BTreeMap<usize, f64> = BTreeMap::new();
        for (m, member) in node.members.iter().enumerate() {
            if member.joint_type != node.joint_type {
                return Err(Error::Integrity(format!(
                    "node {} mixes joint types {} and {}",
                    node.node_id, node.joint_type, member.joint_type
                )));
            }
            let row = *row_of.get(&member.source_proposal).ok_or_else(|| {
                let idx = node.member_indices.get(m).copied().unwrap_or(m);
                Error::Integrity(format!(
                    "candidate {idx} (node {}) references unknown proposal {}",
                    node.node_id, member.source_proposal
                ))
            })?;
            best.entry(row)
                .and_modify(|w| *w = w.max(member.response))
                .or_insert(member.response);
        }
        edges.extend(best.into_iter().map(|(row, weight)| Edge {
            proposal: persons[row].proposal_id,
            node: node.node_id,
            joint_type: node.joint_type,
            weight,
        }));
    }
    edges.sort_by_key(|e| (e.joint_type, e.node, row_of[&e.proposal]));

    Ok(PersonJointGraph {
        persons,
        nodes: nodes.to_vec(),
        edges,
        row_of,
        node_pos,
    })
}

impl PersonJointGraph {
    pub fn row_of(&self, proposal: ProposalId) -> Option<usize> {
        self.row_of.get(&proposal).copied()
    }

    pub fn node(&self, node_id: usize) -> Option<&JointNode> {
        self.node_pos.get(&node_id).map(|&p| &self.nodes[p])
    }

    pub fn edges_of_type(&self, joint_type: usize) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.joint_type == joint_type)
    }

    /// Rows are proposals in graph order; columns are this type's nodes by ascending id.
    pub fn subgraph(&self, joint_type: usize) -> Subgraph {
        let mut node_ids: Vec<usize> = self
            .nodes
            .iter()
            .filter(|n| n.joint_type == joint_type)
            .map(|n| n.node_id)
            .collect();
        node_ids.sort_unstable();
        let col_of: HashMap<usize, usize> =
            node_ids.iter().enumerate().map(|(c, &id)| (id, c)).collect();
        let entries = self
            .edges_of_type(joint_type)
            .map(|e| (self.row_of[&e.proposal], col_of[&e.node], e.weight))
            .collect();
        let weights = SparseWeights::new(self.persons.len(), node_ids.len(), entries)
            .expect("graph edges are valid matrix entries");
        Subgraph {
            joint_type,
            node_ids,
            weights,
        }
    }

    /// Number of joint nodes per in-degree.
    pub fn degree_stats(&self) -> BTreeMap<usize, usize> {
        let mut degree: HashMap<usize, usize> = self.nodes.iter().map(|n| (n.node_id, 0)).collect();
        for e in &self.edges {
            *degree.get_mut(&e.node).expect("edge references a node") += 1;
        }
        let mut hist = BTreeMap::new();
        for d in degree.into_values() {
            *hist.entry(d).or_insert(0) += 1;
        }
        hist
    }

    /// Proposals with no incident edge.
    pub fn isolated_persons(&self) -> Vec<ProposalId> {
        let touched: HashSet<ProposalId> = self.edges.iter().map(|e| e.proposal).collect();
        self.persons
            .iter()
            .map(|p| p.proposal_id)
            .filter(|id| !touched.contains(id))
            .collect()
    }
}

pub fn degree_stats(graph: &PersonJointGraph) -> BTreeMap<usize, usize> {
    graph.degree_stats()
}
