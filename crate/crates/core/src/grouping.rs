//! Candidate joints and their clustering into joint nodes.
//!
//! Two candidates of the same joint type belong together when each lies in
//! the other's control domain, a disc of radius `u * delta` around it. The
//! pairwise relation is not transitive, so nodes are the connected components
//! of its closure.

use std::collections::HashMap;

use crate::error::{invalid, Error, Result};
use crate::geometry::{BBox, Point};
use crate::graph::PersonProposal;
use crate::joints::{JointSpec, JOINT_COUNT};

pub type ProposalId = u32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateJoint {
    pub location: Point,
    pub response: f64,
    pub joint_type: usize,
    pub source_proposal: ProposalId,
    /// Gaussian response size `u` in heatmap pixels.
    pub response_size: f64,
}

impl CandidateJoint {
    pub fn new(
        location: Point,
        response: f64,
        joint_type: usize,
        source_proposal: ProposalId,
        response_size: f64,
    ) -> Result<Self> {
        let c = Self {
            location,
            response,
            joint_type,
            source_proposal,
            response_size,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.response.is_finite() && self.response > 0.0) {
            return Err(invalid(format!("candidate response must be positive, got {}", self.response)));
        }
        if !(self.response_size.is_finite() && self.response_size > 0.0) {
            return Err(invalid(format!(
                "candidate response size must be positive, got {}",
                self.response_size
            )));
        }
        if self.joint_type >= JOINT_COUNT {
            return Err(invalid(format!("joint type {} out of range", self.joint_type)));
        }
        if !(self.location.x.is_finite() && self.location.y.is_finite()) {
            return Err(invalid("candidate location must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointNode {
    pub node_id: usize,
    pub joint_type: usize,
    /// Members in input order; never empty.
    pub members: Vec<CandidateJoint>,
    /// Position of each member in the candidate list the node was built from.
    pub member_indices: Vec<usize>,
}

impl JointNode {
    /// Highest member response from the given proposal, if it has any member here.
    pub fn response_from(&self, proposal: ProposalId) -> Option<f64> {
        self.members
            .iter()
            .filter(|m| m.source_proposal == proposal)
            .map(|m| m.response)
            .reduce(f64::max)
    }
}

/// Mutual control-domain test for two candidates of one joint type.
pub fn same_group(a: &CandidateJoint, b: &CandidateJoint, delta_k: f64) -> Result<bool> {
    if a.joint_type != b.joint_type {
        return Err(invalid(format!(
            "cannot compare joint types {} and {}",
            a.joint_type, b.joint_type
        )));
    }
    if !(delta_k.is_finite() && delta_k > 0.0) {
        return Err(invalid(format!("control deviation must be positive, got {delta_k}")));
    }
    Ok(a.location.distance(b.location) <= a.response_size.min(b.response_size) * delta_k)
}

/// Groups candidates with the spec's deviations taken as absolute radii
/// multipliers (radius `u * delta` in the candidates' own units).
pub fn group_candidates(candidates: &[CandidateJoint], spec: &JointSpec) -> Vec<JointNode> {
    let radii: Vec<f64> = candidates
        .iter()
        .map(|c| c.response_size * spec.delta(c.joint_type))
        .collect();
    group_with_radii(candidates, &radii)
}

/// Groups candidates in image pixels. The dimensionless deviation is scaled by
/// the square root of the source proposal's box area, so each candidate's
/// control radius is `u * delta * sqrt(area)`.
pub fn group_candidates_in_boxes(
    candidates: &[CandidateJoint],
    spec: &JointSpec,
    proposals: &[PersonProposal],
) -> Result<Vec<JointNode>> {
    let boxes: HashMap<ProposalId, BBox> =
        proposals.iter().map(|p| (p.proposal_id, p.bbox)).collect();
    let radii = candidates
        .iter()
        .enumerate()
        .map(|(idx, c)| {
            let bbox = boxes.get(&c.source_proposal).ok_or_else(|| {
                Error::Integrity(format!(
                    "candidate {idx} references unknown proposal {}",
                    c.source_proposal
                ))
            })?;
            Ok(c.response_size * spec.delta(c.joint_type) * bbox.area().sqrt())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(group_with_radii(candidates, &radii))
}

fn group_with_radii(candidates: &[CandidateJoint], radii: &[f64]) -> Vec<JointNode> {
    let mut by_type: Vec<Vec<usize>> = vec![Vec::new(); JOINT_COUNT];
    for (idx, c) in candidates.iter().enumerate() {
        by_type[c.joint_type].push(idx);
    }

    let mut sets = DisjointSet::new(candidates.len());
    for members in &by_type {
        for (n, &a) in members.iter().enumerate() {
            for &b in &members[n + 1..] {
                let d = candidates[a].location.distance(candidates[b].location);
                if d <= radii[a].min(radii[b]) {
                    sets.union(a, b);
                }
            }
        }
    }

    // Components keyed by root; iterating candidates in order means each
    // component is first seen at its smallest member index.
    let mut component_of_root: HashMap<usize, usize> = HashMap::new();
    let mut components: Vec<Vec<usize>> = Vec::new();
    for idx in 0..candidates.len() {
        let root = sets.find(idx);
        let slot = *component_of_root.entry(root).or_insert_with(|| {
            components.push(Vec::new());
            components.len() - 1
        });
        components[slot].push(idx);
    }
    components.sort_by_key(|members| (candidates[members[0]].joint_type, members[0]));

    components
        .into_iter()
        .enumerate()
        .map(|(node_id, member_indices)| JointNode {
            node_id,
            joint_type: candidates[member_indices[0]].joint_type,
            members: member_indices.iter().map(|&i| candidates[i]).collect(),
            member_indices,
        })
        .collect()
}

/// Response-weighted mean of member locations and the strongest member response.
pub fn weighted_center(node: &JointNode) -> (Point, f64) {
    let origin = node.members[0].location;
    let mut total = 0.0;
    let (mut dx, mut dy) = (0.0, 0.0);
    let mut score = f64::NEG_INFINITY;
    for m in &node.members {
        total += m.response;
        dx += m.response * (m.location.x - origin.x);
        dy += m.response * (m.location.y - origin.y);
        score = score.max(m.response);
    }
    let center = Point::new(origin.x + dx / total, origin.y + dy / total);
    // Rounding must not push the center outside the members' extent.
    let bounds = BBox::enclosing(node.members.iter().map(|m| m.location)).expect("node is non-empty");
    let clamped = Point::new(
        center.x.clamp(bounds.x, bounds.right()),
        center.y.clamp(bounds.y, bounds.bottom()),
    );
    (clamped, score)
}

struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut node: usize) -> usize {
        let mut root = node;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[node] != root {
            let next = self.parent[node];
            self.parent[node] = root;
            node = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.rank[a] < self.rank[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        if self.rank[a] == self.rank[b] {
            self.rank[a] += 1;
        }
    }
}
