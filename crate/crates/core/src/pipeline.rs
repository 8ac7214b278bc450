//! End-to-end association: group candidates, build the person-joint graph,
//! select edges with the global or greedy method and assemble poses.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::graph::{build_graph, PersonJointGraph, PersonProposal};
use crate::grouping::{group_candidates_in_boxes, CandidateJoint, JointNode, ProposalId};
use crate::joints::JointSpec;
use crate::metrics::PersonId;
use crate::pose::Pose;
use crate::simulator::{Provenance, SyntheticScene};
use crate::solver::{greedy_selection, poses_from_selection, solve_graph, SelectedEdge};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Global,
    Greedy,
}

#[derive(Debug, Clone)]
pub struct Association {
    pub graph: PersonJointGraph,
    pub selected: Vec<SelectedEdge>,
    /// Objective value of the selection; for the greedy method a node
    /// claimed by several proposals counts once.
    pub total_weight: f64,
    pub poses: Vec<Pose>,
}

pub fn associate(
    proposals: &[PersonProposal],
    candidates: &[CandidateJoint],
    spec: &JointSpec,
    method: Method,
) -> Result<Association> {
    let nodes = group_candidates_in_boxes(candidates, spec, proposals)?;
    let graph = build_graph(proposals, &nodes)?;
    let (selected, total_weight) = match method {
        Method::Global => {
            let a = solve_graph(&graph)?;
            (a.selected, a.total_weight)
        }
        Method::Greedy => greedy_selection(&graph),
    };
    let poses = poses_from_selection(&selected, &graph);
    Ok(Association {
        graph,
        selected,
        total_weight,
        poses,
    })
}

pub fn associate_scene(scene: &SyntheticScene, spec: &JointSpec, method: Method) -> Result<Association> {
    associate(&scene.proposals, &scene.candidates, spec, method)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AccuracyCount {
    pub correct: usize,
    pub assigned: usize,
}

impl AccuracyCount {
    pub fn rate(&self) -> Option<f64> {
        (self.assigned > 0).then(|| self.correct as f64 / self.assigned as f64)
    }
}

impl std::ops::AddAssign for AccuracyCount {
    fn add_assign(&mut self, rhs: Self) {
        self.correct += rhs.correct;
        self.assigned += rhs.assigned;
    }
}

/// Ground-truth person a node mostly stems from: largest summed member
/// response over non-spurious members, ties to the lower person id. `None`
/// for nodes made only of false positives.
pub fn dominant_person(node: &JointNode, provenance: &[Provenance]) -> Result<Option<PersonId>> {
    let mut mass: BTreeMap<PersonId, f64> = BTreeMap::new();
    for (m, &idx) in node.members.iter().zip(&node.member_indices) {
        let p = provenance.get(idx).ok_or_else(|| {
            Error::Integrity(format!("no provenance for candidate {idx}"))
        })?;
        if let Provenance::Joint { person, .. } = p {
            *mass.entry(*person).or_insert(0.0) += m.response;
        }
    }
    Ok(mass
        .into_iter()
        .fold(None, |best: Option<(PersonId, f64)>, (p, w)| match best {
            Some((_, bw)) if bw >= w => best,
            _ => Some((p, w)),
        })
        .map(|(p, _)| p))
}

/// Counts assigned joints whose node stems from the ground-truth owner of
/// the proposal that received it.
pub fn association_accuracy(
    association: &Association,
    provenance: &[Provenance],
    owners: &HashMap<ProposalId, PersonId>,
) -> Result<AccuracyCount> {
    let mut count = AccuracyCount::default();
    for s in &association.selected {
        let node = association
            .graph
            .node(s.node)
            .ok_or_else(|| Error::Integrity(format!("selected node {} not in graph", s.node)))?;
        let owner = owners
            .get(&s.proposal)
            .ok_or_else(|| Error::Integrity(format!("proposal {} has no owner", s.proposal)))?;
        count.assigned += 1;
        if dominant_person(node, provenance)? == Some(*owner) {
            count.correct += 1;
        }
    }
    Ok(count)
}

pub fn scene_accuracy(scene: &SyntheticScene, association: &Association) -> Result<AccuracyCount> {
    let owners: HashMap<ProposalId, PersonId> = scene
        .proposals
        .iter()
        .zip(&scene.proposal_owners)
        .map(|(p, &o)| (p.proposal_id, o))
        .collect();
    association_accuracy(association, &scene.provenance, &owners)
}
