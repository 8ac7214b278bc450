//! Greedy comparators: per-proposal best-edge association, box NMS and
//! OKS-based pose deduplication.

use std::collections::BTreeMap;

use super::{poses_from_selection, SelectedEdge};
use crate::error::{invalid, Result};
use crate::geometry::BBox;
use crate::graph::{PersonJointGraph, PersonProposal};
use crate::joints::JOINT_COUNT;
use crate::metrics::{compute_oks, GroundTruthPerson, LabeledKeypoint, Visibility};
use crate::pose::Pose;

/// Every proposal independently takes its strongest edge of each joint type,
/// ignoring whether another proposal already claimed the node. Ties go to
/// the lower node id.
///
/// The returned total credits each claimed node once, at its strongest
/// claimant: a node shared by several poses is still one joint, so the
/// figure is the weight of a feasible assignment and comparable with the
/// global optimum.
pub fn greedy_selection(graph: &PersonJointGraph) -> (Vec<SelectedEdge>, f64) {
    let mut best: BTreeMap<(usize, usize), SelectedEdge> = BTreeMap::new();
    for e in &graph.edges {
        let row = graph.row_of(e.proposal).expect("edge proposal is in the graph");
        let candidate = SelectedEdge {
            joint_type: e.joint_type,
            proposal: e.proposal,
            node: e.node,
            weight: e.weight,
        };
        best.entry((e.joint_type, row))
            .and_modify(|cur| {
                if e.weight > cur.weight || (e.weight == cur.weight && e.node < cur.node) {
                    *cur = candidate;
                }
            })
            .or_insert(candidate);
    }
    let selected: Vec<SelectedEdge> = best.into_values().collect();
    // Strongest claimant per node as (row, weight); the lower row wins ties.
    let mut credited: BTreeMap<(usize, usize), (usize, f64)> = BTreeMap::new();
    for s in &selected {
        let row = graph.row_of(s.proposal).expect("selected proposal is in the graph");
        credited
            .entry((s.joint_type, s.node))
            .and_modify(|cur| {
                if s.weight > cur.1 {
                    *cur = (row, s.weight);
                }
            })
            .or_insert((row, s.weight));
    }
    // Same summation order as the global solver: rows within a type, then types.
    let mut per_type: Vec<Vec<(usize, f64)>> = vec![Vec::new(); JOINT_COUNT];
    for ((k, _), entry) in credited {
        per_type[k].push(entry);
    }
    let subtotals: Vec<f64> = per_type
        .iter_mut()
        .map(|entries| {
            entries.sort_by_key(|e| e.0);
            entries.iter().map(|e| e.1).sum()
        })
        .collect();
    (selected, subtotals.iter().sum())
}

pub fn greedy_baseline(graph: &PersonJointGraph) -> Vec<Pose> {
    poses_from_selection(&greedy_selection(graph).0, graph)
}

/// Standard greedy box suppression by descending detection score; a box is
/// dropped when its IoU with any kept box exceeds the threshold.
pub fn bbox_nms_baseline(proposals: &[PersonProposal], iou_threshold: f64) -> Result<Vec<PersonProposal>> {
    if !(iou_threshold > 0.0 && iou_threshold < 1.0) {
        return Err(invalid(format!("IoU threshold must lie in (0, 1), got {iou_threshold}")));
    }
    let mut order: Vec<&PersonProposal> = proposals.iter().collect();
    order.sort_by(|a, b| {
        b.detection_score
            .total_cmp(&a.detection_score)
            .then(a.proposal_id.cmp(&b.proposal_id))
    });
    let mut kept: Vec<PersonProposal> = Vec::new();
    for p in order {
        if kept.iter().all(|k| k.bbox.iou(&p.bbox) <= iou_threshold) {
            kept.push(*p);
        }
    }
    Ok(kept)
}

/// OKS of `other` measured against `reference`, treating the reference's
/// keypoints as labeled ground truth scaled by their enclosing box (area
/// floored at one square pixel).
pub fn pose_similarity(reference: &Pose, other: &Pose, sigmas: &[f64; JOINT_COUNT]) -> f64 {
    let mut keypoints = [None; JOINT_COUNT];
    for (slot, kp) in keypoints.iter_mut().zip(&reference.keypoints) {
        *slot = kp.map(|k| LabeledKeypoint {
            location: k.location,
            visibility: Visibility::Visible,
        });
    }
    let extent = BBox::enclosing(reference.keypoints.iter().flatten().map(|k| k.location))
        .unwrap_or_default();
    let side = extent.area().max(1.0).sqrt();
    let bbox = BBox::from_center(extent.center(), side, side);
    let pseudo = GroundTruthPerson {
        person_id: reference.proposal_id,
        bbox,
        keypoints,
    };
    compute_oks(other, &pseudo, sigmas).unwrap_or(0.0)
}

/// Greedy pose suppression by descending pose score; a pose is dropped when
/// its similarity to any kept pose exceeds the threshold.
pub fn pose_dedup_baseline(poses: &[Pose], oks_threshold: f64, sigmas: &[f64; JOINT_COUNT]) -> Result<Vec<Pose>> {
    if !(oks_threshold > 0.0 && oks_threshold < 1.0) {
        return Err(invalid(format!("OKS threshold must lie in (0, 1), got {oks_threshold}")));
    }
    let mut order: Vec<&Pose> = poses.iter().collect();
    order.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.proposal_id.cmp(&b.proposal_id)));
    let mut kept: Vec<Pose> = Vec::new();
    for p in order {
        if kept.iter().all(|k| pose_similarity(k, p, sigmas) <= oks_threshold) {
            kept.push(p.clone());
        }
    }
    Ok(kept)
}
