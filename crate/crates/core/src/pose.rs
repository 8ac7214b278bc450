use crate::geometry::Point;
use crate::grouping::ProposalId;
use crate::joints::JOINT_COUNT;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keypoint {
    pub location: Point,
    pub score: f64,
}

/// Final per-proposal pose. Constructed only with at least one keypoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Pose {
    pub proposal_id: ProposalId,
    pub keypoints: [Option<Keypoint>; JOINT_COUNT],
    pub score: f64,
}

impl Pose {
    /// Builds a pose scored by the mean of its keypoint scores; `None` when no
    /// keypoint is present.
    pub fn from_keypoints(proposal_id: ProposalId, keypoints: [Option<Keypoint>; JOINT_COUNT]) -> Option<Self> {
        let scores: Vec<f64> = keypoints.iter().flatten().map(|k| k.score).collect();
        if scores.is_empty() {
            return None;
        }
        let score = scores.iter().sum::<f64>() / scores.len() as f64;
        Some(Self {
            proposal_id,
            keypoints,
            score,
        })
    }

    pub fn keypoint_count(&self) -> usize {
        self.keypoints.iter().flatten().count()
    }
}
