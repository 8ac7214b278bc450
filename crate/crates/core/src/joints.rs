//! The 14-keypoint body definition and its per-joint constants.

use crate::error::{invalid, Result};

pub const JOINT_COUNT: usize = 14;

pub const JOINT_NAMES: [&str; JOINT_COUNT] = [
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
    "left_hip",
    "right_hip",
    "left_knee",
    "right_knee",
    "left_ankle",
    "right_ankle",
    "head_top",
    "neck",
];

/// MSCOCO keypoint standard deviations for the twelve shared body joints.
/// `head_top` and `neck` have no COCO counterpart and take the shoulder value.
pub const COCO_JOINT_SIGMAS: [f64; JOINT_COUNT] = [
    0.079, 0.079, // shoulders
    0.072, 0.072, // elbows
    0.062, 0.062, // wrists
    0.107, 0.107, // hips
    0.087, 0.087, // knees
    0.089, 0.089, // ankles
    0.079, // head_top
    0.079, // neck
];

pub const RIGHT_KNEE: usize = 9;

#[derive(Debug, Clone, PartialEq)]
pub struct JointSpec {
    /// Dimensionless control deviation per joint type.
    delta: [f64; JOINT_COUNT],
}

impl Default for JointSpec {
    fn default() -> Self {
        Self {
            delta: COCO_JOINT_SIGMAS,
        }
    }
}

impl JointSpec {
    pub fn with_deltas(delta: [f64; JOINT_COUNT]) -> Result<Self> {
        if let Some(k) = delta.iter().position(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(invalid(format!(
                "control deviation for {} must be positive, got {}",
                JOINT_NAMES[k], delta[k]
            )));
        }
        Ok(Self { delta })
    }

    /// The same deviation for every joint type; handy for hand-computed cases.
    pub fn uniform(delta: f64) -> Result<Self> {
        Self::with_deltas([delta; JOINT_COUNT])
    }

    pub fn joint_count(&self) -> usize {
        JOINT_COUNT
    }

    pub fn names(&self) -> &'static [&'static str; JOINT_COUNT] {
        &JOINT_NAMES
    }

    pub fn delta(&self, joint_type: usize) -> f64 {
        self.delta[joint_type]
    }

    pub fn deltas(&self) -> &[f64; JOINT_COUNT] {
        &self.delta
    }
}

pub fn joint_index(name: &str) -> Option<usize> {
    JOINT_NAMES.iter().position(|n| *n == name)
}
