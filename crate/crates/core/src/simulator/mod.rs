//! Synthetic crowded scenes with known ground truth.
//!
//! A scene is a set of articulated skeletons placed to reach a target Crowd
//! Index. Detector proposals and per-proposal joint candidates are then
//! simulated from the geometry, each candidate tagged with the ground-truth
//! joint it came from, so association quality can be measured exactly.
//! Everything is a pure function of the [`SceneSpec`], seed included.

mod observe;
mod placement;
mod skeleton;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::graph::PersonProposal;
use crate::grouping::CandidateJoint;
use crate::heatmap::{DEFAULT_MU, DEFAULT_PEAK_THRESHOLD, DEFAULT_SIGMA};
use crate::metrics::{ImageId, PersonId, SceneAnnotation};

pub use observe::{simulate_candidates, simulate_proposals, SimulatedProposals, BOX_EXTENSION};
pub use placement::{generate_scene, GeneratedScene, CROWD_INDEX_TOLERANCE, MAX_PLACEMENT_ATTEMPTS};
pub use skeleton::{Body, REFERENCE_HEIGHT};

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    /// Inclusive range the person count is drawn from.
    pub person_count: (usize, usize),
    pub target_crowd_index: f64,
    pub width: u32,
    pub height: u32,
    /// Standard deviation of joint and box-center jitter, in pixels.
    pub location_noise: f64,
    /// Relative box size jitter; widths and heights scale by `1 ± jitter`.
    pub box_scale_jitter: f64,
    /// Chance of a duplicate proposal per person and of a spurious
    /// candidate per proposal and joint type.
    pub false_positive_rate: f64,
    /// Chance that a proposal misses one of its own person's joints.
    pub missing_rate: f64,
    /// Response level of interference joints.
    pub mu: f64,
    /// Standard deviation of candidate responses around their level.
    pub response_noise: f64,
    /// Gaussian size `u` attached to every candidate.
    pub response_size: f64,
    pub peak_threshold: f64,
    pub image_id: ImageId,
    pub seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            person_count: (3, 8),
            target_crowd_index: 0.5,
            width: 800,
            height: 600,
            location_noise: 2.0,
            box_scale_jitter: 0.1,
            false_positive_rate: 0.1,
            missing_rate: 0.15,
            mu: DEFAULT_MU,
            response_noise: 0.05,
            response_size: DEFAULT_SIGMA,
            peak_threshold: DEFAULT_PEAK_THRESHOLD,
            image_id: 0,
            seed: 0,
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.person_count;
        if lo == 0 || lo > hi {
            return Err(invalid(format!("person count range {lo}..={hi} must be non-empty and start at 1 or more")));
        }
        if !(0.0..=1.0).contains(&self.target_crowd_index) {
            return Err(invalid(format!(
                "target crowd index must lie in [0, 1], got {}",
                self.target_crowd_index
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(invalid("image dimensions must be positive"));
        }
        for (name, rate) in [
            ("false-positive rate", self.false_positive_rate),
            ("missing-joint rate", self.missing_rate),
            ("mu", self.mu),
            ("peak threshold", self.peak_threshold),
            ("box scale jitter", self.box_scale_jitter),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(invalid(format!("{name} must lie in [0, 1], got {rate}")));
            }
        }
        for (name, v) in [("location noise", self.location_noise), ("response noise", self.response_noise)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(format!("{name} must be non-negative, got {v}")));
            }
        }
        if !(self.response_size.is_finite() && self.response_size > 0.0) {
            return Err(invalid(format!("response size must be positive, got {}", self.response_size)));
        }
        Ok(())
    }
}

/// Origin of a simulated candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Joint { person: PersonId, joint: usize },
    FalsePositive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub annotation: SceneAnnotation,
    pub crowd_index: f64,
    pub target_met: bool,
    pub proposals: Vec<PersonProposal>,
    /// Ground-truth owner of each proposal, by position.
    pub proposal_owners: Vec<PersonId>,
    pub candidates: Vec<CandidateJoint>,
    /// Origin of each candidate, by position.
    pub provenance: Vec<Provenance>,
}

impl SyntheticScene {
    pub fn owner_of(&self, proposal_id: u32) -> Option<PersonId> {
        self.proposals
            .iter()
            .position(|p| p.proposal_id == proposal_id)
            .map(|i| self.proposal_owners[i])
    }
}

/// Generates a scene and simulates its proposals and candidates.
pub fn simulate_scene(spec: &SceneSpec) -> Result<SyntheticScene> {
    let generated = generate_scene(spec)?;
    let proposals = simulate_proposals(&generated.annotation, spec)?;
    let (candidates, provenance) = simulate_candidates(&generated.annotation, &proposals, spec)?;
    Ok(SyntheticScene {
        annotation: generated.annotation,
        crowd_index: generated.crowd_index,
        target_met: generated.target_met,
        proposals: proposals.proposals,
        proposal_owners: proposals.owners,
        candidates,
        provenance,
    })
}

#[derive(Clone, Copy)]
pub(crate) enum Stream {
    Placement = 0,
    Proposals = 1,
    Candidates = 2,
}

/// Independent generator per simulation stage, so changing one stage's
/// settings never perturbs another stage's draws.
pub(crate) fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
