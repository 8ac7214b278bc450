use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{stream_rng, Provenance, SceneSpec, Stream};
use crate::error::Result;
use crate::geometry::{BBox, Point};
use crate::graph::PersonProposal;
use crate::grouping::CandidateJoint;
use crate::joints::JOINT_COUNT;
use crate::metrics::{PersonId, SceneAnnotation};

/// Proposal boxes are enlarged by this fraction along both axes.
pub const BOX_EXTENSION: f64 = 0.3;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedProposals {
    pub proposals: Vec<PersonProposal>,
    /// Ground-truth person each proposal was derived from, by position.
    pub owners: Vec<PersonId>,
}

fn normal<R: Rng>(rng: &mut R, mean: f64, sd: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    mean + sd * z
}

fn uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn sign<R: Rng>(rng: &mut R) -> f64 {
    if rng.random_bool(0.5) {
        1.0
    } else {
        -1.0
    }
}

/// One detector box per person (center and scale jitter, then the standard
/// extension) followed, at the false-positive rate, by a shifted and
/// truncated duplicate scored lower on average.
pub fn simulate_proposals(scene: &SceneAnnotation, spec: &SceneSpec) -> Result<SimulatedProposals> {
    spec.validate()?;
    let mut rng = stream_rng(spec.seed, Stream::Proposals);
    let mut out = SimulatedProposals { proposals: Vec::new(), owners: Vec::new() };
    for person in &scene.persons {
        let gt = person.bbox;
        let c = gt.center();
        let center = Point::new(
            normal(&mut rng, c.x, spec.location_noise),
            normal(&mut rng, c.y, spec.location_noise),
        );
        let j = spec.box_scale_jitter;
        let w = gt.width * (1.0 + uniform(&mut rng, -j, j));
        let h = gt.height * (1.0 + uniform(&mut rng, -j, j));
        let bbox = BBox::from_center(center, w, h).extended(BOX_EXTENSION);
        let score = uniform(&mut rng, 0.75, 1.0);
        out.push(bbox, score, person.person_id)?;

        if rng.random_bool(spec.false_positive_rate) {
            let dx = sign(&mut rng) * uniform(&mut rng, 0.15, 0.35) * bbox.width;
            let dy = sign(&mut rng) * uniform(&mut rng, 0.05, 0.2) * bbox.height;
            let shrink = uniform(&mut rng, 0.6, 0.9);
            let c = bbox.center();
            let dup = BBox::from_center(Point::new(c.x + dx, c.y + dy), bbox.width * shrink, bbox.height * shrink);
            let score = uniform(&mut rng, 0.5, 0.85);
            out.push(dup, score, person.person_id)?;
        }
    }
    Ok(out)
}

impl SimulatedProposals {
    fn push(&mut self, bbox: BBox, score: f64, owner: PersonId) -> Result<()> {
        let id = self.proposals.len() as u32;
        self.proposals.push(PersonProposal::new(id, bbox, score)?);
        self.owners.push(owner);
        Ok(())
    }

    pub fn owner_of(&self, proposal_id: u32) -> Option<PersonId> {
        self.proposals
            .iter()
            .position(|p| p.proposal_id == proposal_id)
            .map(|i| self.owners[i])
    }
}

/// Joint candidates as a joint-candidate pose network would report them for
/// each proposal: the owner's joints near full strength, other persons'
/// joints inside the box near `mu`, and
/// occasional weak false peaks.
/// Candidates whose response falls below the peak threshold are not
/// reported, matching what peak extraction would keep.
pub fn simulate_candidates(
    scene: &SceneAnnotation,
    proposals: &SimulatedProposals,
    spec: &SceneSpec,
) -> Result<(Vec<CandidateJoint>, Vec<Provenance>)> {
    spec.validate()?;
    let mut rng = stream_rng(spec.seed, Stream::Candidates);
    let mut candidates = Vec::new();
    let mut provenance = Vec::new();
    let rn = spec.response_noise;

    for (proposal, &owner) in proposals.proposals.iter().zip(&proposals.owners) {
        let bbox = proposal.bbox;
        for k in 0..JOINT_COUNT {
            for person in &scene.persons {
                let Some(kp) = person.keypoints[k] else { continue };
                if !bbox.contains(kp.location) {
                    continue;
                }
                let own = person.person_id == owner;
                if own && rng.random_bool(spec.missing_rate) {
                    continue;
                }
                let location = Point::new(
                    normal(&mut rng, kp.location.x, spec.location_noise),
                    normal(&mut rng, kp.location.y, spec.location_noise),
                );
                let level = if own { 1.0 } else { spec.mu };
                let response = normal(&mut rng, level, rn).clamp(0.0, 1.0);
                if response < spec.peak_threshold || response <= 0.0 {
                    continue;
                }
                candidates.push(CandidateJoint::new(
                    location,
                    response,
                    k,
                    proposal.proposal_id,
                    spec.response_size,
                )?);
                provenance.push(Provenance::Joint { person: person.person_id, joint: k });
            }
            if rng.random_bool(spec.false_positive_rate) {
                let location = Point::new(
                    uniform(&mut rng, bbox.x, bbox.right()),
                    uniform(&mut rng, bbox.y, bbox.bottom()),
                );
                let response = uniform(&mut rng, 0.1, 0.4);
                candidates.push(CandidateJoint::new(
                    location,
                    response,
                    k,
                    proposal.proposal_id,
                    spec.response_size,
                )?);
                provenance.push(Provenance::FalsePositive);
            }
        }
    }
    Ok((candidates, provenance))
}
