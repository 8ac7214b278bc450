use rand::Rng;

use super::skeleton::Body;
use super::{stream_rng, SceneSpec, Stream};
use crate::error::Result;
use crate::geometry::{BBox, Point};
use crate::joints::JOINT_COUNT;
use crate::metrics::{crowd_index, GroundTruthPerson, LabeledKeypoint, SceneAnnotation, Visibility};

pub const MAX_PLACEMENT_ATTEMPTS: usize = 64;
/// Achieved index within this distance of the target counts as met.
pub const CROWD_INDEX_TOLERANCE: f64 = 0.1;
/// Searching stops early once this close.
const EARLY_STOP: f64 = 0.04;
const MAX_SPREAD: f64 = 3.0;
/// Minimum torso distance between two persons, in mean body widths.
const MIN_SEPARATION: f64 = 0.35;
const SEPARATION_RETRIES: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedScene {
    pub annotation: SceneAnnotation,
    pub crowd_index: f64,
    /// Whether the achieved index lies within the tolerance of the target.
    pub target_met: bool,
    pub attempts: usize,
}

/// Places articulated skeletons so that the scene's Crowd Index approaches
/// the target. Each attempt lays persons out around earlier ones at a given
/// spread (in body widths); the spread is bisected on the measured index.
/// When no attempt lands within tolerance the closest one is returned with
/// `target_met` unset.
pub fn generate_scene(spec: &SceneSpec) -> Result<GeneratedScene> {
    spec.validate()?;
    let mut rng = stream_rng(spec.seed, Stream::Placement);
    let n = rng.random_range(spec.person_count.0..=spec.person_count.1);

    let (mut lo, mut hi) = (0.0, MAX_SPREAD);
    let mut spread = 1.0;
    let mut best: Option<(f64, SceneAnnotation)> = None;
    let mut attempts = 0;
    while attempts < MAX_PLACEMENT_ATTEMPTS {
        attempts += 1;
        let annotation = place(spec, n, spread, &mut rng);
        let index = crowd_index(&annotation)?;
        let err = (index - spec.target_crowd_index).abs();
        if best.as_ref().is_none_or(|(b, _)| err < (b - spec.target_crowd_index).abs()) {
            best = Some((index, annotation));
        }
        if err <= EARLY_STOP || n == 1 {
            break;
        }
        if index > spec.target_crowd_index {
            lo = spread;
        } else {
            hi = spread;
        }
        if hi - lo < 0.02 {
            lo = (spread - 0.3f64).max(0.0);
            hi = (spread + 0.3f64).min(MAX_SPREAD);
        }
        spread = (lo + hi) / 2.0;
    }
    let (index, annotation) = best.expect("at least one attempt");
    Ok(GeneratedScene {
        annotation,
        crowd_index: index,
        target_met: (index - spec.target_crowd_index).abs() <= CROWD_INDEX_TOLERANCE,
        attempts,
    })
}

fn place<R: Rng>(spec: &SceneSpec, n: usize, spread: f64, rng: &mut R) -> SceneAnnotation {
    let (w, h) = (spec.width as f64, spec.height as f64);
    let mut persons: Vec<GroundTruthPerson> = Vec::with_capacity(n);
    for i in 0..n {
        let body = Body::sample(rng);
        let size = body.bbox_at(Point::new(0.0, 0.0));
        let wanted = if i == 0 {
            Point::new(rng.random_range(0.0..=w), rng.random_range(0.0..=h))
        } else {
            beside(&persons[rng.random_range(0..i)], &size, spread, rng)
        };
        let wanted = separated(wanted, &body, &persons, spread, rng);
        // Keep the whole box in the image when it fits.
        let clamp = |v: f64, half: f64, limit: f64| {
            if 2.0 * half >= limit {
                limit / 2.0
            } else {
                v.clamp(half, limit - half)
            }
        };
        // The box is not centered on the body origin, so clamp the box and
        // shift the body by the same amount.
        let offset = size.center();
        let bc = Point::new(
            clamp(wanted.x + offset.x, size.width / 2.0, w),
            clamp(wanted.y + offset.y, size.height / 2.0, h),
        );
        let center = Point::new(bc.x - offset.x, bc.y - offset.y);
        let joints = body.joints_at(center);
        let mut keypoints = [None; JOINT_COUNT];
        for (slot, p) in keypoints.iter_mut().zip(joints) {
            *slot = Some(LabeledKeypoint {
                location: p,
                visibility: Visibility::Visible,
            });
        }
        persons.push(GroundTruthPerson {
            person_id: i as u32,
            bbox: body.bbox_at(center),
            keypoints,
        });
    }
    SceneAnnotation {
        image_id: spec.image_id,
        width: spec.width,
        height: spec.height,
        persons,
    }
}

/// Center for a new person next to `anchor`, `spread` body widths away
/// horizontally with a smaller vertical offset.
fn beside<R: Rng>(anchor: &GroundTruthPerson, size: &BBox, spread: f64, rng: &mut R) -> Point {
    let a = anchor.bbox;
    let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let width = (a.width + size.width) / 2.0;
    let height = (a.height + size.height) / 2.0;
    let c = a.center();
    Point::new(
        c.x + side * spread * width * rng.random_range(0.5..=1.0),
        c.y + spread * 0.25 * height * rng.random_range(-1.0..=1.0),
    )
}

/// Nudges a proposed center until the new body keeps its distance from every
/// placed one. Two people cannot occupy the same spot, so torsos stay at
/// least `MIN_SEPARATION` body widths apart; after a bounded number of
/// retries the last candidate is kept.
fn separated<R: Rng>(
    mut wanted: Point,
    body: &Body,
    placed: &[GroundTruthPerson],
    spread: f64,
    rng: &mut R,
) -> Point {
    let size = body.bbox_at(Point::new(0.0, 0.0));
    for _ in 0..SEPARATION_RETRIES {
        let torso = torso_center(&body.joints_at(wanted));
        let crowded = placed.iter().any(|p| {
            let other = torso_center(&p.keypoints.map(|k| k.expect("simulated joints are labeled").location));
            let min = MIN_SEPARATION * (p.bbox.width + size.width) / 2.0;
            torso.distance(other) < min
        });
        if !crowded {
            break;
        }
        let anchor = &placed[rng.random_range(0..placed.len())];
        wanted = beside(anchor, &size, spread.max(MIN_SEPARATION), rng);
    }
    wanted
}

fn torso_center(joints: &[Point; JOINT_COUNT]) -> Point {
    let idx = [0, 1, 6, 7];
    let (sx, sy) = idx.iter().fold((0.0, 0.0), |(x, y), &k| (x + joints[k].x, y + joints[k].y));
    Point::new(sx / 4.0, sy / 4.0)
}
