//! Keypoint evaluation: OKS, COCO-style AP/AR over OKS thresholds, the
//! Crowd Index and its difficulty bands, and box-overlap statistics.

use std::collections::{HashMap, HashSet};

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::geometry::{BBox, Point};
use crate::joints::JOINT_COUNT;
use crate::pose::Pose;

pub type PersonId = u32;
pub type ImageId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Visibility {
    Occluded = 1,
    Visible = 2,
}

impl Visibility {
    /// Maps the annotation flag; `0` (unlabeled) has no visibility.
    pub fn from_flag(v: u8) -> Result<Option<Self>> {
        match v {
            0 => Ok(None),
            1 => Ok(Some(Self::Occluded)),
            2 => Ok(Some(Self::Visible)),
            other => Err(invalid(format!("visibility flag must be 0, 1 or 2, got {other}"))),
        }
    }

    pub fn flag(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledKeypoint {
    pub location: Point,
    pub visibility: Visibility,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthPerson {
    pub person_id: PersonId,
    pub bbox: BBox,
    /// `None` for unlabeled joints.
    pub keypoints: [Option<LabeledKeypoint>; JOINT_COUNT],
}

impl GroundTruthPerson {
    pub fn labeled_count(&self) -> usize {
        self.keypoints.iter().flatten().count()
    }

    pub fn labeled(&self) -> impl Iterator<Item = (usize, &LabeledKeypoint)> {
        self.keypoints.iter().enumerate().filter_map(|(k, kp)| kp.as_ref().map(|kp| (k, kp)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneAnnotation {
    pub image_id: ImageId,
    pub width: u32,
    pub height: u32,
    pub persons: Vec<GroundTruthPerson>,
}

impl SceneAnnotation {
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for p in &self.persons {
            if !seen.insert(p.person_id) {
                return Err(Error::Integrity(format!(
                    "image {} has duplicate person id {}",
                    self.image_id, p.person_id
                )));
            }
            if !(p.bbox.area() > 0.0) {
                return Err(Error::Integrity(format!(
                    "image {} person {} has an empty box",
                    self.image_id, p.person_id
                )));
            }
        }
        Ok(())
    }

    pub fn person(&self, id: PersonId) -> Option<&GroundTruthPerson> {
        self.persons.iter().find(|p| p.person_id == id)
    }
}

/// Object keypoint similarity of a prediction against one ground-truth person:
/// the mean over labeled joints of `exp(-d^2 / (2 s^2 k^2))` with `s^2` the
/// box area and `k = 2 sigma`. A joint the prediction lacks scores zero.
pub fn compute_oks(pred: &Pose, gt: &GroundTruthPerson, sigmas: &[f64; JOINT_COUNT]) -> Result<f64> {
    if let Some(k) = sigmas.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(invalid(format!("OKS sigma for joint {k} must be positive")));
    }
    let area = gt.bbox.area();
    let mut total = 0.0;
    let mut labeled = 0usize;
    for (k, kp) in gt.labeled() {
        labeled += 1;
        if let Some(p) = &pred.keypoints[k] {
            let kappa = 2.0 * sigmas[k];
            let e = p.location.distance_sq(kp.location) / (2.0 * area * kappa * kappa);
            total += (-e).exp();
        }
    }
    if labeled == 0 {
        return Err(Error::Undefined(format!(
            "person {} has no labeled joints",
            gt.person_id
        )));
    }
    Ok(total / labeled as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CrowdingLevel {
    Easy,
    Medium,
    Hard,
}

/// Band edges close on the right: 0.1 is Easy and 0.8 is Medium.
pub fn crowding_level(index: f64) -> Result<CrowdingLevel> {
    if !(index >= 0.0) {
        return Err(invalid(format!("crowd index must be non-negative, got {index}")));
    }
    Ok(if index <= 0.1 {
        CrowdingLevel::Easy
    } else if index <= 0.8 {
        CrowdingLevel::Medium
    } else {
        CrowdingLevel::Hard
    })
}

/// Mean over persons of (foreign labeled joints inside the person's box) /
/// (own labeled joints inside it). Persons with no own joints in their box
/// are left out.
pub fn crowd_index(scene: &SceneAnnotation) -> Result<f64> {
    let mut sum = 0.0;
    let mut counted = 0usize;
    for (i, person) in scene.persons.iter().enumerate() {
        let own = person
            .labeled()
            .filter(|(_, kp)| person.bbox.contains(kp.location))
            .count();
        if own == 0 {
            continue;
        }
        let foreign: usize = scene
            .persons
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, other)| {
                other
                    .labeled()
                    .filter(|(_, kp)| person.bbox.contains(kp.location))
                    .count()
            })
            .sum();
        sum += foreign as f64 / own as f64;
        counted += 1;
    }
    if counted == 0 {
        return Err(Error::Undefined(format!(
            "image {} has no person with labeled joints inside its box",
            scene.image_id
        )));
    }
    Ok(sum / counted as f64)
}

/// Pairwise box IoU averaged within each image, then across images holding
/// at least two persons.
pub fn average_bbox_iou(scenes: &[SceneAnnotation]) -> Result<f64> {
    let mut per_image = Vec::new();
    for scene in scenes {
        let n = scene.persons.len();
        if n < 2 {
            continue;
        }
        let mut sum = 0.0;
        let mut pairs = 0usize;
        for a in 0..n {
            for b in a + 1..n {
                sum += scene.persons[a].bbox.iou(&scene.persons[b].bbox);
                pairs += 1;
            }
        }
        per_image.push(sum / pairs as f64);
    }
    if per_image.is_empty() {
        return Err(Error::Undefined("no image has two or more persons".into()));
    }
    Ok(per_image.iter().sum::<f64>() / per_image.len() as f64)
}

/// `0.50, 0.55, ..., 0.95`.
pub fn coco_oks_thresholds() -> Vec<f64> {
    (0..10).map(|i| (50 + 5 * i) as f64 / 100.0).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImagePredictions {
    pub image_id: ImageId,
    pub poses: Vec<Pose>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub map_50_95: f64,
    pub map_50: f64,
    pub map_75: f64,
    pub mar_50_95: f64,
    pub mar_50: f64,
    pub mar_75: f64,
    /// mAP over the thresholds restricted to each crowding band; `None` when
    /// the band holds no labeled person.
    pub ap_easy: Option<f64>,
    pub ap_medium: Option<f64>,
    pub ap_hard: Option<f64>,
    pub images: usize,
    pub ground_truths: usize,
    pub predictions: usize,
}

struct ImageEval {
    level: Option<CrowdingLevel>,
    gt_count: usize,
    /// Prediction scores, highest first.
    scores: Vec<f64>,
    /// `matched[t][d]`: prediction `d` is a true positive at threshold `t`.
    matched: Vec<Vec<bool>>,
}

fn evaluate_image(
    scene: &SceneAnnotation,
    poses: &[&Pose],
    thresholds: &[f64],
    sigmas: &[f64; JOINT_COUNT],
) -> Result<ImageEval> {
    let gts: Vec<&GroundTruthPerson> = scene.persons.iter().filter(|p| p.labeled_count() > 0).collect();
    let mut order: Vec<&Pose> = poses.to_vec();
    order.sort_by(|a, b| b.score.total_cmp(&a.score));

    let oks: Vec<Vec<f64>> = order
        .iter()
        .map(|p| gts.iter().map(|g| compute_oks(p, g, sigmas)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;

    let matched = thresholds
        .iter()
        .map(|&t| {
            let mut taken = vec![false; gts.len()];
            oks.iter()
                .map(|row| {
                    let mut best: Option<(usize, f64)> = None;
                    for (g, &s) in row.iter().enumerate() {
                        if taken[g] || s < t {
                            continue;
                        }
                        if best.is_none_or(|(_, b)| s > b) {
                            best = Some((g, s));
                        }
                    }
                    match best {
                        Some((g, _)) => {
                            taken[g] = true;
                            true
                        }
                        None => false,
                    }
                })
                .collect()
        })
        .collect();

    Ok(ImageEval {
        level: crowd_index(scene).ok().map(|ci| crowding_level(ci).expect("index is non-negative")),
        gt_count: gts.len(),
        scores: order.iter().map(|p| p.score).collect(),
        matched,
    })
}

/// AP (101-point interpolated) and final recall at one threshold, pooling the
/// ranked predictions of the given images.
fn precision_recall(images: &[&ImageEval], t: usize) -> Option<(f64, f64)> {
    let npos: usize = images.iter().map(|e| e.gt_count).sum();
    if npos == 0 {
        return None;
    }
    // Stable merge: score, then image order, then rank within the image.
    let mut ranked: Vec<(f64, usize, usize, bool)> = images
        .iter()
        .enumerate()
        .flat_map(|(img, e)| {
            e.scores
                .iter()
                .zip(&e.matched[t])
                .enumerate()
                .map(move |(rank, (&s, &tp))| (s, img, rank, tp))
        })
        .collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut precision = Vec::with_capacity(ranked.len());
    let mut recall = Vec::with_capacity(ranked.len());
    let (mut tp, mut fp) = (0usize, 0usize);
    for &(_, _, _, hit) in &ranked {
        if hit {
            tp += 1;
        } else {
            fp += 1;
        }
        precision.push(tp as f64 / (tp + fp) as f64);
        recall.push(tp as f64 / npos as f64);
    }
    for i in (1..precision.len()).rev() {
        if precision[i] > precision[i - 1] {
            precision[i - 1] = precision[i];
        }
    }
    let ap = (0..=100)
        .map(|k| {
            let r = k as f64 / 100.0;
            let idx = recall.partition_point(|&x| x < r);
            precision.get(idx).copied().unwrap_or(0.0)
        })
        .sum::<f64>()
        / 101.0;
    Some((ap, tp as f64 / npos as f64))
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// COCO-protocol keypoint evaluation. Per image, predictions in descending
/// score order claim the unmatched ground truth of highest OKS at or above
/// the threshold. Images are processed in ascending id order.
pub fn evaluate(
    predictions: &[ImagePredictions],
    annotations: &[SceneAnnotation],
    thresholds: &[f64],
    sigmas: &[f64; JOINT_COUNT],
) -> Result<EvalReport> {
    if thresholds.is_empty() || thresholds.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(invalid("OKS thresholds must be a non-empty list within [0, 1]"));
    }
    let mut scenes: Vec<&SceneAnnotation> = annotations.iter().collect();
    scenes.sort_by_key(|s| s.image_id);
    if let Some(w) = scenes.windows(2).find(|w| w[0].image_id == w[1].image_id) {
        return Err(Error::Integrity(format!("image {} annotated twice", w[0].image_id)));
    }
    for s in &scenes {
        s.validate()?;
    }
    let slot: HashMap<ImageId, usize> = scenes.iter().enumerate().map(|(i, s)| (s.image_id, i)).collect();

    let mut per_image: Vec<Vec<&Pose>> = vec![Vec::new(); scenes.len()];
    for p in predictions {
        let i = *slot.get(&p.image_id).ok_or_else(|| {
            Error::Integrity(format!("predictions reference unannotated image {}", p.image_id))
        })?;
        per_image[i].extend(p.poses.iter());
    }

    let evals = scenes
        .iter()
        .zip(&per_image)
        .map(|(s, poses)| evaluate_image(s, poses, thresholds, sigmas))
        .collect::<Result<Vec<_>>>()?;

    let all: Vec<&ImageEval> = evals.iter().collect();
    let per_t: Vec<(f64, f64)> = (0..thresholds.len())
        .map(|t| precision_recall(&all, t).unwrap_or((0.0, 0.0)))
        .collect();
    let at = |target: f64| thresholds.iter().position(|t| (t - target).abs() < 1e-9);
    let pick = |target: f64, f: fn(&(f64, f64)) -> f64| at(target).map_or(0.0, |i| f(&per_t[i]));

    let band = |level: CrowdingLevel| -> Option<f64> {
        let subset: Vec<&ImageEval> = evals.iter().filter(|e| e.level == Some(level)).collect();
        let aps: Option<Vec<f64>> = (0..thresholds.len())
            .map(|t| precision_recall(&subset, t).map(|(ap, _)| ap))
            .collect();
        aps.map(|a| mean(&a))
    };

    Ok(EvalReport {
        map_50_95: mean(&per_t.iter().map(|x| x.0).collect::<Vec<_>>()),
        map_50: pick(0.5, |x| x.0),
        map_75: pick(0.75, |x| x.0),
        mar_50_95: mean(&per_t.iter().map(|x| x.1).collect::<Vec<_>>()),
        mar_50: pick(0.5, |x| x.1),
        mar_75: pick(0.75, |x| x.1),
        ap_easy: band(CrowdingLevel::Easy),
        ap_medium: band(CrowdingLevel::Medium),
        ap_hard: band(CrowdingLevel::Hard),
        images: scenes.len(),
        ground_truths: evals.iter().map(|e| e.gt_count).sum(),
        predictions: evals.iter().map(|e| e.scores.len()).sum(),
    })
}
