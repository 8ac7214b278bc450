//! JSON file formats for annotations, candidates, results and reports.
//!
//! Every float is written with six decimal places. A file holds either one
//! image object or an array of them; readers accept both and writers keep
//! the shape they were given.

use std::collections::{BTreeMap, HashSet};
use std::io::{self, Write};
use std::path::Path;

use crowdpose::geometry::{BBox, Point};
use crowdpose::graph::PersonProposal;
use crowdpose::grouping::CandidateJoint;
use crowdpose::joints::JOINT_COUNT;
use crowdpose::metrics::{GroundTruthPerson, ImageId, ImagePredictions, LabeledKeypoint, PersonId, SceneAnnotation, Visibility};
use crowdpose::pose::{Keypoint, Pose};
use crowdpose::simulator::Provenance;
use crowdpose::{Error, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

/// One image object or a list of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    Many(Vec<T>),
    One(T),
}

impl<T> OneOrMany<T> {
    pub fn into_vec(self) -> Vec<T> {
        match self {
            Self::Many(v) => v,
            Self::One(t) => vec![t],
        }
    }

    pub fn as_slice(&self) -> &[T] {
        match self {
            Self::Many(v) => v,
            Self::One(t) => std::slice::from_ref(t),
        }
    }

    pub fn map<U>(self, f: impl FnMut(T) -> U) -> OneOrMany<U> {
        match self {
            Self::Many(v) => OneOrMany::Many(v.into_iter().map(f).collect()),
            Self::One(t) => OneOrMany::One([t].into_iter().map(f).next().expect("one item")),
        }
    }

    pub fn try_map<U>(self, f: impl FnMut(T) -> Result<U>) -> Result<OneOrMany<U>> {
        Ok(match self {
            Self::Many(v) => OneOrMany::Many(v.into_iter().map(f).collect::<Result<_>>()?),
            Self::One(t) => OneOrMany::One([t].into_iter().map(f).next().expect("one item")?),
        })
    }
}

/// Pretty printing with floats fixed at six decimals.
struct FixedFloats(PrettyFormatter<'static>);

impl Formatter for FixedFloats {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.6}")
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Pretty JSON with six-decimal floats and a trailing newline. Non-finite
/// floats become `null`.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloats(PrettyFormatter::new()));
    value
        .serialize(&mut ser)
        .map_err(|e| Error::InvalidArgument(format!("cannot serialize: {e}")))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

pub fn from_json<T: DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("{what}: {e}")))
}

pub fn read_file<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    from_json(&text, &path.display().to_string())
}

/// Writes through a temporary sibling and a rename, so readers never see a
/// partial file.
pub fn write_file_atomic(path: &Path, contents: &str) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("{} is not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    std::fs::write(&tmp, contents)
        .map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path).map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    Ok(())
}

fn bbox_from(v: [f64; 4], what: &str) -> Result<BBox> {
    let b = BBox::new(v[0], v[1], v[2], v[3]);
    if !b.is_valid() {
        return Err(Error::InvalidArgument(format!("{what}: degenerate box {v:?}")));
    }
    Ok(b)
}

fn bbox_to(b: &BBox) -> [f64; 4] {
    [b.x, b.y, b.width, b.height]
}

// ---------------------------------------------------------------------------
// Annotations

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationFile {
    pub images: Vec<ImageEntry>,
    pub annotations: Vec<AnnotationEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageEntry {
    pub id: ImageId,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationEntry {
    pub image_id: ImageId,
    pub person_id: PersonId,
    pub bbox: [f64; 4],
    /// `x, y, v` per joint; `v` is 0 (unlabeled), 1 (occluded) or 2 (visible).
    pub keypoints: Vec<KeypointValue>,
}

/// Coordinates are floats and visibility flags integers within one array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KeypointValue {
    Flag(u8),
    Coord(f64),
}

impl KeypointValue {
    fn value(self) -> f64 {
        match self {
            Self::Flag(v) => v as f64,
            Self::Coord(v) => v,
        }
    }
}

impl AnnotationFile {
    pub fn from_scenes(scenes: &[SceneAnnotation]) -> Self {
        let mut out = Self { images: Vec::new(), annotations: Vec::new() };
        for s in scenes {
            out.images.push(ImageEntry { id: s.image_id, width: s.width, height: s.height });
            for p in &s.persons {
                let mut keypoints = Vec::with_capacity(3 * JOINT_COUNT);
                for kp in &p.keypoints {
                    match kp {
                        Some(k) => keypoints.extend([
                            KeypointValue::Coord(k.location.x),
                            KeypointValue::Coord(k.location.y),
                            KeypointValue::Flag(k.visibility.flag()),
                        ]),
                        None => keypoints.extend([
                            KeypointValue::Coord(0.0),
                            KeypointValue::Coord(0.0),
                            KeypointValue::Flag(0),
                        ]),
                    }
                }
                out.annotations.push(AnnotationEntry {
                    image_id: s.image_id,
                    person_id: p.person_id,
                    bbox: bbox_to(&p.bbox),
                    keypoints,
                });
            }
        }
        out
    }

    /// Scenes in image order, persons in file order.
    pub fn into_scenes(self) -> Result<Vec<SceneAnnotation>> {
        let mut index = BTreeMap::new();
        let mut scenes = Vec::with_capacity(self.images.len());
        for img in &self.images {
            if index.insert(img.id, scenes.len()).is_some() {
                return Err(Error::Integrity(format!("image {} listed twice", img.id)));
            }
            scenes.push(SceneAnnotation { image_id: img.id, width: img.width, height: img.height, persons: Vec::new() });
        }
        for a in self.annotations {
            let &slot = index.get(&a.image_id).ok_or_else(|| {
                Error::Integrity(format!("annotation for person {} names unknown image {}", a.person_id, a.image_id))
            })?;
            let what = format!("image {} person {}", a.image_id, a.person_id);
            if a.keypoints.len() != 3 * JOINT_COUNT {
                return Err(Error::Parse(format!(
                    "{what}: expected {} keypoint values, got {}",
                    3 * JOINT_COUNT,
                    a.keypoints.len()
                )));
            }
            let mut keypoints = [None; JOINT_COUNT];
            for (k, slot) in keypoints.iter_mut().enumerate() {
                let [x, y, v] = [0, 1, 2].map(|i| a.keypoints[3 * k + i].value());
                if v.fract() != 0.0 || !(0.0..=2.0).contains(&v) {
                    return Err(Error::Parse(format!("{what}: visibility flag {v} for joint {k} is not 0, 1 or 2")));
                }
                *slot = Visibility::from_flag(v as u8)?.map(|visibility| LabeledKeypoint {
                    location: Point::new(x, y),
                    visibility,
                });
            }
            scenes[slot].persons.push(GroundTruthPerson {
                person_id: a.person_id,
                bbox: bbox_from(a.bbox, &what)?,
                keypoints,
            });
        }
        for s in &scenes {
            s.validate()?;
        }
        Ok(scenes)
    }
}

// ---------------------------------------------------------------------------
// Candidates

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidatesEntry {
    pub image_id: ImageId,
    pub proposals: Vec<ProposalEntry>,
    pub candidates: Vec<CandidateEntry>,
    /// Origin of each candidate by position; `null` marks a false positive.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Vec<Option<ProvenanceEntry>>>,
    /// Ground-truth person of each proposal by position.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proposal_owners: Option<Vec<PersonId>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProposalEntry {
    pub proposal_id: u32,
    pub bbox: [f64; 4],
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateEntry {
    pub proposal_id: u32,
    pub joint_type: usize,
    pub x: f64,
    pub y: f64,
    pub response: f64,
    pub u: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProvenanceEntry {
    pub person_id: PersonId,
    pub joint_type: usize,
}

/// Proposals and candidates of one image.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageCandidates {
    pub image_id: ImageId,
    pub proposals: Vec<PersonProposal>,
    pub candidates: Vec<CandidateJoint>,
    pub provenance: Option<Vec<Provenance>>,
    pub proposal_owners: Option<Vec<PersonId>>,
}

impl From<&ImageCandidates> for CandidatesEntry {
    fn from(c: &ImageCandidates) -> Self {
        Self {
            image_id: c.image_id,
            proposals: c
                .proposals
                .iter()
                .map(|p| ProposalEntry { proposal_id: p.proposal_id, bbox: bbox_to(&p.bbox), score: p.detection_score })
                .collect(),
            candidates: c
                .candidates
                .iter()
                .map(|c| CandidateEntry {
                    proposal_id: c.source_proposal,
                    joint_type: c.joint_type,
                    x: c.location.x,
                    y: c.location.y,
                    response: c.response,
                    u: c.response_size,
                })
                .collect(),
            provenance: c.provenance.as_ref().map(|p| {
                p.iter()
                    .map(|p| match *p {
                        Provenance::Joint { person, joint } => Some(ProvenanceEntry { person_id: person, joint_type: joint }),
                        Provenance::FalsePositive => None,
                    })
                    .collect()
            }),
            proposal_owners: c.proposal_owners.clone(),
        }
    }
}

impl TryFrom<CandidatesEntry> for ImageCandidates {
    type Error = Error;

    fn try_from(e: CandidatesEntry) -> Result<Self> {
        let image = e.image_id;
        let proposals = e
            .proposals
            .iter()
            .map(|p| PersonProposal::new(p.proposal_id, bbox_from(p.bbox, &format!("image {image} proposal {}", p.proposal_id))?, p.score))
            .collect::<Result<Vec<_>>>()?;
        let mut seen = HashSet::new();
        if let Some(p) = proposals.iter().find(|p| !seen.insert(p.proposal_id)) {
            return Err(Error::Integrity(format!("image {image}: proposal id {} repeated", p.proposal_id)));
        }
        let candidates = e
            .candidates
            .iter()
            .enumerate()
            .map(|(i, c)| {
                CandidateJoint::new(Point::new(c.x, c.y), c.response, c.joint_type, c.proposal_id, c.u)
                    .map_err(|err| Error::InvalidArgument(format!("image {image} candidate {i}: {err}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(i) = candidates.iter().position(|c| !seen.contains(&c.source_proposal)) {
            return Err(Error::Integrity(format!(
                "image {image} candidate {i} references unknown proposal {}",
                candidates[i].source_proposal
            )));
        }
        let provenance = match e.provenance {
            None => None,
            Some(p) if p.len() != candidates.len() => {
                return Err(Error::Integrity(format!(
                    "image {image}: {} provenance entries for {} candidates",
                    p.len(),
                    candidates.len()
                )))
            }
            Some(p) => Some(
                p.into_iter()
                    .map(|p| match p {
                        Some(ProvenanceEntry { person_id, joint_type }) => {
                            Provenance::Joint { person: person_id, joint: joint_type }
                        }
                        None => Provenance::FalsePositive,
                    })
                    .collect(),
            ),
        };
        if let Some(o) = &e.proposal_owners {
            if o.len() != proposals.len() {
                return Err(Error::Integrity(format!(
                    "image {image}: {} proposal owners for {} proposals",
                    o.len(),
                    proposals.len()
                )));
            }
        }
        Ok(Self { image_id: image, proposals, candidates, provenance, proposal_owners: e.proposal_owners })
    }
}

// ---------------------------------------------------------------------------
// Results

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultsEntry {
    pub image_id: ImageId,
    pub poses: Vec<PoseEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseEntry {
    pub proposal_id: u32,
    pub score: f64,
    /// `[x, y, score]` per joint, `null` where the joint was not found.
    pub keypoints: Vec<Option<[f64; 3]>>,
}

impl From<&ImagePredictions> for ResultsEntry {
    fn from(p: &ImagePredictions) -> Self {
        Self {
            image_id: p.image_id,
            poses: p
                .poses
                .iter()
                .map(|pose| PoseEntry {
                    proposal_id: pose.proposal_id,
                    score: pose.score,
                    keypoints: pose.keypoints.iter().map(|k| k.map(|k| [k.location.x, k.location.y, k.score])).collect(),
                })
                .collect(),
        }
    }
}

impl TryFrom<ResultsEntry> for ImagePredictions {
    type Error = Error;

    fn try_from(e: ResultsEntry) -> Result<Self> {
        let poses = e
            .poses
            .into_iter()
            .map(|p| {
                if p.keypoints.len() != JOINT_COUNT {
                    return Err(Error::Parse(format!(
                        "image {} proposal {}: expected {JOINT_COUNT} keypoints, got {}",
                        e.image_id,
                        p.proposal_id,
                        p.keypoints.len()
                    )));
                }
                let mut keypoints = [None; JOINT_COUNT];
                for (slot, k) in keypoints.iter_mut().zip(&p.keypoints) {
                    *slot = k.map(|[x, y, s]| Keypoint { location: Point::new(x, y), score: s });
                }
                Ok(Pose { proposal_id: p.proposal_id, keypoints, score: p.score })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { image_id: e.image_id, poses })
    }
}

pub fn read_annotations(path: &Path) -> Result<Vec<SceneAnnotation>> {
    read_file::<AnnotationFile>(path)?.into_scenes()
}

pub fn read_candidates(path: &Path) -> Result<OneOrMany<ImageCandidates>> {
    read_file::<OneOrMany<CandidatesEntry>>(path)?.try_map(ImageCandidates::try_from)
}

pub fn read_results(path: &Path) -> Result<Vec<ImagePredictions>> {
    read_file::<OneOrMany<ResultsEntry>>(path)?
        .into_vec()
        .into_iter()
        .map(ImagePredictions::try_from)
        .collect()
}
