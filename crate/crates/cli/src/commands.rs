use std::collections::{HashMap, HashSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use crowdpose::metrics::{coco_oks_thresholds, evaluate, EvalReport, ImagePredictions};
use crowdpose::pipeline::{associate, association_accuracy, AccuracyCount, Method};
use crowdpose::simulator::{simulate_scene, SceneSpec};
use crowdpose::solver::{bbox_nms_baseline, pose_dedup_baseline};
use crowdpose::{Error, Result};

use crate::bench::{format_table, run_bench, BenchRow};
use crate::config::Config;
use crate::formats::{
    read_annotations, read_candidates, read_results, to_json, write_file_atomic, AnnotationFile, CandidatesEntry,
    ImageCandidates, OneOrMany, ResultsEntry,
};

/// Process exit status for an error: 2 for bad input the user can fix at the
/// command line (arguments, parse failures, missing files), 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_) | Error::Parse(_) => 2,
        Error::Io(e) if e.kind() == std::io::ErrorKind::NotFound => 2,
        _ => 1,
    }
}

fn emit(out: &mut dyn Write, line: std::fmt::Arguments) -> Result<()> {
    out.write_fmt(line)?;
    out.write_all(b"\n")?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthArgs {
    pub persons: (usize, usize),
    pub crowd_index: f64,
    pub scenes: usize,
    pub out: PathBuf,
    pub width: u32,
    pub height: u32,
    pub noise: f64,
    pub false_positive_rate: f64,
    pub missing_rate: f64,
}

impl Default for SynthArgs {
    fn default() -> Self {
        let s = SceneSpec::default();
        Self {
            persons: s.person_count,
            crowd_index: s.target_crowd_index,
            scenes: 1,
            out: PathBuf::from("."),
            width: s.width,
            height: s.height,
            noise: s.location_noise,
            false_positive_rate: s.false_positive_rate,
            missing_rate: s.missing_rate,
        }
    }
}

pub fn scene_stem(index: usize) -> String {
    format!("scene_{index:04}")
}

/// Scene `i` uses seed `config.seed + i` and image id `i`.
pub fn cmd_synth(args: &SynthArgs, config: &Config, out: &mut dyn Write) -> Result<()> {
    if args.scenes == 0 {
        return Err(Error::InvalidArgument("scene count must be at least 1".into()));
    }
    std::fs::create_dir_all(&args.out)
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", args.out.display())))?;
    let mut met = 0;
    let mut index_sum = 0.0;
    for i in 0..args.scenes {
        let spec = SceneSpec {
            person_count: args.persons,
            target_crowd_index: args.crowd_index,
            width: args.width,
            height: args.height,
            location_noise: args.noise,
            false_positive_rate: args.false_positive_rate,
            missing_rate: args.missing_rate,
            mu: config.mu,
            response_size: config.sigma,
            peak_threshold: config.peak_threshold,
            image_id: i as u64,
            seed: config.seed.wrapping_add(i as u64),
            ..SceneSpec::default()
        };
        let scene = simulate_scene(&spec)?;
        let stem = scene_stem(i);
        let annotations = AnnotationFile::from_scenes(std::slice::from_ref(&scene.annotation));
        write_file_atomic(&args.out.join(format!("{stem}.annotations.json")), &to_json(&annotations)?)?;
        let candidates = ImageCandidates {
            image_id: spec.image_id,
            proposals: scene.proposals.clone(),
            candidates: scene.candidates.clone(),
            provenance: Some(scene.provenance.clone()),
            proposal_owners: Some(scene.proposal_owners.clone()),
        };
        write_file_atomic(
            &args.out.join(format!("{stem}.candidates.json")),
            &to_json(&CandidatesEntry::from(&candidates))?,
        )?;
        met += scene.target_met as usize;
        index_sum += scene.crowd_index;
        emit(
            out,
            format_args!(
                "{stem}: persons {}, proposals {}, candidates {}, crowd index {:.3} (target {:.3}{})",
                scene.annotation.persons.len(),
                scene.proposals.len(),
                scene.candidates.len(),
                scene.crowd_index,
                args.crowd_index,
                if scene.target_met { "" } else { ", missed" }
            ),
        )?;
    }
    emit(
        out,
        format_args!(
            "wrote {} scene(s) to {}; mean crowd index {:.3}; targets met {met}/{}",
            args.scenes,
            args.out.display(),
            index_sum / args.scenes as f64,
            args.scenes
        ),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssociateArgs {
    pub input: PathBuf,
    pub out: PathBuf,
    pub method: Method,
    /// Suppress overlapping proposals before grouping.
    pub bbox_nms: bool,
    /// Suppress near-duplicate poses after assembly.
    pub pose_dedup: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssociateSummary {
    pub images: usize,
    pub total_weight: f64,
    /// Present when every image carries provenance and proposal owners.
    pub accuracy: Option<AccuracyCount>,
}

pub fn cmd_associate(args: &AssociateArgs, config: &Config, out: &mut dyn Write) -> Result<AssociateSummary> {
    let spec = config.joint_spec()?;
    let input = read_candidates(&args.input)?;
    let mut total_weight = 0.0;
    let mut accuracy = Some(AccuracyCount::default());
    let mut results = Vec::with_capacity(input.as_slice().len());
    for image in input.as_slice() {
        let proposals = if args.bbox_nms {
            bbox_nms_baseline(&image.proposals, config.bbox_nms_iou)?
        } else {
            image.proposals.clone()
        };
        // Candidates of suppressed proposals go with them.
        let suppressed: HashSet<u32> = image
            .proposals
            .iter()
            .map(|p| p.proposal_id)
            .filter(|id| !proposals.iter().any(|k| k.proposal_id == *id))
            .collect();
        let keep: Vec<usize> = (0..image.candidates.len())
            .filter(|&i| !suppressed.contains(&image.candidates[i].source_proposal))
            .collect();
        let candidates: Vec<_> = keep.iter().map(|&i| image.candidates[i]).collect();
        let provenance: Option<Vec<_>> = image.provenance.as_ref().map(|p| keep.iter().map(|&i| p[i]).collect());
        let assoc = associate(&proposals, &candidates, &spec, args.method)
            .map_err(|e| annotate(e, image.image_id))?;
        let poses = if args.pose_dedup {
            pose_dedup_baseline(&assoc.poses, config.oks_dedup, &config.oks_sigmas)?
        } else {
            assoc.poses.clone()
        };
        accuracy = match (accuracy, &provenance, &image.proposal_owners) {
            (Some(mut acc), Some(prov), Some(owners)) => {
                let owners: HashMap<u32, u32> =
                    image.proposals.iter().map(|p| p.proposal_id).zip(owners.iter().copied()).collect();
                acc += association_accuracy(&assoc, prov, &owners)?;
                Some(acc)
            }
            _ => None,
        };
        total_weight += assoc.total_weight;
        emit(
            out,
            format_args!(
                "image {}: persons {}, nodes {}, edges {}, poses {}, total weight {:.6}",
                image.image_id,
                assoc.graph.persons.len(),
                assoc.graph.nodes.len(),
                assoc.graph.edges.len(),
                poses.len(),
                assoc.total_weight
            ),
        )?;
        results.push(ImagePredictions { image_id: image.image_id, poses });
    }
    let entries: Vec<ResultsEntry> = results.iter().map(ResultsEntry::from).collect();
    let text = match input {
        OneOrMany::One(_) => to_json(&entries[0])?,
        OneOrMany::Many(_) => to_json(&entries)?,
    };
    write_file_atomic(&args.out, &text)?;
    let images = results.len();
    if images > 1 {
        emit(out, format_args!("images {images}, total weight {total_weight:.6}"))?;
    }
    if let Some(rate) = accuracy.and_then(|a| a.rate()) {
        let a = accuracy.expect("rate implies a count");
        emit(out, format_args!("association accuracy {rate:.4} ({}/{})", a.correct, a.assigned))?;
    }
    Ok(AssociateSummary { images, total_weight, accuracy })
}

fn annotate(e: Error, image: u64) -> Error {
    match e {
        Error::Integrity(m) => Error::Integrity(format!("image {image}: {m}")),
        Error::InvalidArgument(m) => Error::InvalidArgument(format!("image {image}: {m}")),
        other => other,
    }
}

pub fn cmd_evaluate(
    results: &Path,
    annotations: &Path,
    report_out: Option<&Path>,
    config: &Config,
    out: &mut dyn Write,
) -> Result<EvalReport> {
    let predictions = read_results(results)?;
    let scenes = read_annotations(annotations)?;
    let report = evaluate(&predictions, &scenes, &coco_oks_thresholds(), &config.oks_sigmas)?;
    let text = to_json(&report)?;
    if let Some(path) = report_out {
        write_file_atomic(path, &text)?;
    }
    out.write_all(text.as_bytes())?;
    Ok(report)
}

pub fn cmd_bench(sizes: &[usize], runs: usize, config: &Config, out: &mut dyn Write) -> Result<Vec<BenchRow>> {
    if sizes.is_empty() {
        return Err(Error::InvalidArgument("bench needs at least one size".into()));
    }
    let rows = run_bench(sizes, runs, config.seed)?;
    out.write_all(format_table(&rows).as_bytes())?;
    Ok(rows)
}
