//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use crowdpose::geometry::{BBox, Point};
use crowdpose::graph::{build_graph, PersonProposal};
use crowdpose::grouping::{group_candidates, same_group, CandidateJoint, JointNode};
use crowdpose::heatmap::{compose_training_target, jc_loss, render_gaussian};
use crowdpose::joints::{JointSpec, COCO_JOINT_SIGMAS, JOINT_COUNT};
use crowdpose::metrics::{
    coco_oks_thresholds, compute_oks, crowd_index, crowding_level, evaluate, CrowdingLevel, GroundTruthPerson,
    ImagePredictions, LabeledKeypoint, SceneAnnotation, Visibility,
};
use crowdpose::pipeline::{associate, associate_scene, scene_accuracy, AccuracyCount, Method};
use crowdpose::pose::{Keypoint, Pose};
use crowdpose::simulator::{simulate_candidates, simulate_proposals, simulate_scene, SceneSpec};
use crowdpose::solver::{brute_force_oracle, solve_graph, solve_subgraph, SparseWeights};
use crowdpose_cli::bench::run_bench;
use crowdpose_cli::commands::{cmd_synth, SynthArgs};
use crowdpose_cli::config::Config;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:.2?}, limit {limit:.0?}"))
}

fn random_weights(rng: &mut ChaCha8Rng, tied: bool) -> SparseWeights {
    let (rows, cols) = (rng.random_range(1..=6), rng.random_range(1..=6));
    let mut entries = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if rng.random_bool(0.5) {
                let w = if tied { rng.random_range(1..=8) as f64 / 8.0 } else { rng.random_range(0.01..1.0) };
                entries.push((r, c, w));
            }
        }
    }
    SparseWeights::new(rows, cols, entries).unwrap()
}

fn solver_optimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    for i in 0..1000 {
        let w = random_weights(&mut rng, i % 2 == 0);
        let got = solve_subgraph(&w).map_err(|e| e.to_string())?;
        let want = brute_force_oracle(&w).map_err(|e| e.to_string())?;
        ensure(got.total_weight == want.total_weight, || {
            format!("instance {i}: solver {} oracle {}", got.total_weight, want.total_weight)
        })?;
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(10))?;
    Ok(format!("1000 instances equal the oracle in {elapsed:.2?}"))
}

fn decomposition() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for g in 0..200 {
        let persons = rng.random_range(1..=6u32);
        let proposals: Vec<PersonProposal> = (0..persons)
            .map(|p| PersonProposal::new(p, BBox::new(30.0 * p as f64, 0.0, 60.0, 150.0), 0.9).unwrap())
            .collect();
        let mut nodes = Vec::new();
        let mut next_index = 0;
        for k in 0..JOINT_COUNT {
            for _ in 0..rng.random_range(0..=6) {
                let count = rng.random_range(1..=persons as usize);
                let members: Vec<CandidateJoint> = rand::seq::index::sample(&mut rng, persons as usize, count)
                    .into_iter()
                    .map(|p| {
                        let loc = Point::new(rng.random_range(0.0..200.0), rng.random_range(0.0..150.0));
                        CandidateJoint::new(loc, rng.random_range(0.1..1.0), k, p as u32, 2.0).unwrap()
                    })
                    .collect();
                nodes.push(JointNode {
                    node_id: nodes.len(),
                    joint_type: k,
                    member_indices: (next_index..next_index + members.len()).collect(),
                    members,
                });
                next_index = nodes.iter().map(|n| n.members.len()).sum();
            }
        }
        let graph = build_graph(&proposals, &nodes).map_err(|e| e.to_string())?;
        let mut parts = [0.0; JOINT_COUNT];
        for (k, part) in parts.iter_mut().enumerate() {
            let sub = graph.subgraph(k);
            if sub.weights.nnz() > 0 {
                *part = brute_force_oracle(&sub.weights).map_err(|e| e.to_string())?.total_weight;
            }
        }
        let want: f64 = parts.iter().sum();
        let got = solve_graph(&graph).map_err(|e| e.to_string())?;
        ensure(got.total_weight == want && got.satisfies_constraints(), || {
            format!("graph {g}: solve_graph {} independent optima {want}", got.total_weight)
        })?;
    }
    Ok("200 graphs equal the sum of per-type optima".into())
}

fn global_beats_greedy() -> Outcome {
    let targets = [0.3, 0.45, 0.6, 0.75, 0.9, 1.0];
    let js = JointSpec::default();
    let start = Instant::now();
    let (mut hard_g, mut hard_r) = (AccuracyCount::default(), AccuracyCount::default());
    let mut hard_scenes = 0;
    for seed in 0..200u64 {
        let spec = SceneSpec { seed, image_id: seed, target_crowd_index: targets[seed as usize % 6], ..SceneSpec::default() };
        let scene = simulate_scene(&spec).map_err(|e| e.to_string())?;
        let g = associate_scene(&scene, &js, Method::Global).map_err(|e| e.to_string())?;
        let r = associate_scene(&scene, &js, Method::Greedy).map_err(|e| e.to_string())?;
        ensure(g.total_weight >= r.total_weight, || {
            format!("seed {seed}: global weight {} below greedy {}", g.total_weight, r.total_weight)
        })?;
        if crowding_level(scene.crowd_index).map_err(|e| e.to_string())? == CrowdingLevel::Hard {
            hard_scenes += 1;
            hard_g += scene_accuracy(&scene, &g).map_err(|e| e.to_string())?;
            hard_r += scene_accuracy(&scene, &r).map_err(|e| e.to_string())?;
        }
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(60))?;
    let (a, b) = (hard_g.rate().unwrap_or(0.0), hard_r.rate().unwrap_or(0.0));
    let detail = format!("hard band ({hard_scenes} scenes) accuracy global {a:.3} greedy {b:.3}, {elapsed:.2?}");
    ensure(a - b >= 0.05, || detail.clone())?;
    Ok(detail)
}

fn spaced_scene(n: usize) -> SceneAnnotation {
    let layout: [(f64, f64); JOINT_COUNT] = [
        (22.0, 40.0), (-22.0, 40.0), (28.0, 72.0), (-28.0, 72.0), (30.0, 102.0), (-30.0, 102.0),
        (13.0, 104.0), (-13.0, 104.0), (14.0, 152.0), (-14.0, 152.0), (14.0, 200.0), (-14.0, 200.0),
        (0.0, 0.0), (0.0, 36.0),
    ];
    let persons = (0..n)
        .map(|i| {
            let cx = 60.0 + 150.0 * i as f64;
            let keypoints = layout.map(|(dx, dy)| {
                Some(LabeledKeypoint { location: Point::new(cx + dx, 20.0 + dy), visibility: Visibility::Visible })
            });
            GroundTruthPerson { person_id: i as u32, bbox: BBox::new(cx - 36.0, 14.0, 72.0, 212.0), keypoints }
        })
        .collect();
    SceneAnnotation { image_id: 0, width: 150 * n as u32, height: 260, persons }
}

fn clean_scene_exactness() -> Outcome {
    let scene = spaced_scene(5);
    let spec = SceneSpec {
        location_noise: 0.0,
        box_scale_jitter: 0.0,
        false_positive_rate: 0.0,
        missing_rate: 0.0,
        response_noise: 0.0,
        ..SceneSpec::default()
    };
    let proposals = simulate_proposals(&scene, &spec).map_err(|e| e.to_string())?;
    let (candidates, _) = simulate_candidates(&scene, &proposals, &spec).map_err(|e| e.to_string())?;
    let out = associate(&proposals.proposals, &candidates, &JointSpec::default(), Method::Global)
        .map_err(|e| e.to_string())?;
    for pose in &out.poses {
        let gt = proposals.owner_of(pose.proposal_id).and_then(|o| scene.person(o)).ok_or("pose without owner")?;
        let same = (0..JOINT_COUNT).all(|k| pose.keypoints[k].map(|p| p.location) == gt.keypoints[k].map(|g| g.location));
        ensure(same, || format!("proposal {} differs from its person", pose.proposal_id))?;
    }
    ensure(out.poses.len() == scene.persons.len(), || format!("{} poses", out.poses.len()))?;
    let preds = [ImagePredictions { image_id: 0, poses: out.poses }];
    let report = evaluate(&preds, &[scene], &coco_oks_thresholds(), &COCO_JOINT_SIGMAS).map_err(|e| e.to_string())?;
    ensure((report.map_50_95 - 1.0).abs() <= 1e-9, || format!("mAP {}", report.map_50_95))?;
    Ok(format!("5 persons reproduced, mAP {:.9}", report.map_50_95))
}

fn loss_oracle() -> Outcome {
    let (w, h) = (64, 80);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let mut pts = |n| -> Vec<Point> {
            (0..n).map(|_| Point::new(rng.random_range(0..w) as f64, rng.random_range(0..h) as f64)).collect()
        };
        let (t, i) = (pts(3), pts(3));
        let target = compose_training_target(&t, &i, 0.5, 2.0, w, h).map_err(|e| e.to_string())?;
        let loss = jc_loss(&[target.composite()], std::slice::from_ref(&target)).map_err(|e| e.to_string())?;
        ensure(loss == 0.0, || format!("loss {loss} on an exact prediction"))?;
        let zero = compose_training_target(&t, &i, 0.0, 2.0, w, h).map_err(|e| e.to_string())?.composite();
        let plain = render_gaussian(&t, 2.0, w, h).map_err(|e| e.to_string())?;
        ensure(zero.values() == plain.values(), || "mu = 0 composite differs from the plain target".into())?;
    }
    let c = compose_training_target(&[Point::new(10.0, 10.0)], &[Point::new(50.0, 70.0)], 0.5, 2.0, w, h)
        .map_err(|e| e.to_string())?
        .composite();
    let peak = c.get(50, 70);
    ensure((peak - 0.5).abs() <= 1e-9, || format!("interference peak {peak}"))?;
    Ok(format!("zero loss, mu = 0 identity, interference peak {peak:.9}"))
}

fn cand(x: f64, y: f64, u: f64, proposal: u32) -> CandidateJoint {
    CandidateJoint::new(Point::new(x, y), 0.5, 0, proposal, u).unwrap()
}

fn grouping_properties() -> Outcome {
    let err = |e: crowdpose::Error| e.to_string();
    let a = cand(10.0, 10.0, 2.0, 0);
    ensure(same_group(&a, &cand(11.0, 10.0, 2.0, 1), 1.0).map_err(err)?, || "(10,10)~(11,10) failed".into())?;
    ensure(same_group(&a, &cand(10.0, 10.0, 0.5, 1), 0.3).map_err(err)?, || "coincident pair failed".into())?;
    ensure(!same_group(&a, &cand(16.0, 10.0, 8.0, 1), 1.0).map_err(err)?, || "(10,10)~(16,10) linked".into())?;
    let chain = [cand(0.0, 0.0, 3.0, 0), cand(3.0, 0.0, 3.0, 1), cand(6.0, 0.0, 3.0, 2)];
    ensure(group_candidates(&chain, &JointSpec::uniform(1.0).map_err(err)?).len() == 1, || "chain split".into())?;
    ensure(group_candidates(&[], &JointSpec::default()).is_empty(), || "empty input gave nodes".into())?;

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for i in 0..10_000 {
        let mut rand_cand = |p| cand(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0), rng.random_range(0.1..10.0), p);
        let (a, b) = (rand_cand(0), rand_cand(1));
        let delta = rng.random_range(0.01..3.0);
        ensure(same_group(&a, &b, delta).map_err(err)? == same_group(&b, &a, delta).map_err(err)?, || {
            format!("pair {i} is asymmetric")
        })?;
    }

    let spec = JointSpec::uniform(1.0).map_err(err)?;
    let partition = |c: &[CandidateJoint], order: &[usize]| {
        let mut parts: Vec<Vec<usize>> = group_candidates(c, &spec)
            .into_iter()
            .map(|n| {
                let mut v: Vec<usize> = n.member_indices.iter().map(|&m| order[m]).collect();
                v.sort_unstable();
                v
            })
            .collect();
        parts.sort();
        parts
    };
    for i in 0..1000 {
        let n = rng.random_range(0..40);
        let base: Vec<CandidateJoint> = (0..n)
            .map(|_| {
                let k = rng.random_range(0..3);
                CandidateJoint::new(
                    Point::new(rng.random_range(0.0..30.0), rng.random_range(0.0..30.0)),
                    0.5,
                    k,
                    rng.random_range(0..4),
                    rng.random_range(0.5..4.0),
                )
                .unwrap()
            })
            .collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let shuffled: Vec<CandidateJoint> = order.iter().map(|&j| base[j]).collect();
        let identity: Vec<usize> = (0..n).collect();
        ensure(partition(&shuffled, &order) == partition(&base, &identity), || format!("shuffle {i} changed the partition"))?;
    }
    Ok("hand examples, 10000 symmetric pairs, 1000 order-invariant shuffles".into())
}

fn gt(id: u32, bbox: BBox, joints: &[(usize, f64, f64)]) -> GroundTruthPerson {
    let mut keypoints = [None; JOINT_COUNT];
    for &(k, x, y) in joints {
        keypoints[k] = Some(LabeledKeypoint { location: Point::new(x, y), visibility: Visibility::Visible });
    }
    GroundTruthPerson { person_id: id, bbox, keypoints }
}

fn exact(g: &GroundTruthPerson) -> Pose {
    Pose {
        proposal_id: g.person_id,
        keypoints: g.keypoints.map(|k| k.map(|k| Keypoint { location: k.location, score: 1.0 })),
        score: 1.0,
    }
}

fn oks_correctness() -> Outcome {
    let err = |e: crowdpose::Error| e.to_string();
    let g = gt(0, BBox::new(0.0, 0.0, 50.0, 120.0), &[(0, 10.0, 10.0), (7, 30.0, 80.0), (13, 25.0, 5.0)]);
    let id = compute_oks(&exact(&g), &g, &COCO_JOINT_SIGMAS).map_err(err)?;
    ensure(id == 1.0, || format!("identity OKS {id}"))?;

    let g = gt(0, BBox::new(0.0, 0.0, 60.0, 150.0), &[(10, 30.0, 140.0)]);
    let kappa = 2.0 * COCO_JOINT_SIGMAS[10];
    let mut p = exact(&g);
    p.keypoints[10].as_mut().unwrap().location.y -= (2.0 * 60.0 * 150.0 * kappa * kappa).sqrt();
    let e1 = compute_oks(&p, &g, &COCO_JOINT_SIGMAS).map_err(err)?;
    ensure((e1 - (-1.0f64).exp()).abs() <= 1e-9, || format!("displaced OKS {e1}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let mut joints = Vec::new();
        for k in 0..JOINT_COUNT {
            if rng.random_bool(0.8) {
                joints.push((k, rng.random_range(0.0..200.0), rng.random_range(0.0..200.0)));
            }
        }
        if joints.is_empty() {
            continue;
        }
        let bbox = BBox::new(rng.random_range(0.0..100.0), rng.random_range(0.0..100.0), rng.random_range(10.0..120.0), rng.random_range(10.0..120.0));
        let g = gt(0, bbox, &joints);
        let mut pred = exact(&g);
        for k in pred.keypoints.iter_mut().flatten() {
            k.location = Point::new(k.location.x + rng.random_range(-15.0..15.0), k.location.y + rng.random_range(-15.0..15.0));
        }
        let f = rng.random_range(0.1..10.0);
        let scale = |q: Point| Point::new(q.x * f, q.y * f);
        let sg = GroundTruthPerson {
            bbox: BBox::new(bbox.x * f, bbox.y * f, bbox.width * f, bbox.height * f),
            keypoints: g.keypoints.map(|k| k.map(|k| LabeledKeypoint { location: scale(k.location), ..k })),
            ..g
        };
        let mut sp = pred.clone();
        for k in sp.keypoints.iter_mut().flatten() {
            k.location = scale(k.location);
        }
        let a = compute_oks(&pred, &g, &COCO_JOINT_SIGMAS).map_err(err)?;
        let b = compute_oks(&sp, &sg, &COCO_JOINT_SIGMAS).map_err(err)?;
        worst = worst.max((a - b).abs());
    }
    ensure(worst <= 1e-9, || format!("scale invariance error {worst:e}"))?;
    Ok(format!("identity 1, e^-1 error {:.1e}, worst scale error {worst:.1e}", (e1 - (-1.0f64).exp()).abs()))
}

fn crowd_index_checks() -> Outcome {
    let err = |e: crowdpose::Error| e.to_string();
    let disjoint = SceneAnnotation {
        image_id: 0,
        width: 500,
        height: 200,
        persons: (0..4)
            .map(|i| {
                let x0 = 100.0 * i as f64;
                gt(i, BBox::new(x0, 0.0, 50.0, 100.0), &[(0, x0 + 10.0, 5.0), (9, x0 + 40.0, 90.0)])
            })
            .collect(),
    };
    let d = crowd_index(&disjoint).map_err(err)?;
    ensure(d == 0.0, || format!("disjoint scene index {d}"))?;

    let a: Vec<_> = (0..10).map(|k| (k, if k < 5 { 110.0 } else { 20.0 }, 10.0 + 5.0 * k as f64)).collect();
    let b: Vec<_> = (0..10).map(|k| (k, if k < 5 { 80.0 } else { 180.0 }, 10.0 + 5.0 * k as f64)).collect();
    let pair = SceneAnnotation {
        image_id: 1,
        width: 300,
        height: 100,
        persons: vec![gt(0, BBox::new(0.0, 0.0, 120.0, 100.0), &a), gt(1, BBox::new(70.0, 0.0, 120.0, 100.0), &b)],
    };
    let p = crowd_index(&pair).map_err(err)?;
    ensure(p == 0.5, || format!("pair index {p}"))?;

    let bands = [
        (0.0, CrowdingLevel::Easy),
        (0.1, CrowdingLevel::Easy),
        (0.1 + 1e-9, CrowdingLevel::Medium),
        (0.8, CrowdingLevel::Medium),
        (0.8 + 1e-9, CrowdingLevel::Hard),
        (3.0, CrowdingLevel::Hard),
    ];
    for (x, want) in bands {
        let got = crowding_level(x).map_err(err)?;
        ensure(got == want, || format!("level of {x} is {got:?}"))?;
    }
    Ok("disjoint 0, pair 0.5, 0.1 easy, 0.8 medium".into())
}

fn quadratic_scaling() -> Outcome {
    let rows = run_bench(&[100, 200, 400], 5, 0).map_err(|e| e.to_string())?;
    let ms: Vec<String> = rows.iter().map(|r| format!("{}: {:.3}ms", r.persons, r.median.as_secs_f64() * 1e3)).collect();
    let ratios: Vec<f64> = rows.iter().filter_map(|r| r.ratio).collect();
    let detail = format!("{}; ratios {:.2?}", ms.join(", "), ratios);
    ensure(ratios.iter().all(|&r| r <= 5.0), || detail.clone())?;
    ensure(rows[2].median < Duration::from_millis(500), || detail.clone())?;
    Ok(detail)
}

fn determinism() -> Outcome {
    let config = Config { seed: 42, ..Config::default() };
    let dirs = [tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?];
    for d in &dirs {
        let args = SynthArgs { out: d.path().to_path_buf(), scenes: 4, crowd_index: 0.6, ..SynthArgs::default() };
        cmd_synth(&args, &config, &mut Vec::new()).map_err(|e| e.to_string())?;
    }
    let mut files = 0;
    for entry in std::fs::read_dir(dirs[0].path()).map_err(|e| e.to_string())? {
        let name = entry.map_err(|e| e.to_string())?.file_name();
        let a = std::fs::read(dirs[0].path().join(&name)).map_err(|e| e.to_string())?;
        let b = std::fs::read(dirs[1].path().join(&name)).map_err(|e| e.to_string())?;
        ensure(a == b, || format!("{} differs", name.to_string_lossy()))?;
        files += 1;
    }
    ensure(files == 8, || format!("{files} files written"))?;
    Ok("8 files byte-identical across two runs".into())
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("solver optimality", solver_optimality),
        ("decomposition by joint type", decomposition),
        ("global at least greedy", global_beats_greedy),
        ("clean-scene exactness", clean_scene_exactness),
        ("loss oracle", loss_oracle),
        ("grouping properties", grouping_properties),
        ("OKS correctness", oks_correctness),
        ("crowd index", crowd_index_checks),
        ("quadratic scaling", quadratic_scaling),
        ("synth determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
