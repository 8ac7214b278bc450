use std::path::Path;
use std::process::{Command, Output};

use crowdpose::metrics::ImagePredictions;
use crowdpose::pose::{Keypoint, Pose};
use crowdpose_cli::formats::{from_json, read_annotations, to_json, write_file_atomic, ResultsEntry};
use proptest::prelude::*;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crowdpose")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["synth", "--out", path(dir)];
    args.extend_from_slice(extra);
    run(&args)
}

fn report(o: &Output) -> Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn synth_smoke_prints_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = synth(dir.path(), &["--persons", "3", "--crowd-index", "0.5", "--seed", "42"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("wrote 1 scene(s)"), "{}", stdout(&o));
    assert!(dir.path().join("scene_0000.annotations.json").exists());
    assert!(dir.path().join("scene_0000.candidates.json").exists());
}

#[test]
fn synth_is_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["--seed", "7", "--scenes", "3", "--crowd-index", "0.7"];
    assert!(synth(a.path(), &args).status.success());
    assert!(synth(b.path(), &args).status.success());
    for i in 0..3 {
        for kind in ["annotations", "candidates"] {
            let name = format!("scene_{i:04}.{kind}.json");
            assert_eq!(std::fs::read(a.path().join(&name)).unwrap(), std::fs::read(b.path().join(&name)).unwrap());
        }
    }
}

#[test]
fn out_of_range_crowd_index_is_an_argument_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(synth(dir.path(), &["--crowd-index", "1.5"]).status.code(), Some(2));
}

#[test]
fn missing_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["associate", path(&dir.path().join("nope.json")), "--out", path(&dir.path().join("r.json"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn empty_candidates_give_empty_results() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("c.json");
    std::fs::write(&input, r#"{"image_id": 5, "proposals": [], "candidates": []}"#).unwrap();
    let out = dir.path().join("r.json");
    let o = run(&["associate", path(&input), "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(r["image_id"], 5);
    assert_eq!(r["poses"].as_array().unwrap().len(), 0);
}

#[test]
fn malformed_json_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("c.json");
    std::fs::write(&input, "{\"image_id\": 1,\n \"proposals\": [\n").unwrap();
    let o = run(&["associate", path(&input), "--out", path(&dir.path().join("r.json"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line"));
}

#[test]
fn dangling_candidate_is_an_integrity_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("c.json");
    std::fs::write(
        &input,
        r#"{"image_id": 1,
            "proposals": [{"proposal_id": 0, "bbox": [0, 0, 50, 100], "score": 0.9}],
            "candidates": [{"proposal_id": 3, "joint_type": 0, "x": 10, "y": 10, "response": 0.8, "u": 2}]}"#,
    )
    .unwrap();
    let o = run(&["associate", path(&input), "--out", path(&dir.path().join("r.json"))]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn exact_results_score_full_map_and_empty_results_zero() {
    let dir = tempfile::tempdir().unwrap();
    assert!(synth(dir.path(), &["--seed", "11", "--crowd-index", "0.4"]).status.success());
    let ann = dir.path().join("scene_0000.annotations.json");
    let scenes = read_annotations(&ann).unwrap();
    let poses = scenes[0]
        .persons
        .iter()
        .map(|g| Pose {
            proposal_id: g.person_id,
            keypoints: g.keypoints.map(|k| k.map(|k| Keypoint { location: k.location, score: 1.0 })),
            score: 1.0,
        })
        .collect();
    let exact = dir.path().join("exact.json");
    let preds = ImagePredictions { image_id: scenes[0].image_id, poses };
    write_file_atomic(&exact, &to_json(&ResultsEntry::from(&preds)).unwrap()).unwrap();
    let r = report(&run(&["evaluate", path(&exact), path(&ann)]));
    assert!((r["map_50_95"].as_f64().unwrap() - 1.0).abs() < 1e-9);

    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, format!(r#"{{"image_id": {}, "poses": []}}"#, scenes[0].image_id)).unwrap();
    let r = report(&run(&["evaluate", path(&empty), path(&ann)]));
    assert_eq!(r["map_50_95"].as_f64().unwrap(), 0.0);
}

fn total_weight(o: &Output) -> f64 {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(o);
    let line = s.lines().find(|l| l.contains("total weight")).unwrap();
    line.rsplit(' ').next().unwrap().parse().unwrap()
}

#[test]
fn global_reports_at_least_greedy_weight() {
    let dir = tempfile::tempdir().unwrap();
    assert!(synth(dir.path(), &["--seed", "5", "--scenes", "4", "--crowd-index", "0.9"]).status.success());
    for i in 0..4 {
        let input = dir.path().join(format!("scene_{i:04}.candidates.json"));
        let out = dir.path().join("r.json");
        let g = total_weight(&run(&["associate", path(&input), "--out", path(&out), "--method", "global"]));
        let r = total_weight(&run(&["associate", path(&input), "--out", path(&out), "--method", "greedy"]));
        assert!(g >= r, "scene {i}: {g} < {r}");
    }
}

#[test]
fn full_round_trip_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    assert!(synth(dir.path(), &["--seed", "2", "--crowd-index", "0.3"]).status.success());
    let input = dir.path().join("scene_0000.candidates.json");
    let out = dir.path().join("r.json");
    let o = run(&["associate", path(&input), "--out", path(&out), "--bbox-nms", "--pose-dedup"]);
    assert!(stdout(&o).contains("association accuracy"), "{}", stdout(&o));
    let rep = dir.path().join("report.json");
    let r = report(&run(&["evaluate", path(&out), path(&dir.path().join("scene_0000.annotations.json")), "--out", path(&rep)]));
    assert!(r["map_50_95"].as_f64().unwrap() > 0.0);
    assert_eq!(std::fs::read_to_string(rep).unwrap(), stdout(&run(&["evaluate", path(&out), path(&dir.path().join("scene_0000.annotations.json"))])));
}

#[test]
fn config_file_and_flags_take_precedence_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"seed": 9}"#).unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    assert!(run(&["--config", path(&cfg), "synth", "--out", path(&a)]).status.success());
    assert!(run(&["synth", "--seed", "9", "--out", path(&b)]).status.success());
    assert!(run(&["--config", path(&cfg), "--seed", "10", "synth", "--out", path(&c)]).status.success());
    let read = |d: &Path| std::fs::read(d.join("scene_0000.annotations.json")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));

    std::fs::write(&cfg, r#"{"mu": 3.0}"#).unwrap();
    assert_eq!(run(&["--config", path(&cfg), "synth", "--out", path(&a)]).status.code(), Some(2));
}

#[test]
fn bench_with_one_size_prints_one_row() {
    let o = run(&["bench", "--sizes", "10", "--runs", "1"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert_eq!(s.lines().count(), 2, "{s}");
    assert!(s.lines().nth(1).unwrap().trim_end().ends_with('-'));
    assert_eq!(run(&["bench", "--sizes", "5"]).status.code(), Some(2));
}

fn pose_entry() -> impl Strategy<Value = Value> {
    (
        0u32..100,
        0.0f64..1.0,
        proptest::collection::vec(proptest::option::of((-1e4f64..1e4, -1e4f64..1e4, 0.0f64..1.0)), 14),
    )
        .prop_map(|(id, score, kps)| {
            let kps: Vec<Value> = kps
                .into_iter()
                .map(|k| k.map_or(Value::Null, |(x, y, s)| serde_json::json!([x, y, s])))
                .collect();
            serde_json::json!({"proposal_id": id, "score": score, "keypoints": kps})
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn results_serialization_is_idempotent(image_id in 0u64..1000, poses in proptest::collection::vec(pose_entry(), 0..4)) {
        let raw = serde_json::json!({"image_id": image_id, "poses": poses}).to_string();
        let first: ResultsEntry = from_json(&raw, "results").unwrap();
        let text = to_json(&first).unwrap();
        let second: ResultsEntry = from_json(&text, "results").unwrap();
        prop_assert_eq!(&text, &to_json(&second).unwrap());
        let a = ImagePredictions::try_from(second.clone()).unwrap();
        prop_assert_eq!(ResultsEntry::from(&a), second);
    }
}
