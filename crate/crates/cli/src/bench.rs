//! Solver timing on synthetic sparse person-joint graphs.

use std::time::{Duration, Instant};

use crowdpose::geometry::{BBox, Point};
use crowdpose::graph::{build_graph, PersonJointGraph, PersonProposal};
use crowdpose::grouping::{CandidateJoint, JointNode};
use crowdpose::joints::JOINT_COUNT;
use crowdpose::solver::solve_graph;
use crowdpose::{Error, Result};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Most proposals a joint node connects to.
pub const MAX_NODE_DEGREE: usize = 4;
pub const MIN_BENCH_SIZE: usize = 10;
pub const DEFAULT_RUNS: usize = 5;
/// Nearby proposals a node may connect to, on each side of its own.
const NEIGHBORHOOD: usize = 3;

/// Crowd-like graph with `persons` proposals in a row and, per joint type,
/// one node per proposal. Each node connects to its own proposal and up to
/// three neighbours, so no node has more than four edges.
pub fn sparse_graph(persons: usize, seed: u64) -> Result<PersonJointGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let proposals = (0..persons)
        .map(|i| PersonProposal::new(i as u32, BBox::new(40.0 * i as f64, 0.0, 100.0, 250.0), 0.9))
        .collect::<Result<Vec<_>>>()?;
    let mut nodes = Vec::with_capacity(persons * JOINT_COUNT);
    for k in 0..JOINT_COUNT {
        for own in 0..persons {
            let lo = own.saturating_sub(NEIGHBORHOOD);
            let hi = (own + NEIGHBORHOOD).min(persons - 1);
            let others: Vec<usize> = (lo..=hi).filter(|&p| p != own).collect();
            let extra = rng.random_range(0..=(MAX_NODE_DEGREE - 1).min(others.len()));
            let mut members = vec![own];
            members.extend(sample(&mut rng, others.len(), extra).into_iter().map(|i| others[i]));
            let location = Point::new(40.0 * own as f64 + 50.0, 20.0 + 15.0 * k as f64);
            let members = members
                .into_iter()
                .map(|p| {
                    let response = if p == own { rng.random_range(0.7..1.0) } else { rng.random_range(0.1..0.7) };
                    CandidateJoint::new(location, response, k, p as u32, 2.0)
                })
                .collect::<Result<Vec<_>>>()?;
            let start = nodes.iter().map(|n: &JointNode| n.members.len()).sum::<usize>();
            nodes.push(JointNode {
                node_id: nodes.len(),
                joint_type: k,
                member_indices: (start..start + members.len()).collect(),
                members,
            });
        }
    }
    build_graph(&proposals, &nodes)
}

fn median(mut v: Vec<Duration>) -> Duration {
    v.sort_unstable();
    v[v.len() / 2]
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub persons: usize,
    pub edges: usize,
    pub median: Duration,
    /// Median time relative to the previous row.
    pub ratio: Option<f64>,
}

/// Median solve time over `runs` repetitions at each size.
pub fn run_bench(sizes: &[usize], runs: usize, seed: u64) -> Result<Vec<BenchRow>> {
    if let Some(&s) = sizes.iter().find(|&&s| s < MIN_BENCH_SIZE) {
        return Err(Error::InvalidArgument(format!("bench sizes must be at least {MIN_BENCH_SIZE}, got {s}")));
    }
    if runs == 0 {
        return Err(Error::InvalidArgument("bench needs at least one run".into()));
    }
    let mut rows: Vec<BenchRow> = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let graph = sparse_graph(n, seed)?;
        let mut times = Vec::with_capacity(runs);
        for _ in 0..runs {
            let t = Instant::now();
            let a = solve_graph(&graph)?;
            times.push(t.elapsed());
            std::hint::black_box(a);
        }
        let median = median(times);
        let ratio = rows.last().map(|prev| median.as_secs_f64() / prev.median.as_secs_f64().max(1e-9));
        rows.push(BenchRow { persons: n, edges: graph.edges.len(), median, ratio });
    }
    Ok(rows)
}

fn format_ms(d: Duration) -> String {
    let ms = d.as_secs_f64() * 1e3;
    if ms < 1.0 {
        "<1ms".to_string()
    } else {
        format!("{ms:.2}ms")
    }
}

pub fn format_table(rows: &[BenchRow]) -> String {
    let mut out = format!("{:>8} {:>8} {:>12} {:>8}\n", "persons", "edges", "median", "ratio");
    for r in rows {
        let ratio = r.ratio.map_or("-".to_string(), |x| format!("{x:.2}"));
        out.push_str(&format!("{:>8} {:>8} {:>12} {:>8}\n", r.persons, r.edges, format_ms(r.median), ratio));
    }
    out
}
