use crowdpose::solver::{brute_force_oracle, solve_subgraph, SparseWeights};
use proptest::prelude::*;

/// Sparse instances with weights drawn from a small grid so exact ties are common.
fn instance(max_dim: usize) -> impl Strategy<Value = SparseWeights> {
    (1..=max_dim, 1..=max_dim).prop_flat_map(|(rows, cols)| {
        proptest::collection::vec(proptest::option::weighted(0.6, 1u32..=8), rows * cols).prop_map(move |cells| {
            let entries = cells
                .iter()
                .enumerate()
                .filter_map(|(i, w)| w.map(|w| (i / cols, i % cols, w as f64 / 8.0)))
                .collect();
            SparseWeights::new(rows, cols, entries).unwrap()
        })
    })
}

fn continuous(max_dim: usize) -> impl Strategy<Value = SparseWeights> {
    (1..=max_dim, 1..=max_dim).prop_flat_map(|(rows, cols)| {
        proptest::collection::vec(proptest::option::weighted(0.5, 0.01f64..1.0), rows * cols).prop_map(move |cells| {
            let entries = cells
                .iter()
                .enumerate()
                .filter_map(|(i, w)| w.map(|w| (i / cols, i % cols, w)))
                .collect();
            SparseWeights::new(rows, cols, entries).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn matches_oracle_with_ties(w in instance(6)) {
        let got = solve_subgraph(&w).unwrap();
        let want = brute_force_oracle(&w).unwrap();
        prop_assert!(got.is_valid_for(&w));
        prop_assert_eq!(got.total_weight, want.total_weight);
        prop_assert_eq!(got.pairs, want.pairs);
    }

    #[test]
    fn matches_oracle_continuous(w in continuous(6)) {
        let got = solve_subgraph(&w).unwrap();
        let want = brute_force_oracle(&w).unwrap();
        prop_assert_eq!(got.total_weight, want.total_weight);
        prop_assert_eq!(got.pairs, want.pairs);
    }

    #[test]
    fn scaling_preserves_the_matching(w in continuous(6), factor in 0.1f64..10.0) {
        let base = solve_subgraph(&w).unwrap();
        let scaled = solve_subgraph(&w.scaled(factor).unwrap()).unwrap();
        prop_assert_eq!(base.pairs, scaled.pairs);
    }

    #[test]
    fn transpose_keeps_the_optimum(w in continuous(6)) {
        let entries = (0..w.rows()).flat_map(|r| w.row(r).map(move |(c, v)| (c, r, v)).collect::<Vec<_>>()).collect();
        let t = SparseWeights::new(w.cols(), w.rows(), entries).unwrap();
        let a = solve_subgraph(&w).unwrap().total_weight;
        let b = solve_subgraph(&t).unwrap().total_weight;
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }
}
