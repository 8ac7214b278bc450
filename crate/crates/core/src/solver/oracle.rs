use super::{Matching, SparseWeights};
use crate::error::{Error, Result};

pub const ORACLE_MAX_DIM: usize = 8;

/// Enumerates every matching and keeps the heaviest. Rows are visited in
/// order, each trying its columns ascending before staying unmatched, so the
/// first maximum found is also the lexicographically smallest. Sums are
/// accumulated row by row, the same order `Matching::total_weight` uses.
pub fn brute_force_oracle(weights: &SparseWeights) -> Result<Matching> {
    if weights.rows() > ORACLE_MAX_DIM || weights.cols() > ORACLE_MAX_DIM {
        return Err(Error::Size(format!(
            "{}x{} exceeds the {ORACLE_MAX_DIM}x{ORACLE_MAX_DIM} enumeration limit",
            weights.rows(),
            weights.cols()
        )));
    }
    let rows: Vec<Vec<(usize, f64)>> = (0..weights.rows()).map(|r| weights.row(r).collect()).collect();
    let mut search = Search {
        rows: &rows,
        used: vec![false; weights.cols()],
        current: Vec::new(),
        best: Vec::new(),
        best_total: 0.0,
    };
    search.visit(0, 0.0);
    Ok(Matching {
        pairs: search.best,
        total_weight: search.best_total,
    })
}

struct Search<'a> {
    rows: &'a [Vec<(usize, f64)>],
    used: Vec<bool>,
    current: Vec<(usize, usize)>,
    best: Vec<(usize, usize)>,
    best_total: f64,
}

impl Search<'_> {
    fn visit(&mut self, row: usize, total: f64) {
        if row == self.rows.len() {
            if total > self.best_total {
                self.best_total = total;
                self.best = self.current.clone();
            }
            return;
        }
        for &(col, w) in &self.rows[row] {
            if self.used[col] {
                continue;
            }
            self.used[col] = true;
            self.current.push((row, col));
            self.visit(row + 1, total + w);
            self.current.pop();
            self.used[col] = false;
        }
        self.visit(row + 1, total);
    }
}
