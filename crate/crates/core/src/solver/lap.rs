//! Sparse maximum-weight bipartite matching with optional assignment.
//!
//! Every row gets a private slack column of cost 0, real entries cost `-w`,
//! and the resulting rectangular assignment problem is solved one row at a
//! time by Dijkstra-based shortest augmenting paths with dual potentials.
//! Each search stops at the first free column it settles; with bounded
//! degrees it only touches the neighbourhood of the new row.
//!
//! A second pass turns the optimal assignment into the lexicographically
//! smallest optimal one, moving along alternating paths made of edges that
//! are tight under the final duals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::SparseWeights;

const NONE: usize = usize::MAX;

/// Relative tolerance for deciding that a reduced cost is zero.
const TIGHT_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, PartialEq)]
struct HeapEntry {
    dist: f64,
    col: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (dist, col)
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.col.cmp(&self.col))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Lap<'a> {
    w: &'a SparseWeights,
    rows: usize,
    cols: usize,
    u: Vec<f64>,
    v: Vec<f64>,
    col4row: Vec<usize>,
    row4col: Vec<usize>,
}

impl<'a> Lap<'a> {
    fn new(w: &'a SparseWeights) -> Self {
        let rows = w.rows();
        let cols = w.cols() + rows;
        Self {
            w,
            rows,
            cols,
            u: vec![0.0; rows],
            v: vec![0.0; cols],
            col4row: vec![NONE; rows],
            row4col: vec![NONE; cols],
        }
    }

    fn slack(&self, row: usize) -> usize {
        self.w.cols() + row
    }

    /// `(column, cost)` pairs for a row, real columns ascending then the slack column.
    fn arcs(&self, row: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.w
            .row(row)
            .map(|(c, w)| (c, -w))
            .chain(std::iter::once((self.slack(row), 0.0)))
    }

    fn reduced(&self, row: usize, col: usize, cost: f64) -> f64 {
        cost - self.u[row] - self.v[col]
    }

    fn solve(&mut self) {
        let mut spc = vec![f64::INFINITY; self.cols];
        let mut path = vec![NONE; self.cols];
        let mut scanned = vec![false; self.cols];
        let mut touched: Vec<usize> = Vec::new();
        let mut scanned_cols: Vec<usize> = Vec::new();
        let mut scanned_rows: Vec<usize> = Vec::new();
        let mut heap = BinaryHeap::new();

        for cur in 0..self.rows {
            let mut min_val = 0.0;
            let mut row = cur;
            let sink;
            loop {
                scanned_rows.push(row);
                for (col, cost) in self.arcs(row) {
                    if scanned[col] {
                        continue;
                    }
                    let r = min_val + self.reduced(row, col, cost);
                    if r < spc[col] {
                        if spc[col] == f64::INFINITY {
                            touched.push(col);
                        }
                        spc[col] = r;
                        path[col] = row;
                        heap.push(HeapEntry { dist: r, col });
                    }
                }
                // The current row's slack column is always reachable, so the
                // heap cannot run dry before a free column is settled.
                let next = loop {
                    let e = heap.pop().expect("slack column keeps the search feasible");
                    if !scanned[e.col] && e.dist <= spc[e.col] {
                        break e;
                    }
                };
                min_val = next.dist;
                scanned[next.col] = true;
                scanned_cols.push(next.col);
                if self.row4col[next.col] == NONE {
                    sink = next.col;
                    break;
                }
                row = self.row4col[next.col];
            }

            self.u[cur] += min_val;
            for &r in &scanned_rows {
                if r != cur {
                    self.u[r] += min_val - spc[self.col4row[r]];
                }
            }
            for &c in &scanned_cols {
                self.v[c] -= min_val - spc[c];
            }

            let mut col = sink;
            loop {
                let r = path[col];
                self.row4col[col] = r;
                let prev = std::mem::replace(&mut self.col4row[r], col);
                if r == cur {
                    break;
                }
                col = prev;
            }

            for &c in &touched {
                spc[c] = f64::INFINITY;
                path[c] = NONE;
                scanned[c] = false;
            }
            touched.clear();
            scanned_cols.clear();
            scanned_rows.clear();
            heap.clear();
        }
    }

    /// Reorders the optimum so that, row by row, each row takes the smallest
    /// column any optimal matching consistent with earlier rows allows, and
    /// stays unmatched only when it must.
    ///
    /// Optimal matchings are exactly the row-saturating matchings on tight
    /// edges that keep every column with a negative dual covered, so each
    /// trial move is repaired with at most two alternating paths.
    fn make_lexicographic(&mut self) {
        let max_w = self.w.max_weight();
        if max_w <= 0.0 {
            return;
        }
        let mut s = Scratch::new(self, TIGHT_TOLERANCE * max_w);
        for i in 0..self.rows {
            let current = self.col4row[i];
            let options: Vec<usize> = self
                .w
                .row(i)
                .filter(|&(c, w)| c < current && self.is_tight(i, c, -w, s.eps))
                .map(|(c, _)| c)
                .collect();
            for j in options {
                if self.try_move(i, j, &mut s) {
                    break;
                }
            }
        }
    }

    fn is_tight(&self, row: usize, col: usize, cost: f64, eps: f64) -> bool {
        self.reduced(row, col, cost).abs() <= eps
    }

    fn is_forced(&self, col: usize, eps: f64) -> bool {
        self.v[col] < -eps
    }

    /// Seats row `i` on column `j`, keeping rows before `i` fixed. Undone
    /// when no optimal completion exists.
    fn try_move(&mut self, i: usize, j: usize, s: &mut Scratch) -> bool {
        let owner = self.row4col[j];
        if owner != NONE && owner < i {
            return false;
        }
        let saved = (self.col4row.clone(), self.row4col.clone());
        let current = self.col4row[i];
        self.row4col[current] = NONE;
        self.col4row[i] = j;
        self.row4col[j] = i;
        let mut ok = true;
        if owner != NONE {
            self.col4row[owner] = NONE;
            ok = self.reseat_row(owner, i, s);
        }
        if ok && self.row4col[current] == NONE && self.is_forced(current, s.eps) {
            ok = self.cover_column(current, i, s);
        }
        if !ok {
            (self.col4row, self.row4col) = saved;
        }
        ok
    }

    /// Alternating path from an unseated row to any free column.
    fn reseat_row(&mut self, start: usize, fixed: usize, s: &mut Scratch) -> bool {
        s.generation += 1;
        s.queue.clear();
        s.queue.push(start);
        let mut head = 0;
        while head < s.queue.len() {
            let r = s.queue[head];
            head += 1;
            let arcs: Vec<(usize, f64)> = self.arcs(r).collect();
            for (c, cost) in arcs {
                if s.col_stamp[c] == s.generation || !self.is_tight(r, c, cost, s.eps) {
                    continue;
                }
                let holder = self.row4col[c];
                if holder == r || (holder != NONE && holder <= fixed) {
                    continue;
                }
                s.col_stamp[c] = s.generation;
                s.via_col[c] = r;
                if holder == NONE {
                    let mut col = c;
                    loop {
                        let r = s.via_col[col];
                        let prev = std::mem::replace(&mut self.col4row[r], col);
                        self.row4col[col] = r;
                        if r == start {
                            return true;
                        }
                        col = prev;
                    }
                }
                s.queue.push(holder);
            }
        }
        false
    }

    /// Alternating path that hands a vacated column with a negative dual to a
    /// later row, ending where a column may be released.
    fn cover_column(&mut self, start: usize, fixed: usize, s: &mut Scratch) -> bool {
        s.generation += 1;
        s.queue.clear();
        s.queue.push(start);
        let mut head = 0;
        while head < s.queue.len() {
            let c = s.queue[head];
            head += 1;
            for (r, cost) in s.claimants(self, c) {
                if r <= fixed || s.row_stamp[r] == s.generation || r == self.row4col[c] {
                    continue;
                }
                if !self.is_tight(r, c, cost, s.eps) {
                    continue;
                }
                s.row_stamp[r] = s.generation;
                s.via_row[r] = c;
                let own = self.col4row[r];
                if !self.is_forced(own, s.eps) {
                    let mut r = r;
                    loop {
                        let c = s.via_row[r];
                        let next = self.row4col[c];
                        self.col4row[r] = c;
                        self.row4col[c] = r;
                        if c == start {
                            break;
                        }
                        r = next;
                    }
                    self.row4col[own] = NONE;
                    return true;
                }
                if s.col_stamp_cover[own] != s.generation {
                    s.col_stamp_cover[own] = s.generation;
                    s.queue.push(own);
                }
            }
        }
        false
    }
}

/// Buffers shared by the repair searches.
struct Scratch {
    eps: f64,
    generation: u32,
    queue: Vec<usize>,
    col_stamp: Vec<u32>,
    col_stamp_cover: Vec<u32>,
    row_stamp: Vec<u32>,
    via_col: Vec<usize>,
    via_row: Vec<usize>,
    /// Column-major view of the real entries: `(row, cost)` per column.
    by_col: Vec<Vec<(usize, f64)>>,
}

impl Scratch {
    fn new(lap: &Lap<'_>, eps: f64) -> Self {
        let mut by_col = vec![Vec::new(); lap.w.cols()];
        for r in 0..lap.rows {
            for (c, w) in lap.w.row(r) {
                by_col[c].push((r, -w));
            }
        }
        Self {
            eps,
            generation: 0,
            queue: Vec::new(),
            col_stamp: vec![0; lap.cols],
            col_stamp_cover: vec![0; lap.cols],
            row_stamp: vec![0; lap.rows],
            via_col: vec![NONE; lap.cols],
            via_row: vec![NONE; lap.rows],
            by_col,
        }
    }

    /// Rows with an arc into `col`.
    fn claimants(&self, lap: &Lap<'_>, col: usize) -> Vec<(usize, f64)> {
        if col < lap.w.cols() {
            self.by_col[col].clone()
        } else {
            vec![(col - lap.w.cols(), 0.0)]
        }
    }
}

/// Row-to-column assignment of a maximum-weight matching; `None` marks an
/// unmatched row.
pub(crate) fn max_weight_matching(w: &SparseWeights) -> Vec<Option<usize>> {
    let mut lap = Lap::new(w);
    lap.solve();
    lap.make_lexicographic();
    let real = w.cols();
    lap.col4row
        .iter()
        .map(|&c| (c < real).then_some(c))
        .collect()
}
