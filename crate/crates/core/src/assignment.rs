//! Bipartite matching: optimal assignment with gating, priority-ordered
//! greedy matching, and cost-matrix builders.

use crate::geometry::{giou, iou, BoxTlbr};

/// Sentinel marking an infeasible pair; strictly greater than any feasible cost.
pub const FORBIDDEN: f64 = f64::INFINITY;

/// Dense rectangular cost matrix; rows are tracks, columns detections.
#[derive(Debug, Clone)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::filled(rows, cols, 0.0);
        for r in 0..rows {
            for c in 0..cols {
                m.data[r * cols + c] = f(r, c);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn is_forbidden(&self, r: usize, c: usize) -> bool {
        !self.get(r, c).is_finite()
    }
}

/// Matching result: matched `(row, col)` pairs plus the leftovers of each side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_rows: Vec<usize>,
    pub unmatched_cols: Vec<usize>,
}

impl Assignment {
    fn from_pairs(pairs: Vec<(usize, usize)>, rows: usize, cols: usize) -> Self {
        let mut row_used = vec![false; rows];
        let mut col_used = vec![false; cols];
        for &(r, c) in &pairs {
            row_used[r] = true;
            col_used[c] = true;
        }
        Self {
            pairs,
            unmatched_rows: (0..rows).filter(|&r| !row_used[r]).collect(),
            unmatched_cols: (0..cols).filter(|&c| !col_used[c]).collect(),
        }
    }

    pub fn total_cost(&self, c: &CostMatrix) -> f64 {
        self.pairs.iter().map(|&(r, j)| c.get(r, j)).sum()
    }
}

/// Minimum-cost maximum-cardinality matching over the entries with
/// cost <= `max_cost`, via the O(n^3) shortest augmenting path method.
///
/// Infeasible entries (forbidden or above the gate) are replaced internally by
/// a large finite cost and stripped from the result, which maximizes the
/// number of feasible pairs and, among those, minimizes their total cost.
#[allow(clippy::needless_range_loop)] // index arithmetic mirrors the potentials method
pub fn hungarian(c: &CostMatrix, max_cost: f64) -> Assignment {
    let (rows, cols) = (c.rows, c.cols);
    if rows == 0 || cols == 0 {
        return Assignment::from_pairs(Vec::new(), rows, cols);
    }

    let feasible = |r: usize, j: usize| {
        let v = c.get(r, j);
        v.is_finite() && v <= max_cost
    };
    let mut max_abs = 0.0f64;
    for r in 0..rows {
        for j in 0..cols {
            if feasible(r, j) {
                max_abs = max_abs.max(c.get(r, j).abs());
            }
        }
    }
    let n = rows.max(cols);
    // Large enough that dropping one infeasible edge always beats any
    // redistribution of feasible costs.
    let big = 2.0 * max_abs * (n as f64 + 1.0) + 1e6;
    let cost = |r: usize, j: usize| {
        if r < rows && j < cols && feasible(r, j) {
            c.get(r, j)
        } else {
            big
        }
    };

    // Shortest augmenting path with row/column potentials, 1-indexed with a
    // virtual column 0. Deterministic: columns are scanned in ascending order
    // and strict improvement is required, so ties resolve to lower indices.
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of_col = vec![0usize; n + 1]; // 0 = unassigned
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of_col[0] = i;
        let mut j0 = 0usize;
        let mut min_v = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of_col[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < min_v[j] {
                    min_v[j] = cur;
                    way[j] = j0;
                }
                if min_v[j] < delta {
                    delta = min_v[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_v[j] -= delta;
                }
            }
            j0 = j1;
            if row_of_col[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut pairs = Vec::new();
    for j in 1..=n {
        let i = row_of_col[j];
        if i == 0 {
            continue;
        }
        let (r, col) = (i - 1, j - 1);
        if r < rows && col < cols && feasible(r, col) {
            pairs.push((r, col));
        }
    }
    pairs.sort_unstable();
    debug_assert!(pairs.iter().all(|&(r, j)| !c.is_forbidden(r, j)));
    Assignment::from_pairs(pairs, rows, cols)
}

/// Greedy matching that processes columns in ascending `priority` order; each
/// column takes its cheapest remaining feasible row (cost <= `max_cost`).
/// Ties break toward the lower row index, then the earlier column position.
#[allow(clippy::needless_range_loop)]
pub fn greedy_by_priority(c: &CostMatrix, priority: &[f64], max_cost: f64) -> Assignment {
    assert_eq!(priority.len(), c.cols, "one priority per column");
    let mut order: Vec<usize> = (0..c.cols).collect();
    order.sort_by(|&a, &b| {
        priority[a]
            .partial_cmp(&priority[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });

    let mut row_taken = vec![false; c.rows];
    let mut pairs = Vec::new();
    for &j in &order {
        let mut best: Option<(usize, f64)> = None;
        for r in 0..c.rows {
            if row_taken[r] {
                continue;
            }
            let v = c.get(r, j);
            if !v.is_finite() || v > max_cost {
                continue;
            }
            if best.is_none_or(|(_, bv)| v < bv) {
                best = Some((r, v));
            }
        }
        if let Some((r, _)) = best {
            row_taken[r] = true;
            pairs.push((r, j));
        }
    }
    pairs.sort_unstable();
    Assignment::from_pairs(pairs, c.rows, c.cols)
}

/// Cost matrix 1 - IoU; disjoint pairs are forbidden when `forbid_disjoint`.
pub fn iou_cost(tracks: &[BoxTlbr], dets: &[BoxTlbr], forbid_disjoint: bool) -> CostMatrix {
    CostMatrix::from_fn(tracks.len(), dets.len(), |r, c| {
        let overlap = iou(&tracks[r], &dets[c]);
        if forbid_disjoint && overlap <= 0.0 {
            FORBIDDEN
        } else {
            1.0 - overlap
        }
    })
}

/// Cost matrix 1 - GIoU, in [0, 2].
pub fn giou_cost(tracks: &[BoxTlbr], dets: &[BoxTlbr]) -> CostMatrix {
    CostMatrix::from_fn(tracks.len(), dets.len(), |r, c| {
        1.0 - giou(&tracks[r], &dets[c])
    })
}
