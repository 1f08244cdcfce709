//! Rectangular linear assignment and Murty's ranked assignment.
//!
//! Costs are extended reals: `+∞` marks a forbidden pair and is never
//! selected. A cost of `-log 0` must be passed as exactly `f64::INFINITY`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const NONE: usize = usize::MAX;

/// Row-major `m × n` cost matrix with `m ≤ n`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "CostMatrix::new",
                expected: rows * cols,
                actual: data.len(),
            });
        }
        if data.iter().any(|c| c.is_nan() || *c == f64::NEG_INFINITY) {
            return Err(Error::Contract(
                "cost entries must be finite or +inf".into(),
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Contract("ragged cost matrix".into()));
        }
        Self::new(m, n, rows.concat())
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
        debug_assert!(!v.is_nan() && v != f64::NEG_INFINITY);
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Sum of the selected entries, accumulated in row order.
    pub fn cost_of(&self, row_to_col: &[usize]) -> f64 {
        row_to_col
            .iter()
            .enumerate()
            .map(|(r, &c)| self.get(r, c))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub row_to_col: Vec<usize>,
    pub cost: f64,
}

impl Assignment {
    fn ordering(&self, other: &Self) -> Ordering {
        self.cost
            .total_cmp(&other.cost)
            .then_with(|| self.row_to_col.cmp(&other.row_to_col))
    }
}

/// Minimum-cost assignment of every row to a distinct column.
///
/// Shortest augmenting path with dual updates; one Dijkstra-like search per
/// row. Forbidden (`+∞`) arcs are never relaxed, and a search that cannot
/// reach a free column reports infeasibility.
pub fn solve_lap(c: &CostMatrix) -> Result<Assignment> {
    let (m, n) = (c.rows, c.cols);
    if m > n {
        return Err(Error::Contract(format!(
            "assignment needs rows <= cols, got {m} x {n}"
        )));
    }
    if m == 0 {
        return Ok(Assignment {
            row_to_col: vec![],
            cost: 0.0,
        });
    }
    let mut u = vec![0.0; m];
    let mut v = vec![0.0; n];
    let mut col4row = vec![NONE; m];
    let mut row4col = vec![NONE; n];
    let mut spc = vec![f64::INFINITY; n];
    let mut path = vec![NONE; n];
    let mut in_rows = vec![false; m];
    let mut in_cols = vec![false; n];
    let mut remaining: Vec<usize> = Vec::with_capacity(n);

    for cur in 0..m {
        spc.fill(f64::INFINITY);
        path.fill(NONE);
        in_rows.fill(false);
        in_cols.fill(false);
        remaining.clear();
        remaining.extend(0..n);

        let mut i = cur;
        let mut min_val = 0.0;
        let sink = loop {
            in_rows[i] = true;
            let mut lowest = f64::INFINITY;
            let mut index = NONE;
            for (it, &j) in remaining.iter().enumerate() {
                let cij = c.get(i, j);
                if cij.is_finite() {
                    let r = min_val + cij - u[i] - v[j];
                    if r < spc[j] {
                        path[j] = i;
                        spc[j] = r;
                    }
                }
                if spc[j] < lowest || (spc[j] == lowest && lowest.is_finite() && row4col[j] == NONE)
                {
                    lowest = spc[j];
                    index = it;
                }
            }
            if !lowest.is_finite() {
                return Err(Error::Infeasible);
            }
            min_val = lowest;
            let j = remaining.remove(index);
            in_cols[j] = true;
            if row4col[j] == NONE {
                break j;
            }
            i = row4col[j];
        };

        u[cur] += min_val;
        for r in 0..m {
            if in_rows[r] && r != cur {
                u[r] += min_val - spc[col4row[r]];
            }
        }
        for j in 0..n {
            if in_cols[j] {
                v[j] -= min_val - spc[j];
            }
        }
        let mut j = sink;
        loop {
            let r = path[j];
            row4col[j] = r;
            std::mem::swap(&mut col4row[r], &mut j);
            if r == cur {
                break;
            }
        }
    }
    let cost = c.cost_of(&col4row);
    Ok(Assignment {
        row_to_col: col4row,
        cost,
    })
}

#[derive(Debug)]
struct Node {
    solution: Assignment,
    fixed: Vec<Option<usize>>,
    forbidden: Vec<(usize, usize)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // Reversed so the max-heap pops the cheapest node first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.solution.ordering(&self.solution)
    }
}

fn constrained(
    base: &CostMatrix,
    fixed: &[Option<usize>],
    forbidden: &[(usize, usize)],
) -> CostMatrix {
    let mut c = base.clone();
    for &(r, col) in forbidden {
        c.set(r, col, f64::INFINITY);
    }
    for (r, f) in fixed.iter().enumerate() {
        if let Some(col) = *f {
            let keep = base.get(r, col);
            for j in 0..c.cols {
                c.set(r, j, f64::INFINITY);
            }
            for i in 0..c.rows {
                c.set(i, col, f64::INFINITY);
            }
            c.set(r, col, keep);
        }
    }
    c
}

fn solve_node(
    base: &CostMatrix,
    fixed: Vec<Option<usize>>,
    forbidden: Vec<(usize, usize)>,
) -> Result<Option<Node>> {
    match solve_lap(&constrained(base, &fixed, &forbidden)) {
        Ok(sol) => Ok(Some(Node {
            solution: Assignment {
                cost: base.cost_of(&sol.row_to_col),
                row_to_col: sol.row_to_col,
            },
            fixed,
            forbidden,
        })),
        Err(Error::Infeasible) => Ok(None),
        Err(e) => Err(e),
    }
}

/// The `M` lowest-cost assignments in nondecreasing cost order (ties ordered
/// lexicographically by `row_to_col`). Returns fewer when fewer exist.
///
/// Each popped solution's subproblem is partitioned over its free rows and
/// every child is re-solved from scratch.
pub fn murty(c: &CostMatrix, m_best: usize) -> Result<Vec<Assignment>> {
    if m_best == 0 {
        return Err(Error::Contract("murty needs M >= 1".into()));
    }
    let root = solve_node(c, vec![None; c.rows], vec![])?.ok_or(Error::Infeasible)?;
    let mut heap = BinaryHeap::new();
    heap.push(root);
    let mut out: Vec<Assignment> = Vec::with_capacity(m_best);
    while let Some(node) = heap.pop() {
        let parent = &node.solution.row_to_col;
        let mut fixed = node.fixed.clone();
        for r in 0..c.rows {
            if fixed[r].is_some() {
                continue;
            }
            let mut forbidden = node.forbidden.clone();
            forbidden.push((r, parent[r]));
            if let Some(child) = solve_node(c, fixed.clone(), forbidden)? {
                heap.push(child);
            }
            fixed[r] = Some(parent[r]);
        }
        out.push(node.solution);
        if out.len() == m_best {
            break;
        }
    }
    out.sort_by(Assignment::ordering);
    Ok(out)
}
