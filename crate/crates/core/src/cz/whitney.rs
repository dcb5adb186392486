use serde::{Deserialize, Serialize};

use crate::grid::CountTable;
use crate::{DyadicCube, Error, GridSet, Lattice, Result};

/// A cube of the Whitney decomposition with its distance to the complement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WhitneyCube {
    pub cube: DyadicCube,
    pub dist: f64,
    /// Set when the cube is a single cell that fails the lower distance bound.
    pub floor: bool,
}

/// Nearest-cell queries against a fixed set of cells.
pub struct GapDistance {
    n: usize,
    delta: f64,
    rows: Vec<Vec<usize>>,
}

impl GapDistance {
    pub fn new(set: &GridSet) -> Self {
        let n = set.lattice().n();
        let mut rows = vec![Vec::new(); n];
        for (i, j) in set.cells() {
            rows[j].push(i);
        }
        Self { n, delta: set.lattice().delta(), rows }
    }

    /// Column gap between `[a, b)` and the nearest member of `row`, or `None`.
    fn row_gap(row: &[usize], a: usize, b: usize) -> Option<usize> {
        let p = row.partition_point(|&c| c < a);
        if p < row.len() && row[p] < b {
            return Some(0);
        }
        let right = row.get(p).map(|&c| c - b);
        let left = p.checked_sub(1).map(|q| a - row[q] - 1);
        match (left, right) {
            (Some(l), Some(r)) => Some(l.min(r)),
            (l, r) => l.or(r),
        }
    }

    /// Distance between the closed block `[i0, i0+s) x [j0, j0+s)` and the set.
    pub fn block(&self, i0: usize, j0: usize, s: usize) -> f64 {
        let mut best = f64::INFINITY;
        let eval = |gx: usize, gy: usize| self.delta * ((gx * gx + gy * gy) as f64).sqrt();
        for j in j0..j0 + s {
            if let Some(g) = Self::row_gap(&self.rows[j], i0, i0 + s) {
                best = best.min(eval(g, 0));
            }
        }
        // Rows `j0 - 1 - gy` and `j0 + s + gy` sit `gy` cells away.
        for gy in 0..self.n {
            if self.delta * gy as f64 >= best {
                break;
            }
            let mut any = false;
            for j in [j0.checked_sub(gy + 1), Some(j0 + s + gy)].into_iter().flatten() {
                if j >= self.n {
                    continue;
                }
                any = true;
                if let Some(g) = Self::row_gap(&self.rows[j], i0, i0 + s) {
                    best = best.min(eval(g, gy));
                }
            }
            if !any {
                break;
            }
        }
        best
    }
}

/// Partition of `omega` into dyadic cubes with `diam <= dist(Q, Ω^c) <= 4 diam`.
///
/// The complement is taken inside the lattice. Cubes are found top-down, so
/// the largest admissible cube wins; single cells that still fail the lower
/// bound are kept and flagged.
pub fn whitney(omega: &GridSet) -> Result<Vec<WhitneyCube>> {
    let lattice: Lattice = *omega.lattice();
    if omega.is_empty() {
        return Ok(Vec::new());
    }
    let complement = omega.complement();
    if complement.is_empty() {
        return Err(Error::Domain("Whitney decomposition needs a nonempty complement".into()));
    }
    let counts = CountTable::new(omega);
    let gaps = GapDistance::new(&complement);
    let mut out = Vec::new();
    let mut stack = vec![DyadicCube::root()];
    while let Some(q) = stack.pop() {
        let s = q.cells(&lattice);
        let c = counts.count(q.i, q.j, q.i + s, q.j + s) as usize;
        if c == 0 {
            continue;
        }
        if c == s * s {
            let dist = gaps.block(q.i, q.j, s);
            let diam = q.diam(&lattice);
            if dist >= diam {
                out.push(WhitneyCube { cube: q, dist, floor: false });
                continue;
            }
            if q.is_cell(&lattice) {
                out.push(WhitneyCube { cube: q, dist, floor: true });
                continue;
            }
        }
        if let Some(ch) = q.children(&lattice) {
            stack.extend(ch.iter().rev());
        }
    }
    Ok(out)
}
