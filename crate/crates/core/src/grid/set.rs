use super::Lattice;
use crate::Result;

/// A measurable set as a bitmap of lattice cells.
///
/// Measure is `delta^2 * popcount`, exact in `f64` for any realistic lattice.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridSet {
    lattice: Lattice,
    words: Vec<u64>,
}

impl GridSet {
    pub fn empty(lattice: Lattice) -> Self {
        let words = vec![0u64; lattice.len().div_ceil(64)];
        Self { lattice, words }
    }

    pub fn full(lattice: Lattice) -> Self {
        let mut s = Self::empty(lattice);
        for idx in 0..lattice.len() {
            s.insert_index(idx);
        }
        s
    }

    pub fn from_predicate(lattice: Lattice, mut pred: impl FnMut(usize, usize) -> bool) -> Self {
        let mut s = Self::empty(lattice);
        for j in 0..lattice.n() {
            for i in 0..lattice.n() {
                if pred(i, j) {
                    s.insert(i, j);
                }
            }
        }
        s
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    #[inline]
    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.contains_index(self.lattice.index(i, j))
    }

    #[inline]
    pub fn contains_index(&self, idx: usize) -> bool {
        self.words[idx >> 6] >> (idx & 63) & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, i: usize, j: usize) {
        let idx = self.lattice.index(i, j);
        self.insert_index(idx);
    }

    #[inline]
    pub fn insert_index(&mut self, idx: usize) {
        self.words[idx >> 6] |= 1u64 << (idx & 63);
    }

    #[inline]
    pub fn remove(&mut self, i: usize, j: usize) {
        let idx = self.lattice.index(i, j);
        self.words[idx >> 6] &= !(1u64 << (idx & 63));
    }

    /// Marks cells `[c0, c1)` of row `j`.
    pub fn insert_row_span(&mut self, j: usize, c0: usize, c1: usize) {
        let n = self.lattice.n();
        let c1 = c1.min(n);
        if c0 >= c1 {
            return;
        }
        let start = j * n + c0;
        let end = j * n + c1;
        let (mut w, last) = (start >> 6, (end - 1) >> 6);
        while w <= last {
            let lo = if w == start >> 6 { start & 63 } else { 0 };
            let hi = if w == last { ((end - 1) & 63) + 1 } else { 64 };
            let mask = if hi - lo == 64 { u64::MAX } else { ((1u64 << (hi - lo)) - 1) << lo };
            self.words[w] |= mask;
            w += 1;
        }
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Lebesgue measure of the union of cells.
    pub fn measure(&self) -> f64 {
        self.count() as f64 * self.lattice.cell_area()
    }

    fn zip(&self, other: &GridSet, op: impl Fn(u64, u64) -> u64) -> Result<GridSet> {
        self.lattice.check_same(&other.lattice)?;
        let words = self.words.iter().zip(&other.words).map(|(&a, &b)| op(a, b)).collect();
        Ok(GridSet { lattice: self.lattice, words })
    }

    pub fn union(&self, other: &GridSet) -> Result<GridSet> {
        self.zip(other, |a, b| a | b)
    }

    pub fn intersection(&self, other: &GridSet) -> Result<GridSet> {
        self.zip(other, |a, b| a & b)
    }

    pub fn difference(&self, other: &GridSet) -> Result<GridSet> {
        self.zip(other, |a, b| a & !b)
    }

    pub fn union_with(&mut self, other: &GridSet) -> Result<()> {
        self.lattice.check_same(&other.lattice)?;
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
        Ok(())
    }

    pub fn complement(&self) -> GridSet {
        let mut out = GridSet::empty(self.lattice);
        for idx in 0..self.lattice.len() {
            if !self.contains_index(idx) {
                out.insert_index(idx);
            }
        }
        out
    }

    pub fn is_subset(&self, other: &GridSet) -> bool {
        self.lattice == other.lattice && self.words.iter().zip(&other.words).all(|(&a, &b)| a & !b == 0)
    }

    pub fn is_disjoint(&self, other: &GridSet) -> bool {
        self.lattice == other.lattice && self.words.iter().zip(&other.words).all(|(&a, &b)| a & b == 0)
    }

    /// Member cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.lattice.n();
        self.words.iter().enumerate().flat_map(move |(w, &bits)| {
            let mut b = bits;
            std::iter::from_fn(move || {
                if b == 0 {
                    return None;
                }
                let t = b.trailing_zeros() as usize;
                b &= b - 1;
                Some(w * 64 + t)
            })
        })
        .map(move |idx| (idx % n, idx / n))
    }

    /// Maximal horizontal runs `(row, c0, c1)` with cells `[c0, c1)` in the set.
    pub fn row_runs(&self) -> Vec<(usize, usize, usize)> {
        let n = self.lattice.n();
        let mut runs = Vec::new();
        for j in 0..n {
            let mut i = 0;
            while i < n {
                if self.contains(i, j) {
                    let s = i;
                    while i < n && self.contains(i, j) {
                        i += 1;
                    }
                    runs.push((j, s, i));
                } else {
                    i += 1;
                }
            }
        }
        runs
    }

    /// Minkowski sum with a set of cell offsets, clipped to the domain.
    ///
    /// Returns the dilated set and whether anything fell outside the domain.
    pub fn dilate(&self, offsets: &[[i64; 2]]) -> (GridSet, bool) {
        let n = self.lattice.n() as i64;
        let mut out = GridSet::empty(self.lattice);
        let mut clipped = false;
        for (row, c0, c1) in self.row_runs() {
            for off in offsets {
                let r = row as i64 + off[1];
                let a = c0 as i64 + off[0];
                let b = c1 as i64 + off[0];
                if r < 0 || r >= n || a < 0 || b > n {
                    clipped = true;
                }
                if r < 0 || r >= n {
                    continue;
                }
                let a = a.clamp(0, n);
                let b = b.clamp(0, n);
                out.insert_row_span(r as usize, a as usize, b as usize);
            }
        }
        (out, clipped)
    }

    /// Bounding box `(i0, j0, i1, j1)` inclusive, `None` for the empty set.
    pub fn bounding_box(&self) -> Option<(usize, usize, usize, usize)> {
        let mut bb: Option<(usize, usize, usize, usize)> = None;
        for (i, j) in self.cells() {
            bb = Some(match bb {
                None => (i, j, i, j),
                Some((a, b, c, d)) => (a.min(i), b.min(j), c.max(i), d.max(j)),
            });
        }
        bb
    }
}
