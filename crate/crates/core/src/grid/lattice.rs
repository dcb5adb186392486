use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A square lattice of `n x n` cells of side `delta`, lower-left corner at `origin`.
///
/// `delta` is a power of two and so is `n`; cells are indexed `(i, j)` with `i`
/// the column (x) and `j` the row (y), stored row-major.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    origin: [f64; 2],
    delta: f64,
    n: usize,
}

// Fields are validated finite, so equality is reflexive.
impl Eq for Lattice {}

fn is_dyadic(x: f64) -> bool {
    x > 0.0 && x.is_finite() && {
        let e = x.log2().round();
        (2f64).powi(e as i32) == x
    }
}

impl Lattice {
    pub fn new(origin: [f64; 2], delta: f64, n: usize) -> Result<Self> {
        if !is_dyadic(delta) {
            return Err(Error::Config(format!("grain {delta} is not a power of two")));
        }
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::Config(format!("cells per side {n} is not a power of two")));
        }
        if !origin.iter().all(|c| c.is_finite()) {
            return Err(Error::Config("origin must be finite".into()));
        }
        Ok(Self { origin, delta, n })
    }

    /// Square `[-side/2, side/2)^2` at grain `delta`.
    pub fn centered(side: f64, delta: f64) -> Result<Self> {
        let n = (side / delta).round() as usize;
        if (n as f64) * delta != side {
            return Err(Error::Config(format!("side {side} is not a multiple of {delta}")));
        }
        Self::new([-side / 2.0, -side / 2.0], delta, n)
    }

    /// Square `[0, side)^2`.
    pub fn unit(side: f64, delta: f64) -> Result<Self> {
        let n = (side / delta).round() as usize;
        Self::new([0.0, 0.0], delta, n)
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Cells per side.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Physical side length `L`.
    pub fn side(&self) -> f64 {
        self.n as f64 * self.delta
    }

    pub fn dim(&self) -> usize {
        2
    }

    pub fn cell_area(&self) -> f64 {
        self.delta * self.delta
    }

    /// Number of dyadic levels, `log2(n)`.
    pub fn depth(&self) -> u32 {
        self.n.trailing_zeros()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.n, idx / self.n)
    }

    #[inline]
    pub fn center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + (i as f64 + 0.5) * self.delta,
            self.origin[1] + (j as f64 + 0.5) * self.delta,
        ]
    }

    /// Cell containing the point, if inside the domain.
    pub fn locate(&self, p: [f64; 2]) -> Option<(usize, usize)> {
        let fi = ((p[0] - self.origin[0]) / self.delta).floor();
        let fj = ((p[1] - self.origin[1]) / self.delta).floor();
        let n = self.n as f64;
        if fi < 0.0 || fj < 0.0 || fi >= n || fj >= n {
            return None;
        }
        Some((fi as usize, fj as usize))
    }

    /// Same domain at half the grain.
    pub fn refine(&self) -> Lattice {
        Lattice { origin: self.origin, delta: self.delta / 2.0, n: self.n * 2 }
    }

    /// Same domain at twice the grain.
    pub fn coarsen(&self) -> Option<Lattice> {
        (self.n >= 2).then(|| Lattice { origin: self.origin, delta: self.delta * 2.0, n: self.n / 2 })
    }

    pub(crate) fn check_same(&self, other: &Lattice) -> Result<()> {
        if self != other {
            return Err(Error::Config("operands live on different lattices".into()));
        }
        Ok(())
    }
}
