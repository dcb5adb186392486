use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ExceptionalConfig, ScaleLadder};
use crate::spherical::{Direction, OrientedRect, RectGrid};
use crate::{Error, GranularFunction, Result};

/// The grid of `c_i x c_{i-1}` rectangles with short side along `dir`.
pub fn scale_grid(dir: Direction, ladder: &ScaleLadder, i: usize) -> RectGrid {
    RectGrid::new(dir, ladder.c(i - 1), ladder.c(i))
}

/// `∫_R |f|` for every grid rectangle that holds mass, keyed by grid index.
///
/// Cells are assigned by centre, so rectangles narrower than the grain are
/// not resolved. Summation runs in row-major cell order, so every caller sees
/// bit-identical masses.
pub fn bin_rect_masses(f: &GranularFunction, grid: &RectGrid) -> BTreeMap<[i64; 2], f64> {
    let lattice = f.lattice();
    let area = lattice.cell_area();
    let n = lattice.n();
    let mut bins = BTreeMap::new();
    for (idx, &v) in f.values().iter().enumerate() {
        if v != 0.0 {
            let (i, j) = (idx % n, idx / n);
            *bins.entry(grid.index_of(lattice.center(i, j))).or_insert(0.0) += v.abs() * area;
        }
    }
    bins
}

/// The heavy-rectangle threshold `c_{i-1} M γ`, in one fixed evaluation order.
#[inline]
pub fn heavy_threshold(c_prev: f64, m: f64, gamma: f64) -> f64 {
    c_prev * m * gamma
}

/// Rectangles of one direction and scale carrying at least `c_{i-1} M γ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeavyRectSet {
    pub dir: Direction,
    pub i: usize,
    pub rects: Vec<OrientedRect>,
    pub masses: Vec<f64>,
}

impl HeavyRectSet {
    pub fn len(&self) -> usize {
        self.rects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rects.is_empty()
    }
}

pub fn heavy_rectangles(
    piece: &GranularFunction,
    dir: Direction,
    i: usize,
    ladder: &ScaleLadder,
    cfg: &ExceptionalConfig,
) -> Result<HeavyRectSet> {
    if i == 0 || i > ladder.top() {
        return Err(Error::Config(format!("scale index {i} outside 1..={}", ladder.top())));
    }
    let grid = scale_grid(dir, ladder, i);
    let threshold = heavy_threshold(ladder.c(i - 1), cfg.m, cfg.gamma);
    let (mut rects, mut masses) = (Vec::new(), Vec::new());
    for (idx, mass) in bin_rect_masses(piece, &grid) {
        if mass >= threshold {
            rects.push(grid.rect(idx));
            masses.push(mass);
        }
    }
    Ok(HeavyRectSet { dir, i, rects, masses })
}
