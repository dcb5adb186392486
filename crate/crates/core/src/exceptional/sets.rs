use std::collections::BTreeSet;
use std::f64::consts::{PI, TAU};

use rayon::prelude::*;

use super::{heavy_rectangles, scale_grid, scale_ladder, ExceptionalConfig, ScaleLadder};
use crate::density::DensityPiece;
use crate::spherical::{circle_samples, direction_net, in_arc, CircleSample, Direction};
use crate::{GranularFunction, GridSet, Lattice, Result};

/// Angular width of the caps attached to scale `i`.
pub fn cap_width(ladder: &ScaleLadder, i: usize, cfg: &ExceptionalConfig) -> f64 {
    (cfg.knobs.c_width * ladder.c(i - 1) / ladder.c(i)).min(TAU)
}

/// Whether `angle` lies in the cap about `dir` or the antipodal one.
///
/// Directions are only defined modulo `pi`, so each carries both caps.
#[inline]
pub fn in_double_arc(angle: f64, dir: Direction, width: f64) -> bool {
    in_arc(angle, dir.angle(), width) || in_arc(angle, dir.angle() + PI, width)
}

/// Offsets of the double cap, deduplicated.
///
/// Contains every circle sample in the arcs. When the arc spans fewer than
/// four grains, points of the ideal arcs at spacing `delta / 4` are added so
/// the result still covers the geometric cap; the flag reports this.
pub fn double_cap_offsets(
    samples: &[CircleSample],
    k: i32,
    delta: f64,
    dir: Direction,
    width: f64,
) -> (Vec<[i64; 2]>, bool) {
    let mut set: BTreeSet<[i64; 2]> =
        samples.iter().filter(|s| in_double_arc(s.angle, dir, width)).map(|s| s.offset).collect();
    let r = 2f64.powi(k);
    let fallback = r * width < 4.0 * delta;
    if fallback {
        let step = delta / 4.0 / r;
        let count = (width / step).ceil() as usize + 1;
        for base in [dir.angle(), dir.angle() + PI] {
            for t in 0..=count {
                let a = base - width / 2.0 + width * t as f64 / count as f64;
                set.insert([(r / delta * a.cos()).round() as i64, (r / delta * a.sin()).round() as i64]);
            }
        }
    }
    (set.into_iter().collect(), fallback)
}

/// `S_{M,k,q,γ}` with bookkeeping.
#[derive(Clone, Debug)]
pub struct ExceptionalSet {
    pub set: GridSet,
    pub ladder: ScaleLadder,
    pub n_heavy: usize,
    /// Some dilation left the domain.
    pub clipped: bool,
    /// Some cap was under-resolved and drawn geometrically.
    pub fallback: bool,
}

impl ExceptionalSet {
    pub fn measure(&self) -> f64 {
        self.set.measure()
    }
}

struct PairOut {
    set: GridSet,
    heavy: usize,
    clipped: bool,
    fallback: bool,
}

/// The union over scales `i` and directions `j` of the double caps
/// convolved with the dilated heavy rectangles.
pub fn exceptional_set(piece: &GranularFunction, cfg: &ExceptionalConfig) -> Result<ExceptionalSet> {
    let ladder = scale_ladder(cfg)?;
    let lattice: Lattice = *piece.lattice();
    let samples = circle_samples(cfg.k, lattice.delta())?;
    let mut pairs = Vec::new();
    for i in 1..=ladder.top() {
        for dir in direction_net(ladder.c(i), ladder.c(i - 1))? {
            pairs.push((i, dir));
        }
    }
    let outs: Vec<PairOut> = pairs
        .par_iter()
        .map(|&(i, dir)| -> Result<PairOut> {
            let heavy = heavy_rectangles(piece, dir, i, &ladder, cfg)?;
            if heavy.is_empty() {
                return Ok(PairOut { set: GridSet::empty(lattice), heavy: 0, clipped: false, fallback: false });
            }
            let mut base = GridSet::empty(lattice);
            // Cells binned into a heavy rectangle, whatever their rasterized footprint.
            let grid = scale_grid(dir, &ladder, i);
            let heavy_idx: BTreeSet<[i64; 2]> = heavy.rects.iter().map(|r| r.grid_index).collect();
            for (idx, &v) in piece.values().iter().enumerate() {
                let (ci, cj) = lattice.coords(idx);
                if v != 0.0 && heavy_idx.contains(&grid.index_of(lattice.center(ci, cj))) {
                    base.insert_index(idx);
                }
            }
            for r in &heavy.rects {
                r.dilate_about_center(cfg.knobs.c_dilate).rasterize_into(&lattice, &mut base);
                // Keep R's own cells so the set always covers the rectangle.
                if cfg.knobs.c_dilate < 1.0 {
                    r.rasterize_into(&lattice, &mut base);
                }
            }
            let (offsets, fallback) =
                double_cap_offsets(&samples, cfg.k, lattice.delta(), dir, cap_width(&ladder, i, cfg));
            let (set, clipped) = base.dilate(&offsets);
            Ok(PairOut { set, heavy: heavy.len(), clipped, fallback })
        })
        .collect::<Result<_>>()?;
    let mut set = GridSet::empty(lattice);
    let (mut n_heavy, mut clipped, mut fallback) = (0, false, false);
    for o in outs {
        set.union_with(&o.set)?;
        n_heavy += o.heavy;
        clipped |= o.clipped;
        fallback |= o.fallback;
    }
    Ok(ExceptionalSet { set, ladder, n_heavy, clipped, fallback })
}

/// `|S| M / (2^{k(d-1)} λ)`, or `None` when the piece has zero length.
pub fn size_lemma_ratio(piece: &DensityPiece, cfg: &ExceptionalConfig) -> Result<Option<f64>> {
    let s = exceptional_set(&piece.embed()?, cfg)?;
    Ok(ratio_from_measure(s.measure(), piece.length, cfg))
}

pub fn ratio_from_measure(measure: f64, length: f64, cfg: &ExceptionalConfig) -> Option<f64> {
    (length > 0.0).then(|| measure * cfg.m / (2f64.powi(cfg.k * (cfg.d as i32 - 1)) * length))
}
