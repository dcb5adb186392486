use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::circle_measure;
use crate::{Error, GranularFunction, GridSet, Lattice, Result};

/// A unit vector in the plane, stored by its angle in `[0, 2 pi)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    angle: f64,
}

impl Direction {
    pub fn new(angle: f64) -> Self {
        Self { angle: angle.rem_euclid(TAU) }
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn unit(&self) -> [f64; 2] {
        [self.angle.cos(), self.angle.sin()]
    }

    /// The unit vector a quarter turn counter-clockwise.
    pub fn perp(&self) -> [f64; 2] {
        [-self.angle.sin(), self.angle.cos()]
    }

    pub fn opposite(&self) -> Self {
        Self::new(self.angle + PI)
    }
}

#[inline]
fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// The origin-centred tiling of the plane by `short x long` rectangles whose
/// short side is parallel to `dir`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RectGrid {
    pub dir: Direction,
    pub short: f64,
    pub long: f64,
}

impl RectGrid {
    pub fn new(dir: Direction, short: f64, long: f64) -> Self {
        Self { dir, short, long }
    }

    /// Index of the tile holding `p`; tiles are half-open in both axes.
    #[inline]
    pub fn index_of(&self, p: [f64; 2]) -> [i64; 2] {
        let u = dot(p, self.dir.unit());
        let v = dot(p, self.dir.perp());
        [(u / self.short + 0.5).floor() as i64, (v / self.long + 0.5).floor() as i64]
    }

    pub fn rect(&self, index: [i64; 2]) -> OrientedRect {
        let (e, f) = (self.dir.unit(), self.dir.perp());
        let a = index[0] as f64 * self.short;
        let b = index[1] as f64 * self.long;
        OrientedRect {
            center: [a * e[0] + b * f[0], a * e[1] + b * f[1]],
            dir: self.dir,
            long: self.long,
            short: self.short,
            grid_index: index,
        }
    }
}

/// A rectangle with its short side parallel to `dir`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrientedRect {
    pub center: [f64; 2],
    pub dir: Direction,
    pub long: f64,
    pub short: f64,
    pub grid_index: [i64; 2],
}

impl OrientedRect {
    pub fn centered(dir: Direction, short: f64, long: f64) -> Self {
        Self { center: [0.0, 0.0], dir, long, short, grid_index: [0, 0] }
    }

    fn local(&self, p: [f64; 2]) -> (f64, f64) {
        let d = [p[0] - self.center[0], p[1] - self.center[1]];
        (dot(d, self.dir.unit()), dot(d, self.dir.perp()))
    }

    /// Half-open membership, consistent with [`RectGrid::index_of`].
    pub fn contains(&self, p: [f64; 2]) -> bool {
        let (u, v) = self.local(p);
        u >= -self.short / 2.0 && u < self.short / 2.0 && v >= -self.long / 2.0 && v < self.long / 2.0
    }

    pub fn contains_closed(&self, p: [f64; 2]) -> bool {
        let (u, v) = self.local(p);
        u.abs() <= self.short / 2.0 && v.abs() <= self.long / 2.0
    }

    /// `c R`: same centre and orientation, sides scaled by `c`.
    pub fn dilate_about_center(&self, c: f64) -> Self {
        Self { long: self.long * c, short: self.short * c, ..*self }
    }

    pub fn area(&self) -> f64 {
        self.long * self.short
    }

    pub fn corners(&self) -> [[f64; 2]; 4] {
        let (e, f) = (self.dir.unit(), self.dir.perp());
        let (hs, hl) = (self.short / 2.0, self.long / 2.0);
        let c = self.center;
        let pt = |a: f64, b: f64| [c[0] + a * e[0] + b * f[0], c[1] + a * e[1] + b * f[1]];
        [pt(-hs, -hl), pt(hs, -hl), pt(hs, hl), pt(-hs, hl)]
    }

    /// Cells whose centres lie in the (half-open) rectangle.
    pub fn rasterize(&self, lattice: &Lattice) -> GridSet {
        let mut s = GridSet::empty(*lattice);
        self.rasterize_into(lattice, &mut s);
        s
    }

    pub fn rasterize_into(&self, lattice: &Lattice, out: &mut GridSet) {
        let cs = self.corners();
        let (mut lo, mut hi) = ([f64::MAX; 2], [f64::MIN; 2]);
        for c in cs {
            for a in 0..2 {
                lo[a] = lo[a].min(c[a]);
                hi[a] = hi[a].max(c[a]);
            }
        }
        let o = lattice.origin();
        let d = lattice.delta();
        let n = lattice.n() as i64;
        let cell = |x: f64, a: usize| (x - o[a]) / d - 0.5;
        let i0 = (cell(lo[0], 0).floor() as i64).max(0);
        let i1 = (cell(hi[0], 0).ceil() as i64).min(n - 1);
        let j0 = (cell(lo[1], 1).floor() as i64).max(0);
        let j1 = (cell(hi[1], 1).ceil() as i64).min(n - 1);
        for j in j0..=j1 {
            for i in i0..=i1 {
                if self.contains(lattice.center(i as usize, j as usize)) {
                    out.insert(i as usize, j as usize);
                }
            }
        }
    }
}

/// Lattice whose cell `(o + n/2)` is centred at offset `o * delta`.
pub fn offset_lattice(half: usize, delta: f64) -> Result<Lattice> {
    let n = (2 * half).next_power_of_two();
    let h = (n / 2) as f64;
    Lattice::new([-(h + 0.5) * delta, -(h + 0.5) * delta], delta, n)
}

/// The density of `sigma_k * sigma_k` on an origin-centred lattice.
///
/// Cell values are pair masses divided by `delta^2`, so the integral is the
/// product mass, one up to rounding.
pub fn autocorrelation_kernel(k: i32, delta: f64) -> Result<GranularFunction> {
    let sigma = circle_measure(k, delta)?;
    let reach = 2 * sigma.reach() as usize + 2;
    let lattice = offset_lattice(reach + 1, delta)?;
    let n = lattice.n();
    let h = (n / 2) as i64;
    let mut acc = vec![0.0; n * n];
    let inv_area = 1.0 / lattice.cell_area();
    for a in sigma.atoms() {
        for b in sigma.atoms() {
            let i = (a.offset[0] + b.offset[0] + h) as usize;
            let j = (a.offset[1] + b.offset[1] + h) as usize;
            acc[j * n + i] += a.weight * b.weight * inv_area;
        }
    }
    GranularFunction::from_values(lattice, acc)
}

/// One level of the rectangle domination: every rect carries `weight`.
#[derive(Clone, Debug, PartialEq)]
pub struct DominationTerm {
    pub weight: f64,
    pub rects: Vec<OrientedRect>,
}

/// Equispaced directions `j pi / count`, `count = ceil(c_hi / c_lo)`.
pub fn direction_net(c_hi: f64, c_lo: f64) -> Result<Vec<Direction>> {
    if !(c_lo > 0.0 && c_lo < c_hi) {
        return Err(Error::Config(format!("direction net needs 0 < c_lo < c_hi, got {c_lo}, {c_hi}")));
    }
    let count = (c_hi / c_lo).ceil() as usize;
    Ok((0..count).map(|j| Direction::new(j as f64 * PI / count as f64)).collect())
}

/// Origin-centred `c_i x c_{i-1}` rects whose weighted sum bounds `sigma_k * sigma_k`.
pub fn dominate_kernel(ladder: &[f64], k: i32) -> Result<Vec<DominationTerm>> {
    if ladder.windows(2).any(|w| !(w[0] < w[1])) || ladder.iter().any(|c| !(*c > 0.0)) {
        return Err(Error::Config("scale ladder must be positive and strictly increasing".into()));
    }
    let scale = 2f64.powi(-k);
    ladder
        .windows(2)
        .map(|w| {
            let rects =
                direction_net(w[1], w[0])?.into_iter().map(|d| OrientedRect::centered(d, w[0], w[1])).collect();
            Ok(DominationTerm { weight: scale / w[1], rects })
        })
        .collect()
}

/// `Σ weight · χ_R(x)` with closed rectangles.
pub fn domination_value(terms: &[DominationTerm], x: [f64; 2]) -> f64 {
    terms
        .iter()
        .map(|t| t.weight * t.rects.iter().filter(|r| r.contains_closed(x)).count() as f64)
        .sum()
}

/// `max K(x) 2^{k(d-1)} |x|` over kernel cells with `8 delta <= |x| <= 2^k`.
pub fn kernel_pointwise_ratio(k: i32, delta: f64) -> Result<f64> {
    let kernel = autocorrelation_kernel(k, delta)?;
    let kl = *kernel.lattice();
    let h = (kl.n() / 2) as f64;
    let r = 2f64.powi(k);
    let mut worst: f64 = 0.0;
    for (idx, &v) in kernel.values().iter().enumerate() {
        let (i, j) = kl.coords(idx);
        let len = ((i as f64 - h) * delta).hypot((j as f64 - h) * delta);
        if len >= 8.0 * delta && len <= r {
            worst = worst.max(v * r * len);
        }
    }
    Ok(worst)
}

/// `max K(x) / Σ w χ_R(x)` for the ladder `8 delta 2^j` up to `2^{k+3}`,
/// over kernel cells with `8 delta <= |x| <= c_N / pi`; infinite if some
/// such cell is uncovered.
pub fn kernel_domination_ratio(k: i32, delta: f64) -> Result<f64> {
    let kernel = autocorrelation_kernel(k, delta)?;
    let kl = *kernel.lattice();
    let h = (kl.n() / 2) as f64;
    let top = ((k + 3) as f64 - (8.0 * delta).log2()).ceil().max(1.0) as i32;
    let ladder: Vec<f64> = (0..=top).map(|j| 8.0 * delta * 2f64.powi(j)).collect();
    let terms = dominate_kernel(&ladder, k)?;
    let reach = ladder[ladder.len() - 1] / PI;
    let mut worst: f64 = 0.0;
    for (idx, &v) in kernel.values().iter().enumerate() {
        let (i, j) = kl.coords(idx);
        let x = [(i as f64 - h) * delta, (j as f64 - h) * delta];
        let len = x[0].hypot(x[1]);
        if v > 0.0 && len >= 8.0 * delta && len <= reach {
            let d = domination_value(&terms, x);
            worst = if d > 0.0 { worst.max(v / d) } else { f64::INFINITY };
        }
    }
    Ok(worst)
}
