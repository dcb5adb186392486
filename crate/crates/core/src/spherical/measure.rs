use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::Direction;
use crate::{Error, Result};

/// What a [`DiscreteMeasure`] discretizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum MeasureSupport {
    Circle { k: i32 },
    Cap { k: i32, normal: f64, width: f64 },
    CapUnion { k: i32, theta: f64 },
    Kernel { k: i32 },
}

/// One weighted cell offset, in units of the grain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub offset: [i64; 2],
    pub weight: f64,
}

/// A finite weighted set of cell offsets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    delta: f64,
    support: MeasureSupport,
    atoms: Vec<Atom>,
    mass: f64,
}

/// One equispaced sample of the circle of radius `2^k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CircleSample {
    pub angle: f64,
    pub offset: [i64; 2],
}

#[inline]
fn round_away(x: f64) -> i64 {
    x.round() as i64
}

/// Smallest admissible scale at grain `delta`: `2^k >= 8 delta`.
pub fn min_resolvable_k(delta: f64) -> i32 {
    (8.0 * delta).log2().ceil() as i32
}

pub fn check_resolvable(k: i32, delta: f64) -> Result<()> {
    if 2f64.powi(k) < 8.0 * delta {
        return Err(Error::Resolution(format!("radius 2^{k} is below 8 grains of {delta}")));
    }
    Ok(())
}

/// Number of circle samples, `ceil(16 pi 2^k / delta)` rounded up to a multiple of 8.
pub fn sample_count(k: i32, delta: f64) -> usize {
    let p = (16.0 * PI * 2f64.powi(k) / delta).ceil() as usize;
    p.div_ceil(8) * 8
}

/// Equispaced samples at angles `(m + 1/2) 2 pi / P`, rounded to cells.
///
/// The first octant is rounded once and reflected, so the offset multiset is
/// exactly invariant under the eight lattice symmetries. Samples come back in
/// increasing angle.
pub fn circle_samples(k: i32, delta: f64) -> Result<Vec<CircleSample>> {
    check_resolvable(k, delta)?;
    let p = sample_count(k, delta);
    let r = 2f64.powi(k) / delta;
    let step = TAU / p as f64;
    let oct = p / 8;
    let first: Vec<(i64, i64)> = (0..oct)
        .map(|m| {
            let t = (m as f64 + 0.5) * step;
            (round_away(r * t.cos()), round_away(r * t.sin()))
        })
        .collect();
    let mut out = Vec::with_capacity(p);
    for m in 0..p {
        let o = m / oct;
        let idx = m % oct;
        // Position inside the octant, mirrored on odd octants.
        let (a, b) = if o % 2 == 0 { first[idx] } else { first[oct - 1 - idx] };
        let offset = match o {
            0 => [a, b],
            1 => [b, a],
            2 => [-b, a],
            3 => [-a, b],
            4 => [-a, -b],
            5 => [-b, -a],
            6 => [b, -a],
            _ => [a, -b],
        };
        out.push(CircleSample { angle: (m as f64 + 0.5) * step, offset });
    }
    Ok(out)
}

/// Signed angular distance from `a` to `b`, in `[-pi, pi)`.
#[inline]
pub fn angle_diff(a: f64, b: f64) -> f64 {
    (b - a + PI).rem_euclid(TAU) - PI
}

/// Whether `angle` lies in the half-open arc `[center - w/2, center + w/2)`.
#[inline]
pub fn in_arc(angle: f64, center: f64, width: f64) -> bool {
    if width >= TAU {
        return true;
    }
    let d = (angle - (center - width / 2.0)).rem_euclid(TAU);
    d < width
}

impl DiscreteMeasure {
    /// Builds a measure from weighted offsets, merging duplicates.
    pub fn from_weighted(
        delta: f64,
        support: MeasureSupport,
        items: impl IntoIterator<Item = ([i64; 2], f64)>,
    ) -> Self {
        let mut merged: BTreeMap<[i64; 2], f64> = BTreeMap::new();
        for (o, w) in items {
            *merged.entry(o).or_insert(0.0) += w;
        }
        let atoms: Vec<Atom> =
            merged.into_iter().filter(|(_, w)| *w != 0.0).map(|(offset, weight)| Atom { offset, weight }).collect();
        let mass = atoms.iter().map(|a| a.weight).sum();
        Self { delta, support, atoms, mass }
    }

    pub fn zero(delta: f64, support: MeasureSupport) -> Self {
        Self { delta, support, atoms: Vec::new(), mass: 0.0 }
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn support(&self) -> &MeasureSupport {
        &self.support
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn offsets(&self) -> Vec<[i64; 2]> {
        self.atoms.iter().map(|a| a.offset).collect()
    }

    /// Largest coordinate of any offset, in cells.
    pub fn reach(&self) -> i64 {
        self.atoms.iter().map(|a| a.offset[0].abs().max(a.offset[1].abs())).max().unwrap_or(0)
    }

    /// Reflected measure `x -> -x`.
    pub fn reflect(&self) -> Self {
        Self::from_weighted(
            self.delta,
            self.support.clone(),
            self.atoms.iter().map(|a| ([-a.offset[0], -a.offset[1]], a.weight)),
        )
    }
}

/// The normalized circle measure `sigma_k` at grain `delta`.
pub fn circle_measure(k: i32, delta: f64) -> Result<DiscreteMeasure> {
    let samples = circle_samples(k, delta)?;
    let w = 1.0 / samples.len() as f64;
    Ok(DiscreteMeasure::from_weighted(delta, MeasureSupport::Circle { k }, samples.iter().map(|s| (s.offset, w))))
}

/// Uniform measure on the arc of `sigma_k` centred at `normal`, mass `width / 2 pi`.
pub fn cap_measure(k: i32, normal: Direction, width: f64, delta: f64) -> Result<DiscreteMeasure> {
    if !(width > 0.0) {
        return Err(Error::Domain(format!("cap width must be positive, got {width}")));
    }
    if width >= TAU {
        return circle_measure(k, delta);
    }
    if 2f64.powi(k) * width < 4.0 * delta {
        return Err(Error::Resolution(format!("arc of width {width} at radius 2^{k} spans under 4 grains")));
    }
    let samples = circle_samples(k, delta)?;
    let chosen: Vec<_> = samples.iter().filter(|s| in_arc(s.angle, normal.angle(), width)).collect();
    if chosen.is_empty() {
        return Err(Error::Resolution("arc contains no circle samples".into()));
    }
    let w = width / TAU / chosen.len() as f64;
    Ok(DiscreteMeasure::from_weighted(
        delta,
        MeasureSupport::Cap { k, normal: normal.angle(), width },
        chosen.iter().map(|s| (s.offset, w)),
    ))
}
