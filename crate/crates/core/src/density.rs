//! Critical-density decomposition of `f_q` on a Whitney cube `q`.
//!
//! For densities `γ_N > ... > γ_1` the cubes carrying at least `γ_j l(Q)` of
//! the remaining mass are excised into the piece `f^{γ_j}`; what is left at
//! the end is the piece `f^{γ_0}`.
//!
//! Within one level, scanning cubes largest first against the running
//! residual selects the same cubes as testing every cube against the residual
//! at the start of the level: a cube's integral only changes when a cube
//! inside it is excised, and those are scanned later. The implementation uses
//! the second form.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cz::{level_set, whitney, WhitneyCube};
use crate::grid::{length_of, MassTable};
use crate::{DyadicCube, Error, GranularFunction, GridSet, Lattice, Result};

/// The dyadic densities `γ` in `[α² l(q)^{d-1}, l(q)^{d-1}]`, increasing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityLadder {
    pub alpha: f64,
    pub lq: f64,
    pub d: u32,
    pub gammas: Vec<f64>,
    /// `log2 γ_0`; `γ_j = 2^{e0 + j}`.
    pub e0: i32,
}

impl DensityLadder {
    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }

    /// Index `N` of the top density.
    pub fn top(&self) -> usize {
        self.gammas.len() - 1
    }
}

pub fn gamma_ladder(alpha: f64, lq: f64, d: u32) -> Result<DensityLadder> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if d < 2 {
        return Err(Error::Config("dimension must be at least 2".into()));
    }
    let e = lq.log2().round() as i32;
    if 2f64.powi(e) != lq {
        return Err(Error::Config(format!("cube side {lq} is not dyadic")));
    }
    let hi = 2f64.powi(e * (d as i32 - 1));
    let lo = alpha * alpha * hi;
    let mut e_lo = lo.log2().ceil() as i32;
    while 2f64.powi(e_lo - 1) >= lo {
        e_lo -= 1;
    }
    while 2f64.powi(e_lo) < lo {
        e_lo += 1;
    }
    let e_hi = e * (d as i32 - 1);
    let gammas = (e_lo..=e_hi).map(|k| 2f64.powi(k)).collect();
    Ok(DensityLadder { alpha, lq, d, gammas, e0: e_lo })
}

/// One critical-density piece.
///
/// The function and support live on the lattice of the Whitney cube `q`
/// (its cells only); [`embed`](Self::embed) places them in the domain.
#[derive(Clone, Debug)]
pub struct DensityPiece {
    pub j: usize,
    pub gamma: f64,
    pub function: GranularFunction,
    /// Union of the excised cubes (for `j = 0`, the rest of `q`).
    pub support: GridSet,
    pub length: f64,
    /// Cubes that passed the test at this level, in domain coordinates.
    pub cubes: Vec<DyadicCube>,
    /// The domain lattice and the lower-left cell of `q` in it.
    pub global: Lattice,
    pub offset: [usize; 2],
}

impl DensityPiece {
    pub fn mass(&self) -> f64 {
        self.function.mass()
    }

    pub fn is_zero(&self) -> bool {
        self.function.is_zero()
    }

    /// The piece as a function on the domain lattice.
    pub fn embed(&self) -> Result<GranularFunction> {
        self.function.embed(self.global, self.offset[0], self.offset[1])
    }

    /// The support set on the domain lattice.
    pub fn embed_support(&self) -> GridSet {
        let mut out = GridSet::empty(self.global);
        for (i, j) in self.support.cells() {
            out.insert(i + self.offset[0], j + self.offset[1]);
        }
        out
    }
}

/// Decomposes `f χ_q` into pieces `j = 0..=N`, returned in increasing `j`.
pub fn decompose(f: &GranularFunction, q: &DyadicCube, ladder: &DensityLadder) -> Result<Vec<DensityPiece>> {
    let global: Lattice = *f.lattice();
    if ladder.is_empty() {
        return Err(Error::Config("empty density ladder".into()));
    }
    let s = q.cells(&global);
    let mut residual = f.window(q.i, q.j, s)?;
    let lattice = *residual.lattice();
    let root = DyadicCube::root();
    let to_global = |c: &DyadicCube| DyadicCube { level: c.level + q.level, i: c.i + q.i, j: c.j + q.j };
    let piece = |j: usize, function, support: GridSet, cubes| {
        let length = length_of(&support);
        DensityPiece { j, gamma: ladder.gammas[j], function, support, length, cubes, global, offset: [q.i, q.j] }
    };
    let mut pieces = Vec::with_capacity(ladder.len());
    if residual.is_zero() {
        for j in (1..ladder.len()).rev() {
            pieces.push(piece(j, GranularFunction::zeros(lattice), GridSet::empty(lattice), Vec::new()));
        }
        pieces.push(piece(0, residual, GridSet::full(lattice), Vec::new()));
        pieces.reverse();
        return Ok(pieces);
    }
    let descendants = root.descendants(&lattice);
    let mut excised = GridSet::empty(lattice);
    for j in (1..ladder.len()).rev() {
        let gamma = ladder.gammas[j];
        let table = MassTable::new(&residual);
        let cubes: Vec<DyadicCube> = descendants
            .iter()
            .filter(|c| table.cube(&lattice, c) >= gamma * c.side(&lattice))
            .copied()
            .collect();
        let mut e = GridSet::empty(lattice);
        for c in &cubes {
            let s = c.cells(&lattice);
            for row in c.j..c.j + s {
                e.insert_row_span(row, c.i, c.i + s);
            }
        }
        let part = residual.restrict(&e)?;
        residual = residual.sub(&part)?;
        excised.union_with(&e)?;
        pieces.push(piece(j, part, e, cubes.iter().map(to_global).collect()));
    }
    let e0 = excised.complement();
    pieces.push(piece(0, residual, e0, Vec::new()));
    pieces.reverse();
    Ok(pieces)
}

/// Width diagnostics for one piece.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthRatios {
    pub j: usize,
    pub gamma: f64,
    pub mass: f64,
    pub length: f64,
    /// `∫|f^γ| / (γ λ)`, zero for an empty piece.
    pub r: f64,
    /// `max_Q ∫_Q |f^γ| / (γ l(Q))` over dyadic `Q ⊆ q`.
    pub w: f64,
}

pub fn verify_widths(pieces: &[DensityPiece]) -> Result<Vec<WidthRatios>> {
    pieces
        .iter()
        .map(|p| {
            let lattice = *p.function.lattice();
            let mass = p.mass();
            if p.length == 0.0 && mass != 0.0 {
                return Err(Error::Inconsistent(format!("piece {} has mass {mass} but zero length", p.j)));
            }
            let r = if mass == 0.0 { 0.0 } else { mass / (p.gamma * p.length) };
            let w = if mass == 0.0 {
                0.0
            } else {
                let table = MassTable::new(&p.function);
                DyadicCube::root()
                    .descendants(&lattice)
                    .iter()
                    .map(|c| table.cube(&lattice, c) / (p.gamma * c.side(&lattice)))
                    .fold(0.0, f64::max)
            };
            Ok(WidthRatios { j: p.j, gamma: p.gamma, mass, length: p.length, r, w })
        })
        .collect()
}

/// Whitney cubes of `{M_HL f > alpha}` with the density pieces of `f χ_q`.
#[derive(Clone, Debug)]
pub struct CubeDecomposition {
    pub omega: GridSet,
    pub cubes: Vec<WhitneyCube>,
    /// `pieces[q]` for the `q`-th cube, in increasing `j`.
    pub pieces: Vec<Vec<DensityPiece>>,
}

/// Runs the level set, Whitney and density stages for one `(f, alpha)`.
pub fn decompose_all(f: &GranularFunction, alpha: f64) -> Result<CubeDecomposition> {
    let omega = level_set(f, alpha);
    let cubes = whitney(&omega)?;
    let lattice = *f.lattice();
    let pieces = cubes
        .par_iter()
        .map(|w| {
            let ladder = gamma_ladder(alpha, w.cube.side(&lattice), 2)?;
            decompose(f, &w.cube, &ladder)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CubeDecomposition { omega, cubes, pieces })
}
