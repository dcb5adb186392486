use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{exceptional_set, ratio_from_measure, ExceptionalConfig, Knobs};
use crate::density::{decompose_all, CubeDecomposition};
use crate::grid::clog2;
use crate::maximal::ScaleRange;
use crate::spherical::{circle_measure, convolution_support};
use crate::{GranularFunction, GridSet, Result};

/// Which of the three scale regimes a `k` falls in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// Small scales: discard the whole support of `sigma_k * f^γ`.
    K1,
    /// Middle band: discard the exceptional set at height `M*`.
    K2,
    /// Large scales: nothing is discarded.
    K3,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::K1 => "K1",
            Regime::K2 => "K2",
            Regime::K3 => "K3",
        }
    }
}

/// Regime of `k` for the `(α, γ, l(q))` in `cfg`; `cfg.k` is ignored.
pub fn regime_partition(k: i32, cfg: &ExceptionalConfig) -> Regime {
    let dm1 = (cfg.d - 1) as f64;
    let a = k as f64 * dm1;
    let g = (cfg.gamma / cfg.alpha).log2();
    if a < (cfg.lq.log2() * dm1).max(g) {
        Regime::K1
    } else if a <= g + cfg.knobs.c_k2 * clog2(clog2(1.0 / cfg.alpha)) {
        Regime::K2
    } else {
        Regime::K3
    }
}

/// Height used in the middle regime, `2^{k(d-1)} α γ^{-1} log log (1/α)`.
pub fn k2_height(k: i32, cfg: &ExceptionalConfig) -> f64 {
    2f64.powi(k * (cfg.d as i32 - 1)) * cfg.alpha / cfg.gamma * clog2(clog2(1.0 / cfg.alpha))
}

/// One `(q, γ, k)` contribution to `A`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeRow {
    pub q_id: usize,
    pub j: usize,
    pub gamma: f64,
    pub k: i32,
    pub regime: Regime,
    /// Height `M*` in the middle regime, otherwise zero.
    pub m: f64,
    pub n_scales: usize,
    pub n_heavy: usize,
    pub measure: f64,
    pub size_ratio: Option<f64>,
}

/// The union `A = ∪ A_{q,k,γ}` with its bookkeeping.
#[derive(Clone, Debug)]
pub struct RegimeReport {
    pub set: GridSet,
    pub rows: Vec<RegimeRow>,
    /// `|A| α / ‖f‖₁`, `None` for `f = 0`.
    pub ratio: Option<f64>,
    /// `Σ |A_{q,k,γ}|`, an upper bound for `|A|`.
    pub sum_of_parts: f64,
    pub clipped: bool,
}

impl RegimeReport {
    pub fn measure(&self) -> f64 {
        self.set.measure()
    }
}

/// Base configuration for piece `(q, j)`; the caller sets `k` and `m`.
pub fn piece_config(dec: &CubeDecomposition, q_id: usize, j: usize, alpha: f64, knobs: Knobs) -> ExceptionalConfig {
    let lattice = *dec.omega.lattice();
    ExceptionalConfig {
        alpha,
        gamma: dec.pieces[q_id][j].gamma,
        k: 0,
        lq: dec.cubes[q_id].cube.side(&lattice),
        d: 2,
        m: 1.0,
        knobs,
    }
}

/// Assembles `A` from an existing decomposition.
pub fn regime_exceptional_from(
    f: &GranularFunction,
    dec: &CubeDecomposition,
    alpha: f64,
    knobs: Knobs,
    range: ScaleRange,
) -> Result<RegimeReport> {
    let lattice = *f.lattice();
    let mut jobs = Vec::new();
    for (q_id, pieces) in dec.pieces.iter().enumerate() {
        for p in pieces.iter().filter(|p| p.j >= 1 && !p.is_zero()) {
            jobs.push((q_id, p.j));
        }
    }
    let parts: Vec<(Vec<RegimeRow>, GridSet, bool)> = jobs
        .par_iter()
        .map(|&(q_id, j)| -> Result<_> {
            let piece = &dec.pieces[q_id][j];
            let function = piece.embed()?;
            let support = function.support();
            let mut union = GridSet::empty(lattice);
            let mut rows = Vec::new();
            let mut clipped = false;
            for k in range.iter() {
                let mut cfg = piece_config(dec, q_id, j, alpha, knobs);
                cfg.k = k;
                let regime = regime_partition(k, &cfg);
                let (set, m, n_scales, n_heavy, c) = match regime {
                    Regime::K1 => {
                        let sigma = circle_measure(k, lattice.delta())?;
                        let (s, c) = convolution_support(&sigma, &support);
                        (s, 0.0, 0, 0, c)
                    }
                    Regime::K2 => {
                        cfg.m = k2_height(k, &cfg);
                        let s = exceptional_set(&function, &cfg)?;
                        (s.set, cfg.m, s.ladder.top(), s.n_heavy, s.clipped)
                    }
                    Regime::K3 => (GridSet::empty(lattice), 0.0, 0, 0, false),
                };
                let measure = set.measure();
                let size_ratio =
                    if regime == Regime::K2 { ratio_from_measure(measure, piece.length, &cfg) } else { None };
                rows.push(RegimeRow { q_id, j, gamma: piece.gamma, k, regime, m, n_scales, n_heavy, measure, size_ratio });
                union.union_with(&set)?;
                clipped |= c;
            }
            Ok((rows, union, clipped))
        })
        .collect::<Result<_>>()?;
    let mut set = GridSet::empty(lattice);
    let mut rows = Vec::new();
    let (mut sum_of_parts, mut clipped) = (0.0, false);
    for (part, s, c) in parts {
        set.union_with(&s)?;
        sum_of_parts += part.iter().map(|r| r.measure).sum::<f64>();
        clipped |= c;
        rows.extend(part);
    }
    let mass = f.mass();
    let ratio = (mass > 0.0).then(|| set.measure() * alpha / mass);
    Ok(RegimeReport { set, rows, ratio, sum_of_parts, clipped })
}

/// Runs the full decomposition and assembles `A`.
pub fn regime_exceptional(f: &GranularFunction, alpha: f64, knobs: Knobs, range: ScaleRange) -> Result<RegimeReport> {
    let dec = decompose_all(f, alpha)?;
    regime_exceptional_from(f, &dec, alpha, knobs, range)
}
