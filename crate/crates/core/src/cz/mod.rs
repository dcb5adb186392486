//! Calderon-Zygmund machinery: the level set of the dyadic maximal function,
//! its Whitney cubes, and polynomial projections onto those cubes.

mod poly;
mod whitney;

pub use poly::{bad_part, poly_project, PolyBasis};
pub use whitney::{whitney, GapDistance, WhitneyCube};

use crate::maximal::{hardy_littlewood, superlevel};
use crate::{GranularFunction, GridSet};

/// `Ω = {M_HL f > alpha}`.
pub fn level_set(f: &GranularFunction, alpha: f64) -> GridSet {
    superlevel(&hardy_littlewood(f), alpha)
}
