//! Discrete toolkit for the lacunary spherical maximal operator in the plane.
//!
//! Everything lives on a dyadic lattice of square cells of side `delta`.
//! Functions are granular (constant on cells), sets are cell bitmaps, and the
//! spherical measures are equispaced samples of a circle binned to cell
//! offsets. On top of that substrate sit the Calderon-Zygmund machinery
//! (Hardy-Littlewood level sets, Whitney cubes, polynomial projections), the
//! critical-density decomposition of a function on a Whitney cube, the
//! rectangle/cap exceptional sets and the height decomposition of
//! `sigma_k * f`.

pub mod cz;
pub mod density;
pub mod error;
pub mod exceptional;
pub mod grid;
pub mod heights;
pub mod maximal;
pub mod spherical;

pub use error::{Error, Result};
pub use grid::{DyadicCube, GranularFunction, GridSet, Lattice};
pub use spherical::{DiscreteMeasure, Direction, OrientedRect};
