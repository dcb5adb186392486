//! Lattices, cell functions, bitmap sets and dyadic cubes.

mod cube;
mod function;
pub mod io;
mod lattice;
mod logs;
mod set;

pub use cube::{length_of, maximal_dyadic_cover, CountTable, DyadicCube, MassTable};
pub use function::GranularFunction;
pub use lattice::Lattice;
pub use logs::{clog2, iterated_log, log100};
pub use set::GridSet;
