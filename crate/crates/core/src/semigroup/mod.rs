//! Discrete heat semigroups on periodic lattices.

pub mod eigen;
mod heat;
pub mod io;
mod kernel;
mod lattice;
pub mod sparse;

pub use eigen::Spectrum;
pub use heat::{krylov_heat, HeatOperator, HeatResult, Projection};
pub use kernel::heisenberg_heat_kernel;
pub use lattice::{
    assemble, build_generator, dot, lp_norm, Difference, DiscreteGenerator, LatticeFrame, LatticeGeometry,
    Su2HopfFrame, WrappedPolynomialFrame,
};
