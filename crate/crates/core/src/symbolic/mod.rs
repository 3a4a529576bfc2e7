//! Exact polynomial fields and the Gamma calculus of a frame.

mod model;
mod poly;

pub use model::{box_integral, ModelJson, SubRiemannianModel, TermJson, VectorField};
pub use poly::{
    centered_monomial, exponents_up_to, f64_to_rat, jet_exponents, rat, rat_to_f64, FloatPoly,
    Rational, ScalarField,
};
