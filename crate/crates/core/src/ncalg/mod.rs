//! Noncommutative algebra: complex polynomials and star products.

pub mod poly;
pub mod star;

pub use poly::{Monomial, Poly};
pub use star::{
    lie_star, moyal_star, moyal_terms, qplane_star, star_commutator, LieStructure, QOrdering, StarProduct,
    ThetaMatrix, LIE_MAX_ORDER,
};
