//! Return times, Banach lower densities and covering certificates for
//! concrete minimal dynamical systems.
//!
//! The crate is organised by the object being computed:
//!
//! - [`systems`]: circle rotations in 0.64 fixed point, primitive substitution
//!   subshifts, commuting torus translations (Z^d actions) and the
//!   distal-but-not-equicontinuous annulus map, together with entourages.
//! - [`returns`]: return-time sets N(x, ε[y]), gap statistics and
//!   exhaustive sliding-window lower densities.
//! - [`covering`]: the constant K such that every orbit segment of length
//!   K+1 meets every ε-ball, with certificates and the uniform bound 1/(K+1).
//! - [`amenable`]: Følner boxes in Z^d, the intersection and 1/(2|K|)
//!   density lemmas, and the almost-periodicity dichotomy.
//! - [`flow`]: linear flows on the 2-torus with exact visit intervals.

pub mod amenable;
pub mod covering;
pub mod error;
pub mod flow;
pub mod returns;
pub mod systems;

pub use error::{Error, Result};
