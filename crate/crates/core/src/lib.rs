//! Numerical laboratory for the b-family of shallow-water equations
//!
//! ```text
//! u_t - u_xxt + (b + 1) u u_x = b u_x u_xx + u u_xxx
//! ```
//!
//! solved both as a nonlocal evolution equation for the velocity `u`
//! (Eulerian) and as the geodesic equation of a right-invariant spray on the
//! group of diffeomorphisms of the line (Lagrangian). On top of the two
//! solvers sit diagnostics for the momentum transport law
//! `y o phi * phi_x^b = y_0` and a desk-scale reproduction of the construction
//! showing that the time-one solution map is not uniformly continuous.
//!
//! The line is replaced by a periodic cell `[-L, L)` large enough that every
//! support stays well away from the boundary. See the `book/` directory for
//! a narrative guide.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod diffeo;
pub mod dynamics;
mod error;
pub mod experiments;
pub mod io;
pub mod spectral;

pub use diffeo::{compose_diffeo, compose_field, conjugated_derivative, invert, Diffeomorphism};
pub use dynamics::{BParams, SolverConfig, SprayState, Termination, Trajectory};
pub use error::{Error, Result};
pub use spectral::{Field, Grid};

/// The guide's code snippets, compiled and run as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/grids-and-norms.md")]
    mod grids_and_norms {}
    #[doc = include_str!("../../../book/src/diffeomorphisms.md")]
    mod diffeomorphisms {}
    #[doc = include_str!("../../../book/src/two-formulations.md")]
    mod two_formulations {}
    #[doc = include_str!("../../../book/src/diagnostics.md")]
    mod diagnostics {}
    #[doc = include_str!("../../../book/src/nonuniformity.md")]
    mod nonuniformity {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/reproducibility.md")]
    mod reproducibility {}
}
