//! Numerical optimal transport in the Heisenberg group H^n.
//!
//! The crate realizes three equivalent formulations of L^1 transport with the
//! Carnot-Caratheodory cost and their congested (1 < p < infinity) versions:
//!
//! * Monge-Kantorovich between discrete measures, solved exactly by a
//!   transportation simplex, with Kantorovich potentials and transport
//!   densities ([`kantorovich`]);
//! * the Beckmann minimal-flow problem under a horizontal divergence
//!   constraint, solved through its dual by first-order ascent on a grid with
//!   an exactly adjoint discrete horizontal calculus ([`beckmann`],
//!   [`calculus`]);
//! * the Lagrangian/congested formulation over traffic plans, produced from
//!   admissible vector fields by a Dacorogna-Moser flow ([`moser`]).
//!
//! [`group`] and [`geodesy`] provide the exact group operations, closed-form
//! geodesics, and the Carnot-Caratheodory distance that everything else is
//! built on. [`oracle`] hosts independent reference routes (lattice shortest
//! paths, a linear solver for the quadratic case) used by the verification
//! suite in [`acceptance`].

pub mod calculus;
pub mod error;
pub mod geodesy;
pub mod grid;
pub mod group;
pub mod kantorovich;
pub mod measure;
pub mod simplex;

pub use error::{HeisError, Result};
