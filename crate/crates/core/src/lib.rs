//! Symbolic variational calculus over finite-order jet bundles in a single
//! fibered coordinate chart.
//!
//! The crate is layered bottom-up:
//!
//! - [`symkernel`]: canonical polynomial expressions over base coordinates,
//!   jet coordinates, symbolic constants and a small closed set of analytic
//!   functions; exact rational coefficients throughout.
//! - [`jetgeom`]: the jet-bundle context (dimensions, fields, constants),
//!   total derivatives, projectable vector fields and their prolongations,
//!   sections and jet prolongation of sections.
//! - [`calcforms`]: differential forms in the contact-adapted basis with
//!   exterior derivative, contact splitting, horizontal/vertical
//!   differentials, interior products and Lie derivatives.
//! - [`varops`]: the variational operator toolkit built on top: interior
//!   Euler operator, residual operator, Euler-Lagrange forms, generalized
//!   momenta, Noether currents, higher variation decompositions, Jacobi
//!   morphism and pair currents.
//! - [`modeldsl`]: a line-oriented model language with Einstein summation
//!   over concrete index ranges, plus plain/LaTeX/JSON renderers.
//! - [`ymcase`]: the su(2) Yang-Mills case study with literal reference
//!   formulas and a comparison harness.
//! - [`numverify`]: numerical verification of conservation laws by pulling
//!   forms back along sections and evaluating on grids.

pub mod calcforms;
pub mod jetgeom;
pub mod modeldsl;
pub mod numverify;
pub mod symkernel;
pub mod varops;
pub mod ymcase;

pub use jetgeom::{CancelToken, JetContext, Section, VecField};
pub use symkernel::{Atom, Expr, MultiIndex};
