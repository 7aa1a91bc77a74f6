//! Canonical scalar-expression engine: the arithmetic substrate every other
//! module computes over.
//!
//! All values are immutable after construction and every operation is a pure
//! function, so expressions may be shared freely between threads.

mod atom;
mod calculus;
mod expr;
mod multiindex;

pub use atom::{Atom, FieldId, Func};
pub use calculus::{eval_numeric, eval_rational, partial, SymError};
pub use expr::{canonicalize, rat, Expr, Monomial, Rat};
pub use multiindex::{multi_indices, multi_indices_up_to, split_multiplicity, MultiIndex};
