//! Differential forms on jet prolongations in the contact-adapted basis,
//! with exterior derivative, contact splitting, horizontal and vertical
//! differentials, formal derivatives, interior products and Lie derivatives.
//!
//! Forms are always stored in the adapted basis of their ambient order;
//! `raise_order` makes pull-back by a bundle projection explicit, which
//! keeps the contact degree of every term syntactically visible. The fixed
//! total order on basis factors is `dx < omega < dy`, lexicographic within
//! each kind.

mod basis;
mod form;
mod ops;

pub use basis::{BasisOne, WedgeMono};
pub use form::{max_variational_order, variational_jet_order, Form};
pub use ops::{
    contact_split, d_horizontal, d_vertical, ext_d, formal_derivative_form, horizontal_n_form,
    horizontal_vertical_d, horizontalize, interior, iterated_formal_derivative, lie_derivative,
    pullback, volume, volume_contracted, ContactSplit, InteriorMode,
};
