//! The variational operator toolkit: interior Euler operator, residual
//! operator and geometric integration by parts, Euler-Lagrange forms,
//! generalized momenta, Noether currents, higher variation decompositions,
//! the Jacobi morphism, and pair currents of symmetry transformations.
//!
//! All sign conventions are pinned by two exactness requirements: the first
//! variation formula and the integration-by-parts decomposition must hold as
//! exact identities of canonical forms. Identities are asserted after
//! raising both sides to the largest ambient order occurring.

mod jacobi;
mod lagrangian;
mod residual;
mod source;

pub use jacobi::{
    is_jacobi_field, jacobi_adjoint_expression, jacobi_morphism, onshell_residual, pair_current,
    self_adjointness_defect, JacobiTest,
};
pub use lagrangian::{
    check_commutator_identity, euler_lagrange, noether_current, strong_conservation_check,
    variation_decompose, NoetherCurrent, VariationSplit,
};
pub use residual::{momentum, residual, ResidualDecomposition};
pub use source::{interior_euler, SourceForm};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum VarError {
    #[error("the interior Euler operator needs contact degree k >= 1")]
    ZeroContactDegree,
    #[error("expected a horizontal n-form Lagrangian")]
    NotHorizontal,
    #[error("expected a vertical vector field")]
    NotVertical,
    #[error("at least one variation field is required (and 0 < s < l)")]
    NoVariationFields,
    #[error("section is not an extremal; Euler-Lagrange pullback residual: {residual}")]
    NotExtremal { residual: String },
    #[error("a term without the full volume block cannot be factored as Phi ^ ds")]
    NotVolumeSaturated,
    #[error(transparent)]
    Jet(#[from] crate::jetgeom::JetError),
}

/// Enforces a configured hard cap on the working jet order of results.
pub(crate) fn guard_order(
    ctx: &crate::jetgeom::JetContext,
    form: &crate::calcforms::Form,
) -> Result<(), VarError> {
    if let Some(cap) = ctx.order_cap() {
        let needed = crate::calcforms::max_variational_order(ctx, form);
        if needed > cap {
            return Err(crate::jetgeom::JetError::OrderCapExceeded { needed, cap }.into());
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests;
