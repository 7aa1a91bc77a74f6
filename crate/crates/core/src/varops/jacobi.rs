//! The Jacobi morphism, Jacobi fields, and pair currents.

use super::lagrangian::{euler_lagrange, noether_current, NoetherCurrent};
use super::source::{interior_euler, SourceForm};
use super::VarError;
use crate::calcforms::{ext_d, pullback, volume, Form};
use crate::jetgeom::{JetContext, Section, VecField};
use crate::symkernel::{multi_indices_up_to, Expr};
use std::collections::BTreeMap;

/// `J_psi(lambda) = I d (psi _| I d lambda)` for a vertical field: the
/// second-variation source form whose kernel members are the Jacobi fields.
pub fn jacobi_morphism(
    ctx: &JetContext,
    lagrangian: &Form,
    psi: &VecField,
) -> Result<SourceForm, VarError> {
    if !psi.is_vertical() {
        return Err(VarError::NotVertical);
    }
    let el = euler_lagrange(ctx, lagrangian)?;
    let deformed = el.contract(ctx, psi);
    interior_euler(ctx, &ext_d(ctx, &deformed), 1)
}

/// The adjoint coordinate expression
/// `sum_J d_J psi^sigma (dE_rho / dy^sigma_J) omega^rho ^ ds`.
///
/// Agrees with the Jacobi morphism along extremals (and identically when the
/// field components depend on the base only).
pub fn jacobi_adjoint_expression(
    ctx: &JetContext,
    lagrangian: &Form,
    psi: &VecField,
) -> Result<SourceForm, VarError> {
    if !psi.is_vertical() {
        return Err(VarError::NotVertical);
    }
    let el = euler_lagrange(ctx, lagrangian)?;
    let el_coeffs = el.coefficients(ctx);
    let max_order = el_coeffs.values().map(Expr::max_jet_order).max().unwrap_or(0);
    let mut out: BTreeMap<crate::symkernel::FieldId, Expr> = BTreeMap::new();
    for (rho, e_rho) in &el_coeffs {
        ctx.check_cancel()?;
        let mut acc = Expr::zero();
        for sigma in ctx.variational_fields() {
            for index in multi_indices_up_to(ctx.base_dim(), max_order) {
                let de = crate::symkernel::partial(
                    e_rho,
                    &crate::symkernel::Atom::jet(sigma, index.clone()),
                )
                .expect("jet atom");
                if de.is_zero() {
                    continue;
                }
                let dpsi = ctx.iterated_derivative(&psi.fiber_component(sigma), &index);
                acc = &acc + &(&dpsi * &de);
            }
        }
        out.insert(*rho, acc);
    }
    Ok(SourceForm::from_coefficients(ctx, &out))
}

/// Outcome of a Jacobi-field test: the flag plus the residual source form
/// (identically zero off shell, or the pullback along the extremal).
#[derive(Clone, Debug)]
pub struct JacobiTest {
    pub is_jacobi: bool,
    pub residual: Form,
}

/// Checks whether `psi` lies in the kernel of the Jacobi morphism, either
/// identically (no section) or along the given extremal. A non-extremal
/// section is rejected with the nonzero Euler-Lagrange pullback reported.
pub fn is_jacobi_field(
    ctx: &JetContext,
    lagrangian: &Form,
    psi: &VecField,
    gamma: Option<&Section>,
) -> Result<JacobiTest, VarError> {
    let j = jacobi_morphism(ctx, lagrangian, psi)?;
    match gamma {
        None => {
            let residual = j.form().clone();
            Ok(JacobiTest { is_jacobi: residual.is_zero(), residual })
        }
        Some(section) => {
            let el = euler_lagrange(ctx, lagrangian)?;
            let el_residual = onshell_residual(ctx, &el, section);
            if !el_residual.is_zero() {
                return Err(VarError::NotExtremal { residual: el_residual.to_string() });
            }
            let residual = onshell_residual(ctx, &j, section);
            Ok(JacobiTest { is_jacobi: residual.is_zero(), residual })
        }
    }
}

/// Pullback of a degree-1 source form along a prolonged section, reported as
/// the horizontal density `sum_sigma (E_sigma o j gamma)^2 ds`; zero exactly
/// when every coefficient vanishes along the section.
pub fn onshell_residual(ctx: &JetContext, s: &SourceForm, gamma: &Section) -> Form {
    let n = ctx.base_dim() as usize;
    let mut acc = Form::zero(n);
    for (_, e) in s.coefficients(ctx) {
        if e.is_zero() {
            continue;
        }
        let pb = pullback(ctx, &volume(ctx).scale_expr(ctx, &e), gamma);
        for (_, c) in pb.terms() {
            acc = acc.add(ctx, &volume(ctx).scale_expr(ctx, &c.pow(2)));
        }
    }
    acc
}

/// The conserved current attached to a pair of vertical fields:
/// `eps_{psi2}(psi1 _| I d lambda)`, the Noether current of the Lagrangian
/// deformed by the first field, associated with the second.
pub fn pair_current(
    ctx: &JetContext,
    lagrangian: &Form,
    psi1: &VecField,
    psi2: &VecField,
) -> Result<NoetherCurrent, VarError> {
    if !psi1.is_vertical() || !psi2.is_vertical() {
        return Err(VarError::NotVertical);
    }
    let el = euler_lagrange(ctx, lagrangian)?;
    let deformed = el.contract(ctx, psi1);
    noether_current(ctx, &deformed, psi2)
}

/// The on-shell self-adjointness defect
/// `psi2 _| J_{psi1}(lambda) - psi1 _| J_{psi2}(lambda)`, as a horizontal
/// n-form. Pulls back to zero along extremals for Jacobi pairs; off shell it
/// equals a horizontal differential of the pair current for commuting
/// fields.
pub fn self_adjointness_defect(
    ctx: &JetContext,
    lagrangian: &Form,
    psi1: &VecField,
    psi2: &VecField,
) -> Result<Form, VarError> {
    let j1 = jacobi_morphism(ctx, lagrangian, psi1)?;
    let j2 = jacobi_morphism(ctx, lagrangian, psi2)?;
    Ok(j1.contract(ctx, psi2).sub(ctx, &j2.contract(ctx, psi1)))
}
