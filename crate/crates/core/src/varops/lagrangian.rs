//! Euler-Lagrange forms, Noether currents, and variation decompositions.

use super::residual::momentum;
use super::source::{interior_euler, SourceForm};
use super::VarError;
use crate::calcforms::{
    d_horizontal, ext_d, horizontalize, interior, lie_derivative, Form, InteriorMode,
};
use crate::jetgeom::{JetContext, VecField};

/// `E(lambda) = I(d lambda)` for a horizontal n-form. The coefficients agree
/// with the classical expression `sum_I (-1)^|I| d_I (dL/dy^sigma_I)`.
pub fn euler_lagrange(ctx: &JetContext, lagrangian: &Form) -> Result<SourceForm, VarError> {
    if !lagrangian.is_horizontal() || lagrangian.degree() != ctx.base_dim() as usize {
        return Err(VarError::NotHorizontal);
    }
    interior_euler(ctx, &ext_d(ctx, lagrangian), 1)
}

/// A Noether current `eps_psi(lambda)`: the horizontal (n-1)-form
/// `j psi_V _| p_{d_V lambda} + psi_H _| lambda`, stored with its defining
/// pieces. Defined for any projectable field, symmetry or not.
#[derive(Clone, Debug)]
pub struct NoetherCurrent {
    form: Form,
    momentum_part: Form,
    horizontal_part: Form,
}

impl NoetherCurrent {
    pub fn form(&self) -> &Form {
        &self.form
    }

    pub fn into_form(self) -> Form {
        self.form
    }

    pub fn momentum_part(&self) -> &Form {
        &self.momentum_part
    }

    pub fn horizontal_part(&self) -> &Form {
        &self.horizontal_part
    }
}

pub fn noether_current(
    ctx: &JetContext,
    lagrangian: &Form,
    psi: &VecField,
) -> Result<NoetherCurrent, VarError> {
    let p = momentum(ctx, lagrangian)?;
    let momentum_part = interior(ctx, psi, &p, InteriorMode::Vertical);
    let horizontal_part = interior(ctx, psi, lagrangian, InteriorMode::Horizontal);
    let form = momentum_part.add(ctx, &horizontal_part);
    Ok(NoetherCurrent { form, momentum_part, horizontal_part })
}

/// The summands of the l-th variation formula: the nested interior-Euler
/// term plus the tower of horizontal differentials of higher Noether
/// currents; their sum reproduces the iterated Lie derivative of the
/// Lagrangian up to pull-backs by projections.
#[derive(Clone, Debug)]
pub struct VariationSplit {
    /// `psi_l,V _| I d ( ... psi_1,V _| I d (h lambda) ... )`
    pub euler_term: Form,
    /// `d_H eps_{psi_l}( ... )` terms, innermost variation first.
    pub current_terms: Vec<Form>,
    /// `L_{j psi_l} ... L_{j psi_1} (h lambda)`, computed independently.
    pub lie_side: Form,
}

impl VariationSplit {
    /// Right-hand side minus the iterated Lie derivative; zero when the
    /// decomposition identity holds.
    pub fn residual(&self, ctx: &JetContext) -> Form {
        let mut acc = self.euler_term.clone();
        for t in &self.current_terms {
            acc = acc.add(ctx, t);
        }
        acc.sub(ctx, &self.lie_side)
    }
}

/// Decomposes the l-th variation of a Lagrangian along the given fields.
///
/// With `A_0 = h lambda` and `A_s = psi_s,V _| I d A_{s-1}`, the summands
/// are `A_l` and, for `s = l-1 .. 0`, the towers
/// `d_H eps_{psi_l}(d_H eps_{psi_{l-1}}( ... A_s ... ))`.
pub fn variation_decompose(
    ctx: &JetContext,
    lagrangian: &Form,
    fields: &[VecField],
) -> Result<VariationSplit, VarError> {
    if fields.is_empty() {
        return Err(VarError::NoVariationFields);
    }
    let h = horizontalize(ctx, &lagrangian.raise_order(ctx, lagrangian.order() + 1));

    // Euler chain A_s.
    let mut chain = vec![h.clone()];
    for psi in fields {
        ctx.check_cancel()?;
        let prev = chain.last().expect("nonempty");
        let el = interior_euler(ctx, &ext_d(ctx, prev), 1)?;
        chain.push(el.contract(ctx, psi));
    }
    let l = fields.len();
    let euler_term = chain[l].clone();

    // Towers: innermost Lagrangian A_s, then d_H eps through psi_{s+1}..psi_l.
    let mut current_terms = Vec::with_capacity(l);
    for s in (0..l).rev() {
        ctx.check_cancel()?;
        let mut acc = chain[s].clone();
        for psi in &fields[s..] {
            acc = d_horizontal(ctx, noether_current(ctx, &acc, psi)?.form());
        }
        current_terms.push(acc);
    }

    // Independent left-hand side.
    let mut lie_side = h;
    for psi in fields {
        ctx.check_cancel()?;
        lie_side = lie_derivative(ctx, psi, &lie_side);
    }

    Ok(VariationSplit { euler_term, current_terms, lie_side })
}

/// Left minus right of the commutator identity for vertical fields:
///
/// `psi_1 _| I d(psi_2 _| I d(h lambda)) - psi_2 _| I d(psi_1 _| I d(h lambda))
///  - [psi_1, psi_2] _| I d(h lambda) - d_H eps_{psi_2}(psi_1 _| I d(h lambda))`.
pub fn check_commutator_identity(
    ctx: &JetContext,
    lagrangian: &Form,
    psi1: &VecField,
    psi2: &VecField,
) -> Result<Form, VarError> {
    if !psi1.is_vertical() || !psi2.is_vertical() {
        return Err(VarError::NotVertical);
    }
    let el = euler_lagrange(ctx, lagrangian)?;
    let deformed_1 = el.contract(ctx, psi1); // psi_1 _| E
    let deformed_2 = el.contract(ctx, psi2);
    let t1 = euler_lagrange(ctx, &deformed_2)?.contract(ctx, psi1);
    let t2 = euler_lagrange(ctx, &deformed_1)?.contract(ctx, psi2);
    let bracket = psi1.commutator(ctx, psi2);
    let t3 = el.contract(ctx, &bracket);
    let t4 = d_horizontal(ctx, noether_current(ctx, &deformed_1, psi2)?.form());
    Ok(t1.sub(ctx, &t2).sub(ctx, &t3).sub(ctx, &t4))
}

/// `d_H eps_{psi_l} ... d_H eps_{psi_{s+1}} (L_{j psi_s} ... L_{j psi_1} h lambda)`.
///
/// Vanishes identically when the trailing fields satisfy the strong
/// conservation hypotheses; the returned form is the diagnostic residual
/// otherwise.
pub fn strong_conservation_check(
    ctx: &JetContext,
    lagrangian: &Form,
    fields: &[VecField],
    s: usize,
) -> Result<Form, VarError> {
    if fields.len() < 2 || s == 0 || s >= fields.len() {
        return Err(VarError::NoVariationFields);
    }
    let mut m = horizontalize(ctx, &lagrangian.raise_order(ctx, lagrangian.order() + 1));
    for psi in &fields[..s] {
        ctx.check_cancel()?;
        m = lie_derivative(ctx, psi, &m);
        m = horizontalize(ctx, &m.raise_order(ctx, m.order() + 1));
    }
    for psi in &fields[s..] {
        ctx.check_cancel()?;
        m = d_horizontal(ctx, noether_current(ctx, &m, psi)?.form());
    }
    Ok(m)
}
