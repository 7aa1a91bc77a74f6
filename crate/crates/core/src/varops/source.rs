//! Source forms and the interior Euler operator.

use super::VarError;
use crate::calcforms::{
    contact_split, interior, iterated_formal_derivative, volume, BasisOne, Form, InteriorMode,
    WedgeMono,
};
use crate::jetgeom::{JetContext, VecField};
use crate::symkernel::{rat, Expr, FieldId, MultiIndex, Rat};
use std::collections::BTreeMap;

/// An `omega^sigma`-generated k-contact (n+k)-form: the canonical
/// representative produced by the interior Euler operator. Every term's
/// contact factors include a contact form with empty multi-index.
#[derive(Clone, Debug)]
pub struct SourceForm {
    contact_degree: usize,
    form: Form,
}

impl SourceForm {
    pub fn new(ctx: &JetContext, contact_degree: usize, form: Form) -> Self {
        debug_assert!(form.terms().iter().all(|(m, _)| {
            m.contact_degree() == contact_degree
                && m.factors()
                    .iter()
                    .any(|b| matches!(b, BasisOne::Omega(_, index) if index.is_empty()))
        }));
        let _ = ctx;
        SourceForm { contact_degree, form }
    }

    pub fn zero(ctx: &JetContext, contact_degree: usize) -> Self {
        SourceForm {
            contact_degree,
            form: Form::zero(ctx.base_dim() as usize + contact_degree),
        }
    }

    pub fn contact_degree(&self) -> usize {
        self.contact_degree
    }

    pub fn form(&self) -> &Form {
        &self.form
    }

    pub fn into_form(self) -> Form {
        self.form
    }

    pub fn is_zero(&self) -> bool {
        self.form.is_zero()
    }

    /// Coefficient `E_sigma` in the `E_sigma omega^sigma ^ ds` layout
    /// (defined for contact degree 1).
    pub fn coefficient(&self, ctx: &JetContext, sigma: FieldId) -> Expr {
        debug_assert_eq!(self.contact_degree, 1);
        let n = ctx.base_dim() as usize;
        // Stored monomial is dx^1 ^ ... ^ dx^n ^ omega^sigma, which equals
        // (-1)^n omega^sigma ^ ds.
        let mut factors: Vec<BasisOne> = ctx.base_range().map(BasisOne::Dx).collect();
        factors.push(BasisOne::Omega(sigma, MultiIndex::empty()));
        let (s, mono) = WedgeMono::from_factors(factors).expect("distinct factors");
        debug_assert_eq!(s, 1);
        let stored = self
            .form
            .terms()
            .iter()
            .find(|(m, _)| *m == mono)
            .map(|(_, c)| c.clone())
            .unwrap_or_else(Expr::zero);
        let sign = if n.is_multiple_of(2) { 1 } else { -1 };
        stored.scale(&Rat::from_integer(sign.into()))
    }

    /// All coefficients of a degree-1 source form, keyed by field.
    pub fn coefficients(&self, ctx: &JetContext) -> BTreeMap<FieldId, Expr> {
        ctx.variational_fields().map(|f| (f, self.coefficient(ctx, f))).collect()
    }

    /// Builds `sum_sigma E_sigma omega^sigma ^ ds` from coefficients.
    pub fn from_coefficients(ctx: &JetContext, coeffs: &BTreeMap<FieldId, Expr>) -> Self {
        let ds = volume(ctx);
        let mut acc = Form::zero(ctx.base_dim() as usize + 1);
        for (f, e) in coeffs {
            if e.is_zero() {
                continue;
            }
            let w = Form::basis(ctx, BasisOne::Omega(*f, MultiIndex::empty()));
            acc = acc.add(ctx, &w.wedge(ctx, &ds).scale_expr(ctx, e));
        }
        SourceForm { contact_degree: 1, form: acc }
    }

    /// Contraction with a vertical field; for degree 1 this is the
    /// horizontal n-form `psi^sigma E_sigma ds`.
    pub fn contract(&self, ctx: &JetContext, psi: &VecField) -> Form {
        interior(ctx, psi, &self.form, InteriorMode::Vertical)
    }
}

/// Coefficient table of the k-contact part written as
/// `p_k rho = sum omega^sigma_I ^ Psi^I_sigma`, with each of a term's `k`
/// contact factors contributing its signed complement at weight `1/k`.
pub(crate) fn psi_table(
    ctx: &JetContext,
    p: &Form,
    k: usize,
) -> BTreeMap<(FieldId, MultiIndex), Form> {
    let weight = rat(1, k as i64);
    let mut raw: BTreeMap<(FieldId, MultiIndex), Vec<(WedgeMono, Expr)>> = BTreeMap::new();
    for (mono, coeff) in p.terms() {
        for (pos, b) in mono.factors().iter().enumerate() {
            let BasisOne::Omega(field, index) = b else { continue };
            let (sign, rest) = mono.remove_at(pos);
            let c = coeff.scale(&Rat::from_integer(sign.into())).scale(&weight);
            raw.entry((*field, index.clone())).or_default().push((rest, c));
        }
    }
    raw.into_iter()
        .map(|(key, terms)| {
            let degree = p.degree() - 1;
            (key, Form::assemble(ctx, degree, terms))
        })
        .collect()
}

/// The interior Euler operator: for a (n+k)-form of contact degree `k >= 1`,
/// the canonical source-form representative
/// `(1/k) omega^sigma ^ sum_I (-1)^|I| d_I (d/dy^sigma_I _| p_k rho)`,
/// with sums over unordered multi-index classes.
pub fn interior_euler(ctx: &JetContext, rho: &Form, k: usize) -> Result<SourceForm, VarError> {
    if k == 0 {
        return Err(VarError::ZeroContactDegree);
    }
    let n = ctx.base_dim() as usize;
    debug_assert_eq!(rho.degree(), n + k, "interior Euler input has degree n + k");
    let p = contact_split(ctx, rho).component(k).clone();
    let psi = psi_table(ctx, &p, k);
    let mut acc = Form::zero(n + k);
    for (key, form) in &psi {
        ctx.check_cancel()?;
        let (field, index) = key;
        let sign = if index.len().is_multiple_of(2) { 1 } else { -1 };
        let derived = iterated_formal_derivative(ctx, form, index);
        let w = Form::basis(ctx, BasisOne::Omega(*field, MultiIndex::empty()));
        acc = acc.add(ctx, &w.wedge(ctx, &derived).scale(&Rat::from_integer(sign.into())));
    }
    super::guard_order(ctx, &acc)?;
    Ok(SourceForm::new(ctx, k, acc))
}
