//! Graded differential forms stored as coefficient times wedge-monomial
//! terms in the contact-adapted basis of their ambient order.

use super::basis::{BasisOne, WedgeMono};
use crate::jetgeom::JetContext;
use crate::symkernel::{Atom, Expr, FieldId, MultiIndex, Rat};
use std::fmt;

/// A form on some jet prolongation. Terms are kept sorted by wedge monomial
/// with canonical nonzero coefficients; `order` is the adapted-basis order
/// (contact forms `omega^sigma_J` satisfy `|J| < order`, top differentials
/// `dy^sigma_J` satisfy `|J| = order`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Form {
    order: usize,
    degree: usize,
    terms: Vec<(WedgeMono, Expr)>,
}

impl Form {
    pub fn zero(degree: usize) -> Self {
        Form { order: 0, degree, terms: Vec::new() }
    }

    /// Scalar expression viewed as a 0-form.
    pub fn scalar(ctx: &JetContext, e: Expr) -> Self {
        Form::assemble(ctx, 0, vec![(WedgeMono::unit(), e)])
    }

    pub fn basis(ctx: &JetContext, b: BasisOne) -> Self {
        let mono = WedgeMono::from_factors(vec![b]).expect("single factor").1;
        Form::assemble(ctx, 1, vec![(mono, Expr::one())])
    }

    /// Builds the canonical form from raw terms: merges equal monomials,
    /// drops zero coefficients, computes the minimal legal ambient order
    /// (at least `floor`) and rewrites any `dy^sigma_J` that is not top
    /// order on it.
    fn assemble_with_floor(
        ctx: &JetContext,
        degree: usize,
        raw: Vec<(WedgeMono, Expr)>,
        floor: usize,
    ) -> Form {
        let mut order = floor;
        for (mono, coeff) in &raw {
            debug_assert_eq!(mono.degree(), degree, "mixed-degree form");
            for b in mono.factors() {
                order = order.max(b.min_order());
            }
            order = order.max(variational_jet_order(ctx, coeff));
        }
        let mut terms: Vec<(WedgeMono, Expr)> = Vec::new();
        let mut pending = raw;
        while let Some((mono, coeff)) = pending.pop() {
            if coeff.is_zero() {
                continue;
            }
            let low = mono
                .factors()
                .iter()
                .position(|b| matches!(b, BasisOne::DyTop(_, index) if index.len() < order));
            if let Some(pos) = low {
                let BasisOne::DyTop(field, index) = mono.factors()[pos].clone() else {
                    unreachable!()
                };
                let (sign, rest) = mono.remove_at(pos);
                let signed = coeff.scale(&Rat::from_integer(sign.into()));
                for (replacement, factor) in dy_expansion(ctx, field, &index) {
                    let mut fs = vec![replacement];
                    fs.extend_from_slice(rest.factors());
                    if let Some((s2, sorted)) = WedgeMono::from_factors(fs) {
                        pending
                            .push((sorted, (&signed * &factor).scale(&Rat::from_integer(s2.into()))));
                    }
                }
                continue;
            }
            merge_term(&mut terms, mono, coeff);
        }
        terms.sort_by(|a, b| a.0.cmp(&b.0));
        terms.retain(|(_, c)| !c.is_zero());
        Form { order, degree, terms }
    }

    pub fn assemble(ctx: &JetContext, degree: usize, raw: Vec<(WedgeMono, Expr)>) -> Form {
        Form::assemble_with_floor(ctx, degree, raw, 0)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> &[(WedgeMono, Expr)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest contact degree among the terms (0 for horizontal forms).
    pub fn max_contact_degree(&self) -> usize {
        self.terms.iter().map(|(m, _)| m.contact_degree()).max().unwrap_or(0)
    }

    pub fn is_horizontal(&self) -> bool {
        self.terms
            .iter()
            .all(|(m, _)| m.factors().iter().all(|b| matches!(b, BasisOne::Dx(_))))
    }

    /// Represents the same form in the adapted basis of order `k >= order`:
    /// every top differential expands over contact forms and `dx`.
    pub fn raise_order(&self, ctx: &JetContext, k: usize) -> Form {
        if k <= self.order {
            return self.clone();
        }
        Form::assemble_with_floor(ctx, self.degree, self.terms.clone(), k)
    }

    pub fn add(&self, ctx: &JetContext, other: &Form) -> Form {
        debug_assert_eq!(self.degree, other.degree, "adding forms of different degree");
        let k = self.order.max(other.order);
        let a = self.raise_order(ctx, k);
        let b = other.raise_order(ctx, k);
        let mut raw = a.terms;
        raw.extend(b.terms);
        Form::assemble_with_floor(ctx, self.degree, raw, k)
    }

    pub fn sub(&self, ctx: &JetContext, other: &Form) -> Form {
        self.add(ctx, &other.neg())
    }

    pub fn neg(&self) -> Form {
        Form {
            order: self.order,
            degree: self.degree,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn scale(&self, c: &Rat) -> Form {
        use num_traits::Zero;
        if c.is_zero() {
            return Form::zero(self.degree);
        }
        Form {
            order: self.order,
            degree: self.degree,
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k.scale(c))).collect(),
        }
    }

    pub fn scale_expr(&self, ctx: &JetContext, e: &Expr) -> Form {
        let raw = self.terms.iter().map(|(m, c)| (m.clone(), c * e)).collect();
        Form::assemble_with_floor(ctx, self.degree, raw, self.order)
    }

    /// Graded-anticommutative associative wedge product.
    pub fn wedge(&self, ctx: &JetContext, other: &Form) -> Form {
        let k = self.order.max(other.order);
        let a = self.raise_order(ctx, k);
        let b = other.raise_order(ctx, k);
        let mut raw = Vec::new();
        for (ma, ca) in &a.terms {
            for (mb, cb) in &b.terms {
                let mut fs = Vec::with_capacity(ma.degree() + mb.degree());
                fs.extend_from_slice(ma.factors());
                fs.extend_from_slice(mb.factors());
                if let Some((sign, sorted)) = WedgeMono::from_factors(fs) {
                    raw.push((sorted, (ca * cb).scale(&Rat::from_integer(sign.into()))));
                }
            }
        }
        Form::assemble_with_floor(ctx, self.degree + other.degree, raw, k)
    }

    /// Structural equality after raising both sides to a common ambient
    /// order and canonicalizing.
    pub fn equals(&self, ctx: &JetContext, other: &Form) -> bool {
        self.sub(ctx, other).is_zero()
    }

    /// Rebuilds with coefficients mapped through `f`; basis untouched.
    pub fn map_coefficients(&self, ctx: &JetContext, f: impl Fn(&Expr) -> Expr) -> Form {
        let raw = self.terms.iter().map(|(m, c)| (m.clone(), f(c))).collect();
        Form::assemble(ctx, self.degree, raw)
    }
}

fn merge_term(terms: &mut Vec<(WedgeMono, Expr)>, mono: WedgeMono, coeff: Expr) {
    match terms.iter_mut().find(|(m, _)| *m == mono) {
        Some((_, c)) => *c = &*c + &coeff,
        None => terms.push((mono, coeff)),
    }
}

/// `dy^sigma_J = omega^sigma_J + y^sigma_{Ji} dx^i` as (basis, coefficient)
/// pairs.
fn dy_expansion(ctx: &JetContext, field: FieldId, index: &MultiIndex) -> Vec<(BasisOne, Expr)> {
    let mut out = vec![(BasisOne::Omega(field, index.clone()), Expr::one())];
    for i in ctx.base_range() {
        out.push((BasisOne::Dx(i), Expr::atom(Atom::jet(field, index.push(i)))));
    }
    out
}

/// Largest variational jet order appearing anywhere in a form: basis
/// elements and coefficients.
pub fn max_variational_order(ctx: &JetContext, form: &Form) -> usize {
    form.terms()
        .iter()
        .map(|(mono, coeff)| {
            let basis = mono.factors().iter().map(|b| b.min_order()).max().unwrap_or(0);
            basis.max(variational_jet_order(ctx, coeff))
        })
        .max()
        .unwrap_or(0)
}

/// Maximum order of variational jet atoms in an expression, looking through
/// function arguments; parameter-field jets do not constrain the ambient
/// basis order.
pub fn variational_jet_order(ctx: &JetContext, e: &Expr) -> usize {
    fn atom_order(ctx: &JetContext, a: &Atom) -> usize {
        match a {
            Atom::Jet { field, index } if ctx.is_variational(*field) => index.len(),
            Atom::Func(_, arg) => expr_order(ctx, arg),
            _ => 0,
        }
    }
    fn expr_order(ctx: &JetContext, e: &Expr) -> usize {
        e.terms()
            .iter()
            .flat_map(|(m, _)| m.factors().iter().map(|(a, _)| atom_order(ctx, a)))
            .max()
            .unwrap_or(0)
    }
    expr_order(ctx, e)
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (mono, coeff)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({coeff})")?;
            if mono.degree() > 0 {
                write!(f, " {mono}")?;
            }
        }
        Ok(())
    }
}
