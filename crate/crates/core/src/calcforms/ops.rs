//! Operators on forms: exterior derivative, order raising, canonical contact
//! decomposition, horizontal/vertical differentials, formal derivative,
//! interior products with prolonged vector fields, Lie derivatives, and
//! pullback along prolonged sections.

use super::basis::{BasisOne, WedgeMono};
use super::form::{variational_jet_order, Form};
use crate::jetgeom::{JetContext, Section, VecField};
use crate::symkernel::{partial, Atom, Expr, MultiIndex, Rat};
use std::collections::BTreeMap;

/// The local volume element `ds = dx^1 ^ ... ^ dx^n`.
pub fn volume(ctx: &JetContext) -> Form {
    let factors: Vec<BasisOne> = ctx.base_range().map(BasisOne::Dx).collect();
    let (sign, mono) = WedgeMono::from_factors(factors).expect("distinct dx factors");
    debug_assert_eq!(sign, 1);
    Form::assemble(ctx, ctx.base_dim() as usize, vec![(mono, Expr::one())])
}

/// `ds_i = d/dx^i _| ds`, carrying the sign `(-1)^(i-1)`.
pub fn volume_contracted(ctx: &JetContext, i: u8) -> Form {
    let factors: Vec<BasisOne> =
        ctx.base_range().filter(|&j| j != i).map(BasisOne::Dx).collect();
    let sign = if (i - 1).is_multiple_of(2) { 1 } else { -1 };
    match WedgeMono::from_factors(factors) {
        Some((s, mono)) => Form::assemble(
            ctx,
            ctx.base_dim() as usize - 1,
            vec![(mono, Expr::int((sign * s) as i64))],
        ),
        None => unreachable!("distinct dx factors"),
    }
}

/// A Lagrangian: scalar density times the volume element.
pub fn horizontal_n_form(ctx: &JetContext, density: Expr) -> Form {
    volume(ctx).scale_expr(ctx, &density)
}

/// Exterior derivative in the adapted basis of the input's ambient order.
///
/// `d` of a coefficient expands over `dx`, contact forms, and top
/// differentials; parameter-field jets contribute horizontally since their
/// differentials are `p_{Ji} dx^i`. On basis elements: `d(dx^i) = 0`,
/// `d(omega^sigma_J) = dx^i ^ dy^sigma_{Ji}` (top order) and
/// `d(dy^sigma_J) = 0`.
pub fn ext_d(ctx: &JetContext, rho: &Form) -> Form {
    let k = rho.order();
    let mut raw: Vec<(WedgeMono, Expr)> = Vec::new();
    for (mono, coeff) in rho.terms() {
        // d(coefficient) ^ mono
        for (b, factor) in coefficient_differential(ctx, coeff, k) {
            push_wedged(&mut raw, &[b], mono, factor, 1);
        }
        // sum over basis factors with the Leibniz sign
        for (pos, b) in mono.factors().iter().enumerate() {
            let sign = if pos.is_multiple_of(2) { 1i8 } else { -1i8 };
            let (_, rest) = mono.remove_at(pos);
            match b {
                BasisOne::Dx(_) | BasisOne::DyTop(..) => {}
                BasisOne::Omega(field, index) => {
                    // d omega^sigma_J = dx^i ^ dy^sigma_{Ji}
                    for i in ctx.base_range() {
                        push_wedged(
                            &mut raw,
                            &[BasisOne::Dx(i), BasisOne::DyTop(*field, index.push(i))],
                            &rest,
                            coeff.clone(),
                            sign,
                        );
                    }
                }
            }
        }
    }
    Form::assemble(ctx, rho.degree() + 1, raw)
}

/// `d(coefficient)` as (basis element, coefficient factor) pairs at basis
/// order `k`. Expands `df` over every base and jet direction reachable in
/// the expression, including directions nested in function arguments.
fn coefficient_differential(ctx: &JetContext, f: &Expr, k: usize) -> Vec<(BasisOne, Expr)> {
    let mut out = Vec::new();
    let mut horizontal: BTreeMap<u8, Expr> = BTreeMap::new();
    for atom in differentiation_directions(f) {
        let df = partial(f, &atom).expect("direction is a base or jet atom");
        if df.is_zero() {
            continue;
        }
        match &atom {
            Atom::Base(i) => {
                let e = horizontal.entry(*i).or_insert_with(Expr::zero);
                *e = &*e + &df;
            }
            Atom::Jet { field, index } if ctx.is_variational(*field) => {
                debug_assert!(index.len() <= k, "coefficient jet above ambient order");
                if index.len() == k {
                    out.push((BasisOne::DyTop(*field, index.clone()), df));
                } else {
                    // dy^sigma_J = omega^sigma_J + y^sigma_{Ji} dx^i
                    for i in ctx.base_range() {
                        let yji = Expr::atom(Atom::jet(*field, index.push(i)));
                        let e = horizontal.entry(i).or_insert_with(Expr::zero);
                        *e = &*e + &(&df * &yji);
                    }
                    out.push((BasisOne::Omega(*field, index.clone()), df));
                }
            }
            Atom::Jet { field, index } => {
                // Parameter field: d p_J = p_{Ji} dx^i.
                for i in ctx.base_range() {
                    let pji = Expr::atom(Atom::jet(*field, index.push(i)));
                    let e = horizontal.entry(i).or_insert_with(Expr::zero);
                    *e = &*e + &(&df * &pji);
                }
            }
            _ => unreachable!(),
        }
    }
    for (i, e) in horizontal {
        if !e.is_zero() {
            out.push((BasisOne::Dx(i), e));
        }
    }
    out
}

/// Every distinct base or jet atom occurring in the expression, including
/// atoms nested inside function arguments.
fn differentiation_directions(e: &Expr) -> Vec<Atom> {
    fn visit_atom(a: &Atom, out: &mut Vec<Atom>) {
        match a {
            Atom::Base(_) | Atom::Jet { .. } => {
                if !out.contains(a) {
                    out.push(a.clone());
                }
            }
            Atom::Func(_, arg) => visit_expr(arg, out),
            Atom::Const { .. } => {}
        }
    }
    fn visit_expr(e: &Expr, out: &mut Vec<Atom>) {
        for (m, _) in e.terms() {
            for (a, _) in m.factors() {
                visit_atom(a, out);
            }
        }
    }
    let mut out = Vec::new();
    visit_expr(e, &mut out);
    out
}

fn push_wedged(
    raw: &mut Vec<(WedgeMono, Expr)>,
    prefix: &[BasisOne],
    rest: &WedgeMono,
    coeff: Expr,
    sign: i8,
) {
    let mut fs = prefix.to_vec();
    fs.extend_from_slice(rest.factors());
    if let Some((s, sorted)) = WedgeMono::from_factors(fs) {
        raw.push((sorted, coeff.scale(&Rat::from_integer((sign * s).into()))));
    }
}

/// The canonical contact decomposition of a q-form after one order raise:
/// components of homogeneous contact degree `0 ..= q`.
#[derive(Clone, Debug)]
pub struct ContactSplit {
    components: Vec<Form>,
}

impl ContactSplit {
    pub fn component(&self, l: usize) -> &Form {
        &self.components[l]
    }

    pub fn components(&self) -> &[Form] {
        &self.components
    }

    pub fn sum(&self, ctx: &JetContext) -> Form {
        let mut acc = Form::zero(self.components[0].degree());
        for c in &self.components {
            acc = acc.add(ctx, c);
        }
        acc
    }
}

pub fn contact_split(ctx: &JetContext, rho: &Form) -> ContactSplit {
    let raised = rho.raise_order(ctx, rho.order() + 1);
    let q = rho.degree();
    let mut buckets: Vec<Vec<(WedgeMono, Expr)>> = vec![Vec::new(); q + 1];
    for (mono, coeff) in raised.terms() {
        buckets[mono.contact_degree()].push((mono.clone(), coeff.clone()));
    }
    let components = buckets
        .into_iter()
        .map(|raw| {
            let mut f = Form::assemble(ctx, q, raw);
            f = f.raise_order(ctx, raised.order());
            f
        })
        .collect();
    ContactSplit { components }
}

/// Horizontalization `h = p_0`.
pub fn horizontalize(ctx: &JetContext, rho: &Form) -> Form {
    contact_split(ctx, rho).component(0).clone()
}

/// Horizontal and vertical differentials
/// `d_H rho = sum_l p_l d p_l rho`, `d_V rho = sum_l p_(l+1) d p_l rho`.
pub fn horizontal_vertical_d(ctx: &JetContext, rho: &Form) -> (Form, Form) {
    let split = contact_split(ctx, rho);
    let mut dh = Form::zero(rho.degree() + 1);
    let mut dv = Form::zero(rho.degree() + 1);
    for (l, p_l) in split.components().iter().enumerate() {
        if p_l.is_zero() {
            continue;
        }
        let d = ext_d(ctx, p_l);
        let dsplit = contact_split(ctx, &d);
        dh = dh.add(ctx, dsplit.component(l));
        if l < d.degree() {
            dv = dv.add(ctx, dsplit.component(l + 1));
        }
    }
    (dh, dv)
}

pub fn d_horizontal(ctx: &JetContext, rho: &Form) -> Form {
    horizontal_vertical_d(ctx, rho).0
}

pub fn d_vertical(ctx: &JetContext, rho: &Form) -> Form {
    horizontal_vertical_d(ctx, rho).1
}

/// Formal derivative `d_i` acting on forms: Leibniz over the wedge, total
/// derivative on coefficients, `d_i dx^j = 0`,
/// `d_i omega^sigma_J = omega^sigma_{Ji}`. The result lives on a higher
/// prolongation.
pub fn formal_derivative_form(ctx: &JetContext, rho: &Form, i: u8) -> Form {
    // Raising first removes top differentials, so only dx and omega remain.
    let raised = rho.raise_order(ctx, rho.order() + 1);
    let mut raw: Vec<(WedgeMono, Expr)> = Vec::new();
    for (mono, coeff) in raised.terms() {
        // derivative of the coefficient
        let dc = ctx.total_derivative(coeff, i);
        if !dc.is_zero() {
            raw.push((mono.clone(), dc));
        }
        // derivative of each omega factor (dx factors die)
        for (pos, b) in mono.factors().iter().enumerate() {
            if let BasisOne::Omega(field, index) = b {
                let replaced = BasisOne::Omega(*field, index.push(i));
                let (_, rest) = mono.remove_at(pos);
                let mut fs = vec![replaced];
                fs.extend_from_slice(rest.factors());
                if let Some((s, sorted)) = WedgeMono::from_factors(fs) {
                    let sign = if pos.is_multiple_of(2) { s } else { -s };
                    raw.push((sorted, coeff.scale(&Rat::from_integer(sign.into()))));
                }
            }
        }
    }
    Form::assemble(ctx, rho.degree(), raw)
}

/// Iterated formal derivative `d_I`.
pub fn iterated_formal_derivative(ctx: &JetContext, rho: &Form, index: &MultiIndex) -> Form {
    let mut acc = rho.clone();
    for &i in index.entries() {
        acc = formal_derivative_form(ctx, &acc, i);
    }
    acc
}

/// Which pairing the interior product uses: the full prolonged field, its
/// vertical part, or its horizontal part.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InteriorMode {
    Full,
    Vertical,
    Horizontal,
}

/// Interior product of the prolonged field with a form. Pairings:
///
/// - full: `dx^i -> xi^i`, `omega^sigma_J -> d_J(psi - y_i xi^i)`,
///   `dy^sigma_J -> psi^sigma_J`
/// - vertical: `dx^i -> 0`, `omega^sigma_J -> d_J(psi - y_i xi^i)`,
///   `dy^sigma_J -> d_J(psi - y_i xi^i)`
/// - horizontal: `dx^i -> xi^i`, `omega^sigma_J -> 0`,
///   `dy^sigma_J -> y^sigma_{Ji} xi^i`
pub fn interior(ctx: &JetContext, psi: &VecField, rho: &Form, mode: InteriorMode) -> Form {
    if rho.degree() == 0 {
        return Form::zero(0);
    }
    let mut vertical_cache: BTreeMap<(crate::symkernel::FieldId, MultiIndex), Expr> =
        BTreeMap::new();
    let mut vert = |f: crate::symkernel::FieldId, index: &MultiIndex| -> Expr {
        vertical_cache
            .entry((f, index.clone()))
            .or_insert_with(|| psi.vertical_prolonged_component(ctx, f, index))
            .clone()
    };
    let mut raw: Vec<(WedgeMono, Expr)> = Vec::new();
    for (mono, coeff) in rho.terms() {
        for (pos, b) in mono.factors().iter().enumerate() {
            let value = match (b, mode) {
                (BasisOne::Dx(i), InteriorMode::Full | InteriorMode::Horizontal) => {
                    psi.base_component(*i).clone()
                }
                (BasisOne::Dx(_), InteriorMode::Vertical) => Expr::zero(),
                (BasisOne::Omega(f, index), InteriorMode::Full | InteriorMode::Vertical) => {
                    vert(*f, index)
                }
                (BasisOne::Omega(..), InteriorMode::Horizontal) => Expr::zero(),
                (BasisOne::DyTop(f, index), InteriorMode::Full) => {
                    psi.prolonged_component(ctx, *f, index)
                }
                (BasisOne::DyTop(f, index), InteriorMode::Vertical) => vert(*f, index),
                (BasisOne::DyTop(f, index), InteriorMode::Horizontal) => {
                    let mut e = Expr::zero();
                    for i in ctx.base_range() {
                        let xi = psi.base_component(i);
                        if !xi.is_zero() {
                            e = &e + &(&Expr::atom(Atom::jet(*f, index.push(i))) * xi);
                        }
                    }
                    e
                }
            };
            if value.is_zero() {
                continue;
            }
            let (sign, rest) = mono.remove_at(pos);
            raw.push((rest, (coeff * &value).scale(&Rat::from_integer(sign.into()))));
        }
    }
    Form::assemble(ctx, rho.degree() - 1, raw)
}

/// Lie derivative along the prolonged field, by the Cartan formula
/// `L = d o i + i o d` (the contraction term is absent on 0-forms).
pub fn lie_derivative(ctx: &JetContext, psi: &VecField, rho: &Form) -> Form {
    let a = interior(ctx, psi, &ext_d(ctx, rho), InteriorMode::Full);
    if rho.degree() == 0 {
        return a;
    }
    let b = ext_d(ctx, &interior(ctx, psi, rho, InteriorMode::Full));
    a.add(ctx, &b)
}

/// Pullback along the prolonged section: contact forms die, top
/// differentials become `d_{Ji} f^sigma dx^i`, jet coordinates in the
/// coefficients are replaced by derivatives of the section components.
/// Parameter-field jets survive untouched.
pub fn pullback(ctx: &JetContext, rho: &Form, gamma: &Section) -> Form {
    let needed = rho
        .terms()
        .iter()
        .map(|(m, c)| {
            let basis_order = m
                .factors()
                .iter()
                .map(|b| match b {
                    BasisOne::DyTop(_, index) => index.len() + 1,
                    BasisOne::Omega(_, index) => index.len(),
                    BasisOne::Dx(_) => 0,
                })
                .max()
                .unwrap_or(0);
            basis_order.max(variational_jet_order(ctx, c))
        })
        .max()
        .unwrap_or(0);
    let table = gamma.prolong(ctx, needed);
    let mut acc = Form::zero(rho.degree());
    for (mono, coeff) in rho.terms() {
        if mono.factors().iter().any(|b| matches!(b, BasisOne::Omega(..))) {
            continue;
        }
        let mut piece = Form::scalar(ctx, coeff.substitute(&table));
        let mut dead = false;
        for b in mono.factors() {
            let factor = match b {
                BasisOne::Dx(i) => Form::basis(ctx, BasisOne::Dx(*i)),
                BasisOne::DyTop(f, index) => {
                    // d (d_J f^sigma) = d_{Ji} f^sigma dx^i
                    let comp = gamma.component(*f);
                    let mut df = Form::zero(1);
                    for i in ctx.base_range() {
                        let deriv = ctx.iterated_derivative(&comp, &index.push(i));
                        if !deriv.is_zero() {
                            df = df.add(
                                ctx,
                                &Form::basis(ctx, BasisOne::Dx(i)).scale_expr(ctx, &deriv),
                            );
                        }
                    }
                    df
                }
                BasisOne::Omega(..) => unreachable!(),
            };
            if factor.is_zero() {
                dead = true;
                break;
            }
            piece = piece.wedge(ctx, &factor);
        }
        if !dead {
            acc = acc.add(ctx, &piece);
        }
    }
    acc
}
