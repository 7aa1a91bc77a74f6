//! The jet-bundle context: fibered chart data, formal total derivatives,
//! projectable vector fields with on-demand prolongation, and sections with
//! their jet prolongations.

use crate::symkernel::{partial, rat, Atom, Expr, FieldId, MultiIndex, Rat};
use num_traits::Zero;
use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum JetError {
    #[error("derivation cancelled")]
    Cancelled,
    #[error("jet order {needed} exceeds the configured order cap {cap}")]
    OrderCapExceeded { needed: usize, cap: usize },
    #[error("vector field is not vertical")]
    NotVertical,
    #[error("component for field {0} is not a function of the base and order-0 fiber coordinates")]
    BadComponent(String),
    #[error("section component for field {0} must not contain jet coordinates")]
    BadSectionComponent(String),
    #[error("constant table for {name} violates its declared {symmetry} symmetry at indices {indices:?}")]
    SymmetryViolation { name: String, symmetry: &'static str, indices: Vec<u8> },
}

/// Cooperative cancellation handle shared with long-running derivations.
/// Checked between outer iterations; a cancelled derivation returns an error
/// and never exposes partial results.
#[derive(Clone, Debug, Default)]
pub struct CancelToken {
    flag: Arc<AtomicBool>,
    deadline: Option<Instant>,
}

impl CancelToken {
    pub fn never() -> Self {
        CancelToken::default()
    }

    pub fn with_deadline(deadline: Instant) -> Self {
        CancelToken { flag: Arc::new(AtomicBool::new(false)), deadline: Some(deadline) }
    }

    pub fn cancel(&self) {
        self.flag.store(true, Ordering::Relaxed);
    }

    pub fn is_cancelled(&self) -> bool {
        self.flag.load(Ordering::Relaxed)
            || self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    pub fn check(&self) -> Result<(), JetError> {
        if self.is_cancelled() {
            Err(JetError::Cancelled)
        } else {
            Ok(())
        }
    }
}

/// Declared symmetry of a constant table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symmetry {
    Symmetric,
    Antisymmetric,
    None,
}

/// A declared constant: index ranges, symmetry, and either a rational
/// component table or nothing (a purely symbolic constant).
#[derive(Clone, Debug)]
pub struct ConstDecl {
    pub ranges: Vec<u8>,
    pub symmetry: Symmetry,
    pub table: Option<BTreeMap<Vec<u8>, Rat>>,
}

impl ConstDecl {
    /// Looks up a component; absent entries of a tabled constant are zero,
    /// and a symbolic constant resolves to itself as an atom.
    pub fn resolve(&self, name: &str, indices: &[u8]) -> Expr {
        match &self.table {
            Some(t) => match t.get(indices) {
                Some(v) => Expr::rational(v.clone()),
                None => Expr::zero(),
            },
            None => Expr::atom(Atom::constant(name, indices.to_vec())),
        }
    }

    fn validate_symmetry(&self, name: &str) -> Result<(), JetError> {
        let Some(table) = &self.table else { return Ok(()) };
        if self.ranges.len() < 2 || self.symmetry == Symmetry::None {
            return Ok(());
        }
        // Pairwise transposition check on every stored entry.
        for (ix, val) in table {
            for a in 0..ix.len() {
                for b in (a + 1)..ix.len() {
                    let mut swapped = ix.clone();
                    swapped.swap(a, b);
                    let other = table.get(&swapped).cloned().unwrap_or_else(Rat::zero);
                    let expected = match self.symmetry {
                        Symmetry::Symmetric => val.clone(),
                        Symmetry::Antisymmetric => -val.clone(),
                        Symmetry::None => unreachable!(),
                    };
                    if other != expected {
                        return Err(JetError::SymmetryViolation {
                            name: name.to_string(),
                            symmetry: match self.symmetry {
                                Symmetry::Symmetric => "symmetric",
                                Symmetry::Antisymmetric => "antisymmetric",
                                Symmetry::None => unreachable!(),
                            },
                            indices: ix.clone(),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct FieldInfo {
    pub name: String,
    /// Variational fields carry contact structure; parameter fields are
    /// background functions of the base whose differentials are horizontal.
    pub variational: bool,
}

/// The fixed chart data: base dimension, fiber coordinates, declared
/// constants, working order, and the cancellation token threaded through
/// long-running operations.
#[derive(Clone, Debug)]
pub struct JetContext {
    n: u8,
    fields: Vec<FieldInfo>,
    consts: BTreeMap<String, ConstDecl>,
    max_order: usize,
    order_cap: Option<usize>,
    cancel: CancelToken,
}

impl JetContext {
    pub fn new(n: u8, field_names: &[&str], max_order: usize) -> Self {
        assert!(n >= 1, "base dimension must be at least 1");
        assert!(!field_names.is_empty(), "need at least one field");
        JetContext {
            n,
            fields: field_names
                .iter()
                .map(|s| FieldInfo { name: s.to_string(), variational: true })
                .collect(),
            consts: BTreeMap::new(),
            max_order,
            order_cap: None,
            cancel: CancelToken::never(),
        }
    }

    /// Smallest useful context: one field over one base coordinate.
    pub fn scalar_1d(max_order: usize) -> Self {
        JetContext::new(1, &["y"], max_order)
    }

    pub fn add_parameter_field(&mut self, name: &str) -> FieldId {
        self.fields.push(FieldInfo { name: name.to_string(), variational: false });
        FieldId((self.fields.len() - 1) as u16)
    }

    pub fn add_const(&mut self, name: &str, decl: ConstDecl) -> Result<(), JetError> {
        decl.validate_symmetry(name)?;
        self.consts.insert(name.to_string(), decl);
        Ok(())
    }

    pub fn set_order_cap(&mut self, cap: Option<usize>) {
        self.order_cap = cap;
    }

    pub fn order_cap(&self) -> Option<usize> {
        self.order_cap
    }

    pub fn set_cancel(&mut self, token: CancelToken) {
        self.cancel = token;
    }

    pub fn cancel_token(&self) -> &CancelToken {
        &self.cancel
    }

    pub fn check_cancel(&self) -> Result<(), JetError> {
        self.cancel.check()
    }

    pub fn base_dim(&self) -> u8 {
        self.n
    }

    pub fn base_range(&self) -> impl Iterator<Item = u8> {
        1..=self.n
    }

    /// Number of fiber coordinates including parameter fields.
    pub fn field_count(&self) -> usize {
        self.fields.len()
    }

    pub fn field_info(&self, f: FieldId) -> &FieldInfo {
        &self.fields[f.0 as usize]
    }

    pub fn is_variational(&self, f: FieldId) -> bool {
        self.fields[f.0 as usize].variational
    }

    pub fn variational_fields(&self) -> impl Iterator<Item = FieldId> + '_ {
        (0..self.fields.len() as u16).map(FieldId).filter(|f| self.is_variational(*f))
    }

    pub fn all_fields(&self) -> impl Iterator<Item = FieldId> {
        (0..self.fields.len() as u16).map(FieldId)
    }

    /// Working jet order; derivatives beyond it silently extend the working
    /// order unless a hard cap is configured.
    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn const_decl(&self, name: &str) -> Option<&ConstDecl> {
        self.consts.get(name)
    }

    pub fn resolve_const(&self, name: &str, indices: &[u8]) -> Option<Expr> {
        self.consts.get(name).map(|d| d.resolve(name, indices))
    }

    fn check_order(&self, needed: usize) -> Result<(), JetError> {
        match self.order_cap {
            Some(cap) if needed > cap => Err(JetError::OrderCapExceeded { needed, cap }),
            _ => Ok(()),
        }
    }

    /// Formal total derivative `d_i`: `d_i x^j = delta^j_i`,
    /// `d_i y^sigma_J = y^sigma_{Ji}`, Leibniz, linear, chain rule through
    /// function atoms, constants annihilated.
    pub fn total_derivative(&self, e: &Expr, i: u8) -> Expr {
        debug_assert!(i >= 1 && i <= self.n);
        let mut out = Expr::zero();
        for (mono, coeff) in e.terms() {
            for (a, p) in mono.factors() {
                let da = self.total_derivative_atom(a, i);
                if da.is_zero() {
                    continue;
                }
                let rest = mono.divide_once(a).expect("factor present");
                let term = Expr::from_terms([(rest, coeff * Rat::from_integer((*p).into()))]);
                out = &out + &(&term * &da);
            }
        }
        out
    }

    fn total_derivative_atom(&self, a: &Atom, i: u8) -> Expr {
        match a {
            Atom::Base(j) => {
                if *j == i {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Atom::Jet { field, index } => Expr::atom(Atom::jet(*field, index.push(i))),
            Atom::Const { .. } => Expr::zero(),
            Atom::Func(f, arg) => {
                let inner = self.total_derivative(arg, i);
                if inner.is_zero() {
                    return Expr::zero();
                }
                let (sign, df) = f.derivative();
                (&Expr::func(df, (**arg).clone()) * &inner).scale(&rat(sign.into(), 1))
            }
        }
    }

    /// `d_J`: composition of total derivatives over the entries of `J`.
    /// The application order is irrelevant because total derivatives commute.
    pub fn iterated_derivative(&self, e: &Expr, index: &MultiIndex) -> Expr {
        let mut acc = e.clone();
        for &i in index.entries() {
            acc = self.total_derivative(&acc, i);
        }
        acc
    }

    /// Same, with the order-cap check applied to the deepest jet produced.
    pub fn iterated_derivative_checked(
        &self,
        e: &Expr,
        index: &MultiIndex,
    ) -> Result<Expr, JetError> {
        self.check_order(e.max_jet_order() + index.len())?;
        Ok(self.iterated_derivative(e, index))
    }
}

/// A pi-projectable vector field: base components depending on the base
/// coordinates only, fiber components on base and order-0 fiber coordinates.
#[derive(Clone, Debug)]
pub struct VecField {
    base: Vec<Expr>,
    fiber: BTreeMap<FieldId, Expr>,
}

impl VecField {
    pub fn new(
        ctx: &JetContext,
        base: Vec<Expr>,
        fiber: BTreeMap<FieldId, Expr>,
    ) -> Result<Self, JetError> {
        assert_eq!(base.len(), ctx.base_dim() as usize);
        for (i, xi) in base.iter().enumerate() {
            if xi.atoms().any(|a| matches!(a, Atom::Jet { field, .. } if ctx.is_variational(*field)))
            {
                return Err(JetError::BadComponent(format!("base component {}", i + 1)));
            }
        }
        for (f, psi) in &fiber {
            let ok = psi.atoms().all(|a| match a {
                Atom::Jet { field, index } => {
                    !ctx.is_variational(*field) || index.is_empty()
                }
                _ => true,
            });
            if !ok {
                return Err(JetError::BadComponent(ctx.field_info(*f).name.clone()));
            }
        }
        Ok(VecField { base, fiber })
    }

    /// Purely vertical field: all base components vanish.
    pub fn vertical(ctx: &JetContext, fiber: BTreeMap<FieldId, Expr>) -> Result<Self, JetError> {
        let base = vec![Expr::zero(); ctx.base_dim() as usize];
        VecField::new(ctx, base, fiber)
    }

    /// Vertical field on a single-field context.
    pub fn vertical_scalar(ctx: &JetContext, component: Expr) -> Result<Self, JetError> {
        let mut fiber = BTreeMap::new();
        fiber.insert(FieldId(0), component);
        VecField::vertical(ctx, fiber)
    }

    pub fn zero(ctx: &JetContext) -> Self {
        VecField { base: vec![Expr::zero(); ctx.base_dim() as usize], fiber: BTreeMap::new() }
    }

    pub fn base_component(&self, i: u8) -> &Expr {
        &self.base[(i - 1) as usize]
    }

    pub fn fiber_component(&self, f: FieldId) -> Expr {
        self.fiber.get(&f).cloned().unwrap_or_else(Expr::zero)
    }

    pub fn is_vertical(&self) -> bool {
        self.base.iter().all(Expr::is_zero)
    }

    pub fn is_zero(&self) -> bool {
        self.is_vertical() && self.fiber.values().all(Expr::is_zero)
    }

    /// Vertical-part order-0 component `psi^sigma - y^sigma_i xi^i`.
    pub fn vertical_component(&self, ctx: &JetContext, f: FieldId) -> Expr {
        let mut v = self.fiber_component(f);
        for i in ctx.base_range() {
            let yi = Expr::atom(Atom::jet(f, MultiIndex::new(vec![i])));
            v = &v - &(&yi * self.base_component(i));
        }
        v
    }

    /// Prolonged component on `d/dy^sigma_J`:
    /// `psi^sigma_J = d_J(psi^sigma - y^sigma_i xi^i) + y^sigma_{Ji} xi^i`.
    /// For vertical fields this reduces to `d_J psi^sigma`.
    pub fn prolonged_component(&self, ctx: &JetContext, f: FieldId, index: &MultiIndex) -> Expr {
        let mut out = ctx.iterated_derivative(&self.vertical_component(ctx, f), index);
        for i in ctx.base_range() {
            let xi = self.base_component(i);
            if xi.is_zero() {
                continue;
            }
            let yji = Expr::atom(Atom::jet(f, index.push(i)));
            out = &out + &(&yji * xi);
        }
        out
    }

    /// Contraction value of the prolonged field against the contact form
    /// `omega^sigma_J`: the vertical part `d_J(psi^sigma - y^sigma_i xi^i)`.
    pub fn vertical_prolonged_component(
        &self,
        ctx: &JetContext,
        f: FieldId,
        index: &MultiIndex,
    ) -> Expr {
        ctx.iterated_derivative(&self.vertical_component(ctx, f), index)
    }

    /// Full prolongation table up to order `k`, keyed by (field, multi-index).
    pub fn prolong(&self, ctx: &JetContext, k: usize) -> BTreeMap<(FieldId, MultiIndex), Expr> {
        let mut table = BTreeMap::new();
        for f in ctx.variational_fields() {
            for index in crate::symkernel::multi_indices_up_to(ctx.base_dim(), k) {
                table.insert((f, index.clone()), self.prolonged_component(ctx, f, &index));
            }
        }
        table
    }

    /// Commutator of projectable fields, again projectable.
    pub fn commutator(&self, ctx: &JetContext, other: &VecField) -> VecField {
        let apply = |v: &VecField, e: &Expr| -> Expr {
            let mut out = Expr::zero();
            for i in ctx.base_range() {
                let xi = v.base_component(i);
                if !xi.is_zero() {
                    out = &out + &(xi * &partial(e, &Atom::base(i)).expect("base atom"));
                }
            }
            for f in ctx.variational_fields() {
                let psi = v.fiber_component(f);
                if !psi.is_zero() {
                    out = &out + &(&psi * &partial(e, &Atom::field(f)).expect("jet atom"));
                }
            }
            out
        };
        let base = (1..=ctx.base_dim())
            .map(|i| &apply(self, other.base_component(i)) - &apply(other, self.base_component(i)))
            .collect();
        let mut fiber = BTreeMap::new();
        for f in ctx.variational_fields() {
            let c = &apply(self, &other.fiber_component(f)) - &apply(other, &self.fiber_component(f));
            if !c.is_zero() {
                fiber.insert(f, c);
            }
        }
        VecField { base, fiber }
    }
}

/// A local section: one base-only expression per variational field.
#[derive(Clone, Debug)]
pub struct Section {
    comps: BTreeMap<FieldId, Expr>,
}

impl Section {
    pub fn new(ctx: &JetContext, comps: BTreeMap<FieldId, Expr>) -> Result<Self, JetError> {
        for (f, e) in &comps {
            if e.atoms().any(|a| matches!(a, Atom::Jet { .. })) {
                return Err(JetError::BadSectionComponent(ctx.field_info(*f).name.clone()));
            }
        }
        Ok(Section { comps })
    }

    pub fn scalar(ctx: &JetContext, component: Expr) -> Result<Self, JetError> {
        let mut comps = BTreeMap::new();
        comps.insert(FieldId(0), component);
        Section::new(ctx, comps)
    }

    pub fn component(&self, f: FieldId) -> Expr {
        self.comps.get(&f).cloned().unwrap_or_else(Expr::zero)
    }

    /// Jet prolongation as a substitution table
    /// `y^sigma_J -> d_J f^sigma(x)` for all `|J| <= k`.
    pub fn prolong(&self, ctx: &JetContext, k: usize) -> BTreeMap<Atom, Expr> {
        let mut table = BTreeMap::new();
        for f in ctx.variational_fields() {
            let comp = self.component(f);
            for index in crate::symkernel::multi_indices_up_to(ctx.base_dim(), k) {
                table.insert(Atom::jet(f, index.clone()), ctx.iterated_derivative(&comp, &index));
            }
        }
        table
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symkernel::Func;

    fn ctx() -> JetContext {
        JetContext::scalar_1d(3)
    }

    fn x(i: u8) -> Expr {
        Expr::atom(Atom::base(i))
    }

    fn y_i(ix: &[u8]) -> Expr {
        Expr::atom(Atom::jet(FieldId(0), MultiIndex::new(ix.to_vec())))
    }

    #[test]
    fn total_derivative_of_base_coordinate() {
        let c = ctx();
        assert_eq!(c.total_derivative(&x(1), 1), Expr::one());
    }

    #[test]
    fn total_derivative_leibniz() {
        // d_2(y * y_1) = y_2 y_1 + y y_12 on a two-dimensional base.
        let c = JetContext::new(2, &["y"], 3);
        let e = &y_i(&[]) * &y_i(&[1]);
        let expected = &(&y_i(&[2]) * &y_i(&[1])) + &(&y_i(&[]) * &y_i(&[1, 2]));
        assert_eq!(c.total_derivative(&e, 2), expected);
    }

    #[test]
    fn total_derivative_chain_rule() {
        let c = ctx();
        let e = Expr::func(Func::Cos, x(1));
        assert_eq!(c.total_derivative(&e, 1), -Expr::func(Func::Sin, x(1)));
    }

    #[test]
    fn iterated_derivative_examples() {
        let c = ctx();
        assert_eq!(c.iterated_derivative(&y_i(&[]), &MultiIndex::new(vec![1, 1])), y_i(&[1, 1]));
        // d_(1) y^2 = 2 y y_1
        let e = y_i(&[]).pow(2);
        let expected = (&y_i(&[]) * &y_i(&[1])).scale(&rat(2, 1));
        assert_eq!(c.iterated_derivative(&e, &MultiIndex::new(vec![1])), expected);
    }

    #[test]
    fn iterated_derivative_commutes() {
        let c = JetContext::new(2, &["y"], 4);
        let e = &y_i(&[]).pow(2) * &x(1);
        let d12 = c.total_derivative(&c.total_derivative(&e, 1), 2);
        let d21 = c.total_derivative(&c.total_derivative(&e, 2), 1);
        assert_eq!(d12, d21);
    }

    #[test]
    fn vertical_prolongation_is_iterated_derivative() {
        let c = ctx();
        // psi = a(x) d_y with a = x^2: component on d_{y_1} is 2x.
        let psi = VecField::vertical_scalar(&c, x(1).pow(2)).unwrap();
        let got = psi.prolonged_component(&c, FieldId(0), &MultiIndex::new(vec![1]));
        assert_eq!(got, x(1).scale(&rat(2, 1)));
    }

    #[test]
    fn base_translation_prolongs_to_itself() {
        let c = ctx();
        let mut fiber = BTreeMap::new();
        fiber.insert(FieldId(0), Expr::zero());
        let psi = VecField::new(&c, vec![Expr::one()], fiber).unwrap();
        for len in 0..=2 {
            for index in crate::symkernel::multi_indices(1, len) {
                assert!(psi.prolonged_component(&c, FieldId(0), &index).is_zero());
            }
        }
    }

    #[test]
    fn scaling_field_prolongs_to_jet_scaling() {
        let c = ctx();
        // psi = y d_y: first prolongation adds y_1 d_{y_1}.
        let psi = VecField::vertical_scalar(&c, y_i(&[])).unwrap();
        assert_eq!(psi.prolonged_component(&c, FieldId(0), &MultiIndex::new(vec![1])), y_i(&[1]));
    }

    #[test]
    fn section_prolongation() {
        let c = ctx();
        let gamma = Section::scalar(&c, x(1).pow(2)).unwrap();
        let table = gamma.prolong(&c, 2);
        assert_eq!(table[&Atom::jet(FieldId(0), MultiIndex::new(vec![1]))], x(1).scale(&rat(2, 1)));
        assert_eq!(table[&Atom::jet(FieldId(0), MultiIndex::new(vec![1, 1]))], Expr::int(2));
    }

    #[test]
    fn sections_reject_jet_coordinates() {
        let c = ctx();
        assert!(Section::scalar(&c, y_i(&[1])).is_err());
    }

    #[test]
    fn order_cap_is_enforced() {
        let mut c = ctx();
        c.set_order_cap(Some(1));
        let err = c.iterated_derivative_checked(&y_i(&[1]), &MultiIndex::new(vec![1]));
        assert!(matches!(err, Err(JetError::OrderCapExceeded { needed: 2, cap: 1 })));
    }
}
