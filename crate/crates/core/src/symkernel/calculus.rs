//! Formal partial derivatives and numeric evaluation.

use super::atom::Atom;
use super::expr::{Expr, Rat};
use num_traits::{One, ToPrimitive, Zero};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SymError {
    #[error("cannot differentiate with respect to {0}: not a base or jet coordinate")]
    BadDifferentiationVariable(String),
    #[error("unbound atom {0} during numeric evaluation")]
    UnboundAtom(String),
}

/// Formal partial derivative with respect to a base or jet coordinate.
///
/// Each distinct sorted jet coordinate counts as one independent variable
/// with no combinatorial weight. Linear, Leibniz on products, and chains
/// through function atoms.
pub fn partial(e: &Expr, v: &Atom) -> Result<Expr, SymError> {
    if !v.is_differentiation_target() {
        return Err(SymError::BadDifferentiationVariable(v.to_string()));
    }
    Ok(partial_unchecked(e, v))
}

fn partial_unchecked(e: &Expr, v: &Atom) -> Expr {
    let mut out = Expr::zero();
    for (mono, coeff) in e.terms() {
        for (a, p) in mono.factors() {
            let da = atom_partial(a, v);
            if da.is_zero() {
                continue;
            }
            // coeff * p * a^(p-1) * rest * da
            let rest = mono.divide_once(a).expect("factor present");
            let mut term = Expr::from_terms([(rest, coeff * Rat::from_integer((*p).into()))]);
            term = &term * &da;
            out = &out + &term;
        }
    }
    out
}

fn atom_partial(a: &Atom, v: &Atom) -> Expr {
    if a == v {
        return Expr::one();
    }
    match a {
        Atom::Func(f, arg) => {
            let inner = partial_unchecked(arg, v);
            if inner.is_zero() {
                return Expr::zero();
            }
            let (sign, df) = f.derivative();
            let outer = Expr::func(df, (**arg).clone());
            (&outer * &inner).scale(&Rat::from_integer(sign.into()))
        }
        _ => Expr::zero(),
    }
}

/// IEEE double evaluation of the canonical form under the given bindings.
///
/// Function atoms are evaluated recursively; every base, jet, or constant
/// atom reachable in `e` must be bound, otherwise the error names the
/// offending atom.
pub fn eval_numeric(e: &Expr, bind: &BTreeMap<Atom, f64>) -> Result<f64, SymError> {
    let mut total = 0.0;
    for (mono, coeff) in e.terms() {
        let mut acc = coeff.to_f64().expect("rational fits in f64");
        for (a, p) in mono.factors() {
            let base = eval_atom(a, bind)?;
            acc *= base.powi(*p as i32);
        }
        total += acc;
    }
    Ok(total)
}

fn eval_atom(a: &Atom, bind: &BTreeMap<Atom, f64>) -> Result<f64, SymError> {
    if let Some(v) = bind.get(a) {
        return Ok(*v);
    }
    match a {
        Atom::Func(f, arg) => Ok(f.eval(eval_numeric(arg, bind)?)),
        other => Err(SymError::UnboundAtom(other.to_string())),
    }
}

/// Exact rational evaluation for expressions whose atoms are all bound to
/// rationals (used when substituting rational grid data is required exactly).
pub fn eval_rational(e: &Expr, bind: &BTreeMap<Atom, Rat>) -> Result<Rat, SymError> {
    let mut total = Rat::zero();
    for (mono, coeff) in e.terms() {
        let mut acc = coeff.clone();
        for (a, p) in mono.factors() {
            let base = match bind.get(a) {
                Some(v) => v.clone(),
                None => return Err(SymError::UnboundAtom(a.to_string())),
            };
            let mut pw = Rat::one();
            for _ in 0..*p {
                pw *= &base;
            }
            acc *= pw;
        }
        total += acc;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symkernel::atom::{FieldId, Func};
    use crate::symkernel::expr::rat;
    use crate::symkernel::MultiIndex;

    fn x1() -> Expr {
        Expr::atom(Atom::base(1))
    }

    fn y() -> Expr {
        Expr::atom(Atom::field(FieldId(0)))
    }

    fn y_i(ix: &[u8]) -> Expr {
        Expr::atom(Atom::jet(FieldId(0), MultiIndex::new(ix.to_vec())))
    }

    #[test]
    fn jet_coordinate_is_single_variable() {
        // d(y_12 * y)/d y_12 = y, with y_12 and y_21 the same variable.
        let e = &y_i(&[1, 2]) * &y();
        let v = Atom::jet(FieldId(0), MultiIndex::new(vec![2, 1]));
        assert_eq!(partial(&e, &v).unwrap(), y());
    }

    #[test]
    fn independent_atoms_differentiate_to_zero() {
        let v = Atom::field(FieldId(0));
        assert!(partial(&x1(), &v).unwrap().is_zero());
    }

    #[test]
    fn rejects_constant_and_function_variables() {
        let c = Atom::constant("eta", vec![1, 1]);
        assert!(matches!(partial(&x1(), &c), Err(SymError::BadDifferentiationVariable(_))));
        let f = Atom::func(Func::Sin, x1());
        assert!(partial(&x1(), &f).is_err());
    }

    #[test]
    fn leibniz_and_powers() {
        // d(y^2 y_1)/dy = 2 y y_1
        let e = &y().pow(2) * &y_i(&[1]);
        let expected = (&y() * &y_i(&[1])).scale(&rat(2, 1));
        assert_eq!(partial(&e, &Atom::field(FieldId(0))).unwrap(), expected);
    }

    #[test]
    fn chain_rule_through_functions() {
        // d cos(x^2) / dx = -2x sin(x^2)
        let e = Expr::func(Func::Cos, x1().pow(2));
        let expected = (&Expr::func(Func::Sin, x1().pow(2)) * &x1()).scale(&rat(-2, 1));
        assert_eq!(partial(&e, &Atom::base(1)).unwrap(), expected);
    }

    #[test]
    fn numeric_evaluation() {
        // 2 x1 y at x1=3, y=5 -> 30
        let e = (&x1() * &y()).scale(&rat(2, 1));
        let mut bind = BTreeMap::new();
        bind.insert(Atom::base(1), 3.0);
        bind.insert(Atom::field(FieldId(0)), 5.0);
        assert_eq!(eval_numeric(&e, &bind).unwrap(), 30.0);
    }

    #[test]
    fn numeric_evaluation_of_functions() {
        let e = Expr::func(Func::Cos, x1());
        let mut bind = BTreeMap::new();
        bind.insert(Atom::base(1), 0.0);
        assert_eq!(eval_numeric(&e, &bind).unwrap(), 1.0);
    }

    #[test]
    fn unbound_atom_is_named() {
        let e = y_i(&[1]).pow(2);
        let mut bind = BTreeMap::new();
        bind.insert(Atom::field(FieldId(0)), 1.0);
        let err = eval_numeric(&e, &bind).unwrap_err();
        assert_eq!(err, SymError::UnboundAtom("f0_{1}".into()));
    }
}
