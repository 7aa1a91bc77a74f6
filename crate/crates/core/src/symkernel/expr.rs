//! Canonical polynomial expressions.
//!
//! An `Expr` is a finite sum of terms, each a rational coefficient times a
//! monomial (a multiset of atoms with positive integer powers). Construction
//! always normalizes: terms are kept sorted under the fixed monomial order,
//! like monomials are merged, zero-coefficient terms are dropped, and atoms
//! within a monomial stay sorted. Structural equality of two expressions is
//! therefore equality of the polynomials they denote (for function-free
//! expressions).

use super::atom::{Atom, Func};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

pub type Rat = BigRational;

/// Convenience constructor for exact rationals.
pub fn rat(num: i64, den: i64) -> Rat {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// A multiset of atoms with powers `>= 1`, kept sorted by atom.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(Vec<(Atom, u32)>);

impl Monomial {
    pub fn unit() -> Self {
        Monomial(Vec::new())
    }

    pub fn atom(a: Atom) -> Self {
        Monomial(vec![(a, 1)])
    }

    pub fn factors(&self) -> &[(Atom, u32)] {
        &self.0
    }

    pub fn is_unit(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut map: BTreeMap<Atom, u32> = BTreeMap::new();
        for (a, p) in self.0.iter().chain(other.0.iter()) {
            *map.entry(a.clone()).or_insert(0) += p;
        }
        Monomial(map.into_iter().collect())
    }

    /// Removes one power of `a`; `None` when `a` does not occur.
    pub fn divide_once(&self, a: &Atom) -> Option<Monomial> {
        let pos = self.0.iter().position(|(b, _)| b == a)?;
        let mut v = self.0.clone();
        if v[pos].1 == 1 {
            v.remove(pos);
        } else {
            v[pos].1 -= 1;
        }
        Some(Monomial(v))
    }

    pub fn power_of(&self, a: &Atom) -> u32 {
        self.0.iter().find(|(b, _)| b == a).map(|(_, p)| *p).unwrap_or(0)
    }
}

/// Canonical formal sum of rational-coefficient monomials.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Expr {
    terms: Vec<(Monomial, Rat)>,
}

impl Expr {
    pub fn zero() -> Self {
        Expr { terms: Vec::new() }
    }

    pub fn one() -> Self {
        Expr::rational(Rat::one())
    }

    pub fn rational(c: Rat) -> Self {
        if c.is_zero() {
            Expr::zero()
        } else {
            Expr { terms: vec![(Monomial::unit(), c)] }
        }
    }

    pub fn int(k: i64) -> Self {
        Expr::rational(rat(k, 1))
    }

    pub fn atom(a: Atom) -> Self {
        Expr { terms: vec![(Monomial::atom(a), Rat::one())] }
    }

    pub fn func(f: Func, arg: Expr) -> Self {
        Expr::atom(Atom::func(f, arg))
    }

    /// Rebuilds the canonical form from raw (monomial, coefficient) pairs.
    pub fn from_terms(pairs: impl IntoIterator<Item = (Monomial, Rat)>) -> Self {
        let mut map: BTreeMap<Monomial, Rat> = BTreeMap::new();
        for (m, c) in pairs {
            if c.is_zero() {
                continue;
            }
            let entry = map.entry(m).or_insert_with(Rat::zero);
            *entry += c;
        }
        map.retain(|_, c| !c.is_zero());
        Expr { terms: map.into_iter().collect() }
    }

    pub fn terms(&self) -> &[(Monomial, Rat)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// `true` when the expression is a single constant term (or zero).
    pub fn as_rational(&self) -> Option<Rat> {
        match self.terms.len() {
            0 => Some(Rat::zero()),
            1 if self.terms[0].0.is_unit() => Some(self.terms[0].1.clone()),
            _ => None,
        }
    }

    pub fn scale(&self, c: &Rat) -> Expr {
        if c.is_zero() {
            return Expr::zero();
        }
        Expr { terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect() }
    }

    pub fn pow(&self, e: u32) -> Expr {
        let mut acc = Expr::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Every atom occurring at the top level of some monomial.
    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.terms.iter().flat_map(|(m, _)| m.factors().iter().map(|(a, _)| a))
    }

    /// Maximum jet order among all jet atoms, including atoms nested inside
    /// function arguments.
    pub fn max_jet_order(&self) -> usize {
        fn atom_order(a: &Atom) -> usize {
            match a {
                Atom::Func(_, arg) => arg.max_jet_order(),
                other => other.jet_order(),
            }
        }
        self.terms
            .iter()
            .flat_map(|(m, _)| m.factors().iter().map(|(a, _)| atom_order(a)))
            .max()
            .unwrap_or(0)
    }

    /// Substitutes atoms by expressions. Atoms nested inside function
    /// arguments are substituted recursively; unmapped atoms are kept.
    pub fn substitute(&self, map: &BTreeMap<Atom, Expr>) -> Expr {
        let mut out = Expr::zero();
        for (mono, coeff) in &self.terms {
            let mut term = Expr::rational(coeff.clone());
            for (a, p) in mono.factors() {
                let replaced = match map.get(a) {
                    Some(e) => e.clone(),
                    None => match a {
                        Atom::Func(f, arg) => Expr::func(*f, arg.substitute(map)),
                        other => Expr::atom(other.clone()),
                    },
                };
                term = &term * &replaced.pow(*p);
            }
            out = &out + &term;
        }
        out
    }
}

impl Add for &Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        // Merge of two sorted term lists.
        let mut out: Vec<(Monomial, Rat)> = Vec::with_capacity(self.terms.len() + rhs.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() && j < rhs.terms.len() {
            match self.terms[i].0.cmp(&rhs.terms[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(self.terms[i].clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(rhs.terms[j].clone());
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let c = &self.terms[i].1 + &rhs.terms[j].1;
                    if !c.is_zero() {
                        out.push((self.terms[i].0.clone(), c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.terms[i..]);
        out.extend_from_slice(&rhs.terms[j..]);
        Expr { terms: out }
    }
}

impl Sub for &Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        self + &(-rhs)
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }
}

impl Mul for &Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        let mut map: BTreeMap<Monomial, Rat> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                let m = ma.mul(mb);
                let entry = map.entry(m).or_insert_with(Rat::zero);
                *entry += ca * cb;
            }
        }
        map.retain(|_, c| !c.is_zero());
        Expr { terms: map.into_iter().collect() }
    }
}

macro_rules! forward_owned_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $trait::$method(&self, &rhs)
            }
        }
        impl $trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $trait::$method(&self, rhs)
            }
        }
        impl $trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $trait::$method(self, &rhs)
            }
        }
    };
}

forward_owned_binop!(Add, add);
forward_owned_binop!(Sub, sub);
forward_owned_binop!(Mul, mul);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (mono, coeff)) in self.terms.iter().enumerate() {
            let neg = coeff.is_negative();
            let abs = coeff.abs();
            if k == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mut wrote_factor = false;
            if !abs.is_one() || mono.is_unit() {
                write!(f, "{abs}")?;
                wrote_factor = true;
            }
            for (a, p) in mono.factors() {
                if wrote_factor {
                    write!(f, "*")?;
                }
                write!(f, "{a}")?;
                if *p > 1 {
                    write!(f, "^{p}")?;
                }
                wrote_factor = true;
            }
        }
        Ok(())
    }
}

/// Identity on the canonical representation. Exposed so that calling code can
/// state the normalization point explicitly; every constructor and operator
/// already yields the canonical form, which makes this a fixed point.
pub fn canonicalize(e: &Expr) -> Expr {
    Expr::from_terms(e.terms.iter().cloned())
}
