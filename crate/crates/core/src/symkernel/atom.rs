//! Atoms: the indeterminates of the expression ring.

use super::expr::Expr;
use super::multiindex::MultiIndex;
use std::fmt;

/// Identifies one fiber coordinate (one scalar field component) in a context.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FieldId(pub u16);

/// The closed set of analytic functions with built-in derivative rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
        }
    }

    pub fn eval(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Exp => x.exp(),
        }
    }

    /// Derivative as (sign, function): sin' = cos, cos' = -sin, exp' = exp.
    pub fn derivative(self) -> (i32, Func) {
        match self {
            Func::Sin => (1, Func::Cos),
            Func::Cos => (-1, Func::Sin),
            Func::Exp => (1, Func::Exp),
        }
    }
}

/// One indeterminate: base coordinate, jet coordinate, declared symbolic
/// constant, or analytic function applied to an inner expression.
///
/// Jet coordinates of parameter fields (background functions of the base)
/// use the same `Jet` variant; the context decides which fields are
/// variational.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    /// `x^i`, `i` in `1..=n`.
    Base(u8),
    /// `y^sigma_I`; the empty multi-index is the fiber coordinate itself.
    Jet { field: FieldId, index: MultiIndex },
    /// Declared constant with concrete index values, e.g. `c[1,2,3]`.
    Const { name: String, indices: Vec<u8> },
    /// `sin/cos/exp` of an inner expression.
    Func(Func, Box<Expr>),
}

impl Atom {
    pub fn base(i: u8) -> Self {
        Atom::Base(i)
    }

    pub fn jet(field: FieldId, index: MultiIndex) -> Self {
        Atom::Jet { field, index }
    }

    pub fn field(field: FieldId) -> Self {
        Atom::Jet { field, index: MultiIndex::empty() }
    }

    pub fn constant(name: impl Into<String>, indices: Vec<u8>) -> Self {
        Atom::Const { name: name.into(), indices }
    }

    pub fn func(f: Func, arg: Expr) -> Self {
        Atom::Func(f, Box::new(arg))
    }

    /// Jet order carried by this atom alone (0 for anything but `Jet`).
    pub fn jet_order(&self) -> usize {
        match self {
            Atom::Jet { index, .. } => index.len(),
            _ => 0,
        }
    }

    pub fn is_differentiation_target(&self) -> bool {
        matches!(self, Atom::Base(_) | Atom::Jet { .. })
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Base(i) => write!(f, "x({i})"),
            Atom::Jet { field, index } => {
                if index.is_empty() {
                    write!(f, "f{}", field.0)
                } else {
                    write!(f, "f{}_{{{index}}}", field.0)
                }
            }
            Atom::Const { name, indices } => {
                if indices.is_empty() {
                    write!(f, "{name}")
                } else {
                    let list: Vec<String> = indices.iter().map(|i| i.to_string()).collect();
                    write!(f, "{name}[{}]", list.join(","))
                }
            }
            Atom::Func(func, arg) => write!(f, "{}({arg})", func.name()),
        }
    }
}
