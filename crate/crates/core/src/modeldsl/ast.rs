//! Parse tree for indexed expressions and model statements.

use crate::symkernel::{Func, Rat};

/// A symbolic or literal index slot in an indexed expression.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Index {
    Var(String),
    Lit(u8),
}

/// Indexed expression before Einstein expansion.
#[derive(Clone, Debug, PartialEq)]
pub enum IExpr {
    Rat(Rat),
    /// `x(i)`
    Base(Index),
    /// Reference to a field, parameter, constant, or definition; `jets`
    /// holds a concrete derivative multi-index from `name[..]_{i,j}` syntax.
    Ref { name: String, indices: Vec<Index>, jets: Vec<u8> },
    /// `d(i, body)`: total derivative.
    Deriv { index: Index, body: Box<IExpr> },
    Func { f: Func, body: Box<IExpr> },
    Neg(Box<IExpr>),
    Add(Box<IExpr>, Box<IExpr>),
    Sub(Box<IExpr>, Box<IExpr>),
    Mul(Box<IExpr>, Box<IExpr>),
    /// Division, restricted to rational-constant divisors.
    Div(Box<IExpr>, Box<IExpr>),
    Pow(Box<IExpr>, u32),
}

/// Table specification of a constant declaration.
#[derive(Clone, Debug, PartialEq)]
pub enum ConstSpec {
    Kronecker,
    LeviCivita,
    Diag(Vec<Rat>),
    Table(Vec<(Vec<u8>, Rat)>),
    Symbolic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymmetryKind {
    Symmetric,
    Antisymmetric,
    None,
}

/// Target of a vector-field or section component statement.
#[derive(Clone, Debug, PartialEq)]
pub enum ComponentTarget {
    /// `base[i]`: a base component of a vector field.
    Base(u8),
    /// Field family with free index names binding the component expression.
    Field { family: String, frees: Vec<String> },
}

/// One parsed statement with its source line (1-based).
#[derive(Clone, Debug, PartialEq)]
pub struct Statement {
    pub line: usize,
    pub kind: StatementKind,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StatementKind {
    Dim(u8),
    Field { name: String, slots: Vec<(String, u8)> },
    Param { name: String, slots: Vec<(String, u8)> },
    Const { name: String, slots: Vec<(String, u8)>, symmetry: SymmetryKind, spec: ConstSpec },
    Metric(Vec<Rat>),
    Def { name: String, frees: Vec<String>, body: IExpr },
    Lagrangian(IExpr),
    VecFieldComponent { name: String, target: ComponentTarget, body: IExpr },
    SectionComponent { name: String, target: ComponentTarget, body: IExpr },
}
