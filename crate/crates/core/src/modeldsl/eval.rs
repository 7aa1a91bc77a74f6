//! Einstein-summation validation and expansion of indexed expressions.
//!
//! Index variables follow the strict convention: within every additive
//! branch an index variable must occur exactly once (a declared free index)
//! or exactly twice (summed over its range). Contractions expand to explicit
//! finite sums at evaluation time; definitions substitute hygienically by
//! evaluating their bodies in a fresh environment that binds only the
//! definition's free indices.

use super::ast::{IExpr, Index};
use super::{DslError, ModelSpec};
use crate::symkernel::{Atom, Expr};
use num_traits::Zero;
use std::collections::BTreeMap;

/// Occurrence counts of unbound index variables visible from a subtree:
/// count 1 is a free index, count 2 a contracted pair closed somewhere
/// inside. More than two occurrences in one multiplicative context is
/// rejected, and the two branches of a sum must expose identical free sets
/// (each branch may close its own dummy pairs independently).
pub fn occurrences(
    e: &IExpr,
    line: usize,
    bound: &BTreeMap<String, u8>,
) -> Result<BTreeMap<String, usize>, DslError> {
    let err = |message: String| DslError::Validate { line, message };
    let merge = |mut acc: BTreeMap<String, usize>,
                 other: BTreeMap<String, usize>|
     -> Result<BTreeMap<String, usize>, DslError> {
        for (v, c) in other {
            let total = acc.entry(v.clone()).or_insert(0);
            *total += c;
            if *total > 2 {
                return Err(err(format!(
                    "index `{v}` appears {total} times (at most twice is allowed)"
                )));
            }
        }
        Ok(acc)
    };
    match e {
        IExpr::Rat(_) => Ok(BTreeMap::new()),
        IExpr::Base(Index::Var(v)) if !bound.contains_key(v) => {
            Ok([(v.clone(), 1)].into_iter().collect())
        }
        IExpr::Base(_) => Ok(BTreeMap::new()),
        IExpr::Ref { indices, .. } => {
            let mut acc = BTreeMap::new();
            for ix in indices {
                if let Index::Var(v) = ix {
                    if !bound.contains_key(v) {
                        acc = merge(acc, [(v.clone(), 1)].into_iter().collect())?;
                    }
                }
            }
            Ok(acc)
        }
        IExpr::Deriv { index, body } => {
            let mut acc = occurrences(body, line, bound)?;
            if let Index::Var(v) = index {
                if !bound.contains_key(v) {
                    acc = merge(acc, [(v.clone(), 1)].into_iter().collect())?;
                }
            }
            Ok(acc)
        }
        IExpr::Func { body, .. } | IExpr::Pow(body, _) => {
            let inner = occurrences(body, line, bound)?;
            if let Some((v, _)) = inner.iter().find(|(_, c)| **c == 1) {
                return Err(err(format!(
                    "free index `{v}` cannot escape a function or power"
                )));
            }
            Ok(inner)
        }
        IExpr::Neg(a) => occurrences(a, line, bound),
        IExpr::Add(a, b) | IExpr::Sub(a, b) => {
            let oa = occurrences(a, line, bound)?;
            let ob = occurrences(b, line, bound)?;
            let free = |m: &BTreeMap<String, usize>| -> Vec<String> {
                m.iter().filter(|(_, c)| **c == 1).map(|(v, _)| v.clone()).collect()
            };
            let (fa, fb) = (free(&oa), free(&ob));
            if fa != fb {
                let shown = fa
                    .iter()
                    .find(|v| !fb.contains(v))
                    .or_else(|| fb.iter().find(|v| !fa.contains(v)))
                    .cloned()
                    .unwrap_or_else(|| "?".into());
                return Err(err(format!("unbalanced index `{shown}` between summands")));
            }
            // Free vars stay free; pairs closed in either branch stay closed.
            let mut acc = oa;
            for (v, c) in ob {
                let entry = acc.entry(v).or_insert(0);
                *entry = (*entry).max(c);
            }
            Ok(acc)
        }
        IExpr::Mul(a, b) => {
            let oa = occurrences(a, line, bound)?;
            let ob = occurrences(b, line, bound)?;
            merge(oa, ob)
        }
        IExpr::Div(a, b) => {
            let ob = occurrences(b, line, bound)?;
            if !ob.is_empty() {
                return Err(err("divisor must be a rational constant".into()));
            }
            occurrences(a, line, bound)
        }
    }
}

/// Validates a statement body: every unbound index variable occurs exactly
/// once (then it must be a declared free index) or exactly twice (then it is
/// contracted and must not be declared free).
pub fn validate_indices(
    _spec: &ModelSpec,
    e: &IExpr,
    line: usize,
    frees: &[String],
) -> Result<(), DslError> {
    let occ = occurrences(e, line, &BTreeMap::new())?;
    for (v, c) in &occ {
        match c {
            1 => {
                if !frees.contains(v) {
                    return Err(DslError::Validate {
                        line,
                        message: format!("free index `{v}` in scalar position"),
                    });
                }
            }
            2 => {
                if frees.contains(v) {
                    return Err(DslError::Validate {
                        line,
                        message: format!("declared free index `{v}` is contracted"),
                    });
                }
            }
            c => {
                return Err(DslError::Validate {
                    line,
                    message: format!("index `{v}` appears {c} times (at most twice is allowed)"),
                });
            }
        }
    }
    for f in frees {
        if occ.get(f).copied().unwrap_or(0) == 0 {
            // A free index may be genuinely absent (constant component);
            // that is allowed.
        }
    }
    Ok(())
}

/// Set of unbound index variables (ignoring multiplicity).
fn unbound_vars(e: &IExpr, env: &BTreeMap<String, u8>) -> Vec<String> {
    let mut out = Vec::new();
    fn push(out: &mut Vec<String>, v: &str) {
        if !out.iter().any(|s| s == v) {
            out.push(v.to_string());
        }
    }
    fn rec(e: &IExpr, env: &BTreeMap<String, u8>, out: &mut Vec<String>) {
        match e {
            IExpr::Rat(_) => {}
            IExpr::Base(Index::Var(v)) => {
                if !env.contains_key(v) {
                    push(out, v);
                }
            }
            IExpr::Base(_) => {}
            IExpr::Ref { indices, .. } => {
                for ix in indices {
                    if let Index::Var(v) = ix {
                        if !env.contains_key(v) {
                            push(out, v);
                        }
                    }
                }
            }
            IExpr::Deriv { index, body } => {
                if let Index::Var(v) = index {
                    if !env.contains_key(v) {
                        push(out, v);
                    }
                }
                rec(body, env, out);
            }
            IExpr::Func { body, .. } => rec(body, env, out),
            IExpr::Neg(a) | IExpr::Pow(a, _) => rec(a, env, out),
            IExpr::Add(a, b) | IExpr::Sub(a, b) | IExpr::Mul(a, b) | IExpr::Div(a, b) => {
                rec(a, env, out);
                rec(b, env, out);
            }
        }
    }
    rec(e, env, &mut out);
    out
}

/// How often a variable occurs in a subtree, not counting env-bound uses.
fn var_count(e: &IExpr, v: &str, env: &BTreeMap<String, u8>) -> usize {
    if env.contains_key(v) {
        return 0;
    }
    match e {
        IExpr::Rat(_) => 0,
        IExpr::Base(Index::Var(w)) => usize::from(w == v),
        IExpr::Base(_) => 0,
        IExpr::Ref { indices, .. } => indices
            .iter()
            .filter(|ix| matches!(ix, Index::Var(w) if w == v))
            .count(),
        IExpr::Deriv { index, body } => {
            usize::from(matches!(index, Index::Var(w) if w == v)) + var_count(body, v, env)
        }
        IExpr::Func { body, .. } => var_count(body, v, env),
        IExpr::Neg(a) | IExpr::Pow(a, _) => var_count(a, v, env),
        IExpr::Add(a, _b) | IExpr::Sub(a, _b) => {
            // Both branches carry identical occurrences after validation.
            var_count(a, v, env)
        }
        IExpr::Mul(a, b) | IExpr::Div(a, b) => var_count(a, v, env) + var_count(b, v, env),
    }
}

pub struct Evaluator<'a> {
    pub spec: &'a ModelSpec,
    pub line: usize,
    pub depth: usize,
}

impl<'a> Evaluator<'a> {
    pub fn new(spec: &'a ModelSpec, line: usize) -> Self {
        Evaluator { spec, line, depth: 0 }
    }

    fn err(&self, message: String) -> DslError {
        DslError::Validate { line: self.line, message }
    }

    fn resolve_index(&self, ix: &Index, env: &BTreeMap<String, u8>) -> Result<u8, DslError> {
        match ix {
            Index::Lit(v) => Ok(*v),
            Index::Var(v) => env
                .get(v)
                .copied()
                .ok_or_else(|| self.err(format!("unbound index `{v}`"))),
        }
    }

    /// Evaluates with every contraction expanded at the innermost node where
    /// an index variable completes its second occurrence.
    pub fn eval(&self, e: &IExpr, env: &BTreeMap<String, u8>) -> Result<Expr, DslError> {
        match e {
            IExpr::Rat(c) => Ok(Expr::rational(c.clone())),
            IExpr::Base(ix) => Ok(Expr::atom(Atom::base(self.resolve_index(ix, env)?))),
            IExpr::Ref { name, indices, jets } => self.eval_ref(name, indices, jets, env),
            IExpr::Deriv { index, body } => {
                if let Index::Var(v) = index {
                    if !env.contains_key(v) {
                        if var_count(body, v, env) == 1 {
                            // Contraction between the derivative slot and the body.
                            let range = self.spec.range_of(v, e, self.line)?;
                            let mut acc = Expr::zero();
                            for val in 1..=range {
                                let mut inner = env.clone();
                                inner.insert(v.clone(), val);
                                let b = self.eval(body, &inner)?;
                                acc = &acc + &self.spec.ctx().total_derivative(&b, val);
                            }
                            return Ok(acc);
                        }
                        return Err(self.err(format!("unbound derivative index `{v}`")));
                    }
                }
                let i = self.resolve_index(index, env)?;
                let b = self.eval(body, env)?;
                Ok(self.spec.ctx().total_derivative(&b, i))
            }
            IExpr::Func { f, body } => Ok(Expr::func(*f, self.eval(body, env)?)),
            IExpr::Neg(a) => Ok(-self.eval(a, env)?),
            IExpr::Add(a, b) => Ok(&self.eval(a, env)? + &self.eval(b, env)?),
            IExpr::Sub(a, b) => Ok(&self.eval(a, env)? - &self.eval(b, env)?),
            IExpr::Mul(a, b) => {
                // Sum over variables shared between the factors.
                let va = unbound_vars(a, env);
                let vb = unbound_vars(b, env);
                let shared: Vec<&String> = va.iter().filter(|v| vb.contains(v)).collect();
                if shared.is_empty() {
                    return Ok(&self.eval(a, env)? * &self.eval(b, env)?);
                }
                let v = shared[0].clone();
                let range = self.spec.range_of(&v, e, self.line)?;
                let mut acc = Expr::zero();
                for val in 1..=range {
                    let mut inner = env.clone();
                    inner.insert(v.clone(), val);
                    acc = &acc + &self.eval(e, &inner)?;
                }
                Ok(acc)
            }
            IExpr::Div(a, b) => {
                let divisor = self.eval(b, env)?;
                let c = divisor
                    .as_rational()
                    .ok_or_else(|| self.err("divisor must be a rational constant".into()))?;
                if c.is_zero() {
                    return Err(self.err("division by zero".into()));
                }
                Ok(self.eval(a, env)?.scale(&c.recip()))
            }
            IExpr::Pow(a, p) => Ok(self.eval(a, env)?.pow(*p)),
        }
    }

    fn eval_ref(
        &self,
        name: &str,
        indices: &[Index],
        jets: &[u8],
        env: &BTreeMap<String, u8>,
    ) -> Result<Expr, DslError> {
        // Contraction inside a single reference (e.g. c[A, B, B]).
        for ix in indices {
            if let Index::Var(v) = ix {
                if !env.contains_key(v) {
                    let count =
                        indices.iter().filter(|j| matches!(j, Index::Var(w) if w == v)).count();
                    if count == 2 {
                        let probe = IExpr::Ref {
                            name: name.to_string(),
                            indices: indices.to_vec(),
                            jets: jets.to_vec(),
                        };
                        let range = self.spec.range_of(v, &probe, self.line)?;
                        let mut acc = Expr::zero();
                        for val in 1..=range {
                            let mut inner = env.clone();
                            inner.insert(v.clone(), val);
                            acc = &acc + &self.eval_ref(name, indices, jets, &inner)?;
                        }
                        return Ok(acc);
                    }
                    return Err(self.err(format!("unbound index `{v}` on `{name}`")));
                }
            }
        }
        let concrete: Vec<u8> =
            indices.iter().map(|ix| self.resolve_index(ix, env)).collect::<Result<_, _>>()?;
        self.spec.resolve_name(name, &concrete, jets, self.line, self.depth)
    }
}
