//! Parser and renderers for field-theory model definitions with Einstein
//! summation over concrete index ranges.
//!
//! The file format is line-oriented (see `docs/modeldsl.md` for the full
//! grammar): `dim`, `field`, `param`, `const`, `metric`, definitions,
//! `lagrangian`, `vecfield`, and `section` statements. Index variables take
//! their ranges from the slots they occupy; every index must appear exactly
//! once (declared free) or exactly twice (summed) per additive branch, and
//! all sums expand to explicit finite sums at parse time.

mod ast;
mod eval;
mod parse;
mod render;

pub use ast::{ComponentTarget, ConstSpec, IExpr, Index, Statement, StatementKind, SymmetryKind};
pub use render::{
    parse_expr_json, parse_plain_expr, render_expr_json, render_expr_latex, render_expr_plain,
    render_form_json, render_form_latex, render_form_plain, render_source_form, RenderFormat,
    JSON_SCHEMA,
};

use crate::jetgeom::{ConstDecl, JetContext, Section, Symmetry, VecField};
use crate::symkernel::{Atom, Expr, FieldId, MultiIndex, Rat};
use eval::{validate_indices, Evaluator};
use num_traits::Zero;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DslError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {message}")]
    Validate { line: usize, message: String },
    #[error("{0}")]
    Model(String),
    #[error(transparent)]
    Jet(#[from] crate::jetgeom::JetError),
}

/// A declared field or parameter family: its index slots and the flat fiber
/// enumeration (first slot major, last slot fastest).
#[derive(Clone, Debug)]
pub struct Family {
    pub name: String,
    pub slots: Vec<(String, u8)>,
    pub first: u16,
    pub variational: bool,
}

impl Family {
    pub fn component_count(&self) -> u16 {
        self.slots.iter().map(|(_, r)| *r as u16).product()
    }

    pub fn sigma(&self, indices: &[u8]) -> Option<FieldId> {
        if indices.len() != self.slots.len() {
            return None;
        }
        let mut offset: u16 = 0;
        for (v, (_, range)) in indices.iter().zip(&self.slots) {
            if *v < 1 || v > range {
                return None;
            }
            offset = offset * (*range as u16) + (*v as u16 - 1);
        }
        Some(FieldId(self.first + offset))
    }

    /// Inverse of `sigma`: component indices for a flat field id.
    pub fn indices(&self, f: FieldId) -> Vec<u8> {
        let mut offset = f.0 - self.first;
        let mut out = vec![0u8; self.slots.len()];
        for (k, (_, range)) in self.slots.iter().enumerate().rev() {
            out[k] = (offset % *range as u16) as u8 + 1;
            offset /= *range as u16;
        }
        out
    }

    pub fn all_indices(&self) -> Vec<Vec<u8>> {
        let mut out = vec![Vec::new()];
        for (_, range) in &self.slots {
            let mut next = Vec::new();
            for prefix in &out {
                for v in 1..=*range {
                    let mut p = prefix.clone();
                    p.push(v);
                    next.push(p);
                }
            }
            out = next;
        }
        out
    }

    pub fn display(&self, f: FieldId) -> String {
        if self.slots.is_empty() {
            self.name.clone()
        } else {
            let ix: Vec<String> = self.indices(f).iter().map(|v| v.to_string()).collect();
            format!("{}[{}]", self.name, ix.join(","))
        }
    }
}

#[derive(Clone, Debug)]
struct Def {
    frees: Vec<String>,
    ranges: Vec<u8>,
    body: IExpr,
    line: usize,
}

/// A parsed field theory: context, families, named definitions, Lagrangian,
/// and named vector fields and sections.
#[derive(Debug)]
pub struct ModelSpec {
    ctx: JetContext,
    families: BTreeMap<String, Family>,
    family_order: Vec<String>,
    defs: BTreeMap<String, Def>,
    lagrangian_density: Expr,
    vecfields: BTreeMap<String, VecField>,
    sections: BTreeMap<String, Section>,
}

const MAX_DEF_DEPTH: usize = 32;

impl ModelSpec {
    pub fn parse(text: &str) -> Result<ModelSpec, DslError> {
        let statements = parse::parse_statements(text)?;
        build(statements)
    }

    pub fn ctx(&self) -> &JetContext {
        &self.ctx
    }

    pub fn ctx_mut(&mut self) -> &mut JetContext {
        &mut self.ctx
    }

    pub fn base_dim(&self) -> u8 {
        self.ctx.base_dim()
    }

    /// Number of variational fiber coordinates.
    pub fn fiber_dim(&self) -> usize {
        self.families.values().filter(|f| f.variational).map(|f| f.component_count() as usize).sum()
    }

    pub fn lagrangian_density(&self) -> &Expr {
        &self.lagrangian_density
    }

    pub fn lagrangian(&self) -> crate::calcforms::Form {
        crate::calcforms::horizontal_n_form(&self.ctx, self.lagrangian_density.clone())
    }

    pub fn family(&self, name: &str) -> Option<&Family> {
        self.families.get(name)
    }

    pub fn families(&self) -> impl Iterator<Item = &Family> {
        self.family_order.iter().map(|n| &self.families[n])
    }

    pub fn vecfield(&self, name: &str) -> Option<&VecField> {
        self.vecfields.get(name)
    }

    pub fn vecfield_names(&self) -> impl Iterator<Item = &str> {
        self.vecfields.keys().map(String::as_str)
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.get(name)
    }

    pub fn section_names(&self) -> impl Iterator<Item = &str> {
        self.sections.keys().map(String::as_str)
    }

    /// Family owning a flat fiber coordinate.
    pub fn family_of(&self, f: FieldId) -> Option<&Family> {
        self.families
            .values()
            .find(|fam| f.0 >= fam.first && f.0 < fam.first + fam.component_count())
    }

    /// Expands a definition at concrete index values.
    pub fn def_value(&self, name: &str, indices: &[u8]) -> Result<Expr, DslError> {
        let def = self
            .defs
            .get(name)
            .ok_or_else(|| DslError::Model(format!("unknown definition `{name}`")))?;
        if indices.len() != def.frees.len() {
            return Err(DslError::Validate {
                line: def.line,
                message: format!(
                    "`{name}` takes {} indices, {} given",
                    def.frees.len(),
                    indices.len()
                ),
            });
        }
        let env: BTreeMap<String, u8> =
            def.frees.iter().cloned().zip(indices.iter().copied()).collect();
        let ev = Evaluator { spec: self, line: def.line, depth: 0 };
        ev.eval(&def.body, &env)
    }

    /// Range of the slot `pos` of a named family, constant, or definition.
    fn slot_range(&self, name: &str, pos: usize) -> Option<u8> {
        if let Some(fam) = self.families.get(name) {
            return fam.slots.get(pos).map(|(_, r)| *r);
        }
        if let Some(def) = self.defs.get(name) {
            return def.ranges.get(pos).copied();
        }
        if let Some(decl) = self.ctx.const_decl(name) {
            return decl.ranges.get(pos).copied();
        }
        None
    }

    /// Infers the range of an index variable from the slots it occupies in a
    /// subtree; errors on conflicting ranges.
    pub(crate) fn range_of(&self, v: &str, e: &IExpr, line: usize) -> Result<u8, DslError> {
        let mut found: Option<u8> = None;
        self.walk_ranges(v, e, line, &mut found)?;
        found.ok_or_else(|| DslError::Validate {
            line,
            message: format!("cannot infer a range for index `{v}`"),
        })
    }

    fn walk_ranges(
        &self,
        v: &str,
        e: &IExpr,
        line: usize,
        found: &mut Option<u8>,
    ) -> Result<(), DslError> {
        let record = |r: Option<u8>, found: &mut Option<u8>| -> Result<(), DslError> {
            let Some(r) = r else { return Ok(()) };
            match *found {
                None => {
                    *found = Some(r);
                    Ok(())
                }
                Some(prev) if prev == r => Ok(()),
                Some(prev) => Err(DslError::Validate {
                    line,
                    message: format!("index `{v}` is used with conflicting ranges {prev} and {r}"),
                }),
            }
        };
        match e {
            IExpr::Rat(_) => {}
            IExpr::Base(Index::Var(w)) if w == v => {
                record(Some(self.ctx.base_dim()), found)?
            }
            IExpr::Base(_) => {}
            IExpr::Ref { name, indices, .. } => {
                for (pos, ix) in indices.iter().enumerate() {
                    if matches!(ix, Index::Var(w) if w == v) {
                        record(self.slot_range(name, pos), found)?;
                    }
                }
            }
            IExpr::Deriv { index, body } => {
                if matches!(index, Index::Var(w) if w == v) {
                    record(Some(self.ctx.base_dim()), found)?;
                }
                self.walk_ranges(v, body, line, found)?;
            }
            IExpr::Func { body, .. } => self.walk_ranges(v, body, line, found)?,
            IExpr::Neg(a) | IExpr::Pow(a, _) => self.walk_ranges(v, a, line, found)?,
            IExpr::Add(a, b) | IExpr::Sub(a, b) | IExpr::Mul(a, b) | IExpr::Div(a, b) => {
                self.walk_ranges(v, a, line, found)?;
                self.walk_ranges(v, b, line, found)?;
            }
        }
        Ok(())
    }

    /// Resolves a reference with concrete indices to an expression.
    pub(crate) fn resolve_name(
        &self,
        name: &str,
        indices: &[u8],
        jets: &[u8],
        line: usize,
        depth: usize,
    ) -> Result<Expr, DslError> {
        if depth > MAX_DEF_DEPTH {
            return Err(DslError::Validate {
                line,
                message: format!("definition `{name}` expands too deeply (cycle?)"),
            });
        }
        if let Some(fam) = self.families.get(name) {
            let sigma = fam.sigma(indices).ok_or_else(|| DslError::Validate {
                line,
                message: format!("bad indices {indices:?} for `{name}`"),
            })?;
            return Ok(Expr::atom(Atom::jet(sigma, MultiIndex::new(jets.to_vec()))));
        }
        if !jets.is_empty() {
            return Err(DslError::Validate {
                line,
                message: format!("jet indices are only valid on fields, not on `{name}`"),
            });
        }
        if let Some(decl) = self.ctx.const_decl(name) {
            if indices.len() != decl.ranges.len()
                || indices.iter().zip(&decl.ranges).any(|(v, r)| *v < 1 || v > r)
            {
                return Err(DslError::Validate {
                    line,
                    message: format!("bad indices {indices:?} for constant `{name}`"),
                });
            }
            return Ok(decl.resolve(name, indices));
        }
        if let Some(def) = self.defs.get(name) {
            if indices.len() != def.frees.len() {
                return Err(DslError::Validate {
                    line,
                    message: format!(
                        "`{name}` takes {} indices, {} given",
                        def.frees.len(),
                        indices.len()
                    ),
                });
            }
            let env: BTreeMap<String, u8> =
                def.frees.iter().cloned().zip(indices.iter().copied()).collect();
            let ev = Evaluator { spec: self, line: def.line, depth: depth + 1 };
            return ev.eval(&def.body, &env);
        }
        Err(DslError::Validate { line, message: format!("unknown symbol `{name}`") })
    }
}

fn symmetry_of(kind: SymmetryKind) -> Symmetry {
    match kind {
        SymmetryKind::Symmetric => Symmetry::Symmetric,
        SymmetryKind::Antisymmetric => Symmetry::Antisymmetric,
        SymmetryKind::None => Symmetry::None,
    }
}

fn const_table(
    spec: &ConstSpec,
    ranges: &[u8],
    line: usize,
) -> Result<Option<BTreeMap<Vec<u8>, Rat>>, DslError> {
    let bad = |message: String| DslError::Validate { line, message };
    match spec {
        ConstSpec::Symbolic => Ok(None),
        ConstSpec::Kronecker => {
            if ranges.len() != 2 || ranges[0] != ranges[1] {
                return Err(bad("kronecker needs two slots of equal range".into()));
            }
            let mut t = BTreeMap::new();
            for i in 1..=ranges[0] {
                t.insert(vec![i, i], Rat::from_integer(1.into()));
            }
            Ok(Some(t))
        }
        ConstSpec::LeviCivita => {
            let k = ranges.len();
            if k < 2 || ranges.iter().any(|r| *r as usize != k) {
                return Err(bad("levi_civita needs k slots of range k".into()));
            }
            let mut t = BTreeMap::new();
            let mut perm: Vec<u8> = (1..=k as u8).collect();
            permute_signs(&mut perm, 0, 1, &mut t);
            Ok(Some(t))
        }
        ConstSpec::Diag(entries) => {
            if ranges.len() != 2 || ranges[0] != ranges[1] || entries.len() != ranges[0] as usize {
                return Err(bad("diag needs two equal slots matching the entry count".into()));
            }
            let mut t = BTreeMap::new();
            for (i, v) in entries.iter().enumerate() {
                if !v.is_zero() {
                    t.insert(vec![i as u8 + 1, i as u8 + 1], v.clone());
                }
            }
            Ok(Some(t))
        }
        ConstSpec::Table(entries) => {
            let mut t = BTreeMap::new();
            for (ix, v) in entries {
                if ix.len() != ranges.len() || ix.iter().zip(ranges).any(|(i, r)| *i < 1 || i > r)
                {
                    return Err(bad(format!("table entry {ix:?} is outside the declared ranges")));
                }
                if !v.is_zero() {
                    t.insert(ix.clone(), v.clone());
                }
            }
            Ok(Some(t))
        }
    }
}

fn permute_signs(perm: &mut Vec<u8>, start: usize, sign: i64, out: &mut BTreeMap<Vec<u8>, Rat>) {
    if start == perm.len() {
        out.insert(perm.clone(), Rat::from_integer(sign.into()));
        return;
    }
    for i in start..perm.len() {
        perm.swap(start, i);
        let s = if i == start { sign } else { -sign };
        permute_signs(perm, start + 1, s, out);
        perm.swap(start, i);
    }
}

fn build(statements: Vec<Statement>) -> Result<ModelSpec, DslError> {
    type FieldDecl = (usize, String, Vec<(String, u8)>, bool);
    type ConstDeclRaw = (usize, String, Vec<(String, u8)>, SymmetryKind, ConstSpec);
    let mut dim: Option<u8> = None;
    let mut field_decls: Vec<FieldDecl> = Vec::new();
    let mut const_decls: Vec<ConstDeclRaw> = Vec::new();
    let mut metric: Option<(usize, Vec<Rat>)> = None;
    for st in &statements {
        match &st.kind {
            StatementKind::Dim(n) => {
                if dim.replace(*n).is_some() {
                    return Err(DslError::Validate {
                        line: st.line,
                        message: "duplicate dim statement".into(),
                    });
                }
            }
            StatementKind::Field { name, slots } => {
                field_decls.push((st.line, name.clone(), slots.clone(), true))
            }
            StatementKind::Param { name, slots } => {
                field_decls.push((st.line, name.clone(), slots.clone(), false))
            }
            StatementKind::Const { name, slots, symmetry, spec } => {
                const_decls.push((st.line, name.clone(), slots.clone(), *symmetry, spec.clone()))
            }
            StatementKind::Metric(entries) => metric = Some((st.line, entries.clone())),
            _ => {}
        }
    }
    let n = dim.ok_or_else(|| DslError::Model("missing `dim` statement".into()))?;
    if n < 1 {
        return Err(DslError::Model("base dimension must be at least 1".into()));
    }
    if !field_decls.iter().any(|(_, _, _, v)| *v) {
        return Err(DslError::Model("at least one `field` is required".into()));
    }

    // Variational families first, declaration order, last slot fastest.
    let mut families: BTreeMap<String, Family> = BTreeMap::new();
    let mut family_order = Vec::new();
    let mut names: Vec<String> = Vec::new();
    let mut next: u16 = 0;
    for (line, name, slots, is_field) in &field_decls {
        if !is_field {
            continue;
        }
        let fam =
            Family { name: name.clone(), slots: slots.clone(), first: next, variational: true };
        let count = fam.component_count();
        if count == 0 {
            return Err(DslError::Validate {
                line: *line,
                message: format!("family `{name}` has an empty index range"),
            });
        }
        if families.insert(name.clone(), fam).is_some() {
            return Err(DslError::Validate {
                line: *line,
                message: format!("duplicate family `{name}`"),
            });
        }
        family_order.push(name.clone());
        let fam = &families[name];
        for off in 0..count {
            names.push(fam.display(FieldId(fam.first + off)));
        }
        next += count;
    }
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut ctx = JetContext::new(n, &name_refs, 2);

    // Parameter families are appended to the same fiber enumeration.
    for (line, name, slots, is_field) in &field_decls {
        if *is_field {
            continue;
        }
        let mut fam =
            Family { name: name.clone(), slots: slots.clone(), first: 0, variational: false };
        let count = fam.component_count();
        if count == 0 {
            return Err(DslError::Validate {
                line: *line,
                message: format!("family `{name}` has an empty index range"),
            });
        }
        let mut first: Option<u16> = None;
        for off in 0..count {
            let indices = fam.indices(FieldId(off));
            let display = if slots.is_empty() {
                name.clone()
            } else {
                let ix: Vec<String> = indices.iter().map(|v| v.to_string()).collect();
                format!("{}[{}]", name, ix.join(","))
            };
            let id = ctx.add_parameter_field(&display);
            first.get_or_insert(id.0);
        }
        fam.first = first.expect("at least one component");
        if families.insert(name.clone(), fam).is_some() {
            return Err(DslError::Validate {
                line: *line,
                message: format!("duplicate family `{name}`"),
            });
        }
        family_order.push(name.clone());
    }

    for (line, name, slots, symmetry, spec) in &const_decls {
        let ranges: Vec<u8> = slots.iter().map(|(_, r)| *r).collect();
        let table = const_table(spec, &ranges, *line)?;
        ctx.add_const(name, ConstDecl { ranges, symmetry: symmetry_of(*symmetry), table })?;
    }
    if let Some((line, entries)) = &metric {
        if entries.len() != n as usize {
            return Err(DslError::Validate {
                line: *line,
                message: format!("metric diag needs {n} entries"),
            });
        }
        let mut t = BTreeMap::new();
        for (i, v) in entries.iter().enumerate() {
            if !v.is_zero() {
                t.insert(vec![i as u8 + 1, i as u8 + 1], v.clone());
            }
        }
        ctx.add_const(
            "g",
            ConstDecl { ranges: vec![n, n], symmetry: Symmetry::Symmetric, table: Some(t) },
        )?;
    }

    let mut spec = ModelSpec {
        ctx,
        families,
        family_order,
        defs: BTreeMap::new(),
        lagrangian_density: Expr::zero(),
        vecfields: BTreeMap::new(),
        sections: BTreeMap::new(),
    };

    // Second pass: definitions, Lagrangian, vector fields, sections.
    let mut lagrangian: Option<Expr> = None;
    let mut vec_components: BTreeMap<String, (Vec<Expr>, BTreeMap<FieldId, Expr>)> =
        BTreeMap::new();
    let mut sec_components: BTreeMap<String, BTreeMap<FieldId, Expr>> = BTreeMap::new();
    for st in &statements {
        match &st.kind {
            StatementKind::Def { name, frees, body } => {
                if spec.families.contains_key(name)
                    || spec.ctx.const_decl(name).is_some()
                    || spec.defs.contains_key(name)
                {
                    return Err(DslError::Validate {
                        line: st.line,
                        message: format!("`{name}` is already declared"),
                    });
                }
                validate_indices(&spec, body, st.line, frees)?;
                let ranges: Vec<u8> = frees
                    .iter()
                    .map(|v| spec.range_of(v, body, st.line))
                    .collect::<Result<_, _>>()?;
                spec.defs.insert(
                    name.clone(),
                    Def { frees: frees.clone(), ranges, body: body.clone(), line: st.line },
                );
            }
            StatementKind::Lagrangian(body) => {
                validate_indices(&spec, body, st.line, &[])?;
                let ev = Evaluator::new(&spec, st.line);
                let density = ev.eval(body, &BTreeMap::new())?;
                if lagrangian.replace(density).is_some() {
                    return Err(DslError::Validate {
                        line: st.line,
                        message: "duplicate lagrangian".into(),
                    });
                }
            }
            StatementKind::VecFieldComponent { name, target, body } => {
                let base_dim = spec.ctx.base_dim() as usize;
                let entry = vec_components
                    .entry(name.clone())
                    .or_insert_with(|| (vec![Expr::zero(); base_dim], BTreeMap::new()));
                match target {
                    ComponentTarget::Base(i) => {
                        validate_indices(&spec, body, st.line, &[])?;
                        if *i < 1 || *i as usize > base_dim {
                            return Err(DslError::Validate {
                                line: st.line,
                                message: format!("base index {i} out of range"),
                            });
                        }
                        let ev = Evaluator::new(&spec, st.line);
                        entry.0[(*i - 1) as usize] = ev.eval(body, &BTreeMap::new())?;
                    }
                    ComponentTarget::Field { family, frees } => {
                        let fam = spec.families.get(family).cloned().ok_or_else(|| {
                            DslError::Validate {
                                line: st.line,
                                message: format!("unknown field `{family}`"),
                            }
                        })?;
                        if !fam.variational {
                            return Err(DslError::Validate {
                                line: st.line,
                                message: format!("`{family}` is a parameter, not a field"),
                            });
                        }
                        if frees.len() != fam.slots.len() {
                            return Err(DslError::Validate {
                                line: st.line,
                                message: format!(
                                    "`{family}` needs {} component indices",
                                    fam.slots.len()
                                ),
                            });
                        }
                        validate_indices(&spec, body, st.line, frees)?;
                        for combo in fam.all_indices() {
                            let env: BTreeMap<String, u8> =
                                frees.iter().cloned().zip(combo.iter().copied()).collect();
                            let ev = Evaluator::new(&spec, st.line);
                            let value = ev.eval(body, &env)?;
                            let sigma = fam.sigma(&combo).expect("enumerated combo");
                            entry.1.insert(sigma, value);
                        }
                    }
                }
            }
            StatementKind::SectionComponent { name, target, body } => {
                let entry = sec_components.entry(name.clone()).or_default();
                match target {
                    ComponentTarget::Base(_) => {
                        return Err(DslError::Validate {
                            line: st.line,
                            message: "sections have no base components".into(),
                        });
                    }
                    ComponentTarget::Field { family, frees } => {
                        let fam = spec.families.get(family).cloned().ok_or_else(|| {
                            DslError::Validate {
                                line: st.line,
                                message: format!("unknown field `{family}`"),
                            }
                        })?;
                        validate_indices(&spec, body, st.line, frees)?;
                        for combo in fam.all_indices() {
                            let env: BTreeMap<String, u8> =
                                frees.iter().cloned().zip(combo.iter().copied()).collect();
                            let ev = Evaluator::new(&spec, st.line);
                            let value = ev.eval(body, &env)?;
                            let sigma = fam.sigma(&combo).expect("enumerated combo");
                            entry.insert(sigma, value);
                        }
                    }
                }
            }
            _ => {}
        }
    }

    spec.lagrangian_density =
        lagrangian.ok_or_else(|| DslError::Model("missing `lagrangian` statement".into()))?;
    for (name, (base, fiber)) in vec_components {
        let vf = VecField::new(&spec.ctx, base, fiber)?;
        spec.vecfields.insert(name, vf);
    }
    for (name, comps) in sec_components {
        let sec = Section::new(&spec.ctx, comps)?;
        spec.sections.insert(name, sec);
    }
    Ok(spec)
}
