//! Deterministic renderers: human-readable plain text (re-parseable),
//! compilable LaTeX math, and a stable machine-readable JSON schema.

use super::eval::Evaluator;
use super::parse::{parse_iexpr, Lexer};
use super::{DslError, ModelSpec};
use crate::calcforms::{BasisOne, Form};
use crate::symkernel::{Atom, Expr, FieldId, Rat};
use crate::varops::SourceForm;
use num_bigint::BigInt;
use num_traits::{One, Signed};
use serde_json::{json, Value};
use std::collections::BTreeMap;

/// Version tag carried by every JSON document.
pub const JSON_SCHEMA: &str = "varfield-json/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RenderFormat {
    Plain,
    Latex,
    Json,
}

impl std::str::FromStr for RenderFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plain" => Ok(RenderFormat::Plain),
            "latex" => Ok(RenderFormat::Latex),
            "json" => Ok(RenderFormat::Json),
            other => Err(format!("unknown format `{other}` (plain|latex|json)")),
        }
    }
}

fn field_display(spec: &ModelSpec, f: FieldId) -> String {
    spec.family_of(f).map(|fam| fam.display(f)).unwrap_or_else(|| format!("f{}", f.0))
}

fn rat_plain(c: &Rat) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

fn atom_plain(spec: &ModelSpec, a: &Atom) -> String {
    match a {
        Atom::Base(i) => format!("x({i})"),
        Atom::Jet { field, index } => {
            let name = field_display(spec, *field);
            if index.is_empty() {
                name
            } else {
                format!("{name}_{{{index}}}")
            }
        }
        Atom::Const { name, indices } => {
            if indices.is_empty() {
                name.clone()
            } else {
                let ix: Vec<String> = indices.iter().map(|v| v.to_string()).collect();
                format!("{name}[{}]", ix.join(","))
            }
        }
        Atom::Func(f, arg) => format!("{}({})", f.name(), render_expr_plain(spec, arg)),
    }
}

/// Deterministic plain rendering; `parse_plain_expr` inverts it.
pub fn render_expr_plain(spec: &ModelSpec, e: &Expr) -> String {
    if e.is_zero() {
        return "0".into();
    }
    let mut out = String::new();
    for (k, (mono, coeff)) in e.terms().iter().enumerate() {
        let neg = coeff.is_negative();
        let abs = coeff.abs();
        if k == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        let mut factors: Vec<String> = Vec::new();
        if !abs.is_one() || mono.is_unit() {
            factors.push(rat_plain(&abs));
        }
        for (a, p) in mono.factors() {
            let s = atom_plain(spec, a);
            if *p > 1 {
                factors.push(format!("{s}^{p}"));
            } else {
                factors.push(s);
            }
        }
        out.push_str(&factors.join("*"));
    }
    out
}

/// Parses a plain expression (the output of `render_expr_plain`, or any
/// indexed expression with concrete indices) back to a canonical `Expr`.
pub fn parse_plain_expr(spec: &ModelSpec, text: &str) -> Result<Expr, DslError> {
    let mut lex = Lexer::new(text, 0);
    let ast = parse_iexpr(&mut lex)?;
    lex.expect_end()?;
    let ev = Evaluator::new(spec, 0);
    ev.eval(&ast, &BTreeMap::new())
}

fn rat_latex(c: &Rat) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("\\tfrac{{{}}}{{{}}}", c.numer(), c.denom())
    }
}

fn atom_latex(spec: &ModelSpec, a: &Atom) -> String {
    match a {
        Atom::Base(i) => format!("x^{{{i}}}"),
        Atom::Jet { field, index } => {
            let fam = spec.family_of(*field);
            let (name, upper) = match fam {
                Some(f) if !f.slots.is_empty() => {
                    let ix: Vec<String> =
                        f.indices(*field).iter().map(|v| v.to_string()).collect();
                    (f.name.clone(), ix.join(","))
                }
                Some(f) => (f.name.clone(), String::new()),
                None => (format!("f_{{{}}}", field.0), String::new()),
            };
            let mut s = name;
            if !upper.is_empty() {
                s = format!("{s}^{{{upper}}}");
            }
            if !index.is_empty() {
                let jets: String = index.entries().iter().map(|i| i.to_string()).collect();
                s = format!("{s}_{{{jets}}}");
            }
            s
        }
        Atom::Const { name, indices } => {
            if indices.is_empty() {
                name.clone()
            } else {
                let ix: Vec<String> = indices.iter().map(|v| v.to_string()).collect();
                format!("{name}_{{{}}}", ix.join(","))
            }
        }
        Atom::Func(f, arg) => {
            format!("\\{}\\left({}\\right)", f.name(), render_expr_latex(spec, arg))
        }
    }
}

pub fn render_expr_latex(spec: &ModelSpec, e: &Expr) -> String {
    if e.is_zero() {
        return "0".into();
    }
    let mut out = String::new();
    for (k, (mono, coeff)) in e.terms().iter().enumerate() {
        let neg = coeff.is_negative();
        let abs = coeff.abs();
        if k == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        if !abs.is_one() || mono.is_unit() {
            out.push_str(&rat_latex(&abs));
            if !mono.is_unit() {
                out.push_str("\\,");
            }
        }
        for (j, (a, p)) in mono.factors().iter().enumerate() {
            if j > 0 {
                out.push_str("\\,");
            }
            out.push_str(&atom_latex(spec, a));
            if *p > 1 {
                out.push_str(&format!("^{{{p}}}"));
            }
        }
    }
    out
}

fn basis_latex(spec: &ModelSpec, b: &BasisOne, single_field: bool) -> String {
    match b {
        BasisOne::Dx(i) => {
            if spec.base_dim() == 1 {
                "dx".into()
            } else {
                format!("dx^{{{i}}}")
            }
        }
        BasisOne::Omega(f, index) => {
            let mut s = "\\omega".to_string();
            if !single_field {
                s = format!("{s}^{{{}}}", field_display(spec, *f));
            }
            if !index.is_empty() {
                let jets: String = index.entries().iter().map(|i| i.to_string()).collect();
                s = format!("{s}_{{{jets}}}");
            }
            s
        }
        BasisOne::DyTop(f, index) => {
            let mut s = format!("dy^{{{}}}", field_display(spec, *f));
            if !index.is_empty() {
                let jets: String = index.entries().iter().map(|i| i.to_string()).collect();
                s = format!("{s}_{{{jets}}}");
            }
            s
        }
    }
}

/// Contact factors first for display, with the permutation sign folded into
/// the coefficient.
fn display_order(mono: &crate::calcforms::WedgeMono, coeff: &Expr) -> (Vec<BasisOne>, Expr) {
    let mut contact = Vec::new();
    let mut dx = Vec::new();
    let mut swaps = 0usize;
    for b in mono.factors() {
        match b {
            BasisOne::Dx(_) => dx.push(b.clone()),
            other => {
                swaps += dx.len();
                contact.push(other.clone());
            }
        }
    }
    contact.extend(dx);
    let signed = if swaps.is_multiple_of(2) {
        coeff.clone()
    } else {
        -coeff
    };
    (contact, signed)
}

pub fn render_form_latex(spec: &ModelSpec, form: &Form) -> String {
    if form.is_zero() {
        return "0".into();
    }
    let single_field = spec.fiber_dim() == 1 && spec.families().count() == 1;
    let mut out = String::new();
    for (k, (mono, coeff)) in form.terms().iter().enumerate() {
        if k > 0 {
            out.push_str(" + ");
        }
        let (factors, signed) = display_order(mono, coeff);
        let simple = signed.terms().len() == 1;
        let c = render_expr_latex(spec, &signed);
        if simple {
            out.push_str(&c);
        } else {
            out.push_str(&format!("\\left({c}\\right)"));
        }
        let basis: Vec<String> =
            factors.iter().map(|b| basis_latex(spec, b, single_field)).collect();
        if !basis.is_empty() {
            out.push_str("\\,");
            out.push_str(&basis.join("\\wedge "));
        }
    }
    out
}

pub fn render_form_plain(spec: &ModelSpec, form: &Form) -> String {
    if form.is_zero() {
        return "0".into();
    }
    let mut out = String::new();
    for (k, (mono, coeff)) in form.terms().iter().enumerate() {
        if k > 0 {
            out.push_str(" + ");
        }
        let (factors, signed) = display_order(mono, coeff);
        let c = render_expr_plain(spec, &signed);
        if signed.terms().len() == 1 && !c.contains(' ') {
            out.push_str(&c);
        } else {
            out.push_str(&format!("({c})"));
        }
        for b in factors {
            out.push(' ');
            out.push_str(&basis_plain(spec, &b));
        }
    }
    out
}

fn basis_plain(spec: &ModelSpec, b: &BasisOne) -> String {
    match b {
        BasisOne::Dx(i) => format!("dx{i}"),
        BasisOne::Omega(f, index) => {
            let mut s = format!("w({})", field_display(spec, *f));
            if !index.is_empty() {
                s = format!("{s}_{{{index}}}");
            }
            s
        }
        BasisOne::DyTop(f, index) => {
            let mut s = format!("dy({})", field_display(spec, *f));
            if !index.is_empty() {
                s = format!("{s}_{{{index}}}");
            }
            s
        }
    }
}

fn atom_json(spec: &ModelSpec, a: &Atom) -> Value {
    match a {
        Atom::Base(i) => json!({"kind": "base", "i": i}),
        Atom::Jet { field, index } => json!({
            "kind": "jet",
            "field": field_display(spec, *field),
            "index": index.entries(),
        }),
        Atom::Const { name, indices } => json!({
            "kind": "const",
            "name": name,
            "indices": indices,
        }),
        Atom::Func(f, arg) => json!({
            "kind": "func",
            "name": f.name(),
            "arg": expr_terms_json(spec, arg),
        }),
    }
}

fn expr_terms_json(spec: &ModelSpec, e: &Expr) -> Value {
    let terms: Vec<Value> = e
        .terms()
        .iter()
        .map(|(mono, coeff)| {
            let atoms: Vec<Value> = mono
                .factors()
                .iter()
                .map(|(a, p)| json!({"atom": atom_json(spec, a), "pow": p}))
                .collect();
            json!({"coeff": rat_plain(coeff), "atoms": atoms})
        })
        .collect();
    json!(terms)
}

pub fn render_expr_json(spec: &ModelSpec, e: &Expr) -> String {
    let doc = json!({
        "schema": JSON_SCHEMA,
        "kind": "expr",
        "terms": expr_terms_json(spec, e),
    });
    serde_json::to_string_pretty(&doc).expect("serializable")
}

pub fn render_form_json(spec: &ModelSpec, form: &Form) -> String {
    let terms: Vec<Value> = form
        .terms()
        .iter()
        .map(|(mono, coeff)| {
            let basis: Vec<Value> = mono
                .factors()
                .iter()
                .map(|b| match b {
                    BasisOne::Dx(i) => json!({"kind": "dx", "i": i}),
                    BasisOne::Omega(f, index) => json!({
                        "kind": "omega",
                        "field": field_display(spec, *f),
                        "index": index.entries(),
                    }),
                    BasisOne::DyTop(f, index) => json!({
                        "kind": "dy",
                        "field": field_display(spec, *f),
                        "index": index.entries(),
                    }),
                })
                .collect();
            json!({"coeff": expr_terms_json(spec, coeff), "basis": basis})
        })
        .collect();
    let doc = json!({
        "schema": JSON_SCHEMA,
        "kind": "form",
        "degree": form.degree(),
        "order": form.order(),
        "terms": terms,
    });
    serde_json::to_string_pretty(&doc).expect("serializable")
}

/// Renders any of the engine's values with the requested format.
pub fn render_source_form(spec: &ModelSpec, s: &SourceForm, fmt: RenderFormat) -> String {
    match fmt {
        RenderFormat::Plain => render_form_plain(spec, s.form()),
        RenderFormat::Latex => render_form_latex(spec, s.form()),
        RenderFormat::Json => render_form_json(spec, s.form()),
    }
}

/// Parses an expression JSON document produced by `render_expr_json` back to
/// a canonical expression.
pub fn parse_expr_json(spec: &ModelSpec, text: &str) -> Result<Expr, DslError> {
    let doc: Value =
        serde_json::from_str(text).map_err(|e| DslError::Model(format!("bad JSON: {e}")))?;
    if doc["schema"] != JSON_SCHEMA {
        return Err(DslError::Model(format!("unsupported schema {}", doc["schema"])));
    }
    let terms = doc["terms"].as_array().ok_or_else(|| DslError::Model("missing terms".into()))?;
    json_terms_to_expr(spec, terms)
}

fn json_terms_to_expr(spec: &ModelSpec, terms: &[Value]) -> Result<Expr, DslError> {
    let bad = |m: &str| DslError::Model(format!("bad expression JSON: {m}"));
    let mut acc = Expr::zero();
    for t in terms {
        let coeff_s = t["coeff"].as_str().ok_or_else(|| bad("coeff"))?;
        let coeff = parse_rat(coeff_s).ok_or_else(|| bad("coeff value"))?;
        let mut term = Expr::rational(coeff);
        for f in t["atoms"].as_array().ok_or_else(|| bad("atoms"))? {
            let pow = f["pow"].as_u64().ok_or_else(|| bad("pow"))? as u32;
            let atom = json_atom(spec, &f["atom"])?;
            term = &term * &Expr::atom(atom).pow(pow);
        }
        acc = &acc + &term;
    }
    Ok(acc)
}

fn json_atom(spec: &ModelSpec, v: &Value) -> Result<Atom, DslError> {
    let bad = |m: &str| DslError::Model(format!("bad atom JSON: {m}"));
    match v["kind"].as_str() {
        Some("base") => Ok(Atom::base(v["i"].as_u64().ok_or_else(|| bad("i"))? as u8)),
        Some("jet") => {
            let display = v["field"].as_str().ok_or_else(|| bad("field"))?;
            let field = parse_field_display(spec, display)
                .ok_or_else(|| bad(&format!("unknown field `{display}`")))?;
            let index: Vec<u8> = v["index"]
                .as_array()
                .ok_or_else(|| bad("index"))?
                .iter()
                .map(|x| x.as_u64().unwrap_or(0) as u8)
                .collect();
            Ok(Atom::jet(field, crate::symkernel::MultiIndex::new(index)))
        }
        Some("const") => {
            let name = v["name"].as_str().ok_or_else(|| bad("name"))?;
            let indices: Vec<u8> = v["indices"]
                .as_array()
                .ok_or_else(|| bad("indices"))?
                .iter()
                .map(|x| x.as_u64().unwrap_or(0) as u8)
                .collect();
            Ok(Atom::constant(name, indices))
        }
        Some("func") => {
            let name = v["name"].as_str().ok_or_else(|| bad("name"))?;
            let f = match name {
                "sin" => crate::symkernel::Func::Sin,
                "cos" => crate::symkernel::Func::Cos,
                "exp" => crate::symkernel::Func::Exp,
                _ => return Err(bad("func name")),
            };
            let arg =
                json_terms_to_expr(spec, v["arg"].as_array().ok_or_else(|| bad("arg"))?)?;
            Ok(Atom::func(f, arg))
        }
        _ => Err(bad("kind")),
    }
}

/// Parses a display name like `w[2,3]` or `y` back to the flat field id.
fn parse_field_display(spec: &ModelSpec, display: &str) -> Option<FieldId> {
    let (name, indices) = match display.find('[') {
        None => (display, Vec::new()),
        Some(pos) => {
            let name = &display[..pos];
            let inner = display[pos + 1..].strip_suffix(']')?;
            let ix: Option<Vec<u8>> = inner.split(',').map(|s| s.trim().parse().ok()).collect();
            (name, ix?)
        }
    };
    spec.family(name)?.sigma(&indices)
}

fn parse_rat(s: &str) -> Option<Rat> {
    match s.split_once('/') {
        Some((n, d)) => {
            Some(Rat::new(n.parse::<BigInt>().ok()?, d.parse::<BigInt>().ok()?))
        }
        None => Some(Rat::from_integer(s.parse::<BigInt>().ok()?)),
    }
}
