//! Line-oriented parser for model files and the indexed-expression grammar.

use super::ast::*;
use super::DslError;
use crate::symkernel::{Func, Rat};
use num_bigint::BigInt;

pub fn parse_statements(text: &str) -> Result<Vec<Statement>, DslError> {
    // Join continuation lines ending in a backslash.
    let mut logical: Vec<(usize, String)> = Vec::new();
    let mut pending: Option<(usize, String)> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let without_comment = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let trimmed = without_comment.trim_end();
        let (content, continued) = match trimmed.strip_suffix('\\') {
            Some(head) => (head, true),
            None => (trimmed, false),
        };
        match pending.take() {
            Some((start, mut acc)) => {
                acc.push(' ');
                acc.push_str(content);
                if continued {
                    pending = Some((start, acc));
                } else {
                    logical.push((start, acc));
                }
            }
            None => {
                if continued {
                    pending = Some((line_no, content.to_string()));
                } else if !content.trim().is_empty() {
                    logical.push((line_no, content.to_string()));
                }
            }
        }
    }
    if let Some((start, acc)) = pending {
        logical.push((start, acc));
    }

    logical
        .into_iter()
        .filter(|(_, s)| !s.trim().is_empty())
        .map(|(line, s)| parse_statement(line, &s))
        .collect()
}

fn parse_statement(line: usize, text: &str) -> Result<Statement, DslError> {
    let mut lex = Lexer::new(text, line);
    let first = lex.expect_ident()?;
    let kind = match first.as_str() {
        "dim" => {
            let n = lex.expect_small_int()?;
            StatementKind::Dim(n)
        }
        "field" | "param" => {
            let name = lex.expect_ident()?;
            let slots = if lex.peek_is(Tok::LBracket) { parse_slots(&mut lex)? } else { Vec::new() };
            if first == "field" {
                StatementKind::Field { name, slots }
            } else {
                StatementKind::Param { name, slots }
            }
        }
        "const" => {
            let name = lex.expect_ident()?;
            let slots = if lex.peek_is(Tok::LBracket) { parse_slots(&mut lex)? } else { Vec::new() };
            let symmetry = match lex.expect_ident()?.as_str() {
                "symmetric" => SymmetryKind::Symmetric,
                "antisymmetric" => SymmetryKind::Antisymmetric,
                "none" => SymmetryKind::None,
                other => {
                    return Err(lex.error(format!(
                        "expected a symmetry (symmetric|antisymmetric|none), found `{other}`"
                    )))
                }
            };
            lex.expect(Tok::Equals)?;
            let spec = parse_const_spec(&mut lex)?;
            StatementKind::Const { name, slots, symmetry, spec }
        }
        "metric" => {
            lex.expect(Tok::Equals)?;
            let kw = lex.expect_ident()?;
            if kw != "diag" {
                return Err(lex.error("metric must be given as diag(...)".into()));
            }
            lex.expect(Tok::LParen)?;
            let mut entries = vec![lex.expect_rational()?];
            while lex.peek_is(Tok::Comma) {
                lex.next_tok()?;
                entries.push(lex.expect_rational()?);
            }
            lex.expect(Tok::RParen)?;
            StatementKind::Metric(entries)
        }
        "lagrangian" => {
            lex.expect(Tok::Equals)?;
            let body = parse_iexpr(&mut lex)?;
            lex.expect_end()?;
            StatementKind::Lagrangian(body)
        }
        "vecfield" | "section" => {
            let name = lex.expect_ident()?;
            lex.expect(Tok::Colon)?;
            let target = parse_target(&mut lex)?;
            lex.expect(Tok::Equals)?;
            let body = parse_iexpr(&mut lex)?;
            lex.expect_end()?;
            if first == "vecfield" {
                StatementKind::VecFieldComponent { name, target, body }
            } else {
                StatementKind::SectionComponent { name, target, body }
            }
        }
        name => {
            // Definition: NAME [frees]? = iexpr
            let frees = if lex.peek_is(Tok::LBracket) {
                lex.next_tok()?;
                let mut v = vec![lex.expect_ident()?];
                while lex.peek_is(Tok::Comma) {
                    lex.next_tok()?;
                    v.push(lex.expect_ident()?);
                }
                lex.expect(Tok::RBracket)?;
                v
            } else {
                Vec::new()
            };
            lex.expect(Tok::Equals)?;
            let body = parse_iexpr(&mut lex)?;
            lex.expect_end()?;
            StatementKind::Def { name: name.to_string(), frees, body }
        }
    };
    Ok(Statement { line, kind })
}

fn parse_slots(lex: &mut Lexer) -> Result<Vec<(String, u8)>, DslError> {
    lex.expect(Tok::LBracket)?;
    let mut slots = Vec::new();
    loop {
        let idx = lex.expect_ident()?;
        lex.expect(Tok::Colon)?;
        let range = lex.expect_small_int()?;
        slots.push((idx, range));
        if lex.peek_is(Tok::Comma) {
            lex.next_tok()?;
        } else {
            break;
        }
    }
    lex.expect(Tok::RBracket)?;
    Ok(slots)
}

fn parse_const_spec(lex: &mut Lexer) -> Result<ConstSpec, DslError> {
    if lex.peek_is(Tok::LBrace) {
        lex.next_tok()?;
        let mut entries = Vec::new();
        loop {
            lex.expect(Tok::LBracket)?;
            let mut ix = vec![lex.expect_small_int()?];
            while lex.peek_is(Tok::Comma) {
                lex.next_tok()?;
                ix.push(lex.expect_small_int()?);
            }
            lex.expect(Tok::RBracket)?;
            lex.expect(Tok::Colon)?;
            let v = lex.expect_rational()?;
            entries.push((ix, v));
            if lex.peek_is(Tok::Comma) {
                lex.next_tok()?;
            } else {
                break;
            }
        }
        lex.expect(Tok::RBrace)?;
        return Ok(ConstSpec::Table(entries));
    }
    let kw = lex.expect_ident()?;
    match kw.as_str() {
        "kronecker" => Ok(ConstSpec::Kronecker),
        "levi_civita" => Ok(ConstSpec::LeviCivita),
        "symbolic" => Ok(ConstSpec::Symbolic),
        "diag" => {
            lex.expect(Tok::LParen)?;
            let mut entries = vec![lex.expect_rational()?];
            while lex.peek_is(Tok::Comma) {
                lex.next_tok()?;
                entries.push(lex.expect_rational()?);
            }
            lex.expect(Tok::RParen)?;
            Ok(ConstSpec::Diag(entries))
        }
        other => Err(lex.error(format!("unknown constant specification `{other}`"))),
    }
}

fn parse_target(lex: &mut Lexer) -> Result<ComponentTarget, DslError> {
    let name = lex.expect_ident()?;
    if name == "base" {
        lex.expect(Tok::LBracket)?;
        let i = lex.expect_small_int()?;
        lex.expect(Tok::RBracket)?;
        return Ok(ComponentTarget::Base(i));
    }
    let frees = if lex.peek_is(Tok::LBracket) {
        lex.next_tok()?;
        let mut v = vec![lex.expect_ident()?];
        while lex.peek_is(Tok::Comma) {
            lex.next_tok()?;
            v.push(lex.expect_ident()?);
        }
        lex.expect(Tok::RBracket)?;
        v
    } else {
        Vec::new()
    };
    Ok(ComponentTarget::Field { family: name, frees })
}

/// Expression grammar:
/// `iexpr := term (("+"|"-") term)*`,
/// `term := unary (("*"|"/") unary)*`,
/// `unary := "-" unary | power`,
/// `power := atom ("^" INT)?`,
/// `atom := RATIONAL | "(" iexpr ")" | call | reference`.
pub fn parse_iexpr(lex: &mut Lexer) -> Result<IExpr, DslError> {
    let mut acc = parse_term(lex)?;
    loop {
        if lex.peek_is(Tok::Plus) {
            lex.next_tok()?;
            acc = IExpr::Add(Box::new(acc), Box::new(parse_term(lex)?));
        } else if lex.peek_is(Tok::Minus) {
            lex.next_tok()?;
            acc = IExpr::Sub(Box::new(acc), Box::new(parse_term(lex)?));
        } else {
            return Ok(acc);
        }
    }
}

fn parse_term(lex: &mut Lexer) -> Result<IExpr, DslError> {
    let mut acc = parse_unary(lex)?;
    loop {
        if lex.peek_is(Tok::Star) {
            lex.next_tok()?;
            acc = IExpr::Mul(Box::new(acc), Box::new(parse_unary(lex)?));
        } else if lex.peek_is(Tok::Slash) {
            lex.next_tok()?;
            acc = IExpr::Div(Box::new(acc), Box::new(parse_unary(lex)?));
        } else {
            return Ok(acc);
        }
    }
}

fn parse_unary(lex: &mut Lexer) -> Result<IExpr, DslError> {
    if lex.peek_is(Tok::Minus) {
        lex.next_tok()?;
        return Ok(IExpr::Neg(Box::new(parse_unary(lex)?)));
    }
    parse_power(lex)
}

fn parse_power(lex: &mut Lexer) -> Result<IExpr, DslError> {
    let base = parse_atom(lex)?;
    if lex.peek_is(Tok::Caret) {
        lex.next_tok()?;
        let e = lex.expect_small_int()?;
        return Ok(IExpr::Pow(Box::new(base), e as u32));
    }
    Ok(base)
}

fn parse_index(lex: &mut Lexer) -> Result<Index, DslError> {
    match lex.next_tok()? {
        Tok::Ident(name) => Ok(Index::Var(name)),
        Tok::Int(v) => {
            let small: u8 = v
                .try_into()
                .map_err(|_| lex.error("index literal out of range".into()))?;
            Ok(Index::Lit(small))
        }
        other => Err(lex.error(format!("expected an index, found {other:?}"))),
    }
}

fn parse_atom(lex: &mut Lexer) -> Result<IExpr, DslError> {
    match lex.next_tok()? {
        Tok::Int(v) => Ok(IExpr::Rat(Rat::from_integer(BigInt::from(v)))),
        Tok::LParen => {
            let inner = parse_iexpr(lex)?;
            lex.expect(Tok::RParen)?;
            Ok(inner)
        }
        Tok::Ident(name) => parse_reference(lex, name),
        other => Err(lex.error(format!("unexpected token {other:?} in expression"))),
    }
}

fn parse_reference(lex: &mut Lexer, name: String) -> Result<IExpr, DslError> {
    // Built-in calls.
    match name.as_str() {
        "x" => {
            lex.expect(Tok::LParen)?;
            let idx = parse_index(lex)?;
            lex.expect(Tok::RParen)?;
            return Ok(IExpr::Base(idx));
        }
        "d" => {
            lex.expect(Tok::LParen)?;
            let idx = parse_index(lex)?;
            lex.expect(Tok::Comma)?;
            let body = parse_iexpr(lex)?;
            lex.expect(Tok::RParen)?;
            return Ok(IExpr::Deriv { index: idx, body: Box::new(body) });
        }
        "sin" | "cos" | "exp" => {
            let f = match name.as_str() {
                "sin" => Func::Sin,
                "cos" => Func::Cos,
                _ => Func::Exp,
            };
            lex.expect(Tok::LParen)?;
            let body = parse_iexpr(lex)?;
            lex.expect(Tok::RParen)?;
            return Ok(IExpr::Func { f, body: Box::new(body) });
        }
        _ => {}
    }
    // dN(expr) shorthand for d(N, expr).
    if let Some(rest) = name.strip_prefix('d') {
        if !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit()) && lex.peek_is(Tok::LParen)
        {
            let i: u8 = rest.parse().map_err(|_| lex.error("bad derivative index".into()))?;
            lex.next_tok()?;
            let body = parse_iexpr(lex)?;
            lex.expect(Tok::RParen)?;
            return Ok(IExpr::Deriv { index: Index::Lit(i), body: Box::new(body) });
        }
    }
    // Reference with optional [indices] and optional _{jets}.
    let mut indices = Vec::new();
    if lex.peek_is(Tok::LBracket) {
        lex.next_tok()?;
        indices.push(parse_index(lex)?);
        while lex.peek_is(Tok::Comma) {
            lex.next_tok()?;
            indices.push(parse_index(lex)?);
        }
        lex.expect(Tok::RBracket)?;
    }
    let mut jets = Vec::new();
    if lex.peek_is(Tok::Jet) {
        lex.next_tok()?;
        lex.expect(Tok::LBrace)?;
        jets.push(lex.expect_small_int()?);
        while lex.peek_is(Tok::Comma) {
            lex.next_tok()?;
            jets.push(lex.expect_small_int()?);
        }
        lex.expect(Tok::RBrace)?;
    }
    Ok(IExpr::Ref { name, indices, jets })
}

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Equals,
    Colon,
    Comma,
    Jet,
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    End,
}

pub struct Lexer {
    toks: Vec<Tok>,
    pos: usize,
    line: usize,
}

impl Lexer {
    pub fn new(text: &str, line: usize) -> Self {
        let mut toks = Vec::new();
        let bytes: Vec<char> = text.chars().collect();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i];
            match c {
                ' ' | '\t' => i += 1,
                '+' => {
                    toks.push(Tok::Plus);
                    i += 1;
                }
                '-' => {
                    toks.push(Tok::Minus);
                    i += 1;
                }
                '*' => {
                    toks.push(Tok::Star);
                    i += 1;
                }
                '/' => {
                    toks.push(Tok::Slash);
                    i += 1;
                }
                '^' => {
                    toks.push(Tok::Caret);
                    i += 1;
                }
                '=' => {
                    toks.push(Tok::Equals);
                    i += 1;
                }
                ':' => {
                    toks.push(Tok::Colon);
                    i += 1;
                }
                ',' => {
                    toks.push(Tok::Comma);
                    i += 1;
                }
                '_' => {
                    // `_{` introduces a jet multi-index; a bare underscore
                    // inside names is handled by the identifier rule below.
                    toks.push(Tok::Jet);
                    i += 1;
                }
                '(' => {
                    toks.push(Tok::LParen);
                    i += 1;
                }
                ')' => {
                    toks.push(Tok::RParen);
                    i += 1;
                }
                '[' => {
                    toks.push(Tok::LBracket);
                    i += 1;
                }
                ']' => {
                    toks.push(Tok::RBracket);
                    i += 1;
                }
                '{' => {
                    toks.push(Tok::LBrace);
                    i += 1;
                }
                '}' => {
                    toks.push(Tok::RBrace);
                    i += 1;
                }
                '0'..='9' => {
                    let start = i;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    let v: i64 = bytes[start..i].iter().collect::<String>().parse().unwrap_or(0);
                    toks.push(Tok::Int(v));
                }
                c if c.is_ascii_alphabetic() => {
                    // Identifiers may contain underscores except before `{`,
                    // which is the jet-index marker.
                    let start = i;
                    while i < bytes.len() {
                        let ch = bytes[i];
                        let in_name = ch.is_ascii_alphanumeric()
                            || (ch == '_' && bytes.get(i + 1).is_some_and(|&n| n != '{'));
                        if !in_name {
                            break;
                        }
                        i += 1;
                    }
                    toks.push(Tok::Ident(bytes[start..i].iter().collect()));
                }
                _ => {
                    toks.push(Tok::Ident(format!("?{c}")));
                    i += 1;
                }
            }
        }
        toks.push(Tok::End);
        Lexer { toks, pos: 0, line }
    }

    pub fn error(&self, message: String) -> DslError {
        DslError::Parse { line: self.line, message }
    }

    pub fn next_tok(&mut self) -> Result<Tok, DslError> {
        let t = self.toks[self.pos].clone();
        if t != Tok::End {
            self.pos += 1;
        }
        Ok(t)
    }

    pub fn peek_is(&self, t: Tok) -> bool {
        self.toks[self.pos] == t
    }

    pub fn expect(&mut self, t: Tok) -> Result<(), DslError> {
        let got = self.next_tok()?;
        if got == t {
            Ok(())
        } else {
            Err(self.error(format!("expected {t:?}, found {got:?}")))
        }
    }

    pub fn expect_end(&mut self) -> Result<(), DslError> {
        if self.peek_is(Tok::End) {
            Ok(())
        } else {
            Err(self.error(format!("unexpected trailing tokens from {:?}", self.toks[self.pos])))
        }
    }

    pub fn expect_ident(&mut self) -> Result<String, DslError> {
        match self.next_tok()? {
            Tok::Ident(s) => Ok(s),
            other => Err(self.error(format!("expected an identifier, found {other:?}"))),
        }
    }

    pub fn expect_small_int(&mut self) -> Result<u8, DslError> {
        match self.next_tok()? {
            Tok::Int(v) if (0..=255).contains(&v) => Ok(v as u8),
            other => Err(self.error(format!("expected a small integer, found {other:?}"))),
        }
    }

    /// Rational literal: INT, INT/INT, or -INT(/INT).
    pub fn expect_rational(&mut self) -> Result<Rat, DslError> {
        let neg = if self.peek_is(Tok::Minus) {
            self.next_tok()?;
            true
        } else {
            false
        };
        let num = match self.next_tok()? {
            Tok::Int(v) => v,
            other => return Err(self.error(format!("expected a number, found {other:?}"))),
        };
        let den = if self.peek_is(Tok::Slash) {
            self.next_tok()?;
            match self.next_tok()? {
                Tok::Int(v) if v != 0 => v,
                other => return Err(self.error(format!("expected a nonzero denominator, found {other:?}"))),
            }
        } else {
            1
        };
        let sign = if neg { -1 } else { 1 };
        Ok(Rat::new(BigInt::from(sign * num), BigInt::from(den)))
    }
}
