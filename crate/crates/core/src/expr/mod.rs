//! A small surface language for ordinals.
//!
//! ```text
//! expr := "Z" | "S" expr | "max" "(" expr "," expr ")" | "lim" IDENT "." expr
//!       | "omega" | NAT | IDENT
//! ```
//!
//! `lim n. e` is the limit over the naturals of `e` with `n` bound to each
//! natural in turn. A variable bound by `lim` stands for a finite ordinal.

mod elab;
mod gen;
mod prove;
mod simplify;

use std::fmt;

pub use elab::{elab_family, elaborate};
pub use gen::{random_closed, random_expr, GenConfig};
pub use prove::{check, compare, prove_le, Comparison, DerivText, IndexExpr, Step};
pub use simplify::{certify, simplify, simplify_steps, Rewrite, RewriteStep};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum OrdExpr {
    Zero,
    Succ(Box<OrdExpr>),
    Max(Box<OrdExpr>, Box<OrdExpr>),
    Lim(String, Box<OrdExpr>),
    Var(String),
    Nat(u64),
    Omega,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("at byte {pos}: expected {}, found {found}", expected.join(" or "))]
pub struct ParseError {
    pub pos: usize,
    pub expected: Vec<String>,
    pub found: String,
}

const KEYWORDS: [&str; 5] = ["Z", "S", "max", "lim", "omega"];

impl OrdExpr {
    pub fn succ(e: OrdExpr) -> OrdExpr {
        OrdExpr::Succ(Box::new(e))
    }

    pub fn max(a: OrdExpr, b: OrdExpr) -> OrdExpr {
        OrdExpr::Max(Box::new(a), Box::new(b))
    }

    pub fn lim(var: &str, body: OrdExpr) -> OrdExpr {
        OrdExpr::Lim(var.to_string(), Box::new(body))
    }

    pub fn var(name: &str) -> OrdExpr {
        OrdExpr::Var(name.to_string())
    }

    /// Number of constructors, counting a numeral `n` as `n + 1` and `omega`
    /// as its desugaring.
    pub fn size(&self) -> u64 {
        match self {
            OrdExpr::Zero | OrdExpr::Var(_) => 1,
            OrdExpr::Nat(n) => n.saturating_add(1),
            OrdExpr::Omega => 2,
            OrdExpr::Succ(e) | OrdExpr::Lim(_, e) => 1 + e.size(),
            OrdExpr::Max(a, b) => 1 + a.size() + b.size(),
        }
    }

    pub fn mentions(&self, var: &str) -> bool {
        match self {
            OrdExpr::Var(v) => v == var,
            OrdExpr::Zero | OrdExpr::Nat(_) | OrdExpr::Omega => false,
            OrdExpr::Succ(e) => e.mentions(var),
            OrdExpr::Max(a, b) => a.mentions(var) || b.mentions(var),
            OrdExpr::Lim(v, e) => v != var && e.mentions(var),
        }
    }

    pub fn free_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut Vec<String>) {
        match self {
            OrdExpr::Var(v) => {
                if !bound.contains(v) && !out.contains(v) {
                    out.push(v.clone());
                }
            }
            OrdExpr::Zero | OrdExpr::Nat(_) | OrdExpr::Omega => {}
            OrdExpr::Succ(e) => e.collect_free(bound, out),
            OrdExpr::Max(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            OrdExpr::Lim(v, e) => {
                bound.push(v.clone());
                e.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Replace free occurrences of `var` by `by`. `by` must be closed or
    /// only mention variables that no binder in `self` captures.
    pub fn subst(&self, var: &str, by: &OrdExpr) -> OrdExpr {
        match self {
            OrdExpr::Var(v) if v == var => by.clone(),
            OrdExpr::Zero | OrdExpr::Nat(_) | OrdExpr::Omega | OrdExpr::Var(_) => self.clone(),
            OrdExpr::Succ(e) => OrdExpr::succ(e.subst(var, by)),
            OrdExpr::Max(a, b) => OrdExpr::max(a.subst(var, by), b.subst(var, by)),
            OrdExpr::Lim(v, e) if v == var => self.clone(),
            OrdExpr::Lim(v, e) => OrdExpr::lim(v, e.subst(var, by)),
        }
    }

    /// The value of a limit-free, variable-free expression.
    pub fn finite_value(&self) -> Option<u64> {
        match self {
            OrdExpr::Zero => Some(0),
            OrdExpr::Nat(n) => Some(*n),
            OrdExpr::Succ(e) => e.finite_value()?.checked_add(1),
            OrdExpr::Max(a, b) => Some(a.finite_value()?.max(b.finite_value()?)),
            OrdExpr::Lim(..) | OrdExpr::Var(_) | OrdExpr::Omega => None,
        }
    }
}

impl fmt::Display for OrdExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrdExpr::Zero => f.write_str("Z"),
            OrdExpr::Succ(e) => write!(f, "S {e}"),
            OrdExpr::Max(a, b) => write!(f, "max({a}, {b})"),
            OrdExpr::Lim(v, e) => write!(f, "lim {v}. {e}"),
            OrdExpr::Var(v) => f.write_str(v),
            OrdExpr::Nat(n) => write!(f, "{n}"),
            OrdExpr::Omega => f.write_str("omega"),
        }
    }
}

pub fn print(e: &OrdExpr) -> String {
    e.to_string()
}

pub fn parse(src: &str) -> Result<OrdExpr, ParseError> {
    let mut p = Parser { src, pos: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < src.len() {
        return Err(p.error(&["end of input"]));
    }
    Ok(e)
}

pub fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
        && !KEYWORDS.contains(&s)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn found(&self) -> String {
        match self.peek() {
            None => "end of input".into(),
            Some(_) => {
                let word: String = self.src[self.pos..]
                    .chars()
                    .take_while(|c| !c.is_whitespace())
                    .take(12)
                    .collect();
                format!("'{word}'")
            }
        }
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        ParseError {
            pos: self.pos,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.found(),
        }
    }

    fn punct(&mut self, c: char) -> Result<(), ParseError> {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            Err(self.error(&[&format!("'{c}'")]))
        }
    }

    /// An identifier or keyword.
    fn word(&mut self) -> Option<&str> {
        let rest = &self.src[self.pos..];
        let len = rest
            .char_indices()
            .find(|&(i, c)| {
                !(c.is_ascii_alphanumeric() || c == '_' || (i > 0 && c == '\''))
                    || (i == 0 && c.is_ascii_digit())
            })
            .map_or(rest.len(), |(i, _)| i);
        if len == 0 {
            return None;
        }
        self.pos += len;
        Some(&rest[..len])
    }

    fn expr(&mut self) -> Result<OrdExpr, ParseError> {
        const START: [&str; 7] = ["'Z'", "'S'", "'max'", "'lim'", "'omega'", "a numeral", "a variable"];
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            Some(c) if c.is_ascii_digit() => {
                let digits: &str = {
                    let rest = &self.src[self.pos..];
                    let n = rest.find(|c: char| !c.is_ascii_digit()).unwrap_or(rest.len());
                    &rest[..n]
                };
                let n = digits.parse::<u64>().map_err(|_| ParseError {
                    pos: start,
                    expected: vec!["a numeral that fits in 64 bits".into()],
                    found: format!("'{digits}'"),
                })?;
                self.pos += digits.len();
                Ok(OrdExpr::Nat(n))
            }
            _ => {
                let Some(w) = self.word() else {
                    return Err(self.error(&START));
                };
                match w {
                    "Z" => Ok(OrdExpr::Zero),
                    "omega" => Ok(OrdExpr::Omega),
                    "S" => Ok(OrdExpr::succ(self.expr()?)),
                    "max" => {
                        self.punct('(')?;
                        let a = self.expr()?;
                        self.punct(',')?;
                        let b = self.expr()?;
                        self.punct(')')?;
                        Ok(OrdExpr::max(a, b))
                    }
                    "lim" => {
                        self.skip_ws();
                        let at = self.pos;
                        let v = match self.word() {
                            Some(v) if is_ident(v) => v.to_string(),
                            _ => {
                                self.pos = at;
                                return Err(self.error(&["a variable"]));
                            }
                        };
                        self.punct('.')?;
                        Ok(OrdExpr::Lim(v, Box::new(self.expr()?)))
                    }
                    v => Ok(OrdExpr::Var(v.to_string())),
                }
            }
        }
    }
}
