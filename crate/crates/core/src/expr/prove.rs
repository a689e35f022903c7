//! Comparison of expressions by a bounded syntactic prover, a line-oriented
//! text format for its derivations, and a checker that rebuilds a derivation
//! against elaborated endpoints and audits it.
//!
//! Derivation steps work on SMB-trees: `cocone` places the left side under
//! the branch of a limit and `limiting` bounds a limit by bounding every
//! branch. A `limiting` body is schematic in its variable and is rebuilt for
//! whichever index the audit asks about.
//!
//! ```text
//! smbderiv/1
//! goal lt
//! cocone 3
//!   fin
//! ```

use std::fmt::{self, Write as _};
use std::sync::Arc;

use super::elab::{canonical, elab_in, family_in};
use super::OrdExpr;
use crate::audit::{audit, AuditBudget, AuditReport, Verdict};
use crate::deriv::{le_refl, LeDeriv};
use crate::error::{Result, SmbError};
use crate::index::IndexElem;
use crate::join::Side;
use crate::smb::{smb_le_least, smb_le_trans, smb_le_upper_bound, smb_max_bound, smb_max_lub, SmbLe};
use crate::tree::{Same, Tree};

pub const HEADER: &str = "smbderiv/1";

/// A natural number, possibly offset from a bound variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IndexExpr {
    Nat(u64),
    Var(String, u64),
}

impl IndexExpr {
    fn to_expr(&self) -> OrdExpr {
        match self {
            IndexExpr::Nat(n) => OrdExpr::Nat(*n),
            IndexExpr::Var(v, c) => (0..*c).fold(OrdExpr::var(v), |e, _| OrdExpr::succ(e)),
        }
    }

    fn eval(&self, env: &[(String, u64)]) -> Result<u64> {
        match self {
            IndexExpr::Nat(n) => Ok(*n),
            IndexExpr::Var(v, c) => env
                .iter()
                .rev()
                .find(|(name, _)| name == v)
                .map(|(_, n)| n + c)
                .ok_or_else(|| SmbError::UnboundVariable(v.clone())),
        }
    }
}

impl fmt::Display for IndexExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexExpr::Nat(n) => write!(f, "{n}"),
            IndexExpr::Var(v, 0) => f.write_str(v),
            IndexExpr::Var(v, c) => write!(f, "{v}+{c}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    /// `Z ≤ t`.
    Zero,
    /// Both sides are the same tree.
    Refl,
    /// Both sides are finite and in order.
    Fin,
    /// `S a ≤ S b` from `a ≤ b`.
    Suc(Box<Step>),
    /// `t ≤ lim n. e` from `t ≤ e[k/n]`.
    Cocone(IndexExpr, Box<Step>),
    /// `lim n. e ≤ t` from `e[x/n] ≤ t` for every `x`.
    Limiting(String, Box<Step>),
    /// `t ≤ max(a, b)` from `t ≤ a`.
    MaxL(Box<Step>),
    /// `t ≤ max(a, b)` from `t ≤ b`.
    MaxR(Box<Step>),
    /// `max(a, b) ≤ t` from `a ≤ t` and `b ≤ t`.
    MaxLub(Box<Step>, Box<Step>),
}

impl Step {
    fn write_into(&self, depth: usize, out: &mut String) {
        let pad = "  ".repeat(depth);
        let kids: Vec<&Step> = match self {
            Step::Zero => {
                let _ = writeln!(out, "{pad}zero");
                vec![]
            }
            Step::Refl => {
                let _ = writeln!(out, "{pad}refl");
                vec![]
            }
            Step::Fin => {
                let _ = writeln!(out, "{pad}fin");
                vec![]
            }
            Step::Suc(s) => {
                let _ = writeln!(out, "{pad}suc");
                vec![s]
            }
            Step::Cocone(i, s) => {
                let _ = writeln!(out, "{pad}cocone {i}");
                vec![s]
            }
            Step::Limiting(x, s) => {
                let _ = writeln!(out, "{pad}limiting {x}");
                vec![s]
            }
            Step::MaxL(s) => {
                let _ = writeln!(out, "{pad}max-l");
                vec![s]
            }
            Step::MaxR(s) => {
                let _ = writeln!(out, "{pad}max-r");
                vec![s]
            }
            Step::MaxLub(a, b) => {
                let _ = writeln!(out, "{pad}max-lub");
                vec![a, b]
            }
        };
        for k in kids {
            k.write_into(depth + 1, out);
        }
    }
}

/// A serialized derivation of `a ≤ b`, or of `S a ≤ b` when `strict`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DerivText {
    pub strict: bool,
    pub root: Step,
}

impl DerivText {
    pub fn to_text(&self) -> String {
        let mut out = format!("{HEADER}\ngoal {}\n", if self.strict { "lt" } else { "le" });
        self.root.write_into(0, &mut out);
        out
    }

    pub fn from_text(text: &str) -> Result<DerivText> {
        let bad = |line: usize, msg: &str| SmbError::Deserialize(format!("line {line}: {msg}"));
        let lines: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim_end()))
            .filter(|(_, l)| !l.is_empty())
            .collect();
        match lines.first() {
            Some((_, l)) if *l == HEADER => {}
            Some((n, _)) => return Err(bad(*n, &format!("expected header {HEADER}"))),
            None => return Err(bad(1, "empty input")),
        }
        let strict = match lines.get(1) {
            Some((_, "goal le")) => false,
            Some((_, "goal lt")) => true,
            Some((n, _)) => return Err(bad(*n, "expected 'goal le' or 'goal lt'")),
            None => return Err(bad(2, "missing goal line")),
        };
        let mut at = 2;
        let root = parse_step(&lines, &mut at, 0)?;
        if let Some((n, _)) = lines.get(at) {
            return Err(bad(*n, "trailing lines after the derivation"));
        }
        Ok(DerivText { strict, root })
    }
}

fn parse_step(lines: &[(usize, &str)], at: &mut usize, depth: usize) -> Result<Step> {
    let Some(&(n, line)) = lines.get(*at) else {
        return Err(SmbError::Deserialize("derivation ends early".into()));
    };
    let bad = |msg: String| SmbError::Deserialize(format!("line {n}: {msg}"));
    let indent = line.len() - line.trim_start_matches(' ').len();
    if indent != 2 * depth {
        return Err(bad(format!("expected indentation {}, found {indent}", 2 * depth)));
    }
    *at += 1;
    let mut words = line.split_whitespace();
    let tag = words.next().unwrap_or("");
    let arg = words.next();
    if words.next().is_some() {
        return Err(bad("too many fields".into()));
    }
    if arg.is_some() && !matches!(tag, "cocone" | "limiting") {
        return Err(bad(format!("{tag} takes no argument")));
    }
    let child = |at: &mut usize| parse_step(lines, at, depth + 1).map(Box::new);
    match tag {
        "zero" => Ok(Step::Zero),
        "refl" => Ok(Step::Refl),
        "fin" => Ok(Step::Fin),
        "suc" => Ok(Step::Suc(child(at)?)),
        "max-l" => Ok(Step::MaxL(child(at)?)),
        "max-r" => Ok(Step::MaxR(child(at)?)),
        "max-lub" => {
            let a = child(at)?;
            Ok(Step::MaxLub(a, child(at)?))
        }
        "cocone" => {
            let i = parse_index(arg.ok_or_else(|| bad("cocone needs an index".into()))?)
                .ok_or_else(|| bad(format!("bad index {}", arg.unwrap_or(""))))?;
            Ok(Step::Cocone(i, child(at)?))
        }
        "limiting" => {
            let x = arg.ok_or_else(|| bad("limiting needs a variable".into()))?;
            if !super::is_ident(x) {
                return Err(bad(format!("bad variable {x}")));
            }
            Ok(Step::Limiting(x.to_string(), child(at)?))
        }
        other => Err(bad(format!("unknown step '{other}'"))),
    }
}

fn parse_index(s: &str) -> Option<IndexExpr> {
    if let Ok(n) = s.parse::<u64>() {
        return Some(IndexExpr::Nat(n));
    }
    let (v, c) = match s.split_once('+') {
        Some((v, c)) => (v, c.parse::<u64>().ok()?),
        None => (s, 0),
    };
    super::is_ident(v).then(|| IndexExpr::Var(v.to_string(), c))
}

// ---------------------------------------------------------------------------
// Proving

fn pred(e: &OrdExpr) -> Option<OrdExpr> {
    match e {
        OrdExpr::Succ(a) => Some((**a).clone()),
        OrdExpr::Nat(n) if *n > 0 => Some(OrdExpr::Nat(n - 1)),
        _ => None,
    }
}

/// `S^c Z` or `S^c x`, as `(x, c)`.
fn linear(e: &OrdExpr) -> Option<(Option<String>, u64)> {
    match e {
        OrdExpr::Zero => Some((None, 0)),
        OrdExpr::Nat(n) => Some((None, *n)),
        OrdExpr::Var(v) => Some((Some(v.clone()), 0)),
        OrdExpr::Succ(a) => linear(a).and_then(|(v, c)| Some((v, c.checked_add(1)?))),
        _ => None,
    }
}

/// Whether `l ≤ r` for every value of the variables.
fn linear_le(l: &(Option<String>, u64), r: &(Option<String>, u64)) -> bool {
    match (&l.0, &r.0) {
        (None, _) => l.1 <= r.1,
        (Some(x), Some(y)) => x == y && l.1 <= r.1,
        (Some(_), None) => false,
    }
}

fn limit_parts(e: &OrdExpr) -> Option<(String, OrdExpr)> {
    match e {
        OrdExpr::Lim(v, body) => Some((v.clone(), (**body).clone())),
        OrdExpr::Omega => Some(("n".into(), OrdExpr::var("n"))),
        _ => None,
    }
}

fn all_names(e: &OrdExpr, out: &mut Vec<String>) {
    match e {
        OrdExpr::Var(v) => out.push(v.clone()),
        OrdExpr::Lim(v, body) => {
            out.push(v.clone());
            all_names(body, out);
        }
        OrdExpr::Succ(a) => all_names(a, out),
        OrdExpr::Max(a, b) => {
            all_names(a, out);
            all_names(b, out);
        }
        OrdExpr::Zero | OrdExpr::Nat(_) | OrdExpr::Omega => {}
    }
}

/// Index candidates for placing `l` under a branch.
fn candidates(l: &OrdExpr) -> Vec<IndexExpr> {
    // Variables bound inside `l` mean nothing at the cocone, so skip them.
    fn atoms(e: &OrdExpr, bound: &mut Vec<String>, out: &mut Vec<IndexExpr>) {
        if let Some((v, c)) = linear(e) {
            match v {
                Some(v) if bound.contains(&v) => {}
                Some(v) => out.push(IndexExpr::Var(v, c)),
                None => out.push(IndexExpr::Nat(c)),
            }
            return;
        }
        match e {
            OrdExpr::Succ(a) => atoms(a, bound, out),
            OrdExpr::Lim(v, a) => {
                bound.push(v.clone());
                atoms(a, bound, out);
                bound.pop();
            }
            OrdExpr::Max(a, b) => {
                atoms(a, bound, out);
                atoms(b, bound, out);
            }
            _ => {}
        }
    }
    let mut out = Vec::new();
    atoms(l, &mut Vec::new(), &mut out);
    out.extend((0..3).map(IndexExpr::Nat));
    let mut uniq: Vec<IndexExpr> = Vec::new();
    for i in out {
        if !uniq.contains(&i) {
            uniq.push(i);
        }
    }
    uniq.truncate(8);
    uniq
}

struct Prover {
    fuel: u64,
    names: Vec<String>,
    fresh: u64,
}

impl Prover {
    fn fresh(&mut self, hint: &str) -> String {
        if !self.names.iter().any(|n| n == hint) {
            self.names.push(hint.to_string());
            return hint.to_string();
        }
        loop {
            self.fresh += 1;
            let name = format!("{hint}{}", self.fresh);
            if !self.names.contains(&name) {
                self.names.push(name.clone());
                return name;
            }
        }
    }

    fn prove(&mut self, l: &OrdExpr, r: &OrdExpr) -> Option<Step> {
        if self.fuel == 0 {
            return None;
        }
        self.fuel -= 1;
        if matches!(l, OrdExpr::Zero | OrdExpr::Nat(0)) {
            return Some(Step::Zero);
        }
        if canonical(l, &Vec::new()) == canonical(r, &Vec::new()) {
            return Some(Step::Refl);
        }
        if let (Some(a), Some(b)) = (linear(l), linear(r)) {
            return linear_le(&a, &b).then_some(Step::Fin);
        }
        if let OrdExpr::Max(a, b) = l {
            let sa = self.prove(a, r)?;
            let sb = self.prove(b, r)?;
            return Some(Step::MaxLub(Box::new(sa), Box::new(sb)));
        }
        if let Some((v, body)) = limit_parts(l) {
            let x = self.fresh(&v);
            let inst = body.subst(&v, &OrdExpr::var(&x));
            return self.prove(&inst, r).map(|s| Step::Limiting(x, Box::new(s)));
        }
        if let (Some(a), Some(b)) = (pred(l), pred(r)) {
            return self.prove(&a, &b).map(|s| Step::Suc(Box::new(s)));
        }
        if let OrdExpr::Max(a, b) = r {
            if let Some(s) = self.prove(l, a) {
                return Some(Step::MaxL(Box::new(s)));
            }
            return self.prove(l, b).map(|s| Step::MaxR(Box::new(s)));
        }
        if let Some((v, body)) = limit_parts(r) {
            for i in candidates(l) {
                if let Some(s) = self.prove(l, &body.subst(&v, &i.to_expr())) {
                    return Some(Step::Cocone(i, Box::new(s)));
                }
                if self.fuel == 0 {
                    return None;
                }
            }
        }
        None
    }
}

/// Search for a derivation of `l ≤ r`, visiting at most `budget` goals.
pub fn prove_le(l: &OrdExpr, r: &OrdExpr, budget: u64) -> Option<Step> {
    let mut names = Vec::new();
    all_names(l, &mut names);
    all_names(r, &mut names);
    let mut p = Prover {
        fuel: budget,
        names,
        fresh: 0,
    };
    p.prove(l, r)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Comparison {
    ProvedLt(DerivText),
    ProvedLe(DerivText),
    /// No derivation found within the budget. Not a disproof.
    Unknown,
}

/// Try `a < b`, then `a ≤ b`.
pub fn compare(a: &OrdExpr, b: &OrdExpr, budget: u64) -> Comparison {
    if let Some(root) = prove_le(&OrdExpr::succ(a.clone()), b, budget) {
        return Comparison::ProvedLt(DerivText { strict: true, root });
    }
    match prove_le(a, b, budget) {
        Some(root) => Comparison::ProvedLe(DerivText { strict: false, root }),
        None => Comparison::Unknown,
    }
}

// ---------------------------------------------------------------------------
// Checking

type Env = Vec<(String, u64)>;

fn mismatch(step: &str, l: &OrdExpr, r: &OrdExpr) -> SmbError {
    SmbError::InvalidComposition(format!("{step} does not apply to {l} ≤ {r}"))
}

fn fin_deriv(lo: &Tree, hi: &Tree) -> Option<LeDeriv> {
    match (lo.as_succ(), hi.as_succ()) {
        _ if lo.is_zero() => Some(LeDeriv::zero(hi.clone())),
        (Some(a), Some(b)) => Some(LeDeriv::suc_mono(fin_deriv(a, b)?).with_endpoints(lo.clone(), hi.clone())),
        _ => None,
    }
}

/// Rebuild `step` as a derivation of `l ≤ r`. Variables of the derivation
/// are bound in `env`; `l` and `r` are closed.
fn build(step: &Step, l: &OrdExpr, r: &OrdExpr, env: &Env) -> Result<SmbLe> {
    let el = |e: &OrdExpr| elab_in(e, &Vec::new());
    let bad = |name: &str| mismatch(name, l, r);
    match step {
        Step::Zero => {
            let tl = el(l)?;
            if !tl.raw().is_zero() {
                return Err(bad("zero"));
            }
            Ok(SmbLe::from_deriv(LeDeriv::zero(el(r)?.raw().clone())))
        }
        Step::Refl => {
            let (tl, tr) = (el(l)?, el(r)?);
            if Tree::same(tl.raw(), tr.raw()) != Same::Yes {
                return Err(bad("refl"));
            }
            Ok(SmbLe::from_deriv(le_refl(tl.raw()).with_endpoints(tl.raw().clone(), tr.raw().clone())))
        }
        Step::Fin => {
            let (a, b) = (l.finite_value().ok_or_else(|| bad("fin"))?, r.finite_value().ok_or_else(|| bad("fin"))?);
            if a > b {
                return Err(bad("fin"));
            }
            let (tl, tr) = (el(l)?, el(r)?);
            fin_deriv(tl.raw(), tr.raw()).map(SmbLe::from_deriv).ok_or_else(|| bad("fin"))
        }
        Step::Suc(s) => {
            let (a, b) = (pred(l).ok_or_else(|| bad("suc"))?, pred(r).ok_or_else(|| bad("suc"))?);
            let inner = build(s, &a, &b, env)?.into_deriv();
            let (tl, tr) = (el(l)?, el(r)?);
            Ok(SmbLe::from_deriv(LeDeriv::suc_mono(inner).with_endpoints(tl.raw().clone(), tr.raw().clone())))
        }
        Step::MaxL(s) | Step::MaxR(s) => {
            let OrdExpr::Max(a, b) = r else { return Err(bad("max bound")) };
            let (side, part) = match step {
                Step::MaxL(_) => (Side::L, a),
                _ => (Side::R, b),
            };
            smb_le_trans(&build(s, l, part, env)?, &smb_max_bound(side, &el(a)?, &el(b)?)?)
        }
        Step::MaxLub(s1, s2) => {
            let OrdExpr::Max(a, b) = l else { return Err(bad("max-lub")) };
            smb_max_lub(&build(s1, a, r, env)?, &build(s2, b, r, env)?, &el(r)?)
        }
        Step::Cocone(i, s) => {
            let (v, body) = limit_parts(r).ok_or_else(|| bad("cocone"))?;
            let k = i.eval(env)?;
            let d = build(s, l, &body.subst(&v, &OrdExpr::Nat(k)), env)?;
            smb_le_trans(&d, &smb_le_upper_bound(&family_in(r, &Vec::new())?, &IndexElem::Nat(k))?)
        }
        Step::Limiting(x, s) => {
            let (v, body) = limit_parts(l).ok_or_else(|| bad("limiting"))?;
            let fam = family_in(l, &Vec::new())?;
            let ctx = Arc::new((x.clone(), v, body, (**s).clone(), r.clone(), env.clone()));
            smb_le_least(&fam, &el(r)?, move |k| {
                let (x, v, body, s, r, env) = &*ctx;
                let IndexElem::Nat(n) = k else {
                    return Err(SmbError::InvalidComposition(format!("{k} is not a natural")));
                };
                let mut inner = env.clone();
                inner.push((x.clone(), *n));
                build(s, &body.subst(v, &OrdExpr::Nat(*n)), r, &inner)
            })
        }
    }
}

/// Rebuild the derivation in `text` against `a` and `b` and audit it.
/// Malformed text is an error; a derivation that does not fit the endpoints
/// is a failed report.
pub fn check(text: &str, a: &OrdExpr, b: &OrdExpr, budget: AuditBudget) -> Result<AuditReport> {
    let d = DerivText::from_text(text)?;
    elab_in(a, &Vec::new())?;
    elab_in(b, &Vec::new())?;
    let lo = if d.strict { OrdExpr::succ(a.clone()) } else { a.clone() };
    match build(&d.root, &lo, b, &Vec::new()) {
        Ok(le) => Ok(audit(le.deriv(), budget)),
        Err(e) => Ok(AuditReport {
            verdict: Verdict::Fail {
                path: "root".into(),
                reason: e.to_string(),
            },
            nodes_visited: 0,
            samples_per_limiting: budget.samples_per_limiting,
            seed: budget.seed,
            limiting_nodes: 0,
            branches_checked: 0,
            unresolved_comparisons: 0,
            sampled: Vec::new(),
        }),
    }
}
