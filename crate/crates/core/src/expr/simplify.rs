//! Rewriting with the join and successor laws, each step backed by an
//! equivalence that can be built on demand.
//!
//! Joins are kept right-nested and sorted by canonical text, so idempotence
//! only has to look at neighbours. Every rule either shrinks the expression
//! or, for the reordering rules, removes an out-of-order pair, which bounds
//! the number of steps.

use std::sync::Arc;

use super::elab::{canonical, elab_in, family_in};
use super::OrdExpr;
use crate::error::{Result, SmbError};
use crate::index::IndexElem;
use crate::laws::{
    join_assoc, join_commut, join_idem, lim_cong, max_cong, succ_absorb, succ_cong, succ_dist,
    sup_const_of, Equiv,
};

type Env = Vec<(String, u64)>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rewrite {
    /// `S Z → 1`, `S n → n+1`, `0 → Z`.
    Numeral,
    /// `max(x, Z) → x`.
    MaxZeroR,
    /// `max(Z, x) → x`.
    MaxZeroL,
    /// `max(max(a, b), c) → max(a, max(b, c))`.
    Assoc,
    /// `max(a, b) → max(b, a)` when `b` sorts first.
    Commut,
    /// `max(a, max(b, c)) → max(b, max(a, c))` when `b` sorts first.
    LeftCommut,
    /// `max(a, a) → a`.
    Idem,
    /// `max(a, max(a, c)) → max(a, c)`.
    IdemLeft,
    /// `max(S a, S b) → S max(a, b)`.
    SuccSucc,
    /// `max(x, S x) → S x`.
    Absorb,
    /// `max(S x, x) → S x`.
    AbsorbRev,
    /// `lim n. e → e` when `n` does not occur in `e`.
    ConstLim,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pos {
    Succ,
    MaxL,
    MaxR,
    LimBody,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RewriteStep {
    pub before: OrdExpr,
    pub after: OrdExpr,
    pub rule: Rewrite,
    pub path: Vec<Pos>,
}

fn key(e: &OrdExpr) -> String {
    canonical(e, &Vec::new())
}

fn alpha_eq(a: &OrdExpr, b: &OrdExpr) -> bool {
    key(a) == key(b)
}

/// The predecessor, for expressions that are syntactically successors.
fn pred(e: &OrdExpr) -> Option<OrdExpr> {
    match e {
        OrdExpr::Succ(a) => Some((**a).clone()),
        OrdExpr::Nat(n) if *n > 0 => Some(OrdExpr::Nat(n - 1)),
        _ => None,
    }
}

fn is_zero(e: &OrdExpr) -> bool {
    matches!(e, OrdExpr::Zero | OrdExpr::Nat(0))
}

fn root_rewrite(e: &OrdExpr) -> Option<(Rewrite, OrdExpr)> {
    use OrdExpr::*;
    match e {
        Nat(0) => Some((Rewrite::Numeral, Zero)),
        Succ(a) => match &**a {
            Zero => Some((Rewrite::Numeral, Nat(1))),
            Nat(n) => n.checked_add(1).map(|m| (Rewrite::Numeral, Nat(m))),
            _ => None,
        },
        Lim(v, body) if !body.mentions(v) => Some((Rewrite::ConstLim, (**body).clone())),
        Max(a, b) => {
            if is_zero(b) {
                return Some((Rewrite::MaxZeroR, (**a).clone()));
            }
            if is_zero(a) {
                return Some((Rewrite::MaxZeroL, (**b).clone()));
            }
            if let Max(x, y) = &**a {
                return Some((Rewrite::Assoc, OrdExpr::max((**x).clone(), OrdExpr::max((**y).clone(), (**b).clone()))));
            }
            if alpha_eq(a, b) {
                return Some((Rewrite::Idem, (**a).clone()));
            }
            if let (Some(x), Some(y)) = (pred(a), pred(b)) {
                return Some((Rewrite::SuccSucc, OrdExpr::succ(OrdExpr::max(x, y))));
            }
            if pred(b).is_some_and(|p| alpha_eq(&p, a)) {
                return Some((Rewrite::Absorb, (**b).clone()));
            }
            if pred(a).is_some_and(|p| alpha_eq(&p, b)) {
                return Some((Rewrite::AbsorbRev, (**a).clone()));
            }
            match &**b {
                Max(c, d) => {
                    if alpha_eq(a, c) {
                        return Some((Rewrite::IdemLeft, (**b).clone()));
                    }
                    if key(c) < key(a) {
                        return Some((
                            Rewrite::LeftCommut,
                            OrdExpr::max((**c).clone(), OrdExpr::max((**a).clone(), (**d).clone())),
                        ));
                    }
                    None
                }
                _ if key(b) < key(a) => Some((Rewrite::Commut, OrdExpr::max((**b).clone(), (**a).clone()))),
                _ => None,
            }
        }
        _ => None,
    }
}

/// The outermost, leftmost redex: its path, rule and replacement.
fn find_redex(e: &OrdExpr) -> Option<(Vec<Pos>, Rewrite, OrdExpr)> {
    if let Some((rule, new)) = root_rewrite(e) {
        return Some((Vec::new(), rule, new));
    }
    let (pos, (mut path, rule, new)) = match e {
        OrdExpr::Succ(a) => find_redex(a).map(|r| (Pos::Succ, r)),
        OrdExpr::Max(a, b) => find_redex(a)
            .map(|r| (Pos::MaxL, r))
            .or_else(|| find_redex(b).map(|r| (Pos::MaxR, r))),
        OrdExpr::Lim(_, body) => find_redex(body).map(|r| (Pos::LimBody, r)),
        _ => None,
    }?;
    path.insert(0, pos);
    Some((path, rule, new))
}

fn replace_at(e: &OrdExpr, path: &[Pos], new: OrdExpr) -> OrdExpr {
    let Some((first, rest)) = path.split_first() else {
        return new;
    };
    match (first, e) {
        (Pos::Succ, OrdExpr::Succ(a)) => OrdExpr::succ(replace_at(a, rest, new)),
        (Pos::MaxL, OrdExpr::Max(a, b)) => OrdExpr::max(replace_at(a, rest, new), (**b).clone()),
        (Pos::MaxR, OrdExpr::Max(a, b)) => OrdExpr::max((**a).clone(), replace_at(b, rest, new)),
        (Pos::LimBody, OrdExpr::Lim(v, body)) => OrdExpr::lim(v, replace_at(body, rest, new)),
        _ => unreachable!("paths come from find_redex"),
    }
}

fn subterm<'a>(e: &'a OrdExpr, path: &[Pos]) -> &'a OrdExpr {
    path.iter().fold(e, |e, p| match (p, e) {
        (Pos::Succ, OrdExpr::Succ(a)) => a,
        (Pos::MaxL, OrdExpr::Max(a, _)) => a,
        (Pos::MaxR, OrdExpr::Max(_, b)) => b,
        (Pos::LimBody, OrdExpr::Lim(_, body)) => body,
        _ => unreachable!("paths come from find_redex"),
    })
}

/// Every rewrite step from `e` to its normal form.
pub fn simplify_steps(e: &OrdExpr) -> Vec<RewriteStep> {
    let mut steps = Vec::new();
    let mut cur = e.clone();
    while let Some((path, rule, new)) = find_redex(&cur) {
        let after = replace_at(&cur, &path, new);
        steps.push(RewriteStep {
            before: cur,
            after: after.clone(),
            rule,
            path,
        });
        cur = after;
    }
    steps
}

pub fn simplify(e: &OrdExpr) -> OrdExpr {
    simplify_steps(e).pop().map_or_else(|| e.clone(), |s| s.after)
}

/// The equivalence between the elaborations of `step.before` and
/// `step.after`.
pub fn certify(step: &RewriteStep) -> Result<Equiv> {
    if !step.before.is_closed() {
        return Err(SmbError::UnboundVariable(step.before.free_vars().remove(0)));
    }
    cert_at(&step.before, &step.path, step.rule, &Vec::new())
}

fn cert_at(e: &OrdExpr, path: &[Pos], rule: Rewrite, env: &Env) -> Result<Equiv> {
    let Some((first, rest)) = path.split_first() else {
        return local_cert(rule, e, env);
    };
    match (first, e) {
        (Pos::Succ, OrdExpr::Succ(a)) => Ok(succ_cong(&cert_at(a, rest, rule, env)?)),
        (Pos::MaxL, OrdExpr::Max(a, b)) => {
            max_cong(&cert_at(a, rest, rule, env)?, &Equiv::refl(&elab_in(b, env)?))
        }
        (Pos::MaxR, OrdExpr::Max(a, b)) => {
            max_cong(&Equiv::refl(&elab_in(a, env)?), &cert_at(b, rest, rule, env)?)
        }
        (Pos::LimBody, OrdExpr::Lim(v, body)) => {
            let after = replace_at(e, path, apply_local(rule, subterm(e, path))?);
            let (f, g) = (family_in(e, env)?, family_in(&after, env)?);
            let ctx = Arc::new((v.clone(), (**body).clone(), rest.to_vec(), env.clone()));
            lim_cong(&f, &g, move |k| {
                let (v, body, rest, env) = &*ctx;
                let IndexElem::Nat(n) = k else {
                    return Err(SmbError::InvalidComposition(format!("{k} is not a natural")));
                };
                let mut inner = env.clone();
                inner.push((v.clone(), *n));
                cert_at(body, rest, rule, &inner)
            })
        }
        _ => Err(SmbError::InvalidComposition("rewrite path does not fit the expression".into())),
    }
}

fn apply_local(rule: Rewrite, e: &OrdExpr) -> Result<OrdExpr> {
    match root_rewrite(e) {
        Some((r, new)) if r == rule => Ok(new),
        _ => Err(SmbError::InvalidComposition(format!("{rule:?} does not apply to {e}"))),
    }
}

fn local_cert(rule: Rewrite, e: &OrdExpr, env: &Env) -> Result<Equiv> {
    let el = |x: &OrdExpr| elab_in(x, env);
    let bad = || SmbError::InvalidComposition(format!("{rule:?} does not apply to {e}"));
    let (a, b) = match e {
        OrdExpr::Max(a, b) => (&**a, &**b),
        _ => {
            return match rule {
                // Numerals and their successor spellings elaborate to the
                // same tree; a constant limit is the constant.
                Rewrite::Numeral => Ok(Equiv::refl(&el(e)?)),
                Rewrite::ConstLim => match e {
                    OrdExpr::Lim(_, body) => sup_const_of(&family_in(e, env)?, &IndexElem::Nat(0), &el(body)?),
                    _ => Err(bad()),
                },
                _ => Err(bad()),
            };
        }
    };
    match rule {
        // `ind_max` with a Z operand returns the other operand.
        Rewrite::MaxZeroR | Rewrite::MaxZeroL => Ok(Equiv::refl(&el(e)?)),
        Rewrite::Assoc => {
            let OrdExpr::Max(x, y) = a else { return Err(bad()) };
            Ok(join_assoc(&el(x)?, &el(y)?, &el(b)?)?.symm())
        }
        Rewrite::Commut => join_commut(&el(a)?, &el(b)?),
        Rewrite::LeftCommut => {
            let OrdExpr::Max(c, d) = b else { return Err(bad()) };
            let (ta, tc, td) = (el(a)?, el(c)?, el(d)?);
            let swapped = max_cong(&join_commut(&ta, &tc)?, &Equiv::refl(&td))?;
            join_assoc(&ta, &tc, &td)?
                .trans(&swapped)?
                .trans(&join_assoc(&tc, &ta, &td)?.symm())
        }
        Rewrite::Idem => join_idem(&el(a)?),
        Rewrite::IdemLeft => {
            let OrdExpr::Max(_, d) = b else { return Err(bad()) };
            let (ta, td) = (el(a)?, el(d)?);
            join_assoc(&ta, &ta, &td)?.trans(&max_cong(&join_idem(&ta)?, &Equiv::refl(&td))?)
        }
        Rewrite::SuccSucc => {
            let (x, y) = (pred(a).ok_or_else(bad)?, pred(b).ok_or_else(bad)?);
            Ok(succ_dist(&el(&x)?, &el(&y)?)?.symm())
        }
        Rewrite::Absorb => succ_absorb(&el(a)?),
        Rewrite::AbsorbRev => join_commut(&el(a)?, &el(b)?)?.trans(&succ_absorb(&el(b)?)?),
        Rewrite::Numeral | Rewrite::ConstLim => Err(bad()),
    }
}
