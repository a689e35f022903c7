//! Binary joins on raw trees.
//!
//! `lim_max` is the limit of the sequence `t1, t2, t2, ...`: a least upper
//! bound, but successor does not distribute over it. `ind_max` recurses on
//! both operands so that `ind_max (S a) (S b)` is literally `S (ind_max a b)`,
//! which makes it strictly monotone; on limits it is not idempotent.
//! [`ind_max_inf`] iterates `ind_max` transfinitely to force idempotence.

use std::cell::RefCell;
use rustc_hash::FxHashMap;

use crate::deriv::{le_refl, le_trans, LeDeriv, LtWitness, Rule};
use crate::error::{Result, SmbError};
use crate::index::{IndexElem, NatIso};
use crate::tree::{fingerprint, nlim_with, Same, Tree, View};

fn mismatch(msg: impl Into<String>) -> SmbError {
    SmbError::InvalidComposition(msg.into())
}

fn expect_same(a: &Tree, b: &Tree, what: &str) -> Result<()> {
    if Tree::same(a, b) == Same::No {
        return Err(mismatch(format!("{what}: {a:?} is not {b:?}")));
    }
    Ok(())
}

/// `t ≤ t`, stated between two trees that are the same value.
fn refl_between(a: &Tree, b: &Tree) -> LeDeriv {
    le_refl(a).with_endpoints(a.clone(), b.clone())
}

// ---------------------------------------------------------------------------
// limMax

/// `Lim (n ↦ if n = 0 then t1 else t2)` over the naturals read through `iso`.
pub fn lim_max_in(iso: &NatIso, t1: &Tree, t2: &Tree) -> Tree {
    let (a, b) = (t1.clone(), t2.clone());
    nlim_with(iso, fingerprint("limmax", &[t1.fp(), t2.fp()]), move |n| {
        if n == 0 {
            a.clone()
        } else {
            b.clone()
        }
    })
}

pub fn lim_max(t1: &Tree, t2: &Tree) -> Tree {
    lim_max_in(&NatIso::nat(), t1, t2)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    L,
    R,
}

/// `t1 ≤ lim_max t1 t2` or `t2 ≤ lim_max t1 t2`, by a cocone at the selector
/// index 0 or 1.
pub fn lim_max_bound_in(iso: &NatIso, side: Side, t1: &Tree, t2: &Tree) -> LeDeriv {
    let m = lim_max_in(iso, t1, t2);
    let (n, t) = match side {
        Side::L => (0, t1),
        Side::R => (1, t2),
    };
    LeDeriv::cocone(m, iso.inv(n), le_refl(t))
}

pub fn lim_max_bound(side: Side, t1: &Tree, t2: &Tree) -> LeDeriv {
    lim_max_bound_in(&NatIso::nat(), side, t1, t2)
}

/// `lim_max t1 t2 ≤ t` from `t1 ≤ t` and `t2 ≤ t`.
pub fn lim_max_lub_in(iso: &NatIso, d1: &LeDeriv, d2: &LeDeriv) -> Result<LeDeriv> {
    expect_same(d1.rhs(), d2.rhs(), "upper bounds differ")?;
    let m = lim_max_in(iso, d1.lhs(), d2.lhs());
    let (d1, d2, iso2) = (d1.clone(), d2.clone(), iso.clone());
    let rhs = d1.rhs().clone();
    Ok(LeDeriv::limiting(m, rhs, move |k| {
        Ok(if iso2.fun(k) == 0 { d1.clone() } else { d2.clone() })
    }))
}

pub fn lim_max_lub(d1: &LeDeriv, d2: &LeDeriv) -> Result<LeDeriv> {
    lim_max_lub_in(&NatIso::nat(), d1, d2)
}

pub fn lim_max_mono_in(iso: &NatIso, d1: &LeDeriv, d2: &LeDeriv) -> Result<LeDeriv> {
    let lo = lim_max_in(iso, d1.lhs(), d2.lhs());
    let hi = lim_max_in(iso, d1.rhs(), d2.rhs());
    let (d1, d2, iso2) = (d1.clone(), d2.clone(), iso.clone());
    crate::deriv::ext_lim(&lo, &hi, move |k| {
        Ok(if iso2.fun(k) == 0 { d1.clone() } else { d2.clone() })
    })
}

pub fn lim_max_mono(d1: &LeDeriv, d2: &LeDeriv) -> Result<LeDeriv> {
    lim_max_mono_in(&NatIso::nat(), d1, d2)
}

/// `lim_max t1 t2 ≤ lim_max t2 t1`.
pub fn lim_max_commut_in(iso: &NatIso, t1: &Tree, t2: &Tree) -> Result<LeDeriv> {
    lim_max_lub_in(
        iso,
        &lim_max_bound_in(iso, Side::R, t2, t1),
        &lim_max_bound_in(iso, Side::L, t2, t1),
    )
}

pub fn lim_max_commut(t1: &Tree, t2: &Tree) -> Result<LeDeriv> {
    lim_max_commut_in(&NatIso::nat(), t1, t2)
}

/// `lim_max t t ≤ t`: every branch of the selector is `t` itself.
pub fn lim_max_idem_in(iso: &NatIso, t: &Tree) -> LeDeriv {
    let m = lim_max_in(iso, t, t);
    let t2 = t.clone();
    LeDeriv::limiting(m, t.clone(), move |_| Ok(le_refl(&t2)))
}

pub fn lim_max_idem(t: &Tree) -> LeDeriv {
    lim_max_idem_in(&NatIso::nat(), t)
}

// ---------------------------------------------------------------------------
// indMax

/// Which defining clause of [`ind_max`] applies to a pair of trees.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IndMaxView {
    ZL,
    ZR,
    LimL,
    /// The left operand is Z or a successor and the right one is a limit.
    LimR,
    SucSuc,
}

pub fn ind_max_view(t1: &Tree, t2: &Tree) -> IndMaxView {
    match (t1.view(), t2.view()) {
        (View::Zero, _) => IndMaxView::ZL,
        (_, View::Zero) => IndMaxView::ZR,
        (View::Lim(_), _) => IndMaxView::LimL,
        (_, View::Lim(_)) => IndMaxView::LimR,
        (View::Succ(_), View::Succ(_)) => IndMaxView::SucSuc,
    }
}

const MEMO_CAP: usize = 1 << 14;

thread_local! {
    // Rebuilding a join drops the branch caches of the old copy, and audits
    // ask for the same joins over and over.
    static MEMO: RefCell<FxHashMap<(u64, u64), Tree>> = RefCell::new(FxHashMap::default());
}

pub fn ind_max(t1: &Tree, t2: &Tree) -> Tree {
    match ind_max_view(t1, t2) {
        IndMaxView::ZL => return t2.clone(),
        IndMaxView::ZR => return t1.clone(),
        _ => {}
    }
    let k = (t1.fp(), t2.fp());
    if let Some(t) = MEMO.with(|m| m.borrow().get(&k).cloned()) {
        return t;
    }
    let t = ind_max_build(t1, t2);
    MEMO.with(|m| {
        let mut m = m.borrow_mut();
        if m.len() >= MEMO_CAP {
            m.clear();
        }
        m.insert(k, t.clone());
    });
    t
}

fn ind_max_build(t1: &Tree, t2: &Tree) -> Tree {
    let key = fingerprint("max", &[t1.fp(), t2.fp()]);
    match ind_max_view(t1, t2) {
        IndMaxView::ZL => t2.clone(),
        IndMaxView::ZR => t1.clone(),
        IndMaxView::LimL => {
            let code = t1.as_lim().unwrap().code().clone();
            let (a, b) = (t1.clone(), t2.clone());
            Tree::lim_keyed(code, key, move |k| ind_max(&a.as_lim().unwrap().at(k), &b))
        }
        IndMaxView::LimR => {
            let code = t2.as_lim().unwrap().code().clone();
            let (a, b) = (t1.clone(), t2.clone());
            Tree::lim_keyed(code, key, move |k| ind_max(&a, &b.as_lim().unwrap().at(k)))
        }
        IndMaxView::SucSuc => {
            // Peel the common successors. If what is left reduces to one
            // operand's tail, the result is that operand itself, structurally.
            let (mut a, mut b, mut peeled) = (t1, t2, 0u64);
            while let (Some(x), Some(y)) = (a.as_succ(), b.as_succ()) {
                a = x;
                b = y;
                peeled += 1;
            }
            let inner = ind_max(a, b);
            if Tree::ptr_eq(&inner, b) {
                t2.clone()
            } else if Tree::ptr_eq(&inner, a) {
                t1.clone()
            } else {
                (0..peeled).fold(inner, |t, _| Tree::succ(t))
            }
        }
    }
}

/// `t ≤ lim` through a cocone at `witness`; `EmptyIndex` when the limit's
/// code has no element to offer.
pub fn under_lim<F>(lim: &Tree, witness: Option<IndexElem>, per_k: F) -> Result<LeDeriv>
where
    F: Fn(&IndexElem) -> Result<LeDeriv>,
{
    let k = witness.ok_or(SmbError::EmptyIndex)?;
    Ok(LeDeriv::cocone(lim.clone(), k.clone(), per_k(&k)?))
}

fn default_of(t: &Tree) -> Option<IndexElem> {
    t.as_lim().and_then(|l| l.code().default_elem())
}

/// `t1 ≤ ind_max t1 t2` (side L) or `t2 ≤ ind_max t1 t2` (side R).
pub fn ind_max_bound(side: Side, t1: &Tree, t2: &Tree) -> Result<LeDeriv> {
    let m = ind_max(t1, t2);
    let view = ind_max_view(t1, t2);
    match (side, view) {
        (Side::L, IndMaxView::ZL) | (Side::R, IndMaxView::ZR) => Ok(LeDeriv::zero(m)),
        (Side::L, IndMaxView::ZR) => Ok(refl_between(t1, &m)),
        (Side::R, IndMaxView::ZL) => Ok(refl_between(t2, &m)),
        (Side::L, IndMaxView::LimL) => {
            let (a, b, m2) = (t1.clone(), t2.clone(), m.clone());
            Ok(LeDeriv::limiting(t1.clone(), m, move |k| {
                let fk = a.as_lim().unwrap().at(k);
                Ok(LeDeriv::cocone(m2.clone(), k.clone(), ind_max_bound(Side::L, &fk, &b)?))
            }))
        }
        (Side::R, IndMaxView::LimR) => {
            let (a, b, m2) = (t1.clone(), t2.clone(), m.clone());
            Ok(LeDeriv::limiting(t2.clone(), m, move |k| {
                let gk = b.as_lim().unwrap().at(k);
                Ok(LeDeriv::cocone(m2.clone(), k.clone(), ind_max_bound(Side::R, &a, &gk)?))
            }))
        }
        (Side::L, IndMaxView::LimR) => under_lim(&m, default_of(t2), |k| {
            ind_max_bound(Side::L, t1, &t2.as_lim().unwrap().at(k))
        }),
        (Side::R, IndMaxView::LimL) => under_lim(&m, default_of(t1), |k| {
            ind_max_bound(Side::R, &t1.as_lim().unwrap().at(k), t2)
        }),
        (side, IndMaxView::SucSuc) => Ok(LeDeriv::suc_mono(ind_max_bound(
            side,
            t1.as_succ().unwrap(),
            t2.as_succ().unwrap(),
        )?)),
    }
}

/// `f k ≤ t` from a derivation of `Lim c f ≤ t`.
pub fn branch_le(d: &LeDeriv, k: &IndexElem) -> Result<LeDeriv> {
    if let Rule::Limiting(b) = d.rule() {
        return b.at(k);
    }
    let lim = d.lhs();
    let fk = lim
        .as_lim()
        .ok_or_else(|| mismatch("left side is not a limit"))?
        .at(k);
    le_trans(&LeDeriv::cocone(lim.clone(), k.clone(), le_refl(&fk)), d)
}

/// `ind_max t1 t2 ≤ ind_max t1' t2'` from `t1 ≤ t1'` and `t2 ≤ t2'`.
pub fn ind_max_mono(d1: &LeDeriv, d2: &LeDeriv) -> Result<LeDeriv> {
    let (t1, t2) = (d1.lhs(), d2.lhs());
    let (u1, u2) = (d1.rhs(), d2.rhs());
    let lo = ind_max(t1, t2);
    let hi = ind_max(u1, u2);
    match ind_max_view(t1, t2) {
        IndMaxView::ZL => le_trans(d2, &ind_max_bound(Side::R, u1, u2)?),
        IndMaxView::ZR => le_trans(d1, &ind_max_bound(Side::L, u1, u2)?),
        IndMaxView::LimL => {
            let (d1, d2) = (d1.clone(), d2.clone());
            Ok(LeDeriv::limiting(lo, hi, move |k| ind_max_mono(&branch_le(&d1, k)?, &d2)))
        }
        IndMaxView::LimR => {
            let (d1, d2) = (d1.clone(), d2.clone());
            Ok(LeDeriv::limiting(lo, hi, move |k| ind_max_mono(&d1, &branch_le(&d2, k)?)))
        }
        IndMaxView::SucSuc => match ind_max_view(u1, u2) {
            IndMaxView::LimL => match d1.rule() {
                Rule::Cocone { index, sub } => Ok(LeDeriv::cocone(
                    hi,
                    index.clone(),
                    ind_max_mono(sub, d2)?,
                )),
                _ => Err(mismatch("a successor below a limit must be a cocone")),
            },
            IndMaxView::LimR => match d2.rule() {
                Rule::Cocone { index, sub } => Ok(LeDeriv::cocone(
                    hi,
                    index.clone(),
                    ind_max_mono(d1, sub)?,
                )),
                _ => Err(mismatch("a successor below a limit must be a cocone")),
            },
            IndMaxView::SucSuc => match (d1.rule(), d2.rule()) {
                (Rule::SucMono(p1), Rule::SucMono(p2)) => {
                    Ok(LeDeriv::suc_mono(ind_max_mono(p1, p2)?))
                }
                _ => Err(mismatch("successors must be related by the successor rule")),
            },
            IndMaxView::ZL | IndMaxView::ZR => Err(mismatch("a successor is never below Z")),
        },
    }
}

/// `t1 < t1'` and `t2 < t2'` give `ind_max t1 t2 < ind_max t1' t2'`. This is
/// monotonicity applied to `S t1 ≤ t1'` and `S t2 ≤ t2'`, read through the
/// successor clause of `ind_max`.
pub fn ind_max_strict_mono(w1: &LtWitness, w2: &LtWitness) -> Result<LtWitness> {
    LtWitness::new(ind_max_mono(w1.deriv(), w2.deriv())?)
}

/// `ind_max t1 t2 ≤ ind_max t2 t1`.
pub fn ind_max_commut(t1: &Tree, t2: &Tree) -> Result<LeDeriv> {
    let lo = ind_max(t1, t2);
    let hi = ind_max(t2, t1);
    match (t1.view(), t2.view()) {
        (View::Zero, _) | (_, View::Zero) => Ok(refl_between(&lo, &hi)),
        (View::Lim(_), View::Succ(_)) => {
            let (a, b, hi2) = (t1.clone(), t2.clone(), hi.clone());
            Ok(LeDeriv::limiting(lo, hi, move |k| {
                let fk = a.as_lim().unwrap().at(k);
                Ok(LeDeriv::cocone(hi2.clone(), k.clone(), ind_max_commut(&fk, &b)?))
            }))
        }
        (View::Lim(_), View::Lim(_)) => {
            let (a, b) = (t1.clone(), t2.clone());
            Ok(LeDeriv::limiting(lo, hi, move |k| {
                let fk = a.as_lim().unwrap().at(k);
                let up = LeDeriv::cocone(a.clone(), k.clone(), le_refl(&fk));
                le_trans(&ind_max_commut(&fk, &b)?, &ind_max_mono(&le_refl(&b), &up)?)
            }))
        }
        (View::Succ(_), View::Lim(_)) => {
            let (a, b, hi2) = (t1.clone(), t2.clone(), hi.clone());
            Ok(LeDeriv::limiting(lo, hi, move |k| {
                let gk = b.as_lim().unwrap().at(k);
                Ok(LeDeriv::cocone(hi2.clone(), k.clone(), ind_max_commut(&a, &gk)?))
            }))
        }
        (View::Succ(a), View::Succ(b)) => Ok(LeDeriv::suc_mono(ind_max_commut(a, b)?)),
    }
}

/// Direction of an associativity derivation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Assoc {
    /// `t1 ∨ (t2 ∨ t3) ≤ (t1 ∨ t2) ∨ t3`.
    L,
    /// `(t1 ∨ t2) ∨ t3 ≤ t1 ∨ (t2 ∨ t3)`.
    R,
}

/// Both sides of an associativity statement unfold to limits over the same
/// code with corresponding branches, or to successors of the same shape, so
/// one recursion serves both directions.
pub fn ind_max_assoc(dir: Assoc, t1: &Tree, t2: &Tree, t3: &Tree) -> Result<LeDeriv> {
    let right_nested = ind_max(t1, &ind_max(t2, t3));
    let left_nested = ind_max(&ind_max(t1, t2), t3);
    let (lo, hi) = match dir {
        Assoc::L => (right_nested, left_nested),
        Assoc::R => (left_nested, right_nested),
    };
    if t1.is_zero() || t2.is_zero() || t3.is_zero() {
        return Ok(refl_between(&lo, &hi));
    }
    // Which operand's branches both sides range over.
    let split = match (t1.view(), t2.view(), t3.view()) {
        (View::Lim(_), _, _) => 0,
        (_, View::Lim(_), _) => 1,
        (_, _, View::Lim(_)) => 2,
        (View::Succ(a), View::Succ(b), View::Succ(c)) => {
            return Ok(LeDeriv::suc_mono(ind_max_assoc(dir, a, b, c)?));
        }
        _ => unreachable!("zero operands handled above"),
    };
    let ts = [t1.clone(), t2.clone(), t3.clone()];
    let hi2 = hi.clone();
    Ok(LeDeriv::limiting(lo, hi, move |k| {
        let mut parts = ts.clone();
        parts[split] = ts[split].as_lim().unwrap().at(k);
        let sub = ind_max_assoc(dir, &parts[0], &parts[1], &parts[2])?;
        Ok(LeDeriv::cocone(hi2.clone(), k.clone(), sub))
    }))
}

/// `(a ∨ b) ∨ (c ∨ d) ≤ (a ∨ c) ∨ (b ∨ d)`.
pub fn ind_max_swap4(a: &Tree, b: &Tree, c: &Tree, d: &Tree) -> Result<LeDeriv> {
    let ra = le_refl(a);
    let bd = ind_max(b, d);
    let s1 = ind_max_assoc(Assoc::R, a, b, &ind_max(c, d))?;
    let s2 = ind_max_mono(&ra, &ind_max_assoc(Assoc::L, b, c, d)?)?;
    let s3 = ind_max_mono(&ra, &ind_max_mono(&ind_max_commut(b, c)?, &le_refl(d))?)?;
    let s4 = ind_max_mono(&ra, &ind_max_assoc(Assoc::R, c, b, d)?)?;
    let s5 = ind_max_assoc(Assoc::L, a, c, &bd)?;
    let mut acc = s1;
    for s in [s2, s3, s4, s5] {
        acc = le_trans(&acc, &s)?;
    }
    Ok(acc)
}

/// `ind_max s Z ≤ s`; the two sides are the same tree.
pub fn ind_max_right_zero(s: &Tree) -> LeDeriv {
    refl_between(&ind_max(s, &Tree::zero()), s)
}
