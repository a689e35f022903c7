//! Transfinite self-join: `indMax∞ t = Lim (n ↦ t ∨ ... ∨ t)` with `n`
//! copies, and the lemmas showing it absorbs further joins with itself.
//!
//! Each function takes the bijection that reads the limit's index as a
//! natural number. Raw trees use plain `nat`; the SMB layer uses
//! `maybe(nat)`.

use std::sync::Mutex;

use crate::deriv::{ext_lim, le_refl, le_trans, LeDeriv};
use crate::error::{Result, SmbError};
use crate::index::NatIso;
use crate::join::{ind_max, ind_max_assoc, ind_max_commut, ind_max_mono, ind_max_right_zero, Assoc};
use crate::tree::{fingerprint, nlim_with, Same, Tree};

/// `nindMax t 0 = Z`, `nindMax t (n+1) = ind_max (nindMax t n) t`.
pub fn n_ind_max(t: &Tree, n: u64) -> Tree {
    (0..n).fold(Tree::zero(), |acc, _| ind_max(&acc, t))
}

pub fn ind_max_inf_in(iso: &NatIso, t: &Tree) -> Tree {
    let t2 = t.clone();
    // Branch n extends branch n - 1, so keep the prefix already built.
    let prefix = Mutex::new(vec![Tree::zero()]);
    nlim_with(iso, fingerprint("inf", &[t.fp()]), move |n| {
        let mut p = prefix.lock().unwrap();
        while p.len() as u64 <= n {
            let next = ind_max(p.last().unwrap(), &t2);
            p.push(next);
        }
        p[n as usize].clone()
    })
}

pub fn ind_max_inf(t: &Tree) -> Tree {
    ind_max_inf_in(&NatIso::nat(), t)
}

/// `t ≤ indMax∞ t`, through the branch `nindMax t 1 = t`.
pub fn inf_self(iso: &NatIso, t: &Tree) -> LeDeriv {
    let inf = ind_max_inf_in(iso, t);
    let one = n_ind_max(t, 1);
    LeDeriv::cocone(inf, iso.inv(1), le_refl(t).with_endpoints(t.clone(), one))
}

/// `nindMax t1 n ≤ nindMax t2 n` from `t1 ≤ t2`.
pub fn n_ind_max_mono(d: &LeDeriv, n: u64) -> Result<LeDeriv> {
    let mut acc = LeDeriv::zero(Tree::zero());
    for _ in 0..n {
        acc = ind_max_mono(&acc, d)?;
    }
    Ok(acc)
}

/// `indMax∞ t1 ≤ indMax∞ t2` from `t1 ≤ t2`.
pub fn inf_mono(iso: &NatIso, d: &LeDeriv) -> Result<LeDeriv> {
    let lo = ind_max_inf_in(iso, d.lhs());
    let hi = ind_max_inf_in(iso, d.rhs());
    let (d, iso2) = (d.clone(), iso.clone());
    ext_lim(&lo, &hi, move |k| n_ind_max_mono(&d, iso2.fun(k)))
}

/// `ind_max (indMax∞ t) t ≤ indMax∞ t`: branch `n` on the left is branch
/// `n + 1` on the right.
pub fn inf_idem1(iso: &NatIso, t: &Tree) -> LeDeriv {
    let inf = ind_max_inf_in(iso, t);
    let lhs = ind_max(&inf, t);
    if t.is_zero() {
        return le_refl(&inf).with_endpoints(lhs, inf);
    }
    let (t2, iso2, inf2) = (t.clone(), iso.clone(), inf.clone());
    LeDeriv::limiting(lhs, inf, move |k| {
        let n = iso2.fun(k);
        let next = n_ind_max(&t2, n + 1);
        Ok(LeDeriv::cocone(inf2.clone(), iso2.inv(n + 1), le_refl(&next)))
    })
}

/// `ind_max (indMax∞ t) (nindMax t n) ≤ indMax∞ t`.
pub fn inf_idem_n(iso: &NatIso, n: u64, t: &Tree) -> Result<LeDeriv> {
    let inf = ind_max_inf_in(iso, t);
    let mut acc = ind_max_right_zero(&inf);
    for i in 0..n {
        let prev = n_ind_max(t, i);
        // inf ∨ (prev ∨ t) ≤ (inf ∨ prev) ∨ t ≤ inf ∨ t ≤ inf
        let a = ind_max_assoc(Assoc::L, &inf, &prev, t)?;
        let b = ind_max_mono(&acc, &le_refl(t))?;
        acc = le_trans(&le_trans(&a, &b)?, &inf_idem1(iso, t))?;
    }
    Ok(acc)
}

/// `ind_max (indMax∞ t) (indMax∞ t) ≤ indMax∞ t`.
pub fn inf_idem(iso: &NatIso, t: &Tree) -> LeDeriv {
    let inf = ind_max_inf_in(iso, t);
    let lhs = ind_max(&inf, &inf);
    let (t2, iso2, inf2) = (t.clone(), iso.clone(), inf.clone());
    LeDeriv::limiting(lhs, inf, move |k| {
        let n = iso2.fun(k);
        let branch = n_ind_max(&t2, n);
        le_trans(&ind_max_commut(&branch, &inf2)?, &inf_idem_n(&iso2, n, &t2)?)
    })
}

/// `indMax∞ t ≤ t` from `ind_max t t ≤ t`.
pub fn inf_collapse(iso: &NatIso, d: &LeDeriv) -> Result<LeDeriv> {
    let t = d.rhs().clone();
    if Tree::same(d.lhs(), &ind_max(&t, &t)) == Same::No {
        return Err(SmbError::InvalidComposition(format!(
            "expected a derivation of t ∨ t ≤ t, got left side {:?}",
            d.lhs()
        )));
    }
    let inf = ind_max_inf_in(iso, &t);
    let (d, iso2, t2) = (d.clone(), iso.clone(), t.clone());
    Ok(LeDeriv::limiting(inf, t, move |k| {
        let mut acc = LeDeriv::zero(t2.clone());
        for _ in 0..iso2.fun(k) {
            acc = le_trans(&ind_max_mono(&acc, &le_refl(&t2))?, &d)?;
        }
        Ok(acc)
    }))
}
