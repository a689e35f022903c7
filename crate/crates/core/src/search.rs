//! Bounded derivation search and the finite-value oracle.

use std::sync::Arc;

use crate::audit::{audit, AuditBudget};
use crate::deriv::{le_refl, LeDeriv, LtWitness};
use crate::error::SmbError;
use crate::index::{sample_indices, Cardinality, IndexCode, IndexElem, EXHAUSTIVE_LIMIT};
use crate::tree::{finite_value, Same, Tree, View};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchBudget {
    /// Rule applications tried before giving up.
    pub max_nodes: u64,
    /// Cocone witnesses tried against an infinite limit.
    pub max_witnesses: u64,
    /// Branches of an infinite limit searched eagerly.
    pub eager_branches: usize,
    pub audit: AuditBudget,
}

impl SearchBudget {
    pub fn nodes(max_nodes: u64) -> SearchBudget {
        SearchBudget {
            max_nodes,
            ..SearchBudget::default()
        }
    }
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_nodes: 100_000,
            max_witnesses: 256,
            eager_branches: 16,
            audit: AuditBudget::STANDARD,
        }
    }
}

/// Look for a derivation of `t1 ≤ t2`. `None` means none was found within
/// the budget, not that the inequality is false.
pub fn search_le(t1: &Tree, t2: &Tree, budget: SearchBudget) -> Option<LeDeriv> {
    let mut fuel = budget.max_nodes;
    let d = go(t1, t2, &budget, &mut fuel)?;
    audit(&d, budget.audit).passed().then_some(d)
}

/// Look for a derivation of `t1 < t2`, i.e. of `S t1 ≤ t2`.
pub fn search_lt(t1: &Tree, t2: &Tree, budget: SearchBudget) -> Option<LtWitness> {
    let d = search_le(&Tree::succ(t1.clone()), t2, budget)?;
    LtWitness::new(d).ok()
}

/// `finite_value t1 ≤ finite_value t2` when both are defined.
pub fn decide_le_finite(t1: &Tree, t2: &Tree) -> Option<bool> {
    Some(finite_value(t1)? <= finite_value(t2)?)
}

fn go(t1: &Tree, t2: &Tree, budget: &SearchBudget, fuel: &mut u64) -> Option<LeDeriv> {
    if *fuel == 0 {
        return None;
    }
    *fuel -= 1;
    if t1.is_zero() {
        return Some(LeDeriv::zero(t2.clone()));
    }
    if Tree::same(t1, t2) == Same::Yes {
        return Some(le_refl_onto(t1, t2));
    }
    if let (Some(m), Some(n)) = (succ_count(t1), succ_count(t2)) {
        return (m <= n).then(|| finite_le(t1, t2));
    }
    if let (Some(a), Some(b)) = (t1.as_succ(), t2.as_succ()) {
        return go(a, b, budget, fuel).map(LeDeriv::suc_mono);
    }
    if let View::Lim(l) = t1.view() {
        if let Some(d) = try_limiting(t1, l.code(), t2, budget, fuel) {
            return Some(d);
        }
    }
    if let View::Lim(l) = t2.view() {
        let code = l.code();
        let limit = match code.cardinality() {
            Cardinality::Empty => 0,
            Cardinality::Finite(n) => n,
            Cardinality::CountablyInfinite => budget.max_witnesses,
        };
        for i in 0..limit {
            if *fuel == 0 {
                return None;
            }
            let k = code.nth(i).expect("position within cardinality");
            if let Some(sub) = go(t1, &l.at(&k), budget, fuel) {
                return Some(LeDeriv::cocone(t2.clone(), k, sub));
            }
        }
    }
    None
}

/// `Some(n)` for `S^n Z`.
fn succ_count(t: &Tree) -> Option<u64> {
    let (mut n, mut cur) = (0, t);
    loop {
        match cur.view() {
            View::Zero => return Some(n),
            View::Succ(a) => {
                n += 1;
                cur = a;
            }
            View::Lim(_) => return None,
        }
    }
}

/// `S^m Z ≤ S^n Z` for `m ≤ n`: `m` successor steps over `Z ≤ S^(n-m) Z`.
fn finite_le(t1: &Tree, t2: &Tree) -> LeDeriv {
    let mut pairs = Vec::new();
    let (mut a, mut b) = (t1, t2);
    while let (Some(x), Some(y)) = (a.as_succ(), b.as_succ()) {
        pairs.push((a, b));
        a = x;
        b = y;
    }
    pairs.into_iter().rev().fold(LeDeriv::zero(b.clone()), |d, (l, r)| {
        LeDeriv::suc_mono(d).with_endpoints(l.clone(), r.clone())
    })
}

/// Reflexivity with the right endpoint taken from `t2`, which is known to
/// be observationally the same tree.
fn le_refl_onto(t1: &Tree, t2: &Tree) -> LeDeriv {
    le_refl(t1).with_endpoints(t1.clone(), t2.clone())
}

fn try_limiting(
    t1: &Tree,
    code: &IndexCode,
    t2: &Tree,
    budget: &SearchBudget,
    fuel: &mut u64,
) -> Option<LeDeriv> {
    let eager: Vec<IndexElem> = match code.cardinality() {
        Cardinality::Empty => Vec::new(),
        Cardinality::Finite(n) if n <= EXHAUSTIVE_LIMIT => code.elements().unwrap(),
        _ => {
            let mut ks = sample_indices(code, budget.eager_branches, budget.audit.seed);
            // Positions up to the cocone witness cap. Without them a bound
            // like `ω ≤ 31` passes every small branch, and the search would
            // then find `S ω ≤ ω` through the witness 32.
            let w = budget.max_witnesses;
            for p in [w / 8, w / 4, w / 2, w.saturating_sub(1)] {
                if let Some(k) = code.nth(p) {
                    if !ks.contains(&k) {
                        ks.push(k);
                    }
                }
            }
            ks
        }
    };
    let lim = t1.as_lim().unwrap();
    let mut found = Vec::with_capacity(eager.len());
    for k in &eager {
        let sub = go(&lim.at(k), t2, budget, fuel)?;
        found.push((k.clone(), sub));
    }
    let found = Arc::new(found);
    let (t1c, t2c, b) = (t1.clone(), t2.clone(), *budget);
    Some(LeDeriv::limiting(t1.clone(), t2.clone(), move |k| {
        if let Some((_, d)) = found.iter().find(|(j, _)| j == k) {
            return Ok(d.clone());
        }
        let mut fuel = b.max_nodes;
        let fk = t1c.as_lim().unwrap().at(k);
        go(&fk, &t2c, &b, &mut fuel).ok_or_else(|| {
            SmbError::MalformedWitness(format!("no derivation found for branch {k}"))
        })
    }))
}
