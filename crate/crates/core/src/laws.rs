//! Equivalence of SMB-trees as a pair of derivations, and the algebraic laws
//! of the join, the successor and limits stated as equivalences.

use crate::audit::{audit, AuditBudget, AuditReport};
use crate::deriv::{le_refl, le_succ_self, le_trans, ext_lim, LeDeriv, LtWitness};
use crate::error::{Result, SmbError};
use crate::index::{Cardinality, IndexCode, IndexElem};
use crate::inf::inf_mono;
use crate::join::{ind_max_assoc, ind_max_commut, Assoc, Side};
use crate::smb::{
    smb_le_least, smb_le_refl, smb_le_trans, smb_le_upper_bound, smb_max, smb_max_bound,
    smb_max_lub, smb_max_mono, smb_nat_iso, smb_succ, smb_zero, SmbFamily, SmbLe, SmbTree,
};
use crate::tree::{Same, Tree};

/// `t1 ≈ t2`: a derivation each way.
#[derive(Clone, Debug)]
pub struct Equiv {
    pub fwd: SmbLe,
    pub bwd: SmbLe,
}

impl Equiv {
    pub fn new(fwd: SmbLe, bwd: SmbLe) -> Result<Equiv> {
        if Tree::same(fwd.lo(), bwd.hi()) == Same::No || Tree::same(fwd.hi(), bwd.lo()) == Same::No {
            return Err(SmbError::InvalidComposition(
                "the two directions do not have mirrored endpoints".into(),
            ));
        }
        Ok(Equiv { fwd, bwd })
    }

    pub fn lhs(&self) -> &Tree {
        self.fwd.lo()
    }

    pub fn rhs(&self) -> &Tree {
        self.fwd.hi()
    }

    pub fn refl(t: &SmbTree) -> Equiv {
        Equiv {
            fwd: smb_le_refl(t),
            bwd: smb_le_refl(t),
        }
    }

    pub fn symm(&self) -> Equiv {
        Equiv {
            fwd: self.bwd.clone(),
            bwd: self.fwd.clone(),
        }
    }

    pub fn trans(&self, other: &Equiv) -> Result<Equiv> {
        Ok(Equiv {
            fwd: smb_le_trans(&self.fwd, &other.fwd)?,
            bwd: smb_le_trans(&other.bwd, &self.bwd)?,
        })
    }

    /// Audit both directions.
    pub fn audit(&self, budget: AuditBudget) -> (AuditReport, AuditReport) {
        (audit(self.fwd.deriv(), budget), audit(self.bwd.deriv(), budget))
    }

    pub fn audits(&self, budget: AuditBudget) -> bool {
        let (a, b) = self.audit(budget);
        a.passed() && b.passed()
    }
}

// ---------------------------------------------------------------------------
// Order as an equation

/// `t1 ∨ t2 ≈ t2` from `t1 ≤ t2`.
pub fn ord_to_equiv(t1: &SmbTree, t2: &SmbTree, d: &SmbLe) -> Result<Equiv> {
    let fwd = smb_max_lub(d, &smb_le_refl(t2), t2)?;
    let bwd = smb_max_bound(Side::R, t1, t2)?;
    Equiv::new(fwd, bwd)
}

/// `t1 ≤ t2` from `t1 ∨ t2 ≈ t2`.
pub fn equiv_to_ord(t1: &SmbTree, t2: &SmbTree, e: &Equiv) -> Result<SmbLe> {
    smb_le_trans(&smb_max_bound(Side::L, t1, t2)?, &e.fwd)
}

/// `S t1 ∨ t2 ≈ t2` from `t1 < t2`.
pub fn lt_to_equiv(t1: &SmbTree, t2: &SmbTree, w: &LtWitness) -> Result<Equiv> {
    ord_to_equiv(&smb_succ(t1), t2, &SmbLe::from_deriv(w.deriv().clone()))
}

// ---------------------------------------------------------------------------
// Congruences

/// `a' ≤ b'` from `a ≈ a'`, `b ≈ b'` and `a ≤ b`.
pub fn le_resp(ea: &Equiv, eb: &Equiv, d: &SmbLe) -> Result<SmbLe> {
    smb_le_trans(&smb_le_trans(&ea.bwd, d)?, &eb.fwd)
}

/// `a' < b'` from `a ≈ a'`, `b ≈ b'` and `a < b`.
pub fn lt_resp(ea: &Equiv, eb: &Equiv, w: &LtWitness) -> Result<LtWitness> {
    let into = LeDeriv::suc_mono(ea.bwd.deriv().clone());
    let d = le_trans(&le_trans(&into, w.deriv())?, eb.fwd.deriv())?;
    LtWitness::new(d)
}

pub fn succ_cong(e: &Equiv) -> Equiv {
    Equiv {
        fwd: SmbLe::from_deriv(LeDeriv::suc_mono(e.fwd.deriv().clone())),
        bwd: SmbLe::from_deriv(LeDeriv::suc_mono(e.bwd.deriv().clone())),
    }
}

/// `Lim c f ≈ Lim c g` from `f k ≈ g k` for every `k`.
pub fn lim_cong<F>(f: &SmbFamily, g: &SmbFamily, per_k: F) -> Result<Equiv>
where
    F: Fn(&IndexElem) -> Result<Equiv> + Send + Sync + 'static,
{
    if f.code() != g.code() {
        return Err(SmbError::InvalidComposition(format!(
            "families over different codes {} and {}",
            f.code(),
            g.code()
        )));
    }
    let per_k = std::sync::Arc::new(per_k);
    let one_way = |lo: &SmbFamily, hi: &SmbFamily, forward: bool| -> Result<SmbLe> {
        let per_k = per_k.clone();
        let wrapped = ext_lim(lo.wrapped(), hi.wrapped(), move |k| match k {
            IndexElem::Just(x) => {
                let e = per_k(x)?;
                Ok(if forward { e.fwd } else { e.bwd }.into_deriv())
            }
            _ => Ok(LeDeriv::zero(Tree::zero())),
        })?;
        Ok(SmbLe::from_deriv(inf_mono(&smb_nat_iso(), &wrapped)?))
    };
    Equiv::new(one_way(f, g, true)?, one_way(g, f, false)?)
}

/// `a1 ∨ a2 ≈ b1 ∨ b2` from `a1 ≈ b1` and `a2 ≈ b2`.
pub fn max_cong(e1: &Equiv, e2: &Equiv) -> Result<Equiv> {
    Ok(Equiv {
        fwd: smb_max_mono(&e1.fwd, &e2.fwd)?,
        bwd: smb_max_mono(&e1.bwd, &e2.bwd)?,
    })
}

// ---------------------------------------------------------------------------
// Semilattice

/// `t1 ∨ (t2 ∨ t3) ≈ (t1 ∨ t2) ∨ t3`.
pub fn join_assoc(t1: &SmbTree, t2: &SmbTree, t3: &SmbTree) -> Result<Equiv> {
    let (a, b, c) = (t1.raw(), t2.raw(), t3.raw());
    Ok(Equiv {
        fwd: SmbLe::from_deriv(ind_max_assoc(Assoc::L, a, b, c)?),
        bwd: SmbLe::from_deriv(ind_max_assoc(Assoc::R, a, b, c)?),
    })
}

/// `t1 ∨ t2 ≈ t2 ∨ t1`.
pub fn join_commut(t1: &SmbTree, t2: &SmbTree) -> Result<Equiv> {
    Ok(Equiv {
        fwd: SmbLe::from_deriv(ind_max_commut(t1.raw(), t2.raw())?),
        bwd: SmbLe::from_deriv(ind_max_commut(t2.raw(), t1.raw())?),
    })
}

/// `t ∨ t ≈ t`.
pub fn join_idem(t: &SmbTree) -> Result<Equiv> {
    Ok(Equiv {
        fwd: SmbLe::from_deriv(t.is_idem().clone()),
        bwd: smb_max_bound(Side::L, t, t)?,
    })
}

// ---------------------------------------------------------------------------
// The successor as an inflationary endomorphism

/// `t ∨ S t ≈ S t`.
pub fn succ_absorb(t: &SmbTree) -> Result<Equiv> {
    let st = smb_succ(t);
    let up = smb_max_mono(&SmbLe::from_deriv(le_succ_self(t.raw())), &smb_le_refl(&st))?;
    let fwd = smb_le_trans(&up, &SmbLe::from_deriv(st.is_idem().clone()))?;
    Ok(Equiv {
        fwd,
        bwd: smb_max_bound(Side::R, t, &st)?,
    })
}

/// `S (t1 ∨ t2) ≈ S t1 ∨ S t2`.
pub fn succ_dist(t1: &SmbTree, t2: &SmbTree) -> Result<Equiv> {
    let m = smb_max(t1, t2);
    let sm = smb_succ(&m);
    let (s1, s2) = (smb_succ(t1), smb_succ(t2));
    let rhs = smb_max(&s1, &s2);
    let fwd = LeDeriv::suc_mono(le_refl(m.raw())).with_endpoints(sm.raw().clone(), rhs.raw().clone());
    let b1 = SmbLe::from_deriv(LeDeriv::suc_mono(smb_max_bound(Side::L, t1, t2)?.into_deriv()));
    let b2 = SmbLe::from_deriv(LeDeriv::suc_mono(smb_max_bound(Side::R, t1, t2)?.into_deriv()));
    let bwd = smb_max_lub(&b1, &b2, &sm)?;
    Equiv::new(SmbLe::from_deriv(fwd), bwd)
}

// ---------------------------------------------------------------------------
// Limits

/// `f k ∨ ⋁ f ≈ ⋁ f`.
pub fn sup_bound(f: &SmbFamily, k: &IndexElem) -> Result<Equiv> {
    ord_to_equiv(&f.at(k), &f.lim(), &smb_le_upper_bound(f, k)?)
}

/// `(⋁ f) ∨ t ≈ t` from `f k ∨ t ≈ t` for every `k`.
pub fn sup_supremum<F>(f: &SmbFamily, t: &SmbTree, per_k: F) -> Result<Equiv>
where
    F: Fn(&IndexElem) -> Result<Equiv> + Send + Sync + 'static,
{
    let (f2, t2) = (f.clone(), t.clone());
    let below = smb_le_least(f, t, move |k| equiv_to_ord(&f2.at(k), &t2, &per_k(k)?))?;
    ord_to_equiv(&f.lim(), t, &below)
}

/// The constant family `k ↦ t` over `code`.
pub fn const_family(code: &IndexCode, t: &SmbTree) -> SmbFamily {
    let t2 = t.clone();
    SmbFamily::keyed(
        code.clone(),
        crate::tree::fingerprint("const", &[crate::tree::code_digest(code), t.raw().fp()]),
        move |_| t2.clone(),
    )
}

/// `⋁ (k ↦ t) ≈ t` over a code inhabited by `witness`.
pub fn sup_const(code: &IndexCode, witness: Option<&IndexElem>, t: &SmbTree) -> Result<Equiv> {
    let k = witness.ok_or(SmbError::EmptyIndex)?;
    if !code.contains(k) {
        return Err(SmbError::InvalidComposition(format!("{k} is not an element of {code}")));
    }
    sup_const_of(&const_family(code, t), k, t)
}

/// `⋁ f ≈ t` for a family whose every member is `t`, given an index `k`.
pub fn sup_const_of(f: &SmbFamily, k: &IndexElem, t: &SmbTree) -> Result<Equiv> {
    let (f2, t2) = (f.clone(), t.clone());
    let fwd = smb_le_least(f, t, move |j| {
        let fj = f2.at(j);
        if Tree::same(fj.raw(), t2.raw()) == Same::No {
            return Err(SmbError::InvalidComposition(format!("member {j} of the family is not constant")));
        }
        Ok(SmbLe::from_deriv(le_refl(fj.raw()).with_endpoints(fj.raw().clone(), t2.raw().clone())))
    })?;
    Equiv::new(fwd, smb_le_upper_bound(f, k)?)
}

/// `⋁ f ≈ Z` for a family over an empty code.
pub fn sup_empty(f: &SmbFamily) -> Result<Equiv> {
    if f.code().cardinality() != Cardinality::Empty {
        return Err(SmbError::NonEmptyIndex);
    }
    let fwd = smb_le_least(f, &smb_zero(), |k| {
        Err(SmbError::InvalidComposition(format!("{k} belongs to an empty code")))
    })?;
    let bwd = SmbLe::from_deriv(LeDeriv::zero(f.lim().raw().clone()));
    Equiv::new(fwd, bwd)
}

/// The family `k ↦ f k ∨ g k`.
pub fn join_families(f: &SmbFamily, g: &SmbFamily) -> Result<SmbFamily> {
    if f.code() != g.code() {
        return Err(SmbError::InvalidComposition(format!(
            "families over different codes {} and {}",
            f.code(),
            g.code()
        )));
    }
    let key = crate::tree::fingerprint("join-fam", &[f.lim().raw().fp(), g.lim().raw().fp()]);
    let (f2, g2) = (f.clone(), g.clone());
    Ok(SmbFamily::keyed(f.code().clone(), key, move |k| smb_max(&f2.at(k), &g2.at(k))))
}

/// The family `k ↦ f k ∨ t`.
pub fn join_family_with(f: &SmbFamily, t: &SmbTree) -> SmbFamily {
    let key = crate::tree::fingerprint("join-with", &[f.lim().raw().fp(), t.raw().fp()]);
    let (f2, t2) = (f.clone(), t.clone());
    SmbFamily::keyed(f.code().clone(), key, move |k| smb_max(&f2.at(k), &t2))
}

/// `⋁ f ∨ ⋁ g ≈ ⋁ (k ↦ f k ∨ g k)`.
pub fn dist_homo(f: &SmbFamily, g: &SmbFamily) -> Result<Equiv> {
    let h = join_families(f, g)?;
    let top = h.lim();
    let side_below = |fam: &SmbFamily, side: Side| -> Result<SmbLe> {
        let (f2, g2, h2) = (f.clone(), g.clone(), h.clone());
        smb_le_least(fam, &top, move |k| {
            smb_le_trans(&smb_max_bound(side, &f2.at(k), &g2.at(k))?, &smb_le_upper_bound(&h2, k)?)
        })
    };
    let fwd = smb_max_lub(&side_below(f, Side::L)?, &side_below(g, Side::R)?, &top)?;
    let (f2, g2) = (f.clone(), g.clone());
    let bwd = smb_le_least(&h, &smb_max(&f.lim(), &g.lim()), move |k| {
        smb_max_mono(&smb_le_upper_bound(&f2, k)?, &smb_le_upper_bound(&g2, k)?)
    })?;
    Equiv::new(fwd, bwd)
}

/// `⋁ f ∨ t ≈ ⋁ (k ↦ f k ∨ t)`, for a code inhabited by `witness`.
pub fn dist_het(f: &SmbFamily, t: &SmbTree, witness: Option<&IndexElem>) -> Result<Equiv> {
    let k0 = witness.ok_or(SmbError::EmptyIndex)?.clone();
    let h = join_family_with(f, t);
    let top = h.lim();
    let (f2, t2, h2) = (f.clone(), t.clone(), h.clone());
    let lim_below = smb_le_least(f, &top, move |k| {
        smb_le_trans(&smb_max_bound(Side::L, &f2.at(k), &t2)?, &smb_le_upper_bound(&h2, k)?)
    })?;
    let t_below = smb_le_trans(&smb_max_bound(Side::R, &f.at(&k0), t)?, &smb_le_upper_bound(&h, &k0)?)?;
    let fwd = smb_max_lub(&lim_below, &t_below, &top)?;
    let (f3, t3) = (f.clone(), t.clone());
    let bwd = smb_le_least(&h, &smb_max(&f.lim(), t), move |k| {
        smb_max_mono(&smb_le_upper_bound(&f3, k)?, &smb_le_refl(&t3))
    })?;
    Equiv::new(fwd, bwd)
}

/// Law names, as used by the command line.
pub const LAW_NAMES: [&str; 11] = [
    "assoc",
    "commut",
    "idem",
    "succ_absorb",
    "succ_dist",
    "sup_bound",
    "sup_supremum",
    "sup_const",
    "sup_empty",
    "dist_homo",
    "dist_het",
];
