//! Strictly monotone Brouwer trees.
//!
//! An [`SmbTree`] is a raw tree together with a derivation of
//! `ind_max raw raw ≤ raw`. Limits are built as `indMax∞` of a limit whose
//! index set is extended with an extra element mapped to Z, so every code
//! that occurs in a raw tree is inhabited and `ind_max` behaves.
//!
//! Every raw limit is over a `maybe(..)` code, including the limits that
//! `indMax∞` itself introduces, which range over `maybe(nat)`.

use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use crate::audit::{audit, AuditBudget, AuditReport};
use crate::deriv::{le_refl, le_trans, LeDeriv, LtWitness};
use crate::error::{Result, SmbError};
use crate::index::{Cardinality, IndexCode, IndexElem, NatIso};
use crate::inf::{ind_max_inf_in, inf_collapse, inf_idem, inf_mono, inf_self};
use crate::join::{ind_max, ind_max_bound, ind_max_mono, ind_max_strict_mono, ind_max_swap4, Side};
use crate::tree::{fingerprint, fresh_key, Same, Tree, View};

/// The bijection used by limits over the naturals inside SMB-trees.
pub fn smb_nat_iso() -> NatIso {
    NatIso::maybe(&NatIso::nat())
}

static WITNESS_BUDGET: Mutex<AuditBudget> = Mutex::new(AuditBudget::STANDARD);

/// Budget used when an SMB-tree's idempotence witness is audited.
pub fn witness_budget() -> AuditBudget {
    *WITNESS_BUDGET.lock().unwrap()
}

pub fn set_witness_budget(b: AuditBudget) {
    *WITNESS_BUDGET.lock().unwrap() = b;
}

#[derive(Clone)]
pub struct SmbTree(Arc<SmbInner>);

struct SmbInner {
    raw: Tree,
    is_idem: LeDeriv,
    report: OnceLock<AuditReport>,
}

impl SmbTree {
    fn trusted(raw: Tree, is_idem: LeDeriv) -> SmbTree {
        let t = SmbTree(Arc::new(SmbInner {
            raw,
            is_idem,
            report: OnceLock::new(),
        }));
        if cfg!(feature = "paranoid") {
            let r = t.witness_report();
            assert!(r.passed(), "idempotence witness failed its audit: {r}");
        }
        t
    }

    /// Accept an externally supplied pair after checking its endpoints, the
    /// shape of its limits and an audit of the witness.
    pub fn checked(raw: Tree, is_idem: LeDeriv, budget: AuditBudget) -> Result<SmbTree> {
        let doubled = ind_max(&raw, &raw);
        if Tree::same(is_idem.lhs(), &doubled) == Same::No || Tree::same(is_idem.rhs(), &raw) == Same::No {
            return Err(SmbError::MalformedWitness(
                "witness does not state ind_max t t ≤ t".into(),
            ));
        }
        if !limits_wrapped(&raw) {
            return Err(SmbError::MalformedWitness(
                "raw tree has a limit over a code that is not maybe-wrapped".into(),
            ));
        }
        let report = audit(&is_idem, budget);
        if !report.passed() {
            return Err(SmbError::MalformedWitness(format!("witness audit: {report}")));
        }
        let t = SmbTree::trusted(raw, is_idem);
        let _ = t.0.report.set(report);
        Ok(t)
    }

    pub fn raw(&self) -> &Tree {
        &self.0.raw
    }

    pub fn is_idem(&self) -> &LeDeriv {
        &self.0.is_idem
    }

    /// Audit of the idempotence witness, computed on first use.
    pub fn witness_report(&self) -> &AuditReport {
        self.0
            .report
            .get_or_init(|| audit(&self.0.is_idem, witness_budget()))
    }
}

impl fmt::Debug for SmbTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SmbTree({:?})", self.raw())
    }
}

/// Sampled structural check that every limit in `t` is over a `maybe(..)`
/// code.
pub fn limits_wrapped(t: &Tree) -> bool {
    let mut stack = vec![(t.clone(), 0u32)];
    let mut fuel = 4096u32;
    while let Some((t, depth)) = stack.pop() {
        if fuel == 0 {
            break;
        }
        fuel -= 1;
        match t.view() {
            View::Zero => {}
            View::Succ(a) => stack.push((a.clone(), depth)),
            View::Lim(l) => {
                if !matches!(l.code(), IndexCode::MaybeOf(_)) {
                    return false;
                }
                if depth < 4 {
                    for k in crate::index::sample_indices(l.code(), 3, t.fp()) {
                        stack.push((l.at(&k), depth + 1));
                    }
                }
            }
        }
    }
    true
}

/// A derivation between the raw trees of two SMB-trees.
#[derive(Clone, Debug)]
pub struct SmbLe(LeDeriv);

impl SmbLe {
    /// Wrap `d` after checking it relates `lo` and `hi`.
    pub fn new(lo: &SmbTree, hi: &SmbTree, d: LeDeriv) -> Result<SmbLe> {
        if Tree::same(d.lhs(), lo.raw()) == Same::No || Tree::same(d.rhs(), hi.raw()) == Same::No {
            return Err(SmbError::InvalidComposition(
                "derivation endpoints are not the given trees".into(),
            ));
        }
        Ok(SmbLe(d))
    }

    pub fn from_deriv(d: LeDeriv) -> SmbLe {
        SmbLe(d)
    }

    pub fn deriv(&self) -> &LeDeriv {
        &self.0
    }

    pub fn into_deriv(self) -> LeDeriv {
        self.0
    }

    pub fn lo(&self) -> &Tree {
        self.0.lhs()
    }

    pub fn hi(&self) -> &Tree {
        self.0.rhs()
    }
}

pub fn smb_le_refl(t: &SmbTree) -> SmbLe {
    SmbLe(le_refl(t.raw()))
}

pub fn smb_le_trans(d1: &SmbLe, d2: &SmbLe) -> Result<SmbLe> {
    Ok(SmbLe(le_trans(&d1.0, &d2.0)?))
}

// ---------------------------------------------------------------------------
// Constructors

pub fn smb_zero() -> SmbTree {
    static ZERO: OnceLock<SmbTree> = OnceLock::new();
    ZERO.get_or_init(|| SmbTree::trusted(Tree::zero(), LeDeriv::zero(Tree::zero())))
        .clone()
}

pub fn smb_succ(t: &SmbTree) -> SmbTree {
    SmbTree::trusted(
        Tree::succ(t.raw().clone()),
        LeDeriv::suc_mono(t.is_idem().clone()),
    )
}

pub fn smb_from_nat(n: u64) -> SmbTree {
    (0..n).fold(smb_zero(), |t, _| smb_succ(&t))
}

type SmbBranch = Arc<dyn Fn(&IndexElem) -> SmbTree + Send + Sync>;

/// An indexed family of SMB-trees, memoized per index, together with the
/// limit it determines.
#[derive(Clone)]
pub struct SmbFamily(Arc<FamilyInner>);

struct FamilyInner {
    key: u64,
    members: Arc<Members>,
    wrapped: OnceLock<Tree>,
    lim: OnceLock<SmbTree>,
}

// Kept apart from `FamilyInner` so the wrapped limit can refer to the members
// without a reference cycle through its own cache cell.
struct Members {
    code: IndexCode,
    f: SmbBranch,
    cache: Mutex<Vec<(IndexElem, SmbTree)>>,
}

impl Members {
    fn at(&self, k: &IndexElem) -> SmbTree {
        assert!(self.code.contains(k), "index {k} outside {}", self.code);
        if let Some((_, t)) = self.cache.lock().unwrap().iter().find(|(j, _)| j == k) {
            return t.clone();
        }
        let t = (self.f)(k);
        let mut cache = self.cache.lock().unwrap();
        if let Some((_, t)) = cache.iter().find(|(j, _)| j == k) {
            return t.clone();
        }
        cache.push((k.clone(), t.clone()));
        t
    }
}

impl SmbFamily {
    pub fn new<F>(code: IndexCode, f: F) -> SmbFamily
    where
        F: Fn(&IndexElem) -> SmbTree + Send + Sync + 'static,
    {
        SmbFamily::keyed(code, fresh_key(), f)
    }

    /// A family whose limit has identity `key`; equal keys must mean equal
    /// families.
    pub fn keyed<F>(code: IndexCode, key: u64, f: F) -> SmbFamily
    where
        F: Fn(&IndexElem) -> SmbTree + Send + Sync + 'static,
    {
        SmbFamily(Arc::new(FamilyInner {
            key,
            members: Arc::new(Members {
                code,
                f: Arc::new(f),
                cache: Mutex::new(Vec::new()),
            }),
            wrapped: OnceLock::new(),
            lim: OnceLock::new(),
        }))
    }

    pub fn code(&self) -> &IndexCode {
        &self.0.members.code
    }

    pub fn at(&self, k: &IndexElem) -> SmbTree {
        self.0.members.at(k)
    }

    /// `Lim (maybe c) (Nothing ↦ Z, Just k ↦ raw (f k))`.
    pub fn wrapped(&self) -> &Tree {
        self.0.wrapped.get_or_init(|| {
            let members = self.0.members.clone();
            Tree::lim_keyed(
                IndexCode::maybe(members.code.clone()),
                fingerprint("family", &[self.0.key]),
                move |k| match k {
                    IndexElem::Just(x) => members.at(x).raw().clone(),
                    _ => Tree::zero(),
                },
            )
        })
    }

    /// The SMB limit of the family.
    pub fn lim(&self) -> SmbTree {
        self.0
            .lim
            .get_or_init(|| {
                let iso = smb_nat_iso();
                let w = self.wrapped();
                SmbTree::trusted(ind_max_inf_in(&iso, w), inf_idem(&iso, w))
            })
            .clone()
    }
}

pub fn smb_lim<F>(code: IndexCode, f: F) -> SmbTree
where
    F: Fn(&IndexElem) -> SmbTree + Send + Sync + 'static,
{
    SmbFamily::new(code, f).lim()
}

/// The family `k ↦ seq (fun k)` over the naturals.
pub fn smb_nat_family<F>(key: u64, seq: F) -> SmbFamily
where
    F: Fn(u64) -> SmbTree + Send + Sync + 'static,
{
    let iso = NatIso::nat();
    SmbFamily::keyed(IndexCode::Nat, key, move |k| seq(iso.fun(k)))
}

pub fn smb_nlim<F>(seq: F) -> SmbTree
where
    F: Fn(u64) -> SmbTree + Send + Sync + 'static,
{
    smb_nat_family(fresh_key(), seq).lim()
}

pub fn smb_omega_family() -> SmbFamily {
    static OMEGA: OnceLock<SmbFamily> = OnceLock::new();
    OMEGA
        .get_or_init(|| smb_nat_family(fingerprint("smb-omega", &[]), smb_from_nat))
        .clone()
}

pub fn smb_omega() -> SmbTree {
    smb_omega_family().lim()
}

// ---------------------------------------------------------------------------
// Limits as least upper bounds

/// `f k ≤ Lim c f`.
pub fn smb_le_upper_bound(fam: &SmbFamily, k: &IndexElem) -> Result<SmbLe> {
    if !fam.code().contains(k) {
        return Err(SmbError::InvalidComposition(format!(
            "{k} is not an element of {}",
            fam.code()
        )));
    }
    let w = fam.wrapped();
    let fk = fam.at(k);
    let into_family = LeDeriv::cocone(
        w.clone(),
        IndexElem::Just(Box::new(k.clone())),
        le_refl(fk.raw()),
    );
    Ok(SmbLe(le_trans(&into_family, &inf_self(&smb_nat_iso(), w))?))
}

/// `Lim c f ≤ t` from `f k ≤ t` for every `k`.
pub fn smb_le_least<F>(fam: &SmbFamily, t: &SmbTree, per_k: F) -> Result<SmbLe>
where
    F: Fn(&IndexElem) -> Result<SmbLe> + Send + Sync + 'static,
{
    let iso = smb_nat_iso();
    let w = fam.wrapped().clone();
    let (fam2, top) = (fam.clone(), t.raw().clone());
    let into_t = LeDeriv::limiting(w, t.raw().clone(), move |k| match k {
        IndexElem::Just(x) => {
            let d = per_k(x)?.into_deriv();
            if Tree::same(d.lhs(), fam2.at(x).raw()) == Same::No {
                return Err(SmbError::InvalidComposition(format!(
                    "bound for index {x} starts from the wrong tree"
                )));
            }
            Ok(d)
        }
        _ => Ok(LeDeriv::zero(top.clone())),
    });
    let grown = inf_mono(&iso, &into_t)?;
    Ok(SmbLe(le_trans(&grown, &inf_collapse(&iso, t.is_idem())?)?))
}

// ---------------------------------------------------------------------------
// The join

pub fn smb_max(t1: &SmbTree, t2: &SmbTree) -> SmbTree {
    let (r1, r2) = (t1.raw(), t2.raw());
    let witness = ind_max_swap4(r1, r2, r1, r2)
        .and_then(|swap| le_trans(&swap, &ind_max_mono(t1.is_idem(), t2.is_idem())?))
        .expect("swap4 and monotonicity compose on well-formed SMB-trees");
    SmbTree::trusted(ind_max(r1, r2), witness)
}

pub fn smb_max_bound(side: Side, t1: &SmbTree, t2: &SmbTree) -> Result<SmbLe> {
    Ok(SmbLe(ind_max_bound(side, t1.raw(), t2.raw())?))
}

pub fn smb_max_mono(d1: &SmbLe, d2: &SmbLe) -> Result<SmbLe> {
    Ok(SmbLe(ind_max_mono(&d1.0, &d2.0)?))
}

/// `max t t ≤ t`, which is the stored witness.
pub fn smb_max_idem(t: &SmbTree) -> SmbLe {
    SmbLe(t.is_idem().clone())
}

/// `max t1 t2 ≤ t` from `t1 ≤ t` and `t2 ≤ t`.
pub fn smb_max_lub(d1: &SmbLe, d2: &SmbLe, t: &SmbTree) -> Result<SmbLe> {
    Ok(SmbLe(le_trans(&ind_max_mono(&d1.0, &d2.0)?, t.is_idem())?))
}

pub fn smb_max_strict_mono(w1: &LtWitness, w2: &LtWitness) -> Result<LtWitness> {
    ind_max_strict_mono(w1, w2)
}

/// `max t1 t2 < max (S t1') (S t2')` from `t1 ≤ t1'` and `t2 ≤ t2'`.
pub fn smb_max_suc_mono(d1: &SmbLe, d2: &SmbLe) -> Result<LtWitness> {
    let w1 = LtWitness::new(LeDeriv::suc_mono(d1.0.clone()))?;
    let w2 = LtWitness::new(LeDeriv::suc_mono(d2.0.clone()))?;
    ind_max_strict_mono(&w1, &w2)
}

/// The limit-based maximum `Lim (n ↦ if n = 0 then t1 else t2)`.
pub fn smb_lim_max_family(t1: &SmbTree, t2: &SmbTree) -> SmbFamily {
    let (a, b) = (t1.clone(), t2.clone());
    smb_nat_family(
        fingerprint("smb-limmax", &[t1.raw().fp(), t2.raw().fp()]),
        move |n| if n == 0 { a.clone() } else { b.clone() },
    )
}

pub fn smb_lim_max(t1: &SmbTree, t2: &SmbTree) -> SmbTree {
    smb_lim_max_family(t1, t2).lim()
}

/// `t1 ≤ max' t1 t2` or `t2 ≤ max' t1 t2`.
pub fn smb_lim_max_bound(side: Side, t1: &SmbTree, t2: &SmbTree) -> Result<SmbLe> {
    let n = match side {
        Side::L => 0,
        Side::R => 1,
    };
    smb_le_upper_bound(&smb_lim_max_family(t1, t2), &IndexElem::Nat(n))
}

/// `max t1 t2 ≤ max' t1 t2` and `max' t1 t2 ≤ max t1 t2`.
pub fn max_equiv_limmax(t1: &SmbTree, t2: &SmbTree) -> Result<(SmbLe, SmbLe)> {
    let fam = smb_lim_max_family(t1, t2);
    let alt = fam.lim();
    let m = smb_max(t1, t2);
    let to_alt = smb_max_lub(
        &smb_lim_max_bound(Side::L, t1, t2)?,
        &smb_lim_max_bound(Side::R, t1, t2)?,
        &alt,
    )?;
    let (a, b) = (t1.clone(), t2.clone());
    let from_alt = smb_le_least(&fam, &m, move |k| {
        let side = if *k == IndexElem::Nat(0) { Side::L } else { Side::R };
        smb_max_bound(side, &a, &b)
    })?;
    Ok((to_alt, from_alt))
}

/// Whether the code has an element to use as a witness.
pub fn inhabitant(code: &IndexCode) -> Option<IndexElem> {
    match code.cardinality() {
        Cardinality::Empty => None,
        _ => code.default_elem(),
    }
}
