//! Derivations of `t1 ≤ t2`.
//!
//! A derivation is a tree of rule applications. Each node records both of
//! its endpoints, so a malformed derivation is representable and the
//! auditor can point at the node that breaks its rule. The universal
//! premise of [`Rule::Limiting`] is a function from indices to derivations,
//! produced lazily and memoized per index.

use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Result, SmbError};
use crate::index::IndexElem;
use crate::tree::{Tree, View};

pub type BranchDerivs = Arc<dyn Fn(&IndexElem) -> Result<LeDeriv> + Send + Sync>;

#[derive(Clone)]
pub struct LeDeriv(Arc<DerivNode>);

struct DerivNode {
    lhs: Tree,
    rhs: Tree,
    rule: Rule,
    /// Built by [`le_refl`]; composing with it changes nothing.
    refl: bool,
}

#[derive(Clone)]
pub enum Rule {
    /// `Z ≤ t`.
    Zero,
    /// `a ≤ b` gives `S a ≤ S b`.
    SucMono(LeDeriv),
    /// `t ≤ f k` gives `t ≤ Lim c f`.
    Cocone { index: IndexElem, sub: LeDeriv },
    /// `f k ≤ t` for every `k` gives `Lim c f ≤ t`.
    Limiting(LimitingBranches),
}

#[derive(Clone)]
pub struct LimitingBranches(Arc<BranchesInner>);

struct BranchesInner {
    f: BranchDerivs,
    cache: Mutex<Vec<(IndexElem, Result<LeDeriv>)>>,
}

impl LimitingBranches {
    pub fn at(&self, k: &IndexElem) -> Result<LeDeriv> {
        if let Some((_, d)) = self.0.cache.lock().unwrap().iter().find(|(j, _)| j == k) {
            return d.clone();
        }
        let d = (self.0.f)(k);
        let mut cache = self.0.cache.lock().unwrap();
        if let Some((_, d)) = cache.iter().find(|(j, _)| j == k) {
            return d.clone();
        }
        cache.push((k.clone(), d.clone()));
        d
    }
}

/// The kind of a derivation's root, without its premises.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuleKind {
    Zero,
    SucMono,
    Cocone,
    Limiting,
}

impl LeDeriv {
    /// Build a node with arbitrary endpoints. Nothing is checked; this is the
    /// entry point for deserialized or deliberately corrupted derivations.
    pub fn from_parts(lhs: Tree, rhs: Tree, rule: Rule) -> LeDeriv {
        LeDeriv(Arc::new(DerivNode {
            lhs,
            rhs,
            rule,
            refl: false,
        }))
    }

    /// Whether this derivation is an instance of [`le_refl`].
    pub fn is_refl(&self) -> bool {
        self.0.refl
    }

    pub fn zero(rhs: Tree) -> LeDeriv {
        LeDeriv::from_parts(Tree::zero(), rhs, Rule::Zero)
    }

    pub fn suc_mono(sub: LeDeriv) -> LeDeriv {
        let lhs = Tree::succ(sub.lhs().clone());
        let rhs = Tree::succ(sub.rhs().clone());
        LeDeriv::from_parts(lhs, rhs, Rule::SucMono(sub))
    }

    /// `sub : t ≤ f k` into `t ≤ rhs` where `rhs = Lim c f`.
    pub fn cocone(rhs: Tree, index: IndexElem, sub: LeDeriv) -> LeDeriv {
        let lhs = sub.lhs().clone();
        LeDeriv::from_parts(lhs, rhs, Rule::Cocone { index, sub })
    }

    pub fn limiting<F>(lhs: Tree, rhs: Tree, f: F) -> LeDeriv
    where
        F: Fn(&IndexElem) -> Result<LeDeriv> + Send + Sync + 'static,
    {
        LeDeriv::from_parts(
            lhs,
            rhs,
            Rule::Limiting(LimitingBranches(Arc::new(BranchesInner {
                f: Arc::new(f),
                cache: Mutex::new(Vec::new()),
            }))),
        )
    }

    pub fn lhs(&self) -> &Tree {
        &self.0.lhs
    }

    pub fn rhs(&self) -> &Tree {
        &self.0.rhs
    }

    pub fn rule(&self) -> &Rule {
        &self.0.rule
    }

    pub fn kind(&self) -> RuleKind {
        match self.rule() {
            Rule::Zero => RuleKind::Zero,
            Rule::SucMono(_) => RuleKind::SucMono,
            Rule::Cocone { .. } => RuleKind::Cocone,
            Rule::Limiting(_) => RuleKind::Limiting,
        }
    }

    pub fn ptr_eq(a: &LeDeriv, b: &LeDeriv) -> bool {
        Arc::ptr_eq(&a.0, &b.0)
    }

    /// The same rule application under endpoints that are observationally
    /// equal to the current ones.
    pub fn with_endpoints(&self, lhs: Tree, rhs: Tree) -> LeDeriv {
        LeDeriv(Arc::new(DerivNode {
            lhs,
            rhs,
            rule: self.rule().clone(),
            refl: self.0.refl,
        }))
    }

    fn mark_refl(self) -> LeDeriv {
        match Arc::try_unwrap(self.0) {
            Ok(mut node) => {
                node.refl = true;
                LeDeriv(Arc::new(node))
            }
            Err(shared) => LeDeriv(Arc::new(DerivNode {
                lhs: shared.lhs.clone(),
                rhs: shared.rhs.clone(),
                rule: shared.rule.clone(),
                refl: true,
            })),
        }
    }

    pub(crate) fn addr(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }
}

impl fmt::Debug for LeDeriv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {:?} ≤ {:?}", self.kind(), self.lhs(), self.rhs())
    }
}

/// A derivation of `S t1 ≤ t2`, i.e. of `t1 < t2`.
#[derive(Clone, Debug)]
pub struct LtWitness(LeDeriv);

impl LtWitness {
    pub fn new(d: LeDeriv) -> Result<LtWitness> {
        if d.lhs().as_succ().is_none() {
            return Err(SmbError::InvalidComposition(
                "a strict witness must have a successor on the left".into(),
            ));
        }
        Ok(LtWitness(d))
    }

    /// The smaller tree `t1`.
    pub fn lower(&self) -> &Tree {
        self.0.lhs().as_succ().expect("checked on construction")
    }

    /// The larger tree `t2`.
    pub fn upper(&self) -> &Tree {
        self.0.rhs()
    }

    pub fn deriv(&self) -> &LeDeriv {
        &self.0
    }

    pub fn into_deriv(self) -> LeDeriv {
        self.0
    }
}

fn lim_code_err(what: &str) -> SmbError {
    SmbError::InvalidComposition(format!("{what} is not a limit"))
}

/// Reflexivity on `S^n Z`, shared between calls.
fn refl_finite(n: u64) -> LeDeriv {
    static CHAIN: OnceLock<Mutex<Vec<LeDeriv>>> = OnceLock::new();
    let mut chain = CHAIN
        .get_or_init(|| Mutex::new(vec![LeDeriv::zero(Tree::zero()).mark_refl()]))
        .lock()
        .unwrap();
    while chain.len() as u64 <= n {
        let prev = chain.last().unwrap().clone();
        let t = Tree::succ(prev.lhs().clone());
        chain.push(LeDeriv::from_parts(t.clone(), t, Rule::SucMono(prev)).mark_refl());
    }
    chain[n as usize].clone()
}

const SHARED_REFL_LIMIT: u64 = 1 << 16;

/// `t ≤ t`.
pub fn le_refl(t: &Tree) -> LeDeriv {
    if let Some(n) = succ_chain_len(t) {
        if n <= SHARED_REFL_LIMIT {
            return refl_finite(n).with_endpoints(t.clone(), t.clone());
        }
    }
    match t.view() {
        View::Zero => LeDeriv::zero(t.clone()).mark_refl(),
        View::Succ(a) => {
            LeDeriv::from_parts(t.clone(), t.clone(), Rule::SucMono(le_refl(a))).mark_refl()
        }
        View::Lim(_) => {
            let t2 = t.clone();
            LeDeriv::limiting(t.clone(), t.clone(), move |k| {
                let fk = t2.as_lim().unwrap().at(k);
                Ok(LeDeriv::cocone(t2.clone(), k.clone(), le_refl(&fk)))
            })
            .mark_refl()
        }
    }
}

/// `Some(n)` when `t` is `S^n Z`.
fn succ_chain_len(t: &Tree) -> Option<u64> {
    let mut n = 0;
    let mut cur = t;
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

/// Cheap check that two trees cannot be the same: after peeling common
/// successors, their heads differ.
fn ends_clash(a: &Tree, b: &Tree) -> bool {
    let (mut a, mut b) = (a, b);
    while let (Some(x), Some(y)) = (a.as_succ(), b.as_succ()) {
        if Tree::ptr_eq(a, b) {
            return false;
        }
        a = x;
        b = y;
    }
    Tree::definitely_different(a, b)
}

/// Glue `t1 ≤ t2` and `t2 ≤ t3` into `t1 ≤ t3`, eliminating the middle tree.
pub fn le_trans(d12: &LeDeriv, d23: &LeDeriv) -> Result<LeDeriv> {
    if ends_clash(d12.rhs(), d23.lhs()) {
        return Err(SmbError::InvalidComposition(format!(
            "middle endpoints differ: {:?} vs {:?}",
            d12.rhs(),
            d23.lhs()
        )));
    }
    // Composition with reflexivity is the other derivation, up to the
    // endpoint it is stated against.
    if d12.is_refl() {
        return Ok(d23.with_endpoints(d12.lhs().clone(), d23.rhs().clone()));
    }
    if d23.is_refl() {
        return Ok(d12.with_endpoints(d12.lhs().clone(), d23.rhs().clone()));
    }
    match (d12.rule(), d23.rule()) {
        (Rule::Zero, _) => Ok(LeDeriv::from_parts(
            d12.lhs().clone(),
            d23.rhs().clone(),
            Rule::Zero,
        )),
        (Rule::SucMono(p12), Rule::SucMono(p23)) => {
            let sub = le_trans(p12, p23)?;
            Ok(LeDeriv::from_parts(
                d12.lhs().clone(),
                d23.rhs().clone(),
                Rule::SucMono(sub),
            ))
        }
        (_, Rule::Cocone { index, sub }) => {
            let inner = le_trans(d12, sub)?;
            Ok(LeDeriv::from_parts(
                d12.lhs().clone(),
                d23.rhs().clone(),
                Rule::Cocone { index: index.clone(), sub: inner },
            ))
        }
        (Rule::Limiting(x), _) => {
            let d12 = d12.clone();
            let d23c = d23.clone();
            let _ = x;
            Ok(LeDeriv::limiting(
                d12.lhs().clone(),
                d23.rhs().clone(),
                move |k| match d12.rule() {
                    Rule::Limiting(x) => le_trans(&x.at(k)?, &d23c),
                    _ => unreachable!(),
                },
            ))
        }
        (Rule::Cocone { index, sub: p12 }, Rule::Limiting(x)) => {
            let code = d23
                .lhs()
                .as_lim()
                .ok_or_else(|| lim_code_err("left side of a limiting derivation"))?
                .code();
            if !code.contains(index) {
                return Err(SmbError::InvalidComposition(format!(
                    "cocone index {index} is not in {code}"
                )));
            }
            let r = le_trans(p12, &x.at(index)?)?;
            Ok(r.with_endpoints(d12.lhs().clone(), d23.rhs().clone()))
        }
        (a, b) => Err(SmbError::InvalidComposition(format!(
            "cannot compose {:?} with {:?}",
            kind_of(a),
            kind_of(b)
        ))),
    }
}

fn kind_of(r: &Rule) -> RuleKind {
    match r {
        Rule::Zero => RuleKind::Zero,
        Rule::SucMono(_) => RuleKind::SucMono,
        Rule::Cocone { .. } => RuleKind::Cocone,
        Rule::Limiting(_) => RuleKind::Limiting,
    }
}

/// `Lim c f1 ≤ Lim c f2` from `f1 k ≤ f2 k` for every `k`.
pub fn ext_lim<F>(lim1: &Tree, lim2: &Tree, per_k: F) -> Result<LeDeriv>
where
    F: Fn(&IndexElem) -> Result<LeDeriv> + Send + Sync + 'static,
{
    let l1 = lim1.as_lim().ok_or_else(|| lim_code_err("left side"))?;
    let l2 = lim2.as_lim().ok_or_else(|| lim_code_err("right side"))?;
    if l1.code() != l2.code() {
        return Err(SmbError::InvalidComposition(format!(
            "limits over different codes {} and {}",
            l1.code(),
            l2.code()
        )));
    }
    let rhs = lim2.clone();
    Ok(LeDeriv::limiting(lim1.clone(), lim2.clone(), move |k| {
        Ok(LeDeriv::cocone(rhs.clone(), k.clone(), per_k(k)?))
    }))
}

/// `t ≤ S t`.
pub fn le_succ_self(t: &Tree) -> LeDeriv {
    match t.view() {
        View::Zero => LeDeriv::zero(Tree::succ(t.clone())),
        View::Succ(a) => LeDeriv::from_parts(
            t.clone(),
            Tree::succ(t.clone()),
            Rule::SucMono(le_succ_self(a)),
        ),
        View::Lim(_) => {
            let t2 = t.clone();
            let st = Tree::succ(t.clone());
            LeDeriv::limiting(t.clone(), st, move |k| {
                let fk = t2.as_lim().unwrap().at(k);
                let up = LeDeriv::suc_mono(LeDeriv::cocone(t2.clone(), k.clone(), le_refl(&fk)));
                le_trans(&le_succ_self(&fk), &up)
            })
        }
    }
}

/// How two strict/non-strict facts are chained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StrictKind {
    /// `x < y` then `y ≤ z`.
    LtThenLe,
    /// `x ≤ y` then `y < z`.
    LeThenLt,
}

pub fn strict_compose(kind: StrictKind, d1: &LeDeriv, d2: &LeDeriv) -> Result<LtWitness> {
    match kind {
        StrictKind::LtThenLe => LtWitness::new(le_trans(d1, d2)?),
        StrictKind::LeThenLt => LtWitness::new(le_trans(&LeDeriv::suc_mono(d1.clone()), d2)?),
    }
}

/// `x < y` gives `x ≤ y`.
pub fn lt_to_le(w: &LtWitness) -> Result<LeDeriv> {
    le_trans(&le_succ_self(w.lower()), w.deriv())
}
