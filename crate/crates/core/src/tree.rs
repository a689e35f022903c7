//! Raw Brouwer trees: zero, successor, and limits over an index code.
//!
//! Trees are immutable and shared through `Arc`. A limit stores its branch
//! function and memoizes the subtrees it has produced, so asking for the same
//! branch twice yields the same `Arc`.
//!
//! Every node carries a 64-bit construction fingerprint. Zero and successor
//! fingerprints are structural. A limit's fingerprint is either fresh (unique
//! per construction) or a key supplied by whoever builds it; operations such
//! as `ind_max` key the limits they produce by their operands, so rebuilding
//! the same expression yields a tree with the same fingerprint. Observational
//! comparison ([`Tree::same`]) uses fingerprints first and falls back to
//! sampling branches.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use crate::index::{sample_indices, Cardinality, IndexCode, IndexElem, NatIso};

pub type Branch = Arc<dyn Fn(&IndexElem) -> Tree + Send + Sync>;

#[derive(Clone)]
pub struct Tree(Arc<Node>);

struct Node {
    fp: u64,
    kind: Kind,
}

enum Kind {
    Zero,
    Succ(Tree),
    Lim(Limit),
}

pub struct Limit {
    code: IndexCode,
    branch: Branch,
    cache: Mutex<Vec<(IndexElem, Tree)>>,
}

/// Borrowed view of a tree's head constructor.
pub enum View<'a> {
    Zero,
    Succ(&'a Tree),
    Lim(&'a Limit),
}

/// Outcome of an observational comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Same {
    Yes,
    No,
    Unknown,
}

static FRESH: AtomicU64 = AtomicU64::new(1);

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic 64-bit digest of a tag and some words. Not cryptographic;
/// only needs to make accidental collisions between distinct constructions
/// unlikely.
pub(crate) fn fingerprint(tag: &str, parts: &[u64]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in tag.bytes() {
        h = (h ^ b as u64).wrapping_mul(0x100_0000_01b3);
    }
    for &p in parts {
        h = mix(h ^ mix(p.wrapping_add(0x9e37_79b9_7f4a_7c15)));
    }
    h
}

pub(crate) fn code_digest(code: &IndexCode) -> u64 {
    match code {
        IndexCode::Nat => fingerprint("nat", &[]),
        IndexCode::Fin(n) => fingerprint("fin", &[*n]),
        IndexCode::MaybeOf(c) => fingerprint("maybe", &[code_digest(c)]),
    }
}

/// A key no other construction will ever produce.
pub fn fresh_key() -> u64 {
    fingerprint("fresh", &[FRESH.fetch_add(1, Ordering::Relaxed)])
}

impl Limit {
    pub fn code(&self) -> &IndexCode {
        &self.code
    }

    /// The branch at `k`. Panics if `k` is not an element of the code.
    pub fn at(&self, k: &IndexElem) -> Tree {
        assert!(self.code.contains(k), "index {k} outside {}", self.code);
        if let Some((_, t)) = self.cache.lock().unwrap().iter().find(|(j, _)| j == k) {
            return t.clone();
        }
        let t = (self.branch)(k);
        let mut cache = self.cache.lock().unwrap();
        if let Some((_, t)) = cache.iter().find(|(j, _)| j == k) {
            return t.clone();
        }
        cache.push((k.clone(), t.clone()));
        t
    }
}

impl Tree {
    pub fn zero() -> Tree {
        static ZERO: OnceLock<Tree> = OnceLock::new();
        ZERO.get_or_init(|| {
            Tree(Arc::new(Node {
                fp: fingerprint("Z", &[]),
                kind: Kind::Zero,
            }))
        })
        .clone()
    }

    pub fn succ(t: Tree) -> Tree {
        Tree(Arc::new(Node {
            fp: fingerprint("S", &[t.fp()]),
            kind: Kind::Succ(t),
        }))
    }

    /// A limit with a fresh identity.
    pub fn lim<F>(code: IndexCode, f: F) -> Tree
    where
        F: Fn(&IndexElem) -> Tree + Send + Sync + 'static,
    {
        Tree::lim_keyed(code, fresh_key(), f)
    }

    /// A limit whose identity is `key`. Two limits built with the same code and
    /// key must have observationally equal branch functions.
    pub fn lim_keyed<F>(code: IndexCode, key: u64, f: F) -> Tree
    where
        F: Fn(&IndexElem) -> Tree + Send + Sync + 'static,
    {
        let code_fp = code_digest(&code);
        Tree(Arc::new(Node {
            fp: fingerprint("Lim", &[code_fp, key]),
            kind: Kind::Lim(Limit {
                code,
                branch: Arc::new(f),
                cache: Mutex::new(Vec::new()),
            }),
        }))
    }

    pub fn fp(&self) -> u64 {
        self.0.fp
    }

    pub fn view(&self) -> View<'_> {
        match &self.0.kind {
            Kind::Zero => View::Zero,
            Kind::Succ(t) => View::Succ(t),
            Kind::Lim(l) => View::Lim(l),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.0.kind, Kind::Zero)
    }

    pub fn as_succ(&self) -> Option<&Tree> {
        match &self.0.kind {
            Kind::Succ(t) => Some(t),
            _ => None,
        }
    }

    pub fn as_lim(&self) -> Option<&Limit> {
        match &self.0.kind {
            Kind::Lim(l) => Some(l),
            _ => None,
        }
    }

    pub fn ptr_eq(a: &Tree, b: &Tree) -> bool {
        Arc::ptr_eq(&a.0, &b.0)
    }

    /// Observational comparison with a default exploration budget.
    pub fn same(a: &Tree, b: &Tree) -> Same {
        let mut fuel = 4096;
        same_rec(a, b, 0, &mut fuel)
    }

    /// Cheap check for trees that certainly differ: different head
    /// constructors, or limits over different codes.
    pub fn definitely_different(a: &Tree, b: &Tree) -> bool {
        match (a.view(), b.view()) {
            (View::Zero, View::Zero) | (View::Succ(_), View::Succ(_)) => false,
            (View::Lim(l1), View::Lim(l2)) => l1.code != l2.code,
            _ => true,
        }
    }

    /// Render with limits truncated below `depth`.
    pub fn describe(&self, depth: usize) -> String {
        let mut out = String::new();
        describe_into(self, depth, &mut out);
        out
    }
}

const SAME_SAMPLES: usize = 3;
const SAME_DEPTH: usize = 8;

fn same_rec(a: &Tree, b: &Tree, depth: usize, fuel: &mut u64) -> Same {
    let (mut a, mut b) = (a.clone(), b.clone());
    loop {
        if Tree::ptr_eq(&a, &b) || a.fp() == b.fp() {
            return Same::Yes;
        }
        if *fuel == 0 {
            return Same::Unknown;
        }
        *fuel -= 1;
        let (na, nb) = match (a.view(), b.view()) {
            (View::Zero, View::Zero) => return Same::Yes,
            (View::Succ(x), View::Succ(y)) => (x.clone(), y.clone()),
            (View::Lim(l1), View::Lim(l2)) => {
                if l1.code != l2.code {
                    return Same::No;
                }
                if depth >= SAME_DEPTH {
                    return Same::Unknown;
                }
                let seed = a.fp() ^ b.fp().rotate_left(17);
                let mut verdict = Same::Yes;
                for k in sample_indices(&l1.code, SAME_SAMPLES, seed) {
                    match same_rec(&l1.at(&k), &l2.at(&k), depth + 1, fuel) {
                        Same::Yes => {}
                        Same::No => return Same::No,
                        Same::Unknown => verdict = Same::Unknown,
                    }
                }
                return verdict;
            }
            _ => return Same::No,
        };
        a = na;
        b = nb;
    }
}

fn describe_into(t: &Tree, depth: usize, out: &mut String) {
    let mut n = 0u64;
    let mut cur = t.clone();
    while let Some(c) = cur.as_succ() {
        n += 1;
        cur = c.clone();
    }
    match cur.view() {
        View::Zero => out.push_str(&n.to_string()),
        View::Lim(l) => {
            for _ in 0..n {
                out.push_str("S ");
            }
            if depth == 0 {
                out.push_str(&format!("Lim({}, ..)", l.code));
            } else {
                out.push_str(&format!("Lim({}, [", l.code));
                let shown = match l.code.cardinality() {
                    Cardinality::Finite(n) => n.min(3),
                    Cardinality::Empty => 0,
                    Cardinality::CountablyInfinite => 3,
                };
                for i in 0..shown {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    let k = l.code.nth(i).unwrap();
                    describe_into(&l.at(&k), depth - 1, out);
                }
                out.push_str(", ..])");
            }
        }
        View::Succ(_) => unreachable!(),
    }
}

impl fmt::Debug for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe(2))
    }
}

/// The `n`-fold successor of zero.
pub fn from_nat(n: u64) -> Tree {
    (0..n).fold(Tree::zero(), |t, _| Tree::succ(t))
}

/// A limit over the naturals, read through `iso`.
pub fn nlim_with<F>(iso: &NatIso, key: u64, seq: F) -> Tree
where
    F: Fn(u64) -> Tree + Send + Sync + 'static,
{
    let iso2 = iso.clone();
    Tree::lim_keyed(iso.code().clone(), key, move |k| seq(iso2.fun(k)))
}

/// `Lim nat (seq ∘ fun)` with a fresh identity.
pub fn nlim<F>(seq: F) -> Tree
where
    F: Fn(u64) -> Tree + Send + Sync + 'static,
{
    nlim_with(&NatIso::nat(), fresh_key(), seq)
}

/// The limit of the finite ordinals over plain `nat`.
pub fn omega() -> Tree {
    nlim_with(&NatIso::nat(), fingerprint("omega", &[]), from_nat)
}

/// The value of a tree built only from finite or empty limits.
///
/// Limits evaluate to the maximum of their branches (zero when empty). Any
/// infinite limit makes the value undefined.
pub fn finite_value(t: &Tree) -> Option<u64> {
    let mut n = 0u64;
    let mut cur = t.clone();
    loop {
        let next = match cur.view() {
            View::Zero => return Some(n),
            View::Succ(c) => c.clone(),
            View::Lim(l) => {
                let els = l.code.elements()?;
                let mut best = 0u64;
                for k in els {
                    best = best.max(finite_value(&l.at(&k))?);
                }
                return Some(n + best);
            }
        };
        n += 1;
        cur = next;
    }
}
