//! Index codes: the closed universe over which limits are taken.
//!
//! A code names a countable index set. `NatCode` is the natural numbers,
//! `FinCode(n)` is `{0, .., n-1}` and `MaybeOf(c)` adds one distinguished
//! `Nothing` element to the elements of `c`. Every code comes with a
//! canonical enumeration (`nth` / `position`), which is what the sampler,
//! the witness search and the isomorphisms with the naturals are built on.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IndexCode {
    Nat,
    Fin(u64),
    MaybeOf(Box<IndexCode>),
}

/// An element of the index set a code denotes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IndexElem {
    Nat(u64),
    Fin(u64),
    Nothing,
    Just(Box<IndexElem>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cardinality {
    Empty,
    Finite(u64),
    CountablyInfinite,
}

/// Finite codes at most this large are enumerated rather than sampled.
pub const EXHAUSTIVE_LIMIT: u64 = 64;

/// Upper end (exclusive) of the range seeded samples of infinite codes are
/// drawn from, counted in canonical enumeration positions.
pub const SAMPLE_RANGE: u64 = 24;

/// The "large" position every sample of an infinite code includes.
pub const LARGE_POSITION: u64 = SAMPLE_RANGE - 1;

impl IndexCode {
    pub fn maybe(inner: IndexCode) -> IndexCode {
        IndexCode::MaybeOf(Box::new(inner))
    }

    pub fn cardinality(&self) -> Cardinality {
        match self {
            IndexCode::Nat => Cardinality::CountablyInfinite,
            IndexCode::Fin(0) => Cardinality::Empty,
            IndexCode::Fin(n) => Cardinality::Finite(*n),
            IndexCode::MaybeOf(inner) => match inner.cardinality() {
                Cardinality::Empty => Cardinality::Finite(1),
                Cardinality::Finite(n) => Cardinality::Finite(n + 1),
                Cardinality::CountablyInfinite => Cardinality::CountablyInfinite,
            },
        }
    }

    pub fn is_empty(&self) -> bool {
        self.cardinality() == Cardinality::Empty
    }

    /// Whether `elem` belongs to the interpretation of this code.
    pub fn contains(&self, elem: &IndexElem) -> bool {
        match (self, elem) {
            (IndexCode::Nat, IndexElem::Nat(_)) => true,
            (IndexCode::Fin(n), IndexElem::Fin(i)) => i < n,
            (IndexCode::MaybeOf(_), IndexElem::Nothing) => true,
            (IndexCode::MaybeOf(c), IndexElem::Just(e)) => c.contains(e),
            _ => false,
        }
    }

    /// The element at position `i` of the canonical enumeration.
    ///
    /// For `MaybeOf(c)` position 0 is `Nothing` and position `i + 1` is
    /// `Just` of position `i` of `c`.
    pub fn nth(&self, i: u64) -> Option<IndexElem> {
        match self {
            IndexCode::Nat => Some(IndexElem::Nat(i)),
            IndexCode::Fin(n) => (i < *n).then_some(IndexElem::Fin(i)),
            IndexCode::MaybeOf(inner) => {
                if i == 0 {
                    Some(IndexElem::Nothing)
                } else {
                    inner.nth(i - 1).map(|e| IndexElem::Just(Box::new(e)))
                }
            }
        }
    }

    /// Inverse of [`IndexCode::nth`].
    pub fn position(&self, elem: &IndexElem) -> Option<u64> {
        match (self, elem) {
            (IndexCode::Nat, IndexElem::Nat(n)) => Some(*n),
            (IndexCode::Fin(n), IndexElem::Fin(i)) if i < n => Some(*i),
            (IndexCode::MaybeOf(_), IndexElem::Nothing) => Some(0),
            (IndexCode::MaybeOf(c), IndexElem::Just(e)) => c.position(e).map(|p| p + 1),
            _ => None,
        }
    }

    /// Some element of the code, used where a limit must be inhabited.
    pub fn default_elem(&self) -> Option<IndexElem> {
        self.nth(0)
    }

    /// All elements of a finite code, in canonical order.
    pub fn elements(&self) -> Option<Vec<IndexElem>> {
        match self.cardinality() {
            Cardinality::Empty => Some(Vec::new()),
            Cardinality::Finite(n) => Some((0..n).filter_map(|i| self.nth(i)).collect()),
            Cardinality::CountablyInfinite => None,
        }
    }
}

impl fmt::Display for IndexCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexCode::Nat => write!(f, "nat"),
            IndexCode::Fin(n) => write!(f, "fin {n}"),
            IndexCode::MaybeOf(c) => write!(f, "maybe({c})"),
        }
    }
}

impl std::str::FromStr for IndexCode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "nat" {
            return Ok(IndexCode::Nat);
        }
        if let Some(rest) = s.strip_prefix("fin") {
            let n = rest.trim();
            if !rest.starts_with(char::is_whitespace) {
                return Err(format!("expected `fin N`, found `{s}`"));
            }
            return n
                .parse::<u64>()
                .map(IndexCode::Fin)
                .map_err(|_| format!("bad cardinality `{n}`"));
        }
        if let Some(rest) = s.strip_prefix("maybe") {
            let rest = rest.trim();
            if let Some(inner) = rest.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
                return inner.parse().map(IndexCode::maybe);
            }
        }
        Err(format!("unknown index code `{s}`"))
    }
}

impl fmt::Display for IndexElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexElem::Nat(n) => write!(f, "{n}"),
            IndexElem::Fin(i) => write!(f, "#{i}"),
            IndexElem::Nothing => write!(f, "nothing"),
            IndexElem::Just(e) => write!(f, "just({e})"),
        }
    }
}

/// A bijection between the elements of a code and the natural numbers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NatIso {
    code: IndexCode,
}

impl NatIso {
    /// The identity pairing on `NatCode`.
    pub fn nat() -> NatIso {
        NatIso { code: IndexCode::Nat }
    }

    /// Lift a bijection through `MaybeOf`: `Nothing ↦ 0`, `Just e ↦ 1 + iso(e)`.
    pub fn maybe(inner: &NatIso) -> NatIso {
        NatIso { code: IndexCode::maybe(inner.code.clone()) }
    }

    /// The canonical bijection for an infinite code: an element's position
    /// in the code's enumeration.
    pub fn for_code(code: &IndexCode) -> Option<NatIso> {
        (code.cardinality() == Cardinality::CountablyInfinite).then(|| NatIso { code: code.clone() })
    }

    pub fn code(&self) -> &IndexCode {
        &self.code
    }

    pub fn fun(&self, elem: &IndexElem) -> u64 {
        self.code
            .position(elem)
            .unwrap_or_else(|| panic!("{elem} is not an element of {}", self.code))
    }

    pub fn inv(&self, n: u64) -> IndexElem {
        self.code.nth(n).expect("codes with a nat iso are infinite")
    }
}

pub fn nat_iso() -> NatIso {
    NatIso::nat()
}

pub fn maybe_nat_iso(inner: &NatIso) -> NatIso {
    NatIso::maybe(inner)
}

/// Draw one element of `code`, deterministically from `seed`.
pub fn sample(code: &IndexCode, seed: u64) -> Option<IndexElem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match code.cardinality() {
        Cardinality::Empty => None,
        Cardinality::Finite(n) => code.nth(rng.gen_range(0..n)),
        Cardinality::CountablyInfinite => code.nth(rng.gen_range(0..SAMPLE_RANGE)),
    }
}

/// Indices a checker looks at for one limit: up to `count` distinct
/// elements, always starting with positions 0, 1 and [`LARGE_POSITION`] for
/// infinite codes, topped up from a generator seeded with `seed`.
///
/// When `count` is smaller than the number of fixed positions, the fixed
/// positions are rotated by the seed so that different callers see
/// different boundary indices.
pub fn sample_indices(code: &IndexCode, count: usize, seed: u64) -> Vec<IndexElem> {
    sample_indices_within(code, count, SAMPLE_RANGE.max(count as u64 * 2), seed)
}

/// Like [`sample_indices`], but positions are drawn from `0..range` (widened
/// to `count` if needed).
pub fn sample_indices_within(code: &IndexCode, count: usize, range: u64, seed: u64) -> Vec<IndexElem> {
    let count = count.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size = match code.cardinality() {
        Cardinality::Empty => return Vec::new(),
        Cardinality::Finite(n) => n,
        Cardinality::CountablyInfinite => u64::MAX,
    };
    if size <= count as u64 {
        return code.elements().unwrap_or_default();
    }
    let range = size.min(range.max(count as u64));
    let mut fixed: Vec<u64> = vec![0, 1, range - 1];
    fixed.dedup();
    let rot = (seed % fixed.len() as u64) as usize;
    fixed.rotate_left(rot);
    let mut picked: Vec<u64> = Vec::with_capacity(count);
    for p in fixed {
        if picked.len() == count {
            break;
        }
        if !picked.contains(&p) {
            picked.push(p);
        }
    }
    while picked.len() < count {
        let p = rng.gen_range(0..range);
        if !picked.contains(&p) {
            picked.push(p);
        }
    }
    picked.into_iter().filter_map(|p| code.nth(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cardinalities() {
        assert_eq!(IndexCode::Fin(0).cardinality(), Cardinality::Empty);
        assert_eq!(IndexCode::Nat.cardinality(), Cardinality::CountablyInfinite);
        assert_eq!(IndexCode::maybe(IndexCode::Fin(0)).cardinality(), Cardinality::Finite(1));
        assert_eq!(IndexCode::maybe(IndexCode::Nat).cardinality(), Cardinality::CountablyInfinite);
    }

    #[test]
    fn nat_iso_roundtrips() {
        let iso = nat_iso();
        assert_eq!(iso.fun(&iso.inv(0)), 0);
        assert_eq!(iso.fun(&iso.inv(7)), 7);
        for s in 0..100 {
            let e = sample(&IndexCode::Nat, s).unwrap();
            assert_eq!(iso.inv(iso.fun(&e)), e);
        }
    }

    #[test]
    fn maybe_iso_pairing() {
        let base = nat_iso();
        let iso = maybe_nat_iso(&base);
        assert_eq!(iso.fun(&IndexElem::Nothing), 0);
        assert_eq!(iso.fun(&IndexElem::Just(Box::new(base.inv(0)))), 1);
        let mut seen = std::collections::HashSet::new();
        for s in 0..1000u64 {
            let e = iso.inv(s * 7 % 997);
            assert_eq!(iso.inv(iso.fun(&e)), e);
            seen.insert(iso.fun(&e));
        }
        assert_eq!(seen.len(), 997);
    }

    #[test]
    fn sampling() {
        for s in 0..50 {
            assert_eq!(sample(&IndexCode::Fin(0), s), None);
            match sample(&IndexCode::Fin(3), s) {
                Some(IndexElem::Fin(i)) => assert!(i < 3),
                other => panic!("bad sample {other:?}"),
            }
        }
        assert_eq!(sample(&IndexCode::Nat, 42), sample(&IndexCode::Nat, 42));
    }

    #[test]
    fn empty_iff_no_samples() {
        let codes = [
            IndexCode::Nat,
            IndexCode::Fin(0),
            IndexCode::Fin(5),
            IndexCode::maybe(IndexCode::Fin(0)),
            IndexCode::maybe(IndexCode::maybe(IndexCode::Nat)),
        ];
        for c in &codes {
            let none = (0..64).all(|s| sample(c, s).is_none());
            assert_eq!(none, c.is_empty(), "{c}");
        }
    }

    #[test]
    fn fin_enumerates_range() {
        let els = IndexCode::Fin(5).elements().unwrap();
        assert_eq!(els, (0..5).map(IndexElem::Fin).collect::<Vec<_>>());
    }

    #[test]
    fn sample_indices_policy() {
        let all = sample_indices(&IndexCode::Fin(10), 16, 3);
        assert_eq!(all.len(), 10);
        let nat = sample_indices(&IndexCode::Nat, 16, 3);
        assert_eq!(nat.len(), 16);
        assert!(nat.contains(&IndexElem::Nat(0)));
        assert!(nat.contains(&IndexElem::Nat(1)));
        assert!(nat.contains(&IndexElem::Nat(LARGE_POSITION)));
        assert_eq!(nat, sample_indices(&IndexCode::Nat, 16, 3));
        assert_eq!(sample_indices(&IndexCode::Nat, 1, 9).len(), 1);
        assert!(sample_indices(&IndexCode::Fin(0), 4, 1).is_empty());
    }

    #[test]
    fn code_text_form() {
        for c in [
            IndexCode::Nat,
            IndexCode::Fin(3),
            IndexCode::maybe(IndexCode::maybe(IndexCode::Fin(0))),
        ] {
            assert_eq!(c.to_string().parse::<IndexCode>().unwrap(), c);
        }
        assert!("fin".parse::<IndexCode>().is_err());
    }
}
