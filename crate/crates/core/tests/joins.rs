mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use smb_core::audit::{audit, AuditBudget};
use smb_core::deriv::*;
use smb_core::error::SmbError;
use smb_core::index::{IndexCode, IndexElem, NatIso};
use smb_core::inf::*;
use smb_core::join::*;
use smb_core::search::{search_le, SearchBudget};
use smb_core::tree::*;

#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

fn passes(d: &LeDeriv) -> bool {
    let r = audit(d, AuditBudget::STANDARD);
    if !r.passed() {
        eprintln!("{r}");
    }
    r.passed()
}

fn le(a: &Tree, b: &Tree) -> LeDeriv {
    search_le(a, b, SearchBudget::default()).unwrap_or_else(|| panic!("no derivation of {a:?} ≤ {b:?}"))
}

fn lt(a: u64, b: u64) -> LtWitness {
    LtWitness::new(le(&from_nat(a + 1), &from_nat(b))).unwrap()
}

fn ends(d: &LeDeriv) -> (Option<u64>, Option<u64>) {
    (finite_value(d.lhs()), finite_value(d.rhs()))
}

#[test]
fn lim_max_of_zeros_is_zero() {
    let m = lim_max(&Tree::zero(), &Tree::zero());
    assert!(passes(&le(&m, &Tree::zero())));
    assert!(passes(&le(&Tree::zero(), &m)));
    assert!(passes(&lim_max_idem(&Tree::zero())));
}

#[test]
fn lim_max_bounds_and_lub() {
    let (two, three) = (from_nat(2), from_nat(3));
    let l = lim_max_bound(Side::L, &two, &three);
    assert!(passes(&l));
    match l.rule() {
        Rule::Cocone { index, .. } => assert_eq!(index, &IndexElem::Nat(0)),
        _ => panic!("the left bound is a cocone at the first index"),
    }
    assert!(passes(&lim_max_bound(Side::R, &two, &three)));

    let lub = lim_max_lub(&le(&two, &three), &le(&three, &three)).unwrap();
    assert_eq!(finite_value(lub.rhs()), Some(3));
    assert!(passes(&lub));

    let five = from_nat(5);
    let lub = lim_max_lub(&le(&two, &five), &le(&three, &five)).unwrap();
    assert_eq!(finite_value(lub.rhs()), Some(5));
    assert!(passes(&lub));

    assert!(passes(&lim_max_bound(Side::L, &omega(), &Tree::zero())));
    assert!(lim_max_lub(&le(&two, &three), &le(&three, &five)).is_err());
}

#[test]
fn lim_max_mono_and_commut() {
    let d = lim_max_mono(&le(&from_nat(1), &from_nat(2)), &le(&from_nat(0), &omega())).unwrap();
    assert!(passes(&d));
    assert!(passes(&lim_max_commut(&from_nat(4), &omega()).unwrap()));
    assert!(passes(&lim_max_idem(&omega())));
}

#[test]
fn lim_max_successor_bound_goes_through_a_cocone() {
    // S (a ⊔ b) ≤ S a ⊔ S b holds, but only by picking a branch on the right;
    // a successor of a limit never steps under a limit branchwise.
    for (a, b) in [(0, 0), (1, 2), (2, 3)] {
        let lhs = Tree::succ(lim_max(&from_nat(a), &from_nat(b)));
        let rhs = lim_max(&from_nat(a + 1), &from_nat(b + 1));
        let d = le(&lhs, &rhs);
        assert_eq!(d.kind(), RuleKind::Cocone, "({a},{b})");
        assert!(passes(&d));
    }
    let z = le(&Tree::zero(), &lim_max(&Tree::zero(), &Tree::zero()));
    assert_eq!(z.kind(), RuleKind::Zero);
}

#[test]
fn views() {
    let one = from_nat(1);
    assert_eq!(ind_max_view(&Tree::zero(), &omega()), IndMaxView::ZL);
    assert_eq!(ind_max_view(&Tree::zero(), &Tree::zero()), IndMaxView::ZL);
    assert_eq!(ind_max_view(&omega(), &Tree::zero()), IndMaxView::ZR);
    assert_eq!(ind_max_view(&omega(), &one), IndMaxView::LimL);
    assert_eq!(ind_max_view(&omega(), &omega()), IndMaxView::LimL);
    assert_eq!(ind_max_view(&one, &omega()), IndMaxView::LimR);
    assert_eq!(ind_max_view(&one, &one), IndMaxView::SucSuc);
}

#[test]
fn ind_max_clauses() {
    let t = omega();
    assert!(Tree::ptr_eq(&ind_max(&Tree::zero(), &t), &t));
    assert!(Tree::ptr_eq(&ind_max(&t, &Tree::zero()), &t));
    let (a, b) = (from_nat(2), omega());
    let m = ind_max(&Tree::succ(a.clone()), &Tree::succ(b.clone()));
    let inner = m.as_succ().expect("a successor on the outside");
    assert_eq!(Tree::same(inner, &ind_max(&a, &b)), Same::Yes);
    assert_eq!(finite_value(&ind_max(&from_nat(3), &from_nat(5))), Some(5));
}

#[test]
fn ind_max_is_max_on_finite_trees() {
    for a in 0..=8 {
        for b in 0..=8 {
            assert_eq!(finite_value(&ind_max(&from_nat(a), &from_nat(b))), Some(a.max(b)), "{a} ∨ {b}");
        }
    }
}

#[test]
fn ind_max_bounds() {
    let (three, five) = (from_nat(3), from_nat(5));
    let l = ind_max_bound(Side::L, &three, &five).unwrap();
    assert_eq!(ends(&l), (Some(3), Some(5)));
    assert!(passes(&l));
    assert!(passes(&ind_max_bound(Side::R, &three, &five).unwrap()));

    let wrapped = Tree::lim(IndexCode::maybe(IndexCode::Fin(0)), |_| Tree::zero());
    let r = ind_max_bound(Side::R, &from_nat(1), &wrapped).unwrap();
    assert!(passes(&r));

    for (x, y) in [(omega(), from_nat(2)), (from_nat(2), omega()), (omega(), Tree::succ(omega()))] {
        assert!(passes(&ind_max_bound(Side::L, &x, &y).unwrap()));
        assert!(passes(&ind_max_bound(Side::R, &x, &y).unwrap()));
    }
}

#[test]
fn under_lim_needs_a_witness() {
    let empty = Tree::lim(IndexCode::Fin(0), |_| unreachable!());
    let r = under_lim(&empty, None, |_| unreachable!());
    assert!(matches!(r, Err(SmbError::EmptyIndex)));
    let d = under_lim(&omega(), Some(IndexElem::Nat(2)), |_| Ok(le_refl(&from_nat(2)))).unwrap();
    assert!(passes(&d));
}

#[test]
fn ind_max_mono_cases() {
    let r = ind_max_mono(&le_refl(&from_nat(2)), &le_refl(&omega())).unwrap();
    assert!(passes(&r));
    let d = ind_max_mono(&le(&from_nat(1), &from_nat(4)), &le(&from_nat(3), &omega())).unwrap();
    assert!(passes(&d));

    let w = ind_max_strict_mono(&lt(1, 2), &lt(3, 4)).unwrap();
    assert_eq!(finite_value(w.lower()), Some(3));
    assert!(passes(w.deriv()));
    let lt_omega = LtWitness::new(le(&from_nat(6), &omega())).unwrap();
    let w = ind_max_strict_mono(&lt(0, 3), &lt_omega).unwrap();
    assert!(passes(w.deriv()));
}

#[test]
fn commut_assoc_swap4() {
    let t = omega();
    let c = ind_max_commut(&Tree::zero(), &t).unwrap();
    assert_eq!(Tree::same(c.lhs(), c.rhs()), Same::Yes);
    assert!(passes(&c));

    let (one, two, three, four) = (from_nat(1), from_nat(2), from_nat(3), from_nat(4));
    for dir in [Assoc::L, Assoc::R] {
        let d = ind_max_assoc(dir, &one, &two, &three).unwrap();
        assert_eq!(ends(&d), (Some(3), Some(3)));
        assert!(passes(&d));
    }
    let s = ind_max_swap4(&one, &two, &three, &four).unwrap();
    assert_eq!(ends(&s), (Some(4), Some(4)));
    assert!(passes(&s));

    assert!(passes(&ind_max_commut(&from_nat(2), &omega()).unwrap()));
    assert!(passes(&ind_max_assoc(Assoc::L, &omega(), &two, &t).unwrap()));
    assert!(passes(&ind_max_swap4(&t, &one, &two, &t).unwrap()));
}

#[test]
fn self_joins_by_count() {
    assert!(n_ind_max(&omega(), 0).is_zero());
    assert_eq!(finite_value(&n_ind_max(&from_nat(2), 3)), Some(2));
    assert_eq!(finite_value(&n_ind_max(&Tree::zero(), 5)), Some(0));
}

#[test]
fn transfinite_join_structure() {
    let iso = NatIso::nat();
    let inf = ind_max_inf(&from_nat(3));
    let l = inf.as_lim().unwrap();
    assert!(l.at(&iso.inv(0)).is_zero());
    for n in 0..40 {
        assert!(finite_value(&l.at(&iso.inv(n))).unwrap() <= 3);
    }
}

#[test]
fn transfinite_join_lemmas() {
    let iso = NatIso::nat();
    assert!(passes(&inf_self(&iso, &Tree::zero())));
    assert!(passes(&inf_self(&iso, &omega())));
    assert!(passes(&inf_mono(&iso, &le_refl(&from_nat(2))).unwrap()));
    assert!(passes(&inf_mono(&iso, &le(&from_nat(2), &from_nat(5))).unwrap()));
    assert!(passes(&inf_idem(&iso, &Tree::zero())));

    let three = inf_idem(&iso, &from_nat(3));
    assert!(passes(&three));
    assert!(passes(&inf_idem(&iso, &omega())));
    let nested = nlim(|n| nlim(move |m| from_nat(n + m)));
    assert!(passes(&inf_idem(&iso, &nested)));
}

#[test]
fn collapse_closes_the_chain() {
    let iso = NatIso::nat();
    let z = inf_collapse(&iso, &LeDeriv::zero(Tree::zero())).unwrap();
    assert!(passes(&z));
    let one = from_nat(1);
    let c = inf_collapse(&iso, &le_refl(&ind_max(&one, &one)).with_endpoints(ind_max(&one, &one), one.clone())).unwrap();
    assert!(passes(&c));
    let chain = le_trans(&inf_self(&iso, &one), &c).unwrap();
    assert_eq!(ends(&chain), (Some(1), Some(1)));
    assert!(passes(&chain));
    assert!(inf_collapse(&iso, &le(&from_nat(2), &from_nat(3))).is_err());
}

#[test]
fn inf_idem_on_random_trees() {
    let iso = NatIso::nat();
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    for i in 0..200 {
        let t = common::random_tree(&mut rng, 3);
        assert!(passes(&inf_idem(&iso, &t)), "tree {i}: {t:?}");
    }
}
