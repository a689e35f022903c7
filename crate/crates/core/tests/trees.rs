use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use smb_core::index::{IndexCode, IndexElem};
use smb_core::inf::{ind_max_inf, n_ind_max};
use smb_core::search::{search_le, search_lt, SearchBudget};
use smb_core::tree::*;

/// Value of `Lim (fin n) f` computed by hand: the largest branch value.
fn max_branch(vals: &[u64]) -> u64 {
    vals.iter().copied().max().unwrap_or(0)
}

fn fin_lim(vals: Vec<u64>) -> Tree {
    let n = vals.len() as u64;
    Tree::lim(IndexCode::Fin(n), move |k| match k {
        IndexElem::Fin(i) => from_nat(vals[*i as usize]),
        _ => unreachable!(),
    })
}

#[test]
fn from_nat_builds_successors() {
    assert!(from_nat(0).is_zero());
    let three = from_nat(3);
    let mut cur = three.clone();
    for _ in 0..3 {
        cur = cur.as_succ().expect("successor").clone();
    }
    assert!(cur.is_zero());
    for k in 0..=100 {
        assert_eq!(finite_value(&from_nat(k)), Some(k));
    }
}

#[test]
fn finite_value_of_limits() {
    assert_eq!(finite_value(&Tree::zero()), Some(0));
    let empty = Tree::lim(IndexCode::Fin(0), |_| unreachable!("no branches"));
    assert_eq!(finite_value(&empty), Some(0));
    assert_eq!(finite_value(&fin_lim(vec![0, 1, 2])), Some(2));
    assert_eq!(finite_value(&omega()), None);
    assert_eq!(finite_value(&Tree::succ(fin_lim(vec![4, 1]))), Some(5));
}

#[test]
fn finite_value_ignores_branch_order() {
    let vals = vec![3, 9, 0, 4, 7];
    let want = max_branch(&vals);
    for r in 0..vals.len() {
        let mut v = vals.clone();
        v.rotate_left(r);
        assert_eq!(finite_value(&fin_lim(v.clone())), Some(want));
        v.reverse();
        assert_eq!(finite_value(&fin_lim(v)), Some(want));
    }
}

#[test]
fn nlim_of_constant_zero() {
    let t = nlim(|_| Tree::zero());
    let l = t.as_lim().expect("a limit");
    assert_eq!(l.code(), &IndexCode::Nat);
    for n in 0..10 {
        assert!(l.at(&IndexElem::Nat(n)).is_zero());
    }
}

#[test]
fn nlim_of_finite_ordinals_is_omega() {
    let w = nlim(from_nat);
    for n in [0, 1, 2, 5, 10, 40] {
        assert!(search_lt(&from_nat(n), &w, SearchBudget::default()).is_some(), "{n} < ω");
    }
    // Above ω and below it again: the same value as the shared ω.
    assert!(search_le(&w, &omega(), SearchBudget::default()).is_some());
    assert!(search_le(&omega(), &w, SearchBudget::default()).is_some());
}

#[test]
fn nlim_of_self_joins_is_the_transfinite_join() {
    let t = from_nat(2);
    let inf = ind_max_inf(&t);
    let alt = nlim(move |n| n_ind_max(&t, n));
    let l1 = inf.as_lim().unwrap();
    let l2 = alt.as_lim().unwrap();
    for n in 0..12 {
        let k = IndexElem::Nat(n);
        assert_eq!(Tree::same(&l1.at(&k), &l2.at(&k)), Same::Yes);
    }
}

#[test]
fn branches_are_memoized_invisibly() {
    let calls = Arc::new(AtomicUsize::new(0));
    let c2 = calls.clone();
    let t = nlim(move |n| {
        c2.fetch_add(1, Ordering::SeqCst);
        from_nat(n)
    });
    let l = t.as_lim().unwrap();
    let a = l.at(&IndexElem::Nat(4));
    let b = l.at(&IndexElem::Nat(4));
    assert_eq!(finite_value(&a), Some(4));
    assert!(Tree::ptr_eq(&a, &b));
    assert_eq!(calls.load(Ordering::SeqCst), 1);
}

#[test]
fn trees_are_shareable_across_threads() {
    let w = omega();
    let handles: Vec<_> = (0..4)
        .map(|i| {
            let w = w.clone();
            std::thread::spawn(move || finite_value(&w.as_lim().unwrap().at(&IndexElem::Nat(i))))
        })
        .collect();
    for (i, h) in handles.into_iter().enumerate() {
        assert_eq!(h.join().unwrap(), Some(i as u64));
    }
}
