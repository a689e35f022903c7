#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use smb_core::index::{IndexCode, IndexElem};
use smb_core::tree::{from_nat, nlim, omega, Tree};

/// A random limit-free tree: `S^n Z` with `n ≤ depth`.
pub fn finite_tree(rng: &mut ChaCha8Rng, depth: u64) -> Tree {
    from_nat(rng.gen_range(0..=depth))
}

/// A random tree of bounded depth with non-empty finite and `nat` limits.
pub fn random_tree(rng: &mut ChaCha8Rng, depth: u32) -> Tree {
    if depth == 0 {
        return from_nat(rng.gen_range(0..3));
    }
    match rng.gen_range(0..6) {
        0 => Tree::zero(),
        1 => Tree::succ(random_tree(rng, depth - 1)),
        2 => omega(),
        3 => {
            // Inhabited codes only: the join lemmas need an element to pick.
            let n = rng.gen_range(1..4);
            let kids: Vec<Tree> = (0..n).map(|_| random_tree(rng, depth - 1)).collect();
            Tree::lim(IndexCode::Fin(n), move |k| match k {
                IndexElem::Fin(i) => kids[*i as usize].clone(),
                _ => unreachable!(),
            })
        }
        4 => {
            let base = random_tree(rng, depth - 1);
            let step = rng.gen_range(0..3);
            nlim(move |n| (0..n * step).fold(base.clone(), |t, _| Tree::succ(t)))
        }
        _ => from_nat(rng.gen_range(0..6)),
    }
}
