use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use smb_core::deriv::*;
use smb_core::error::SmbError;
use smb_core::index::IndexElem;
use smb_core::search::{search_le, search_lt, SearchBudget};
use smb_core::smb::{smb_from_nat, smb_max, smb_omega, smb_zero, SmbTree};
use smb_core::tree::*;
use smb_core::wf::*;

fn lt(y: &Tree, x: &Tree) -> LtWitness {
    search_lt(y, x, SearchBudget::default()).unwrap_or_else(|| panic!("no witness for {y:?} < {x:?}"))
}

/// Walk down `chain` from `start`, one accessibility step per element.
fn walk(start: &AccNode, chain: &[Tree]) -> AccNode {
    let mut node = start.clone();
    for y in chain {
        node = node.step(&lt(y, node.subject())).unwrap();
        assert_eq!(Tree::same(node.subject(), y), Same::Yes);
    }
    node
}

#[test]
fn nothing_steps_below_zero() {
    let bogus = LtWitness::new(LeDeriv::from_parts(from_nat(1), Tree::zero(), Rule::Zero)).unwrap();
    assert!(matches!(ord_wf(&Tree::zero()).step(&bogus), Err(SmbError::MalformedWitness(_))));
    assert!(matches!(smb_wf(&smb_zero()).step(&bogus), Err(SmbError::MalformedWitness(_))));
}

#[test]
fn finite_descent() {
    let chain: Vec<Tree> = (0..3).rev().map(from_nat).collect();
    let bottom = walk(&ord_wf(&from_nat(3)), &chain);
    assert!(bottom.subject().is_zero());

    let five = ord_wf(&from_nat(5));
    let three = smaller_accessible(&five, &search_le(&from_nat(3), &from_nat(5), SearchBudget::default()).unwrap()).unwrap();
    assert_eq!(finite_value(three.subject()), Some(3));
    walk(&three, &[from_nat(2), from_nat(1)]);

    let same = smaller_accessible(&five, &le_refl(&from_nat(5))).unwrap();
    walk(&same, &[from_nat(4), from_nat(0)]);

    assert!(smaller_accessible(&five, &le_refl(&from_nat(6))).is_err());
}

#[test]
fn descent_through_a_limit() {
    let w = ord_wf(&omega());
    let five_lt = LtWitness::new(LeDeriv::cocone(omega(), IndexElem::Nat(6), le_refl(&from_nat(6)))).unwrap();
    let five = w.step(&five_lt).unwrap();
    assert_eq!(finite_value(five.subject()), Some(5));

    let seven = smaller_accessible(&w, &search_le(&from_nat(7), &omega(), SearchBudget::default()).unwrap()).unwrap();
    assert_eq!(finite_value(seven.subject()), Some(7));
    walk(&seven, &[from_nat(6), from_nat(2)]);
}

#[test]
fn malformed_witness_shapes() {
    let fake = LeDeriv::from_parts(
        from_nat(2),
        from_nat(3),
        Rule::Cocone {
            index: IndexElem::Nat(0),
            sub: le_refl(&from_nat(2)),
        },
    );
    let r = ord_wf(&from_nat(3)).step(&LtWitness::new(fake).unwrap());
    assert!(matches!(r, Err(SmbError::MalformedWitness(_))));

    let not_cocone = LeDeriv::from_parts(from_nat(2), omega(), Rule::SucMono(le_refl(&from_nat(1))));
    let r = ord_wf(&omega()).step(&LtWitness::new(not_cocone).unwrap());
    assert!(matches!(r, Err(SmbError::MalformedWitness(_))));
}

#[test]
fn smb_descent() {
    let w = smb_omega();
    let four = smb_wf(&w).step(&lt(&from_nat(4), w.raw())).unwrap();
    assert_eq!(finite_value(four.subject()), Some(4));

    let top: SmbTree = smb_max(&smb_from_nat(3), &smb_omega());
    let chain: Vec<Tree> = (0..10).rev().map(from_nat).collect();
    let bottom = walk(&smb_wf(&top), &chain);
    assert!(bottom.subject().is_zero());
}

fn value_step(x: &Tree, recur: &mut Recur<'_, Tree, u64>) -> Result<u64, SmbError> {
    match x.as_succ() {
        None => Ok(0),
        Some(p) => Ok(1 + recur(p.clone(), &LtWitness::new(le_refl(x))?)?),
    }
}

#[test]
fn constant_step_ignores_recursion() {
    for t in [Tree::zero(), from_nat(4), omega()] {
        let r = wf_rec(&ord_wf(&t), &|_, _| Ok(42u64), RecConfig::checked()).unwrap();
        assert_eq!(r, 42);
    }
}

#[test]
fn recursion_computes_finite_values() {
    for n in 0..=8 {
        let t = from_nat(n);
        let v = wf_rec(&ord_wf(&t), &value_step, RecConfig::checked()).unwrap();
        assert_eq!(Some(v), finite_value(&t));
    }
}

/// A pure step that descends by a fixed stride and mixes the results.
fn mixing_step(stride: u64, salt: u64, alt: bool) -> impl Fn(&Tree, &mut Recur<'_, Tree, u64>) -> Result<u64, SmbError> {
    move |x, recur| {
        let n = finite_value(x).unwrap();
        if n == 0 {
            return Ok(salt);
        }
        let y = from_nat(n.saturating_sub(stride));
        let w = if alt {
            // Same strict fact, different derivation.
            let up = search_le(&Tree::succ(y.clone()), x, SearchBudget::default()).unwrap();
            strict_compose(StrictKind::LtThenLe, &le_refl(&Tree::succ(y.clone())), &up)?
        } else {
            lt(&y, x)
        };
        Ok(recur(y, &w)?.wrapping_mul(31).wrapping_add(n ^ salt))
    }
}

#[test]
fn unfold_law_on_random_steps() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..100 {
        let (stride, salt) = (rng.gen_range(1..4), rng.gen_range(0..1000));
        let x = from_nat(rng.gen_range(0..12));
        let step = mixing_step(stride, salt, false);
        let direct = wf_rec(&ord_wf(&x), &step, RecConfig::checked()).unwrap();
        let unfolded = step(&x, &mut |y, _w| wf_rec(&ord_wf(&y), &step, RecConfig::checked())).unwrap();
        assert_eq!(direct, unfolded);
        let other = wf_rec(&ord_wf(&x), &mixing_step(stride, salt, true), RecConfig::checked()).unwrap();
        assert_eq!(direct, other);
    }
}

#[test]
fn recursion_rejects_witnesses_for_other_trees() {
    let step = |x: &Tree, recur: &mut Recur<'_, Tree, u64>| match x.as_succ() {
        None => Ok(0),
        Some(_) => recur(from_nat(0), &LtWitness::new(le_refl(x))?),
    };
    assert!(matches!(
        wf_rec(&ord_wf(&from_nat(3)), &step, RecConfig::default()),
        Err(SmbError::InvalidComposition(_))
    ));
}

#[test]
fn watchdog_stops_long_runs() {
    let cfg = RecConfig {
        audit: None,
        watchdog: 5,
    };
    let r = wf_rec(&ord_wf(&from_nat(10)), &value_step, cfg);
    assert!(matches!(r, Err(SmbError::Watchdog(5))));
    assert_eq!(WATCHDOG_STEPS, 1_000_000);
}

fn countdown(n: &u64, recur: &mut Recur<'_, u64, u64>) -> Result<u64, SmbError> {
    if *n == 0 {
        return Ok(0);
    }
    let w = lt(smb_from_nat(n - 1).raw(), smb_from_nat(*n).raw());
    Ok(1 + recur(n - 1, &w)?)
}

#[test]
fn audited_fixpoint() {
    let metric = |n: &u64| smb_from_nat(*n);
    assert_eq!(audited_fix(&metric, &|_, _| Ok(7u64), 9, RecConfig::checked()).unwrap(), 7);
    assert_eq!(audited_fix(&metric, &countdown, 6, RecConfig::checked()).unwrap(), 6);

    let corrupt = |n: &u64, recur: &mut Recur<'_, u64, u64>| {
        if *n == 0 {
            return Ok(0);
        }
        let (y, x) = (from_nat(n - 1), from_nat(*n));
        // Claims S y ≤ x by the zero rule.
        let w = LtWitness::new(LeDeriv::from_parts(Tree::succ(y), x, Rule::Zero))?;
        recur(n - 1, &w)
    };
    let r = audited_fix(&metric, &corrupt, 3, RecConfig::checked());
    assert!(matches!(r, Err(SmbError::DescentViolation { .. })), "{r:?}");

    // Descending to an input whose metric is not the witness's lower end.
    let wrong = |n: &u64, recur: &mut Recur<'_, u64, u64>| {
        if *n == 0 {
            return Ok(0);
        }
        recur(0, &lt(&from_nat(n - 1), &from_nat(*n)))
    };
    let r = audited_fix(&metric, &wrong, 3, RecConfig::checked());
    assert!(matches!(r, Err(SmbError::DescentViolation { .. })), "{r:?}");
}
