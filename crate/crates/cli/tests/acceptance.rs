//! End-to-end acceptance checks. Each criterion prints one PASS or FAIL line;
//! the process exits non-zero if any of them failed.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use smb_core::audit::{audit, AuditBudget};
use smb_core::deriv::{LeDeriv, LtWitness, RuleKind};
use smb_core::error::SmbError;
use smb_core::expr::{self, check, compare, elaborate, random_closed, Comparison, DerivText, GenConfig, OrdExpr};
use smb_core::index::{IndexCode, IndexElem, NatIso};
use smb_core::inf::inf_idem;
use smb_core::join::{ind_max, lim_max, Side};
use smb_core::lawcheck::run_laws;
use smb_core::search::{decide_le_finite, search_le, SearchBudget};
use smb_core::smb::{max_equiv_limmax, smb_max, smb_max_bound, smb_max_strict_mono, smb_succ, SmbTree};
use smb_core::tree::{finite_value, from_nat, nlim, omega, Same, Tree};
use smb_core::unify::{unify, HTree, HView, UnifyConfig};
use smb_core::wf::{ord_wf, wf_rec, RecConfig, Recur, WATCHDOG_STEPS};

#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

const BUDGET: AuditBudget = AuditBudget::STANDARD;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn audits(d: &LeDeriv) -> bool {
    audit(d, BUDGET).passed()
}

/// A random tree with numerals, successors, ω, finite limits and shifted
/// limits over the naturals (which nest).
fn random_tree(rng: &mut ChaCha8Rng, depth: u32) -> Tree {
    if depth == 0 {
        return from_nat(rng.gen_range(0..4));
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

const EXPRS: GenConfig = GenConfig {
    depth: 3,
    max_nat: 4,
    max_lims: 2,
};

fn random_smb(rng: &mut ChaCha8Rng) -> SmbTree {
    elaborate(&random_closed(rng, EXPRS)).expect("closed expressions elaborate")
}

// ---------------------------------------------------------------------------

fn finite_oracle() -> Outcome {
    let b = SearchBudget::default();
    let mut found = 0;
    let mut one = |i: u64, j: u64| -> Result<(), String> {
        let d = search_le(&from_nat(i), &from_nat(j), b);
        ensure(d.is_some() == (i <= j), || format!("search on {i} ≤ {j} disagrees with arithmetic"))?;
        ensure(decide_le_finite(&from_nat(i), &from_nat(j)) == Some(i <= j), || format!("oracle on {i} ≤ {j}"))?;
        if let Some(d) = d {
            ensure(audits(&d), || format!("derivation of {i} ≤ {j} fails its audit"))?;
            found += 1;
        }
        Ok(())
    };
    for i in 0..=8 {
        for j in 0..=8 {
            one(i, j)?;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        one(rng.gen_range(0..=12), rng.gen_range(0..=12))?;
    }
    Ok(format!("1081 pairs, {found} derivations audited"))
}

fn join_successor_law() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for i in 0..10_000 {
        let (a, b) = (random_tree(&mut rng, 3), random_tree(&mut rng, 3));
        let m = ind_max(&Tree::succ(a.clone()), &Tree::succ(b.clone()));
        let inner = m.as_succ().ok_or_else(|| format!("pair {i}: join of successors is not a successor"))?;
        ensure(Tree::same(inner, &ind_max(&a, &b)) == Same::Yes, || format!("pair {i}: wrong predecessor"))?;
    }
    for a in 0..=8 {
        for b in 0..=8 {
            let v = finite_value(&ind_max(&from_nat(a), &from_nat(b)));
            ensure(v == Some(a.max(b)), || format!("{a} ∨ {b} = {v:?}"))?;
        }
    }
    Ok("10000 random pairs, 81 numeral pairs".into())
}

fn transfinite_idempotence() -> Outcome {
    let iso = NatIso::nat();
    let mut corpus = vec![omega(), nlim(|n| nlim(move |m| from_nat(n + m)))];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    while corpus.len() < 200 {
        corpus.push(random_tree(&mut rng, 3));
    }
    for (i, t) in corpus.iter().enumerate() {
        let r = audit(&inf_idem(&iso, t), BUDGET);
        ensure(r.passed(), || format!("tree {i}: {r}"))?;
    }
    Ok("200 trees".into())
}

fn smb_witnesses() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for i in 0..500 {
        let e = random_closed(&mut rng, GenConfig::default());
        let t = elaborate(&e).map_err(|err| format!("{e}: {err}"))?;
        let r = t.witness_report();
        ensure(r.passed(), || format!("expression {i} `{e}`: {r}"))?;
    }
    Ok("500 elaborations".into())
}

/// `t < smb_max(S t, extra)`.
fn grow(rng: &mut ChaCha8Rng, t: &SmbTree) -> Result<(SmbTree, LtWitness), String> {
    let extra = random_smb(rng);
    let st = smb_succ(t);
    let up = smb_max_bound(Side::L, &st, &extra).map_err(|e| e.to_string())?;
    let w = LtWitness::new(up.into_deriv()).map_err(|e| e.to_string())?;
    Ok((smb_max(&st, &extra), w))
}

fn strict_monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..500 {
        let (a, b) = (random_smb(&mut rng), random_smb(&mut rng));
        let (_, wa) = grow(&mut rng, &a)?;
        let (_, wb) = grow(&mut rng, &b)?;
        let w = smb_max_strict_mono(&wa, &wb).map_err(|e| format!("pair {i}: {e}"))?;
        ensure(Tree::same(w.lower(), smb_max(&a, &b).raw()) != Same::No, || format!("pair {i}: wrong endpoint"))?;
        ensure(audits(w.deriv()), || format!("pair {i}: witness fails its audit"))?;
    }
    // The limit-based join only gets S (a ⊔ b) ≤ S a ⊔ S b by picking a branch.
    for (a, b) in [(0, 0), (1, 2), (2, 3)] {
        let lhs = Tree::succ(lim_max(&from_nat(a), &from_nat(b)));
        let rhs = lim_max(&from_nat(a + 1), &from_nat(b + 1));
        let d = search_le(&lhs, &rhs, SearchBudget::default()).ok_or("no derivation for the limit join")?;
        ensure(d.kind() == RuleKind::Cocone, || format!("({a},{b}): expected a cocone, got {:?}", d.kind()))?;
    }
    Ok("500 strict pairs, limit-join shape check".into())
}

fn two_maxima() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for i in 0..200 {
        let (a, b) = (random_smb(&mut rng), random_smb(&mut rng));
        let (to, from) = max_equiv_limmax(&a, &b).map_err(|e| format!("pair {i}: {e}"))?;
        ensure(audits(to.deriv()), || format!("pair {i}: max ≤ max'"))?;
        ensure(audits(from.deriv()), || format!("pair {i}: max' ≤ max"))?;
    }
    Ok("200 pairs, both directions".into())
}

fn law_suite() -> Outcome {
    let tallies = run_laws(300, 7, BUDGET);
    let mut failed = Vec::new();
    for t in &tallies {
        if t.failed > 0 || t.passed != 300 {
            failed.push(format!("{} {}/{} ({:?})", t.law, t.passed, t.passed + t.failed, t.first_failure));
        }
    }
    ensure(failed.is_empty(), || failed.join("; "))?;
    Ok(format!("{} laws x 300 cases", tallies.len()))
}

fn mixing_step(stride: u64, salt: u64) -> impl Fn(&Tree, &mut Recur<'_, Tree, u64>) -> Result<u64, SmbError> {
    move |x, recur| {
        let n = finite_value(x).unwrap();
        if n == 0 {
            return Ok(salt);
        }
        let y = from_nat(n.saturating_sub(stride));
        let w = LtWitness::new(search_le(&Tree::succ(y.clone()), x, SearchBudget::default()).unwrap())?;
        Ok(recur(y, &w)?.wrapping_mul(31).wrapping_add(n ^ salt))
    }
}

fn gen_pair(rng: &mut ChaCha8Rng, depth: u32, allow_fun: bool) -> (HTree, HTree) {
    let roll = rng.gen_range(0..10);
    if depth == 0 || roll < 3 {
        let l = ["a", "b", "c"][rng.gen_range(0..3)];
        let other = if rng.gen_bool(0.08) { "z" } else { l };
        return (HTree::leaf(l), HTree::leaf(other));
    }
    if allow_fun && roll < 5 {
        let seed: u64 = rng.gen();
        let side = move |n: u64, left: bool| {
            let mut r = ChaCha8Rng::seed_from_u64(seed ^ n.wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let (a, b) = gen_pair(&mut r, depth - 1, false);
            if left {
                a
            } else {
                b
            }
        };
        return (HTree::fun(move |n| side(n, true)), HTree::fun(move |n| side(n, false)));
    }
    let k = rng.gen_range(0..3);
    let (xs, ys): (Vec<_>, Vec<_>) = (0..k).map(|_| gen_pair(rng, depth - 1, allow_fun)).unzip();
    (HTree::node("f", xs), HTree::node("f", ys))
}

fn well_founded_recursion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for i in 0..100 {
        let step = mixing_step(rng.gen_range(1..4), rng.gen_range(0..1000));
        let x = from_nat(rng.gen_range(0..12));
        let direct = wf_rec(&ord_wf(&x), &step, RecConfig::checked()).map_err(|e| e.to_string())?;
        let unfolded = step(&x, &mut |y, _| wf_rec(&ord_wf(&y), &step, RecConfig::checked())).map_err(|e| e.to_string())?;
        ensure(direct == unfolded, || format!("step {i}: {direct} vs {unfolded}"))?;
    }
    let cfg = UnifyConfig {
        fun_probe: 3,
        rec: RecConfig::checked(),
    };
    ensure(cfg.rec.watchdog == WATCHDOG_STEPS, || "watchdog is not the standard bound".into())?;
    let mut unified = 0;
    for i in 0..100 {
        let (a, b) = gen_pair(&mut rng, 5, true);
        match unify(&a, &b, cfg) {
            Ok(Some(u)) => {
                ensure(!matches!(u.view(), HView::Leaf("⊥")), || format!("pair {i}: clash at the root"))?;
                unified += 1;
            }
            Ok(None) => {}
            Err(e) => return Err(format!("pair {i}: {e}")),
        }
    }
    Ok(format!("100 unfoldings, 100 unifier runs ({unified} unified)"))
}

fn omega_sanity() -> Outcome {
    for n in [0u64, 1, 2, 5, 10, 100] {
        let a = OrdExpr::Nat(n);
        let Comparison::ProvedLt(d) = compare(&a, &OrdExpr::Omega, 1000) else {
            return Err(format!("{n} < ω not proved"));
        };
        let r = check(&d.to_text(), &a, &OrdExpr::Omega, BUDGET).map_err(|e| e.to_string())?;
        ensure(r.passed(), || format!("{n} < ω: {r}"))?;
    }
    let so = expr::parse("S omega").unwrap();
    ensure(compare(&so, &OrdExpr::Omega, 1000) == Comparison::Unknown, || "S ω vs ω was decided".into())?;
    let out = Command::new(env!("CARGO_BIN_EXE_smb"))
        .args(["cmp", "S omega", "omega", "--budget", "1000"])
        .output()
        .map_err(|e| e.to_string())?;
    let text = String::from_utf8_lossy(&out.stdout);
    ensure(out.status.code() == Some(1) && text.starts_with("UNKNOWN"), || format!("cli said {text:?}"))?;
    Ok("6 numerals below ω, S ω vs ω left UNKNOWN".into())
}

fn cli_roundtrips() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..500 {
        let e = random_closed(&mut rng, GenConfig::default());
        let text = expr::print(&e);
        ensure(expr::parse(&text).as_ref() == Ok(&e), || format!("print/parse changed `{text}`"))?;
    }
    for i in 0..500 {
        let a = random_closed(&mut rng, EXPRS);
        let c = random_closed(&mut rng, EXPRS);
        let b = match i % 3 {
            0 => OrdExpr::max(a.clone(), c),
            1 => OrdExpr::succ(a.clone()),
            _ => OrdExpr::max(c, OrdExpr::succ(a.clone())),
        };
        let d = match compare(&a, &b, 1000) {
            Comparison::ProvedLt(d) | Comparison::ProvedLe(d) => d,
            Comparison::Unknown => return Err(format!("case {i}: {a} ≤ {b} not proved")),
        };
        let text = d.to_text();
        ensure(DerivText::from_text(&text).as_ref() == Ok(&d), || format!("case {i}: serialization changed"))?;
        let r = check(&text, &a, &b, BUDGET).map_err(|e| format!("case {i}: {e}"))?;
        ensure(r.passed(), || format!("case {i}: {r}"))?;
    }
    let runs: [&[&str]; 4] = [
        &["cmp", "max(2, lim n. S n)", "S omega", "--seed", "3"],
        &["simplify", "--certify", "max(S max(1, omega), S 2)"],
        &["laws", "--trials", "2", "--seed", "11"],
        &["parse", "lim n. max(n, S omega)"],
    ];
    for args in runs {
        let run = || Command::new(env!("CARGO_BIN_EXE_smb")).args(args).output().map_err(|e| e.to_string());
        let (x, y) = (run()?, run()?);
        ensure(x.stdout == y.stdout && x.status == y.status, || format!("{args:?} differs between runs"))?;
    }
    Ok("500 print/parse, 500 derivation roundtrips, 4 repeated CLI runs".into())
}

fn main() {
    let criteria: [(&str, Option<u64>, fn() -> Outcome); 10] = [
        ("finite oracle equivalence", Some(30), finite_oracle),
        ("join successor law", Some(10), join_successor_law),
        ("transfinite join idempotence", Some(60), transfinite_idempotence),
        ("SMB witnesses", None, smb_witnesses),
        ("strict monotonicity of the join", None, strict_monotonicity),
        ("join agrees with limit join", None, two_maxima),
        ("law suite", Some(120), law_suite),
        ("well-founded recursion", None, well_founded_recursion),
        ("omega sanity", None, omega_sanity),
        ("CLI determinism and roundtrips", None, cli_roundtrips),
    ];
    let mut failures = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let took = start.elapsed();
        let res = match (res, limit) {
            (Ok(_), Some(s)) if took > Duration::from_secs(*s) => Err(format!("took {took:.1?}, limit {s} s")),
            (r, _) => r,
        };
        match res {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{took:.1?}]", i + 1),
            Err(why) => {
                failures += 1;
                println!("criterion {:>2} FAIL  {name}: {why} [{took:.1?}]", i + 1);
            }
        }
    }
    if failures > 0 {
        std::process::exit(1);
    }
}
