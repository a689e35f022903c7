//! Randomized instances of every algebraic law, audited.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::audit::AuditBudget;
use crate::error::Result;
use crate::expr::{elab_family, elaborate, random_closed, random_expr, GenConfig, OrdExpr};
use crate::index::{IndexCode, IndexElem};
use crate::join::Side;
use crate::laws::{self, Equiv, LAW_NAMES};
use crate::smb::{smb_le_trans, smb_le_upper_bound, smb_max, smb_max_bound, SmbFamily, SmbTree};

/// Operands: small expressions with at most one level of `lim`, so ω and
/// limits of finite sequences both show up.
pub const OPERANDS: GenConfig = GenConfig {
    depth: 3,
    max_nat: 4,
    max_lims: 1,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LawTally {
    pub law: &'static str,
    pub passed: u64,
    pub failed: u64,
    /// Operands of the first failing case.
    pub first_failure: Option<String>,
}

fn tree(rng: &mut ChaCha8Rng) -> (OrdExpr, SmbTree) {
    let e = random_closed(rng, OPERANDS);
    let t = elaborate(&e).expect("generated expressions are closed");
    (e, t)
}

/// A family over the naturals, from a random `lim` expression.
fn nat_family(rng: &mut ChaCha8Rng) -> (OrdExpr, SmbFamily) {
    let body = random_expr(rng, GenConfig { max_lims: 0, ..OPERANDS }, &["n".to_string()]);
    let body = body.subst("x", &OrdExpr::var("n"));
    let e = OrdExpr::lim("n", body);
    let f = elab_family(&e).expect("the body only mentions n");
    (e, f)
}

/// A family over `fin k`, members drawn at random.
fn fin_family(rng: &mut ChaCha8Rng, k: u64) -> (String, SmbFamily) {
    let members: Vec<(OrdExpr, SmbTree)> = (0..k).map(|_| tree(rng)).collect();
    let text = members.iter().map(|(e, _)| e.to_string()).collect::<Vec<_>>().join(", ");
    let ts: Vec<SmbTree> = members.into_iter().map(|(_, t)| t).collect();
    let f = SmbFamily::new(IndexCode::Fin(k), move |i| match i {
        IndexElem::Fin(j) => ts[*j as usize].clone(),
        _ => unreachable!("members of fin {k}"),
    });
    (format!("fin {k} [{text}]"), f)
}

/// One random instance of `law`: a description of the operands and the
/// equivalence.
pub fn law_case(law: &str, rng: &mut ChaCha8Rng) -> (String, Result<Equiv>) {
    match law {
        "assoc" => {
            let ((a, ta), (b, tb), (c, tc)) = (tree(rng), tree(rng), tree(rng));
            (format!("{a} ; {b} ; {c}"), laws::join_assoc(&ta, &tb, &tc))
        }
        "commut" => {
            let ((a, ta), (b, tb)) = (tree(rng), tree(rng));
            (format!("{a} ; {b}"), laws::join_commut(&ta, &tb))
        }
        "idem" => {
            let (a, ta) = tree(rng);
            (a.to_string(), laws::join_idem(&ta))
        }
        "succ_absorb" => {
            let (a, ta) = tree(rng);
            (a.to_string(), laws::succ_absorb(&ta))
        }
        "succ_dist" => {
            let ((a, ta), (b, tb)) = (tree(rng), tree(rng));
            (format!("{a} ; {b}"), laws::succ_dist(&ta, &tb))
        }
        "sup_bound" => {
            let (e, f) = nat_family(rng);
            let k = rng.gen_range(0..8);
            (format!("{e} at {k}"), laws::sup_bound(&f, &IndexElem::Nat(k)))
        }
        "sup_supremum" => {
            // t = max(⋁ f, extra) is above every member.
            let (e, f) = nat_family(rng);
            let (x, tx) = tree(rng);
            let lim = f.lim();
            let t = smb_max(&lim, &tx);
            let (f2, lim2, t2, tx2) = (f.clone(), lim.clone(), t.clone(), tx.clone());
            let eq = laws::sup_supremum(&f, &t, move |k| {
                let up = smb_le_trans(&smb_le_upper_bound(&f2, k)?, &smb_max_bound(Side::L, &lim2, &tx2)?)?;
                laws::ord_to_equiv(&f2.at(k), &t2, &up)
            });
            (format!("{e} under max(.., {x})"), eq)
        }
        "sup_const" => {
            let (a, ta) = tree(rng);
            let (code, k) = if rng.gen_bool(0.5) {
                let n = rng.gen_range(1..5);
                (IndexCode::Fin(n), IndexElem::Fin(rng.gen_range(0..n)))
            } else {
                (IndexCode::Nat, IndexElem::Nat(rng.gen_range(0..8)))
            };
            (format!("{a} over {code} at {k}"), laws::sup_const(&code, Some(&k), &ta))
        }
        "sup_empty" => {
            let (a, ta) = tree(rng);
            let f = SmbFamily::new(IndexCode::Fin(0), move |_| ta.clone());
            (format!("fin 0 of {a}"), laws::sup_empty(&f))
        }
        "dist_homo" => {
            if rng.gen_bool(0.5) {
                let ((e1, f1), (e2, f2)) = (nat_family(rng), nat_family(rng));
                (format!("{e1} ; {e2}"), laws::dist_homo(&f1, &f2))
            } else {
                let k = rng.gen_range(1..4);
                let ((d1, f1), (d2, f2)) = (fin_family(rng, k), fin_family(rng, k));
                (format!("{d1} ; {d2}"), laws::dist_homo(&f1, &f2))
            }
        }
        "dist_het" => {
            let (e, f) = nat_family(rng);
            let (a, ta) = tree(rng);
            let k = rng.gen_range(0..8);
            (format!("{e} ; {a} at {k}"), laws::dist_het(&f, &ta, Some(&IndexElem::Nat(k))))
        }
        other => panic!("unknown law {other}"),
    }
}

/// Run `trials` random instances of each law and audit both directions.
pub fn run_laws(trials: u64, seed: u64, budget: AuditBudget) -> Vec<LawTally> {
    LAW_NAMES
        .iter()
        .enumerate()
        .map(|(i, &law)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let mut tally = LawTally {
                law,
                passed: 0,
                failed: 0,
                first_failure: None,
            };
            for _ in 0..trials {
                let (desc, eq) = law_case(law, &mut rng);
                let ok = eq.map(|e| e.audits(budget)).unwrap_or(false);
                if ok {
                    tally.passed += 1;
                } else {
                    tally.failed += 1;
                    tally.first_failure.get_or_insert(desc);
                }
            }
            tally
        })
        .collect()
}
