//! Elaboration of closed expressions to SMB-trees.
//!
//! Every `lim` gets a family keyed by the alpha-normalized text of the limit
//! with outer variables replaced by their values, so elaborating the same
//! limit twice gives trees with the same identity.

use std::hash::{Hash, Hasher};

use super::OrdExpr;
use crate::error::{Result, SmbError};
use crate::smb::{
    smb_from_nat, smb_max, smb_nat_family, smb_omega, smb_omega_family, smb_succ, smb_zero, SmbFamily,
    SmbTree,
};
use crate::tree::fingerprint;

type Env = Vec<(String, u64)>;

pub fn elaborate(e: &OrdExpr) -> Result<SmbTree> {
    elab_in(e, &Vec::new())
}

/// The family of a closed `lim` (or `omega`) expression.
pub fn elab_family(e: &OrdExpr) -> Result<SmbFamily> {
    family_in(e, &Vec::new())
}

fn lookup(env: &Env, v: &str) -> Result<u64> {
    env.iter()
        .rev()
        .find(|(name, _)| name == v)
        .map(|(_, n)| *n)
        .ok_or_else(|| SmbError::UnboundVariable(v.to_string()))
}

pub(crate) fn elab_in(e: &OrdExpr, env: &Env) -> Result<SmbTree> {
    Ok(match e {
        OrdExpr::Zero => smb_zero(),
        OrdExpr::Nat(n) => smb_from_nat(*n),
        OrdExpr::Var(v) => smb_from_nat(lookup(env, v)?),
        OrdExpr::Succ(a) => smb_succ(&elab_in(a, env)?),
        OrdExpr::Max(a, b) => smb_max(&elab_in(a, env)?, &elab_in(b, env)?),
        OrdExpr::Omega => smb_omega(),
        OrdExpr::Lim(..) => family_in(e, env)?.lim(),
    })
}

pub(crate) fn family_in(e: &OrdExpr, env: &Env) -> Result<SmbFamily> {
    let (v, body) = match e {
        OrdExpr::Omega => return Ok(smb_omega_family()),
        OrdExpr::Lim(v, body) => (v.clone(), (**body).clone()),
        _ => {
            return Err(SmbError::InvalidComposition(format!("{e} is not a limit")));
        }
    };
    // Branches are built lazily and cannot report errors, so check up front.
    for free in e.free_vars() {
        lookup(env, &free)?;
    }
    let text = canonical(e, env);
    if text == canonical(&OrdExpr::Omega, env) {
        return Ok(smb_omega_family());
    }
    let mut h = std::collections::hash_map::DefaultHasher::new();
    text.hash(&mut h);
    let env = env.clone();
    Ok(smb_nat_family(fingerprint("expr-lim", &[h.finish()]), move |k| {
        let mut inner = env.clone();
        inner.push((v.clone(), k));
        elab_in(&body, &inner).expect("free variables were checked")
    }))
}

/// Text that is equal for two expressions exactly when they agree up to
/// renaming of bound variables, numeral sugar and `omega`, under `env`.
pub(crate) fn canonical(e: &OrdExpr, env: &Env) -> String {
    let mut out = String::new();
    canon(e, env, &mut Vec::new(), &mut out);
    out
}

fn canon(e: &OrdExpr, env: &Env, bound: &mut Vec<String>, out: &mut String) {
    let mut succs = 0u64;
    let mut cur = e;
    while let OrdExpr::Succ(a) = cur {
        succs += 1;
        cur = a;
    }
    let level = |v: &str, bound: &Vec<String>| bound.iter().rposition(|b| b == v);
    match cur {
        OrdExpr::Zero => out.push_str(&succs.to_string()),
        OrdExpr::Nat(n) => out.push_str(&n.saturating_add(succs).to_string()),
        OrdExpr::Var(v) => match level(v, bound) {
            Some(i) => {
                out.push_str(&"S".repeat(succs as usize));
                out.push_str(&format!("#{i}"));
            }
            None => match env.iter().rev().find(|(name, _)| name == v) {
                Some((_, n)) => out.push_str(&n.saturating_add(succs).to_string()),
                None => {
                    out.push_str(&"S".repeat(succs as usize));
                    out.push('$');
                    out.push_str(v);
                }
            },
        },
        _ => {
            out.push_str(&"S".repeat(succs as usize));
            match cur {
                OrdExpr::Omega => out.push_str(&format!("lim.#{}", bound.len())),
                OrdExpr::Max(a, b) => {
                    out.push_str("max(");
                    canon(a, env, bound, out);
                    out.push(',');
                    canon(b, env, bound, out);
                    out.push(')');
                }
                OrdExpr::Lim(v, body) => {
                    out.push_str("lim.");
                    bound.push(v.clone());
                    canon(body, env, bound, out);
                    bound.pop();
                }
                _ => unreachable!(),
            }
        }
    }
}
