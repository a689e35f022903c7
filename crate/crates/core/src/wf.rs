//! Well-founded recursion over trees.
//!
//! An [`AccNode`] is an accessibility proof for its subject tree: given a
//! derivation of `y < subject` it produces the accessibility proof for `y`.
//! Children are built only when asked for. Recursion with [`wf_rec`] or
//! [`audited_fix`] descends through these nodes, so each recursive call must
//! present a strict-decrease witness.

use std::cell::Cell;
use std::sync::Arc;

use crate::audit::{audit, not_lt_zero, AuditBudget};
use crate::deriv::{lt_to_le, strict_compose, LeDeriv, LtWitness, Rule, StrictKind};
use crate::error::{Result, SmbError};
use crate::smb::SmbTree;
use crate::tree::{Same, Tree, View};

pub const WATCHDOG_STEPS: u64 = 1_000_000;

#[derive(Clone)]
pub struct AccNode(Arc<AccInner>);

struct AccInner {
    subject: Tree,
    kind: AccKind,
}

enum AccKind {
    /// Accessibility read off the shape of the subject.
    Ord,
    /// The subject is below `base`'s subject by `bound`.
    Smaller { base: AccNode, bound: LeDeriv },
}

impl AccNode {
    pub fn subject(&self) -> &Tree {
        &self.0.subject
    }

    /// The accessibility proof for `w.lower()`, given `w : y < subject`.
    pub fn step(&self, w: &LtWitness) -> Result<AccNode> {
        if Tree::same(w.upper(), self.subject()) == Same::No {
            return Err(SmbError::InvalidComposition(format!(
                "witness is below {:?}, not below {:?}",
                w.upper(),
                self.subject()
            )));
        }
        match &self.0.kind {
            AccKind::Ord => ord_step(self.subject(), w),
            AccKind::Smaller { base, bound } => {
                base.step(&strict_compose(StrictKind::LtThenLe, w.deriv(), bound)?)
            }
        }
    }
}

fn ord_step(subject: &Tree, w: &LtWitness) -> Result<AccNode> {
    match subject.view() {
        View::Zero => {
            let report = not_lt_zero(w);
            Err(SmbError::MalformedWitness(format!("nothing is below Z: {report}")))
        }
        View::Succ(x) => match w.deriv().rule() {
            Rule::SucMono(sub) => smaller_accessible(&ord_wf(x), sub),
            _ => Err(SmbError::MalformedWitness(format!(
                "a witness below a successor must use the successor rule, found {:?}",
                w.deriv().kind()
            ))),
        },
        View::Lim(l) => match w.deriv().rule() {
            Rule::Cocone { index, sub } => {
                if !l.code().contains(index) {
                    return Err(SmbError::MalformedWitness(format!(
                        "cocone index {index} is not in {}",
                        l.code()
                    )));
                }
                let below_branch = LtWitness::new(sub.clone())?;
                smaller_accessible(&ord_wf(&l.at(index)), &lt_to_le(&below_branch)?)
            }
            _ => Err(SmbError::MalformedWitness(format!(
                "a witness below a limit must be a cocone, found {:?}",
                w.deriv().kind()
            ))),
        },
    }
}

/// Accessibility of any tree, by the shape of the tree.
pub fn ord_wf(t: &Tree) -> AccNode {
    AccNode(Arc::new(AccInner {
        subject: t.clone(),
        kind: AccKind::Ord,
    }))
}

/// Accessibility of `y` from accessibility of `x` and `d : y ≤ x`.
pub fn smaller_accessible(a: &AccNode, d: &LeDeriv) -> Result<AccNode> {
    if Tree::same(d.rhs(), a.subject()) == Same::No {
        return Err(SmbError::InvalidComposition(format!(
            "bound ends at {:?}, not at {:?}",
            d.rhs(),
            a.subject()
        )));
    }
    Ok(AccNode(Arc::new(AccInner {
        subject: d.lhs().clone(),
        kind: AccKind::Smaller {
            base: a.clone(),
            bound: d.clone(),
        },
    })))
}

/// Accessibility of an SMB-tree, through its raw tree.
pub fn smb_wf(t: &SmbTree) -> AccNode {
    ord_wf(t.raw())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RecConfig {
    /// Audit every witness before descending through it.
    pub audit: Option<AuditBudget>,
    /// Step invocations allowed before giving up with [`SmbError::Watchdog`].
    pub watchdog: u64,
}

impl RecConfig {
    /// Every witness audited at the standard budget.
    pub fn checked() -> RecConfig {
        RecConfig {
            audit: Some(AuditBudget::STANDARD),
            watchdog: WATCHDOG_STEPS,
        }
    }
}

impl Default for RecConfig {
    fn default() -> Self {
        RecConfig {
            audit: None,
            watchdog: WATCHDOG_STEPS,
        }
    }
}

/// Callback through which a step asks for a recursive result.
pub type Recur<'a, X, R> = dyn FnMut(X, &LtWitness) -> Result<R> + 'a;

fn tick(steps: &Cell<u64>, cfg: RecConfig) -> Result<()> {
    steps.set(steps.get() + 1);
    if steps.get() > cfg.watchdog {
        return Err(SmbError::Watchdog(cfg.watchdog));
    }
    Ok(())
}

fn check_witness(w: &LtWitness, cfg: RecConfig) -> Result<()> {
    if let Some(budget) = cfg.audit {
        let report = audit(w.deriv(), budget);
        if let crate::audit::Verdict::Fail { path, reason } = report.verdict {
            return Err(SmbError::DescentViolation { path, reason });
        }
    }
    Ok(())
}

/// Recursion on trees: `step x recur` may call `recur y w` with `w : y < x`.
pub fn wf_rec<R>(
    acc: &AccNode,
    step: &dyn Fn(&Tree, &mut Recur<'_, Tree, R>) -> Result<R>,
    cfg: RecConfig,
) -> Result<R> {
    let steps = Cell::new(0);
    wf_go(acc, step, cfg, &steps)
}

fn wf_go<R>(
    acc: &AccNode,
    step: &dyn Fn(&Tree, &mut Recur<'_, Tree, R>) -> Result<R>,
    cfg: RecConfig,
    steps: &Cell<u64>,
) -> Result<R> {
    tick(steps, cfg)?;
    let mut recur = |y: Tree, w: &LtWitness| -> Result<R> {
        if Tree::same(&y, w.lower()) == Same::No {
            return Err(SmbError::InvalidComposition(format!(
                "witness is for {:?}, not {y:?}",
                w.lower()
            )));
        }
        check_witness(w, cfg)?;
        wf_go(&acc.step(w)?, step, cfg, steps)
    };
    step(acc.subject(), &mut recur)
}

/// Run `step` on `input`, where each recursive call must come with a witness
/// that the metric of the smaller input is below the metric of the current
/// one.
pub fn audited_fix<I, R>(
    metric: &dyn Fn(&I) -> SmbTree,
    step: &dyn Fn(&I, &mut Recur<'_, I, R>) -> Result<R>,
    input: I,
    cfg: RecConfig,
) -> Result<R> {
    let steps = Cell::new(0);
    let acc = smb_wf(&metric(&input));
    fix_go(&acc, metric, step, input, cfg, &steps)
}

fn fix_go<I, R>(
    acc: &AccNode,
    metric: &dyn Fn(&I) -> SmbTree,
    step: &dyn Fn(&I, &mut Recur<'_, I, R>) -> Result<R>,
    input: I,
    cfg: RecConfig,
    steps: &Cell<u64>,
) -> Result<R> {
    tick(steps, cfg)?;
    let mut recur = |smaller: I, w: &LtWitness| -> Result<R> {
        let m = metric(&smaller);
        if Tree::same(w.lower(), m.raw()) == Same::No {
            return Err(SmbError::DescentViolation {
                path: "root".into(),
                reason: "witness does not start at the metric of the recursive input".into(),
            });
        }
        if Tree::same(w.upper(), acc.subject()) == Same::No {
            return Err(SmbError::DescentViolation {
                path: "root".into(),
                reason: "witness does not end at the metric of the current input".into(),
            });
        }
        check_witness(w, cfg)?;
        fix_go(&acc.step(w)?, metric, step, smaller, cfg, steps)
    };
    step(&input, &mut recur)
}
