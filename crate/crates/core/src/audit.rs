//! Sampling auditor for derivations.
//!
//! Every node's local invariant is checked against its own endpoints and its
//! premises' endpoints. A limiting node has one premise per index; only a
//! seeded sample of them is checked, and the sample thins out as limiting
//! nodes nest, so a pass is evidence rather than proof.

use rustc_hash::FxHashSet;
use std::fmt;

use crate::deriv::{LeDeriv, LtWitness, Rule};
use crate::index::{sample_indices_within, Cardinality, IndexElem, EXHAUSTIVE_LIMIT};
use crate::tree::{fingerprint, Same, Tree};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AuditBudget {
    pub max_nodes: u64,
    pub samples_per_limiting: usize,
    pub seed: u64,
}

impl AuditBudget {
    pub const STANDARD: AuditBudget = AuditBudget {
        max_nodes: 100_000,
        samples_per_limiting: 16,
        seed: 0xC0FFEE,
    };

    pub fn with_seed(self, seed: u64) -> AuditBudget {
        AuditBudget { seed, ..self }
    }
}

impl Default for AuditBudget {
    fn default() -> Self {
        AuditBudget::STANDARD
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail { path: String, reason: String },
    BudgetExhausted,
}

/// Indices checked at one limiting node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampledBranches {
    pub path: String,
    pub indices: Vec<IndexElem>,
    pub exhaustive: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuditReport {
    pub verdict: Verdict,
    pub nodes_visited: u64,
    pub samples_per_limiting: usize,
    pub seed: u64,
    pub limiting_nodes: u64,
    pub branches_checked: u64,
    /// Endpoint comparisons that ran out of exploration fuel. They are not
    /// counted as failures.
    pub unresolved_comparisons: u64,
    /// The first few limiting nodes and the indices sampled there.
    pub sampled: Vec<SampledBranches>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn failed(&self) -> bool {
        matches!(self.verdict, Verdict::Fail { .. })
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.verdict {
            Verdict::Pass => write!(f, "PASS")?,
            Verdict::Fail { path, reason } => write!(f, "FAIL at {path}: {reason}")?,
            Verdict::BudgetExhausted => write!(f, "BUDGET EXHAUSTED")?,
        }
        write!(
            f,
            " (nodes {}, limiting {}, branches {}, samples {}, seed {:#x})",
            self.nodes_visited,
            self.limiting_nodes,
            self.branches_checked,
            self.samples_per_limiting,
            self.seed
        )
    }
}

const SAMPLED_RECORD_LIMIT: usize = 32;

/// How many branches to check at a limiting node nested `depth` limiting
/// nodes deep.
fn branch_count(card: Cardinality, depth: u32, samples: usize) -> usize {
    if let Cardinality::Finite(n) = card {
        if depth == 0 && n <= EXHAUSTIVE_LIMIT {
            return n as usize;
        }
    }
    let shift = (2 * depth).min(usize::BITS - 1);
    (samples >> shift).max(1)
}

const TOP_RANGE: u64 = 16;
const NESTED_RANGE: u64 = 8;

/// Positions a limiting node nested `depth` deep draws from. Deep branches
/// look at small indices only; the cost of a branch tends to grow with its
/// index, and nesting multiplies those costs.
fn branch_range(depth: u32, samples: usize) -> u64 {
    if depth == 0 {
        return TOP_RANGE.max(samples as u64);
    }
    (NESTED_RANGE >> depth.min(63)).max(2)
}

struct Frame {
    d: LeDeriv,
    path: usize,
    depth: u32,
    seed: u64,
}

enum Seg {
    Root,
    Suc,
    Cocone(IndexElem),
    Branch(IndexElem),
}

/// Paths are stored as parent links and rendered only when reported.
#[derive(Default)]
struct Paths(Vec<(usize, Seg)>);

impl Paths {
    fn push(&mut self, parent: usize, seg: Seg) -> usize {
        self.0.push((parent, seg));
        self.0.len() - 1
    }

    fn render(&self, mut at: usize) -> String {
        let mut segs = Vec::new();
        loop {
            let (parent, seg) = &self.0[at];
            segs.push(match seg {
                Seg::Root => "root".to_string(),
                Seg::Suc => "suc".to_string(),
                Seg::Cocone(k) => format!("cocone[{k}]"),
                Seg::Branch(k) => format!("branch[{k}]"),
            });
            if let Seg::Root = seg {
                break;
            }
            at = *parent;
        }
        segs.reverse();
        segs.join("/")
    }
}

pub fn audit(d: &LeDeriv, budget: AuditBudget) -> AuditReport {
    let mut report = AuditReport {
        verdict: Verdict::Pass,
        nodes_visited: 0,
        samples_per_limiting: budget.samples_per_limiting,
        seed: budget.seed,
        limiting_nodes: 0,
        branches_checked: 0,
        unresolved_comparisons: 0,
        sampled: Vec::new(),
    };
    let mut seen: FxHashSet<usize> = FxHashSet::default();
    // Keeps visited nodes alive so their addresses are not reused.
    let mut keep: Vec<LeDeriv> = Vec::new();
    let mut paths = Paths::default();
    let root = paths.push(0, Seg::Root);
    let mut stack = vec![Frame {
        d: d.clone(),
        path: root,
        depth: 0,
        seed: budget.seed,
    }];
    while let Some(fr) = stack.pop() {
        if !seen.insert(fr.d.addr()) {
            continue;
        }
        keep.push(fr.d.clone());
        if report.nodes_visited >= budget.max_nodes {
            report.verdict = Verdict::BudgetExhausted;
            return report;
        }
        report.nodes_visited += 1;
        if let Err(reason) = check_node(&fr, &mut stack, &mut paths, &mut report, budget) {
            report.verdict = Verdict::Fail {
                path: paths.render(fr.path),
                reason,
            };
            return report;
        }
    }
    report
}

fn agree(report: &mut AuditReport, a: &Tree, b: &Tree, what: &str) -> Result<(), String> {
    match Tree::same(a, b) {
        Same::Yes => Ok(()),
        Same::Unknown => {
            report.unresolved_comparisons += 1;
            Ok(())
        }
        Same::No => Err(format!("{what}: {a:?} is not {b:?}")),
    }
}

fn check_node(
    fr: &Frame,
    stack: &mut Vec<Frame>,
    paths: &mut Paths,
    report: &mut AuditReport,
    budget: AuditBudget,
) -> Result<(), String> {
    let d = &fr.d;
    match d.rule() {
        Rule::Zero => {
            if !d.lhs().is_zero() {
                return Err(format!("zero rule needs Z on the left, found {:?}", d.lhs()));
            }
        }
        Rule::SucMono(sub) => {
            let a = d
                .lhs()
                .as_succ()
                .ok_or_else(|| format!("successor rule needs S on the left, found {:?}", d.lhs()))?;
            let b = d
                .rhs()
                .as_succ()
                .ok_or_else(|| format!("successor rule needs S on the right, found {:?}", d.rhs()))?;
            agree(report, sub.lhs(), a, "premise left side")?;
            agree(report, sub.rhs(), b, "premise right side")?;
            stack.push(Frame {
                d: sub.clone(),
                path: paths.push(fr.path, Seg::Suc),
                depth: fr.depth,
                seed: fr.seed,
            });
        }
        Rule::Cocone { index, sub } => {
            let lim = d
                .rhs()
                .as_lim()
                .ok_or_else(|| format!("cocone rule needs a limit on the right, found {:?}", d.rhs()))?;
            if !lim.code().contains(index) {
                return Err(format!("cocone index {index} is not in {}", lim.code()));
            }
            agree(report, sub.lhs(), d.lhs(), "premise left side")?;
            agree(report, sub.rhs(), &lim.at(index), "premise right side")?;
            stack.push(Frame {
                d: sub.clone(),
                path: paths.push(fr.path, Seg::Cocone(index.clone())),
                depth: fr.depth,
                seed: fr.seed,
            });
        }
        Rule::Limiting(branches) => {
            let lim = d
                .lhs()
                .as_lim()
                .ok_or_else(|| format!("limiting rule needs a limit on the left, found {:?}", d.lhs()))?;
            report.limiting_nodes += 1;
            let card = lim.code().cardinality();
            let count = branch_count(card, fr.depth, budget.samples_per_limiting);
            let node_seed = fingerprint("audit", &[fr.seed, report.limiting_nodes]);
            let ks = sample_indices_within(lim.code(), count, branch_range(fr.depth, budget.samples_per_limiting), node_seed);
            if report.sampled.len() < SAMPLED_RECORD_LIMIT {
                report.sampled.push(SampledBranches {
                    path: paths.render(fr.path),
                    exhaustive: matches!(card, Cardinality::Finite(n) if n as usize == ks.len())
                        || card == Cardinality::Empty,
                    indices: ks.clone(),
                });
            }
            for k in ks.into_iter().rev() {
                let path = paths.push(fr.path, Seg::Branch(k.clone()));
                let sub = branches
                    .at(&k)
                    .map_err(|e| format!("branch {k} could not be built: {e}"))?;
                report.branches_checked += 1;
                agree(report, sub.lhs(), &lim.at(&k), "branch left side")
                    .map_err(|e| format!("{e} (branch {k})"))?;
                agree(report, sub.rhs(), d.rhs(), "branch right side")
                    .map_err(|e| format!("{e} (branch {k})"))?;
                stack.push(Frame {
                    seed: fingerprint("branch", &[fr.seed, k_hash(&k)]),
                    d: sub,
                    path,
                    depth: fr.depth + 1,
                });
            }
        }
    }
    Ok(())
}

fn k_hash(k: &IndexElem) -> u64 {
    match k {
        IndexElem::Nat(n) => fingerprint("n", &[*n]),
        IndexElem::Fin(n) => fingerprint("f", &[*n]),
        IndexElem::Nothing => fingerprint("nothing", &[]),
        IndexElem::Just(e) => fingerprint("just", &[k_hash(e)]),
    }
}

/// Audit a claimed proof of `t < Z`. No valid derivation has that shape, so
/// the verdict is always a failure that names the broken node.
pub fn not_lt_zero(w: &LtWitness) -> AuditReport {
    let mut report = audit(w.deriv(), AuditBudget::STANDARD);
    if !w.upper().is_zero() {
        report.verdict = Verdict::Fail {
            path: "root".into(),
            reason: format!("witness does not target Z: right side is {:?}", w.upper()),
        };
    } else if report.verdict == Verdict::Pass || report.verdict == Verdict::BudgetExhausted {
        // Unreachable for derivations built from the four rules: the root's
        // left side is a successor and its right side is Z, which no rule admits.
        report.verdict = Verdict::Fail {
            path: "root".into(),
            reason: "a successor is never below Z".into(),
        };
    }
    report
}
