//! A toy unifier over trees with finitely and infinitely branching nodes.
//!
//! Sizes are SMB-trees and recursion runs under [`audited_fix`] with the
//! join of the two sizes as the measure. Sub-problems are re-paired into a
//! canonical order so that `unify(a, b)` and `unify(b, a)` make the same
//! calls; a swapped pair needs commutativity of the join to show the measure
//! went down.
//!
//! Merge semantics: labels must agree and children are unified pointwise.
//! For `fun` nodes the first `fun_probe` children are unified eagerly;
//! later ones are unified when first read, and a clash there shows up as
//! the leaf `⊥`.
//!
//! Text format:
//!
//! ```text
//! t := "leaf" LABEL | "node" LABEL "(" [t {"," t}] ")" | "fun" VAR "." t
//!    | "chain" LABEL NUM t
//! NUM := NAT | VAR | VAR "+" NAT
//! ```
//!
//! `chain L k t` wraps `t` in `k` unary `node L`s; `fun n. t` has child `t`
//! with `n` set to each natural.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use crate::deriv::{strict_compose, LeDeriv, LtWitness, StrictKind};
use crate::error::{Result, SmbError};
use crate::index::IndexElem;
use crate::join::{ind_max_commut, Side};
use crate::smb::{
    smb_le_trans, smb_le_upper_bound, smb_max, smb_max_bound, smb_max_strict_mono, smb_nat_family, smb_succ,
    smb_zero, SmbFamily, SmbTree,
};
use crate::tree::fresh_key;
use crate::wf::{audited_fix, RecConfig, Recur};

type Children = Arc<dyn Fn(u64) -> HTree + Send + Sync>;

#[derive(Clone)]
pub struct HTree(Arc<HInner>);

struct HInner {
    kind: HKind,
    size: OnceLock<SmbTree>,
    /// Family of child sizes, for `fun` nodes.
    family: OnceLock<SmbFamily>,
}

enum HKind {
    Leaf(String),
    Node(String, Vec<HTree>),
    Fun(Arc<FunChildren>),
}

struct FunChildren {
    f: Children,
    cache: Mutex<HashMap<u64, HTree>>,
}

impl FunChildren {
    fn child(&self, n: u64) -> HTree {
        if let Some(c) = self.cache.lock().unwrap().get(&n) {
            return c.clone();
        }
        let c = (self.f)(n);
        self.cache.lock().unwrap().entry(n).or_insert(c).clone()
    }
}

/// How an [`HTree`] looks at its root.
pub enum HView<'a> {
    Leaf(&'a str),
    Node(&'a str, &'a [HTree]),
    Fun,
}

impl HTree {
    fn build(kind: HKind) -> HTree {
        HTree(Arc::new(HInner {
            kind,
            size: OnceLock::new(),
            family: OnceLock::new(),
        }))
    }

    pub fn leaf(label: &str) -> HTree {
        HTree::build(HKind::Leaf(label.to_string()))
    }

    pub fn node(label: &str, children: Vec<HTree>) -> HTree {
        HTree::build(HKind::Node(label.to_string(), children))
    }

    pub fn fun<F>(children: F) -> HTree
    where
        F: Fn(u64) -> HTree + Send + Sync + 'static,
    {
        HTree::build(HKind::Fun(Arc::new(FunChildren {
            f: Arc::new(children),
            cache: Mutex::new(HashMap::new()),
        })))
    }

    pub fn view(&self) -> HView<'_> {
        match &self.0.kind {
            HKind::Leaf(l) => HView::Leaf(l),
            HKind::Node(l, cs) => HView::Node(l, cs),
            HKind::Fun(..) => HView::Fun,
        }
    }

    /// Child `n` of a `fun` node, memoized.
    pub fn fun_child(&self, n: u64) -> Option<HTree> {
        match &self.0.kind {
            HKind::Fun(cs) => Some(cs.child(n)),
            _ => None,
        }
    }

    /// Render with `fun` nodes showing their first `fun_shown` children.
    pub fn render(&self, fun_shown: u64) -> String {
        match self.view() {
            HView::Leaf(l) => format!("leaf {l}"),
            HView::Node(l, cs) => {
                let inner: Vec<String> = cs.iter().map(|c| c.render(fun_shown)).collect();
                format!("node {l}({})", inner.join(", "))
            }
            HView::Fun => {
                let inner: Vec<String> =
                    (0..fun_shown).map(|n| self.fun_child(n).unwrap().render(fun_shown)).collect();
                format!("fun[{}, ..]", inner.join(", "))
            }
        }
    }

    /// Equal labels and shape, with `fun` nodes compared on their first
    /// `probe` children.
    pub fn observably_eq(&self, other: &HTree, probe: u64) -> bool {
        match (self.view(), other.view()) {
            (HView::Leaf(a), HView::Leaf(b)) => a == b,
            (HView::Node(a, xs), HView::Node(b, ys)) => {
                a == b && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| x.observably_eq(y, probe))
            }
            (HView::Fun, HView::Fun) => (0..probe).all(|n| {
                self.fun_child(n)
                    .unwrap()
                    .observably_eq(&other.fun_child(n).unwrap(), probe)
            }),
            _ => false,
        }
    }
}

impl fmt::Debug for HTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(2))
    }
}

// ---------------------------------------------------------------------------
// Sizes

fn fun_family(h: &HTree) -> &SmbFamily {
    h.0.family.get_or_init(|| {
        // Capturing `h` itself would make the node own itself.
        let HKind::Fun(cs) = &h.0.kind else {
            unreachable!("only fun nodes have a child family")
        };
        let cs = cs.clone();
        smb_nat_family(fresh_key(), move |n| size_of(&cs.child(n)))
    })
}

/// Leaf: 1. Node: successor of the join of the children. Fun: successor of
/// the limit of the children.
pub fn size_of(h: &HTree) -> SmbTree {
    h.0.size
        .get_or_init(|| match h.view() {
            HView::Leaf(_) => smb_succ(&smb_zero()),
            HView::Node(_, cs) => smb_succ(&children_join(cs).0),
            HView::Fun => smb_succ(&fun_family(h).lim()),
        })
        .clone()
}

/// The left fold of the children's sizes under the join, with every prefix.
fn children_join(cs: &[HTree]) -> (SmbTree, Vec<SmbTree>) {
    let mut acc = smb_zero();
    let mut prefixes = vec![acc.clone()];
    for c in cs {
        acc = smb_max(&acc, &size_of(c));
        prefixes.push(acc.clone());
    }
    (acc, prefixes)
}

/// `size(child) < size(parent)` for child `i` of a node or `fun`.
pub fn child_descent(parent: &HTree, i: u64) -> Result<LtWitness> {
    let below = match parent.view() {
        HView::Leaf(_) => return Err(SmbError::InvalidComposition("a leaf has no children".into())),
        HView::Node(_, cs) => {
            let i = i as usize;
            let child = cs
                .get(i)
                .ok_or_else(|| SmbError::InvalidComposition(format!("node has no child {i}")))?;
            let (_, prefixes) = children_join(cs);
            // size c_i ≤ acc_{i+1} ≤ acc_{i+2} ≤ ... ≤ acc_n
            let mut d = smb_max_bound(Side::R, &prefixes[i], &size_of(child))?;
            for j in i + 1..cs.len() {
                d = smb_le_trans(&d, &smb_max_bound(Side::L, &prefixes[j], &size_of(&cs[j]))?)?;
            }
            d
        }
        HView::Fun => smb_le_upper_bound(fun_family(parent), &IndexElem::Nat(i))?,
    };
    LtWitness::new(LeDeriv::suc_mono(below.into_deriv()))
}

// ---------------------------------------------------------------------------
// Unification

#[derive(Clone, Copy, Debug)]
pub struct UnifyConfig {
    /// `fun` children unified eagerly.
    pub fun_probe: u64,
    pub rec: RecConfig,
}

impl Default for UnifyConfig {
    fn default() -> Self {
        UnifyConfig {
            fun_probe: 3,
            rec: RecConfig::default(),
        }
    }
}

fn pair_measure(p: &(HTree, HTree)) -> SmbTree {
    smb_max(&size_of(&p.0), &size_of(&p.1))
}

fn order_key(h: &HTree) -> String {
    h.render(1)
}

/// Child `i` of both trees as a sub-problem, with the witness that its
/// measure is below the measure of `(a, b)`.
fn sub_problem(a: &HTree, b: &HTree, i: u64, ca: HTree, cb: HTree) -> Result<((HTree, HTree), LtWitness)> {
    let wa = child_descent(a, i)?;
    let wb = child_descent(b, i)?;
    if order_key(&cb) < order_key(&ca) {
        // max(sb_i, sa_i) < max(sb, sa) ≤ max(sa, sb)
        let lt = smb_max_strict_mono(&wb, &wa)?;
        let commut = ind_max_commut(size_of(b).raw(), size_of(a).raw())?;
        Ok(((cb, ca), strict_compose(StrictKind::LtThenLe, lt.deriv(), &commut)?))
    } else {
        Ok(((ca, cb), smb_max_strict_mono(&wa, &wb)?))
    }
}

fn clash() -> HTree {
    HTree::leaf("⊥")
}

/// Unify two trees; `None` when labels or shapes clash.
pub fn unify(a: &HTree, b: &HTree, cfg: UnifyConfig) -> Result<Option<HTree>> {
    let (a, b) = if order_key(b) < order_key(a) { (b.clone(), a.clone()) } else { (a.clone(), b.clone()) };
    let step = move |p: &(HTree, HTree), recur: &mut Recur<'_, (HTree, HTree), Option<HTree>>| {
        unify_step(p, recur, cfg)
    };
    audited_fix(&pair_measure, &step, (a, b), cfg.rec)
}

fn unify_step(
    p: &(HTree, HTree),
    recur: &mut Recur<'_, (HTree, HTree), Option<HTree>>,
    cfg: UnifyConfig,
) -> Result<Option<HTree>> {
    let (a, b) = p;
    match (a.view(), b.view()) {
        (HView::Leaf(x), HView::Leaf(y)) => Ok((x == y).then(|| HTree::leaf(x))),
        (HView::Node(x, xs), HView::Node(y, ys)) => {
            if x != y || xs.len() != ys.len() {
                return Ok(None);
            }
            let mut out = Vec::with_capacity(xs.len());
            for (i, (ca, cb)) in xs.iter().zip(ys).enumerate() {
                let (sub, w) = sub_problem(a, b, i as u64, ca.clone(), cb.clone())?;
                match recur(sub, &w)? {
                    Some(c) => out.push(c),
                    None => return Ok(None),
                }
            }
            Ok(Some(HTree::node(x, out)))
        }
        (HView::Fun, HView::Fun) => {
            let mut eager = HashMap::new();
            for n in 0..cfg.fun_probe {
                let (sub, w) = sub_problem(a, b, n, a.fun_child(n).unwrap(), b.fun_child(n).unwrap())?;
                match recur(sub, &w)? {
                    Some(c) => {
                        eager.insert(n, c);
                    }
                    None => return Ok(None),
                }
            }
            let (a2, b2) = (a.clone(), b.clone());
            Ok(Some(HTree::fun(move |n| match eager.get(&n) {
                Some(c) => c.clone(),
                None => unify(&a2.fun_child(n).unwrap(), &b2.fun_child(n).unwrap(), cfg)
                    .ok()
                    .flatten()
                    .unwrap_or_else(clash),
            })))
        }
        _ => Ok(None),
    }
}

// ---------------------------------------------------------------------------
// Text format

#[derive(Clone, Debug, PartialEq, Eq)]
enum Num {
    Lit(u64),
    Var(String, u64),
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Syn {
    Leaf(String),
    Node(String, Vec<Syn>),
    Fun(String, Box<Syn>),
    Chain(String, Num, Box<Syn>),
}

/// Parse the text format into a tree.
pub fn parse_htree(src: &str) -> Result<HTree> {
    let tokens = tokenize(src);
    let mut at = 0;
    let syn = parse_syn(&tokens, &mut at)?;
    if at != tokens.len() {
        return Err(SmbError::Deserialize(format!("unexpected '{}' after the tree", tokens[at])));
    }
    eval(&Arc::new(syn), &Vec::new())
}

fn tokenize(src: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in src.chars() {
        if c.is_whitespace() || "(),.+".contains(c) {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            if !c.is_whitespace() {
                out.push(c.to_string());
            }
        } else {
            cur.push(c);
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn parse_syn(t: &[String], at: &mut usize) -> Result<Syn> {
    let next = |at: &mut usize| -> Result<String> {
        let tok = t
            .get(*at)
            .cloned()
            .ok_or_else(|| SmbError::Deserialize("tree text ends early".into()))?;
        *at += 1;
        Ok(tok)
    };
    let expect = |at: &mut usize, want: &str| -> Result<()> {
        let got = next(at)?;
        if got == want {
            Ok(())
        } else {
            Err(SmbError::Deserialize(format!("expected '{want}', found '{got}'")))
        }
    };
    match next(at)?.as_str() {
        "leaf" => Ok(Syn::Leaf(next(at)?)),
        "node" => {
            let label = next(at)?;
            expect(at, "(")?;
            let mut kids = Vec::new();
            if t.get(*at).map(String::as_str) == Some(")") {
                *at += 1;
                return Ok(Syn::Node(label, kids));
            }
            loop {
                kids.push(parse_syn(t, at)?);
                match next(at)?.as_str() {
                    "," => continue,
                    ")" => return Ok(Syn::Node(label, kids)),
                    other => return Err(SmbError::Deserialize(format!("expected ',' or ')', found '{other}'"))),
                }
            }
        }
        "fun" => {
            let v = next(at)?;
            expect(at, ".")?;
            Ok(Syn::Fun(v, Box::new(parse_syn(t, at)?)))
        }
        "chain" => {
            let label = next(at)?;
            let first = next(at)?;
            let num = match first.parse::<u64>() {
                Ok(n) => Num::Lit(n),
                Err(_) if t.get(*at).map(String::as_str) == Some("+") => {
                    *at += 1;
                    let off = next(at)?
                        .parse::<u64>()
                        .map_err(|_| SmbError::Deserialize("expected a number after '+'".into()))?;
                    Num::Var(first, off)
                }
                Err(_) => Num::Var(first, 0),
            };
            Ok(Syn::Chain(label, num, Box::new(parse_syn(t, at)?)))
        }
        other => Err(SmbError::Deserialize(format!(
            "expected leaf, node, fun or chain, found '{other}'"
        ))),
    }
}

fn eval(s: &Arc<Syn>, env: &Vec<(String, u64)>) -> Result<HTree> {
    Ok(match &**s {
        Syn::Leaf(l) => HTree::leaf(l),
        Syn::Node(l, kids) => HTree::node(
            l,
            kids.iter()
                .map(|k| eval(&Arc::new(k.clone()), env))
                .collect::<Result<_>>()?,
        ),
        Syn::Chain(l, num, inner) => {
            let k = match num {
                Num::Lit(n) => *n,
                Num::Var(v, off) => {
                    env.iter()
                        .rev()
                        .find(|(name, _)| name == v)
                        .ok_or_else(|| SmbError::UnboundVariable(v.clone()))?
                        .1
                        + off
                }
            };
            let mut t = eval(&Arc::new((**inner).clone()), env)?;
            for _ in 0..k {
                t = HTree::node(l, vec![t]);
            }
            t
        }
        Syn::Fun(v, body) => {
            // Check the body once so that lazy children cannot fail.
            let mut probe = env.clone();
            probe.push((v.clone(), 0));
            eval(&Arc::new((**body).clone()), &probe)?;
            let (v, body, env) = (v.clone(), Arc::new((**body).clone()), env.clone());
            HTree::fun(move |n| {
                let mut inner = env.clone();
                inner.push((v.clone(), n));
                eval(&body, &inner).expect("checked at index 0")
            })
        }
    })
}
