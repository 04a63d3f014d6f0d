//! Bounded cut-free backward proof search.
//!
//! Exponential formulas on the contractible side (`!A` on the left, `?A`
//! classically) are kept as a set: a sequent with two copies is provable
//! iff the one with a single copy is, since both contraction and weakening
//! are available for them. Weakening of other formulas is pushed to the
//! leaves and to the rules that clear a context.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use serde_json::{json, Value};
use thiserror::Error;

use crate::calculi::{reshape, CalcError, Exponentials, ProofTree, Rule, System, SystemName};
use crate::formulas::{dual_unchecked, BinOp, Connective, Const, Formula, Fragment, Sequent, Side, UnOp};

/// Search limits. The contraction budget bounds, per branch, how many
/// times an exponential or axiom may be used beyond its first occurrence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub max_depth: u32,
    pub max_bang_contractions: u32,
    pub max_prenex_copies: u32,
    pub max_nodes: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_depth: 32, max_bang_contractions: 3, max_prenex_copies: 4, max_nodes: 200_000 }
    }
}

impl Budget {
    pub fn validate(&self) -> Result<(), ProverError> {
        if self.max_depth == 0 || self.max_bang_contractions == 0 || self.max_prenex_copies == 0 || self.max_nodes == 0 {
            return Err(ProverError::Budget(format!("all budget fields must be positive: {self:?}")));
        }
        Ok(())
    }

    /// Applies `key=value` overrides separated by commas or whitespace.
    /// Keys: `depth`, `nodes`, `contractions`, `nmax` (or the field names).
    pub fn with_overrides(mut self, text: &str) -> Result<Budget, ProverError> {
        for item in text.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| ProverError::Budget(format!("expected key=value, found `{item}`")))?;
            let bad = || ProverError::Budget(format!("invalid value in `{item}`"));
            match k.trim() {
                "depth" | "max_depth" => self.max_depth = v.trim().parse().map_err(|_| bad())?,
                "nodes" | "max_nodes" => self.max_nodes = v.trim().parse().map_err(|_| bad())?,
                "contractions" | "max_bang_contractions" => {
                    self.max_bang_contractions = v.trim().parse().map_err(|_| bad())?
                }
                "nmax" | "max_prenex_copies" => self.max_prenex_copies = v.trim().parse().map_err(|_| bad())?,
                other => return Err(ProverError::Budget(format!("unknown budget key `{other}`"))),
            }
        }
        Ok(self)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Proved(ProofTree),
    /// The search space was exhausted without hitting any limit.
    Refuted,
    /// Some limit was hit.
    Unknown,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Proved(_) => "Proved",
            Verdict::Refuted => "Refuted",
            Verdict::Unknown => "Unknown",
        }
    }

    pub fn is_proved(&self) -> bool {
        matches!(self, Verdict::Proved(_))
    }

    pub fn is_conclusive(&self) -> bool {
        !matches!(self, Verdict::Unknown)
    }

    /// `Some(true)` for Proved, `Some(false)` for Refuted.
    pub fn decided(&self) -> Option<bool> {
        match self {
            Verdict::Proved(_) => Some(true),
            Verdict::Refuted => Some(false),
            Verdict::Unknown => None,
        }
    }

    pub fn proof(&self) -> Option<&ProofTree> {
        match self {
            Verdict::Proved(t) => Some(t),
            _ => None,
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "verdict": self.label(),
            "proof": self.proof().map(ProofTree::to_json),
        })
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProverError {
    #[error(transparent)]
    Calc(#[from] CalcError),
    #[error("budget error: {0}")]
    Budget(String),
    #[error("not an implicational sequent: {0}")]
    NotImplicational(String),
    #[error("deducibility reduction not available for {0}")]
    UnsupportedBase(String),
    #[error("sequent is not !-prenex: {0}")]
    NotPrenex(String),
    #[error("search was inconclusive where a decision was expected: {0}")]
    Inconclusive(String),
}

impl From<crate::formulas::FormulaError> for ProverError {
    fn from(e: crate::formulas::FormulaError) -> Self {
        ProverError::Calc(CalcError::Formula(e))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub nodes: u64,
    /// Depth bound of the last iteration run.
    pub depth: u32,
}

// ---------------------------------------------------------------------------
// interning

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Node {
    Atom,
    Unit(Const),
    Bin(BinOp, u32, u32),
    Un(UnOp, u32),
}

#[derive(Default)]
struct Interner {
    ids: HashMap<Formula, u32>,
    nodes: Vec<Node>,
    forms: Vec<Formula>,
    duals: Vec<Option<u32>>,
}

impl Interner {
    fn intern(&mut self, f: &Formula) -> u32 {
        if let Some(&i) = self.ids.get(f) {
            return i;
        }
        let node = match f {
            Formula::Var(_) | Formula::DualVar(_) => Node::Atom,
            Formula::Const(c) => Node::Unit(*c),
            Formula::Bin(op, a, b) => {
                let a = self.intern(a);
                let b = self.intern(b);
                Node::Bin(*op, a, b)
            }
            Formula::Un(op, a) => Node::Un(*op, self.intern(a)),
        };
        let id = self.nodes.len() as u32;
        self.nodes.push(node);
        self.forms.push(f.clone());
        self.duals.push(None);
        self.ids.insert(f.clone(), id);
        id
    }

    fn dual(&mut self, id: u32) -> u32 {
        if let Some(d) = self.duals[id as usize] {
            return d;
        }
        let d = self.intern(&dual_unchecked(&self.forms[id as usize].clone()));
        self.duals[id as usize] = Some(d);
        self.duals[d as usize] = Some(id);
        d
    }
}

/// Normalized goal: `theta` is the set of contractible exponential
/// formulas, `gamma` the remaining multiset.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Seq {
    theta: Vec<u32>,
    gamma: Vec<u32>,
    stoup: Option<u32>,
}

#[derive(Clone, Copy, Debug, Default)]
struct Flags {
    depth_hit: bool,
    other: bool,
}

impl Flags {
    fn merge(&mut self, o: Flags) {
        self.depth_hit |= o.depth_hit;
        self.other |= o.other;
    }

    fn any(self) -> bool {
        self.depth_hit || self.other
    }
}

enum Out {
    Proved(Arc<ProofTree>),
    Failed(Flags),
}

enum Prem {
    Goal(Vec<u32>, Option<u32>),
    Given(Arc<ProofTree>),
}

struct Step {
    rule: Rule,
    principal: u32,
    concl: Vec<u32>,
    stoup: Option<u32>,
    prems: Vec<Prem>,
    cost: u32,
}

fn minus(v: &[u32], x: u32) -> Vec<u32> {
    let mut out = v.to_vec();
    if let Some(i) = out.iter().position(|&y| y == x) {
        out.remove(i);
    }
    out
}

fn cat(parts: &[&[u32]]) -> Vec<u32> {
    parts.iter().flat_map(|p| p.iter().copied()).collect()
}

fn distinct(v: &[u32]) -> Vec<u32> {
    let mut d = v.to_vec();
    d.sort_unstable();
    d.dedup();
    d
}

/// All ways of adding up to `budget` extra copies of the listed items.
fn extra_copies(items: &[u32], budget: u32) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for &x in items {
        let mut next = Vec::new();
        for base in &out {
            let used = base.len() as u32;
            for k in 0..=(budget - used) {
                let mut v = base.clone();
                v.extend(std::iter::repeat_n(x, k as usize));
                next.push(v);
            }
        }
        out = next;
    }
    out.sort_by_key(Vec::len);
    out
}

struct Engine<'a> {
    sys: &'a System,
    cls: bool,
    it: Interner,
    axioms: Vec<u32>,
    proved: HashMap<Seq, Arc<ProofTree>>,
    refuted: HashSet<Seq>,
    partial: HashMap<Seq, Vec<(u32, u32, Flags)>>,
    nodes: u64,
    max_nodes: u64,
    aborted: bool,
}

impl<'a> Engine<'a> {
    fn new(sys: &'a System, max_nodes: u64) -> Self {
        let mut it = Interner::default();
        let axioms = sys.axioms.iter().map(|b| it.intern(b)).collect();
        Engine {
            sys,
            cls: sys.side == Side::Classical,
            it,
            axioms,
            proved: HashMap::new(),
            refuted: HashSet::new(),
            partial: HashMap::new(),
            nodes: 0,
            max_nodes,
            aborted: false,
        }
    }

    fn node(&self, id: u32) -> Node {
        self.it.nodes[id as usize]
    }

    fn form(&self, id: u32) -> Formula {
        self.it.forms[id as usize].clone()
    }

    fn is_exp(&self, id: u32) -> bool {
        match self.node(id) {
            Node::Un(UnOp::Bang, _) => !self.cls,
            Node::Un(UnOp::WhyNot, _) => self.cls,
            _ => false,
        }
    }

    fn body(&self, id: u32) -> u32 {
        match self.node(id) {
            Node::Un(_, b) => b,
            _ => unreachable!("exponential expected"),
        }
    }

    fn norm(&self, ids: &[u32], stoup: Option<u32>) -> Seq {
        let (mut theta, mut gamma): (Vec<u32>, Vec<u32>) = ids.iter().partition(|&&x| self.is_exp(x));
        theta.sort_unstable();
        theta.dedup();
        gamma.sort_unstable();
        Seq { theta, gamma, stoup }
    }

    fn sequent(&self, ids: &[u32], stoup: Option<u32>) -> Sequent {
        let fs = ids.iter().map(|&i| self.form(i)).collect();
        if self.cls {
            Sequent::classical(fs)
        } else {
            Sequent::intuitionistic(fs, stoup.map(|s| self.form(s)))
        }
    }

    fn all(s: &Seq) -> Vec<u32> {
        cat(&[&s.gamma, &s.theta])
    }

    fn real(&self, s: &Seq) -> Sequent {
        self.sequent(&Self::all(s), s.stoup)
    }

    fn weakenable(&self, rest: &[u32]) -> bool {
        self.sys.weakening || rest.is_empty()
    }

    fn bridge(&self, t: Arc<ProofTree>, target: &Sequent) -> Arc<ProofTree> {
        reshape(self.sys, t, target).unwrap_or_else(|e| panic!("internal emission error: {e}"))
    }

    fn closed(&self, rule: Rule, principal: u32, ids: &[u32], stoup: Option<u32>, s: &Seq) -> Arc<ProofTree> {
        let leaf = Arc::new(ProofTree::leaf(self.sequent(ids, stoup), rule, self.form(principal)));
        self.bridge(leaf, &self.real(s))
    }

    fn find_unit(&self, v: &[u32], c: Const) -> Option<u32> {
        v.iter().copied().find(|&x| self.node(x) == Node::Unit(c))
    }

    fn leaf(&mut self, s: &Seq) -> Option<Arc<ProofTree>> {
        if self.cls {
            return self.leaf_cls(s);
        }
        if let Some(a) = s.stoup {
            if self.node(a) == Node::Unit(Const::Top) {
                return Some(self.closed(Rule::TopR, a, &Self::all(s), s.stoup, s));
            }
        }
        if let Some(z) = self.find_unit(&s.gamma, Const::Zero) {
            return Some(self.closed(Rule::ZeroL, z, &Self::all(s), s.stoup, s));
        }
        if let Some(a) = s.stoup {
            let in_gamma = s.gamma.contains(&a);
            if in_gamma || s.theta.binary_search(&a).is_ok() {
                let rest = if in_gamma { minus(&s.gamma, a) } else { s.gamma.clone() };
                if self.weakenable(&rest) {
                    return Some(self.closed(Rule::Init, a, &[a], Some(a), s));
                }
            }
            if self.weakenable(&s.gamma) {
                if self.node(a) == Node::Unit(Const::One) {
                    return Some(self.closed(Rule::OneR, a, &[], Some(a), s));
                }
                if self.axioms.contains(&a) {
                    return Some(self.closed(Rule::Axiom, a, &[], Some(a), s));
                }
            }
        }
        if let Some(b) = self.find_unit(&s.gamma, Const::Bot) {
            if self.weakenable(&minus(&s.gamma, b)) && (s.stoup.is_none() || self.sys.right_weakening) {
                return Some(self.closed(Rule::BotL, b, &[b], None, s));
            }
        }
        None
    }

    fn leaf_cls(&mut self, s: &Seq) -> Option<Arc<ProofTree>> {
        if let Some(t) = self.find_unit(&s.gamma, Const::Top) {
            return Some(self.closed(Rule::Top, t, &Self::all(s), None, s));
        }
        for a in distinct(&s.gamma) {
            let d = self.it.dual(a);
            let rest = minus(&s.gamma, a);
            let found = if rest.contains(&d) {
                Some(minus(&rest, d))
            } else if s.theta.binary_search(&d).is_ok() {
                Some(rest)
            } else {
                None
            };
            if let Some(rest) = found {
                if self.weakenable(&rest) {
                    return Some(self.closed(Rule::Init, a, &[a, d], None, s));
                }
            }
        }
        if let Some(o) = self.find_unit(&s.gamma, Const::One) {
            if self.weakenable(&minus(&s.gamma, o)) {
                return Some(self.closed(Rule::One, o, &[o], None, s));
            }
        }
        for b in self.axioms.clone() {
            let rest = if s.gamma.contains(&b) {
                minus(&s.gamma, b)
            } else if s.theta.binary_search(&b).is_ok() {
                s.gamma.clone()
            } else {
                continue;
            };
            if self.weakenable(&rest) {
                return Some(self.closed(Rule::Axiom, b, &[b], None, s));
            }
        }
        None
    }

    /// The first invertible rule that applies, if any.
    fn invertible(&self, s: &Seq) -> Option<Step> {
        let all = Self::all(s);
        let step = |rule, principal, prems: Vec<Prem>| Step { rule, principal, concl: all.clone(), stoup: s.stoup, prems, cost: 0 };
        if !self.cls {
            if let Some(a) = s.stoup {
                match self.node(a) {
                    Node::Bin(BinOp::Lolli, x, y) => return Some(step(Rule::ImpR, a, vec![Prem::Goal(cat(&[&all, &[x]]), Some(y))])),
                    Node::Bin(BinOp::With, x, y) => {
                        return Some(step(Rule::WithR, a, vec![Prem::Goal(all.clone(), Some(x)), Prem::Goal(all.clone(), Some(y))]))
                    }
                    Node::Unit(Const::Bot) => return Some(step(Rule::BotR, a, vec![Prem::Goal(all.clone(), None)])),
                    _ => {}
                }
            }
            for &g in &s.gamma {
                let rest = minus(&all, g);
                match self.node(g) {
                    Node::Unit(Const::One) => return Some(step(Rule::OneL, g, vec![Prem::Goal(rest, s.stoup)])),
                    Node::Bin(BinOp::Tensor, x, y) => {
                        return Some(step(Rule::TensL, g, vec![Prem::Goal(cat(&[&rest, &[x, y]]), s.stoup)]))
                    }
                    Node::Bin(BinOp::Plus, x, y) => {
                        return Some(step(
                            Rule::PlusL,
                            g,
                            vec![Prem::Goal(cat(&[&rest, &[x]]), s.stoup), Prem::Goal(cat(&[&rest, &[y]]), s.stoup)],
                        ))
                    }
                    _ => {}
                }
            }
        } else {
            for &g in &s.gamma {
                let rest = minus(&all, g);
                match self.node(g) {
                    Node::Unit(Const::Bot) => return Some(step(Rule::Bot, g, vec![Prem::Goal(rest, None)])),
                    Node::Bin(BinOp::Par, x, y) => return Some(step(Rule::Par, g, vec![Prem::Goal(cat(&[&rest, &[x, y]]), None)])),
                    Node::Bin(BinOp::With, x, y) => {
                        return Some(step(
                            Rule::With,
                            g,
                            vec![Prem::Goal(cat(&[&rest, &[x]]), None), Prem::Goal(cat(&[&rest, &[y]]), None)],
                        ))
                    }
                    _ => {}
                }
            }
        }
        None
    }

    /// Premise multisets for boxing rules: one copy of every body of
    /// `theta`, plus extra copies paid from the contraction budget.
    fn boxings(&self, theta: &[u32], contr: u32, flags: &mut Flags) -> Vec<(Vec<u32>, Vec<u32>)> {
        let payable: Vec<u32> = theta.iter().copied().filter(|&t| !self.is_exp(self.body(t))).collect();
        if !payable.is_empty() {
            flags.other = true;
        }
        extra_copies(&payable, contr)
            .into_iter()
            .map(|extra| {
                let concl = cat(&[theta, &extra]);
                let bodies = concl.iter().map(|&t| self.body(t)).collect();
                (concl, bodies)
            })
            .collect()
    }

    fn alternatives(&mut self, s: &Seq, contr: u32, flags: &mut Flags) -> Vec<Step> {
        let mut steps = Vec::new();
        let mut late = Vec::new();
        let all = Self::all(s);
        let shared = cat(&[&all, &s.theta]);
        let st = s.stoup;
        let mk = |rule, principal, concl: Vec<u32>, stoup, prems, cost| Step { rule, principal, concl, stoup, prems, cost };
        let exps = self.sys.exponentials;
        for f in distinct(&s.gamma) {
            let rest = minus(&s.gamma, f);
            match (self.node(f), self.cls) {
                (Node::Bin(BinOp::Lolli, x, y), false) => {
                    for (l, r) in id_splits(&rest) {
                        late.push(mk(
                            Rule::ImpL,
                            f,
                            shared.clone(),
                            st,
                            vec![Prem::Goal(cat(&[&s.theta, &l]), Some(x)), Prem::Goal(cat(&[&s.theta, &r, &[y]]), st)],
                            0,
                        ));
                    }
                }
                (Node::Bin(BinOp::With, x, y), false) => {
                    let base = minus(&all, f);
                    steps.push(mk(Rule::WithL1, f, all.clone(), st, vec![Prem::Goal(cat(&[&base, &[x]]), st)], 0));
                    steps.push(mk(Rule::WithL2, f, all.clone(), st, vec![Prem::Goal(cat(&[&base, &[y]]), st)], 0));
                }
                (Node::Bin(BinOp::Tensor, x, y), true) => {
                    for (l, r) in id_splits(&rest) {
                        late.push(mk(
                            Rule::Tens,
                            f,
                            shared.clone(),
                            None,
                            vec![Prem::Goal(cat(&[&s.theta, &l, &[x]]), None), Prem::Goal(cat(&[&s.theta, &r, &[y]]), None)],
                            0,
                        ));
                    }
                }
                (Node::Bin(BinOp::Plus, x, y), true) => {
                    let base = minus(&all, f);
                    steps.push(mk(Rule::Plus1, f, all.clone(), None, vec![Prem::Goal(cat(&[&base, &[x]]), None)], 0));
                    steps.push(mk(Rule::Plus2, f, all.clone(), None, vec![Prem::Goal(cat(&[&base, &[y]]), None)], 0));
                }
                (Node::Un(UnOp::Bang, x), true) if self.weakenable(&rest) => match exps {
                    Exponentials::Standard => late.push(mk(
                        Rule::Bang,
                        f,
                        cat(&[&s.theta, &[f]]),
                        None,
                        vec![Prem::Goal(cat(&[&s.theta, &[x]]), None)],
                        0,
                    )),
                    Exponentials::Functorial => {
                        for (concl, bodies) in self.boxings(&s.theta, contr, flags) {
                            let cost = (concl.len() - s.theta.len()) as u32;
                            late.push(mk(Rule::F, f, cat(&[&concl, &[f]]), None, vec![Prem::Goal(cat(&[&bodies, &[x]]), None)], cost));
                        }
                    }
                    _ => {}
                },
                _ => {}
            }
        }
        if let (Some(a), false) = (st, self.cls) {
            match self.node(a) {
                Node::Bin(BinOp::Tensor, x, y) => {
                    for (l, r) in id_splits(&s.gamma) {
                        late.push(mk(
                            Rule::TensR,
                            a,
                            shared.clone(),
                            st,
                            vec![Prem::Goal(cat(&[&s.theta, &l]), Some(x)), Prem::Goal(cat(&[&s.theta, &r]), Some(y))],
                            0,
                        ));
                    }
                }
                Node::Bin(BinOp::Plus, x, y) => {
                    steps.push(mk(Rule::PlusR1, a, all.clone(), st, vec![Prem::Goal(all.clone(), Some(x))], 0));
                    steps.push(mk(Rule::PlusR2, a, all.clone(), st, vec![Prem::Goal(all.clone(), Some(y))], 0));
                }
                Node::Un(UnOp::Bang, x) if self.weakenable(&s.gamma) => match exps {
                    Exponentials::Standard => {
                        late.push(mk(Rule::BangP, a, s.theta.clone(), st, vec![Prem::Goal(s.theta.clone(), Some(x))], 0))
                    }
                    Exponentials::Functorial => {
                        for (concl, bodies) in self.boxings(&s.theta, contr, flags) {
                            let cost = (concl.len() - s.theta.len()) as u32;
                            late.push(mk(Rule::BangF, a, concl, st, vec![Prem::Goal(bodies, Some(x))], cost));
                        }
                    }
                    Exponentials::Light => {
                        late.push(mk(Rule::LalBang, a, vec![], st, vec![Prem::Goal(vec![], Some(x))], 0));
                        for &t in &s.theta {
                            late.push(mk(Rule::LalBang, a, vec![t], st, vec![Prem::Goal(vec![self.body(t)], Some(x))], 0));
                        }
                    }
                    Exponentials::None => {}
                },
                Node::Un(UnOp::Para, x) if exps == Exponentials::Light => {
                    let (paras, others): (Vec<u32>, Vec<u32>) =
                        s.gamma.iter().partition(|&&g| matches!(self.node(g), Node::Un(UnOp::Para, _)));
                    if self.weakenable(&others) {
                        let para_bodies: Vec<u32> = paras.iter().map(|&p| self.body(p)).collect();
                        for (concl, bodies) in self.boxings(&s.theta, contr, flags) {
                            let cost = (concl.len() - s.theta.len()) as u32;
                            late.push(mk(
                                Rule::LalPara,
                                a,
                                cat(&[&concl, &paras]),
                                st,
                                vec![Prem::Goal(cat(&[&bodies, &para_bodies]), Some(x))],
                                cost,
                            ));
                        }
                    }
                }
                _ => {}
            }
            if self.sys.right_weakening && self.node(a) != Node::Unit(Const::Bot) {
                steps.push(mk(Rule::WPrime, a, all.clone(), st, vec![Prem::Goal(all.clone(), None)], 0));
            }
        }
        if exps == Exponentials::Standard {
            let rule = if self.cls { Rule::Why } else { Rule::BangD };
            for &t in &s.theta {
                let x = self.body(t);
                steps.push(mk(rule, t, all.clone(), st, vec![Prem::Goal(cat(&[&minus(&all, t), &[x]]), st)], 0));
                if contr > 0 {
                    late.push(mk(rule, t, cat(&[&all, &[t]]), st, vec![Prem::Goal(cat(&[&all, &[x]]), st)], 1));
                } else {
                    flags.other = true;
                }
            }
        }
        for b in self.axioms.clone() {
            let added = if self.cls { self.it.dual(b) } else { b };
            if s.theta.binary_search(&added).is_ok() {
                continue;
            }
            flags.other = true;
            if contr == 0 {
                continue;
            }
            let ax = if self.cls { self.sequent(&[b], None) } else { self.sequent(&[], Some(b)) };
            let leaf = Arc::new(ProofTree::leaf(ax, Rule::Axiom, self.form(b)));
            late.push(mk(Rule::Cut, b, all.clone(), st, vec![Prem::Given(leaf), Prem::Goal(cat(&[&all, &[added]]), st)], 1));
        }
        steps.extend(late);
        steps
    }

    fn run(&mut self, s: &Seq, step: Step, depth: u32, contr: u32, flags: &mut Flags) -> Option<Arc<ProofTree>> {
        let c = contr - step.cost;
        let mut proofs = Vec::with_capacity(step.prems.len());
        for p in &step.prems {
            match p {
                Prem::Given(t) => proofs.push(t.clone()),
                Prem::Goal(ids, st) => {
                    let ps = self.norm(ids, *st);
                    match self.search(&ps, depth, c) {
                        Out::Proved(t) => proofs.push(self.bridge(t, &self.sequent(ids, *st))),
                        Out::Failed(f) => {
                            flags.merge(f);
                            return None;
                        }
                    }
                }
            }
        }
        let concl = self.sequent(&step.concl, step.stoup);
        let node = Arc::new(ProofTree::node(concl, step.rule, self.form(step.principal), proofs));
        Some(self.bridge(node, &self.real(s)))
    }

    fn search(&mut self, s: &Seq, depth: u32, contr: u32) -> Out {
        const HALT: Flags = Flags { depth_hit: false, other: true };
        if self.aborted {
            return Out::Failed(HALT);
        }
        if let Some(t) = self.proved.get(s) {
            return Out::Proved(t.clone());
        }
        if self.refuted.contains(s) {
            return Out::Failed(Flags::default());
        }
        if let Some(list) = self.partial.get(s) {
            if let Some(&(_, _, f)) = list.iter().find(|(d, c, _)| *d >= depth && *c >= contr) {
                return Out::Failed(f);
            }
        }
        self.nodes += 1;
        if self.nodes > self.max_nodes {
            self.aborted = true;
            return Out::Failed(HALT);
        }
        if let Some(t) = self.leaf(s) {
            self.proved.insert(s.clone(), t.clone());
            return Out::Proved(t);
        }
        let mut flags = Flags::default();
        let found = if let Some(step) = self.invertible(s) {
            self.run(s, step, depth, contr, &mut flags)
        } else if depth == 0 {
            flags.depth_hit = true;
            None
        } else {
            let mut found = None;
            for step in self.alternatives(s, contr, &mut flags) {
                found = self.run(s, step, depth - 1, contr, &mut flags);
                if found.is_some() || self.aborted {
                    break;
                }
            }
            found
        };
        if let Some(t) = found {
            self.proved.insert(s.clone(), t.clone());
            return Out::Proved(t);
        }
        if self.aborted {
            return Out::Failed(HALT);
        }
        if !flags.any() {
            self.refuted.insert(s.clone());
        } else {
            let d = if flags.depth_hit { depth } else { u32::MAX };
            self.partial.entry(s.clone()).or_default().push((d, contr, flags));
        }
        Out::Failed(flags)
    }
}

fn id_splits(v: &[u32]) -> Vec<(Vec<u32>, Vec<u32>)> {
    // same enumeration as the formula-level helper, on ids
    let mut sorted = v.to_vec();
    sorted.sort_unstable();
    let mut groups: Vec<(u32, usize)> = Vec::new();
    for x in sorted {
        match groups.last_mut() {
            Some((g, n)) if *g == x => *n += 1,
            _ => groups.push((x, 1)),
        }
    }
    let mut out = vec![(Vec::new(), Vec::new())];
    for (x, n) in groups {
        let mut next = Vec::with_capacity(out.len() * (n + 1));
        for (l, r) in &out {
            for k in 0..=n {
                let mut l2: Vec<u32> = l.clone();
                let mut r2: Vec<u32> = r.clone();
                l2.extend(std::iter::repeat_n(x, k));
                r2.extend(std::iter::repeat_n(x, n - k));
                next.push((l2, r2));
            }
        }
        out = next;
    }
    out
}

// ---------------------------------------------------------------------------
// public entry points

/// Cut-free search for `goal` in `sys`, with iterative deepening on the
/// number of non-invertible steps.
pub fn prove(sys: &System, goal: &Sequent, b: &Budget) -> Result<Verdict, ProverError> {
    prove_with_stats(sys, goal, b).map(|(v, _)| v)
}

pub fn prove_with_stats(sys: &System, goal: &Sequent, b: &Budget) -> Result<(Verdict, Stats), ProverError> {
    b.validate()?;
    sys.check_sequent(goal)?;
    let mut e = Engine::new(sys, b.max_nodes);
    let ids: Vec<u32> = if goal.is_classical() { goal.succedent() } else { goal.antecedent() }
        .iter()
        .map(|f| e.it.intern(f))
        .collect();
    let stoup = goal.stoup().map(|f| e.it.intern(f));
    let root = e.norm(&ids, stoup);
    let mut stats = Stats::default();
    for d in 1..=b.max_depth {
        stats.depth = d;
        let out = e.search(&root, d, b.max_bang_contractions);
        stats.nodes = e.nodes;
        match out {
            Out::Proved(t) => {
                let t = e.bridge(t, goal);
                return Ok((Verdict::Proved((*t).clone()), stats));
            }
            Out::Failed(f) => {
                if e.aborted || !f.depth_hit {
                    let v = if f.any() || e.aborted { Verdict::Unknown } else { Verdict::Refuted };
                    return Ok((v, stats));
                }
            }
        }
    }
    Ok((Verdict::Unknown, stats))
}

/// Depth bound used by [`prove_bck`]: formula occurrences plus connective
/// occurrences plus one.
pub fn bck_bound(goal: &Sequent) -> usize {
    goal.formulas().map(|f| 1 + f.connective_count()).sum::<usize>() + 1
}

/// Decision procedure for implicational BCK sequents.
pub fn prove_bck(goal: &Sequent) -> Result<Verdict, ProverError> {
    let lolli = Fragment::of(&[Connective::Lolli]);
    if goal.is_classical() || !goal.connectives_used().is_subset_of(lolli) {
        return Err(ProverError::NotImplicational(goal.to_string()));
    }
    let b = Budget {
        max_depth: bck_bound(goal) as u32,
        max_bang_contractions: 1,
        max_prenex_copies: 1,
        max_nodes: u64::MAX,
    };
    let v = prove(&System::bck(), goal, &b)?;
    if !v.is_conclusive() {
        return Err(ProverError::Inconclusive(goal.to_string()));
    }
    Ok(v)
}

/// The system and goal that a deducibility instance `base[phi]` reduces to.
pub fn deduction_target(base: &System, phi: &[Formula], goal: &Sequent) -> Result<(System, Sequent), ProverError> {
    let with_ax = base.clone().with_axioms(phi)?;
    with_ax.check_sequent(goal)?;
    let banged = |fs: Vec<Formula>| -> Vec<Formula> { fs.into_iter().map(Formula::bang).collect() };
    let lolli_bang = Fragment::of(&[Connective::Lolli, Connective::Bang]);
    let intuitionistic = |sys: System| {
        let mut ante = banged(phi.to_vec());
        ante.extend(goal.antecedent().iter().cloned());
        (sys, Sequent::intuitionistic(ante, goal.stoup().cloned()))
    };
    Ok(match base.name {
        SystemName::FLei | SystemName::FLplusEi => intuitionistic(System::ilzw()),
        SystemName::FLew => intuitionistic(System::ilzw_prime()),
        SystemName::Bck => intuitionistic(System::illw().restrict(lolli_bang)),
        SystemName::Bci => intuitionistic(System::ill().restrict(lolli_bang)),
        SystemName::InFLew => {
            let mut succ: Vec<Formula> = phi.iter().map(|b| Formula::why_not(dual_unchecked(b))).collect();
            succ.extend(goal.succedent().iter().cloned());
            (System::llw(), Sequent::classical(succ))
        }
        _ => return Err(ProverError::UnsupportedBase(base.to_string())),
    })
}

/// Deducibility in `base[phi]` through the exponential reduction.
pub fn deduce(base: &System, phi: &[Formula], goal: &Sequent, b: &Budget) -> Result<Verdict, ProverError> {
    let (sys, g) = deduction_target(base, phi, goal)?;
    prove(&sys, &g, b)
}

/// Deducibility by direct search in `base[phi]`.
pub fn deduce_direct(base: &System, phi: &[Formula], goal: &Sequent, b: &Budget) -> Result<Verdict, ProverError> {
    prove(&base.clone().with_axioms(phi)?, goal, b)
}

/// A `!`-prenex sequent `!Γ, Δ ⊢ Π` (or `⊢ ?Γ, Δ`) split into its parts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Prenex {
    pub boxed: Vec<Formula>,
    pub rest: Sequent,
}

fn exp_free(f: &Formula) -> bool {
    !f.connectives_used().contains(Connective::Bang) && !f.connectives_used().contains(Connective::WhyNot)
}

pub fn split_prenex(goal: &Sequent) -> Result<Prenex, ProverError> {
    let not_prenex = || ProverError::NotPrenex(goal.to_string());
    let side = if goal.is_classical() { goal.succedent() } else { goal.antecedent() };
    let mut boxed = Vec::new();
    let mut rest = Vec::new();
    for f in side {
        let outer = if goal.is_classical() { f.is_why_not() } else { f.is_bang() };
        match (outer, f.body()) {
            (true, Some(b)) if exp_free(b) => boxed.push(b.clone()),
            (false, _) if exp_free(f) => rest.push(f.clone()),
            _ => return Err(not_prenex()),
        }
    }
    if goal.stoup().is_some_and(|p| !exp_free(p)) {
        return Err(not_prenex());
    }
    let rest = if goal.is_classical() {
        Sequent::classical(rest)
    } else {
        Sequent::intuitionistic(rest, goal.stoup().cloned())
    };
    Ok(Prenex { boxed, rest })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrenexOutcome {
    pub verdict: Verdict,
    /// Least number of copies for which the expansion was proved.
    pub copies: Option<u32>,
}

/// `Γⁿ, Δ ⊢ Π` with `Γⁿ` the n-fold multiset sum.
pub fn prenex_instance(p: &Prenex, n: u32) -> Sequent {
    let mut fs: Vec<Formula> = Vec::new();
    for _ in 0..n {
        fs.extend(p.boxed.iter().cloned());
    }
    if p.rest.is_classical() {
        fs.extend(p.rest.succedent().iter().cloned());
        Sequent::classical(fs)
    } else {
        fs.extend(p.rest.antecedent().iter().cloned());
        Sequent::intuitionistic(fs, p.rest.stoup().cloned())
    }
}

/// Searches `Γⁿ, Δ ⊢ Π` in `target` for n = 0..=nmax.
pub fn prenex_expand_prove(target: &System, goal: &Sequent, b: &Budget) -> Result<PrenexOutcome, ProverError> {
    b.validate()?;
    let p = split_prenex(goal)?;
    let nmax = if p.boxed.is_empty() { 0 } else { b.max_prenex_copies };
    for n in 0..=nmax {
        match prove(target, &prenex_instance(&p, n), b)? {
            Verdict::Proved(t) => return Ok(PrenexOutcome { verdict: Verdict::Proved(t), copies: Some(n) }),
            Verdict::Refuted if p.boxed.is_empty() => return Ok(PrenexOutcome { verdict: Verdict::Refuted, copies: None }),
            _ => {}
        }
    }
    Ok(PrenexOutcome { verdict: Verdict::Unknown, copies: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculi::check_proof;
    use crate::formulas::{parse_formula, parse_sequent, Polarity};

    fn iseq(s: &str) -> Sequent {
        parse_sequent(s, Polarity::Intuitionistic).unwrap()
    }

    fn cseq(s: &str) -> Sequent {
        parse_sequent(s, Polarity::Classical).unwrap()
    }

    fn run(sys: &System, s: &Sequent) -> Verdict {
        let v = prove(sys, s, &Budget::default()).unwrap();
        if let Verdict::Proved(t) = &v {
            check_proof(sys, t, false).unwrap_or_else(|e| panic!("{s}: {e}"));
            assert_eq!(&t.sequent, s);
        }
        v
    }

    #[test]
    fn k_combinator() {
        assert!(run(&System::bck(), &iseq("|- p -o (q -o p)")).is_proved());
        assert_eq!(run(&System::bci(), &iseq("|- p -o (q -o p)")), Verdict::Refuted);
    }

    #[test]
    fn why_not_witness() {
        let s = cseq("|- ?p^, p");
        assert!(run(&System::llw(), &s).is_proved());
        assert_eq!(run(&System::ellw(), &s), Verdict::Refuted);
    }

    #[test]
    fn bck_decisions() {
        assert!(prove_bck(&iseq("|- p -o (q -o p)")).unwrap().is_proved());
        assert_eq!(prove_bck(&iseq("|- (p -o p -o q) -o (p -o q)")).unwrap(), Verdict::Refuted);
        assert!(prove_bck(&iseq("p |- p")).unwrap().is_proved());
        assert!(prove_bck(&iseq("|- p * q")).is_err());
    }

    #[test]
    fn contraction_through_bang() {
        let s = iseq("!p, p -o p -o q |- q");
        assert!(run(&System::ilzw(), &s).is_proved());
        assert!(run(&System::ill(), &iseq("!p |- p * p")).is_proved());
        assert_eq!(run(&System::ill(), &iseq("p, q |- p")), Verdict::Refuted);
    }

    #[test]
    fn functorial_promotion() {
        assert!(run(&System::iezw(), &iseq("!p, !(p -o q) |- !q")).is_proved());
        assert!(!run(&System::iezw(), &iseq("!p |- p")).is_proved());
        assert!(run(&System::ilzw(), &iseq("!p |- p")).is_proved());
    }

    #[test]
    fn right_weakening() {
        assert!(run(&System::ilzw_prime(), &iseq("bot |- p")).is_proved());
        assert!(run(&System::ilzw_prime(), &iseq("p, p -o bot |- q")).is_proved());
        assert!(!run(&System::ilzw(), &iseq("p, p -o bot |- q")).is_proved());
    }

    #[test]
    fn light_rules() {
        let sys = System::ilal();
        assert!(run(&sys, &iseq("!p, !(p -o q) |- $q")).is_proved());
        assert!(run(&sys, &iseq("!(p -o q) |- !p -o $q")).is_proved());
        assert!(!run(&sys, &iseq("!(p -o q) |- !p -o !q")).is_proved());
        assert!(!run(&sys, &iseq("!p |- p")).is_proved());
    }

    #[test]
    fn deduction_routes() {
        let p = parse_formula("p", Polarity::Intuitionistic).unwrap();
        let g = iseq("|- q -o p");
        let b = Budget::default();
        assert!(deduce(&System::bck(), std::slice::from_ref(&p), &g, &b).unwrap().is_proved());
        assert!(deduce_direct(&System::bck(), std::slice::from_ref(&p), &g, &b).unwrap().is_proved());
        let pc = parse_formula("p", Polarity::Classical).unwrap();
        assert!(deduce(&System::inflew(), &[pc], &cseq("|- p"), &b).unwrap().is_proved());
        assert!(deduce(&System::llw(), &[], &cseq("|- p"), &b).is_err());
    }

    #[test]
    fn prenex_expansion() {
        let b = Budget::default();
        let o = prenex_expand_prove(&System::flew(), &iseq("!p |- p"), &b).unwrap();
        assert_eq!(o.copies, Some(1));
        let o = prenex_expand_prove(&System::flew(), &iseq("p |- p"), &b).unwrap();
        assert_eq!(o.copies, Some(0));
        assert!(prenex_expand_prove(&System::flew(), &iseq("!!p |- p"), &b).is_err());
    }

    #[test]
    fn budget_checks() {
        let b = Budget { max_depth: 0, ..Budget::default() };
        assert!(prove(&System::bck(), &iseq("p |- p"), &b).is_err());
        let b = Budget::default().with_overrides("depth=5, nodes=10").unwrap();
        assert_eq!((b.max_depth, b.max_nodes), (5, 10));
        assert!(Budget::default().with_overrides("speed=1").is_err());
    }

    #[test]
    fn node_budget_gives_unknown() {
        let b = Budget { max_nodes: 1, ..Budget::default() };
        let v = prove(&System::bck(), &iseq("p -o q, q -o r, p |- r"), &b).unwrap();
        assert_eq!(v, Verdict::Unknown);
    }
}
