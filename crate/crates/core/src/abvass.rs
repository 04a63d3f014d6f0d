//! Alternating branching vector addition systems with full zero tests,
//! their (lossy) deduction trees, a bounded search and the regular form.

use std::collections::{HashMap, HashSet};
use std::fmt::{self, Debug};
use std::hash::Hash;
use std::sync::Arc;

use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AbvassError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid budget: {0}")]
    Budget(String),
    #[error("tree violation at {path:?}: {reason}")]
    Violation { path: Vec<usize>, reason: String },
    #[error("{0}")]
    Json(String),
}

/// A rule leaving some state.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum MRule<S> {
    Unary(Vec<i64>, S),
    Split(S, S),
    Fork(S, S),
    Zero(S),
}

/// Anything with states and rules. Encoded machines generate their states
/// on demand, explicit ones list them.
pub trait Machine {
    type State: Clone + Eq + Hash + Debug;
    fn dim(&self) -> usize;
    fn rules(&self, q: &Self::State) -> Vec<MRule<Self::State>>;
    fn state_name(&self, q: &Self::State) -> String;
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Config<S> {
    pub state: S,
    pub vector: Vec<u32>,
}

impl<S> Config<S> {
    pub fn new(state: S, vector: Vec<u32>) -> Self {
        Config { state, vector }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TreeRule {
    Unary(Vec<i64>),
    Split,
    Fork,
    Zero,
    Loss(usize),
    Leaf,
}

impl TreeRule {
    pub fn name(&self) -> &'static str {
        match self {
            TreeRule::Unary(_) => "unary",
            TreeRule::Split => "split",
            TreeRule::Fork => "fork",
            TreeRule::Zero => "zero",
            TreeRule::Loss(_) => "loss",
            TreeRule::Leaf => "leaf",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeductionTree<S> {
    pub state: S,
    pub vector: Vec<u32>,
    pub rule: TreeRule,
    pub children: Vec<Arc<DeductionTree<S>>>,
}

impl<S: Clone> DeductionTree<S> {
    pub fn leaf(state: S, dim: usize) -> Self {
        DeductionTree { state, vector: vec![0; dim], rule: TreeRule::Leaf, children: vec![] }
    }

    pub fn config(&self) -> Config<S> {
        Config::new(self.state.clone(), self.vector.clone())
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(|c| c.size()).sum::<usize>()
    }

    pub fn height(&self) -> usize {
        1 + self.children.iter().map(|c| c.height()).max().unwrap_or(0)
    }

    pub fn contains_loss(&self) -> bool {
        matches!(self.rule, TreeRule::Loss(_)) || self.children.iter().any(|c| c.contains_loss())
    }

    /// Visits every node in preorder.
    pub fn each(&self, f: &mut impl FnMut(&DeductionTree<S>)) {
        f(self);
        for c in &self.children {
            c.each(f);
        }
    }

    pub fn to_json<M: Machine<State = S>>(&self, m: &M) -> Value {
        let mut v = json!({
            "state": m.state_name(&self.state),
            "vector": self.vector,
            "rule": self.rule.name(),
            "children": self.children.iter().map(|c| c.to_json(m)).collect::<Vec<_>>(),
        });
        match &self.rule {
            TreeRule::Unary(u) => v["update"] = json!(u),
            TreeRule::Loss(i) => v["coordinate"] = json!(i),
            _ => {}
        }
        v
    }
}

impl DeductionTree<usize> {
    pub fn from_json(a: &Abvass, v: &Value) -> Result<Self, AbvassError> {
        let bad = |m: &str| AbvassError::Json(m.to_string());
        let name = v.get("state").and_then(Value::as_str).ok_or_else(|| bad("missing `state`"))?;
        let state = a.state_id(name)?;
        let vector = v
            .get("vector")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing `vector`"))?
            .iter()
            .map(|x| x.as_u64().and_then(|x| u32::try_from(x).ok()).ok_or_else(|| bad("bad counter")))
            .collect::<Result<Vec<_>, _>>()?;
        let rule = match v.get("rule").and_then(Value::as_str).ok_or_else(|| bad("missing `rule`"))? {
            "unary" => TreeRule::Unary(
                v.get("update")
                    .and_then(Value::as_array)
                    .ok_or_else(|| bad("missing `update`"))?
                    .iter()
                    .map(|x| x.as_i64().ok_or_else(|| bad("bad update")))
                    .collect::<Result<_, _>>()?,
            ),
            "split" => TreeRule::Split,
            "fork" => TreeRule::Fork,
            "zero" => TreeRule::Zero,
            "loss" => TreeRule::Loss(
                v.get("coordinate").and_then(Value::as_u64).ok_or_else(|| bad("missing `coordinate`"))? as usize,
            ),
            "leaf" => TreeRule::Leaf,
            r => return Err(bad(&format!("unknown rule `{r}`"))),
        };
        let children = v
            .get("children")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing `children`"))?
            .iter()
            .map(|c| DeductionTree::from_json(a, c).map(Arc::new))
            .collect::<Result<_, _>>()?;
        Ok(DeductionTree { state, vector, rule, children })
    }
}

/// An explicitly listed machine. States are indices into `names`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Abvass {
    pub dim: usize,
    pub names: Vec<String>,
    pub leaves: Vec<usize>,
    pub unary: Vec<(usize, Vec<i64>, usize)>,
    pub split: Vec<(usize, usize, usize)>,
    pub fork: Vec<(usize, usize, usize)>,
    pub zero: Vec<(usize, usize)>,
}

impl Abvass {
    pub fn new(dim: usize) -> Self {
        Abvass { dim, ..Abvass::default() }
    }

    /// Index of `name`, adding it if new.
    pub fn add_state(&mut self, name: &str) -> usize {
        match self.names.iter().position(|n| n == name) {
            Some(i) => i,
            None => {
                self.names.push(name.to_string());
                self.names.len() - 1
            }
        }
    }

    pub fn state_id(&self, name: &str) -> Result<usize, AbvassError> {
        self.names.iter().position(|n| n == name).ok_or_else(|| AbvassError::UnknownState(name.into()))
    }

    pub fn states(&self) -> std::ops::Range<usize> {
        0..self.names.len()
    }

    /// Every unary update is `e_i` or `-e_i`.
    pub fn is_ordinary(&self) -> bool {
        self.unary.iter().all(|(_, u, _)| {
            u.iter().filter(|&&x| x != 0).count() == 1 && u.iter().all(|&x| x == 0 || x == 1 || x == -1)
        })
    }

    /// No forks and no zero tests.
    pub fn is_bvass(&self) -> bool {
        self.fork.is_empty() && self.zero.is_empty()
    }

    pub fn parse(text: &str) -> Result<Abvass, AbvassError> {
        let mut a = Abvass::default();
        let mut dim = None;
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let err = |msg: &str| AbvassError::Parse { line, msg: msg.to_string() };
            let l = raw.split('#').next().unwrap_or("").trim();
            if l.is_empty() {
                continue;
            }
            let (kw, rest) = l.split_once(char::is_whitespace).unwrap_or((l, ""));
            let rest = rest.trim();
            if kw == "dim" {
                let d: usize = rest.parse().map_err(|_| err("bad dimension"))?;
                if dim.replace(d).is_some() {
                    return Err(err("dimension given twice"));
                }
                a.dim = d;
                continue;
            }
            let d = dim.ok_or_else(|| err("`dim` must come first"))?;
            let ident = |s: &str| -> Result<String, AbvassError> {
                let s = s.trim();
                if s.is_empty() || !s.chars().all(|c| c.is_alphanumeric() || "_'.@{},|-".contains(c)) {
                    return Err(err(&format!("bad state name `{s}`")));
                }
                Ok(s.to_string())
            };
            let arrow = |s: &str| -> Result<(String, String), AbvassError> {
                let (l, r) = s.split_once("->").ok_or_else(|| err("expected `->`"))?;
                Ok((ident(l)?, r.trim().to_string()))
            };
            match kw {
                "state" => {
                    a.add_state(&ident(rest)?);
                }
                "leaf" => {
                    let q = a.add_state(&ident(rest)?);
                    if !a.leaves.contains(&q) {
                        a.leaves.push(q);
                    }
                }
                "unary" => {
                    let (q, r) = arrow(rest)?;
                    let (t, u) = r.split_once(':').ok_or_else(|| err("expected `:`"))?;
                    let u = parse_update(u, d).map_err(|m| err(&m))?;
                    let (q, t) = (a.add_state(&q), a.add_state(&ident(t)?));
                    a.unary.push((q, u, t));
                }
                "split" | "fork" => {
                    let (q, r) = arrow(rest)?;
                    let sep = if kw == "split" { '+' } else { '&' };
                    let (x, y) = r.split_once(sep).ok_or_else(|| err(&format!("expected `{sep}`")))?;
                    let (q, x, y) = (a.add_state(&q), a.add_state(&ident(x)?), a.add_state(&ident(y)?));
                    if kw == "split" {
                        a.split.push((q, x, y));
                    } else {
                        a.fork.push((q, x, y));
                    }
                }
                "zero" => {
                    let (q, r) = arrow(rest)?;
                    let (q, t) = (a.add_state(&q), a.add_state(&ident(&r)?));
                    a.zero.push((q, t));
                }
                _ => return Err(err(&format!("unknown keyword `{kw}`"))),
            }
        }
        if dim.is_none() {
            return Err(AbvassError::Parse { line: 0, msg: "missing `dim`".into() });
        }
        Ok(a)
    }

    pub fn to_text(&self) -> String {
        let n = |q: usize| &self.names[q];
        let mut out = format!("dim {}\n", self.dim);
        for q in self.states() {
            out += &format!("state {}\n", n(q));
        }
        for &q in &self.leaves {
            out += &format!("leaf {}\n", n(q));
        }
        for (q, u, t) in &self.unary {
            out += &format!("unary {} -> {} : {}\n", n(*q), n(*t), show_update(u));
        }
        for (q, x, y) in &self.split {
            out += &format!("split {} -> {} + {}\n", n(*q), n(*x), n(*y));
        }
        for (q, x, y) in &self.fork {
            out += &format!("fork {} -> {} & {}\n", n(*q), n(*x), n(*y));
        }
        for (q, t) in &self.zero {
            out += &format!("zero {} -> {}\n", n(*q), n(*t));
        }
        out
    }

    /// Parses `name` or `name:[1,0]` style configurations.
    pub fn parse_config(&self, text: &str) -> Result<Config<usize>, AbvassError> {
        let bad = |m: &str| AbvassError::InvalidConfig(m.to_string());
        let (name, vec) = match text.split_once(':') {
            Some((n, v)) => (n.trim(), Some(v.trim())),
            None => (text.trim(), None),
        };
        let q = self.state_id(name)?;
        let vector = match vec {
            None => vec![0; self.dim],
            Some(v) => {
                let v = v.trim_start_matches('[').trim_end_matches(']');
                let xs = v
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| s.trim().parse::<u32>().map_err(|_| bad("bad counter")))
                    .collect::<Result<Vec<_>, _>>()?;
                if xs.len() != self.dim {
                    return Err(bad("wrong dimension"));
                }
                xs
            }
        };
        Ok(Config::new(q, vector))
    }
}

fn parse_update(text: &str, d: usize) -> Result<Vec<i64>, String> {
    let mut u = vec![0i64; d];
    let t = text.trim();
    if t.is_empty() || t == "0" {
        return Ok(u);
    }
    for term in t.split(',') {
        let term: String = term.chars().filter(|c| !c.is_whitespace()).collect();
        let (sign, body) = match term.strip_prefix('-') {
            Some(b) => (-1, b),
            None => (1, term.strip_prefix('+').unwrap_or(&term)),
        };
        let (coeff, e) = match body.split_once('*') {
            Some((c, e)) => (c.parse::<i64>().map_err(|_| format!("bad coefficient in `{term}`"))?, e),
            None => (1, body),
        };
        let k = e
            .strip_prefix("e_")
            .or_else(|| e.strip_prefix('e'))
            .and_then(|k| k.parse::<usize>().ok())
            .filter(|&k| k >= 1 && k <= d)
            .ok_or_else(|| format!("bad unit vector in `{term}`"))?;
        u[k - 1] += sign * coeff;
    }
    Ok(u)
}

fn show_update(u: &[i64]) -> String {
    let terms: Vec<String> = u
        .iter()
        .enumerate()
        .filter(|(_, &x)| x != 0)
        .map(|(i, &x)| match x {
            1 => format!("+e{}", i + 1),
            -1 => format!("-e{}", i + 1),
            x => format!("{:+}*e{}", x, i + 1),
        })
        .collect();
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join(", ")
    }
}

impl Machine for Abvass {
    type State = usize;

    fn dim(&self) -> usize {
        self.dim
    }

    fn rules(&self, q: &usize) -> Vec<MRule<usize>> {
        let q = *q;
        let mut out = Vec::new();
        out.extend(self.unary.iter().filter(|r| r.0 == q).map(|(_, u, t)| MRule::Unary(u.clone(), *t)));
        out.extend(self.zero.iter().filter(|r| r.0 == q).map(|&(_, t)| MRule::Zero(t)));
        out.extend(self.fork.iter().filter(|r| r.0 == q).map(|&(_, x, y)| MRule::Fork(x, y)));
        out.extend(self.split.iter().filter(|r| r.0 == q).map(|&(_, x, y)| MRule::Split(x, y)));
        out
    }

    fn state_name(&self, q: &usize) -> String {
        self.names.get(*q).cloned().unwrap_or_else(|| format!("#{q}"))
    }
}

impl fmt::Display for Abvass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

fn add_update(v: &[u32], u: &[i64]) -> Option<Vec<u32>> {
    v.iter().zip(u).map(|(&x, &d)| u32::try_from(x as i64 + d).ok()).collect()
}

fn is_zero(v: &[u32]) -> bool {
    v.iter().all(|&x| x == 0)
}

fn leq(a: &[u32], b: &[u32]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

/// All `(v1, v2)` with `v1 + v2 = v`, `v1` in lexicographic order.
pub fn decompositions(v: &[u32]) -> Vec<(Vec<u32>, Vec<u32>)> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; v.len()];
    loop {
        out.push((cur.clone(), v.iter().zip(&cur).map(|(a, b)| a - b).collect()));
        let mut i = v.len();
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < v[i] {
                cur[i] += 1;
                break;
            }
            cur[i] = 0;
        }
    }
}

fn check_config<M: Machine>(m: &M, c: &Config<M::State>) -> Result<(), AbvassError> {
    if c.vector.len() != m.dim() {
        return Err(AbvassError::InvalidConfig(format!(
            "vector has {} coordinates, machine has {}",
            c.vector.len(),
            m.dim()
        )));
    }
    Ok(())
}

/// One-step expansions of `c`.
pub fn expand<M: Machine>(
    m: &M,
    c: &Config<M::State>,
    lossy: bool,
) -> Result<Vec<(TreeRule, Vec<Config<M::State>>)>, AbvassError> {
    check_config(m, c)?;
    let v = &c.vector;
    let mut out = Vec::new();
    for r in m.rules(&c.state) {
        match r {
            MRule::Unary(u, t) => {
                if let Some(w) = add_update(v, &u) {
                    out.push((TreeRule::Unary(u), vec![Config::new(t, w)]));
                }
            }
            MRule::Zero(t) => {
                if is_zero(v) {
                    out.push((TreeRule::Zero, vec![Config::new(t, v.clone())]));
                }
            }
            MRule::Fork(x, y) => {
                out.push((TreeRule::Fork, vec![Config::new(x, v.clone()), Config::new(y, v.clone())]))
            }
            MRule::Split(x, y) => {
                for (a, b) in decompositions(v) {
                    out.push((TreeRule::Split, vec![Config::new(x.clone(), a), Config::new(y.clone(), b)]));
                }
            }
        }
    }
    if lossy {
        for i in 0..v.len() {
            if v[i] > 0 {
                let mut w = v.clone();
                w[i] -= 1;
                out.push((TreeRule::Loss(i), vec![Config::new(c.state.clone(), w)]));
            }
        }
    }
    Ok(out)
}

/// Checks every node of `t` against the deduction rules.
pub fn check_tree<M: Machine>(
    m: &M,
    leaves: &[M::State],
    t: &DeductionTree<M::State>,
    lossy: bool,
) -> Result<(), AbvassError> {
    let mut path = Vec::new();
    check_node(m, leaves, t, lossy, &mut path)
        .map_err(|reason| AbvassError::Violation { path: path.clone(), reason })
}

fn check_node<M: Machine>(
    m: &M,
    leaves: &[M::State],
    t: &DeductionTree<M::State>,
    lossy: bool,
    path: &mut Vec<usize>,
) -> Result<(), String> {
    let d = m.dim();
    if t.vector.len() != d {
        return Err("wrong dimension".into());
    }
    let arity = match t.rule {
        TreeRule::Leaf => 0,
        TreeRule::Split | TreeRule::Fork => 2,
        _ => 1,
    };
    if t.children.len() != arity {
        return Err(format!("`{}` node with {} children", t.rule.name(), t.children.len()));
    }
    if t.children.iter().any(|c| c.vector.len() != d) {
        return Err("child has wrong dimension".into());
    }
    let rules = || m.rules(&t.state);
    let ch = |i: usize| &t.children[i];
    match &t.rule {
        TreeRule::Leaf => {
            if !leaves.contains(&t.state) {
                return Err(format!("leaf at non-leaf state {}", m.state_name(&t.state)));
            }
            if !is_zero(&t.vector) {
                return Err("leaf with nonzero vector".into());
            }
        }
        TreeRule::Loss(i) => {
            if !lossy {
                return Err("loss under ordinary semantics".into());
            }
            if *i >= d || t.vector[*i] == 0 {
                return Err(format!("cannot lose coordinate {i}"));
            }
            let mut w = t.vector.clone();
            w[*i] -= 1;
            if ch(0).state != t.state || ch(0).vector != w {
                return Err("loss child mismatch".into());
            }
        }
        TreeRule::Unary(u) => {
            if !rules().contains(&MRule::Unary(u.clone(), ch(0).state.clone())) {
                return Err("no such unary rule".into());
            }
            match add_update(&t.vector, u) {
                Some(w) if w == ch(0).vector => {}
                Some(_) => return Err("unary child vector mismatch".into()),
                None => return Err("negative coordinate".into()),
            }
        }
        TreeRule::Zero => {
            if !rules().contains(&MRule::Zero(ch(0).state.clone())) {
                return Err("no such zero test".into());
            }
            if !is_zero(&t.vector) || !is_zero(&ch(0).vector) {
                return Err("zero test on nonzero vector".into());
            }
        }
        TreeRule::Fork => {
            if !rules().contains(&MRule::Fork(ch(0).state.clone(), ch(1).state.clone())) {
                return Err("no such fork rule".into());
            }
            if ch(0).vector != t.vector || ch(1).vector != t.vector {
                return Err("fork child vector mismatch".into());
            }
        }
        TreeRule::Split => {
            if !rules().contains(&MRule::Split(ch(0).state.clone(), ch(1).state.clone())) {
                return Err("no such split rule".into());
            }
            let sum: Option<Vec<u32>> =
                ch(0).vector.iter().zip(&ch(1).vector).map(|(a, b)| a.checked_add(*b)).collect();
            if sum.as_deref() != Some(&t.vector[..]) {
                return Err("split children do not sum to the parent".into());
            }
        }
    }
    for (i, c) in t.children.iter().enumerate() {
        path.push(i);
        check_node(m, leaves, c, lossy, path)?;
        path.pop();
    }
    Ok(())
}

/// Loss nodes only sit directly above leaves, losses or zero tests.
pub fn is_regular<S>(t: &DeductionTree<S>) -> bool {
    if let TreeRule::Loss(_) = t.rule {
        if !matches!(t.children[0].rule, TreeRule::Leaf | TreeRule::Loss(_) | TreeRule::Zero) {
            return false;
        }
    }
    t.children.iter().all(|c| is_regular(c))
}

/// Pushes losses down until the tree is regular.
pub fn normalize_regular<M: Machine>(
    m: &M,
    leaves: &[M::State],
    t: &DeductionTree<M::State>,
) -> Result<DeductionTree<M::State>, AbvassError> {
    check_tree(m, leaves, t, true)?;
    Ok(regularize(t))
}

fn regularize<S: Clone>(t: &DeductionTree<S>) -> DeductionTree<S> {
    let kids: Vec<_> = t.children.iter().map(|c| regularize(c)).collect();
    match t.rule {
        TreeRule::Loss(i) => push_loss(kids.into_iter().next().expect("loss has a child"), i),
        _ => DeductionTree {
            state: t.state.clone(),
            vector: t.vector.clone(),
            rule: t.rule.clone(),
            children: kids.into_iter().map(Arc::new).collect(),
        },
    }
}

// `c` is regular with root (q, v); the result is regular with root (q, v + e_i).
fn push_loss<S: Clone>(c: DeductionTree<S>, i: usize) -> DeductionTree<S> {
    let mut vector = c.vector.clone();
    vector[i] += 1;
    let lift = |x: &Arc<DeductionTree<S>>| Arc::new(push_loss((**x).clone(), i));
    let children = match c.rule {
        TreeRule::Leaf | TreeRule::Loss(_) | TreeRule::Zero => {
            return DeductionTree { state: c.state.clone(), vector, rule: TreeRule::Loss(i), children: vec![Arc::new(c)] }
        }
        TreeRule::Split => vec![c.children[0].clone(), lift(&c.children[1])],
        TreeRule::Fork => vec![lift(&c.children[0]), lift(&c.children[1])],
        TreeRule::Unary(_) => vec![lift(&c.children[0])],
    };
    DeductionTree { state: c.state, vector, rule: c.rule, children }
}

/// Loss chain from `(q, v)` down to `(q, w)` on top of `base`.
pub fn with_losses<S: Clone>(base: Arc<DeductionTree<S>>, v: &[u32]) -> Arc<DeductionTree<S>> {
    let mut t = base;
    let mut cur = t.vector.clone();
    for i in (0..v.len()).rev() {
        while cur[i] < v[i] {
            cur[i] += 1;
            t = Arc::new(DeductionTree { state: t.state.clone(), vector: cur.clone(), rule: TreeRule::Loss(i), children: vec![t] });
        }
    }
    t
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReachBudget {
    pub counter_cap: u32,
    pub max_depth: u32,
    pub max_nodes: u64,
}

impl Default for ReachBudget {
    fn default() -> Self {
        ReachBudget { counter_cap: 8, max_depth: 64, max_nodes: 200_000 }
    }
}

impl ReachBudget {
    pub fn validate(&self) -> Result<(), AbvassError> {
        if self.max_depth == 0 || self.max_nodes == 0 {
            return Err(AbvassError::Budget("depth and node budgets must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Reach<S> {
    Found(Arc<DeductionTree<S>>),
    Refuted,
    Unknown,
}

impl<S> Reach<S> {
    pub fn label(&self) -> &'static str {
        match self {
            Reach::Found(_) => "Found",
            Reach::Refuted => "Refuted",
            Reach::Unknown => "Unknown",
        }
    }

    pub fn decided(&self) -> Option<bool> {
        match self {
            Reach::Found(_) => Some(true),
            Reach::Refuted => Some(false),
            Reach::Unknown => None,
        }
    }

    pub fn tree(&self) -> Option<&Arc<DeductionTree<S>>> {
        match self {
            Reach::Found(t) => Some(t),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ReachStats {
    pub nodes: u64,
}

#[derive(Clone, Copy, Default)]
struct Fail {
    truncated: bool,
    pruned: bool,
}

impl Fail {
    fn join(&mut self, o: Fail) {
        self.truncated |= o.truncated;
        self.pruned |= o.pruned;
    }
}

type Tree<S> = Arc<DeductionTree<S>>;

struct Search<'a, M: Machine> {
    m: &'a M,
    leaves: HashSet<M::State>,
    lossy: bool,
    b: ReachBudget,
    nodes: u64,
    aborted: bool,
    rules: HashMap<M::State, Arc<Vec<MRule<M::State>>>>,
    wins: HashMap<M::State, Vec<(Vec<u32>, Tree<M::State>)>>,
    dead: HashMap<M::State, Vec<Vec<u32>>>,
    shallow: HashMap<(M::State, Vec<u32>), u32>,
    path: Vec<(M::State, Vec<u32>)>,
}

impl<'a, M: Machine> Search<'a, M> {
    fn rules_of(&mut self, q: &M::State) -> Arc<Vec<MRule<M::State>>> {
        if let Some(r) = self.rules.get(q) {
            return r.clone();
        }
        let r = Arc::new(self.m.rules(q));
        self.rules.insert(q.clone(), r.clone());
        r
    }

    fn node(&self, q: &M::State, v: &[u32], rule: TreeRule, children: Vec<Tree<M::State>>) -> Tree<M::State> {
        Arc::new(DeductionTree { state: q.clone(), vector: v.to_vec(), rule, children })
    }

    // A child no larger than an ancestor in the same state can replace that
    // ancestor (up to losses), so minimal trees never contain one.
    fn pruned(&self, q: &M::State, v: &[u32]) -> bool {
        self.path.iter().any(|(p, w)| p == q && if self.lossy { leq(v, w) } else { v == &w[..] })
    }

    fn go(&mut self, q: &M::State, v: &[u32], depth: u32) -> Result<Tree<M::State>, Fail> {
        let trunc = Fail { truncated: true, pruned: false };
        if self.aborted {
            return Err(trunc);
        }
        if let Some(ws) = self.wins.get(q) {
            let hit = ws.iter().find(|(w, _)| if self.lossy { leq(w, v) } else { w == v });
            if let Some((_, t)) = hit {
                return Ok(with_losses(t.clone(), v));
            }
        }
        if let Some(ds) = self.dead.get(q) {
            if ds.iter().any(|w| if self.lossy { leq(v, w) } else { w == v }) {
                return Err(Fail::default());
            }
        }
        if self.shallow.get(&(q.clone(), v.to_vec())).is_some_and(|&d| d >= depth) {
            return Err(trunc);
        }
        self.nodes += 1;
        if self.nodes > self.b.max_nodes {
            self.aborted = true;
            return Err(trunc);
        }
        let dim = v.len();
        if self.leaves.contains(q) && (is_zero(v) || self.lossy) {
            let t = with_losses(Arc::new(DeductionTree::leaf(q.clone(), dim)), v);
            self.remember(q, v, &t);
            return Ok(t);
        }
        if depth == 0 {
            return Err(trunc);
        }
        let mut fail = Fail::default();
        self.path.push((q.clone(), v.to_vec()));
        let found = self.try_rules(q, v, depth, &mut fail);
        self.path.pop();
        if let Some(t) = found {
            self.remember(q, v, &t);
            return Ok(t);
        }
        if !fail.pruned {
            if fail.truncated {
                let e = self.shallow.entry((q.clone(), v.to_vec())).or_insert(0);
                *e = (*e).max(depth);
            } else {
                self.dead.entry(q.clone()).or_default().push(v.to_vec());
            }
        }
        Err(fail)
    }

    fn remember(&mut self, q: &M::State, v: &[u32], t: &Tree<M::State>) {
        self.wins.entry(q.clone()).or_default().push((v.to_vec(), t.clone()));
    }

    fn child(&mut self, q: &M::State, v: &[u32], depth: u32, fail: &mut Fail) -> Option<Tree<M::State>> {
        if self.pruned(q, v) {
            fail.pruned = true;
            return None;
        }
        self.go(q, v, depth - 1).map_err(|f| fail.join(f)).ok()
    }

    fn try_rules(&mut self, q: &M::State, v: &[u32], depth: u32, fail: &mut Fail) -> Option<Tree<M::State>> {
        let rules = self.rules_of(q);
        let zeros = vec![0u32; v.len()];
        for r in rules.iter() {
            if let MRule::Zero(t) = r {
                if !is_zero(v) && !self.lossy {
                    continue;
                }
                if let Some(c) = self.child(t, &zeros, depth, fail) {
                    return Some(with_losses(self.node(q, &zeros, TreeRule::Zero, vec![c]), v));
                }
            }
        }
        for r in rules.iter() {
            if let MRule::Unary(u, t) = r {
                let Some(w) = add_update(v, u) else { continue };
                if w.iter().zip(u).any(|(&x, &d)| d > 0 && x > self.b.counter_cap) {
                    fail.truncated = true;
                    continue;
                }
                if let Some(c) = self.child(t, &w, depth, fail) {
                    return Some(self.node(q, v, TreeRule::Unary(u.clone()), vec![c]));
                }
            }
        }
        for r in rules.iter() {
            if let MRule::Fork(x, y) = r {
                let Some(a) = self.child(x, v, depth, fail) else { continue };
                let Some(b) = self.child(y, v, depth, fail) else { continue };
                return Some(self.node(q, v, TreeRule::Fork, vec![a, b]));
            }
        }
        for r in rules.iter() {
            if let MRule::Split(x, y) = r {
                for (v1, v2) in decompositions(v) {
                    let Some(a) = self.child(x, &v1, depth, fail) else { continue };
                    let Some(b) = self.child(y, &v2, depth, fail) else { continue };
                    return Some(self.node(q, v, TreeRule::Split, vec![a, b]));
                }
            }
        }
        None
    }
}

/// Looks for a leaf-covering deduction tree rooted at `root`.
///
/// Under lossy semantics losses are only placed in chains directly above
/// leaves and zero tests, which suffices by regularity. `Refuted` is only
/// returned when no budget limit was hit.
pub fn search_deduction<M: Machine>(
    m: &M,
    leaves: &[M::State],
    root: &Config<M::State>,
    lossy: bool,
    b: ReachBudget,
) -> Result<(Reach<M::State>, ReachStats), AbvassError> {
    check_config(m, root)?;
    b.validate()?;
    let mut s = Search {
        m,
        leaves: leaves.iter().cloned().collect(),
        lossy,
        b,
        nodes: 0,
        aborted: false,
        rules: HashMap::new(),
        wins: HashMap::new(),
        dead: HashMap::new(),
        shallow: HashMap::new(),
        path: Vec::new(),
    };
    let r = match s.go(&root.state, &root.vector, b.max_depth) {
        Ok(t) => Reach::Found(t),
        Err(f) if !f.truncated => Reach::Refuted,
        Err(_) => Reach::Unknown,
    };
    Ok((r, ReachStats { nodes: s.nodes }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn machine(text: &str) -> Abvass {
        Abvass::parse(text).unwrap()
    }

    fn search(a: &Abvass, root: &str, lossy: bool) -> Reach<usize> {
        let c = a.parse_config(root).unwrap();
        search_deduction(a, &a.leaves, &c, lossy, ReachBudget::default()).unwrap().0
    }

    #[test]
    fn text_round_trip() {
        let a = machine("dim 2\n# comment\nleaf l\nunary q -> l : +e1, -2*e2\nsplit q -> l + l\nfork q -> q & l\nzero q -> l\n");
        assert_eq!(a.unary[0].1, vec![1, -2]);
        assert_eq!(Abvass::parse(&a.to_text()).unwrap(), a);
        assert!(!a.is_ordinary());
        assert!(!a.is_bvass());
        assert!(Abvass::parse("state q").is_err());
        assert!(Abvass::parse("dim 1\nunary q -> r : +e2").is_err());
    }

    #[test]
    fn expansion() {
        let a = machine("dim 2\nunary q -> r : +e1\nzero q -> r\nsplit q -> r + r");
        let c = a.parse_config("q:[1,0]").unwrap();
        let steps = expand(&a, &c, false).unwrap();
        assert!(steps.iter().all(|(r, _)| *r != TreeRule::Zero));
        let splits: Vec<_> = steps.iter().filter(|(r, _)| *r == TreeRule::Split).map(|(_, cs)| cs[0].vector.clone()).collect();
        assert_eq!(splits, vec![vec![0, 0], vec![1, 0]]);
        let lossy = expand(&a, &c, true).unwrap();
        assert!(lossy.iter().any(|(r, cs)| *r == TreeRule::Loss(0) && cs[0].vector == vec![0, 0]));
        let z = expand(&a, &a.parse_config("q").unwrap(), false).unwrap();
        assert!(z.iter().any(|(r, _)| *r == TreeRule::Zero));
        assert!(expand(&a, &Config::new(0, vec![0]), false).is_err());
    }

    #[test]
    fn small_searches() {
        let a = machine("dim 1\nleaf l");
        assert!(matches!(search(&a, "l", false), Reach::Found(t) if t.size() == 1));
        let Reach::Found(t) = search(&a, "l:[1]", true) else { panic!() };
        assert_eq!(t.rule, TreeRule::Loss(0));
        assert_eq!(search(&a, "l:[1]", false), Reach::Refuted);

        let mut b = machine("dim 1\nleaf q1\nunary q0 -> q1 : +e1");
        assert_eq!(search(&b, "q0", false), Reach::Refuted);
        let q1 = b.state_id("q1").unwrap();
        b.unary.push((q1, vec![-1], q1));
        let Reach::Found(t) = search(&b, "q0", false) else { panic!() };
        check_tree(&b, &b.leaves, &t, false).unwrap();
    }

    #[test]
    fn checker_rejects() {
        let a = machine("dim 1\nleaf l\nunary q -> l : -e1");
        let bad = DeductionTree {
            state: 0,
            vector: vec![1],
            rule: TreeRule::Loss(0),
            children: vec![Arc::new(DeductionTree::leaf(0, 1))],
        };
        assert!(check_tree(&a, &a.leaves, &bad, false).is_err());
        assert!(check_tree(&a, &a.leaves, &bad, true).is_ok());
        let neg = DeductionTree {
            state: 1,
            vector: vec![0],
            rule: TreeRule::Unary(vec![-1]),
            children: vec![Arc::new(DeductionTree { state: 0, vector: vec![0], rule: TreeRule::Leaf, children: vec![] })],
        };
        assert!(check_tree(&a, &a.leaves, &neg, true).is_err());
    }

    #[test]
    fn loss_past_split() {
        let a = machine("dim 1\nleaf l\nsplit q -> l + l");
        let split = DeductionTree {
            state: 1,
            vector: vec![0],
            rule: TreeRule::Split,
            children: vec![Arc::new(DeductionTree::leaf(0, 1)), Arc::new(DeductionTree::leaf(0, 1))],
        };
        let t = DeductionTree { state: 1, vector: vec![1], rule: TreeRule::Loss(0), children: vec![Arc::new(split)] };
        assert!(!is_regular(&t));
        let n = normalize_regular(&a, &a.leaves, &t).unwrap();
        assert!(is_regular(&n));
        check_tree(&a, &a.leaves, &n, true).unwrap();
        assert_eq!(n.rule, TreeRule::Split);
        assert_eq!(n.children[1].rule, TreeRule::Loss(0));
        assert_eq!(n.children[0].vector, vec![0]);
        assert_eq!(normalize_regular(&a, &a.leaves, &n).unwrap(), n);
    }

    #[test]
    fn json_round_trip() {
        let a = machine("dim 1\nleaf l\nunary q -> l : -e1\nfork p -> q & q");
        let Reach::Found(t) = search(&a, "p:[1]", false) else { panic!() };
        let back = DeductionTree::from_json(&a, &t.to_json(&a)).unwrap();
        assert_eq!(&back, &*t);
    }

    #[test]
    fn cap_gives_unknown() {
        let a = machine("dim 1\nleaf l\nunary q -> q : +e1");
        assert_eq!(search(&a, "q", false), Reach::Unknown);
    }
}
