//! Encodings of IEZW and ILZW' provability into lossy reachability, and of
//! ordinary BVASS reachability into LLW provability.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::abvass::{
    check_tree, normalize_regular, search_deduction, Abvass, AbvassError, Config, DeductionTree, MRule, Machine, Reach,
    ReachBudget, ReachStats, TreeRule,
};
use crate::calculi::{check_proof, reshape, CalcError, ProofTree, Rule, System};
use crate::formulas::{BinOp, Const, Formula, Polarity, Sequent, UnOp};

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error(transparent)]
    Calc(#[from] CalcError),
    #[error(transparent)]
    Machine(#[from] AbvassError),
    #[error("formula `{0}` is not in the subformula closure")]
    OutsideClosure(String),
    #[error("subformula closure too large ({0} formulas, at most 64)")]
    TooLarge(usize),
    #[error("not an encoded configuration: {0}")]
    NotEncoded(String),
    #[error("machine is not an ordinary BVASS")]
    NotOrdinaryBvass,
    #[error("name clash between a state and a counter variable: `{0}`")]
    NameClash(String),
    #[error("decompilation failed: {0}")]
    Decompile(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    /// IEZW, with the functorial promotion rules.
    E,
    /// ILZW', with right weakening, dereliction and promotion rules.
    IPrime,
}

impl Variant {
    pub fn system(self) -> System {
        match self {
            Variant::E => System::iezw(),
            Variant::IPrime => System::ilzw_prime(),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::E => "E",
            Variant::IPrime => "I'",
        })
    }
}

/// Bitset over closure indices.
pub type Set = u64;

fn members(s: Set) -> impl Iterator<Item = usize> {
    (0..64).filter(move |i| s >> i & 1 == 1)
}

/// Every `(q1, q2)` with `q1 | q2 == q`.
fn covers(q: Set) -> Vec<(Set, Set)> {
    let mut out = Vec::new();
    let mut q1 = q;
    loop {
        let rest = q & !q1;
        let mut s = q1;
        loop {
            out.push((q1, rest | s));
            if s == 0 {
                break;
            }
            s = (s - 1) & q1;
        }
        if q1 == 0 {
            break;
        }
        q1 = (q1 - 1) & q;
    }
    out.sort();
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EState {
    /// A subset of `S_!` and a stoup, `None` standing for the bullet.
    Main { q: Set, x: Option<usize> },
    Leaf,
    TensL { q: Set, x: Option<usize>, f: usize },
    ImpL { q1: Set, q2: Set, x: Option<usize>, f: usize },
    ImpL2 { q: Set, x: Option<usize>, f: usize },
    WithL { q: Set, x: Option<usize>, f: usize },
    PlusL { q: Set, x: Option<usize>, f: usize },
    Plus1 { q: Set, x: Option<usize>, f: usize },
    Plus2 { q: Set, x: Option<usize>, f: usize },
    ZeroL,
    TopR,
    Func { q: Set, f: usize },
}

impl EState {
    pub fn is_main(&self) -> bool {
        matches!(self, EState::Main { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Shape {
    Atom,
    Const(Const),
    Bin(BinOp, usize, usize),
    Bang(usize),
}

/// `A^E_F` or `A^{I'}_F`, with states generated on demand.
#[derive(Clone, Debug)]
pub struct EncodedMachine {
    pub variant: Variant,
    /// `F_1 .. F_d`.
    pub formulas: Vec<Formula>,
    shape: Vec<Shape>,
    bangs: Set,
}

/// Encodes the closure of `f`.
pub fn encode_formula(f: &Formula, variant: Variant) -> Result<EncodedMachine, EncodeError> {
    encode_formulas(std::slice::from_ref(f), variant)
}

/// Encodes the union of the subformula closures of `fs`.
pub fn encode_formulas(fs: &[Formula], variant: Variant) -> Result<EncodedMachine, EncodeError> {
    let sys = variant.system();
    let mut set = BTreeSet::new();
    for f in fs {
        sys.check_formula(f)?;
        f.visit(&mut |g| {
            set.insert(g.clone());
        });
    }
    let formulas: Vec<Formula> = set.into_iter().collect();
    if formulas.len() > 64 {
        return Err(EncodeError::TooLarge(formulas.len()));
    }
    let idx = |g: &Formula| formulas.binary_search(g).expect("closed under subformulas");
    let shape: Vec<Shape> = formulas
        .iter()
        .map(|g| match g {
            Formula::Var(_) | Formula::DualVar(_) => Shape::Atom,
            Formula::Const(c) => Shape::Const(*c),
            Formula::Bin(op, a, b) => Shape::Bin(*op, idx(a), idx(b)),
            Formula::Un(UnOp::Bang, a) => Shape::Bang(idx(a)),
            Formula::Un(_, _) => unreachable!("checked by the language"),
        })
        .collect();
    let bangs = shape.iter().enumerate().filter(|(_, s)| matches!(s, Shape::Bang(_))).fold(0, |m, (i, _)| m | 1 << i);
    Ok(EncodedMachine { variant, formulas, shape, bangs })
}

impl EncodedMachine {
    pub fn index_of(&self, f: &Formula) -> Result<usize, EncodeError> {
        self.formulas.binary_search(f).map_err(|_| EncodeError::OutsideClosure(f.to_string()))
    }

    pub fn is_bang_index(&self, i: usize) -> bool {
        self.bangs >> i & 1 == 1
    }

    fn unit(&self, i: usize, k: i64) -> Vec<i64> {
        let mut u = vec![0; self.formulas.len()];
        u[i] += k;
        u
    }

    fn const_index(&self, c: Const) -> Option<usize> {
        self.shape.iter().position(|s| *s == Shape::Const(c))
    }

    fn body(&self, i: usize) -> usize {
        match self.shape[i] {
            Shape::Bang(a) => a,
            _ => unreachable!("not a !-formula"),
        }
    }

    /// `σ(Θ), Π†, v_Γ`, where `Θ = ζ(ante)` and `Γ = ξ(ante)`.
    pub fn sequent_to_config(&self, s: &Sequent) -> Result<Config<EState>, EncodeError> {
        if s.is_classical() {
            return Err(EncodeError::NotEncoded("classical sequent".into()));
        }
        let mut q = 0;
        let mut v = vec![0u32; self.formulas.len()];
        for a in s.antecedent() {
            let i = self.index_of(a)?;
            if self.is_bang_index(i) {
                q |= 1 << i;
            } else {
                v[i] += 1;
            }
        }
        let x = s.stoup().map(|c| self.index_of(c)).transpose()?;
        Ok(Config::new(EState::Main { q, x }, v))
    }

    /// `Θ, Γ ⊢ Π` read off a main-state configuration. `q` contributes one
    /// copy of each member.
    pub fn config_to_sequent(&self, c: &Config<EState>) -> Result<Sequent, EncodeError> {
        let EState::Main { q, x } = c.state else {
            return Err(EncodeError::NotEncoded(self.state_name(&c.state)));
        };
        let mut ante: Vec<Formula> = members(q).map(|i| self.formulas[i].clone()).collect();
        ante.extend(self.tokens(&c.vector));
        Ok(Sequent::intuitionistic(ante, x.map(|i| self.formulas[i].clone())))
    }

    fn tokens(&self, v: &[u32]) -> Vec<Formula> {
        v.iter().enumerate().flat_map(|(i, &n)| std::iter::repeat_n(self.formulas[i].clone(), n as usize)).collect()
    }

    fn set_name(&self, q: Set) -> String {
        format!("{{{}}}", members(q).map(|i| i.to_string()).collect::<Vec<_>>().join(","))
    }

    fn x_name(x: Option<usize>) -> String {
        x.map_or("dot".into(), |i| format!("f{i}"))
    }

    /// Lossy search at the configuration of `s`.
    pub fn reach(&self, s: &Sequent, b: ReachBudget) -> Result<(Reach<EState>, ReachStats), EncodeError> {
        let c = self.sequent_to_config(s)?;
        Ok(search_deduction(self, &[EState::Leaf], &c, true, b)?)
    }

    /// States reachable from `roots`, as an explicit machine.
    pub fn explicit(&self, roots: &[EState]) -> (Abvass, Vec<EState>) {
        let mut ids: HashMap<EState, usize> = HashMap::new();
        let mut order = Vec::new();
        let mut queue = VecDeque::new();
        let mut a = Abvass::new(self.formulas.len());
        let mut visit = |s: &EState, a: &mut Abvass, order: &mut Vec<EState>, queue: &mut VecDeque<EState>| -> usize {
            if let Some(&i) = ids.get(s) {
                return i;
            }
            let i = a.add_state(&self.state_name(s));
            ids.insert(s.clone(), i);
            order.push(s.clone());
            queue.push_back(s.clone());
            i
        };
        let leaf = visit(&EState::Leaf, &mut a, &mut order, &mut queue);
        a.leaves.push(leaf);
        for r in roots {
            visit(r, &mut a, &mut order, &mut queue);
        }
        while let Some(s) = queue.pop_front() {
            let from = visit(&s, &mut a, &mut order, &mut queue);
            for r in self.rules(&s) {
                match r {
                    MRule::Unary(u, t) => {
                        let t = visit(&t, &mut a, &mut order, &mut queue);
                        a.unary.push((from, u, t));
                    }
                    MRule::Split(x, y) => {
                        let (x, y) = (visit(&x, &mut a, &mut order, &mut queue), visit(&y, &mut a, &mut order, &mut queue));
                        a.split.push((from, x, y));
                    }
                    MRule::Fork(x, y) => {
                        let (x, y) = (visit(&x, &mut a, &mut order, &mut queue), visit(&y, &mut a, &mut order, &mut queue));
                        a.fork.push((from, x, y));
                    }
                    MRule::Zero(t) => {
                        let t = visit(&t, &mut a, &mut order, &mut queue);
                        a.zero.push((from, t));
                    }
                }
            }
        }
        (a, order)
    }

    /// State names mapped to what they stand for.
    pub fn legend(&self, states: &[EState]) -> Value {
        let show = |i: usize| self.formulas[i].to_string();
        let subset = |q: Set| members(q).map(show).collect::<Vec<_>>();
        let stoup = |x: Option<usize>| x.map_or("•".to_string(), show);
        let mut map = Map::new();
        for s in states {
            let v = match s {
                EState::Main { q, x } => json!({ "subset": subset(*q), "stoup": stoup(*x) }),
                EState::Leaf => json!({ "kind": "leaf" }),
                EState::ZeroL => json!({ "kind": "zeroL" }),
                EState::TopR => json!({ "kind": "topR" }),
                EState::Func { q, f } => json!({ "kind": "func", "subset": subset(*q), "formula": show(*f) }),
                EState::ImpL { q1, q2, x, f } => json!({
                    "kind": "impL", "left": subset(*q1), "right": subset(*q2), "stoup": stoup(*x), "formula": show(*f)
                }),
                EState::TensL { q, x, f }
                | EState::ImpL2 { q, x, f }
                | EState::WithL { q, x, f }
                | EState::PlusL { q, x, f }
                | EState::Plus1 { q, x, f }
                | EState::Plus2 { q, x, f } => json!({
                    "kind": self.state_name(s).split('@').next().unwrap_or_default(),
                    "subset": subset(*q), "stoup": stoup(*x), "formula": show(*f)
                }),
            };
            map.insert(self.state_name(s), v);
        }
        json!({
            "variant": self.variant.to_string(),
            "formulas": self.formulas.iter().map(|f| f.to_string()).collect::<Vec<_>>(),
            "states": map,
        })
    }
}

impl Machine for EncodedMachine {
    type State = EState;

    fn dim(&self) -> usize {
        self.formulas.len()
    }

    fn state_name(&self, s: &EState) -> String {
        let n = |tag: &str, q: Set, x: Option<usize>, f: usize| {
            format!("{tag}@{}.{}@f{f}", self.set_name(q), Self::x_name(x))
        };
        match *s {
            EState::Main { q, x } => format!("m{}.{}", self.set_name(q), Self::x_name(x)),
            EState::Leaf => "leaf".into(),
            EState::ZeroL => "zeroL".into(),
            EState::TopR => "topR".into(),
            EState::Func { q, f } => format!("func@{}@f{f}", self.set_name(q)),
            EState::ImpL { q1, q2, x, f } => {
                format!("impL@{}|{}.{}@f{f}", self.set_name(q1), self.set_name(q2), Self::x_name(x))
            }
            EState::TensL { q, x, f } => n("tensL", q, x, f),
            EState::ImpL2 { q, x, f } => n("impL2", q, x, f),
            EState::WithL { q, x, f } => n("withL", q, x, f),
            EState::PlusL { q, x, f } => n("plusL", q, x, f),
            EState::Plus1 { q, x, f } => n("plus1", q, x, f),
            EState::Plus2 { q, x, f } => n("plus2", q, x, f),
        }
    }

    fn rules(&self, s: &EState) -> Vec<MRule<EState>> {
        let d = self.formulas.len();
        let zero = || vec![0i64; d];
        let main = |q: Set, x: Option<usize>| EState::Main { q, x };
        let mut out = Vec::new();
        match *s {
            EState::Leaf => {}
            EState::Main { q, x } => {
                // axioms
                match x {
                    Some(i) if q == 0 && !self.is_bang_index(i) => out.push(MRule::Unary(self.unit(i, -1), EState::Leaf)),
                    Some(i) if q == 1 << i => out.push(MRule::Unary(zero(), EState::Leaf)),
                    _ => {}
                }
                if q == 0 && x.is_some_and(|i| self.shape[i] == Shape::Const(Const::One)) {
                    out.push(MRule::Unary(zero(), EState::Leaf));
                }
                if let (0, None, Some(b)) = (q, x, self.const_index(Const::Bot)) {
                    out.push(MRule::Unary(self.unit(b, -1), EState::Leaf));
                }
                // left rules
                for (f, sh) in self.shape.iter().enumerate() {
                    match *sh {
                        Shape::Const(Const::One) => out.push(MRule::Unary(self.unit(f, -1), main(q, x))),
                        Shape::Const(Const::Zero) => out.push(MRule::Unary(self.unit(f, -1), EState::ZeroL)),
                        Shape::Bin(BinOp::Tensor, _, _) => out.push(MRule::Unary(self.unit(f, -1), EState::TensL { q, x, f })),
                        Shape::Bin(BinOp::With, _, _) => out.push(MRule::Unary(self.unit(f, -1), EState::WithL { q, x, f })),
                        Shape::Bin(BinOp::Plus, _, _) => out.push(MRule::Unary(self.unit(f, -1), EState::PlusL { q, x, f })),
                        Shape::Bin(BinOp::Lolli, _, _) => {
                            for (q1, q2) in covers(q) {
                                out.push(MRule::Unary(self.unit(f, -1), EState::ImpL { q1, q2, x, f }));
                            }
                        }
                        _ => {}
                    }
                }
                // right rules
                if let Some(i) = x {
                    match self.shape[i] {
                        Shape::Const(Const::Bot) => out.push(MRule::Unary(zero(), main(q, None))),
                        Shape::Const(Const::Top) => out.push(MRule::Unary(zero(), EState::TopR)),
                        Shape::Bin(BinOp::Lolli, a, b) => out.push(MRule::Unary(self.unit(a, 1), main(q, Some(b)))),
                        Shape::Bin(BinOp::Tensor, a, b) => {
                            for (q1, q2) in covers(q) {
                                out.push(MRule::Split(main(q1, Some(a)), main(q2, Some(b))));
                            }
                        }
                        Shape::Bin(BinOp::With, a, b) => out.push(MRule::Fork(main(q, Some(a)), main(q, Some(b)))),
                        Shape::Bin(BinOp::Plus, a, b) => {
                            out.push(MRule::Unary(zero(), main(q, Some(a))));
                            if b != a {
                                out.push(MRule::Unary(zero(), main(q, Some(b))));
                            }
                        }
                        Shape::Bang(a) => match self.variant {
                            Variant::E => out.push(MRule::Zero(EState::Func { q, f: i })),
                            Variant::IPrime => out.push(MRule::Zero(main(q, Some(a)))),
                        },
                        _ => {}
                    }
                    if self.variant == Variant::IPrime {
                        out.push(MRule::Unary(zero(), main(q, None)));
                    }
                }
                // exponentials
                for b in members(q) {
                    out.push(MRule::Unary(zero(), main(q & !(1 << b), x)));
                    if self.variant == Variant::IPrime {
                        let a = self.body(b);
                        out.push(MRule::Unary(self.unit(a, 1), main(q & !(1 << b), x)));
                        out.push(MRule::Unary(self.unit(a, 1), main(q, x)));
                    }
                }
                for b in members(self.bangs) {
                    out.push(MRule::Unary(self.unit(b, -1), main(q | 1 << b, x)));
                }
            }
            EState::TensL { q, x, f } => {
                let Shape::Bin(_, a, b) = self.shape[f] else { unreachable!() };
                let mut u = self.unit(a, 1);
                u[b] += 1;
                out.push(MRule::Unary(u, main(q, x)));
            }
            EState::ImpL { q1, q2, x, f } => {
                let Shape::Bin(_, a, _) = self.shape[f] else { unreachable!() };
                out.push(MRule::Split(main(q1, Some(a)), EState::ImpL2 { q: q2, x, f }));
            }
            EState::ImpL2 { q, x, f } => {
                let Shape::Bin(_, _, b) = self.shape[f] else { unreachable!() };
                out.push(MRule::Unary(self.unit(b, 1), main(q, x)));
            }
            EState::WithL { q, x, f } => {
                let Shape::Bin(_, a, b) = self.shape[f] else { unreachable!() };
                out.push(MRule::Unary(self.unit(a, 1), main(q, x)));
                if b != a {
                    out.push(MRule::Unary(self.unit(b, 1), main(q, x)));
                }
            }
            EState::PlusL { q, x, f } => out.push(MRule::Fork(EState::Plus1 { q, x, f }, EState::Plus2 { q, x, f })),
            EState::Plus1 { q, x, f } => {
                let Shape::Bin(_, a, _) = self.shape[f] else { unreachable!() };
                out.push(MRule::Unary(self.unit(a, 1), main(q, x)));
            }
            EState::Plus2 { q, x, f } => {
                let Shape::Bin(_, _, b) = self.shape[f] else { unreachable!() };
                out.push(MRule::Unary(self.unit(b, 1), main(q, x)));
            }
            EState::ZeroL | EState::TopR => {
                for i in 0..d {
                    if !self.is_bang_index(i) {
                        out.push(MRule::Unary(self.unit(i, -1), s.clone()));
                    }
                }
                out.push(MRule::Unary(zero(), EState::Leaf));
            }
            EState::Func { q, f } => {
                for b in members(q) {
                    out.push(MRule::Unary(self.unit(self.body(b), 1), s.clone()));
                }
                out.push(MRule::Unary(zero(), main(0, Some(self.body(f)))));
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// standard trees

type ETree = Arc<DeductionTree<EState>>;

/// Condition 1: main configurations holding a !-token end with store.
/// Condition 2: losses only at main states.
pub fn is_standard(em: &EncodedMachine, t: &DeductionTree<EState>) -> bool {
    let mut ok = true;
    t.each(&mut |n| {
        if let TreeRule::Loss(_) = n.rule {
            ok &= n.state.is_main();
        }
        if let EState::Main { q, x } = n.state {
            if members(em.bangs).any(|b| n.vector[b] > 0) {
                ok &= match (&n.rule, n.children.first().map(|c| &c.state)) {
                    (TreeRule::Unary(u), Some(&EState::Main { q: q2, x: x2 })) => {
                        x2 == x && members(em.bangs).any(|b| *u == em.unit(b, -1) && q2 == q | 1 << b)
                    }
                    _ => false,
                };
            }
        }
    });
    ok
}

/// Reads a lossy tree rooted at a main state as a proof of the
/// corresponding sequent.
pub fn decompile(em: &EncodedMachine, t: &DeductionTree<EState>) -> Result<Arc<ProofTree>, EncodeError> {
    let sys = em.variant.system();
    let reg = normalize_regular(em, &[EState::Leaf], t)?;
    Decompiler { em, sys: &sys }.main(&reg).map_err(EncodeError::Decompile)
}

struct Decompiler<'a> {
    em: &'a EncodedMachine,
    sys: &'a System,
}

type Dec = Result<Arc<ProofTree>, String>;

impl Decompiler<'_> {
    fn seq(&self, n: &DeductionTree<EState>) -> Result<Sequent, String> {
        self.em.config_to_sequent(&n.config()).map_err(|e| e.to_string())
    }

    fn f(&self, i: usize) -> Formula {
        self.em.formulas[i].clone()
    }

    fn node(&self, s: Sequent, rule: Rule, p: Formula, kids: Vec<Arc<ProofTree>>) -> Arc<ProofTree> {
        Arc::new(ProofTree::node(s, rule, p, kids))
    }

    fn fit(&self, t: Arc<ProofTree>, target: &Sequent) -> Dec {
        reshape(self.sys, t, target)
    }

    fn only_child<'t>(&self, n: &'t DeductionTree<EState>) -> Result<&'t DeductionTree<EState>, String> {
        n.children.first().map(|c| &**c).ok_or_else(|| "missing child".to_string())
    }

    fn main(&self, n: &DeductionTree<EState>) -> Dec {
        let em = self.em;
        let EState::Main { q, x } = n.state else {
            return Err(format!("expected a main state, found {}", em.state_name(&n.state)));
        };
        let target = self.seq(n)?;
        match &n.rule {
            TreeRule::Loss(_) => {
                let p = self.main(self.only_child(n)?)?;
                self.fit(p, &target)
            }
            TreeRule::Fork => {
                let Some(i) = x else { return Err("fork without stoup".into()) };
                let (a, b) = (self.main(&n.children[0])?, self.main(&n.children[1])?);
                Ok(self.node(target, Rule::WithR, self.f(i), vec![a, b]))
            }
            TreeRule::Split => {
                let Some(i) = x else { return Err("split without stoup".into()) };
                let (a, b) = (self.main(&n.children[0])?, self.main(&n.children[1])?);
                let mut ante = a.sequent.antecedent().to_vec();
                ante.extend(b.sequent.antecedent().iter().cloned());
                let c = Sequent::intuitionistic(ante, Some(self.f(i)));
                self.fit(self.node(c, Rule::TensR, self.f(i), vec![a, b]), &target)
            }
            TreeRule::Zero => {
                let c = self.only_child(n)?;
                let Some(i) = x else { return Err("zero test without stoup".into()) };
                match c.state {
                    EState::Main { .. } => {
                        let p = self.main(c)?;
                        Ok(self.node(target, Rule::BangP, self.f(i), vec![p]))
                    }
                    EState::Func { .. } => {
                        let mut cur = c;
                        while let EState::Func { .. } = cur.state {
                            cur = self.only_child(cur)?;
                        }
                        let p = self.main(cur)?;
                        let bangs = p.sequent.antecedent().iter().map(|b| Formula::bang(b.clone())).collect();
                        let c = Sequent::intuitionistic(bangs, Some(self.f(i)));
                        self.fit(self.node(c, Rule::BangF, self.f(i), vec![p]), &target)
                    }
                    _ => Err("unexpected zero test".into()),
                }
            }
            TreeRule::Leaf => Err("main state used as a leaf".into()),
            TreeRule::Unary(u) => {
                let c = self.only_child(n)?;
                let changed: Vec<(usize, i64)> = u.iter().copied().enumerate().filter(|&(_, k)| k != 0).collect();
                match c.state {
                    EState::Leaf => {
                        let base = match (x, changed.as_slice()) {
                            (Some(i), [(j, -1)]) if i == *j => ProofTree::leaf(Sequent::intuitionistic(vec![self.f(i)], Some(self.f(i))), Rule::Init, self.f(i)),
                            (None, [(j, -1)]) => ProofTree::leaf(Sequent::intuitionistic(vec![self.f(*j)], None), Rule::BotL, self.f(*j)),
                            (Some(i), []) if em.is_bang_index(i) => {
                                ProofTree::leaf(Sequent::intuitionistic(vec![self.f(i)], Some(self.f(i))), Rule::Init, self.f(i))
                            }
                            (Some(i), []) => ProofTree::leaf(Sequent::intuitionistic(vec![], Some(self.f(i))), Rule::OneR, self.f(i)),
                            _ => return Err("unrecognised axiom".into()),
                        };
                        self.fit(Arc::new(base), &target)
                    }
                    EState::Main { q: q2, x: x2 } => {
                        let p = self.main(c)?;
                        match changed.as_slice() {
                            [] if x2 == x => self.fit(p, &target),
                            [] if x2.is_none() => {
                                let i = x.ok_or("right rule without stoup")?;
                                let rule = if self.f(i) == Formula::bot() { Rule::BotR } else { Rule::WPrime };
                                Ok(self.node(target, rule, self.f(i), vec![p]))
                            }
                            [] => {
                                let i = x.ok_or("right rule without stoup")?;
                                let Shape::Bin(BinOp::Plus, a, _) = em.shape[i] else { return Err("bad plus".into()) };
                                let rule = if x2 == Some(a) { Rule::PlusR1 } else { Rule::PlusR2 };
                                Ok(self.node(target, rule, self.f(i), vec![p]))
                            }
                            [(j, 1)] if x2 != x => {
                                let i = x.ok_or("right rule without stoup")?;
                                debug_assert!(matches!(em.shape[i], Shape::Bin(BinOp::Lolli, a, _) if a == *j));
                                Ok(self.node(target, Rule::ImpR, self.f(i), vec![p]))
                            }
                            [(j, 1)] => {
                                let b = members(q).find(|&b| em.body(b) == *j && (q2 == q || q2 == q & !(1 << b)));
                                let b = b.ok_or("no matching dereliction")?;
                                let mut ante = vec![self.f(b)];
                                ante.extend(remove(p.sequent.antecedent(), &self.f(*j))?);
                                let c = Sequent::intuitionistic(ante, x.map(|i| self.f(i)));
                                self.fit(self.node(c, Rule::BangD, self.f(b), vec![p]), &target)
                            }
                            [(j, -1)] if !em.is_bang_index(*j) => Ok(self.node(target, Rule::OneL, self.f(*j), vec![p])),
                            [(_, -1)] => self.fit(p, &target),
                            _ => Err("unrecognised unary step".into()),
                        }
                    }
                    EState::TensL { f, .. } => {
                        let p = self.main(self.only_child(c)?)?;
                        Ok(self.node(target, Rule::TensL, self.f(f), vec![p]))
                    }
                    EState::WithL { f, .. } => {
                        let m = self.only_child(c)?;
                        let Shape::Bin(_, a, _) = em.shape[f] else { return Err("bad with".into()) };
                        let TreeRule::Unary(u2) = &c.rule else { return Err("bad with exit".into()) };
                        let rule = if u2[a] > 0 { Rule::WithL1 } else { Rule::WithL2 };
                        let p = self.main(m)?;
                        Ok(self.node(target, rule, self.f(f), vec![p]))
                    }
                    EState::PlusL { f, .. } => {
                        if c.children.len() != 2 {
                            return Err("bad plus fork".into());
                        }
                        let a = self.main(self.only_child(&c.children[0])?)?;
                        let b = self.main(self.only_child(&c.children[1])?)?;
                        Ok(self.node(target, Rule::PlusL, self.f(f), vec![a, b]))
                    }
                    EState::ImpL { f, .. } => {
                        if c.children.len() != 2 {
                            return Err("bad implication split".into());
                        }
                        let a = self.main(&c.children[0])?;
                        let b = self.main(self.only_child(&c.children[1])?)?;
                        let Shape::Bin(_, _, bi) = em.shape[f] else { return Err("bad implication".into()) };
                        let mut ante = a.sequent.antecedent().to_vec();
                        ante.extend(remove(b.sequent.antecedent(), &self.f(bi))?);
                        ante.push(self.f(f));
                        let concl = Sequent::intuitionistic(ante, x.map(|i| self.f(i)));
                        self.fit(self.node(concl, Rule::ImpL, self.f(f), vec![a, b]), &target)
                    }
                    EState::ZeroL => {
                        let z = em.const_index(Const::Zero).ok_or("no 0 in closure")?;
                        Ok(Arc::new(ProofTree::leaf(target, Rule::ZeroL, self.f(z))))
                    }
                    EState::TopR => {
                        let i = x.ok_or("top without stoup")?;
                        Ok(Arc::new(ProofTree::leaf(target, Rule::TopR, self.f(i))))
                    }
                    _ => Err(format!("unexpected step into {}", em.state_name(&c.state))),
                }
            }
        }
    }
}

fn remove(ms: &[Formula], x: &Formula) -> Result<Vec<Formula>, String> {
    crate::formulas::remove_one(ms, x).ok_or_else(|| format!("`{x}` missing"))
}

/// Builds a standard tree from a proof in the variant's calculus, rooted at
/// `root`, whose sequent must be the proof's conclusion.
pub fn compile(em: &EncodedMachine, p: &ProofTree, root: &Config<EState>) -> Result<ETree, EncodeError> {
    let inner = Compiler { em }.go(p).map_err(EncodeError::Decompile)?;
    adapt(em, root, inner).map_err(EncodeError::Decompile)
}

/// `compile(decompile(t))`.
pub fn normalize_standard(em: &EncodedMachine, t: &DeductionTree<EState>) -> Result<ETree, EncodeError> {
    if !t.state.is_main() {
        return Err(EncodeError::NotEncoded(em.state_name(&t.state)));
    }
    let p = decompile(em, t)?;
    let out = compile(em, &p, &t.config())?;
    check_tree(em, &[EState::Leaf], &out, true)?;
    Ok(out)
}

/// Stores every !-token of `from`, drops surplus set members, then loses
/// surplus tokens until `sub`'s root is reached.
fn adapt(em: &EncodedMachine, from: &Config<EState>, sub: ETree) -> Result<ETree, String> {
    let (EState::Main { q, x }, EState::Main { q: q_to, x: x_to }) = (&from.state, &sub.state) else {
        return Err("adapt between non-main states".into());
    };
    if x != x_to {
        return Err("adapt changes the stoup".into());
    }
    let mut steps: Vec<(Config<EState>, TreeRule)> = Vec::new();
    let (mut q, mut v) = (*q, from.vector.clone());
    for b in members(em.bangs) {
        while v[b] > 0 {
            steps.push((Config::new(EState::Main { q, x: *x }, v.clone()), TreeRule::Unary(em.unit(b, -1))));
            v[b] -= 1;
            q |= 1 << b;
        }
    }
    if q & q_to != *q_to {
        return Err("target set is not covered".into());
    }
    for b in members(q & !q_to) {
        steps.push((Config::new(EState::Main { q, x: *x }, v.clone()), TreeRule::Unary(vec![0; v.len()])));
        q &= !(1 << b);
    }
    for i in 0..v.len() {
        if v[i] < sub.vector[i] {
            return Err("target vector is not covered".into());
        }
        while v[i] > sub.vector[i] {
            steps.push((Config::new(EState::Main { q, x: *x }, v.clone()), TreeRule::Loss(i)));
            v[i] -= 1;
        }
    }
    let mut t = sub;
    for (c, rule) in steps.into_iter().rev() {
        t = Arc::new(DeductionTree { state: c.state, vector: c.vector, rule, children: vec![t] });
    }
    Ok(t)
}

struct Compiler<'a> {
    em: &'a EncodedMachine,
}

impl Compiler<'_> {
    fn cfg(&self, s: &Sequent) -> Result<Config<EState>, String> {
        self.em.sequent_to_config(s).map_err(|e| e.to_string())
    }

    fn idx(&self, f: &Formula) -> Result<usize, String> {
        self.em.index_of(f).map_err(|e| e.to_string())
    }

    fn mk(&self, state: EState, vector: Vec<u32>, rule: TreeRule, children: Vec<ETree>) -> ETree {
        Arc::new(DeductionTree { state, vector, rule, children })
    }

    /// Main node at `(q, x, v)`, unary `u` into `mid`, then `exit` into the
    /// main configuration `v - e_f + u + extra`, which is adapted to `sub`.
    fn via(&self, state: &EState, v: &[u32], u: Vec<i64>, mid: EState, exit: Vec<i64>, sub: ETree) -> Result<ETree, String> {
        let w = add(v, &u)?;
        let z = add(&w, &exit)?;
        let EState::Main { x, .. } = state else { unreachable!() };
        let target_q = match &mid {
            EState::TensL { q, .. } | EState::WithL { q, .. } | EState::Plus1 { q, .. } | EState::Plus2 { q, .. } | EState::ImpL2 { q, .. } => *q,
            _ => return Err("bad intermediate".into()),
        };
        let back = adapt(self.em, &Config::new(EState::Main { q: target_q, x: *x }, z), sub)?;
        let m = self.mk(mid, w, TreeRule::Unary(exit), vec![back]);
        Ok(self.mk(state.clone(), v.to_vec(), TreeRule::Unary(u), vec![m]))
    }

    fn go(&self, p: &ProofTree) -> Result<ETree, String> {
        let em = self.em;
        let root = self.cfg(&p.sequent)?;
        let EState::Main { q, x } = root.state.clone() else { unreachable!() };
        let v = root.vector.clone();
        let d = v.len();
        let kid = |i: usize| self.go(&p.children[i]);
        let pr = self.idx(&p.principal)?;
        let leaf = || Arc::new(DeductionTree::leaf(EState::Leaf, d));
        match p.rule {
            Rule::Init if em.is_bang_index(pr) => Ok(self.mk(root.state, v, TreeRule::Unary(vec![0; d]), vec![leaf()])),
            Rule::Init => Ok(self.mk(root.state, v, TreeRule::Unary(em.unit(pr, -1)), vec![leaf()])),
            Rule::OneR => Ok(self.mk(root.state, v, TreeRule::Unary(vec![0; d]), vec![leaf()])),
            Rule::BotL => Ok(self.mk(root.state, v, TreeRule::Unary(em.unit(pr, -1)), vec![leaf()])),
            Rule::W | Rule::BangW | Rule::BangC => adapt(em, &root, kid(0)?),
            Rule::WPrime | Rule::BotR | Rule::PlusR1 | Rule::PlusR2 => {
                Ok(self.mk(root.state, v, TreeRule::Unary(vec![0; d]), vec![kid(0)?]))
            }
            Rule::OneL => Ok(self.mk(root.state, v, TreeRule::Unary(em.unit(pr, -1)), vec![kid(0)?])),
            Rule::ImpR => {
                let Shape::Bin(_, a, b) = em.shape[pr] else { return Err("bad implication".into()) };
                let w = add(&v, &em.unit(a, 1))?;
                let inner = adapt(em, &Config::new(EState::Main { q, x: Some(b) }, w), kid(0)?)?;
                Ok(self.mk(root.state, v, TreeRule::Unary(em.unit(a, 1)), vec![inner]))
            }
            Rule::TensL => {
                let Shape::Bin(_, a, b) = em.shape[pr] else { return Err("bad tensor".into()) };
                let mut exit = em.unit(a, 1);
                exit[b] += 1;
                self.via(&root.state, &v, em.unit(pr, -1), EState::TensL { q, x, f: pr }, exit, kid(0)?)
            }
            Rule::WithL1 | Rule::WithL2 => {
                let Shape::Bin(_, a, b) = em.shape[pr] else { return Err("bad with".into()) };
                let pick = if p.rule == Rule::WithL1 { a } else { b };
                self.via(&root.state, &v, em.unit(pr, -1), EState::WithL { q, x, f: pr }, em.unit(pick, 1), kid(0)?)
            }
            Rule::PlusL => {
                let Shape::Bin(_, a, b) = em.shape[pr] else { return Err("bad plus".into()) };
                let w = add(&v, &em.unit(pr, -1))?;
                let side = |st: EState, c: usize, sub: ETree| -> Result<ETree, String> {
                    let z = add(&w, &em.unit(c, 1))?;
                    let back = adapt(em, &Config::new(EState::Main { q, x }, z), sub)?;
                    Ok(self.mk(st, w.clone(), TreeRule::Unary(em.unit(c, 1)), vec![back]))
                };
                let l = side(EState::Plus1 { q, x, f: pr }, a, kid(0)?)?;
                let r = side(EState::Plus2 { q, x, f: pr }, b, kid(1)?)?;
                let fork = self.mk(EState::PlusL { q, x, f: pr }, w.clone(), TreeRule::Fork, vec![l, r]);
                Ok(self.mk(root.state, v, TreeRule::Unary(em.unit(pr, -1)), vec![fork]))
            }
            Rule::ImpL => {
                let Shape::Bin(_, _, b) = em.shape[pr] else { return Err("bad implication".into()) };
                let (l, r) = (kid(0)?, kid(1)?);
                let EState::Main { q: q1, .. } = l.state else { unreachable!() };
                let rs = &p.children[1].sequent;
                let delta2 = remove(rs.antecedent(), &em.formulas[b])?;
                let EState::Main { q: q2, .. } = self.cfg(&Sequent::intuitionistic(delta2, rs.stoup().cloned()))?.state
                else {
                    unreachable!()
                };
                let w2 = sub_vec(&v, &l.vector, pr)?;
                let back = adapt(em, &Config::new(EState::Main { q: q2, x }, add(&w2, &em.unit(b, 1))?), r)?;
                let mid2 = self.mk(EState::ImpL2 { q: q2, x, f: pr }, w2.clone(), TreeRule::Unary(em.unit(b, 1)), vec![back]);
                let w = add(&v, &em.unit(pr, -1))?;
                let split = self.mk(EState::ImpL { q1, q2, x, f: pr }, w, TreeRule::Split, vec![l, mid2]);
                Ok(self.mk(root.state, v, TreeRule::Unary(em.unit(pr, -1)), vec![split]))
            }
            Rule::TensR => {
                let (l, r) = (kid(0)?, kid(1)?);
                Ok(self.mk(root.state, v, TreeRule::Split, vec![l, r]))
            }
            Rule::WithR => Ok(self.mk(root.state, v, TreeRule::Fork, vec![kid(0)?, kid(1)?])),
            Rule::ZeroL => {
                let w = add(&v, &em.unit(pr, -1))?;
                Ok(self.mk(root.state, v, TreeRule::Unary(em.unit(pr, -1)), vec![drain(em, EState::ZeroL, w)]))
            }
            Rule::TopR => Ok(self.mk(root.state, v.clone(), TreeRule::Unary(vec![0; d]), vec![drain(em, EState::TopR, v)])),
            Rule::BangP => Ok(self.mk(root.state, v, TreeRule::Zero, vec![kid(0)?])),
            Rule::BangD => {
                let a = em.body(pr);
                let keep = p.children[0].sequent.antecedent().contains(&p.principal);
                let q2 = if keep { q } else { q & !(1 << pr) };
                let w = add(&v, &em.unit(a, 1))?;
                let inner = adapt(em, &Config::new(EState::Main { q: q2, x }, w), kid(0)?)?;
                Ok(self.mk(root.state, v, TreeRule::Unary(em.unit(a, 1)), vec![inner]))
            }
            Rule::BangF => {
                let a = em.body(pr);
                let mut w = vec![0u32; d];
                let mut loops = Vec::new();
                for g in p.sequent.antecedent() {
                    let b = em.body(self.idx(g)?);
                    loops.push((w.clone(), em.unit(b, 1)));
                    w[b] += 1;
                }
                let fstate = EState::Func { q, f: pr };
                let mut t = adapt(em, &Config::new(EState::Main { q: 0, x: Some(a) }, w.clone()), kid(0)?)?;
                t = self.mk(fstate.clone(), w, TreeRule::Unary(vec![0; d]), vec![t]);
                for (w, u) in loops.into_iter().rev() {
                    t = self.mk(fstate.clone(), w, TreeRule::Unary(u), vec![t]);
                }
                Ok(self.mk(root.state, v, TreeRule::Zero, vec![t]))
            }
            r => Err(format!("rule {r} has no machine counterpart")),
        }
    }
}

/// `state` at `v`, removing every non-! token, then into the leaf.
fn drain(em: &EncodedMachine, state: EState, v: Vec<u32>) -> ETree {
    let d = v.len();
    let mut t = Arc::new(DeductionTree::leaf(EState::Leaf, d));
    let mut cur = vec![0u32; d];
    t = Arc::new(DeductionTree { state: state.clone(), vector: cur.clone(), rule: TreeRule::Unary(vec![0; d]), children: vec![t] });
    for i in (0..d).rev() {
        while cur[i] < v[i] {
            cur[i] += 1;
            t = Arc::new(DeductionTree { state: state.clone(), vector: cur.clone(), rule: TreeRule::Unary(em.unit(i, -1)), children: vec![t] });
        }
    }
    t
}

fn add(v: &[u32], u: &[i64]) -> Result<Vec<u32>, String> {
    v.iter()
        .zip(u)
        .map(|(&a, &b)| u32::try_from(a as i64 + b).map_err(|_| "negative counter".to_string()))
        .collect()
}

fn sub_vec(v: &[u32], w: &[u32], minus: usize) -> Result<Vec<u32>, String> {
    let mut out = Vec::with_capacity(v.len());
    for i in 0..v.len() {
        let k = if i == minus { 1 } else { 0 };
        out.push(v[i].checked_sub(w[i] + k).ok_or("split does not fit")?);
    }
    Ok(out)
}

/// Re-checks a decompiled proof against the variant's calculus.
pub fn check_decompiled(em: &EncodedMachine, p: &ProofTree) -> Result<(), EncodeError> {
    check_proof(&em.variant.system(), p, false).map_err(|v| EncodeError::Decompile(v.to_string()))
}

// ---------------------------------------------------------------------------
// BVASS to LLW

/// `⊢ ?⌜T⌝, ?Q_ℓ, θ(q, v)` for an ordinary BVASS, with counters named
/// `e1 .. ed`.
pub fn encode_bvass_to_sequent(b: &Abvass, leaves: &[usize], target: &Config<usize>) -> Result<Sequent, EncodeError> {
    if !b.is_bvass() || !b.is_ordinary() {
        return Err(EncodeError::NotOrdinaryBvass);
    }
    if target.vector.len() != b.dim || target.state >= b.names.len() {
        return Err(AbvassError::InvalidConfig("target does not fit the machine".into()).into());
    }
    for i in 1..=b.dim {
        let e = format!("e{i}");
        if b.names.contains(&e) {
            return Err(EncodeError::NameClash(e));
        }
    }
    for n in &b.names {
        if crate::formulas::parse_formula(n, Polarity::Classical).ok() != Some(Formula::var(n)) {
            return Err(EncodeError::NameClash(n.clone()));
        }
    }
    let st = |q: usize| Formula::var(&b.names[q]);
    let ctr = |i: usize| Formula::var(&format!("e{}", i + 1));
    let dualv = |f: Formula| crate::formulas::dual(&f).expect("classical");
    let mut out = Vec::new();
    for (q, u, t) in &b.unary {
        let i = u.iter().position(|&k| k != 0).expect("ordinary");
        let f = if u[i] > 0 {
            Formula::tensor(st(*q), dualv(Formula::tensor(st(*t), ctr(i))))
        } else {
            Formula::tensor(Formula::tensor(st(*q), ctr(i)), dualv(st(*t)))
        };
        out.push(Formula::why_not(f));
    }
    for (q, x, y) in &b.split {
        out.push(Formula::why_not(Formula::tensor(st(*q), dualv(Formula::par(st(*x), st(*y))))));
    }
    for &l in leaves {
        out.push(Formula::why_not(st(l)));
    }
    out.push(dualv(st(target.state)));
    for (i, &n) in target.vector.iter().enumerate() {
        for _ in 0..n {
            out.push(dualv(ctr(i)));
        }
    }
    Ok(Sequent::classical(out))
}

/// Whether `s` is `?`-prenex over `{*, |}`.
pub fn is_why_not_prenex_multiplicative(s: &Sequent) -> bool {
    fn mult(f: &Formula) -> bool {
        match f {
            Formula::Var(_) | Formula::DualVar(_) => true,
            Formula::Bin(BinOp::Tensor | BinOp::Par, a, b) => mult(a) && mult(b),
            _ => false,
        }
    }
    s.is_classical()
        && s.succedent().iter().all(|f| match f {
            Formula::Un(UnOp::WhyNot, b) => mult(b),
            g => mult(g),
        })
}
