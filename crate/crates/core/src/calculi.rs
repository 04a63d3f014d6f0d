//! System catalogue, rule names, proof trees and the proof checker.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde_json::{json, Value};
use thiserror::Error;

use crate::formulas::{
    dual_unchecked, in_fragment, multiset_minus, parse_formula, parse_sequent, remove_one, sorted,
    BinOp, Connective, Const, Formula, FormulaError, Fragment, Polarity, Sequent, Side, UnOp,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SystemName {
    Ilzw,
    IlzwPrime,
    Illw,
    Ill,
    Llw,
    Ll,
    Ellw,
    Iezw,
    Ielw,
    Bck,
    Bci,
    FLei,
    FLew,
    FLplusEi,
    InFLew,
    Ilal,
}

impl SystemName {
    pub const ALL: [SystemName; 16] = [
        SystemName::Ilzw,
        SystemName::IlzwPrime,
        SystemName::Illw,
        SystemName::Ill,
        SystemName::Llw,
        SystemName::Ll,
        SystemName::Ellw,
        SystemName::Iezw,
        SystemName::Ielw,
        SystemName::Bck,
        SystemName::Bci,
        SystemName::FLei,
        SystemName::FLew,
        SystemName::FLplusEi,
        SystemName::InFLew,
        SystemName::Ilal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SystemName::Ilzw => "ILZW",
            SystemName::IlzwPrime => "ILZW'",
            SystemName::Illw => "ILLW",
            SystemName::Ill => "ILL",
            SystemName::Llw => "LLW",
            SystemName::Ll => "LL",
            SystemName::Ellw => "ELLW",
            SystemName::Iezw => "IEZW",
            SystemName::Ielw => "IELW",
            SystemName::Bck => "BCK",
            SystemName::Bci => "BCI",
            SystemName::FLei => "FLei",
            SystemName::FLew => "FLew",
            SystemName::FLplusEi => "FLplus_ei",
            SystemName::InFLew => "InFLew",
            SystemName::Ilal => "ILAL",
        }
    }
}

impl fmt::Display for SystemName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Exponentials {
    None,
    /// Dereliction, promotion, contraction, weakening.
    Standard,
    /// Functorial promotion only (elementary systems).
    Functorial,
    /// The `!`/`$` rules of light affine logic.
    Light,
}

/// A calculus descriptor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct System {
    pub name: SystemName,
    pub language: Fragment,
    pub side: Side,
    pub weakening: bool,
    pub right_weakening: bool,
    pub cut_allowed: bool,
    pub exponentials: Exponentials,
    /// Non-logical axioms, sorted and deduplicated.
    pub axioms: Vec<Formula>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CalcError {
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error("`{0}` is not in the language of {1}")]
    OutsideLanguage(String, String),
    #[error("unknown system `{0}`")]
    UnknownSystem(String),
    #[error("unknown rule `{0}`")]
    UnknownRule(String),
    #[error("malformed proof JSON: {0}")]
    Json(String),
}

fn lang(cs: &[Connective]) -> Fragment {
    Fragment::of(cs)
}

impl System {
    fn base(name: SystemName, language: Fragment, side: Side, weakening: bool, exponentials: Exponentials) -> System {
        System {
            name,
            language,
            side,
            weakening,
            right_weakening: false,
            cut_allowed: false,
            exponentials,
            axioms: Vec::new(),
        }
    }

    pub fn ilzw() -> System {
        System::base(SystemName::Ilzw, Fragment::intuitionistic(), Side::Intuitionistic, true, Exponentials::Standard)
    }

    pub fn ilzw_prime() -> System {
        System { right_weakening: true, ..System::base(SystemName::IlzwPrime, Fragment::intuitionistic(), Side::Intuitionistic, true, Exponentials::Standard) }
    }

    pub fn illw() -> System {
        let k = Fragment::intuitionistic().without(Connective::Bot);
        System::base(SystemName::Illw, k, Side::Intuitionistic, true, Exponentials::Standard)
    }

    pub fn ill() -> System {
        let k = Fragment::intuitionistic().without(Connective::Bot);
        System::base(SystemName::Ill, k, Side::Intuitionistic, false, Exponentials::Standard)
    }

    pub fn llw() -> System {
        System::base(SystemName::Llw, Fragment::classical(), Side::Classical, true, Exponentials::Standard)
    }

    pub fn ll() -> System {
        System::base(SystemName::Ll, Fragment::classical(), Side::Classical, false, Exponentials::Standard)
    }

    pub fn ellw() -> System {
        System::base(SystemName::Ellw, Fragment::classical(), Side::Classical, true, Exponentials::Functorial)
    }

    pub fn iezw() -> System {
        System::base(SystemName::Iezw, Fragment::intuitionistic(), Side::Intuitionistic, true, Exponentials::Functorial)
    }

    pub fn ielw() -> System {
        let k = Fragment::intuitionistic().without(Connective::Bot);
        System::base(SystemName::Ielw, k, Side::Intuitionistic, true, Exponentials::Functorial)
    }

    pub fn bck() -> System {
        System::base(SystemName::Bck, lang(&[Connective::Lolli]), Side::Intuitionistic, true, Exponentials::None)
    }

    pub fn bci() -> System {
        System::base(SystemName::Bci, lang(&[Connective::Lolli]), Side::Intuitionistic, false, Exponentials::None)
    }

    fn fl_language() -> Fragment {
        use Connective::*;
        lang(&[Tensor, Lolli, With, Plus, One, Bot])
    }

    pub fn flei() -> System {
        System::base(SystemName::FLei, System::fl_language(), Side::Intuitionistic, true, Exponentials::None)
    }

    pub fn flew() -> System {
        System { right_weakening: true, ..System::base(SystemName::FLew, System::fl_language(), Side::Intuitionistic, true, Exponentials::None) }
    }

    pub fn flplus_ei() -> System {
        let k = System::fl_language().without(Connective::Bot);
        System::base(SystemName::FLplusEi, k, Side::Intuitionistic, true, Exponentials::None)
    }

    pub fn inflew() -> System {
        use Connective::*;
        let k = lang(&[Tensor, Par, With, Plus, One, Bot]);
        System::base(SystemName::InFLew, k, Side::Classical, true, Exponentials::None)
    }

    pub fn ilal() -> System {
        use Connective::*;
        System::base(SystemName::Ilal, lang(&[Lolli, Bang, Para]), Side::Intuitionistic, true, Exponentials::Light)
    }

    pub fn by_name(name: SystemName) -> System {
        match name {
            SystemName::Ilzw => System::ilzw(),
            SystemName::IlzwPrime => System::ilzw_prime(),
            SystemName::Illw => System::illw(),
            SystemName::Ill => System::ill(),
            SystemName::Llw => System::llw(),
            SystemName::Ll => System::ll(),
            SystemName::Ellw => System::ellw(),
            SystemName::Iezw => System::iezw(),
            SystemName::Ielw => System::ielw(),
            SystemName::Bck => System::bck(),
            SystemName::Bci => System::bci(),
            SystemName::FLei => System::flei(),
            SystemName::FLew => System::flew(),
            SystemName::FLplusEi => System::flplus_ei(),
            SystemName::InFLew => System::inflew(),
            SystemName::Ilal => System::ilal(),
        }
    }

    /// The `K`-fragment: rules for connectives outside `k` are dropped.
    pub fn restrict(mut self, k: Fragment) -> System {
        self.language = self.language.intersect(k);
        self
    }

    /// `L[Φ]`.
    pub fn with_axioms(mut self, phi: &[Formula]) -> Result<System, CalcError> {
        for b in phi {
            self.check_formula(b)?;
        }
        self.axioms.extend(phi.iter().cloned());
        self.axioms.sort();
        self.axioms.dedup();
        Ok(self)
    }

    pub fn polarity(&self) -> Polarity {
        self.side.polarity()
    }

    pub fn is_classical(&self) -> bool {
        self.side == Side::Classical
    }

    pub fn has(&self, c: Connective) -> bool {
        self.language.contains(c)
    }

    pub fn check_formula(&self, f: &Formula) -> Result<(), CalcError> {
        f.check_polarity(self.polarity())?;
        if !in_fragment(f, self.language) {
            return Err(CalcError::OutsideLanguage(f.to_string(), self.to_string()));
        }
        Ok(())
    }

    pub fn check_sequent(&self, s: &Sequent) -> Result<(), CalcError> {
        if s.side() != self.side {
            return Err(CalcError::OutsideLanguage(s.to_string(), self.to_string()));
        }
        s.formulas().try_for_each(|f| self.check_formula(f))
    }

    /// Parses a system name, optionally prefixed by a fragment: `{-o,!}-ILLW`.
    pub fn parse(text: &str) -> Result<System, CalcError> {
        let text = text.trim();
        if let Some(rest) = text.strip_prefix('{') {
            let close = rest.find('}').ok_or_else(|| CalcError::UnknownSystem(text.to_string()))?;
            let k = Fragment::parse(&rest[..close])?;
            let base = rest[close + 1..].trim_start_matches('-');
            return Ok(System::parse(base)?.restrict(k));
        }
        let key: String = text.chars().filter(|c| !matches!(c, '_' | '-' | '+')).collect::<String>().to_lowercase();
        let name = match key.as_str() {
            "ilzw" => SystemName::Ilzw,
            "ilzw'" | "ilzwprime" | "ilzw′" => SystemName::IlzwPrime,
            "illw" => SystemName::Illw,
            "ill" => SystemName::Ill,
            "llw" => SystemName::Llw,
            "ll" => SystemName::Ll,
            "ellw" => SystemName::Ellw,
            "iezw" => SystemName::Iezw,
            "ielw" => SystemName::Ielw,
            "bck" => SystemName::Bck,
            "bci" => SystemName::Bci,
            "flei" => SystemName::FLei,
            "flew" => SystemName::FLew,
            "flplusei" | "flpei" => SystemName::FLplusEi,
            "inflew" => SystemName::InFLew,
            "ilal" => SystemName::Ilal,
            _ => return Err(CalcError::UnknownSystem(text.to_string())),
        };
        Ok(System::by_name(name))
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let full = System::by_name(self.name).language;
        if self.language != full {
            write!(f, "{}-", self.language)?;
        }
        write!(f, "{}", self.name)?;
        if !self.axioms.is_empty() {
            let ax: Vec<String> = self.axioms.iter().map(ToString::to_string).collect();
            write!(f, "[{}]", ax.join(", "))?;
        }
        Ok(())
    }
}

impl FromStr for System {
    type Err = CalcError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        System::parse(s)
    }
}

/// Rule labels. Intuitionistic and classical rules share `Init`, `W`,
/// `Cut` and `Axiom`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rule {
    Init,
    Axiom,
    Cut,
    W,
    OneR,
    OneL,
    BotL,
    BotR,
    TopR,
    ZeroL,
    ImpL,
    ImpR,
    TensL,
    TensR,
    WithL1,
    WithL2,
    WithR,
    PlusL,
    PlusR1,
    PlusR2,
    BangD,
    BangP,
    BangC,
    BangW,
    BangF,
    WPrime,
    LalBang,
    LalPara,
    One,
    Top,
    Bot,
    Tens,
    Par,
    With,
    Plus1,
    Plus2,
    Why,
    Bang,
    F,
    WhyC,
    WhyW,
}

impl Rule {
    pub const ALL: [Rule; 41] = [
        Rule::Init,
        Rule::Axiom,
        Rule::Cut,
        Rule::W,
        Rule::OneR,
        Rule::OneL,
        Rule::BotL,
        Rule::BotR,
        Rule::TopR,
        Rule::ZeroL,
        Rule::ImpL,
        Rule::ImpR,
        Rule::TensL,
        Rule::TensR,
        Rule::WithL1,
        Rule::WithL2,
        Rule::WithR,
        Rule::PlusL,
        Rule::PlusR1,
        Rule::PlusR2,
        Rule::BangD,
        Rule::BangP,
        Rule::BangC,
        Rule::BangW,
        Rule::BangF,
        Rule::WPrime,
        Rule::LalBang,
        Rule::LalPara,
        Rule::One,
        Rule::Top,
        Rule::Bot,
        Rule::Tens,
        Rule::Par,
        Rule::With,
        Rule::Plus1,
        Rule::Plus2,
        Rule::Why,
        Rule::Bang,
        Rule::F,
        Rule::WhyC,
        Rule::WhyW,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rule::Init => "Init",
            Rule::Axiom => "Axiom",
            Rule::Cut => "Cut",
            Rule::W => "W",
            Rule::OneR => "1R",
            Rule::OneL => "1L",
            Rule::BotL => "botL",
            Rule::BotR => "botR",
            Rule::TopR => "topR",
            Rule::ZeroL => "zeroL",
            Rule::ImpL => "impL",
            Rule::ImpR => "impR",
            Rule::TensL => "tensL",
            Rule::TensR => "tensR",
            Rule::WithL1 => "withL1",
            Rule::WithL2 => "withL2",
            Rule::WithR => "withR",
            Rule::PlusL => "plusL",
            Rule::PlusR1 => "plusR1",
            Rule::PlusR2 => "plusR2",
            Rule::BangD => "bangD",
            Rule::BangP => "bangP",
            Rule::BangC => "bangC",
            Rule::BangW => "bangW",
            Rule::BangF => "bangF",
            Rule::WPrime => "W'",
            Rule::LalBang => "lalBang",
            Rule::LalPara => "lalPara",
            Rule::One => "one",
            Rule::Top => "top",
            Rule::Bot => "bot",
            Rule::Tens => "tens",
            Rule::Par => "par",
            Rule::With => "with",
            Rule::Plus1 => "plus1",
            Rule::Plus2 => "plus2",
            Rule::Why => "why",
            Rule::Bang => "bang",
            Rule::F => "F",
            Rule::WhyC => "whyC",
            Rule::WhyW => "whyW",
        }
    }

    fn classical_only(self) -> bool {
        matches!(
            self,
            Rule::One
                | Rule::Top
                | Rule::Bot
                | Rule::Tens
                | Rule::Par
                | Rule::With
                | Rule::Plus1
                | Rule::Plus2
                | Rule::Why
                | Rule::Bang
                | Rule::F
                | Rule::WhyC
                | Rule::WhyW
        )
    }

    fn shared(self) -> bool {
        matches!(self, Rule::Init | Rule::Axiom | Rule::Cut | Rule::W)
    }

    pub fn fits(self, side: Side) -> bool {
        self.shared() || (self.classical_only() == (side == Side::Classical))
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Rule {
    type Err = CalcError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Rule::ALL
            .iter()
            .copied()
            .find(|r| r.name() == s)
            .ok_or_else(|| CalcError::UnknownRule(s.to_string()))
    }
}

/// A rule-labelled tree of sequents. `principal` is the formula the rule
/// acts on (the cut formula for `Cut`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofTree {
    pub sequent: Sequent,
    pub rule: Rule,
    pub principal: Formula,
    pub children: Vec<Arc<ProofTree>>,
}

impl ProofTree {
    pub fn leaf(sequent: Sequent, rule: Rule, principal: Formula) -> ProofTree {
        ProofTree { sequent, rule, principal, children: Vec::new() }
    }

    pub fn node(sequent: Sequent, rule: Rule, principal: Formula, children: Vec<Arc<ProofTree>>) -> ProofTree {
        ProofTree { sequent, rule, principal, children }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(|c| c.size()).sum::<usize>()
    }

    /// Number of nodes, not counting weakening steps.
    pub fn size_without(&self, skip: &[Rule]) -> usize {
        let own = usize::from(!skip.contains(&self.rule));
        own + self.children.iter().map(|c| c.size_without(skip)).sum::<usize>()
    }

    pub fn height(&self) -> usize {
        1 + self.children.iter().map(|c| c.height()).max().unwrap_or(0)
    }

    pub fn rules_used(&self) -> Vec<Rule> {
        let mut out = vec![self.rule];
        for c in &self.children {
            out.extend(c.rules_used());
        }
        out
    }

    pub fn to_json(&self) -> Value {
        json!({
            "sequent": self.sequent.to_string(),
            "rule": self.rule.name(),
            "principal": self.principal.to_string(),
            "children": self.children.iter().map(|c| c.to_json()).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value, polarity: Polarity) -> Result<ProofTree, CalcError> {
        let field = |k: &str| v.get(k).ok_or_else(|| CalcError::Json(format!("missing `{k}`")));
        let text = |k: &str| -> Result<&str, CalcError> {
            field(k)?.as_str().ok_or_else(|| CalcError::Json(format!("`{k}` is not a string")))
        };
        let sequent = parse_sequent(text("sequent")?, polarity)?;
        let rule: Rule = text("rule")?.parse()?;
        let principal = parse_formula(text("principal")?, polarity)?;
        let children = field("children")?
            .as_array()
            .ok_or_else(|| CalcError::Json("`children` is not an array".into()))?
            .iter()
            .map(|c| ProofTree::from_json(c, polarity).map(Arc::new))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ProofTree { sequent, rule, principal, children })
    }
}

// ---------------------------------------------------------------------------
// checking

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{rule} at node {path:?} ({sequent}): {reason}")]
pub struct Violation {
    /// Child indices from the root.
    pub path: Vec<usize>,
    pub sequent: String,
    pub rule: String,
    pub reason: String,
}

/// Checks every node of `t` against the rules of `sys`. A `Cut` whose left
/// premise is an `Axiom` leaf is accepted for systems with axioms; any
/// other cut needs `allow_cut`.
pub fn check_proof(sys: &System, t: &ProofTree, allow_cut: bool) -> Result<(), Violation> {
    let mut path = Vec::new();
    check_rec(sys, t, allow_cut || sys.cut_allowed, &mut path)
}

fn check_rec(sys: &System, t: &ProofTree, allow_cut: bool, path: &mut Vec<usize>) -> Result<(), Violation> {
    let fail = |reason: String, path: &[usize]| Violation {
        path: path.to_vec(),
        sequent: t.sequent.to_string(),
        rule: t.rule.name().to_string(),
        reason,
    };
    if let Err(e) = sys.check_sequent(&t.sequent) {
        return Err(fail(e.to_string(), path));
    }
    let axiom_cut = t.rule == Rule::Cut
        && !sys.axioms.is_empty()
        && t.children.first().is_some_and(|c| c.rule == Rule::Axiom && c.children.is_empty());
    if t.rule == Rule::Cut && !(allow_cut || axiom_cut) {
        return Err(fail("cut is not allowed here".into(), path));
    }
    let premises: Vec<&Sequent> = t.children.iter().map(|c| &c.sequent).collect();
    check_step(sys, &t.sequent, t.rule, &t.principal, &premises).map_err(|r| fail(r, path))?;
    for (i, c) in t.children.iter().enumerate() {
        path.push(i);
        check_rec(sys, c, allow_cut, path)?;
        path.pop();
    }
    Ok(())
}

type Check = Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn arity(premises: &[&Sequent], n: usize) -> Check {
    ensure(premises.len() == n, || format!("expected {n} premise(s), found {}", premises.len()))
}

fn bin_parts(f: &Formula, op: BinOp) -> Option<(&Formula, &Formula)> {
    match f {
        Formula::Bin(o, a, b) if *o == op => Some((a, b)),
        _ => None,
    }
}

fn un_body(f: &Formula, op: UnOp) -> Option<&Formula> {
    match f {
        Formula::Un(o, a) if *o == op => Some(a),
        _ => None,
    }
}

fn plus(a: &[Formula], extra: &[Formula]) -> Vec<Formula> {
    sorted(a.iter().chain(extra.iter()).cloned().collect())
}

fn same(a: &[Formula], b: &[Formula]) -> bool {
    a == b
}

/// Verifies one inference: `premises` over `conclusion` by `rule` with the
/// given principal formula.
pub fn check_step(sys: &System, conclusion: &Sequent, rule: Rule, principal: &Formula, premises: &[&Sequent]) -> Check {
    ensure(rule.fits(sys.side), || format!("rule {rule} belongs to the other side"))?;
    for p in premises {
        ensure(p.side() == sys.side, || "premise has the wrong shape".into())?;
    }
    match sys.side {
        Side::Intuitionistic => check_int(sys, conclusion, rule, principal, premises),
        Side::Classical => check_cls(sys, conclusion, rule, principal, premises),
    }
}

fn need_exp(sys: &System, ok: bool, rule: Rule) -> Check {
    ensure(ok, || format!("{rule} is not a rule of {sys}"))
}

fn check_int(sys: &System, c: &Sequent, rule: Rule, p: &Formula, prem: &[&Sequent]) -> Check {
    let g = c.antecedent();
    let pi = c.stoup();
    let in_left = || multiset_minus(g, std::slice::from_ref(p)).ok_or_else(|| format!("{p} is not in the antecedent"));
    let on_right = || ensure(pi == Some(p), || format!("{p} is not the stoup"));
    let same_stoup = |s: &Sequent| ensure(s.stoup() == pi, || "stoup changed".into());
    match rule {
        Rule::Init => {
            arity(prem, 0)?;
            ensure(g == std::slice::from_ref(p) && pi == Some(p), || "not of the form A |- A".into())
        }
        Rule::Axiom => {
            arity(prem, 0)?;
            ensure(g.is_empty() && pi == Some(p), || "not of the form |- B".into())?;
            ensure(sys.axioms.contains(p), || format!("{p} is not an axiom"))
        }
        Rule::OneR => {
            arity(prem, 0)?;
            ensure(g.is_empty() && pi == Some(p) && *p == Formula::one(), || "not |- 1".into())
        }
        Rule::BotL => {
            arity(prem, 0)?;
            ensure(g == [Formula::bot()] && pi.is_none() && *p == Formula::bot(), || "not bot |-".into())
        }
        Rule::TopR => {
            arity(prem, 0)?;
            ensure(*p == Formula::top() && pi == Some(p), || "stoup is not top".into())
        }
        Rule::ZeroL => {
            arity(prem, 0)?;
            ensure(*p == Formula::zero(), || "principal is not 0".into())?;
            in_left().map(|_| ())
        }
        Rule::Cut => {
            arity(prem, 2)?;
            ensure(prem[0].stoup() == Some(p), || "left premise does not end in the cut formula".into())?;
            same_stoup(prem[1])?;
            let rest = remove_one(prem[1].antecedent(), p).ok_or("cut formula missing on the left of the right premise")?;
            ensure(same(&plus(prem[0].antecedent(), &rest), g), || "contexts do not add up".into())
        }
        Rule::OneL => {
            arity(prem, 1)?;
            ensure(*p == Formula::one(), || "principal is not 1".into())?;
            let rest = in_left()?;
            same_stoup(prem[0])?;
            ensure(same(prem[0].antecedent(), &rest), || "premise antecedent mismatch".into())
        }
        Rule::BotR => {
            arity(prem, 1)?;
            ensure(*p == Formula::bot(), || "principal is not bot".into())?;
            on_right()?;
            ensure(prem[0].stoup().is_none() && same(prem[0].antecedent(), g), || "premise is not G |-".into())
        }
        Rule::ImpL => {
            arity(prem, 2)?;
            let (a, b) = bin_parts(p, BinOp::Lolli).ok_or("principal is not an implication")?;
            let rest = in_left()?;
            ensure(prem[0].stoup() == Some(a), || "left premise must prove the antecedent".into())?;
            same_stoup(prem[1])?;
            let right = remove_one(prem[1].antecedent(), b).ok_or("right premise lacks the consequent")?;
            ensure(same(&plus(prem[0].antecedent(), &right), &rest), || "contexts do not add up".into())
        }
        Rule::ImpR => {
            arity(prem, 1)?;
            let (a, b) = bin_parts(p, BinOp::Lolli).ok_or("principal is not an implication")?;
            on_right()?;
            ensure(prem[0].stoup() == Some(b), || "premise stoup mismatch".into())?;
            ensure(same(prem[0].antecedent(), &plus(g, std::slice::from_ref(a))), || "premise antecedent mismatch".into())
        }
        Rule::TensL => {
            arity(prem, 1)?;
            let (a, b) = bin_parts(p, BinOp::Tensor).ok_or("principal is not a tensor")?;
            let rest = in_left()?;
            same_stoup(prem[0])?;
            ensure(same(prem[0].antecedent(), &plus(&rest, &[a.clone(), b.clone()])), || "premise antecedent mismatch".into())
        }
        Rule::TensR => {
            arity(prem, 2)?;
            let (a, b) = bin_parts(p, BinOp::Tensor).ok_or("principal is not a tensor")?;
            on_right()?;
            ensure(prem[0].stoup() == Some(a) && prem[1].stoup() == Some(b), || "premise stoups mismatch".into())?;
            ensure(same(&plus(prem[0].antecedent(), prem[1].antecedent()), g), || "contexts do not add up".into())
        }
        Rule::WithL1 | Rule::WithL2 => {
            arity(prem, 1)?;
            let (a, b) = bin_parts(p, BinOp::With).ok_or("principal is not a with")?;
            let pick = if rule == Rule::WithL1 { a } else { b };
            let rest = in_left()?;
            same_stoup(prem[0])?;
            ensure(same(prem[0].antecedent(), &plus(&rest, std::slice::from_ref(pick))), || "premise antecedent mismatch".into())
        }
        Rule::WithR => {
            arity(prem, 2)?;
            let (a, b) = bin_parts(p, BinOp::With).ok_or("principal is not a with")?;
            on_right()?;
            ensure(prem[0].stoup() == Some(a) && prem[1].stoup() == Some(b), || "premise stoups mismatch".into())?;
            ensure(same(prem[0].antecedent(), g) && same(prem[1].antecedent(), g), || "contexts must be shared".into())
        }
        Rule::PlusL => {
            arity(prem, 2)?;
            let (a, b) = bin_parts(p, BinOp::Plus).ok_or("principal is not a plus")?;
            let rest = in_left()?;
            same_stoup(prem[0])?;
            same_stoup(prem[1])?;
            ensure(
                same(prem[0].antecedent(), &plus(&rest, std::slice::from_ref(a)))
                    && same(prem[1].antecedent(), &plus(&rest, std::slice::from_ref(b))),
                || "premise antecedents mismatch".into(),
            )
        }
        Rule::PlusR1 | Rule::PlusR2 => {
            arity(prem, 1)?;
            let (a, b) = bin_parts(p, BinOp::Plus).ok_or("principal is not a plus")?;
            on_right()?;
            let pick = if rule == Rule::PlusR1 { a } else { b };
            ensure(prem[0].stoup() == Some(pick) && same(prem[0].antecedent(), g), || "premise mismatch".into())
        }
        Rule::BangD => {
            arity(prem, 1)?;
            need_exp(sys, sys.exponentials == Exponentials::Standard, rule)?;
            let a = un_body(p, UnOp::Bang).ok_or("principal is not a !-formula")?;
            let rest = in_left()?;
            same_stoup(prem[0])?;
            ensure(same(prem[0].antecedent(), &plus(&rest, std::slice::from_ref(a))), || "premise antecedent mismatch".into())
        }
        Rule::BangP => {
            arity(prem, 1)?;
            need_exp(sys, sys.exponentials == Exponentials::Standard, rule)?;
            let a = un_body(p, UnOp::Bang).ok_or("principal is not a !-formula")?;
            on_right()?;
            ensure(g.iter().all(Formula::is_bang), || "antecedent is not all banged".into())?;
            ensure(prem[0].stoup() == Some(a) && same(prem[0].antecedent(), g), || "premise mismatch".into())
        }
        Rule::BangC => {
            arity(prem, 1)?;
            need_exp(sys, sys.exponentials != Exponentials::None, rule)?;
            ensure(p.is_bang(), || "principal is not a !-formula".into())?;
            in_left()?;
            same_stoup(prem[0])?;
            ensure(same(prem[0].antecedent(), &plus(g, std::slice::from_ref(p))), || "premise must hold one more copy".into())
        }
        Rule::BangW => {
            arity(prem, 1)?;
            need_exp(sys, sys.exponentials != Exponentials::None, rule)?;
            ensure(p.is_bang(), || "principal is not a !-formula".into())?;
            let rest = in_left()?;
            same_stoup(prem[0])?;
            ensure(same(prem[0].antecedent(), &rest), || "premise antecedent mismatch".into())
        }
        Rule::W => {
            arity(prem, 1)?;
            need_exp(sys, sys.weakening, rule)?;
            let rest = in_left()?;
            same_stoup(prem[0])?;
            ensure(same(prem[0].antecedent(), &rest), || "premise antecedent mismatch".into())
        }
        Rule::WPrime => {
            arity(prem, 1)?;
            need_exp(sys, sys.right_weakening, rule)?;
            on_right()?;
            ensure(prem[0].stoup().is_none() && same(prem[0].antecedent(), g), || "premise is not G |-".into())
        }
        Rule::BangF => {
            arity(prem, 1)?;
            need_exp(sys, sys.exponentials == Exponentials::Functorial, rule)?;
            let a = un_body(p, UnOp::Bang).ok_or("principal is not a !-formula")?;
            on_right()?;
            let bodies: Option<Vec<Formula>> = g.iter().map(|f| un_body(f, UnOp::Bang).cloned()).collect();
            let bodies = bodies.ok_or("antecedent is not all banged")?;
            ensure(prem[0].stoup() == Some(a) && same(prem[0].antecedent(), &sorted(bodies)), || "premise mismatch".into())
        }
        Rule::LalBang => {
            arity(prem, 1)?;
            need_exp(sys, sys.exponentials == Exponentials::Light, rule)?;
            let a = un_body(p, UnOp::Bang).ok_or("principal is not a !-formula")?;
            on_right()?;
            ensure(g.len() <= 1, || "at most one antecedent formula".into())?;
            let bodies: Option<Vec<Formula>> = g.iter().map(|f| un_body(f, UnOp::Bang).cloned()).collect();
            let bodies = bodies.ok_or("antecedent is not banged")?;
            ensure(prem[0].stoup() == Some(a) && same(prem[0].antecedent(), &bodies), || "premise mismatch".into())
        }
        Rule::LalPara => {
            arity(prem, 1)?;
            need_exp(sys, sys.exponentials == Exponentials::Light, rule)?;
            let a = un_body(p, UnOp::Para).ok_or("principal is not a $-formula")?;
            on_right()?;
            let bodies: Option<Vec<Formula>> = g
                .iter()
                .map(|f| un_body(f, UnOp::Bang).or_else(|| un_body(f, UnOp::Para)).cloned())
                .collect();
            let bodies = bodies.ok_or("antecedent must consist of ! and $ formulas")?;
            ensure(prem[0].stoup() == Some(a) && same(prem[0].antecedent(), &sorted(bodies)), || "premise mismatch".into())
        }
        other => Err(format!("{other} is not an intuitionistic rule")),
    }
}

fn check_cls(sys: &System, c: &Sequent, rule: Rule, p: &Formula, prem: &[&Sequent]) -> Check {
    let g = c.succedent();
    let rest = || multiset_minus(g, std::slice::from_ref(p)).ok_or_else(|| format!("{p} is not in the sequent"));
    match rule {
        Rule::Init => {
            arity(prem, 0)?;
            let pair = sorted(vec![p.clone(), dual_unchecked(p)]);
            ensure(same(g, &pair), || "not of the form |- A, A^".into())
        }
        Rule::Axiom => {
            arity(prem, 0)?;
            ensure(g == std::slice::from_ref(p), || "not of the form |- B".into())?;
            ensure(sys.axioms.contains(p), || format!("{p} is not an axiom"))
        }
        Rule::One => {
            arity(prem, 0)?;
            ensure(g == [Formula::one()] && *p == Formula::one(), || "not |- 1".into())
        }
        Rule::Top => {
            arity(prem, 0)?;
            ensure(*p == Formula::top(), || "principal is not top".into())?;
            rest().map(|_| ())
        }
        Rule::Cut => {
            arity(prem, 2)?;
            let l = remove_one(prem[0].succedent(), p).ok_or("left premise lacks the cut formula")?;
            let r = remove_one(prem[1].succedent(), &dual_unchecked(p)).ok_or("right premise lacks the dual cut formula")?;
            ensure(same(&plus(&l, &r), g), || "contexts do not add up".into())
        }
        Rule::Bot => {
            arity(prem, 1)?;
            ensure(*p == Formula::bot(), || "principal is not bot".into())?;
            ensure(same(prem[0].succedent(), &rest()?), || "premise mismatch".into())
        }
        Rule::Tens => {
            arity(prem, 2)?;
            let (a, b) = bin_parts(p, BinOp::Tensor).ok_or("principal is not a tensor")?;
            let r = rest()?;
            let l0 = remove_one(prem[0].succedent(), a).ok_or("left premise lacks the left factor")?;
            let l1 = remove_one(prem[1].succedent(), b).ok_or("right premise lacks the right factor")?;
            ensure(same(&plus(&l0, &l1), &r), || "contexts do not add up".into())
        }
        Rule::Par => {
            arity(prem, 1)?;
            let (a, b) = bin_parts(p, BinOp::Par).ok_or("principal is not a par")?;
            ensure(same(prem[0].succedent(), &plus(&rest()?, &[a.clone(), b.clone()])), || "premise mismatch".into())
        }
        Rule::With => {
            arity(prem, 2)?;
            let (a, b) = bin_parts(p, BinOp::With).ok_or("principal is not a with")?;
            let r = rest()?;
            ensure(
                same(prem[0].succedent(), &plus(&r, std::slice::from_ref(a)))
                    && same(prem[1].succedent(), &plus(&r, std::slice::from_ref(b))),
                || "premise mismatch".into(),
            )
        }
        Rule::Plus1 | Rule::Plus2 => {
            arity(prem, 1)?;
            let (a, b) = bin_parts(p, BinOp::Plus).ok_or("principal is not a plus")?;
            let pick = if rule == Rule::Plus1 { a } else { b };
            ensure(same(prem[0].succedent(), &plus(&rest()?, std::slice::from_ref(pick))), || "premise mismatch".into())
        }
        Rule::Why => {
            arity(prem, 1)?;
            need_exp(sys, sys.exponentials == Exponentials::Standard, rule)?;
            let a = un_body(p, UnOp::WhyNot).ok_or("principal is not a ?-formula")?;
            ensure(same(prem[0].succedent(), &plus(&rest()?, std::slice::from_ref(a))), || "premise mismatch".into())
        }
        Rule::Bang => {
            arity(prem, 1)?;
            need_exp(sys, sys.exponentials == Exponentials::Standard, rule)?;
            let a = un_body(p, UnOp::Bang).ok_or("principal is not a !-formula")?;
            let r = rest()?;
            ensure(r.iter().all(Formula::is_why_not), || "context is not all ?-formulas".into())?;
            ensure(same(prem[0].succedent(), &plus(&r, std::slice::from_ref(a))), || "premise mismatch".into())
        }
        Rule::F => {
            arity(prem, 1)?;
            need_exp(sys, sys.exponentials == Exponentials::Functorial, rule)?;
            let a = un_body(p, UnOp::Bang).ok_or("principal is not a !-formula")?;
            let r = rest()?;
            let bodies: Option<Vec<Formula>> = r.iter().map(|f| un_body(f, UnOp::WhyNot).cloned()).collect();
            let mut bodies = bodies.ok_or("context is not all ?-formulas")?;
            bodies.push(a.clone());
            ensure(same(prem[0].succedent(), &sorted(bodies)), || "premise mismatch".into())
        }
        Rule::W => {
            arity(prem, 1)?;
            need_exp(sys, sys.weakening, rule)?;
            ensure(same(prem[0].succedent(), &rest()?), || "premise mismatch".into())
        }
        Rule::WhyC => {
            arity(prem, 1)?;
            need_exp(sys, sys.exponentials != Exponentials::None, rule)?;
            ensure(p.is_why_not(), || "principal is not a ?-formula".into())?;
            rest()?;
            ensure(same(prem[0].succedent(), &plus(g, std::slice::from_ref(p))), || "premise must hold one more copy".into())
        }
        Rule::WhyW => {
            arity(prem, 1)?;
            need_exp(sys, sys.exponentials != Exponentials::None, rule)?;
            ensure(p.is_why_not(), || "principal is not a ?-formula".into())?;
            ensure(same(prem[0].succedent(), &rest()?), || "premise mismatch".into())
        }
        other => Err(format!("{other} is not a classical rule")),
    }
}

/// `a - b` as multisets, ignoring elements of `b` missing from `a`.
fn difference(a: &[Formula], b: &[Formula]) -> Vec<Formula> {
    let mut out = a.to_vec();
    for x in b {
        if let Some(i) = out.iter().position(|y| y == x) {
            out.remove(i);
        }
    }
    out
}

fn with_formulas(side: Side, fs: Vec<Formula>, stoup: Option<Formula>) -> Sequent {
    match side {
        Side::Intuitionistic => Sequent::intuitionistic(fs, stoup),
        Side::Classical => Sequent::classical(fs),
    }
}

fn side_formulas(s: &Sequent) -> &[Formula] {
    if s.is_classical() {
        s.succedent()
    } else {
        s.antecedent()
    }
}

/// Extends a proof of `t.sequent` to a proof of `target` by contracting
/// surplus exponential copies, then right weakening, then weakening.
pub fn reshape(sys: &System, t: Arc<ProofTree>, target: &Sequent) -> Result<Arc<ProofTree>, String> {
    let side = sys.side;
    let cls = side == Side::Classical;
    let tgt = side_formulas(target).to_vec();
    let mut cur = side_formulas(&t.sequent).to_vec();
    let mut stoup = t.sequent.stoup().cloned();
    let mut tree = t;
    for x in difference(&cur, &tgt) {
        let exp = if cls { x.is_why_not() } else { x.is_bang() };
        if !exp || !tgt.contains(&x) {
            return Err(format!("cannot contract `{x}`"));
        }
        cur = remove_one(&cur, &x).expect("surplus element");
        let rule = if cls { Rule::WhyC } else { Rule::BangC };
        tree = Arc::new(ProofTree::node(with_formulas(side, cur.clone(), stoup.clone()), rule, x, vec![tree]));
    }
    let want = target.stoup().cloned();
    if stoup != want {
        match (&stoup, &want) {
            (None, Some(a)) if sys.right_weakening => {
                stoup = want.clone();
                tree = Arc::new(ProofTree::node(with_formulas(side, cur.clone(), stoup.clone()), Rule::WPrime, a.clone(), vec![tree]));
            }
            _ => return Err("stoups differ".into()),
        }
    }
    for x in difference(&tgt, &cur) {
        let exp = if cls { x.is_why_not() } else { x.is_bang() };
        let rule = match (sys.weakening, exp, cls) {
            (true, _, _) => Rule::W,
            (false, true, true) => Rule::WhyW,
            (false, true, false) => Rule::BangW,
            _ => return Err(format!("cannot weaken `{x}`")),
        };
        cur = plus(&cur, std::slice::from_ref(&x));
        tree = Arc::new(ProofTree::node(with_formulas(side, cur.clone(), stoup.clone()), rule, x, vec![tree]));
    }
    Ok(tree)
}

// ---------------------------------------------------------------------------
// one-step enumeration

/// One backward rule application: the rule, its principal formula and the
/// premises.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Application {
    pub rule: Rule,
    pub principal: Formula,
    pub premises: Vec<Sequent>,
}

/// All ways of splitting a sorted multiset in two, by multiplicity.
pub fn multiset_splits(ms: &[Formula]) -> Vec<(Vec<Formula>, Vec<Formula>)> {
    let mut groups: Vec<(&Formula, usize)> = Vec::new();
    for f in ms {
        match groups.last_mut() {
            Some((g, n)) if *g == f => *n += 1,
            _ => groups.push((f, 1)),
        }
    }
    let mut out = vec![(Vec::new(), Vec::new())];
    for (f, n) in groups {
        let mut next = Vec::with_capacity(out.len() * (n + 1));
        for (l, r) in &out {
            for k in 0..=n {
                let mut l2: Vec<Formula> = l.clone();
                let mut r2: Vec<Formula> = r.clone();
                l2.extend(std::iter::repeat_n(f.clone(), k));
                r2.extend(std::iter::repeat_n(f.clone(), n - k));
                next.push((l2, r2));
            }
        }
        out = next;
    }
    out
}

fn distinct(ms: &[Formula]) -> Vec<&Formula> {
    let mut v: Vec<&Formula> = ms.iter().collect();
    v.dedup();
    v
}

/// Every cut-free backward rule application to `goal` in `sys`, including
/// weakening and contraction steps.
pub fn applicable_rules(sys: &System, goal: &Sequent) -> Result<Vec<Application>, CalcError> {
    sys.check_sequent(goal)?;
    let mut out = Vec::new();
    let mut push = |rule: Rule, principal: &Formula, premises: Vec<Sequent>| {
        out.push(Application { rule, principal: principal.clone(), premises });
    };
    match sys.side {
        Side::Intuitionistic => {
            let g = goal.antecedent();
            let pi = goal.stoup().cloned();
            let int = |a: Vec<Formula>, s: Option<Formula>| Sequent::intuitionistic(a, s);
            if let Some(a) = &pi {
                if g == std::slice::from_ref(a) {
                    push(Rule::Init, a, vec![]);
                }
                if g.is_empty() && sys.axioms.contains(a) {
                    push(Rule::Axiom, a, vec![]);
                }
                if g.is_empty() && *a == Formula::one() {
                    push(Rule::OneR, a, vec![]);
                }
                if *a == Formula::top() {
                    push(Rule::TopR, a, vec![]);
                }
            }
            if pi.is_none() && g == [Formula::bot()] {
                push(Rule::BotL, &Formula::bot(), vec![]);
            }
            for f in distinct(g) {
                let rest = remove_one(g, f).expect("member");
                let with = |extra: &[Formula]| plus(&rest, extra);
                if sys.weakening {
                    push(Rule::W, f, vec![int(rest.clone(), pi.clone())]);
                } else if f.is_bang() {
                    push(Rule::BangW, f, vec![int(rest.clone(), pi.clone())]);
                }
                match f {
                    Formula::Const(Const::Zero) => push(Rule::ZeroL, f, vec![]),
                    Formula::Const(Const::One) => push(Rule::OneL, f, vec![int(rest.clone(), pi.clone())]),
                    Formula::Bin(BinOp::Lolli, a, b) => {
                        for (l, r) in multiset_splits(&rest) {
                            push(
                                Rule::ImpL,
                                f,
                                vec![int(l, Some((**a).clone())), int(plus(&r, &[(**b).clone()]), pi.clone())],
                            );
                        }
                    }
                    Formula::Bin(BinOp::Tensor, a, b) => {
                        push(Rule::TensL, f, vec![int(with(&[(**a).clone(), (**b).clone()]), pi.clone())])
                    }
                    Formula::Bin(BinOp::With, a, b) => {
                        push(Rule::WithL1, f, vec![int(with(&[(**a).clone()]), pi.clone())]);
                        push(Rule::WithL2, f, vec![int(with(&[(**b).clone()]), pi.clone())]);
                    }
                    Formula::Bin(BinOp::Plus, a, b) => push(
                        Rule::PlusL,
                        f,
                        vec![int(with(&[(**a).clone()]), pi.clone()), int(with(&[(**b).clone()]), pi.clone())],
                    ),
                    Formula::Un(UnOp::Bang, a) => {
                        if sys.exponentials == Exponentials::Standard {
                            push(Rule::BangD, f, vec![int(with(&[(**a).clone()]), pi.clone())]);
                        }
                        if sys.exponentials != Exponentials::None {
                            push(Rule::BangC, f, vec![int(plus(g, std::slice::from_ref(f)), pi.clone())]);
                        }
                    }
                    _ => {}
                }
            }
            if let Some(a) = &pi {
                if sys.right_weakening {
                    push(Rule::WPrime, a, vec![int(g.to_vec(), None)]);
                }
                let all_bang = g.iter().all(Formula::is_bang);
                let bodies = || -> Vec<Formula> { g.iter().filter_map(|f| f.body().cloned()).collect() };
                match a {
                    Formula::Const(Const::Bot) => push(Rule::BotR, a, vec![int(g.to_vec(), None)]),
                    Formula::Bin(BinOp::Lolli, x, y) => {
                        push(Rule::ImpR, a, vec![int(plus(g, &[(**x).clone()]), Some((**y).clone()))])
                    }
                    Formula::Bin(BinOp::Tensor, x, y) => {
                        for (l, r) in multiset_splits(g) {
                            push(Rule::TensR, a, vec![int(l, Some((**x).clone())), int(r, Some((**y).clone()))]);
                        }
                    }
                    Formula::Bin(BinOp::With, x, y) => push(
                        Rule::WithR,
                        a,
                        vec![int(g.to_vec(), Some((**x).clone())), int(g.to_vec(), Some((**y).clone()))],
                    ),
                    Formula::Bin(BinOp::Plus, x, y) => {
                        push(Rule::PlusR1, a, vec![int(g.to_vec(), Some((**x).clone()))]);
                        push(Rule::PlusR2, a, vec![int(g.to_vec(), Some((**y).clone()))]);
                    }
                    Formula::Un(UnOp::Bang, x) if all_bang => match sys.exponentials {
                        Exponentials::Standard => push(Rule::BangP, a, vec![int(g.to_vec(), Some((**x).clone()))]),
                        Exponentials::Functorial => push(Rule::BangF, a, vec![int(bodies(), Some((**x).clone()))]),
                        Exponentials::Light if g.len() <= 1 => {
                            push(Rule::LalBang, a, vec![int(bodies(), Some((**x).clone()))])
                        }
                        _ => {}
                    },
                    Formula::Un(UnOp::Para, x)
                        if sys.exponentials == Exponentials::Light && g.iter().all(|f| f.is_bang() || f.is_para()) =>
                    {
                        push(Rule::LalPara, a, vec![int(bodies(), Some((**x).clone()))])
                    }
                    _ => {}
                }
            }
        }
        Side::Classical => {
            let g = goal.succedent();
            let cls = Sequent::classical;
            if g.len() == 2 && dual_unchecked(&g[0]) == g[1] {
                push(Rule::Init, &g[0], vec![]);
            }
            if g.len() == 1 && sys.axioms.contains(&g[0]) {
                push(Rule::Axiom, &g[0], vec![]);
            }
            if g == [Formula::one()] {
                push(Rule::One, &g[0], vec![]);
            }
            for f in distinct(g) {
                let rest = remove_one(g, f).expect("member");
                let with = |extra: &[Formula]| plus(&rest, extra);
                if sys.weakening {
                    push(Rule::W, f, vec![cls(rest.clone())]);
                } else if f.is_why_not() {
                    push(Rule::WhyW, f, vec![cls(rest.clone())]);
                }
                match f {
                    Formula::Const(Const::Top) => push(Rule::Top, f, vec![]),
                    Formula::Const(Const::Bot) => push(Rule::Bot, f, vec![cls(rest.clone())]),
                    Formula::Bin(BinOp::Tensor, a, b) => {
                        for (l, r) in multiset_splits(&rest) {
                            push(Rule::Tens, f, vec![cls(plus(&l, &[(**a).clone()])), cls(plus(&r, &[(**b).clone()]))]);
                        }
                    }
                    Formula::Bin(BinOp::Par, a, b) => push(Rule::Par, f, vec![cls(with(&[(**a).clone(), (**b).clone()]))]),
                    Formula::Bin(BinOp::With, a, b) => {
                        push(Rule::With, f, vec![cls(with(&[(**a).clone()])), cls(with(&[(**b).clone()]))])
                    }
                    Formula::Bin(BinOp::Plus, a, b) => {
                        push(Rule::Plus1, f, vec![cls(with(&[(**a).clone()]))]);
                        push(Rule::Plus2, f, vec![cls(with(&[(**b).clone()]))]);
                    }
                    Formula::Un(UnOp::WhyNot, a) => {
                        if sys.exponentials == Exponentials::Standard {
                            push(Rule::Why, f, vec![cls(with(&[(**a).clone()]))]);
                        }
                        if sys.exponentials != Exponentials::None {
                            push(Rule::WhyC, f, vec![cls(plus(g, std::slice::from_ref(f)))]);
                        }
                    }
                    Formula::Un(UnOp::Bang, a) if rest.iter().all(Formula::is_why_not) => match sys.exponentials {
                        Exponentials::Standard => push(Rule::Bang, f, vec![cls(with(&[(**a).clone()]))]),
                        Exponentials::Functorial => {
                            let mut body: Vec<Formula> = rest.iter().filter_map(|x| x.body().cloned()).collect();
                            body.push((**a).clone());
                            push(Rule::F, f, vec![cls(body)]);
                        }
                        _ => {}
                    },
                    _ => {}
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulas::{parse_formula, parse_sequent};

    fn iseq(s: &str) -> Sequent {
        parse_sequent(s, Polarity::Intuitionistic).unwrap()
    }

    fn cseq(s: &str) -> Sequent {
        parse_sequent(s, Polarity::Classical).unwrap()
    }

    fn ifm(s: &str) -> Formula {
        parse_formula(s, Polarity::Intuitionistic).unwrap()
    }

    fn has(apps: &[Application], rule: Rule, prem: &[Sequent]) -> bool {
        apps.iter().any(|a| a.rule == rule && a.premises == prem)
    }

    #[test]
    fn catalogue_languages() {
        assert!(System::flew().right_weakening);
        assert!(!System::flei().right_weakening);
        assert_eq!(System::flew().language, System::flei().language);
        assert_eq!(System::bck().language, Fragment::of(&[Connective::Lolli]));
        assert!(!System::bci().weakening);
        assert!(!System::illw().has(Connective::Bot));
        assert_eq!(System::iezw().exponentials, Exponentials::Functorial);
        assert_eq!(System::ilal().exponentials, Exponentials::Light);
    }

    #[test]
    fn parse_names() {
        assert_eq!(System::parse("BCK").unwrap(), System::bck());
        assert_eq!(System::parse("ILZW'").unwrap(), System::ilzw_prime());
        assert_eq!(System::parse("FLplus_ei").unwrap(), System::flplus_ei());
        let s = System::parse("{-o,!}-ILLW").unwrap();
        assert_eq!(s.language, Fragment::of(&[Connective::Lolli, Connective::Bang]));
        assert_eq!(s.to_string(), "{-o,!}-ILLW");
        assert!(System::parse("XYZ").is_err());
    }

    #[test]
    fn bck_identity_applications() {
        let apps = applicable_rules(&System::bck(), &iseq("p |- p")).unwrap();
        assert!(has(&apps, Rule::Init, &[]));
        assert!(has(&apps, Rule::W, &[iseq("|- p")]));
    }

    #[test]
    fn bck_implication_right_is_unique() {
        let apps = applicable_rules(&System::bck(), &iseq("|- p -o p")).unwrap();
        assert_eq!(apps.len(), 1);
        assert!(has(&apps, Rule::ImpR, &[iseq("p |- p")]));
    }

    #[test]
    fn llw_identity_applications() {
        let apps = applicable_rules(&System::llw(), &cseq("|- p, p^")).unwrap();
        assert!(has(&apps, Rule::Init, &[]));
        assert!(has(&apps, Rule::W, &[cseq("|- p")]));
        assert!(has(&apps, Rule::W, &[cseq("|- p^")]));
    }

    #[test]
    fn outside_language_is_an_error() {
        assert!(applicable_rules(&System::bck(), &iseq("|- p * q")).is_err());
    }

    #[test]
    fn init_checks() {
        let t = ProofTree::leaf(iseq("p |- p"), Rule::Init, ifm("p"));
        assert!(check_proof(&System::bck(), &t, false).is_ok());
        let bad = ProofTree::leaf(iseq("p |- q"), Rule::Init, ifm("p"));
        let v = check_proof(&System::bck(), &bad, false).unwrap_err();
        assert!(v.path.is_empty());
    }

    #[test]
    fn every_application_checks() {
        let sys = System::ilzw_prime();
        for goal in ["!p, p -o q, q * r |- q & (p + r)", "bot, 1, 0 |- !p", "!p, !q |- !(p * q)"] {
            let goal = iseq(goal);
            for app in applicable_rules(&sys, &goal).unwrap() {
                let prem: Vec<&Sequent> = app.premises.iter().collect();
                check_step(&sys, &goal, app.rule, &app.principal, &prem).unwrap_or_else(|e| panic!("{:?}: {e}", app.rule));
            }
        }
        let sys = System::llw();
        let goal = cseq("|- ?p^, p * q, q^ | 1, bot, top, !q");
        for app in applicable_rules(&sys, &goal).unwrap() {
            let prem: Vec<&Sequent> = app.premises.iter().collect();
            check_step(&sys, &goal, app.rule, &app.principal, &prem).unwrap_or_else(|e| panic!("{:?}: {e}", app.rule));
        }
    }

    #[test]
    fn axiom_needs_phi() {
        let sys = System::bck().with_axioms(&[ifm("p")]).unwrap();
        let t = ProofTree::leaf(iseq("|- p"), Rule::Axiom, ifm("p"));
        assert!(check_proof(&sys, &t, false).is_ok());
        assert!(check_proof(&System::bck(), &t, false).is_err());
        assert!(System::bck().with_axioms(&[ifm("p * q")]).is_err());
        assert_eq!(System::flew().with_axioms(&[]).unwrap(), System::flew());
    }

    #[test]
    fn cut_gating() {
        let sys = System::bck();
        let left = Arc::new(ProofTree::leaf(iseq("p |- p"), Rule::Init, ifm("p")));
        let right = Arc::new(ProofTree::leaf(iseq("p |- p"), Rule::Init, ifm("p")));
        let t = ProofTree::node(iseq("p |- p"), Rule::Cut, ifm("p"), vec![left, right]);
        assert!(check_proof(&sys, &t, false).is_err());
        assert!(check_proof(&sys, &t, true).is_ok());
    }

    #[test]
    fn json_round_trip() {
        let leaf = Arc::new(ProofTree::leaf(iseq("p |- p"), Rule::Init, ifm("p")));
        let t = ProofTree::node(iseq("|- p -o p"), Rule::ImpR, ifm("p -o p"), vec![leaf]);
        let v = t.to_json();
        assert_eq!(v["rule"], "impR");
        let back = ProofTree::from_json(&v, Polarity::Intuitionistic).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn splits_by_multiplicity() {
        let ms = sorted(vec![ifm("p"), ifm("p"), ifm("q")]);
        assert_eq!(multiset_splits(&ms).len(), 6);
    }
}
