//! Formulas, sequents, duality and the textual syntax.
//!
//! Grammar (ASCII; UTF-8 symbols are accepted as aliases):
//!
//! ```text
//! formula := add ("-o" formula)?
//! add     := mul (("&" | "+") mul)*
//! mul     := unary (("*" | "|") unary)*
//! unary   := ("!" | "?" | "$") unary | atom
//! atom    := ident "^"? | "1" | "0" | "top" | "bot" | "(" formula ")"
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Const {
    One,
    Top,
    Bot,
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BinOp {
    Tensor,
    Par,
    With,
    Plus,
    Lolli,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UnOp {
    Bang,
    WhyNot,
    /// The paragraph modality of light affine logic.
    Para,
}

/// A propositional formula. The derived ordering is the canonical total
/// order used to sort multisets.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Var(Arc<str>),
    /// `p^`: only ever applied to a variable.
    DualVar(Arc<str>),
    Const(Const),
    Bin(BinOp, Arc<Formula>, Arc<Formula>),
    Un(UnOp, Arc<Formula>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarity {
    Intuitionistic,
    Classical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Connective {
    Tensor,
    Par,
    With,
    Plus,
    Lolli,
    Bang,
    WhyNot,
    Para,
    One,
    Top,
    Bot,
    Zero,
}

impl Connective {
    pub const ALL: [Connective; 12] = [
        Connective::Tensor,
        Connective::Par,
        Connective::With,
        Connective::Plus,
        Connective::Lolli,
        Connective::Bang,
        Connective::WhyNot,
        Connective::Para,
        Connective::One,
        Connective::Top,
        Connective::Bot,
        Connective::Zero,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Connective::Tensor => "*",
            Connective::Par => "|",
            Connective::With => "&",
            Connective::Plus => "+",
            Connective::Lolli => "-o",
            Connective::Bang => "!",
            Connective::WhyNot => "?",
            Connective::Para => "$",
            Connective::One => "1",
            Connective::Top => "top",
            Connective::Bot => "bot",
            Connective::Zero => "0",
        }
    }

    fn bit(self) -> u16 {
        1 << (self as u16)
    }
}

/// A set of connectives `K`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fragment(u16);

impl Fragment {
    pub const fn empty() -> Self {
        Fragment(0)
    }

    pub fn of(cs: &[Connective]) -> Self {
        Fragment(cs.iter().fold(0, |acc, c| acc | c.bit()))
    }

    pub fn contains(self, c: Connective) -> bool {
        self.0 & c.bit() != 0
    }

    pub fn with(self, c: Connective) -> Self {
        Fragment(self.0 | c.bit())
    }

    pub fn without(self, c: Connective) -> Self {
        Fragment(self.0 & !c.bit())
    }

    pub fn intersect(self, other: Fragment) -> Self {
        Fragment(self.0 & other.0)
    }

    pub fn is_subset_of(self, other: Fragment) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn connectives(self) -> impl Iterator<Item = Connective> {
        Connective::ALL.into_iter().filter(move |c| self.contains(*c))
    }

    /// The full intuitionistic language (without the paragraph).
    pub fn intuitionistic() -> Self {
        use Connective::*;
        Fragment::of(&[Tensor, Lolli, With, Plus, Bang, One, Top, Bot, Zero])
    }

    pub fn classical() -> Self {
        use Connective::*;
        Fragment::of(&[Tensor, Par, With, Plus, Bang, WhyNot, One, Top, Bot, Zero])
    }

    /// Parses `{*, -o, !}` style lists (braces optional).
    pub fn parse(text: &str) -> Result<Self, FormulaError> {
        let inner = text.trim().trim_start_matches('{').trim_end_matches('}');
        let mut k = Fragment::empty();
        for item in inner.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let c = match item {
                "*" | "⊗" => Connective::Tensor,
                "|" | "⅋" => Connective::Par,
                "&" => Connective::With,
                "+" | "⊕" => Connective::Plus,
                "-o" | "⊸" => Connective::Lolli,
                "!" => Connective::Bang,
                "?" => Connective::WhyNot,
                "$" | "§" => Connective::Para,
                "1" => Connective::One,
                "top" | "⊤" => Connective::Top,
                "bot" | "⊥" => Connective::Bot,
                "0" => Connective::Zero,
                other => {
                    return Err(FormulaError::Syntax {
                        pos: 0,
                        msg: format!("unknown connective `{other}`"),
                    })
                }
            };
            k = k.with(c);
        }
        if k.is_empty() {
            return Err(FormulaError::Syntax { pos: 0, msg: "empty connective set".into() });
        }
        Ok(k)
    }
}

impl fmt::Debug for Fragment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Fragment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = self.connectives().map(Connective::symbol).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("polarity violation: {0}")]
    Polarity(String),
    #[error("formula `{0}` is outside the language {1}")]
    Fragment(String, Fragment),
}

impl Formula {
    pub fn var(name: &str) -> Formula {
        Formula::Var(Arc::from(name))
    }

    pub fn dual_var(name: &str) -> Formula {
        Formula::DualVar(Arc::from(name))
    }

    pub fn one() -> Formula {
        Formula::Const(Const::One)
    }

    pub fn top() -> Formula {
        Formula::Const(Const::Top)
    }

    pub fn bot() -> Formula {
        Formula::Const(Const::Bot)
    }

    pub fn zero() -> Formula {
        Formula::Const(Const::Zero)
    }

    pub fn bin(op: BinOp, a: Formula, b: Formula) -> Formula {
        Formula::Bin(op, Arc::new(a), Arc::new(b))
    }

    pub fn un(op: UnOp, a: Formula) -> Formula {
        Formula::Un(op, Arc::new(a))
    }

    pub fn tensor(a: Formula, b: Formula) -> Formula {
        Formula::bin(BinOp::Tensor, a, b)
    }

    pub fn par(a: Formula, b: Formula) -> Formula {
        Formula::bin(BinOp::Par, a, b)
    }

    pub fn with(a: Formula, b: Formula) -> Formula {
        Formula::bin(BinOp::With, a, b)
    }

    pub fn plus(a: Formula, b: Formula) -> Formula {
        Formula::bin(BinOp::Plus, a, b)
    }

    pub fn lolli(a: Formula, b: Formula) -> Formula {
        Formula::bin(BinOp::Lolli, a, b)
    }

    pub fn bang(a: Formula) -> Formula {
        Formula::un(UnOp::Bang, a)
    }

    pub fn why_not(a: Formula) -> Formula {
        Formula::un(UnOp::WhyNot, a)
    }

    pub fn para(a: Formula) -> Formula {
        Formula::un(UnOp::Para, a)
    }

    /// The top-level connective, `None` for literals.
    pub fn connective(&self) -> Option<Connective> {
        match self {
            Formula::Var(_) | Formula::DualVar(_) => None,
            Formula::Const(c) => Some(match c {
                Const::One => Connective::One,
                Const::Top => Connective::Top,
                Const::Bot => Connective::Bot,
                Const::Zero => Connective::Zero,
            }),
            Formula::Bin(op, _, _) => Some(match op {
                BinOp::Tensor => Connective::Tensor,
                BinOp::Par => Connective::Par,
                BinOp::With => Connective::With,
                BinOp::Plus => Connective::Plus,
                BinOp::Lolli => Connective::Lolli,
            }),
            Formula::Un(op, _) => Some(match op {
                UnOp::Bang => Connective::Bang,
                UnOp::WhyNot => Connective::WhyNot,
                UnOp::Para => Connective::Para,
            }),
        }
    }

    pub fn is_bang(&self) -> bool {
        matches!(self, Formula::Un(UnOp::Bang, _))
    }

    pub fn is_why_not(&self) -> bool {
        matches!(self, Formula::Un(UnOp::WhyNot, _))
    }

    pub fn is_para(&self) -> bool {
        matches!(self, Formula::Un(UnOp::Para, _))
    }

    /// Body of a unary formula.
    pub fn body(&self) -> Option<&Formula> {
        match self {
            Formula::Un(_, b) => Some(b),
            _ => None,
        }
    }

    /// Number of symbol occurrences (atoms, constants and connectives).
    pub fn size(&self) -> usize {
        match self {
            Formula::Var(_) | Formula::DualVar(_) | Formula::Const(_) => 1,
            Formula::Bin(_, a, b) => 1 + a.size() + b.size(),
            Formula::Un(_, a) => 1 + a.size(),
        }
    }

    /// Number of connective occurrences, constants excluded.
    pub fn connective_count(&self) -> usize {
        match self {
            Formula::Var(_) | Formula::DualVar(_) | Formula::Const(_) => 0,
            Formula::Bin(_, a, b) => 1 + a.connective_count() + b.connective_count(),
            Formula::Un(_, a) => 1 + a.connective_count(),
        }
    }

    pub fn connectives_used(&self) -> Fragment {
        let mut k = Fragment::empty();
        self.visit(&mut |g| {
            if let Some(c) = g.connective() {
                k = k.with(c);
            }
        });
        k
    }

    pub fn variables(&self) -> BTreeSet<Arc<str>> {
        let mut out = BTreeSet::new();
        self.visit(&mut |g| match g {
            Formula::Var(n) | Formula::DualVar(n) => {
                out.insert(n.clone());
            }
            _ => {}
        });
        out
    }

    pub fn visit(&self, f: &mut impl FnMut(&Formula)) {
        f(self);
        match self {
            Formula::Bin(_, a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Formula::Un(_, a) => a.visit(f),
            _ => {}
        }
    }

    /// Checks the polarity invariants: no `|`, `?` or duals in intuitionistic
    /// formulas, no `-o` or `$` in classical ones.
    pub fn check_polarity(&self, polarity: Polarity) -> Result<(), FormulaError> {
        let mut bad = None;
        self.visit(&mut |g| {
            if bad.is_some() {
                return;
            }
            let offending = match (polarity, g) {
                (Polarity::Intuitionistic, Formula::DualVar(_)) => Some("dual literal"),
                (Polarity::Intuitionistic, Formula::Bin(BinOp::Par, _, _)) => Some("`|`"),
                (Polarity::Intuitionistic, Formula::Un(UnOp::WhyNot, _)) => Some("`?`"),
                (Polarity::Classical, Formula::Bin(BinOp::Lolli, _, _)) => Some("`-o`"),
                (Polarity::Classical, Formula::Un(UnOp::Para, _)) => Some("`$`"),
                _ => None,
            };
            if let Some(what) = offending {
                bad = Some(what);
            }
        });
        match bad {
            None => Ok(()),
            Some(what) => Err(FormulaError::Polarity(format!(
                "{what} is not allowed in {} formulas",
                match polarity {
                    Polarity::Intuitionistic => "intuitionistic",
                    Polarity::Classical => "classical",
                }
            ))),
        }
    }

    pub fn to_unicode(&self) -> String {
        let mut s = String::new();
        write_formula(self, &mut s, 0, true);
        s
    }
}

/// True iff every connective of `f` lies in `k`.
pub fn in_fragment(f: &Formula, k: Fragment) -> bool {
    f.connectives_used().is_subset_of(k)
}

/// Linear negation of a classical formula.
pub fn dual(a: &Formula) -> Result<Formula, FormulaError> {
    a.check_polarity(Polarity::Classical)?;
    Ok(dual_unchecked(a))
}

pub(crate) fn dual_unchecked(a: &Formula) -> Formula {
    match a {
        Formula::Var(n) => Formula::DualVar(n.clone()),
        Formula::DualVar(n) => Formula::Var(n.clone()),
        Formula::Const(c) => Formula::Const(match c {
            Const::One => Const::Bot,
            Const::Bot => Const::One,
            Const::Top => Const::Zero,
            Const::Zero => Const::Top,
        }),
        Formula::Bin(op, x, y) => {
            let op2 = match op {
                BinOp::Tensor => BinOp::Par,
                BinOp::Par => BinOp::Tensor,
                BinOp::With => BinOp::Plus,
                BinOp::Plus => BinOp::With,
                BinOp::Lolli => unreachable!("-o has no classical dual"),
            };
            Formula::bin(op2, dual_unchecked(x), dual_unchecked(y))
        }
        Formula::Un(op, x) => {
            let op2 = match op {
                UnOp::Bang => UnOp::WhyNot,
                UnOp::WhyNot => UnOp::Bang,
                UnOp::Para => unreachable!("$ has no classical dual"),
            };
            Formula::un(op2, dual_unchecked(x))
        }
    }
}

/// Subformula set `S` with a fixed enumeration, and its `!`-part.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Closure {
    /// `F_1 .. F_d` in canonical order.
    pub formulas: Vec<Formula>,
    pub bang: Vec<Formula>,
}

impl Closure {
    pub fn dim(&self) -> usize {
        self.formulas.len()
    }

    pub fn index_of(&self, f: &Formula) -> Option<usize> {
        self.formulas.binary_search(f).ok()
    }

    pub fn bang_index_of(&self, f: &Formula) -> Option<usize> {
        self.bang.binary_search(f).ok()
    }
}

pub fn subformula_closure(f: &Formula) -> Closure {
    let mut set = BTreeSet::new();
    f.visit(&mut |g| {
        set.insert(g.clone());
    });
    let formulas: Vec<Formula> = set.into_iter().collect();
    let bang = formulas.iter().filter(|g| g.is_bang()).cloned().collect();
    Closure { formulas, bang }
}

// ---------------------------------------------------------------------------
// printing

fn level(f: &Formula) -> u8 {
    match f {
        Formula::Bin(BinOp::Lolli, _, _) => 1,
        Formula::Bin(BinOp::With | BinOp::Plus, _, _) => 2,
        Formula::Bin(BinOp::Tensor | BinOp::Par, _, _) => 3,
        _ => 4,
    }
}

fn write_formula(f: &Formula, out: &mut String, min_level: u8, unicode: bool) {
    let paren = level(f) < min_level;
    if paren {
        out.push('(');
    }
    match f {
        Formula::Var(n) => out.push_str(n),
        Formula::DualVar(n) => {
            out.push_str(n);
            out.push_str(if unicode { "⊥" } else { "^" });
        }
        Formula::Const(c) => out.push_str(match (c, unicode) {
            (Const::One, _) => "1",
            (Const::Zero, _) => "0",
            (Const::Top, false) => "top",
            (Const::Top, true) => "⊤",
            (Const::Bot, false) => "bot",
            (Const::Bot, true) => "⊥",
        }),
        Formula::Bin(op, a, b) => {
            let l = level(f);
            let sym = match (op, unicode) {
                (BinOp::Tensor, false) => " * ",
                (BinOp::Tensor, true) => " ⊗ ",
                (BinOp::Par, false) => " | ",
                (BinOp::Par, true) => " ⅋ ",
                (BinOp::With, _) => " & ",
                (BinOp::Plus, false) => " + ",
                (BinOp::Plus, true) => " ⊕ ",
                (BinOp::Lolli, false) => " -o ",
                (BinOp::Lolli, true) => " ⊸ ",
            };
            if *op == BinOp::Lolli {
                write_formula(a, out, l + 1, unicode);
                out.push_str(sym);
                write_formula(b, out, l, unicode);
            } else {
                write_formula(a, out, l, unicode);
                out.push_str(sym);
                write_formula(b, out, l + 1, unicode);
            }
        }
        Formula::Un(op, a) => {
            out.push_str(match (op, unicode) {
                (UnOp::Bang, _) => "!",
                (UnOp::WhyNot, _) => "?",
                (UnOp::Para, false) => "$",
                (UnOp::Para, true) => "§",
            });
            write_formula(a, out, 4, unicode);
        }
    }
    if paren {
        out.push(')');
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_formula(self, &mut s, 0, false);
        f.write_str(&s)
    }
}

impl Serialize for Formula {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

// ---------------------------------------------------------------------------
// sequents

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Intuitionistic,
    Classical,
}

impl Side {
    pub fn polarity(self) -> Polarity {
        match self {
            Side::Intuitionistic => Polarity::Intuitionistic,
            Side::Classical => Polarity::Classical,
        }
    }
}

/// `Γ ⊢ Π` (intuitionistic, stoup of at most one formula) or `⊢ Γ`
/// (classical). Multisets are kept sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sequent {
    side: SideTag,
    left: Vec<Formula>,
    right: Vec<Formula>,
}

// local copy so the derived order on Sequent does not depend on serde derives
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum SideTag {
    Int,
    Cls,
}

impl Sequent {
    pub fn intuitionistic(mut antecedent: Vec<Formula>, stoup: Option<Formula>) -> Sequent {
        antecedent.sort();
        Sequent { side: SideTag::Int, left: antecedent, right: stoup.into_iter().collect() }
    }

    pub fn classical(mut succedent: Vec<Formula>) -> Sequent {
        succedent.sort();
        Sequent { side: SideTag::Cls, left: Vec::new(), right: succedent }
    }

    pub fn side(&self) -> Side {
        match self.side {
            SideTag::Int => Side::Intuitionistic,
            SideTag::Cls => Side::Classical,
        }
    }

    pub fn is_classical(&self) -> bool {
        self.side == SideTag::Cls
    }

    /// Antecedent of an intuitionistic sequent (empty for classical ones).
    pub fn antecedent(&self) -> &[Formula] {
        &self.left
    }

    pub fn stoup(&self) -> Option<&Formula> {
        match self.side {
            SideTag::Int => self.right.first(),
            SideTag::Cls => None,
        }
    }

    /// Right-hand multiset of a classical sequent.
    pub fn succedent(&self) -> &[Formula] {
        match self.side {
            SideTag::Int => &[],
            SideTag::Cls => &self.right,
        }
    }

    pub fn formulas(&self) -> impl Iterator<Item = &Formula> {
        self.left.iter().chain(self.right.iter())
    }

    pub fn size(&self) -> usize {
        self.formulas().map(Formula::size).sum()
    }

    pub fn check_polarity(&self) -> Result<(), FormulaError> {
        let pol = self.side().polarity();
        self.formulas().try_for_each(|f| f.check_polarity(pol))
    }

    pub fn connectives_used(&self) -> Fragment {
        self.formulas().fold(Fragment::empty(), |k, f| Fragment(k.0 | f.connectives_used().0))
    }

    pub fn variables(&self) -> BTreeSet<Arc<str>> {
        let mut out = BTreeSet::new();
        for f in self.formulas() {
            out.extend(f.variables());
        }
        out
    }

    pub fn to_unicode(&self) -> String {
        let join = |fs: &[Formula]| fs.iter().map(Formula::to_unicode).collect::<Vec<_>>().join(", ");
        render(join(&self.left), join(&self.right), "⊢")
    }
}

fn render(l: String, r: String, turnstile: &str) -> String {
    match (l.is_empty(), r.is_empty()) {
        (true, true) => turnstile.to_string(),
        (true, false) => format!("{turnstile} {r}"),
        (false, true) => format!("{l} {turnstile}"),
        (false, false) => format!("{l} {turnstile} {r}"),
    }
}

impl fmt::Display for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |fs: &[Formula]| fs.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ");
        f.write_str(&render(join(&self.left), join(&self.right), "|-"))
    }
}

/// Multiset difference `a - b`; `None` when `b` is not contained in `a`.
/// Both inputs must be sorted.
pub fn multiset_minus(a: &[Formula], b: &[Formula]) -> Option<Vec<Formula>> {
    let mut out = Vec::with_capacity(a.len());
    let mut j = 0;
    for x in a {
        if j < b.len() && b[j] == *x {
            j += 1;
        } else {
            if j < b.len() && b[j] < *x {
                return None;
            }
            out.push(x.clone());
        }
    }
    if j == b.len() {
        Some(out)
    } else {
        None
    }
}

/// Removes one occurrence of `x` from a sorted multiset.
pub fn remove_one(a: &[Formula], x: &Formula) -> Option<Vec<Formula>> {
    let i = a.binary_search(x).ok()?;
    let mut v = a.to_vec();
    v.remove(i);
    Some(v)
}

pub fn sorted(mut v: Vec<Formula>) -> Vec<Formula> {
    v.sort();
    v
}

// ---------------------------------------------------------------------------
// parsing

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Caret,
    One,
    Zero,
    Top,
    Bot,
    Bang,
    Quest,
    Para,
    Star,
    Bar,
    Amp,
    Plus,
    Lolli,
    LParen,
    RParen,
    Comma,
    Turnstile,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, FormulaError> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        let next = chars.get(i + 1).map(|p| p.1);
        let mut step = 1;
        let tok = match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            'a'..='z' => {
                let mut j = i;
                let mut name = String::new();
                while j < chars.len() && (chars[j].1.is_ascii_alphanumeric() || chars[j].1 == '_') {
                    name.push(chars[j].1);
                    j += 1;
                }
                step = j - i;
                match name.as_str() {
                    "top" => Tok::Top,
                    "bot" => Tok::Bot,
                    _ => {
                        toks.push((pos, Tok::Ident(name)));
                        i = j;
                        // `p⊥` directly after an atom is a dual literal
                        if i < chars.len() && chars[i].1 == '⊥' {
                            toks.push((chars[i].0, Tok::Caret));
                            i += 1;
                        }
                        continue;
                    }
                }
            }
            '^' => Tok::Caret,
            '1' => Tok::One,
            '0' => Tok::Zero,
            '⊤' => Tok::Top,
            '⊥' => Tok::Bot,
            '!' => Tok::Bang,
            '?' => Tok::Quest,
            '$' | '§' => Tok::Para,
            '*' | '⊗' => Tok::Star,
            '⅋' => Tok::Bar,
            '&' => Tok::Amp,
            '+' | '⊕' => Tok::Plus,
            '⊸' => Tok::Lolli,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            '⊢' => Tok::Turnstile,
            '|' if next == Some('-') => {
                step = 2;
                Tok::Turnstile
            }
            '|' => Tok::Bar,
            '-' if next == Some('o') => {
                step = 2;
                Tok::Lolli
            }
            other => {
                return Err(FormulaError::Syntax { pos, msg: format!("unexpected character `{other}`") })
            }
        };
        toks.push((pos, tok));
        i += step;
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    i: usize,
    end: usize,
    polarity: Polarity,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|t| &t.1)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.i).map(|t| t.0).unwrap_or(self.end)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, FormulaError> {
        Err(FormulaError::Syntax { pos: self.pos(), msg: msg.into() })
    }

    fn polarity_err<T>(&self, what: &str) -> Result<T, FormulaError> {
        let mode = match self.polarity {
            Polarity::Intuitionistic => "intuitionistic",
            Polarity::Classical => "classical",
        };
        Err(FormulaError::Polarity(format!("{what} at {} is not allowed in {mode} mode", self.pos())))
    }

    fn formula(&mut self) -> Result<Formula, FormulaError> {
        let left = self.additive()?;
        if self.peek() == Some(&Tok::Lolli) {
            if self.polarity == Polarity::Classical {
                return self.polarity_err("`-o`");
            }
            self.i += 1;
            let right = self.formula()?;
            return Ok(Formula::lolli(left, right));
        }
        Ok(left)
    }

    fn additive(&mut self) -> Result<Formula, FormulaError> {
        let mut acc = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Amp) => BinOp::With,
                Some(Tok::Plus) => BinOp::Plus,
                _ => return Ok(acc),
            };
            self.i += 1;
            let rhs = self.multiplicative()?;
            acc = Formula::bin(op, acc, rhs);
        }
    }

    fn multiplicative(&mut self) -> Result<Formula, FormulaError> {
        let mut acc = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Star) => BinOp::Tensor,
                Some(Tok::Bar) => {
                    if self.polarity == Polarity::Intuitionistic {
                        return self.polarity_err("`|`");
                    }
                    BinOp::Par
                }
                _ => return Ok(acc),
            };
            self.i += 1;
            let rhs = self.unary()?;
            acc = Formula::bin(op, acc, rhs);
        }
    }

    fn unary(&mut self) -> Result<Formula, FormulaError> {
        let op = match self.peek() {
            Some(Tok::Bang) => UnOp::Bang,
            Some(Tok::Quest) => {
                if self.polarity == Polarity::Intuitionistic {
                    return self.polarity_err("`?`");
                }
                UnOp::WhyNot
            }
            Some(Tok::Para) => {
                if self.polarity == Polarity::Classical {
                    return self.polarity_err("`$`");
                }
                UnOp::Para
            }
            _ => return self.atom(),
        };
        self.i += 1;
        Ok(Formula::un(op, self.unary()?))
    }

    fn atom(&mut self) -> Result<Formula, FormulaError> {
        let Some(tok) = self.peek().cloned() else {
            return self.err("unexpected end of input");
        };
        self.i += 1;
        match tok {
            Tok::Ident(name) => {
                if self.peek() == Some(&Tok::Caret) {
                    if self.polarity == Polarity::Intuitionistic {
                        return self.polarity_err("dual literal");
                    }
                    self.i += 1;
                    Ok(Formula::dual_var(&name))
                } else {
                    Ok(Formula::var(&name))
                }
            }
            Tok::One => Ok(Formula::one()),
            Tok::Zero => Ok(Formula::zero()),
            Tok::Top => Ok(Formula::top()),
            Tok::Bot => Ok(Formula::bot()),
            Tok::LParen => {
                let f = self.formula()?;
                if self.peek() != Some(&Tok::RParen) {
                    return self.err("expected `)`");
                }
                self.i += 1;
                Ok(f)
            }
            other => {
                self.i -= 1;
                self.err(format!("unexpected token {other:?}"))
            }
        }
    }

    fn list(&mut self) -> Result<Vec<Formula>, FormulaError> {
        let mut out = Vec::new();
        if matches!(self.peek(), None | Some(Tok::Turnstile)) {
            return Ok(out);
        }
        loop {
            out.push(self.formula()?);
            if self.peek() == Some(&Tok::Comma) {
                self.i += 1;
            } else {
                return Ok(out);
            }
        }
    }

    fn finish(&self) -> Result<(), FormulaError> {
        if self.i < self.toks.len() {
            return self.err("trailing input");
        }
        Ok(())
    }
}

fn parser(text: &str, polarity: Polarity) -> Result<Parser, FormulaError> {
    Ok(Parser { toks: lex(text)?, i: 0, end: text.len(), polarity })
}

pub fn parse_formula(text: &str, polarity: Polarity) -> Result<Formula, FormulaError> {
    let mut p = parser(text, polarity)?;
    let f = p.formula()?;
    p.finish()?;
    Ok(f)
}

/// Comma-separated list of formulas (possibly empty).
pub fn parse_formula_list(text: &str, polarity: Polarity) -> Result<Vec<Formula>, FormulaError> {
    let mut p = parser(text, polarity)?;
    let fs = p.list()?;
    p.finish()?;
    Ok(fs)
}

/// `A, B |- C`, `A |-` or `|- A, B`.
pub fn parse_sequent(text: &str, polarity: Polarity) -> Result<Sequent, FormulaError> {
    let mut p = parser(text, polarity)?;
    let left = p.list()?;
    if p.peek() != Some(&Tok::Turnstile) {
        return p.err("expected `|-`");
    }
    p.i += 1;
    let right = p.list()?;
    p.finish()?;
    match polarity {
        Polarity::Classical => {
            if !left.is_empty() {
                return Err(FormulaError::Syntax {
                    pos: 0,
                    msg: "classical sequents are right-sided".into(),
                });
            }
            Ok(Sequent::classical(right))
        }
        Polarity::Intuitionistic => {
            if right.len() > 1 {
                return Err(FormulaError::Syntax {
                    pos: 0,
                    msg: "the stoup holds at most one formula".into(),
                });
            }
            Ok(Sequent::intuitionistic(left, right.into_iter().next()))
        }
    }
}

/// Lexicographically least variable name (`a`, `a0`, `a00`, ...) not in
/// `used`; names are compared as strings, so `a` < `a0` < `a00` < `b`.
pub fn fresh_variable<'a>(used: impl IntoIterator<Item = &'a str>) -> String {
    let used: BTreeSet<&str> = used.into_iter().collect();
    let mut cand = String::from("a");
    while used.contains(cand.as_str()) {
        cand.push('0');
    }
    cand
}

#[cfg(test)]
mod tests {
    use super::*;

    fn int(s: &str) -> Formula {
        parse_formula(s, Polarity::Intuitionistic).unwrap()
    }

    fn cls(s: &str) -> Formula {
        parse_formula(s, Polarity::Classical).unwrap()
    }

    #[test]
    fn lolli_is_right_associative() {
        let f = int("p -o (q -o p)");
        assert_eq!(f, Formula::lolli(Formula::var("p"), Formula::lolli(Formula::var("q"), Formula::var("p"))));
        assert_eq!(int("p -o q -o p"), f);
        assert_eq!(f.to_string(), "p -o q -o p");
    }

    #[test]
    fn classical_tensor_with_dual() {
        let f = cls("!p * q^");
        assert_eq!(f, Formula::tensor(Formula::bang(Formula::var("p")), Formula::dual_var("q")));
    }

    #[test]
    fn par_rejected_intuitionistically() {
        assert!(matches!(parse_formula("p | q", Polarity::Intuitionistic), Err(FormulaError::Polarity(_))));
        assert!(matches!(parse_formula("p -o q", Polarity::Classical), Err(FormulaError::Polarity(_))));
        assert!(matches!(parse_formula("p^", Polarity::Intuitionistic), Err(FormulaError::Polarity(_))));
    }

    #[test]
    fn syntax_error_reports_position() {
        match parse_formula("p * (q", Polarity::Intuitionistic) {
            Err(FormulaError::Syntax { pos, .. }) => assert_eq!(pos, 6),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unicode_aliases() {
        assert_eq!(parse_formula("p⊥ ⅋ (q ⊗ ⊥)", Polarity::Classical).unwrap(), cls("p^ | (q * bot)"));
        assert_eq!(parse_formula("§p ⊸ ⊤", Polarity::Intuitionistic).unwrap(), int("$p -o top"));
    }

    #[test]
    fn precedence_levels() {
        assert_eq!(int("p * q & r -o s").to_string(), "p * q & r -o s");
        assert_eq!(int("(p -o q) -o r").to_string(), "(p -o q) -o r");
        assert_eq!(int("p * (q * r)").to_string(), "p * (q * r)");
        assert_eq!(int("!(p * q)").to_string(), "!(p * q)");
        assert_eq!(int("p & (q + r)").to_string(), "p & (q + r)");
    }

    #[test]
    fn dual_table() {
        assert_eq!(dual(&cls("p")).unwrap(), cls("p^"));
        assert_eq!(dual(&cls("p^")).unwrap(), cls("p"));
        assert_eq!(dual(&cls("p * q")).unwrap(), cls("p^ | q^"));
        assert_eq!(dual(&cls("!p & 1")).unwrap(), cls("?p^ + bot"));
        assert_eq!(dual(&cls("top")).unwrap(), cls("0"));
        assert!(dual(&int("p -o q")).is_err());
    }

    #[test]
    fn closure_examples() {
        let c = subformula_closure(&int("!p"));
        assert_eq!(c.formulas, sorted(vec![int("!p"), int("p")]));
        assert_eq!(c.bang, vec![int("!p")]);
        let c = subformula_closure(&int("p -o q"));
        assert_eq!(c.dim(), 3);
        assert!(c.bang.is_empty());
        assert_eq!(subformula_closure(&int("!(p * p)")).dim(), 3);
    }

    #[test]
    fn fragment_membership() {
        use Connective::*;
        assert!(in_fragment(&int("p -o q"), Fragment::of(&[Lolli])));
        assert!(!in_fragment(&int("p * q"), Fragment::of(&[Lolli])));
        assert!(in_fragment(&int("1"), Fragment::of(&[Tensor, Lolli, With, Plus, One, Bot])));
    }

    #[test]
    fn sequent_forms() {
        let s = parse_sequent("q, p |- p", Polarity::Intuitionistic).unwrap();
        assert_eq!(s.antecedent(), &[int("p"), int("q")]);
        assert_eq!(s.to_string(), "p, q |- p");
        let s = parse_sequent("p |-", Polarity::Intuitionistic).unwrap();
        assert_eq!(s.stoup(), None);
        let s = parse_sequent("|- ?p^, p", Polarity::Classical).unwrap();
        assert_eq!(s.succedent().len(), 2);
        assert!(parse_sequent("p |- q", Polarity::Classical).is_err());
        assert!(parse_sequent("|- p, q", Polarity::Intuitionistic).is_err());
        assert_eq!(parse_sequent("|-", Polarity::Classical).unwrap().to_string(), "|-");
    }

    #[test]
    fn multiset_helpers() {
        let a = sorted(vec![int("p"), int("p"), int("q")]);
        assert_eq!(multiset_minus(&a, &[int("p")]).unwrap(), sorted(vec![int("p"), int("q")]));
        assert!(multiset_minus(&a, &[int("r")]).is_none());
        assert!(multiset_minus(&[int("p")], &sorted(vec![int("p"), int("p")])).is_none());
    }

    #[test]
    fn fresh_names() {
        assert_eq!(fresh_variable(["p", "q"]), "a");
        assert_eq!(fresh_variable(["a", "b"]), "a0");
        assert_eq!(fresh_variable(["a", "a0"]), "a00");
    }
}
