//! Negative translation of classical formulas into intuitionistic ones,
//! the underline embedding back, substitutions and `$`-erasure.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::formulas::{
    dual, dual_unchecked, fresh_variable, BinOp, Connective, Const, Formula, FormulaError, Fragment, Polarity, Sequent,
    UnOp,
};

/// `¬_F A`, that is `A -o F`.
pub fn neg(a: Formula, f: &Formula) -> Formula {
    Formula::lolli(a, f.clone())
}

/// `A^[F]`.
pub fn neg_translate(a: &Formula, f: &Formula) -> Result<Formula, FormulaError> {
    a.check_polarity(Polarity::Classical)?;
    f.check_polarity(Polarity::Intuitionistic)?;
    Ok(jump(a, f))
}

fn jump(a: &Formula, f: &Formula) -> Formula {
    let n = |x: Formula| neg(x, f);
    match a {
        Formula::Var(_) => n(a.clone()),
        Formula::DualVar(name) => Formula::var(name),
        Formula::Const(Const::One) => n(Formula::one()),
        Formula::Const(Const::Bot) => Formula::one(),
        Formula::Const(Const::Top) => Formula::zero(),
        Formula::Const(Const::Zero) => n(Formula::zero()),
        Formula::Bin(op, b, c) => {
            let (b, c) = (jump(b, f), jump(c, f));
            match op {
                BinOp::Tensor => Formula::lolli(n(b), c),
                BinOp::Par => n(Formula::lolli(b, n(c))),
                BinOp::With => Formula::plus(b, c),
                BinOp::Plus => n(Formula::plus(n(b), n(c))),
                BinOp::Lolli => unreachable!("checked classical"),
            }
        }
        Formula::Un(UnOp::Bang, b) => n(Formula::bang(n(jump(b, f)))),
        Formula::Un(UnOp::WhyNot, b) => Formula::bang(jump(b, f)),
        Formula::Un(UnOp::Para, _) => unreachable!("checked classical"),
    }
}

/// The first variable name not occurring in `s`, as a formula.
pub fn fresh_for(s: &Sequent) -> Formula {
    let used = s.variables();
    Formula::var(&fresh_variable(used.iter().map(|v| &**v)))
}

/// `⊢ Γ` becomes `Γ^[F] ⊢ F`.
pub fn translate_sequent(s: &Sequent, f: &Formula) -> Result<Sequent, FormulaError> {
    if !s.is_classical() {
        return Err(FormulaError::Polarity("expected a classical sequent".into()));
    }
    let ante = s.succedent().iter().map(|a| neg_translate(a, f)).collect::<Result<Vec<_>, _>>()?;
    Ok(Sequent::intuitionistic(ante, Some(f.clone())))
}

/// `⊢ Γ` becomes `Γ^[bot] ⊢` with an empty stoup.
pub fn translate_sequent_bot(s: &Sequent) -> Result<Sequent, FormulaError> {
    let t = translate_sequent(s, &Formula::bot())?;
    Ok(Sequent::intuitionistic(t.antecedent().to_vec(), None))
}

/// `⊢ Γ` becomes `Γ^[x] ⊢ x` for the first fresh `x`.
pub fn translate_sequent_fresh(s: &Sequent) -> Result<Sequent, FormulaError> {
    translate_sequent(s, &fresh_for(s))
}

/// Classical image of an intuitionistic formula.
pub fn underline(a: &Formula) -> Result<Formula, FormulaError> {
    a.check_polarity(Polarity::Intuitionistic)?;
    if a.connectives_used().contains(Connective::Para) {
        return Err(FormulaError::Fragment(a.to_string(), Fragment::intuitionistic()));
    }
    Ok(under(a))
}

fn under(a: &Formula) -> Formula {
    match a {
        Formula::Var(_) | Formula::Const(_) => a.clone(),
        Formula::Bin(BinOp::Lolli, b, c) => Formula::par(dual_unchecked(&under(b)), under(c)),
        Formula::Bin(op, b, c) => Formula::bin(*op, under(b), under(c)),
        Formula::Un(op, b) => Formula::un(*op, under(b)),
        Formula::DualVar(_) => unreachable!("checked intuitionistic"),
    }
}

/// `Γ ⊢ Π` becomes `⊢ (Γ̲)^, Π̲`.
pub fn underline_sequent(s: &Sequent) -> Result<Sequent, FormulaError> {
    let mut out = Vec::new();
    for a in s.antecedent() {
        out.push(dual_unchecked(&underline(a)?));
    }
    if let Some(c) = s.stoup() {
        out.push(underline(c)?);
    }
    Ok(Sequent::classical(out))
}

/// Assignment of classical formulas to variables, extended to all
/// classical formulas homomorphically with `τ(q^) = τ(q)^`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution(pub BTreeMap<Arc<str>, Formula>);

impl Substitution {
    pub fn new() -> Self {
        Substitution::default()
    }

    pub fn insert(mut self, var: &str, f: Formula) -> Self {
        self.0.insert(Arc::from(var), f);
        self
    }

    pub fn apply(&self, a: &Formula) -> Formula {
        match a {
            Formula::Var(v) => self.0.get(v).cloned().unwrap_or_else(|| a.clone()),
            Formula::DualVar(v) => self.0.get(v).map(dual_unchecked).unwrap_or_else(|| a.clone()),
            Formula::Const(_) => a.clone(),
            Formula::Bin(op, b, c) => Formula::bin(*op, self.apply(b), self.apply(c)),
            Formula::Un(op, b) => Formula::un(*op, self.apply(b)),
        }
    }

    pub fn apply_sequent(&self, s: &Sequent) -> Sequent {
        Sequent::classical(s.succedent().iter().map(|a| self.apply(a)).collect())
    }
}

/// `{A^, A | 1}`.
pub fn phi_set(a: &Formula) -> Result<Vec<Formula>, FormulaError> {
    Ok(vec![dual(a)?, Formula::par(a.clone(), Formula::one())])
}

/// Drops every `$`.
pub fn erase_paragraph(a: &Formula) -> Formula {
    match a {
        Formula::Un(UnOp::Para, b) => erase_paragraph(b),
        Formula::Un(op, b) => Formula::un(*op, erase_paragraph(b)),
        Formula::Bin(op, b, c) => Formula::bin(*op, erase_paragraph(b), erase_paragraph(c)),
        _ => a.clone(),
    }
}

pub fn erase_sequent(s: &Sequent) -> Sequent {
    Sequent::intuitionistic(
        s.antecedent().iter().map(erase_paragraph).collect(),
        s.stoup().map(erase_paragraph),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulas::parse_formula;

    fn c(s: &str) -> Formula {
        parse_formula(s, Polarity::Classical).unwrap()
    }

    fn i(s: &str) -> Formula {
        parse_formula(s, Polarity::Intuitionistic).unwrap()
    }

    #[test]
    fn clauses() {
        let x = i("x");
        assert_eq!(neg_translate(&c("p"), &x).unwrap(), i("p -o x"));
        assert_eq!(neg_translate(&c("p^"), &x).unwrap(), i("p"));
        assert_eq!(neg_translate(&c("?q"), &x).unwrap(), i("!(q -o x)"));
        assert_eq!(neg_translate(&c("bot"), &x).unwrap(), i("1"));
        assert_eq!(neg_translate(&c("top"), &x).unwrap(), i("0"));
        assert_eq!(neg_translate(&c("0"), &x).unwrap(), i("0 -o x"));
        assert_eq!(neg_translate(&c("1"), &x).unwrap(), i("1 -o x"));
        assert_eq!(neg_translate(&c("p * q"), &x).unwrap(), i("((p -o x) -o x) -o (q -o x)"));
        assert_eq!(neg_translate(&c("p | q"), &x).unwrap(), i("((p -o x) -o ((q -o x) -o x)) -o x"));
        assert_eq!(neg_translate(&c("p & q"), &x).unwrap(), i("(p -o x) + (q -o x)"));
        assert_eq!(neg_translate(&c("p + q"), &x).unwrap(), i("(((p -o x) -o x) + ((q -o x) -o x)) -o x"));
        assert_eq!(neg_translate(&c("!p"), &x).unwrap(), i("!((p -o x) -o x) -o x"));
        assert!(neg_translate(&i("p -o q"), &x).is_err());
    }

    #[test]
    fn underline_clauses() {
        assert_eq!(underline(&i("p -o q")).unwrap(), c("p^ | q"));
        assert_eq!(underline(&i("!p")).unwrap(), c("!p"));
        assert_eq!(underline(&i("1")).unwrap(), c("1"));
        assert_eq!(underline(&i("(p -o q) -o r")).unwrap(), c("(p * q^) | r"));
        assert!(underline(&i("$p")).is_err());
    }

    #[test]
    fn substitution() {
        let t = Substitution::new().insert("x", c("bot"));
        assert_eq!(t.apply(&c("x * y")), c("bot * y"));
        assert_eq!(t.apply(&c("x^")), c("1"));
        assert_eq!(Substitution::new().apply(&c("p | q^")), c("p | q^"));
    }

    #[test]
    fn phi_and_erasure() {
        assert_eq!(phi_set(&c("x")).unwrap(), vec![c("x^"), c("x | 1")]);
        assert_eq!(phi_set(&c("1")).unwrap(), vec![c("bot"), c("1 | 1")]);
        assert_eq!(erase_paragraph(&i("$p")), i("p"));
        assert_eq!(erase_paragraph(&i("!($p -o q)")), i("!(p -o q)"));
        assert_eq!(erase_paragraph(&i("!p -o q")), i("!p -o q"));
    }

    #[test]
    fn fresh_name_avoids_input() {
        let s = crate::formulas::parse_sequent("|- a, a0 * b", Polarity::Classical).unwrap();
        assert_eq!(fresh_for(&s), i("a00"));
        let t = translate_sequent_fresh(&s).unwrap();
        assert_eq!(t.stoup(), Some(&i("a00")));
    }
}
