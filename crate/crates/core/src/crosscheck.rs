//! Agreement harnesses: each suite decides the same question by two or more
//! independent routes over a generated corpus and reports disagreements.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

use crate::abvass::{check_tree, search_deduction, Abvass, Config, DeductionTree, Reach, ReachBudget};
use crate::calculi::{check_proof, System};
use crate::corpus::{multisets, rng, Grammar};
use crate::encoders::{encode_bvass_to_sequent, encode_formula, EState, EncodedMachine, Variant};
use crate::formulas::{BinOp, Connective, Formula, Fragment, Sequent, UnOp};
use crate::prover::{deduce, deduce_direct, prenex_expand_prove, prove, Budget, ProverError, Verdict};
use crate::translate::{translate_sequent_bot, translate_sequent_fresh};

#[derive(Debug, Error)]
pub enum CrosscheckError {
    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
    #[error(transparent)]
    Prover(#[from] ProverError),
    #[error("{0}")]
    Other(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Suite {
    /// LLW vs ILLW under `[x]`, and ELLW vs IELW.
    TranslationIllw,
    /// LLW vs ILZW under `[⊥]`, and ELLW vs IEZW.
    TranslationIlzw,
    /// LL vs ILL under `[x]`.
    TranslationIll,
    /// LLW `⊢ ?Γ, A` vs ELLW `⊢ ?Γ, !A`.
    ExponentialLift,
    EncodingIezw,
    EncodingIlzwPrime,
    BvassLlw,
    PrenexFiveWay,
    Deducibility,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::TranslationIllw,
        Suite::TranslationIlzw,
        Suite::TranslationIll,
        Suite::ExponentialLift,
        Suite::EncodingIezw,
        Suite::EncodingIlzwPrime,
        Suite::BvassLlw,
        Suite::PrenexFiveWay,
        Suite::Deducibility,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::TranslationIllw => "translation-llw-illw",
            Suite::TranslationIlzw => "translation-llw-ilzw",
            Suite::TranslationIll => "translation-ll-ill",
            Suite::ExponentialLift => "exponential-lift",
            Suite::EncodingIezw => "encoding-iezw",
            Suite::EncodingIlzwPrime => "encoding-ilzw-prime",
            Suite::BvassLlw => "bvass-llw",
            Suite::PrenexFiveWay => "prenex-five-way",
            Suite::Deducibility => "deducibility",
        }
    }

    fn aliases(self) -> &'static [&'static str] {
        match self {
            Suite::TranslationIllw => &["illtoll5"],
            Suite::TranslationIlzw => &["illtoll6"],
            Suite::TranslationIll => &["illtoll8"],
            Suite::ExponentialLift => &["llwandellw"],
            Suite::EncodingIezw => &["iezwtoabvass"],
            Suite::EncodingIlzwPrime => &["encodingofilzw2"],
            Suite::BvassLlw => &["bvasstoll"],
            Suite::PrenexFiveWay => &["prenextrans2"],
            Suite::Deducibility => &["fleitoilzw"],
        }
    }
}

impl FromStr for Suite {
    type Err = CrosscheckError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let l = s.to_ascii_lowercase();
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == l || x.aliases().contains(&l.as_str()))
            .ok_or_else(|| CrosscheckError::UnknownSuite(s.to_string()))
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug)]
pub struct Params {
    /// Size bound on generated instances; 0 gives an empty corpus.
    pub size: usize,
    /// Number of random instances when the corpus is not exhaustive.
    pub count: usize,
    pub seed: u64,
    pub budget: Budget,
    pub reach: ReachBudget,
}

impl Default for Params {
    fn default() -> Self {
        Params { size: 6, count: 100, seed: 0, budget: Budget::default(), reach: ReachBudget::default() }
    }
}

/// One instance with the verdict of each route.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub instance: String,
    pub verdicts: Vec<(String, Option<bool>)>,
    /// Witnesses that went through a checker.
    pub certificates: usize,
    pub rejected: Vec<String>,
}

impl Outcome {
    fn new(instance: impl Into<String>) -> Self {
        Outcome { instance: instance.into(), verdicts: Vec::new(), certificates: 0, rejected: Vec::new() }
    }

    pub fn conclusive(&self) -> bool {
        self.verdicts.iter().all(|(_, v)| v.is_some())
    }

    /// No two decided routes differ.
    pub fn consistent(&self) -> bool {
        let mut d = self.verdicts.iter().filter_map(|(_, v)| *v);
        match d.next() {
            Some(first) => d.all(|v| v == first),
            None => true,
        }
    }

    fn verdict(&mut self, route: &str, sys: &System, v: &Verdict) {
        if let Verdict::Proved(t) = v {
            self.certificates += 1;
            if let Err(e) = check_proof(sys, t, false) {
                self.rejected.push(format!("{route}: {e}"));
            }
        }
        self.verdicts.push((route.to_string(), v.decided()));
    }

    fn error(&mut self, route: &str, e: impl fmt::Display) {
        self.rejected.push(format!("{route}: {e}"));
        self.verdicts.push((route.to_string(), None));
    }
}

#[derive(Clone, Debug)]
pub struct Report {
    pub suite: Suite,
    pub outcomes: Vec<Outcome>,
}

impl Report {
    pub fn instances(&self) -> usize {
        self.outcomes.len()
    }

    pub fn conclusive(&self) -> usize {
        self.outcomes.iter().filter(|o| o.conclusive()).count()
    }

    pub fn agreements(&self) -> usize {
        self.outcomes.iter().filter(|o| o.conclusive() && o.consistent()).count()
    }

    pub fn disagreements(&self) -> Vec<&Outcome> {
        self.outcomes.iter().filter(|o| !o.consistent()).collect()
    }

    pub fn certificates(&self) -> usize {
        self.outcomes.iter().map(|o| o.certificates).sum()
    }

    pub fn rejections(&self) -> Vec<&str> {
        self.outcomes.iter().flat_map(|o| o.rejected.iter().map(String::as_str)).collect()
    }

    pub fn passed(&self) -> bool {
        self.disagreements().is_empty() && self.rejections().is_empty()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "suite": self.suite.name(),
            "instances": self.instances(),
            "conclusive": self.conclusive(),
            "agreements": self.agreements(),
            "disagreements": self.disagreements().iter().map(|o| json!({
                "instance": o.instance,
                "verdicts": o.verdicts.iter().map(|(r, v)| json!({"route": r, "verdict": v})).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
            "certificates": self.certificates(),
            "rejections": self.rejections(),
            "passed": self.passed(),
        })
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "suite          {}", self.suite)?;
        writeln!(f, "instances      {}", self.instances())?;
        writeln!(f, "conclusive     {}", self.conclusive())?;
        writeln!(f, "agreements     {}", self.agreements())?;
        writeln!(f, "disagreements  {}", self.disagreements().len())?;
        writeln!(f, "certificates   {}", self.certificates())?;
        writeln!(f, "rejections     {}", self.rejections().len())?;
        for o in self.disagreements() {
            let vs: Vec<String> = o
                .verdicts
                .iter()
                .map(|(r, v)| format!("{r}={}", v.map_or("unknown", |b| if b { "yes" } else { "no" })))
                .collect();
            writeln!(f, "  {}  {}", o.instance, vs.join(" "))?;
        }
        for r in self.rejections() {
            writeln!(f, "  rejected: {r}")?;
        }
        Ok(())
    }
}

pub fn run(suite: Suite, p: &Params) -> Result<Report, CrosscheckError> {
    p.budget.validate()?;
    p.reach.validate().map_err(|e| CrosscheckError::Other(e.to_string()))?;
    let outcomes = match suite {
        Suite::TranslationIllw => par(classical_corpus(p), |s| translation_illw(s, p)),
        Suite::TranslationIlzw => par(classical_corpus(p), |s| translation_ilzw(s, p)),
        Suite::TranslationIll => par(classical_corpus(p), |s| vec![translation_pair(s, &System::ll(), &System::ill(), p)]),
        Suite::ExponentialLift => par(lift_corpus(p), |s| vec![exponential_lift(s, p)]),
        Suite::EncodingIezw => par(encoder_corpus(p), |f| vec![encoder_outcome(f, Variant::E, p).outcome]),
        Suite::EncodingIlzwPrime => par(encoder_corpus(p), |f| vec![encoder_outcome(f, Variant::IPrime, p).outcome]),
        Suite::BvassLlw => par(bvass_corpus(p), |(m, leaves, c)| vec![bvass_outcome(m, leaves, c, p)]),
        Suite::PrenexFiveWay => par(prenex_corpus(p), |x| vec![prenex_five_way(x, p)]),
        Suite::Deducibility => par(deducibility_corpus(p), |x| vec![deducibility(x, p)]),
    };
    Ok(Report { suite, outcomes })
}

fn par<T: Sync>(items: Vec<T>, f: impl Fn(&T) -> Vec<Outcome> + Sync + Send) -> Vec<Outcome> {
    items.par_iter().map(f).collect::<Vec<_>>().into_iter().flatten().collect()
}

// ---------------------------------------------------------------------------
// corpora

fn classical_grammar(vars: &[&str]) -> Grammar {
    let mut atoms = Grammar::literals(vars);
    atoms.extend(Grammar::constants());
    Grammar::new(atoms, &[BinOp::Tensor, BinOp::Par, BinOp::With, BinOp::Plus], &[UnOp::Bang, UnOp::WhyNot])
}

/// Seeded random sequents, or every sequent over one variable when the size
/// bound is at most 3.
pub fn classical_corpus(p: &Params) -> Vec<Sequent> {
    if p.size == 0 {
        return Vec::new();
    }
    if p.size <= 3 {
        let g = classical_grammar(&["p"]);
        let by = g.exhaustive(p.size);
        return multisets(&by, p.size).into_iter().filter(|m| !m.is_empty()).map(Sequent::classical).collect();
    }
    let g = classical_grammar(&["p", "q"]);
    let mut r = rng(p.seed);
    (0..p.count).map(|_| Sequent::classical(g.random_list(&mut r, p.size, 3))).collect()
}

fn lift_corpus(p: &Params) -> Vec<(Vec<Formula>, Formula)> {
    if p.size == 0 {
        return Vec::new();
    }
    let mut atoms = Grammar::literals(&["p", "q"]);
    atoms.extend([Formula::one(), Formula::bot()]);
    let g = Grammar::new(atoms, &[BinOp::Tensor, BinOp::Par, BinOp::With, BinOp::Plus], &[]);
    let mut r = rng(p.seed);
    (0..p.count)
        .map(|_| {
            let mut fs = g.random_list(&mut r, p.size, 3);
            let a = fs.pop().expect("non-empty");
            (fs, a)
        })
        .collect()
}

/// Intuitionistic formulas for the encoder suites: every formula over `p`
/// up to the size bound when it is at most 5, seeded random ones over `p`
/// and the constants beyond that.
pub fn encoder_corpus(p: &Params) -> Vec<Formula> {
    let ops = [BinOp::Tensor, BinOp::Lolli, BinOp::With, BinOp::Plus];
    if p.size == 0 {
        return Vec::new();
    }
    if p.size <= 5 {
        let g = Grammar::new(Grammar::vars(&["p"]), &ops, &[UnOp::Bang]);
        return g.exhaustive(p.size).into_iter().flatten().collect();
    }
    let mut atoms = Grammar::vars(&["p"]);
    atoms.extend(Grammar::constants());
    let g = Grammar::new(atoms, &ops, &[UnOp::Bang]);
    let mut r = rng(p.seed);
    (0..p.count)
        .map(|_| {
            let n = r.gen_range(6..=p.size);
            g.random(&mut r, n)
        })
        .collect()
}

/// A random ordinary BVASS with at most 3 states and dimension at most 2,
/// its leaves and a target configuration with counters at most 2.
pub fn random_bvass(r: &mut impl Rng, rules: usize) -> (Abvass, Vec<usize>, Config<usize>) {
    let dim = r.gen_range(1..=2);
    let n = r.gen_range(1..=3);
    let mut m = Abvass::new(dim);
    for i in 0..n {
        m.add_state(&format!("q{i}"));
    }
    for _ in 0..rules.max(1) {
        let q = r.gen_range(0..n);
        if r.gen_bool(0.25) {
            m.split.push((q, r.gen_range(0..n), r.gen_range(0..n)));
        } else {
            let mut u = vec![0; dim];
            u[r.gen_range(0..dim)] = if r.gen_bool(0.5) { 1 } else { -1 };
            m.unary.push((q, u, r.gen_range(0..n)));
        }
    }
    let leaves = vec![r.gen_range(0..n)];
    let target = Config::new(r.gen_range(0..n), (0..dim).map(|_| r.gen_range(0..=2)).collect());
    (m, leaves, target)
}

fn bvass_corpus(p: &Params) -> Vec<(Abvass, Vec<usize>, Config<usize>)> {
    if p.size == 0 {
        return Vec::new();
    }
    let mut r = rng(p.seed);
    (0..p.count).map(|_| random_bvass(&mut r, p.size)).collect()
}

type PrenexInstance = (Vec<Formula>, Vec<Formula>, Formula);

fn prenex_corpus(p: &Params) -> Vec<PrenexInstance> {
    if p.size == 0 {
        return Vec::new();
    }
    let g = Grammar::implicational(&["p", "q"]);
    let mut r = rng(p.seed);
    (0..p.count)
        .map(|_| {
            let mut fs = g.random_list(&mut r, p.size, 4);
            let a = fs.pop().expect("non-empty");
            let k = r.gen_range(0..=fs.len().min(2));
            let delta = fs.split_off(k);
            (fs, delta, a)
        })
        .collect()
}

fn fl_grammar() -> Grammar {
    let atoms = vec![Formula::var("p"), Formula::var("q"), Formula::one(), Formula::bot()];
    Grammar::new(atoms, &[BinOp::Tensor, BinOp::Lolli, BinOp::With, BinOp::Plus], &[])
}

fn deducibility_corpus(p: &Params) -> Vec<(Vec<Formula>, Sequent)> {
    if p.size == 0 {
        return Vec::new();
    }
    let g = fl_grammar();
    let mut r = rng(p.seed);
    (0..p.count)
        .map(|_| {
            let k = r.gen_range(0..=2);
            let mut phi = Vec::new();
            for _ in 0..k {
                let n = r.gen_range(1..=p.size);
                phi.push(g.random(&mut r, n));
            }
            let mut fs = g.random_list(&mut r, p.size, 3);
            let stoup = if r.gen_bool(0.8) { fs.pop() } else { None };
            (phi, Sequent::intuitionistic(fs, stoup))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// instance runners

fn route(o: &mut Outcome, name: &str, sys: &System, s: &Sequent, b: &Budget) {
    match prove(sys, s, b) {
        Ok(v) => o.verdict(name, sys, &v),
        Err(e) => o.error(name, e),
    }
}

fn translation_pair(s: &Sequent, classical: &System, intuitionistic: &System, p: &Params) -> Outcome {
    let mut o = Outcome::new(format!("{s} [{}/{}]", classical.name.as_str(), intuitionistic.name.as_str()));
    route(&mut o, classical.name.as_str(), classical, s, &p.budget);
    match translate_sequent_fresh(s) {
        Ok(t) => route(&mut o, intuitionistic.name.as_str(), intuitionistic, &t, &p.budget),
        Err(e) => o.error("translate", e),
    }
    o
}

fn translation_illw(s: &Sequent, p: &Params) -> Vec<Outcome> {
    vec![
        translation_pair(s, &System::llw(), &System::illw(), p),
        translation_pair(s, &System::ellw(), &System::ielw(), p),
    ]
}

fn translation_ilzw(s: &Sequent, p: &Params) -> Vec<Outcome> {
    [(System::llw(), System::ilzw()), (System::ellw(), System::iezw())]
        .into_iter()
        .map(|(c, i)| {
            let mut o = Outcome::new(format!("{s} [{}/{}]", c.name.as_str(), i.name.as_str()));
            route(&mut o, c.name.as_str(), &c, s, &p.budget);
            match translate_sequent_bot(s) {
                Ok(t) => route(&mut o, i.name.as_str(), &i, &t, &p.budget),
                Err(e) => o.error("translate", e),
            }
            o
        })
        .collect()
}

fn exponential_lift((gamma, a): &(Vec<Formula>, Formula), p: &Params) -> Outcome {
    let mut fs: Vec<Formula> = gamma.iter().cloned().map(Formula::why_not).collect();
    let base = fs.clone();
    fs.push(a.clone());
    let plain = Sequent::classical(fs);
    let mut lifted = base;
    lifted.push(Formula::bang(a.clone()));
    let lifted = Sequent::classical(lifted);
    let mut o = Outcome::new(format!("{plain}"));
    route(&mut o, "LLW", &System::llw(), &plain, &p.budget);
    route(&mut o, "ELLW", &System::ellw(), &lifted, &p.budget);
    o
}

/// Prover and machine verdicts for `⊢ F` together with the machine tree.
pub struct EncoderRun {
    pub formula: Formula,
    pub outcome: Outcome,
    pub machine: Option<EncodedMachine>,
    pub tree: Option<Arc<DeductionTree<EState>>>,
}

pub fn encoder_outcome(f: &Formula, variant: Variant, p: &Params) -> EncoderRun {
    let sys = variant.system();
    let s = Sequent::intuitionistic(Vec::new(), Some(f.clone()));
    let mut o = Outcome::new(format!("{s} [{variant}]"));
    route(&mut o, sys.name.as_str(), &sys, &s, &p.budget);
    let em = match encode_formula(f, variant) {
        Ok(em) => em,
        Err(e) => {
            o.error("machine", e);
            return EncoderRun { formula: f.clone(), outcome: o, machine: None, tree: None };
        }
    };
    let mut tree = None;
    match em.reach(&s, p.reach) {
        Ok((r, _)) => {
            if let Reach::Found(t) = &r {
                o.certificates += 1;
                if let Err(e) = check_tree(&em, &[EState::Leaf], t, true) {
                    o.rejected.push(format!("machine: {e}"));
                }
                tree = Some(t.clone());
            }
            o.verdicts.push(("machine".into(), r.decided()));
        }
        Err(e) => o.error("machine", e),
    }
    EncoderRun { formula: f.clone(), outcome: o, machine: Some(em), tree }
}

pub fn bvass_outcome(m: &Abvass, leaves: &[usize], c: &Config<usize>, p: &Params) -> Outcome {
    let mut o = Outcome::new(format!("{} at {}", m.to_text().replace('\n', "; "), config_text(m, c)));
    match search_deduction(m, leaves, c, true, p.reach) {
        Ok((r, _)) => {
            if let Reach::Found(t) = &r {
                o.certificates += 1;
                if let Err(e) = check_tree(m, leaves, t, true) {
                    o.rejected.push(format!("machine: {e}"));
                }
            }
            o.verdicts.push(("machine".into(), r.decided()));
        }
        Err(e) => o.error("machine", e),
    }
    match encode_bvass_to_sequent(m, leaves, c) {
        Ok(s) => route(&mut o, "LLW", &System::llw(), &s, &p.budget),
        Err(e) => o.error("LLW", e),
    }
    o
}

fn config_text(m: &Abvass, c: &Config<usize>) -> String {
    let v: Vec<String> = c.vector.iter().map(u32::to_string).collect();
    format!("{}:[{}]", m.names[c.state], v.join(","))
}

fn lolli_bang() -> Fragment {
    Fragment::of(&[Connective::Lolli, Connective::Bang])
}

fn prenex_five_way((gamma, delta, a): &PrenexInstance, p: &Params) -> Outcome {
    let mut ante: Vec<Formula> = gamma.iter().cloned().map(Formula::bang).collect();
    ante.extend(delta.iter().cloned());
    let whole = Sequent::intuitionistic(ante, Some(a.clone()));
    let rest = Sequent::intuitionistic(delta.clone(), Some(a.clone()));
    let mut o = Outcome::new(format!("{whole}"));
    route(&mut o, "ILLW", &System::illw().restrict(lolli_bang()), &whole, &p.budget);
    for base in [System::bck(), System::flplus_ei(), System::flei(), System::flew()] {
        direct(&mut o, &base, gamma, &rest, p);
    }
    o
}

fn direct(o: &mut Outcome, base: &System, phi: &[Formula], s: &Sequent, p: &Params) {
    let name = base.name.as_str();
    match base.clone().with_axioms(phi) {
        Ok(sys) => match deduce_direct(base, phi, s, &p.budget) {
            Ok(v) => o.verdict(name, &sys, &v),
            Err(e) => o.error(name, e),
        },
        Err(e) => o.error(name, e),
    }
}

fn deducibility((phi, s): &(Vec<Formula>, Sequent), p: &Params) -> Outcome {
    let names: Vec<String> = phi.iter().map(|f| f.to_string()).collect();
    let mut o = Outcome::new(format!("[{}] {s}", names.join(", ")));
    let base = System::flew();
    direct(&mut o, &base, phi, s, p);
    let mut ante: Vec<Formula> = phi.iter().cloned().map(Formula::bang).collect();
    ante.extend(s.antecedent().iter().cloned());
    let banged = Sequent::intuitionistic(ante, s.stoup().cloned());
    match deduce(&base, phi, s, &p.budget) {
        Ok(v) => o.verdict("ILZW'", &System::ilzw_prime(), &v),
        Err(e) => o.error("ILZW'", e),
    }
    match prenex_expand_prove(&base, &banged, &p.budget) {
        Ok(r) => o.verdict("expansion", &base, &r.verdict),
        Err(e) => o.error("expansion", e),
    }
    o
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(size: usize, count: usize) -> Params {
        Params { size, count, seed: 7, ..Params::default() }
    }

    #[test]
    fn names_and_aliases() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert_eq!("illtoll5".parse::<Suite>().unwrap(), Suite::TranslationIllw);
        assert_eq!("encodingofILZW2".parse::<Suite>().unwrap(), Suite::EncodingIlzwPrime);
        assert!(matches!("nope".parse::<Suite>(), Err(CrosscheckError::UnknownSuite(_))));
    }

    #[test]
    fn empty_corpus() {
        for s in Suite::ALL {
            let r = run(s, &small(0, 10)).unwrap();
            assert_eq!(r.instances(), 0);
            assert!(r.passed());
        }
    }

    #[test]
    fn each_suite_agrees_on_a_small_corpus() {
        for s in Suite::ALL {
            let r = run(s, &small(5, 12)).unwrap();
            assert!(r.passed(), "{r}");
            assert!(r.instances() > 0);
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let a = run(Suite::TranslationIllw, &small(6, 20)).unwrap();
        let b = run(Suite::TranslationIllw, &small(6, 20)).unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }
}
