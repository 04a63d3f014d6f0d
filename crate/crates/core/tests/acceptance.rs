//! Acceptance checks. Each criterion prints one PASS/FAIL line; the test
//! fails if any criterion fails.

mod common;

use std::collections::HashSet;
use std::io::Write;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;

use subtower::abvass::{check_tree, is_regular, normalize_regular, search_deduction, Abvass, DeductionTree, Reach, ReachBudget};
use subtower::calculi::{check_proof, Rule, System};
use subtower::corpus::{intuitionistic_sequents, rng, Grammar};
use subtower::crosscheck::{self, encoder_outcome, EncoderRun, Params, Report, Suite};
use subtower::encoders::{encode_bvass_to_sequent, is_standard, normalize_standard, EState, Variant};
use subtower::formulas::{dual, BinOp, Connective, Formula, Fragment, Sequent, UnOp};
use subtower::prover::{bck_bound, prove, prove_bck, Budget, Verdict};
use subtower::translate::{erase_sequent, neg, neg_translate};

use common::{lossy_reachable, NaiveBck, HAND_BUILT};

/// Witness bookkeeping for the certificate criterion.
#[derive(Default)]
struct Certs {
    checked: usize,
    rejected: Vec<String>,
}

impl Certs {
    fn proof(&mut self, sys: &System, v: &Verdict, what: &str) {
        if let Verdict::Proved(t) = v {
            self.checked += 1;
            if let Err(e) = check_proof(sys, t, false) {
                self.rejected.push(format!("{what}: {e}"));
            }
        }
    }

    fn report(&mut self, r: &Report) {
        self.checked += r.certificates();
        self.rejected.extend(r.rejections().iter().map(|s| s.to_string()));
    }
}

struct Line {
    ok: bool,
    detail: String,
}

fn criterion(n: u32, limit: Duration, lines: &mut Vec<bool>, f: impl FnOnce() -> Line) {
    let t = Instant::now();
    let line = f();
    let el = t.elapsed();
    let ok = line.ok && el <= limit;
    let over = if el > limit { format!(" (over the {}s limit)", limit.as_secs()) } else { String::new() };
    // written to the handle directly so the line survives output capture
    let mut out = std::io::stdout();
    let _ = writeln!(out, "criterion {n:>2}: {} {:.1}s{over}  {}", if ok { "PASS" } else { "FAIL" }, el.as_secs_f64(), line.detail);
    lines.push(ok);
}

fn summary(r: &Report) -> String {
    format!(
        "{}: {} instances, {} conclusive, {} agree, {} disagree",
        r.suite,
        r.instances(),
        r.conclusive(),
        r.agreements(),
        r.disagreements().len()
    )
}

fn closure_size(f: &Formula) -> usize {
    let mut s = HashSet::new();
    f.visit(&mut |g| {
        s.insert(g.clone());
    });
    s.len()
}

fn c1() -> Line {
    let mut atoms = Grammar::literals(&["p", "q", "r"]);
    atoms.extend(Grammar::constants());
    let g = Grammar::new(atoms, &[BinOp::Tensor, BinOp::Par, BinOp::With, BinOp::Plus], &[UnOp::Bang, UnOp::WhyNot]);
    let mut r = rng(1);
    let mut failures = 0;
    for _ in 0..10_000 {
        let n = r.gen_range(1..=30);
        let a = g.random(&mut r, n);
        if dual(&dual(&a).unwrap()).unwrap() != a {
            failures += 1;
        }
    }
    Line { ok: failures == 0, detail: format!("10000 formulas, {failures} failures") }
}

fn c2(certs: &mut Certs) -> Line {
    let sequents = intuitionistic_sequents(&Grammar::implicational(&["p", "q"]), 10);
    let mut oracle = NaiveBck::default();
    let (mut disagree, mut over, mut proved) = (0, 0, 0);
    let mut worst = 0.0f64;
    for s in &sequents {
        let v = prove_bck(s).unwrap();
        certs.proof(&System::bck(), &v, &s.to_string());
        let min = oracle.min_proof(s);
        if v.is_proved() != min.is_some() {
            disagree += 1;
            println!("  disagreement on {s}");
        }
        if let Some(m) = min {
            proved += 1;
            let b = bck_bound(s);
            worst = worst.max(m as f64 / b as f64);
            if m > b {
                over += 1;
                println!("  minimal proof of {s} has {m} nodes, bound {b}");
            }
        }
    }
    Line {
        ok: disagree == 0 && over == 0,
        detail: format!(
            "{} sequents, {proved} provable, {disagree} disagreements, {over} above B(s), max minimal/B(s) = {worst:.2}",
            sequents.len()
        ),
    }
}

fn c3(certs: &mut Certs) -> Line {
    let forms: Vec<Formula> = Grammar::multiplicative(&["p", "q"]).exhaustive(7).into_iter().flatten().collect();
    let x = Formula::var("x");
    let budget = Budget::default();
    let rows: Vec<(Verdict, Verdict, Sequent, Sequent)> = forms
        .par_iter()
        .map(|a| {
            let s = Sequent::classical(vec![a.clone()]);
            let t = Sequent::intuitionistic(vec![], Some(neg(neg_translate(a, &x).unwrap(), &x)));
            (prove(&System::llw(), &s, &budget).unwrap(), prove_bck(&t).unwrap(), s, t)
        })
        .collect();
    let (mut conclusive, mut disagree) = (0, 0);
    for (l, b, s, t) in &rows {
        certs.proof(&System::llw(), l, &s.to_string());
        certs.proof(&System::bck(), b, &t.to_string());
        if let Some(v) = l.decided() {
            conclusive += 1;
            if v != b.is_proved() {
                disagree += 1;
                println!("  disagreement on {s}");
            }
        }
    }
    let rate = conclusive as f64 / rows.len() as f64;
    Line {
        ok: disagree == 0 && rate >= 0.95,
        detail: format!("{} formulas, {:.1}% conclusive, {disagree} disagreements", rows.len(), 100.0 * rate),
    }
}

fn c4(certs: &mut Certs) -> Line {
    let mut ok = true;
    let mut parts = Vec::new();
    for (suite, seed) in [(Suite::TranslationIllw, 41), (Suite::TranslationIlzw, 42), (Suite::TranslationIll, 43)] {
        let r = crosscheck::run(suite, &Params { size: 8, count: 300, seed, ..Params::default() }).unwrap();
        certs.report(&r);
        ok &= r.disagreements().is_empty();
        parts.push(summary(&r));
    }
    let s = Sequent::classical(vec![Formula::why_not(Formula::dual_var("p")), Formula::var("p")]);
    let b = Budget::default();
    let llw = prove(&System::llw(), &s, &b).unwrap();
    let ellw = prove(&System::ellw(), &s, &b).unwrap();
    certs.proof(&System::llw(), &llw, "witness pair");
    let pair = llw.is_proved() && ellw == Verdict::Refuted;
    ok &= pair;
    parts.push(format!("{s}: LLW {}, ELLW {}", llw.label(), ellw.label()));
    Line { ok, detail: parts.join("; ") }
}

fn c5(certs: &mut Certs) -> Line {
    let budget = Budget { max_prenex_copies: 4, ..Budget::default() };
    let r = crosscheck::run(Suite::Deducibility, &Params { size: 6, count: 200, seed: 5, budget, ..Params::default() }).unwrap();
    certs.report(&r);
    Line { ok: r.disagreements().is_empty(), detail: summary(&r) }
}

fn c6(certs: &mut Certs) -> Line {
    let r = crosscheck::run(Suite::PrenexFiveWay, &Params { size: 7, count: 150, seed: 6, ..Params::default() }).unwrap();
    certs.report(&r);
    Line { ok: r.disagreements().is_empty(), detail: summary(&r) }
}

struct MachineRuns {
    encoder: Vec<EncoderRun>,
    bvass: Vec<(Abvass, Vec<usize>, Arc<DeductionTree<usize>>)>,
}

fn c7(certs: &mut Certs, runs: &mut MachineRuns) -> Line {
    let ops = [BinOp::Tensor, BinOp::Lolli, BinOp::With, BinOp::Plus];
    let small = Grammar::new(Grammar::vars(&["p"]), &ops, &[UnOp::Bang]).closure_bounded(5);
    let mut atoms = Grammar::vars(&["p"]);
    atoms.extend(Grammar::constants());
    let big = Grammar::new(atoms, &ops, &[UnOp::Bang]);
    let mut r = rng(7);
    let mut larger = Vec::new();
    while larger.len() < 100 {
        let n = r.gen_range(7..=12);
        let f = big.random(&mut r, n);
        if closure_size(&f) > 5 && closure_size(&f) <= 64 {
            larger.push(f);
        }
    }
    let corpus: Vec<Formula> = small.iter().chain(&larger).cloned().collect();
    let p = Params::default();
    let mut parts = Vec::new();
    let mut ok = true;
    for variant in [Variant::IPrime, Variant::E] {
        let rs: Vec<EncoderRun> = corpus.par_iter().map(|f| encoder_outcome(f, variant, &p)).collect();
        let report = Report { suite: if variant == Variant::E { Suite::EncodingIezw } else { Suite::EncodingIlzwPrime }, outcomes: rs.iter().map(|r| r.outcome.clone()).collect() };
        certs.report(&report);
        ok &= report.disagreements().is_empty();
        for d in report.disagreements() {
            println!("  disagreement on {}", d.instance);
        }
        parts.push(summary(&report));
        runs.encoder.extend(rs);
    }
    let (mut agree, mut conclusive) = (0, 0);
    for (text, root) in HAND_BUILT {
        let m = Abvass::parse(text).unwrap();
        let leaves = m.leaves.clone();
        let c = m.parse_config(root).unwrap();
        let small = lossy_reachable(&m, &leaves, 6);
        let large = lossy_reachable(&m, &leaves, 10);
        let truth = small.contains(&(c.state, c.vector.clone()));
        assert_eq!(truth, large.contains(&(c.state, c.vector.clone())), "oracle not stable on {text}");
        let s = encode_bvass_to_sequent(&m, &leaves, &c).unwrap();
        let v = prove(&System::llw(), &s, &p.budget).unwrap();
        certs.proof(&System::llw(), &v, &s.to_string());
        if let Some(d) = v.decided() {
            conclusive += 1;
            if d == truth {
                agree += 1;
            } else {
                ok = false;
                println!("  disagreement on {text:?} at {root}: reachable {truth}, LLW {}", v.label());
            }
        }
        if let (Reach::Found(t), _) = search_deduction(&m, &leaves, &c, true, ReachBudget::default()).unwrap() {
            certs.checked += 1;
            if let Err(e) = check_tree(&m, &leaves, &t, true) {
                certs.rejected.push(format!("{text:?}: {e}"));
            }
            runs.bvass.push((m, leaves, t));
        }
    }
    parts.push(format!("bvass-llw: 20 machines, {conclusive} conclusive, {agree} agree"));
    Line { ok, detail: parts.join("; ") }
}

fn c8(runs: &MachineRuns) -> Line {
    let trees: Vec<&EncoderRun> = runs.encoder.iter().filter(|r| r.tree.is_some()).collect();
    let failures: Vec<String> = trees
        .par_iter()
        .filter_map(|r| {
            let (em, t) = (r.machine.as_ref().unwrap(), r.tree.as_ref().unwrap());
            let reg = match normalize_regular(em, &[EState::Leaf], t) {
                Ok(x) => x,
                Err(e) => return Some(format!("{}: {e}", r.formula)),
            };
            if !is_regular(&reg) || check_tree(em, &[EState::Leaf], &reg, true).is_err() || reg.config() != t.config() {
                return Some(format!("{}: regular form rejected", r.formula));
            }
            match normalize_standard(em, t) {
                Ok(s) if is_standard(em, &s) && s.config() == t.config() => None,
                Ok(_) => Some(format!("{}: standard form rejected", r.formula)),
                Err(e) => Some(format!("{}: {e}", r.formula)),
            }
        })
        .collect();
    let mut bad = failures.len();
    for f in failures.iter().take(5) {
        println!("  {f}");
    }
    for (m, leaves, t) in &runs.bvass {
        let reg = normalize_regular(m, leaves, t).unwrap();
        if !is_regular(&reg) || check_tree(m, leaves, &reg, true).is_err() || reg.config() != t.config() {
            bad += 1;
        }
    }
    Line {
        ok: bad == 0,
        detail: format!("{} encoder trees, {} machine trees, {bad} failures", trees.len(), runs.bvass.len()),
    }
}

fn c9(certs: &mut Certs) -> Line {
    let g = Grammar::new(Grammar::vars(&["p", "q"]), &[BinOp::Lolli], &[UnOp::Bang, UnOp::Para]);
    let mut r = rng(9);
    let ilal = System::ilal();
    let target = System::illw().restrict(Fragment::of(&[Connective::Lolli, Connective::Bang]));
    let mut seen = HashSet::new();
    let mut found = Vec::new();
    let mut tried = 0;
    while found.len() < 100 && tried < 100_000 {
        tried += 1;
        let mut fs = g.random_list(&mut r, 6, 3);
        let goal = fs.pop().unwrap();
        let s = Sequent::intuitionistic(fs, Some(goal));
        if !s.connectives_used().contains(Connective::Para) && !s.connectives_used().contains(Connective::Bang) {
            continue;
        }
        if !seen.insert(s.clone()) {
            continue;
        }
        let v = prove(&ilal, &s, &Budget::default()).unwrap();
        if v.is_proved() {
            certs.proof(&ilal, &v, &s.to_string());
            found.push(s);
        }
    }
    let mut proved = 0;
    for s in &found {
        let e = erase_sequent(s);
        let v = prove(&target, &e, &Budget::default()).unwrap();
        certs.proof(&target, &v, &e.to_string());
        if v.is_proved() {
            proved += 1;
        } else {
            println!("  {s} erased to {e}: {}", v.label());
        }
    }
    Line {
        ok: found.len() == 100 && proved == 100,
        detail: format!("{} ILAL-provable sequents ({tried} drawn), {proved} erasures proved", found.len()),
    }
}

#[test]
fn acceptance() {
    let mut lines = Vec::new();
    let mut certs = Certs::default();
    let mut runs = MachineRuns { encoder: Vec::new(), bvass: Vec::new() };
    let s = Duration::from_secs;
    criterion(1, s(1), &mut lines, c1);
    criterion(2, s(120), &mut lines, || c2(&mut certs));
    criterion(3, s(300), &mut lines, || c3(&mut certs));
    criterion(4, s(600), &mut lines, || c4(&mut certs));
    criterion(5, s(600), &mut lines, || c5(&mut certs));
    criterion(6, s(600), &mut lines, || c6(&mut certs));
    criterion(7, s(1200), &mut lines, || c7(&mut certs, &mut runs));
    criterion(8, s(120), &mut lines, || c8(&runs));
    criterion(9, s(300), &mut lines, || c9(&mut certs));
    criterion(10, s(1), &mut lines, || {
        for r in certs.rejected.iter().take(5) {
            println!("  rejected: {r}");
        }
        Line {
            ok: certs.rejected.is_empty(),
            detail: format!("{} witnesses checked, {} rejected", certs.checked, certs.rejected.len()),
        }
    });
    let failed: Vec<usize> = lines.iter().enumerate().filter(|(_, ok)| !**ok).map(|(i, _)| i + 1).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

#[test]
fn weakening_free_proofs_are_measured_without_w() {
    // the minimal count ignores weakening, as the bound does
    let s = Sequent::intuitionistic(vec![Formula::var("q")], Some(Formula::lolli(Formula::var("p"), Formula::var("p"))));
    assert_eq!(NaiveBck::default().min_proof(&s), Some(2));
    if let Verdict::Proved(t) = prove_bck(&s).unwrap() {
        assert!(t.size_without(&[Rule::W]) <= bck_bound(&s));
    } else {
        panic!("not proved");
    }
}
