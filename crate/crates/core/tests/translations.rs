use subtower::calculi::{check_proof, System};
use subtower::corpus::Grammar;
use subtower::formulas::{dual, BinOp, Formula, Sequent, UnOp};
use subtower::prover::{prove, Budget, Verdict};
use subtower::translate::{neg_translate, phi_set, underline};

fn corpus(max: usize) -> Vec<Formula> {
    let mut atoms = Grammar::literals(&["p", "q"]);
    atoms.extend(Grammar::constants());
    let g = Grammar::new(atoms, &[BinOp::Tensor, BinOp::Par, BinOp::With, BinOp::Plus], &[UnOp::Bang, UnOp::WhyNot]);
    g.exhaustive(max).into_iter().flatten().collect()
}

#[test]
fn a_formula_and_its_dual_translate_to_a_contradiction() {
    let x = Formula::var("x");
    let sys = System::illw();
    let mut unknown = 0;
    for a in corpus(3) {
        let s = Sequent::intuitionistic(
            vec![neg_translate(&a, &x).unwrap(), neg_translate(&dual(&a).unwrap(), &x).unwrap()],
            Some(x.clone()),
        );
        match prove(&sys, &s, &Budget::default()).unwrap() {
            Verdict::Proved(t) => check_proof(&sys, &t, false).unwrap(),
            Verdict::Refuted => panic!("{s} refuted"),
            Verdict::Unknown => unknown += 1,
        }
    }
    assert_eq!(unknown, 0);
}

#[test]
fn translation_is_provably_equivalent_up_to_the_axioms() {
    // ⊢ underline(A^[F]), A in LLW with the two axioms for underline(F), on atoms
    let x = Formula::var("x");
    let fx = underline(&x).unwrap();
    let sys = System::llw().with_axioms(&phi_set(&fx).unwrap()).unwrap();
    for a in [Formula::var("p"), Formula::dual_var("p"), Formula::one(), Formula::bot(), Formula::top(), Formula::zero()] {
        let s = Sequent::classical(vec![underline(&neg_translate(&a, &x).unwrap()).unwrap(), a.clone()]);
        let v = prove(&sys, &s, &Budget::default()).unwrap();
        assert!(v.is_proved(), "{s}: {}", v.label());
        check_proof(&sys, v.proof().unwrap(), false).unwrap();
    }
}
