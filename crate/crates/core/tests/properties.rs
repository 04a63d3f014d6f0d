use proptest::prelude::*;

use subtower::abvass::{search_deduction, Abvass, Config, Reach, ReachBudget};
use subtower::calculi::{applicable_rules, check_step, System};
use subtower::corpus::{rng, Grammar};
use subtower::crosscheck::random_bvass;
use subtower::formulas::{dual, parse_formula, parse_sequent, BinOp, Formula, Polarity, Sequent, UnOp};

fn classical() -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        prop::sample::select(vec!["p", "q", "r1"]).prop_map(Formula::var),
        prop::sample::select(vec!["p", "q"]).prop_map(Formula::dual_var),
        prop::sample::select(Grammar::constants()),
    ];
    leaf.prop_recursive(5, 40, 2, |inner| {
        prop_oneof![
            (prop::sample::select(vec![BinOp::Tensor, BinOp::Par, BinOp::With, BinOp::Plus]), inner.clone(), inner.clone())
                .prop_map(|(op, a, b)| Formula::bin(op, a, b)),
            (prop::sample::select(vec![UnOp::Bang, UnOp::WhyNot]), inner).prop_map(|(op, a)| Formula::un(op, a)),
        ]
    })
}

fn intuitionistic() -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        prop::sample::select(vec!["p", "q"]).prop_map(Formula::var),
        prop::sample::select(Grammar::constants()),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (prop::sample::select(vec![BinOp::Tensor, BinOp::Lolli, BinOp::With, BinOp::Plus]), inner.clone(), inner.clone())
                .prop_map(|(op, a, b)| Formula::bin(op, a, b)),
            inner.prop_map(Formula::bang),
        ]
    })
}

proptest! {
    #[test]
    fn classical_print_parse(a in classical()) {
        prop_assert_eq!(parse_formula(&a.to_string(), Polarity::Classical).unwrap(), a);
    }

    #[test]
    fn intuitionistic_print_parse(a in intuitionistic(), b in intuitionistic()) {
        prop_assert_eq!(parse_formula(&a.to_string(), Polarity::Intuitionistic).unwrap(), a.clone());
        let s = Sequent::intuitionistic(vec![a.clone(), b.clone()], Some(a));
        prop_assert_eq!(parse_sequent(&s.to_string(), Polarity::Intuitionistic).unwrap(), s);
    }

    #[test]
    fn duality_is_an_involution(a in classical()) {
        let d = dual(&a).unwrap();
        prop_assert_eq!(d.size(), a.size());
        prop_assert_eq!(dual(&d).unwrap(), a);
    }

    #[test]
    fn rule_applications_pass_the_step_checker(
        ante in prop::collection::vec(intuitionistic(), 0..3),
        goal in prop::option::of(intuitionistic()),
        which in 0usize..5,
    ) {
        let sys = [System::ilzw(), System::ilzw_prime(), System::iezw(), System::illw(), System::ill()][which].clone();
        let s = Sequent::intuitionistic(ante, goal);
        if sys.check_sequent(&s).is_ok() {
            for app in applicable_rules(&sys, &s).unwrap() {
                let ps: Vec<&Sequent> = app.premises.iter().collect();
                let r = check_step(&sys, &s, app.rule, &app.principal, &ps);
                prop_assert!(r.is_ok(), "{} by {:?}: {:?}", s, app.rule, r);
            }
        }
    }

    #[test]
    fn classical_rule_applications_pass_the_step_checker(
        fs in prop::collection::vec(classical(), 1..3),
        which in 0usize..3,
    ) {
        let sys = [System::llw(), System::ll(), System::ellw()][which].clone();
        let s = Sequent::classical(fs);
        for app in applicable_rules(&sys, &s).unwrap() {
            let ps: Vec<&Sequent> = app.premises.iter().collect();
            let r = check_step(&sys, &s, app.rule, &app.principal, &ps);
            prop_assert!(r.is_ok(), "{} by {:?}: {:?}", s, app.rule, r);
        }
    }

    #[test]
    fn lossy_reachability_is_upward_closed(seed in any::<u64>(), rules in 1usize..5, coord in 0usize..2) {
        let (m, leaves, c): (Abvass, Vec<usize>, Config<usize>) = random_bvass(&mut rng(seed), rules);
        let b = ReachBudget::default();
        if let (Reach::Found(_), _) = search_deduction(&m, &leaves, &c, true, b).unwrap() {
            let mut up = c.vector.clone();
            up[coord % m.dim] += 1;
            let r = search_deduction(&m, &leaves, &Config::new(c.state, up), true, b).unwrap().0;
            prop_assert!(!matches!(r, Reach::Refuted));
        }
    }
}
