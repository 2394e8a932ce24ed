use std::collections::BTreeSet;

use invsynth_core::frontend::{parse_formula, render_formula, InvariantFormat};
use invsynth_core::ir::{prime, to_primed, unprime, Atom, CmpOp, CnfPredicate, Formula, PartialState, Term};
use invsynth_core::smt::{CheckOutcome, SmtConfig, SmtSession};
use proptest::prelude::*;

fn vars() -> Vec<String> {
    ["a", "b", "c"].iter().map(|s| s.to_string()).collect()
}

fn total_state() -> impl Strategy<Value = PartialState> {
    proptest::collection::vec(-20i64..=20, 3).prop_map(|xs| {
        PartialState::from_pairs(vars().into_iter().zip(xs))
    })
}

fn atom() -> impl Strategy<Value = Atom> {
    (proptest::collection::vec(-4i64..=4, 3), -10i64..=10)
        .prop_map(|(w, b)| Atom::new(vars().into_iter().zip(w).filter(|(_, c)| *c != 0), b))
}

fn cnf() -> impl Strategy<Value = CnfPredicate> {
    proptest::collection::vec(proptest::collection::vec(atom(), 0..3), 0..3).prop_map(CnfPredicate::new)
}

fn term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        (-9i64..=9).prop_map(Term::Const),
        proptest::sample::select(vars()).prop_map(Term::Var),
    ];
    leaf.prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            proptest::collection::vec(inner.clone(), 2..4).prop_map(Term::Add),
            proptest::collection::vec(inner.clone(), 2..3).prop_map(Term::Sub),
            inner.clone().prop_map(|t| Term::Neg(Box::new(t))),
            (-3i64..=3, inner).prop_map(|(k, t)| Term::Mul(vec![Term::Const(k), t])),
        ]
    })
}

fn cmp_op() -> impl Strategy<Value = CmpOp> {
    proptest::sample::select(vec![CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge])
}

fn formula() -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        any::<bool>().prop_map(Formula::Bool),
        (cmp_op(), term(), term()).prop_map(|(op, a, b)| Formula::Cmp(op, a, b)),
    ];
    leaf.prop_recursive(3, 16, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(|f| Formula::Not(Box::new(f))),
            proptest::collection::vec(inner.clone(), 0..3).prop_map(Formula::And),
            proptest::collection::vec(inner.clone(), 0..3).prop_map(Formula::Or),
            (inner.clone(), inner).prop_map(|(a, b)| Formula::Implies(Box::new(a), Box::new(b))),
        ]
    })
}

/// Reference semantics for `a > 0` style atoms on a total state.
fn atom_holds(a: &Atom, s: &PartialState) -> bool {
    let sum: i64 = vars().iter().map(|v| a.coeff(v) * s.get(v).unwrap()).sum();
    sum + a.bias > 0
}

proptest! {
    #[test]
    fn predicate_and_formula_agree(p in cnf(), s in total_state()) {
        let expected = p.conjuncts.iter().all(|c| c.iter().any(|a| atom_holds(a, &s)));
        prop_assert_eq!(p.eval(&s), expected);
        prop_assert_eq!(p.to_formula(&vars()).eval(&s).unwrap(), expected);
    }

    #[test]
    fn negated_atoms_are_complements(a in atom(), s in total_state()) {
        prop_assert_eq!(a.negate().eval(&s), !a.eval(&s));
    }

    #[test]
    fn connectives_follow_their_truth_tables(f in formula(), g in formula(), s in total_state()) {
        let (x, y) = (f.eval(&s).unwrap(), g.eval(&s).unwrap());
        prop_assert_eq!(Formula::not(f.clone()).eval(&s).unwrap(), !x);
        prop_assert_eq!(Formula::and([f.clone(), g.clone()]).eval(&s).unwrap(), x && y);
        prop_assert_eq!(Formula::or([f.clone(), g.clone()]).eval(&s).unwrap(), x || y);
        prop_assert_eq!(Formula::implies(f, g).eval(&s).unwrap(), !x || y);
    }

    #[test]
    fn priming_round_trips(f in formula(), cur in 0usize..4, gap in 1usize..3) {
        let vs = vars();
        let primed = to_primed(&f, &vs[..2]);
        let stepped = prime(&primed, &vs, cur, cur + gap).unwrap();
        let suffixes = [format!("@{cur}"), format!("@{}", cur + gap)];
        let stepped_only = stepped.free_vars().iter().all(|v| suffixes.iter().any(|s| v.ends_with(s.as_str())));
        prop_assert!(stepped_only);
        prop_assert_eq!(unprime(&stepped, &vs, cur, cur + gap).unwrap(), primed);
    }

    #[test]
    fn projection_onto_every_variable_is_the_identity(s in total_state(), keep in proptest::sample::subsequence(vars(), 0..=3)) {
        prop_assert_eq!(s.project(&vars()), s.clone());
        let part = s.project(&keep);
        prop_assert!(part.subsumes(&s));
        let bound: BTreeSet<&String> = part.bindings().keys().collect();
        prop_assert_eq!(bound, keep.iter().collect::<BTreeSet<_>>());
    }

    #[test]
    fn rendered_formulas_parse_back(f in formula(), s in total_state()) {
        let text = render_formula(&f, &vars(), InvariantFormat::SmtlibTerm);
        let back = parse_formula(&text, &vars()).unwrap();
        prop_assert_eq!(back.eval(&s).unwrap(), f.eval(&s).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Rendered predicates are SMT-equivalent to what they parse back to.
    #[test]
    fn render_round_trip_is_smt_equivalent(p in cnf()) {
        let f = p.to_formula(&vars());
        let back = parse_formula(&render_formula(&f, &vars(), InvariantFormat::SmtlibTerm), &vars()).unwrap();
        let iff = Formula::and([Formula::implies(f.clone(), back.clone()), Formula::implies(back, f)]);
        let mut session = SmtSession::new(SmtConfig::default());
        prop_assert_eq!(session.check_valid(&iff).unwrap(), CheckOutcome::Valid);
    }
}
