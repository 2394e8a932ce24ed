use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use invsynth_core::ir::{Atom, CnfPredicate, PartialState};
use invsynth_core::learner::{
    decode, encode, filter_variables, learn, negate_cnf, simplify_cnf, Dataset, LearnError, LearnSettings, LearnerConfig,
    Polarity, TopSemantics, WarmStart,
};
use invsynth_ilp::{solve, Budget, IlpOutcome, LinExpr, Rational, Relation};
use proptest::prelude::*;

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

/// Builds a state from `(name, Some(value) | None)` pairs.
fn st(vars: &[&str], vals: &[Option<i64>]) -> PartialState {
    let mut s = PartialState::new();
    for (v, x) in vars.iter().zip(vals) {
        if let Some(x) = x {
            s.bind(*v, *x);
        }
    }
    s
}

const IJKNY: [&str; 5] = ["i", "j", "k", "n", "y"];
const IJKN: [&str; 4] = ["i", "j", "k", "n"];

fn seed_samples() -> Dataset {
    let rows: [([Option<i64>; 5], bool); 4] = [
        ([Some(0), Some(0), Some(0), Some(0), None], true),
        ([Some(2), Some(3), Some(0), Some(1), Some(2)], true),
        ([Some(1), Some(-1), Some(0), Some(0), Some(-1)], false),
        ([Some(6), Some(4), Some(0), Some(5), Some(15)], false),
    ];
    let mut d = Dataset::new(names(&IJKNY));
    for (r, l) in rows {
        d.push(st(&IJKNY, &r), l);
    }
    d
}

fn refined_samples() -> Dataset {
    let mut d = seed_samples();
    d.push(st(&IJKNY, &[Some(0), Some(0), Some(-2), Some(-1), Some(0)]), false);
    d.push(st(&IJKNY, &[Some(2), Some(3), Some(-3), Some(1), Some(0)]), false);
    d
}

fn feature_samples(pos: &[[i64; 4]], neg: &[[i64; 4]]) -> Dataset {
    let mut d = Dataset::new(names(&IJKN));
    for r in pos {
        d.push(st(&IJKN, &r.map(Some)), true);
    }
    for r in neg {
        d.push(st(&IJKN, &r.map(Some)), false);
    }
    d
}

fn all_vars(d: &Dataset) -> BTreeSet<String> {
    d.vars.iter().cloned().collect()
}

fn zero_error(p: &CnfPredicate, d: &Dataset) -> bool {
    d.examples.iter().all(|(s, l)| p.eval(s) == *l)
}

/// Fixes the atoms of the learned (pre-negation) CNF in the encoding of
/// `data` at the given step and asks the solver whether the rest is feasible.
fn feasible_with(data: &Dataset, c: usize, d: usize, polarity: Polarity, learned: &[Vec<Atom>]) -> bool {
    let labels = match polarity {
        Polarity::Direct => data.clone(),
        Polarity::Flipped => Dataset {
            vars: data.vars.clone(),
            examples: data.examples.iter().map(|(s, l)| (s.clone(), !l)).collect(),
        },
    };
    let cfg = LearnerConfig::default().step(d, polarity);
    let cfg = LearnerConfig { conjuncts: c, ..cfg };
    let mut enc = encode(&labels, &cfg).unwrap();
    for ci in 0..c {
        for di in 0..d {
            let atom = learned.get(ci).and_then(|cl| cl.get(di)).cloned().unwrap_or(Atom::constant(0));
            for (j, v) in data.vars.iter().enumerate() {
                enc.model.add_constraint(LinExpr::new().term(enc.w[ci][di][j], 1), Relation::Eq, atom.coeff(v));
            }
            enc.model.add_constraint(LinExpr::new().term(enc.b[ci][di], 1), Relation::Eq, atom.bias);
        }
    }
    enc.model.clear_objective();
    !matches!(solve(&enc.model, &Budget::unlimited()).unwrap(), IlpOutcome::Infeasible)
}

/// Whether a classifier over `var` alone exists at the ladder steps up to
/// `max_step` (0: D=1 direct, 1: D=1 flipped, 2: D=2 direct, 3: D=2 flipped).
fn one_var_separator_exists(data: &Dataset, var: &str, max_step: usize) -> bool {
    let atoms: Vec<Atom> = (-3i64..=3)
        .flat_map(|w| (-20i64..=20).map(move |b| (w, b)))
        .map(|(w, b)| Atom::new([(var, w)], b))
        .collect();
    let ok = |p: &CnfPredicate| zero_error(p, data);
    for a in &atoms {
        if ok(&CnfPredicate::atom(a.clone())) || (max_step >= 1 && ok(&CnfPredicate::atom(a.negate()))) {
            return true;
        }
    }
    if max_step < 2 {
        return false;
    }
    for a in &atoms {
        for b in &atoms {
            let direct = CnfPredicate::new(vec![vec![a.clone(), b.clone()]]);
            let flipped = CnfPredicate::new(vec![vec![a.negate()], vec![b.negate()]]);
            if ok(&direct) || (max_step >= 3 && ok(&flipped)) {
                return true;
            }
        }
    }
    false
}

#[test]
fn seed_samples_need_two_variables() {
    let data = seed_samples();
    let start = Instant::now();
    let r = learn(&data, &all_vars(&data), &LearnSettings::default(), None).unwrap();
    let took = start.elapsed();
    assert!(zero_error(&r.predicate, &data));
    assert_eq!(r.relevant.len(), 2, "{:?}", r.predicate);
    assert_eq!(r.predicate.l1(), 2);
    assert!(took < Duration::from_secs(5), "{took:?}");
    // No single variable separates at the step the learner stopped at, so two
    // variables are the minimum there.
    assert_eq!(r.stats.disjuncts, 1);
    for v in &data.vars {
        assert!(!one_var_separator_exists(&data, v, r.stats.step), "{v} alone separates");
    }
    // An interval on j does exist one step further up the ladder.
    assert!(one_var_separator_exists(&data, "j", 3));
}

#[test]
fn refined_samples_exclude_y() {
    let data = refined_samples();
    let start = Instant::now();
    let r = learn(&data, &all_vars(&data), &LearnSettings::default(), None).unwrap();
    assert!(start.elapsed() < Duration::from_secs(10));
    assert!(zero_error(&r.predicate, &data), "{:?}", r.predicate);
    assert!(!r.relevant.contains("y"));
    // i <= j + k  /\  i <= n + 1, learned as its negation on flipped labels
    let reference = CnfPredicate::new(vec![
        vec![Atom::new([("i", -1), ("j", 1), ("k", 1)], 1)],
        vec![Atom::new([("i", -1), ("n", 1)], 2)],
    ]);
    assert!(zero_error(&reference, &data));
    let learned = vec![vec![
        Atom::new([("i", 1), ("j", -1), ("k", -1)], 0),
        Atom::new([("i", 1), ("n", -1)], -1),
    ]];
    assert_eq!(simplify_cnf(negate_cnf(&learned)), reference);
    assert!(feasible_with(&data, 1, 2, Polarity::Flipped, &learned));
}

#[test]
fn conflict_group_features() {
    let problems = [
        (
            feature_samples(&[[1, 1, 742, 0], [0, 0, 0, 859]], &[[-2, -2, 0, -2], [-3, -3, 1, -3]]),
            Atom::new([("i", 1)], 1),
        ),
        (
            feature_samples(&[[0, 0, 21, 0], [1, 1, 115, 38], [5, 15, 0, 5]], &[[5, 0, 1, 4], [6, 1, 0, 4]]),
            Atom::new([("i", -1), ("j", 1)], 1),
        ),
        (feature_samples(&[[0, 0, 21, 0], [1, 1, 115, 38]], &[[373, 374, -3, 372]]), Atom::new([("k", 1)], 1)),
    ];
    let start = Instant::now();
    for (data, feature) in problems {
        let r = learn(&data, &all_vars(&data), &LearnSettings::default(), None).unwrap();
        assert!(zero_error(&r.predicate, &data), "{:?}", r.predicate);
        assert!(zero_error(&CnfPredicate::atom(feature.clone()), &data));
        let s = &r.stats;
        let learned = match s.polarity {
            Polarity::Direct => vec![vec![feature.clone()]],
            Polarity::Flipped => vec![vec![feature.negate()]],
        };
        assert!(feasible_with(&data, s.conjuncts, s.disjuncts, s.polarity, &learned), "{feature:?}");
    }
    assert!(start.elapsed() < Duration::from_secs(10));
}

#[test]
fn guarded_loop_constraint_shape() {
    let vars = ["x", "y"];
    let mut data = Dataset::new(names(&vars));
    data.push(st(&vars, &[Some(0), Some(0)]), true);
    data.push(st(&vars, &[Some(-1), None]), false);
    let cfg = LearnerConfig::default().step(2, Polarity::Direct);
    let enc = encode(&data, &cfg).unwrap();
    let m = &enc.model;
    let count = |prefix: &str| m.vars().iter().filter(|v| v.name.starts_with(prefix)).count();
    assert_eq!(count("z["), 4);
    assert_eq!(count("y["), 2);
    assert_eq!(count("mu["), 2);
    assert_eq!(count("w["), 4);
    assert_eq!(count("wp["), 4);
    assert_eq!(count("wn["), 4);
    // two rows per z, two per y, one label row each, one link per w, two per mu
    assert_eq!(m.constraints().len(), 8 + 4 + 2 + 4 + 4);
    // the negative example's rows only mention w[.,.,x]
    let z = m.var_id("z[1,0,0]").unwrap();
    let wy = m.var_id("w[0,0,y]").unwrap();
    let wx = m.var_id("w[0,0,x]").unwrap();
    let row = m
        .constraints()
        .iter()
        .find(|c| c.expr.terms().iter().any(|(v, _)| *v == z) && c.expr.terms().len() > 2)
        .unwrap();
    assert!(row.expr.terms().iter().all(|(v, _)| *v != wy));
    assert!(row.expr.terms().iter().any(|(v, c)| *v == wx && *c == Rational::from_integer((-1).into())));
    let obj = m.objective().unwrap();
    let mu = m.var_id("mu[x]").unwrap();
    assert!(obj.terms().iter().any(|(v, c)| *v == mu && *c == cfg.lambda));
}

#[test]
fn empty_dataset_is_trivially_feasible() {
    let data = Dataset::new(names(&["a", "b"]));
    let enc = encode(&data, &LearnerConfig::default()).unwrap();
    let IlpOutcome::Optimal { assignment, objective } = solve(&enc.model, &Budget::unlimited()).unwrap() else {
        panic!()
    };
    assert_eq!(objective, Rational::from_integer(0.into()));
    for w in &enc.w[0][0] {
        assert_eq!(assignment.get(*w), &Rational::from_integer(0.into()));
    }
    let _ = decode(&enc, &assignment, Polarity::Direct).unwrap();
}

#[test]
fn decode_examples() {
    let vars = names(&IJKNY);
    let data = Dataset::new(vars.clone());
    let enc = encode(&data, &LearnerConfig::default()).unwrap();
    let mut values = vec![Rational::from_integer(0.into()); enc.model.num_vars()];
    let set = |values: &mut Vec<Rational>, id: invsynth_ilp::VarId, v: i64| values[id.index()] = Rational::from_integer(v.into());
    set(&mut values, enc.w[0][0][0], -1);
    set(&mut values, enc.w[0][0][1], 1);
    set(&mut values, enc.b[0][0], 1);
    let p = decode(&enc, &invsynth_ilp::Assignment::new(values.clone()), Polarity::Direct).unwrap();
    assert_eq!(p, CnfPredicate::atom(Atom::new([("i", -1), ("j", 1)], 1)));
    assert_eq!(p.to_formula(&vars).to_string(), "(<= i j)");
    let result_vars: Vec<String> = p.relevant_vars().into_iter().collect();
    assert_eq!(result_vars, ["i", "j"]);

    let mut zero = vec![Rational::from_integer(0.into()); enc.model.num_vars()];
    set(&mut zero, enc.b[0][0], 1);
    let p = decode(&enc, &invsynth_ilp::Assignment::new(zero), Polarity::Direct).unwrap();
    assert!(p.is_true());

    values[enc.w[0][0][0].index()] = Rational::new(1.into(), 2.into());
    assert!(matches!(
        decode(&enc, &invsynth_ilp::Assignment::new(values), Polarity::Direct),
        Err(LearnError::Internal(_))
    ));
}

#[test]
fn filter_variables_on_reference_predicates() {
    let data = refined_samples();
    let r = learn(&data, &all_vars(&data), &LearnSettings::default(), None).unwrap();
    let rel = filter_variables(&r);
    assert!(!rel.contains("y"));
    assert_eq!(rel, r.predicate.relevant_vars());
}

#[test]
fn collisions_and_config_errors() {
    let vars = ["a"];
    let mut data = Dataset::new(names(&vars));
    data.push(st(&vars, &[Some(1)]), true);
    data.push(st(&vars, &[Some(1)]), false);
    assert!(matches!(
        learn(&data, &all_vars(&data), &LearnSettings::default(), None),
        Err(LearnError::Collision { .. })
    ));
    let mut data = Dataset::new(names(&vars));
    data.push(st(&vars, &[Some(500)]), true);
    let cfg = LearnerConfig {
        big_m: Some(1000),
        ..LearnerConfig::default()
    };
    assert!(matches!(encode(&data, &cfg), Err(LearnError::Config(_))));
    assert!(matches!(
        learn(&data, &BTreeSet::new(), &LearnSettings::default(), None),
        Err(LearnError::Config(_))
    ));
}

#[test]
fn projection_restricts_variables() {
    let data = refined_samples();
    let keep: BTreeSet<String> = ["i", "j"].iter().map(|s| s.to_string()).collect();
    match learn(&data, &keep, &LearnSettings::default(), None) {
        Ok(r) => assert!(r.relevant.is_subset(&keep)),
        Err(LearnError::NoSeparator) | Err(LearnError::Collision { .. }) => {}
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn global_zero_ignores_partially_known_variables() {
    let vars = ["a", "b"];
    let mut data = Dataset::new(names(&vars));
    data.push(st(&vars, &[Some(1), Some(5)]), true);
    data.push(st(&vars, &[Some(1), None]), false);
    data.push(st(&vars, &[Some(-1), Some(0)]), false);
    let mut settings = LearnSettings::default();
    let r = learn(&data, &all_vars(&data), &settings, None).unwrap();
    assert!(zero_error(&r.predicate, &data));
    settings.base.top = TopSemantics::GlobalZero;
    match learn(&data, &all_vars(&data), &settings, None) {
        Ok(r) => assert!(!r.relevant.contains("b")),
        Err(LearnError::NoSeparator) => {}
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn warm_start_and_no_objective_agree_on_validity() {
    let data = refined_samples();
    let mut warm = WarmStart::default();
    let first = learn(&seed_samples(), &all_vars(&data), &LearnSettings::default(), Some(&mut warm)).unwrap();
    let second = learn(&data, &all_vars(&data), &LearnSettings::default(), Some(&mut warm)).unwrap();
    assert!(zero_error(&first.predicate, &seed_samples()));
    assert!(zero_error(&second.predicate, &data));
    let mut settings = LearnSettings::default();
    settings.base.objective = false;
    let r = learn(&data, &all_vars(&data), &settings, None).unwrap();
    assert!(zero_error(&r.predicate, &data));
    assert!(r.stats.objective.is_none());
    settings.complete_maps = Some(3);
    let r = learn(&data, &all_vars(&data), &settings, None).unwrap();
    assert!(r.predicate.eval(&data.examples[1].0));
}

fn dataset(max_vars: usize, max_examples: usize, top_p: f64) -> impl Strategy<Value = Dataset> {
    (1..=max_vars).prop_flat_map(move |nv| {
        let cell = proptest::option::weighted(1.0 - top_p, -10i64..=10);
        let row = (proptest::collection::vec(cell, nv), any::<bool>());
        proptest::collection::vec(row, 0..=max_examples).prop_map(move |rows| {
            let vars: Vec<String> = (0..nv).map(|i| format!("v{i}")).collect();
            let mut d = Dataset::new(vars.clone());
            for (vals, l) in rows {
                let mut s = PartialState::new();
                for (v, x) in vars.iter().zip(vals) {
                    if let Some(x) = x {
                        s.bind(v.clone(), x);
                    }
                }
                d.push(s, l);
            }
            d
        })
    })
}

/// Every atom over `vars` with coefficients in [-kw, kw] and bias in [-kb, kb].
fn atoms(vars: &[String], kw: i64, kb: i64) -> Vec<Atom> {
    let mut out = Vec::new();
    let n = vars.len();
    let mut w = vec![-kw; n];
    loop {
        for b in -kb..=kb {
            out.push(Atom::new(vars.iter().cloned().zip(w.iter().copied()), b));
        }
        let mut i = 0;
        loop {
            if i == n {
                return out;
            }
            if w[i] < kw {
                w[i] += 1;
                break;
            }
            w[i] = -kw;
            i += 1;
        }
    }
}

fn small_config(d: usize, polarity: Polarity) -> LearnerConfig {
    LearnerConfig {
        coeff_bound: 2,
        bias_bound: 3,
        ..LearnerConfig::default().step(d, polarity)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    /// Any feasible solution decodes to a zero-error classifier.
    #[test]
    fn feasible_solutions_classify_correctly(
        data in dataset(3, 8, 0.2),
        step in 0usize..4,
        objective in any::<bool>(),
    ) {
        prop_assume!(data.collision().is_none());
        let (d, polarity) = [(1, Polarity::Direct), (1, Polarity::Flipped), (2, Polarity::Direct), (2, Polarity::Flipped)][step];
        let labels = match polarity {
            Polarity::Direct => data.clone(),
            Polarity::Flipped => Dataset {
                vars: data.vars.clone(),
                examples: data.examples.iter().map(|(s, l)| (s.clone(), !l)).collect(),
            },
        };
        let cfg = LearnerConfig { objective, ..small_config(d, polarity) };
        let enc = encode(&labels, &cfg).unwrap();
        if let Some(a) = solve(&enc.model, &Budget::unlimited()).unwrap().assignment() {
            let p = decode(&enc, a, polarity).unwrap();
            prop_assert!(zero_error(&p, &data), "{:?} on {:?}", p, data);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// ILP feasibility at D = 1 matches brute-force existence of a separating atom.
    #[test]
    fn feasibility_matches_brute_force(data in dataset(2, 8, 0.2).prop_filter("two vars", |d| d.vars.len() == 2)) {
        let exists = data.collision().is_none()
            && atoms(&data.vars, 2, 3).iter().any(|a| zero_error(&CnfPredicate::atom(a.clone()), &data));
        let feasible = match encode(&data, &small_config(1, Polarity::Direct)) {
            Ok(enc) => !matches!(solve(&enc.model, &Budget::unlimited()).unwrap(), IlpOutcome::Infeasible),
            Err(LearnError::Collision { .. }) => false,
            Err(e) => panic!("{e}"),
        };
        prop_assert_eq!(exists, feasible);
    }
}

fn min_support(data: &Dataset, candidates: &[CnfPredicate]) -> Option<usize> {
    candidates
        .iter()
        .filter(|p| zero_error(p, data))
        .map(|p| p.relevant_vars().len())
        .min()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    /// With a large penalty, the learner uses the fewest variables possible at its step.
    #[test]
    fn sparsity_dominates(data in dataset(3, 6, 0.2)) {
        prop_assume!(data.collision().is_none());
        let mut settings = LearnSettings::default();
        settings.base = LearnerConfig { lambda: Rational::from_integer(9.into()), ..small_config(1, Polarity::Direct) };
        settings.ladder = vec![(1, 1, Polarity::Direct), (1, 1, Polarity::Flipped)];
        let all = atoms(&data.vars, 2, 3);
        match learn(&data, &all_vars(&data), &settings, None) {
            Ok(r) => {
                let cands: Vec<CnfPredicate> = match r.stats.polarity {
                    Polarity::Direct => all.iter().map(|a| CnfPredicate::atom(a.clone())).collect(),
                    Polarity::Flipped => all.iter().map(|a| simplify_cnf(negate_cnf(&[vec![a.clone()]]))).collect(),
                };
                let best = min_support(&data, &cands).unwrap();
                prop_assert!(r.relevant.len() <= best, "{:?} uses {} > {}", r.predicate, r.relevant.len(), best);
            }
            Err(LearnError::NoSeparator) => {
                let direct = all.iter().any(|a| zero_error(&CnfPredicate::atom(a.clone()), &data));
                let flipped = all.iter().any(|a| zero_error(&CnfPredicate::atom(a.negate()), &data));
                prop_assert!(!direct && !flipped);
            }
            Err(e) => prop_assert!(false, "{}", e),
        }
    }

    /// Negating a D = 2 disjunction gives the same classifier as the decoded CNF.
    #[test]
    fn flipped_decode_is_the_negation(
        w in proptest::collection::vec((-3i64..=3, -3i64..=3, -5i64..=5), 2),
        states in proptest::collection::vec((proptest::option::of(-10i64..=10), proptest::option::of(-10i64..=10)), 100),
    ) {
        let learned = vec![w.iter().map(|(a, b, c)| Atom::new([("p", *a), ("q", *b)], *c)).collect::<Vec<_>>()];
        let direct = CnfPredicate::new(learned.clone());
        let decoded = simplify_cnf(negate_cnf(&learned));
        for (p, q) in states {
            let s = st(&["p", "q"], &[p, q]);
            prop_assert_eq!(decoded.eval(&s), !direct.eval(&s));
        }
    }
}
