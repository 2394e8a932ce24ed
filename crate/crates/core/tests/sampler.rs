use std::collections::BTreeMap;

use invsynth_core::frontend::{parse_formula, parse_problem, ProblemSource};
use invsynth_core::ir::{CmpOp, Formula, PartialState, Term, VcProblem};
use invsynth_core::sampler::{
    bad_formula, bootstrap_samples, find_neg_counterexample, find_pos_counterexample, reachable_formula,
    SamplerError, UnrollCache,
};
use invsynth_core::smt::{ModelOutcome, SmtConfig, SmtSession};

const WORKING_EXAMPLE: &str = "
(vars i j k n y)
(pre (and (= i 0) (= j 0) (>= k 0) (>= n 0)))
(trans (and (<= i n) (= i! (+ i 1)) (= j! (+ j 1)) (= y! (* i j)) (= k! k) (= n! n)))
(post (or (<= i n) (>= (+ i j k) (* 2 n)) (>= y (* n n))))
";

const GUARDED_LOOP: &str = "
(vars x y)
(pre (and (= x 0) (= y 0)))
(trans (and (= x! (+ x y)) (= y! y)))
(guard (>= x 0))
(post false)
";

const COUNTER: &str = "
(vars i n)
(pre (and (= i 0) (>= n 0)))
(trans (and (< i n) (= i! (+ i 1)) (= n! n)))
(post (or (< i n) (= i n)))
";

fn problem(text: &str) -> VcProblem {
    parse_problem(&ProblemSource::from_text(text)).unwrap()
}

fn session() -> SmtSession {
    SmtSession::new(SmtConfig::default())
}

fn formula(p: &VcProblem, text: &str) -> Formula {
    parse_formula(text, &p.vars).unwrap()
}

/// Splits `trans` into `x! = t` updates and guards over the current state.
fn interpreter(p: &VcProblem) -> (BTreeMap<String, Term>, Vec<Formula>) {
    let mut updates = BTreeMap::new();
    let mut guards = Vec::new();
    for c in p.trans.conjuncts() {
        if let Formula::Cmp(CmpOp::Eq, Term::Var(lhs), rhs) = &c {
            if let Some(base) = lhs.strip_suffix('!') {
                updates.insert(base.to_string(), rhs.clone());
                continue;
            }
        }
        guards.push(c);
    }
    (updates, guards)
}

/// Runs the transition `steps` times from `start`, `None` when a guard fails.
fn execute(p: &VcProblem, start: &PartialState, steps: usize) -> Option<PartialState> {
    let (updates, guards) = interpreter(p);
    assert_eq!(updates.len(), p.vars.len(), "interpreter needs a deterministic transition");
    let mut s = start.clone();
    for v in &p.vars {
        if s.get(v).is_none() {
            s.bind(v.clone(), 0);
        }
    }
    for _ in 0..steps {
        if !guards.iter().all(|g| g.eval(&s).unwrap()) {
            return None;
        }
        let mut next = PartialState::new();
        for v in &p.vars {
            next.bind(v.clone(), i64::try_from(updates[v].eval(&s).unwrap()).unwrap());
        }
        s = next;
    }
    Some(s)
}

fn agrees(partial: &PartialState, total: &PartialState) -> bool {
    partial.bindings().iter().all(|(k, v)| total.get(k) == Some(*v))
}

#[test]
fn zero_unrolling_is_the_precondition() {
    let p = problem(WORKING_EXAMPLE);
    assert_eq!(
        reachable_formula(&p, 0).to_string(),
        "(and (= i@0 0) (= j@0 0) (>= k@0 0) (>= n@0 0))"
    );
    assert_eq!(bad_formula(&p, 0), Formula::not(p.post.clone()).rename_map(&step0(&p)));
}

fn step0(p: &VcProblem) -> BTreeMap<String, String> {
    p.vars.iter().map(|v| (v.clone(), format!("{v}@0"))).collect()
}

#[test]
fn unrolled_formulas_use_one_copy_per_step() {
    let p = problem(COUNTER);
    let fv = reachable_formula(&p, 2).free_vars();
    assert_eq!(fv.len(), 3 * p.vars.len());
    assert!(fv.iter().all(|v| v.ends_with("@0") || v.ends_with("@1") || v.ends_with("@2")));
    // y@0 is never constrained on the working example
    let p = problem(WORKING_EXAMPLE);
    let fv = reachable_formula(&p, 2).free_vars();
    assert_eq!(fv.len(), 3 * p.vars.len() - 1);
    assert!(!fv.contains("y@0"));
}

#[test]
fn literal_false_post_makes_bad_one_the_transition() {
    let p = VcProblem::new(
        vec!["x".into(), "y".into()],
        Formula::tt(),
        parse_formula("(and (= x! (- x 1)) (= y! (+ y 1)))", &["x".to_string(), "y".to_string(), "x!".to_string(), "y!".to_string()]).unwrap(),
        Formula::ff(),
    )
    .unwrap();
    assert_eq!(
        bad_formula(&p, 1).to_string(),
        "(and (= x@1 (- x@0 1)) (= y@1 (+ y@0 1)))"
    );
}

#[test]
fn reachable_models_replay() {
    let p = problem(WORKING_EXAMPLE);
    let mut s = session();
    for k in 0..4 {
        let f = reachable_formula(&p, k);
        let mut blocked = Vec::new();
        for _ in 0..3 {
            let ModelOutcome::Sat(m) = s.get_model(&f, &blocked).unwrap() else { panic!("depth {k}") };
            let start = m.at_step(&p.vars, 0);
            assert!(p.pre.eval(&fill(&start, &p.vars)).unwrap());
            let end = execute(&p, &start, k).expect("guards hold along the path");
            assert!(agrees(&m.at_step(&p.vars, k), &end), "depth {k}: {m:?} vs {end:?}");
            blocked.push(m.project(&m.bindings().keys().filter(|n| n.ends_with("@0")).cloned().collect::<Vec<_>>()));
        }
    }
}

fn fill(s: &PartialState, vars: &[String]) -> PartialState {
    let mut out = s.clone();
    for v in vars {
        if out.get(v).is_none() {
            out.bind(v.clone(), 0);
        }
    }
    out
}

#[test]
fn bad_models_replay() {
    let p = problem(WORKING_EXAMPLE);
    let mut s = session();
    for k in 0..4 {
        let ModelOutcome::Sat(m) = s.get_model(&bad_formula(&p, k), &[]).unwrap() else { panic!("depth {k}") };
        let end = execute(&p, &m.at_step(&p.vars, 0), k).expect("guards hold");
        assert!(!p.post.eval(&end).unwrap());
    }
}

#[test]
fn no_positive_counterexample_for_i_le_j() {
    let p = problem(WORKING_EXAMPLE);
    let mut s = session();
    let mut cache = UnrollCache::new();
    let c = formula(&p, "(<= i j)");
    assert_eq!(find_pos_counterexample(&p, &c, &mut s, &mut cache, 6).unwrap(), None);
    assert_eq!(find_pos_counterexample(&p, &Formula::tt(), &mut s, &mut cache, 6).unwrap(), None);
}

#[test]
fn negative_counterexample_for_i_le_j() {
    let p = problem(WORKING_EXAMPLE);
    let mut s = session();
    let mut cache = UnrollCache::new();
    let c = formula(&p, "(<= i j)");
    let neg = find_neg_counterexample(&p, &c, &mut s, &mut cache, 6).unwrap().expect("i <= j is not safe");
    assert!(neg.bindings().keys().all(|k| p.vars.contains(k)));
    let total = fill(&neg, &p.vars);
    assert!(c.eval(&total).unwrap());
    let bad = (0..=6).any(|k| execute(&p, &total, k).is_some_and(|end| !p.post.eval(&end).unwrap()));
    assert!(bad, "{neg:?} does not replay to a violation");
    assert_eq!(find_neg_counterexample(&p, &Formula::ff(), &mut s, &mut cache, 6).unwrap(), None);
}

#[test]
fn positive_counterexample_replays() {
    let p = problem(COUNTER);
    let mut s = session();
    let mut cache = UnrollCache::new();
    // rejects i = 2 which is reachable after two steps
    let c = formula(&p, "(not (= i 2))");
    let pos = find_pos_counterexample(&p, &c, &mut s, &mut cache, 5).unwrap().expect("i = 2 is reachable");
    assert!(!c.eval(&pos).unwrap());
    assert_eq!(pos.get("i"), Some(2));
    let n = pos.get("n").unwrap();
    let start = PartialState::from_pairs([("i", 0), ("n", n)]);
    assert_eq!(execute(&p, &start, 2), Some(pos));
}

#[test]
fn unsatisfiable_depths_are_not_queried_again() {
    // the loop runs at most two steps
    let p = problem(
        "(vars i)
         (pre (= i 0))
         (trans (and (< i 2) (= i! (+ i 1))))
         (post (<= i 2))",
    );
    let mut s = session();
    let mut cache = UnrollCache::new();
    let c = formula(&p, "(<= i 2)");
    assert_eq!(find_pos_counterexample(&p, &c, &mut s, &mut cache, 10).unwrap(), None);
    assert_eq!(cache.reach_unsat_from(), Some(3));
    let before = s.queries();
    let c = formula(&p, "(<= i 5)");
    assert_eq!(find_pos_counterexample(&p, &c, &mut s, &mut cache, 10).unwrap(), None);
    // depths 0..2 need one classifier query each, the dead depth 3 none
    assert_eq!(s.queries() - before, 3);
}

#[test]
fn bootstrap_on_the_working_example() {
    let p = problem(WORKING_EXAMPLE);
    let mut s = session();
    let (pos, neg) = bootstrap_samples(&p, &mut s, 2).unwrap();
    assert!(pos.iter().any(|x| x.get("i") == Some(0) && x.get("j") == Some(0)));
    assert!(pos.iter().any(|x| x.get("i").is_some() && x.get("i") == x.get("j") && x.get("i") != Some(0)));
    assert!(!neg.is_empty() && neg.len() <= 2 && pos.len() <= 2);
    for x in pos.iter().chain(&neg) {
        assert!(x.bindings().keys().all(|k| p.vars.contains(k)));
    }
    // each sample satisfies its source formula
    let succ = Formula::and([p.pre.clone(), p.trans.clone()]);
    for x in &pos {
        let as_pre = Formula::and([p.pre.clone(), x.to_formula()]);
        let primed: PartialState = x.renamed(|v| format!("{v}!"));
        let as_succ = Formula::and([succ.clone(), primed.to_formula()]);
        let ok = matches!(s.get_model(&as_pre, &[]).unwrap(), ModelOutcome::Sat(_))
            || matches!(s.get_model(&as_succ, &[]).unwrap(), ModelOutcome::Sat(_));
        assert!(ok, "{x:?}");
    }
    let pred = Formula::and([
        Formula::not(p.post.clone()).rename_map(&p.vars.iter().map(|v| (v.clone(), format!("{v}!"))).collect()),
        p.trans.clone(),
    ]);
    for x in &neg {
        let as_bad = Formula::and([Formula::not(p.post.clone()), x.to_formula()]);
        let as_pred = Formula::and([pred.clone(), x.to_formula()]);
        let ok = matches!(s.get_model(&as_bad, &[]).unwrap(), ModelOutcome::Sat(_))
            || matches!(s.get_model(&as_pred, &[]).unwrap(), ModelOutcome::Sat(_));
        assert!(ok, "{x:?}");
    }
}

#[test]
fn bootstrap_is_distinct_and_bounded() {
    let p = problem(WORKING_EXAMPLE);
    let mut s = session();
    let (pos, neg) = bootstrap_samples(&p, &mut s, 8).unwrap();
    assert!(pos.len() <= 8 && neg.len() <= 8);
    for list in [&pos, &neg] {
        for (a, x) in list.iter().enumerate() {
            assert!(!list[a + 1..].contains(x));
        }
    }
}

#[test]
fn bootstrap_with_false_pre() {
    let p = VcProblem::new(vec!["x".into()], Formula::ff(), Formula::tt(), Formula::tt()).unwrap();
    let mut s = session();
    assert!(matches!(bootstrap_samples(&p, &mut s, 4), Err(SamplerError::BootstrapFailed(_))));
    let p = VcProblem::new(vec!["x".into()], Formula::ff(), Formula::tt(), formula_x("(> x 0)")).unwrap();
    let (pos, neg) = bootstrap_samples(&p, &mut s, 4).unwrap();
    assert!(pos.is_empty());
    assert!(!neg.is_empty());
}

fn formula_x(text: &str) -> Formula {
    parse_formula(text, &["x".to_string()]).unwrap()
}

#[test]
fn bootstrap_fails_when_the_solver_never_answers() {
    let p = problem(WORKING_EXAMPLE);
    let mut s = SmtSession::new(SmtConfig::default().with_command_line("true"));
    let r = bootstrap_samples(&p, &mut s, 4);
    assert!(matches!(r, Err(SamplerError::BootstrapFailed(_))), "{r:?}");
}

#[test]
fn guarded_loop_bad_states_replay() {
    let p = problem(GUARDED_LOOP);
    let mut s = session();
    for k in 1..4 {
        let ModelOutcome::Sat(m) = s.get_model(&bad_formula(&p, k), &[]).unwrap() else { panic!("depth {k}") };
        let end = execute(&p, &m.at_step(&p.vars, 0), k).expect("guard holds before exit");
        assert!(!p.post.eval(&end).unwrap());
        assert!(m.get(&format!("x@{k}")).unwrap() < 0);
    }
}
