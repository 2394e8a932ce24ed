//! Invariant strengthening over a restricted variable set.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde_json::json;
use thiserror::Error;
use tracing::{debug, info};

use crate::ir::{to_primed, CnfPredicate, Formula, PartialState, VcProblem};
use crate::learner::{learn, negate_cnf, simplify_cnf, Dataset, LearnError, LearnSettings};
use crate::smt::{CheckOutcome, SmtError, SmtSession};
use crate::trace::Trace;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VcResult {
    Pass,
    FailPre(PartialState),
    /// The state and its successor.
    FailInd(PartialState, PartialState),
    FailPost(PartialState),
    NotVerified(String),
}

impl VcResult {
    pub fn is_pass(&self) -> bool {
        matches!(self, VcResult::Pass)
    }
}

/// Checks `Pre ⇒ I`, `I ∧ Trans ⇒ I'` and `I ⇒ Post`, in that order.
pub fn check_vcs(problem: &VcProblem, candidate: &Formula, session: &mut SmtSession) -> Result<VcResult, SmtError> {
    let vars = &problem.vars;
    match session.check_valid(&Formula::implies(problem.pre.clone(), candidate.clone()))? {
        CheckOutcome::Valid => {}
        CheckOutcome::Counterexample(m) => return Ok(VcResult::FailPre(m.project(vars))),
        CheckOutcome::Unknown(r) => return Ok(VcResult::NotVerified(format!("pre: {r}"))),
    }
    match session.check_valid(&inductive_vc(problem, candidate, None))? {
        CheckOutcome::Valid => {}
        CheckOutcome::Counterexample(m) => return Ok(VcResult::FailInd(m.project(vars), m.primed_part(vars))),
        CheckOutcome::Unknown(r) => return Ok(VcResult::NotVerified(format!("ind: {r}"))),
    }
    match session.check_valid(&Formula::implies(candidate.clone(), problem.post.clone()))? {
        CheckOutcome::Valid => Ok(VcResult::Pass),
        CheckOutcome::Counterexample(m) => Ok(VcResult::FailPost(m.project(vars))),
        CheckOutcome::Unknown(r) => Ok(VcResult::NotVerified(format!("post: {r}"))),
    }
}

/// `δ ∧ I ∧ Trans ⇒ I'`.
fn inductive_vc(problem: &VcProblem, inv: &Formula, delta: Option<&Formula>) -> Formula {
    let mut lhs = Vec::new();
    if let Some(d) = delta {
        lhs.push(d.clone());
    }
    lhs.push(inv.clone());
    lhs.push(problem.trans.clone());
    Formula::implies(Formula::and(lhs), to_primed(inv, &problem.vars))
}

/// Learned features, without syntactic duplicates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureSet {
    features: Vec<CnfPredicate>,
}

impl FeatureSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// False when `f` is already present.
    pub fn push(&mut self, f: CnfPredicate) -> bool {
        if self.features.contains(&f) {
            return false;
        }
        self.features.push(f);
        true
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn get(&self, i: usize) -> &CnfPredicate {
        &self.features[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &CnfPredicate> {
        self.features.iter()
    }

    /// Feature values of `state`, with the drop-⊤ rule.
    pub fn vector(&self, state: &PartialState) -> Vec<bool> {
        self.features.iter().map(|f| f.eval(state)).collect()
    }
}

impl FromIterator<CnfPredicate> for FeatureSet {
    fn from_iter<T: IntoIterator<Item = CnfPredicate>>(iter: T) -> Self {
        let mut fs = FeatureSet::new();
        for f in iter {
            fs.push(f);
        }
        fs
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConflictError {
    #[error("positive and negative samples coincide: {0:?}")]
    Unsatisfiable(PartialState),
}

/// The largest group of samples with equal feature vectors that holds both
/// labels (ties broken by the smallest vector), or two empty lists.
pub fn conflict(
    pos: &[PartialState],
    neg: &[PartialState],
    features: &FeatureSet,
) -> Result<(Vec<PartialState>, Vec<PartialState>), ConflictError> {
    let mut groups: BTreeMap<Vec<bool>, (Vec<PartialState>, Vec<PartialState>)> = BTreeMap::new();
    for p in pos {
        groups.entry(features.vector(p)).or_default().0.push(p.clone());
    }
    for n in neg {
        groups.entry(features.vector(n)).or_default().1.push(n.clone());
    }
    let mut best: Option<(Vec<PartialState>, Vec<PartialState>)> = None;
    for (_, (p, n)) in groups {
        if p.is_empty() || n.is_empty() {
            continue;
        }
        if best.as_ref().is_none_or(|(bp, bn)| p.len() + n.len() > bp.len() + bn.len()) {
            best = Some((p, n));
        }
    }
    let Some((p, n)) = best else {
        return Ok((Vec::new(), Vec::new()));
    };
    if let Some(same) = p.iter().find(|x| n.contains(x)) {
        return Err(ConflictError::Unsatisfiable(same.clone()));
    }
    Ok((p, n))
}

/// A feature or its negation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub feature: usize,
    pub positive: bool,
}

impl Literal {
    fn eval(&self, values: &[bool]) -> bool {
        values[self.feature] == self.positive
    }
}

/// A CNF over feature literals.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Combination {
    pub clauses: Vec<Vec<Literal>>,
}

impl Combination {
    pub fn eval(&self, features: &FeatureSet, state: &PartialState) -> bool {
        let values = features.vector(state);
        self.clauses.iter().all(|c| c.iter().any(|l| l.eval(&values)))
    }

    pub fn to_formula(&self, features: &FeatureSet, order: &[String]) -> Formula {
        Formula::and(self.clauses.iter().map(|c| {
            Formula::or(c.iter().map(|l| {
                let f = features.get(l.feature);
                if l.positive {
                    f.to_formula(order)
                } else {
                    simplify_cnf(negate_cnf(&f.conjuncts)).to_formula(order)
                }
            }))
        }))
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("features do not separate {pos:?} from {neg:?}")]
pub struct CombineError {
    pub pos: PartialState,
    pub neg: PartialState,
}

const MAX_GREEDY_WIDTH: usize = 3;

/// Greedy clause cover: repeatedly adds the clause (up to three literals)
/// that holds on every positive and rejects the most remaining negatives.
pub fn bool_combine(
    features: &FeatureSet,
    pos: &[PartialState],
    neg: &[PartialState],
) -> Result<Combination, CombineError> {
    let pv: Vec<Vec<bool>> = pos.iter().map(|s| features.vector(s)).collect();
    let nv: Vec<Vec<bool>> = neg.iter().map(|s| features.vector(s)).collect();
    for (i, p) in pv.iter().enumerate() {
        if let Some(j) = nv.iter().position(|n| n == p) {
            return Err(CombineError {
                pos: pos[i].clone(),
                neg: neg[j].clone(),
            });
        }
    }
    let literals: Vec<Literal> = (0..features.len())
        .flat_map(|f| [Literal { feature: f, positive: true }, Literal { feature: f, positive: false }])
        .collect();
    let holds_on_all_pos = |clause: &[Literal]| pv.iter().all(|p| clause.iter().any(|l| l.eval(p)));
    let rejects = |clause: &[Literal], n: &Vec<bool>| !clause.iter().any(|l| l.eval(n));

    let mut candidates: Vec<Vec<Literal>> = Vec::new();
    for width in 1..=MAX_GREEDY_WIDTH.min(literals.len()) {
        for combo in combinations(literals.len(), width) {
            let clause: Vec<Literal> = combo.iter().map(|&i| literals[i]).collect();
            // a clause with both polarities of a feature is a tautology
            if clause.windows(2).any(|w| w[0].feature == w[1].feature) {
                continue;
            }
            if holds_on_all_pos(&clause) {
                candidates.push(clause);
            }
        }
    }

    let mut remaining: Vec<usize> = (0..nv.len()).collect();
    let mut out = Combination::default();
    while !remaining.is_empty() {
        let mut best: Option<(usize, &Vec<Literal>)> = None;
        for c in &candidates {
            let gain = remaining.iter().filter(|&&n| rejects(c, &nv[n])).count();
            if gain == 0 {
                continue;
            }
            // candidates are ordered by width then literal order, so only a
            // strictly larger gain replaces the incumbent
            if best.is_none_or(|(g, _)| gain > g) {
                best = Some((gain, c));
            }
        }
        let clause = match best {
            Some((_, c)) => c.clone(),
            None => {
                // one clause per negative: every literal false on it, then shrunk
                let n = &nv[remaining[0]];
                let mut clause: Vec<Literal> = literals.iter().copied().filter(|l| !l.eval(n)).collect();
                let mut i = 0;
                while i < clause.len() {
                    let mut shorter = clause.clone();
                    shorter.remove(i);
                    if holds_on_all_pos(&shorter) {
                        clause = shorter;
                    } else {
                        i += 1;
                    }
                }
                clause
            }
        };
        remaining.retain(|&n| !rejects(&clause, &nv[n]));
        out.clauses.push(clause);
    }
    Ok(out)
}

/// Index subsets of `0..n` of size `k` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    go(0, n, k, &mut cur, &mut out);
    out
}

#[derive(Debug, Error)]
pub enum RelInferError {
    #[error("no solution: {0}")]
    NoSolution(String),
    #[error("inference ran out of budget")]
    Timeout,
    #[error("solver could not decide a check: {0}")]
    SolverUnknown(String),
    #[error(transparent)]
    Smt(#[from] SmtError),
    #[error(transparent)]
    Learn(LearnError),
    #[error("internal error: {0}")]
    Internal(String),
}

#[derive(Debug, Clone)]
pub struct RelInferConfig {
    pub learn: LearnSettings,
    /// Cap on strengthening iterations.
    pub max_rounds: usize,
    pub time_limit: Option<Duration>,
    /// Time allowed for one feature ILP before the conflict group is split.
    pub feature_time_limit: Duration,
    pub cancel: Option<Arc<AtomicBool>>,
    /// Drop conjuncts of the result that are not needed for the VCs.
    pub simplify: bool,
    pub trace: Trace,
}

impl Default for RelInferConfig {
    fn default() -> Self {
        RelInferConfig {
            learn: LearnSettings::default(),
            max_rounds: 200,
            time_limit: None,
            feature_time_limit: Duration::from_secs(5),
            cancel: None,
            simplify: true,
            trace: Trace::off(),
        }
    }
}

struct Budget {
    deadline: Option<Instant>,
    cancel: Option<Arc<AtomicBool>>,
}

impl Budget {
    fn check(&self) -> Result<(), RelInferError> {
        if self.cancel.as_ref().is_some_and(|c| c.load(Ordering::Relaxed)) {
            return Err(RelInferError::Timeout);
        }
        if self.deadline.is_some_and(|d| Instant::now() >= d) {
            return Err(RelInferError::Timeout);
        }
        Ok(())
    }

    fn remaining(&self) -> Option<Duration> {
        self.deadline.map(|d| d.saturating_duration_since(Instant::now()))
    }
}

fn short(states: &[PartialState], vars: &[String]) -> Vec<String> {
    states.iter().map(|s| s.display(vars)).collect()
}

/// `p` leaves every coordinate of `relevant` unbound or equal to `s`.
fn agree_on(p: &PartialState, s: &PartialState, relevant: &BTreeSet<String>) -> bool {
    relevant.iter().all(|v| p.get(v).is_none() || p.get(v) == s.get(v))
}

fn fill_zero(s: &PartialState, vars: &[String]) -> PartialState {
    let mut out = s.clone();
    for v in vars {
        if out.get(v).is_none() {
            out.bind(v.clone(), 0);
        }
    }
    out
}

struct Inference<'a> {
    problem: &'a VcProblem,
    relevant: &'a BTreeSet<String>,
    session: &'a mut SmtSession,
    config: &'a RelInferConfig,
    budget: Budget,
}

impl Inference<'_> {
    fn valid(&mut self, f: &Formula) -> Result<Option<PartialState>, RelInferError> {
        self.budget.check()?;
        match self.session.check_valid(f)? {
            CheckOutcome::Valid => Ok(None),
            CheckOutcome::Counterexample(m) => Ok(Some(m)),
            CheckOutcome::Unknown(r) => {
                self.budget.check()?;
                Err(RelInferError::SolverUnknown(r))
            }
        }
    }

    /// A feature separating `pos` from `neg`; on failure retries on halves so
    /// that at least one pair of the group gets separated.
    fn feature(&mut self, pos: &[PartialState], neg: &[PartialState]) -> Result<CnfPredicate, RelInferError> {
        self.budget.check()?;
        let data = Dataset::from_sets(self.problem.vars.clone(), pos, neg);
        let mut settings = self.config.learn.clone();
        let slice = self.config.feature_time_limit;
        settings.time_limit = Some(self.budget.remaining().map_or(slice, |r| r.min(slice)));
        settings.cancel = self.config.cancel.clone();
        match learn(&data, self.relevant, &settings, None) {
            Ok(r) => Ok(r.predicate),
            Err(LearnError::Collision { state }) => Err(RelInferError::NoSolution(format!(
                "samples {} are indistinguishable over the relevant variables",
                state.display(&self.problem.vars)
            ))),
            Err(e @ (LearnError::NoSeparator | LearnError::Timeout)) => {
                self.budget.check()?;
                if pos.len() + neg.len() <= 2 {
                    return Err(match e {
                        LearnError::NoSeparator => RelInferError::NoSolution("no feature separates a sample pair".into()),
                        _ => RelInferError::Timeout,
                    });
                }
                debug!(pos = pos.len(), neg = neg.len(), error = %e, "splitting conflict group");
                let p = &pos[..pos.len().div_ceil(2)];
                let n = &neg[..neg.len().div_ceil(2)];
                let (p, n) = if p.len() + n.len() == pos.len() + neg.len() { (&pos[..1], &neg[..1]) } else { (p, n) };
                self.feature(p, n)
            }
            Err(e) => Err(RelInferError::Learn(e)),
        }
    }

    fn run(&mut self, positives: &[PartialState], negatives: &[PartialState]) -> Result<Formula, RelInferError> {
        let problem = self.problem;
        let vars = &problem.vars;
        let trace = self.config.trace.clone();
        if let Some(c) = self.valid(&Formula::implies(problem.pre.clone(), problem.post.clone()))? {
            return Err(RelInferError::NoSolution(format!("precondition state {} violates the postcondition", c.project(vars).display(vars))));
        }
        let mut all_pos: Vec<PartialState> = positives.to_vec();
        let mut inv: Vec<Formula> = vec![problem.post.clone()];
        let mut rounds = 0usize;
        loop {
            let current = Formula::and(inv.clone());
            if self.valid(&inductive_vc(problem, &current, None))?.is_none() {
                return Ok(current);
            }
            let p_set = all_pos.clone();
            let mut n_set: Vec<PartialState> = negatives.to_vec();
            let mut features = FeatureSet::new();
            let delta = loop {
                rounds += 1;
                if rounds > self.config.max_rounds {
                    info!(rounds, "strengthening round cap reached");
                    return Err(RelInferError::Timeout);
                }
                loop {
                    let (p, n) = conflict(&p_set, &n_set, &features).map_err(|ConflictError::Unsatisfiable(s)| {
                        RelInferError::NoSolution(format!("state {} is labeled both ways", s.display(vars)))
                    })?;
                    if p.is_empty() && n.is_empty() {
                        break;
                    }
                    let f = self.feature(&p, &n)?;
                    trace.emit(
                        "feature",
                        json!({"pos": short(&p, vars), "neg": short(&n, vars), "feature": f.to_formula(vars).to_string()}),
                    );
                    if !features.push(f) {
                        return Err(RelInferError::Internal("learned a feature that is already present".into()));
                    }
                }
                let comb = bool_combine(&features, &p_set, &n_set)
                    .map_err(|e| RelInferError::Internal(format!("conflict loop left inseparable samples: {e}")))?;
                let delta = comb.to_formula(&features, vars);
                let c = self.valid(&inductive_vc(problem, &current, Some(&delta)))?;
                trace.emit(
                    "delta",
                    json!({
                        "delta": delta.to_string(),
                        "pos": p_set.len(),
                        "neg": n_set.len(),
                        "counterexample": c.as_ref().map(|m| m.project(vars).display(vars)),
                    }),
                );
                match c {
                    None => break Some(delta),
                    Some(m) => {
                        let s = m.project(vars);
                        if all_pos.iter().any(|p| agree_on(p, &s, self.relevant)) {
                            // No candidate `Post ∧ δ(relevant)` can drop `s`
                            // while keeping the positive, so an inductive one
                            // must also keep the successor.
                            let next = m.primed_part(vars);
                            if inv.len() == 1 || !problem.post.eval(&fill_zero(&next, vars)).unwrap_or(false) {
                                return Err(RelInferError::NoSolution(format!(
                                    "state {} is indistinguishable from a positive over {:?} but leaves the postcondition",
                                    s.display(vars),
                                    self.relevant
                                )));
                            }
                            trace.emit("reset", json!({"positive": next.display(vars)}));
                            if all_pos.contains(&next) {
                                return Err(RelInferError::NoSolution(format!("positive {} is excluded again", next.display(vars))));
                            }
                            all_pos.push(next);
                            break None;
                        }
                        if n_set.contains(&s) {
                            return Err(RelInferError::NoSolution(format!("counterexample {} repeats", s.display(vars))));
                        }
                        n_set.push(s);
                    }
                }
            };
            let Some(delta) = delta else {
                inv = vec![problem.post.clone()];
                continue;
            };
            inv.push(delta);
            let strengthened = Formula::and(inv.clone());
            if let Some(m) = self.valid(&Formula::implies(problem.pre.clone(), strengthened))? {
                let s = m.project(vars);
                trace.emit("reset", json!({"positive": s.display(vars)}));
                if all_pos.contains(&s) {
                    return Err(RelInferError::NoSolution(format!("positive {} is excluded again", s.display(vars))));
                }
                all_pos.push(s);
                inv = vec![problem.post.clone()];
            }
        }
    }

    /// Removes top-level conjuncts one at a time while the VCs still pass.
    fn simplify(&mut self, inv: Formula) -> Result<Formula, RelInferError> {
        let mut parts = inv.conjuncts();
        let mut i = 0;
        while i < parts.len() && parts.len() > 1 {
            if self.budget.check().is_err() {
                break;
            }
            let mut fewer = parts.clone();
            fewer.remove(i);
            if check_vcs(self.problem, &Formula::and(fewer.clone()), self.session)?.is_pass() {
                parts = fewer;
            } else {
                i += 1;
            }
        }
        Ok(Formula::and(parts))
    }
}

/// Strengthens `Post` until it is inductive, learning features over
/// `relevant` only. The result passes [`check_vcs`] in a fresh session.
pub fn rel_infer(
    problem: &VcProblem,
    positives: &[PartialState],
    negatives: &[PartialState],
    relevant: &BTreeSet<String>,
    session: &mut SmtSession,
    config: &RelInferConfig,
) -> Result<Formula, RelInferError> {
    if relevant.is_empty() {
        return Err(RelInferError::NoSolution("empty relevant variable set".into()));
    }
    let started = Instant::now();
    let mut inference = Inference {
        problem,
        relevant,
        session,
        config,
        budget: Budget {
            deadline: config.time_limit.map(|t| started + t),
            cancel: config.cancel.clone(),
        },
    };
    config.trace.emit(
        "relinfer_start",
        json!({"relevant": relevant, "pos": positives.len(), "neg": negatives.len()}),
    );
    let result = inference.run(positives, negatives).and_then(|inv| {
        if config.simplify {
            inference.simplify(inv)
        } else {
            Ok(inv)
        }
    });
    let inv = match result {
        Ok(inv) => inv,
        Err(e) => {
            config.trace.emit("relinfer_end", json!({"relevant": relevant, "error": e.to_string()}));
            return Err(e);
        }
    };
    let mut fresh = SmtSession::new(inference.session.config().clone());
    fresh.set_cancel(config.cancel.clone());
    match check_vcs(problem, &inv, &mut fresh)? {
        VcResult::Pass => {
            config.trace.emit("relinfer_end", json!({"relevant": relevant, "invariant": inv.to_string()}));
            info!(elapsed = ?started.elapsed(), "invariant found");
            Ok(inv)
        }
        VcResult::NotVerified(r) => Err(RelInferError::SolverUnknown(r)),
        other => Err(RelInferError::Internal(format!("invariant failed the independent check: {other:?}"))),
    }
}
