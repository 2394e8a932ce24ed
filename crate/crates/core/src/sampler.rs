//! Initial samples and counterexample search by bounded unrolling.

use std::collections::BTreeMap;

use thiserror::Error;
use tracing::{debug, info};

use crate::ir::{prime, primed_name, to_primed, Formula, PartialState, VcProblem};
use crate::smt::{ModelOutcome, SmtError, SmtSession};

pub const DEFAULT_K_MAX: usize = 50;
pub const DEFAULT_PER_CLASS: usize = 8;

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error(transparent)]
    Smt(#[from] SmtError),
    #[error("bootstrap sampling failed: {0}")]
    BootstrapFailed(String),
}

/// `Pre(σ₀) ∧ Trans(σ₀,σ₁) ∧ … ∧ Trans(σ_{k-1},σ_k)`.
pub fn reachable_formula(problem: &VcProblem, k: usize) -> Formula {
    let mut parts = vec![at(&problem.pre, problem, 0)];
    parts.extend((0..k).map(|t| trans_at(problem, t)));
    Formula::and(parts)
}

/// `Trans(σ₀,σ₁) ∧ … ∧ Trans(σ_{k-1},σ_k) ∧ ¬Post(σ_k)`.
pub fn bad_formula(problem: &VcProblem, k: usize) -> Formula {
    let mut parts: Vec<Formula> = (0..k).map(|t| trans_at(problem, t)).collect();
    parts.push(at(&Formula::not(problem.post.clone()), problem, k));
    Formula::and(parts)
}

fn at(f: &Formula, problem: &VcProblem, k: usize) -> Formula {
    prime(f, &problem.vars, k, k + 1).expect("validated problem")
}

fn trans_at(problem: &VcProblem, t: usize) -> Formula {
    prime(&problem.trans, &problem.vars, t, t + 1).expect("validated problem")
}

#[derive(Debug, Clone, Default)]
struct Direction {
    formulas: BTreeMap<usize, Formula>,
    /// Depths whose path formula is known to be unsatisfiable.
    unsat_from: Option<usize>,
    /// Depths whose path formula is known to be satisfiable.
    sat: std::collections::BTreeSet<usize>,
}

/// Path formulas and their satisfiability per depth. They do not depend on
/// the classifier, so one cache serves every refinement round of a problem.
#[derive(Debug, Clone, Default)]
pub struct UnrollCache {
    reach: Direction,
    bad: Direction,
}

impl UnrollCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn reach_unsat_from(&self) -> Option<usize> {
        self.reach.unsat_from
    }

    pub fn bad_unsat_from(&self) -> Option<usize> {
        self.bad.unsat_from
    }
}

enum PathStatus {
    Dead,
    Live,
}

fn path_status(
    dir: &mut Direction,
    k: usize,
    build: impl FnOnce() -> Formula,
    session: &mut SmtSession,
) -> Result<PathStatus, SmtError> {
    if dir.unsat_from.is_some_and(|d| k >= d) {
        return Ok(PathStatus::Dead);
    }
    let formula = dir.formulas.entry(k).or_insert_with(build).clone();
    if dir.sat.contains(&k) {
        return Ok(PathStatus::Live);
    }
    match session.get_model(&formula, &[])? {
        ModelOutcome::Unsat => {
            debug!(k, "path formula unsatisfiable");
            dir.unsat_from = Some(dir.unsat_from.map_or(k, |d| d.min(k)));
            Ok(PathStatus::Dead)
        }
        ModelOutcome::Sat(_) => {
            dir.sat.insert(k);
            Ok(PathStatus::Live)
        }
        ModelOutcome::Unknown(_) => Ok(PathStatus::Live),
    }
}

/// A reachable state (within `k_max` steps) that `classifier` rejects.
pub fn find_pos_counterexample(
    problem: &VcProblem,
    classifier: &Formula,
    session: &mut SmtSession,
    cache: &mut UnrollCache,
    k_max: usize,
) -> Result<Option<PartialState>, SmtError> {
    for k in 0..=k_max {
        if session.is_cancelled() {
            return Ok(None);
        }
        if let PathStatus::Dead = path_status(&mut cache.reach, k, || reachable_formula(problem, k), session)? {
            return Ok(None);
        }
        let path = cache.reach.formulas[&k].clone();
        let query = Formula::and([path, Formula::not(at(classifier, problem, k))]);
        match session.get_model(&query, &[])? {
            ModelOutcome::Sat(m) => {
                let s = m.at_step(&problem.vars, k);
                info!(k, state = %s.display(&problem.vars), "positive counterexample");
                return Ok(Some(s));
            }
            ModelOutcome::Unsat => {}
            ModelOutcome::Unknown(reason) => debug!(k, %reason, "positive check unknown, trying deeper"),
        }
    }
    Ok(None)
}

/// A state that reaches a violation within `k_max` steps yet `classifier` accepts.
pub fn find_neg_counterexample(
    problem: &VcProblem,
    classifier: &Formula,
    session: &mut SmtSession,
    cache: &mut UnrollCache,
    k_max: usize,
) -> Result<Option<PartialState>, SmtError> {
    for k in 0..=k_max {
        if session.is_cancelled() {
            return Ok(None);
        }
        if let PathStatus::Dead = path_status(&mut cache.bad, k, || bad_formula(problem, k), session)? {
            return Ok(None);
        }
        let path = cache.bad.formulas[&k].clone();
        let query = Formula::and([path, at(classifier, problem, 0)]);
        match session.get_model(&query, &[])? {
            ModelOutcome::Sat(m) => {
                let s = m.at_step(&problem.vars, 0);
                info!(k, state = %s.display(&problem.vars), "negative counterexample");
                return Ok(Some(s));
            }
            ModelOutcome::Unsat => {}
            ModelOutcome::Unknown(reason) => debug!(k, %reason, "negative check unknown, trying deeper"),
        }
    }
    Ok(None)
}

/// Up to `count` distinct models of `formula`, each read back through `view`.
/// Blocking is applied to the viewed coordinates (renamed by `rename`).
fn distinct_models(
    session: &mut SmtSession,
    formula: &Formula,
    count: usize,
    view: impl Fn(&PartialState) -> PartialState,
    rename: impl Fn(&PartialState) -> PartialState,
) -> Result<(Vec<PartialState>, bool), SmtError> {
    let mut out: Vec<PartialState> = Vec::new();
    let mut blocked: Vec<PartialState> = Vec::new();
    let mut answered = false;
    while out.len() < count {
        match session.get_model(formula, &blocked)? {
            ModelOutcome::Sat(m) => {
                answered = true;
                let s = view(&m);
                let b = rename(&s);
                if b.is_empty() {
                    // nothing left to block on
                    out.push(s);
                    break;
                }
                blocked.push(b);
                out.push(s);
            }
            ModelOutcome::Unsat => {
                answered = true;
                break;
            }
            ModelOutcome::Unknown(_) => break,
        }
    }
    Ok((out, answered))
}

fn merge(into: &mut Vec<PartialState>, more: Vec<PartialState>) {
    for s in more {
        if !into.contains(&s) {
            into.push(s);
        }
    }
}

/// Initial positives from `Pre` and the successors of `Pre`, negatives from
/// `¬Post` and the predecessors of `¬Post`. `per_class` is split evenly
/// between the two sources of each class; a source that yields nothing hands
/// its share to the other.
pub fn bootstrap_samples(
    problem: &VcProblem,
    session: &mut SmtSession,
    per_class: usize,
) -> Result<(Vec<PartialState>, Vec<PartialState>), SamplerError> {
    let per_class = per_class.max(1);
    let first = per_class.div_ceil(2);
    let vars = &problem.vars;
    let as_primed = |s: &PartialState| s.renamed(primed_name);
    let same = |s: &PartialState| s.clone();
    let mut answered = 0;

    let (mut pos, a) = distinct_models(session, &problem.pre, first, |m| m.project(vars), same)?;
    answered += a as usize;
    let succ = Formula::and([problem.pre.clone(), problem.trans.clone()]);
    let want = per_class - pos.len();
    let (more, a) = distinct_models(session, &succ, want, |m| m.primed_part(vars), as_primed)?;
    answered += a as usize;
    merge(&mut pos, more);

    let not_post = Formula::not(problem.post.clone());
    let (mut neg, a) = distinct_models(session, &not_post, first, |m| m.project(vars), same)?;
    answered += a as usize;
    let pred = Formula::and([to_primed(&not_post, vars), problem.trans.clone()]);
    let want = per_class - neg.len();
    let (more, a) = distinct_models(session, &pred, want, |m| m.project(vars), same)?;
    answered += a as usize;
    merge(&mut neg, more);

    if answered == 0 {
        return Err(SamplerError::BootstrapFailed("the solver answered unknown on every source".into()));
    }
    if pos.is_empty() && neg.is_empty() {
        return Err(SamplerError::BootstrapFailed("no positive or negative states exist".into()));
    }
    info!(positives = pos.len(), negatives = neg.len(), "bootstrap samples");
    Ok((pos, neg))
}
