//! Sparse CNF classifiers learned by integer linear programming.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use invsynth_ilp::{solve_with_stats, Assignment, Budget, IlpError, IlpModel, IlpOutcome, LinExpr, Rational, Relation, VarId};
use num_traits::{Signed, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;
use tracing::debug;

use crate::ir::{Atom, CnfPredicate, PartialState};

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("no separator: {state:?} is labeled both positive and negative")]
    Collision { state: PartialState },
    #[error("no separator exists in the configured hypothesis ladder")]
    NoSeparator,
    #[error("learning ran out of budget")]
    Timeout,
    #[error("invalid learner configuration: {0}")]
    Config(String),
    #[error("ILP error: {0}")]
    Ilp(#[from] IlpError),
    #[error("internal learner error: {0}")]
    Internal(String),
}

/// Labeled partial states over an ordered variable universe.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub vars: Vec<String>,
    pub examples: Vec<(PartialState, bool)>,
}

impl Dataset {
    pub fn new(vars: Vec<String>) -> Self {
        Dataset {
            vars,
            examples: Vec::new(),
        }
    }

    pub fn from_sets(vars: Vec<String>, pos: &[PartialState], neg: &[PartialState]) -> Self {
        let mut d = Dataset::new(vars);
        d.examples.extend(pos.iter().map(|s| (s.clone(), true)));
        d.examples.extend(neg.iter().map(|s| (s.clone(), false)));
        d
    }

    pub fn push(&mut self, state: PartialState, label: bool) {
        self.examples.push((state, label));
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Restricts every state and the universe to `keep`, preserving order.
    pub fn project(&self, keep: &BTreeSet<String>) -> Dataset {
        let vars: Vec<String> = self.vars.iter().filter(|v| keep.contains(*v)).cloned().collect();
        Dataset {
            examples: self.examples.iter().map(|(s, l)| (s.project(&vars), *l)).collect(),
            vars,
        }
    }

    /// A state that occurs with both labels, if any.
    pub fn collision(&self) -> Option<PartialState> {
        let mut labels: HashMap<&PartialState, bool> = HashMap::new();
        for (s, l) in &self.examples {
            match labels.get(s) {
                Some(prev) if prev != l => return Some(s.clone()),
                _ => {
                    labels.insert(s, *l);
                }
            }
        }
        None
    }

    fn flipped(&self) -> Dataset {
        Dataset {
            vars: self.vars.clone(),
            examples: self.examples.iter().map(|(s, l)| (s.clone(), !l)).collect(),
        }
    }

    /// Every variable unbound in at least one example.
    fn ever_top(&self) -> BTreeSet<String> {
        self.vars
            .iter()
            .filter(|v| self.examples.iter().any(|(s, _)| s.get(v).is_none()))
            .cloned()
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    Direct,
    /// Learn on flipped labels and negate the result.
    Flipped,
}

/// How unbound (⊤) coordinates enter the encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TopSemantics {
    /// A ⊤ coordinate contributes nothing to that example's inner product.
    #[default]
    DropPerExample,
    /// A variable that is ⊤ anywhere gets coefficient zero everywhere.
    GlobalZero,
}

#[derive(Debug, Clone)]
pub struct LearnerConfig {
    pub conjuncts: usize,
    pub disjuncts: usize,
    pub coeff_bound: i64,
    pub bias_bound: i64,
    /// `None` selects the automatic bound.
    pub big_m: Option<i64>,
    pub lambda: Rational,
    pub polarity: Polarity,
    /// Minimize the sparsity objective (otherwise feasibility only).
    pub objective: bool,
    pub top: TopSemantics,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            conjuncts: 1,
            disjuncts: 1,
            coeff_bound: 1000,
            bias_bound: 1000,
            big_m: None,
            lambda: Rational::from_integer(100.into()),
            polarity: Polarity::Direct,
            objective: true,
            top: TopSemantics::DropPerExample,
        }
    }
}

pub const DEFAULT_BIG_M: i64 = 100_000;

impl LearnerConfig {
    pub fn step(&self, disjuncts: usize, polarity: Polarity) -> Self {
        LearnerConfig {
            disjuncts,
            polarity,
            ..self.clone()
        }
    }

    /// The smallest M for which the big-M rows encode the indicators exactly.
    pub fn required_big_m(&self, data: &Dataset) -> i64 {
        let max_l1 = data
            .examples
            .iter()
            .map(|(s, _)| s.bindings().values().map(|v| (*v as i128).abs()).sum::<i128>())
            .max()
            .unwrap_or(0);
        let k = self.coeff_bound as i128;
        let by_data = k * (1 + max_l1) + self.bias_bound as i128 + 1;
        let by_support = 2 * (self.conjuncts * self.disjuncts) as i128 * k + 1;
        by_data.max(by_support).max(self.disjuncts as i128 + 1).min(i64::MAX as i128) as i64
    }

    pub fn effective_big_m(&self, data: &Dataset) -> Result<i64, LearnError> {
        let need = self.required_big_m(data);
        match self.big_m {
            None => Ok(need.max(DEFAULT_BIG_M)),
            Some(m) if m >= need => Ok(m),
            Some(m) => Err(LearnError::Config(format!("bigM {m} is below the required {need} for this data"))),
        }
    }

    fn validate(&self) -> Result<(), LearnError> {
        if self.conjuncts == 0 || self.disjuncts == 0 {
            return Err(LearnError::Config("C and D must be positive".into()));
        }
        if self.coeff_bound <= 0 || self.bias_bound < 0 {
            return Err(LearnError::Config("coefficient bounds must be positive".into()));
        }
        if self.lambda.is_negative() {
            return Err(LearnError::Config("lambda must be non-negative".into()));
        }
        Ok(())
    }
}

/// An encoded model plus the handles needed to decode it.
#[derive(Debug, Clone)]
pub struct Encoding {
    pub model: IlpModel,
    pub vars: Vec<String>,
    /// `w[c][d][j]`
    pub w: Vec<Vec<Vec<VarId>>>,
    pub b: Vec<Vec<VarId>>,
    pub mu: Vec<VarId>,
    pub big_m: i64,
}

/// Builds the separation ILP. Labels are used as given; flipping for the
/// flipped polarity happens in [`learn`].
pub fn encode(data: &Dataset, config: &LearnerConfig) -> Result<Encoding, LearnError> {
    config.validate()?;
    if let Some(state) = data.collision() {
        return Err(LearnError::Collision { state });
    }
    let m_big = config.effective_big_m(data)?;
    let (nc, nd) = (config.conjuncts, config.disjuncts);
    let k = config.coeff_bound;
    let kq = Rational::from_integer(k.into());
    let zero = Rational::from_integer(0.into());
    let zeroed = match config.top {
        TopSemantics::DropPerExample => BTreeSet::new(),
        TopSemantics::GlobalZero => data.ever_top(),
    };
    let mut model = IlpModel::new();
    let mut w = Vec::new();
    let mut b = Vec::new();
    let mut abs_terms: Vec<Vec<VarId>> = vec![Vec::new(); data.vars.len()];
    let mut objective = LinExpr::new();
    for c in 0..nc {
        let mut wc = Vec::new();
        let mut bc = Vec::new();
        for d in 0..nd {
            let mut wcd = Vec::new();
            for (j, var) in data.vars.iter().enumerate() {
                let bound = if zeroed.contains(var) { 0 } else { k };
                let wj = model.add_integer(format!("w[{c},{d},{var}]"), -bound, bound)?;
                let wp = model.add_continuous(format!("wp[{c},{d},{var}]"), Some(zero.clone()), Some(kq.clone()))?;
                let wn = model.add_continuous(format!("wn[{c},{d},{var}]"), Some(zero.clone()), Some(kq.clone()))?;
                model.add_constraint(LinExpr::new().term(wj, 1).term(wp, -1).term(wn, 1), Relation::Eq, 0);
                abs_terms[j].push(wp);
                abs_terms[j].push(wn);
                objective.add_term(wp, 1);
                objective.add_term(wn, 1);
                wcd.push(wj);
            }
            bc.push(model.add_integer(format!("b[{c},{d}]"), -config.bias_bound, config.bias_bound)?);
            wc.push(wcd);
        }
        w.push(wc);
        b.push(bc);
    }
    let mut mu = Vec::new();
    for (j, var) in data.vars.iter().enumerate() {
        let m = model.add_binary(format!("mu[{var}]"))?;
        model.set_priority(m, 2);
        let mut used = LinExpr::new();
        for t in &abs_terms[j] {
            used.add_term(*t, 1);
        }
        used.add_term(m, -m_big);
        model.add_constraint(used.clone(), Relation::Le, 0);
        model.add_constraint(used, Relation::Ge, 1 - m_big);
        objective.add_term(m, config.lambda.clone());
        mu.push(m);
    }
    for (n, (state, label)) in data.examples.iter().enumerate() {
        let mut conj = LinExpr::new();
        for c in 0..nc {
            let mut disj = LinExpr::new();
            for d in 0..nd {
                let z = model.add_binary(format!("z[{n},{c},{d}]"))?;
                model.set_priority(z, 1);
                let mut e = LinExpr::new();
                for (j, var) in data.vars.iter().enumerate() {
                    if let Some(v) = state.get(var) {
                        e.add_term(w[c][d][j], v);
                    }
                }
                e.add_term(b[c][d], 1);
                e.add_term(z, -m_big);
                model.add_constraint(e.clone(), Relation::Le, 0);
                model.add_constraint(e, Relation::Ge, 1 - m_big);
                disj.add_term(z, 1);
            }
            let y = model.add_binary(format!("y[{n},{c}]"))?;
            model.set_priority(y, 1);
            disj.add_term(y, -m_big);
            model.add_constraint(disj.clone(), Relation::Le, 0);
            model.add_constraint(disj, Relation::Ge, 1 - m_big);
            conj.add_term(y, 1);
        }
        if *label {
            model.add_constraint(conj, Relation::Ge, nc as i64);
        } else {
            model.add_constraint(conj, Relation::Le, nc as i64 - 1);
        }
    }
    if config.objective {
        model.set_objective(objective);
    }
    Ok(Encoding {
        model,
        vars: data.vars.clone(),
        w,
        b,
        mu,
        big_m: m_big,
    })
}

fn integral(r: &Rational, what: &str) -> Result<i64, LearnError> {
    if !r.is_integer() {
        return Err(LearnError::Internal(format!("{what} = {r} is not integral")));
    }
    r.to_integer()
        .to_i64()
        .ok_or_else(|| LearnError::Internal(format!("{what} out of range")))
}

/// Drops constant-true clauses, constant-false atoms and duplicates.
pub fn simplify_cnf(clauses: Vec<Vec<Atom>>) -> CnfPredicate {
    let mut out: Vec<Vec<Atom>> = Vec::new();
    'clauses: for clause in clauses {
        let mut kept: Vec<Atom> = Vec::new();
        for a in clause {
            if a.is_constant() {
                if a.bias > 0 {
                    continue 'clauses;
                }
                continue;
            }
            if !kept.contains(&a) {
                kept.push(a);
            }
        }
        if !out.contains(&kept) {
            out.push(kept);
        }
    }
    if out.iter().any(Vec::is_empty) {
        return CnfPredicate::ff();
    }
    CnfPredicate::new(out)
}

/// Reads the classifier off a feasible assignment of [`encode`]'s model.
pub fn decode(enc: &Encoding, assignment: &Assignment, polarity: Polarity) -> Result<CnfPredicate, LearnError> {
    let mut learned: Vec<Vec<Atom>> = Vec::new();
    for (c, wc) in enc.w.iter().enumerate() {
        let mut clause = Vec::new();
        for (d, wcd) in wc.iter().enumerate() {
            let mut coeffs = Vec::new();
            for (j, id) in wcd.iter().enumerate() {
                coeffs.push((enc.vars[j].clone(), integral(assignment.get(*id), "w")?));
            }
            let bias = integral(assignment.get(enc.b[c][d]), "b")?;
            clause.push(Atom::new(coeffs, bias));
        }
        learned.push(clause);
    }
    Ok(match polarity {
        Polarity::Direct => simplify_cnf(learned),
        Polarity::Flipped => simplify_cnf(negate_cnf(&learned)),
    })
}

/// `¬⋀_c ⋁_d a = ⋁_c ⋀_d ¬a`, distributed back into CNF.
pub fn negate_cnf(cnf: &[Vec<Atom>]) -> Vec<Vec<Atom>> {
    let mut result: Vec<Vec<Atom>> = vec![Vec::new()];
    for clause in cnf {
        let mut next = Vec::new();
        for partial in &result {
            for a in clause {
                let mut p = partial.clone();
                p.push(a.negate());
                next.push(p);
            }
        }
        result = next;
    }
    if cnf.is_empty() {
        // ¬true
        return vec![Vec::new()];
    }
    result
}

#[derive(Debug, Clone)]
pub struct LearnStats {
    pub step: usize,
    pub conjuncts: usize,
    pub disjuncts: usize,
    pub polarity: Polarity,
    pub ilp_vars: usize,
    pub ilp_constraints: usize,
    pub nodes: u64,
    pub objective: Option<Rational>,
    pub elapsed: Duration,
}

#[derive(Debug, Clone)]
pub struct LearnResult {
    pub predicate: CnfPredicate,
    pub relevant: BTreeSet<String>,
    pub stats: LearnStats,
}

pub fn filter_variables(result: &LearnResult) -> BTreeSet<String> {
    result.predicate.relevant_vars()
}

/// Settings shared by every step of the ladder.
#[derive(Debug, Clone)]
pub struct LearnSettings {
    pub base: LearnerConfig,
    /// `(C, D, polarity)` steps tried in order.
    pub ladder: Vec<(usize, usize, Polarity)>,
    pub time_limit: Option<Duration>,
    pub cancel: Option<Arc<AtomicBool>>,
    /// Fill ⊤ entries with seeded random values in [-16, 16] before learning.
    pub complete_maps: Option<u64>,
    pub dump_dir: Option<PathBuf>,
    pub ilp_counter: Arc<AtomicU64>,
}

impl Default for LearnSettings {
    fn default() -> Self {
        LearnSettings {
            base: LearnerConfig::default(),
            ladder: default_ladder(),
            time_limit: None,
            cancel: None,
            complete_maps: None,
            dump_dir: None,
            ilp_counter: Arc::new(AtomicU64::new(0)),
        }
    }
}

pub fn default_ladder() -> Vec<(usize, usize, Polarity)> {
    vec![
        (1, 1, Polarity::Direct),
        (1, 1, Polarity::Flipped),
        (1, 2, Polarity::Direct),
        (1, 2, Polarity::Flipped),
    ]
}

fn stable_hash(text: &str, seed: u64) -> u64 {
    // FNV-1a
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ seed;
    for byte in text.bytes() {
        h ^= byte as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Replaces every ⊤ with a value that depends only on the seed and the state.
pub fn complete_state(state: &PartialState, vars: &[String], seed: u64) -> PartialState {
    let key = format!("{:?}", state.bindings());
    let mut rng = ChaCha8Rng::seed_from_u64(stable_hash(&key, seed));
    let mut out = state.clone();
    for v in vars {
        let value = rng.gen_range(-16..=16);
        if out.get(v).is_none() {
            out.bind(v.clone(), value);
        }
    }
    out
}

/// Warm-start memory: the best objective seen per ladder step and variable set.
/// Adding examples only shrinks the feasible set, so an earlier optimum is a
/// valid lower bound for a later, larger dataset.
#[derive(Debug, Clone, Default)]
pub struct WarmStart {
    floors: BTreeMap<(usize, Vec<String>), Rational>,
}

/// Projects onto `restrict_to` and tries each ladder step, returning the first optimum.
pub fn learn(
    data: &Dataset,
    restrict_to: &BTreeSet<String>,
    settings: &LearnSettings,
    mut warm: Option<&mut WarmStart>,
) -> Result<LearnResult, LearnError> {
    if restrict_to.is_empty() {
        return Err(LearnError::Config("empty variable set".into()));
    }
    let mut projected = data.project(restrict_to);
    if let Some(seed) = settings.complete_maps {
        let vars = projected.vars.clone();
        for (s, _) in &mut projected.examples {
            *s = complete_state(s, &vars, seed);
        }
    }
    if let Some(state) = projected.collision() {
        return Err(LearnError::Collision { state });
    }
    for (step, &(c, d, polarity)) in settings.ladder.iter().enumerate() {
        let config = LearnerConfig {
            conjuncts: c,
            disjuncts: d,
            polarity,
            ..settings.base.clone()
        };
        let data_step = match polarity {
            Polarity::Direct => projected.clone(),
            Polarity::Flipped => projected.flipped(),
        };
        let enc = encode(&data_step, &config)?;
        if let Some(dir) = &settings.dump_dir {
            let id = settings.ilp_counter.load(Ordering::Relaxed);
            let path = dir.join(format!("learn-{id:05}-c{c}d{d}-{polarity:?}.lp").to_lowercase());
            if let Err(e) = std::fs::write(&path, invsynth_ilp::lp_format::to_lp_string(&enc.model)) {
                debug!(path = %path.display(), error = %e, "could not dump ILP");
            }
        }
        let mut budget = Budget::unlimited();
        budget.time_limit = settings.time_limit;
        budget.cancel = settings.cancel.clone();
        let key = (step, projected.vars.clone());
        if config.objective {
            if let Some(floor) = warm.as_ref().and_then(|w| w.floors.get(&key)) {
                budget.objective_floor = Some(floor.clone());
            }
        }
        let started = Instant::now();
        settings.ilp_counter.fetch_add(1, Ordering::Relaxed);
        let (outcome, stats) = solve_with_stats(&enc.model, &budget)?;
        debug!(step, nodes = stats.nodes, elapsed = ?stats.elapsed, examples = projected.len(), "learner ILP");
        let (assignment, objective) = match outcome {
            IlpOutcome::Infeasible => continue,
            IlpOutcome::ResourceLimit => return Err(LearnError::Timeout),
            IlpOutcome::Optimal { assignment, objective } => (assignment, Some(objective)),
            IlpOutcome::Feasible { assignment } => (assignment, None),
        };
        let predicate = decode(&enc, &assignment, polarity)?;
        if let Some((s, l)) = projected.examples.iter().find(|(s, l)| predicate.eval(s) != *l) {
            return Err(LearnError::Internal(format!(
                "decoded classifier mislabels {:?} (expected {l})",
                s.bindings()
            )));
        }
        let objective = objective.filter(|_| config.objective);
        if let (Some(w), Some(obj)) = (warm.as_deref_mut(), &objective) {
            w.floors.insert(key, obj.clone());
        }
        return Ok(LearnResult {
            relevant: predicate.relevant_vars(),
            predicate,
            stats: LearnStats {
                step,
                conjuncts: c,
                disjuncts: d,
                polarity,
                ilp_vars: enc.model.num_vars(),
                ilp_constraints: enc.model.constraints().len(),
                nodes: stats.nodes,
                objective,
                elapsed: started.elapsed(),
            },
        });
    }
    Err(LearnError::NoSeparator)
}

/// Reads a non-negative rational written as `3`, `1/2` or `0.25`.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    let value = if let Some((int, frac)) = text.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let digits: num_bigint::BigInt = format!("{int}{frac}").parse().ok()?;
        Rational::new(digits, num_bigint::BigInt::from(10).pow(frac.len() as u32))
    } else {
        text.parse::<Rational>().ok()?
    };
    (!value.is_negative()).then_some(value)
}
