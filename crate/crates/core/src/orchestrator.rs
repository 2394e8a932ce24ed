//! The top-level loop: classifier learning, two refinement tasks and
//! relevance-restricted inference running side by side.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::Serialize;
use serde_json::json;
use thiserror::Error;
use tracing::{debug, info, warn};

use crate::frontend::{parse_problem, render_formula, InvariantFormat, ProblemSource};
use crate::ir::{Formula, PartialState, VcProblem};
use crate::learner::{filter_variables, learn, Dataset, LearnError, LearnResult, LearnSettings, WarmStart};
use crate::relinfer::{check_vcs, rel_infer, RelInferConfig, RelInferError, VcResult};
use crate::sampler::{
    bootstrap_samples, find_neg_counterexample, find_pos_counterexample, UnrollCache, DEFAULT_K_MAX,
    DEFAULT_PER_CLASS,
};
use crate::smt::{SmtConfig, SmtError, SmtSession};
use crate::trace::Trace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Oasis,
    NoVarsSelect,
    NaiveVarsSelect,
    LearnOnly,
    NoRelinfer,
}

impl Mode {
    pub const ALL: [Mode; 5] = [
        Mode::Oasis,
        Mode::NoVarsSelect,
        Mode::NaiveVarsSelect,
        Mode::LearnOnly,
        Mode::NoRelinfer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Oasis => "oasis",
            Mode::NoVarsSelect => "no-vars-select",
            Mode::NaiveVarsSelect => "naive-vars-select",
            Mode::LearnOnly => "learn-only",
            Mode::NoRelinfer => "no-relinfer",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
#[error("unknown mode `{0}` (expected one of oasis, no-vars-select, naive-vars-select, learn-only, no-relinfer)")]
pub struct ParseModeError(String);

impl FromStr for Mode {
    type Err = ParseModeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| ParseModeError(s.to_string()))
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("tau ({tau:?}) must be shorter than the global timeout ({timeout:?})")]
    Tau { tau: Duration, timeout: Duration },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone)]
pub struct OasisConfig {
    /// Time limit of one relevance-restricted inference run.
    pub tau: Duration,
    pub k_max: usize,
    pub timeout: Duration,
    pub learn: LearnSettings,
    pub mode: Mode,
    pub seed: u64,
    pub smt: SmtConfig,
    /// Bootstrap samples per class.
    pub per_class: usize,
    pub trace: Trace,
    /// Reuse classifier optima across rounds as ILP lower bounds.
    pub warm_start: bool,
    /// Fill ⊤ coordinates with seeded values before learning.
    pub complete_maps: bool,
    pub cancel: Option<Arc<AtomicBool>>,
}

impl Default for OasisConfig {
    fn default() -> Self {
        OasisConfig {
            tau: Duration::from_secs(60),
            k_max: DEFAULT_K_MAX,
            timeout: Duration::from_secs(300),
            learn: LearnSettings::default(),
            mode: Mode::Oasis,
            seed: 0,
            smt: SmtConfig::default(),
            per_class: DEFAULT_PER_CLASS,
            trace: Trace::off(),
            warm_start: false,
            complete_maps: false,
            cancel: None,
        }
    }
}

impl OasisConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.tau >= self.timeout {
            return Err(ConfigError::Tau {
                tau: self.tau,
                timeout: self.timeout,
            });
        }
        if self.k_max == 0 {
            return Err(ConfigError::Invalid("k_max must be positive".into()));
        }
        if self.learn.ladder.is_empty() {
            return Err(ConfigError::Invalid("the learner ladder is empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Solved(Formula),
    Unsolved(String),
}

impl Verdict {
    pub fn is_solved(&self) -> bool {
        matches!(self, Verdict::Solved(_))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundReport {
    pub relevant_vars: Vec<String>,
    pub classifier: String,
    pub pos_count: usize,
    pub neg_count: usize,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub verdict: Verdict,
    pub elapsed: Duration,
    pub rounds: Vec<RoundReport>,
    pub smt_queries: u64,
    pub ilp_solves: u64,
    pub vars: Vec<String>,
    /// Variables the successful inference was restricted to.
    pub relevant: Option<Vec<String>>,
}

#[derive(Serialize)]
struct StatsJson<'a> {
    verdict: &'static str,
    reason: Option<&'a str>,
    time_ms: u128,
    rounds: &'a [RoundReport],
    smt_queries: u64,
    ilp_solves: u64,
    invariant: Option<String>,
    invariant_size: Option<usize>,
}

impl RunReport {
    pub fn invariant(&self) -> Option<&Formula> {
        match &self.verdict {
            Verdict::Solved(f) => Some(f),
            Verdict::Unsolved(_) => None,
        }
    }

    /// Node count of the emitted invariant.
    pub fn invariant_size(&self) -> Option<usize> {
        self.invariant().map(Formula::size)
    }

    pub fn define_fun(&self) -> Option<String> {
        self.invariant()
            .map(|f| render_formula(f, &self.vars, InvariantFormat::SygusDefineFun))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let (verdict, reason) = match &self.verdict {
            Verdict::Solved(_) => ("solved", None),
            Verdict::Unsolved(r) => ("unsolved", Some(r.as_str())),
        };
        serde_json::to_value(StatsJson {
            verdict,
            reason,
            time_ms: self.elapsed.as_millis(),
            rounds: &self.rounds,
            smt_queries: self.smt_queries,
            ilp_solves: self.ilp_solves,
            invariant: self.invariant().map(|f| f.to_string()),
            invariant_size: self.invariant_size(),
        })
        .expect("stats serialize")
    }
}

/// Inference runs kept alive at once; older ones are cancelled first.
const MAX_LIVE_INFERENCE: usize = 4;
const POLL: Duration = Duration::from_millis(50);

enum TaskResult {
    Pos(UnrollCache, Result<Option<PartialState>, SmtError>),
    Neg(UnrollCache, Result<Option<PartialState>, SmtError>),
    Inv(usize, Result<Formula, RelInferError>),
}

struct InferenceTask {
    id: usize,
    relevant: BTreeSet<String>,
    cancel: Arc<AtomicBool>,
    handle: Option<std::thread::JoinHandle<()>>,
}

/// Inference tasks outlive the round that started them, until `tau` runs out.
struct Hub {
    tx: mpsc::Sender<TaskResult>,
    next_id: usize,
    live: Vec<InferenceTask>,
    retired: Vec<InferenceTask>,
    failed: Vec<(BTreeSet<String>, RelInferError)>,
}

struct Run<'a> {
    problem: &'a Arc<VcProblem>,
    config: &'a OasisConfig,
    started: Instant,
    deadline: Instant,
    all_vars: BTreeSet<String>,
    rounds: Vec<RoundReport>,
    relevant: Option<Vec<String>>,
    warm: Option<WarmStart>,
}

impl Run<'_> {
    fn remaining(&self) -> Duration {
        self.deadline.saturating_duration_since(Instant::now())
    }

    fn cancelled(&self) -> bool {
        self.config.cancel.as_ref().is_some_and(|c| c.load(Ordering::Relaxed))
    }

    fn out_of_time(&self) -> bool {
        self.remaining().is_zero() || self.cancelled()
    }

    fn session(&self, cancel: Option<Arc<AtomicBool>>) -> SmtSession {
        let mut s = SmtSession::new(self.config.smt.clone());
        s.set_cancel(cancel);
        s
    }

    fn learn_settings(&self, cancel: Option<Arc<AtomicBool>>) -> LearnSettings {
        let mut settings = self.config.learn.clone();
        settings.cancel = cancel;
        if self.config.complete_maps {
            settings.complete_maps = Some(self.config.seed);
        }
        settings
    }

    fn relinfer_config(&self, limit: Duration, cancel: Option<Arc<AtomicBool>>) -> RelInferConfig {
        RelInferConfig {
            learn: self.learn_settings(cancel.clone()),
            time_limit: Some(limit.min(self.remaining())),
            cancel,
            trace: self.config.trace.clone(),
            ..RelInferConfig::default()
        }
    }

    fn classifier(&mut self, pos: &[PartialState], neg: &[PartialState]) -> Result<LearnResult, Verdict> {
        let data = Dataset::from_sets(self.problem.vars.clone(), pos, neg);
        let mut settings = self.learn_settings(self.config.cancel.clone());
        settings.time_limit = Some(self.remaining());
        let warm = if self.config.warm_start { self.warm.as_mut() } else { None };
        learn(&data, &self.all_vars, &settings, warm).map_err(|e| match e {
            LearnError::Collision { state } => Verdict::Unsolved(format!(
                "state {} is both reachable and bad",
                state.display(&self.problem.vars)
            )),
            LearnError::NoSeparator => Verdict::Unsolved("no classifier separates the samples".into()),
            LearnError::Timeout => Verdict::Unsolved("timeout".into()),
            other => Verdict::Unsolved(format!("learner failed: {other}")),
        })
    }

    fn record_round(&mut self, r: &BTreeSet<String>, classifier: &Formula, pos: usize, neg: usize) {
        let round = RoundReport {
            relevant_vars: r.iter().cloned().collect(),
            classifier: classifier.to_string(),
            pos_count: pos,
            neg_count: neg,
        };
        self.config.trace.emit(
            "round",
            json!({
                "round": self.rounds.len(),
                "relevant": round.relevant_vars,
                "classifier": round.classifier,
                "pos": pos,
                "neg": neg,
            }),
        );
        info!(round = self.rounds.len(), relevant = ?round.relevant_vars, classifier = %round.classifier, "round");
        self.rounds.push(round);
    }

    /// Independent re-check in a fresh session; the only way to a Solved verdict.
    fn accept(&mut self, inv: Formula, relevant: &BTreeSet<String>) -> Verdict {
        let mut fresh = self.session(None);
        match check_vcs(self.problem, &inv, &mut fresh) {
            Ok(VcResult::Pass) => {
                self.relevant = Some(relevant.iter().cloned().collect());
                Verdict::Solved(inv)
            }
            Ok(other) => {
                warn!(?other, invariant = %inv, "candidate rejected by the final check");
                Verdict::Unsolved(format!("candidate {inv} failed the final check"))
            }
            Err(e) => Verdict::Unsolved(format!("final check failed: {e}")),
        }
    }

    fn infer(&mut self, pos: &[PartialState], neg: &[PartialState], r: &BTreeSet<String>, limit: Duration) -> Result<Formula, RelInferError> {
        let cfg = self.relinfer_config(limit, self.config.cancel.clone());
        let mut session = self.session(self.config.cancel.clone());
        rel_infer(self.problem, pos, neg, r, &mut session, &cfg)
    }

    fn solve(&mut self) -> Verdict {
        let mut boot = self.session(self.config.cancel.clone());
        let (mut pos, mut neg) = match bootstrap_samples(self.problem, &mut boot, self.config.per_class) {
            Ok(s) => s,
            Err(e) => return Verdict::Unsolved(e.to_string()),
        };
        drop(boot);
        match self.config.mode {
            Mode::Oasis => self.oasis(&mut pos, &mut neg),
            Mode::NoRelinfer => self.no_relinfer(&mut pos, &mut neg),
            Mode::LearnOnly => self.learn_only(&pos, &neg),
            Mode::NoVarsSelect => {
                let all = self.all_vars.clone();
                self.record_round(&all, &Formula::tt(), pos.len(), neg.len());
                match self.infer(&pos, &neg, &all, self.remaining()) {
                    Ok(inv) => self.accept(inv, &all),
                    Err(e) => Verdict::Unsolved(e.to_string()),
                }
            }
            Mode::NaiveVarsSelect => self.naive(&pos, &neg),
        }
    }

    fn learn_only(&mut self, pos: &[PartialState], neg: &[PartialState]) -> Verdict {
        let c = match self.classifier(pos, neg) {
            Ok(c) => c,
            Err(v) => return v,
        };
        let f = c.predicate.to_formula(&self.problem.vars);
        self.record_round(&filter_variables(&c), &f, pos.len(), neg.len());
        let r = filter_variables(&c);
        self.check_classifier(f, &r)
    }

    fn check_classifier(&mut self, f: Formula, r: &BTreeSet<String>) -> Verdict {
        let mut session = self.session(self.config.cancel.clone());
        match check_vcs(self.problem, &f, &mut session) {
            Ok(VcResult::Pass) => self.accept(f, r),
            Ok(VcResult::NotVerified(reason)) => Verdict::Unsolved(format!("classifier not verified: {reason}")),
            Ok(_) => Verdict::Unsolved("the classifier is not an invariant".into()),
            Err(e) => Verdict::Unsolved(e.to_string()),
        }
    }

    /// Refines the classifier until neither direction finds a counterexample,
    /// then checks it as the invariant.
    fn no_relinfer(&mut self, pos: &mut Vec<PartialState>, neg: &mut Vec<PartialState>) -> Verdict {
        let mut pos_cache = UnrollCache::new();
        let mut neg_cache = UnrollCache::new();
        loop {
            if self.out_of_time() {
                return Verdict::Unsolved("timeout".into());
            }
            let c = match self.classifier(pos, neg) {
                Ok(c) => c,
                Err(v) => return v,
            };
            let f = c.predicate.to_formula(&self.problem.vars);
            let r = filter_variables(&c);
            self.record_round(&r, &f, pos.len(), neg.len());
            let mut s = self.session(self.config.cancel.clone());
            match find_pos_counterexample(self.problem, &f, &mut s, &mut pos_cache, self.config.k_max) {
                Ok(Some(p)) if !pos.contains(&p) => {
                    pos.push(p);
                    continue;
                }
                Ok(_) => {}
                Err(e) => return Verdict::Unsolved(e.to_string()),
            }
            match find_neg_counterexample(self.problem, &f, &mut s, &mut neg_cache, self.config.k_max) {
                Ok(Some(n)) if !neg.contains(&n) => {
                    neg.push(n);
                    continue;
                }
                Ok(_) => {}
                Err(e) => return Verdict::Unsolved(e.to_string()),
            }
            if self.out_of_time() {
                return Verdict::Unsolved("timeout".into());
            }
            return self.check_classifier(f, &r);
        }
    }

    /// Every variable subset in order of size, each with the `tau` limit.
    fn naive(&mut self, pos: &[PartialState], neg: &[PartialState]) -> Verdict {
        let vars = self.problem.vars.clone();
        let n = vars.len();
        for size in 1..=n {
            for subset in subsets(n, size) {
                if self.out_of_time() {
                    return Verdict::Unsolved("timeout".into());
                }
                let r: BTreeSet<String> = subset.iter().map(|&i| vars[i].clone()).collect();
                self.record_round(&r, &Formula::tt(), pos.len(), neg.len());
                match self.infer(pos, neg, &r, self.config.tau) {
                    Ok(inv) => {
                        if let v @ Verdict::Solved(_) = self.accept(inv, &r) {
                            return v;
                        }
                    }
                    Err(e) => debug!(relevant = ?r, error = %e, "subset failed"),
                }
            }
        }
        Verdict::Unsolved("no variable subset yields an invariant".into())
    }

    fn spawn_inference(&self, hub: &mut Hub, r: &BTreeSet<String>, pos: &[PartialState], neg: &[PartialState], limit: Duration) {
        let cancel = Arc::new(AtomicBool::new(false));
        let cfg = self.relinfer_config(limit, Some(cancel.clone()));
        let mut session = self.session(Some(cancel.clone()));
        let problem = self.problem.clone();
        let (ps, ns, set) = (pos.to_vec(), neg.to_vec(), r.clone());
        let id = hub.next_id;
        hub.next_id += 1;
        let tx = hub.tx.clone();
        let handle = std::thread::spawn(move || {
            let result = rel_infer(&problem, &ps, &ns, &set, &mut session, &cfg);
            let _ = tx.send(TaskResult::Inv(id, result));
        });
        debug!(id, relevant = ?r, "inference task started");
        hub.live.push(InferenceTask {
            id,
            relevant: r.clone(),
            cancel,
            handle: Some(handle),
        });
        while hub.live.len() > MAX_LIVE_INFERENCE {
            let old = hub.live.remove(0);
            old.cancel.store(true, Ordering::Relaxed);
            hub.retired.push(old);
        }
    }

    /// Handles one inference outcome; a verified invariant ends the run.
    fn inference_done(&mut self, hub: &mut Hub, id: usize, result: Result<Formula, RelInferError>) -> Option<Verdict> {
        let Some(i) = hub.live.iter().position(|t| t.id == id) else {
            return None;
        };
        let task = hub.live.remove(i);
        let relevant = task.relevant.clone();
        hub.retired.push(task);
        match result {
            Ok(inv) => match self.accept(inv, &relevant) {
                v @ Verdict::Solved(_) => Some(v),
                Verdict::Unsolved(_) => None,
            },
            Err(e) => {
                debug!(relevant = ?relevant, error = %e, "inference task failed");
                hub.failed.push((relevant, e));
                None
            }
        }
    }

    fn oasis(&mut self, pos: &mut Vec<PartialState>, neg: &mut Vec<PartialState>) -> Verdict {
        let (tx, rx) = mpsc::channel();
        let mut hub = Hub {
            tx,
            next_id: 0,
            live: Vec::new(),
            retired: Vec::new(),
            failed: Vec::new(),
        };
        let verdict = self.oasis_loop(pos, neg, &mut hub, &rx);
        for t in hub.live.iter().chain(&hub.retired) {
            t.cancel.store(true, Ordering::Relaxed);
        }
        for mut t in hub.live.into_iter().chain(hub.retired) {
            if let Some(h) = t.handle.take() {
                let _ = h.join();
            }
        }
        verdict
    }

    fn oasis_loop(
        &mut self,
        pos: &mut Vec<PartialState>,
        neg: &mut Vec<PartialState>,
        hub: &mut Hub,
        rx: &mpsc::Receiver<TaskResult>,
    ) -> Verdict {
        let mut pos_cache = Some(UnrollCache::new());
        let mut neg_cache = Some(UnrollCache::new());
        let timeout = || Verdict::Unsolved("timeout".into());
        loop {
            if self.out_of_time() {
                return timeout();
            }
            let c = match self.classifier(pos, neg) {
                Ok(c) => c,
                Err(v) => return v,
            };
            let f = c.predicate.to_formula(&self.problem.vars);
            let mut r = filter_variables(&c);
            if r.is_empty() {
                // a constant classifier says nothing about relevance
                r = self.all_vars.clone();
            }
            self.record_round(&r, &f, pos.len(), neg.len());
            if !hub.live.iter().any(|t| t.relevant == r) {
                self.spawn_inference(hub, &r, pos, neg, self.config.tau);
            }

            let round_cancel = Arc::new(AtomicBool::new(false));
            for positive in [true, false] {
                let mut session = self.session(Some(round_cancel.clone()));
                let mut cache = if positive { pos_cache.take() } else { neg_cache.take() }.expect("cache returned");
                let (problem, classifier, k_max, tx) = (self.problem.clone(), f.clone(), self.config.k_max, hub.tx.clone());
                std::thread::spawn(move || {
                    if positive {
                        let r = find_pos_counterexample(&problem, &classifier, &mut session, &mut cache, k_max);
                        let _ = tx.send(TaskResult::Pos(cache, r));
                    } else {
                        let r = find_neg_counterexample(&problem, &classifier, &mut session, &mut cache, k_max);
                        let _ = tx.send(TaskResult::Neg(cache, r));
                    }
                });
            }

            let mut refiners = 2;
            let mut found: Option<(bool, PartialState)> = None;
            while refiners > 0 {
                let msg = match rx.recv_timeout(POLL) {
                    Ok(m) => m,
                    Err(mpsc::RecvTimeoutError::Timeout) => {
                        if self.out_of_time() {
                            round_cancel.store(true, Ordering::Relaxed);
                        }
                        continue;
                    }
                    Err(mpsc::RecvTimeoutError::Disconnected) => unreachable!("the hub keeps a sender"),
                };
                match msg {
                    TaskResult::Inv(id, result) => {
                        if let Some(v) = self.inference_done(hub, id, result) {
                            round_cancel.store(true, Ordering::Relaxed);
                            return v;
                        }
                    }
                    TaskResult::Pos(cache, result) => {
                        refiners -= 1;
                        pos_cache = Some(cache);
                        self.refined(&mut found, true, result, pos, &round_cancel);
                    }
                    TaskResult::Neg(cache, result) => {
                        refiners -= 1;
                        neg_cache = Some(cache);
                        self.refined(&mut found, false, result, neg, &round_cancel);
                    }
                }
            }
            if self.out_of_time() {
                return timeout();
            }
            if let Some((positive, s)) = found {
                info!(state = %s.display(&self.problem.vars), positive, "new sample");
                if positive { pos.push(s) } else { neg.push(s) }
                continue;
            }
            // The classifier is stable: only inference can finish the job.
            return self.settle(hub, rx, &r, pos, neg);
        }
    }

    fn refined(
        &self,
        found: &mut Option<(bool, PartialState)>,
        positive: bool,
        result: Result<Option<PartialState>, SmtError>,
        known: &[PartialState],
        round_cancel: &AtomicBool,
    ) {
        match result {
            Ok(Some(s)) if found.is_none() && !known.contains(&s) => {
                round_cancel.store(true, Ordering::Relaxed);
                *found = Some((positive, s));
            }
            Ok(_) => {}
            Err(e) => debug!(positive, error = %e, "refinement failed"),
        }
    }

    /// Waits for running inference, then retries with a doubled budget and
    /// finally with every variable.
    fn settle(
        &mut self,
        hub: &mut Hub,
        rx: &mpsc::Receiver<TaskResult>,
        r: &BTreeSet<String>,
        pos: &[PartialState],
        neg: &[PartialState],
    ) -> Verdict {
        let all = self.all_vars.clone();
        let mut plan = vec![(r.clone(), self.config.tau * 2), (all.clone(), self.config.tau * 2)];
        loop {
            if hub.live.is_empty() {
                let Some((set, limit)) = (!plan.is_empty()).then(|| plan.remove(0)) else {
                    return Verdict::Unsolved("no invariant found over the relevant variables".into());
                };
                let definite = hub
                    .failed
                    .iter()
                    .any(|(s, e)| s == &set && matches!(e, RelInferError::NoSolution(_)));
                if definite && &set == r && set != all {
                    // a longer budget cannot help a definite failure
                    continue;
                }
                self.spawn_inference(hub, &set, pos, neg, limit);
            }
            match rx.recv_timeout(POLL) {
                Ok(TaskResult::Inv(id, result)) => {
                    if let Some(v) = self.inference_done(hub, id, result) {
                        return v;
                    }
                }
                Ok(_) => {}
                Err(mpsc::RecvTimeoutError::Timeout) => {
                    if self.out_of_time() {
                        return Verdict::Unsolved("timeout".into());
                    }
                }
                Err(mpsc::RecvTimeoutError::Disconnected) => unreachable!("the hub keeps a sender"),
            }
        }
    }
}

/// Index subsets of `0..n` with `k` elements, in lexicographic order.
fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
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
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

pub fn oasis_solve(problem: &VcProblem, config: &OasisConfig) -> RunReport {
    let started = Instant::now();
    let smt_before = config.smt.counter.load(Ordering::Relaxed);
    let ilp_before = config.learn.ilp_counter.load(Ordering::Relaxed);
    let shared = Arc::new(problem.clone());
    let mut run = Run {
        problem: &shared,
        config,
        started,
        deadline: started + config.timeout,
        all_vars: problem.vars.iter().cloned().collect(),
        rounds: Vec::new(),
        relevant: None,
        warm: config.warm_start.then(WarmStart::default),
    };
    config.trace.emit("start", json!({"mode": config.mode.name(), "vars": problem.vars}));
    let verdict = match config.validate() {
        Ok(()) => run.solve(),
        Err(e) => Verdict::Unsolved(e.to_string()),
    };
    let elapsed = run.started.elapsed();
    config.trace.emit(
        "end",
        json!({
            "verdict": if verdict.is_solved() { "solved" } else { "unsolved" },
            "time_ms": elapsed.as_millis(),
            "relevant": run.relevant,
        }),
    );
    RunReport {
        verdict,
        elapsed,
        rounds: run.rounds,
        smt_queries: config.smt.counter.load(Ordering::Relaxed) - smt_before,
        ilp_solves: config.learn.ilp_counter.load(Ordering::Relaxed) - ilp_before,
        vars: problem.vars.clone(),
        relevant: run.relevant,
    }
}

#[derive(Debug, Serialize)]
pub struct BenchRow {
    pub file: String,
    pub verdict: String,
    pub time: String,
    #[serde(rename = "#vars")]
    pub vars: usize,
    #[serde(rename = "#relevant")]
    pub relevant: String,
    pub size: String,
}

#[derive(Debug)]
pub struct BenchSummary {
    pub rows: Vec<BenchRow>,
    pub solved: usize,
    pub total: usize,
}

impl fmt::Display for BenchSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "solved {}/{}", self.solved, self.total)
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Solves every problem file in `dir` (sorted by name) and writes a CSV report.
pub fn run_benchmarks(dir: &Path, config: &OasisConfig, out: &Path) -> Result<BenchSummary, BenchError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| BenchError::Io { path, source }
    };
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    let mut rows = Vec::new();
    let mut solved = 0;
    for path in &files {
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        info!(file = %name, "benchmark");
        let parsed = ProblemSource::from_path(path)
            .map_err(|e| e.to_string())
            .and_then(|src| parse_problem(&src).map_err(|e| e.to_string()));
        let row = match parsed {
            Err(e) => {
                warn!(file = %name, error = %e, "skipping unparseable problem");
                BenchRow {
                    file: name,
                    verdict: "error".into(),
                    time: "0.000".into(),
                    vars: 0,
                    relevant: String::new(),
                    size: String::new(),
                }
            }
            Ok(problem) => {
                let report = oasis_solve(&problem, config);
                let ok = report.verdict.is_solved();
                solved += ok as usize;
                BenchRow {
                    file: name,
                    verdict: if ok { "solved" } else { "unsolved" }.into(),
                    time: format!("{:.3}", report.elapsed.as_secs_f64()),
                    vars: problem.vars.len(),
                    relevant: report.relevant.as_ref().map(|r| r.len().to_string()).unwrap_or_default(),
                    size: report.invariant_size().map(|s| s.to_string()).unwrap_or_default(),
                }
            }
        };
        rows.push(row);
    }
    let mut w = csv::Writer::from_path(out)?;
    for row in &rows {
        w.serialize(row)?;
    }
    if rows.is_empty() {
        w.write_record(["file", "verdict", "time", "#vars", "#relevant", "size"])?;
    }
    w.flush().map_err(io(out))?;
    let total = rows.len();
    Ok(BenchSummary { rows, solved, total })
}
