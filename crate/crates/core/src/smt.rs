//! SMT-LIB2 solver sessions over a child process, with a replay transport for
//! deterministic tests.

use std::collections::{BTreeSet, VecDeque};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use thiserror::Error;
use tracing::{debug, warn};

use crate::ir::{quote_symbol, Formula, PartialState};
use crate::sexp::{parse_all, Sexp};

#[derive(Debug, Error)]
pub enum SmtError {
    #[error("failed to start solver `{cmd}`: {source}")]
    Spawn {
        cmd: String,
        #[source]
        source: std::io::Error,
    },
    #[error("empty solver command")]
    EmptyCommand,
    #[error("solver protocol error: {0}")]
    Desync(String),
    #[error("invalid replay transcript: {0}")]
    Transcript(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckOutcome {
    Valid,
    Counterexample(PartialState),
    Unknown(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelOutcome {
    Sat(PartialState),
    Unsat,
    Unknown(String),
}

/// Where the session sends the SMT-LIB text it exchanges.
#[derive(Clone, Default)]
pub enum QueryLog {
    #[default]
    Off,
    Stderr,
    Buffer(Arc<Mutex<Vec<String>>>),
}

impl std::fmt::Debug for QueryLog {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            QueryLog::Off => f.write_str("Off"),
            QueryLog::Stderr => f.write_str("Stderr"),
            QueryLog::Buffer(_) => f.write_str("Buffer"),
        }
    }
}

impl QueryLog {
    fn record(&self, line: String) {
        match self {
            QueryLog::Off => {}
            QueryLog::Stderr => eprintln!("{line}"),
            QueryLog::Buffer(b) => b.lock().expect("log buffer poisoned").push(line),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SmtConfig {
    pub command: Vec<String>,
    pub timeout: Duration,
    pub log: QueryLog,
    /// Counts `check-sat` commands across every session sharing it.
    pub counter: Arc<AtomicU64>,
}

impl Default for SmtConfig {
    fn default() -> Self {
        SmtConfig {
            command: vec!["z3".into(), "-in".into(), "-smt2".into()],
            timeout: Duration::from_secs(10),
            log: QueryLog::Off,
            counter: Arc::new(AtomicU64::new(0)),
        }
    }
}

impl SmtConfig {
    /// Splits a shell-like command line on whitespace.
    pub fn with_command_line(mut self, cmd: &str) -> Self {
        self.command = cmd.split_whitespace().map(str::to_string).collect();
        self
    }

    fn is_z3(&self) -> bool {
        self.command
            .first()
            .and_then(|c| Path::new(c).file_name())
            .is_some_and(|n| n.to_string_lossy().contains("z3"))
    }
}

enum Failure {
    Timeout,
    Cancelled,
    Closed,
}

struct Process {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
}

impl Process {
    fn spawn(config: &SmtConfig) -> Result<Self, SmtError> {
        let (prog, args) = config.command.split_first().ok_or(SmtError::EmptyCommand)?;
        let mut child = Command::new(prog)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|source| SmtError::Spawn {
                cmd: config.command.join(" "),
                source,
            })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                match line {
                    Ok(l) => {
                        if tx.send(l).is_err() {
                            break;
                        }
                    }
                    Err(_) => break,
                }
            }
        });
        Ok(Process { child, stdin, lines: rx })
    }
}

impl Drop for Process {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// A recorded exchange: `> command` lines and `< response` lines.
#[derive(Debug, Clone)]
struct Replay {
    script: VecDeque<(bool, String)>,
}

impl Replay {
    fn parse(text: &str) -> Result<Self, SmtError> {
        let mut script = VecDeque::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            if let Some(cmd) = line.strip_prefix("> ") {
                script.push_back((true, cmd.to_string()));
            } else if let Some(resp) = line.strip_prefix("< ") {
                script.push_back((false, resp.to_string()));
            } else if line == "<" {
                script.push_back((false, String::new()));
            } else {
                return Err(SmtError::Transcript(format!("line {}: expected `> ` or `< `", i + 1)));
            }
        }
        Ok(Replay { script })
    }
}

enum Transport {
    Process(Process),
    Replay(Replay),
}

/// One solver, one owner. Every query runs inside its own `push`/`pop` scope.
pub struct SmtSession {
    config: SmtConfig,
    transport: Option<Transport>,
    cancel: Option<Arc<AtomicBool>>,
    transcript: Option<Vec<String>>,
}

fn balance(text: &str) -> i64 {
    let mut depth = 0i64;
    let mut in_str = false;
    let mut in_sym = false;
    for c in text.chars() {
        match c {
            '"' if !in_sym => in_str = !in_str,
            '|' if !in_str => in_sym = !in_sym,
            '(' if !in_str && !in_sym => depth += 1,
            ')' if !in_str && !in_sym => depth -= 1,
            _ => {}
        }
    }
    depth
}

fn declarations(names: &BTreeSet<String>) -> String {
    names
        .iter()
        .map(|n| format!("(declare-const {} Int)", quote_symbol(n)))
        .collect::<Vec<_>>()
        .join("\n")
}

fn int_value(s: &Sexp) -> Option<i64> {
    match s {
        Sexp::Atom(a, _) => a.parse().ok(),
        Sexp::List(items, _) => match items.as_slice() {
            [op, x] if op.as_atom() == Some("-") => int_value(x)?.checked_neg(),
            _ => None,
        },
        Sexp::Str(..) => None,
    }
}

/// Reads integer constants out of a `get-model` response. Entries for names
/// outside `wanted` and non-integer entries are ignored.
pub fn parse_model(text: &str, wanted: &BTreeSet<String>) -> Result<PartialState, SmtError> {
    let items = parse_all(text).map_err(|e| SmtError::Desync(format!("unreadable model: {e}")))?;
    let mut state = PartialState::new();
    let mut entries: Vec<&Sexp> = Vec::new();
    for item in &items {
        let Some(list) = item.as_list() else { continue };
        if item.head() == Some("model") {
            entries.extend(&list[1..]);
        } else if item.head() == Some("define-fun") {
            entries.push(item);
        } else {
            entries.extend(list.iter());
        }
    }
    for e in entries {
        let Some(parts) = e.as_list() else { continue };
        if e.head() != Some("define-fun") || parts.len() != 5 {
            continue;
        }
        let (Some(name), Some(params), Some("Int")) = (parts[1].as_atom(), parts[2].as_list(), parts[3].as_atom()) else {
            continue;
        };
        if !params.is_empty() || !wanted.contains(name) {
            continue;
        }
        match int_value(&parts[4]) {
            Some(v) => state.bind(name, v),
            None => {
                return Err(SmtError::Desync(format!("model value for `{name}` is not a machine integer: {}", parts[4])))
            }
        }
    }
    Ok(state)
}

impl SmtSession {
    pub fn new(config: SmtConfig) -> Self {
        SmtSession {
            config,
            transport: None,
            cancel: None,
            transcript: None,
        }
    }

    /// A session that answers from a recorded transcript instead of a solver.
    pub fn replay(config: SmtConfig, transcript: &str) -> Result<Self, SmtError> {
        let replay = Replay::parse(transcript)?;
        Ok(SmtSession {
            config,
            transport: Some(Transport::Replay(replay)),
            cancel: None,
            transcript: None,
        })
    }

    pub fn config(&self) -> &SmtConfig {
        &self.config
    }

    pub fn set_cancel(&mut self, flag: Option<Arc<AtomicBool>>) {
        self.cancel = flag;
    }

    /// Starts recording the exchange in the format accepted by [`SmtSession::replay`].
    pub fn record(&mut self) {
        self.transcript = Some(Vec::new());
    }

    pub fn take_transcript(&mut self) -> String {
        let lines = self.transcript.take().unwrap_or_default();
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }

    pub fn queries(&self) -> u64 {
        self.config.counter.load(Ordering::Relaxed)
    }

    pub fn is_cancelled(&self) -> bool {
        self.cancelled()
    }

    fn cancelled(&self) -> bool {
        self.cancel.as_ref().is_some_and(|c| c.load(Ordering::Relaxed))
    }

    fn preamble(&self) -> Vec<String> {
        let mut cmds = vec![
            "(set-option :print-success false)".to_string(),
            "(set-option :produce-models true)".to_string(),
        ];
        if self.config.is_z3() {
            cmds.push(format!("(set-option :timeout {})", self.config.timeout.as_millis()));
        }
        cmds.push("(set-logic ALL)".to_string());
        cmds
    }

    fn ensure_started(&mut self) -> Result<(), SmtError> {
        if self.transport.is_some() {
            return Ok(());
        }
        let proc = Process::spawn(&self.config)?;
        debug!(cmd = %self.config.command.join(" "), "started solver");
        self.transport = Some(Transport::Process(proc));
        for cmd in self.preamble() {
            self.send(&cmd)?;
        }
        Ok(())
    }

    /// Drops the solver; the next query starts a fresh one.
    fn poison(&mut self) {
        if let Some(Transport::Process(_)) = self.transport {
            self.transport = None;
        }
    }

    fn send(&mut self, cmd: &str) -> Result<(), SmtError> {
        for line in cmd.lines() {
            self.config.log.record(format!("> {line}"));
            if let Some(t) = &mut self.transcript {
                t.push(format!("> {line}"));
            }
        }
        match self.transport.as_mut() {
            Some(Transport::Process(p)) => {
                let r = writeln!(p.stdin, "{cmd}").and_then(|_| p.stdin.flush());
                if let Err(e) = r {
                    // the solver is gone; the pending read reports it
                    debug!(error = %e, "solver write failed");
                    self.poison();
                }
                Ok(())
            }
            Some(Transport::Replay(r)) => {
                for line in cmd.lines() {
                    match r.script.pop_front() {
                        Some((true, expected)) if expected == line => {}
                        Some((_, other)) => {
                            return Err(SmtError::Desync(format!("replay expected `{other}`, got `{line}`")))
                        }
                        None => return Err(SmtError::Desync("replay transcript exhausted".into())),
                    }
                }
                Ok(())
            }
            None => Ok(()),
        }
    }

    fn recv_line(&mut self, deadline: Instant) -> Result<String, Failure> {
        let cancel = self.cancel.clone();
        match self.transport.as_mut() {
            Some(Transport::Process(p)) => loop {
                if cancel.as_ref().is_some_and(|c| c.load(Ordering::Relaxed)) {
                    return Err(Failure::Cancelled);
                }
                let now = Instant::now();
                if now >= deadline {
                    return Err(Failure::Timeout);
                }
                let wait = (deadline - now).min(Duration::from_millis(20));
                match p.lines.recv_timeout(wait) {
                    Ok(l) => return Ok(l),
                    Err(RecvTimeoutError::Timeout) => continue,
                    Err(RecvTimeoutError::Disconnected) => return Err(Failure::Closed),
                }
            },
            Some(Transport::Replay(r)) => match r.script.front() {
                Some((false, _)) => Ok(r.script.pop_front().expect("non-empty").1),
                _ => Err(Failure::Closed),
            },
            None => Err(Failure::Closed),
        }
    }

    /// Reads one complete s-expression or bare word.
    fn recv(&mut self, deadline: Instant) -> Result<String, Failure> {
        let mut text = String::new();
        loop {
            let line = self.recv_line(deadline)?;
            self.config.log.record(format!("< {line}"));
            if let Some(t) = &mut self.transcript {
                t.push(if line.is_empty() { "<".to_string() } else { format!("< {line}") });
            }
            if text.is_empty() && line.trim().is_empty() {
                continue;
            }
            text.push_str(&line);
            text.push('\n');
            if balance(&text) <= 0 {
                return Ok(text.trim().to_string());
            }
        }
    }

    fn failure_reason(&mut self, f: Failure) -> String {
        // Any interrupted exchange leaves unread output behind, so the
        // process cannot be reused.
        self.poison();
        match f {
            Failure::Timeout => "timeout".into(),
            Failure::Cancelled => "cancelled".into(),
            Failure::Closed => "solver exited".into(),
        }
    }

    /// Runs `(check-sat)` on `formula` and, if satisfiable, reads back a model
    /// of its free variables. Blocked states are excluded on their bound
    /// coordinates.
    pub fn get_model(&mut self, formula: &Formula, block: &[PartialState]) -> Result<ModelOutcome, SmtError> {
        if self.cancelled() {
            return Ok(ModelOutcome::Unknown("cancelled".into()));
        }
        self.ensure_started()?;
        let mut names = formula.free_vars();
        for b in block {
            names.extend(b.bindings().keys().cloned());
        }
        let mut script = vec!["(push 1)".to_string()];
        if !names.is_empty() {
            script.push(declarations(&names));
        }
        script.push(format!("(assert {formula})"));
        for b in block {
            script.push(format!("(assert (not {}))", b.to_formula()));
        }
        script.push("(check-sat)".into());
        let wanted = formula.free_vars();
        let result = self.exchange(&script.join("\n"), &wanted);
        match result {
            Ok(out) => {
                if self.transport.is_some() {
                    if let Err(e) = self.send("(pop 1)") {
                        self.poison();
                        return Err(e);
                    }
                }
                Ok(out)
            }
            Err(e) => {
                self.poison();
                Err(e)
            }
        }
    }

    fn exchange(&mut self, script: &str, wanted: &BTreeSet<String>) -> Result<ModelOutcome, SmtError> {
        self.config.counter.fetch_add(1, Ordering::Relaxed);
        self.send(script)?;
        let deadline = Instant::now() + self.config.timeout + Duration::from_millis(500);
        let verdict = match self.recv(deadline) {
            Ok(v) => v,
            Err(f) => return Ok(ModelOutcome::Unknown(self.failure_reason(f))),
        };
        match verdict.as_str() {
            "unsat" => Ok(ModelOutcome::Unsat),
            "unknown" | "timeout" => Ok(ModelOutcome::Unknown("solver returned unknown".into())),
            "sat" => {
                self.send("(get-model)")?;
                let model = match self.recv(deadline) {
                    Ok(m) => m,
                    Err(f) => return Ok(ModelOutcome::Unknown(self.failure_reason(f))),
                };
                if model.starts_with("(error") {
                    return Err(SmtError::Desync(model));
                }
                Ok(ModelOutcome::Sat(parse_model(&model, wanted)?))
            }
            other => {
                warn!(response = other, "unexpected solver response");
                Err(SmtError::Desync(other.to_string()))
            }
        }
    }

    /// Valid iff `¬formula` is unsatisfiable; otherwise a model of `¬formula`.
    pub fn check_valid(&mut self, formula: &Formula) -> Result<CheckOutcome, SmtError> {
        Ok(match self.get_model(&Formula::not(formula.clone()), &[])? {
            ModelOutcome::Unsat => CheckOutcome::Valid,
            ModelOutcome::Sat(s) => CheckOutcome::Counterexample(s),
            ModelOutcome::Unknown(r) => CheckOutcome::Unknown(r),
        })
    }
}
