//! Problem parsing (SyGuS invariant subset and a plain triple dialect) and
//! invariant rendering.
//!
//! Triple dialect:
//!
//! ```text
//! (vars i j n)
//! (pre (and (= i 0) (= j 0)))
//! (trans (and (< i n) (= i! (+ i 1)) (= j! (+ j 2)) (= n! n)))
//! (post (or (< i n) (= j (* 2 n))))
//! ```
//!
//! `post` is the exit condition as seen by the invariant (`I ⇒ post`). An
//! optional `(guard G)` block gives the loop condition separately; it then
//! contributes `G ∧ trans` and `G ∨ post`. Primed names may be spelled `x!`
//! or `x'`.

use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::ir::{quote_symbol, CmpOp, CnfPredicate, Formula, IrError, Term, VcProblem};
use crate::sexp::{parse_all, Pos, Sexp};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dialect {
    SygusInv,
    Triple,
}

impl Dialect {
    /// `.sl` files and texts containing `synth-inv` are SyGuS; anything else is a triple.
    pub fn detect(path: Option<&Path>, text: &str) -> Dialect {
        let sl = path
            .and_then(|p| p.extension())
            .is_some_and(|e| e.eq_ignore_ascii_case("sl"));
        if sl || text.contains("synth-inv") {
            Dialect::SygusInv
        } else {
            Dialect::Triple
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProblemSource {
    pub path: Option<PathBuf>,
    pub text: String,
    pub dialect: Dialect,
}

impl ProblemSource {
    pub fn from_text(text: impl Into<String>) -> Self {
        let text = text.into();
        let dialect = Dialect::detect(None, &text);
        ProblemSource { path: None, text, dialect }
    }

    pub fn from_path(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let dialect = Dialect::detect(Some(path), &text);
        Ok(ProblemSource {
            path: Some(path.to_path_buf()),
            text,
            dialect,
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrontendError {
    #[error("{pos}: syntax error: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("{pos}: unsupported construct `{construct}`")]
    Unsupported { pos: Pos, construct: String },
    #[error("{pos}: arity mismatch: {msg}")]
    Arity { pos: Pos, msg: String },
    #[error("{pos}: {msg}")]
    Invalid { pos: Pos, msg: String },
}

impl FrontendError {
    pub fn pos(&self) -> Pos {
        match self {
            FrontendError::Syntax { pos, .. }
            | FrontendError::Unsupported { pos, .. }
            | FrontendError::Arity { pos, .. }
            | FrontendError::Invalid { pos, .. } => *pos,
        }
    }

    pub fn diagnostic(&self) -> Diagnostic {
        let kind = match self {
            FrontendError::Syntax { .. } => "syntax",
            FrontendError::Unsupported { .. } => "unsupported",
            FrontendError::Arity { .. } => "arity",
            FrontendError::Invalid { .. } => "invalid",
        };
        Diagnostic {
            kind,
            message: self.to_string(),
            line: self.pos().line,
            column: self.pos().col,
        }
    }
}

/// Machine-readable form of a [`FrontendError`].
#[derive(Debug, Clone, Serialize)]
pub struct Diagnostic {
    pub kind: &'static str,
    pub message: String,
    pub line: usize,
    pub column: usize,
}

fn syntax(pos: Pos, msg: impl Into<String>) -> FrontendError {
    FrontendError::Syntax { pos, msg: msg.into() }
}

fn invalid(pos: Pos, msg: impl Into<String>) -> FrontendError {
    FrontendError::Invalid { pos, msg: msg.into() }
}

fn unsupported(pos: Pos, construct: impl Into<String>) -> FrontendError {
    FrontendError::Unsupported {
        pos,
        construct: construct.into(),
    }
}

pub fn parse_problem(source: &ProblemSource) -> Result<VcProblem, FrontendError> {
    let items = parse_all(&source.text).map_err(|e| syntax(e.pos, e.msg))?;
    match source.dialect {
        Dialect::SygusInv => parse_sygus(&items),
        Dialect::Triple => parse_triple(&items),
    }
}

/// Canonical spelling of a primed name.
fn normalize(name: &str) -> String {
    match name.strip_suffix('\'') {
        Some(base) => format!("{base}!"),
        None => name.to_string(),
    }
}

#[derive(Debug, Clone)]
enum Expr {
    T(Term),
    F(Formula),
}

#[derive(Debug, Clone)]
struct Macro {
    params: Vec<String>,
    body: Sexp,
}

struct Ctx<'a> {
    macros: &'a HashMap<String, Macro>,
    depth: usize,
}

type Env = HashMap<String, Expr>;

fn check_sort(s: &Sexp) -> Result<(), FrontendError> {
    match s {
        Sexp::Atom(a, p) => match a.as_str() {
            "Int" => Ok(()),
            "Bool" => Err(unsupported(*p, "Bool-sorted variable")),
            other => Err(unsupported(*p, other)),
        },
        Sexp::List(v, p) => {
            let head = v.first().and_then(Sexp::as_atom).unwrap_or("sort");
            Err(unsupported(*p, head))
        }
        Sexp::Str(_, p) => Err(syntax(*p, "expected a sort")),
    }
}

fn symbol(s: &Sexp) -> Result<String, FrontendError> {
    match s {
        Sexp::Atom(a, p) => {
            if a.parse::<i64>().is_ok() {
                Err(syntax(*p, format!("expected a symbol, found `{a}`")))
            } else {
                Ok(normalize(a))
            }
        }
        other => Err(syntax(other.pos(), "expected a symbol")),
    }
}

impl Ctx<'_> {
    fn term(&self, s: &Sexp, env: &Env) -> Result<Term, FrontendError> {
        match self.expr(s, env)? {
            Expr::T(t) => Ok(t),
            Expr::F(_) => Err(invalid(s.pos(), format!("expected an integer term, found `{s}`"))),
        }
    }

    fn formula(&self, s: &Sexp, env: &Env) -> Result<Formula, FrontendError> {
        match self.expr(s, env)? {
            Expr::F(f) => Ok(f),
            Expr::T(_) => Err(invalid(s.pos(), format!("expected a Boolean formula, found `{s}`"))),
        }
    }

    fn expr(&self, s: &Sexp, env: &Env) -> Result<Expr, FrontendError> {
        match s {
            Sexp::Str(_, p) => Err(unsupported(*p, "string literal")),
            Sexp::Atom(a, p) => {
                if let Ok(n) = a.parse::<i64>() {
                    return Ok(Expr::T(Term::Const(n)));
                }
                if a.contains('.') && a.parse::<f64>().is_ok() {
                    return Err(unsupported(*p, "Real"));
                }
                match a.as_str() {
                    "true" => return Ok(Expr::F(Formula::tt())),
                    "false" => return Ok(Expr::F(Formula::ff())),
                    _ => {}
                }
                let name = normalize(a);
                if let Some(e) = env.get(&name) {
                    return Ok(e.clone());
                }
                if let Some(m) = self.macros.get(&name) {
                    if m.params.is_empty() {
                        return self.expand(m, &[], *p, env);
                    }
                }
                Err(invalid(*p, format!("unknown symbol `{a}`")))
            }
            Sexp::List(items, p) => {
                let Some(head) = items.first() else {
                    return Err(syntax(*p, "empty application"));
                };
                let Some(op) = head.as_atom() else {
                    return Err(syntax(head.pos(), "expected an operator"));
                };
                let args = &items[1..];
                self.app(op, args, *p, env)
            }
        }
    }

    fn terms(&self, args: &[Sexp], env: &Env) -> Result<Vec<Term>, FrontendError> {
        args.iter().map(|a| self.term(a, env)).collect()
    }

    fn formulas(&self, args: &[Sexp], env: &Env) -> Result<Vec<Formula>, FrontendError> {
        args.iter().map(|a| self.formula(a, env)).collect()
    }

    fn need(&self, op: &str, args: &[Sexp], min: usize, pos: Pos) -> Result<(), FrontendError> {
        if args.len() < min {
            Err(syntax(pos, format!("`{op}` needs at least {min} argument(s)")))
        } else {
            Ok(())
        }
    }

    fn chain(&self, op: CmpOp, args: &[Sexp], pos: Pos, env: &Env) -> Result<Expr, FrontendError> {
        self.need("comparison", args, 2, pos)?;
        let ts = self.terms(args, env)?;
        Ok(Expr::F(Formula::and(
            ts.windows(2).map(|w| Formula::cmp(op, w[0].clone(), w[1].clone())),
        )))
    }

    fn app(&self, op: &str, args: &[Sexp], pos: Pos, env: &Env) -> Result<Expr, FrontendError> {
        match op {
            "and" => Ok(Expr::F(Formula::And(self.formulas(args, env)?))),
            "or" => Ok(Expr::F(Formula::Or(self.formulas(args, env)?))),
            "not" => {
                if args.len() != 1 {
                    return Err(syntax(pos, "`not` takes one argument"));
                }
                Ok(Expr::F(Formula::Not(Box::new(self.formula(&args[0], env)?))))
            }
            "=>" => {
                self.need(op, args, 2, pos)?;
                let mut fs = self.formulas(args, env)?;
                let mut acc = fs.pop().expect("checked length");
                while let Some(f) = fs.pop() {
                    acc = Formula::Implies(Box::new(f), Box::new(acc));
                }
                Ok(Expr::F(acc))
            }
            "xor" => {
                if args.len() != 2 {
                    return Err(syntax(pos, "`xor` takes two arguments"));
                }
                let a = self.formula(&args[0], env)?;
                let b = self.formula(&args[1], env)?;
                Ok(Expr::F(Formula::Not(Box::new(iff(a, b)))))
            }
            "=" => {
                self.need(op, args, 2, pos)?;
                let es: Vec<Expr> = args.iter().map(|a| self.expr(a, env)).collect::<Result<_, _>>()?;
                if es.iter().all(|e| matches!(e, Expr::F(_))) {
                    let fs: Vec<Formula> = es
                        .into_iter()
                        .map(|e| match e {
                            Expr::F(f) => f,
                            Expr::T(_) => unreachable!(),
                        })
                        .collect();
                    Ok(Expr::F(Formula::and(
                        fs.windows(2).map(|w| iff(w[0].clone(), w[1].clone())),
                    )))
                } else {
                    self.chain(CmpOp::Eq, args, pos, env)
                }
            }
            "distinct" => {
                self.need(op, args, 2, pos)?;
                let ts = self.terms(args, env)?;
                let mut parts = Vec::new();
                for i in 0..ts.len() {
                    for j in i + 1..ts.len() {
                        parts.push(Formula::cmp(CmpOp::Ne, ts[i].clone(), ts[j].clone()));
                    }
                }
                Ok(Expr::F(Formula::and(parts)))
            }
            "<" => self.chain(CmpOp::Lt, args, pos, env),
            "<=" => self.chain(CmpOp::Le, args, pos, env),
            ">" => self.chain(CmpOp::Gt, args, pos, env),
            ">=" => self.chain(CmpOp::Ge, args, pos, env),
            "+" => {
                self.need(op, args, 1, pos)?;
                Ok(Expr::T(Term::Add(self.terms(args, env)?)))
            }
            "-" => {
                self.need(op, args, 1, pos)?;
                let mut ts = self.terms(args, env)?;
                if ts.len() == 1 {
                    let t = ts.pop().expect("one term");
                    Ok(Expr::T(match t {
                        Term::Const(c) if c != i64::MIN => Term::Const(-c),
                        t => Term::Neg(Box::new(t)),
                    }))
                } else {
                    Ok(Expr::T(Term::Sub(ts)))
                }
            }
            "*" => {
                self.need(op, args, 1, pos)?;
                Ok(Expr::T(Term::Mul(self.terms(args, env)?)))
            }
            "ite" => {
                if args.len() != 3 {
                    return Err(syntax(pos, "`ite` takes three arguments"));
                }
                let c = self.formula(&args[0], env)?;
                match (self.expr(&args[1], env)?, self.expr(&args[2], env)?) {
                    (Expr::T(a), Expr::T(b)) => Ok(Expr::T(Term::Ite(Box::new(c), Box::new(a), Box::new(b)))),
                    (Expr::F(a), Expr::F(b)) => Ok(Expr::F(Formula::Or(vec![
                        Formula::And(vec![c.clone(), a]),
                        Formula::And(vec![Formula::Not(Box::new(c)), b]),
                    ]))),
                    _ => Err(invalid(pos, "`ite` branches have different sorts")),
                }
            }
            "let" => {
                if args.len() != 2 {
                    return Err(syntax(pos, "`let` takes a binding list and a body"));
                }
                let Some(binds) = args[0].as_list() else {
                    return Err(syntax(args[0].pos(), "expected a binding list"));
                };
                let mut inner = env.clone();
                for b in binds {
                    match b.as_list() {
                        Some([name, value]) => {
                            let v = self.expr(value, env)?;
                            inner.insert(symbol(name)?, v);
                        }
                        _ => return Err(syntax(b.pos(), "expected `(name value)`")),
                    }
                }
                self.expr(&args[1], &inner)
            }
            "forall" | "exists" | "select" | "store" | "div" | "mod" | "abs" | "/" | "to_real" | "to_int" => {
                Err(unsupported(pos, op))
            }
            _ => {
                let name = normalize(op);
                match self.macros.get(&name) {
                    Some(m) => self.expand(m, args, pos, env),
                    None => Err(invalid(pos, format!("unknown function `{op}`"))),
                }
            }
        }
    }

    fn expand(&self, m: &Macro, args: &[Sexp], pos: Pos, env: &Env) -> Result<Expr, FrontendError> {
        if m.params.len() != args.len() {
            return Err(FrontendError::Arity {
                pos,
                msg: format!("expected {} argument(s), found {}", m.params.len(), args.len()),
            });
        }
        if self.depth > 64 {
            return Err(invalid(pos, "function definitions nest too deeply"));
        }
        let mut inner = Env::new();
        for (p, a) in m.params.iter().zip(args) {
            inner.insert(p.clone(), self.expr(a, env)?);
        }
        let deeper = Ctx {
            macros: self.macros,
            depth: self.depth + 1,
        };
        deeper.expr(&m.body, &inner)
    }
}

fn iff(a: Formula, b: Formula) -> Formula {
    Formula::And(vec![
        Formula::Implies(Box::new(a.clone()), Box::new(b.clone())),
        Formula::Implies(Box::new(b), Box::new(a)),
    ])
}

fn var_env(vars: &[String], primed: bool) -> Env {
    let mut env = Env::new();
    for v in vars {
        env.insert(v.clone(), Expr::T(Term::var(v.clone())));
        if primed {
            let p = format!("{v}!");
            env.insert(p.clone(), Expr::T(Term::var(p)));
        }
    }
    env
}

fn finish(vars: Vec<String>, pre: Formula, trans: Formula, post: Formula, pos: Pos) -> Result<VcProblem, FrontendError> {
    VcProblem::new(vars, pre, trans, post).map_err(|e| match e {
        IrError::UnknownVariable(v) => invalid(pos, format!("unknown variable `{v}`")),
        other => invalid(pos, other.to_string()),
    })
}

fn check_var_names(vars: &[String], pos: Pos) -> Result<(), FrontendError> {
    if vars.is_empty() {
        return Err(syntax(pos, "the variable list is empty"));
    }
    let mut seen = BTreeSet::new();
    for v in vars {
        if v.ends_with('!') || v.contains('@') {
            return Err(invalid(pos, format!("`{v}` is not a valid state variable name")));
        }
        if !seen.insert(v) {
            return Err(invalid(pos, format!("variable `{v}` declared twice")));
        }
    }
    Ok(())
}

fn parse_triple(items: &[Sexp]) -> Result<VcProblem, FrontendError> {
    let mut vars: Option<(Vec<String>, Pos)> = None;
    let mut blocks: HashMap<&str, &Sexp> = HashMap::new();
    for item in items {
        let Some(list) = item.as_list() else {
            return Err(syntax(item.pos(), "expected a `(section ...)` block"));
        };
        let head = item.head().ok_or_else(|| syntax(item.pos(), "expected a section name"))?;
        match head {
            "vars" => {
                let mut names = Vec::new();
                for v in &list[1..] {
                    match v {
                        Sexp::List(pair, _) if pair.len() == 2 => {
                            check_sort(&pair[1])?;
                            names.push(symbol(&pair[0])?);
                        }
                        other => names.push(symbol(other)?),
                    }
                }
                vars = Some((names, item.pos()));
            }
            "pre" | "trans" | "post" | "guard" => {
                if list.len() != 2 {
                    return Err(syntax(item.pos(), format!("`{head}` takes exactly one formula")));
                }
                if blocks.insert(head, &list[1]).is_some() {
                    return Err(invalid(item.pos(), format!("duplicate `{head}` block")));
                }
            }
            "set-logic" => {}
            other => return Err(unsupported(item.pos(), other)),
        }
    }
    let start = Pos { line: 1, col: 1 };
    let (vars, vpos) = vars.ok_or_else(|| syntax(start, "missing `(vars ...)` block"))?;
    check_var_names(&vars, vpos)?;
    let macros = HashMap::new();
    let ctx = Ctx { macros: &macros, depth: 0 };
    let plain = var_env(&vars, false);
    let both = var_env(&vars, true);
    let get = |name: &str| blocks.get(name).copied().ok_or_else(|| syntax(start, format!("missing `({name} ...)` block")));
    let pre = ctx.formula(get("pre")?, &plain)?;
    let mut trans = ctx.formula(get("trans")?, &both)?;
    let mut post = ctx.formula(get("post")?, &plain)?;
    if let Some(g) = blocks.get("guard") {
        let g = ctx.formula(g, &plain)?;
        trans = Formula::and([g.clone(), trans]);
        post = Formula::or([g, post]);
    }
    finish(vars, pre, trans, post, vpos)
}

fn params(s: &Sexp) -> Result<Vec<String>, FrontendError> {
    let list = s.as_list().ok_or_else(|| syntax(s.pos(), "expected a parameter list"))?;
    list.iter()
        .map(|p| match p.as_list() {
            Some([name, sort]) => {
                check_sort(sort)?;
                symbol(name)
            }
            _ => Err(syntax(p.pos(), "expected `(name Sort)`")),
        })
        .collect()
}

fn parse_sygus(items: &[Sexp]) -> Result<VcProblem, FrontendError> {
    let mut macros: HashMap<String, Macro> = HashMap::new();
    let mut inv: Option<(String, Vec<String>, Pos)> = None;
    let mut declared: Vec<(String, Pos)> = Vec::new();
    let mut constraint: Option<(Vec<String>, Pos)> = None;
    for item in items {
        let Some(list) = item.as_list() else {
            return Err(syntax(item.pos(), "expected a command"));
        };
        let head = item.head().ok_or_else(|| syntax(item.pos(), "expected a command name"))?;
        let pos = item.pos();
        match head {
            "set-logic" => {
                if let Some(logic) = list.get(1).and_then(Sexp::as_atom) {
                    if logic.contains('A') && logic != "LIA" && logic != "NIA" && logic != "ALL" {
                        return Err(unsupported(list[1].pos(), logic));
                    }
                    if logic.contains('R') {
                        return Err(unsupported(list[1].pos(), "Real"));
                    }
                }
            }
            "set-option" | "set-info" | "check-synth" | "exit" => {}
            "synth-inv" => {
                if list.len() < 3 {
                    return Err(syntax(pos, "`synth-inv` needs a name and parameters"));
                }
                if list.len() > 3 {
                    return Err(unsupported(list[3].pos(), "synth-inv grammar"));
                }
                inv = Some((symbol(&list[1])?, params(&list[2])?, pos));
            }
            "declare-primed-var" => {
                if list.len() != 3 {
                    return Err(syntax(pos, "`declare-primed-var` takes a name and a sort"));
                }
                check_sort(&list[2])?;
                let v = symbol(&list[1])?;
                declared.push((format!("{v}!"), pos));
                declared.push((v, pos));
            }
            "declare-var" => {
                if list.len() != 3 {
                    return Err(syntax(pos, "`declare-var` takes a name and a sort"));
                }
                check_sort(&list[2])?;
                declared.push((symbol(&list[1])?, pos));
            }
            "define-fun" => {
                if list.len() != 5 {
                    return Err(syntax(pos, "`define-fun` takes a name, parameters, a sort and a body"));
                }
                let name = symbol(&list[1])?;
                let ps = params(&list[2])?;
                match list[3].as_atom() {
                    Some("Bool") | Some("Int") => {}
                    _ => check_sort(&list[3])?,
                }
                macros.insert(
                    name,
                    Macro {
                        params: ps,
                        body: list[4].clone(),
                    },
                );
            }
            "inv-constraint" => {
                if list.len() != 5 {
                    return Err(syntax(pos, "`inv-constraint` takes four function names"));
                }
                let names = list[1..].iter().map(symbol).collect::<Result<Vec<_>, _>>()?;
                constraint = Some((names, pos));
            }
            "declare-fun" | "constraint" | "synth-fun" | "declare-datatypes" | "define-sort" => {
                return Err(unsupported(pos, head))
            }
            other => return Err(unsupported(pos, other)),
        }
    }
    let start = Pos { line: 1, col: 1 };
    let (inv_name, vars, inv_pos) = inv.ok_or_else(|| syntax(start, "missing `synth-inv`"))?;
    check_var_names(&vars, inv_pos)?;
    check_declarations(&declared)?;
    let (names, cpos) = constraint.ok_or_else(|| syntax(start, "missing `inv-constraint`"))?;
    if names[0] != inv_name {
        return Err(invalid(cpos, format!("`inv-constraint` refers to unknown invariant `{}`", names[0])));
    }
    let n = vars.len();
    let lookup = |name: &str, arity: usize| -> Result<&Macro, FrontendError> {
        let m = macros
            .get(name)
            .ok_or_else(|| invalid(cpos, format!("undefined function `{name}`")))?;
        if m.params.len() != arity {
            return Err(FrontendError::Arity {
                pos: cpos,
                msg: format!(
                    "`{name}` has {} parameter(s) but the invariant has {n} variable(s){}",
                    m.params.len(),
                    if arity == 2 * n { " (expected unprimed and primed copies)" } else { "" }
                ),
            });
        }
        Ok(m)
    };
    let ctx = Ctx { macros: &macros, depth: 0 };
    let plain_args: Vec<Expr> = vars.iter().map(|v| Expr::T(Term::var(v.clone()))).collect();
    let primed_args: Vec<Expr> = vars
        .iter()
        .map(|v| Expr::T(Term::var(v.clone())))
        .chain(vars.iter().map(|v| Expr::T(Term::var(format!("{v}!")))))
        .collect();
    let apply = |m: &Macro, args: &[Expr]| -> Result<Formula, FrontendError> {
        let env: Env = m.params.iter().cloned().zip(args.iter().cloned()).collect();
        ctx.formula(&m.body, &env)
    };
    let pre = apply(lookup(&names[1], n)?, &plain_args)?;
    let trans = apply(lookup(&names[2], 2 * n)?, &primed_args)?;
    let post = apply(lookup(&names[3], n)?, &plain_args)?;
    finish(vars, pre, trans, post, cpos)
}

/// Every declared unprimed variable needs a primed partner and vice versa.
fn check_declarations(declared: &[(String, Pos)]) -> Result<(), FrontendError> {
    let names: BTreeSet<&str> = declared.iter().map(|(n, _)| n.as_str()).collect();
    for (n, pos) in declared {
        let partner = match n.strip_suffix('!') {
            Some(base) => base.to_string(),
            None => format!("{n}!"),
        };
        if !names.contains(partner.as_str()) {
            return Err(FrontendError::Arity {
                pos: *pos,
                msg: format!("`{n}` is declared without `{partner}`"),
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InvariantFormat {
    SygusDefineFun,
    SmtlibTerm,
}

pub fn render_invariant(pred: &CnfPredicate, vars: &[String], format: InvariantFormat) -> String {
    render_formula(&pred.to_formula(vars), vars, format)
}

pub fn render_formula(f: &Formula, vars: &[String], format: InvariantFormat) -> String {
    match format {
        InvariantFormat::SmtlibTerm => f.to_string(),
        InvariantFormat::SygusDefineFun => {
            let ps: Vec<String> = vars.iter().map(|v| format!("({} Int)", quote_symbol(v))).collect();
            format!("(define-fun inv-f ({}) Bool {f})", ps.join(" "))
        }
    }
}

/// Parses a Boolean SMT-LIB term over `vars` (used to read invariants back).
pub fn parse_formula(text: &str, vars: &[String]) -> Result<Formula, FrontendError> {
    let items = parse_all(text).map_err(|e| syntax(e.pos, e.msg))?;
    let [item] = items.as_slice() else {
        return Err(syntax(Pos { line: 1, col: 1 }, "expected exactly one term"));
    };
    let macros = HashMap::new();
    Ctx { macros: &macros, depth: 0 }.formula(item, &var_env(vars, true))
}
