//! Formulas, states, linear CNF predicates and verification problems.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IrError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("malformed step-indexed name `{0}`")]
    MalformedName(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("variable `{0}` is unbound")]
    Unbound(String),
    #[error("integer overflow during evaluation")]
    Overflow,
}

/// Name of `var` in the successor state.
pub fn primed_name(var: &str) -> String {
    format!("{var}!")
}

/// Name of `var` at unrolling step `k`.
pub fn step_name(var: &str, k: usize) -> String {
    format!("{var}@{k}")
}

/// Splits `x@3` into `("x", 3)`.
pub fn split_step_name(name: &str) -> Option<(&str, usize)> {
    let (base, k) = name.rsplit_once('@')?;
    Some((base, k.parse().ok()?))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Const(i64),
    Var(String),
    Add(Vec<Term>),
    /// `a - b - c ...`
    Sub(Vec<Term>),
    Neg(Box<Term>),
    Mul(Vec<Term>),
    Ite(Box<Formula>, Box<Term>, Box<Term>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "distinct",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    fn holds(self, a: i128, b: i128) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Bool(bool),
    Cmp(CmpOp, Term, Term),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Const(_) => {}
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Add(ts) | Term::Sub(ts) | Term::Mul(ts) => ts.iter().for_each(|t| t.collect_vars(out)),
            Term::Neg(t) => t.collect_vars(out),
            Term::Ite(c, a, b) => {
                c.collect_vars(out);
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn rename(&self, f: &mut dyn FnMut(&str) -> Result<String, IrError>) -> Result<Term, IrError> {
        let many = |ts: &[Term], f: &mut dyn FnMut(&str) -> Result<String, IrError>| {
            ts.iter().map(|t| t.rename(f)).collect::<Result<Vec<_>, _>>()
        };
        Ok(match self {
            Term::Const(c) => Term::Const(*c),
            Term::Var(v) => Term::Var(f(v)?),
            Term::Add(ts) => Term::Add(many(ts, f)?),
            Term::Sub(ts) => Term::Sub(many(ts, f)?),
            Term::Mul(ts) => Term::Mul(many(ts, f)?),
            Term::Neg(t) => Term::Neg(Box::new(t.rename(f)?)),
            Term::Ite(c, a, b) => Term::Ite(Box::new(c.rename(f)?), Box::new(a.rename(f)?), Box::new(b.rename(f)?)),
        })
    }

    pub fn eval(&self, state: &PartialState) -> Result<i128, EvalError> {
        match self {
            Term::Const(c) => Ok(*c as i128),
            Term::Var(v) => state.get(v).map(|x| x as i128).ok_or_else(|| EvalError::Unbound(v.clone())),
            Term::Add(ts) => ts.iter().try_fold(0i128, |acc, t| acc.checked_add(t.eval(state)?).ok_or(EvalError::Overflow)),
            Term::Sub(ts) => {
                let mut it = ts.iter();
                let first = match it.next() {
                    Some(t) => t.eval(state)?,
                    None => 0,
                };
                it.try_fold(first, |acc, t| acc.checked_sub(t.eval(state)?).ok_or(EvalError::Overflow))
            }
            Term::Mul(ts) => ts.iter().try_fold(1i128, |acc, t| acc.checked_mul(t.eval(state)?).ok_or(EvalError::Overflow)),
            Term::Neg(t) => t.eval(state)?.checked_neg().ok_or(EvalError::Overflow),
            Term::Ite(c, a, b) => {
                if c.eval(state)? {
                    a.eval(state)
                } else {
                    b.eval(state)
                }
            }
        }
    }

    fn size(&self) -> usize {
        match self {
            Term::Const(c) if *c < 0 => 3,
            Term::Const(_) | Term::Var(_) => 1,
            Term::Add(ts) | Term::Sub(ts) | Term::Mul(ts) => 1 + ts.iter().map(Term::size).sum::<usize>(),
            Term::Neg(t) => 1 + t.size(),
            Term::Ite(c, a, b) => 1 + c.size() + a.size() + b.size(),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, op: &str, ts: &[Term]| {
            write!(f, "({op}")?;
            for t in ts {
                write!(f, " {t}")?;
            }
            write!(f, ")")
        };
        match self {
            Term::Const(c) if *c < 0 => write!(f, "(- {})", (*c as i128).abs()),
            Term::Const(c) => write!(f, "{c}"),
            Term::Var(v) => f.write_str(&quote_symbol(v)),
            Term::Add(ts) if ts.is_empty() => f.write_str("0"),
            Term::Mul(ts) if ts.is_empty() => f.write_str("1"),
            Term::Add(ts) => list(f, "+", ts),
            Term::Sub(ts) => list(f, "-", ts),
            Term::Mul(ts) => list(f, "*", ts),
            Term::Neg(t) => write!(f, "(- {t})"),
            Term::Ite(c, a, b) => write!(f, "(ite {c} {a} {b})"),
        }
    }
}

/// Quotes a name with `|...|` when it is not a plain SMT-LIB symbol.
pub fn quote_symbol(name: &str) -> String {
    let plain = !name.is_empty()
        && !name.starts_with(|c: char| c.is_ascii_digit())
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/".contains(c));
    if plain {
        name.to_string()
    } else {
        format!("|{name}|")
    }
}

impl Formula {
    pub fn tt() -> Formula {
        Formula::Bool(true)
    }

    pub fn ff() -> Formula {
        Formula::Bool(false)
    }

    pub fn cmp(op: CmpOp, a: Term, b: Term) -> Formula {
        Formula::Cmp(op, a, b)
    }

    pub fn not(f: Formula) -> Formula {
        match f {
            Formula::Bool(b) => Formula::Bool(!b),
            Formula::Not(inner) => *inner,
            other => Formula::Not(Box::new(other)),
        }
    }

    /// Conjunction with constant folding and flattening.
    pub fn and(parts: impl IntoIterator<Item = Formula>) -> Formula {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Formula::Bool(true) => {}
                Formula::Bool(false) => return Formula::ff(),
                Formula::And(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::tt(),
            1 => out.pop().expect("one element"),
            _ => Formula::And(out),
        }
    }

    /// Disjunction with constant folding and flattening.
    pub fn or(parts: impl IntoIterator<Item = Formula>) -> Formula {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Formula::Bool(false) => {}
                Formula::Bool(true) => return Formula::tt(),
                Formula::Or(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::ff(),
            1 => out.pop().expect("one element"),
            _ => Formula::Or(out),
        }
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        match (&a, &b) {
            (Formula::Bool(false), _) | (_, Formula::Bool(true)) => Formula::tt(),
            (Formula::Bool(true), _) => b,
            _ => Formula::Implies(Box::new(a), Box::new(b)),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Bool(_) => {}
            Formula::Cmp(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Formula::Not(f) => f.collect_vars(out),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_vars(out)),
            Formula::Implies(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn rename(&self, f: &mut dyn FnMut(&str) -> Result<String, IrError>) -> Result<Formula, IrError> {
        Ok(match self {
            Formula::Bool(b) => Formula::Bool(*b),
            Formula::Cmp(op, a, b) => Formula::Cmp(*op, a.rename(f)?, b.rename(f)?),
            Formula::Not(g) => Formula::Not(Box::new(g.rename(f)?)),
            Formula::And(gs) => Formula::And(gs.iter().map(|g| g.rename(f)).collect::<Result<_, _>>()?),
            Formula::Or(gs) => Formula::Or(gs.iter().map(|g| g.rename(f)).collect::<Result<_, _>>()?),
            Formula::Implies(a, b) => Formula::Implies(Box::new(a.rename(f)?), Box::new(b.rename(f)?)),
        })
    }

    /// Renames with a total map; names outside it are kept.
    pub fn rename_map(&self, map: &BTreeMap<String, String>) -> Formula {
        self.rename(&mut |v| Ok(map.get(v).cloned().unwrap_or_else(|| v.to_string())))
            .expect("infallible rename")
    }

    pub fn eval(&self, state: &PartialState) -> Result<bool, EvalError> {
        match self {
            Formula::Bool(b) => Ok(*b),
            Formula::Cmp(op, a, b) => Ok(op.holds(a.eval(state)?, b.eval(state)?)),
            Formula::Not(f) => Ok(!f.eval(state)?),
            Formula::And(fs) => {
                for f in fs {
                    if !f.eval(state)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Formula::Or(fs) => {
                for f in fs {
                    if f.eval(state)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            Formula::Implies(a, b) => Ok(!a.eval(state)? || b.eval(state)?),
        }
    }

    /// Node count of the rendered s-expression: one per operator and one per leaf.
    pub fn size(&self) -> usize {
        match self {
            Formula::Bool(_) => 1,
            Formula::Cmp(_, a, b) => 1 + a.size() + b.size(),
            Formula::Not(f) => 1 + f.size(),
            Formula::And(fs) | Formula::Or(fs) => 1 + fs.iter().map(Formula::size).sum::<usize>(),
            Formula::Implies(a, b) => 1 + a.size() + b.size(),
        }
    }

    /// Top-level conjuncts.
    pub fn conjuncts(&self) -> Vec<Formula> {
        match self {
            Formula::And(fs) => fs.clone(),
            Formula::Bool(true) => Vec::new(),
            other => vec![other.clone()],
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, op: &str, fs: &[Formula]| {
            write!(f, "({op}")?;
            for g in fs {
                write!(f, " {g}")?;
            }
            write!(f, ")")
        };
        match self {
            Formula::Bool(b) => write!(f, "{b}"),
            Formula::Cmp(op, a, b) => write!(f, "({} {a} {b})", op.symbol()),
            Formula::Not(g) => write!(f, "(not {g})"),
            Formula::And(fs) if fs.is_empty() => f.write_str("true"),
            Formula::Or(fs) if fs.is_empty() => f.write_str("false"),
            Formula::And(fs) => list(f, "and", fs),
            Formula::Or(fs) => list(f, "or", fs),
            Formula::Implies(a, b) => write!(f, "(=> {a} {b})"),
        }
    }
}

/// Renames `x ↦ x@cur` and `x! ↦ x@next` for every `x` in `vars`.
pub fn prime(formula: &Formula, vars: &[String], cur: usize, next: usize) -> Result<Formula, IrError> {
    let known: BTreeSet<&str> = vars.iter().map(String::as_str).collect();
    formula.rename(&mut |name| {
        if known.contains(name) {
            return Ok(step_name(name, cur));
        }
        if let Some(base) = name.strip_suffix('!') {
            if known.contains(base) {
                return Ok(step_name(base, next));
            }
        }
        Err(IrError::UnknownVariable(name.to_string()))
    })
}

/// Inverse of [`prime`] for the same `cur`/`next`.
pub fn unprime(formula: &Formula, vars: &[String], cur: usize, next: usize) -> Result<Formula, IrError> {
    let known: BTreeSet<&str> = vars.iter().map(String::as_str).collect();
    formula.rename(&mut |name| {
        let (base, k) = split_step_name(name).ok_or_else(|| IrError::MalformedName(name.to_string()))?;
        if !known.contains(base) {
            return Err(IrError::UnknownVariable(base.to_string()));
        }
        if k == cur {
            Ok(base.to_string())
        } else if k == next {
            Ok(primed_name(base))
        } else {
            Err(IrError::MalformedName(name.to_string()))
        }
    })
}

/// Renames `x ↦ x!` for every `x` in `vars`.
pub fn to_primed(formula: &Formula, vars: &[String]) -> Formula {
    let map = vars.iter().map(|v| (v.clone(), primed_name(v))).collect();
    formula.rename_map(&map)
}

/// A map from variable names to values. Unbound names are ⊤ (don't care).
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PartialState {
    bindings: BTreeMap<String, i64>,
}

impl PartialState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<S: Into<String>>(pairs: impl IntoIterator<Item = (S, i64)>) -> Self {
        Self {
            bindings: pairs.into_iter().map(|(k, v)| (k.into(), v)).collect(),
        }
    }

    pub fn get(&self, var: &str) -> Option<i64> {
        self.bindings.get(var).copied()
    }

    pub fn bind(&mut self, var: impl Into<String>, value: i64) {
        self.bindings.insert(var.into(), value);
    }

    pub fn unbind(&mut self, var: &str) {
        self.bindings.remove(var);
    }

    pub fn bindings(&self) -> &BTreeMap<String, i64> {
        &self.bindings
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn is_total(&self, vars: &[String]) -> bool {
        vars.iter().all(|v| self.bindings.contains_key(v))
    }

    /// Keeps only the bindings of `keep`.
    pub fn project<'a>(&self, keep: impl IntoIterator<Item = &'a String>) -> PartialState {
        let mut out = PartialState::new();
        for k in keep {
            if let Some(v) = self.bindings.get(k) {
                out.bindings.insert(k.clone(), *v);
            }
        }
        out
    }

    /// Reads the step-`k` copy of `vars` back under plain names.
    pub fn at_step(&self, vars: &[String], k: usize) -> PartialState {
        let mut out = PartialState::new();
        for v in vars {
            if let Some(x) = self.bindings.get(&step_name(v, k)) {
                out.bindings.insert(v.clone(), *x);
            }
        }
        out
    }

    /// Reads the primed copy of `vars` back under plain names.
    pub fn primed_part(&self, vars: &[String]) -> PartialState {
        let mut out = PartialState::new();
        for v in vars {
            if let Some(x) = self.bindings.get(&primed_name(v)) {
                out.bindings.insert(v.clone(), *x);
            }
        }
        out
    }

    /// Renames every binding with `f`.
    pub fn renamed(&self, f: impl Fn(&str) -> String) -> PartialState {
        PartialState {
            bindings: self.bindings.iter().map(|(k, v)| (f(k), *v)).collect(),
        }
    }

    /// True when every binding of `self` also appears in `other`.
    pub fn subsumes(&self, other: &PartialState) -> bool {
        self.bindings.iter().all(|(k, v)| other.bindings.get(k) == Some(v))
    }

    /// The tuple in `vars` order, with `⊤` for unbound entries.
    pub fn display(&self, vars: &[String]) -> String {
        let parts: Vec<String> = vars
            .iter()
            .map(|v| self.get(v).map(|x| x.to_string()).unwrap_or_else(|| "⊤".into()))
            .collect();
        format!("({})", parts.join(", "))
    }

    /// The conjunction `⋀ x = v` over bound entries.
    pub fn to_formula(&self) -> Formula {
        Formula::and(
            self.bindings
                .iter()
                .map(|(k, v)| Formula::cmp(CmpOp::Eq, Term::var(k.clone()), Term::Const(*v))),
        )
    }
}

/// `Σ coeffs·x + bias > 0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Atom {
    coeffs: BTreeMap<String, i64>,
    pub bias: i64,
}

impl Atom {
    pub fn new<S: Into<String>>(coeffs: impl IntoIterator<Item = (S, i64)>, bias: i64) -> Self {
        Atom {
            coeffs: coeffs
                .into_iter()
                .map(|(k, v)| (k.into(), v))
                .filter(|(_, v)| *v != 0)
                .collect(),
            bias,
        }
    }

    pub fn constant(bias: i64) -> Self {
        Atom {
            coeffs: BTreeMap::new(),
            bias,
        }
    }

    pub fn coeffs(&self) -> &BTreeMap<String, i64> {
        &self.coeffs
    }

    pub fn coeff(&self, var: &str) -> i64 {
        self.coeffs.get(var).copied().unwrap_or(0)
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Inner product over bound coordinates only.
    pub fn eval(&self, state: &PartialState) -> bool {
        let mut acc = self.bias as i128;
        for (v, c) in &self.coeffs {
            if let Some(x) = state.get(v) {
                acc += *c as i128 * x as i128;
            }
        }
        acc > 0
    }

    /// `¬(e > 0)` as `-e + 1 > 0`.
    pub fn negate(&self) -> Atom {
        Atom {
            coeffs: self.coeffs.iter().map(|(k, v)| (k.clone(), -v)).collect(),
            bias: 1 - self.bias,
        }
    }

    pub fn l1(&self) -> i64 {
        self.coeffs.values().map(|c| c.abs()).sum()
    }

    /// Renders as a comparison with non-negative coefficients on both sides.
    pub fn to_formula(&self, order: &[String]) -> Formula {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        let mut ordered: Vec<(&String, i64)> = order
            .iter()
            .filter_map(|v| self.coeffs.get(v).map(|c| (v, *c)))
            .collect();
        for (v, c) in &self.coeffs {
            if !order.contains(v) {
                ordered.push((v, *c));
            }
        }
        for (v, c) in ordered {
            let t = if c.abs() == 1 {
                Term::var(v.clone())
            } else {
                Term::Mul(vec![Term::Const(c.abs()), Term::var(v.clone())])
            };
            if c > 0 {
                pos.push(t);
            } else {
                neg.push(t);
            }
        }
        let sum = |mut ts: Vec<Term>| match ts.len() {
            0 => None,
            1 => ts.pop(),
            _ => Some(Term::Add(ts)),
        };
        let k = self.bias - 1;
        match (sum(pos), sum(neg)) {
            (None, None) => Formula::Bool(self.bias > 0),
            // pos + b > 0  <=>  pos >= 1 - b
            (Some(p), None) => Formula::cmp(CmpOp::Ge, p, Term::Const(1 - self.bias)),
            // b - neg > 0  <=>  neg <= b - 1
            (None, Some(n)) => Formula::cmp(CmpOp::Le, n, Term::Const(k)),
            (Some(p), Some(n)) => {
                let rhs = match k {
                    0 => p,
                    k if k > 0 => Term::Add(vec![p, Term::Const(k)]),
                    k => Term::Sub(vec![p, Term::Const(-k)]),
                };
                Formula::cmp(CmpOp::Le, n, rhs)
            }
        }
    }
}

/// `⋀_c ⋁_d atom_cd`. No conjuncts is `true`; an empty disjunction is `false`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CnfPredicate {
    pub conjuncts: Vec<Vec<Atom>>,
}

impl CnfPredicate {
    pub fn new(conjuncts: Vec<Vec<Atom>>) -> Self {
        CnfPredicate { conjuncts }
    }

    pub fn tt() -> Self {
        CnfPredicate { conjuncts: Vec::new() }
    }

    pub fn ff() -> Self {
        CnfPredicate {
            conjuncts: vec![Vec::new()],
        }
    }

    pub fn atom(a: Atom) -> Self {
        CnfPredicate {
            conjuncts: vec![vec![a]],
        }
    }

    pub fn is_true(&self) -> bool {
        self.conjuncts.is_empty()
    }

    pub fn eval(&self, state: &PartialState) -> bool {
        self.conjuncts.iter().all(|c| c.iter().any(|a| a.eval(state)))
    }

    pub fn relevant_vars(&self) -> BTreeSet<String> {
        self.atoms().flat_map(|a| a.coeffs.keys().cloned()).collect()
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.conjuncts.iter().flatten()
    }

    pub fn l1(&self) -> i64 {
        self.atoms().map(Atom::l1).sum()
    }

    pub fn max_coeff(&self) -> i64 {
        self.atoms().flat_map(|a| a.coeffs.values()).map(|c| c.abs()).max().unwrap_or(0)
    }

    pub fn to_formula(&self, order: &[String]) -> Formula {
        Formula::and(
            self.conjuncts
                .iter()
                .map(|c| Formula::or(c.iter().map(|a| a.to_formula(order)))),
        )
    }
}

/// A verification problem ⟨Pre, Trans, Post⟩. `post` is the full exit condition
/// (loop guard already folded in), so a sufficient invariant `I` satisfies
/// `pre ⇒ I`, `I ∧ trans ⇒ I'` and `I ⇒ post`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VcProblem {
    pub vars: Vec<String>,
    pub pre: Formula,
    pub trans: Formula,
    pub post: Formula,
}

impl VcProblem {
    pub fn new(vars: Vec<String>, pre: Formula, trans: Formula, post: Formula) -> Result<Self, IrError> {
        let p = VcProblem { vars, pre, trans, post };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), IrError> {
        let plain: BTreeSet<String> = self.vars.iter().cloned().collect();
        let mut both = plain.clone();
        both.extend(self.vars.iter().map(|v| primed_name(v)));
        for f in [&self.pre, &self.post] {
            if let Some(v) = f.free_vars().into_iter().find(|v| !plain.contains(v)) {
                return Err(IrError::UnknownVariable(v));
            }
        }
        if let Some(v) = self.trans.free_vars().into_iter().find(|v| !both.contains(v)) {
            return Err(IrError::UnknownVariable(v));
        }
        Ok(())
    }

    pub fn primed_vars(&self) -> Vec<String> {
        self.vars.iter().map(|v| primed_name(v)).collect()
    }
}
