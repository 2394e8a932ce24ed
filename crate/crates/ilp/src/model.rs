use std::collections::HashMap;
use std::fmt;

use num_traits::{Signed, Zero};

use crate::{IlpError, Rational};

/// Numeric types accepted as coefficients and right-hand sides.
pub trait IntoRational {
    fn into_rational(self) -> Rational;
}

impl IntoRational for Rational {
    fn into_rational(self) -> Rational {
        self
    }
}

impl IntoRational for &Rational {
    fn into_rational(self) -> Rational {
        self.clone()
    }
}

macro_rules! int_into_rational {
    ($($t:ty),*) => {$(
        impl IntoRational for $t {
            fn into_rational(self) -> Rational {
                Rational::from_integer(self.into())
            }
        }
    )*};
}

int_into_rational!(i32, i64, u32, num_bigint::BigInt);

/// Index of a decision variable inside an [`IlpModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub(crate) usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Integer,
    Continuous,
}

#[derive(Debug, Clone)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: Option<Rational>,
    pub upper: Option<Rational>,
    /// Higher priorities are branched on first.
    pub priority: i32,
}

/// A sparse linear expression `Σ coeff · var`. Terms on the same variable are merged.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    terms: Vec<(VarId, Rational)>,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_term(&mut self, var: VarId, coeff: impl IntoRational) {
        let coeff = coeff.into_rational();
        if coeff.is_zero() {
            return;
        }
        match self.terms.iter_mut().find(|(v, _)| *v == var) {
            Some((_, c)) => {
                *c += coeff;
            }
            None => self.terms.push((var, coeff)),
        }
        self.terms.retain(|(_, c)| !c.is_zero());
    }

    pub fn term(mut self, var: VarId, coeff: impl IntoRational) -> Self {
        self.add_term(var, coeff);
        self
    }

    pub fn terms(&self) -> &[(VarId, Rational)] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, values: &[Rational]) -> Rational {
        self.terms
            .iter()
            .fold(Rational::zero(), |acc, (v, c)| acc + c * &values[v.0])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub name: Option<String>,
    pub expr: LinExpr,
    pub relation: Relation,
    pub rhs: Rational,
}

impl Constraint {
    pub fn is_satisfied(&self, values: &[Rational]) -> bool {
        let lhs = self.expr.eval(values);
        match self.relation {
            Relation::Le => lhs <= self.rhs,
            Relation::Ge => lhs >= self.rhs,
            Relation::Eq => lhs == self.rhs,
        }
    }
}

/// A mixed integer linear program: bounded variables, linear constraints and an
/// optional objective to minimize.
#[derive(Debug, Clone, Default)]
pub struct IlpModel {
    vars: Vec<Variable>,
    constraints: Vec<Constraint>,
    objective: Option<LinExpr>,
    by_name: HashMap<String, VarId>,
}

impl IlpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        kind: VarKind,
        lower: Option<Rational>,
        upper: Option<Rational>,
    ) -> Result<VarId, IlpError> {
        let name = name.into();
        if self.by_name.contains_key(&name) {
            return Err(IlpError::DuplicateVariable(name));
        }
        if let (Some(lo), Some(hi)) = (&lower, &upper) {
            if lo > hi {
                return Err(IlpError::EmptyDomain(name));
            }
        }
        let id = VarId(self.vars.len());
        self.by_name.insert(name.clone(), id);
        self.vars.push(Variable {
            name,
            kind,
            lower,
            upper,
            priority: 0,
        });
        Ok(id)
    }

    pub fn add_integer(&mut self, name: impl Into<String>, lower: i64, upper: i64) -> Result<VarId, IlpError> {
        self.add_var(
            name,
            VarKind::Integer,
            Some(Rational::from_integer(lower.into())),
            Some(Rational::from_integer(upper.into())),
        )
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> Result<VarId, IlpError> {
        self.add_integer(name, 0, 1)
    }

    pub fn add_continuous(
        &mut self,
        name: impl Into<String>,
        lower: Option<Rational>,
        upper: Option<Rational>,
    ) -> Result<VarId, IlpError> {
        self.add_var(name, VarKind::Continuous, lower, upper)
    }

    pub fn set_priority(&mut self, var: VarId, priority: i32) {
        self.vars[var.0].priority = priority;
    }

    pub fn add_constraint(&mut self, expr: LinExpr, relation: Relation, rhs: impl IntoRational) {
        self.constraints.push(Constraint {
            name: None,
            expr,
            relation,
            rhs: rhs.into_rational(),
        });
    }

    pub fn add_named_constraint(
        &mut self,
        name: impl Into<String>,
        expr: LinExpr,
        relation: Relation,
        rhs: impl IntoRational,
    ) {
        self.constraints.push(Constraint {
            name: Some(name.into()),
            expr,
            relation,
            rhs: rhs.into_rational(),
        });
    }

    pub fn set_objective(&mut self, objective: LinExpr) {
        self.objective = Some(objective);
    }

    pub fn clear_objective(&mut self) {
        self.objective = None;
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.vars[id.0]
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> Option<&LinExpr> {
        self.objective.as_ref()
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    /// Checks the structural invariants the solver relies on.
    pub fn validate(&self) -> Result<(), IlpError> {
        for v in &self.vars {
            if v.kind == VarKind::Integer {
                let (Some(lo), Some(hi)) = (&v.lower, &v.upper) else {
                    return Err(IlpError::UnboundedInteger(v.name.clone()));
                };
                let fits = |r: &Rational| {
                    r.abs() <= Rational::from_integer((i64::MAX / 4).into())
                };
                if !fits(lo) || !fits(hi) {
                    return Err(IlpError::BoundTooLarge(v.name.clone()));
                }
            }
        }
        let exprs = self
            .constraints
            .iter()
            .map(|c| &c.expr)
            .chain(self.objective.iter());
        for e in exprs {
            for (v, _) in e.terms() {
                if v.0 >= self.vars.len() {
                    return Err(IlpError::UnknownVariable(v.0));
                }
            }
        }
        Ok(())
    }

    /// Exact check of bounds, integrality and every constraint.
    pub fn is_feasible_assignment(&self, values: &[Rational]) -> bool {
        if values.len() != self.vars.len() {
            return false;
        }
        for (v, x) in self.vars.iter().zip(values) {
            if v.kind == VarKind::Integer && !x.is_integer() {
                return false;
            }
            if v.lower.as_ref().is_some_and(|lo| x < lo) || v.upper.as_ref().is_some_and(|hi| x > hi) {
                return false;
            }
        }
        self.constraints.iter().all(|c| c.is_satisfied(values))
    }

    pub fn objective_value(&self, values: &[Rational]) -> Rational {
        self.objective
            .as_ref()
            .map(|o| o.eval(values))
            .unwrap_or_else(Rational::zero)
    }
}

/// Values for every variable of a model, in declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub(crate) values: Vec<Rational>,
}

impl Assignment {
    pub fn new(values: Vec<Rational>) -> Self {
        Self { values }
    }

    pub fn get(&self, var: VarId) -> &Rational {
        &self.values[var.0]
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn get_by_name<'a>(&'a self, model: &IlpModel, name: &str) -> Option<&'a Rational> {
        model.var_id(name).map(|id| &self.values[id.0])
    }
}
