//! Exact mixed-integer linear programming.
//!
//! Models carry rational coefficients. Relaxations are solved in floating point
//! and every pruning decision is certified with a rational Lagrangian bound, with
//! an exact rational simplex as fallback. Returned assignments are checked exactly
//! against the model.

mod bnb;
pub mod lp_format;
mod model;
mod simplex;

use std::sync::atomic::AtomicBool;
use std::sync::Arc;
use std::time::Duration;

pub use model::{Assignment, Constraint, IlpModel, IntoRational, LinExpr, Relation, VarId, VarKind, Variable};

pub type Rational = num_rational::BigRational;

#[derive(Debug, thiserror::Error)]
pub enum IlpError {
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("variable `{0}` has an empty domain")]
    EmptyDomain(String),
    #[error("integer variable `{0}` needs finite bounds")]
    UnboundedInteger(String),
    #[error("bounds of `{0}` are too large")]
    BoundTooLarge(String),
    #[error("unknown variable index {0}")]
    UnknownVariable(usize),
    #[error("the objective is unbounded below")]
    Unbounded,
}

/// Limits on a single solve. A solve that hits any limit reports
/// [`IlpOutcome::ResourceLimit`] rather than a possibly wrong answer.
#[derive(Debug, Clone, Default)]
pub struct Budget {
    pub max_nodes: Option<u64>,
    pub time_limit: Option<Duration>,
    pub cancel: Option<Arc<AtomicBool>>,
    /// A known lower bound on the optimum. The search stops as soon as an
    /// incumbent reaches it.
    pub objective_floor: Option<Rational>,
}

impl Budget {
    pub fn unlimited() -> Self {
        Self::default()
    }

    pub fn with_time_limit(mut self, limit: Duration) -> Self {
        self.time_limit = Some(limit);
        self
    }

    pub fn with_max_nodes(mut self, nodes: u64) -> Self {
        self.max_nodes = Some(nodes);
        self
    }

    pub fn with_cancel(mut self, flag: Arc<AtomicBool>) -> Self {
        self.cancel = Some(flag);
        self
    }

    pub fn with_objective_floor(mut self, floor: Rational) -> Self {
        self.objective_floor = Some(floor);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum IlpOutcome {
    /// Proven optimal. For models without an objective the value is zero.
    Optimal { assignment: Assignment, objective: Rational },
    /// Feasible but optimality not established. Not produced by the solver
    /// itself; callers may use it when relaying partial results.
    Feasible { assignment: Assignment },
    Infeasible,
    ResourceLimit,
}

impl IlpOutcome {
    pub fn assignment(&self) -> Option<&Assignment> {
        match self {
            IlpOutcome::Optimal { assignment, .. } | IlpOutcome::Feasible { assignment } => Some(assignment),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SolveStats {
    pub nodes: u64,
    pub lp_solves: u64,
    pub exact_lp_solves: u64,
    pub elapsed: Duration,
}

/// Solves `model` to proven optimality within `budget`.
pub fn solve(model: &IlpModel, budget: &Budget) -> Result<IlpOutcome, IlpError> {
    solve_with_stats(model, budget).map(|(o, _)| o)
}

pub fn solve_with_stats(model: &IlpModel, budget: &Budget) -> Result<(IlpOutcome, SolveStats), IlpError> {
    model.validate()?;
    bnb::BranchAndBound::new(model, budget).run()
}
