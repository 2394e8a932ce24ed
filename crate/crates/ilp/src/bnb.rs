//! Depth-first branch-and-bound with bound propagation.
//!
//! Node relaxations run in `f64`. A node is only pruned on an exact argument:
//! either a rational Lagrangian bound built from rationalized float duals, or an
//! exact rational simplex on the node's reduced problem.

use std::sync::atomic::Ordering;
use std::time::Instant;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use tracing::trace;

use crate::model::{Assignment, IlpModel, Relation, VarKind};
use crate::simplex::{solve_lp, LpData, LpStatus};
use crate::{Budget, IlpError, IlpOutcome, Rational, SolveStats};

const INT_TOL: f64 = 1e-6;
const PROPAGATION_PASSES: usize = 40;

struct FastRow {
    terms: Vec<(usize, i128)>,
    lo: Option<i128>,
    hi: Option<i128>,
}

struct Row {
    terms: Vec<(usize, Rational)>,
    terms_f: Vec<(usize, f64)>,
    lo: Option<Rational>,
    hi: Option<Rational>,
    fast: Option<FastRow>,
}

#[derive(Clone)]
struct Node {
    lo: Vec<i64>,
    hi: Vec<i64>,
}

struct Reduced {
    cols: Vec<usize>,
    col_of: Vec<Option<usize>>,
    /// (model row, shifted lower, shifted upper)
    rows: Vec<(usize, Option<Rational>, Option<Rational>)>,
    offset: Rational,
}

enum Values {
    Float(Vec<f64>),
    Exact(Vec<Rational>),
}

pub(crate) struct BranchAndBound<'a> {
    model: &'a IlpModel,
    budget: &'a Budget,
    n: usize,
    is_int: Vec<bool>,
    priority: Vec<i32>,
    cont_lo: Vec<Option<Rational>>,
    cont_hi: Vec<Option<Rational>>,
    cont_lo_i: Vec<Option<i128>>,
    cont_hi_i: Vec<Option<i128>>,
    cont_lo_f: Vec<Option<f64>>,
    cont_hi_f: Vec<Option<f64>>,
    root_lo: Vec<i64>,
    root_hi: Vec<i64>,
    rows: Vec<Row>,
    cost: Vec<Rational>,
    cost_f: Vec<f64>,
    has_objective: bool,
    incumbent: Option<(Vec<Rational>, Rational)>,
    stats: SolveStats,
    start: Instant,
}

fn to_i128(r: &Rational) -> Option<i128> {
    if r.is_integer() {
        r.to_integer().to_i128()
    } else {
        None
    }
}

fn rat(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Best rational approximation with a bounded denominator.
pub(crate) fn rationalize(v: f64) -> Rational {
    if !v.is_finite() || v.abs() < 1e-12 {
        return Rational::zero();
    }
    let target = v.abs();
    let mut x = target;
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    for _ in 0..64 {
        let a = x.floor();
        if a > 1e15 {
            break;
        }
        let ai = a as i128;
        let h2 = ai * h1 + h0;
        let k2 = ai * k1 + k0;
        if k2 > 1_000_000_000 {
            break;
        }
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        let approx = h1 as f64 / k1 as f64;
        if (approx - target).abs() <= 1e-12 * target.max(1.0) {
            break;
        }
        let frac = x - a;
        if frac < 1e-15 {
            break;
        }
        x = 1.0 / frac;
    }
    if k1 == 0 {
        return Rational::from_float(v).unwrap_or_else(Rational::zero);
    }
    let r = Rational::new(BigInt::from(h1), BigInt::from(k1));
    if v < 0.0 {
        -r
    } else {
        r
    }
}

fn fast_row(terms: &[(usize, Rational)], lo: &Option<Rational>, hi: &Option<Rational>) -> Option<FastRow> {
    let mut scale = BigInt::one();
    for (_, c) in terms {
        scale = scale.lcm(c.denom());
    }
    for b in lo.iter().chain(hi.iter()) {
        scale = scale.lcm(b.denom());
    }
    let s = Rational::from_integer(scale);
    let limit = 1i128 << 80;
    let conv = |r: &Rational| -> Option<i128> {
        let v = to_i128(&(r * &s))?;
        (v.abs() < limit).then_some(v)
    };
    let mut out = Vec::with_capacity(terms.len());
    for (v, c) in terms {
        out.push((*v, conv(c)?));
    }
    Some(FastRow {
        terms: out,
        lo: match lo {
            Some(b) => Some(conv(b)?),
            None => None,
        },
        hi: match hi {
            Some(b) => Some(conv(b)?),
            None => None,
        },
    })
}

impl<'a> BranchAndBound<'a> {
    pub(crate) fn new(model: &'a IlpModel, budget: &'a Budget) -> Self {
        let n = model.num_vars();
        let vars = model.vars();
        let is_int: Vec<bool> = vars.iter().map(|v| v.kind == VarKind::Integer).collect();
        let mut root_lo = vec![0i64; n];
        let mut root_hi = vec![0i64; n];
        let mut cont_lo = vec![None; n];
        let mut cont_hi = vec![None; n];
        for (j, v) in vars.iter().enumerate() {
            if is_int[j] {
                let lo = v.lower.as_ref().expect("validated");
                let hi = v.upper.as_ref().expect("validated");
                root_lo[j] = lo.ceil().to_integer().to_i64().expect("validated");
                root_hi[j] = hi.floor().to_integer().to_i64().expect("validated");
            } else {
                cont_lo[j] = v.lower.clone();
                cont_hi[j] = v.upper.clone();
            }
        }
        let cont_lo_i = cont_lo.iter().map(|b| b.as_ref().and_then(to_i128)).collect();
        let cont_hi_i = cont_hi.iter().map(|b| b.as_ref().and_then(to_i128)).collect();
        let cont_lo_f = cont_lo.iter().map(|b| b.as_ref().and_then(|r| r.to_f64())).collect();
        let cont_hi_f = cont_hi.iter().map(|b| b.as_ref().and_then(|r| r.to_f64())).collect();

        let rows = model
            .constraints()
            .iter()
            .map(|c| {
                let terms: Vec<(usize, Rational)> = c.expr.terms().iter().map(|(v, a)| (v.index(), a.clone())).collect();
                let (lo, hi) = match c.relation {
                    Relation::Le => (None, Some(c.rhs.clone())),
                    Relation::Ge => (Some(c.rhs.clone()), None),
                    Relation::Eq => (Some(c.rhs.clone()), Some(c.rhs.clone())),
                };
                let fast = fast_row(&terms, &lo, &hi);
                let terms_f = terms.iter().map(|(v, a)| (*v, a.to_f64().unwrap_or(0.0))).collect();
                Row {
                    terms,
                    terms_f,
                    lo,
                    hi,
                    fast,
                }
            })
            .collect();

        let mut cost = vec![Rational::zero(); n];
        let has_objective = model.objective().is_some();
        if let Some(obj) = model.objective() {
            for (v, c) in obj.terms() {
                cost[v.index()] += c;
            }
        }
        let cost_f = cost.iter().map(|c| c.to_f64().unwrap_or(0.0)).collect();
        let priority = vars.iter().map(|v| v.priority).collect();

        BranchAndBound {
            model,
            budget,
            n,
            is_int,
            priority,
            cont_lo,
            cont_hi,
            cont_lo_i,
            cont_hi_i,
            cont_lo_f,
            cont_hi_f,
            root_lo,
            root_hi,
            rows,
            cost,
            cost_f,
            has_objective,
            incumbent: None,
            stats: SolveStats::default(),
            start: Instant::now(),
        }
    }

    fn out_of_budget(&self) -> bool {
        if self.budget.max_nodes.is_some_and(|m| self.stats.nodes >= m) {
            return true;
        }
        if self.budget.time_limit.is_some_and(|t| self.start.elapsed() >= t) {
            return true;
        }
        self.budget.cancel.as_ref().is_some_and(|c| c.load(Ordering::Relaxed))
    }

    pub(crate) fn run(mut self) -> Result<(IlpOutcome, SolveStats), IlpError> {
        let mut stack = vec![Node {
            lo: self.root_lo.clone(),
            hi: self.root_hi.clone(),
        }];
        let outcome = loop {
            let Some(mut node) = stack.pop() else {
                break match self.incumbent.take() {
                    Some((values, objective)) => IlpOutcome::Optimal {
                        assignment: Assignment::new(values),
                        objective,
                    },
                    None => IlpOutcome::Infeasible,
                };
            };
            if self.out_of_budget() {
                break IlpOutcome::ResourceLimit;
            }
            self.stats.nodes += 1;
            if let Some((var, floor)) = self.process(&mut node)? {
                let mut up = node.clone();
                up.lo[var] = floor + 1;
                let mut down = node;
                down.hi[var] = floor;
                stack.push(up);
                stack.push(down);
            }
            if self.finished() {
                let (values, objective) = self.incumbent.take().expect("finished implies incumbent");
                break IlpOutcome::Optimal {
                    assignment: Assignment::new(values),
                    objective,
                };
            }
        };
        self.stats.elapsed = self.start.elapsed();
        if let Some(a) = outcome.assignment() {
            debug_assert!(self.model.is_feasible_assignment(a.values()));
        }
        trace!(nodes = self.stats.nodes, lps = self.stats.lp_solves, "ilp solve finished");
        Ok((outcome, self.stats))
    }

    fn finished(&self) -> bool {
        let Some((_, obj)) = &self.incumbent else {
            return false;
        };
        if !self.has_objective {
            return true;
        }
        self.budget.objective_floor.as_ref().is_some_and(|f| obj <= f)
    }

    /// Returns the branching decision, or `None` when the node is closed.
    fn process(&mut self, node: &mut Node) -> Result<Option<(usize, i64)>, IlpError> {
        if !self.propagate(node) {
            return Ok(None);
        }
        let Some(red) = self.reduce(node) else {
            return Ok(None);
        };
        if red.cols.is_empty() {
            let values = self.values_with(node, &red, &[]);
            self.offer(values);
            return Ok(None);
        }

        let lp = self.float_lp(node, &red);
        self.stats.lp_solves += 1;
        let res = solve_lp(&lp, 30 * (lp.ncols + lp.rows.len()) + 500);
        match res.status {
            LpStatus::Infeasible => {
                if self.certify_infeasible(node, &red, &res.duals) {
                    return Ok(None);
                }
                self.exact_node(node, &red)
            }
            LpStatus::Optimal => {
                let bound = self.lagrangian_bound(node, &red, &res.duals, true, false);
                if let (Some(b), Some((_, inc))) = (&bound, &self.incumbent) {
                    if b >= inc {
                        return Ok(None);
                    }
                }
                if let Some((_, inc)) = &self.incumbent {
                    let inc_f = inc.to_f64().unwrap_or(f64::INFINITY);
                    if res.objective >= inc_f - 1e-6 * (1.0 + inc_f.abs()) {
                        // near tie that the certificate could not settle
                        return self.exact_node(node, &red);
                    }
                }
                let full = self.scatter_f(node, &red, &res.x);
                match self.pick_branch(node, &Values::Float(full.clone())) {
                    Some(b) => Ok(Some(b)),
                    None => {
                        let Some(candidate) = self.complete_candidate(&full) else {
                            return self.exact_node(node, &red);
                        };
                        let cand_obj = self.model.objective_value(&candidate);
                        self.offer(candidate);
                        match bound {
                            Some(b) if b >= cand_obj || !self.has_objective => Ok(None),
                            _ => self.exact_node(node, &red),
                        }
                    }
                }
            }
            LpStatus::Unbounded | LpStatus::IterationLimit => self.exact_node(node, &red),
        }
    }

    fn exact_node(&mut self, node: &Node, red: &Reduced) -> Result<Option<(usize, i64)>, IlpError> {
        let lp = self.exact_lp(node, red);
        self.stats.exact_lp_solves += 1;
        let res = solve_lp(&lp, 200 * (lp.ncols + lp.rows.len()) + 2000);
        match res.status {
            LpStatus::Infeasible => Ok(None),
            LpStatus::Unbounded => {
                if self.has_objective {
                    Err(IlpError::Unbounded)
                } else {
                    Ok(None)
                }
            }
            LpStatus::IterationLimit => {
                // relaxation unusable here: split the first open integer domain
                Ok((0..self.n)
                    .find(|&j| self.is_int[j] && node.lo[j] < node.hi[j])
                    .map(|j| (j, node.lo[j] + (node.hi[j] - node.lo[j]) / 2)))
            }
            LpStatus::Optimal => {
                let obj = &red.offset + &res.objective;
                if let Some((_, inc)) = &self.incumbent {
                    if &obj >= inc {
                        return Ok(None);
                    }
                }
                let full = self.values_with(node, red, &res.x);
                match self.pick_branch(node, &Values::Exact(full.clone())) {
                    Some(b) => Ok(Some(b)),
                    None => {
                        self.offer(full);
                        Ok(None)
                    }
                }
            }
        }
    }

    fn offer(&mut self, values: Vec<Rational>) {
        if !self.model.is_feasible_assignment(&values) {
            return;
        }
        let obj = self.model.objective_value(&values);
        let better = match &self.incumbent {
            None => true,
            Some((_, inc)) => &obj < inc,
        };
        if better {
            trace!(objective = %obj, "new incumbent");
            self.incumbent = Some((values, obj));
        }
    }

    fn node_lo_i(&self, node: &Node, j: usize) -> Option<i128> {
        if self.is_int[j] {
            Some(node.lo[j] as i128)
        } else {
            self.cont_lo_i[j]
        }
    }

    fn node_hi_i(&self, node: &Node, j: usize) -> Option<i128> {
        if self.is_int[j] {
            Some(node.hi[j] as i128)
        } else {
            self.cont_hi_i[j]
        }
    }

    fn cont_integral(&self, j: usize) -> bool {
        self.is_int[j]
            || (self.cont_lo[j].is_none() || self.cont_lo_i[j].is_some())
                && (self.cont_hi[j].is_none() || self.cont_hi_i[j].is_some())
    }

    /// Activity range `(min, max)` of a fast row; `None` means unbounded on that side.
    fn activity(&self, node: &Node, row: &FastRow) -> Option<(Option<i128>, Option<i128>)> {
        let mut min = Some(0i128);
        let mut max = Some(0i128);
        for (j, a) in &row.terms {
            if !self.cont_integral(*j) {
                return None;
            }
            let (l, h) = (self.node_lo_i(node, *j), self.node_hi_i(node, *j));
            let (for_min, for_max) = if *a > 0 { (l, h) } else { (h, l) };
            min = match (min, for_min) {
                (Some(m), Some(b)) => Some(m.checked_add(a.checked_mul(b)?)?),
                _ => None,
            };
            max = match (max, for_max) {
                (Some(m), Some(b)) => Some(m.checked_add(a.checked_mul(b)?)?),
                _ => None,
            };
        }
        Some((min, max))
    }

    /// Tightens integer bounds. Returns false when the node is infeasible.
    fn propagate(&self, node: &mut Node) -> bool {
        for _ in 0..PROPAGATION_PASSES {
            let mut changed = false;
            for row in &self.rows {
                let Some(fr) = &row.fast else { continue };
                let Some((min, max)) = self.activity(node, fr) else {
                    continue;
                };
                if let (Some(lo), Some(max)) = (fr.lo, max) {
                    if max < lo {
                        return false;
                    }
                }
                if let (Some(hi), Some(min)) = (fr.hi, min) {
                    if min > hi {
                        return false;
                    }
                }
                for (j, a) in &fr.terms {
                    let j = *j;
                    if !self.is_int[j] {
                        continue;
                    }
                    let (l, h) = (node.lo[j] as i128, node.hi[j] as i128);
                    let (cmin, cmax) = if *a > 0 { (a * l, a * h) } else { (a * h, a * l) };
                    let mut new_lo = l;
                    let mut new_hi = h;
                    if let (Some(hi), Some(min)) = (fr.hi, min) {
                        // a x <= hi - (min - cmin)
                        if let Some(res) = min.checked_sub(cmin).and_then(|r| hi.checked_sub(r)) {
                            if *a > 0 {
                                new_hi = new_hi.min(Integer::div_floor(&res, a));
                            } else {
                                new_lo = new_lo.max(ceil_div(res, *a));
                            }
                        }
                    }
                    if let (Some(lo), Some(max)) = (fr.lo, max) {
                        // a x >= lo - (max - cmax)
                        if let Some(res) = max.checked_sub(cmax).and_then(|r| lo.checked_sub(r)) {
                            if *a > 0 {
                                new_lo = new_lo.max(ceil_div(res, *a));
                            } else {
                                new_hi = new_hi.min(Integer::div_floor(&res, a));
                            }
                        }
                    }
                    if new_lo > new_hi {
                        return false;
                    }
                    if new_lo != l || new_hi != h {
                        node.lo[j] = new_lo as i64;
                        node.hi[j] = new_hi as i64;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        true
    }

    fn fixed_value(&self, node: &Node, j: usize) -> Option<Rational> {
        if self.is_int[j] {
            (node.lo[j] == node.hi[j]).then(|| rat(node.lo[j]))
        } else {
            match (&self.cont_lo[j], &self.cont_hi[j]) {
                (Some(l), Some(h)) if l == h => Some(l.clone()),
                _ => None,
            }
        }
    }

    /// Removes fixed columns and redundant rows. `None` means a fully fixed row is violated.
    fn reduce(&self, node: &Node) -> Option<Reduced> {
        let mut cols = Vec::new();
        let mut col_of = vec![None; self.n];
        let mut fixed: Vec<Option<Rational>> = vec![None; self.n];
        let mut offset = Rational::zero();
        for j in 0..self.n {
            match self.fixed_value(node, j) {
                Some(v) => {
                    if !self.cost[j].is_zero() {
                        offset += &self.cost[j] * &v;
                    }
                    fixed[j] = Some(v);
                }
                None => {
                    col_of[j] = Some(cols.len());
                    cols.push(j);
                }
            }
        }
        let mut rows = Vec::new();
        for (i, row) in self.rows.iter().enumerate() {
            if let Some(fr) = &row.fast {
                if let Some((min, max)) = self.activity(node, fr) {
                    let lo_ok = match (fr.lo, min) {
                        (None, _) => true,
                        (Some(lo), Some(min)) => min >= lo,
                        _ => false,
                    };
                    let hi_ok = match (fr.hi, max) {
                        (None, _) => true,
                        (Some(hi), Some(max)) => max <= hi,
                        _ => false,
                    };
                    if lo_ok && hi_ok {
                        continue;
                    }
                }
            }
            let mut fixed_sum = Rational::zero();
            let mut open = false;
            for (j, a) in &row.terms {
                match &fixed[*j] {
                    Some(v) => fixed_sum += a * v,
                    None => open = true,
                }
            }
            let lo = row.lo.as_ref().map(|b| b - &fixed_sum);
            let hi = row.hi.as_ref().map(|b| b - &fixed_sum);
            if !open {
                let zero = Rational::zero();
                if lo.as_ref().is_some_and(|l| l > &zero) || hi.as_ref().is_some_and(|h| h < &zero) {
                    return None;
                }
                continue;
            }
            rows.push((i, lo, hi));
        }
        Some(Reduced {
            cols,
            col_of,
            rows,
            offset,
        })
    }

    fn float_lp(&self, node: &Node, red: &Reduced) -> LpData<f64> {
        let rows = red
            .rows
            .iter()
            .map(|(i, _, _)| {
                self.rows[*i]
                    .terms_f
                    .iter()
                    .filter_map(|(j, a)| red.col_of[*j].map(|c| (c, *a)))
                    .collect()
            })
            .collect();
        let conv = |b: &Option<Rational>| b.as_ref().map(|r| r.to_f64().unwrap_or(0.0));
        LpData {
            ncols: red.cols.len(),
            rows,
            row_lo: red.rows.iter().map(|(_, l, _)| conv(l)).collect(),
            row_hi: red.rows.iter().map(|(_, _, h)| conv(h)).collect(),
            col_lo: red
                .cols
                .iter()
                .map(|&j| if self.is_int[j] { Some(node.lo[j] as f64) } else { self.cont_lo_f[j] })
                .collect(),
            col_hi: red
                .cols
                .iter()
                .map(|&j| if self.is_int[j] { Some(node.hi[j] as f64) } else { self.cont_hi_f[j] })
                .collect(),
            cost: red.cols.iter().map(|&j| self.cost_f[j]).collect(),
        }
    }

    fn exact_lp(&self, node: &Node, red: &Reduced) -> LpData<Rational> {
        let rows = red
            .rows
            .iter()
            .map(|(i, _, _)| {
                self.rows[*i]
                    .terms
                    .iter()
                    .filter_map(|(j, a)| red.col_of[*j].map(|c| (c, a.clone())))
                    .collect()
            })
            .collect();
        LpData {
            ncols: red.cols.len(),
            rows,
            row_lo: red.rows.iter().map(|(_, l, _)| l.clone()).collect(),
            row_hi: red.rows.iter().map(|(_, _, h)| h.clone()).collect(),
            col_lo: red.cols.iter().map(|&j| self.col_lo_exact(node, j)).collect(),
            col_hi: red.cols.iter().map(|&j| self.col_hi_exact(node, j)).collect(),
            cost: red.cols.iter().map(|&j| self.cost[j].clone()).collect(),
        }
    }

    fn col_lo_exact(&self, node: &Node, j: usize) -> Option<Rational> {
        if self.is_int[j] {
            Some(rat(node.lo[j]))
        } else {
            self.cont_lo[j].clone()
        }
    }

    fn col_hi_exact(&self, node: &Node, j: usize) -> Option<Rational> {
        if self.is_int[j] {
            Some(rat(node.hi[j]))
        } else {
            self.cont_hi[j].clone()
        }
    }

    /// `min` over the bounding box of `π·(A x) - π·r` (+ `c·x` when `with_cost`).
    fn lagrangian_bound(&self, node: &Node, red: &Reduced, duals: &[f64], with_cost: bool, negate: bool) -> Option<Rational> {
        let mut coef: Vec<Rational> = if with_cost {
            red.cols.iter().map(|&j| self.cost[j].clone()).collect()
        } else {
            vec![Rational::zero(); red.cols.len()]
        };
        let mut total = if with_cost { red.offset.clone() } else { Rational::zero() };
        for ((i, lo, hi), d) in red.rows.iter().zip(duals) {
            let mut pi = rationalize(if negate { -d } else { *d });
            // wrong-signed multipliers on one-sided rows give nothing
            if (lo.is_none() && pi.is_negative()) || (hi.is_none() && pi.is_positive()) {
                pi = Rational::zero();
            }
            if pi.is_zero() {
                continue;
            }
            for (j, a) in &self.rows[*i].terms {
                if let Some(c) = red.col_of[*j] {
                    coef[c] += &pi * a;
                }
            }
            // min over r in [lo, hi] of -pi * r
            let b = if pi.is_positive() { hi } else { lo };
            total -= &pi * b.as_ref()?;
        }
        for (c, &j) in coef.iter().zip(&red.cols) {
            if c.is_zero() {
                continue;
            }
            let b = if c.is_positive() {
                self.col_lo_exact(node, j)
            } else {
                self.col_hi_exact(node, j)
            };
            total += c * b?;
        }
        Some(total)
    }

    fn certify_infeasible(&self, node: &Node, red: &Reduced, duals: &[f64]) -> bool {
        [false, true].into_iter().any(|neg| {
            self.lagrangian_bound(node, red, duals, false, neg)
                .is_some_and(|b| b.is_positive())
        })
    }

    fn scatter_f(&self, node: &Node, red: &Reduced, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|j| match red.col_of[j] {
                Some(c) => x[c],
                None => self.fixed_value(node, j).and_then(|v| v.to_f64()).unwrap_or(0.0),
            })
            .collect()
    }

    fn values_with(&self, node: &Node, red: &Reduced, x: &[Rational]) -> Vec<Rational> {
        (0..self.n)
            .map(|j| match red.col_of[j] {
                Some(c) => x[c].clone(),
                None => self.fixed_value(node, j).expect("non-column variables are fixed"),
            })
            .collect()
    }

    fn pick_branch(&self, node: &Node, values: &Values) -> Option<(usize, i64)> {
        let mut best: Option<(i32, f64, usize, i64)> = None;
        for j in 0..self.n {
            if !self.is_int[j] || node.lo[j] == node.hi[j] {
                continue;
            }
            let (floor, frac) = match values {
                Values::Float(v) => {
                    let f = v[j].floor();
                    let frac = v[j] - f;
                    if frac <= INT_TOL || frac >= 1.0 - INT_TOL {
                        continue;
                    }
                    (f as i64, frac)
                }
                Values::Exact(v) => {
                    if v[j].is_integer() {
                        continue;
                    }
                    let f = v[j].floor();
                    let frac = (&v[j] - &f).to_f64().unwrap_or(0.5);
                    (f.to_integer().to_i64().unwrap_or(node.lo[j]), frac)
                }
            };
            let floor = floor.clamp(node.lo[j], node.hi[j] - 1);
            let score = frac.min(1.0 - frac);
            let better = match &best {
                None => true,
                Some((p, s, _, _)) => self.priority[j] > *p || (self.priority[j] == *p && score > *s + 1e-12),
            };
            if better {
                best = Some((self.priority[j], score, j, floor));
            }
        }
        best.map(|(_, _, j, f)| (j, f))
    }

    /// Rounds the integer part of a float solution and solves for the continuous part exactly.
    fn complete_candidate(&mut self, x: &[f64]) -> Option<Vec<Rational>> {
        let mut node = Node {
            lo: self.root_lo.clone(),
            hi: self.root_hi.clone(),
        };
        for j in 0..self.n {
            if self.is_int[j] {
                let v = x[j].round() as i64;
                node.lo[j] = v;
                node.hi[j] = v;
            }
        }
        let red = self.reduce(&node)?;
        if red.cols.is_empty() {
            return Some(self.values_with(&node, &red, &[]));
        }
        let lp = self.exact_lp(&node, &red);
        self.stats.exact_lp_solves += 1;
        let res = solve_lp(&lp, 200 * (lp.ncols + lp.rows.len()) + 2000);
        (res.status == LpStatus::Optimal).then(|| self.values_with(&node, &red, &res.x))
    }
}

fn ceil_div(a: i128, b: i128) -> i128 {
    -Integer::div_floor(&(-a), &b)
}
