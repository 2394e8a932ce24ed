//! Dense bounded-variable primal simplex, generic over the scalar field.
//!
//! The same code runs in `f64` (fast relaxations inside branch-and-bound) and in
//! exact rationals (fallback whenever a floating-point answer cannot be certified).
//!
//! Rows are `lo_i <= Σ_j a_ij x_j <= hi_i`. Each row gets a logical variable
//! `r_i = Σ_j a_ij x_j` carrying the row bounds, so the tableau starts from the
//! all-logical basis. Phase one minimizes the sum of bound violations of the basic
//! variables; phase two minimizes the objective.

use std::fmt::Debug;

use num_traits::{Signed, Zero};

use crate::Rational;

pub(crate) trait Scalar: Clone + Debug {
    const EXACT: bool;
    fn zero() -> Self;
    fn one() -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn abs_gt(&self, o: &Self) -> bool;
    /// Strictly positive beyond the pivot tolerance.
    fn is_pos(&self) -> bool;
    fn is_neg(&self) -> bool;
    fn is_nonzero(&self) -> bool {
        self.is_pos() || self.is_neg()
    }
    /// `self < bound` beyond the feasibility tolerance.
    fn below(&self, bound: &Self) -> bool;
    fn above(&self, bound: &Self) -> bool;
    fn lt(&self, o: &Self) -> bool;
    fn is_exact_zero(&self) -> bool;
}

const PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;

impl Scalar for f64 {
    const EXACT: bool = false;
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn abs_gt(&self, o: &Self) -> bool {
        self.abs() > o.abs()
    }
    fn is_pos(&self) -> bool {
        *self > PIVOT_TOL
    }
    fn is_neg(&self) -> bool {
        *self < -PIVOT_TOL
    }
    fn below(&self, bound: &Self) -> bool {
        *self < bound - FEAS_TOL * (1.0 + bound.abs())
    }
    fn above(&self, bound: &Self) -> bool {
        *self > bound + FEAS_TOL * (1.0 + bound.abs())
    }
    fn lt(&self, o: &Self) -> bool {
        self < o
    }
    fn is_exact_zero(&self) -> bool {
        *self == 0.0
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        num_traits::One::one()
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn abs_gt(&self, o: &Self) -> bool {
        self.abs() > o.abs()
    }
    fn is_pos(&self) -> bool {
        self.is_positive()
    }
    fn is_neg(&self) -> bool {
        self.is_negative()
    }
    fn below(&self, bound: &Self) -> bool {
        self < bound
    }
    fn above(&self, bound: &Self) -> bool {
        self > bound
    }
    fn lt(&self, o: &Self) -> bool {
        self < o
    }
    fn is_exact_zero(&self) -> bool {
        Zero::is_zero(self)
    }
}

/// A linear program in row-bound form.
#[derive(Debug, Clone)]
pub(crate) struct LpData<S> {
    pub ncols: usize,
    pub rows: Vec<Vec<(usize, S)>>,
    pub row_lo: Vec<Option<S>>,
    pub row_hi: Vec<Option<S>>,
    pub col_lo: Vec<Option<S>>,
    pub col_hi: Vec<Option<S>>,
    pub cost: Vec<S>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub(crate) struct LpResult<S> {
    pub status: LpStatus,
    /// Values of the structural columns.
    pub x: Vec<S>,
    /// Row multipliers of the final phase (phase one when infeasible).
    pub duals: Vec<S>,
    pub objective: S,
}

struct Tableau<S> {
    n: usize,
    m: usize,
    tab: Vec<Vec<S>>,
    basis: Vec<usize>,
    basic_row: Vec<Option<usize>>,
    lo: Vec<Option<S>>,
    hi: Vec<Option<S>>,
    x: Vec<S>,
}

impl<S: Scalar> Tableau<S> {
    fn new(lp: &LpData<S>) -> Self {
        let n = lp.ncols;
        let m = lp.rows.len();
        let nt = n + m;
        let mut tab = vec![vec![S::zero(); nt]; m];
        for (i, row) in lp.rows.iter().enumerate() {
            for (j, a) in row {
                tab[i][*j] = tab[i][*j].sub(a);
            }
            tab[i][n + i] = S::one();
        }
        let mut lo = lp.col_lo.clone();
        lo.extend(lp.row_lo.iter().cloned());
        let mut hi = lp.col_hi.clone();
        hi.extend(lp.row_hi.iter().cloned());
        let mut x = vec![S::zero(); nt];
        for j in 0..n {
            x[j] = match (&lo[j], &hi[j]) {
                (Some(l), _) => l.clone(),
                (None, Some(h)) => h.clone(),
                (None, None) => S::zero(),
            };
        }
        let basis: Vec<usize> = (n..nt).collect();
        let mut basic_row = vec![None; nt];
        for (i, b) in basis.iter().enumerate() {
            basic_row[*b] = Some(i);
        }
        let mut t = Tableau {
            n,
            m,
            tab,
            basis,
            basic_row,
            lo,
            hi,
            x,
        };
        t.recompute_basics();
        t
    }

    fn recompute_basics(&mut self) {
        let nt = self.n + self.m;
        for i in 0..self.m {
            let mut v = S::zero();
            for j in 0..nt {
                if self.basic_row[j].is_none() && !self.x[j].is_exact_zero() && !self.tab[i][j].is_exact_zero() {
                    v = v.sub(&self.tab[i][j].mul(&self.x[j]));
                }
            }
            let b = self.basis[i];
            self.x[b] = v;
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let piv = self.tab[r][q].clone();
        for v in self.tab[r].iter_mut() {
            if !v.is_exact_zero() {
                *v = v.div(&piv);
            }
        }
        let pivot_row = self.tab[r].clone();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.tab[i][q].clone();
            if f.is_exact_zero() {
                continue;
            }
            for (j, pv) in pivot_row.iter().enumerate() {
                if !pv.is_exact_zero() {
                    self.tab[i][j] = self.tab[i][j].sub(&f.mul(pv));
                }
            }
            self.tab[i][q] = S::zero();
        }
        let old = self.basis[r];
        self.basic_row[old] = None;
        self.basis[r] = q;
        self.basic_row[q] = Some(r);
    }

    fn can_increase(&self, j: usize) -> bool {
        match &self.hi[j] {
            Some(h) => self.x[j].below(h),
            None => true,
        }
    }

    fn can_decrease(&self, j: usize) -> bool {
        match &self.lo[j] {
            Some(l) => self.x[j].above(l),
            None => true,
        }
    }
}

pub(crate) fn solve_lp<S: Scalar>(lp: &LpData<S>, max_iter: usize) -> LpResult<S> {
    let empty_box = |lo: &[Option<S>], hi: &[Option<S>]| {
        lo.iter().zip(hi).any(|(l, h)| matches!((l, h), (Some(l), Some(h)) if h.lt(l)))
    };
    if empty_box(&lp.col_lo, &lp.col_hi) || empty_box(&lp.row_lo, &lp.row_hi) {
        return LpResult {
            status: LpStatus::Infeasible,
            x: vec![S::zero(); lp.ncols],
            duals: vec![S::zero(); lp.rows.len()],
            objective: S::zero(),
        };
    }
    let mut t = Tableau::new(lp);
    let n = t.n;
    let m = t.m;
    let nt = n + m;
    let mut full_cost = lp.cost.clone();
    full_cost.extend((0..m).map(|_| S::zero()));
    let mut degenerate_run = 0usize;

    for _ in 0..max_iter {
        // phase selection from the current basic values
        let mut cost = vec![S::zero(); nt];
        let mut phase_one = false;
        for i in 0..m {
            let b = t.basis[i];
            if t.lo[b].as_ref().is_some_and(|l| t.x[b].below(l)) {
                cost[b] = S::one().neg();
                phase_one = true;
            } else if t.hi[b].as_ref().is_some_and(|h| t.x[b].above(h)) {
                cost[b] = S::one();
                phase_one = true;
            }
        }
        if !phase_one {
            cost = full_cost.clone();
        }
        let cb: Vec<S> = t.basis.iter().map(|b| cost[*b].clone()).collect();

        let use_bland = S::EXACT || degenerate_run > 50;
        let mut entering: Option<(usize, i8, S)> = None;
        for j in 0..nt {
            if t.basic_row[j].is_some() {
                continue;
            }
            let mut d = cost[j].clone();
            for i in 0..m {
                if cb[i].is_nonzero() && t.tab[i][j].is_nonzero() {
                    d = d.sub(&cb[i].mul(&t.tab[i][j]));
                }
            }
            let dir = if d.is_neg() && t.can_increase(j) {
                1
            } else if d.is_pos() && t.can_decrease(j) {
                -1
            } else {
                continue;
            };
            match &entering {
                None => entering = Some((j, dir, d)),
                Some((_, _, best)) if !use_bland && d.abs_gt(best) => entering = Some((j, dir, d)),
                _ => {}
            }
            if use_bland && entering.is_some() {
                break;
            }
        }

        let Some((q, dir, _)) = entering else {
            let duals = (0..m)
                .map(|i| {
                    let mut p = S::zero();
                    for k in 0..m {
                        if cb[k].is_nonzero() && t.tab[k][n + i].is_nonzero() {
                            p = p.add(&cb[k].mul(&t.tab[k][n + i]));
                        }
                    }
                    p
                })
                .collect();
            let x: Vec<S> = t.x[..n].to_vec();
            let objective = x
                .iter()
                .zip(&lp.cost)
                .fold(S::zero(), |acc, (xi, ci)| acc.add(&xi.mul(ci)));
            return LpResult {
                status: if phase_one { LpStatus::Infeasible } else { LpStatus::Optimal },
                x,
                duals,
                objective,
            };
        };

        // ratio test
        let mut step: Option<S> = match (&t.lo[q], &t.hi[q]) {
            (Some(l), Some(h)) => Some(h.sub(l)),
            _ => None,
        };
        let mut leave: Option<(usize, S)> = None;
        let mut leave_alpha = S::zero();
        for i in 0..m {
            let coef = &t.tab[i][q];
            if !coef.is_nonzero() {
                continue;
            }
            let alpha = if dir > 0 { coef.neg() } else { coef.clone() };
            let b = t.basis[i];
            let v = &t.x[b];
            let target = if alpha.is_pos() {
                if t.lo[b].as_ref().is_some_and(|l| v.below(l)) {
                    t.lo[b].clone()
                } else if t.hi[b].as_ref().is_some_and(|h| v.above(h)) {
                    None
                } else {
                    t.hi[b].clone()
                }
            } else if t.hi[b].as_ref().is_some_and(|h| v.above(h)) {
                t.hi[b].clone()
            } else if t.lo[b].as_ref().is_some_and(|l| v.below(l)) {
                None
            } else {
                t.lo[b].clone()
            };
            let Some(target) = target else { continue };
            let mut ratio = target.sub(v).div(&alpha);
            if ratio.is_neg() || (!S::EXACT && ratio.lt(&S::zero())) {
                ratio = S::zero();
            }
            let better = match &step {
                None => true,
                Some(s) => {
                    if ratio.lt(s) {
                        true
                    } else if !s.lt(&ratio) && leave.is_some() {
                        // tie: exact mode keeps Bland's smallest index, float prefers the larger pivot
                        if S::EXACT {
                            leave.as_ref().is_some_and(|(r, _)| b < t.basis[*r])
                        } else {
                            alpha.abs_gt(&leave_alpha)
                        }
                    } else {
                        false
                    }
                }
            };
            if better {
                step = Some(ratio);
                leave = Some((i, target));
                leave_alpha = alpha;
            }
        }

        let Some(step) = step else {
            return LpResult {
                status: if phase_one { LpStatus::IterationLimit } else { LpStatus::Unbounded },
                x: t.x[..n].to_vec(),
                duals: vec![S::zero(); m],
                objective: S::zero(),
            };
        };
        if step.is_pos() {
            degenerate_run = 0;
        } else {
            degenerate_run += 1;
        }

        let delta = if dir > 0 { step.clone() } else { step.neg() };
        match leave {
            Some((r, target)) => {
                let b = t.basis[r];
                t.x[q] = t.x[q].add(&delta);
                t.pivot(r, q);
                t.x[b] = target;
            }
            None => {
                // bound flip
                t.x[q] = if dir > 0 {
                    t.hi[q].clone().expect("flip needs both bounds")
                } else {
                    t.lo[q].clone().expect("flip needs both bounds")
                };
            }
        }
        t.recompute_basics();
    }

    LpResult {
        status: LpStatus::IterationLimit,
        x: t.x[..n].to_vec(),
        duals: vec![S::zero(); m],
        objective: S::zero(),
    }
}
