//! Two-phase primal simplex on a dense tableau with Bland's rule.
//!
//! Generic over the scalar field: exact rationals for correctness work and
//! `f64` (with a 1e-9 tolerance) for quick numeric cross-checks.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub trait Scalar:
    Clone
    + Debug
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(x: i64) -> Self;
    fn is_zero(&self) -> bool;
    fn is_pos(&self) -> bool;
    fn is_neg(&self) -> bool;
}

impl Scalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_i64(x: i64) -> Self {
        BigRational::from_integer(BigInt::from(x))
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_pos(&self) -> bool {
        Signed::is_positive(self)
    }
    fn is_neg(&self) -> bool {
        Signed::is_negative(self)
    }
}

pub const F64_TOLERANCE: f64 = 1e-9;

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_i64(x: i64) -> Self {
        x as f64
    }
    fn is_zero(&self) -> bool {
        self.abs() <= F64_TOLERANCE
    }
    fn is_pos(&self) -> bool {
        *self > F64_TOLERANCE
    }
    fn is_neg(&self) -> bool {
        *self < -F64_TOLERANCE
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint<S> {
    pub coeffs: Vec<(usize, S)>,
    pub sense: Sense,
    pub rhs: S,
}

/// `maximize objective · x` subject to the constraints and `x ≥ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram<S> {
    pub num_vars: usize,
    pub objective: Vec<S>,
    pub constraints: Vec<Constraint<S>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome<S> {
    Optimal { x: Vec<S>, objective: S },
    Infeasible,
    Unbounded,
}

impl<S: Scalar> LinearProgram<S> {
    pub fn new(num_vars: usize, objective: Vec<S>) -> Self {
        assert_eq!(objective.len(), num_vars);
        LinearProgram { num_vars, objective, constraints: Vec::new() }
    }

    pub fn add(&mut self, coeffs: Vec<(usize, S)>, sense: Sense, rhs: S) {
        debug_assert!(coeffs.iter().all(|(j, _)| *j < self.num_vars));
        self.constraints.push(Constraint { coeffs, sense, rhs });
    }

    /// Converts every coefficient with `f` (e.g. rationals to floats).
    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> LinearProgram<T> {
        LinearProgram {
            num_vars: self.num_vars,
            objective: self.objective.iter().map(&f).collect(),
            constraints: self
                .constraints
                .iter()
                .map(|c| Constraint {
                    coeffs: c.coeffs.iter().map(|(j, a)| (*j, f(a))).collect(),
                    sense: c.sense,
                    rhs: f(&c.rhs),
                })
                .collect(),
        }
    }
}

struct Tableau<S> {
    rows: Vec<Vec<S>>,
    /// Reduced costs; the last entry is the objective value.
    obj: Vec<S>,
    basis: Vec<usize>,
    cols: usize,
}

impl<S: Scalar> Tableau<S> {
    fn rhs(&self, i: usize) -> &S {
        &self.rows[i][self.cols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for x in self.rows[r].iter_mut() {
            *x = x.clone() / p.clone();
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (x, y) in row.iter_mut().zip(&pivot_row) {
                if !y.is_zero() {
                    *x = x.clone() - f.clone() * y.clone();
                }
            }
            row[c] = S::zero();
        }
        if !self.obj[c].is_zero() {
            let f = self.obj[c].clone();
            for (x, y) in self.obj.iter_mut().zip(&pivot_row) {
                if !y.is_zero() {
                    *x = x.clone() - f.clone() * y.clone();
                }
            }
            self.obj[c] = S::zero();
        }
        self.basis[r] = c;
    }

    /// Rebuilds the reduced-cost row for cost vector `c` over the current basis.
    fn set_objective(&mut self, cost: &[S]) {
        let mut obj: Vec<S> = cost.iter().map(|x| -x.clone()).collect();
        obj.push(S::zero());
        for (i, &b) in self.basis.iter().enumerate() {
            if cost[b].is_zero() {
                continue;
            }
            for (x, y) in obj.iter_mut().zip(&self.rows[i]) {
                *x = x.clone() + cost[b].clone() * y.clone();
            }
        }
        self.obj = obj;
    }

    /// Bland's rule: lowest-index improving column, ties in the ratio test
    /// broken by lowest basic variable index. Returns false if unbounded.
    fn optimize(&mut self, allowed: &[bool]) -> bool {
        loop {
            let Some(c) = (0..self.cols).find(|&j| allowed[j] && self.obj[j].is_neg()) else {
                return true;
            };
            let mut best: Option<(usize, S)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][c];
                if !a.is_pos() {
                    continue;
                }
                let ratio = self.rhs(i).clone() / a.clone();
                let better = match &best {
                    None => true,
                    Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, c),
                None => return false,
            }
        }
    }
}

pub fn solve<S: Scalar>(lp: &LinearProgram<S>) -> LpOutcome<S> {
    let n = lp.num_vars;
    let m = lp.constraints.len();
    let slack_count = lp.constraints.iter().filter(|c| c.sense != Sense::Eq).count();
    let art_count = lp
        .constraints
        .iter()
        .filter(|c| {
            let flipped = c.rhs.is_neg();
            match c.sense {
                Sense::Eq => true,
                Sense::Le => flipped,
                Sense::Ge => !flipped,
            }
        })
        .count();
    let cols = n + slack_count + art_count;
    let art_start = n + slack_count;

    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let (mut next_slack, mut next_art) = (n, art_start);
    for c in &lp.constraints {
        let mut row = vec![S::zero(); cols + 1];
        let flip = c.rhs.is_neg();
        let sign = |x: &S| if flip { -x.clone() } else { x.clone() };
        for (j, a) in &c.coeffs {
            row[*j] = row[*j].clone() + sign(a);
        }
        row[cols] = sign(&c.rhs);
        let sense = match (c.sense, flip) {
            (Sense::Le, true) => Sense::Ge,
            (Sense::Ge, true) => Sense::Le,
            (s, _) => s,
        };
        match sense {
            Sense::Le => {
                row[next_slack] = S::one();
                basis.push(next_slack);
                next_slack += 1;
            }
            Sense::Ge => {
                row[next_slack] = -S::one();
                next_slack += 1;
                row[next_art] = S::one();
                basis.push(next_art);
                next_art += 1;
            }
            Sense::Eq => {
                row[next_art] = S::one();
                basis.push(next_art);
                next_art += 1;
            }
        }
        rows.push(row);
    }

    let mut t = Tableau { rows, obj: Vec::new(), basis, cols };
    let all = vec![true; cols];

    if art_count > 0 {
        let phase1: Vec<S> = (0..cols).map(|j| if j >= art_start { -S::one() } else { S::zero() }).collect();
        t.set_objective(&phase1);
        t.optimize(&all);
        if t.obj[cols].is_neg() {
            return LpOutcome::Infeasible;
        }
        // drive zero-level artificials out of the basis, dropping redundant rows
        let mut i = 0;
        while i < t.rows.len() {
            if t.basis[i] >= art_start {
                match (0..art_start).find(|&j| !t.rows[i][j].is_zero()) {
                    Some(j) => t.pivot(i, j),
                    None => {
                        t.rows.remove(i);
                        t.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }

    let mut cost = lp.objective.clone();
    cost.resize(cols, S::zero());
    t.set_objective(&cost);
    let allowed: Vec<bool> = (0..cols).map(|j| j < art_start).collect();
    if !t.optimize(&allowed) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![S::zero(); n];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < n {
            x[b] = t.rhs(i).clone();
        }
    }
    let objective = t.obj[cols].clone();
    LpOutcome::Optimal { x, objective }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn qi(n: i64) -> BigRational {
        q(n, 1)
    }

    #[test]
    fn textbook_maximum() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), 36
        let mut lp = LinearProgram::new(2, vec![qi(3), qi(5)]);
        lp.add(vec![(0, qi(1))], Sense::Le, qi(4));
        lp.add(vec![(1, qi(2))], Sense::Le, qi(12));
        lp.add(vec![(0, qi(3)), (1, qi(2))], Sense::Le, qi(18));
        assert_eq!(solve(&lp), LpOutcome::Optimal { x: vec![qi(2), qi(6)], objective: qi(36) });
    }

    #[test]
    fn fractional_vertex_is_exact() {
        // max x + y, x + 2y ≤ 1, 2x + y ≤ 1 → (1/3, 1/3)
        let mut lp = LinearProgram::new(2, vec![qi(1), qi(1)]);
        lp.add(vec![(0, qi(1)), (1, qi(2))], Sense::Le, qi(1));
        lp.add(vec![(0, qi(2)), (1, qi(1))], Sense::Le, qi(1));
        assert_eq!(solve(&lp), LpOutcome::Optimal { x: vec![q(1, 3), q(1, 3)], objective: q(2, 3) });
    }

    #[test]
    fn ge_and_eq_rows() {
        // max -x - y, x + y ≥ 2, x - y = 1 → (3/2, 1/2)
        let mut lp = LinearProgram::new(2, vec![qi(-1), qi(-1)]);
        lp.add(vec![(0, qi(1)), (1, qi(1))], Sense::Ge, qi(2));
        lp.add(vec![(0, qi(1)), (1, qi(-1))], Sense::Eq, qi(1));
        assert_eq!(solve(&lp), LpOutcome::Optimal { x: vec![q(3, 2), q(1, 2)], objective: qi(-2) });
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(1, vec![qi(1)]);
        lp.add(vec![(0, qi(1))], Sense::Le, qi(1));
        lp.add(vec![(0, qi(1))], Sense::Ge, qi(2));
        assert_eq!(solve(&lp), LpOutcome::Infeasible);

        let empty_row = {
            let mut lp = LinearProgram::new(1, vec![qi(1)]);
            lp.add(vec![], Sense::Ge, qi(1));
            lp
        };
        assert_eq!(solve(&empty_row), LpOutcome::Infeasible);

        let mut unb = LinearProgram::new(1, vec![qi(1)]);
        unb.add(vec![(0, qi(1))], Sense::Ge, qi(0));
        assert_eq!(solve(&unb), LpOutcome::Unbounded);
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(2, vec![qi(1), qi(0)]);
        lp.add(vec![(0, qi(1)), (1, qi(1))], Sense::Eq, qi(1));
        lp.add(vec![(0, qi(2)), (1, qi(2))], Sense::Eq, qi(2));
        assert_eq!(solve(&lp), LpOutcome::Optimal { x: vec![qi(1), qi(0)], objective: qi(1) });
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's example cycles under the largest-coefficient rule.
        let mut lp = LinearProgram::new(4, vec![q(3, 4), qi(-150), q(1, 50), qi(-6)]);
        lp.add(vec![(0, q(1, 4)), (1, qi(-60)), (2, q(-1, 25)), (3, qi(9))], Sense::Le, qi(0));
        lp.add(vec![(0, q(1, 2)), (1, qi(-90)), (2, q(-1, 50)), (3, qi(3))], Sense::Le, qi(0));
        lp.add(vec![(2, qi(1))], Sense::Le, qi(1));
        match solve(&lp) {
            LpOutcome::Optimal { objective, .. } => assert_eq!(objective, q(1, 20)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn float_mode_agrees() {
        let mut lp = LinearProgram::new(2, vec![qi(1), qi(1)]);
        lp.add(vec![(0, qi(1)), (1, qi(2))], Sense::Le, qi(1));
        lp.add(vec![(0, qi(2)), (1, qi(1))], Sense::Le, qi(1));
        let f = lp.map(|x| {
            use num_traits::ToPrimitive;
            x.to_f64().unwrap()
        });
        match solve(&f) {
            LpOutcome::Optimal { objective, .. } => assert!((objective - 2.0 / 3.0).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
    }
}
