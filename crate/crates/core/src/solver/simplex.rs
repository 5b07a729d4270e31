//! Bounded-variable primal simplex over exact rationals.
//!
//! Every row gets a slack (`a x + s = b`); rows whose slack cannot start
//! within its bounds get an artificial column for phase one. Pricing is
//! Dantzig's rule, falling back to Bland's rule after a run of degenerate
//! pivots.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::milp::{MilpProblem, Relation};

pub type Rational = BigRational;

const DEGENERATE_RUN_LIMIT: usize = 25;
const ITERATION_LIMIT: usize = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Iteration limit reached; should not happen with exact arithmetic.
    Failed,
}

#[derive(Clone, Debug)]
pub struct LpResult {
    pub status: LpStatus,
    /// Structural variable values (empty unless optimal).
    pub values: Vec<Rational>,
    /// Objective including its constant (zero unless optimal).
    pub objective: Rational,
    pub iterations: usize,
}

impl LpResult {
    fn without_solution(status: LpStatus, iterations: usize) -> Self {
        LpResult {
            status,
            values: Vec::new(),
            objective: Rational::zero(),
            iterations,
        }
    }
}

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn int128(v: i128) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Solves the LP relaxation of `problem` with its own variable bounds.
pub fn solve_lp(problem: &MilpProblem) -> LpResult {
    let lower: Vec<i64> = problem.variables.iter().map(|v| v.lower).collect();
    let upper: Vec<Option<i64>> = problem.variables.iter().map(|v| v.upper).collect();
    solve_lp_with_bounds(problem, &lower, &upper)
}

/// Solves the relaxation with `lower`/`upper` replacing the variable bounds.
/// Structural variables must be bounded below.
pub fn solve_lp_with_bounds(
    problem: &MilpProblem,
    lower: &[i64],
    upper: &[Option<i64>],
) -> LpResult {
    if lower
        .iter()
        .zip(upper)
        .any(|(l, u)| u.is_some_and(|u| u < *l))
    {
        return LpResult::without_solution(LpStatus::Infeasible, 0);
    }
    let mut t = Tableau::new(problem, lower, upper);
    t.solve()
}

struct Tableau {
    n_struct: usize,
    /// rows x columns, B^-1 [A | I | art].
    rows: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    x: Vec<Rational>,
    lower: Vec<Option<Rational>>,
    upper: Vec<Option<Rational>>,
    cost: Vec<Rational>,
    artificial_start: usize,
    objective_constant: Rational,
    iterations: usize,
}

impl Tableau {
    fn new(problem: &MilpProblem, lo: &[i64], up: &[Option<i64>]) -> Self {
        let n = problem.variables.len();
        let m = problem.constraints.len();

        let mut x: Vec<Rational> = lo.iter().map(|&l| int(l)).collect();
        let mut lower: Vec<Option<Rational>> = lo.iter().map(|&l| Some(int(l))).collect();
        let mut upper: Vec<Option<Rational>> = up.iter().map(|u| u.map(int)).collect();

        // Residual of each row with structurals at their lower bounds.
        let mut residual = Vec::with_capacity(m);
        for c in &problem.constraints {
            let ax: i128 = c
                .expr
                .terms()
                .iter()
                .map(|&(id, a)| a as i128 * lo[id] as i128)
                .sum();
            residual.push(c.rhs as i128 - ax);
        }

        // Slacks.
        let mut needs_art = Vec::new();
        for (i, c) in problem.constraints.iter().enumerate() {
            let (sl, su) = match c.relation {
                Relation::Le => (Some(Rational::zero()), None),
                Relation::Ge => (None, Some(Rational::zero())),
                Relation::Eq => (Some(Rational::zero()), Some(Rational::zero())),
            };
            let r = residual[i];
            let fits = match c.relation {
                Relation::Le => r >= 0,
                Relation::Ge => r <= 0,
                Relation::Eq => r == 0,
            };
            lower.push(sl);
            upper.push(su);
            if fits {
                x.push(int128(r));
            } else {
                x.push(Rational::zero());
                needs_art.push(i);
            }
        }
        let artificial_start = n + m;
        let width = artificial_start + needs_art.len();

        let mut rows = vec![vec![Rational::zero(); width]; m];
        for (i, c) in problem.constraints.iter().enumerate() {
            for &(id, a) in c.expr.terms() {
                rows[i][id] = int(a);
            }
            rows[i][n + i] = Rational::one();
        }
        let mut basis: Vec<usize> = (n..n + m).collect();
        for (k, &i) in needs_art.iter().enumerate() {
            let col = artificial_start + k;
            let r = residual[i];
            // a x + s + sign * art = b with art = |r| >= 0
            rows[i][col] = if r >= 0 {
                Rational::one()
            } else {
                -Rational::one()
            };
            x.push(int128(r.abs()));
            lower.push(Some(Rational::zero()));
            upper.push(None);
            // Make the artificial basic in row i: scale the row so its
            // coefficient is +1.
            if r < 0 {
                for v in rows[i].iter_mut() {
                    *v = -v.clone();
                }
            }
            basis[i] = col;
        }
        let mut is_basic = vec![false; width];
        for &b in &basis {
            is_basic[b] = true;
        }

        let mut cost = vec![Rational::zero(); width];
        for &(id, c) in problem.objective.terms() {
            cost[id] = int(c);
        }

        Tableau {
            n_struct: n,
            rows,
            basis,
            is_basic,
            x,
            lower,
            upper,
            cost,
            artificial_start,
            objective_constant: int(problem.objective.constant),
            iterations: 0,
        }
    }

    fn width(&self) -> usize {
        self.x.len()
    }

    fn reduced_costs(&self, cost: &[Rational]) -> Vec<Rational> {
        let mut d = cost.to_vec();
        for (i, row) in self.rows.iter().enumerate() {
            let cb = &cost[self.basis[i]];
            if cb.is_zero() {
                continue;
            }
            for (dj, a) in d.iter_mut().zip(row) {
                if !a.is_zero() {
                    *dj -= cb * a;
                }
            }
        }
        d
    }

    fn solve(&mut self) -> LpResult {
        let width = self.width();
        if width > self.artificial_start {
            let mut phase1 = vec![Rational::zero(); width];
            for c in phase1.iter_mut().skip(self.artificial_start) {
                *c = Rational::one();
            }
            match self.run(&phase1) {
                LpStatus::Optimal => {}
                other => return LpResult::without_solution(other, self.iterations),
            }
            let infeas: Rational = self.x[self.artificial_start..].iter().sum();
            if infeas.is_positive() {
                return LpResult::without_solution(LpStatus::Infeasible, self.iterations);
            }
            for k in self.artificial_start..width {
                self.upper[k] = Some(Rational::zero());
            }
            self.drive_out_artificials();
        }
        let cost = self.cost.clone();
        let status = self.run(&cost);
        if status != LpStatus::Optimal {
            return LpResult::without_solution(status, self.iterations);
        }
        let values: Vec<Rational> = self.x[..self.n_struct].to_vec();
        let objective = values
            .iter()
            .zip(&self.cost)
            .filter(|(_, c)| !c.is_zero())
            .map(|(v, c)| v * c)
            .sum::<Rational>()
            + &self.objective_constant;
        LpResult {
            status,
            values,
            objective,
            iterations: self.iterations,
        }
    }

    /// Replaces zero-valued basic artificials with non-artificial columns
    /// where the row allows it.
    fn drive_out_artificials(&mut self) {
        for r in 0..self.rows.len() {
            if self.basis[r] < self.artificial_start {
                continue;
            }
            let col = (0..self.artificial_start)
                .find(|&j| !self.is_basic[j] && !self.rows[r][j].is_zero());
            if let Some(j) = col {
                self.pivot(r, j);
            }
        }
    }

    fn is_fixed(&self, j: usize) -> bool {
        matches!((&self.lower[j], &self.upper[j]), (Some(l), Some(u)) if l == u)
    }

    fn can_increase(&self, j: usize) -> bool {
        self.upper[j].as_ref().is_none_or(|u| &self.x[j] < u)
    }

    fn can_decrease(&self, j: usize) -> bool {
        self.lower[j].as_ref().is_none_or(|l| &self.x[j] > l)
    }

    fn run(&mut self, cost: &[Rational]) -> LpStatus {
        let mut d = self.reduced_costs(cost);
        let mut bland = false;
        let mut degenerate_run = 0;
        loop {
            if self.iterations >= ITERATION_LIMIT {
                return LpStatus::Failed;
            }
            // Entering column and direction (+1 increase, -1 decrease).
            let mut entering: Option<(usize, bool)> = None;
            let mut best = Rational::zero();
            for j in 0..self.width() {
                if self.is_basic[j] || self.is_fixed(j) {
                    continue;
                }
                let dj = &d[j];
                let dir_up = if dj.is_negative() && self.can_increase(j) {
                    true
                } else if dj.is_positive() && self.can_decrease(j) {
                    false
                } else {
                    continue;
                };
                if bland {
                    entering = Some((j, dir_up));
                    break;
                }
                let mag = dj.abs();
                if entering.is_none() || mag > best {
                    best = mag;
                    entering = Some((j, dir_up));
                }
            }
            let Some((j, up)) = entering else {
                return LpStatus::Optimal;
            };

            // Ratio test; ties go to the lowest variable index.
            let mut step: Option<(Rational, usize, Option<usize>)> = None; // (theta, var, row)
            if let (Some(l), Some(u)) = (&self.lower[j], &self.upper[j]) {
                step = Some((u - l, j, None));
            }
            for (r, row) in self.rows.iter().enumerate() {
                let alpha = &row[j];
                if alpha.is_zero() {
                    continue;
                }
                let b = self.basis[r];
                // d x_b / d theta = -alpha * dir
                let rate_neg = if up {
                    alpha.is_positive()
                } else {
                    alpha.is_negative()
                };
                let limit = if rate_neg {
                    self.lower[b]
                        .as_ref()
                        .map(|l| (&self.x[b] - l) / alpha.abs())
                } else {
                    self.upper[b]
                        .as_ref()
                        .map(|u| (u - &self.x[b]) / alpha.abs())
                };
                if let Some(theta) = limit {
                    let better = match &step {
                        None => true,
                        Some((t, var, _)) => theta < *t || (theta == *t && b < *var),
                    };
                    if better {
                        step = Some((theta, b, Some(r)));
                    }
                }
            }
            let Some((theta, _, row)) = step else {
                return LpStatus::Unbounded;
            };
            self.iterations += 1;

            if theta.is_zero() {
                degenerate_run += 1;
                if degenerate_run > DEGENERATE_RUN_LIMIT {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }

            // Move the entering variable and update basic values.
            if !theta.is_zero() {
                let delta = if up { theta.clone() } else { -theta.clone() };
                self.x[j] += &delta;
                for r in 0..self.rows.len() {
                    let alpha = &self.rows[r][j];
                    if !alpha.is_zero() {
                        let b = self.basis[r];
                        let change = alpha * &delta;
                        self.x[b] -= change;
                    }
                }
            }

            if let Some(r) = row {
                let leaving = self.basis[r];
                // Snap the leaving variable onto the bound it reached.
                let alpha = &self.rows[r][j];
                let rate_neg = if up {
                    alpha.is_positive()
                } else {
                    alpha.is_negative()
                };
                let bound = if rate_neg {
                    self.lower[leaving].clone()
                } else {
                    self.upper[leaving].clone()
                };
                if let Some(v) = bound {
                    self.x[leaving] = v;
                }
                self.pivot(r, j);
                // Update reduced costs with the new pivot row.
                let dj = d[j].clone();
                if !dj.is_zero() {
                    for (dk, a) in d.iter_mut().zip(&self.rows[r]) {
                        if !a.is_zero() {
                            *dk -= &dj * a;
                        }
                    }
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let piv = self.rows[r][j].clone();
        if !piv.is_one() {
            let inv = piv.recip();
            for v in self.rows[r].iter_mut() {
                if !v.is_zero() {
                    *v *= &inv;
                }
            }
        }
        let pivot_row = std::mem::take(&mut self.rows[r]);
        let nz: Vec<usize> = (0..pivot_row.len())
            .filter(|&k| !pivot_row[k].is_zero())
            .collect();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[j].clone();
            if f.is_zero() {
                continue;
            }
            for &k in &nz {
                let delta = &f * &pivot_row[k];
                row[k] -= delta;
            }
        }
        self.rows[r] = pivot_row;
        let leaving = self.basis[r];
        self.is_basic[leaving] = false;
        self.is_basic[j] = true;
        self.basis[r] = j;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{Constraint, LinExpr};

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y st x <= 4, 2y <= 12, 3x + 2y <= 18  -> (2, 6), 36
        let mut p = MilpProblem::new("t");
        let x = p.add_var("x", 0, Some(100), false);
        let y = p.add_var("y", 0, Some(100), false);
        p.objective = LinExpr::new().with(x, -3).with(y, -5);
        p.add_constraint(Constraint::new(
            "a",
            LinExpr::new().with(x, 1),
            Relation::Le,
            4,
        ));
        p.add_constraint(Constraint::new(
            "b",
            LinExpr::new().with(y, 2),
            Relation::Le,
            12,
        ));
        p.add_constraint(Constraint::new(
            "c",
            LinExpr::new().with(x, 3).with(y, 2),
            Relation::Le,
            18,
        ));
        let r = solve_lp(&p);
        assert_eq!(r.status, LpStatus::Optimal);
        assert_eq!(r.objective, int(-36));
        assert_eq!(r.values, vec![int(2), int(6)]);
    }

    #[test]
    fn equality_and_ge_rows_need_phase_one() {
        // min x + 2y st x + y = 10, x >= 3 (row), x <= 8 (bound)
        let mut p = MilpProblem::new("t");
        let x = p.add_var("x", 0, Some(8), false);
        let y = p.add_var("y", 0, Some(20), false);
        p.objective = LinExpr::new().with(x, 1).with(y, 2);
        p.add_constraint(Constraint::new(
            "sum",
            LinExpr::new().with(x, 1).with(y, 1),
            Relation::Eq,
            10,
        ));
        p.add_constraint(Constraint::new(
            "min",
            LinExpr::new().with(x, 1),
            Relation::Ge,
            3,
        ));
        let r = solve_lp(&p);
        assert_eq!(r.status, LpStatus::Optimal);
        assert_eq!(r.values, vec![int(8), int(2)]);
        assert_eq!(r.objective, int(12));
    }

    #[test]
    fn fractional_capacity() {
        // min 6 n st S <= 300 n, S = 450 -> n = 3/2, objective 9
        let mut p = MilpProblem::new("t");
        let n = p.add_var("n", 0, Some(800), true);
        let s = p.add_var("S", 0, Some(450), true);
        p.objective = LinExpr::new().with(n, 6);
        p.add_constraint(Constraint::new(
            "cap",
            LinExpr::new().with(s, 1).with(n, -300),
            Relation::Le,
            0,
        ));
        p.add_constraint(Constraint::new(
            "dem",
            LinExpr::new().with(s, 1),
            Relation::Eq,
            450,
        ));
        let r = solve_lp(&p);
        assert_eq!(r.status, LpStatus::Optimal);
        assert_eq!(r.values[0], q(3, 2));
        assert_eq!(r.objective, int(9));
    }

    #[test]
    fn infeasible_rows() {
        let mut p = MilpProblem::new("t");
        let x = p.add_var("x", 0, Some(5), false);
        p.add_constraint(Constraint::new(
            "big",
            LinExpr::new().with(x, 1),
            Relation::Ge,
            6,
        ));
        assert_eq!(solve_lp(&p).status, LpStatus::Infeasible);
        let r = solve_lp_with_bounds(&p, &[3], &[Some(2)]);
        assert_eq!(r.status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_direction() {
        let mut p = MilpProblem::new("t");
        let x = p.add_var("x", 0, None, false);
        p.objective = LinExpr::new().with(x, -1);
        assert_eq!(solve_lp(&p).status, LpStatus::Unbounded);
    }

    #[test]
    fn empty_problem_is_constant() {
        let mut p = MilpProblem::new("t");
        p.objective = LinExpr::constant(42);
        let r = solve_lp(&p);
        assert_eq!(r.status, LpStatus::Optimal);
        assert_eq!(r.objective, int(42));
    }
}
