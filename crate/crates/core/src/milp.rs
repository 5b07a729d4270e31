//! Mixed-integer linear programs with exact integer data.
//!
//! All coefficients, bounds and right-hand sides are `i64`; objective values
//! are evaluated in `i128` so integral candidates are checked exactly.

use std::fmt;

use crate::error::{Error, Result};

pub type VarId = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub lower: i64,
    /// `None` is unbounded above.
    pub upper: Option<i64>,
    pub integral: bool,
}

/// Sparse linear expression `sum(coef * x[id]) + constant`.
///
/// Terms are kept sorted by id with no duplicates and no zero coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LinExpr {
    terms: Vec<(VarId, i64)>,
    pub constant: i64,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(c: i64) -> Self {
        LinExpr {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (VarId, i64)>, constant: i64) -> Self {
        let mut e = LinExpr {
            terms: terms.into_iter().collect(),
            constant,
        };
        e.normalize();
        e
    }

    pub fn add_term(&mut self, id: VarId, coef: i64) -> &mut Self {
        match self.terms.binary_search_by_key(&id, |t| t.0) {
            Ok(pos) => {
                self.terms[pos].1 += coef;
                if self.terms[pos].1 == 0 {
                    self.terms.remove(pos);
                }
            }
            Err(pos) => {
                if coef != 0 {
                    self.terms.insert(pos, (id, coef));
                }
            }
        }
        self
    }

    pub fn with(mut self, id: VarId, coef: i64) -> Self {
        self.add_term(id, coef);
        self
    }

    fn normalize(&mut self) {
        self.terms.sort_by_key(|t| t.0);
        let mut merged: Vec<(VarId, i64)> = Vec::with_capacity(self.terms.len());
        for &(id, c) in &self.terms {
            match merged.last_mut() {
                Some(last) if last.0 == id => last.1 += c,
                _ => merged.push((id, c)),
            }
        }
        merged.retain(|t| t.1 != 0);
        self.terms = merged;
    }

    pub fn terms(&self) -> &[(VarId, i64)] {
        &self.terms
    }

    pub fn coef(&self, id: VarId) -> i64 {
        self.terms
            .binary_search_by_key(&id, |t| t.0)
            .map(|pos| self.terms[pos].1)
            .unwrap_or(0)
    }

    /// Exact value at an integral point. Missing ids evaluate as zero.
    pub fn eval(&self, values: &[i64]) -> i128 {
        self.terms
            .iter()
            .map(|&(id, c)| c as i128 * values.get(id).copied().unwrap_or(0) as i128)
            .sum::<i128>()
            + self.constant as i128
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    pub fn holds(self, lhs: i128, rhs: i128) -> bool {
        match self {
            Relation::Le => lhs <= rhs,
            Relation::Eq => lhs == rhs,
            Relation::Ge => lhs >= rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }
}

/// `expr relation rhs`. The expression's constant is folded into `rhs` on
/// construction, so `expr.constant` is always zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub name: String,
    pub expr: LinExpr,
    pub relation: Relation,
    pub rhs: i64,
}

impl Constraint {
    pub fn new(name: impl Into<String>, mut expr: LinExpr, relation: Relation, rhs: i64) -> Self {
        let rhs = rhs - expr.constant;
        expr.constant = 0;
        Constraint {
            name: name.into(),
            expr,
            relation,
            rhs,
        }
    }

    pub fn holds(&self, values: &[i64]) -> bool {
        self.relation
            .holds(self.expr.eval(values), self.rhs as i128)
    }
}

/// A minimization problem.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MilpProblem {
    pub name: String,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: LinExpr,
}

impl MilpProblem {
    pub fn new(name: impl Into<String>) -> Self {
        MilpProblem {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        lower: i64,
        upper: Option<i64>,
        integral: bool,
    ) -> VarId {
        self.variables.push(Variable {
            name: name.into(),
            lower,
            upper,
            integral,
        });
        self.variables.len() - 1
    }

    pub fn add_constraint(&mut self, c: Constraint) {
        self.constraints.push(c);
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name)
    }

    /// Ids referenced by the objective or a constraint that do not exist.
    pub fn dangling_ids(&self) -> Vec<VarId> {
        let n = self.variables.len();
        let mut ids: Vec<VarId> = self
            .constraints
            .iter()
            .flat_map(|c| c.expr.terms().iter().map(|t| t.0))
            .chain(self.objective.terms().iter().map(|t| t.0))
            .filter(|&id| id >= n)
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn has_finite_bounds(&self) -> bool {
        self.variables.iter().all(|v| v.upper.is_some())
    }
}

impl fmt::Display for MilpProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::cli_io::export_lp(self))
    }
}

/// Integral value per variable id.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Assignment(pub Vec<i64>);

impl Assignment {
    pub fn zeros(n: usize) -> Self {
        Assignment(vec![0; n])
    }

    pub fn values(&self) -> &[i64] {
        &self.0
    }
}

fn check_len(problem: &MilpProblem, assignment: &Assignment) -> Result<()> {
    if assignment.0.len() != problem.variables.len() {
        return Err(Error::AssignmentLength {
            got: assignment.0.len(),
            want: problem.variables.len(),
        });
    }
    Ok(())
}

/// Objective value (same scaled units as the coefficients).
pub fn evaluate(problem: &MilpProblem, assignment: &Assignment) -> Result<i128> {
    check_len(problem, assignment)?;
    Ok(problem.objective.eval(&assignment.0))
}

/// Names of violated constraints, followed by `bounds[<var>]` entries for
/// variables outside their bounds. Empty means feasible.
pub fn check_feasible(problem: &MilpProblem, assignment: &Assignment) -> Vec<String> {
    if check_len(problem, assignment).is_err() {
        return vec!["assignment-length".to_string()];
    }
    let x = &assignment.0;
    let mut out: Vec<String> = problem
        .constraints
        .iter()
        .filter(|c| !c.holds(x))
        .map(|c| c.name.clone())
        .collect();
    for (v, &val) in problem.variables.iter().zip(x) {
        if val < v.lower || v.upper.is_some_and(|u| val > u) {
            out.push(format!("bounds[{}]", v.name));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_assignment_evaluates_to_constant() {
        let mut p = MilpProblem::new("t");
        let x = p.add_var("x", 0, Some(10), true);
        p.objective = LinExpr::new().with(x, 5);
        assert_eq!(evaluate(&p, &Assignment::zeros(1)).unwrap(), 0);
    }

    #[test]
    fn single_term_product() {
        let mut p = MilpProblem::new("t");
        let x = p.add_var("np[1]", 0, Some(800), true);
        p.objective = LinExpr::new().with(x, 6);
        assert_eq!(evaluate(&p, &Assignment(vec![800])).unwrap(), 4800);
    }

    #[test]
    fn missing_value_is_an_error() {
        let mut p = MilpProblem::new("t");
        p.add_var("x", 0, Some(1), true);
        p.add_var("y", 0, Some(1), true);
        assert!(matches!(
            evaluate(&p, &Assignment(vec![1])),
            Err(Error::AssignmentLength { got: 1, want: 2 })
        ));
    }

    #[test]
    fn normalization_merges_and_drops() {
        let e = LinExpr::from_terms([(3, 2), (1, 4), (3, -2), (1, 1)], 7);
        assert_eq!(e.terms(), &[(1, 5)]);
        let mut e = LinExpr::new();
        e.add_term(2, 1).add_term(0, 3).add_term(2, 4);
        assert_eq!(e.terms(), &[(0, 3), (2, 5)]);
    }

    #[test]
    fn constraint_constant_moves_to_rhs() {
        let c = Constraint::new("c", LinExpr::from_terms([(0, 1)], 5), Relation::Le, 8);
        assert_eq!(c.rhs, 3);
        assert_eq!(c.expr.constant, 0);
        assert!(c.holds(&[3]));
        assert!(!c.holds(&[4]));
    }

    #[test]
    fn feasibility_reports_names_and_bounds() {
        let mut p = MilpProblem::new("t");
        let s = p.add_var("Sp[1]", 0, Some(1000), true);
        let n = p.add_var("np[1]", 0, Some(2), true);
        p.add_constraint(Constraint::new(
            "C2[1]",
            LinExpr::new().with(s, 1).with(n, -300),
            Relation::Le,
            0,
        ));
        assert!(check_feasible(&p, &Assignment(vec![600, 2])).is_empty());
        assert_eq!(check_feasible(&p, &Assignment(vec![601, 2])), vec!["C2[1]"]);
        assert_eq!(
            check_feasible(&p, &Assignment(vec![0, 3])),
            vec!["bounds[np[1]]"]
        );
    }

    fn naive_eval(terms: &[(VarId, i64)], constant: i64, x: &[i64]) -> i128 {
        let mut total = constant as i128;
        for &(id, c) in terms {
            total += c as i128 * x[id] as i128;
        }
        total
    }

    proptest! {
        #[test]
        fn evaluation_is_affine(
            terms in prop::collection::vec((0usize..6, -1000i64..1000), 0..12),
            constant in -10_000i64..10_000,
            a in prop::collection::vec(-500i64..500, 6),
            b in prop::collection::vec(-500i64..500, 6),
        ) {
            let e = LinExpr::from_terms(terms.clone(), constant);
            let sum: Vec<i64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            prop_assert_eq!(e.eval(&sum), e.eval(&a) + e.eval(&b) - constant as i128);
            prop_assert_eq!(e.eval(&a), naive_eval(&terms, constant, &a));
        }

        #[test]
        fn feasible_means_every_row_holds(
            rows in prop::collection::vec(
                (prop::collection::vec((0usize..4, -5i64..5), 1..5), 0u8..3, -20i64..20),
                1..6),
            x in prop::collection::vec(-5i64..5, 4),
        ) {
            let mut p = MilpProblem::new("rand");
            for k in 0..4 {
                p.add_var(format!("x{k}"), -5, Some(5), true);
            }
            for (k, (terms, rel, rhs)) in rows.iter().enumerate() {
                let rel = [Relation::Le, Relation::Eq, Relation::Ge][*rel as usize];
                p.add_constraint(Constraint::new(
                    format!("r{k}"), LinExpr::from_terms(terms.clone(), 0), rel, *rhs));
            }
            let violated = check_feasible(&p, &Assignment(x.clone()));
            for (k, (terms, rel, rhs)) in rows.iter().enumerate() {
                let lhs = naive_eval(terms, 0, &x);
                let ok = match rel { 0 => lhs <= *rhs as i128, 1 => lhs == *rhs as i128, _ => lhs >= *rhs as i128 };
                prop_assert_eq!(ok, !violated.contains(&format!("r{k}")));
            }
        }
    }
}
