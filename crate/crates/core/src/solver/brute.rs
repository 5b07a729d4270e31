//! Exhaustive enumeration over integral points, for cross-checking the
//! branch-and-bound solver on tiny instances.
//!
//! Variables whose objective coefficient is non-negative and which only
//! loosen inequality rows when increased (server counts, for instance) are
//! not enumerated: at any fixed setting of the other variables their
//! cheapest feasible value is the smallest one the rows allow. Everything
//! else is enumerated value by value, with interval propagation discarding
//! infeasible subtrees and a per-variable lower bound on the objective
//! discarding subtrees that cannot beat the best point found so far.

use crate::error::{Error, Result};
use crate::milp::{check_feasible, evaluate, Assignment, MilpProblem, Relation};

/// Enumerated variables after fixing.
pub const MAX_ENUMERATED: usize = 12;
/// Largest domain width of an enumerated variable (values 0..=60).
pub const MAX_DOMAIN: i64 = 60;

fn floor_div(a: i128, b: i128) -> i128 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn ceil_div(a: i128, b: i128) -> i128 {
    -floor_div(-a, b)
}

#[derive(Clone)]
struct Domains {
    lo: Vec<i128>,
    hi: Vec<i128>,
}

fn contrib(d: &Domains, id: usize, a: i64) -> (i128, i128) {
    let (x, y) = (a as i128 * d.lo[id], a as i128 * d.hi[id]);
    (x.min(y), x.max(y))
}

fn propagate(problem: &MilpProblem, d: &mut Domains) -> bool {
    for _ in 0..200 {
        let mut changed = false;
        for c in &problem.constraints {
            let terms = c.expr.terms();
            let (mut min_act, mut max_act) = (0i128, 0i128);
            for &(id, a) in terms {
                let (mn, mx) = contrib(d, id, a);
                min_act += mn;
                max_act += mx;
            }
            let rhs = c.rhs as i128;
            let upper_side = matches!(c.relation, Relation::Le | Relation::Eq);
            let lower_side = matches!(c.relation, Relation::Ge | Relation::Eq);
            if (upper_side && min_act > rhs) || (lower_side && max_act < rhs) {
                return false;
            }
            for &(id, a) in terms {
                let (mn, mx) = contrib(d, id, a);
                let a = a as i128;
                if upper_side {
                    // a x <= rhs - (min_act - mn)
                    let room = rhs - (min_act - mn);
                    if a > 0 {
                        let nh = floor_div(room, a);
                        if nh < d.hi[id] {
                            d.hi[id] = nh;
                            changed = true;
                        }
                    } else {
                        let nl = ceil_div(room, a);
                        if nl > d.lo[id] {
                            d.lo[id] = nl;
                            changed = true;
                        }
                    }
                }
                if lower_side {
                    // a x >= rhs - (max_act - mx)
                    let need = rhs - (max_act - mx);
                    if a > 0 {
                        let nl = ceil_div(need, a);
                        if nl > d.lo[id] {
                            d.lo[id] = nl;
                            changed = true;
                        }
                    } else {
                        let nh = floor_div(need, a);
                        if nh < d.hi[id] {
                            d.hi[id] = nh;
                            changed = true;
                        }
                    }
                }
                if d.lo[id] > d.hi[id] {
                    return false;
                }
            }
        }
        if !changed {
            break;
        }
    }
    true
}

/// Variables that are set to their smallest feasible value instead of
/// being enumerated. At most one per row, so each row determines it.
fn dependent_vars(problem: &MilpProblem) -> Vec<bool> {
    let n = problem.variables.len();
    let mut dependent = vec![false; n];
    let mut row_taken = vec![false; problem.constraints.len()];
    for id in 0..n {
        if problem.objective.coef(id) < 0 {
            continue;
        }
        let rows: Vec<usize> = problem
            .constraints
            .iter()
            .enumerate()
            .filter(|(_, c)| c.expr.coef(id) != 0)
            .map(|(r, _)| r)
            .collect();
        let loosening = rows.iter().all(|&r| {
            let c = &problem.constraints[r];
            let a = c.expr.coef(id);
            match c.relation {
                Relation::Le => a < 0,
                Relation::Ge => a > 0,
                Relation::Eq => false,
            }
        });
        if loosening && rows.iter().all(|&r| !row_taken[r]) {
            dependent[id] = true;
            for r in rows {
                row_taken[r] = true;
            }
        }
    }
    dependent
}

struct Search<'a> {
    problem: &'a MilpProblem,
    order: Vec<usize>,
    best: Option<(Assignment, i128)>,
}

impl Search<'_> {
    fn lower_bound(&self, d: &Domains) -> i128 {
        self.problem
            .objective
            .terms()
            .iter()
            .map(|&(id, a)| (a as i128 * d.lo[id]).min(a as i128 * d.hi[id]))
            .sum::<i128>()
            + self.problem.objective.constant as i128
    }

    fn visit(&mut self, mut d: Domains, depth: usize) {
        if !propagate(self.problem, &mut d) {
            return;
        }
        if let Some((_, best)) = &self.best {
            if self.lower_bound(&d) >= *best {
                return;
            }
        }
        let next = self.order[depth..]
            .iter()
            .position(|&id| d.lo[id] < d.hi[id])
            .map(|k| depth + k);
        match next {
            None => {
                let x = Assignment(d.lo.iter().map(|&v| v as i64).collect());
                if !check_feasible(self.problem, &x).is_empty() {
                    return;
                }
                let value = evaluate(self.problem, &x).expect("length matches");
                if self.best.as_ref().is_none_or(|(_, b)| value < *b) {
                    self.best = Some((x, value));
                }
            }
            Some(k) => {
                let id = self.order[k];
                for v in d.lo[id]..=d.hi[id] {
                    let mut child = d.clone();
                    child.lo[id] = v;
                    child.hi[id] = v;
                    self.visit(child, k + 1);
                }
            }
        }
    }
}

/// Exact optimum by exhaustive enumeration. Every variable must be integral
/// with finite bounds; at most [`MAX_ENUMERATED`] variables may remain free
/// after fixing, each with at most `MAX_DOMAIN + 1` values.
pub fn brute_force(problem: &MilpProblem) -> Result<(Assignment, i128)> {
    if let Some(v) = problem
        .variables
        .iter()
        .find(|v| !v.integral || v.upper.is_none())
    {
        return Err(Error::TooLarge(format!(
            "variable {} is continuous or unbounded",
            v.name
        )));
    }
    let mut d = Domains {
        lo: problem.variables.iter().map(|v| v.lower as i128).collect(),
        hi: problem
            .variables
            .iter()
            .map(|v| v.upper.unwrap() as i128)
            .collect(),
    };
    if !propagate(problem, &mut d) {
        return Err(Error::Infeasible);
    }
    let dependent = dependent_vars(problem);
    let order: Vec<usize> = (0..problem.variables.len())
        .filter(|&id| !dependent[id] && d.lo[id] < d.hi[id])
        .collect();
    if order.len() > MAX_ENUMERATED {
        return Err(Error::TooLarge(format!(
            "{} free variables after fixing (limit {MAX_ENUMERATED})",
            order.len()
        )));
    }
    if let Some(&id) = order
        .iter()
        .find(|&&id| d.hi[id] - d.lo[id] > MAX_DOMAIN as i128)
    {
        return Err(Error::TooLarge(format!(
            "variable {} spans {} values (limit {})",
            problem.variables[id].name,
            d.hi[id] - d.lo[id] + 1,
            MAX_DOMAIN + 1
        )));
    }
    let mut search = Search {
        problem,
        order,
        best: None,
    };
    search.visit(d, 0);
    search.best.ok_or(Error::Infeasible)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::build;
    use crate::netmodel::*;

    #[test]
    fn division_rounding() {
        assert_eq!(floor_div(7, 2), 3);
        assert_eq!(floor_div(-7, 2), -4);
        assert_eq!(ceil_div(7, 2), 4);
        assert_eq!(ceil_div(-7, 2), -3);
        assert_eq!(ceil_div(7, -2), -3);
    }

    #[test]
    fn zero_demand() {
        let topo = Topology::new(vec![2], false);
        let (m, _) = build(
            &topo,
            &default_params(true),
            &Demand::zeros(&topo),
            &VariantFlags::default(),
        )
        .unwrap();
        assert_eq!(brute_force(&m).unwrap().1, 0);
    }

    #[test]
    fn tiny_instance_by_enumeration() {
        let topo = Topology::new(vec![1], false).with_capacities(2, 1);
        let mut params = default_params(true);
        params.server_capacity = 3;
        let demand = Demand {
            clients_primary: vec![4],
            clients_secondary: vec![vec![2]],
        };
        let (m, _) = build(&topo, &params, &demand, &VariantFlags::default()).unwrap();
        assert_eq!(brute_force(&m).unwrap().1, 14_400);
    }

    #[test]
    fn secondary_only_forced_redirect() {
        let topo = Topology::new(vec![1], false);
        let params = default_params(true);
        let mut params = params;
        params.server_capacity = 3;
        let demand = Demand {
            clients_primary: vec![0],
            clients_secondary: vec![vec![3]],
        };
        let flags = VariantFlags {
            deploy_to_secondary: false,
            ..Default::default()
        };
        let (m, _) = build(&topo, &params, &demand, &flags).unwrap();
        // One primary server plus three redirected clients.
        assert_eq!(brute_force(&m).unwrap().1, 6_000 + 3 * 1_200);
    }

    #[test]
    fn guard_rejects_large_domains() {
        let topo = Topology::new(vec![0], false);
        let demand = Demand {
            clients_primary: vec![1000],
            clients_secondary: vec![vec![]],
        };
        let (m, _) = build(
            &topo,
            &default_params(true),
            &demand,
            &VariantFlags::default(),
        )
        .unwrap();
        assert!(matches!(brute_force(&m), Err(Error::TooLarge(_))));
    }
}
