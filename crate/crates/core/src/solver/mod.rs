//! Exact MILP solving: rational LP relaxation plus best-first
//! branch-and-bound, a greedy warm-start heuristic, and an exhaustive
//! enumerator used as a test oracle.

mod brute;
mod greedy;
pub mod simplex;

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use num_traits::{Signed, ToPrimitive};
use serde::Serialize;

use crate::builder::{build, decode, encode, Placement, VarIndex};
use crate::error::{Error, Result};
use crate::milp::{check_feasible, evaluate, Assignment, MilpProblem};
use crate::netmodel::{CostParams, Demand, Topology, VariantFlags};

pub use brute::brute_force;
pub use greedy::greedy_bound;
pub use simplex::{solve_lp, solve_lp_with_bounds, LpResult, LpStatus, Rational};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum BranchRule {
    /// Fractional part closest to one half; ties to the lowest id.
    #[default]
    MostFractional,
    /// Lowest-id fractional variable.
    FirstFractional,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolverConfig {
    pub node_limit: Option<u64>,
    pub time_limit: Option<Duration>,
    pub branching: BranchRule,
    /// Absolute gap in objective units; 0 proves exact optimality.
    pub absolute_gap: i128,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            node_limit: None,
            time_limit: None,
            branching: BranchRule::MostFractional,
            absolute_gap: 0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SolveStats {
    pub nodes: u64,
    pub lp_iterations: u64,
    pub wall_time: Duration,
    /// Smallest open-node bound when the search stopped (the incumbent value
    /// once proven optimal).
    pub best_bound: Option<i128>,
    pub incumbent: Option<i128>,
    pub proven_optimal: bool,
}

/// Integral assignment of a proven (or limit-truncated) solve.
#[derive(Clone, Debug)]
pub struct MilpSolution {
    pub assignment: Assignment,
    pub objective: i128,
    pub stats: SolveStats,
}

struct Node {
    bound: Rational,
    seq: u64,
    lower: Vec<i64>,
    upper: Vec<Option<i64>>,
    lp: LpResult,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // BinaryHeap is a max-heap: smallest bound, then oldest node, on top.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .cmp(&self.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Smallest integer objective a node with LP bound `bound` can reach.
fn integral_floor(bound: &Rational, integral_objective: bool) -> Rational {
    if integral_objective {
        bound.ceil()
    } else {
        bound.clone()
    }
}

fn objective_is_integral(problem: &MilpProblem) -> bool {
    problem
        .objective
        .terms()
        .iter()
        .all(|&(id, _)| problem.variables[id].integral)
}

fn saturating_i128(v: num_bigint::BigInt) -> i128 {
    v.to_i128().unwrap_or(if v.is_negative() {
        i128::MIN
    } else {
        i128::MAX
    })
}

fn to_i128_floor(r: &Rational) -> i128 {
    saturating_i128(r.floor().to_integer())
}

fn to_i128_ceil(r: &Rational) -> i128 {
    saturating_i128(r.ceil().to_integer())
}

/// Picks the integral variable to branch on, or `None` if the LP point is
/// integral on every integral variable.
fn branch_variable(problem: &MilpProblem, values: &[Rational], rule: BranchRule) -> Option<usize> {
    let half = Rational::new(1.into(), 2.into());
    let mut best: Option<(usize, Rational)> = None;
    for (id, v) in values.iter().enumerate() {
        if !problem.variables[id].integral || v.is_integer() {
            continue;
        }
        if rule == BranchRule::FirstFractional {
            return Some(id);
        }
        let frac = v - v.floor();
        let dist = (&frac - &half).abs();
        if best.as_ref().is_none_or(|(_, d)| dist < *d) {
            best = Some((id, dist));
        }
    }
    best.map(|(id, _)| id)
}

fn rational_assignment(values: &[Rational]) -> Option<Assignment> {
    values
        .iter()
        .map(|v| {
            if v.is_integer() {
                v.to_integer().to_i64()
            } else {
                None
            }
        })
        .collect::<Option<Vec<i64>>>()
        .map(Assignment)
}

/// Solves `problem` to proven optimality (unless a limit stops the search).
pub fn solve_milp(problem: &MilpProblem, config: &SolverConfig) -> Result<MilpSolution> {
    solve_milp_from(problem, config, None)
}

/// Like [`solve_milp`], seeded with a feasible incumbent. An infeasible seed
/// is ignored.
pub fn solve_milp_from(
    problem: &MilpProblem,
    config: &SolverConfig,
    incumbent: Option<&Assignment>,
) -> Result<MilpSolution> {
    let started = Instant::now();
    let integral_objective = objective_is_integral(problem);
    let mut stats = SolveStats::default();

    let mut best: Option<(Assignment, i128)> = incumbent
        .filter(|a| check_feasible(problem, a).is_empty())
        .map(|a| (a.clone(), evaluate(problem, a).expect("length checked")));

    let lower: Vec<i64> = problem.variables.iter().map(|v| v.lower).collect();
    let upper: Vec<Option<i64>> = problem.variables.iter().map(|v| v.upper).collect();

    let mut seq = 0u64;
    let mut heap = BinaryHeap::new();
    let mut open_node = |lower: Vec<i64>,
                         upper: Vec<Option<i64>>,
                         stats: &mut SolveStats,
                         heap: &mut BinaryHeap<Node>,
                         best: &Option<(Assignment, i128)>| {
        let lp = solve_lp_with_bounds(problem, &lower, &upper);
        stats.lp_iterations += lp.iterations as u64;
        stats.nodes += 1;
        match lp.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => return,
            LpStatus::Unbounded | LpStatus::Failed => {
                // Finite boxes rule these out; treat as an unexplorable node.
                return;
            }
        }
        let floor = integral_floor(&lp.objective, integral_objective);
        if let Some((_, inc)) = best {
            if floor >= simplex::int128(*inc - config.absolute_gap) {
                return;
            }
        }
        seq += 1;
        heap.push(Node {
            bound: floor,
            seq,
            lower,
            upper,
            lp,
        });
    };
    open_node(lower, upper, &mut stats, &mut heap, &best);

    let mut limit_hit = false;
    while let Some(node) = heap.pop() {
        if let Some((_, inc)) = &best {
            if node.bound >= simplex::int128(*inc - config.absolute_gap) {
                heap.push(node);
                break;
            }
        }
        if config.node_limit.is_some_and(|n| stats.nodes >= n)
            || config.time_limit.is_some_and(|t| started.elapsed() >= t)
        {
            heap.push(node);
            limit_hit = true;
            break;
        }
        match branch_variable(problem, &node.lp.values, config.branching) {
            None => {
                let Some(assignment) = rational_assignment(&node.lp.values) else {
                    let name = problem.variables[node
                        .lp
                        .values
                        .iter()
                        .position(|v| !v.is_integer())
                        .unwrap_or(0)]
                    .name
                    .clone();
                    return Err(Error::NonIntegral(name));
                };
                let value = evaluate(problem, &assignment)?;
                if best.as_ref().is_none_or(|(_, inc)| value < *inc) {
                    best = Some((assignment, value));
                }
            }
            Some(id) => {
                let v = &node.lp.values[id];
                let down = to_i128_floor(v) as i64;
                let up = to_i128_ceil(v) as i64;
                let mut down_upper = node.upper.clone();
                down_upper[id] = Some(down);
                open_node(node.lower.clone(), down_upper, &mut stats, &mut heap, &best);
                let mut up_lower = node.lower;
                up_lower[id] = up;
                open_node(up_lower, node.upper, &mut stats, &mut heap, &best);
            }
        }
    }

    stats.wall_time = started.elapsed();
    let open_bound = heap.iter().map(|n| n.bound.clone()).min();
    let Some((assignment, objective)) = best else {
        return Err(if limit_hit {
            Error::LimitReached
        } else {
            Error::Infeasible
        });
    };
    stats.incumbent = Some(objective);
    stats.proven_optimal = !limit_hit;
    stats.best_bound = Some(match open_bound {
        Some(b) if limit_hit => to_i128_ceil(&b).min(objective),
        _ => objective,
    });
    Ok(MilpSolution {
        assignment,
        objective,
        stats,
    })
}

/// A decoded optimal (or limit-truncated) placement.
#[derive(Clone, Debug)]
pub struct Optimized {
    pub placement: Placement,
    pub stats: SolveStats,
}

/// Builds, warm-starts from [`greedy_bound`], solves and decodes.
pub fn optimize(
    topology: &Topology,
    params: &CostParams,
    demand: &Demand,
    flags: &VariantFlags,
    config: &SolverConfig,
) -> Result<Optimized> {
    let (problem, index) = build(topology, params, demand, flags)?;
    let warm = match greedy_bound(topology, params, demand, flags) {
        Ok(p) => Some(encode(&index, &p)),
        Err(Error::Infeasible) => None,
        Err(e) => return Err(e),
    };
    optimize_problem(&problem, &index, params, demand, config, warm.as_ref())
}

/// Solves an already built (possibly further constrained) model.
pub fn optimize_problem(
    problem: &MilpProblem,
    index: &VarIndex,
    params: &CostParams,
    demand: &Demand,
    config: &SolverConfig,
    warm: Option<&Assignment>,
) -> Result<Optimized> {
    let solution = solve_milp_from(problem, config, warm)?;
    let placement = decode(index, &solution.assignment, params, demand)?;
    debug_assert_eq!(placement.total_cost, solution.objective);
    Ok(Optimized {
        placement,
        stats: solution.stats,
    })
}

/// `ceil(numerator / denominator)` for non-negative values.
pub(crate) fn ceil_div(numerator: i64, denominator: i64) -> i64 {
    (numerator + denominator - 1) / denominator
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{Constraint, LinExpr, Relation};
    use crate::netmodel::*;
    use num_traits::Zero;

    fn tiny() -> (Topology, CostParams, Demand) {
        let topo = Topology::new(vec![1], false).with_capacities(2, 1);
        let mut params = default_params(true);
        params.server_capacity = 3;
        let demand = Demand {
            clients_primary: vec![4],
            clients_secondary: vec![vec![2]],
        };
        (topo, params, demand)
    }

    #[test]
    fn knapsack_needs_branching() {
        // max 5a + 4b + 3c st 2a + 3b + c <= 5, 4a + b + 2c <= 11, 3a + 4b + 2c <= 8, binary
        let mut p = MilpProblem::new("k");
        let v: Vec<_> = (0..3)
            .map(|i| p.add_var(format!("x{i}"), 0, Some(1), true))
            .collect();
        p.objective = LinExpr::from_terms([(v[0], -5), (v[1], -4), (v[2], -3)], 0);
        for (name, coefs, rhs) in [
            ("a", [2, 3, 1], 5),
            ("b", [4, 1, 2], 11),
            ("c", [3, 4, 2], 8),
        ] {
            p.add_constraint(Constraint::new(
                name,
                LinExpr::from_terms(v.iter().copied().zip(coefs), 0),
                Relation::Le,
                rhs,
            ));
        }
        let s = solve_milp(&p, &SolverConfig::default()).unwrap();
        assert_eq!(s.objective, -9);
        assert_eq!(s.assignment.0, vec![1, 1, 0]);
        assert!(s.stats.proven_optimal);
    }

    #[test]
    fn relaxed_single_primary() {
        let topo = Topology::new(vec![0], false);
        let params = default_params(true);
        let demand = Demand {
            clients_primary: vec![450],
            clients_secondary: vec![vec![]],
        };
        let (m, idx) = build(&topo, &params, &demand, &VariantFlags::default()).unwrap();
        let lp = solve_lp(&m);
        assert_eq!(lp.status, LpStatus::Optimal);
        assert_eq!(lp.values[idx.np[0]], Rational::new(3.into(), 2.into()));
        // 9 cents in thousandths.
        assert_eq!(lp.objective, simplex::int(9_000));
    }

    #[test]
    fn zero_demand_lp_and_milp() {
        let topo = reference_topology(ReferenceTopology::Fig6a);
        let params = default_params(true);
        let demand = Demand::zeros(&topo);
        let (m, _) = build(&topo, &params, &demand, &VariantFlags::default()).unwrap();
        let lp = solve_lp(&m);
        assert!(lp.objective.is_zero());
        assert!(lp.values.iter().all(Zero::is_zero));
        let s = solve_milp(&m, &SolverConfig::default()).unwrap();
        assert_eq!(s.objective, 0);
    }

    #[test]
    fn tiny_instance_redirects_secondary_clients() {
        let (topo, params, demand) = tiny();
        let (m, idx) = build(&topo, &params, &demand, &VariantFlags::default()).unwrap();
        let s = solve_milp(&m, &SolverConfig::default()).unwrap();
        assert_eq!(s.objective, 14_400);
        let pl = decode(&idx, &s.assignment, &params, &demand).unwrap();
        assert_eq!((pl.np[0], pl.sp[0], pl.ns[0][0]), (2, 6, 0));
    }

    #[test]
    fn infeasible_without_cloud() {
        let topo = Topology::new(vec![0], false).with_capacities(1, 0);
        let params = default_params(true);
        let demand = Demand {
            clients_primary: vec![301],
            clients_secondary: vec![vec![]],
        };
        let flags = VariantFlags {
            allow_cloud: false,
            ..Default::default()
        };
        let (m, _) = build(&topo, &params, &demand, &flags).unwrap();
        assert!(matches!(
            solve_milp(&m, &SolverConfig::default()),
            Err(Error::Infeasible)
        ));
    }

    #[test]
    fn node_limit_returns_seeded_incumbent() {
        let (topo, params, demand) = tiny();
        let (m, idx) = build(&topo, &params, &demand, &VariantFlags::default()).unwrap();
        let seed = crate::builder::encode(
            &idx,
            &greedy_bound(&topo, &params, &demand, &VariantFlags::default()).unwrap(),
        );
        let cfg = SolverConfig {
            node_limit: Some(1),
            ..Default::default()
        };
        let s = solve_milp_from(&m, &cfg, Some(&seed)).unwrap();
        assert!(!s.stats.proven_optimal);
        assert_eq!(s.objective, 20_000);
        assert!(s.stats.best_bound.unwrap() <= s.objective);
    }

    #[test]
    fn ceil_div_rounds_up() {
        assert_eq!(ceil_div(0, 300), 0);
        assert_eq!(ceil_div(1, 300), 1);
        assert_eq!(ceil_div(600, 300), 2);
        assert_eq!(ceil_div(6_160_000, 300), 20_534);
    }
}
