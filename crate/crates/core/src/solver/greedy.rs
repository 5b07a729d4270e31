use crate::builder::{cost_of, Placement};
use crate::error::{Error, Result};
use crate::netmodel::{validate, CostParams, Demand, Topology, VariantFlags};

use super::ceil_div;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Target {
    OwnPrimary,
    Primary(usize),
    Cloud,
}

/// Feasible placement built by serving every site locally up to capacity
/// and routing each branch's overflow along the cheapest permitted path
/// (own primary, another primary, the cloud) by per-client marginal cost.
///
/// Used as an upper bound and as the branch-and-bound warm start.
pub fn greedy_bound(
    topology: &Topology,
    params: &CostParams,
    demand: &Demand,
    flags: &VariantFlags,
) -> Result<Placement> {
    let violations = validate(topology, params, demand, flags);
    if !violations.is_empty() {
        return Err(Error::Invalid(violations));
    }
    let p = topology.primaries();
    let u = params.server_capacity;
    let mut pl = Placement::empty(topology);

    let primary_cap = if flags.cloud_only {
        0
    } else {
        topology.primary_capacity * u
    };
    let secondary_cap = if flags.cloud_only || !flags.deploy_to_secondary {
        0
    } else {
        topology.secondary_capacity * u
    };

    let mut pool = vec![0i64; p];
    for i in 0..p {
        pl.sp[i] = demand.primary(i).min(primary_cap);
        pool[i] = demand.primary(i) - pl.sp[i];
        for j in 0..topology.secondaries(i) {
            let c = demand.secondary(i, j);
            pl.ss[i][j] = c.min(secondary_cap);
            if !flags.allow_secondary_redirect && pl.ss[i][j] < c {
                return Err(Error::Infeasible);
            }
            pool[i] += c - pl.ss[i][j];
        }
    }

    let mesh = topology.inter_primary_links && flags.inter_primary_redirect;
    for i in 0..p {
        if pool[i] == 0 {
            continue;
        }
        // Per-client cost scaled by U so comparisons stay integral.
        let mut options: Vec<(i64, Target)> =
            vec![(params.server_primary.get(i).0, Target::OwnPrimary)];
        if mesh {
            for j in (0..p).filter(|&j| j != i) {
                let c = params.link_inter_primary.get(i, j).0 * u + params.server_primary.get(j).0;
                options.push((c, Target::Primary(j)));
            }
        }
        if flags.allow_cloud {
            options.push((
                params.link_cloud.get(i).0 * u + params.server_cloud.0,
                Target::Cloud,
            ));
        }
        // Stable sort keeps the own-primary, by-index, cloud order on ties.
        options.sort_by_key(|o| o.0);
        for (_, target) in options {
            if pool[i] == 0 {
                break;
            }
            let take = match target {
                Target::OwnPrimary => pool[i].min(primary_cap - pl.sp[i]),
                Target::Primary(j) => pool[i].min(primary_cap - pl.sp[j]),
                Target::Cloud => pool[i],
            };
            match target {
                Target::OwnPrimary => pl.sp[i] += take,
                Target::Primary(j) => {
                    pl.sp[j] += take;
                    pl.fpp[i][j] += take;
                }
                Target::Cloud => pl.sa[i] += take,
            }
            pool[i] -= take;
        }
        if pool[i] > 0 {
            return Err(Error::Infeasible);
        }
    }

    pl.na = ceil_div(pl.sa.iter().sum(), u);
    for i in 0..p {
        pl.np[i] = ceil_div(pl.sp[i], u);
        for j in 0..topology.secondaries(i) {
            pl.ns[i][j] = ceil_div(pl.ss[i][j], u);
        }
    }
    pl.breakdown = cost_of(&pl, params, demand, topology)?;
    pl.total_cost = pl.breakdown.total();
    Ok(pl)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::{build, encode};
    use crate::milp::check_feasible;
    use crate::netmodel::*;

    #[test]
    fn local_demand_is_served_locally() {
        let topo = reference_topology(ReferenceTopology::Fig6a);
        let params = default_params(true);
        let demand = Demand {
            clients_primary: vec![3000, 0, 600],
            clients_secondary: vec![vec![300, 30], vec![0, 0], vec![0, 900]],
        };
        let pl = greedy_bound(&topo, &params, &demand, &VariantFlags::default()).unwrap();
        assert_eq!(pl.np, vec![10, 0, 2]);
        assert_eq!(pl.ns, vec![vec![1, 1], vec![0, 0], vec![0, 3]]);
        assert_eq!(pl.na, 0);
        assert_eq!(pl.breakdown.link_cost(), 0);
    }

    #[test]
    fn tiny_instance_costs_twenty_cents() {
        let topo = Topology::new(vec![1], false).with_capacities(2, 1);
        let mut params = default_params(true);
        params.server_capacity = 3;
        let demand = Demand {
            clients_primary: vec![4],
            clients_secondary: vec![vec![2]],
        };
        let pl = greedy_bound(&topo, &params, &demand, &VariantFlags::default()).unwrap();
        assert_eq!(pl.total_cost, 20_000);
    }

    #[test]
    fn equal_distribution_matches_the_optimum() {
        let topo = reference_topology(ReferenceTopology::Fig6a);
        let params = default_params(true);
        let demand = reference_demand(ReferenceDemand::Fig7Equal);
        let pl = greedy_bound(&topo, &params, &demand, &VariantFlags::default()).unwrap();
        assert_eq!(pl.total_cost, 13_780_360_000);
        let (m, idx) = build(&topo, &params, &demand, &VariantFlags::default()).unwrap();
        assert!(check_feasible(&m, &encode(&idx, &pl)).is_empty());
    }

    #[test]
    fn over_capacity_without_cloud_is_infeasible() {
        let topo = Topology::new(vec![0], false);
        let params = default_params(true);
        let demand = Demand {
            clients_primary: vec![240_001],
            clients_secondary: vec![vec![]],
        };
        let flags = VariantFlags {
            allow_cloud: false,
            ..Default::default()
        };
        assert!(matches!(
            greedy_bound(&topo, &params, &demand, &flags),
            Err(Error::Infeasible)
        ));
    }
}
