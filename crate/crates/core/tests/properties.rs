mod common;

use proptest::prelude::*;
use telco_placement::autosim::{simulate, SimConfig, SiteId, TraceEvent};
use telco_placement::builder::{build, conservation_residuals, cost_of, decode, encode};
use telco_placement::error::Error;
use telco_placement::milp::{check_feasible, evaluate};
use telco_placement::netmodel::{default_params, Topology, VariantFlags};
use telco_placement::solver::{greedy_bound, optimize, solve_milp, SolverConfig};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn solves_are_deterministic(seed in any::<u64>()) {
        let t = common::tiny_instance(seed);
        let (m, _) = build(&t.topology, &t.params, &t.demand, &t.flags).unwrap();
        let a = solve_milp(&m, &SolverConfig::default());
        let b = solve_milp(&m, &SolverConfig::default());
        match (a, b) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(&a.assignment, &b.assignment);
                prop_assert_eq!(a.stats.nodes, b.stats.nodes);
                prop_assert_eq!(a.stats.lp_iterations, b.stats.lp_iterations);
            }
            (Err(Error::Infeasible), Err(Error::Infeasible)) => {}
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a.map(|s| s.objective), b.map(|s| s.objective)),
        }
    }

    #[test]
    fn price_scaling_scales_the_optimum(seed in any::<u64>(), k in 2i64..50) {
        let t = common::tiny_instance(seed);
        let Ok(base) = optimize(&t.topology, &t.params, &t.demand, &t.flags, &SolverConfig::default()) else {
            return Ok(());
        };
        let scaled = t.params.scale_prices(k);
        let opt = optimize(&t.topology, &scaled, &t.demand, &t.flags, &SolverConfig::default()).unwrap();
        prop_assert_eq!(opt.placement.total_cost, base.placement.total_cost * k as i128);
        // The old optimum stays optimal under the scaled prices.
        let (m, idx) = build(&t.topology, &scaled, &t.demand, &t.flags).unwrap();
        let old = encode(&idx, &base.placement);
        prop_assert!(check_feasible(&m, &old).is_empty());
        prop_assert_eq!(evaluate(&m, &old).unwrap(), opt.placement.total_cost);
    }

    #[test]
    fn restricting_variants_never_lowers_cost(seed in any::<u64>(), which in 0usize..5) {
        let mut t = common::tiny_instance(seed);
        t.flags = VariantFlags::default();
        let cfg = SolverConfig::default();
        let Ok(base) = optimize(&t.topology, &t.params, &t.demand, &t.flags, &cfg) else {
            return Ok(());
        };
        let mut flags = VariantFlags::default();
        flags.apply(telco_placement::netmodel::VARIANT_NAMES[which]);
        match optimize(&t.topology, &t.params, &t.demand, &flags, &cfg) {
            Ok(o) => prop_assert!(o.placement.total_cost >= base.placement.total_cost),
            Err(e) => prop_assert!(matches!(e, Error::Infeasible)),
        }
    }

    #[test]
    fn optimum_conserves_clients_and_costs_add_up(seed in any::<u64>()) {
        let t = common::tiny_instance(seed);
        let (m, idx) = build(&t.topology, &t.params, &t.demand, &t.flags).unwrap();
        let Ok(sol) = solve_milp(&m, &SolverConfig::default()) else {
            return Ok(());
        };
        let p = decode(&idx, &sol.assignment, &t.params, &t.demand).unwrap();
        prop_assert!(conservation_residuals(&p, &t.demand).iter().all(|&r| r == 0));
        prop_assert_eq!(p.total_cost, evaluate(&m, &sol.assignment).unwrap());
        prop_assert_eq!(p.breakdown.total(), p.total_cost);
        prop_assert_eq!(cost_of(&p, &t.params, &t.demand, &t.topology).unwrap(), p.breakdown);
        prop_assert_eq!(encode(&idx, &p), sol.assignment);
    }

    #[test]
    fn greedy_is_feasible(seed in any::<u64>()) {
        let t = common::tiny_instance(seed);
        let Ok(g) = greedy_bound(&t.topology, &t.params, &t.demand, &t.flags) else {
            return Ok(());
        };
        let (m, idx) = build(&t.topology, &t.params, &t.demand, &t.flags).unwrap();
        let x = encode(&idx, &g);
        prop_assert!(check_feasible(&m, &x).is_empty(), "{:?}", check_feasible(&m, &x));
        prop_assert_eq!(evaluate(&m, &x).unwrap(), g.total_cost);
    }

    #[test]
    fn simulated_serving_respects_capacity(
        steps in prop::collection::vec((0i64..600, 0usize..3, 0i64..2_000), 1..8),
    ) {
        let topology = Topology::new(vec![2], true).with_capacities(3, 1);
        let mut params = default_params(true);
        params.server_capacity = 100;
        let mut time = 0;
        let trace: Vec<TraceEvent> = steps
            .iter()
            .map(|&(dt, site, demand)| {
                time += dt;
                let site = if site == 0 { SiteId::Primary(0) } else { SiteId::Secondary(0, site - 1) };
                TraceEvent { time, site, demand }
            })
            .collect();
        let r = simulate(&trace, &topology, &params, &SimConfig::default()).unwrap();
        let mut total = 0i128;
        for iv in &r.intervals {
            let t = iv.start;
            let running: i64 = [SiteId::Cloud, SiteId::Primary(0), SiteId::Secondary(0, 0), SiteId::Secondary(0, 1)]
                .iter()
                .map(|&s| r.running_at(s, t))
                .sum();
            prop_assert!(iv.served <= running * params.server_capacity);
            prop_assert_eq!(iv.served + iv.unserved, iv.demand);
            total += iv.cost_rate * (iv.end - iv.start) as i128;
        }
        prop_assert_eq!(total, r.cost_rate_seconds);
        prop_assert!(r.timeline.iter().all(|p| p.servers_running >= 0));
    }
}
