#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use telco_placement::netmodel::{
    CostParams, Demand, Millicents, NestedValues, SiteValues, Topology, VariantFlags,
};

#[derive(Clone, Debug)]
pub struct TinyInstance {
    pub topology: Topology,
    pub params: CostParams,
    pub demand: Demand,
    pub flags: VariantFlags,
}

/// Random instance within the brute-force limits: at most two primaries with
/// at most two secondaries each, U in 1..=5, total demand at most 40.
pub fn tiny_instance(seed: u64) -> TinyInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = rng.gen_range(1..=2usize);
    let sap: Vec<i64> = (0..p).map(|_| rng.gen_range(0..=2)).collect();
    let links = rng.gen_bool(0.7);
    let u = rng.gen_range(1..=5i64);
    let topology = Topology::new(sap.clone(), links)
        .with_capacities(rng.gen_range(0..=4), rng.gen_range(0..=2));

    let mut budget = rng.gen_range(0..=40i64);
    let mut take = |rng: &mut ChaCha8Rng| {
        let v = rng.gen_range(0..=budget.min(14));
        budget -= v;
        v
    };
    let clients_primary: Vec<i64> = (0..p).map(|_| take(&mut rng)).collect();
    let clients_secondary: Vec<Vec<i64>> = sap
        .iter()
        .map(|&n| (0..n).map(|_| take(&mut rng)).collect())
        .collect();

    let price = |rng: &mut ChaCha8Rng, lo: i64, hi: i64| Millicents(rng.gen_range(lo..=hi));
    let params = CostParams {
        server_cloud: price(&mut rng, 1_000, 20_000),
        server_primary: SiteValues::Sites((0..p).map(|_| price(&mut rng, 1_000, 12_000)).collect()),
        server_secondary: NestedValues::Sites(
            sap.iter()
                .map(|&n| (0..n).map(|_| price(&mut rng, 1_000, 15_000)).collect())
                .collect(),
        ),
        link_cloud: SiteValues::Sites((0..p).map(|_| price(&mut rng, 0, 4_000)).collect()),
        link_inter_primary: NestedValues::Sites(
            (0..p)
                .map(|_| (0..p).map(|_| price(&mut rng, 0, 3_000)).collect())
                .collect(),
        ),
        link_secondary: NestedValues::Sites(
            sap.iter()
                .map(|&n| (0..n).map(|_| price(&mut rng, 0, 3_000)).collect())
                .collect(),
        ),
        server_capacity: u,
    };

    let mut flags = VariantFlags::default();
    match rng.gen_range(0..8) {
        0 => flags.inter_primary_redirect = false,
        1 => flags.deploy_to_secondary = false,
        2 => flags.allow_secondary_redirect = false,
        3 => flags.allow_cloud = false,
        4 => flags.cloud_only = true,
        _ => {}
    }
    TinyInstance {
        topology,
        params,
        demand: Demand {
            clients_primary,
            clients_secondary,
        },
        flags,
    }
}
