//! Canned experiments: topology comparison, deployment-strategy comparison,
//! single-site cost curve, and the secondary-redirection sweep.

use std::fmt::Write;

use serde::Serialize;

use crate::builder::{build, Placement};
use crate::error::{Error, Result};
use crate::netmodel::{
    format_usd, reference_demand, reference_topology, CostParams, Demand, ReferenceDemand,
    ReferenceTopology, Topology, VariantFlags,
};
use crate::solver::{optimize, optimize_problem, SolverConfig};

/// One solved arm of a comparison or sweep. `placement` is `None` when the
/// arm's model is infeasible.
#[derive(Clone, Debug, Serialize)]
pub struct ArmResult {
    pub name: String,
    pub placement: Option<Placement>,
    pub proven_optimal: bool,
}

impl ArmResult {
    pub fn total(&self) -> Option<i128> {
        self.placement.as_ref().map(|p| p.total_cost)
    }

    pub fn feasible(&self) -> bool {
        self.placement.is_some()
    }
}

fn solve_arm(
    name: &str,
    topology: &Topology,
    params: &CostParams,
    demand: &Demand,
    flags: &VariantFlags,
) -> Result<ArmResult> {
    match optimize(topology, params, demand, flags, &SolverConfig::default()) {
        Ok(o) => Ok(ArmResult {
            name: name.to_string(),
            proven_optimal: o.stats.proven_optimal,
            placement: Some(o.placement),
        }),
        Err(Error::Infeasible) => Ok(ArmResult {
            name: name.to_string(),
            placement: None,
            proven_optimal: true,
        }),
        Err(e) => Err(e),
    }
}

type CountFn = Box<dyn Fn(&Placement) -> i64>;

/// Two solved arms. Deltas are always derived from the arm totals.
#[derive(Clone, Debug, Serialize)]
pub struct ComparisonRecord {
    pub label: String,
    pub arms: Vec<ArmResult>,
}

impl ComparisonRecord {
    pub fn totals(&self) -> Vec<Option<i128>> {
        self.arms.iter().map(ArmResult::total).collect()
    }

    /// Absolute difference between the two arm totals.
    pub fn delta(&self) -> Option<i128> {
        match self.totals().as_slice() {
            [Some(a), Some(b)] => Some((a - b).abs()),
            _ => None,
        }
    }

    /// Delta as a fraction of the more expensive arm.
    pub fn relative_delta(&self) -> Option<f64> {
        let totals = self.totals();
        let max = totals.iter().flatten().max().copied()?;
        self.delta().map(|d| d as f64 / max as f64)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.label);
        let width = 14;
        let _ = write!(out, "{:<22}", "");
        for arm in &self.arms {
            let _ = write!(out, "{:>width$}", arm.name);
        }
        out.push('\n');
        let _ = write!(out, "{:<22}", "Total cost (USD/h)");
        for arm in &self.arms {
            let cell = arm.total().map_or("infeasible".to_string(), format_usd);
            let _ = write!(out, "{cell:>width$}");
        }
        out.push('\n');
        if let Some(first) = self.arms.iter().find_map(|a| a.placement.as_ref()) {
            let mut rows: Vec<(String, CountFn)> = Vec::new();
            for i in 0..first.np.len() {
                rows.push((
                    format!("np[{}]", i + 1),
                    Box::new(move |p: &Placement| p.np[i]),
                ));
            }
            for i in 0..first.ns.len() {
                for j in 0..first.ns[i].len() {
                    rows.push((
                        format!("ns[{},{}]", i + 1, j + 1),
                        Box::new(move |p: &Placement| p.ns[i][j]),
                    ));
                }
            }
            rows.push(("na".to_string(), Box::new(|p: &Placement| p.na)));
            for (label, get) in rows {
                let _ = write!(out, "{label:<22}");
                for arm in &self.arms {
                    let cell = arm
                        .placement
                        .as_ref()
                        .map_or("-".to_string(), |p| get(p).to_string());
                    let _ = write!(out, "{cell:>width$}");
                }
                out.push('\n');
            }
        }
        if let (Some(d), Some(r)) = (self.delta(), self.relative_delta()) {
            let _ = writeln!(
                out,
                "Difference: {} USD/h ({:.2}%)",
                format_usd(d),
                r * 100.0
            );
        }
        out
    }
}

/// Full-mesh versus unlinked primaries under the split demand.
pub fn run_table2(params: &CostParams) -> Result<ComparisonRecord> {
    let demand = reference_demand(ReferenceDemand::Fig6Split);
    let flags = VariantFlags::default();
    let arms = vec![
        solve_arm(
            "Topology 6a",
            &reference_topology(ReferenceTopology::Fig6a),
            params,
            &demand,
            &flags,
        )?,
        solve_arm(
            "Topology 6b",
            &reference_topology(ReferenceTopology::Fig6b),
            params,
            &demand,
            &flags,
        )?,
    ];
    Ok(ComparisonRecord {
        label: "Total cost by topology".to_string(),
        arms,
    })
}

/// Primary-only deployment (S1) versus primary and secondary (S2) on the
/// full-mesh topology with equal demand.
pub fn run_table3(params: &CostParams) -> Result<ComparisonRecord> {
    let topology = reference_topology(ReferenceTopology::Fig6a);
    let demand = reference_demand(ReferenceDemand::Fig7Equal);
    let s1 = VariantFlags {
        deploy_to_secondary: false,
        ..Default::default()
    };
    let arms = vec![
        solve_arm("S1", &topology, params, &demand, &s1)?,
        solve_arm("S2", &topology, params, &demand, &VariantFlags::default())?,
    ];
    Ok(ComparisonRecord {
        label: "Total cost by deployment strategy".to_string(),
        arms,
    })
}

/// Which comparison a capacity what-if re-runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum WhatIfKind {
    Topology,
    Strategy,
}

/// Re-runs a comparison's cheaper arm with larger site capacities.
#[derive(Clone, Debug, Serialize)]
pub struct CapacityWhatIf {
    pub label: String,
    pub primary_capacity: i64,
    pub secondary_capacity: i64,
    #[serde(
        rename = "baseline_total_cents",
        serialize_with = "crate::netmodel::cents::serialize"
    )]
    pub baseline_total: i128,
    #[serde(
        rename = "what_if_total_cents",
        serialize_with = "crate::netmodel::cents::serialize"
    )]
    pub what_if_total: i128,
    pub reduction: f64,
    /// Reduction quoted in the literature for this what-if.
    pub published_reduction: f64,
    /// Whether the computed reduction matches the published one to 0.01%.
    pub reproduced: bool,
}

impl CapacityWhatIf {
    pub fn to_text(&self) -> String {
        format!(
            "{}: capacities {}/{} -> {} USD/h (baseline {} USD/h), reduction {:.2}%; published {:.2}% {}\n",
            self.label,
            self.primary_capacity,
            self.secondary_capacity,
            format_usd(self.what_if_total),
            format_usd(self.baseline_total),
            self.reduction * 100.0,
            self.published_reduction * 100.0,
            if self.reproduced {
                "(reproduced)"
            } else {
                "(paper value not reproduced)"
            }
        )
    }
}

pub fn run_capacity_what_if(kind: WhatIfKind, params: &CostParams) -> Result<CapacityWhatIf> {
    let (label, topology, demand, caps, published) = match kind {
        WhatIfKind::Topology => (
            "Topology 6a what-if",
            reference_topology(ReferenceTopology::Fig6a),
            reference_demand(ReferenceDemand::Fig6Split),
            (4000, 3000),
            0.2141,
        ),
        WhatIfKind::Strategy => (
            "Strategy S2 what-if",
            reference_topology(ReferenceTopology::Fig6a),
            reference_demand(ReferenceDemand::Fig7Equal),
            (8000, 3000),
            0.965,
        ),
    };
    let flags = VariantFlags::default();
    let cfg = SolverConfig::default();
    let baseline = optimize(&topology, params, &demand, &flags, &cfg)?
        .placement
        .total_cost;
    let bigger = topology.with_capacities(caps.0, caps.1);
    let what_if = optimize(&bigger, params, &demand, &flags, &cfg)?
        .placement
        .total_cost;
    let reduction = (baseline - what_if) as f64 / baseline as f64;
    Ok(CapacityWhatIf {
        label: label.to_string(),
        primary_capacity: caps.0,
        secondary_capacity: caps.1,
        baseline_total: baseline,
        what_if_total: what_if,
        reduction,
        published_reduction: published,
        reproduced: (reduction - published).abs() < 1e-4,
    })
}

/// Per-arm summary of one sweep point.
#[derive(Clone, Debug, Serialize)]
pub struct ArmSummary {
    pub arm: String,
    #[serde(
        rename = "total_cents",
        serialize_with = "crate::netmodel::cents::option"
    )]
    pub total: Option<i128>,
    pub na: i64,
    pub np_total: i64,
    pub ns_total: i64,
}

impl ArmSummary {
    fn of(arm: &ArmResult) -> Self {
        let p = arm.placement.as_ref();
        ArmSummary {
            arm: arm.name.clone(),
            total: arm.total(),
            na: p.map_or(0, |p| p.na),
            np_total: p.map_or(0, Placement::np_total),
            ns_total: p.map_or(0, Placement::ns_total),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub x: i64,
    pub arms: Vec<ArmSummary>,
}

impl SweepRow {
    pub fn arm(&self, name: &str) -> Option<&ArmSummary> {
        self.arms.iter().find(|a| a.arm == name)
    }

    pub fn total(&self, name: &str) -> Option<i128> {
        self.arm(name).and_then(|a| a.total)
    }
}

fn sweep_points(from: i64, to: i64, step: i64) -> Result<Vec<i64>> {
    if from < 0 || step <= 0 || to < from {
        return Err(Error::Invalid(vec![crate::netmodel::Violation::new(
            "range",
            format!("need 0 <= from <= to and step > 0 (got {from}..{to} step {step})"),
        )]));
    }
    Ok((0..)
        .map(|k| from + k * step)
        .take_while(|&x| x <= to)
        .collect())
}

/// Runs `row` for every point on worker threads; rows come back ordered by
/// the swept value.
fn sweep<F>(points: &[i64], row: F) -> Result<Vec<SweepRow>>
where
    F: Fn(i64) -> Result<SweepRow> + Sync,
{
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(points.len().max(1));
    let chunk = points.len().div_ceil(workers).max(1);
    let mut rows: Vec<Result<SweepRow>> = std::thread::scope(|s| {
        let handles: Vec<_> = points
            .chunks(chunk)
            .map(|part| {
                let row = &row;
                s.spawn(move || part.iter().map(|&x| row(x)).collect::<Vec<_>>())
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    let mut out = Vec::with_capacity(rows.len());
    for r in rows.drain(..) {
        out.push(r?);
    }
    out.sort_by_key(|r| r.x);
    Ok(out)
}

/// Single primary site, no secondaries.
pub fn single_site_topology() -> Topology {
    Topology::new(vec![0], false)
}

/// Hourly cost at one primary site as its client count grows: hybrid,
/// public cloud only, and dedicated in-house hardware without cloud (the
/// full site capacity is provisioned regardless of load).
pub fn run_figure8(from: i64, to: i64, step: i64, params: &CostParams) -> Result<Vec<SweepRow>> {
    let points = sweep_points(from, to, step)?;
    let topology = single_site_topology();
    sweep(&points, |x| {
        let demand = Demand {
            clients_primary: vec![x],
            clients_secondary: vec![vec![]],
        };
        let hybrid = solve_arm(
            "hybrid",
            &topology,
            params,
            &demand,
            &VariantFlags::default(),
        )?;
        let cloud_only = solve_arm(
            "cloud_only",
            &topology,
            params,
            &demand,
            &VariantFlags {
                cloud_only: true,
                ..Default::default()
            },
        )?;
        let no_cloud = dedicated_no_cloud(&topology, params, &demand)?;
        Ok(SweepRow {
            x,
            arms: [hybrid, cloud_only, no_cloud]
                .iter()
                .map(ArmSummary::of)
                .collect(),
        })
    })
}

fn dedicated_no_cloud(
    topology: &Topology,
    params: &CostParams,
    demand: &Demand,
) -> Result<ArmResult> {
    let flags = VariantFlags {
        allow_cloud: false,
        ..Default::default()
    };
    let (mut problem, index) = build(topology, params, demand, &flags)?;
    for &id in &index.np {
        problem.variables[id].lower = topology.primary_capacity;
    }
    match optimize_problem(
        &problem,
        &index,
        params,
        demand,
        &SolverConfig::default(),
        None,
    ) {
        Ok(o) => Ok(ArmResult {
            name: "no_cloud".to_string(),
            proven_optimal: o.stats.proven_optimal,
            placement: Some(o.placement),
        }),
        Err(Error::Infeasible) => Ok(ArmResult {
            name: "no_cloud".to_string(),
            placement: None,
            proven_optimal: true,
        }),
        Err(e) => Err(e),
    }
}

/// Secondary-redirection sweep result.
#[derive(Clone, Debug, Serialize)]
pub struct RedirectSweep {
    pub rows: Vec<SweepRow>,
    /// Largest `(no_redirect - optimized) / no_redirect` over rows where
    /// both arms are feasible.
    pub max_relative_saving: f64,
    pub layout: String,
}

/// Every secondary of the full-mesh topology gets `cs` clients, swept from
/// `cs_from` to `cs_to`; primaries keep the equal-distribution demand.
/// Rows above secondary capacity leave the no-redirect arm infeasible.
pub fn run_redirect_sweep(
    cs_from: i64,
    cs_to: i64,
    step: i64,
    params: &CostParams,
) -> Result<RedirectSweep> {
    let points = sweep_points(cs_from, cs_to, step)?;
    let topology = reference_topology(ReferenceTopology::Fig6a);
    let rows = sweep(&points, |cs| {
        let mut demand = reference_demand(ReferenceDemand::Fig7Equal);
        for row in &mut demand.clients_secondary {
            row.iter_mut().for_each(|c| *c = cs);
        }
        let no_redirect = solve_arm(
            "no_redirect",
            &topology,
            params,
            &demand,
            &VariantFlags {
                allow_secondary_redirect: false,
                ..Default::default()
            },
        )?;
        let optimized = solve_arm(
            "optimized",
            &topology,
            params,
            &demand,
            &VariantFlags::default(),
        )?;
        Ok(SweepRow {
            x: cs,
            arms: [no_redirect, optimized]
                .iter()
                .map(ArmSummary::of)
                .collect(),
        })
    })?;
    let max_relative_saving = rows
        .iter()
        .filter_map(|r| match (r.total("no_redirect"), r.total("optimized")) {
            (Some(a), Some(b)) => Some((a - b) as f64 / a as f64),
            _ => None,
        })
        .fold(0.0, f64::max);
    Ok(RedirectSweep {
        rows,
        max_relative_saving,
        layout: "topology 6a; every Cs[i,j] set to the swept value, \
                 Cp[i] = 1,050,000 at each primary"
            .to_string(),
    })
}

/// CSV with header `x,arm,total_usd_per_h,na,np_total,ns_total,feasible`,
/// one line per (row, arm). Infeasible arms leave the total empty.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("x,arm,total_usd_per_h,na,np_total,ns_total,feasible\n");
    for r in rows {
        for a in &r.arms {
            let total = a.total.map_or(String::new(), format_usd);
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.x,
                a.arm,
                total,
                a.na,
                a.np_total,
                a.ns_total,
                a.total.is_some()
            );
        }
    }
    out
}

/// Fixed-width text rendering of sweep rows (USD/h).
pub fn sweep_text(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    let Some(first) = rows.first() else {
        return out;
    };
    let _ = write!(out, "{:>10}", "x");
    for a in &first.arms {
        let _ = write!(out, "{:>14}", a.arm);
    }
    out.push('\n');
    for r in rows {
        let _ = write!(out, "{:>10}", r.x);
        for a in &r.arms {
            let cell = a.total.map_or("infeasible".to_string(), format_usd);
            let _ = write!(out, "{cell:>14}");
        }
        out.push('\n');
    }
    out
}
