//! Builds the placement MILP, decodes solver assignments into placements and
//! prices placements term by term.
//!
//! Objective terms, in thousandths of a cent per hour:
//!
//! * A: cloud servers, `na * Pa`
//! * B: primary servers, `sum np[i] * Pp[i]`
//! * C: secondary servers, `sum ns[i,j] * Ps[i,j]`
//! * D: secondary-to-primary redirection, `sum (Cs[i,j] - Ss[i,j]) * Ls[i,j]`
//! * E: cloud link, `sum Sa[i] * La[i]`
//! * F: inter-primary redirection, `sum Fpp[i,j] * Lpp[i,j]`

use serde::Serialize;

use crate::error::{Error, Result};
use crate::milp::{Assignment, Constraint, LinExpr, MilpProblem, Relation, VarId};
use crate::netmodel::{validate, CostParams, Demand, Topology, VariantFlags};

/// Dense ids of every model variable. Indices are 0-based here; variable
/// names use 1-based indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarIndex {
    pub na: VarId,
    pub np: Vec<VarId>,
    pub ns: Vec<Vec<VarId>>,
    pub sa: Vec<VarId>,
    pub sp: Vec<VarId>,
    pub ss: Vec<Vec<VarId>>,
    /// `fpp[i][j]` is `None` on the diagonal and when primaries are not linked.
    pub fpp: Vec<Vec<Option<VarId>>>,
    pub len: usize,
}

impl VarIndex {
    pub fn primaries(&self) -> usize {
        self.np.len()
    }

    /// Server-count variables (`na`, `np`, `ns`).
    pub fn server_vars(&self) -> Vec<VarId> {
        let mut v = vec![self.na];
        v.extend(&self.np);
        v.extend(self.ns.iter().flatten());
        v
    }
}

/// Cost terms A-F in thousandths of a cent per hour.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Breakdown {
    #[serde(serialize_with = "crate::netmodel::cents::serialize")]
    pub a: i128,
    #[serde(serialize_with = "crate::netmodel::cents::serialize")]
    pub b: i128,
    #[serde(serialize_with = "crate::netmodel::cents::serialize")]
    pub c: i128,
    #[serde(serialize_with = "crate::netmodel::cents::serialize")]
    pub d: i128,
    #[serde(serialize_with = "crate::netmodel::cents::serialize")]
    pub e: i128,
    #[serde(serialize_with = "crate::netmodel::cents::serialize")]
    pub f: i128,
}

impl Breakdown {
    pub fn total(&self) -> i128 {
        self.a + self.b + self.c + self.d + self.e + self.f
    }

    pub fn server_cost(&self) -> i128 {
        self.a + self.b + self.c
    }

    pub fn link_cost(&self) -> i128 {
        self.d + self.e + self.f
    }
}

/// A decoded solution: server counts and served-client counts per site.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Placement {
    pub na: i64,
    pub np: Vec<i64>,
    pub ns: Vec<Vec<i64>>,
    pub sa: Vec<i64>,
    pub sp: Vec<i64>,
    pub ss: Vec<Vec<i64>>,
    /// Clients redirected from primary `i` to primary `j`; zero diagonal.
    pub fpp: Vec<Vec<i64>>,
    pub breakdown: Breakdown,
    #[serde(serialize_with = "crate::netmodel::cents::serialize")]
    pub total_cost: i128,
}

impl Placement {
    /// All-zero placement shaped like `topology`.
    pub fn empty(topology: &Topology) -> Placement {
        let p = topology.primaries();
        let sec = |_: ()| {
            (0..p)
                .map(|i| vec![0; topology.secondaries(i)])
                .collect::<Vec<_>>()
        };
        Placement {
            na: 0,
            np: vec![0; p],
            ns: sec(()),
            sa: vec![0; p],
            sp: vec![0; p],
            ss: sec(()),
            fpp: vec![vec![0; p]; p],
            breakdown: Breakdown::default(),
            total_cost: 0,
        }
    }

    pub fn np_total(&self) -> i64 {
        self.np.iter().sum()
    }

    pub fn ns_total(&self) -> i64 {
        self.ns.iter().flatten().sum()
    }

    fn check_shape(&self, topology: &Topology) -> Result<()> {
        let p = topology.primaries();
        let bad = |what: &str| Err(Error::Shape(what.to_string()));
        if self.np.len() != p || self.sa.len() != p || self.sp.len() != p {
            return bad("primary arrays");
        }
        if self.fpp.len() != p || self.fpp.iter().any(|r| r.len() != p) {
            return bad("fpp");
        }
        for i in 0..p {
            let s = topology.secondaries(i);
            if self.ns.get(i).map(Vec::len) != Some(s) || self.ss.get(i).map(Vec::len) != Some(s) {
                return bad(&format!("secondary arrays of primary {}", i + 1));
            }
        }
        if self.ns.len() != p || self.ss.len() != p {
            return bad("secondary arrays");
        }
        Ok(())
    }
}

/// Builds the MILP. Constraints:
///
/// * `C1`: cloud capacity, `sum Sa[i] <= na * U`
/// * `C2[i]`, `C3[i,j]`: site capacity, `S <= n * U`
/// * `C4[i]`: branch conservation including inter-primary redirection
/// * `C5[i,j]`: `Ss <= Cs` (equality when secondary redirection is off)
/// * non-negativity and integrality through variable bounds
/// * `np <= primary_capacity`, `ns <= secondary_capacity` as upper bounds
///
/// Variant flags add `NoFpp`, `NoSs`, `NoCloud` and `CloudOnly*` rows.
pub fn build(
    topology: &Topology,
    params: &CostParams,
    demand: &Demand,
    flags: &VariantFlags,
) -> Result<(MilpProblem, VarIndex)> {
    let violations = validate(topology, params, demand, flags);
    if !violations.is_empty() {
        return Err(Error::Invalid(violations));
    }
    let p = topology.primaries();
    let u = params.server_capacity;
    let total = demand.total();
    let cloud_max = (total + u - 1) / u;

    let mut m = MilpProblem::new("telco_placement");
    let na = m.add_var("na", 0, Some(cloud_max), true);
    let np: Vec<VarId> = (0..p)
        .map(|i| {
            m.add_var(
                format!("np[{}]", i + 1),
                0,
                Some(topology.primary_capacity),
                true,
            )
        })
        .collect();
    let ns: Vec<Vec<VarId>> = (0..p)
        .map(|i| {
            (0..topology.secondaries(i))
                .map(|j| {
                    m.add_var(
                        format!("ns[{},{}]", i + 1, j + 1),
                        0,
                        Some(topology.secondary_capacity),
                        true,
                    )
                })
                .collect()
        })
        .collect();
    let sa: Vec<VarId> = (0..p)
        .map(|i| m.add_var(format!("Sa[{}]", i + 1), 0, Some(total), true))
        .collect();
    let sp: Vec<VarId> = (0..p)
        .map(|i| m.add_var(format!("Sp[{}]", i + 1), 0, Some(total), true))
        .collect();
    let ss: Vec<Vec<VarId>> = (0..p)
        .map(|i| {
            (0..topology.secondaries(i))
                .map(|j| m.add_var(format!("Ss[{},{}]", i + 1, j + 1), 0, Some(total), true))
                .collect()
        })
        .collect();
    let fpp: Vec<Vec<Option<VarId>>> = (0..p)
        .map(|i| {
            (0..p)
                .map(|j| {
                    (i != j && topology.inter_primary_links).then(|| {
                        m.add_var(format!("Fpp[{},{}]", i + 1, j + 1), 0, Some(total), true)
                    })
                })
                .collect()
        })
        .collect();
    let index = VarIndex {
        na,
        np,
        ns,
        sa,
        sp,
        ss,
        fpp,
        len: m.variables.len(),
    };

    let mut obj = LinExpr::new().with(index.na, params.server_cloud.0);
    for i in 0..p {
        obj.add_term(index.np[i], params.server_primary.get(i).0);
        obj.add_term(index.sa[i], params.link_cloud.get(i).0);
        for j in 0..topology.secondaries(i) {
            let ls = params.link_secondary.get(i, j).0;
            obj.add_term(index.ns[i][j], params.server_secondary.get(i, j).0);
            obj.add_term(index.ss[i][j], -ls);
            obj.constant += demand.secondary(i, j) * ls;
        }
        for j in 0..p {
            if let Some(f) = index.fpp[i][j] {
                obj.add_term(f, params.link_inter_primary.get(i, j).0);
            }
        }
    }
    m.objective = obj;

    let mut c1 = LinExpr::new().with(index.na, -u);
    for &s in &index.sa {
        c1.add_term(s, 1);
    }
    m.add_constraint(Constraint::new("C1", c1, Relation::Le, 0));
    for i in 0..p {
        m.add_constraint(Constraint::new(
            format!("C2[{}]", i + 1),
            LinExpr::new().with(index.sp[i], 1).with(index.np[i], -u),
            Relation::Le,
            0,
        ));
    }
    for i in 0..p {
        for j in 0..topology.secondaries(i) {
            m.add_constraint(Constraint::new(
                format!("C3[{},{}]", i + 1, j + 1),
                LinExpr::new()
                    .with(index.ss[i][j], 1)
                    .with(index.ns[i][j], -u),
                Relation::Le,
                0,
            ));
        }
    }
    for i in 0..p {
        let mut e = LinExpr::new().with(index.sa[i], 1).with(index.sp[i], 1);
        for &s in &index.ss[i] {
            e.add_term(s, 1);
        }
        for j in 0..p {
            if let Some(out) = index.fpp[i][j] {
                e.add_term(out, 1);
            }
            if let Some(inbound) = index.fpp[j][i] {
                e.add_term(inbound, -1);
            }
        }
        m.add_constraint(Constraint::new(
            format!("C4[{}]", i + 1),
            e,
            Relation::Eq,
            demand.branch_total(i),
        ));
    }
    let c5 = if flags.allow_secondary_redirect {
        Relation::Le
    } else {
        Relation::Eq
    };
    for i in 0..p {
        for j in 0..topology.secondaries(i) {
            m.add_constraint(Constraint::new(
                format!("C5[{},{}]", i + 1, j + 1),
                LinExpr::new().with(index.ss[i][j], 1),
                c5,
                demand.secondary(i, j),
            ));
        }
    }

    let fix_zero = |m: &mut MilpProblem, name: String, id: VarId| {
        m.add_constraint(Constraint::new(
            name,
            LinExpr::new().with(id, 1),
            Relation::Eq,
            0,
        ));
    };
    if !flags.inter_primary_redirect {
        for i in 0..p {
            for j in 0..p {
                if let Some(f) = index.fpp[i][j] {
                    fix_zero(&mut m, format!("NoFpp[{},{}]", i + 1, j + 1), f);
                }
            }
        }
    }
    if !flags.deploy_to_secondary {
        for i in 0..p {
            for (j, &s) in index.ss[i].iter().enumerate() {
                fix_zero(&mut m, format!("NoSs[{},{}]", i + 1, j + 1), s);
            }
        }
    }
    if !flags.allow_cloud {
        fix_zero(&mut m, "NoCloud".to_string(), index.na);
    }
    if flags.cloud_only {
        for i in 0..p {
            fix_zero(&mut m, format!("CloudOnlyP[{}]", i + 1), index.np[i]);
            for (j, &n) in index.ns[i].iter().enumerate() {
                fix_zero(&mut m, format!("CloudOnlyS[{},{}]", i + 1, j + 1), n);
            }
        }
    }
    Ok((m, index))
}

/// Reads the model variables out of `assignment` and prices them.
pub fn decode(
    index: &VarIndex,
    assignment: &Assignment,
    params: &CostParams,
    demand: &Demand,
) -> Result<Placement> {
    if assignment.0.len() != index.len {
        return Err(Error::AssignmentLength {
            got: assignment.0.len(),
            want: index.len,
        });
    }
    let x = &assignment.0;
    let p = index.primaries();
    let mut pl = Placement {
        na: x[index.na],
        np: index.np.iter().map(|&v| x[v]).collect(),
        ns: index
            .ns
            .iter()
            .map(|r| r.iter().map(|&v| x[v]).collect())
            .collect(),
        sa: index.sa.iter().map(|&v| x[v]).collect(),
        sp: index.sp.iter().map(|&v| x[v]).collect(),
        ss: index
            .ss
            .iter()
            .map(|r| r.iter().map(|&v| x[v]).collect())
            .collect(),
        fpp: (0..p)
            .map(|i| {
                (0..p)
                    .map(|j| index.fpp[i][j].map_or(0, |v| x[v]))
                    .collect()
            })
            .collect(),
        ..Default::default()
    };
    pl.breakdown = breakdown(&pl, params, demand);
    pl.total_cost = pl.breakdown.total();
    Ok(pl)
}

/// Inverse of [`decode`] for the variables present in `index`.
pub fn encode(index: &VarIndex, placement: &Placement) -> Assignment {
    let mut x = vec![0; index.len];
    x[index.na] = placement.na;
    for i in 0..index.primaries() {
        x[index.np[i]] = placement.np[i];
        x[index.sa[i]] = placement.sa[i];
        x[index.sp[i]] = placement.sp[i];
        for j in 0..index.ns[i].len() {
            x[index.ns[i][j]] = placement.ns[i][j];
            x[index.ss[i][j]] = placement.ss[i][j];
        }
        for j in 0..index.primaries() {
            if let Some(v) = index.fpp[i][j] {
                x[v] = placement.fpp[i][j];
            }
        }
    }
    Assignment(x)
}

fn breakdown(pl: &Placement, params: &CostParams, demand: &Demand) -> Breakdown {
    let mul = |a: i64, m: i64| a as i128 * m as i128;
    let mut b = Breakdown {
        a: mul(pl.na, params.server_cloud.0),
        ..Default::default()
    };
    for i in 0..pl.np.len() {
        b.b += mul(pl.np[i], params.server_primary.get(i).0);
        b.e += mul(pl.sa[i], params.link_cloud.get(i).0);
        for j in 0..pl.ns[i].len() {
            b.c += mul(pl.ns[i][j], params.server_secondary.get(i, j).0);
            b.d += mul(
                demand.secondary(i, j) - pl.ss[i][j],
                params.link_secondary.get(i, j).0,
            );
        }
        for j in 0..pl.np.len() {
            if i != j {
                b.f += mul(pl.fpp[i][j], params.link_inter_primary.get(i, j).0);
            }
        }
    }
    b
}

/// Total hourly cost of `placement` with its A-F breakdown.
pub fn cost_of(
    placement: &Placement,
    params: &CostParams,
    demand: &Demand,
    topology: &Topology,
) -> Result<Breakdown> {
    placement.check_shape(topology)?;
    Ok(breakdown(placement, params, demand))
}

/// Branch-conservation residuals (inbound minus served) per primary.
/// All zero for a placement that satisfies the conservation rows.
pub fn conservation_residuals(placement: &Placement, demand: &Demand) -> Vec<i64> {
    let p = placement.np.len();
    (0..p)
        .map(|i| {
            let inbound: i64 = (0..p)
                .filter(|&j| j != i)
                .map(|j| placement.fpp[j][i])
                .sum();
            let outbound: i64 = (0..p)
                .filter(|&j| j != i)
                .map(|j| placement.fpp[i][j])
                .sum();
            let served = placement.sa[i] + placement.sp[i] + placement.ss[i].iter().sum::<i64>();
            demand.branch_total(i) + inbound - served - outbound
        })
        .collect()
}
