use std::fmt::Write;

use crate::error::{Error, Result};
use crate::netmodel::{format_cents, validate, CostParams, Demand, Topology, VariantFlags};

const MODEL_BASE: &str = "\
# Server placement cost model (prices in cents per hour)

param Pnum integer > 0;
set P := 1..Pnum;
param SAP {P} integer >= 0;
set SEC := {i in P, j in 1..SAP[i]};

param U integer > 0;
param CapP integer >= 0;
param CapS integer >= 0;

param Pa >= 0;
param Pp {P} >= 0;
param Ps {SEC} >= 0;
param La {P} >= 0;
param Lpp {P, P} >= 0 default 0;
param Ls {SEC} >= 0;

param Cp {P} integer >= 0;
param Cs {SEC} integer >= 0;

# C6: non-negative integers
var na integer >= 0;
var np {P} integer >= 0;
var ns {SEC} integer >= 0;
var Sa {P} integer >= 0;
var Sp {P} integer >= 0;
var Ss {SEC} integer >= 0;
var Fpp {i in P, j in P: i <> j} integer >= 0;

minimize TotalCost:
    na * Pa
  + sum {i in P} np[i] * Pp[i]
  + sum {(i,j) in SEC} ns[i,j] * Ps[i,j]
  + sum {(i,j) in SEC} (Cs[i,j] - Ss[i,j]) * Ls[i,j]
  + sum {i in P} Sa[i] * La[i]
  + sum {i in P, j in P: i <> j} Fpp[i,j] * Lpp[i,j];

subject to C1: sum {i in P} Sa[i] <= U * na;
subject to C2 {i in P}: Sp[i] <= U * np[i];
subject to C3 {(i,j) in SEC}: Ss[i,j] <= U * ns[i,j];
subject to C4 {i in P}:
    Cp[i] + sum {j in 1..SAP[i]} Cs[i,j] + sum {k in P: k <> i} Fpp[k,i]
  = Sa[i] + Sp[i] + sum {j in 1..SAP[i]} Ss[i,j] + sum {k in P: k <> i} Fpp[i,k];
";

/// AMPL model and data text for an instance. Both are byte-stable.
pub fn export_ampl(
    topology: &Topology,
    params: &CostParams,
    demand: &Demand,
    flags: &VariantFlags,
) -> Result<(String, String)> {
    let violations = validate(topology, params, demand, flags);
    if !violations.is_empty() {
        return Err(Error::Invalid(violations));
    }
    Ok((
        ampl_model(topology, flags),
        ampl_data(topology, params, demand),
    ))
}

fn ampl_model(topology: &Topology, flags: &VariantFlags) -> String {
    let mut m = String::from(MODEL_BASE);
    if flags.allow_secondary_redirect {
        m.push_str("subject to C5 {(i,j) in SEC}: Ss[i,j] <= Cs[i,j];\n");
    } else {
        m.push_str("subject to C5 {(i,j) in SEC}: Ss[i,j] = Cs[i,j];\n");
    }
    m.push_str("subject to C7p {i in P}: np[i] <= CapP;\n");
    m.push_str("subject to C7s {(i,j) in SEC}: ns[i,j] <= CapS;\n");

    let mut variant = Vec::new();
    if !topology.inter_primary_links || !flags.inter_primary_redirect {
        variant.push("subject to NoFpp {i in P, j in P: i <> j}: Fpp[i,j] = 0;");
    }
    if !flags.deploy_to_secondary {
        variant.push("subject to NoSs {(i,j) in SEC}: Ss[i,j] = 0;");
    }
    if !flags.allow_cloud {
        variant.push("subject to NoCloud: na = 0;");
    }
    if flags.cloud_only {
        variant.push("subject to CloudOnlyP {i in P}: np[i] = 0;");
        variant.push("subject to CloudOnlyS {(i,j) in SEC}: ns[i,j] = 0;");
    }
    if !variant.is_empty() {
        m.push_str("\n# variant restrictions\n");
        for line in variant {
            m.push_str(line);
            m.push('\n');
        }
    }
    m
}

fn param_table(out: &mut String, name: &str, rows: Vec<String>) {
    if rows.is_empty() {
        let _ = writeln!(out, "param {name} := ;");
        return;
    }
    let _ = write!(out, "param {name} :=");
    for r in rows {
        let _ = write!(out, "\n  {r}");
    }
    out.push_str(";\n");
}

fn ampl_data(topology: &Topology, params: &CostParams, demand: &Demand) -> String {
    let p = topology.primaries();
    let cents = |m: crate::netmodel::Millicents| format_cents(m.0 as i128);
    let per_primary = |f: &dyn Fn(usize) -> String| {
        (0..p)
            .map(|i| format!("{} {}", i + 1, f(i)))
            .collect::<Vec<_>>()
    };
    let per_secondary = |f: &dyn Fn(usize, usize) -> String| {
        (0..p)
            .flat_map(|i| (0..topology.secondaries(i)).map(move |j| (i, j)))
            .map(|(i, j)| format!("{} {} {}", i + 1, j + 1, f(i, j)))
            .collect::<Vec<_>>()
    };

    let mut d = String::new();
    let _ = writeln!(d, "param Pnum := {p};");
    param_table(
        &mut d,
        "SAP",
        per_primary(&|i| topology.secondaries(i).to_string()),
    );
    let _ = writeln!(d, "param U := {};", params.server_capacity);
    let _ = writeln!(d, "param CapP := {};", topology.primary_capacity);
    let _ = writeln!(d, "param CapS := {};", topology.secondary_capacity);
    let _ = writeln!(d, "param Pa := {};", cents(params.server_cloud));
    param_table(
        &mut d,
        "Pp",
        per_primary(&|i| cents(params.server_primary.get(i))),
    );
    param_table(
        &mut d,
        "Ps",
        per_secondary(&|i, j| cents(params.server_secondary.get(i, j))),
    );
    param_table(
        &mut d,
        "La",
        per_primary(&|i| cents(params.link_cloud.get(i))),
    );
    let lpp = if topology.inter_primary_links {
        (0..p)
            .flat_map(|i| (0..p).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| {
                format!(
                    "{} {} {}",
                    i + 1,
                    j + 1,
                    cents(params.link_inter_primary.get(i, j))
                )
            })
            .collect()
    } else {
        Vec::new()
    };
    param_table(&mut d, "Lpp", lpp);
    param_table(
        &mut d,
        "Ls",
        per_secondary(&|i, j| cents(params.link_secondary.get(i, j))),
    );
    param_table(
        &mut d,
        "Cp",
        per_primary(&|i| demand.primary(i).to_string()),
    );
    param_table(
        &mut d,
        "Cs",
        per_secondary(&|i, j| demand.secondary(i, j).to_string()),
    );
    d
}
