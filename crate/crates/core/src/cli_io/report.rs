use std::fmt::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::builder::{Breakdown, Placement};
use crate::error::{Error, Result};
use crate::netmodel::{
    default_params, format_usd, CostParams, Demand, Instance, Topology, VariantFlags,
};
use crate::solver::{SolveStats, SolverConfig};

/// Which price set a run uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ParamSet {
    /// Link prices exactly as printed in the parameter table.
    Table1,
    /// Link prices under which the reference tables reproduce.
    Effective,
}

impl ParamSet {
    pub fn params(self) -> CostParams {
        default_params(self == ParamSet::Effective)
    }
}

/// JSON config document. `params` falls back to the effective price set;
/// `demand` is only required for solving and exporting.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub topology: Topology,
    #[serde(default)]
    pub params: Option<CostParams>,
    #[serde(default)]
    pub demand: Option<Demand>,
    #[serde(default)]
    pub variant: VariantFlags,
    #[serde(default)]
    pub sim: crate::autosim::SimConfig,
}

/// Price source recorded in reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamSource {
    Table1,
    Effective,
    Config,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<ConfigFile> {
        Ok(serde_json::from_str(text)?)
    }

    /// Resolved prices: an explicit set wins over the config's own.
    pub fn params(&self, choice: Option<ParamSet>) -> (CostParams, ParamSource) {
        match (choice, &self.params) {
            (Some(ParamSet::Table1), _) => (ParamSet::Table1.params(), ParamSource::Table1),
            (Some(ParamSet::Effective), _) | (None, None) => {
                (ParamSet::Effective.params(), ParamSource::Effective)
            }
            (None, Some(p)) => (p.clone(), ParamSource::Config),
        }
    }

    pub fn instance(&self, choice: Option<ParamSet>) -> Result<(Instance, ParamSource)> {
        let demand = self.demand.clone().ok_or_else(|| {
            Error::Invalid(vec![crate::netmodel::Violation::new(
                "demand",
                "missing; required to build the model",
            )])
        })?;
        let (params, source) = self.params(choice);
        let instance = Instance {
            topology: self.topology.clone(),
            params,
            demand,
            variant: self.variant,
        };
        let violations = instance.validate();
        if !violations.is_empty() {
            return Err(Error::Invalid(violations));
        }
        Ok((instance, source))
    }
}

/// SHA-256 of the instance's canonical JSON encoding.
pub fn instance_hash(instance: &Instance) -> String {
    let bytes = serde_json::to_vec(instance).expect("instance serializes");
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub instance_sha256: String,
    pub params: ParamSource,
    pub variant: Vec<&'static str>,
    pub solver: SolverConfig,
    pub placement: Placement,
    pub breakdown: Breakdown,
    #[serde(serialize_with = "crate::netmodel::cents::serialize")]
    pub total_cents: i128,
    pub total_usd_per_h: String,
    pub stats: SolveStats,
}

impl RunReport {
    pub fn new(
        instance: &Instance,
        source: ParamSource,
        solver: SolverConfig,
        placement: Placement,
        stats: SolveStats,
    ) -> RunReport {
        let breakdown = placement.breakdown;
        let total = breakdown.total();
        debug_assert_eq!(total, placement.total_cost);
        RunReport {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            instance_sha256: instance_hash(instance),
            params: source,
            variant: instance.variant.names(),
            solver,
            placement,
            breakdown,
            total_cents: total,
            total_usd_per_h: format_usd(total),
            stats,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn to_text(&self) -> String {
        let b = &self.breakdown;
        let p = &self.placement;
        let mut out = String::new();
        let _ = writeln!(out, "Total cost: {} USD/h", self.total_usd_per_h);
        for (label, v) in [
            ("A cloud servers", b.a),
            ("B primary servers", b.b),
            ("C secondary servers", b.c),
            ("D secondary links", b.d),
            ("E cloud links", b.e),
            ("F inter-primary links", b.f),
        ] {
            let _ = writeln!(out, "  {label:<24}{:>14}", format_usd(v));
        }
        let _ = writeln!(out, "na = {}", p.na);
        for i in 0..p.np.len() {
            let _ = writeln!(
                out,
                "np[{}] = {}  Sp[{}] = {}  Sa[{}] = {}",
                i + 1,
                p.np[i],
                i + 1,
                p.sp[i],
                i + 1,
                p.sa[i]
            );
        }
        for i in 0..p.ns.len() {
            for j in 0..p.ns[i].len() {
                let _ = writeln!(
                    out,
                    "ns[{},{}] = {}  Ss[{},{}] = {}",
                    i + 1,
                    j + 1,
                    p.ns[i][j],
                    i + 1,
                    j + 1,
                    p.ss[i][j]
                );
            }
        }
        for (i, row) in p.fpp.iter().enumerate() {
            for (j, &f) in row.iter().enumerate() {
                if f != 0 {
                    let _ = writeln!(out, "Fpp[{},{}] = {f}", i + 1, j + 1);
                }
            }
        }
        if !self.variant.is_empty() {
            let _ = writeln!(out, "variant: {}", self.variant.join(","));
        }
        let _ = writeln!(
            out,
            "nodes: {}, optimal: {}",
            self.stats.nodes, self.stats.proven_optimal
        );
        out
    }

    /// `name,value` rows: every variable, then the cost terms in USD/h.
    pub fn to_csv(&self) -> String {
        let p = &self.placement;
        let mut out = String::from("name,value\n");
        let _ = writeln!(out, "na,{}", p.na);
        for (i, v) in p.np.iter().enumerate() {
            let _ = writeln!(out, "np[{}],{v}", i + 1);
        }
        for (i, row) in p.ns.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let _ = writeln!(out, "\"ns[{},{}]\",{v}", i + 1, j + 1);
            }
        }
        for (i, v) in p.sa.iter().enumerate() {
            let _ = writeln!(out, "Sa[{}],{v}", i + 1);
        }
        for (i, v) in p.sp.iter().enumerate() {
            let _ = writeln!(out, "Sp[{}],{v}", i + 1);
        }
        for (i, row) in p.ss.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let _ = writeln!(out, "\"Ss[{},{}]\",{v}", i + 1, j + 1);
            }
        }
        for (i, row) in p.fpp.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if i != j {
                    let _ = writeln!(out, "\"Fpp[{},{}]\",{v}", i + 1, j + 1);
                }
            }
        }
        let b = &self.breakdown;
        for (k, v) in [
            ("A", b.a),
            ("B", b.b),
            ("C", b.c),
            ("D", b.d),
            ("E", b.e),
            ("F", b.f),
        ] {
            let _ = writeln!(out, "{k}_usd_per_h,{}", format_usd(v));
        }
        let _ = writeln!(out, "total_usd_per_h,{}", self.total_usd_per_h);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::optimize;

    fn config_json(with_params: bool) -> String {
        let params = if with_params {
            r#""params": {"server_cloud": 10, "server_primary": 6, "server_secondary": 8,
                "link_cloud": 1.512, "link_inter_primary": 1, "link_secondary": 1.26, "server_capacity": 300},"#
        } else {
            ""
        };
        format!(
            r#"{{"topology": {{"primary_count": 1, "secondaries_per_primary": [1]}}, {params}
               "demand": {{"clients_primary": [600], "clients_secondary": [[30]]}}}}"#
        )
    }

    #[test]
    fn params_resolution() {
        let bare = ConfigFile::parse(&config_json(false)).unwrap();
        assert_eq!(
            bare.params(None),
            (default_params(true), ParamSource::Effective)
        );
        let own = ConfigFile::parse(&config_json(true)).unwrap();
        assert_eq!(
            own.params(None),
            (default_params(false), ParamSource::Config)
        );
        assert_eq!(
            own.params(Some(ParamSet::Effective)).1,
            ParamSource::Effective
        );
        assert_eq!(bare.params(Some(ParamSet::Table1)).0, default_params(false));
    }

    #[test]
    fn unknown_keys_and_missing_demand() {
        assert!(matches!(
            ConfigFile::parse(
                r#"{"topology": {"primary_count": 1, "secondaries_per_primary": [0]}, "bogus": 1}"#
            ),
            Err(Error::Json(_))
        ));
        let c = ConfigFile::parse(
            r#"{"topology": {"primary_count": 1, "secondaries_per_primary": [0]}}"#,
        )
        .unwrap();
        assert!(matches!(c.instance(None), Err(Error::Invalid(_))));
    }

    #[test]
    fn report_totals_and_hash() {
        let c = ConfigFile::parse(&config_json(false)).unwrap();
        let (inst, src) = c.instance(None).unwrap();
        let o = optimize(
            &inst.topology,
            &inst.params,
            &inst.demand,
            &inst.variant,
            &SolverConfig::default(),
        )
        .unwrap();
        let r = RunReport::new(&inst, src, SolverConfig::default(), o.placement, o.stats);
        assert_eq!(r.breakdown.total(), r.total_cents);
        // two primary servers, one secondary server
        assert_eq!(r.total_cents, 2 * 6000 + 8000);
        assert_eq!(r.total_usd_per_h, "0.20");
        assert_eq!(r.instance_sha256.len(), 64);
        assert_eq!(r.instance_sha256, instance_hash(&inst));
        let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(json["total_cents"], 20.0);
        assert_eq!(json["breakdown"]["b"], 12.0);
        assert!(r.to_text().starts_with("Total cost: 0.20 USD/h\n"));
        assert!(r.to_csv().ends_with("total_usd_per_h,0.20\n"));
    }
}
