//! Topologies, prices, demand snapshots and deployment variants.
//!
//! Money is carried as integer thousandths of a cent ([`Millicents`]) so that
//! objective values compare exactly. JSON documents use decimal cents.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Thousandths of a cent. Prices are per server-hour or per client-hour.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Millicents(pub i64);

impl Millicents {
    pub const ZERO: Millicents = Millicents(0);

    /// Converts decimal cents, rounding to the nearest thousandth.
    pub fn from_cents(cents: f64) -> Self {
        Millicents((cents * 1000.0).round() as i64)
    }

    pub fn as_cents(self) -> f64 {
        self.0 as f64 / 1000.0
    }

    pub fn scaled(self, k: i64) -> Self {
        Millicents(self.0 * k)
    }
}

impl fmt::Display for Millicents {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format_cents(self.0 as i128))
    }
}

impl Serialize for Millicents {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.as_cents())
    }
}

impl<'de> Deserialize<'de> for Millicents {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let cents = f64::deserialize(d)?;
        if !cents.is_finite() {
            return Err(serde::de::Error::custom("price must be finite"));
        }
        Ok(Millicents::from_cents(cents))
    }
}

/// Formats millicents as decimal cents without trailing zeros ("1.512", "6").
pub fn format_cents(millicents: i128) -> String {
    let sign = if millicents < 0 { "-" } else { "" };
    let m = millicents.unsigned_abs();
    let whole = m / 1000;
    let frac = m % 1000;
    if frac == 0 {
        format!("{sign}{whole}")
    } else {
        let s = format!("{frac:03}");
        format!("{sign}{whole}.{}", s.trim_end_matches('0'))
    }
}

/// Formats millicents as USD with two decimals, rounding half away from zero.
pub fn format_usd(millicents: i128) -> String {
    // 1 USD = 100 cents = 100_000 millicents; one USD cent is 1000 millicents.
    let sign = if millicents < 0 { "-" } else { "" };
    let m = millicents.unsigned_abs();
    let usd_cents = (m + 500) / 1000;
    format!("{sign}{}.{:02}", usd_cents / 100, usd_cents % 100)
}

/// Millicents to USD as a float, for relative comparisons and CSV output.
pub fn usd(millicents: i128) -> f64 {
    millicents as f64 / 100_000.0
}

/// `serialize_with` helpers writing millicent totals as decimal cents.
pub mod cents {
    use serde::Serializer;

    pub fn serialize<S: Serializer>(v: &i128, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(*v as f64 / 1000.0)
    }

    pub fn option<S: Serializer>(v: &Option<i128>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(v) => serialize(v, s),
            None => s.serialize_none(),
        }
    }
}

/// Site graph: primaries, their attached secondaries, capacities, and
/// whether primaries form a full mesh.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    pub primary_count: i64,
    pub secondaries_per_primary: Vec<i64>,
    #[serde(default = "default_primary_capacity")]
    pub primary_capacity: i64,
    #[serde(default = "default_secondary_capacity")]
    pub secondary_capacity: i64,
    #[serde(default = "default_true")]
    pub inter_primary_links: bool,
}

fn default_primary_capacity() -> i64 {
    800
}

fn default_secondary_capacity() -> i64 {
    100
}

fn default_true() -> bool {
    true
}

impl Topology {
    pub fn new(secondaries_per_primary: Vec<i64>, inter_primary_links: bool) -> Self {
        Topology {
            primary_count: secondaries_per_primary.len() as i64,
            secondaries_per_primary,
            primary_capacity: default_primary_capacity(),
            secondary_capacity: default_secondary_capacity(),
            inter_primary_links,
        }
    }

    pub fn primaries(&self) -> usize {
        self.primary_count.max(0) as usize
    }

    pub fn secondaries(&self, primary: usize) -> usize {
        self.secondaries_per_primary
            .get(primary)
            .copied()
            .unwrap_or(0)
            .max(0) as usize
    }

    pub fn secondary_total(&self) -> usize {
        (0..self.primaries()).map(|i| self.secondaries(i)).sum()
    }

    pub fn with_capacities(mut self, primary: i64, secondary: i64) -> Self {
        self.primary_capacity = primary;
        self.secondary_capacity = secondary;
        self
    }
}

/// The two reference topologies: full mesh and no inter-primary links.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReferenceTopology {
    Fig6a,
    Fig6b,
}

/// Three branches of one primary and two secondaries each, 800/100 capacity.
pub fn reference_topology(kind: ReferenceTopology) -> Topology {
    Topology::new(vec![2, 2, 2], kind == ReferenceTopology::Fig6a)
}

/// A per-primary value: a single broadcast scalar or one entry per primary.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SiteValues {
    Uniform(Millicents),
    Sites(Vec<Millicents>),
}

impl SiteValues {
    pub fn get(&self, i: usize) -> Millicents {
        match self {
            SiteValues::Uniform(v) => *v,
            SiteValues::Sites(v) => v.get(i).copied().unwrap_or_default(),
        }
    }

    fn values(&self) -> Vec<Millicents> {
        match self {
            SiteValues::Uniform(v) => vec![*v],
            SiteValues::Sites(v) => v.clone(),
        }
    }

    fn map(&self, f: impl Fn(Millicents) -> Millicents) -> Self {
        match self {
            SiteValues::Uniform(v) => SiteValues::Uniform(f(*v)),
            SiteValues::Sites(v) => SiteValues::Sites(v.iter().map(|x| f(*x)).collect()),
        }
    }
}

/// A doubly indexed value (secondary sites, or ordered primary pairs).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NestedValues {
    Uniform(Millicents),
    Sites(Vec<Vec<Millicents>>),
}

impl NestedValues {
    pub fn get(&self, i: usize, j: usize) -> Millicents {
        match self {
            NestedValues::Uniform(v) => *v,
            NestedValues::Sites(v) => v
                .get(i)
                .and_then(|row| row.get(j))
                .copied()
                .unwrap_or_default(),
        }
    }

    fn values(&self) -> Vec<Millicents> {
        match self {
            NestedValues::Uniform(v) => vec![*v],
            NestedValues::Sites(v) => v.iter().flatten().copied().collect(),
        }
    }

    fn map(&self, f: impl Fn(Millicents) -> Millicents) -> Self {
        match self {
            NestedValues::Uniform(v) => NestedValues::Uniform(f(*v)),
            NestedValues::Sites(v) => NestedValues::Sites(
                v.iter()
                    .map(|row| row.iter().map(|x| f(*x)).collect())
                    .collect(),
            ),
        }
    }
}

/// Unit prices. Server prices are cents per server-hour; link prices are
/// cents per client-hour carried over the link.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostParams {
    pub server_cloud: Millicents,
    pub server_primary: SiteValues,
    pub server_secondary: NestedValues,
    pub link_cloud: SiteValues,
    pub link_inter_primary: NestedValues,
    pub link_secondary: NestedValues,
    pub server_capacity: i64,
}

impl CostParams {
    /// Multiplies every price by `k`; capacity is unchanged.
    pub fn scale_prices(&self, k: i64) -> CostParams {
        let f = |m: Millicents| m.scaled(k);
        CostParams {
            server_cloud: f(self.server_cloud),
            server_primary: self.server_primary.map(f),
            server_secondary: self.server_secondary.map(f),
            link_cloud: self.link_cloud.map(f),
            link_inter_primary: self.link_inter_primary.map(f),
            link_secondary: self.link_secondary.map(f),
            server_capacity: self.server_capacity,
        }
    }

    fn all_prices(&self) -> Vec<(&'static str, Vec<Millicents>)> {
        vec![
            ("server_cloud", vec![self.server_cloud]),
            ("server_primary", self.server_primary.values()),
            ("server_secondary", self.server_secondary.values()),
            ("link_cloud", self.link_cloud.values()),
            ("link_inter_primary", self.link_inter_primary.values()),
            ("link_secondary", self.link_secondary.values()),
        ]
    }
}

/// Unit prices as printed in the parameter table (`effective = false`), or
/// the link prices under which the published result tables reproduce
/// exactly (`effective = true`: secondary link 1.2, cloud link 1.5).
pub fn default_params(effective: bool) -> CostParams {
    let (link_secondary, link_cloud) = if effective {
        (1200, 1500)
    } else {
        (1260, 1512)
    };
    CostParams {
        server_cloud: Millicents(10_000),
        server_primary: SiteValues::Uniform(Millicents(6_000)),
        server_secondary: NestedValues::Uniform(Millicents(8_000)),
        link_cloud: SiteValues::Uniform(Millicents(link_cloud)),
        link_inter_primary: NestedValues::Uniform(Millicents(1_000)),
        link_secondary: NestedValues::Uniform(Millicents(link_secondary)),
        server_capacity: 300,
    }
}

/// Clients connected to each site during the snapshot hour.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Demand {
    pub clients_primary: Vec<i64>,
    pub clients_secondary: Vec<Vec<i64>>,
}

impl Demand {
    pub fn zeros(topology: &Topology) -> Demand {
        Demand {
            clients_primary: vec![0; topology.primaries()],
            clients_secondary: (0..topology.primaries())
                .map(|i| vec![0; topology.secondaries(i)])
                .collect(),
        }
    }

    pub fn primary(&self, i: usize) -> i64 {
        self.clients_primary.get(i).copied().unwrap_or(0)
    }

    pub fn secondary(&self, i: usize, j: usize) -> i64 {
        self.clients_secondary
            .get(i)
            .and_then(|row| row.get(j))
            .copied()
            .unwrap_or(0)
    }

    /// Clients attached to branch `i` (its primary plus its secondaries).
    pub fn branch_total(&self, i: usize) -> i64 {
        self.primary(i)
            + self
                .clients_secondary
                .get(i)
                .map(|row| row.iter().sum())
                .unwrap_or(0)
    }

    pub fn total(&self) -> i64 {
        (0..self.clients_primary.len())
            .map(|i| self.branch_total(i))
            .sum()
    }
}

/// Reference demand snapshots.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReferenceDemand {
    /// Seven million subscribers split over branches 1 and 3; branch 2 is
    /// empty. The intra-branch split (1.4M at the primary, 1.05M per
    /// secondary) is reverse-engineered from the topology comparison totals.
    Fig6Split,
    /// 1,050,000 clients per primary and 641,900 per secondary.
    Fig7Equal,
}

pub fn reference_demand(kind: ReferenceDemand) -> Demand {
    match kind {
        ReferenceDemand::Fig6Split => Demand {
            clients_primary: vec![1_400_000, 0, 1_400_000],
            clients_secondary: vec![
                vec![1_050_000, 1_050_000],
                vec![0, 0],
                vec![1_050_000, 1_050_000],
            ],
        },
        ReferenceDemand::Fig7Equal => Demand {
            clients_primary: vec![1_050_000; 3],
            clients_secondary: vec![vec![641_900; 2]; 3],
        },
    }
}

/// Deployment-variant switches. Each `false` (or `cloud_only = true`) adds
/// constraints to the base model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct VariantFlags {
    /// `false`: no client redirection between primaries (F_pp = 0).
    pub inter_primary_redirect: bool,
    /// `false`: no servers serve from secondary sites (S_s = 0).
    pub deploy_to_secondary: bool,
    /// `false`: secondary clients are all served locally (C_s = S_s).
    pub allow_secondary_redirect: bool,
    /// `false`: no public cloud servers (n_a = 0).
    pub allow_cloud: bool,
    /// `true`: only public cloud servers (n_p = n_s = 0).
    pub cloud_only: bool,
}

impl Default for VariantFlags {
    fn default() -> Self {
        VariantFlags {
            inter_primary_redirect: true,
            deploy_to_secondary: true,
            allow_secondary_redirect: true,
            allow_cloud: true,
            cloud_only: false,
        }
    }
}

/// Names accepted on the command line for individual variant switches.
pub const VARIANT_NAMES: [&str; 5] = [
    "no-inter-primary",
    "no-secondary",
    "no-redirect",
    "no-cloud",
    "cloud-only",
];

impl VariantFlags {
    /// Applies a named variant switch; returns `false` for unknown names.
    pub fn apply(&mut self, name: &str) -> bool {
        match name {
            "no-inter-primary" => self.inter_primary_redirect = false,
            "no-secondary" => self.deploy_to_secondary = false,
            "no-redirect" => self.allow_secondary_redirect = false,
            "no-cloud" => self.allow_cloud = false,
            "cloud-only" => self.cloud_only = true,
            _ => return false,
        }
        true
    }

    pub fn names(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.inter_primary_redirect {
            out.push("no-inter-primary");
        }
        if !self.deploy_to_secondary {
            out.push("no-secondary");
        }
        if !self.allow_secondary_redirect {
            out.push("no-redirect");
        }
        if !self.allow_cloud {
            out.push("no-cloud");
        }
        if self.cloud_only {
            out.push("cloud-only");
        }
        out
    }
}

/// One well-formedness violation, located by a path such as
/// `demand.clients_secondary[1]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Violation {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Collects every shape and sign violation. An empty list means the
/// instance is well formed.
pub fn validate(
    topology: &Topology,
    params: &CostParams,
    demand: &Demand,
    flags: &VariantFlags,
) -> Vec<Violation> {
    let mut out = Vec::new();

    if topology.primary_count < 1 {
        out.push(Violation::new(
            "topology.primary_count",
            "must be at least 1",
        ));
    }
    if topology.secondaries_per_primary.len() as i64 != topology.primary_count {
        out.push(Violation::new(
            "topology.secondaries_per_primary",
            format!(
                "has {} entries, expected {}",
                topology.secondaries_per_primary.len(),
                topology.primary_count
            ),
        ));
    }
    for (i, &n) in topology.secondaries_per_primary.iter().enumerate() {
        if n < 0 {
            out.push(Violation::new(
                format!("topology.secondaries_per_primary[{i}]"),
                "must be non-negative",
            ));
        }
    }
    if topology.primary_capacity < 0 {
        out.push(Violation::new(
            "topology.primary_capacity",
            "must be non-negative",
        ));
    }
    if topology.secondary_capacity < 0 {
        out.push(Violation::new(
            "topology.secondary_capacity",
            "must be non-negative",
        ));
    }

    if params.server_capacity < 1 {
        out.push(Violation::new(
            "params.server_capacity",
            "must be at least 1",
        ));
    }
    for (name, values) in params.all_prices() {
        if values.iter().any(|v| v.0 < 0) {
            out.push(Violation::new(
                format!("params.{name}"),
                "prices must be non-negative",
            ));
        }
    }
    let p = topology.primaries();
    if let SiteValues::Sites(v) = &params.server_primary {
        check_len(&mut out, "params.server_primary", v.len(), p);
    }
    if let SiteValues::Sites(v) = &params.link_cloud {
        check_len(&mut out, "params.link_cloud", v.len(), p);
    }
    for (name, values) in [
        ("params.server_secondary", &params.server_secondary),
        ("params.link_secondary", &params.link_secondary),
    ] {
        if let NestedValues::Sites(rows) = values {
            if check_len(&mut out, name, rows.len(), p) {
                for (i, row) in rows.iter().enumerate() {
                    check_len(
                        &mut out,
                        &format!("{name}[{i}]"),
                        row.len(),
                        topology.secondaries(i),
                    );
                }
            }
        }
    }
    if let NestedValues::Sites(rows) = &params.link_inter_primary {
        if check_len(&mut out, "params.link_inter_primary", rows.len(), p) {
            for (i, row) in rows.iter().enumerate() {
                check_len(
                    &mut out,
                    &format!("params.link_inter_primary[{i}]"),
                    row.len(),
                    p,
                );
            }
        }
    }

    if check_len(
        &mut out,
        "demand.clients_primary",
        demand.clients_primary.len(),
        p,
    ) {
        for (i, &c) in demand.clients_primary.iter().enumerate() {
            if c < 0 {
                out.push(Violation::new(
                    format!("demand.clients_primary[{i}]"),
                    "must be non-negative",
                ));
            }
        }
    }
    if check_len(
        &mut out,
        "demand.clients_secondary",
        demand.clients_secondary.len(),
        p,
    ) {
        for (i, row) in demand.clients_secondary.iter().enumerate() {
            check_len(
                &mut out,
                &format!("demand.clients_secondary[{i}]"),
                row.len(),
                topology.secondaries(i),
            );
            for (j, &c) in row.iter().enumerate() {
                if c < 0 {
                    out.push(Violation::new(
                        format!("demand.clients_secondary[{i}][{j}]"),
                        "must be non-negative",
                    ));
                }
            }
        }
    }

    if flags.cloud_only && !flags.allow_cloud {
        out.push(Violation::new(
            "variant",
            "cloud_only and allow_cloud=false are mutually exclusive",
        ));
    }
    out
}

fn check_len(out: &mut Vec<Violation>, path: &str, got: usize, want: usize) -> bool {
    if got != want {
        out.push(Violation::new(
            path,
            format!("has {got} entries, expected {want}"),
        ));
        false
    } else {
        true
    }
}

/// A complete problem instance as read from a JSON config document.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub topology: Topology,
    pub params: CostParams,
    pub demand: Demand,
    #[serde(default)]
    pub variant: VariantFlags,
}

impl Instance {
    pub fn validate(&self) -> Vec<Violation> {
        validate(&self.topology, &self.params, &self.demand, &self.variant)
    }
}
