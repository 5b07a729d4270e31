//! Reactive scaling simulator: a demand trace drives server deploys and
//! destroys chosen by the static optimizer, with launch and teardown
//! latencies.
//!
//! Site ids are `cloud`, `p<i>` and `s<i>.<j>` (1-based).

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::builder::Placement;
use crate::error::{Error, Result};
use crate::netmodel::{CostParams, Demand, Topology, VariantFlags};
use crate::solver::{optimize, SolverConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SiteId {
    Cloud,
    Primary(usize),
    Secondary(usize, usize),
}

impl fmt::Display for SiteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SiteId::Cloud => write!(f, "cloud"),
            SiteId::Primary(i) => write!(f, "p{}", i + 1),
            SiteId::Secondary(i, j) => write!(f, "s{}.{}", i + 1, j + 1),
        }
    }
}

impl FromStr for SiteId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let one_based = |t: &str| -> std::result::Result<usize, String> {
            match t.parse::<usize>() {
                Ok(n) if n >= 1 => Ok(n - 1),
                _ => Err(format!("bad site index {t:?} in {s:?}")),
            }
        };
        let s = s.trim();
        if s == "cloud" {
            Ok(SiteId::Cloud)
        } else if let Some(rest) = s.strip_prefix('p') {
            Ok(SiteId::Primary(one_based(rest)?))
        } else if let Some(rest) = s.strip_prefix('s') {
            let (i, j) = rest
                .split_once('.')
                .ok_or_else(|| format!("secondary id {s:?} must look like s<i>.<j>"))?;
            Ok(SiteId::Secondary(one_based(i)?, one_based(j)?))
        } else {
            Err(format!("unknown site {s:?}"))
        }
    }
}

impl Serialize for SiteId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Absolute client count at `site` from `time` onwards.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceEvent {
    pub time: i64,
    pub site: SiteId,
    pub demand: i64,
}

#[derive(Deserialize)]
struct TraceRow {
    time_s: i64,
    site: String,
    clients: i64,
}

/// Parses a `time_s,site,clients` CSV trace.
pub fn parse_trace(text: &str) -> Result<Vec<TraceEvent>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (k, row) in reader.deserialize::<TraceRow>().enumerate() {
        let line = k + 2;
        let row = row.map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        let site = row
            .site
            .parse()
            .map_err(|message| Error::Parse { line, message })?;
        out.push(TraceEvent {
            time: row.time_s,
            site,
            demand: row.clients,
        });
    }
    Ok(out)
}

fn check_trace(trace: &[TraceEvent], topology: &Topology) -> Result<()> {
    let mut last = 0;
    for (k, ev) in trace.iter().enumerate() {
        let at = format!("trace event {} ({} at t={})", k + 1, ev.site, ev.time);
        if ev.time < 0 {
            return Err(Error::Trace(format!("{at}: negative time")));
        }
        if ev.time < last {
            return Err(Error::Trace(format!(
                "{at}: time goes backwards (previous {last})"
            )));
        }
        last = ev.time;
        if ev.demand < 0 {
            return Err(Error::Trace(format!("{at}: negative demand")));
        }
        let known = match ev.site {
            SiteId::Cloud => {
                return Err(Error::Trace(format!(
                    "{at}: clients cannot connect to the cloud"
                )))
            }
            SiteId::Primary(i) => i < topology.primaries(),
            SiteId::Secondary(i, j) => i < topology.primaries() && j < topology.secondaries(i),
        };
        if !known {
            return Err(Error::Trace(format!("{at}: site not in topology")));
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub deploy_latency: i64,
    pub destroy_latency: i64,
    pub decision_epoch: i64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            deploy_latency: 180,
            destroy_latency: 60,
            decision_epoch: 60,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Deploy,
    Destroy,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Decision {
    pub time: i64,
    pub site: SiteId,
    pub action: Action,
    pub count: i64,
    /// When the servers come up (deploy) or go away (destroy).
    pub effective_at: i64,
}

/// Server state of one site from `time` until its next entry.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TimelinePoint {
    pub time: i64,
    pub site: SiteId,
    pub servers_running: i64,
    pub servers_pending: i64,
    pub servers_destroying: i64,
}

/// Constant-state stretch `[start, end)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Interval {
    pub start: i64,
    pub end: i64,
    pub demand: i64,
    pub served: i64,
    pub unserved: i64,
    /// Millicents per hour (cents per hour in JSON).
    #[serde(
        rename = "cost_rate_cents_per_h",
        serialize_with = "crate::netmodel::cents::serialize"
    )]
    pub cost_rate: i128,
}

#[derive(Clone, Debug, Serialize)]
pub struct SimResult {
    pub end_time: i64,
    pub timeline: Vec<TimelinePoint>,
    pub intervals: Vec<Interval>,
    pub decisions: Vec<Decision>,
    pub served_client_seconds: i128,
    pub unserved_client_seconds: i128,
    /// Σ cost_rate × seconds; divide by 3600 for millicents.
    #[serde(skip)]
    pub cost_rate_seconds: i128,
    /// Accrued cost in millicents, rounded half up.
    #[serde(
        rename = "accrued_cost_cents",
        serialize_with = "crate::netmodel::cents::serialize"
    )]
    pub accrued_cost: i128,
}

impl SimResult {
    /// Servers running at `site` at time `t`.
    pub fn running_at(&self, site: SiteId, t: i64) -> i64 {
        self.timeline
            .iter()
            .rev()
            .find(|p| p.site == site && p.time <= t)
            .map_or(0, |p| p.servers_running)
    }

    /// Intervals with dropped clients.
    pub fn unserved_intervals(&self) -> impl Iterator<Item = &Interval> {
        self.intervals.iter().filter(|iv| iv.unserved > 0)
    }

    /// One line per interval: `start,end,demand,served,unserved,cost_rate_usd_per_h`.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("start_s,end_s,demand,served,unserved,cost_usd_per_h\n");
        for iv in &self.intervals {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                iv.start,
                iv.end,
                iv.demand,
                iv.served,
                iv.unserved,
                crate::netmodel::format_usd(iv.cost_rate)
            ));
        }
        out
    }
}

/// Server sites in a fixed order: cloud, primaries, then secondaries.
fn server_sites(topology: &Topology) -> Vec<SiteId> {
    let mut out = vec![SiteId::Cloud];
    out.extend((0..topology.primaries()).map(SiteId::Primary));
    for i in 0..topology.primaries() {
        out.extend((0..topology.secondaries(i)).map(|j| SiteId::Secondary(i, j)));
    }
    out
}

fn target_of(placement: &Placement, site: SiteId) -> i64 {
    match site {
        SiteId::Cloud => placement.na,
        SiteId::Primary(i) => placement.np[i],
        SiteId::Secondary(i, j) => placement.ns[i][j],
    }
}

#[derive(Clone, Debug, Default)]
struct SiteState {
    running: i64,
    /// (ready time, count)
    deploys: Vec<(i64, i64)>,
    /// (completion time, count)
    destroys: Vec<(i64, i64)>,
}

impl SiteState {
    fn pending(&self) -> i64 {
        self.deploys.iter().map(|d| d.1).sum()
    }

    fn destroying(&self) -> i64 {
        self.destroys.iter().map(|d| d.1).sum()
    }

    fn effective(&self) -> i64 {
        self.running + self.pending() - self.destroying()
    }

    fn settle(&mut self, t: i64) -> bool {
        let before = (self.running, self.deploys.len(), self.destroys.len());
        self.running += self
            .deploys
            .iter()
            .filter(|d| d.0 <= t)
            .map(|d| d.1)
            .sum::<i64>();
        self.deploys.retain(|d| d.0 > t);
        self.running -= self
            .destroys
            .iter()
            .filter(|d| d.0 <= t)
            .map(|d| d.1)
            .sum::<i64>();
        self.destroys.retain(|d| d.0 > t);
        before != (self.running, self.deploys.len(), self.destroys.len())
    }

    fn next_change(&self) -> Option<i64> {
        self.deploys.iter().chain(&self.destroys).map(|d| d.0).min()
    }
}

struct Flow {
    served: i64,
    unserved: i64,
    link_rate: i128,
}

/// Routes current demand onto running capacity: secondaries locally, then
/// the own primary, then other primaries or the cloud by link price.
fn route(
    topology: &Topology,
    params: &CostParams,
    demand: &Demand,
    running: &HashMap<SiteId, i64>,
) -> Flow {
    let u = params.server_capacity;
    let cap = |s: SiteId| running.get(&s).copied().unwrap_or(0) * u;
    let p = topology.primaries();
    let mut free_primary: Vec<i64> = (0..p).map(|i| cap(SiteId::Primary(i))).collect();
    let mut free_cloud = cap(SiteId::Cloud);
    let mut link_rate: i128 = 0;
    let mut served = 0;
    let mut pools = vec![0i64; p];

    for i in 0..p {
        for j in 0..topology.secondaries(i) {
            let c = demand.secondary(i, j);
            let local = c.min(cap(SiteId::Secondary(i, j)));
            served += local;
            pools[i] += c - local;
        }
    }
    // Redirected secondary clients and primary clients share the own primary.
    let mut overflow = vec![0i64; p];
    for i in 0..p {
        let want = demand.primary(i) + pools[i];
        let take = want.min(free_primary[i]);
        free_primary[i] -= take;
        served += take;
        overflow[i] = want - take;
    }
    for i in 0..p {
        let mut options: Vec<(i64, Option<usize>)> = Vec::new();
        if topology.inter_primary_links {
            options.extend(
                (0..p)
                    .filter(|&j| j != i)
                    .map(|j| (params.link_inter_primary.get(i, j).0, Some(j))),
            );
        }
        options.push((params.link_cloud.get(i).0, None));
        options.sort_by_key(|o| o.0);
        for (price, target) in options {
            if overflow[i] == 0 {
                break;
            }
            let free = match target {
                Some(j) => &mut free_primary[j],
                None => &mut free_cloud,
            };
            let take = overflow[i].min(*free);
            *free -= take;
            overflow[i] -= take;
            served += take;
            link_rate += take as i128 * price as i128;
        }
    }
    // Secondary clients served away from their site cross the access link;
    // dropped ones are charged nothing. Drops come out of the branch pool first.
    for i in 0..p {
        let redirected_served = pools[i] - overflow[i].min(pools[i]);
        let mut left = redirected_served as i128;
        for j in 0..topology.secondaries(i) {
            if left == 0 {
                break;
            }
            let c = demand.secondary(i, j);
            let away = (c - c.min(cap(SiteId::Secondary(i, j)))) as i128;
            let n = away.min(left);
            link_rate += n * params.link_secondary.get(i, j).0 as i128;
            left -= n;
        }
    }
    Flow {
        served,
        unserved: overflow.iter().sum(),
        link_rate,
    }
}

fn server_rate(params: &CostParams, running: &HashMap<SiteId, i64>) -> i128 {
    running
        .iter()
        .map(|(&s, &n)| {
            let price = match s {
                SiteId::Cloud => params.server_cloud,
                SiteId::Primary(i) => params.server_primary.get(i),
                SiteId::Secondary(i, j) => params.server_secondary.get(i, j),
            };
            n as i128 * price.0 as i128
        })
        .sum()
}

/// Runs the reactive loop over `trace`. Demand starts at zero everywhere;
/// decisions happen at multiples of the epoch. The run ends one epoch plus
/// the longer latency plus another epoch after the last trace event.
pub fn simulate(
    trace: &[TraceEvent],
    topology: &Topology,
    params: &CostParams,
    config: &SimConfig,
) -> Result<SimResult> {
    if config.deploy_latency < 0 || config.destroy_latency < 0 || config.decision_epoch <= 0 {
        return Err(Error::Trace(
            "latencies must be >= 0 and the decision epoch > 0".to_string(),
        ));
    }
    check_trace(trace, topology)?;
    let flags = VariantFlags::default();
    let epoch = config.decision_epoch;
    let last = trace.last().map_or(0, |e| e.time);
    let end_time = last + 2 * epoch + config.deploy_latency.max(config.destroy_latency);

    let sites = server_sites(topology);
    let mut state: BTreeMap<SiteId, SiteState> =
        sites.iter().map(|&s| (s, SiteState::default())).collect();
    let mut demand = Demand::zeros(topology);
    let mut cache: HashMap<Demand, Placement> = HashMap::new();
    let mut result = SimResult {
        end_time,
        timeline: Vec::new(),
        intervals: Vec::new(),
        decisions: Vec::new(),
        served_client_seconds: 0,
        unserved_client_seconds: 0,
        cost_rate_seconds: 0,
        accrued_cost: 0,
    };
    let mut next_event = 0usize;
    let mut t = 0;
    let mut last_snapshot: BTreeMap<SiteId, (i64, i64, i64)> = BTreeMap::new();

    while t < end_time {
        while next_event < trace.len() && trace[next_event].time == t {
            let ev = &trace[next_event];
            match ev.site {
                SiteId::Primary(i) => demand.clients_primary[i] = ev.demand,
                SiteId::Secondary(i, j) => demand.clients_secondary[i][j] = ev.demand,
                SiteId::Cloud => unreachable!("rejected by check_trace"),
            }
            next_event += 1;
        }
        if t % epoch == 0 {
            let placement = match cache.get(&demand) {
                Some(p) => p.clone(),
                None => {
                    let p = optimize(topology, params, &demand, &flags, &SolverConfig::default())?
                        .placement;
                    cache.insert(demand.clone(), p.clone());
                    p
                }
            };
            for &site in &sites {
                let st = state.get_mut(&site).expect("every site has state");
                let target = target_of(&placement, site);
                let effective = st.effective();
                if target > effective {
                    let count = target - effective;
                    let at = t + config.deploy_latency;
                    st.deploys.push((at, count));
                    result.decisions.push(Decision {
                        time: t,
                        site,
                        action: Action::Deploy,
                        count,
                        effective_at: at,
                    });
                } else if target < effective {
                    let count = (effective - target).min(st.running - st.destroying());
                    if count > 0 {
                        let at = t + config.destroy_latency;
                        st.destroys.push((at, count));
                        result.decisions.push(Decision {
                            time: t,
                            site,
                            action: Action::Destroy,
                            count,
                            effective_at: at,
                        });
                    }
                }
            }
        }
        for st in state.values_mut() {
            st.settle(t);
        }
        for (&site, st) in &state {
            let snap = (st.running, st.pending(), st.destroying());
            if last_snapshot.get(&site) != Some(&snap) {
                last_snapshot.insert(site, snap);
                result.timeline.push(TimelinePoint {
                    time: t,
                    site,
                    servers_running: snap.0,
                    servers_pending: snap.1,
                    servers_destroying: snap.2,
                });
            }
        }

        let mut next = end_time.min((t / epoch + 1) * epoch);
        if let Some(ev) = trace.get(next_event) {
            next = next.min(ev.time);
        }
        if let Some(c) = state.values().filter_map(SiteState::next_change).min() {
            next = next.min(c);
        }

        let running: HashMap<SiteId, i64> = state.iter().map(|(&s, st)| (s, st.running)).collect();
        let flow = route(topology, params, &demand, &running);
        let rate = server_rate(params, &running) + flow.link_rate;
        let dt = (next - t) as i128;
        result.served_client_seconds += flow.served as i128 * dt;
        result.unserved_client_seconds += flow.unserved as i128 * dt;
        result.cost_rate_seconds += rate * dt;
        let interval = Interval {
            start: t,
            end: next,
            demand: demand.total(),
            served: flow.served,
            unserved: flow.unserved,
            cost_rate: rate,
        };
        match result.intervals.last_mut() {
            Some(prev)
                if prev.end == t
                    && (prev.demand, prev.served, prev.unserved, prev.cost_rate)
                        == (
                            interval.demand,
                            interval.served,
                            interval.unserved,
                            interval.cost_rate,
                        ) =>
            {
                prev.end = next;
            }
            _ => result.intervals.push(interval),
        }
        t = next;
    }
    result.accrued_cost = (result.cost_rate_seconds + 1800) / 3600;
    Ok(result)
}
