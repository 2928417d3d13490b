//! Fixed-timestep simulation over buoy drift, batteries, the link graph and
//! moving terminals, plus the bundled Red Sea calibration scenario.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{self, BuoyState, EnergyState};
use crate::error::{Error, Result};
use crate::geo::{BoundingBox, EnuPoint, Geodetic};
use crate::mesh::{self, LinkGraph, NodeState, NodeStates, TerminalEndpoint};
use crate::model::{
    has_errors, validate_scenario, Cents, Finding, ItemKind, NodeKind, NodeSpec, PriceList, Scenario, Severity,
};

pub use crate::model::SimParams;

pub const METRICS_SCHEMA: &str = "seamesh.metrics";
pub const METRICS_SCHEMA_VERSION: u32 = 1;

/// A point on a terminal track; `speed_m_s` applies on the leg leaving it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub position: EnuPoint,
    #[serde(default)]
    pub speed_m_s: f64,
}

impl Waypoint {
    pub fn new(x: f64, y: f64, speed_m_s: f64) -> Self {
        Self { position: EnuPoint::new(x, y), speed_m_s }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerminalTrack {
    pub id: String,
    pub waypoints: Vec<Waypoint>,
}

impl TerminalTrack {
    pub fn stationary(id: impl Into<String>, at: EnuPoint) -> Self {
        Self { id: id.into(), waypoints: vec![Waypoint { position: at, speed_m_s: 0.0 }] }
    }

    fn check(&self) -> Option<Finding> {
        let bad = |msg: String| Some(Finding::new(Severity::Error, "INVALID_TERMINAL_TRACK", msg, &[]));
        if self.waypoints.is_empty() {
            return bad(format!("terminal {} has no waypoints", self.id));
        }
        for w in &self.waypoints {
            if !w.position.is_finite() || !w.speed_m_s.is_finite() || w.speed_m_s < 0.0 {
                return bad(format!("terminal {} has a non-finite waypoint or negative speed", self.id));
            }
        }
        None
    }

    /// Position after `t` seconds. The terminal stops for good at the last
    /// waypoint or at the first leg with zero speed.
    pub fn position_at(&self, t: f64) -> EnuPoint {
        let mut left = t;
        for leg in self.waypoints.windows(2) {
            let (a, b) = (leg[0], leg[1]);
            let len = a.position.distance(b.position);
            if a.speed_m_s <= 0.0 {
                return a.position;
            }
            let dur = len / a.speed_m_s;
            if left < dur {
                return a.position + (b.position - a.position) * (left / dur);
            }
            left -= dur;
        }
        self.waypoints.last().map_or(EnuPoint::ORIGIN, |w| w.position)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: String,
    pub x: f64,
    pub y: f64,
    /// Absent for mains-powered nodes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub charge_wh: Option<f64>,
    pub operational: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerminalRecord {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub serving: Option<String>,
    pub downlink_mbps: f64,
    pub uplink_mbps: f64,
    pub hops: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Event {
    NodeOff { node: String },
    NodeOn { node: String },
    LinkLost { from: String, to: String },
    LinkGained { from: String, to: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub t: f64,
    pub nodes: Vec<NodeRecord>,
    pub terminals: Vec<TerminalRecord>,
    pub events: Vec<Event>,
}

/// First line of a metrics log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsHeader {
    pub schema: String,
    pub schema_version: u32,
    pub scenario: String,
    pub seed: u64,
    pub dt_s: f64,
    pub duration_s: f64,
    pub start_time_s: f64,
}

struct NodeSim {
    spec: NodeSpec,
    energy: Option<EnergyState>,
    buoy: Option<(BuoyState, ChaCha8Rng)>,
}

impl NodeSim {
    fn operational(&self) -> bool {
        self.spec.enabled && self.energy.is_none_or(|e| e.operational)
    }

    fn position(&self) -> EnuPoint {
        self.buoy.as_ref().map_or(self.spec.position, |(b, _)| b.position)
    }
}

/// A running simulation; yields one record per tick, starting with t = 0.
pub struct Simulation {
    scenario: Scenario,
    params: SimParams,
    nodes: Vec<NodeSim>,
    terminals: Vec<TerminalTrack>,
    graph: LinkGraph,
    states: NodeStates,
    tick: u64,
    last_tick: u64,
}

/// Validates the scenario and the tracks, then prepares a run with the
/// scenario's `sim_params`.
pub fn run_simulation(s: &Scenario, terminals: &[TerminalTrack]) -> Result<Simulation> {
    let mut findings = validate_scenario(s);
    findings.extend(terminals.iter().filter_map(TerminalTrack::check));
    let mut seen = BTreeSet::new();
    for t in terminals {
        if !seen.insert(t.id.as_str()) {
            findings.push(Finding::new(
                Severity::Error,
                "DUPLICATE_ID",
                format!("terminal id {} is used twice", t.id),
                &[],
            ));
        }
    }
    if has_errors(&findings) {
        return Err(Error::RejectedScenario(findings.into_iter().filter(Finding::is_error).collect()));
    }
    let params = s.sim_params.clone();
    let nodes: Vec<NodeSim> = s
        .infrastructure()
        .map(|n| NodeSim {
            spec: n.clone(),
            energy: n.energy.as_ref().map(EnergyState::initial),
            buoy: match (&n.anchor, n.kind) {
                (Some(_), NodeKind::Buoy) => {
                    Some((BuoyState { position: n.position }, dynamics::node_rng(params.seed, &n.id)))
                }
                _ => None,
            },
        })
        .collect();
    let states = snapshot(&nodes);
    let graph = mesh::build_link_graph(s, &states);
    let last_tick = (params.duration_s / params.dt_s + 1e-9).floor() as u64;
    Ok(Simulation {
        scenario: s.clone(),
        params,
        nodes,
        terminals: terminals.to_vec(),
        graph,
        states,
        tick: 0,
        last_tick,
    })
}

fn snapshot(nodes: &[NodeSim]) -> NodeStates {
    nodes
        .iter()
        .map(|n| (n.spec.id.clone(), NodeState { position: n.position(), operational: n.operational() }))
        .collect()
}

fn edge_set(g: &LinkGraph) -> BTreeSet<(String, String)> {
    g.edges().map(|(a, b, _)| (a.to_string(), b.to_string())).collect()
}

impl Simulation {
    pub fn params(&self) -> &SimParams {
        &self.params
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    /// Number of records the run will produce in total.
    pub fn record_count(&self) -> u64 {
        self.last_tick + 1
    }

    pub fn header(&self) -> MetricsHeader {
        MetricsHeader {
            schema: METRICS_SCHEMA.to_string(),
            schema_version: METRICS_SCHEMA_VERSION,
            scenario: self.scenario.name.clone(),
            seed: self.params.seed,
            dt_s: self.params.dt_s,
            duration_s: self.params.duration_s,
            start_time_s: self.params.start_time_s,
        }
    }

    pub fn graph(&self) -> &LinkGraph {
        &self.graph
    }

    fn advance(&mut self) -> Vec<Event> {
        let dt = self.params.dt_s;
        let t_prev = (self.tick - 1) as f64 * dt;
        let factor = dynamics::solar_factor(self.params.start_time_s + t_prev, &self.scenario.environment);
        let mut events = Vec::new();
        for n in &mut self.nodes {
            if let (Some((b, rng)), Some(anchor)) = (n.buoy.as_mut(), n.spec.anchor.as_ref()) {
                *b = dynamics::step_buoy(*b, anchor, dt, rng);
            }
            if !n.spec.enabled {
                continue;
            }
            if let (Some(e), Some(profile)) = (n.energy.as_mut(), n.spec.energy.as_ref()) {
                let before = e.operational;
                *e = dynamics::step_energy(*e, profile, factor, dt);
                if e.operational != before {
                    let node = n.spec.id.clone();
                    events.push(if e.operational { Event::NodeOn { node } } else { Event::NodeOff { node } });
                }
            }
        }
        self.states = snapshot(&self.nodes);
        let refresh = u64::from(self.params.topology_refresh.max(1));
        if !events.is_empty() || self.tick.is_multiple_of(refresh) {
            let graph = mesh::build_link_graph(&self.scenario, &self.states);
            let (old, new) = (edge_set(&self.graph), edge_set(&graph));
            for (from, to) in old.difference(&new) {
                events.push(Event::LinkLost { from: from.clone(), to: to.clone() });
            }
            for (from, to) in new.difference(&old) {
                events.push(Event::LinkGained { from: from.clone(), to: to.clone() });
            }
            self.graph = graph;
        }
        events
    }

    fn record(&self, events: Vec<Event>) -> MetricsRecord {
        let t = self.tick as f64 * self.params.dt_s;
        let nodes = self
            .nodes
            .iter()
            .map(|n| {
                let p = n.position();
                NodeRecord {
                    id: n.spec.id.clone(),
                    x: p.x,
                    y: p.y,
                    charge_wh: n.energy.map(|e| e.charge_wh),
                    operational: n.operational(),
                }
            })
            .collect();
        let profile = &self.scenario.environment.terminal;
        let terminals = self
            .terminals
            .iter()
            .map(|track| {
                let p = track.position_at(t);
                let ep = TerminalEndpoint::from_profile(p, profile);
                let a = mesh::associate_terminal(&ep, &self.graph, &self.scenario, &self.states);
                TerminalRecord {
                    id: track.id.clone(),
                    x: p.x,
                    y: p.y,
                    downlink_mbps: a.as_ref().map_or(0.0, |a| a.downlink_mbps),
                    uplink_mbps: a.as_ref().map_or(0.0, |a| a.uplink_mbps),
                    hops: a.as_ref().map(|a| a.hops as u32),
                    serving: a.map(|a| a.serving),
                }
            })
            .collect();
        MetricsRecord { t, nodes, terminals, events }
    }
}

impl Iterator for Simulation {
    type Item = MetricsRecord;

    fn next(&mut self) -> Option<MetricsRecord> {
        if self.tick > self.last_tick {
            return None;
        }
        let events = if self.tick == 0 { Vec::new() } else { self.advance() };
        let rec = self.record(events);
        self.tick += 1;
        Some(rec)
    }
}

/// Counts gathered while writing a metrics log.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogSummary {
    pub records: u64,
    pub node_off: u64,
    pub node_on: u64,
    pub link_lost: u64,
    pub link_gained: u64,
}

/// Writes the header line and every record of `sim` as JSON lines.
pub fn write_metrics_log<W: Write>(sim: Simulation, mut out: W) -> Result<LogSummary> {
    serde_json::to_writer(&mut out, &sim.header())?;
    out.write_all(b"\n")?;
    let mut sum = LogSummary::default();
    for rec in sim {
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
        sum.records += 1;
        for e in &rec.events {
            match e {
                Event::NodeOff { .. } => sum.node_off += 1,
                Event::NodeOn { .. } => sum.node_on += 1,
                Event::LinkLost { .. } => sum.link_lost += 1,
                Event::LinkGained { .. } => sum.link_gained += 1,
            }
        }
    }
    out.flush()?;
    Ok(sum)
}

/// Parses a metrics log back into its header and records.
pub fn read_metrics_log(text: &str) -> Result<(MetricsHeader, Vec<MetricsRecord>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: MetricsHeader = serde_json::from_str(lines.next().unwrap_or("{}"))?;
    let records = lines.map(serde_json::from_str).collect::<std::result::Result<_, _>>()?;
    Ok((header, records))
}

pub const REDSEA_NAME: &str = "red-sea-calibration";

pub const REDSEA_IDS: [&str; 8] = ["R1", "R2", "R3", "R4", "R5", "R6", "B1", "B2"];

/// The bundled calibration deployment: a gateway and five solar relays along
/// a synthetic 2 km shoreline plus two moored buoys. Exact positions were
/// never published, so the layout is a reconstruction that only honours the
/// known constraints: 300 m spacing, R6 2 km from R1, one buoy inside the
/// relays' hull and one outside.
pub fn build_redsea_scenario() -> Scenario {
    let mut s = Scenario::new(REDSEA_NAME, Geodetic::new(22.3046, 39.0987));
    s.area = Some(BoundingBox::new(EnuPoint::new(0.0, -300.0), EnuPoint::new(2000.0, 200.0)));
    let relays = [
        ("R2", 320.0, -240.0),
        ("R3", 580.0, -30.0),
        ("R4", 1000.0, -50.0),
        ("R5", 1700.0, -210.0),
        ("R6", 2000.0, 0.0),
    ];
    s.nodes.push(NodeSpec::new("R1", NodeKind::BaseStation, EnuPoint::ORIGIN));
    for (id, x, y) in relays {
        s.nodes.push(NodeSpec::new(id, NodeKind::RelayIsland, EnuPoint::new(x, y)));
    }
    s.nodes.push(NodeSpec::new("B1", NodeKind::Buoy, EnuPoint::new(1370.0, -120.0)));
    s.nodes.push(NodeSpec::new("B2", NodeKind::Buoy, EnuPoint::new(1510.0, 160.0)));
    s.environment.extra_loss_db = 13.0;
    s.environment.weather_factor = 0.8;
    s.prices = PriceList::default()
        .with(ItemKind::Router, Cents(7879))
        .with(ItemKind::PowerStation, Cents(11006))
        .with(ItemKind::SolarPanel, Cents(4202))
        .with(ItemKind::Misc, Cents(1400));
    s
}

/// Only the shore gateway transmits.
pub fn redsea_r1_only() -> Scenario {
    build_redsea_scenario().with_only_enabled(&["R1"])
}

/// Gateway plus the relays 1 km and 2 km out.
pub fn redsea_sparse() -> Scenario {
    build_redsea_scenario().with_only_enabled(&["R1", "R4", "R6"])
}

/// A boat cruising out from the gateway to R6 and back at 5 m/s.
pub fn redsea_cruise() -> Vec<TerminalTrack> {
    vec![TerminalTrack {
        id: "boat".into(),
        waypoints: vec![
            Waypoint::new(50.0, 40.0, 5.0),
            Waypoint::new(1000.0, 60.0, 5.0),
            Waypoint::new(1950.0, -60.0, 5.0),
            Waypoint::new(50.0, 40.0, 0.0),
        ],
    }]
}

/// Final operational flag per node, for quick checks.
pub fn final_states(records: &[MetricsRecord]) -> BTreeMap<String, bool> {
    records
        .last()
        .map(|r| r.nodes.iter().map(|n| (n.id.clone(), n.operational)).collect())
        .unwrap_or_default()
}
