//! Link graph, multi-hop routing, terminal association and coverage grids.
//!
//! Relays forward on the same channel they receive on, so a chain of hops
//! shares airtime and its end-to-end rate is the harmonic combination
//! `1 / Σ 1/r_i`. Routes minimise `Σ 1/r_i` with Dijkstra over edge weights
//! `1/rate`; association picks the access point with the best end-to-end
//! downlink, not the strongest signal.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{BoundingBox, EnuPoint};
use crate::model::{NodeSpec, Scenario, TerminalProfile};
use crate::radio::{link_budget, Endpoint, LinkBudget, RadioConfig};
use crate::dynamics::EnergyState;

/// Default padding around the infrastructure when a scenario has no area.
pub const DEFAULT_AREA_PAD_M: f64 = 200.0;

/// Upper bound on cells in one grid.
pub const MAX_GRID_CELLS: usize = 4_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeState {
    pub position: EnuPoint,
    pub operational: bool,
}

/// Runtime state of the infrastructure, keyed by node id.
pub type NodeStates = BTreeMap<String, NodeState>;

/// State at t = 0: scenario positions, enabled nodes with charge above the
/// off threshold are operational.
pub fn initial_states(s: &Scenario) -> NodeStates {
    s.infrastructure()
        .map(|n| {
            let charged = n
                .energy
                .as_ref()
                .is_none_or(|e| EnergyState::initial(e).operational);
            (n.id.clone(), NodeState { position: n.position, operational: n.enabled && charged })
        })
        .collect()
}

/// Multi-hop path from a source node to a gateway.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    /// Source first, gateway last.
    pub hops: Vec<String>,
    /// Downlink rate of each hop, in the same order as `hops`.
    pub hop_rates_mbps: Vec<f64>,
    /// Σ 1/r_i accumulated from the source outwards.
    pub inverse_rate_sum: f64,
}

impl Route {
    pub fn hop_count(&self) -> usize {
        self.hops.len().saturating_sub(1)
    }

    /// `1 / Σ 1/r_i`; infinite for a zero-hop route.
    pub fn e2e_throughput_mbps(&self) -> f64 {
        if self.inverse_rate_sum == 0.0 {
            f64::INFINITY
        } else {
            1.0 / self.inverse_rate_sum
        }
    }

    pub fn source(&self) -> &str {
        &self.hops[0]
    }

    pub fn gateway(&self) -> &str {
        self.hops.last().expect("route has a source")
    }
}

#[derive(Debug, Clone, Default)]
pub struct LinkGraph {
    vertices: BTreeSet<String>,
    gateways: BTreeSet<String>,
    edges: BTreeMap<(String, String), f64>,
    /// Downlink neighbours: `incoming[v]` holds every `(u, rate)` with an edge u -> v.
    incoming: BTreeMap<String, Vec<(String, f64)>>,
    routes: BTreeMap<String, Route>,
}

impl LinkGraph {
    /// Builds a graph from explicit directed edges `(from, to, mac_rate)`.
    /// Edges touching unknown vertices or with non-positive rate are dropped.
    pub fn from_edges(
        vertices: impl IntoIterator<Item = String>,
        gateways: impl IntoIterator<Item = String>,
        edges: impl IntoIterator<Item = (String, String, f64)>,
    ) -> Self {
        let vertices: BTreeSet<String> = vertices.into_iter().collect();
        let gateways = gateways.into_iter().filter(|g| vertices.contains(g)).collect();
        let edges: BTreeMap<(String, String), f64> = edges
            .into_iter()
            .filter(|(a, b, r)| a != b && *r > 0.0 && vertices.contains(a) && vertices.contains(b))
            .map(|(a, b, r)| ((a, b), r))
            .collect();
        let mut incoming: BTreeMap<String, Vec<(String, f64)>> = BTreeMap::new();
        for ((a, b), r) in &edges {
            incoming.entry(b.clone()).or_default().push((a.clone(), *r));
        }
        let mut g = Self { vertices, gateways, edges, incoming, routes: BTreeMap::new() };
        let routes = g
            .vertices
            .iter()
            .filter_map(|v| shortest_route(&g, v).map(|r| (v.clone(), r)))
            .collect();
        g.routes = routes;
        g
    }

    pub fn vertices(&self) -> impl Iterator<Item = &str> {
        self.vertices.iter().map(String::as_str)
    }

    pub fn gateways(&self) -> impl Iterator<Item = &str> {
        self.gateways.iter().map(String::as_str)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.vertices.contains(id)
    }

    pub fn is_gateway(&self, id: &str) -> bool {
        self.gateways.contains(id)
    }

    pub fn rate(&self, from: &str, to: &str) -> Option<f64> {
        self.edges.get(&(from.to_string(), to.to_string())).copied()
    }

    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        self.edges.iter().map(|((a, b), r)| (a.as_str(), b.as_str(), *r))
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Cached [`best_route`] result.
    pub fn route(&self, src: &str) -> Option<&Route> {
        self.routes.get(src)
    }
}

fn backhaul_endpoint<'a>(n: &'a NodeSpec, st: &NodeState) -> Endpoint<'a> {
    Endpoint {
        position: st.position,
        height_m: n.antenna_height_m,
        radio: &n.radio,
        gain_dbi: n.radio.backhaul_gain(),
    }
}

/// Evaluates every ordered pair of operational infrastructure nodes and keeps
/// the links whose MAC rate reaches the link floor.
pub fn build_link_graph(s: &Scenario, states: &NodeStates) -> LinkGraph {
    let live: Vec<(&NodeSpec, &NodeState)> = s
        .infrastructure()
        .filter_map(|n| states.get(&n.id).filter(|st| st.operational && n.enabled).map(|st| (n, st)))
        .collect();
    let floor = s.environment.link_floor_mbps;
    let mut edges = Vec::new();
    for (a, sa) in &live {
        for (b, sb) in &live {
            if a.id == b.id {
                continue;
            }
            let Ok(lb) = link_budget(&backhaul_endpoint(a, sa), &backhaul_endpoint(b, sb), &s.environment) else {
                continue;
            };
            if lb.mac_rate_mbps >= floor && lb.mac_rate_mbps > 0.0 {
                edges.push((a.id.clone(), b.id.clone(), lb.mac_rate_mbps));
            }
        }
    }
    LinkGraph::from_edges(
        live.iter().map(|(n, _)| n.id.clone()),
        live.iter().filter(|(n, _)| n.is_gateway()).map(|(n, _)| n.id.clone()),
        edges,
    )
}

/// Full budget of the link `from -> to`, for reporting. Between two
/// infrastructure nodes this is the backhaul link.
pub fn backhaul_budget(s: &Scenario, states: &NodeStates, from: &str, to: &str) -> Result<LinkBudget> {
    let lookup = |id: &str| -> Result<(&NodeSpec, NodeState)> {
        let n = s.node(id).ok_or_else(|| Error::UnknownNode(id.to_string()))?;
        let st = states.get(id).copied().unwrap_or(NodeState { position: n.position, operational: n.enabled });
        Ok((n, st))
    };
    let (a, sa) = lookup(from)?;
    let (b, sb) = lookup(to)?;
    if a.kind.is_infrastructure() && b.kind.is_infrastructure() {
        link_budget(&backhaul_endpoint(a, &sa), &backhaul_endpoint(b, &sb), &s.environment)
    } else {
        // any link touching a terminal is an access link
        let ea = Endpoint { position: sa.position, height_m: a.antenna_height_m, radio: &a.radio, gain_dbi: a.radio.antenna_gain_dbi };
        let eb = Endpoint { position: sb.position, height_m: b.antenna_height_m, radio: &b.radio, gain_dbi: b.radio.antenna_gain_dbi };
        link_budget(&ea, &eb, &s.environment)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Label {
    cost: f64,
    path: Vec<String>,
}

impl Eq for Label {}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cost.total_cmp(&other.cost).then_with(|| self.path.cmp(&other.path))
    }
}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Route from `src` to the nearest gateway in `Σ 1/r` over downlink edges.
/// Equal costs resolve to the lexicographically smallest id sequence.
pub fn best_route(g: &LinkGraph, src: &str) -> Option<Route> {
    g.route(src).cloned()
}

fn shortest_route(g: &LinkGraph, src: &str) -> Option<Route> {
    if !g.contains(src) {
        return None;
    }
    let mut best: BTreeMap<&str, Label> = BTreeMap::new();
    let mut heap = BinaryHeap::new();
    let start = Label { cost: 0.0, path: vec![src.to_string()] };
    best.insert(src, start.clone());
    heap.push(Reverse(start));

    while let Some(Reverse(label)) = heap.pop() {
        let here = label.path.last().expect("non-empty path").as_str();
        if best.get(here) != Some(&label) {
            continue;
        }
        if g.is_gateway(here) {
            return Some(route_from_path(g, label.path, label.cost));
        }
        let Some(neigh) = g.incoming.get(here) else { continue };
        for (next, rate) in neigh {
            // the hop here <- next is served by the downlink edge next -> here
            if label.path.iter().any(|p| p == next) {
                continue;
            }
            let mut path = label.path.clone();
            path.push(next.clone());
            let cand = Label { cost: label.cost + 1.0 / rate, path };
            let improves = best.get(next.as_str()).is_none_or(|cur| cand < *cur);
            if improves {
                let key = g.vertices.get(next).expect("edge endpoints are vertices").as_str();
                best.insert(key, cand.clone());
                heap.push(Reverse(cand));
            }
        }
    }
    None
}

fn route_from_path(g: &LinkGraph, hops: Vec<String>, cost: f64) -> Route {
    let hop_rates_mbps = hops
        .windows(2)
        .map(|w| g.rate(&w[1], &w[0]).expect("route follows graph edges"))
        .collect();
    Route { hops, hop_rates_mbps, inverse_rate_sum: cost }
}

/// A handset at a point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerminalEndpoint {
    pub position: EnuPoint,
    pub height_m: f64,
    pub radio: RadioConfig,
}

impl TerminalEndpoint {
    pub fn from_profile(position: EnuPoint, profile: &TerminalProfile) -> Self {
        Self { position, height_m: profile.antenna_height_m, radio: profile.radio.clone() }
    }

    fn endpoint(&self) -> Endpoint<'_> {
        Endpoint {
            position: self.position,
            height_m: self.height_m,
            radio: &self.radio,
            gain_dbi: self.radio.antenna_gain_dbi,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Association {
    pub serving: String,
    pub downlink_mbps: f64,
    pub uplink_mbps: f64,
    /// Backhaul hops between the serving node and its gateway.
    pub hops: usize,
    pub access_downlink_mbps: f64,
    pub access_uplink_mbps: f64,
    pub route: Route,
}

/// Access budgets between a terminal and one infrastructure node, in both
/// directions.
pub fn access_budgets(
    t: &TerminalEndpoint,
    node: &NodeSpec,
    state: &NodeState,
    s: &Scenario,
) -> Result<(LinkBudget, LinkBudget)> {
    let ap = Endpoint {
        position: state.position,
        height_m: node.antenna_height_m,
        radio: &node.radio,
        gain_dbi: node.radio.antenna_gain_dbi,
    };
    let te = t.endpoint();
    Ok((link_budget(&ap, &te, &s.environment)?, link_budget(&te, &ap, &s.environment)?))
}

/// Picks the operational node with a usable access link in both directions
/// that maximises end-to-end downlink. Uplink is reported along the same
/// path and is zero when some hop has no usable uplink edge.
pub fn associate_terminal(
    t: &TerminalEndpoint,
    g: &LinkGraph,
    s: &Scenario,
    states: &NodeStates,
) -> Option<Association> {
    let mut best: Option<Association> = None;
    for id in g.vertices() {
        let Some(route) = g.route(id) else { continue };
        let (Some(node), Some(state)) = (s.node(id), states.get(id)) else { continue };
        let Ok((down, up)) = access_budgets(t, node, state, s) else { continue };
        if !(down.is_feasible() && up.is_feasible()) {
            continue;
        }
        let downlink = 1.0 / (1.0 / down.mac_rate_mbps + route.inverse_rate_sum);
        if best.as_ref().is_some_and(|b| downlink <= b.downlink_mbps) {
            continue;
        }
        let uplink_edges: Option<f64> = route
            .hops
            .windows(2)
            .map(|w| g.rate(&w[0], &w[1]).map(|r| 1.0 / r))
            .sum();
        let uplink = match uplink_edges {
            Some(sum) => 1.0 / (1.0 / up.mac_rate_mbps + sum),
            None => 0.0,
        };
        best = Some(Association {
            serving: id.to_string(),
            downlink_mbps: downlink,
            uplink_mbps: uplink,
            hops: route.hop_count(),
            access_downlink_mbps: down.mac_rate_mbps,
            access_uplink_mbps: up.mac_rate_mbps,
            route: route.clone(),
        });
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageCell {
    pub downlink_mbps: f64,
    pub uplink_mbps: f64,
    pub serving: Option<String>,
    pub hops: Option<u32>,
}

impl CoverageCell {
    fn uncovered() -> Self {
        Self { downlink_mbps: 0.0, uplink_mbps: 0.0, serving: None, hops: None }
    }

    pub fn is_covered(&self) -> bool {
        self.serving.is_some()
    }
}

/// Row-major grid; row 0 is the southern edge.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageGrid {
    pub bbox: BoundingBox,
    pub resolution_m: f64,
    pub cols: usize,
    pub rows: usize,
    pub cells: Vec<CoverageCell>,
}

impl CoverageGrid {
    pub fn cell_center(&self, col: usize, row: usize) -> EnuPoint {
        EnuPoint::new(
            self.bbox.min.x + (col as f64 + 0.5) * self.resolution_m,
            self.bbox.min.y + (row as f64 + 0.5) * self.resolution_m,
        )
    }

    pub fn cell(&self, col: usize, row: usize) -> &CoverageCell {
        &self.cells[row * self.cols + col]
    }

    /// Cells with their centres.
    pub fn iter(&self) -> impl Iterator<Item = (EnuPoint, &CoverageCell)> {
        self.cells.iter().enumerate().map(|(i, c)| (self.cell_center(i % self.cols, i / self.cols), c))
    }

    pub fn covered_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_covered()).count()
    }

    pub fn document(&self) -> CoverageDocument {
        let round = |v: f64| (v * 100.0).round() / 100.0;
        CoverageDocument {
            schema_version: COVERAGE_SCHEMA_VERSION,
            bbox: self.bbox,
            resolution_m: self.resolution_m,
            cols: self.cols,
            rows: self.rows,
            cells: self
                .cells
                .iter()
                .map(|c| CoverageCell {
                    downlink_mbps: round(c.downlink_mbps),
                    uplink_mbps: round(c.uplink_mbps),
                    serving: c.serving.clone(),
                    hops: c.hops,
                })
                .collect(),
        }
    }
}

pub const COVERAGE_SCHEMA_VERSION: u32 = 1;

/// Serialized form of a [`CoverageGrid`], rates rounded to 0.01 Mbps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageDocument {
    pub schema_version: u32,
    pub bbox: BoundingBox,
    pub resolution_m: f64,
    pub cols: usize,
    pub rows: usize,
    pub cells: Vec<CoverageCell>,
}

/// Scenario area, or the infrastructure bounding box padded by
/// [`DEFAULT_AREA_PAD_M`].
pub fn planning_area(s: &Scenario) -> Option<BoundingBox> {
    s.area.or_else(|| BoundingBox::around(s.infrastructure().map(|n| n.position), DEFAULT_AREA_PAD_M))
}

/// Evaluates a virtual handset at every cell centre.
pub fn coverage_grid(s: &Scenario, states: &NodeStates, resolution_m: f64) -> Result<CoverageGrid> {
    if !(resolution_m > 0.0 && resolution_m.is_finite()) {
        return Err(Error::EmptyGrid(format!("resolution {resolution_m} m")));
    }
    let bbox = planning_area(s).ok_or_else(|| Error::EmptyGrid("no area and no infrastructure".into()))?;
    if bbox.is_degenerate() {
        return Err(Error::EmptyGrid("planning area has no extent".into()));
    }
    let cols = (bbox.width() / resolution_m).ceil() as usize;
    let rows = (bbox.height() / resolution_m).ceil() as usize;
    if cols.saturating_mul(rows) > MAX_GRID_CELLS {
        return Err(Error::EmptyGrid(format!("{cols}x{rows} cells exceeds {MAX_GRID_CELLS}")));
    }
    let graph = build_link_graph(s, states);
    let mut grid = CoverageGrid { bbox, resolution_m, cols, rows, cells: Vec::new() };
    let profile = &s.environment.terminal;
    let eval = |i: usize| {
        let centre = grid.cell_center(i % cols, i / cols);
        let t = TerminalEndpoint::from_profile(centre, profile);
        match associate_terminal(&t, &graph, s, states) {
            Some(a) => CoverageCell {
                downlink_mbps: a.downlink_mbps,
                uplink_mbps: a.uplink_mbps,
                serving: Some(a.serving),
                hops: Some(a.hops as u32),
            },
            None => CoverageCell::uncovered(),
        }
    };
    let total = cols * rows;
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(total.max(1));
    let chunk = total.div_ceil(workers.max(1)).max(1);
    let cells: Vec<CoverageCell> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..total)
            .step_by(chunk)
            .map(|lo| {
                let eval = &eval;
                scope.spawn(move || (lo..(lo + chunk).min(total)).map(eval).collect::<Vec<_>>())
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("coverage worker")).collect()
    });
    grid.cells = cells;
    Ok(grid)
}
