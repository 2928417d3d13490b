//! Scenario data model, validation and deployment costing.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::geo::{self, BoundingBox, EnuPoint, Geodetic};
use crate::radio::{default_shannon_gap_db, Band, ChannelWidth, RadioConfig, MAX_MCS_INDEX};

/// 500 mW.
pub const MAX_TX_POWER_DBM: f64 = 27.0;
pub const MIN_SEPARATION_M: f64 = 300.0;
pub const MAX_MESH_NODES: usize = 256;
pub const MAX_NODE_LOAD_W: f64 = 18.0;

pub const BASE_STATION_HEIGHT_M: f64 = 18.0;
pub const RELAY_ISLAND_HEIGHT_M: f64 = 3.0;
pub const BUOY_HEIGHT_M: f64 = 1.5;
pub const TERMINAL_HEIGHT_M: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    BaseStation,
    RelayIsland,
    Buoy,
    Terminal,
}

impl NodeKind {
    pub fn is_infrastructure(self) -> bool {
        self != NodeKind::Terminal
    }

    pub fn default_height_m(self) -> f64 {
        match self {
            NodeKind::BaseStation => BASE_STATION_HEIGHT_M,
            NodeKind::RelayIsland => RELAY_ISLAND_HEIGHT_M,
            NodeKind::Buoy => BUOY_HEIGHT_M,
            NodeKind::Terminal => TERMINAL_HEIGHT_M,
        }
    }
}

/// Mooring of a buoy. `current_m_s` is a velocity vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorSpec {
    pub anchor_point: EnuPoint,
    pub chain_radius_m: f64,
    /// Random-walk intensity in m/√s.
    pub drift_sigma: f64,
    #[serde(default)]
    pub current_m_s: EnuPoint,
}

impl AnchorSpec {
    pub fn at(anchor_point: EnuPoint) -> Self {
        Self {
            anchor_point,
            chain_radius_m: 30.0,
            drift_sigma: 0.05,
            current_m_s: EnuPoint::new(0.05, 0.0),
        }
    }
}

/// Solar panel, battery and load of a self-powered node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyProfile {
    pub panel_max_w: f64,
    pub battery_capacity_wh: f64,
    pub load_w: f64,
    /// Fraction of time the radio is awake (target wake time scheduling).
    #[serde(default = "one")]
    pub duty_cycle: f64,
    #[serde(default)]
    pub off_threshold_wh: f64,
    pub on_threshold_wh: f64,
    /// Charge at t = 0; a full battery when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_charge_wh: Option<f64>,
    /// Power stations billed for this node.
    #[serde(default)]
    pub power_stations: u32,
    /// Panels billed for this node; one when absent and `panel_max_w > 0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solar_panels: Option<u32>,
}

fn one() -> f64 {
    1.0
}

impl EnergyProfile {
    /// 100 W panel, 768 Wh battery, 12 W router, back on at 5 % charge.
    pub fn solar_node() -> Self {
        let capacity = 768.0;
        Self {
            panel_max_w: 100.0,
            battery_capacity_wh: capacity,
            load_w: 12.0,
            duty_cycle: 1.0,
            off_threshold_wh: 0.0,
            on_threshold_wh: 0.05 * capacity,
            initial_charge_wh: None,
            power_stations: 1,
            solar_panels: None,
        }
    }

    pub fn initial_charge(&self) -> f64 {
        self.initial_charge_wh.unwrap_or(self.battery_capacity_wh)
    }

    pub fn panel_count(&self) -> u32 {
        self.solar_panels
            .unwrap_or(if self.panel_max_w > 0.0 { 1 } else { 0 })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: String,
    pub kind: NodeKind,
    /// Has a terrestrial uplink. Only base stations may be gateways.
    #[serde(default)]
    pub gateway: bool,
    /// Disabled nodes stay in the layout but never transmit.
    #[serde(default = "yes")]
    pub enabled: bool,
    pub position: EnuPoint,
    pub antenna_height_m: f64,
    pub radio: RadioConfig,
    /// Absent means mains power (or, for terminals, not simulated).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy: Option<EnergyProfile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<AnchorSpec>,
}

fn yes() -> bool {
    true
}

impl NodeSpec {
    /// A node with the defaults of its kind: heights, radio, power and
    /// mooring.
    pub fn new(id: impl Into<String>, kind: NodeKind, position: EnuPoint) -> Self {
        let (radio, energy, anchor) = match kind {
            NodeKind::BaseStation => (RadioConfig::mesh_router(), None, None),
            NodeKind::RelayIsland => {
                (RadioConfig::mesh_router(), Some(EnergyProfile::solar_node()), None)
            }
            NodeKind::Buoy => (
                RadioConfig::mesh_router(),
                Some(EnergyProfile { power_stations: 0, ..EnergyProfile::solar_node() }),
                Some(AnchorSpec::at(position)),
            ),
            NodeKind::Terminal => (RadioConfig::phone(), None, None),
        };
        Self {
            id: id.into(),
            kind,
            gateway: kind == NodeKind::BaseStation,
            enabled: true,
            position,
            antenna_height_m: kind.default_height_m(),
            radio,
            energy,
            anchor,
        }
    }

    pub fn is_gateway(&self) -> bool {
        self.gateway && self.kind == NodeKind::BaseStation
    }
}

/// Radio and height of the virtual handset used for coverage and for
/// simulated terminals without their own radio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerminalProfile {
    pub antenna_height_m: f64,
    pub radio: RadioConfig,
}

impl Default for TerminalProfile {
    fn default() -> Self {
        Self { antenna_height_m: TERMINAL_HEIGHT_M, radio: RadioConfig::phone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Environment {
    /// Fraction of clear-sky irradiance reaching the panels.
    pub weather_factor: f64,
    /// Seconds after local midnight.
    pub sunrise_s: f64,
    pub sunset_s: f64,
    /// Sea-state fade margin applied to every link.
    pub extra_loss_db: f64,
    pub mac_efficiency: f64,
    pub shannon_gap_db: f64,
    /// Node-to-node links below this MAC rate are not used.
    pub link_floor_mbps: f64,
    pub terminal: TerminalProfile,
}

impl Default for Environment {
    fn default() -> Self {
        Self {
            weather_factor: 1.0,
            sunrise_s: 6.0 * 3600.0,
            sunset_s: 18.0 * 3600.0,
            extra_loss_db: 10.0,
            mac_efficiency: 0.65,
            shannon_gap_db: default_shannon_gap_db(),
            link_floor_mbps: 6.0,
            terminal: TerminalProfile::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimParams {
    pub dt_s: f64,
    pub duration_s: f64,
    pub seed: u64,
    /// Ticks between scheduled link-graph rebuilds.
    pub topology_refresh: u32,
    /// Local time of day at t = 0, seconds after midnight.
    pub start_time_s: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            dt_s: 1.0,
            duration_s: 86_400.0,
            seed: 0,
            topology_refresh: 60,
            start_time_s: 8.0 * 3600.0,
        }
    }
}

/// Amount of US dollars in integer cents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Cents(pub i64);

impl Cents {
    pub fn from_dollars_cents(dollars: i64, cents: i64) -> Self {
        Cents(dollars * 100 + cents)
    }

    pub fn times(self, count: u32) -> Self {
        Cents(self.0 * i64::from(count))
    }
}

impl std::ops::Add for Cents {
    type Output = Cents;
    fn add(self, rhs: Cents) -> Cents {
        Cents(self.0 + rhs.0)
    }
}

impl std::iter::Sum for Cents {
    fn sum<I: Iterator<Item = Cents>>(iter: I) -> Cents {
        iter.fold(Cents(0), |a, b| a + b)
    }
}

impl fmt::Display for Cents {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        write!(f, "{sign}{}.{:02}", abs / 100, abs % 100)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemKind {
    Router,
    PowerStation,
    SolarPanel,
    Misc,
}

impl fmt::Display for ItemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ItemKind::Router => "router",
            ItemKind::PowerStation => "power_station",
            ItemKind::SolarPanel => "solar_panel",
            ItemKind::Misc => "misc",
        })
    }
}

/// Unit prices per item kind. `misc` is a flat charge, not a unit price.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PriceList(pub BTreeMap<ItemKind, Cents>);

impl PriceList {
    pub fn get(&self, item: ItemKind) -> Option<Cents> {
        self.0.get(&item).copied()
    }

    pub fn with(mut self, item: ItemKind, price: Cents) -> Self {
        self.0.insert(item, price);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub origin: Geodetic,
    /// Planning extent used for coverage grids.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub area: Option<BoundingBox>,
    pub nodes: Vec<NodeSpec>,
    #[serde(default)]
    pub environment: Environment,
    #[serde(default)]
    pub prices: PriceList,
    #[serde(default)]
    pub sim_params: SimParams,
}

impl Scenario {
    pub fn new(name: impl Into<String>, origin: Geodetic) -> Self {
        Self {
            name: name.into(),
            origin,
            area: None,
            nodes: Vec::new(),
            environment: Environment::default(),
            prices: PriceList::default(),
            sim_params: SimParams::default(),
        }
    }

    pub fn node(&self, id: &str) -> Option<&NodeSpec> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn node_mut(&mut self, id: &str) -> Option<&mut NodeSpec> {
        self.nodes.iter_mut().find(|n| n.id == id)
    }

    pub fn infrastructure(&self) -> impl Iterator<Item = &NodeSpec> {
        self.nodes.iter().filter(|n| n.kind.is_infrastructure())
    }

    /// Keeps the layout but disables every infrastructure node not listed.
    pub fn with_only_enabled(&self, ids: &[&str]) -> Scenario {
        let mut s = self.clone();
        for n in s.nodes.iter_mut().filter(|n| n.kind.is_infrastructure()) {
            n.enabled = ids.contains(&n.id.as_str());
        }
        s
    }

    /// Parses a scenario document. Positions and anchor points may be given
    /// either as `{x, y}` metres or as `{lat, lon}` degrees; the latter are
    /// projected around `origin`.
    pub fn from_json_str(text: &str) -> Result<Scenario> {
        let value: Value = serde_json::from_str(text)?;
        Self::from_json_value(value)
    }

    pub fn from_json_value(mut value: Value) -> Result<Scenario> {
        let origin: Geodetic = match value.get("origin") {
            Some(o) => serde_json::from_value(o.clone())?,
            None => Geodetic::default(),
        };
        if let Some(nodes) = value.get_mut("nodes").and_then(Value::as_array_mut) {
            for node in nodes {
                if let Some(pos) = node.get_mut("position") {
                    project_in_place(origin, pos)?;
                }
                if let Some(anchor) = node.get_mut("anchor").and_then(|a| a.get_mut("anchor_point")) {
                    project_in_place(origin, anchor)?;
                }
            }
        }
        Ok(serde_json::from_value(value)?)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}

fn project_in_place(origin: Geodetic, v: &mut Value) -> Result<()> {
    let (Some(lat), Some(lon)) = (
        v.get("lat").and_then(Value::as_f64),
        v.get("lon").and_then(Value::as_f64),
    ) else {
        return Ok(());
    };
    let p = geo::project(origin, Geodetic::new(lat, lon))?;
    *v = serde_json::to_value(p)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Finding {
    pub severity: Severity,
    pub code: String,
    pub message: String,
    /// Node ids the finding is about, if any.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nodes: Vec<String>,
}

impl Finding {
    pub fn new(severity: Severity, code: &str, message: String, nodes: &[&str]) -> Self {
        Self {
            severity,
            code: code.to_string(),
            message,
            nodes: nodes.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}: {}: {}", self.code, self.message)
    }
}

pub fn has_errors(findings: &[Finding]) -> bool {
    findings.iter().any(Finding::is_error)
}

/// Checks a scenario against the data-model invariants and the deployment
/// rules. An empty list means the scenario is clean.
pub fn validate_scenario(s: &Scenario) -> Vec<Finding> {
    use Severity::{Error as E, Warning as W};
    let mut out = Vec::new();

    let mut seen = HashSet::new();
    for n in &s.nodes {
        if !seen.insert(n.id.as_str()) {
            out.push(Finding::new(E, "DUPLICATE_ID", format!("node id {} is used more than once", n.id), &[&n.id]));
        }
    }

    if !s.nodes.iter().any(NodeSpec::is_gateway) {
        out.push(Finding::new(E, "NO_GATEWAY", "no base station is marked as gateway".into(), &[]));
    }
    if s.nodes.len() > MAX_MESH_NODES {
        out.push(Finding::new(
            E,
            "MESH_SIZE_EXCEEDED",
            format!("{} nodes in one mesh, at most {MAX_MESH_NODES} supported", s.nodes.len()),
            &[],
        ));
    }

    for n in &s.nodes {
        let id = n.id.as_str();
        if n.gateway && n.kind != NodeKind::BaseStation {
            out.push(Finding::new(E, "GATEWAY_NOT_BASE_STATION", format!("{id} is a gateway but not a base station"), &[id]));
        }
        if !n.position.is_finite() {
            out.push(Finding::new(E, "INVALID_POSITION", format!("{id} has a non-finite position"), &[id]));
        }
        if !(n.antenna_height_m > 0.0 && n.antenna_height_m.is_finite()) {
            out.push(Finding::new(E, "NONPOSITIVE_HEIGHT", format!("{id} antenna height {} m", n.antenna_height_m), &[id]));
        }
        check_radio(id, &n.radio, &mut out);
        if let Some(e) = &n.energy {
            check_energy(id, e, &mut out);
        }
        match (&n.anchor, n.kind) {
            (None, NodeKind::Buoy) => {
                out.push(Finding::new(E, "BUOY_WITHOUT_ANCHOR", format!("buoy {id} has no anchor"), &[id]));
            }
            (Some(a), _) => {
                if !(a.chain_radius_m > 0.0) {
                    out.push(Finding::new(E, "INVALID_ANCHOR", format!("{id} chain radius {} m", a.chain_radius_m), &[id]));
                } else if n.position.distance(a.anchor_point) > a.chain_radius_m {
                    out.push(Finding::new(
                        E,
                        "ANCHOR_OUT_OF_REACH",
                        format!("{id} starts {:.1} m from its anchor, chain is {} m", n.position.distance(a.anchor_point), a.chain_radius_m),
                        &[id],
                    ));
                }
                if !(a.drift_sigma >= 0.0) || !a.current_m_s.is_finite() {
                    out.push(Finding::new(E, "INVALID_ANCHOR", format!("{id} drift parameters"), &[id]));
                }
                if n.kind != NodeKind::Buoy {
                    out.push(Finding::new(W, "ANCHOR_IGNORED", format!("{id} is not a buoy; its anchor is ignored"), &[id]));
                }
            }
            (None, _) => {}
        }
    }

    let infra: Vec<&NodeSpec> = s.infrastructure().collect();
    for (i, a) in infra.iter().enumerate() {
        for b in &infra[i + 1..] {
            let d = a.position.distance(b.position);
            if d < MIN_SEPARATION_M {
                out.push(Finding::new(
                    W,
                    "SEPARATION_BELOW_300M",
                    format!("{} and {} are {d:.1} m apart", a.id, b.id),
                    &[&a.id, &b.id],
                ));
            }
        }
    }

    let env = &s.environment;
    let env_ok = (0.0..=1.0).contains(&env.weather_factor)
        && env.sunrise_s >= 0.0
        && env.sunrise_s < env.sunset_s
        && env.sunset_s <= 86_400.0
        && env.extra_loss_db >= 0.0
        && env.mac_efficiency > 0.0
        && env.mac_efficiency <= 1.0
        && env.shannon_gap_db.is_finite()
        && env.link_floor_mbps > 0.0
        && env.terminal.antenna_height_m > 0.0;
    if !env_ok {
        out.push(Finding::new(E, "INVALID_ENVIRONMENT", "environment parameters out of range".into(), &[]));
    }
    check_radio("terminal profile", &env.terminal.radio, &mut out);

    let sp = &s.sim_params;
    if !(sp.dt_s > 0.0 && sp.duration_s >= 0.0 && sp.topology_refresh >= 1 && sp.start_time_s.is_finite()) {
        out.push(Finding::new(E, "INVALID_SIM_PARAMS", "dt must be positive, duration non-negative, refresh at least 1".into(), &[]));
    }

    for (item, price) in &s.prices.0 {
        if price.0 < 0 {
            out.push(Finding::new(E, "NEGATIVE_PRICE", format!("{item} costs {price}"), &[]));
        }
    }
    if let Some(area) = &s.area {
        if area.is_degenerate() {
            out.push(Finding::new(E, "INVALID_AREA", "planning area has no extent".into(), &[]));
        }
    }
    out
}

fn check_radio(id: &str, r: &RadioConfig, out: &mut Vec<Finding>) {
    use Severity::{Error as E, Warning as W};
    if r.tx_power_dbm > MAX_TX_POWER_DBM {
        out.push(Finding::new(
            W,
            "TX_POWER_ABOVE_500MW",
            format!("{id} transmits {} dBm, above {MAX_TX_POWER_DBM} dBm", r.tx_power_dbm),
            &[id],
        ));
    }
    if r.band == Band::Ghz2_4 && r.channel_width_mhz == ChannelWidth::Mhz160 {
        out.push(Finding::new(E, "WIDTH_NOT_IN_BAND", format!("{id}: 160 MHz channels exist only at 5 GHz"), &[id]));
    }
    let in_band = match r.band {
        Band::Ghz2_4 => (2.4e9..=2.5e9).contains(&r.center_frequency_hz),
        Band::Ghz5 => (5.15e9..=5.925e9).contains(&r.center_frequency_hz),
    };
    if !in_band {
        out.push(Finding::new(W, "FREQUENCY_OUTSIDE_BAND", format!("{id}: {} Hz is outside {}", r.center_frequency_hz, r.band), &[id]));
    }
    if r.spatial_streams == 0 || r.spatial_streams > 8 {
        out.push(Finding::new(E, "INVALID_SPATIAL_STREAMS", format!("{id}: {} streams", r.spatial_streams), &[id]));
    }
    if r.max_mcs > MAX_MCS_INDEX {
        out.push(Finding::new(E, "INVALID_MAX_MCS", format!("{id}: MCS {} does not exist", r.max_mcs), &[id]));
    }
    if !(r.noise_figure_db.is_finite() && r.tx_power_dbm.is_finite() && r.antenna_gain_dbi.is_finite()) {
        out.push(Finding::new(E, "INVALID_RADIO", format!("{id}: non-finite radio parameter"), &[id]));
    }
}

fn check_energy(id: &str, e: &EnergyProfile, out: &mut Vec<Finding>) {
    use Severity::{Error as E, Warning as W};
    if !(e.panel_max_w >= 0.0 && e.battery_capacity_wh > 0.0 && e.load_w >= 0.0) {
        out.push(Finding::new(E, "INVALID_ENERGY_PROFILE", format!("{id}: panel, capacity and load must be non-negative"), &[id]));
    }
    if !(e.duty_cycle > 0.0 && e.duty_cycle <= 1.0) {
        out.push(Finding::new(E, "INVALID_DUTY_CYCLE", format!("{id}: duty cycle {}", e.duty_cycle), &[id]));
    }
    if !(0.0 <= e.off_threshold_wh
        && e.off_threshold_wh < e.on_threshold_wh
        && e.on_threshold_wh <= e.battery_capacity_wh)
    {
        out.push(Finding::new(
            E,
            "INVALID_ENERGY_THRESHOLDS",
            format!("{id}: need 0 <= off ({}) < on ({}) <= capacity", e.off_threshold_wh, e.on_threshold_wh),
            &[id],
        ));
    }
    if let Some(c) = e.initial_charge_wh {
        if !(0.0..=e.battery_capacity_wh).contains(&c) {
            out.push(Finding::new(E, "INVALID_INITIAL_CHARGE", format!("{id}: initial charge {c} Wh"), &[id]));
        }
    }
    if e.load_w > MAX_NODE_LOAD_W {
        out.push(Finding::new(W, "LOAD_ABOVE_18W", format!("{id}: load {} W", e.load_w), &[id]));
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostLine {
    pub item: ItemKind,
    /// Absent for the flat miscellaneous charge.
    pub count: Option<u32>,
    pub unit_price: Option<Cents>,
    pub total: Cents,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub items: Vec<CostLine>,
    pub total: Cents,
}

/// Bill of materials: one router per infrastructure node plus the panels and
/// power stations each node declares, plus the flat misc charge.
pub fn estimate_cost(s: &Scenario, prices: &PriceList) -> Result<CostReport> {
    let infra: Vec<&NodeSpec> = s.infrastructure().collect();
    let routers = infra.len() as u32;
    let stations: u32 = infra.iter().filter_map(|n| n.energy.as_ref()).map(|e| e.power_stations).sum();
    let panels: u32 = infra.iter().filter_map(|n| n.energy.as_ref()).map(EnergyProfile::panel_count).sum();

    let mut items = Vec::new();
    for (item, count) in [
        (ItemKind::Router, routers),
        (ItemKind::PowerStation, stations),
        (ItemKind::SolarPanel, panels),
    ] {
        if count == 0 {
            continue;
        }
        let unit = prices.get(item).ok_or(Error::MissingPrice(item))?;
        items.push(CostLine { item, count: Some(count), unit_price: Some(unit), total: unit.times(count) });
    }
    if let Some(misc) = prices.get(ItemKind::Misc) {
        items.push(CostLine { item: ItemKind::Misc, count: None, unit_price: None, total: misc });
    }
    let total = items.iter().map(|l| l.total).sum();
    Ok(CostReport { items, total })
}
