//! 802.11ax link budgets over the sea surface.
//!
//! The chain is: two-ray path loss (free space up to the breakpoint, 40 dB
//! per decade beyond it) -> received power -> thermal noise floor -> SNR ->
//! MCS by a Shannon-gap rule -> HE PHY rate -> MAC rate via a flat
//! efficiency factor.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{distance_3d, EnuPoint};
use crate::model::Environment;

pub const SPEED_OF_LIGHT_M_S: f64 = 299_792_458.0;

/// Links shorter than this are evaluated at this distance.
pub const MIN_LINK_DISTANCE_M: f64 = 1.0;

/// HE OFDM symbol duration without guard interval.
const HE_SYMBOL_US: f64 = 12.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Band {
    #[serde(rename = "2.4GHz")]
    Ghz2_4,
    #[serde(rename = "5GHz")]
    Ghz5,
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Band::Ghz2_4 => "2.4GHz",
            Band::Ghz5 => "5GHz",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum ChannelWidth {
    Mhz20,
    Mhz40,
    Mhz80,
    Mhz160,
}

impl ChannelWidth {
    pub fn mhz(self) -> u32 {
        match self {
            ChannelWidth::Mhz20 => 20,
            ChannelWidth::Mhz40 => 40,
            ChannelWidth::Mhz80 => 80,
            ChannelWidth::Mhz160 => 160,
        }
    }

    /// Data subcarriers of a full-bandwidth HE resource unit.
    pub fn data_subcarriers(self) -> u32 {
        match self {
            ChannelWidth::Mhz20 => 234,
            ChannelWidth::Mhz40 => 468,
            ChannelWidth::Mhz80 => 980,
            ChannelWidth::Mhz160 => 1960,
        }
    }
}

impl TryFrom<u32> for ChannelWidth {
    type Error = Error;
    fn try_from(mhz: u32) -> Result<Self> {
        match mhz {
            20 => Ok(ChannelWidth::Mhz20),
            40 => Ok(ChannelWidth::Mhz40),
            80 => Ok(ChannelWidth::Mhz80),
            160 => Ok(ChannelWidth::Mhz160),
            other => Err(Error::UnsupportedParams(format!("channel width {other} MHz"))),
        }
    }
}

impl From<ChannelWidth> for u32 {
    fn from(w: ChannelWidth) -> u32 {
        w.mhz()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub enum GuardInterval {
    Us0_8,
    Us1_6,
    Us3_2,
}

impl GuardInterval {
    pub fn micros(self) -> f64 {
        match self {
            GuardInterval::Us0_8 => 0.8,
            GuardInterval::Us1_6 => 1.6,
            GuardInterval::Us3_2 => 3.2,
        }
    }
}

impl TryFrom<f64> for GuardInterval {
    type Error = Error;
    fn try_from(us: f64) -> Result<Self> {
        [GuardInterval::Us0_8, GuardInterval::Us1_6, GuardInterval::Us3_2]
            .into_iter()
            .find(|gi| (gi.micros() - us).abs() < 1e-9)
            .ok_or_else(|| Error::UnsupportedParams(format!("guard interval {us} us")))
    }
}

impl From<GuardInterval> for f64 {
    fn from(gi: GuardInterval) -> f64 {
        gi.micros()
    }
}

/// One 802.11ax modulation-and-coding scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McsEntry {
    pub index: u8,
    pub modulation: &'static str,
    pub bits_per_subcarrier: u8,
    /// Coding rate as (numerator, denominator).
    pub coding_rate: (u8, u8),
}

impl McsEntry {
    /// Information bits per subcarrier per symbol.
    pub fn spectral_efficiency(&self) -> f64 {
        let (num, den) = self.coding_rate;
        f64::from(self.bits_per_subcarrier) * f64::from(num) / f64::from(den)
    }
}

const fn mcs(index: u8, modulation: &'static str, bits: u8, num: u8, den: u8) -> McsEntry {
    McsEntry { index, modulation, bits_per_subcarrier: bits, coding_rate: (num, den) }
}

pub const MCS_TABLE: [McsEntry; 12] = [
    mcs(0, "BPSK", 1, 1, 2),
    mcs(1, "QPSK", 2, 1, 2),
    mcs(2, "QPSK", 2, 3, 4),
    mcs(3, "16-QAM", 4, 1, 2),
    mcs(4, "16-QAM", 4, 3, 4),
    mcs(5, "64-QAM", 6, 2, 3),
    mcs(6, "64-QAM", 6, 3, 4),
    mcs(7, "64-QAM", 6, 5, 6),
    mcs(8, "256-QAM", 8, 3, 4),
    mcs(9, "256-QAM", 8, 5, 6),
    mcs(10, "1024-QAM", 10, 3, 4),
    mcs(11, "1024-QAM", 10, 5, 6),
];

pub const MAX_MCS_INDEX: u8 = 11;

pub fn mcs_entry(index: u8) -> Option<McsEntry> {
    MCS_TABLE.get(usize::from(index)).copied()
}

/// Default Shannon gap (Γ = 4).
pub fn default_shannon_gap_db() -> f64 {
    10.0 * 4f64.log10()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadioConfig {
    pub band: Band,
    pub center_frequency_hz: f64,
    pub channel_width_mhz: ChannelWidth,
    pub tx_power_dbm: f64,
    /// Gain used on access links (towards terminals).
    pub antenna_gain_dbi: f64,
    /// Gain used on node-to-node links; falls back to `antenna_gain_dbi`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backhaul_gain_dbi: Option<f64>,
    pub spatial_streams: u8,
    pub guard_interval_us: GuardInterval,
    pub noise_figure_db: f64,
    pub max_mcs: u8,
}

impl RadioConfig {
    /// Infrastructure router: 5 GHz, 160 MHz, 2 streams, 500 mW, 8 dBi
    /// backhaul and 5 dBi access antennas.
    pub fn mesh_router() -> Self {
        Self {
            band: Band::Ghz5,
            center_frequency_hz: 5.5e9,
            channel_width_mhz: ChannelWidth::Mhz160,
            tx_power_dbm: 27.0,
            antenna_gain_dbi: 5.0,
            backhaul_gain_dbi: Some(8.0),
            spatial_streams: 2,
            guard_interval_us: GuardInterval::Us0_8,
            noise_figure_db: 7.0,
            max_mcs: MAX_MCS_INDEX,
        }
    }

    /// Handset: 15 dBm, 0 dBi, 20 MHz, 2 streams.
    pub fn phone() -> Self {
        Self {
            band: Band::Ghz5,
            center_frequency_hz: 5.5e9,
            channel_width_mhz: ChannelWidth::Mhz20,
            tx_power_dbm: 15.0,
            antenna_gain_dbi: 0.0,
            backhaul_gain_dbi: None,
            spatial_streams: 2,
            guard_interval_us: GuardInterval::Us0_8,
            noise_figure_db: 5.0,
            max_mcs: MAX_MCS_INDEX,
        }
    }

    pub fn backhaul_gain(&self) -> f64 {
        self.backhaul_gain_dbi.unwrap_or(self.antenna_gain_dbi)
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT_M_S / self.center_frequency_hz
    }
}

pub fn fspl_db(distance_m: f64, frequency_hz: f64) -> Result<f64> {
    if !(distance_m > 0.0) {
        return Err(Error::NonpositiveDistance(distance_m));
    }
    if !(frequency_hz > 0.0) {
        return Err(Error::UnsupportedParams(format!("frequency {frequency_hz} Hz")));
    }
    Ok(20.0 * distance_m.log10() + 20.0 * frequency_hz.log10() - 147.55)
}

/// Distance at which the sea-surface reflection starts to dominate,
/// `4 h_tx h_rx / λ`.
pub fn breakpoint_distance_m(frequency_hz: f64, h_tx: f64, h_rx: f64) -> f64 {
    4.0 * h_tx * h_rx * frequency_hz / SPEED_OF_LIGHT_M_S
}

fn far_branch_raw_db(distance_m: f64, h_tx: f64, h_rx: f64) -> f64 {
    40.0 * distance_m.log10() - 20.0 * (h_tx * h_rx).log10()
}

/// Piecewise two-ray loss. Beyond the breakpoint the 40 dB/decade branch is
/// shifted so both branches agree at the breakpoint.
pub fn two_ray_loss_db(distance_m: f64, frequency_hz: f64, h_tx: f64, h_rx: f64) -> Result<f64> {
    let valid = |v: f64| v > 0.0 && v.is_finite();
    if !(valid(distance_m) && valid(frequency_hz) && valid(h_tx) && valid(h_rx)) {
        return Err(Error::InvalidGeometry(format!(
            "d={distance_m} m, f={frequency_hz} Hz, h_tx={h_tx} m, h_rx={h_rx} m"
        )));
    }
    let d_b = breakpoint_distance_m(frequency_hz, h_tx, h_rx);
    if distance_m <= d_b {
        return fspl_db(distance_m, frequency_hz);
    }
    let offset = fspl_db(d_b, frequency_hz)? - far_branch_raw_db(d_b, h_tx, h_rx);
    Ok(far_branch_raw_db(distance_m, h_tx, h_rx) + offset)
}

/// 4/3-earth radio horizon between two antenna heights, in km.
pub fn radio_horizon_km(h1: f64, h2: f64) -> f64 {
    3.57 * (h1.max(0.0).sqrt() + h2.max(0.0).sqrt())
}

pub fn noise_floor_dbm(width_mhz: f64, noise_figure_db: f64) -> f64 {
    -174.0 + 10.0 * (width_mhz * 1e6).log10() + noise_figure_db
}

pub fn phy_rate_mbps(
    mcs: &McsEntry,
    width: ChannelWidth,
    spatial_streams: u8,
    gi: GuardInterval,
) -> Result<f64> {
    if spatial_streams == 0 || spatial_streams > 8 {
        return Err(Error::UnsupportedParams(format!("{spatial_streams} spatial streams")));
    }
    let bits_per_symbol = f64::from(spatial_streams)
        * f64::from(width.data_subcarriers())
        * mcs.spectral_efficiency();
    // bits per microsecond is Mbps
    Ok(bits_per_symbol / (HE_SYMBOL_US + gi.micros()))
}

/// Highest MCS not above `max_mcs` whose spectral efficiency fits under
/// `log2(1 + snr / Γ)` with the default gap.
pub fn select_mcs(snr_db: f64, max_mcs: u8) -> Option<McsEntry> {
    select_mcs_with_gap(snr_db, max_mcs, default_shannon_gap_db())
}

pub fn select_mcs_with_gap(snr_db: f64, max_mcs: u8, gap_db: f64) -> Option<McsEntry> {
    let snr_linear = 10f64.powf(snr_db / 10.0);
    let gap_linear = 10f64.powf(gap_db / 10.0);
    let capacity = (1.0 + snr_linear / gap_linear).log2();
    MCS_TABLE
        .iter()
        .take_while(|m| m.index <= max_mcs)
        .filter(|m| m.spectral_efficiency() <= capacity)
        .last()
        .copied()
}

/// One end of a radio link, with the gain that applies in this direction.
#[derive(Debug, Clone, Copy)]
pub struct Endpoint<'a> {
    pub position: EnuPoint,
    pub height_m: f64,
    pub radio: &'a RadioConfig,
    pub gain_dbi: f64,
}

/// Result of evaluating one direction of a link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub distance_m: f64,
    pub frequency_hz: f64,
    pub tx_power_dbm: f64,
    pub tx_gain_dbi: f64,
    pub rx_gain_dbi: f64,
    pub path_loss_db: f64,
    pub extra_loss_db: f64,
    pub rx_power_dbm: f64,
    pub channel_width_mhz: ChannelWidth,
    pub spatial_streams: u8,
    pub noise_floor_dbm: f64,
    pub snr_db: f64,
    pub beyond_horizon: bool,
    pub mcs: Option<u8>,
    pub phy_rate_mbps: f64,
    pub mac_rate_mbps: f64,
}

impl LinkBudget {
    pub fn is_feasible(&self) -> bool {
        self.mcs.is_some()
    }
}

/// Evaluates the link from `tx` to `rx`. Both radios must share a band; the
/// link runs at the narrower channel width and the smaller stream count and
/// MCS cap of the two. The receiver's noise figure sets the noise floor.
pub fn link_budget(tx: &Endpoint<'_>, rx: &Endpoint<'_>, env: &Environment) -> Result<LinkBudget> {
    if tx.radio.band != rx.radio.band {
        return Err(Error::BandMismatch {
            tx: tx.radio.band.to_string(),
            rx: rx.radio.band.to_string(),
        });
    }
    let frequency_hz = tx.radio.center_frequency_hz;
    let distance_m =
        distance_3d(tx.position, tx.height_m, rx.position, rx.height_m).max(MIN_LINK_DISTANCE_M);
    let path_loss_db = two_ray_loss_db(distance_m, frequency_hz, tx.height_m, rx.height_m)?;
    let horizon_m = radio_horizon_km(tx.height_m, rx.height_m) * 1000.0;
    let beyond_horizon = tx.position.distance(rx.position) > horizon_m;

    let rx_power_dbm =
        tx.radio.tx_power_dbm + tx.gain_dbi + rx.gain_dbi - path_loss_db - env.extra_loss_db;
    let width = tx.radio.channel_width_mhz.min(rx.radio.channel_width_mhz);
    let spatial_streams = tx.radio.spatial_streams.min(rx.radio.spatial_streams);
    let noise = noise_floor_dbm(f64::from(width.mhz()), rx.radio.noise_figure_db);
    let snr_db = rx_power_dbm - noise;

    let max_mcs = tx.radio.max_mcs.min(rx.radio.max_mcs);
    let selected = if beyond_horizon {
        None
    } else {
        select_mcs_with_gap(snr_db, max_mcs, env.shannon_gap_db)
    };
    let phy_rate_mbps = match &selected {
        Some(m) => phy_rate_mbps(m, width, spatial_streams, tx.radio.guard_interval_us)?,
        None => 0.0,
    };
    Ok(LinkBudget {
        distance_m,
        frequency_hz,
        tx_power_dbm: tx.radio.tx_power_dbm,
        tx_gain_dbi: tx.gain_dbi,
        rx_gain_dbi: rx.gain_dbi,
        path_loss_db,
        extra_loss_db: env.extra_loss_db,
        rx_power_dbm,
        channel_width_mhz: width,
        spatial_streams,
        noise_floor_dbm: noise,
        snr_db,
        beyond_horizon,
        mcs: selected.map(|m| m.index),
        phy_rate_mbps,
        mac_rate_mbps: phy_rate_mbps * env.mac_efficiency,
    })
}
