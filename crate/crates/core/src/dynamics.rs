//! Buoy drift, solar harvest and battery state.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::geo::{clamp_to_disk, EnuPoint};
use crate::model::{AnchorSpec, EnergyProfile, Environment};

pub const SECONDS_PER_DAY: f64 = 86_400.0;

/// Slack on threshold comparisons so rounding in the Wh bookkeeping does
/// not delay a switch by a whole step.
pub const CHARGE_EPS_WH: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuoyState {
    pub position: EnuPoint,
}

/// Constant current plus a Gaussian random walk, held inside the chain disk.
pub fn step_buoy<R: Rng + ?Sized>(
    state: BuoyState,
    anchor: &AnchorSpec,
    dt_s: f64,
    rng: &mut R,
) -> BuoyState {
    let g1: f64 = rng.sample(StandardNormal);
    let g2: f64 = rng.sample(StandardNormal);
    let spread = anchor.drift_sigma * dt_s.sqrt();
    let candidate = state.position + anchor.current_m_s * dt_s + EnuPoint::new(g1, g2) * spread;
    BuoyState {
        position: clamp_to_disk(candidate, anchor.anchor_point, anchor.chain_radius_m),
    }
}

/// Independent generator for one node, derived from the run seed and the
/// node id so results do not depend on node order.
pub fn node_rng(seed: u64, node_id: &str) -> ChaCha8Rng {
    // FNV-1a over the id; stable across platforms and releases
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in node_id.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(h);
    rng
}

/// Clear-sky fraction times weather: a half sine between sunrise and sunset.
pub fn solar_factor(time_of_day_s: f64, env: &Environment) -> f64 {
    let t = time_of_day_s.rem_euclid(SECONDS_PER_DAY);
    if t < env.sunrise_s || t > env.sunset_s {
        return 0.0;
    }
    let phase = (t - env.sunrise_s) / (env.sunset_s - env.sunrise_s);
    (env.weather_factor * (std::f64::consts::PI * phase).sin()).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyState {
    pub charge_wh: f64,
    pub operational: bool,
}

impl EnergyState {
    pub fn initial(profile: &EnergyProfile) -> Self {
        let charge_wh = profile.initial_charge();
        Self { charge_wh, operational: charge_wh > profile.off_threshold_wh }
    }
}

/// Advances one battery by `dt_s`. The load only draws while the node was
/// operational at the start of the step; the flag then follows the
/// off/on hysteresis on the new charge.
pub fn step_energy(state: EnergyState, profile: &EnergyProfile, factor: f64, dt_s: f64) -> EnergyState {
    let harvest_w = profile.panel_max_w * factor;
    let load_w = if state.operational { profile.load_w * profile.duty_cycle } else { 0.0 };
    let charge_wh = (state.charge_wh + (harvest_w - load_w) * dt_s / 3600.0)
        .clamp(0.0, profile.battery_capacity_wh);
    let operational = if state.operational {
        charge_wh > profile.off_threshold_wh + CHARGE_EPS_WH
    } else {
        charge_wh >= profile.on_threshold_wh - CHARGE_EPS_WH
    };
    EnergyState { charge_wh, operational }
}
