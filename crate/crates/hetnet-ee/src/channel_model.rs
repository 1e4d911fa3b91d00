//! Network geometry and radio channel generation.
//!
//! A scenario is a single macro base station at the origin feeding `J` small
//! cells over a beamformed wireless backhaul, with `K` users per small cell
//! served over OFDMA access links. This module generates random topologies
//! (uniform placement with minimum-distance rejection sampling), realizes
//! channel gains (path loss x lognormal shadowing x Rayleigh fading), and
//! computes the two link-quality figures everything else is built on:
//!
//! - backhaul SNR of cell `j`:  `P0 * G_j / sigma^2`
//! - access SINR of user `(j,k)` at power `p`:  `p * g_jk / (sigma^2 + I_jk)`
//!
//! where the macro-induced interference is `I_jk = P0 * G_jk`.
//!
//! All internal math is in watts; dBm appears only in the JSON config file
//! schema ([`ScenarioConfigFile`]) and is converted at the boundary.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Normal};
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::Error;

/// Attempt budget for minimum-distance rejection sampling.
const MAX_PLACEMENT_ATTEMPTS: usize = 100_000;

/// Links shorter than this are evaluated at this distance instead, keeping
/// path-loss gains finite when a user lands on top of its base station.
const MIN_LINK_DISTANCE_M: f64 = 1.0;

/// Convert a dBm figure to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

/// Convert watts to dBm.
pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * (watts / 1e-3).log10()
}

/// All scalar parameters of a scenario. Powers are in watts, distances in
/// meters, rates in bits/s/Hz; see [`ScenarioConfigFile`] for the on-disk
/// (dBm) form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Number of small cells J deployed in the macrocell.
    pub num_small_cells: usize,
    /// Number of users K served by each small cell.
    pub users_per_cell: usize,
    /// Macro BS antenna array size N.
    pub antenna_array: usize,
    /// Beamforming group size B (N > B >= J).
    pub beamforming_group: usize,
    /// Total macro transmit power split across beamforming groups, watts.
    pub macro_tx_power_total: f64,
    /// Per-beam macro transmit power P0 toward one small cell, watts.
    pub per_antenna_power: f64,
    /// Circuit power Pc consumed per user link regardless of transmission, watts.
    pub circuit_power: f64,
    /// Maximum small-cell transmit power Pmax toward one user, watts.
    pub max_user_power: f64,
    /// Per-user QoS rate floor Rt, bits/s/Hz.
    pub qos_rate: f64,
    /// AWGN power sigma^2, watts.
    pub noise_power: f64,
    /// Macrocell coverage radius, meters.
    pub macro_radius: f64,
    /// Small-cell coverage radius, meters.
    pub small_cell_radius: f64,
    /// Minimum distance between the macro BS and any small-cell BS, meters.
    pub min_macro_distance: f64,
    /// Minimum distance between small-cell BSs, meters.
    pub min_intercell_distance: f64,
    /// Lognormal shadowing standard deviation, dB.
    pub shadowing_stddev: f64,
    /// Seed for the scenario's random streams.
    pub rng_seed: u64,
}

impl Default for ScenarioConfig {
    /// The baseline urban deployment used throughout the test suites:
    /// 5 small cells x 5 users, N=100/B=20, 33 dBm macro power, 20 dBm
    /// power cap, 30 dBm circuit power, -104 dBm noise, 500 m / 10 m radii,
    /// 50 m / 40 m spacing, 10 dB shadowing, Rt = 0.01 bits/s/Hz.
    fn default() -> Self {
        let macro_total = dbm_to_watts(33.0);
        ScenarioConfig {
            num_small_cells: 5,
            users_per_cell: 5,
            antenna_array: 100,
            beamforming_group: 20,
            macro_tx_power_total: macro_total,
            per_antenna_power: macro_total / 20.0,
            circuit_power: 1.0,
            max_user_power: dbm_to_watts(20.0),
            qos_rate: 0.01,
            noise_power: dbm_to_watts(-104.0),
            macro_radius: 500.0,
            small_cell_radius: 10.0,
            min_macro_distance: 50.0,
            min_intercell_distance: 40.0,
            shadowing_stddev: 10.0,
            rng_seed: 1,
        }
    }
}

impl ScenarioConfig {
    /// Check every invariant the rest of the crate relies on.
    pub fn validate(&self) -> Result<(), Error> {
        let err = |msg: String| Err(Error::Config(msg));
        if self.num_small_cells < 1 {
            return err("num_small_cells must be >= 1".into());
        }
        if self.users_per_cell < 1 {
            return err("users_per_cell must be >= 1".into());
        }
        if self.beamforming_group < self.num_small_cells {
            return err(format!(
                "beamforming_group ({}) must be >= num_small_cells ({})",
                self.beamforming_group, self.num_small_cells
            ));
        }
        if self.antenna_array <= self.beamforming_group {
            return err(format!(
                "antenna_array ({}) must be > beamforming_group ({})",
                self.antenna_array, self.beamforming_group
            ));
        }
        for (name, v) in [
            ("macro_tx_power_total", self.macro_tx_power_total),
            ("per_antenna_power", self.per_antenna_power),
            ("circuit_power", self.circuit_power),
            ("max_user_power", self.max_user_power),
            ("noise_power", self.noise_power),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return err(format!("{name} must be a positive finite power, got {v}"));
            }
        }
        if !self.qos_rate.is_finite() || self.qos_rate < 0.0 {
            return err(format!("qos_rate must be >= 0, got {}", self.qos_rate));
        }
        for (name, v) in [
            ("macro_radius", self.macro_radius),
            ("small_cell_radius", self.small_cell_radius),
            ("min_macro_distance", self.min_macro_distance),
            ("min_intercell_distance", self.min_intercell_distance),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return err(format!("{name} must be positive, got {v}"));
            }
        }
        if !self.shadowing_stddev.is_finite() || self.shadowing_stddev < 0.0 {
            return err(format!(
                "shadowing_stddev must be >= 0 dB, got {}",
                self.shadowing_stddev
            ));
        }
        if self.min_macro_distance + self.small_cell_radius >= self.macro_radius {
            return err(format!(
                "no room for small cells: min_macro_distance ({}) + small_cell_radius ({}) \
                 must be < macro_radius ({})",
                self.min_macro_distance, self.small_cell_radius, self.macro_radius
            ));
        }
        Ok(())
    }

    /// Load a validated config from a JSON file (powers in dBm on disk).
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self, Error> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ScenarioConfigFile =
            serde_json::from_str(&text).map_err(|e| Error::parse(path, e))?;
        let cfg = file.into_config();
        cfg.validate()?;
        Ok(cfg)
    }
}

/// On-disk form of [`ScenarioConfig`]. Field names match the in-memory
/// struct; every power-typed field (`macro_tx_power_total`,
/// `per_antenna_power`, `circuit_power`, `max_user_power`, `noise_power`)
/// is expressed in dBm. `per_antenna_power` may be omitted, in which case
/// it defaults to the macro total split evenly across beamforming groups.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfigFile {
    pub num_small_cells: usize,
    pub users_per_cell: usize,
    pub antenna_array: usize,
    pub beamforming_group: usize,
    pub macro_tx_power_total: f64,
    #[serde(default)]
    pub per_antenna_power: Option<f64>,
    pub circuit_power: f64,
    pub max_user_power: f64,
    pub qos_rate: f64,
    pub noise_power: f64,
    pub macro_radius: f64,
    pub small_cell_radius: f64,
    pub min_macro_distance: f64,
    pub min_intercell_distance: f64,
    pub shadowing_stddev: f64,
    pub rng_seed: u64,
}

impl ScenarioConfigFile {
    /// Convert dBm boundary values to the internal all-watts form.
    pub fn into_config(self) -> ScenarioConfig {
        let macro_total = dbm_to_watts(self.macro_tx_power_total);
        let per_antenna = self
            .per_antenna_power
            .map(dbm_to_watts)
            .unwrap_or(macro_total / self.beamforming_group as f64);
        ScenarioConfig {
            num_small_cells: self.num_small_cells,
            users_per_cell: self.users_per_cell,
            antenna_array: self.antenna_array,
            beamforming_group: self.beamforming_group,
            macro_tx_power_total: macro_total,
            per_antenna_power: per_antenna,
            circuit_power: dbm_to_watts(self.circuit_power),
            max_user_power: dbm_to_watts(self.max_user_power),
            qos_rate: self.qos_rate,
            noise_power: dbm_to_watts(self.noise_power),
            macro_radius: self.macro_radius,
            small_cell_radius: self.small_cell_radius,
            min_macro_distance: self.min_macro_distance,
            min_intercell_distance: self.min_intercell_distance,
            shadowing_stddev: self.shadowing_stddev,
            rng_seed: self.rng_seed,
        }
    }
}

/// A 2-D point in meters.
pub type Point = [f64; 2];

fn distance(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Base-station and user positions for one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    /// Macro BS position (always the origin as generated).
    pub macro_position: Point,
    /// Small-cell BS positions, length J.
    pub small_cell_positions: Vec<Point>,
    /// User positions, J x K.
    pub user_positions: Vec<Vec<Point>>,
}

impl Topology {
    /// Verify every placement invariant against `cfg`.
    pub fn check_invariants(&self, cfg: &ScenarioConfig) -> Result<(), String> {
        if self.small_cell_positions.len() != cfg.num_small_cells {
            return Err("wrong number of small cells".into());
        }
        for (j, &cell) in self.small_cell_positions.iter().enumerate() {
            let d_macro = distance(self.macro_position, cell);
            if d_macro < cfg.min_macro_distance {
                return Err(format!("cell {j} too close to macro BS ({d_macro:.2} m)"));
            }
            if d_macro > cfg.macro_radius {
                return Err(format!("cell {j} outside macro coverage ({d_macro:.2} m)"));
            }
            for (i, &other) in self.small_cell_positions[..j].iter().enumerate() {
                let d = distance(cell, other);
                if d < cfg.min_intercell_distance {
                    return Err(format!("cells {i} and {j} too close ({d:.2} m)"));
                }
            }
            for (k, &user) in self.user_positions[j].iter().enumerate() {
                let d_cell = distance(cell, user);
                if d_cell > cfg.small_cell_radius + 1e-9 {
                    return Err(format!(
                        "user ({j},{k}) outside its small cell ({d_cell:.2} m)"
                    ));
                }
                if distance(self.macro_position, user) > cfg.macro_radius + 1e-9 {
                    return Err(format!("user ({j},{k}) outside macro coverage"));
                }
            }
        }
        Ok(())
    }
}

/// Place small cells uniformly in the annulus where they fit (so that their
/// whole coverage disk stays inside the macrocell), rejecting draws that
/// violate the inter-cell spacing, then drop users uniformly in each small
/// cell's disk. Deterministic given `(cfg, rng)` state.
pub fn generate_topology<R: Rng>(cfg: &ScenarioConfig, rng: &mut R) -> Result<Topology, Error> {
    cfg.validate()?;

    let r_min = cfg.min_macro_distance;
    let r_max = cfg.macro_radius - cfg.small_cell_radius;
    let mut cells: Vec<Point> = Vec::with_capacity(cfg.num_small_cells);
    let mut attempts = 0usize;

    while cells.len() < cfg.num_small_cells {
        if attempts >= MAX_PLACEMENT_ATTEMPTS {
            return Err(Error::PlacementFailure { attempts });
        }
        attempts += 1;

        // Uniform over the annulus area.
        let u: f64 = rng.gen();
        let r = (u * (r_max * r_max - r_min * r_min) + r_min * r_min).sqrt();
        let theta = rng.gen::<f64>() * std::f64::consts::TAU;
        let candidate = [r * theta.cos(), r * theta.sin()];

        let spaced = cells
            .iter()
            .all(|&c| distance(c, candidate) >= cfg.min_intercell_distance);
        if spaced {
            cells.push(candidate);
        }
    }

    let mut users = Vec::with_capacity(cfg.num_small_cells);
    for &cell in &cells {
        let mut cell_users = Vec::with_capacity(cfg.users_per_cell);
        for _ in 0..cfg.users_per_cell {
            let r = cfg.small_cell_radius * rng.gen::<f64>().sqrt();
            let theta = rng.gen::<f64>() * std::f64::consts::TAU;
            cell_users.push([cell[0] + r * theta.cos(), cell[1] + r * theta.sin()]);
        }
        users.push(cell_users);
    }

    Ok(Topology {
        macro_position: [0.0, 0.0],
        small_cell_positions: cells,
        user_positions: users,
    })
}

/// Log-distance path-loss model, `PL(dB) = fixed_db + slope_db * log10(d/km)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathlossModel {
    pub fixed_db: f64,
    pub slope_db: f64,
}

impl PathlossModel {
    /// Urban macro-to-user model: 128.1 + 37.6 log10(d/km).
    pub const MACRO: PathlossModel = PathlossModel {
        fixed_db: 128.1,
        slope_db: 37.6,
    };

    /// Small-cell-to-user model: 140.7 + 36.7 log10(d/km).
    pub const SMALL_CELL: PathlossModel = PathlossModel {
        fixed_db: 140.7,
        slope_db: 36.7,
    };

    /// Line-of-sight macro model, used for the beamformed BS-to-BS
    /// backhaul: 103.4 + 24.2 log10(d/km).
    pub const BACKHAUL_LOS: PathlossModel = PathlossModel {
        fixed_db: 103.4,
        slope_db: 24.2,
    };

    /// Linear power gain at distance `d` meters (clamped to 1 m).
    pub fn gain(&self, d_meters: f64) -> f64 {
        let d_km = d_meters.max(MIN_LINK_DISTANCE_M) / 1000.0;
        let pl_db = self.fixed_db + self.slope_db * d_km.log10();
        10f64.powf(-pl_db / 10.0)
    }
}

/// The fading composition applied on top of path loss. Coefficients are
/// overridable; `rayleigh_fading: false` is a test switch that drops the
/// fast-fading factor (shadowing is dropped by setting the config's
/// `shadowing_stddev` to zero).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    pub macro_pathloss: PathlossModel,
    pub small_cell_pathloss: PathlossModel,
    pub backhaul_pathloss: PathlossModel,
    pub rayleigh_fading: bool,
}

impl Default for ChannelModel {
    fn default() -> Self {
        ChannelModel {
            macro_pathloss: PathlossModel::MACRO,
            small_cell_pathloss: PathlossModel::SMALL_CELL,
            backhaul_pathloss: PathlossModel::BACKHAUL_LOS,
            rayleigh_fading: true,
        }
    }
}

/// Per-trial channel gains (linear, dimensionless) and macro interference
/// powers (watts). Invariant: `interference[j][k] = P0 * macro_user_gain[j][k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    /// Access gains g_jk between small-cell BS j and its user k.
    pub access_gain: Vec<Vec<f64>>,
    /// Gains G_jk between the macro BS and user (j,k).
    pub macro_user_gain: Vec<Vec<f64>>,
    /// Gains G_j between the macro BS and small-cell BS j (backhaul).
    pub backhaul_gain: Vec<f64>,
    /// Macro-induced interference power at user (j,k), watts.
    pub interference: Vec<Vec<f64>>,
}

impl ChannelRealization {
    /// Effective per-watt access gain `a_jk = g_jk / (sigma^2 + I_jk)`.
    pub fn eff_gain(&self, cfg: &ScenarioConfig, j: usize, k: usize) -> f64 {
        self.access_gain[j][k] / (cfg.noise_power + self.interference[j][k])
    }
}

impl ChannelModel {
    /// Realize channel gains for a topology. User links (access and macro
    /// interference) get path loss x shadowing x Rayleigh fading; the
    /// beamformed backhaul gets path loss x shadowing only.
    pub fn realize<R: Rng>(
        &self,
        cfg: &ScenarioConfig,
        topo: &Topology,
        rng: &mut R,
    ) -> ChannelRealization {
        let shadow = Normal::new(0.0, cfg.shadowing_stddev)
            .expect("shadowing stddev validated non-negative");
        let draw_shadow = |rng: &mut R| 10f64.powf(shadow.sample(rng) / 10.0);
        let draw_fade = |rng: &mut R| {
            if self.rayleigh_fading {
                let f: f64 = Exp1.sample(rng);
                f.max(f64::MIN_POSITIVE)
            } else {
                1.0
            }
        };

        let j_cells = cfg.num_small_cells;
        let k_users = cfg.users_per_cell;
        let mut access = vec![vec![0.0; k_users]; j_cells];
        let mut macro_user = vec![vec![0.0; k_users]; j_cells];
        let mut backhaul = vec![0.0; j_cells];
        let mut interference = vec![vec![0.0; k_users]; j_cells];

        for j in 0..j_cells {
            let cell = topo.small_cell_positions[j];
            let d_backhaul = distance(topo.macro_position, cell);
            backhaul[j] = self.backhaul_pathloss.gain(d_backhaul) * draw_shadow(rng);

            for k in 0..k_users {
                let user = topo.user_positions[j][k];
                let d_access = distance(cell, user);
                let d_macro = distance(topo.macro_position, user);
                access[j][k] =
                    self.small_cell_pathloss.gain(d_access) * draw_shadow(rng) * draw_fade(rng);
                macro_user[j][k] =
                    self.macro_pathloss.gain(d_macro) * draw_shadow(rng) * draw_fade(rng);
                interference[j][k] = cfg.per_antenna_power * macro_user[j][k];
            }
        }

        ChannelRealization {
            access_gain: access,
            macro_user_gain: macro_user,
            backhaul_gain: backhaul,
            interference,
        }
    }
}

/// Realize channels with the default 3GPP-style model.
pub fn realize_channels<R: Rng>(
    cfg: &ScenarioConfig,
    topo: &Topology,
    rng: &mut R,
) -> ChannelRealization {
    ChannelModel::default().realize(cfg, topo, rng)
}

/// Backhaul SNR of cell `j`: `P0 * G_j / sigma^2`.
pub fn backhaul_snr(cfg: &ScenarioConfig, chan: &ChannelRealization, j: usize) -> f64 {
    cfg.per_antenna_power * chan.backhaul_gain[j] / cfg.noise_power
}

/// Backhaul SNRs of all cells.
pub fn backhaul_snrs(cfg: &ScenarioConfig, chan: &ChannelRealization) -> Vec<f64> {
    (0..chan.backhaul_gain.len())
        .map(|j| backhaul_snr(cfg, chan, j))
        .collect()
}

/// Access SINR of user `(j,k)` at transmit power `p` watts:
/// `p * g_jk / (sigma^2 + I_jk)`.
pub fn access_sinr(
    cfg: &ScenarioConfig,
    chan: &ChannelRealization,
    p: f64,
    j: usize,
    k: usize,
) -> f64 {
    debug_assert!(p >= 0.0);
    p * chan.access_gain[j][k] / (cfg.noise_power + chan.interference[j][k])
}
