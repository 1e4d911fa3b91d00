//! Backhaul bandwidth allocation.
//!
//! The EE objective is monotonically decreasing in `beta` (every access rate
//! scales with `1 - beta`), so at a fixed power matrix the optimal split is
//! the *smallest* feasible one. Cell `j` needs at least
//!
//! ```text
//! phi_j = S_j / (K*T_j + S_j)
//! ```
//!
//! where `S_j = sum_k log2(1 + SINR_jk)` and `T_j` is the backhaul log term;
//! at `beta = phi_j` the cell's throughput exactly equals its backhaul
//! capacity. The chosen `beta = max_j phi_j` therefore satisfies every
//! backhaul constraint, with equality at the binding cell.
//!
//! QoS admissibility puts a ceiling on the rate floor: the instance supports
//! `Rt` only if `Rt <= min_{j,k} T_j * l_jk / (K*T_j + S_j)` with
//! `l_jk = log2(1 + SINR_jk)`.

use std::f64::consts::LN_2;

use crate::channel_model::{ChannelRealization, ScenarioConfig};
use crate::ee_model::{backhaul_log_term, PowerMatrix};

/// Result of [`beta_optimal`]: the smallest bandwidth fraction supporting
/// every cell's throughput at the given powers.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaSolution {
    /// `max_j` of the per-cell lower bounds, in `[0, 1)`.
    pub beta: f64,
    /// The cell whose backhaul constraint binds (smallest index on ties).
    pub binding_cell: usize,
    /// Per-cell lower bounds on the fraction, length J.
    pub cell_lower_bounds: Vec<f64>,
    /// Whether `beta` also leaves every user at or above the QoS rate floor.
    pub feasible: bool,
}

/// Result of [`qos_feasibility`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QosFeasibility {
    /// The largest rate floor this power matrix can support, bits/s/Hz.
    pub rate_ceiling: f64,
    /// `Rt <= rate_ceiling`.
    pub feasible: bool,
}

/// Compensated (Kahan) summation; keeps the binding-cell equality tight.
fn kahan_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let y = v - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

/// `log2(1 + SINR)` of every user in cell `j` at the given powers.
fn access_log_terms(
    powers: &[f64],
    chan: &ChannelRealization,
    cfg: &ScenarioConfig,
    j: usize,
) -> Vec<f64> {
    powers
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            debug_assert!(p >= 0.0);
            (chan.eff_gain(cfg, j, k) * p).ln_1p() / LN_2
        })
        .collect()
}

/// The smallest bandwidth fraction that lets cell `j`'s backhaul carry its
/// access throughput at the given powers. Always in `[0, 1)`.
pub fn beta_lower_bound(
    powers: &[f64],
    chan: &ChannelRealization,
    cfg: &ScenarioConfig,
    j: usize,
    backhaul_snr: f64,
) -> f64 {
    let access_sum = kahan_sum(access_log_terms(powers, chan, cfg, j).into_iter());
    let backhaul = cfg.users_per_cell as f64 * backhaul_log_term(cfg, backhaul_snr);
    access_sum / (backhaul + access_sum)
}

/// Choose `beta = max_j phi_j`, the smallest fraction feasible for all cells
/// at `powers`. Ties bind to the smallest cell index. The `feasible` flag
/// reports whether this `beta` also keeps every user's rate at or above the
/// configured QoS floor (a user with zero power supports only `Rt = 0`).
pub fn beta_optimal(
    powers: &PowerMatrix,
    chan: &ChannelRealization,
    cfg: &ScenarioConfig,
    backhaul_snrs: &[f64],
) -> BetaSolution {
    debug_assert_eq!(powers.cells(), cfg.num_small_cells);
    debug_assert_eq!(backhaul_snrs.len(), cfg.num_small_cells);

    let bounds: Vec<f64> = (0..powers.cells())
        .map(|j| beta_lower_bound(powers.row(j), chan, cfg, j, backhaul_snrs[j]))
        .collect();

    let mut binding = 0;
    for (j, &phi) in bounds.iter().enumerate() {
        if phi > bounds[binding] {
            binding = j;
        }
    }
    let beta = bounds[binding];

    // C3 compatibility at this beta: (1-beta)*l/K >= Rt for every user.
    let weight = (1.0 - beta) / cfg.users_per_cell as f64;
    let tol = 1e-12 * cfg.qos_rate.max(1.0);
    let feasible = (0..powers.cells()).all(|j| {
        access_log_terms(powers.row(j), chan, cfg, j)
            .iter()
            .all(|&l| weight * l >= cfg.qos_rate - tol)
    });

    BetaSolution {
        beta,
        binding_cell: binding,
        cell_lower_bounds: bounds,
        feasible,
    }
}

/// The admissibility gate on the QoS floor: computes the largest supportable
/// per-user rate `min_{j,k} T_j * l_jk / (K*T_j + S_j)` and compares it with
/// the configured `Rt`.
pub fn qos_feasibility(
    powers: &PowerMatrix,
    chan: &ChannelRealization,
    cfg: &ScenarioConfig,
    backhaul_snrs: &[f64],
) -> QosFeasibility {
    let mut ceiling = f64::INFINITY;
    for (j, &gamma) in backhaul_snrs.iter().enumerate() {
        let terms = access_log_terms(powers.row(j), chan, cfg, j);
        let access_sum = kahan_sum(terms.iter().copied());
        let backhaul = backhaul_log_term(cfg, gamma);
        let denom = cfg.users_per_cell as f64 * backhaul + access_sum;
        for &l in &terms {
            ceiling = ceiling.min(backhaul * l / denom);
        }
    }
    QosFeasibility {
        rate_ceiling: ceiling,
        feasible: cfg.qos_rate <= ceiling,
    }
}
