//! Independent certification of an allocation against the problem's
//! constraints:
//!
//! - C1: `0 <= p_jk <= Pmax` for every user
//! - C2: every cell's throughput fits its backhaul, `R_j <= C_j`
//! - C3: every user meets the QoS floor, `r_jk >= Rt`
//! - C4: `0 <= beta <= 1`
//!
//! Everything is recomputed directly from `(beta, P, channels, config)` with
//! plain `log2` arithmetic, deliberately not sharing the solvers' cached
//! tables, so that solver and checker agreeing is meaningful.

use crate::channel_model::{ChannelRealization, ScenarioConfig};
use crate::ee_model::PowerMatrix;

/// Worst violation found per constraint family, in the constraint's own
/// units (watts for C1, bits/s/Hz for C2 and C3, dimensionless for C4).
/// Zero means satisfied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintReport {
    pub power_cap: f64,
    pub backhaul: f64,
    pub qos: f64,
    pub beta_domain: f64,
}

impl ConstraintReport {
    pub fn max_violation(&self) -> f64 {
        self.power_cap
            .max(self.backhaul)
            .max(self.qos)
            .max(self.beta_domain)
    }

    pub fn satisfied(&self, tol: f64) -> bool {
        self.max_violation() <= tol
    }
}

/// Re-verify C1-C4 at `(beta, powers)`.
pub fn check_constraints(
    cfg: &ScenarioConfig,
    chan: &ChannelRealization,
    beta: f64,
    powers: &PowerMatrix,
) -> ConstraintReport {
    let k_users = cfg.users_per_cell as f64;
    let array_gain =
        (cfg.antenna_array - cfg.beamforming_group + 1) as f64 / cfg.beamforming_group as f64;

    let mut power_cap = 0.0f64;
    let mut backhaul = 0.0f64;
    let mut qos = 0.0f64;

    for j in 0..powers.cells() {
        let mut throughput = 0.0;
        for k in 0..powers.users() {
            let p = powers.get(j, k);
            power_cap = power_cap.max(p - cfg.max_user_power).max(-p);

            let sinr = p * chan.access_gain[j][k] / (cfg.noise_power + chan.interference[j][k]);
            let rate = (1.0 - beta) / k_users * (1.0 + sinr).log2();
            throughput += rate;
            qos = qos.max(cfg.qos_rate - rate);
        }
        let gamma = cfg.per_antenna_power * chan.backhaul_gain[j] / cfg.noise_power;
        let capacity = beta * (1.0 + array_gain * gamma).log2();
        backhaul = backhaul.max(throughput - capacity);
    }

    ConstraintReport {
        power_cap: power_cap.max(0.0),
        backhaul: backhaul.max(0.0),
        qos: qos.max(0.0),
        beta_domain: (-beta).max(beta - 1.0).max(0.0),
    }
}
